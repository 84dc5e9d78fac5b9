//! Executes an experiment, writes its CSV and manifest.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use tamed_sde::estimators::{
    fit_log_log, fit_rate, increment_moment, moment_sup, strong_error, MonteCarlo, RateFit,
};
use tamed_sde::noise::{generate_increments, initial_value_rng, NoisePlan};
use tamed_sde::parallel::{with_workers, ExecPolicy};
use tamed_sde::{simulate, SchemeSpec};

use crate::config::{Command, ExperimentConfig};

/// Floats in CSV output: 17 significant digits, enough to round-trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_alpha(spec: &SchemeSpec) -> String {
    spec.alpha().map(fmt_f64).unwrap_or_default()
}

/// Header rows, one per command.
pub fn csv_header(command: Command, dim_state: usize) -> Vec<String> {
    let fixed: &[&str] = match command {
        Command::Convergence => &["n", "error", "std_error", "p", "M", "scheme", "alpha", "model"],
        Command::Moments => &[
            "n",
            "p",
            "expected_sup",
            "expected_sup_std_error",
            "sup_expected",
            "divergence_fraction",
            "M",
            "scheme",
            "alpha",
            "model",
        ],
        Command::Increments => &[
            "n",
            "fine_n",
            "p",
            "increment_moment",
            "std_error",
            "argmax_t",
            "divergence_fraction",
            "M",
            "scheme",
            "alpha",
            "model",
        ],
        Command::DivergeDemo => &[
            "n",
            "explicit_divergence_fraction",
            "tamed_divergence_fraction",
            "M",
            "alpha",
            "model",
        ],
        Command::Simulate => {
            let mut h = vec!["t".to_string()];
            h.extend((1..=dim_state).map(|i| format!("x{i}")));
            h.push("finite".to_string());
            return h;
        }
    };
    fixed.iter().map(|s| s.to_string()).collect()
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// True iff every requested estimate is valid.
    pub valid: bool,
    /// Human-readable result lines (rate fits, warnings).
    pub summary: Vec<String>,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
}

struct Produced {
    rows: Vec<Vec<String>>,
    valid: bool,
    summary: Vec<String>,
    results: Vec<(String, String)>,
}

fn rate_lines(label: &str, fit: &RateFit) -> (Vec<String>, Vec<(String, String)>) {
    (
        vec![format!(
            "{label}: rate={:.6} slope={:.6} intercept={:.6} r2={:.6}",
            fit.rate(),
            fit.slope,
            fit.intercept,
            fit.r_squared
        )],
        vec![
            (format!("{label}.rate"), fmt_f64(fit.rate())),
            (format!("{label}.slope"), fmt_f64(fit.slope)),
            (format!("{label}.intercept"), fmt_f64(fit.intercept)),
            (format!("{label}.r_squared"), fmt_f64(fit.r_squared)),
        ],
    )
}

fn produce(cfg: &ExperimentConfig) -> Result<Produced> {
    let model = cfg.build_model()?;
    let spec = cfg.scheme_spec();
    let mc = MonteCarlo::new(cfg.paths.value, cfg.master_seed.value, cfg.horizon.value)
        .with_policy(ExecPolicy::Parallel);
    let ns = &cfg.n_values.value;
    let p = cfg.p.value;
    let mut summary = Vec::new();
    let mut results = Vec::new();
    let mut rows = Vec::new();
    let valid;

    match cfg.command {
        Command::Convergence => {
            let table = strong_error(&model, &spec, ns, cfg.fine_n.value, p, &mc)?;
            for (i, n) in ns.iter().enumerate() {
                rows.push(vec![
                    n.to_string(),
                    fmt_f64(table.errors[i]),
                    fmt_f64(table.std_errors[i]),
                    fmt_f64(p),
                    cfg.paths.value.to_string(),
                    spec.label().to_string(),
                    fmt_alpha(&spec),
                    model.name().to_string(),
                ]);
                if !table.valid[i] {
                    summary.push(format!(
                        "invalid estimate at n={}: divergence fraction {}",
                        n, table.divergence_fractions[i]
                    ));
                }
            }
            results.push(("reference".to_string(), table.reference.clone()));
            results.push(("std_error_method".to_string(), "delta".to_string()));
            valid = table.is_valid();
            if valid && ns.len() >= 3 {
                let fit = fit_rate(&table)?;
                let (s, r) = rate_lines("rate_fit", &fit);
                summary.extend(s);
                results.extend(r);
            }
        }
        Command::Moments => {
            let mut all = true;
            for &n in ns {
                let r = moment_sup(&model, &spec, n, p, &mc)?;
                rows.push(vec![
                    n.to_string(),
                    fmt_f64(p),
                    fmt_f64(r.expected_sup),
                    fmt_f64(r.expected_sup_std_error),
                    fmt_f64(r.sup_expected),
                    fmt_f64(r.divergence_fraction),
                    cfg.paths.value.to_string(),
                    spec.label().to_string(),
                    fmt_alpha(&spec),
                    model.name().to_string(),
                ]);
                if !r.is_valid() {
                    summary.push(format!(
                        "invalid moment estimate at n={n}: divergence fraction {}",
                        r.divergence_fraction
                    ));
                    all = false;
                }
            }
            valid = all;
        }
        Command::Increments => {
            let mut all = true;
            let mut estimates = Vec::new();
            for &n in ns {
                let r = increment_moment(&model, &spec, n, cfg.fine_n.value, p, &mc)?;
                rows.push(vec![
                    n.to_string(),
                    cfg.fine_n.value.to_string(),
                    fmt_f64(p),
                    fmt_f64(r.estimate),
                    fmt_f64(r.std_error),
                    fmt_f64(r.argmax_time),
                    fmt_f64(r.divergence_fraction),
                    cfg.paths.value.to_string(),
                    spec.label().to_string(),
                    fmt_alpha(&spec),
                    model.name().to_string(),
                ]);
                if !r.is_valid() {
                    summary.push(format!("invalid increment estimate at n={n}"));
                    all = false;
                }
                estimates.push(r.estimate);
            }
            valid = all;
            if valid {
                let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
                let fit = fit_log_log(&xs, &estimates)?;
                let (s, r) = rate_lines("increment_fit", &fit);
                summary.extend(s);
                results.extend(r);
            }
        }
        Command::DivergeDemo => {
            let tamed = SchemeSpec::tamed_euler(cfg.alpha.value)?;
            let explicit = SchemeSpec::explicit_euler();
            for &n in ns {
                let e = moment_sup(&model, &explicit, n, p, &mc)?;
                let t = moment_sup(&model, &tamed, n, p, &mc)?;
                rows.push(vec![
                    n.to_string(),
                    fmt_f64(e.divergence_fraction),
                    fmt_f64(t.divergence_fraction),
                    cfg.paths.value.to_string(),
                    fmt_f64(cfg.alpha.value),
                    model.name().to_string(),
                ]);
            }
            // divergence is the measured quantity here, never a failure
            valid = true;
        }
        Command::Simulate => {
            let n = ns[0];
            let plan = NoisePlan {
                master_seed: cfg.master_seed.value,
                path_id: 0,
                dim_noise: model.dim_noise(),
                fine_n: n,
                horizon: cfg.horizon.value,
            };
            let noise = generate_increments(&plan)?;
            let mut x0 = vec![0.0; model.dim_state()];
            model.realize_initial(&mut initial_value_rng(cfg.master_seed.value, 0), &mut x0);
            let traj = simulate(&spec, &model, noise.grid(), &noise, &x0)?;
            for (k, t) in traj.grid().points().enumerate() {
                let mut row = vec![fmt_f64(t)];
                row.extend(traj.value(k).iter().map(|&v| fmt_f64(v)));
                row.push(traj.finite()[k].to_string());
                rows.push(row);
            }
            if let Some(b) = traj.blowup_step() {
                summary.push(format!("trajectory became non-finite at grid index {b}"));
            }
            valid = traj.is_finite();
        }
    }
    Ok(Produced {
        rows,
        valid,
        summary,
        results,
    })
}

fn write_csv(path: &PathBuf, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut w = csv::Writer::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_manifest(
    cfg: &ExperimentConfig,
    produced: &Produced,
    wall_time: f64,
) -> Result<()> {
    let path = cfg.manifest_path();
    let mut f = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let params: Vec<String> = cfg
        .build_model()
        .ok()
        .and_then(|_| tamed_sde::models::default_params(&cfg.model.value))
        .unwrap_or(&[])
        .iter()
        .map(|(k, d)| {
            let v = cfg.params.get(*k).map_or(*d, |s| s.value);
            format!("{k}={v}")
        })
        .collect();
    let ns: Vec<String> = cfg.n_values.value.iter().map(|n| n.to_string()).collect();
    let mut lines = vec![
        ("command", cfg.command.name().to_string()),
        ("model", cfg.model.value.clone()),
        ("params", params.join(",")),
        ("scheme", cfg.scheme_spec().label().to_string()),
        ("alpha", cfg.alpha.value.to_string()),
        ("n_values", ns.join(",")),
        ("fine_n", cfg.fine_n.value.to_string()),
        ("p", cfg.p.value.to_string()),
        ("paths", cfg.paths.value.to_string()),
        ("horizon", cfg.horizon.value.to_string()),
        ("master_seed", cfg.master_seed.value.to_string()),
        ("workers", cfg.workers.value.to_string()),
        ("version", env!("CARGO_PKG_VERSION").to_string()),
        ("csv", cfg.output.value.display().to_string()),
        ("valid", produced.valid.to_string()),
        ("wall_time_s", format!("{wall_time:.3}")),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect::<Vec<_>>();
    lines.extend(produced.results.iter().cloned());
    for (k, v) in lines {
        writeln!(f, "{k} = {v}")?;
    }
    Ok(())
}

/// Runs the experiment on a pool of `cfg.workers` threads and writes the
/// CSV and manifest. The CSV is written even when estimates are invalid.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let produced = with_workers(cfg.workers.value, || produce(cfg))?;
    let dim = cfg.build_model()?.dim_state();
    write_csv(&cfg.output.value, &csv_header(cfg.command, dim), &produced.rows)?;
    write_manifest(cfg, &produced, start.elapsed().as_secs_f64())?;
    Ok(RunOutcome {
        valid: produced.valid,
        summary: produced.summary,
        csv_path: cfg.output.value.clone(),
        manifest_path: cfg.manifest_path(),
    })
}
