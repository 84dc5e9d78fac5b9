//! Experiment configuration: a TOML file merged with command-line overrides.
//! Flags win over the file, the file wins over defaults. Validation errors
//! name the file line or the flag responsible.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use tamed_sde::{models, taming, SchemeSpec};
use toml::Spanned;

/// Environment variable holding the directory for default output files.
pub const OUTPUT_DIR_ENV: &str = "TAMED_SDE_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Convergence,
    Moments,
    Increments,
    DivergeDemo,
    Simulate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Convergence => "convergence",
            Command::Moments => "moments",
            Command::Increments => "increments",
            Command::DivergeDemo => "diverge-demo",
            Command::Simulate => "simulate",
        }
    }

    fn uses_fine_grid(&self) -> bool {
        matches!(self, Command::Convergence | Command::Increments)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SchemeChoice {
    Euler,
    Tamed,
}

/// Where a setting came from, for error messages.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    Default,
    File { path: PathBuf, line: usize },
    Flag(&'static str),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => f.write_str("default"),
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
            Origin::Flag(flag) => write!(f, "--{flag}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sourced<T> {
    pub value: T,
    pub origin: Origin,
}

impl<T> Sourced<T> {
    fn default(value: T) -> Self {
        Self {
            value,
            origin: Origin::Default,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: Origin,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.origin, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(origin: &Origin, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        origin: origin.clone(),
        message: message.into(),
    })
}

/// A fully merged, validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub model: Sourced<String>,
    pub params: BTreeMap<String, Sourced<f64>>,
    pub scheme: Sourced<SchemeChoice>,
    pub alpha: Sourced<f64>,
    pub n_values: Sourced<Vec<usize>>,
    pub fine_n: Sourced<usize>,
    pub p: Sourced<f64>,
    pub paths: Sourced<u64>,
    pub horizon: Sourced<f64>,
    pub master_seed: Sourced<u64>,
    pub output: Sourced<PathBuf>,
    pub workers: Sourced<usize>,
}

/// Settings given on the command line; `None` means "not given".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub model: Option<String>,
    pub params: Vec<(String, f64)>,
    pub scheme: Option<SchemeChoice>,
    pub alpha: Option<f64>,
    pub n_values: Option<Vec<usize>>,
    pub fine_n: Option<usize>,
    pub p: Option<f64>,
    pub paths: Option<u64>,
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<Spanned<String>>,
    model: Option<Spanned<String>>,
    #[serde(default)]
    params: BTreeMap<String, Spanned<f64>>,
    scheme: Option<Spanned<SchemeChoice>>,
    alpha: Option<Spanned<f64>>,
    n_values: Option<Spanned<Vec<usize>>>,
    fine_n: Option<Spanned<usize>>,
    p: Option<Spanned<f64>>,
    paths: Option<Spanned<u64>>,
    horizon: Option<Spanned<f64>>,
    seed: Option<Spanned<u64>>,
    output: Option<Spanned<PathBuf>>,
    workers: Option<Spanned<usize>>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl ExperimentConfig {
    /// Defaults for a command; the output goes to `$TAMED_SDE_OUTPUT_DIR`
    /// (or the working directory) as `<command>.csv`.
    pub fn defaults(command: Command) -> Self {
        let dir = std::env::var_os(OUTPUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from);
        Self {
            command,
            model: Sourced::default("cubic-additive".to_string()),
            params: BTreeMap::new(),
            scheme: Sourced::default(SchemeChoice::Tamed),
            alpha: Sourced::default(taming::DEFAULT_ALPHA),
            n_values: Sourced::default(vec![32, 64, 128, 256, 512]),
            fine_n: Sourced::default(8192),
            p: Sourced::default(2.0),
            paths: Sourced::default(10_000),
            horizon: Sourced::default(1.0),
            master_seed: Sourced::default(0),
            output: Sourced::default(dir.join(format!("{}.csv", command.name()))),
            workers: Sourced::default(default_workers()),
        }
    }

    /// Merges a TOML document (if any) and flag overrides over the defaults,
    /// then validates the result.
    pub fn load(
        command: Command,
        file: Option<(&Path, &str)>,
        overrides: &Overrides,
    ) -> Result<Self, ConfigError> {
        let mut cfg = Self::defaults(command);
        if let Some((path, text)) = file {
            cfg.apply_file(path, text)?;
        }
        cfg.apply_overrides(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_file(&mut self, path: &Path, text: &str) -> Result<(), ConfigError> {
        let parsed: FileConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(1, |s| line_of(text, s.start));
            ConfigError {
                origin: Origin::File {
                    path: path.to_path_buf(),
                    line,
                },
                message: e.message().trim().to_string(),
            }
        })?;
        let origin = |s: std::ops::Range<usize>| Origin::File {
            path: path.to_path_buf(),
            line: line_of(text, s.start),
        };
        fn set<T>(slot: &mut Sourced<T>, v: Option<Spanned<T>>, origin: impl Fn(std::ops::Range<usize>) -> Origin) {
            if let Some(v) = v {
                let o = origin(v.span());
                *slot = Sourced {
                    value: v.into_inner(),
                    origin: o,
                };
            }
        }
        if let Some(c) = parsed.command {
            if c.get_ref() != self.command.name() {
                return err(
                    &origin(c.span()),
                    format!(
                        "file is for command '{}' but '{}' was requested",
                        c.get_ref(),
                        self.command
                    ),
                );
            }
        }
        set(&mut self.model, parsed.model, origin);
        for (k, v) in parsed.params {
            let o = origin(v.span());
            self.params.insert(k, Sourced { value: v.into_inner(), origin: o });
        }
        set(&mut self.scheme, parsed.scheme, origin);
        set(&mut self.alpha, parsed.alpha, origin);
        set(&mut self.n_values, parsed.n_values, origin);
        set(&mut self.fine_n, parsed.fine_n, origin);
        set(&mut self.p, parsed.p, origin);
        set(&mut self.paths, parsed.paths, origin);
        set(&mut self.horizon, parsed.horizon, origin);
        set(&mut self.master_seed, parsed.seed, origin);
        set(&mut self.output, parsed.output, origin);
        set(&mut self.workers, parsed.workers, origin);
        Ok(())
    }

    fn apply_overrides(&mut self, o: &Overrides) {
        fn set<T: Clone>(slot: &mut Sourced<T>, v: &Option<T>, flag: &'static str) {
            if let Some(v) = v {
                *slot = Sourced {
                    value: v.clone(),
                    origin: Origin::Flag(flag),
                };
            }
        }
        set(&mut self.model, &o.model, "model");
        for (k, v) in &o.params {
            self.params.insert(
                k.clone(),
                Sourced {
                    value: *v,
                    origin: Origin::Flag("param"),
                },
            );
        }
        set(&mut self.scheme, &o.scheme, "scheme");
        set(&mut self.alpha, &o.alpha, "alpha");
        set(&mut self.n_values, &o.n_values, "n-values");
        set(&mut self.fine_n, &o.fine_n, "fine-n");
        set(&mut self.p, &o.p, "p");
        set(&mut self.paths, &o.paths, "paths");
        set(&mut self.horizon, &o.horizon, "horizon");
        set(&mut self.master_seed, &o.seed, "seed");
        set(&mut self.output, &o.output, "output");
        set(&mut self.workers, &o.workers, "workers");
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let name = &self.model.value;
        let Some(defaults) = models::default_params(name) else {
            return err(
                &self.model.origin,
                format!("unknown model '{name}' (known: {})", models::MODEL_NAMES.join(", ")),
            );
        };
        for (k, v) in &self.params {
            if !defaults.iter().any(|(d, _)| d == k) {
                let known: Vec<&str> = defaults.iter().map(|(d, _)| *d).collect();
                return err(
                    &v.origin,
                    format!("model '{name}' has no parameter '{k}' (known: {})", known.join(", ")),
                );
            }
        }
        if let Err(e) = self.build_model() {
            let origin = self
                .params
                .values()
                .next()
                .map_or(&self.model.origin, |p| &p.origin);
            return err(origin, e.to_string());
        }
        if self.scheme.value == SchemeChoice::Tamed || self.command == Command::DivergeDemo {
            if let Err(e) = taming::validate_alpha(self.alpha.value) {
                return err(&self.alpha.origin, e.to_string());
            }
        }
        let ns = &self.n_values.value;
        if ns.is_empty() {
            return err(&self.n_values.origin, "n_values must not be empty");
        }
        if ns.contains(&0) {
            return err(&self.n_values.origin, "n_values must be positive");
        }
        if !ns.windows(2).all(|w| w[0] < w[1]) {
            return err(&self.n_values.origin, "n_values must be strictly ascending");
        }
        if self.command.uses_fine_grid() {
            let fine = self.fine_n.value;
            if fine == 0 {
                return err(&self.fine_n.origin, "fine_n must be positive");
            }
            if let Some(bad) = ns.iter().find(|&&n| !fine.is_multiple_of(n)) {
                return err(
                    &self.fine_n.origin,
                    format!("fine_n={fine} is not a multiple of n={bad}"),
                );
            }
        }
        let p = self.p.value;
        if !(p > 0.0 && p.is_finite()) {
            return err(&self.p.origin, format!("p must be positive, got {p}"));
        }
        if self.command == Command::Increments && p < 2.0 {
            return err(&self.p.origin, format!("increments need p >= 2, got {p}"));
        }
        if self.command == Command::Increments && ns.len() < 3 {
            return err(&self.n_values.origin, "increments need at least 3 n values for the slope fit");
        }
        if self.paths.value == 0 {
            return err(&self.paths.origin, "paths must be at least 1");
        }
        let t = self.horizon.value;
        if !(t > 0.0 && t.is_finite()) {
            return err(&self.horizon.origin, format!("horizon must be positive, got {t}"));
        }
        if self.workers.value == 0 {
            return err(&self.workers.origin, "workers must be at least 1");
        }
        Ok(())
    }

    pub fn param_values(&self) -> BTreeMap<String, f64> {
        self.params.iter().map(|(k, v)| (k.clone(), v.value)).collect()
    }

    pub fn build_model(&self) -> tamed_sde::Result<tamed_sde::SdeModel> {
        models::by_name(&self.model.value, &self.param_values())
    }

    pub fn scheme_spec(&self) -> SchemeSpec {
        match self.scheme.value {
            SchemeChoice::Euler => SchemeSpec::explicit_euler(),
            SchemeChoice::Tamed => SchemeSpec::tamed_euler(self.alpha.value).expect("alpha validated"),
        }
    }

    pub fn manifest_path(&self) -> PathBuf {
        let mut s = self.output.value.clone().into_os_string();
        s.push(".manifest");
        PathBuf::from(s)
    }
}
