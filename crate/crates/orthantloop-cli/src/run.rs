use crate::checks;
use crate::config::{parse_config_with, ParsedConfig};
use crate::error::{exit, CliError};
use crate::output::{write_records, Format, Record};
use orthantloop::dimshift::{self, EpsSeries, PowerRoute};
use orthantloop::kinematics::{Dimension, KinematicConfig};
use orthantloop::oracle::{self, MCSettings};
use orthantloop::quadrature::QuadratureSettings;
use orthantloop::tensor::{self, Metric};
use std::io::Write;
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Compute,
    Validate,
    Expand,
    Tensor,
    Oracle,
}

#[derive(Clone, Debug)]
pub struct RunRequest {
    pub command: Command,
    pub config_path: PathBuf,
    pub overrides: Vec<(String, String)>,
    pub format: Format,
    pub quad: QuadratureSettings,
    pub mc: MCSettings,
    /// Overrides the config's epsilon order.
    pub order: Option<usize>,
    pub route: PowerRoute,
}

impl RunRequest {
    pub fn new(command: Command, config_path: impl Into<PathBuf>) -> Self {
        RunRequest {
            command,
            config_path: config_path.into(),
            overrides: Vec::new(),
            format: Format::Text,
            quad: QuadratureSettings::default(),
            mc: MCSettings::default(),
            order: None,
            route: PowerRoute::default(),
        }
    }
}

/// Records produced so far, warnings, and the error that stopped the run.
#[derive(Debug, Default)]
pub struct RunOutcome {
    pub records: Vec<Record>,
    pub warnings: Vec<String>,
    pub error: Option<CliError>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.error.as_ref().map_or(exit::OK, CliError::exit_code)
    }
}

pub fn load(req: &RunRequest) -> Result<ParsedConfig, CliError> {
    let text = std::fs::read_to_string(&req.config_path).map_err(|source| CliError::Io {
        path: req.config_path.display().to_string(),
        source,
    })?;
    let mut parsed = parse_config_with(&text, &req.overrides)?;
    if let Some(order) = req.order {
        if let Dimension::Expansion { d, .. } = parsed.config.dimension {
            parsed.config.dimension = Dimension::Expansion { d, order };
        }
    }
    Ok(parsed)
}

pub fn run(req: &RunRequest) -> RunOutcome {
    let mut outcome = RunOutcome::default();
    let parsed = match req.quad.validate().map_err(CliError::from).and_then(|_| load(req)) {
        Ok(p) => p,
        Err(e) => {
            outcome.error = Some(e);
            return outcome;
        }
    };
    outcome.warnings = parsed.warnings.clone();
    let result = match req.command {
        Command::Compute => compute(&parsed.config, req, &mut outcome.records),
        Command::Expand => expand(&parsed.config, req, &mut outcome.records),
        Command::Tensor => run_tensor(&parsed, req, &mut outcome.records),
        Command::Oracle => run_oracle(&parsed.config, req, &mut outcome.records),
        Command::Validate => run_validate(&parsed.config, req, &mut outcome.records),
    };
    outcome.error = result.err();
    outcome
}

/// Runs the request and writes records to `out`, diagnostics to `err`;
/// returns the process exit code.
pub fn execute<W: Write, E: Write>(req: &RunRequest, out: &mut W, err: &mut E) -> i32 {
    let outcome = run(req);
    for w in &outcome.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    if let Err(e) = write_records(out, req.format, &outcome.records) {
        let _ = writeln!(err, "error: {e}");
        return exit::NUMERIC;
    }
    if let Some(e) = &outcome.error {
        let _ = writeln!(err, "error: {e}");
    }
    outcome.exit_code()
}

fn compute_record(config: &KinematicConfig, v: &orthantloop::value::IntegralValue) -> Record {
    Record::Compute {
        legs: config.n_legs(),
        n: config.n(),
        nu: config.nu_total(),
        value_re: v.re(),
        value_im: v.im(),
        abs_error: v.abs_error,
        method: v.method.as_str().to_string(),
    }
}

fn compute(config: &KinematicConfig, req: &RunRequest, out: &mut Vec<Record>) -> Result<(), CliError> {
    // An expansion config is computed at eps = 0.
    let cfg = config.with_dimension(config.n());
    let v = dimshift::evaluate(&cfg, &req.quad)?;
    out.push(compute_record(&cfg, &v));
    Ok(())
}

fn series_records(label: &str, s: &EpsSeries, out: &mut Vec<Record>) {
    for (k, c) in s.coefficients.iter().enumerate() {
        out.push(Record::Coefficient {
            series: label.to_string(),
            d_base: s.d_base,
            k_shift: s.k_shift,
            order: k,
            value_re: c.re(),
            value_im: c.im(),
            abs_error: c.abs_error,
        });
    }
}

fn expand(config: &KinematicConfig, req: &RunRequest, out: &mut Vec<Record>) -> Result<(), CliError> {
    let s = dimshift::eps_expand_via(config, req.route, &req.quad)?;
    series_records("J", &s, out);
    Ok(())
}

fn run_tensor(parsed: &ParsedConfig, req: &RunRequest, out: &mut Vec<Record>) -> Result<(), CliError> {
    let (momenta, metric) = match &parsed.momenta {
        Some(m) => (m.clone(), parsed.metric),
        None => (tensor::momenta_from_invariants(&parsed.config)?, Metric::Euclidean),
    };
    let t = tensor::reduce_rank2_5pt(&parsed.config, &momenta, metric, req.route, &req.quad)?;
    for (label, s) in t.labelled_series() {
        series_records(&label, s, out);
    }
    Ok(())
}

/// Sample cap for the Lauricella oracle.
pub const LAURICELLA_MAX_SAMPLES: u64 = 200_000;

fn run_oracle(config: &KinematicConfig, req: &RunRequest, out: &mut Vec<Record>) -> Result<(), CliError> {
    let cfg = config.with_dimension(config.n());
    let mut push = |name: &str, v: &orthantloop::value::IntegralValue, samples: u64| {
        out.push(Record::Oracle {
            oracle: name.to_string(),
            value_re: v.re(),
            value_im: v.im(),
            stderr: v.abs_error,
            samples,
        })
    };
    let f = oracle::feynman_oracle(&cfg, &req.quad, &req.mc)?;
    let samples = if cfg.n_legs() >= 4 { req.mc.samples } else { 0 };
    push("feynman", &f, samples);
    // The Gaussian forms need a positive-definite Sigma and their own
    // convergence conditions; report them when they apply.
    if let Ok(t) = oracle::truncated_moment_mc(&cfg, &req.mc) {
        push("truncated_moment", &t.value, req.mc.samples);
    }
    if cfg.n() > cfg.nu_total() as f64 {
        // Every sample costs a one-dimensional quadrature.
        let mc = req.mc.with_samples(req.mc.samples.min(LAURICELLA_MAX_SAMPLES));
        if let Ok(l) = oracle::lauricella_expectation_mc(&cfg, &req.quad, &mc) {
            push("lauricella", &l, mc.samples);
        }
    }
    Ok(())
}

fn run_validate(config: &KinematicConfig, req: &RunRequest, out: &mut Vec<Record>) -> Result<(), CliError> {
    let results = checks::validate_config(config, &req.quad, &req.mc, req.route);
    let failed = results
        .iter()
        .filter(|r| matches!(r, Record::Check { status: crate::output::Status::Fail, .. }))
        .count();
    out.extend(results);
    if failed > 0 {
        Err(CliError::ChecksFailed(failed))
    } else {
        Ok(())
    }
}
