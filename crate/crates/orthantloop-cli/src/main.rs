use clap::Parser;
use orthantloop::dimshift::PowerRoute;
use orthantloop_cli::config::parse_override;
use orthantloop_cli::output::Format;
use orthantloop_cli::{execute, Command, RunRequest};
use std::path::PathBuf;

/// Environment variable capping the worker thread count.
const THREADS_VAR: &str = "ORTHANTLOOP_THREADS";

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum Route {
    Contour,
    Duplicate,
}

#[derive(Debug, Parser)]
#[command(name = "orthantloop", version, about = "One-loop N-point scalar integrals")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Kinematic config file.
    #[arg(long)]
    config: PathBuf,
    /// Relative quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    mc_samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Highest eps order for `expand` and `tensor`.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Bromwich abscissa for dimension lowering and power raising.
    #[arg(long)]
    contour_c: Option<f64>,
    /// How raised propagator powers are evaluated.
    #[arg(long, value_enum, default_value = "contour")]
    route: Route,
    /// Override a config entry, e.g. `--set mass_1=2.0`; repeatable.
    #[arg(long = "set", value_parser = parse_override)]
    overrides: Vec<(String, String)>,
}

fn init_threads() {
    let Ok(v) = std::env::var(THREADS_VAR) else { return };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: {THREADS_VAR}: {e}");
            }
        }
        _ => eprintln!("warning: ignoring {THREADS_VAR}={v}"),
    }
}

fn main() {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    init_threads();
    let mut req = RunRequest::new(args.command, args.config);
    req.overrides = args.overrides;
    req.format = args.format;
    req.order = args.order;
    req.route = match args.route {
        Route::Contour => PowerRoute::Contour,
        Route::Duplicate => PowerRoute::Duplicate,
    };
    if let Some(t) = args.tol {
        req.quad.rel_tol = t;
    }
    req.quad.contour_abscissa_c = args.contour_c;
    if let Some(n) = args.mc_samples {
        req.mc.samples = n;
    }
    if let Some(s) = args.seed {
        req.mc.seed = s;
    }
    let code = execute(&req, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
