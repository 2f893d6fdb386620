use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use boltzgraph::amplitude::{
    crossing_integral, fit_exponent, graph_sum, single_mode, wick_oracle_cases, AmplitudeSpec, Observable, OracleConfig,
    WickCase,
};
use boltzgraph::boltzmann::{build_rate_table, observe, run};
use boltzgraph::dynamics::{evolve, sample_disorder_replica, HamiltonianSpec, Method};
use boltzgraph::experiment::{
    compare_to_boltzmann, parameter_calculator_log, run_moment_sweep, threshold_log_inv_epsilon, write_csv,
    write_manifest, write_moment_reports, write_trend, ExperimentConfig,
};
use boltzgraph::graphs::{classify, count, enumerate, FilterMode};
use boltzgraph::initial::{build_wkb, macroscopic_initial_sampler};
use boltzgraph::lattice::{forward_fourier, LatticeSpec};
use boltzgraph::wigner::{pair, pair_state, wigner_fourier};
use boltzgraph::Result;

#[derive(Parser)]
#[command(name = "boltzgraph", version, about = "Kinetic-limit laboratory for the lattice Anderson model")]
struct Cli {
    /// Experiment configuration (sectioned key = value file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads (0: rayon default). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured WKB state under one disorder realization.
    Evolve(EvolveArgs),
    /// Wigner transform identities of the configured initial state.
    Wigner(WignerArgs),
    /// Enumerate and classify contraction graphs.
    Graphs(GraphArgs),
    /// Graph sums against the disorder Monte Carlo moment.
    Amplitudes(AmplitudeArgs),
    /// Crossing integral over a list of epsilons.
    Crossing(CrossingArgs),
    /// Particle solver for the linear Boltzmann equation.
    Boltzmann(BoltzmannArgs),
    /// Disorder-ensemble moments over the configured coupling grid.
    Moments,
    /// Parameter choice and bound inequalities.
    Params(ParamsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    SplitStep,
    Fourth,
    Exact,
}

#[derive(Args)]
struct EvolveArgs {
    #[arg(long)]
    lambda: f64,
    /// Microscopic time.
    #[arg(long)]
    t: f64,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 0)]
    replica: u64,
    #[arg(long, default_value_t = 10)]
    snapshots: usize,
}

#[derive(Args)]
struct WignerArgs {
    /// Lattice half-width; the Wigner field has `|Λ|²/8` entries.
    #[arg(long = "L", default_value_t = 4)]
    half_width: usize,
    /// Replaces the configured WKB scale.
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    r: usize,
    #[arg(long)]
    nbar: usize,
    #[arg(long, default_value_t = 0)]
    n: usize,
    /// Rows written at most.
    #[arg(long, default_value_t = 100_000)]
    limit: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObservableArg {
    L2,
    Test,
}

#[derive(Args)]
struct AmplitudeArgs {
    #[arg(long)]
    r: usize,
    #[arg(long)]
    nbar: usize,
    #[arg(long)]
    n: usize,
    #[arg(long = "L", default_value_t = 2)]
    half_width: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, value_enum, default_value = "l2")]
    observable: ObservableArg,
    /// Wigner scaling for the test observable.
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    #[arg(long, default_value_t = 0)]
    oracle_samples: usize,
    #[arg(long, default_value = "full")]
    mode: String,
    #[arg(long, default_value_t = 0.1)]
    oracle_dt: f64,
}

#[derive(Args)]
struct CrossingArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.03, 0.01, 0.003])]
    epsilon_list: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [3.0, 3.0, 3.0])]
    gamma: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.3])]
    k: Vec<f64>,
    #[arg(long, default_value_t = 4_000_000)]
    budget: usize,
}

#[derive(Args)]
struct BoltzmannArgs {
    #[arg(long)]
    particles: Option<usize>,
    /// Final macroscopic time.
    #[arg(long = "T")]
    t_final: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    shell_width: Option<f64>,
    #[arg(long)]
    rate_samples: Option<usize>,
    #[arg(long, default_value_t = 10)]
    snapshots: usize,
}

#[derive(Args)]
struct ParamsArgs {
    /// `log10(1/ε)`, so that ε far below the float range is accepted.
    #[arg(long, default_value_t = 12.0)]
    log10_inv_epsilon: f64,
    #[arg(long, default_value_t = 2)]
    r: usize,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    t_macro: f64,
}

fn fmt(x: f64) -> String {
    x.to_string()
}

fn triple(v: &[f64], name: &str) -> Result<[f64; 3]> {
    <[f64; 3]>::try_from(v).map_err(|_| boltzgraph::Error::InvalidParameter(format!("--{name} takes three values")))
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn manifest(dir: &Path, config: &ExperimentConfig, command: &str) -> Result<()> {
    write_manifest(dir, &config.source, config.seed, &[("command", command.to_string())])?;
    Ok(())
}

fn cmd_evolve(config: &ExperimentConfig, args: &EvolveArgs, dir: &Path) -> Result<()> {
    let dt = args.dt.unwrap_or(match config.evolve.method {
        Method::SplitStep { dt } | Method::Fourth { dt } => dt,
        Method::ExactDiag => 0.1,
    });
    let method = match args.method {
        Some(MethodArg::SplitStep) => Method::SplitStep { dt },
        Some(MethodArg::Fourth) => Method::Fourth { dt },
        Some(MethodArg::Exact) => Method::ExactDiag,
        None => config.evolve.method,
    };
    let eta = config.wkb.eta();
    let mut phi = build_wkb(&config.wkb, config.lattice)?;
    let disorder = sample_disorder_replica(config.lattice, config.seed, args.replica);
    let h = HamiltonianSpec::new(args.lambda, &disorder)?;
    let steps = args.snapshots.max(1);
    let mut rows = Vec::new();
    for i in 0..=steps {
        let t = args.t * i as f64 / steps as f64;
        if i > 0 {
            phi = evolve(&phi, &h, args.t / steps as f64, method)?;
        }
        rows.push(vec![fmt(t), fmt(phi.norm()), fmt(pair_state(&config.j, &phi, eta)?)]);
    }
    write_csv(&dir.join("evolve.csv"), &["t", "norm", "pairing"], &rows)?;
    phi.save(dir.join("final.bgf"))?;
    manifest(dir, config, "evolve")
}

fn cmd_wigner(config: &ExperimentConfig, args: &WignerArgs, dir: &Path) -> Result<()> {
    let lattice = LatticeSpec::unit(args.half_width)?;
    let spec = config.wkb.with_eta(args.eta)?;
    let phi0 = build_wkb(&spec, lattice)?;
    let phi_hat = forward_fourier(&phi0)?;
    let w = wigner_fourier(&phi_hat, None)?;
    let zero = w.xi_zero();
    let density_error = (0..lattice.len())
        .map(|v| (w.value(zero, v) - Complex64::new(phi_hat.values()[v].norm_sqr(), 0.0)).norm())
        .fold(0.0, f64::max);
    let rows = vec![vec![
        lattice.half_width().to_string(),
        fmt(spec.eta()),
        fmt(w.mass()),
        fmt(density_error),
        fmt(pair(&config.j, &w, spec.eta())?),
        fmt(pair_state(&config.j, &phi0, spec.eta())?),
    ]];
    write_csv(&dir.join("wigner.csv"), &["L", "eta", "mass", "max_density_error", "pairing_wigner", "pairing_state"], &rows)?;
    manifest(dir, config, "wigner")
}

fn cmd_graphs(config: &ExperimentConfig, args: &GraphArgs, dir: &Path) -> Result<()> {
    let mut rows = Vec::new();
    for (i, g) in enumerate(args.r, args.nbar, args.n)?.take(args.limit).enumerate() {
        let c = classify(&g);
        rows.push(vec![
            i.to_string(),
            g.pair_list(),
            c.components.len().to_string(),
            c.is_disconnected.to_string(),
            c.is_two_connected.to_string(),
            c.is_simple().to_string(),
            c.has_crossing().to_string(),
            c.has_nesting().to_string(),
            c.immediate_recollisions.len().to_string(),
        ]);
    }
    write_csv(
        &dir.join("graphs.csv"),
        &["index", "pairs", "components", "disconnected", "two_connected", "simple", "crossing", "nesting", "recollisions"],
        &rows,
    )?;
    println!("{} graphs (expected {})", rows.len(), count(args.r, args.nbar)?);
    manifest(dir, config, "graphs")
}

fn cmd_amplitudes(config: &ExperimentConfig, args: &AmplitudeArgs, dir: &Path) -> Result<()> {
    let lattice = LatticeSpec::unit(args.half_width)?;
    let observable = match args.observable {
        ObservableArg::L2 => Observable::L2Delta,
        ObservableArg::Test => Observable::Test { j: config.j.clone(), eta: args.eta },
    };
    let spec = AmplitudeSpec::new(lattice, args.lambda, args.t, observable)?;
    let phi0_hat = single_mode(lattice, [1, 0, 0]);
    let mode: FilterMode = args.mode.parse()?;
    let header = ["r", "nbar", "n", "mode", "graph_sum_re", "graph_sum_im", "estimate", "se", "z"];
    let row = if args.oracle_samples > 0 {
        let case = WickCase { r: args.r, n_bar: args.nbar, n: args.n, mode };
        let cfg = OracleConfig { samples: args.oracle_samples, seed: config.seed, dt: args.oracle_dt };
        let rep = wick_oracle_cases(&[case], &spec, &phi0_hat, &cfg)?.remove(0);
        vec![fmt(rep.graph_sum.re), fmt(rep.graph_sum.im), fmt(rep.estimate.value), fmt(rep.estimate.se), fmt(rep.z_score)]
    } else {
        let sum = graph_sum(args.r, args.nbar, args.n, mode, &spec, &phi0_hat)?;
        vec![fmt(sum.re), fmt(sum.im), String::new(), String::new(), String::new()]
    };
    let mut full = vec![args.r.to_string(), args.nbar.to_string(), args.n.to_string(), args.mode.clone()];
    full.extend(row);
    write_csv(&dir.join("amplitudes.csv"), &header, &[full])?;
    manifest(dir, config, "amplitudes")
}

fn cmd_crossing(config: &ExperimentConfig, args: &CrossingArgs, dir: &Path) -> Result<()> {
    let gammas = triple(&args.gamma, "gamma")?;
    let k = triple(&args.k, "k")?;
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for &eps in &args.epsilon_list {
        let est = crossing_integral(eps, gammas, k, args.budget, config.seed)?;
        values.push(est.estimate.value);
        rows.push(vec![fmt(eps), fmt(est.estimate.value), fmt(est.estimate.se), est.reliable.to_string()]);
    }
    write_csv(&dir.join("crossing.csv"), &["epsilon", "estimate", "se", "reliable"], &rows)?;
    if args.epsilon_list.len() >= 2 {
        println!("fitted exponent {:.4}", fit_exponent(&args.epsilon_list, &values));
    }
    manifest(dir, config, "crossing")
}

fn cmd_boltzmann(config: &ExperimentConfig, args: &BoltzmannArgs, dir: &Path) -> Result<()> {
    let b = &config.boltzmann;
    let particles = args.particles.unwrap_or(b.particles);
    let t_final = args.t_final.unwrap_or(config.t_macro);
    let dt = args.dt.unwrap_or(b.dt);
    let width = args.shell_width.unwrap_or(b.shell_width);
    let rates = build_rate_table(b.bins, width, args.rate_samples.unwrap_or(b.rate_samples), config.seed)?;
    let mut ensemble = macroscopic_initial_sampler(&config.wkb, particles, config.seed)?;
    let steps = args.snapshots.max(1);
    let mut rows = Vec::new();
    for i in 0..=steps {
        if i > 0 {
            let seed = config.seed.wrapping_add(i as u64);
            ensemble = run(&ensemble, t_final * i as f64 / steps as f64, dt, &rates, seed)?.ensemble;
        }
        let obs = observe(&config.j, &ensemble);
        rows.push(vec![
            fmt(t_final * i as f64 / steps as f64),
            fmt(obs.value),
            fmt(obs.se),
            fmt(ensemble.mass()),
            fmt(ensemble.mean_energy()),
        ]);
    }
    write_csv(&dir.join("boltzmann.csv"), &["T", "observable", "se", "mass", "mean_energy"], &rows)?;
    manifest(dir, config, "boltzmann")
}

fn cmd_moments(config: &ExperimentConfig, dir: &Path) -> Result<()> {
    let reports = run_moment_sweep(config)?;
    write_moment_reports(dir, config, &reports)?;
    if reports.iter().filter(|r| r.lambda > 0.0).count() >= 3 {
        let trend = compare_to_boltzmann(&reports)?;
        write_trend(dir, &trend)?;
        println!(
            "variance strictly decreasing: {}; deviation non-increasing: {}",
            trend.variance_strictly_decreasing, trend.deviation_non_increasing
        );
    }
    Ok(())
}

fn cmd_params(config: &ExperimentConfig, args: &ParamsArgs, dir: &Path) -> Result<()> {
    let l = args.log10_inv_epsilon * std::f64::consts::LN_10;
    let p = parameter_calculator_log(l, args.r, args.c, args.t_macro)?;
    let rows: Vec<Vec<String>> = p
        .inequalities
        .iter()
        .map(|i| vec![i.label.to_string(), fmt(i.lhs), fmt(i.rhs), i.holds.to_string()])
        .collect();
    write_csv(&dir.join("params.csv"), &["inequality", "log_lhs", "log_rhs", "holds"], &rows)?;
    println!("log10(1/eps) = {}, N = {}, ln kappa = {:.6e}", args.log10_inv_epsilon, p.n, p.ln_kappa);
    if p.degenerate {
        println!("N = 0: the inequalities are vacuous at this epsilon");
    }
    match threshold_log_inv_epsilon(args.r, args.c, args.t_macro)? {
        Some(t) => println!("inequalities 1b-5 hold from ln(1/eps) = {t:.6e} on"),
        None => println!("inequalities 1b-5 fail somewhere up to ln(1/eps) = 1e300"),
    }
    manifest(dir, config, "params")
}

fn execute(cli: &Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| boltzgraph::Error::InvalidParameter(e.to_string()))?;
    }
    let config = load_config(cli)?;
    let dir = cli.out_dir.as_path();
    std::fs::create_dir_all(dir)?;
    match &cli.command {
        Command::Evolve(a) => cmd_evolve(&config, a, dir),
        Command::Wigner(a) => cmd_wigner(&config, a, dir),
        Command::Graphs(a) => cmd_graphs(&config, a, dir),
        Command::Amplitudes(a) => cmd_amplitudes(&config, a, dir),
        Command::Crossing(a) => cmd_crossing(&config, a, dir),
        Command::Boltzmann(a) => cmd_boltzmann(&config, a, dir),
        Command::Moments => cmd_moments(&config, dir),
        Command::Params(a) => cmd_params(&config, a, dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
