use std::path::PathBuf;
use std::process::ExitCode;

use cfprop_core::bench::{compute_reference, cost_at_error, run_benchmark_against};
use cfprop_core::{
    alpha_weights_for, builtin_scheme, emit_csv, emit_table, propagate, BenchConfig, CfError, KrylovConfig,
    QuadratureRule, TolPolicy,
};
use clap::{Args, Parser, Subcommand};

/// Commutator-free exponential propagators for the driven Morse oscillator.
#[derive(Parser)]
#[command(name = "cfprop", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate once per scheme and print final-state diagnostics.
    Propagate(PropagateArgs),
    /// Full error-versus-cost sweep against a validated reference.
    Bench(RunArgs),
    /// Print quadrature nodes, weights and the sample-to-α weight matrix.
    Quadrature(QuadratureArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Built-in configuration to start from.
    #[arg(long, default_value = "walker-preston-64")]
    preset: String,
    /// TOML file with [grid], [model] and [run] overrides.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated scheme names.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    /// Comma-separated step counts.
    #[arg(long, value_delimiter = ',')]
    steps: Option<Vec<usize>>,
    /// Fixed Krylov tolerance for every exponential.
    #[arg(long)]
    tol: Option<f64>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PropagateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Also compute a reference and report the final-state error.
    #[arg(long)]
    reference: bool,
}

#[derive(Args)]
struct QuadratureArgs {
    /// Rule name; repeat for several. Defaults to all built-in rules.
    #[arg(long)]
    rule: Vec<String>,
}

const PROPAGATE_STEPS: usize = 512;

fn load(args: &RunArgs, default_steps: Option<Vec<usize>>) -> Result<BenchConfig, CfError> {
    let base = BenchConfig::preset(&args.preset)?;
    let mut cfg = match &args.config {
        Some(path) => BenchConfig::from_path(path, base)?,
        None => base,
    };
    if let Some(s) = &args.schemes {
        cfg.schemes = s.clone();
    }
    if let Some(s) = args.steps.clone().or(default_steps) {
        cfg.steps = s;
    }
    if let Some(t) = args.tol {
        cfg.tol = TolPolicy::Fixed(t);
    }
    if args.out.is_some() {
        cfg.output = args.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_propagate(args: &PropagateArgs) -> Result<(), CfError> {
    let default_steps = args.run.steps.is_none().then(|| vec![PROPAGATE_STEPS]);
    let cfg = load(&args.run, default_steps)?;
    let (model, u0) = cfg.setup()?;
    let tf = cfg.horizon();
    let reference = if args.reference {
        let r = compute_reference(&cfg)?;
        eprintln!("reference: {} steps, cross-check {:.3e}", r.n_steps, r.agreement);
        Some(r.state)
    } else {
        None
    };
    println!(
        "{:<12} {:>8} {:>10} {:>11} {:>10} {:>6} {:>5} {:>12} {:>12}",
        "scheme", "n_steps", "tau", "norm_drift", "fft_pairs", "m_max", "caps", "ground_pop", "error_l2"
    );
    for name in &cfg.schemes {
        let scheme = builtin_scheme(name)?;
        for &n in &cfg.steps {
            let kcfg = KrylovConfig::with_tol(cfg.tol.tol_for(n));
            let (u, stats) = propagate(&scheme, &u0, 0.0, tf, n, &model, &kcfg)?;
            let error = reference.as_ref().map_or("-".to_string(), |r| format!("{:.3e}", u.distance(r)));
            println!(
                "{:<12} {:>8} {:>10.4} {:>11.2e} {:>10} {:>6} {:>5} {:>12.9} {:>12}",
                name,
                n,
                tf / n as f64,
                u.norm() - 1.0,
                stats.fft_pairs,
                stats.max_krylov_dim,
                stats.cap_warnings,
                u0.inner(&u).norm_sqr(),
                error
            );
        }
    }
    Ok(())
}

fn run_bench(args: &RunArgs) -> Result<(), CfError> {
    let cfg = load(args, None)?;
    let reference = compute_reference(&cfg)?;
    eprintln!(
        "reference: `{}` at {} steps, `{}` agrees to {:.3e}",
        cfg.reference.scheme, reference.n_steps, cfg.reference.check_scheme, reference.agreement
    );
    let records = run_benchmark_against(&cfg, &reference.state)?;
    print!("{}", emit_table(&records));
    for name in &cfg.schemes {
        if let Some(c) = cost_at_error(&records, name, 1e-8) {
            println!("{name:<12} fft_pairs at error 1e-8: {c:.0}");
        }
    }
    if let Some(path) = &cfg.output {
        emit_csv(&records, path)?;
        eprintln!("wrote {} records to {}", records.len(), path.display());
    }
    Ok(())
}

fn run_quadrature(args: &QuadratureArgs) -> Result<(), CfError> {
    let names: Vec<String> = if args.rule.is_empty() {
        QuadratureRule::NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        args.rule.clone()
    };
    for name in names {
        let rule = QuadratureRule::named(&name)?;
        let w = alpha_weights_for(&rule)?;
        println!("{name} (order {})", rule.order());
        println!("  {:>3} {:>24} {:>24}", "l", "node", "weight");
        for (l, (c, b)) in rule.nodes().iter().zip(rule.weights()).enumerate() {
            println!("  {:>3} {c:>24.17} {b:>24.17}", l + 1);
        }
        println!("  alpha weights (rows alpha_1..alpha_3, columns samples)");
        for i in 0..3 {
            let row: Vec<String> = w.row(i).iter().map(|v| format!("{v:>24.17}")).collect();
            println!("  {}", row.join(" "));
        }
        println!();
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Propagate(a) => run_propagate(a),
        Command::Bench(a) => run_bench(a),
        Command::Quadrature(a) => run_quadrature(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CfError::Reference(_)) => {
            eprintln!("cfprop: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("cfprop: {e}");
            ExitCode::FAILURE
        }
    }
}
