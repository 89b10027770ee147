use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qfc::bounds;
use qfc::design;
use qfc::harness::{
    self, compare_modes, export_results, gamma_scan, load_config, load_model, run_ensemble,
    TheoremCheck,
};
use qfc::{QfcError, TargetState};

#[derive(Parser)]
#[command(name = "qfc", about = "Measurement-based quantum feedback control toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo ensemble of closed-loop trajectories.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for ensemble.json and per-trajectory CSV files.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a mean-distance-vs-time CSV for plotting.
        #[arg(long)]
        plot_data: bool,
    },
    /// Check the measurement-channel design conditions for a model.
    Design {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the per-eigenstate impossibility certificates for a model.
    Bounds {
        #[arg(long)]
        model: PathBuf,
        /// Override the model's detection efficiency.
        #[arg(long)]
        eta: Option<f64>,
        /// Report the as-printed (non-squared numerator) bound variant.
        #[arg(long)]
        as_printed: bool,
        #[arg(long)]
        json: bool,
    },
    /// Compare feedback against both open-loop models.
    Compare {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a statistical verification suite.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// One of: T2, T3, T4, T5, Eq27, Eq29, mean.
        #[arg(long)]
        theorem: String,
    },
    /// Sweep the switching threshold gamma.
    GammaScan {
        #[arg(long)]
        config: PathBuf,
        /// Grid as start:stop:count, e.g. 0.1:0.9:9.
        #[arg(long)]
        grid: String,
    },
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, QfcError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let err = || QfcError::Config(format!("grid must be start:stop:count, got `{spec}`"));
    if parts.len() != 3 {
        return Err(err());
    }
    let start: f64 = parts[0].parse().map_err(|_| err())?;
    let stop: f64 = parts[1].parse().map_err(|_| err())?;
    let count: usize = parts[2].parse().map_err(|_| err())?;
    if count == 0 || !(start.is_finite() && stop.is_finite()) {
        return Err(err());
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count)
        .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
        .collect())
}

/// Ok(true) = pass (exit 0), Ok(false) = checked and failed (exit 1).
fn run(cli: Cli) -> Result<bool, QfcError> {
    match cli.command {
        Command::Simulate { config, out, plot_data } => {
            let config = load_config(&config)?;
            let result = run_ensemble(&config)?;
            let r = &result.result;
            println!(
                "trajectories: {} ({} blown up)\nconverged: {} (p = {:.4}, 95% CI [{:.4}, {:.4}])\nmean final distance: {:.6}",
                r.trajectories,
                r.blown_up,
                r.converged,
                r.convergence_probability,
                r.wilson_low,
                r.wilson_high,
                r.final_distances.iter().sum::<f64>() / r.final_distances.len() as f64,
            );
            if let Some(dir) = out {
                export_results(&result, &dir, plot_data)?;
                println!("results written to {}", dir.display());
            }
            Ok(true)
        }
        Command::Design { model, json } => {
            let model = load_model(&model)?;
            let graph = design::control_graph(model.hb(), design::EDGE_TOL);
            let connected = design::is_connected(&graph);
            let alpha = design::find_alpha(&model, &design::default_alpha_grid())?;
            let verdicts = match alpha {
                Some(a) => design::rank_verdicts(&model, a)?,
                None => design::rank_verdicts(&model, 1.0)?,
            };
            if json {
                let out = serde_json::json!({
                    "connected": connected,
                    "edges": graph.edges().iter().collect::<Vec<_>>(),
                    "alpha": alpha,
                    "rank_condition": verdicts,
                });
                println!("{}", serde_json::to_string_pretty(&out).expect("serialize"));
            } else {
                println!("control graph connected: {connected}");
                println!("edges: {:?}", graph.edges());
                match alpha {
                    Some(a) => println!("rank condition holds for all eigenstates at alpha = {a}"),
                    None => println!("rank condition fails on the default alpha grid"),
                }
                for (d, ok) in verdicts.iter().enumerate() {
                    println!("  eigenstate {d}: {}", if *ok { "full rank" } else { "rank deficient" });
                }
            }
            Ok(connected && alpha.is_some())
        }
        Command::Bounds { model, eta, as_printed, json } => {
            let model = load_model(&model)?;
            let eta = eta.unwrap_or(model.eta());
            if !(0.0..=1.0).contains(&eta) {
                return Err(QfcError::Config(format!("eta must lie in [0, 1], got {eta}")));
            }
            let commuting = model.commutation_residual() <= 1e-12;
            let mut reports = Vec::new();
            for d in 0..model.dim() {
                let target = TargetState::eigenstate(&model, d)?;
                reports.push(bounds::bound_report(model.l(), &target, eta, model.kappa(), commuting)?);
            }
            if json {
                println!("{}", serde_json::to_string_pretty(&reports).expect("serialize"));
            } else {
                println!("eta = {eta}, commuting channel: {commuting}");
                for r in &reports {
                    let cap = if as_printed { r.capital_delta_d_as_printed } else { r.capital_delta_d };
                    println!(
                        "  d = {}: dissipation {:.6e}, delta_d {:.6e}, Delta_d {:.6e}",
                        r.d, r.dissipation_at_target, r.delta_d, cap
                    );
                }
            }
            Ok(true)
        }
        Command::Compare { config } => {
            let config = load_config(&config)?;
            let report = compare_modes(&config)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("serialize"));
            Ok(true)
        }
        Command::Verify { config, theorem } => {
            let config = load_config(&config)?;
            let which: TheoremCheck = theorem.parse()?;
            let report = harness::verify_theorem(&config, which)?;
            for line in &report.lines {
                println!(
                    "[{}] {}: {:.6e} (threshold {:.6e})",
                    if line.pass { "pass" } else { "FAIL" },
                    line.name,
                    line.value,
                    line.threshold
                );
            }
            for note in &report.notes {
                println!("note: {note}");
            }
            println!("{}: {}", report.theorem, if report.pass { "pass" } else { "FAIL" });
            Ok(report.pass)
        }
        Command::GammaScan { config, grid } => {
            let config = load_config(&config)?;
            let gammas = parse_grid(&grid)?;
            let rows = gamma_scan(&config, &gammas)?;
            println!("gamma,convergence_probability");
            for (g, p) in rows {
                println!("{g},{p}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                QfcError::Config(_) | QfcError::Io(_) | QfcError::Parse(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
