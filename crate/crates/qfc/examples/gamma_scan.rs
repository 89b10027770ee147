//! Sweep the switching threshold gamma and report the empirical
//! convergence probability for the default qubit model.

use qfc::harness::{default_qubit_config, gamma_scan};

fn main() -> anyhow::Result<()> {
    let mut config = default_qubit_config();
    config.trajectories = 50;
    config.horizon = 25.0;
    let gammas: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    println!("gamma,convergence_probability");
    for (g, p) in gamma_scan(&config, &gammas)? {
        println!("{g:.1},{p:.3}");
    }
    Ok(())
}
