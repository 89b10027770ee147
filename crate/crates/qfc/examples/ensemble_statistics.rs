//! Monte Carlo ensemble of switching-law trajectories for the default
//! qutrit model: convergence probability with a 95% Wilson interval and the
//! mean distance-to-target curve.

use qfc::harness::{default_qutrit_config, run_ensemble};

fn main() -> anyhow::Result<()> {
    let mut config = default_qutrit_config();
    config.trajectories = 100;
    let out = run_ensemble(&config)?;
    let r = &out.result;

    println!(
        "converged {}/{} (p = {:.3}, 95% CI [{:.3}, {:.3}], {} blown up)",
        r.converged,
        r.final_distances.len(),
        r.convergence_probability,
        r.wilson_low,
        r.wilson_high,
        r.blown_up
    );
    println!("t,mean_D");
    for (t, d) in r.times.iter().zip(&r.mean_distance) {
        println!("{t:.2},{d:.6}");
    }
    Ok(())
}
