//! Feedback against both open-loop baselines from the maximally mixed
//! state: feedback purifies and reaches the target; the unitary model
//! conserves entropy and the ensemble-average model never gains purity.

use qfc::harness::{compare_modes, default_qubit_config};

fn main() -> anyhow::Result<()> {
    let mut config = default_qubit_config();
    config.trajectories = 50;
    let report = compare_modes(&config)?;

    println!(
        "feedback:     p(converge) = {:.2}, best final D = {:.2e}, final entropy = {:.2e}",
        report.mfc_convergence_probability, report.mfc.final_distance, report.mfc.final_entropy
    );
    println!(
        "unitary OLC:  final D = {:.3}, entropy = {:.3} (drift {:.1e})",
        report.unitary_olc.final_distance,
        report.unitary_olc.final_entropy,
        report.unitary_entropy_drift
    );
    println!(
        "master OLC:   final D = {:.3}, purity = {:.3} (max step gain {:.1e})",
        report.master_olc.final_distance,
        report.master_olc.final_purity,
        report.master_max_purity_step_increase
    );
    Ok(())
}
