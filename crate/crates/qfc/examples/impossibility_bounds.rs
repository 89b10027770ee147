//! Impossibility certificates for a channel that does not commute with the
//! free Hamiltonian: per-eigenstate delta_d / Delta_d and the dependence of
//! the feedback bound on the detection efficiency.

use num_complex::Complex64;

use qfc::bounds;
use qfc::{CMatrix, HermitianOperator, MeasurementChannel, TargetState};

fn main() -> anyhow::Result<()> {
    let c = |re: f64| Complex64::new(re, 0.0);
    let h0 = HermitianOperator::diagonal(&[0.0, 1.0]);
    // sigma_x couples the two eigenstates: [H0, L] != 0.
    let l = MeasurementChannel::new(CMatrix::from_row_slice(
        2,
        2,
        &[c(0.0), c(1.0), c(1.0), c(0.0)],
    ))?;

    for d in 0..2 {
        let target = TargetState::new(2, d, l.data()[(d, d)])?;
        let report = bounds::bound_report(&l, &target, 0.5, 1.0, false)?;
        println!(
            "d = {d}: dissipation {:.4}, delta_d {:.4e}, Delta_d(eta=0.5) {:.4e}",
            report.dissipation_at_target, report.delta_d, report.capital_delta_d
        );
    }

    let (d, _) = bounds::worst_eigenstate(&l, &h0, 0.5)?;
    println!("\nworst eigenstate: {d}");
    println!("eta,Delta_d");
    let target = TargetState::new(2, d, l.data()[(d, d)])?;
    for k in 0..=10 {
        let eta = k as f64 / 10.0;
        println!("{eta:.1},{:.6e}", bounds::capital_delta_d(&l, &target, eta)?);
    }
    Ok(())
}
