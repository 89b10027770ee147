//! Synthesize a homodyne measurement record along one trajectory and show
//! that the innovation part of the record is the driving noise: the record
//! drifts with the measured observable while the innovations stay centered.

use qfc::dynamics::{sme_step, synthesize_measurement_record, NoiseStream};
use qfc::harness::default_qubit_config;
use qfc::DensityMatrix;

fn main() -> anyhow::Result<()> {
    let config = default_qubit_config();
    let model = config.model.build()?;
    let dt = config.dt;
    let noise = NoiseStream::new(config.seed, 0, dt);

    let mut rho = DensityMatrix::basis_state(2, 0);
    let mut y = 0.0;
    let mut w = 0.0;
    println!("t,Y,W,signal");
    for k in 0..(5.0 / dt) as u64 {
        let dw = noise.increment(k);
        let dy = synthesize_measurement_record(&model, &rho, dw, dt);
        y += dy;
        w += dw;
        rho = sme_step(&model, &rho, 0.0, dt, dw)?;
        if k % 500 == 0 {
            let l = model.l().data();
            let signal = ((l + l.adjoint()) * rho.data()).trace().re;
            println!("{:.1},{y:.4},{w:.4},{signal:.4}", k as f64 * dt);
        }
    }
    // On the eigenstate the signal is constant 2 L_00 = 2, so Y ~ 2 sqrt(kappa) t + W.
    println!("# final: Y = {y:.3}, W = {w:.3}, Y - W = {:.3}", y - w);
    Ok(())
}
