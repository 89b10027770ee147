//! Stabilize a qubit eigenstate with the switching feedback law and print
//! the sampled trajectory as CSV.

use qfc::dynamics::{simulate_trajectory, NoiseStream};
use qfc::harness::{default_qubit_config, make_controller};
use qfc::TargetState;

fn main() -> anyhow::Result<()> {
    let config = default_qubit_config();
    let model = config.model.build()?;
    let target = TargetState::eigenstate(&model, config.target)?;
    let rho0 = config.initial_state.build(model.dim())?;
    let mut controller = make_controller(&config.controller, &model, &target, &rho0)?;
    let noise = NoiseStream::new(config.seed, 0, config.dt);

    let record = simulate_trajectory(
        &model,
        controller.as_mut(),
        &target,
        &rho0,
        config.horizon,
        config.dt,
        &noise,
        config.sample_every,
        config.convergence_epsilon,
    )?;

    print!("{}", record.to_csv());
    eprintln!(
        "converged: {} (final distance {:.3e})",
        record.converged, record.final_distance
    );
    Ok(())
}
