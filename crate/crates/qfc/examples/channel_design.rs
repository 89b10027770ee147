//! Measurement-channel design checks: control-graph connectivity and the
//! rank condition over the default alpha grid, contrasting a connected path
//! coupling with a block-diagonal one.

use qfc::design;
use qfc::{HermitianOperator, MeasurementChannel, SystemModel};

fn report(name: &str, model: &SystemModel) -> anyhow::Result<()> {
    let graph = design::control_graph(model.hb(), design::EDGE_TOL);
    let connected = design::is_connected(&graph);
    let alpha = design::find_alpha(model, &design::default_alpha_grid())?;
    println!("{name}: connected = {connected}, edges = {:?}", graph.edges());
    match alpha {
        Some(a) => {
            println!("  rank condition holds at alpha = {a}");
            for (d, ok) in design::rank_verdicts(model, a)?.iter().enumerate() {
                println!("    eigenstate {d}: {}", if *ok { "full rank" } else { "deficient" });
            }
        }
        None => println!("  rank condition fails on the whole grid"),
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let h0 = HermitianOperator::diagonal(&[0.0, 1.0, 2.0, 3.5]);
    let l = MeasurementChannel::diagonal(&[1.5, 0.5, -0.5, -1.5]);

    let path = SystemModel::new(
        h0.clone(),
        design::path_hb(4, &[1.0, 0.7, 1.3])?,
        l.clone(),
        1.0,
        1.0,
    )?;
    report("path coupling", &path)?;

    // Two disconnected pairs: necessity of connectivity.
    let mut blocks = qfc::CMatrix::zeros(4, 4);
    blocks[(0, 1)] = 1.0.into();
    blocks[(1, 0)] = 1.0.into();
    blocks[(2, 3)] = 1.0.into();
    blocks[(3, 2)] = 1.0.into();
    let disconnected = SystemModel::new(h0, HermitianOperator::new(blocks)?, l, 1.0, 1.0)?;
    report("block-diagonal coupling", &disconnected)?;
    Ok(())
}
