//! Sweep the fixed EI margin on camelback and measure how much worse (loss)
//! or better (gain) each margin does than AEI.

use ctxbo::report::render_sweep_plot;
use ctxbo::runner::desk_epsilon_grid;
use ctxbo::{epsilon_sweep, AcquisitionSpec, ExperimentConfig, Objective};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut base = ExperimentConfig::new(Objective::camelback(), AcquisitionSpec::aei());
    base.budget = 15;
    let grid = desk_epsilon_grid();
    let sweep = epsilon_sweep(&base, &grid, 3)?;
    let last = |t: &Vec<f64>| *t.last().expect("non-empty trace");
    for (eps, t) in sweep.epsilons.iter().zip(&sweep.eps_traces) {
        println!("EI-{eps:<4} final mean {:.5}", last(t));
    }
    println!("AEI     final mean {:.5}", last(&sweep.aei_trace));
    let area = sweep.risk_area();
    println!("risk area: loss {:.4}, gain {:.4}", area.loss, area.gain);
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, render_sweep_plot(&sweep, "camelback"))?;
    }
    Ok(())
}
