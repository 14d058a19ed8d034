//! One AEI search on the six-hump camelback, printing the trace as it
//! converges.

use ctxbo::{run_bo, AcquisitionSpec, ExperimentConfig, Objective};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = ExperimentConfig::new(Objective::camelback(), AcquisitionSpec::aei());
    config.budget = 50;
    let trace = run_bo(&config, 2024)?;
    println!("{:>4} {:>22} {:>10} {:>10} {:>10}", "iter", "x", "y", "best", "c_v");
    for r in &trace.records {
        let x = format!("({:.3}, {:.3})", r.point[0], r.point[1]);
        let cv = r.contextual_variance.map_or_else(|| "-".into(), |c| format!("{c:.4}"));
        println!("{:>4} {:>22} {:>10.5} {:>10.5} {:>10}", r.iteration, x, r.value, r.best_so_far, cv);
    }
    println!("best found {:.6} (global minimum -1.031628)", trace.final_best().unwrap_or(f64::NAN));
    Ok(())
}
