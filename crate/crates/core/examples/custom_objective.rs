//! Maximize a user-supplied closure and read the contextual variance that
//! AEI used at each step.

use ctxbo::{run_bo, AcquisitionSpec, Bounds, Direction, ExperimentConfig, Objective};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bounds = Bounds::new(vec![(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)])?;
    let objective = Objective::from_fn("bump", bounds, Direction::Maximize, |x| {
        let d2: f64 = x.iter().zip([0.2, 0.7, 0.5]).map(|(a, c)| (a - c).powi(2)).sum();
        (-8.0 * d2).exp() + 0.3 * (-40.0 * (x[0] - 0.8).powi(2)).exp()
    });
    let mut config = ExperimentConfig::new(objective, AcquisitionSpec::aei());
    config.budget = 25;
    let trace = run_bo(&config, 11)?;
    for r in trace.records.iter().skip(config.n_init) {
        println!(
            "iter {:>2}  y {:.4}  best {:.4}  c_v {:.5}",
            r.iteration,
            r.value,
            r.best_so_far,
            r.contextual_variance.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
