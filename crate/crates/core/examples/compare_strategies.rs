//! Repeat AEI and two fixed-margin EI variants on Branin and print the
//! summary table, Z scores and an SVG of the bootstrap bands.
//!
//! Usage: `cargo run --example compare_strategies -- [repeats] [plot.svg]`

use ctxbo::report::{emit_summary, render_plot, ReportView};
use ctxbo::{run_study, AcquisitionSpec, ExperimentConfig, Objective};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let repeats: usize = args.next().map_or(Ok(5), |s| s.parse())?;
    let plot = args.next();

    let mut base = ExperimentConfig::new(Objective::branin(), AcquisitionSpec::aei());
    base.budget = 30;
    base.repeats = repeats;
    let configs = vec![
        base.clone(),
        base.with_acquisition(AcquisitionSpec::ei(0.0)?),
        base.with_acquisition(AcquisitionSpec::ei(0.3)?),
    ];
    let study = run_study(&configs)?;
    let view = ReportView::from_study(&study);
    print!("{}", emit_summary(&view));
    if let Some(path) = plot {
        std::fs::write(&path, render_plot(&view))?;
        println!("plot written to {path}");
    }
    Ok(())
}
