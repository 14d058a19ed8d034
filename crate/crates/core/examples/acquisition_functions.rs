//! Compare PI, EI and AEI scores on the same posterior summaries, and show
//! how the contextual margin grows with model uncertainty.

use ctxbo::acquisition::{contextual_variance, score};
use ctxbo::{AcquisitionSpec, MarginConvention, PosteriorSummary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let incumbent = 1.2;
    let points: Vec<(f64, f64)> = vec![(1.0, 0.05), (1.1, 0.3), (1.25, 0.1), (0.6, 1.2), (1.5, 0.0)];

    for mpv in [0.0, 0.2, 1.0] {
        println!("mean posterior variance {mpv}: c_v = {:.4}", contextual_variance(mpv, incumbent));
        let batch: Vec<PosteriorSummary> = points
            .iter()
            .map(|&(mean, sigma)| PosteriorSummary {
                mean,
                sigma,
                incumbent,
                mean_posterior_variance: mpv,
            })
            .collect();
        let specs = [
            AcquisitionSpec::pi(0.0)?,
            AcquisitionSpec::ei(0.0)?,
            AcquisitionSpec::ei(0.3)?,
            AcquisitionSpec::aei(),
            AcquisitionSpec::aei().with_convention(MarginConvention::PaperLiteral),
        ];
        for spec in specs {
            let s = score(&batch, &spec)?;
            let cells: Vec<String> = s.iter().map(|v| format!("{v:8.4}")).collect();
            println!("  {:<22} {}", format!("{spec} ({})", spec.convention().name()), cells.join(" "));
        }
    }
    Ok(())
}
