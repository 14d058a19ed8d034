//! Fit a GP to noisy samples of a 1-D function, tune its hyperparameters by
//! marginal likelihood and print predictions with error bars.

use ctxbo::gp::{fit_posterior, optimize_hyperparameters};
use ctxbo::{Bounds, Dataset, KernelParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bounds = Bounds::new(vec![(0.0, 6.0)])?;
    let mut data = Dataset::new(bounds.clone());
    for i in 0..8 {
        let x = 0.4 + 0.7 * i as f64;
        data.push(vec![x], x.sin() + 0.3 * x)?;
    }

    let init = KernelParams::default_for(&bounds);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let params = optimize_hyperparameters(&data, &init, 5, &mut rng)?;
    println!(
        "lengthscale {:.4}, signal variance {:.4}, noise variance {:.2e}",
        params.lengthscales[0], params.signal_variance, params.noise_variance
    );

    let gp = fit_posterior(&data, &params)?;
    println!("log marginal likelihood {:.4}", gp.log_marginal_likelihood());
    let queries: Vec<Vec<f64>> = (0..=12).map(|i| vec![i as f64 * 0.5]).collect();
    let p = gp.predict(&queries)?;
    println!("{:>6} {:>10} {:>10} {:>10}", "x", "truth", "mean", "2 sd");
    for (q, (m, v)) in queries.iter().zip(p.means.iter().zip(&p.variances)) {
        let truth = q[0].sin() + 0.3 * q[0];
        println!("{:>6.2} {:>10.4} {:>10.4} {:>10.4}", q[0], truth, m, 2.0 * v.sqrt());
    }
    Ok(())
}
