//! Draw Sobol candidates on a box and check their coverage against uniform
//! random points.

use ctxbo::sampling::sobol_points;
use ctxbo::{Bounds, SobolStream};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn empty_cells(points: &[Vec<f64>], bounds: &Bounds, k: usize) -> usize {
    let mut seen = vec![false; k * k];
    for p in points {
        let cell = |i: usize| {
            let (l, u) = bounds.pairs()[i];
            (((p[i] - l) / (u - l) * k as f64) as usize).min(k - 1)
        };
        seen[cell(0) * k + cell(1)] = true;
    }
    seen.iter().filter(|s| !**s).count()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bounds = Bounds::new(vec![(-5.0, 10.0), (0.0, 15.0)])?;
    let mut stream = SobolStream::new(2)?;
    let first = sobol_points(&mut stream, 4, &bounds)?;
    for p in &first.points {
        println!("({:7.3}, {:7.3})", p[0], p[1]);
    }

    let mut stream = SobolStream::new(2)?;
    let sobol = sobol_points(&mut stream, 256, &bounds)?.points;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let random: Vec<Vec<f64>> = (0..256)
        .map(|_| bounds.pairs().iter().map(|(l, u)| rng.random_range(*l..*u)).collect())
        .collect();
    println!("empty cells of a 16x16 grid after 256 points:");
    println!("  sobol  {}", empty_cells(&sobol, &bounds, 16));
    println!("  random {}", empty_cells(&random, &bounds, 16));
    Ok(())
}
