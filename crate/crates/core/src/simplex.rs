//! Box-constrained Nelder-Mead minimization.
//!
//! Trial points are clipped onto the box before evaluation, so every point the
//! objective sees is feasible. Non-finite objective values are treated as `+inf`.
//! The returned point is the best one ever evaluated, which means the result is
//! never worse than the starting point.

use crate::bounds::Bounds;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_evals: usize,
    /// Initial edge length as a fraction of each dimension's range.
    pub initial_step: f64,
    /// Absolute spread of simplex values below which the search stops.
    pub f_tol: f64,
    /// Simplex extent, as a fraction of each range, below which the search stops.
    pub x_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_evals: 400,
            initial_step: 0.1,
            f_tol: 1e-8,
            x_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

struct Tracker<F> {
    f: F,
    evals: usize,
    best_x: Vec<f64>,
    best_f: f64,
}

impl<F: FnMut(&[f64]) -> f64> Tracker<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v < self.best_f {
            self.best_f = v;
            self.best_x.clear();
            self.best_x.extend_from_slice(x);
        }
        v
    }
}

pub fn minimize<F>(f: F, x0: &[f64], bounds: &Bounds, opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = bounds.dim();
    assert_eq!(x0.len(), n, "starting point dimension must match bounds");

    let mut start = x0.to_vec();
    bounds.clip(&mut start);

    let mut t = Tracker {
        f,
        evals: 0,
        best_x: start.clone(),
        best_f: f64::INFINITY,
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = t.eval(&start);
    simplex.push((start.clone(), f0));
    for i in 0..n {
        let mut p = start.clone();
        let step = opts.initial_step * bounds.range(i);
        p[i] = if p[i] + step <= bounds.upper(i) {
            p[i] + step
        } else {
            p[i] - step
        };
        bounds.clip(&mut p);
        let fp = t.eval(&p);
        simplex.push((p, fp));
    }

    let (alpha, gamma, rho, shrink) = (1.0, 2.0, 0.5, 0.5);
    let mut centroid = vec![0.0; n];

    while t.evals < opts.max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));

        let spread = simplex[n].1 - simplex[0].1;
        let extent = simplex[1..]
            .iter()
            .flat_map(|(p, _)| {
                p.iter()
                    .zip(&simplex[0].0)
                    .enumerate()
                    .map(|(i, (a, b))| (a - b).abs() / bounds.range(i))
            })
            .fold(0.0, f64::max);
        if (spread.is_finite() && spread <= opts.f_tol) && extent <= opts.x_tol.max(1e-15)
            || extent <= 1e-15
        {
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (p, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }

        let along = |coef: f64, from: &[f64]| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(from)
                .map(|(c, w)| c + coef * (c - w))
                .collect();
            bounds.clip(&mut p);
            p
        };

        let worst = simplex[n].0.clone();
        let xr = along(alpha, &worst);
        let fr = t.eval(&xr);

        if fr < simplex[0].1 {
            let xe = along(gamma, &worst);
            let fe = t.eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            // contraction: outside if the reflection helped at all, else inside
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(alpha * rho, &worst);
                let fc = t.eval(&xc);
                (xc, fc)
            } else {
                let xc = along(-rho, &worst);
                let fc = t.eval(&xc);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for (p, fp) in simplex.iter_mut().skip(1) {
                    for (v, b) in p.iter_mut().zip(&best) {
                        *v = b + shrink * (*v - b);
                    }
                    bounds.clip(p);
                    *fp = t.eval(p);
                }
            }
        }
    }

    SimplexResult {
        x: t.best_x,
        value: t.best_f,
        evals: t.evals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_quadratic_minimum() {
        let b = Bounds::new(vec![(-5.0, 5.0), (-5.0, 5.0)]).unwrap();
        let r = minimize(
            |x| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2),
            &[4.0, 4.0],
            &b,
            &SimplexOptions::default(),
        );
        assert!((r.x[0] - 1.0).abs() < 1e-3, "{r:?}");
        assert!((r.x[1] + 2.0).abs() < 1e-3, "{r:?}");
    }

    #[test]
    fn respects_bounds_when_minimum_is_outside() {
        let b = Bounds::new(vec![(0.0, 1.0)]).unwrap();
        let mut seen_outside = false;
        let r = minimize(
            |x| {
                seen_outside |= !(0.0..=1.0).contains(&x[0]);
                (x[0] + 3.0).powi(2)
            },
            &[0.7],
            &b,
            &SimplexOptions::default(),
        );
        assert!(!seen_outside);
        assert!(r.x[0].abs() < 1e-6);
    }

    #[test]
    fn never_worse_than_start_and_respects_eval_cap() {
        let b = Bounds::new(vec![(-1.0, 1.0); 3]).unwrap();
        let f = |x: &[f64]| x.iter().map(|v| (5.0 * v).sin()).sum::<f64>();
        let x0 = [0.2, -0.3, 0.9];
        let opts = SimplexOptions {
            max_evals: 25,
            ..Default::default()
        };
        let r = minimize(f, &x0, &b, &opts);
        assert!(r.value <= f(&x0));
        // one iteration may overshoot by at most a shrink step
        assert!(r.evals <= 25 + 3 + 2);
    }

    #[test]
    fn nan_is_treated_as_infinite() {
        let b = Bounds::new(vec![(-1.0, 1.0)]).unwrap();
        let r = minimize(
            |x| if x[0] > 0.0 { f64::NAN } else { x[0] * x[0] },
            &[-0.5],
            &b,
            &SimplexOptions::default(),
        );
        assert!(r.value.is_finite());
        assert!(r.x[0] <= 0.0);
    }
}
