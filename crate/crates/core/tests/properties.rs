mod common;

use ctxbo::acquisition::{expected_improvement, probability_of_improvement};
use ctxbo::config::{parse_config, ResolvedConfig};
use ctxbo::gp::fit_posterior;
use ctxbo::report::{read_trace_csv, write_trace_csv, TraceRow};
use ctxbo::runner::{summarize, z_score, TraceRecord};
use ctxbo::{AcquisitionSpec, Direction, PosteriorSummary, Trace};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn summary(mean: f64, sigma: f64, incumbent: f64, mpv: f64) -> PosteriorSummary {
    PosteriorSummary {
        mean,
        sigma,
        incumbent,
        mean_posterior_variance: mpv,
    }
}

fn finite() -> impl Strategy<Value = f64> {
    -1e3..1e3f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn predictive_variance_is_bounded(seed in any::<u64>()) {
        let f = common::random_fixture(&mut ChaCha8Rng::seed_from_u64(seed));
        let gp = fit_posterior(&f.dataset(), &f.params).unwrap();
        let p = gp.predict_standardized(&f.queries).unwrap();
        for v in p.variances {
            prop_assert!(v >= 0.0);
            prop_assert!(v <= gp.prior_variance());
        }
    }

    #[test]
    fn more_data_never_adds_uncertainty(seed in any::<u64>()) {
        let f = common::random_fixture(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assume!(f.x.len() >= 2);
        let full = f.dataset();
        let mut fewer = ctxbo::Dataset::new(f.bounds.clone());
        for (x, y) in f.x.iter().zip(&f.y).take(f.x.len() - 1) {
            fewer.push(x.clone(), *y).unwrap();
        }
        let a = fit_posterior(&fewer, &f.params).unwrap().predict_standardized(&f.queries).unwrap();
        let b = fit_posterior(&full, &f.params).unwrap().predict_standardized(&f.queries).unwrap();
        for (before, after) in a.variances.iter().zip(&b.variances) {
            prop_assert!(*after <= before + 1e-9, "{after} > {before}");
        }
    }

    #[test]
    fn pi_is_a_probability(m in finite(), s in 0.0..50.0f64, f in finite(), eps in 0.0..5.0f64, mpv in 0.0..5.0f64) {
        for spec in [AcquisitionSpec::pi(eps).unwrap(), AcquisitionSpec::aei()] {
            let p = probability_of_improvement(&summary(m, s, f, mpv), &spec);
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn ei_is_monotone(m in finite(), dm in 0.0..10.0f64, s in 0.0..20.0f64, ds in 0.0..5.0f64,
                      f in finite(), eps in 0.0..2.0f64, de in 0.0..2.0f64) {
        let ei = |m: f64, s: f64, e: f64| expected_improvement(&summary(m, s, f, 0.0), &AcquisitionSpec::ei(e).unwrap());
        let base = ei(m, s, eps);
        let tol = 1e-12 * base.abs().max(1.0);
        prop_assert!(base >= 0.0);
        prop_assert!(ei(m + dm, s, eps) >= base - tol);
        prop_assert!(ei(m, s + ds, eps) >= base - tol);
        prop_assert!(ei(m, s, eps + de) <= base + tol);
    }

    #[test]
    fn z_scores_are_affine_invariant(values in prop::collection::vec(-100.0..100.0f64, 2..8),
                                     a in 0.01..100.0f64, b in -100.0..100.0f64) {
        let z = z_score(&values, Direction::Minimize);
        let shifted: Vec<f64> = values.iter().map(|v| a * v + b).collect();
        let flipped: Vec<f64> = values.iter().map(|v| -a * v + b).collect();
        let zs = z_score(&shifted, Direction::Minimize);
        let zf = z_score(&flipped, Direction::Maximize);
        for i in 0..values.len() {
            prop_assert!((0.0..=1.0).contains(&z[i]));
            prop_assert!((z[i] - zs[i]).abs() < 1e-9);
            prop_assert!((z[i] - zf[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn bands_bracket_the_mean(finals in prop::collection::vec(prop::collection::vec(-50.0..50.0f64, 4), 2..8), seed in any::<u64>()) {
        let traces: Vec<Trace> = finals
            .iter()
            .map(|vals| {
                let mut best = f64::INFINITY;
                Trace {
                    seed: 0,
                    direction: Direction::Minimize,
                    records: vals
                        .iter()
                        .enumerate()
                        .map(|(i, v)| {
                            best = best.min(*v);
                            TraceRecord {
                                iteration: i,
                                point: vec![0.0],
                                value: *v,
                                best_so_far: best,
                                contextual_variance: None,
                                mean_posterior_variance: None,
                                kernel_valid: None,
                            }
                        })
                        .collect(),
                    failures: Vec::new(),
                }
            })
            .collect();
        let s = summarize("x", &traces, 300, seed);
        for i in 0..s.mean_trace.len() {
            prop_assert!(s.band_low[i] <= s.mean_trace[i] + 1e-12);
            prop_assert!(s.band_high[i] >= s.mean_trace[i] - 1e-12);
        }
        prop_assert!(s.delta_ci >= 0.0);
    }

    #[test]
    fn trace_csv_round_trips(rows in prop::collection::vec(
        ("[A-Z]{2,4}(-[0-9]\\.[0-9])?", 0usize..20, 0usize..60,
         prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..4),
         any::<f64>().prop_filter("finite", |v| v.is_finite()),
         prop::option::of(0.0..1e6f64)),
        1..30)) {
        let rows: Vec<TraceRow> = rows
            .into_iter()
            .map(|(strategy, repeat, iteration, x, y, cv)| TraceRow {
                strategy,
                repeat,
                iteration,
                x,
                y,
                best_so_far: y,
                contextual_variance: cv,
                mean_posterior_variance: cv.map(|c| c * 0.5),
            })
            .collect();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &rows).unwrap();
        let back = read_trace_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (a, b) in back.iter().zip(&rows) {
            prop_assert_eq!(a.y.to_bits(), b.y.to_bits());
            prop_assert!(a.x.iter().zip(&b.x).all(|(p, q)| p.to_bits() == q.to_bits()));
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn config_echo_round_trips(budget in 0usize..500, repeats in 1usize..50, seed in any::<u64>(),
                               eps in 0.0..3.0f64, candidates in 1usize..5000,
                               objective in prop::sample::select(vec!["branin", "camelback", "hartmann6"])) {
        let text = format!(
            "objective = {objective}\nacquisition = ei\nepsilon = {eps}\nbudget = {budget}\nrepeats = {repeats}\nseed = {seed}\n[search]\ncandidates = {candidates}\n"
        );
        let c: ResolvedConfig = parse_config(&text).unwrap();
        prop_assert_eq!(c.strategies[0].margin().to_bits(), eps.to_bits());
        let again = parse_config(&c.to_string()).unwrap();
        prop_assert_eq!(&again, &c);
        prop_assert_eq!(again.to_string(), c.to_string());
    }
}
