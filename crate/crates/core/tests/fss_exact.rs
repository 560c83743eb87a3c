//! Fixed-sample error rates against exact enumeration.
//!
//! With an open-loop schedule the control counts are fixed, so the number of
//! `1`s seen under each control is binomial and the exact error probability
//! is a finite sum over count vectors.

use actsense::fss::{FssConfig, FssPolicy};
use actsense::model::table1_model;
use actsense::montecarlo::estimate_fss;
use actsense::policies::open_loop_schedule;
use actsense::MixedStrategy;

fn binomial(k: usize, x: usize, p: f64) -> f64 {
    let mut c = 1.0;
    for t in 0..x {
        c *= (k - t) as f64 / (t + 1) as f64;
    }
    c * p.powi(x as i32) * (1.0 - p).powi((k - x) as i32)
}

/// Exact error under `truth` for the three-sensor example with `k[u]` looks
/// at sensor `u`. Sensor `u` reads `1` with probability `eps` if `u` is the
/// true hypothesis and `1 - eps` otherwise. Ties go to the smallest index.
fn exact_error(eps: f64, k: [usize; 3], truth: usize) -> f64 {
    let mut error = 0.0;
    for x0 in 0..=k[0] {
        for x1 in 0..=k[1] {
            for x2 in 0..=k[2] {
                let x = [x0, x1, x2];
                let prob: f64 = (0..3)
                    .map(|u| binomial(k[u], x[u], if u == truth { eps } else { 1.0 - eps }))
                    .product();
                // Integer score: hypothesis i gains (k_i - 2 x_i) over a common
                // baseline, in units of ln((1-eps)/eps).
                let score = |i: usize| k[i] as i64 - 2 * x[i] as i64;
                let best = (0..3).max_by_key(|&i| (score(i), std::cmp::Reverse(i))).unwrap();
                if best != truth {
                    error += prob;
                }
            }
        }
    }
    error
}

#[test]
fn open_loop_error_matches_enumeration() {
    let eps = 0.3;
    let model = table1_model(eps).unwrap();
    let q = MixedStrategy::uniform(3).unwrap();
    for n in [10, 20, 31] {
        let schedule = open_loop_schedule(&q, n).unwrap();
        let mut k = [0usize; 3];
        for &u in &schedule {
            k[u] += 1;
        }
        let config = FssConfig {
            policy: FssPolicy::OpenLoop { q: q.clone() },
            n,
        };
        let trials = 40_000;
        let report = estimate_fss(&model, &config, trials, 9, 2).unwrap();
        for (truth, h) in report.hypotheses.iter().enumerate() {
            let exact = exact_error(eps, k, truth);
            let se = (exact * (1.0 - exact) / trials as f64).sqrt();
            assert!(
                (h.error - exact).abs() <= 4.0 * se,
                "n {n} truth {truth}: simulated {} exact {exact} (counts {k:?})",
                h.error
            );
            assert!(h.ci_lo <= h.error && h.error <= h.ci_hi);
        }
    }
}
