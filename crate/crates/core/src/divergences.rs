//! Information measures over finite alphabets: KL divergence, the
//! `Σ p0^s p1^(1-s)` sum, Chernoff information and the tilted pmf.
//!
//! Symbols outside the support contribute nothing to any sum. On-support
//! products are evaluated as `exp(s ln p0 + (1-s) ln p1)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::Pmf;
use crate::optimize::concave_argmax_by_slope;

/// Bracket width at which the Chernoff search over `s` stops.
pub const CHERNOFF_S_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernoffResult {
    /// `max_s -ln Σ p0^s p1^(1-s)`, in nats.
    pub value: f64,
    /// Maximizing `s`; 0.5 by convention when the pmfs coincide.
    pub s_star: f64,
}

fn check_shared_support(p0: &Pmf, p1: &Pmf) -> Result<()> {
    if p0.len() != p1.len() {
        return Err(invalid(format!("alphabet sizes differ: {} vs {}", p0.len(), p1.len())));
    }
    match p0
        .probs()
        .iter()
        .zip(p1.probs())
        .position(|(a, b)| (*a == 0.0) != (*b == 0.0))
    {
        Some(y) => Err(Error::SupportDiffers(y)),
        None => Ok(()),
    }
}

fn check_s(s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(invalid(format!("s must lie in [0, 1], got {s}")))
    }
}

/// `D(p || q) = Σ p ln(p/q)`, with `0 ln(0/q) = 0`.
pub fn kl(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.len() != q.len() {
        return Err(invalid(format!("alphabet sizes differ: {} vs {}", p.len(), q.len())));
    }
    let mut total = 0.0;
    for (y, (&py, &qy)) in p.probs().iter().zip(q.probs()).enumerate() {
        if py == 0.0 {
            continue;
        }
        if qy == 0.0 {
            return Err(Error::NotAbsolutelyContinuous(y));
        }
        total += py * (py.ln() - qy.ln());
    }
    // Rounding can leave -1e-17 for p == q.
    Ok(total.max(0.0))
}

/// `Σ_y p0(y)^s p1(y)^(1-s)` for pmfs with a shared support.
pub fn renyi_sum(p0: &Pmf, p1: &Pmf, s: f64) -> Result<f64> {
    check_shared_support(p0, p1)?;
    check_s(s)?;
    Ok(renyi_sum_unchecked(p0.probs(), p1.probs(), s))
}

pub(crate) fn renyi_sum_unchecked(p0: &[f64], p1: &[f64], s: f64) -> f64 {
    p0.iter()
        .zip(p1)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| (s * a.ln() + (1.0 - s) * b.ln()).exp())
        .sum()
}

/// Chernoff information `max_{s∈[0,1]} -ln Σ p0^s p1^(1-s)`.
///
/// The objective is concave in `s`; its derivative is `-E_{b_s}[ln(p0/p1)]`
/// under the tilted pmf `b_s`, and `s_star` is found by bisection on its sign.
pub fn chernoff_information(p0: &Pmf, p1: &Pmf) -> Result<ChernoffResult> {
    check_shared_support(p0, p1)?;
    Ok(chernoff_unchecked(p0.probs(), p1.probs()))
}

pub(crate) fn chernoff_unchecked(p0: &[f64], p1: &[f64]) -> ChernoffResult {
    if p0 == p1 {
        return ChernoffResult {
            value: 0.0,
            s_star: 0.5,
        };
    }
    let s_star = concave_argmax_by_slope(|s| renyi_slope(p0, p1, s), 0.0, 1.0, CHERNOFF_S_TOLERANCE);
    let value = -renyi_sum_unchecked(p0, p1, s_star).ln();
    ChernoffResult {
        value: value.max(0.0),
        s_star,
    }
}

/// `d/ds [-ln Σ p0^s p1^(1-s)]`.
fn renyi_slope(p0: &[f64], p1: &[f64], s: f64) -> f64 {
    let mut total = 0.0;
    let mut moment = 0.0;
    for (a, b) in p0.iter().zip(p1).filter(|(a, _)| **a > 0.0) {
        let (la, lb) = (a.ln(), b.ln());
        let w = (s * la + (1.0 - s) * lb).exp();
        total += w;
        moment += w * (la - lb);
    }
    -moment / total
}

/// The normalized geometric interpolation `b_s ∝ p0^s p1^(1-s)`.
pub fn tilted_pmf(p0: &Pmf, p1: &Pmf, s: f64) -> Result<Pmf> {
    check_shared_support(p0, p1)?;
    check_s(s)?;
    let weights: Vec<f64> = p0
        .probs()
        .iter()
        .zip(p1.probs())
        .map(|(a, b)| {
            if *a > 0.0 {
                (s * a.ln() + (1.0 - s) * b.ln()).exp()
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(invalid("tilted pmf has zero mass"));
    }
    Pmf::new(weights.into_iter().map(|w| w / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bern(p: f64) -> Pmf {
        Pmf::bernoulli(p).unwrap()
    }

    /// Exhaustive scan of `s` on a uniform grid.
    fn grid_chernoff(p0: &Pmf, p1: &Pmf, step: f64) -> (f64, f64) {
        let n = (1.0 / step).round() as usize;
        (0..=n)
            .map(|k| {
                let s = k as f64 / n as f64;
                let v: f64 = p0
                    .probs()
                    .iter()
                    .zip(p1.probs())
                    .filter(|(a, _)| **a > 0.0)
                    .map(|(a, b)| a.powf(s) * b.powf(1.0 - s))
                    .sum();
                (s, -v.ln())
            })
            .fold((0.0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
    }

    #[test]
    fn kl_examples() {
        let p = bern(0.3);
        assert_eq!(kl(&p, &p).unwrap(), 0.0);
        // (1 - 2ε) ln((1 - ε)/ε) at ε = 0.25, summed term by term.
        let direct = 0.75 * (0.75f64 / 0.25).ln() + 0.25 * (0.25f64 / 0.75).ln();
        let got = kl(&bern(0.25), &bern(0.75)).unwrap();
        assert!((got - direct).abs() < 1e-15);
        assert!((got - 0.549_306_1).abs() < 5e-8);
        assert!(matches!(kl(&bern(0.5), &bern(0.0)), Err(Error::NotAbsolutelyContinuous(1))));
        // q(y) = 0 together with p(y) = 0 is fine.
        assert!(kl(&bern(0.0), &bern(0.5)).is_ok());
    }

    #[test]
    fn renyi_sum_examples() {
        let p0 = bern(0.25);
        let p1 = bern(0.75);
        assert!((renyi_sum(&p0, &p1, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((renyi_sum(&p0, &p1, 0.0).unwrap() - 1.0).abs() < 1e-15);
        let expected = 2.0 * 0.1875f64.sqrt();
        assert!((renyi_sum(&p0, &p1, 0.5).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.866_025_4).abs() < 5e-8);
        assert!(matches!(renyi_sum(&bern(0.0), &bern(0.5), 0.5), Err(Error::SupportDiffers(1))));
        assert!(renyi_sum(&p0, &p1, 1.5).is_err());
    }

    #[test]
    fn chernoff_examples() {
        let same = chernoff_information(&bern(0.3), &bern(0.3)).unwrap();
        assert_eq!(same.value, 0.0);
        assert_eq!(same.s_star, 0.5);

        let c = chernoff_information(&bern(0.25), &bern(0.75)).unwrap();
        let (s_grid, v_grid) = grid_chernoff(&bern(0.25), &bern(0.75), 1e-6);
        assert!((c.value - v_grid).abs() < 1e-9);
        assert!((c.value - 0.143_841_0).abs() < 5e-8);
        assert!((c.s_star - 0.5).abs() < 1e-9);
        assert!((s_grid - 0.5).abs() < 1e-6);

        let c = chernoff_information(&bern(0.1), &bern(0.9)).unwrap();
        assert!((c.value - (-(0.6f64).ln())).abs() < 1e-12);
        assert!((c.value - 0.510_825_6).abs() < 5e-8);
    }

    #[test]
    fn chernoff_value_matches_objective_at_s_star() {
        let p0 = Pmf::new(vec![0.2, 0.5, 0.3]).unwrap();
        let p1 = Pmf::new(vec![0.6, 0.1, 0.3]).unwrap();
        let c = chernoff_information(&p0, &p1).unwrap();
        let f = -renyi_sum(&p0, &p1, c.s_star).unwrap().ln();
        assert!((c.value - f).abs() <= 1e-12);
    }

    #[test]
    fn tilted_examples() {
        let p0 = bern(0.25);
        let p1 = bern(0.75);
        assert_eq!(tilted_pmf(&p0, &p1, 1.0).unwrap(), p0);
        assert_eq!(tilted_pmf(&p0, &p1, 0.0).unwrap(), p1);
        let half = tilted_pmf(&p0, &p1, 0.5).unwrap();
        assert!((half.get(0) - 0.5).abs() < 1e-15);
        let p = Pmf::new(vec![0.2, 0.3, 0.5]).unwrap();
        let t = tilted_pmf(&p, &p, 0.37).unwrap();
        for (a, b) in t.probs().iter().zip(p.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    fn arb_pmf_pair() -> impl Strategy<Value = (Pmf, Pmf)> {
        (2usize..5).prop_flat_map(|j| {
            (
                proptest::collection::vec(0.001f64..1.0, j),
                proptest::collection::vec(0.001f64..1.0, j),
            )
                .prop_map(|(a, b)| {
                    let norm = |v: Vec<f64>| {
                        let s: f64 = v.iter().sum();
                        Pmf::new(v.iter().map(|x| x / s).collect()).unwrap()
                    };
                    (norm(a), norm(b))
                })
        })
    }

    proptest! {
        #[test]
        fn kl_nonnegative_and_zero_on_diagonal((p, q) in arb_pmf_pair()) {
            let d = kl(&p, &q).unwrap();
            prop_assert!(d >= 0.0);
            prop_assert_eq!(kl(&p, &p).unwrap(), 0.0);
            if p != q {
                prop_assert!(d > 0.0);
            }
        }

        #[test]
        fn renyi_sum_bounded_and_log_convex((p, q) in arb_pmf_pair()) {
            let grid: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
            for &s in &grid {
                prop_assert!(renyi_sum(&p, &q, s).unwrap() <= 1.0 + 1e-12);
            }
            for w in grid.windows(3) {
                let l = |s| renyi_sum(&p, &q, s).unwrap().ln();
                prop_assert!(l(w[1]) <= 0.5 * (l(w[0]) + l(w[2])) + 1e-12);
            }
        }

        #[test]
        fn tilted_pmf_equalizes_divergences((p, q) in arb_pmf_pair()) {
            prop_assume!(p != q);
            let c = chernoff_information(&p, &q).unwrap();
            let b = tilted_pmf(&p, &q, c.s_star).unwrap();
            let d0 = kl(&b, &p).unwrap();
            let d1 = kl(&b, &q).unwrap();
            prop_assert!((d0 - d1).abs() < 1e-6, "{d0} vs {d1}");
        }
    }
}
