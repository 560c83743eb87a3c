//! Seeded Monte Carlo estimation of error probabilities, risks and stopping
//! times, and exponent regression.
//!
//! Trial `t` under hypothesis `h` always draws from the streams keyed by
//! `(seed, h, t)`, and results are aggregated as integer counts, so reports
//! are identical for any number of worker threads. Policies run with the same
//! seed see the same observation noise trial by trial.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fss::{FssConfig, FssTest};
use crate::model::SensingModel;
use crate::rng::TrialRng;
use crate::sequential::{SequentialConfig, SequentialTest, Variant};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// What one trial reports back to the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialResult {
    pub decision: usize,
    pub samples: u64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct Tally {
    decisions: Vec<u64>,
    /// Sample counts of trials that stopped on their own.
    sum_n: u64,
    sum_n2: u128,
    truncated: u64,
}

impl Tally {
    fn new(m: usize) -> Self {
        Self {
            decisions: vec![0; m],
            ..Self::default()
        }
    }

    fn add(&mut self, r: TrialResult) {
        self.decisions[r.decision] += 1;
        if r.truncated {
            self.truncated += 1;
        } else {
            self.sum_n += r.samples;
            self.sum_n2 += u128::from(r.samples) * u128::from(r.samples);
        }
    }

    #[cfg(feature = "parallel")]
    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.decisions.iter_mut().zip(&other.decisions) {
            *a += b;
        }
        self.sum_n += other.sum_n;
        self.sum_n2 += other.sum_n2;
        self.truncated += other.truncated;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSummary {
    pub hypothesis: usize,
    pub trials: u64,
    pub errors: u64,
    /// Fraction of trials deciding anything other than `hypothesis`.
    pub error: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// How often each hypothesis was decided.
    pub decisions: Vec<u64>,
    /// Mean and standard error of the stopping time over non-truncated
    /// trials (sequential tests only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se_n: Option<f64>,
    pub truncated: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSummary {
    pub hypothesis: usize,
    /// `Σ_{j≠i} π(j) · (fraction of truth-j trials deciding i)`.
    pub estimate: f64,
    pub half_width: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub seed: u64,
    pub trials: u64,
    pub config: serde_json::Value,
    pub hypotheses: Vec<HypothesisSummary>,
    pub max_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub risks: Option<Vec<RiskSummary>>,
    pub truncated: u64,
}

/// Wilson score interval for `successes` out of `n` at 95%. With no
/// successes the one-sided rule of three `[0, 3/n]` is used instead.
pub fn wilson_ci(successes: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    if successes == 0 {
        return (0.0, (3.0 / n as f64).min(1.0));
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

/// Risk estimates from a decision table: `counts[j][i]` is the number of
/// truth-`j` trials that decided `i`, and `trials[j]` their total.
pub fn risk_estimates(counts: &[Vec<u64>], trials: &[u64], prior: &[f64]) -> Vec<RiskSummary> {
    let m = prior.len();
    let z2 = Z95 * Z95;
    (0..m)
        .map(|i| {
            let mut estimate = 0.0;
            let mut variance = 0.0;
            for j in (0..m).filter(|&j| j != i) {
                let n = trials[j] as f64;
                let x = counts[j][i] as f64;
                estimate += prior[j] * x / n;
                // Agresti–Coull adjusted proportion keeps the width positive
                // when no errors were seen.
                let adjusted = (x + z2 / 2.0) / (n + z2);
                variance += prior[j] * prior[j] * adjusted * (1.0 - adjusted) / (n + z2);
            }
            let half_width = Z95 * variance.sqrt();
            RiskSummary {
                hypothesis: i,
                estimate,
                half_width,
                ci_lo: (estimate - half_width).max(0.0),
                ci_hi: estimate + half_width,
            }
        })
        .collect()
}

/// Runs `trials` trials per hypothesis with `run(truth, rng)` and summarizes
/// them. `threads <= 1` runs serially; larger values use a worker pool.
/// `sequential` adds stopping-time statistics; `prior` adds risk estimates.
#[allow(clippy::too_many_arguments)]
pub fn estimate_with<F>(
    hypotheses: usize,
    trials: u64,
    seed: u64,
    threads: usize,
    sequential: bool,
    prior: Option<&[f64]>,
    config: serde_json::Value,
    run: F,
) -> Result<SimReport>
where
    F: Fn(usize, &mut TrialRng) -> TrialResult + Sync,
{
    if trials == 0 {
        return Err(invalid("trials must be positive"));
    }
    if hypotheses == 0 {
        return Err(invalid("no hypotheses to simulate"));
    }
    let tallies: Vec<Tally> = (0..hypotheses)
        .map(|h| tally_hypothesis(hypotheses, h, trials, seed, threads, &run))
        .collect();

    let summaries: Vec<HypothesisSummary> = tallies
        .iter()
        .enumerate()
        .map(|(h, t)| {
            let errors = trials - t.decisions[h];
            let (ci_lo, ci_hi) = wilson_ci(errors, trials);
            let stopped = trials - t.truncated;
            let (mean_n, se_n) = if sequential && stopped > 0 {
                let n = stopped as f64;
                let mean = t.sum_n as f64 / n;
                let se = if stopped > 1 {
                    // Exact integer sum of squared deviations, times n.
                    let scaled = t.sum_n2 * u128::from(stopped) - u128::from(t.sum_n) * u128::from(t.sum_n);
                    (scaled as f64 / (n * (n - 1.0)) / n).sqrt()
                } else {
                    0.0
                };
                (Some(mean), Some(se))
            } else {
                (None, None)
            };
            HypothesisSummary {
                hypothesis: h,
                trials,
                errors,
                error: errors as f64 / trials as f64,
                ci_lo,
                ci_hi,
                decisions: t.decisions.clone(),
                mean_n,
                se_n,
                truncated: t.truncated,
            }
        })
        .collect();

    let risks = prior.map(|p| {
        let counts: Vec<Vec<u64>> = tallies.iter().map(|t| t.decisions.clone()).collect();
        risk_estimates(&counts, &vec![trials; hypotheses], p)
    });
    Ok(SimReport {
        seed,
        trials,
        config,
        max_error: summaries.iter().map(|s| s.error).fold(0.0, f64::max),
        truncated: summaries.iter().map(|s| s.truncated).sum(),
        hypotheses: summaries,
        risks,
    })
}

fn tally_hypothesis<F>(m: usize, h: usize, trials: u64, seed: u64, threads: usize, run: &F) -> Tally
where
    F: Fn(usize, &mut TrialRng) -> TrialResult + Sync,
{
    let serial = |range: std::ops::Range<u64>| {
        let mut tally = Tally::new(m);
        for t in range {
            tally.add(run(h, &mut TrialRng::new(seed, h, t)));
        }
        tally
    };
    #[cfg(feature = "parallel")]
    if threads > 1 {
        use rayon::prelude::*;
        const CHUNK: u64 = 1024;
        let chunks = trials.div_ceil(CHUNK);
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            return pool.install(|| {
                (0..chunks)
                    .into_par_iter()
                    .map(|c| serial(c * CHUNK..((c + 1) * CHUNK).min(trials)))
                    .reduce(|| Tally::new(m), Tally::merge)
            });
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    serial(0..trials)
}

/// Error rates of a fixed-sample test.
pub fn estimate_fss(model: &SensingModel, config: &FssConfig, trials: u64, seed: u64, threads: usize) -> Result<SimReport> {
    let test = FssTest::new(model, config)?;
    let echo = serde_json::to_value(config).map_err(|e| invalid(e.to_string()))?;
    estimate_with(model.num_hypotheses(), trials, seed, threads, false, None, echo, |h, rng| {
        TrialResult {
            decision: test.run(h, rng),
            samples: config.n as u64,
            truncated: false,
        }
    })
}

/// Error rates, stopping times and (for the risk-constrained test) risks of
/// a sequential test.
pub fn estimate_sequential(
    model: &SensingModel,
    config: &SequentialConfig,
    trials: u64,
    seed: u64,
    threads: usize,
) -> Result<SimReport> {
    let test = SequentialTest::new(model, config.clone())?;
    let echo = serde_json::to_value(config).map_err(|e| invalid(e.to_string()))?;
    let prior = match &config.variant {
        Variant::RiskConstrained { prior, .. } => Some(prior.as_slice()),
        _ => None,
    };
    estimate_with(model.num_hypotheses(), trials, seed, threads, true, prior, echo, |h, rng| {
        let out = test.run(h, rng);
        TrialResult {
            decision: out.decision,
            samples: out.stopping_time,
            truncated: out.truncated,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// Slope of `-ln(error)` against `n`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Points dropped because their error estimate was zero.
    pub excluded: usize,
}

/// Least-squares line through `(n, -ln error)`. Points with zero error are
/// dropped; at least three positive points are required.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ExponentFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|&(n, e)| (n, -e.ln()))
        .collect();
    if usable.len() < 3 {
        return Err(invalid(format!(
            "need at least 3 points with positive error, got {}",
            usable.len()
        )));
    }
    let k = usable.len() as f64;
    let mean_x = usable.iter().map(|p| p.0).sum::<f64>() / k;
    let mean_y = usable.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = usable.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("all points share the same n"));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual: f64 = usable.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - residual / syy };
    Ok(ExponentFit {
        slope,
        intercept,
        r_squared,
        excluded: points.len() - usable.len(),
    })
}
