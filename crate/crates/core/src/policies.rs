//! Control policies and the running test statistic.
//!
//! Fixed-sample policies: an open-loop schedule realizing a control mix, and
//! the causal rule that plays the control best separating the current ML
//! estimate from its nearest rival. Sequential policies: the Chernoff
//! maximin mix for the current ML estimate and the sparse uniform
//! exploration of the modified test. Also the smoothed ("mismatched")
//! posterior policy used in the achievability argument for the causal
//! lower bound.

use crate::divergences::chernoff_unchecked;
use crate::error::{invalid, Result};
use crate::exponents::sequential_denominator;
use crate::games::MixedStrategy;
use crate::model::{Pmf, SensingModel};

/// Scores within this relative distance count as tied, so that least-index
/// tie-breaking survives rounding in symmetric models.
const TIE_TOLERANCE: f64 = 1e-12;

/// Least index attaining the maximum, where values within
/// [`TIE_TOLERANCE`] (relative, floored at 1 in magnitude) count as equal:
/// sums of the same log terms in a different order must tie. Entries at
/// `-∞` are eliminated hypotheses; if every entry is `-∞` the answer is 0.
pub fn ml_estimate(loglik: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in loglik.iter().enumerate().skip(1) {
        let b = loglik[best];
        let beats = if b.is_finite() {
            v - b > TIE_TOLERANCE * b.abs().max(1.0)
        } else {
            v > b
        };
        if beats {
            best = i;
        }
    }
    best
}

/// Log-likelihood of every hypothesis for the observations so far.
#[derive(Debug, Clone, PartialEq)]
pub struct TestState {
    loglik: Vec<f64>,
    steps: u64,
    ml: usize,
}

impl TestState {
    pub fn new(hypotheses: usize) -> Self {
        Self {
            loglik: vec![0.0; hypotheses],
            steps: 0,
            ml: 0,
        }
    }

    /// A state with the given log-likelihoods after `steps` observations.
    pub fn from_loglik(loglik: Vec<f64>, steps: u64) -> Self {
        let ml = ml_estimate(&loglik);
        Self { loglik, steps, ml }
    }

    /// Adds `ln p_i^u(y)` to every hypothesis `i`.
    pub fn update(&mut self, model: &SensingModel, control: usize, observation: usize) {
        for (i, l) in self.loglik.iter_mut().enumerate() {
            let p = model.pmf(i, control).get(observation);
            *l += if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
        }
        self.steps += 1;
        self.ml = ml_estimate(&self.loglik);
    }

    pub fn loglik(&self) -> &[f64] {
        &self.loglik
    }

    /// Observations absorbed so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn ml_index(&self) -> usize {
        self.ml
    }
}

/// Per-estimate control tables, computed once per model.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTables {
    causal: Vec<usize>,
    chernoff: Vec<MixedStrategy>,
}

impl PolicyTables {
    pub fn new(model: &SensingModel) -> Result<Self> {
        let m = model.num_hypotheses();
        if m < 2 {
            return Err(invalid("control policies need at least 2 hypotheses"));
        }
        let causal = (0..m).map(|i| causal_control_for(model, i)).collect();
        let chernoff = (0..m)
            .map(|i| sequential_denominator(model, i).map(|(_, q)| q))
            .collect::<Result<_>>()?;
        Ok(Self { causal, chernoff })
    }

    /// The fixed-sample causal control while `i_hat` is the ML estimate.
    pub fn causal(&self, i_hat: usize) -> usize {
        self.causal[i_hat]
    }

    /// The Chernoff test's control mix while `i_hat` is the ML estimate.
    pub fn chernoff(&self, i_hat: usize) -> &MixedStrategy {
        &self.chernoff[i_hat]
    }
}

fn causal_control_for(model: &SensingModel, i_hat: usize) -> usize {
    let mut best = (f64::NEG_INFINITY, 0);
    for u in 0..model.num_controls() {
        let worst = (0..model.num_hypotheses())
            .filter(|&j| j != i_hat)
            .map(|j| chernoff_unchecked(model.pmf(i_hat, u).probs(), model.pmf(j, u).probs()).value)
            .fold(f64::INFINITY, f64::min);
        if u == 0 || worst > best.0 + TIE_TOLERANCE * best.0.abs() {
            best = (worst, u);
        }
    }
    best.1
}

/// `argmax_u min_{j≠i_hat} C(p_i_hat^u, p_j^u)`, least index on ties.
pub fn fss_causal_control(model: &SensingModel, i_hat: usize) -> Result<usize> {
    model.check_hypothesis(i_hat)?;
    if model.num_hypotheses() < 2 {
        return Err(invalid("control policies need at least 2 hypotheses"));
    }
    Ok(causal_control_for(model, i_hat))
}

/// The maximin mix of the sequential denominator for `i_hat`.
pub fn chernoff_control_distribution(model: &SensingModel, i_hat: usize) -> Result<MixedStrategy> {
    if model.num_hypotheses() < 2 {
        return Err(invalid("control policies need at least 2 hypotheses"));
    }
    sequential_denominator(model, i_hat).map(|(_, q)| q)
}

/// A fixed control sequence of length `n` whose composition is the closest
/// integer apportionment of `q` (largest remainders, least index first), with
/// each control's uses spread evenly over the horizon.
pub fn open_loop_schedule(q: &MixedStrategy, n: usize) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(invalid("schedule length must be positive"));
    }
    let w = q.weights();
    let exact: Vec<f64> = w.iter().map(|x| x * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut by_remainder: Vec<usize> = (0..w.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = exact[a] - counts[a] as f64;
        let rb = exact[b] - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &u in by_remainder.iter().take(n.saturating_sub(assigned)) {
        counts[u] += 1;
    }

    // Play the control furthest behind its target pace.
    let mut used = vec![0usize; w.len()];
    let mut schedule = Vec::with_capacity(n);
    for t in 1..=n {
        let mut pick = None;
        let mut best = f64::NEG_INFINITY;
        for u in 0..w.len() {
            if used[u] == counts[u] {
                continue;
            }
            let deficit = counts[u] as f64 * t as f64 / n as f64 - used[u] as f64;
            if deficit > best {
                best = deficit;
                pick = Some(u);
            }
        }
        let u = pick.expect("counts sum to n");
        used[u] += 1;
        schedule.push(u);
    }
    Ok(schedule)
}

/// Sample counts `k` after which the modified test draws the next control
/// uniformly: `{⌈a^l⌉ : l = 0, 1, ...}`, without duplicates.
#[derive(Debug, Clone)]
pub struct ExplorationClock {
    a: f64,
    exponent: i32,
    next: u64,
}

impl ExplorationClock {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 1.0 && a.is_finite()) {
            return Err(invalid(format!("exploration base must exceed 1, got {a}")));
        }
        Ok(Self { a, exponent: 0, next: 1 })
    }

    /// Whether `k` is in the schedule. Queries must be nondecreasing in `k`.
    pub fn is_exploration(&mut self, k: u64) -> bool {
        while self.next < k {
            self.advance();
        }
        self.next == k
    }

    fn advance(&mut self) {
        let current = self.next;
        while self.next <= current {
            self.exponent += 1;
            let v = self.a.powi(self.exponent).ceil();
            self.next = if v >= u64::MAX as f64 { u64::MAX } else { v as u64 };
        }
    }
}

/// The exploration times up to `horizon`.
pub fn exploration_schedule(a: f64, horizon: u64) -> Result<Vec<u64>> {
    let mut clock = ExplorationClock::new(a)?;
    let mut times = Vec::new();
    while clock.next <= horizon {
        times.push(clock.next);
        if clock.next == u64::MAX {
            break;
        }
        clock.advance();
    }
    Ok(times)
}

/// `q_i^u(y) = 1/J + (ε/J)(J p_i^u(y) - 1)`: every pmf pulled toward uniform,
/// so all have full support.
pub fn mismatched_smooth(model: &SensingModel, eps_smooth: f64) -> Result<SensingModel> {
    if !(eps_smooth > 0.0 && eps_smooth < 1.0) {
        return Err(invalid(format!("smoothing must lie in (0, 1), got {eps_smooth}")));
    }
    let j = model.num_observations() as f64;
    let table = (0..model.num_hypotheses())
        .map(|i| {
            (0..model.num_controls())
                .map(|u| {
                    model
                        .pmf(i, u)
                        .probs()
                        .iter()
                        .map(|p| 1.0 / j + eps_smooth / j * (j * p - 1.0))
                        .collect()
                })
                .collect()
        })
        .collect();
    SensingModel::new(model.controls().to_vec(), model.observations().to_vec(), table)
}

/// `argmin_u max_i Σ_y p_i^u(y) (q_i^u(y) / Σ_{j≠i} w_ij q_j^u(y))^(-η/(Jε))`
/// where `w_ij = ν(j) / (1 - ν(i))` and `q` is the smoothed model.
fn mismatched_choice(
    model: &SensingModel,
    smoothed: &SensingModel,
    conditional: impl Fn(usize, usize) -> f64,
    eta: f64,
    eps_smooth: f64,
) -> usize {
    let m = model.num_hypotheses();
    let power = -eta / (model.num_observations() as f64 * eps_smooth);
    let mut best = (f64::INFINITY, 0);
    for u in 0..model.num_controls() {
        let mut worst = f64::NEG_INFINITY;
        for i in 0..m {
            let p = model.pmf(i, u).probs();
            let qi = smoothed.pmf(i, u).probs();
            let mut total = 0.0;
            for (y, &py) in p.iter().enumerate() {
                if py == 0.0 {
                    continue;
                }
                let mix: f64 = (0..m)
                    .filter(|&j| j != i)
                    .map(|j| conditional(i, j) * smoothed.pmf(j, u).get(y))
                    .sum();
                total += py * (qi[y] / mix).powf(power);
            }
            worst = worst.max(total);
        }
        if u == 0 || worst < best.0 - TIE_TOLERANCE * best.0.abs() {
            best = (worst, u);
        }
    }
    best.1
}

fn check_mismatched_args(model: &SensingModel, smoothed: &SensingModel, eta: f64, eps_smooth: f64) -> Result<()> {
    if model.num_hypotheses() < 2 {
        return Err(invalid("control policies need at least 2 hypotheses"));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(invalid(format!("eta must be positive, got {eta}")));
    }
    if !(eps_smooth > 0.0 && eps_smooth < 1.0) {
        return Err(invalid(format!("smoothing must lie in (0, 1), got {eps_smooth}")));
    }
    if smoothed.num_hypotheses() != model.num_hypotheses()
        || smoothed.num_controls() != model.num_controls()
        || smoothed.num_observations() != model.num_observations()
    {
        return Err(invalid("smoothed model does not match the model's dimensions"));
    }
    Ok(())
}

/// The mismatched-posterior control for belief `nu`, least index on ties.
pub fn mismatched_control(
    model: &SensingModel,
    smoothed: &SensingModel,
    nu: &Pmf,
    eta: f64,
    eps_smooth: f64,
) -> Result<usize> {
    check_mismatched_args(model, smoothed, eta, eps_smooth)?;
    if nu.len() != model.num_hypotheses() || !nu.has_full_support() {
        return Err(invalid("belief must be a full-support pmf over the hypotheses"));
    }
    let nu = nu.probs();
    Ok(mismatched_choice(
        model,
        smoothed,
        |i, j| nu[j] / (1.0 - nu[i]),
        eta,
        eps_smooth,
    ))
}

/// Posterior over hypotheses computed with the smoothed model, started from
/// the uniform prior. Kept as unnormalized log-weights so that beliefs near
/// certainty keep their full support.
#[derive(Debug, Clone, PartialEq)]
pub struct MismatchedState {
    log_weights: Vec<f64>,
}

impl MismatchedState {
    pub fn new(hypotheses: usize) -> Self {
        Self {
            log_weights: vec![0.0; hypotheses],
        }
    }

    pub fn update(&mut self, smoothed: &SensingModel, control: usize, observation: usize) {
        for (i, w) in self.log_weights.iter_mut().enumerate() {
            *w += smoothed.pmf(i, control).get(observation).ln();
        }
        let top = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.log_weights.iter_mut().for_each(|w| *w -= top);
    }

    /// The normalized belief ν.
    pub fn nu(&self) -> Vec<f64> {
        let w: Vec<f64> = self.log_weights.iter().map(|l| l.exp()).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }

    /// `l(i) = ν(i) / (1 - ν(i))`.
    pub fn likelihood_ratio(&self, i: usize) -> f64 {
        (self.log_weights[i] - self.log_sum_except(i)).exp()
    }

    /// `ν(j) / (1 - ν(i))` for `j ≠ i`.
    pub fn conditional(&self, i: usize, j: usize) -> f64 {
        (self.log_weights[j] - self.log_sum_except(i)).exp()
    }

    fn log_sum_except(&self, i: usize) -> f64 {
        let others = self.log_weights.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, l)| *l);
        let top = others.clone().fold(f64::NEG_INFINITY, f64::max);
        top + others.map(|l| (l - top).exp()).sum::<f64>().ln()
    }

    /// Least index of the largest posterior weight.
    pub fn decision(&self) -> usize {
        ml_estimate(&self.log_weights)
    }

    pub fn control(&self, model: &SensingModel, smoothed: &SensingModel, eta: f64, eps_smooth: f64) -> Result<usize> {
        check_mismatched_args(model, smoothed, eta, eps_smooth)?;
        Ok(self.control_unchecked(model, smoothed, eta, eps_smooth))
    }

    pub(crate) fn control_unchecked(
        &self,
        model: &SensingModel,
        smoothed: &SensingModel,
        eta: f64,
        eps_smooth: f64,
    ) -> usize {
        let m = self.log_weights.len();
        let sums: Vec<f64> = (0..m).map(|i| self.log_sum_except(i)).collect();
        mismatched_choice(
            model,
            smoothed,
            |i, j| (self.log_weights[j] - sums[i]).exp(),
            eta,
            eps_smooth,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::table1_model;
    use proptest::prelude::*;

    fn binary_model() -> SensingModel {
        SensingModel::new(
            vec!["a".into(), "b".into()],
            vec!["0".into(), "1".into()],
            vec![
                vec![vec![0.1, 0.9], vec![0.4, 0.6]],
                vec![vec![0.9, 0.1], vec![0.6, 0.4]],
            ],
        )
        .unwrap()
    }

    fn identical_controls() -> SensingModel {
        let row = |p: f64| vec![vec![1.0 - p, p], vec![1.0 - p, p]];
        SensingModel::new(
            vec!["a".into(), "b".into()],
            vec!["0".into(), "1".into()],
            vec![row(0.2), row(0.5), row(0.8)],
        )
        .unwrap()
    }

    #[test]
    fn ml_estimate_examples() {
        assert_eq!(ml_estimate(&[0.0, 0.0, -1.0]), 0);
        assert_eq!(ml_estimate(&[-3.0, -1.0, -2.0]), 1);
        assert_eq!(ml_estimate(&[2.0, 2.0, 2.0]), 0);
        let ninf = f64::NEG_INFINITY;
        assert_eq!(ml_estimate(&[ninf, -5.0, ninf]), 1);
        assert_eq!(ml_estimate(&[ninf, ninf]), 0);
        // Same terms, different summation order: still a tie.
        let (a, b) = (0.3f64.ln(), 0.7f64.ln());
        let x = ((a + b) + b) + a;
        let y = ((b + b) + a) + a;
        assert_eq!(ml_estimate(&[x.min(y), x.max(y)]), 0);
    }

    #[test]
    fn state_adds_log_probabilities() {
        let m = table1_model(0.25).unwrap();
        let mut s = TestState::new(3);
        s.update(&m, 0, 1);
        let expected = [0.25f64.ln(), 0.75f64.ln(), 0.75f64.ln()];
        assert_eq!(s.loglik(), &expected);
        assert_eq!(s.ml_index(), 1);
        assert_eq!(s.steps(), 1);
    }

    #[test]
    fn zero_probability_eliminates() {
        let m = SensingModel::new(
            vec!["a".into(), "b".into()],
            vec!["0".into(), "1".into()],
            vec![vec![vec![1.0, 0.0], vec![0.5, 0.5]], vec![vec![0.3, 0.7], vec![0.5, 0.5]]],
        )
        .unwrap_err();
        // Supports differ within a control, which the model rejects; build
        // one where supports differ only across controls instead.
        drop(m);
        let m = SensingModel::new(
            vec!["a".into(), "b".into()],
            vec!["0".into(), "1".into()],
            vec![vec![vec![1.0, 0.0], vec![0.5, 0.5]], vec![vec![1.0, 0.0], vec![0.2, 0.8]]],
        )
        .unwrap();
        let mut s = TestState::new(2);
        s.update(&m, 1, 1);
        s.update(&m, 0, 1);
        assert!(s.loglik().iter().all(|l| *l == f64::NEG_INFINITY));
        assert_eq!(s.ml_index(), 0);
    }

    #[test]
    fn causal_control_examples() {
        let m = table1_model(0.25).unwrap();
        for i in 0..3 {
            assert_eq!(fss_causal_control(&m, i).unwrap(), i);
        }
        let b = binary_model();
        assert_eq!(fss_causal_control(&b, 0).unwrap(), 0);
        assert_eq!(fss_causal_control(&b, 1).unwrap(), 0);
        assert_eq!(fss_causal_control(&identical_controls(), 1).unwrap(), 0);
        assert!(fss_causal_control(&m, 3).is_err());
    }

    #[test]
    fn chernoff_distribution_examples() {
        let m = table1_model(0.25).unwrap();
        assert_eq!(chernoff_control_distribution(&m, 0).unwrap().as_pure(), Some(0));
        // D(Bern(0.9)||Bern(0.1)) > D(Bern(0.6)||Bern(0.4)).
        assert_eq!(chernoff_control_distribution(&binary_model(), 1).unwrap().as_pure(), Some(0));
        // Each control separates hypothesis 0 from a different rival equally.
        let sym = SensingModel::new(
            vec!["a".into(), "b".into()],
            vec!["0".into(), "1".into()],
            vec![
                vec![vec![0.2, 0.8], vec![0.2, 0.8]],
                vec![vec![0.8, 0.2], vec![0.2, 0.8]],
                vec![vec![0.2, 0.8], vec![0.8, 0.2]],
            ],
        )
        .unwrap();
        let q = chernoff_control_distribution(&sym, 0).unwrap();
        assert!((q.weights()[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn tables_are_pure_functions_of_the_model() {
        let m = table1_model(0.3).unwrap();
        let t = PolicyTables::new(&m).unwrap();
        assert_eq!(t, PolicyTables::new(&m).unwrap());
        for i in 0..3 {
            assert_eq!(t.causal(i), fss_causal_control(&m, i).unwrap());
            assert_eq!(t.chernoff(i), &chernoff_control_distribution(&m, i).unwrap());
        }
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(open_loop_schedule(&MixedStrategy::uniform(3).unwrap(), 3).unwrap(), vec![0, 1, 2]);
        assert_eq!(open_loop_schedule(&MixedStrategy::uniform(3).unwrap(), 7).unwrap(), vec![0, 1, 2, 0, 1, 2, 0]);
        assert_eq!(open_loop_schedule(&MixedStrategy::pure(2, 0).unwrap(), 4).unwrap(), vec![0; 4]);
        let half = MixedStrategy::new(vec![0.5, 0.5]).unwrap();
        let s = open_loop_schedule(&half, 5).unwrap();
        let ones = s.iter().filter(|&&u| u == 0).count();
        assert!(ones == 2 || ones == 3);
        assert!(open_loop_schedule(&half, 0).is_err());
    }

    #[test]
    fn exploration_examples() {
        assert_eq!(exploration_schedule(1.5, 10).unwrap(), vec![1, 2, 3, 4, 6, 8]);
        assert_eq!(exploration_schedule(2.0, 8).unwrap(), vec![1, 2, 4, 8]);
        assert_eq!(exploration_schedule(10.0, 5).unwrap(), vec![1]);
        assert!(exploration_schedule(1.0, 5).is_err());
        let mut clock = ExplorationClock::new(1.5).unwrap();
        let hits: Vec<u64> = (0..=10).filter(|&k| clock.is_exploration(k)).collect();
        assert_eq!(hits, vec![1, 2, 3, 4, 6, 8]);
    }

    #[test]
    fn smoothing_examples() {
        let m = SensingModel::new(vec!["a".into()], vec!["0".into(), "1".into()], vec![vec![vec![0.75, 0.25]], vec![vec![0.5, 0.5]]]).unwrap();
        let q = mismatched_smooth(&m, 0.5).unwrap();
        assert!((q.pmf(0, 0).get(1) - 0.375).abs() < 1e-15);
        assert!((q.pmf(0, 0).get(0) - 0.625).abs() < 1e-15);
        let q = mismatched_smooth(&m, 1e-9).unwrap();
        assert!((q.pmf(0, 0).get(0) - 0.5).abs() < 1e-9);
        let u = SensingModel::new(vec!["a".into()], vec!["0".into(), "1".into()], vec![vec![vec![0.5, 0.5]], vec![vec![0.5, 0.5]]]).unwrap();
        assert_eq!(mismatched_smooth(&u, 0.3).unwrap().pmf(0, 0).probs(), &[0.5, 0.5]);
        assert!(mismatched_smooth(&m, 1.0).is_err());
        assert!(mismatched_smooth(&m, 0.0).is_err());
    }

    /// The control formula written out in terms of the unsmoothed pmfs.
    fn literal_mismatched(model: &SensingModel, nu: &[f64], eta: f64, eps: f64) -> Vec<f64> {
        let m = model.num_hypotheses();
        let j = model.num_observations() as f64;
        (0..model.num_controls())
            .map(|u| {
                (0..m)
                    .map(|i| {
                        (0..model.num_observations())
                            .map(|y| {
                                let p = |h: usize| model.pmf(h, u).get(y);
                                let mix: f64 = (0..m).filter(|&k| k != i).map(|k| j * nu[k] * p(k) / (1.0 - nu[i])).sum();
                                let ratio = (1.0 + eps * (j * p(i) - 1.0)) / (1.0 + eps * (mix - 1.0));
                                p(i) * ratio.powf(-eta / (j * eps))
                            })
                            .sum::<f64>()
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    #[test]
    fn mismatched_control_examples() {
        let m = table1_model(0.25).unwrap();
        let q = mismatched_smooth(&m, 0.5).unwrap();
        let nu = Pmf::new(vec![0.8, 0.1, 0.1]).unwrap();
        let scores = literal_mismatched(&m, nu.probs(), 1.0, 0.5);
        let oracle = (0..3).min_by(|&a, &b| scores[a].total_cmp(&scores[b])).unwrap();
        assert_eq!(oracle, 0);
        assert_eq!(mismatched_control(&m, &q, &nu, 1.0, 0.5).unwrap(), 0);
        let sym = Pmf::uniform(3).unwrap();
        assert_eq!(mismatched_control(&m, &q, &sym, 1.0, 0.5).unwrap(), 0);
        let one = SensingModel::new(
            vec!["only".into()],
            vec!["0".into(), "1".into()],
            vec![vec![vec![0.3, 0.7]], vec![vec![0.6, 0.4]]],
        )
        .unwrap();
        let qs = mismatched_smooth(&one, 0.5).unwrap();
        assert_eq!(mismatched_control(&one, &qs, &Pmf::uniform(2).unwrap(), 2.0, 0.5).unwrap(), 0);
        let degenerate = Pmf::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(mismatched_control(&m, &q, &degenerate, 1.0, 0.5).is_err());
    }

    #[test]
    fn mismatched_state_tracks_posterior() {
        let m = table1_model(0.25).unwrap();
        let q = mismatched_smooth(&m, 0.5).unwrap();
        let mut s = MismatchedState::new(3);
        let mut direct = [1.0 / 3.0; 3];
        for (u, y) in [(0, 0), (1, 1), (0, 0), (2, 0), (0, 1)] {
            s.update(&q, u, y);
            for (i, d) in direct.iter_mut().enumerate() {
                *d *= q.pmf(i, u).get(y);
            }
            let total: f64 = direct.iter().sum();
            direct.iter_mut().for_each(|d| *d /= total);
            let nu = s.nu();
            for i in 0..3 {
                assert!((nu[i] - direct[i]).abs() < 1e-12);
                assert!((s.likelihood_ratio(i) - direct[i] / (1.0 - direct[i])).abs() < 1e-9);
            }
            let pmf = Pmf::new(nu.clone()).unwrap();
            assert_eq!(s.control(&m, &q, 1.0, 0.5).unwrap(), mismatched_control(&m, &q, &pmf, 1.0, 0.5).unwrap());
        }
        // Far past the point where 1 - ν(i) rounds to zero, every
        // hypothesis keeps positive weight.
        for _ in 0..500 {
            s.update(&q, 0, 0);
        }
        assert_eq!(1.0 - s.nu()[0], 0.0);
        assert!(s.likelihood_ratio(1) > 0.0);
        assert_eq!(s.decision(), 0);
    }

    proptest! {
        #[test]
        fn smoothed_rows_are_positive_pmfs(eps in 0.01f64..0.99, p in 0.0f64..=1.0) {
            let m = SensingModel::new(vec!["a".into()], vec!["0".into(), "1".into()], vec![vec![vec![1.0 - p, p]], vec![vec![p, 1.0 - p]]]).unwrap();
            let q = mismatched_smooth(&m, eps).unwrap();
            let row = q.pmf(0, 0).probs();
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(row.iter().all(|&x| x > 0.0));
        }

        #[test]
        fn exploration_schedule_nests(a in 1.01f64..4.0, h in 1u64..500, extra in 0u64..500) {
            let short = exploration_schedule(a, h).unwrap();
            let long = exploration_schedule(a, h + extra).unwrap();
            prop_assert!(short.iter().all(|t| long.contains(t)));
            prop_assert_eq!(&long[..short.len()], &short[..]);
        }

        #[test]
        fn table1_causal_control_is_diagonal(eps in 0.01f64..0.49) {
            let m = table1_model(eps).unwrap();
            let t = PolicyTables::new(&m).unwrap();
            for i in 0..3 {
                prop_assert_eq!(t.causal(i), i);
            }
        }

        #[test]
        fn replay_reproduces_loglik(steps in proptest::collection::vec((0usize..3, 0usize..2), 1..60)) {
            let m = table1_model(0.2).unwrap();
            let mut s = TestState::new(3);
            let mut direct = [0.0f64; 3];
            for &(u, y) in &steps {
                s.update(&m, u, y);
                for (i, d) in direct.iter_mut().enumerate() {
                    *d += m.pmf(i, u).get(y).ln();
                }
            }
            for (l, d) in s.loglik().iter().zip(&direct) {
                prop_assert!((l - d).abs() < 1e-9);
            }
            prop_assert_eq!(s.ml_index(), ml_estimate(&direct));
        }
    }
}
