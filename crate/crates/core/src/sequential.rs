//! The sequential Chernoff test, its modified (exploring) version and the
//! risk-constrained version, each run as a state machine over one trial.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::SensingModel;
use crate::policies::{ExplorationClock, PolicyTables, TestState};
use crate::rng::TrialRng;

pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;
pub const DEFAULT_EXPLORATION_BASE: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Variant {
    /// Stop once the ML margin reaches `-ln c`.
    Chernoff { c: f64 },
    /// As `Chernoff`, with uniform control after each sample count `⌈a^l⌉`.
    Modified { c: f64, a: f64 },
    /// The modified control rule with a stopping rule that bounds every
    /// risk `Σ_{j≠i} π(j) P_j{decide i}` by `risk_bounds[i]`.
    RiskConstrained {
        a: f64,
        prior: Vec<f64>,
        risk_bounds: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialConfig {
    #[serde(flatten)]
    pub variant: Variant,
    /// Trials still running after this many samples are stopped and flagged.
    pub max_steps: u64,
}

impl SequentialConfig {
    pub fn chernoff(c: f64) -> Self {
        Self {
            variant: Variant::Chernoff { c },
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn modified(c: f64, a: f64) -> Self {
        Self {
            variant: Variant::Modified { c, a },
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn risk_constrained(a: f64, prior: Vec<f64>, risk_bounds: Vec<f64>) -> Self {
        Self {
            variant: Variant::RiskConstrained { a, prior, risk_bounds },
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn with_max_steps(mut self, max_steps: u64) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn validate(&self, hypotheses: usize) -> Result<()> {
        if self.max_steps == 0 {
            return Err(invalid("max_steps must be positive"));
        }
        let check_c = |c: f64| {
            if c > 0.0 && c <= 1.0 {
                Ok(())
            } else {
                Err(invalid(format!("c must lie in (0, 1], got {c}")))
            }
        };
        let check_a = |a: f64| ExplorationClock::new(a).map(|_| ());
        match &self.variant {
            Variant::Chernoff { c } => check_c(*c),
            Variant::Modified { c, a } => {
                check_c(*c)?;
                check_a(*a)
            }
            Variant::RiskConstrained { a, prior, risk_bounds } => {
                check_a(*a)?;
                if prior.len() != hypotheses || risk_bounds.len() != hypotheses {
                    return Err(invalid(format!(
                        "prior and risk bounds need {hypotheses} entries, got {} and {}",
                        prior.len(),
                        risk_bounds.len()
                    )));
                }
                let sum: f64 = prior.iter().sum();
                if prior.iter().any(|p| p.is_nan() || *p <= 0.0) || (sum - 1.0).abs() > 1e-9 {
                    return Err(invalid("prior must be a full-support pmf"));
                }
                if risk_bounds.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                    return Err(invalid("risk bounds must be positive"));
                }
                Ok(())
            }
        }
    }

    fn exploration_base(&self) -> Option<f64> {
        match &self.variant {
            Variant::Chernoff { .. } => None,
            Variant::Modified { a, .. } | Variant::RiskConstrained { a, .. } => Some(*a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub decision: usize,
    pub stopping_time: u64,
    pub truncated: bool,
    pub control_counts: Vec<u64>,
}

/// `loglik[î] - max_{j≠î} loglik[j]`; `+∞` once every rival is eliminated.
pub fn margin(state: &TestState) -> Result<f64> {
    let l = state.loglik();
    if l.len() < 2 {
        return Err(invalid("margin needs at least 2 hypotheses"));
    }
    let i = state.ml_index();
    Ok(margin_of(l, i, None))
}

/// Margin of `i` over its strongest rival, each coordinate optionally
/// shifted by a log-prior.
fn margin_of(loglik: &[f64], i: usize, log_prior: Option<&[f64]>) -> f64 {
    let shift = |j: usize| log_prior.map_or(0.0, |p| p[j]);
    let rival = (0..loglik.len())
        .filter(|&j| j != i)
        .map(|j| loglik[j] + shift(j))
        .fold(f64::NEG_INFINITY, f64::max);
    let own = loglik[i] + shift(i);
    if rival == f64::NEG_INFINITY {
        if own == f64::NEG_INFINITY {
            return 0.0;
        }
        return f64::INFINITY;
    }
    own - rival
}

/// Whether the test stops in `state`. Equality with the threshold stops.
pub fn should_stop(state: &TestState, config: &SequentialConfig) -> bool {
    SequentialTest::stop_rule(config).stops(state)
}

/// Per-variant stopping rule with thresholds precomputed.
#[derive(Debug, Clone)]
enum StopRule {
    Margin(f64),
    Risk { log_prior: Vec<f64>, thresholds: Vec<f64> },
}

impl StopRule {
    fn stops(&self, state: &TestState) -> bool {
        let i = state.ml_index();
        match self {
            StopRule::Margin(threshold) => margin_of(state.loglik(), i, None) >= *threshold,
            StopRule::Risk { log_prior, thresholds } => {
                margin_of(state.loglik(), i, Some(log_prior)) >= thresholds[i]
            }
        }
    }
}

/// The next control: the Chernoff mix for the current ML estimate, or a
/// uniform draw when the sample count is an exploration time.
///
/// Consumes one control draw from `rng`.
pub fn next_control(
    state: &TestState,
    config: &SequentialConfig,
    tables: &PolicyTables,
    controls: usize,
    rng: &mut TrialRng,
) -> Result<usize> {
    let explore = match config.exploration_base() {
        Some(a) => ExplorationClock::new(a)?.is_exploration(state.steps()),
        None => false,
    };
    Ok(pick_control(state, tables, controls, explore, rng))
}

fn pick_control(state: &TestState, tables: &PolicyTables, controls: usize, explore: bool, rng: &mut TrialRng) -> usize {
    let v = rng.control_uniform();
    if explore {
        ((v * controls as f64) as usize).min(controls - 1)
    } else {
        tables.chernoff(state.ml_index()).sample_with(v)
    }
}

/// A sequential test bound to a model, with policy tables and thresholds
/// computed once and shared by every trial.
#[derive(Debug, Clone)]
pub struct SequentialTest<'a> {
    model: &'a SensingModel,
    tables: PolicyTables,
    config: SequentialConfig,
    stop: StopRule,
}

impl<'a> SequentialTest<'a> {
    pub fn new(model: &'a SensingModel, config: SequentialConfig) -> Result<Self> {
        config.validate(model.num_hypotheses())?;
        let tables = PolicyTables::new(model)?;
        let stop = Self::stop_rule(&config);
        Ok(Self {
            model,
            tables,
            config,
            stop,
        })
    }

    fn stop_rule(config: &SequentialConfig) -> StopRule {
        match &config.variant {
            Variant::Chernoff { c } | Variant::Modified { c, .. } => StopRule::Margin(-c.ln()),
            Variant::RiskConstrained { prior, risk_bounds, .. } => {
                let m = prior.len() as f64;
                StopRule::Risk {
                    log_prior: prior.iter().map(|p| p.ln()).collect(),
                    thresholds: prior
                        .iter()
                        .zip(risk_bounds)
                        .map(|(p, r)| ((m - 1.0) * p / r).ln())
                        .collect(),
                }
            }
        }
    }

    pub fn config(&self) -> &SequentialConfig {
        &self.config
    }

    pub fn tables(&self) -> &PolicyTables {
        &self.tables
    }

    /// One trial with observations drawn from hypothesis `truth`.
    pub fn run(&self, truth: usize, rng: &mut TrialRng) -> TrialOutcome {
        let model = self.model;
        let controls = model.num_controls();
        let mut state = TestState::new(model.num_hypotheses());
        let mut clock = self.config.exploration_base().map(|a| ExplorationClock::new(a).expect("validated"));
        let mut control_counts = vec![0u64; controls];
        loop {
            let explore = clock.as_mut().is_some_and(|c| c.is_exploration(state.steps()));
            let u = pick_control(&state, &self.tables, controls, explore, rng);
            let y = model.pmf(truth, u).sample_with(rng.observation_uniform());
            state.update(model, u, y);
            control_counts[u] += 1;
            let stop = self.stop.stops(&state);
            if stop || state.steps() >= self.config.max_steps {
                return TrialOutcome {
                    decision: state.ml_index(),
                    stopping_time: state.steps(),
                    truncated: !stop,
                    control_counts,
                };
            }
        }
    }
}

/// One trial of the configured test; see [`SequentialTest`] to amortize
/// setup over many trials.
pub fn run_trial(model: &SensingModel, truth: usize, config: &SequentialConfig, rng: &mut TrialRng) -> Result<TrialOutcome> {
    model.check_hypothesis(truth)?;
    Ok(SequentialTest::new(model, config.clone())?.run(truth, rng))
}
