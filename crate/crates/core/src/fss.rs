//! Fixed-sample-size tests: `n` controlled observations, then an ML decision.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::games::MixedStrategy;
use crate::model::SensingModel;
use crate::policies::{mismatched_smooth, open_loop_schedule, MismatchedState, PolicyTables, TestState};
use crate::rng::TrialRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum FssPolicy {
    /// A precomputed schedule realizing the control mix `q`.
    OpenLoop { q: MixedStrategy },
    /// Play the control that best separates the current ML estimate from its
    /// nearest rival.
    CausalChernoff,
    /// Controls and decision driven by the posterior under a smoothed model.
    Mismatched { eta: f64, eps_smooth: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FssConfig {
    #[serde(flatten)]
    pub policy: FssPolicy,
    pub n: usize,
}

impl FssConfig {
    pub fn validate(&self, model: &SensingModel) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("sample size n must be positive"));
        }
        match &self.policy {
            FssPolicy::OpenLoop { q } if q.len() != model.num_controls() => Err(invalid(format!(
                "control mix has {} entries but the model has {} controls",
                q.len(),
                model.num_controls()
            ))),
            FssPolicy::Mismatched { eta, eps_smooth } => {
                if !(*eta > 0.0 && eta.is_finite()) {
                    return Err(invalid(format!("eta must be positive, got {eta}")));
                }
                if !(*eps_smooth > 0.0 && *eps_smooth < 1.0) {
                    return Err(invalid(format!("smoothing must lie in (0, 1), got {eps_smooth}")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Controls and observations of one trial, for replay checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FssTrace {
    pub controls: Vec<usize>,
    pub observations: Vec<usize>,
    pub decision: usize,
}

enum Prepared {
    OpenLoop(Vec<usize>),
    Causal(PolicyTables),
    Mismatched {
        smoothed: SensingModel,
        eta: f64,
        eps_smooth: f64,
    },
}

/// A fixed-sample test bound to a model, with schedules and tables built
/// once for all trials.
pub struct FssTest<'a> {
    model: &'a SensingModel,
    n: usize,
    prepared: Prepared,
}

impl<'a> FssTest<'a> {
    pub fn new(model: &'a SensingModel, config: &FssConfig) -> Result<Self> {
        config.validate(model)?;
        let prepared = match &config.policy {
            FssPolicy::OpenLoop { q } => Prepared::OpenLoop(open_loop_schedule(q, config.n)?),
            FssPolicy::CausalChernoff => Prepared::Causal(PolicyTables::new(model)?),
            FssPolicy::Mismatched { eta, eps_smooth } => Prepared::Mismatched {
                smoothed: mismatched_smooth(model, *eps_smooth)?,
                eta: *eta,
                eps_smooth: *eps_smooth,
            },
        };
        Ok(Self {
            model,
            n: config.n,
            prepared,
        })
    }

    /// Decision of one trial with observations drawn from `truth`.
    pub fn run(&self, truth: usize, rng: &mut TrialRng) -> usize {
        self.run_with(truth, rng, |_, _| {})
    }

    pub fn run_traced(&self, truth: usize, rng: &mut TrialRng) -> FssTrace {
        let mut controls = Vec::with_capacity(self.n);
        let mut observations = Vec::with_capacity(self.n);
        let decision = self.run_with(truth, rng, |u, y| {
            controls.push(u);
            observations.push(y);
        });
        FssTrace {
            controls,
            observations,
            decision,
        }
    }

    fn run_with(&self, truth: usize, rng: &mut TrialRng, mut record: impl FnMut(usize, usize)) -> usize {
        let model = self.model;
        let m = model.num_hypotheses();
        match &self.prepared {
            Prepared::OpenLoop(schedule) => {
                let mut state = TestState::new(m);
                for &u in schedule {
                    let y = model.pmf(truth, u).sample_with(rng.observation_uniform());
                    state.update(model, u, y);
                    record(u, y);
                }
                state.ml_index()
            }
            Prepared::Causal(tables) => {
                let mut state = TestState::new(m);
                for _ in 0..self.n {
                    let u = tables.causal(state.ml_index());
                    let y = model.pmf(truth, u).sample_with(rng.observation_uniform());
                    state.update(model, u, y);
                    record(u, y);
                }
                state.ml_index()
            }
            Prepared::Mismatched {
                smoothed,
                eta,
                eps_smooth,
            } => {
                let mut state = MismatchedState::new(m);
                for _ in 0..self.n {
                    let u = state.control_unchecked(model, smoothed, *eta, *eps_smooth);
                    let y = model.pmf(truth, u).sample_with(rng.observation_uniform());
                    state.update(smoothed, u, y);
                    record(u, y);
                }
                state.decision()
            }
        }
    }
}

/// One fixed-sample trial; see [`FssTest`] to amortize setup.
pub fn run_fss_trial(model: &SensingModel, truth: usize, config: &FssConfig, rng: &mut TrialRng) -> Result<usize> {
    model.check_hypothesis(truth)?;
    Ok(FssTest::new(model, config)?.run(truth, rng))
}
