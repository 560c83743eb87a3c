//! Sensing models: one pmf over a finite observation alphabet per
//! (hypothesis, control) cell.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Absolute tolerance on the sum of a pmf.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// A validated probability vector over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Pmf(Vec<f64>);

impl Pmf {
    /// Validates `probs`. Entries must be finite and nonnegative and sum to 1
    /// within [`SUM_TOLERANCE`]. A sum that is off by more than rounding noise
    /// (but within tolerance) is normalized; anything else is rejected.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("empty probability vector".into()));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidPmf(format!("entry {bad} is not a probability")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidPmf(format!("entries sum to {sum}")));
        }
        // Leave already-normalized vectors bit-for-bit untouched so that
        // serialization round-trips exactly.
        let noise = probs.len() as f64 * f64::EPSILON;
        if (sum - 1.0).abs() > noise {
            let probs = probs.into_iter().map(|p| p / sum).collect();
            return Ok(Self(probs));
        }
        Ok(Self(probs))
    }

    pub fn bernoulli(p_one: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_one) {
            return Err(Error::InvalidPmf(format!("Bernoulli parameter {p_one}")));
        }
        Ok(Self(vec![1.0 - p_one, p_one]))
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidPmf("empty alphabet".into()));
        }
        Ok(Self(vec![1.0 / len as f64; len]))
    }

    /// Point mass on `index`.
    pub fn point(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::InvalidPmf(format!("index {index} outside alphabet of {len}")));
        }
        let mut probs = vec![0.0; len];
        probs[index] = 1.0;
        Ok(Self(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.0[index]
    }

    pub fn has_full_support(&self) -> bool {
        self.0.iter().all(|&p| p > 0.0)
    }

    pub fn same_support(&self, other: &Pmf) -> bool {
        self.len() == other.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| (*a == 0.0) == (*b == 0.0))
    }

    /// Inverse-CDF sample from a uniform draw in `[0, 1)`. Zero-probability
    /// symbols are never returned.
    pub fn sample_with(&self, uniform: f64) -> usize {
        let mut acc = 0.0;
        let mut last = 0;
        for (y, &p) in self.0.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            acc += p;
            last = y;
            if uniform < acc {
                return y;
            }
        }
        last
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl<'de> Deserialize<'de> for Pmf {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let probs = Vec::<f64>::deserialize(deserializer)?;
        Pmf::new(probs).map_err(serde::de::Error::custom)
    }
}

/// Hypotheses × controls × finite observation alphabet, one pmf per
/// (hypothesis, control) cell. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingModel {
    num_hypotheses: usize,
    controls: Vec<String>,
    observations: Vec<String>,
    // Row-major over (hypothesis, control).
    pmfs: Vec<Pmf>,
}

impl SensingModel {
    /// Builds a model from `table[i][u]`, validating every invariant.
    pub fn new(
        controls: Vec<String>,
        observations: Vec<String>,
        table: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let num_hypotheses = table.len();
        if num_hypotheses < 2 {
            return Err(invalid(format!("need at least 2 hypotheses, got {num_hypotheses}")));
        }
        if controls.is_empty() {
            return Err(invalid("need at least one control"));
        }
        if observations.len() < 2 {
            return Err(invalid("need at least two observation symbols"));
        }
        check_unique("control", &controls)?;
        check_unique("observation", &observations)?;

        let mut pmfs = Vec::with_capacity(num_hypotheses * controls.len());
        for (i, row) in table.into_iter().enumerate() {
            if row.len() != controls.len() {
                return Err(Error::Parse(format!(
                    "hypothesis {i} has {} pmfs, expected {}",
                    row.len(),
                    controls.len()
                )));
            }
            for (u, probs) in row.into_iter().enumerate() {
                if probs.len() != observations.len() {
                    return Err(Error::Parse(format!(
                        "pmf for hypothesis {i}, control {:?} has {} entries, expected {}",
                        controls[u],
                        probs.len(),
                        observations.len()
                    )));
                }
                let sum: f64 = probs.iter().sum();
                let pmf = Pmf::new(probs).map_err(|e| match e {
                    Error::InvalidPmf(_) if sum.is_finite() => Error::RowSum {
                        hypothesis: i,
                        control: controls[u].clone(),
                        sum,
                    },
                    other => other,
                })?;
                pmfs.push(pmf);
            }
        }

        let model = Self {
            num_hypotheses,
            controls,
            observations,
            pmfs,
        };
        for u in 0..model.num_controls() {
            let first = model.pmf(0, u);
            for i in 1..num_hypotheses {
                if !first.same_support(model.pmf(i, u)) {
                    return Err(Error::SupportMismatch {
                        control: model.controls[u].clone(),
                        first: 0,
                        second: i,
                    });
                }
            }
        }
        Ok(model)
    }

    /// Parses a JSON model document.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        doc.into_model()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("model document serializes")
    }

    pub fn to_document(&self) -> ModelDocument {
        let mut pmf = BTreeMap::new();
        for i in 0..self.num_hypotheses {
            let row = self
                .controls
                .iter()
                .enumerate()
                .map(|(u, label)| (label.clone(), self.pmf(i, u).probs().to_vec()))
                .collect();
            pmf.insert(i.to_string(), row);
        }
        ModelDocument {
            hypotheses: self.num_hypotheses,
            controls: self.controls.clone(),
            observations: self.observations.clone(),
            pmf,
        }
    }

    pub fn num_hypotheses(&self) -> usize {
        self.num_hypotheses
    }

    pub fn num_controls(&self) -> usize {
        self.controls.len()
    }

    pub fn num_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn controls(&self) -> &[String] {
        &self.controls
    }

    pub fn observations(&self) -> &[String] {
        &self.observations
    }

    pub fn control_label(&self, u: usize) -> &str {
        &self.controls[u]
    }

    pub fn control_index(&self, label: &str) -> Option<usize> {
        self.controls.iter().position(|c| c == label)
    }

    /// `p_i^u`.
    pub fn pmf(&self, hypothesis: usize, control: usize) -> &Pmf {
        &self.pmfs[hypothesis * self.controls.len() + control]
    }

    pub fn check_hypothesis(&self, index: usize) -> Result<()> {
        if index < self.num_hypotheses {
            Ok(())
        } else {
            Err(Error::InvalidHypothesis {
                index,
                count: self.num_hypotheses,
            })
        }
    }

    /// Same model with hypotheses and controls relabeled: new hypothesis `i`
    /// is old `hyp_perm[i]`, new control `u` is old `ctl_perm[u]`.
    pub fn permuted(&self, hyp_perm: &[usize], ctl_perm: &[usize]) -> Result<Self> {
        if !is_permutation(hyp_perm, self.num_hypotheses) || !is_permutation(ctl_perm, self.num_controls()) {
            return Err(invalid("not a permutation"));
        }
        let controls = ctl_perm.iter().map(|&u| self.controls[u].clone()).collect();
        let table = hyp_perm
            .iter()
            .map(|&i| ctl_perm.iter().map(|&u| self.pmf(i, u).probs().to_vec()).collect())
            .collect();
        Self::new(controls, self.observations.clone(), table)
    }
}

fn is_permutation(perm: &[usize], len: usize) -> bool {
    let mut seen = vec![false; len];
    perm.len() == len && perm.iter().all(|&p| p < len && !std::mem::replace(&mut seen[p], true))
}

fn check_unique(kind: &'static str, labels: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for label in labels {
        if !seen.insert(label.as_str()) {
            return Err(Error::DuplicateLabel {
                kind,
                label: label.clone(),
            });
        }
    }
    Ok(())
}

/// On-disk JSON form of a [`SensingModel`].
///
/// ```json
/// { "hypotheses": 2, "controls": ["a"], "observations": ["0", "1"],
///   "pmf": { "0": { "a": [0.9, 0.1] }, "1": { "a": [0.1, 0.9] } } }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub hypotheses: usize,
    pub controls: Vec<String>,
    pub observations: Vec<String>,
    pub pmf: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
}

impl ModelDocument {
    pub fn into_model(mut self) -> Result<SensingModel> {
        check_unique("control", &self.controls)?;
        check_unique("observation", &self.observations)?;
        if self.pmf.len() != self.hypotheses {
            return Err(Error::Parse(format!(
                "pmf table has {} hypotheses, header says {}",
                self.pmf.len(),
                self.hypotheses
            )));
        }
        let mut table = Vec::with_capacity(self.hypotheses);
        for i in 0..self.hypotheses {
            let mut row_map = self
                .pmf
                .remove(&i.to_string())
                .ok_or_else(|| Error::Parse(format!("missing pmf row for hypothesis \"{i}\"")))?;
            let mut row = Vec::with_capacity(self.controls.len());
            for label in &self.controls {
                let probs = row_map.remove(label).ok_or_else(|| {
                    Error::Parse(format!("hypothesis {i} has no pmf for control {label:?}"))
                })?;
                row.push(probs);
            }
            if let Some(extra) = row_map.keys().next() {
                return Err(Error::Parse(format!("hypothesis {i} names unknown control {extra:?}")));
            }
            table.push(row);
        }
        SensingModel::new(self.controls, self.observations, table)
    }
}

/// The three-location sensor-selection example: hypotheses {0,1,2}, controls
/// {a,b,c}, binary observations. Cell (i, u) is `p` (with `p(1) = eps`) when
/// `u` is the sensor at location `i`, and `p̄` (with `p̄(1) = 1 - eps`)
/// otherwise.
pub fn table1_model(eps: f64) -> Result<SensingModel> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(invalid(format!("eps must lie in (0, 1/2), got {eps}")));
    }
    let p = vec![1.0 - eps, eps];
    let p_bar = vec![eps, 1.0 - eps];
    let table = (0..3)
        .map(|i| {
            (0..3)
                .map(|u| if i == u { p.clone() } else { p_bar.clone() })
                .collect()
        })
        .collect();
    SensingModel::new(
        vec!["a".into(), "b".into(), "c".into()],
        vec!["0".into(), "1".into()],
        table,
    )
}

/// Where the pairwise positivity condition `D(p_i^u || p_j^u) > 0` fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub holds_overall: bool,
    /// `(control, i, j)` with `i != j` and `p_i^u == p_j^u`.
    pub failures: Vec<(usize, usize, usize)>,
}

/// Lists every ordered pair of hypotheses that a control cannot tell apart.
/// Under shared support, `D(p||q) = 0` exactly when the pmfs coincide.
pub fn check_positivity(model: &SensingModel) -> PositivityReport {
    let mut failures = Vec::new();
    for u in 0..model.num_controls() {
        for i in 0..model.num_hypotheses() {
            for j in 0..model.num_hypotheses() {
                if i != j && model.pmf(i, u) == model.pmf(j, u) {
                    failures.push((u, i, j));
                }
            }
        }
    }
    PositivityReport {
        holds_overall: failures.is_empty(),
        failures,
    }
}
