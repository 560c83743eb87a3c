//! Fixed-sample error exponents and the sequential denominators.
//!
//! * binary exponent: `max_u C(p_0^u, p_1^u)` for two hypotheses;
//! * open-loop exponent `β_OL = max_q min_{i≠j} max_s -Σ_u q(u) ln Σ_y p_i^u(y)^s p_j^u(y)^(1-s)`;
//! * causal exponent bounds: the min-pair, max-control Chernoff information
//!   from above and an η-parametrized certificate from below;
//! * sequential denominators `max_q min_{j≠i} Σ_u q(u) D(p_i^u || p_j^u)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::divergences::{chernoff_unchecked, kl};
use crate::error::{invalid, Error, Result};
use crate::games::{solve_maximin, MixedStrategy, PayoffMatrix};
use crate::model::SensingModel;
use crate::optimize::concave_argmax_by_slope;

/// Tolerance on `s` while scanning candidate strategies.
const COARSE_S_TOLERANCE: f64 = 1e-7;
/// Tolerance on `s` for reported values.
const FINE_S_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    /// Spacing of the simplex lattice used to seed the search over `q`.
    pub lattice_resolution: f64,
    /// Smallest mass moved between two controls during local refinement.
    pub refine_step: f64,
    /// The lattice is coarsened until it has at most this many points.
    pub max_lattice_points: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            lattice_resolution: 0.02,
            refine_step: 1e-5,
            max_lattice_points: 200_000,
        }
    }
}

impl OptimizerSettings {
    fn validate(&self) -> Result<()> {
        if !(self.lattice_resolution > 0.0 && self.lattice_resolution <= 1.0) {
            return Err(invalid(format!(
                "lattice resolution must lie in (0, 1], got {}",
                self.lattice_resolution
            )));
        }
        if !(self.refine_step > 0.0 && self.refine_step < 1.0) {
            return Err(invalid(format!("refine step must lie in (0, 1), got {}", self.refine_step)));
        }
        if self.max_lattice_points == 0 {
            return Err(invalid("max_lattice_points must be positive"));
        }
        Ok(())
    }
}

/// `max_u C(p_0^u, p_1^u)` and the least control attaining it.
pub fn binary_exponent(model: &SensingModel) -> Result<(f64, usize)> {
    if model.num_hypotheses() != 2 {
        return Err(invalid(format!(
            "binary exponent needs exactly 2 hypotheses, model has {}",
            model.num_hypotheses()
        )));
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for u in 0..model.num_controls() {
        let c = chernoff_unchecked(model.pmf(0, u).probs(), model.pmf(1, u).probs()).value;
        if c > best.0 {
            best = (c, u);
        }
    }
    Ok(best)
}

/// Log-probabilities of one hypothesis pair under one control, restricted to
/// the shared support.
struct PairLogs {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PairLogs {
    fn new(p0: &[f64], p1: &[f64]) -> Self {
        let (a, b) = p0
            .iter()
            .zip(p1)
            .filter(|(x, _)| **x > 0.0)
            .map(|(x, y)| (x.ln(), y.ln()))
            .unzip();
        Self { a, b }
    }

    fn neg_log_sum(&self, s: f64) -> f64 {
        let total: f64 = self.a.iter().zip(&self.b).map(|(a, b)| (s * a + (1.0 - s) * b).exp()).sum();
        -total.ln()
    }

    /// Derivative of [`Self::neg_log_sum`] in `s`.
    fn slope(&self, s: f64) -> f64 {
        let mut total = 0.0;
        let mut moment = 0.0;
        for (a, b) in self.a.iter().zip(&self.b) {
            let w = (s * a + (1.0 - s) * b).exp();
            total += w;
            moment += w * (a - b);
        }
        -moment / total
    }

    fn identical(&self) -> bool {
        self.a == self.b
    }
}

/// The open-loop objective as a function of the control mix.
struct OpenLoopObjective {
    /// `logs[pair][control]`, pairs `i < j`.
    logs: Vec<Vec<PairLogs>>,
    controls: usize,
}

impl OpenLoopObjective {
    fn new(model: &SensingModel) -> Self {
        let m = model.num_hypotheses();
        let mut logs = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                logs.push(
                    (0..model.num_controls())
                        .map(|u| PairLogs::new(model.pmf(i, u).probs(), model.pmf(j, u).probs()))
                        .collect(),
                );
            }
        }
        Self {
            logs,
            controls: model.num_controls(),
        }
    }

    /// `max_s -Σ_u q(u) ln R_u(s)` for one pair, with the maximizing `s`.
    fn pair_value(&self, pair: usize, q: &[f64], tol: f64) -> (f64, f64) {
        let logs = &self.logs[pair];
        let active: Vec<usize> = (0..self.controls).filter(|&u| q[u] > 0.0 && !logs[u].identical()).collect();
        if active.is_empty() {
            return (0.0, 0.5);
        }
        let slope = |s: f64| {
            active
                .iter()
                .map(|&u| q[u] * logs[u].slope(s))
                .sum::<f64>()
        };
        let s = concave_argmax_by_slope(slope, 0.0, 1.0, tol);
        let value: f64 = active.iter().map(|&u| q[u] * logs[u].neg_log_sum(s)).sum();
        (value.max(0.0), s)
    }

    fn value(&self, q: &[f64], tol: f64) -> f64 {
        (0..self.logs.len())
            .map(|p| self.pair_value(p, q, tol).0)
            .fold(f64::INFINITY, f64::min)
    }

    /// One alternating step: freeze each pair's `s` at its optimum for `q`
    /// and solve the resulting linear maximin over the control mix. The
    /// returned mix is never worse than `q`.
    fn linearized_step(&self, q: &[f64]) -> Option<Vec<f64>> {
        let s: Vec<f64> = (0..self.logs.len()).map(|p| self.pair_value(p, q, FINE_S_TOLERANCE).1).collect();
        let rows = (0..self.controls)
            .map(|u| {
                self.logs
                    .iter()
                    .zip(&s)
                    .map(|(logs, &sp)| logs[u].neg_log_sum(sp).max(0.0))
                    .collect()
            })
            .collect();
        let matrix = PayoffMatrix::new(rows).ok()?;
        let (_, strategy) = solve_maximin(&matrix).ok()?;
        Some(strategy.weights().to_vec())
    }
}

/// Every composition of `total` into `parts` nonnegative integers, in
/// lexicographic order of the leading coordinates.
fn for_each_composition(total: usize, parts: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(prefix: &mut Vec<usize>, left: usize, parts: usize, f: &mut impl FnMut(&[usize])) {
        if prefix.len() + 1 == parts {
            prefix.push(left);
            f(prefix);
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(prefix, left - k, parts, f);
            prefix.pop();
        }
    }
    if parts == 0 {
        return;
    }
    rec(&mut Vec::with_capacity(parts), total, parts, f);
}

fn lattice_size(total: usize, parts: usize) -> f64 {
    // C(total + parts - 1, parts - 1)
    (1..parts).fold(1.0, |acc, k| acc * (total + k) as f64 / k as f64)
}

/// Number of lattice steps per unit, coarsened until the lattice fits.
fn lattice_divisions(resolution: f64, parts: usize, max_points: usize) -> usize {
    let mut k = (1.0 / resolution).round().max(1.0) as usize;
    while k > 1 && lattice_size(k, parts) > max_points as f64 {
        k -= 1;
    }
    k
}

/// Open-loop exponent and an optimizing control mix.
///
/// The objective is a minimum of convex functions of `q`, so it is searched
/// globally: every point of a simplex lattice is scored, and the best few
/// seeds are refined by alternating linearized maximin steps with pairwise
/// mass transfers down to `refine_step`. The value reported is the objective
/// at the returned mix, hence achievable.
pub fn open_loop_exponent(model: &SensingModel, settings: &OptimizerSettings) -> Result<(f64, MixedStrategy)> {
    settings.validate()?;
    if model.num_hypotheses() < 2 {
        return Err(invalid("open-loop exponent needs at least 2 hypotheses"));
    }
    let objective = OpenLoopObjective::new(model);
    let controls = model.num_controls();
    let k = lattice_divisions(settings.lattice_resolution, controls, settings.max_lattice_points);

    const SEEDS: usize = 4;
    let mut seeds: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut consider = |value: f64, q: Vec<f64>| {
        if seeds.len() < SEEDS || value > seeds[SEEDS - 1].0 {
            let at = seeds.iter().position(|(v, _)| value > *v).unwrap_or(seeds.len());
            seeds.insert(at, (value, q));
            seeds.truncate(SEEDS);
        }
    };
    for_each_composition(k, controls, &mut |c| {
        let q: Vec<f64> = c.iter().map(|&x| x as f64 / k as f64).collect();
        let v = objective.value(&q, COARSE_S_TOLERANCE);
        consider(v, q);
    });
    let uniform = vec![1.0 / controls as f64; controls];
    let v = objective.value(&uniform, COARSE_S_TOLERANCE);
    consider(v, uniform);

    let mut best: Option<(f64, Vec<f64>)> = None;
    for (_, seed) in seeds {
        let (v, q) = refine(&objective, seed, settings.refine_step);
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, q));
        }
    }
    let (value, q) = best.expect("lattice is never empty");
    Ok((value, MixedStrategy::new(q)?))
}

fn refine(objective: &OpenLoopObjective, mut q: Vec<f64>, min_step: f64) -> (f64, Vec<f64>) {
    let eval = |q: &[f64]| objective.value(q, FINE_S_TOLERANCE);
    let mut value = eval(&q);
    for _round in 0..20 {
        let start = value;
        if let Some(candidate) = objective.linearized_step(&q) {
            let v = eval(&candidate);
            if v > value {
                value = v;
                q = candidate;
            }
        }
        let mut step = 0.01;
        while step >= min_step * (1.0 - 1e-9) {
            let mut improved = true;
            let mut sweeps = 0;
            while improved && sweeps < 1000 {
                improved = false;
                sweeps += 1;
                for from in 0..q.len() {
                    for to in 0..q.len() {
                        if from == to || q[from] <= 0.0 {
                            continue;
                        }
                        let moved = step.min(q[from]);
                        let mut candidate = q.clone();
                        candidate[from] -= moved;
                        candidate[to] += moved;
                        let v = eval(&candidate);
                        if v > value + 1e-15 {
                            value = v;
                            q = candidate;
                            improved = true;
                        }
                    }
                }
            }
            step /= 10.0;
        }
        if value <= start + 1e-14 {
            break;
        }
    }
    (value, q)
}

/// `min_{i<j} max_u C(p_i^u, p_j^u)`: no causal policy beats the hardest
/// pair even if it were told which pair it faces.
pub fn causal_upper_bound(model: &SensingModel) -> Result<f64> {
    let m = model.num_hypotheses();
    if m <= 2 {
        return Err(invalid(format!("causal bounds need more than 2 hypotheses, model has {m}")));
    }
    let mut bound = f64::INFINITY;
    for i in 0..m {
        for j in i + 1..m {
            let best = (0..model.num_controls())
                .map(|u| chernoff_unchecked(model.pmf(i, u).probs(), model.pmf(j, u).probs()).value)
                .fold(0.0, f64::max);
            bound = bound.min(best);
        }
    }
    Ok(bound)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalLowerBound {
    /// `-ln` of the inner supremum taken over the ν lattice only. The lattice
    /// under-approximates the supremum, so this can overstate the bound.
    pub lattice: f64,
    /// `-ln` of a certified upper bound on the inner supremum: a valid lower
    /// bound on the causal exponent.
    pub safe: f64,
    /// The η attaining `safe`.
    pub best_eta: f64,
}

/// Branch-and-bound limits for certifying the inner supremum over ν.
const CERTIFY_GAP: f64 = 1e-6;
const CERTIFY_MAX_BOXES: usize = 200_000;

/// The causal lower bound
/// `max_η -ln sup_ν min_u max_i Σ_y p_i^u(y) exp(η [Σ_j ν(j) p_j^u(y) - p_i^u(y)] / (1 - ν(i)))`,
/// ν ranging over non-degenerate distributions on the hypotheses.
///
/// For each η the supremum is scanned on a lattice of spacing
/// `nu_resolution` and then certified by branch-and-bound over boxes of ν;
/// η values whose lattice figure cannot beat the best certified one are
/// skipped.
pub fn causal_lower_bound(model: &SensingModel, eta_grid: &[f64], nu_resolution: f64) -> Result<CausalLowerBound> {
    let m = model.num_hypotheses();
    if m <= 2 {
        return Err(invalid(format!("causal bounds need more than 2 hypotheses, model has {m}")));
    }
    if eta_grid.is_empty() || eta_grid.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(invalid("eta grid must be a nonempty list of positive numbers"));
    }
    if !(nu_resolution > 0.0 && nu_resolution < 1.0) {
        return Err(invalid(format!("nu resolution must lie in (0, 1), got {nu_resolution}")));
    }
    let integrand = Integrand::new(model);
    let k = lattice_divisions(nu_resolution, m, 400_000).max(2);

    // Lattice supremum for every η in one pass over the lattice.
    let mut lattice_sup = vec![f64::NEG_INFINITY; eta_grid.len()];
    let mut lattice_arg = vec![Vec::new(); eta_grid.len()];
    let cutoff = 1.0 - 0.5 / k as f64;
    for_each_composition(k, m, &mut |c| {
        let nu: Vec<f64> = c.iter().map(|&x| x as f64 / k as f64).collect();
        if nu.iter().any(|&x| x >= cutoff) {
            return;
        }
        for (e, &eta) in eta_grid.iter().enumerate() {
            let g = integrand.at(&nu, eta);
            if g > lattice_sup[e] {
                lattice_sup[e] = g;
                lattice_arg[e] = nu.clone();
            }
        }
    });

    let mut order: Vec<usize> = (0..eta_grid.len()).collect();
    order.sort_by(|&a, &b| lattice_sup[a].total_cmp(&lattice_sup[b]).then(a.cmp(&b)));

    let lattice = order.first().map(|&e| -lattice_sup[e].ln()).unwrap_or(0.0);
    let mut safe = f64::NEG_INFINITY;
    let mut best_eta = eta_grid[order[0]];
    for &e in &order {
        if -lattice_sup[e].ln() <= safe {
            continue;
        }
        let certified = integrand.certify_sup(eta_grid[e], lattice_sup[e]);
        let value = -certified.ln();
        if value > safe {
            safe = value;
            best_eta = eta_grid[e];
        }
    }
    Ok(CausalLowerBound {
        lattice,
        safe,
        best_eta,
    })
}

/// `min_u max_i Σ_y p_i^u(y) exp(η Σ_{j≠i} w_j (p_j^u(y) - p_i^u(y)))` with
/// `w_j = ν(j) / (1 - ν(i))`.
struct Integrand {
    /// `probs[u][i][y]`
    probs: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
struct NuBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
    bound: f64,
}

impl PartialEq for NuBox {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for NuBox {}
impl PartialOrd for NuBox {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for NuBox {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound)
    }
}

impl Integrand {
    fn new(model: &SensingModel) -> Self {
        let probs = (0..model.num_controls())
            .map(|u| {
                (0..model.num_hypotheses())
                    .map(|i| model.pmf(i, u).probs().to_vec())
                    .collect()
            })
            .collect();
        Self { probs }
    }

    fn hypotheses(&self) -> usize {
        self.probs[0].len()
    }

    fn at(&self, nu: &[f64], eta: f64) -> f64 {
        let mut outer = f64::INFINITY;
        for table in &self.probs {
            let mut inner = f64::NEG_INFINITY;
            for (i, pi) in table.iter().enumerate() {
                let scale = eta / (1.0 - nu[i]);
                let mut total = 0.0;
                for (y, &piy) in pi.iter().enumerate() {
                    if piy == 0.0 {
                        continue;
                    }
                    let mix: f64 = table.iter().zip(nu).map(|(p, w)| w * p[y]).sum();
                    total += piy * (scale * (mix - piy)).exp();
                }
                inner = inner.max(total);
            }
            outer = outer.min(inner);
        }
        outer
    }

    /// Full-coordinate intervals for a box over the first `M - 1`
    /// coordinates of ν, or `None` if the box misses the simplex.
    fn intervals(lo: &[f64], hi: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let sum_lo: f64 = lo.iter().sum();
        let sum_hi: f64 = hi.iter().sum();
        if sum_lo > 1.0 {
            return None;
        }
        let mut l = lo.to_vec();
        let mut h = hi.to_vec();
        l.push((1.0 - sum_hi).max(0.0));
        h.push(1.0 - sum_lo);
        Some((l, h))
    }

    /// Upper bound of the integrand over a box of ν: each `(u, i, y)` term is
    /// maximized separately over the conditional weights `w`, which range
    /// within per-coordinate intervals and sum to one.
    fn box_bound(&self, lo: &[f64], hi: &[f64], eta: f64) -> Option<f64> {
        let (l, h) = Self::intervals(lo, hi)?;
        let m = self.hypotheses();
        let mut outer = f64::INFINITY;
        let mut w_lo = vec![0.0; m];
        let mut w_hi = vec![0.0; m];
        for table in &self.probs {
            let mut inner = f64::NEG_INFINITY;
            for (i, pi) in table.iter().enumerate() {
                // w_j = ν_j / (1 - ν_i) grows with both ν_j and ν_i.
                for j in 0..m {
                    if j == i {
                        w_lo[j] = 0.0;
                        w_hi[j] = 0.0;
                        continue;
                    }
                    w_lo[j] = (l[j] / (1.0 - l[i])).min(1.0);
                    w_hi[j] = if h[i] >= 1.0 { 1.0 } else { (h[j] / (1.0 - h[i])).min(1.0) };
                }
                let lo_mass: f64 = w_lo.iter().sum();
                let hi_mass: f64 = w_hi.iter().sum();
                if lo_mass > 1.0 + 1e-12 || hi_mass < 1.0 - 1e-12 {
                    // No admissible w: ν_i = 1 throughout, a point mass.
                    continue;
                }
                let others: Vec<usize> = (0..m).filter(|&j| j != i).collect();
                let total = Self::vertex_max(table, pi, &others, &w_lo, &w_hi, eta)
                    .unwrap_or_else(|| Self::knapsack_bound(table, pi, &others, &w_lo, &w_hi, eta));
                inner = inner.max(total);
            }
            if inner == f64::NEG_INFINITY {
                // No admissible ν in the box.
                return None;
            }
            outer = outer.min(inner);
        }
        Some(outer)
    }

    /// `max_w Σ_y p_i(y) exp(η Σ_j w_j (p_j(y) - p_i(y)))` over
    /// `{lo <= w <= hi, Σ w = 1}`. The objective is convex in `w`, so the
    /// maximum sits on a vertex, where every coordinate but one is at a bound.
    fn vertex_max(
        table: &[Vec<f64>],
        pi: &[f64],
        others: &[usize],
        lo: &[f64],
        hi: &[f64],
        eta: f64,
    ) -> Option<f64> {
        let n = others.len();
        let mut w = vec![0.0; table.len()];
        let mut best: Option<f64> = None;
        for free in 0..n {
            for mask in 0u64..(1u64 << (n - 1)) {
                let mut bit = 0;
                let mut fixed = 0.0;
                for (k, &j) in others.iter().enumerate() {
                    if k == free {
                        continue;
                    }
                    w[j] = if mask >> bit & 1 == 1 { hi[j] } else { lo[j] };
                    fixed += w[j];
                    bit += 1;
                }
                let f = others[free];
                let rest = 1.0 - fixed;
                if rest < lo[f] - 1e-12 || rest > hi[f] + 1e-12 {
                    continue;
                }
                w[f] = rest.clamp(lo[f], hi[f]);
                let value: f64 = pi
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(y, &piy)| {
                        let shift: f64 = others.iter().map(|&j| w[j] * (table[j][y] - piy)).sum();
                        piy * (eta * shift).exp()
                    })
                    .sum();
                best = Some(best.map_or(value, |b| b.max(value)));
            }
        }
        best
    }

    /// Looser bound maximizing each observation's term separately by a
    /// fractional knapsack; used only if rounding hides every vertex.
    fn knapsack_bound(
        table: &[Vec<f64>],
        pi: &[f64],
        others: &[usize],
        lo: &[f64],
        hi: &[f64],
        eta: f64,
    ) -> f64 {
        let lo_mass: f64 = others.iter().map(|&j| lo[j]).sum();
        let mut order = others.to_vec();
        let mut total = 0.0;
        for (y, &piy) in pi.iter().enumerate() {
            if piy == 0.0 {
                continue;
            }
            order.sort_by(|&a, &b| table[b][y].total_cmp(&table[a][y]));
            let mut spare = 1.0 - lo_mass;
            let mut best = 0.0;
            for &j in &order {
                let extra = spare.clamp(0.0, hi[j] - lo[j]);
                spare -= extra;
                best += (lo[j] + extra) * (table[j][y] - piy);
            }
            total += piy * (eta * best).exp();
        }
        total
    }

    /// A certified upper bound on `sup_ν` of the integrand, starting from a
    /// known attained value `floor`.
    fn certify_sup(&self, eta: f64, floor: f64) -> f64 {
        let dims = self.hypotheses() - 1;
        let mut incumbent = floor;
        let mut heap = BinaryHeap::new();
        let (lo, hi) = (vec![0.0; dims], vec![1.0; dims]);
        if let Some(bound) = self.box_bound(&lo, &hi, eta) {
            heap.push(NuBox { lo, hi, bound });
        }
        let mut processed = 0;
        while let Some(top) = heap.peek() {
            if top.bound <= incumbent + CERTIFY_GAP || processed >= CERTIFY_MAX_BOXES {
                break;
            }
            let cell = heap.pop().expect("peeked");
            processed += 1;
            let axis = (0..dims)
                .max_by(|&a, &b| (cell.hi[a] - cell.lo[a]).total_cmp(&(cell.hi[b] - cell.lo[b])).then(b.cmp(&a)))
                .expect("at least one axis");
            let mid = 0.5 * (cell.lo[axis] + cell.hi[axis]);
            for (lo_v, hi_v) in [(cell.lo[axis], mid), (mid, cell.hi[axis])] {
                let mut lo = cell.lo.clone();
                let mut hi = cell.hi.clone();
                lo[axis] = lo_v;
                hi[axis] = hi_v;
                let Some(bound) = self.box_bound(&lo, &hi, eta) else {
                    continue;
                };
                if let Some(nu) = Self::interior_point(&lo, &hi) {
                    incumbent = incumbent.max(self.at(&nu, eta));
                }
                if bound > incumbent {
                    heap.push(NuBox { lo, hi, bound });
                }
            }
        }
        heap.peek().map_or(incumbent, |top| top.bound.max(incumbent))
    }

    /// A non-degenerate distribution inside the box, if its center is one.
    fn interior_point(lo: &[f64], hi: &[f64]) -> Option<Vec<f64>> {
        let mut nu: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let last = 1.0 - nu.iter().sum::<f64>();
        if last < 0.0 {
            return None;
        }
        nu.push(last);
        if nu.iter().any(|&x| x >= 1.0) {
            return None;
        }
        Some(nu)
    }
}

/// `max_q min_{j≠i} Σ_u q(u) D(p_i^u || p_j^u)`: the drift the Chernoff test
/// achieves while hypothesis `i` is the ML estimate.
pub fn sequential_denominator(model: &SensingModel, i: usize) -> Result<(f64, MixedStrategy)> {
    model.check_hypothesis(i)?;
    let m = model.num_hypotheses();
    if m < 2 {
        return Err(Error::EmptyMatrix);
    }
    let mut rows = Vec::with_capacity(model.num_controls());
    for u in 0..model.num_controls() {
        let mut row = Vec::with_capacity(m - 1);
        for j in (0..m).filter(|&j| j != i) {
            row.push(kl(model.pmf(i, u), model.pmf(j, u))?);
        }
        rows.push(row);
    }
    solve_maximin(&PayoffMatrix::new(rows)?)
}

/// The η that makes the causal lower bound tight for the three-hypothesis
/// example with crossover `eps`.
pub fn table1_eta(eps: f64) -> f64 {
    2.0 * ((1.0 - eps) / eps).ln() / (3.0 * (1.0 - 2.0 * eps))
}

/// Recognizes the three-hypothesis example and returns its crossover
/// probability.
pub fn table1_epsilon(model: &SensingModel) -> Option<f64> {
    if model.num_hypotheses() != 3 || model.num_controls() != 3 || model.num_observations() != 2 {
        return None;
    }
    let eps = model.pmf(0, 0).get(1);
    if !(eps > 0.0 && eps < 0.5) {
        return None;
    }
    for i in 0..3 {
        for u in 0..3 {
            let one = if i == u { eps } else { 1.0 - eps };
            let p = model.pmf(i, u).probs();
            if (p[1] - one).abs() > 1e-12 || (p[0] - (1.0 - one)).abs() > 1e-12 {
                return None;
            }
        }
    }
    Some(eps)
}

/// `{0.05 k : 1 <= k <= 100}`, plus the example's tight η when `model` is
/// the three-hypothesis example.
pub fn default_eta_grid(model: &SensingModel) -> Vec<f64> {
    let mut grid: Vec<f64> = (1..=100).map(|k| 0.05 * k as f64).collect();
    if let Some(eps) = table1_epsilon(model) {
        grid.push(table1_eta(eps));
    }
    grid
}

pub const DEFAULT_NU_RESOLUTION: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExampleClosedForms {
    pub beta_ol: f64,
    pub causal_lb: f64,
    pub causal_ub: f64,
    /// Single-sensor Chernoff information, sometimes quoted in place of the
    /// sequential denominator.
    pub seq_denominator_paper: f64,
    /// The value the maximin evaluates to.
    pub seq_denominator_derived: f64,
}

/// Closed-form exponents of the three-hypothesis example.
pub fn example_closed_forms(eps: f64) -> Result<ExampleClosedForms> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(invalid(format!("eps must lie in (0, 1/2), got {eps}")));
    }
    let chernoff = -(2.0 * (eps * (1.0 - eps)).sqrt()).ln();
    let third = 1.0 / 3.0;
    let lb = -(eps.powf(third) * (1.0 - eps).powf(2.0 * third) + eps.powf(2.0 * third) * (1.0 - eps).powf(third)).ln();
    Ok(ExampleClosedForms {
        beta_ol: 2.0 * third * chernoff,
        causal_lb: lb,
        causal_ub: chernoff,
        seq_denominator_paper: chernoff,
        seq_denominator_derived: (1.0 - 2.0 * eps) * ((1.0 - eps) / eps).ln(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binary_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binary_control: Option<String>,
    pub open_loop_exponent: f64,
    pub open_loop_q: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub causal_lower: Option<CausalLowerBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub causal_upper: Option<f64>,
    pub sequential_denominators: Vec<f64>,
    pub sequential_strategies: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentSettings {
    pub optimizer: OptimizerSettings,
    /// `None` selects [`default_eta_grid`].
    pub eta_grid: Option<Vec<f64>>,
    pub nu_resolution: f64,
}

impl Default for ExponentSettings {
    fn default() -> Self {
        Self {
            optimizer: OptimizerSettings::default(),
            eta_grid: None,
            nu_resolution: DEFAULT_NU_RESOLUTION,
        }
    }
}

/// Everything above for one model. Two-hypothesis models get the binary
/// exponent instead of the causal bounds, which coincide with it.
pub fn exponent_report(model: &SensingModel, settings: &ExponentSettings) -> Result<ExponentReport> {
    let m = model.num_hypotheses();
    let (open_loop_exponent, q) = open_loop_exponent(model, &settings.optimizer)?;
    let (binary_exponent, binary_control) = if m == 2 {
        let (v, u) = binary_exponent(model)?;
        (Some(v), Some(model.control_label(u).to_string()))
    } else {
        (None, None)
    };
    let (causal_lower, causal_upper) = if m > 2 {
        let grid = settings.eta_grid.clone().unwrap_or_else(|| default_eta_grid(model));
        (
            Some(causal_lower_bound(model, &grid, settings.nu_resolution)?),
            Some(causal_upper_bound(model)?),
        )
    } else {
        (None, None)
    };
    let mut sequential_denominators = Vec::with_capacity(m);
    let mut sequential_strategies = Vec::with_capacity(m);
    for i in 0..m {
        let (v, q) = sequential_denominator(model, i)?;
        sequential_denominators.push(v);
        sequential_strategies.push(q.weights().to_vec());
    }
    Ok(ExponentReport {
        binary_exponent,
        binary_control,
        open_loop_exponent,
        open_loop_q: q.weights().to_vec(),
        causal_lower,
        causal_upper,
        sequential_denominators,
        sequential_strategies,
    })
}
