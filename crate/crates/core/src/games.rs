//! Maximin over the control simplex: the row player of a zero-sum game picks a
//! mixed strategy over controls, the column player picks an alternative
//! hypothesis.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::Pmf;

/// Rows are controls, columns are alternatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl PayoffMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if nrows == 0 || ncols == 0 {
            return Err(Error::EmptyMatrix);
        }
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(invalid("ragged payoff matrix"));
        }
        let entries: Vec<f64> = rows.into_iter().flatten().collect();
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(invalid("payoff entries must be finite"));
        }
        Ok(Self {
            rows: nrows,
            cols: ncols,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    /// `min_j Σ_u q(u) A[u][j]`: the payoff `q` guarantees.
    pub fn guaranteed(&self, q: &[f64]) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|u| q[u] * self.get(u, j)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_u Σ_j y(j) A[u][j]`: the most the row player can get against `y`.
    pub fn best_response_value(&self, y: &[f64]) -> f64 {
        (0..self.rows)
            .map(|u| self.row(u).iter().zip(y).map(|(a, w)| a * w).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest spread `max - min` within any single row.
    pub fn max_row_spread(&self) -> f64 {
        (0..self.rows)
            .map(|u| {
                let r = self.row(u);
                let hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
                hi - lo
            })
            .fold(0.0, f64::max)
    }

    fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// A pmf over controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MixedStrategy(Pmf);

impl MixedStrategy {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Pmf::new(weights).map(Self)
    }

    pub fn pure(num_controls: usize, control: usize) -> Result<Self> {
        Pmf::point(num_controls, control).map(Self)
    }

    pub fn uniform(num_controls: usize) -> Result<Self> {
        Pmf::uniform(num_controls).map(Self)
    }

    pub fn weights(&self) -> &[f64] {
        self.0.probs()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The control carrying all the mass, if any.
    pub fn as_pure(&self) -> Option<usize> {
        self.weights().iter().position(|&w| w == 1.0)
    }

    /// Draws a control from a uniform in `[0, 1)`.
    pub fn sample_with(&self, uniform: f64) -> usize {
        self.0.sample_with(uniform)
    }

    pub fn as_pmf(&self) -> &Pmf {
        &self.0
    }
}

/// Full output of [`solve_game`].
#[derive(Debug, Clone, PartialEq)]
pub struct MaximinSolution {
    /// Payoff guaranteed by `strategy`.
    pub value: f64,
    pub strategy: MixedStrategy,
    /// Value of the best row response to the column player's optimal mix; the
    /// duality gap is `upper_bound - value`.
    pub upper_bound: f64,
}

/// `max_q min_j Σ_u q(u) A[u][j]` and a maximizing `q`.
pub fn solve_maximin(matrix: &PayoffMatrix) -> Result<(f64, MixedStrategy)> {
    let sol = solve_game(matrix)?;
    Ok((sol.value, sol.strategy))
}

/// Solves the game through its linear-programming form. After shifting every
/// entry to at least 1 the value `v` is positive and
///
/// ```text
/// max Σ y_j  s.t.  B y ≤ 1, y ≥ 0
/// ```
///
/// has optimum `1/v`; its dual prices give the row strategy.
pub fn solve_game(matrix: &PayoffMatrix) -> Result<MaximinSolution> {
    let (m, n) = (matrix.rows, matrix.cols);
    if m == 0 || n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let shift = 1.0 - matrix.min_entry();
    let shifted: Vec<Vec<f64>> = (0..m)
        .map(|u| matrix.row(u).iter().map(|a| a + shift).collect())
        .collect();

    let (x, y) = simplex_packing(&shifted);
    let q = normalize(x).unwrap_or_else(|| {
        // Only reachable through numerical breakdown; fall back on the best
        // pure row.
        let best = (0..m)
            .max_by(|&a, &b| {
                let ga = matrix.row(a).iter().copied().fold(f64::INFINITY, f64::min);
                let gb = matrix.row(b).iter().copied().fold(f64::INFINITY, f64::min);
                ga.total_cmp(&gb).then(b.cmp(&a))
            })
            .unwrap_or(0);
        let mut w = vec![0.0; m];
        w[best] = 1.0;
        w
    });
    let y = normalize(y).unwrap_or_else(|| vec![1.0 / n as f64; n]);

    let value = matrix.guaranteed(&q);
    let upper_bound = matrix.best_response_value(&y);
    Ok(MaximinSolution {
        value,
        strategy: MixedStrategy::new(q)?,
        upper_bound,
    })
}

fn normalize(mut v: Vec<f64>) -> Option<Vec<f64>> {
    for x in v.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let total: f64 = v.iter().sum();
    if total.is_nan() || total <= 0.0 || total.is_infinite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= total);
    // Snap so the weights sum to one to within rounding.
    let s: f64 = v.iter().sum();
    if let Some(big) = v.iter_mut().max_by(|a, b| a.total_cmp(b)) {
        *big += 1.0 - s;
    }
    Some(v)
}

/// Tableau simplex with Bland's rule for `max Σ y  s.t.  B y ≤ 1, y ≥ 0`
/// (`B > 0`). Returns the dual prices `x` (one per row) and the primal `y`.
fn simplex_packing(b: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    const PIVOT_EPS: f64 = 1e-12;
    let m = b.len();
    let n = b[0].len();
    let width = n + m;
    let mut tab: Vec<Vec<f64>> = (0..m)
        .map(|u| {
            let mut row = vec![0.0; width + 1];
            row[..n].copy_from_slice(&b[u]);
            row[n + u] = 1.0;
            row[width] = 1.0;
            row
        })
        .collect();
    let mut obj = vec![0.0; width + 1];
    obj[..n].iter_mut().for_each(|c| *c = -1.0);
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Bland's rule terminates; the cap only guards against NaN poisoning.
    let max_iters = 50 * (width + 1) * (m + 1);
    for _ in 0..max_iters {
        let Some(enter) = (0..width).find(|&c| obj[c] < -PIVOT_EPS) else {
            break;
        };
        let mut leave: Option<usize> = None;
        for r in 0..m {
            let a = tab[r][enter];
            if a <= PIVOT_EPS {
                continue;
            }
            let ratio = tab[r][width] / a;
            leave = match leave {
                None => Some(r),
                Some(l) => {
                    let best = tab[l][width] / tab[l][enter];
                    if ratio < best || (ratio == best && basis[r] < basis[l]) {
                        Some(r)
                    } else {
                        Some(l)
                    }
                }
            };
        }
        // Bounded because B > 0.
        let Some(leave) = leave else { break };

        let pivot = tab[leave][enter];
        tab[leave].iter_mut().for_each(|x| *x /= pivot);
        let pivot_row = tab[leave].clone();
        for (r, row) in tab.iter_mut().enumerate() {
            if r == leave {
                continue;
            }
            let factor = row[enter];
            if factor != 0.0 {
                row.iter_mut().zip(&pivot_row).for_each(|(x, p)| *x -= factor * p);
            }
        }
        let factor = obj[enter];
        obj.iter_mut().zip(&pivot_row).for_each(|(x, p)| *x -= factor * p);
        basis[leave] = enter;
    }

    let x = (0..m).map(|u| obj[n + u]).collect();
    let mut y = vec![0.0; n];
    for (r, &var) in basis.iter().enumerate() {
        if var < n {
            y[var] = tab[r][width];
        }
    }
    (x, y)
}

/// Best value of `min_j Σ_u q(u) A[u][j]` over the lattice of strategies whose
/// weights are multiples of `1/K`, `K = ceil(1/resolution)`.
///
/// The search is exact over the lattice: prefixes of the weight vector are
/// enumerated depth-first, the last two coordinates are closed in exact
/// integer arithmetic (the objective is concave along that segment), and a
/// prefix is dropped only when an upper bound derived from weak duality shows
/// it cannot beat the incumbent. The result is never above the true maximin
/// value and is within `max_row_spread · resolution` of it.
pub fn brute_force_maximin(matrix: &PayoffMatrix, resolution: f64) -> Result<f64> {
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(invalid(format!("resolution must lie in (0, 1], got {resolution}")));
    }
    let k = (1.0 / resolution - 1e-9).ceil().max(1.0) as usize;
    let m = matrix.rows;
    if m == 1 {
        return Ok(matrix.row(0).iter().copied().fold(f64::INFINITY, f64::min));
    }

    let mut search = LatticeSearch::new(matrix, k);
    let mut counts = vec![0usize; m];
    let mut partial = vec![0.0; matrix.cols];
    search.recurse(0, k, &mut counts, &mut partial);
    Ok(search.best)
}

struct LatticeSearch<'a> {
    matrix: &'a PayoffMatrix,
    k: usize,
    best: f64,
    // Column mixtures used for pruning bounds.
    duals: Vec<Vec<f64>>,
    // suffix_max[d][u] = max_{v >= u} dual_row[d][v]
    suffix_max: Vec<Vec<f64>>,
}

impl<'a> LatticeSearch<'a> {
    fn new(matrix: &'a PayoffMatrix, k: usize) -> Self {
        let (m, n) = (matrix.rows, matrix.cols);
        let mut duals: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let mut y = vec![0.0; n];
                y[j] = 1.0;
                y
            })
            .collect();
        duals.push(hedge_columns(matrix, 20_000));
        let dual_row: Vec<Vec<f64>> = duals
            .iter()
            .map(|y| {
                (0..m)
                    .map(|u| matrix.row(u).iter().zip(y).map(|(a, w)| a * w).sum())
                    .collect()
            })
            .collect();
        let suffix_max = dual_row
            .iter()
            .map(|r: &Vec<f64>| {
                let mut s = vec![f64::NEG_INFINITY; m + 1];
                for u in (0..m).rev() {
                    s[u] = s[u + 1].max(r[u]);
                }
                s
            })
            .collect();

        // Seed the incumbent with every pure row and the near-uniform point.
        let mut best = f64::NEG_INFINITY;
        for u in 0..m {
            best = best.max(matrix.row(u).iter().copied().fold(f64::INFINITY, f64::min));
        }
        let mut counts = vec![k / m; m];
        for c in counts.iter_mut().take(k % m) {
            *c += 1;
        }
        let q: Vec<f64> = counts.iter().map(|&c| c as f64 / k as f64).collect();
        best = best.max(matrix.guaranteed(&q));

        Self {
            matrix,
            k,
            best,
            duals,
            suffix_max,
        }
    }

    /// Upper bound on any completion of a prefix ending before row `next`
    /// with `remaining` lattice units still to place.
    fn bound(&self, next: usize, remaining: usize, partial: &[f64]) -> f64 {
        let r = remaining as f64 / self.k as f64;
        self.duals
            .iter()
            .zip(&self.suffix_max)
            .map(|(y, smax)| {
                let fixed: f64 = partial.iter().zip(y).map(|(c, w)| c * w).sum();
                fixed + r * smax[next]
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn recurse(&mut self, row: usize, remaining: usize, counts: &mut [usize], partial: &mut [f64]) {
        let m = self.matrix.rows;
        if row == m - 2 {
            self.close_last_two(remaining, partial);
            return;
        }
        if self.bound(row, remaining, partial) <= self.best {
            return;
        }
        let kf = self.k as f64;
        for t in (0..=remaining).rev() {
            counts[row] = t;
            let w = t as f64 / kf;
            for (c, a) in partial.iter_mut().zip(self.matrix.row(row)) {
                *c += w * a;
            }
            if self.bound(row + 1, remaining - t, partial) > self.best {
                self.recurse(row + 1, remaining - t, counts, partial);
            }
            for (c, a) in partial.iter_mut().zip(self.matrix.row(row)) {
                *c -= w * a;
            }
        }
        counts[row] = 0;
    }

    /// Exact maximum over `t ∈ {0..=r}` of the concave sequence
    /// `min_j partial_j + (t A[m-2][j] + (r-t) A[m-1][j]) / K`.
    fn close_last_two(&mut self, r: usize, partial: &[f64]) {
        let m = self.matrix.rows;
        let kf = self.k as f64;
        let a = self.matrix.row(m - 2);
        let b = self.matrix.row(m - 1);
        let f = |t: usize| -> f64 {
            let wt = t as f64 / kf;
            let wr = (r - t) as f64 / kf;
            partial
                .iter()
                .zip(a.iter().zip(b))
                .map(|(c, (x, y))| c + wt * x + wr * y)
                .fold(f64::INFINITY, f64::min)
        };
        // Nonincreasing differences: binary search on the sign of the step.
        let (mut lo, mut hi) = (0usize, r);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if f(mid) < f(mid + 1) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let mut v = f(lo);
        // Guard against rounding flattening the peak.
        if lo > 0 {
            v = v.max(f(lo - 1));
        }
        if lo < r {
            v = v.max(f(lo + 1));
        }
        if v > self.best {
            self.best = v;
        }
    }
}

/// Approximate optimal column mix by multiplicative weights. Only used to
/// tighten pruning bounds; any column mixture gives a valid bound.
fn hedge_columns(matrix: &PayoffMatrix, iters: usize) -> Vec<f64> {
    let (m, n) = (matrix.rows, matrix.cols);
    let spread = matrix
        .entries
        .iter()
        .fold(0.0f64, |acc, x| acc.max((x - matrix.min_entry()).abs()))
        .max(1e-12);
    let rate = (8.0 * (n as f64).ln().max(1.0) / iters as f64).sqrt() / spread;
    let mut log_w = vec![0.0f64; n];
    let mut avg = vec![0.0f64; n];
    for _ in 0..iters {
        let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = log_w.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = w.iter().sum();
        let y: Vec<f64> = w.iter().map(|x| x / total).collect();
        avg.iter_mut().zip(&y).for_each(|(a, b)| *a += b);
        // Row best response, then columns shift weight toward low payoffs.
        let u = (0..m)
            .max_by(|&a, &b| {
                let pa: f64 = matrix.row(a).iter().zip(&y).map(|(x, w)| x * w).sum();
                let pb: f64 = matrix.row(b).iter().zip(&y).map(|(x, w)| x * w).sum();
                pa.total_cmp(&pb).then(b.cmp(&a))
            })
            .unwrap_or(0);
        for (j, l) in log_w.iter_mut().enumerate() {
            *l -= rate * matrix.get(u, j);
        }
    }
    avg.iter().map(|a| a / iters as f64).collect()
}
