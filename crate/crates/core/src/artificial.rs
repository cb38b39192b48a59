//! Artificial trust of a pragmatic robotic trustor.
//!
//! With very steep sigmoids the natural-trust kernel becomes a step, and
//! trust under a uniform belief reduces to a product of piecewise-linear
//! factors [`psi`]. A robot can also identify the belief bounds directly
//! from logged outcomes: tasks are binned on the requirement grid, each bin
//! gets an empirical success rate, and the bounds are chosen to minimise the
//! squared mismatch between the closed-form trust and those rates.

use serde::{Deserialize, Serialize};

use crate::belief::UniformBelief;
use crate::capability::{check_dim, CapabilityVector, OutcomeRecord};
use crate::error::{Result, TrustError};

/// Objectives within this distance of the optimum count as tied.
pub const OBJECTIVE_TIE_TOLERANCE: f64 = 1e-10;

/// Default lattice spacing for candidate bounds.
pub const DEFAULT_RESOLUTION: f64 = 0.05;

/// Coordinate-descent sweeps used when n > 2.
pub const COORDINATE_SWEEPS: usize = 3;

/// Per-dimension artificial trust factor.
///
/// `1` up to `lower`, a straight line down to `0` at `upper`, and `0`
/// beyond. A collapsed interval is a step at `lower`.
pub fn psi(lambda_bar: f64, lower: f64, upper: f64) -> Result<f64> {
    if !(0.0 <= lower && lower <= upper && upper <= 1.0) {
        return Err(TrustError::InvalidBounds { index: 0, lower, upper });
    }
    Ok(psi_unchecked(lambda_bar, lower, upper))
}

#[inline]
fn psi_unchecked(x: f64, l: f64, u: f64) -> f64 {
    if x <= l {
        1.0
    } else if x >= u {
        0.0
    } else {
        (u - x) / (u - l)
    }
}

/// Closed-form trust of a robotic trustor holding `belief`.
pub fn artificial_trust(belief: &UniformBelief, lambda_bar: &CapabilityVector) -> Result<f64> {
    lambda_bar.check_dim(belief.dim())?;
    Ok((0..belief.dim())
        .map(|i| {
            let (l, u) = belief.bounds(i);
            psi_unchecked(lambda_bar.get(i), l, u)
        })
        .product())
}

/// Success and attempt counts on a regular `bins_per_dim^n` requirement grid.
///
/// Bins are stored row-major with dimension 0 most significant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalTrustGrid {
    dim: usize,
    bins_per_dim: usize,
    successes: Vec<u64>,
    totals: Vec<u64>,
}

impl EmpiricalTrustGrid {
    pub fn new(dim: usize, bins_per_dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(TrustError::ZeroDimensions);
        }
        if bins_per_dim == 0 {
            return Err(TrustError::InvalidArgument("bins_per_dim must be >= 1".into()));
        }
        let cells = bins_per_dim
            .checked_pow(dim as u32)
            .filter(|&c| c <= 1 << 26)
            .ok_or_else(|| TrustError::InvalidArgument(format!("grid {bins_per_dim}^{dim} is too large")))?;
        Ok(Self {
            dim,
            bins_per_dim,
            successes: vec![0; cells],
            totals: vec![0; cells],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bins_per_dim(&self) -> usize {
        self.bins_per_dim
    }

    pub fn cell_count(&self) -> usize {
        self.totals.len()
    }

    /// Per-dimension bin of a requirement vector; `1.0` lands in the top bin.
    pub fn bin_of(&self, lambda_bar: &CapabilityVector) -> Result<Vec<usize>> {
        lambda_bar.check_dim(self.dim)?;
        Ok(lambda_bar
            .values()
            .iter()
            .map(|&x| ((x * self.bins_per_dim as f64).floor() as usize).min(self.bins_per_dim - 1))
            .collect())
    }

    pub fn flat_index(&self, bin: &[usize]) -> Result<usize> {
        check_dim(self.dim, bin.len())?;
        let mut flat = 0;
        for &k in bin {
            if k >= self.bins_per_dim {
                return Err(TrustError::InvalidArgument(format!(
                    "bin index {k} out of range 0..{}",
                    self.bins_per_dim
                )));
            }
            flat = flat * self.bins_per_dim + k;
        }
        Ok(flat)
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut bin = vec![0; self.dim];
        for slot in bin.iter_mut().rev() {
            *slot = flat % self.bins_per_dim;
            flat /= self.bins_per_dim;
        }
        bin
    }

    /// Bin center along one axis.
    pub fn center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) / self.bins_per_dim as f64
    }

    pub fn centers_of(&self, bin: &[usize]) -> Vec<f64> {
        bin.iter().map(|&k| self.center(k)).collect()
    }

    pub fn add(&mut self, record: &OutcomeRecord) -> Result<()> {
        let bin = self.bin_of(record.requirements())?;
        let flat = self.flat_index(&bin)?;
        self.totals[flat] += 1;
        if record.outcome.is_success() {
            self.successes[flat] += 1;
        }
        Ok(())
    }

    /// Returns a copy with `record` counted.
    pub fn accumulate(&self, record: &OutcomeRecord) -> Result<Self> {
        let mut next = self.clone();
        next.add(record)?;
        Ok(next)
    }

    pub fn successes(&self, bin: &[usize]) -> Result<u64> {
        Ok(self.successes[self.flat_index(bin)?])
    }

    pub fn totals(&self, bin: &[usize]) -> Result<u64> {
        Ok(self.totals[self.flat_index(bin)?])
    }

    pub fn total_observations(&self) -> u64 {
        self.totals.iter().sum()
    }

    /// Empirical success rate of a bin; `None` when nothing landed there.
    pub fn tau_hat(&self, bin: &[usize]) -> Result<Option<f64>> {
        let flat = self.flat_index(bin)?;
        Ok(self.tau_hat_flat(flat))
    }

    fn tau_hat_flat(&self, flat: usize) -> Option<f64> {
        match self.totals[flat] {
            0 => None,
            t => Some(self.successes[flat] as f64 / t as f64),
        }
    }

    /// `(bin, tau_hat)` for every non-empty bin, in row-major order.
    pub fn observed_bins(&self) -> Vec<(Vec<usize>, f64)> {
        (0..self.cell_count())
            .filter_map(|flat| self.tau_hat_flat(flat).map(|t| (self.unflatten(flat), t)))
            .collect()
    }

    /// Artificial trust of `belief` evaluated at every bin center, row-major.
    pub fn trust_surface(&self, belief: &UniformBelief) -> Result<Vec<f64>> {
        check_dim(self.dim, belief.dim())?;
        (0..self.cell_count())
            .map(|flat| {
                let c = CapabilityVector::new(self.centers_of(&self.unflatten(flat)))?;
                artificial_trust(belief, &c)
            })
            .collect()
    }

    /// One row per bin: bin indices, center coordinates, successes, totals.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let cols: Vec<String> = (0..self.dim)
            .map(|i| format!("bin_{i}"))
            .chain((0..self.dim).map(|i| format!("center_{i}")))
            .chain(["successes".to_string(), "totals".to_string()])
            .collect();
        out.push_str(&cols.join(","));
        out.push('\n');
        for flat in 0..self.cell_count() {
            let bin = self.unflatten(flat);
            let mut row: Vec<String> = bin.iter().map(|k| k.to_string()).collect();
            row.extend(bin.iter().map(|&k| self.center(k).to_string()));
            row.push(self.successes[flat].to_string());
            row.push(self.totals[flat].to_string());
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses [`to_table`](Self::to_table) output.
    pub fn from_table(text: &str) -> Result<Self> {
        let bad = |line: usize, why: &str| TrustError::InvalidArgument(format!("grid table line {line}: {why}"));
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad(1, "missing header"))?;
        let ncols = header.split(',').count();
        if ncols < 4 || (ncols - 2) % 2 != 0 {
            return Err(bad(1, "unexpected column count"));
        }
        let dim = (ncols - 2) / 2;
        let rows: Vec<Vec<&str>> = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split(',').collect())
            .collect();
        let bins = (rows.len() as f64).powf(1.0 / dim as f64).round() as usize;
        let mut grid = Self::new(dim, bins.max(1))?;
        if grid.cell_count() != rows.len() {
            return Err(bad(1, "row count is not bins^dim"));
        }
        for (r, row) in rows.iter().enumerate() {
            let line = r + 2;
            if row.len() != ncols {
                return Err(bad(line, "wrong number of fields"));
            }
            let bin = row[..dim]
                .iter()
                .map(|f| f.trim().parse::<usize>().map_err(|_| bad(line, "bad bin index")))
                .collect::<Result<Vec<_>>>()?;
            let s: u64 = row[ncols - 2].trim().parse().map_err(|_| bad(line, "bad successes"))?;
            let t: u64 = row[ncols - 1].trim().parse().map_err(|_| bad(line, "bad totals"))?;
            if s > t {
                return Err(bad(line, "successes exceed totals"));
            }
            let flat = grid.flat_index(&bin)?;
            grid.successes[flat] = s;
            grid.totals[flat] = t;
        }
        Ok(grid)
    }

    /// Sets raw counts for one bin. Used to build synthetic grids.
    pub fn set_counts(&mut self, bin: &[usize], successes: u64, totals: u64) -> Result<()> {
        if successes > totals {
            return Err(TrustError::InvalidArgument("successes exceed totals".into()));
        }
        let flat = self.flat_index(bin)?;
        self.successes[flat] = successes;
        self.totals[flat] = totals;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub belief: UniformBelief,
    pub objective: f64,
    pub evaluations: u64,
}

/// Candidate bounds `(lower, upper)` as lattice indices.
type Pair = (usize, usize);

/// Mean of `psi` and `psi^2` over every grid cell, for every lattice pair.
struct CellMoments {
    pairs: Vec<Pair>,
    // [pair][bin]
    mean: Vec<Vec<f64>>,
    mean_sq: Vec<Vec<f64>>,
}

/// `int_a^b psi(x) dx` and `int_a^b psi(x)^2 dx` for bounds `(l, u)`.
pub(crate) fn psi_cell_integrals(a: f64, b: f64, l: f64, u: f64) -> (f64, f64) {
    // flat part where psi = 1
    let flat = (b.min(l) - a).max(0.0);
    if l >= u {
        return (flat, flat);
    }
    let x1 = a.max(l);
    let x2 = b.min(u);
    if x2 <= x1 {
        return (flat, flat);
    }
    let w = u - l;
    let (r1, r2) = (u - x1, u - x2);
    let lin = (r1 * r1 - r2 * r2) / (2.0 * w);
    let quad = (r1 * r1 * r1 - r2 * r2 * r2) / (3.0 * w * w);
    (flat + lin, flat + quad)
}

impl CellMoments {
    fn new(lattice: usize, bins: usize) -> Self {
        let pairs: Vec<Pair> = (0..=lattice)
            .flat_map(|lo| (lo..=lattice).map(move |hi| (lo, hi)))
            .collect();
        let h = 1.0 / bins as f64;
        let (mut mean, mut mean_sq) = (Vec::with_capacity(pairs.len()), Vec::with_capacity(pairs.len()));
        for &(lo, hi) in &pairs {
            let (l, u) = (lo as f64 / lattice as f64, hi as f64 / lattice as f64);
            let (m, q): (Vec<f64>, Vec<f64>) = (0..bins)
                .map(|k| {
                    let (i1, i2) = psi_cell_integrals(k as f64 * h, (k + 1) as f64 * h, l, u);
                    (i1 / h, i2 / h)
                })
                .unzip();
            mean.push(m);
            mean_sq.push(q);
        }
        Self { pairs, mean, mean_sq }
    }
}

/// Observed bins flattened for the search loops.
struct Observed {
    bins: Vec<Vec<usize>>,
    tau: Vec<f64>,
    tau_sq_sum: f64,
    cell_volume: f64,
}

/// Number of lattice steps for `resolution`; `1 / resolution` must be an integer.
pub fn lattice_steps(resolution: f64) -> Result<usize> {
    if !(resolution.is_finite() && resolution > 0.0 && resolution <= 1.0) {
        return Err(TrustError::InvalidArgument(format!(
            "resolution {resolution} must be in (0, 1]"
        )));
    }
    let steps = (1.0 / resolution).round();
    if (steps * resolution - 1.0).abs() > 1e-9 {
        return Err(TrustError::InvalidArgument(format!(
            "resolution {resolution} does not divide [0, 1] evenly"
        )));
    }
    Ok(steps as usize)
}

type TieKey = (usize, Vec<usize>, Vec<usize>);

/// Lexicographic preference among tied candidates: smallest total width,
/// then smallest lower bounds, then smallest upper bounds.
fn tie_key(choice: &[Pair]) -> TieKey {
    (
        choice.iter().map(|&(lo, hi)| hi - lo).sum(),
        choice.iter().map(|p| p.0).collect(),
        choice.iter().map(|p| p.1).collect(),
    )
}

/// Fits uniform-belief bounds to the empirical success rates in `grid`.
///
/// The objective is the squared difference between artificial trust and
/// the empirical rate, integrated over every non-empty grid cell. Bounds are
/// restricted to the lattice `{0, resolution, ..., 1}`. For `n <= 2` every
/// lattice tuple is examined; larger `n` uses cyclic coordinate descent
/// ([`COORDINATE_SWEEPS`] sweeps) starting from the full unit interval.
///
/// Candidates whose objective is within [`OBJECTIVE_TIE_TOLERANCE`] of the
/// best are tied; the tie goes to the smallest total width, then the
/// smallest lower bounds, then the smallest upper bounds.
pub fn fit_capability_bounds(grid: &EmpiricalTrustGrid, resolution: f64) -> Result<FitResult> {
    let lattice = lattice_steps(resolution)?;
    let observed_bins = grid.observed_bins();
    if observed_bins.is_empty() {
        return Err(TrustError::EmptyGrid);
    }
    let (bins, tau): (Vec<_>, Vec<_>) = observed_bins.into_iter().unzip();
    let obs = Observed {
        tau_sq_sum: tau.iter().map(|t| t * t).sum(),
        bins,
        tau,
        cell_volume: (grid.bins_per_dim() as f64).powi(-(grid.dim() as i32)),
    };
    let moments = CellMoments::new(lattice, grid.bins_per_dim());
    let n = grid.dim();

    let (choice, evaluations) = if n <= 2 {
        joint_search(&obs, &moments, n, grid.bins_per_dim())
    } else {
        coordinate_descent(&obs, &moments, n, grid.bins_per_dim(), lattice)
    };
    let objective = objective_of(&obs, &moments, &choice);
    let (lower, upper) = choice
        .iter()
        .map(|&p| {
            let (lo, hi) = moments.pairs[p];
            (lo as f64 / lattice as f64, hi as f64 / lattice as f64)
        })
        .unzip();
    Ok(FitResult {
        belief: UniformBelief::new(lower, upper)?,
        objective,
        evaluations,
    })
}

/// Objective for fully specified candidate pair indices.
fn objective_of(obs: &Observed, m: &CellMoments, choice: &[usize]) -> f64 {
    let mut total = 0.0;
    for (bin, &tau) in obs.bins.iter().zip(&obs.tau) {
        let (mut pm, mut pq) = (1.0, 1.0);
        for (d, &p) in choice.iter().enumerate() {
            pm *= m.mean[p][bin[d]];
            pq *= m.mean_sq[p][bin[d]];
        }
        total += pq - 2.0 * tau * pm + tau * tau;
    }
    (total * obs.cell_volume).max(0.0)
}

/// Objective of every pair on dimension `dim` with the other dimensions'
/// factors folded into per-bin aggregates.
fn scan_dimension(obs: &Observed, m: &CellMoments, dim: usize, others: &[Option<usize>], bins: usize) -> Vec<f64> {
    // a[k] = sum over observed bins with bin[dim] == k of prod_{d != dim} Q_d
    // c[k] = same with tau * prod M_d
    let mut a = vec![0.0; bins];
    let mut c = vec![0.0; bins];
    for (bin, &tau) in obs.bins.iter().zip(&obs.tau) {
        let (mut pm, mut pq) = (1.0, 1.0);
        for (d, other) in others.iter().enumerate() {
            if let Some(p) = *other {
                pm *= m.mean[p][bin[d]];
                pq *= m.mean_sq[p][bin[d]];
            }
        }
        a[bin[dim]] += pq;
        c[bin[dim]] += tau * pm;
    }
    (0..m.pairs.len())
        .map(|p| {
            let mut s = obs.tau_sq_sum;
            for k in 0..bins {
                s += m.mean_sq[p][k] * a[k] - 2.0 * m.mean[p][k] * c[k];
            }
            (s * obs.cell_volume).max(0.0)
        })
        .collect()
}

fn joint_search(obs: &Observed, m: &CellMoments, n: usize, bins: usize) -> (Vec<usize>, u64) {
    let np = m.pairs.len();
    // rows[p0] = objective of every pair on the last dimension given p0
    let rows: Vec<Vec<f64>> = if n == 1 {
        vec![scan_dimension(obs, m, 0, &[None], bins)]
    } else {
        (0..np)
            .map(|p0| scan_dimension(obs, m, 1, &[Some(p0), None], bins))
            .collect()
    };
    let best = rows.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let mut winner: Option<(Vec<usize>, TieKey)> = None;
    for (p0, row) in rows.iter().enumerate() {
        for (p1, &obj) in row.iter().enumerate() {
            if obj > best + OBJECTIVE_TIE_TOLERANCE {
                continue;
            }
            let choice = if n == 1 { vec![p1] } else { vec![p0, p1] };
            let key = tie_key(&choice.iter().map(|&p| m.pairs[p]).collect::<Vec<_>>());
            if winner.as_ref().is_none_or(|(_, k)| key < *k) {
                winner = Some((choice, key));
            }
        }
    }
    let evaluations = (rows.len() * np) as u64;
    (winner.expect("at least one candidate").0, evaluations)
}

fn coordinate_descent(obs: &Observed, m: &CellMoments, n: usize, bins: usize, lattice: usize) -> (Vec<usize>, u64) {
    let full = m
        .pairs
        .iter()
        .position(|&p| p == (0, lattice))
        .expect("full interval is a lattice pair");
    let mut choice = vec![full; n];
    let mut evaluations = 0u64;
    for _ in 0..COORDINATE_SWEEPS {
        for d in 0..n {
            let others: Vec<Option<usize>> = (0..n).map(|j| (j != d).then_some(choice[j])).collect();
            let objs = scan_dimension(obs, m, d, &others, bins);
            evaluations += objs.len() as u64;
            let best = objs.iter().copied().fold(f64::INFINITY, f64::min);
            choice[d] = (0..objs.len())
                .filter(|&p| objs[p] <= best + OBJECTIVE_TIE_TOLERANCE)
                .min_by_key(|&p| {
                    let (lo, hi) = m.pairs[p];
                    (hi - lo, lo)
                })
                .expect("non-empty scan");
        }
    }
    (choice, evaluations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capability::{Outcome, TaskSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn record(req: &[f64], success: bool) -> OutcomeRecord {
        let task = TaskSpec::new("t", CapabilityVector::new(req.to_vec()).unwrap());
        OutcomeRecord::new(task, 0, Outcome::from_success(success))
    }

    #[test]
    fn psi_branches() {
        assert_eq!(psi(0.1, 0.2, 0.8).unwrap(), 1.0);
        assert_abs_diff_eq!(psi(0.5, 0.2, 0.8).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(psi(0.9, 0.2, 0.8).unwrap(), 0.0);
        assert_eq!(psi(0.2, 0.2, 0.8).unwrap(), 1.0);
        assert_eq!(psi(0.8, 0.2, 0.8).unwrap(), 0.0);
        assert_eq!(psi(0.3, 0.3, 0.3).unwrap(), 1.0);
        assert_eq!(psi(0.31, 0.3, 0.3).unwrap(), 0.0);
        assert!(psi(0.5, 0.8, 0.2).is_err());
    }

    #[test]
    fn artificial_trust_examples() {
        let b = UniformBelief::from_bounds(&[(0.2, 0.8), (0.2, 0.8)]).unwrap();
        let t = artificial_trust(&b, &CapabilityVector::new(vec![0.5, 0.5]).unwrap()).unwrap();
        assert_abs_diff_eq!(t, 0.25, epsilon = 1e-15);
        let b = UniformBelief::init(1).unwrap();
        let t = artificial_trust(&b, &CapabilityVector::new(vec![0.3]).unwrap()).unwrap();
        assert_abs_diff_eq!(t, 0.7, epsilon = 1e-15);
        let b = UniformBelief::from_bounds(&[(0.3, 0.3)]).unwrap();
        assert_eq!(
            artificial_trust(&b, &CapabilityVector::new(vec![0.3]).unwrap()).unwrap(),
            1.0
        );
        assert!(artificial_trust(&b, &CapabilityVector::new(vec![0.3, 0.3]).unwrap()).is_err());
    }

    #[test]
    fn accumulate_examples() {
        let g = EmpiricalTrustGrid::new(2, 10).unwrap();
        let g = g.accumulate(&record(&[0.05, 0.05], true)).unwrap();
        assert_eq!(g.successes(&[0, 0]).unwrap(), 1);
        assert_eq!(g.totals(&[0, 0]).unwrap(), 1);
        let g = g.accumulate(&record(&[0.05, 0.05], false)).unwrap();
        assert_eq!(g.successes(&[0, 0]).unwrap(), 1);
        assert_eq!(g.totals(&[0, 0]).unwrap(), 2);
        assert_eq!(g.tau_hat(&[0, 0]).unwrap(), Some(0.5));
        let g = g.accumulate(&record(&[1.0, 1.0], false)).unwrap();
        assert_eq!(g.totals(&[9, 9]).unwrap(), 1);
        assert_eq!(g.total_observations(), 3);
    }

    #[test]
    fn tau_hat_examples() {
        let mut g = EmpiricalTrustGrid::new(1, 4).unwrap();
        g.set_counts(&[0], 3, 4).unwrap();
        g.set_counts(&[2], 0, 5).unwrap();
        assert_eq!(g.tau_hat(&[0]).unwrap(), Some(0.75));
        assert_eq!(g.tau_hat(&[1]).unwrap(), None);
        assert_eq!(g.tau_hat(&[2]).unwrap(), Some(0.0));
        assert!(g.tau_hat(&[4]).is_err());
    }

    #[test]
    fn table_roundtrip() {
        let mut g = EmpiricalTrustGrid::new(2, 3).unwrap();
        g.add(&record(&[0.1, 0.9], true)).unwrap();
        g.add(&record(&[0.5, 0.5], false)).unwrap();
        let text = g.to_table();
        assert!(text.starts_with("bin_0,bin_1,center_0,center_1,successes,totals\n0,0,"));
        assert_eq!(EmpiricalTrustGrid::from_table(&text).unwrap(), g);
        assert!(EmpiricalTrustGrid::from_table("bin_0,center_0,successes,totals\n0,0.5,2,1\n").is_err());
    }

    #[test]
    fn cell_integrals_by_simpson() {
        // On each piece between kinks psi is affine, so Simpson's rule is
        // exact for psi and psi^2. Endpoint values come from the piece's own
        // formula, which sidesteps the jump of a collapsed interval.
        fn piece(mid: f64, l: f64, u: f64) -> impl Fn(f64) -> f64 {
            let (l, u) = (l, u);
            move |x| {
                if mid <= l {
                    1.0
                } else if mid >= u {
                    0.0
                } else {
                    (u - x) / (u - l)
                }
            }
        }
        fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        for &(l, u) in &[
            (0.2, 0.8),
            (0.0, 1.0),
            (0.45, 0.55),
            (0.3, 0.3),
            (0.0, 0.0),
            (1.0, 1.0),
            (0.25, 0.3),
        ] {
            for k in 0..10 {
                let (a, b) = (k as f64 / 10.0, (k + 1) as f64 / 10.0);
                let mut cuts = vec![a, b];
                cuts.extend([l, u].iter().filter(|&&x| a < x && x < b));
                cuts.sort_by(f64::total_cmp);
                let (mut m, mut q) = (0.0, 0.0);
                for w in cuts.windows(2) {
                    let f = piece(0.5 * (w[0] + w[1]), l, u);
                    m += simpson(&f, w[0], w[1]);
                    q += simpson(|x| f(x).powi(2), w[0], w[1]);
                }
                let (gm, gq) = psi_cell_integrals(a, b, l, u);
                assert_abs_diff_eq!(gm, m, epsilon = 1e-14);
                assert_abs_diff_eq!(gq, q, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn fit_rejects_empty_and_bad_resolution() {
        let g = EmpiricalTrustGrid::new(2, 10).unwrap();
        assert_eq!(fit_capability_bounds(&g, 0.1), Err(TrustError::EmptyGrid));
        let mut g = g;
        g.set_counts(&[0, 0], 1, 1).unwrap();
        assert!(fit_capability_bounds(&g, 0.03).is_err());
        assert!(fit_capability_bounds(&g, 0.0).is_err());
        assert!(fit_capability_bounds(&g, 0.1).is_ok());
    }

    #[test]
    fn fit_single_success_bin() {
        let mut g = EmpiricalTrustGrid::new(2, 10).unwrap();
        g.set_counts(&[0, 0], 1, 1).unwrap();
        for res in [0.1, 0.05] {
            let fit = fit_capability_bounds(&g, res).unwrap();
            assert_eq!(fit.objective, 0.0);
            assert_eq!(fit.belief.lower(), &[0.1, 0.1]);
            assert_eq!(fit.belief.upper(), &[0.1, 0.1]);
        }
    }

    #[test]
    fn fit_all_failures() {
        let mut g = EmpiricalTrustGrid::new(2, 10).unwrap();
        for (k, j) in [(0, 0), (3, 7), (9, 9), (5, 1)] {
            g.set_counts(&[k, j], 0, 2).unwrap();
        }
        let fit = fit_capability_bounds(&g, 0.05).unwrap();
        assert_eq!(fit.objective, 0.0);
        assert_eq!(fit.belief.lower(), &[0.0, 0.0]);
        assert_eq!(fit.belief.upper(), &[0.0, 0.0]);
    }

    #[test]
    fn fit_exact_step_brackets_capability() {
        // tau_hat = 1 exactly on bins whose centers are <= (0.7, 0.4)
        let mut g = EmpiricalTrustGrid::new(2, 10).unwrap();
        for k in 0..10 {
            for j in 0..10 {
                let ok = g.center(k) <= 0.7 && g.center(j) <= 0.4;
                g.set_counts(&[k, j], ok as u64 * 3, 3).unwrap();
            }
        }
        let fit = fit_capability_bounds(&g, 0.05).unwrap();
        assert!(fit.objective < 1e-15);
        for (i, truth) in [0.7, 0.4].into_iter().enumerate() {
            let (l, u) = fit.belief.bounds(i);
            assert!(l <= truth && truth <= u, "dim {i}: ({l}, {u})");
            assert!(u - l <= 0.2);
        }
        assert_eq!(fit.evaluations, 231 * 231);
    }

    #[test]
    fn fit_one_dimension() {
        let mut g = EmpiricalTrustGrid::new(1, 10).unwrap();
        for k in 0..10 {
            g.set_counts(&[k], if k < 6 { 4 } else { 0 }, 4).unwrap();
        }
        let fit = fit_capability_bounds(&g, 0.1).unwrap();
        assert_eq!(fit.belief.bounds(0), (0.6, 0.6));
    }

    #[test]
    fn fit_three_dimensions_coordinate_descent() {
        let truth = [0.6, 0.4, 0.8];
        let mut g = EmpiricalTrustGrid::new(3, 5).unwrap();
        for flat in 0..g.cell_count() {
            let bin = g.unflatten(flat);
            let ok = bin.iter().zip(truth).all(|(&k, t)| g.center(k) <= t);
            g.set_counts(&bin, ok as u64, 1).unwrap();
        }
        let fit = fit_capability_bounds(&g, 0.1).unwrap();
        assert!(fit.objective < 1e-12);
        assert_eq!(fit.belief.lower(), &truth);
        assert_eq!(fit.belief.upper(), &truth);
        assert_eq!(fit.evaluations, (COORDINATE_SWEEPS * 3 * 66) as u64);
    }

    proptest! {
        #[test]
        fn psi_non_increasing(l in 0.0f64..=1.0, w in 0.0f64..=1.0, x in 0.0f64..=1.0, dx in 0.0f64..=0.3) {
            let u = (l + w).min(1.0);
            let a = psi(x, l, u).unwrap();
            let b = psi((x + dx).min(1.0), l, u).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(b <= a);
        }

        #[test]
        fn accumulate_counts_every_record(reqs in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0, any::<bool>()), 0..200)) {
            let mut g = EmpiricalTrustGrid::new(2, 10).unwrap();
            for (x, y, s) in &reqs {
                g.add(&record(&[*x, *y], *s)).unwrap();
            }
            prop_assert_eq!(g.total_observations(), reqs.len() as u64);
            for flat in 0..g.cell_count() {
                let bin = g.unflatten(flat);
                prop_assert!(g.successes(&bin).unwrap() <= g.totals(&bin).unwrap());
            }
        }
    }
}
