//! Uniform capability belief and its outcome-driven update.
//!
//! The belief over a trustee's capabilities is a product of independent
//! uniform distributions, one interval `(lower_i, upper_i)` per dimension.
//! It starts as the whole unit interval and is reshaped after every
//! observed task:
//!
//! * success at a requirement above `upper_i` raises `upper_i`;
//!   success between the bounds raises `lower_i`;
//! * failure at a requirement below `lower_i` lowers `lower_i`;
//!   failure between the bounds lowers `upper_i`;
//! * everything else (including ties with a bound) leaves the dimension alone.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::capability::{check_dim, CapabilityVector, Outcome, OutcomeRecord};
use crate::error::{Result, TrustError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformBelief {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// How a single dimension's interval moved during an update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalChange {
    Expanded,
    Contracted,
    Unchanged,
}

impl UniformBelief {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(TrustError::ZeroDimensions);
        }
        check_dim(lower.len(), upper.len())?;
        for (index, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if !(0.0 <= l && l <= u && u <= 1.0) {
                return Err(TrustError::InvalidBounds {
                    index,
                    lower: l,
                    upper: u,
                });
            }
        }
        Ok(Self { lower, upper })
    }

    /// Builds a belief from `(lower, upper)` pairs.
    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        let (lower, upper) = bounds.iter().copied().unzip();
        Self::new(lower, upper)
    }

    /// The uninformed belief: `U(0, 1)` on every dimension.
    pub fn init(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(TrustError::ZeroDimensions);
        }
        Ok(Self {
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn bounds(&self, i: usize) -> (f64, f64) {
        (self.lower[i], self.upper[i])
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    /// `true` when dimension `i` collapsed to a single point.
    pub fn is_point_mass(&self, i: usize) -> bool {
        self.lower[i] == self.upper[i]
    }

    /// Indices of the point-mass dimensions. [`density`](Self::density)
    /// treats these as Dirac factors; integrators evaluate them exactly.
    pub fn point_mass_dims(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.is_point_mass(i)).collect()
    }

    /// Returns the updated belief; `self` is left untouched.
    pub fn update(&self, observation: &OutcomeRecord) -> Result<Self> {
        let mut next = self.clone();
        next.update_in_place(observation)?;
        Ok(next)
    }

    /// Applies one observation and reports how each dimension changed.
    pub fn update_in_place(&mut self, observation: &OutcomeRecord) -> Result<Vec<IntervalChange>> {
        let req = observation.requirements();
        req.check_dim(self.dim())?;
        let changes = (0..self.dim())
            .map(|i| {
                let before = self.width(i);
                self.update_dim(i, req.get(i), observation.outcome);
                let after = self.width(i);
                if after > before {
                    IntervalChange::Expanded
                } else if after < before {
                    IntervalChange::Contracted
                } else {
                    IntervalChange::Unchanged
                }
            })
            .collect();
        Ok(changes)
    }

    fn update_dim(&mut self, i: usize, req: f64, outcome: Outcome) {
        let (l, u) = (&mut self.lower[i], &mut self.upper[i]);
        match outcome {
            Outcome::Success => {
                if req > *u {
                    *u = req;
                } else if req > *l {
                    *l = req;
                }
            }
            Outcome::Failure => {
                if req < *l {
                    *l = req;
                } else if req < *u {
                    *u = req;
                }
            }
        }
    }

    /// Folds observations in order starting from this belief.
    pub fn update_all<'a, I>(&self, observations: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a OutcomeRecord>,
    {
        let mut belief = self.clone();
        for obs in observations {
            belief.update_in_place(obs)?;
        }
        Ok(belief)
    }

    /// Density of the belief at `lambda`.
    ///
    /// Proper dimensions contribute `1 / (upper - lower)` inside the interval
    /// and zero outside. Point-mass dimensions contribute `1` when `lambda`
    /// sits exactly on the point and `0` otherwise; see
    /// [`point_mass_dims`](Self::point_mass_dims).
    pub fn density(&self, lambda: &CapabilityVector) -> Result<f64> {
        lambda.check_dim(self.dim())?;
        let mut d = 1.0;
        for (i, &x) in lambda.values().iter().enumerate() {
            let (l, u) = self.bounds(i);
            if x < l || x > u {
                return Ok(0.0);
            }
            if l < u {
                d /= u - l;
            }
        }
        Ok(d)
    }

    /// Whether `lambda` lies in the closed support box.
    pub fn contains(&self, lambda: &[f64]) -> bool {
        lambda.len() == self.dim()
            && lambda
                .iter()
                .enumerate()
                .all(|(i, &x)| self.lower[i] <= x && x <= self.upper[i])
    }

    /// Snapshot line: `time,l1,u1,l2,u2,...`.
    pub fn snapshot_line(&self, time: u64) -> String {
        let mut line = time.to_string();
        for i in 0..self.dim() {
            let _ = write!(line, ",{},{}", self.lower[i], self.upper[i]);
        }
        line
    }

    /// Parses a line produced by [`snapshot_line`](Self::snapshot_line).
    pub fn parse_snapshot_line(line: &str) -> Result<(u64, Self)> {
        let bad = || TrustError::InvalidArgument(format!("malformed belief snapshot line: {line:?}"));
        let mut fields = line.trim().split(',');
        let time = fields.next().and_then(|t| t.parse::<u64>().ok()).ok_or_else(bad)?;
        let values = fields
            .map(|f| f.parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() || values.len() % 2 != 0 {
            return Err(bad());
        }
        let (lower, upper) = values.chunks(2).map(|c| (c[0], c[1])).unzip();
        Ok((time, Self::new(lower, upper)?))
    }
}

/// Keeps a `(time, belief)` history while observations are applied.
#[derive(Debug, Clone)]
pub struct BeliefRecorder {
    current: UniformBelief,
    history: Vec<(u64, UniformBelief)>,
}

impl BeliefRecorder {
    /// Starts recording; the initial belief is logged at time 0.
    pub fn new(initial: UniformBelief) -> Self {
        Self {
            history: vec![(0, initial.clone())],
            current: initial,
        }
    }

    pub fn observe(&mut self, observation: &OutcomeRecord) -> Result<&UniformBelief> {
        self.current.update_in_place(observation)?;
        self.history.push((observation.time, self.current.clone()));
        Ok(&self.current)
    }

    pub fn current(&self) -> &UniformBelief {
        &self.current
    }

    pub fn history(&self) -> &[(u64, UniformBelief)] {
        &self.history
    }

    /// The history in snapshot-line format, one line per entry.
    pub fn to_lines(&self) -> String {
        self.history.iter().map(|(t, b)| b.snapshot_line(*t) + "\n").collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capability::TaskSpec;
    use proptest::prelude::*;

    fn obs(req: &[f64], success: bool) -> OutcomeRecord {
        let task = TaskSpec::new("t", CapabilityVector::new(req.to_vec()).unwrap());
        OutcomeRecord::new(task, 1, Outcome::from_success(success))
    }

    fn b1(l: f64, u: f64) -> UniformBelief {
        UniformBelief::from_bounds(&[(l, u)]).unwrap()
    }

    #[test]
    fn init_shapes() {
        let b = UniformBelief::init(2).unwrap();
        assert_eq!(b.lower(), &[0.0, 0.0]);
        assert_eq!(b.upper(), &[1.0, 1.0]);
        assert_eq!(UniformBelief::init(1).unwrap(), b1(0.0, 1.0));
        let b5 = UniformBelief::init(5).unwrap();
        assert!((0..5).all(|i| b5.bounds(i) == (0.0, 1.0)));
        assert_eq!(UniformBelief::init(0), Err(TrustError::ZeroDimensions));
    }

    #[test]
    fn update_examples() {
        assert_eq!(b1(0.0, 1.0).update(&obs(&[0.6], true)).unwrap(), b1(0.6, 1.0));
        assert_eq!(b1(0.0, 1.0).update(&obs(&[0.4], false)).unwrap(), b1(0.0, 0.4));
        assert_eq!(b1(0.5, 0.8).update(&obs(&[0.3], false)).unwrap(), b1(0.3, 0.8));
        assert_eq!(b1(0.2, 0.5).update(&obs(&[0.1], true)).unwrap(), b1(0.2, 0.5));
    }

    #[test]
    fn success_above_upper_raises_upper_only() {
        assert_eq!(b1(0.2, 0.5).update(&obs(&[0.9], true)).unwrap(), b1(0.2, 0.9));
    }

    #[test]
    fn ties_with_bounds_change_nothing() {
        let b = b1(0.3, 0.7);
        for req in [0.3, 0.7] {
            for s in [true, false] {
                let next = b.update(&obs(&[req], s)).unwrap();
                // Strict comparisons: success exactly at u falls through to
                // the `req > l` branch, failure exactly at l to `req < u`.
                if s && req == 0.7 {
                    assert_eq!(next, b1(0.7, 0.7));
                } else if !s && req == 0.3 {
                    assert_eq!(next, b1(0.3, 0.3));
                } else {
                    assert_eq!(next, b);
                }
            }
        }
    }

    #[test]
    fn point_mass_reexpands() {
        let b = b1(0.5, 0.5);
        assert_eq!(b.update(&obs(&[0.2], false)).unwrap(), b1(0.2, 0.5));
        assert_eq!(b.update(&obs(&[0.8], true)).unwrap(), b1(0.5, 0.8));
    }

    #[test]
    fn update_is_functional() {
        let b = b1(0.0, 1.0);
        let _ = b.update(&obs(&[0.5], true)).unwrap();
        assert_eq!(b, b1(0.0, 1.0));
    }

    #[test]
    fn update_dimension_mismatch() {
        let b = UniformBelief::init(2).unwrap();
        assert!(matches!(
            b.update(&obs(&[0.5], true)),
            Err(TrustError::DimensionMismatch { expected: 2, actual: 1 })
        ));
    }

    #[test]
    fn density_examples() {
        let unit = UniformBelief::init(2).unwrap();
        let half = CapabilityVector::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(unit.density(&half).unwrap(), 1.0);
        let b = b1(0.2, 0.7);
        assert_eq!(b.density(&CapabilityVector::new(vec![0.1]).unwrap()).unwrap(), 0.0);
        let b = UniformBelief::from_bounds(&[(0.25, 0.75), (0.25, 0.75)]).unwrap();
        assert_eq!(b.density(&half).unwrap(), 4.0);
    }

    #[test]
    fn density_point_mass() {
        let b = UniformBelief::from_bounds(&[(0.5, 0.5), (0.0, 0.5)]).unwrap();
        assert_eq!(b.point_mass_dims(), vec![0]);
        let on = CapabilityVector::new(vec![0.5, 0.25]).unwrap();
        let off = CapabilityVector::new(vec![0.4, 0.25]).unwrap();
        assert_eq!(b.density(&on).unwrap(), 2.0);
        assert_eq!(b.density(&off).unwrap(), 0.0);
    }

    #[test]
    fn invalid_bounds() {
        assert!(UniformBelief::from_bounds(&[(0.6, 0.4)]).is_err());
        assert!(UniformBelief::from_bounds(&[(-0.1, 0.4)]).is_err());
        assert!(UniformBelief::from_bounds(&[(0.1, 1.4)]).is_err());
    }

    #[test]
    fn recorder_and_snapshot_lines() {
        let mut rec = BeliefRecorder::new(UniformBelief::init(2).unwrap());
        let mut o = obs(&[0.5, 0.25], true);
        o.time = 1;
        rec.observe(&o).unwrap();
        o.outcome = Outcome::Failure;
        o.time = 2;
        rec.observe(&o).unwrap();
        assert_eq!(rec.to_lines(), "0,0,1,0,1\n1,0.5,1,0.25,1\n2,0.5,0.5,0.25,0.25\n");
        for (t, b) in rec.history() {
            let (t2, b2) = UniformBelief::parse_snapshot_line(&b.snapshot_line(*t)).unwrap();
            assert_eq!((t2, &b2), (*t, b));
        }
        assert!(UniformBelief::parse_snapshot_line("3,0.1").is_err());
        assert!(UniformBelief::parse_snapshot_line("x,0.1,0.2").is_err());
    }

    proptest! {
        #[test]
        fn bounds_stay_ordered(steps in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0, any::<bool>()), 0..40)) {
            let mut b = UniformBelief::init(2).unwrap();
            for (x, y, s) in steps {
                let before = b.clone();
                let changes = b.update_in_place(&obs(&[x, y], s)).unwrap();
                for i in 0..2 {
                    let (l, u) = b.bounds(i);
                    prop_assert!(0.0 <= l && l <= u && u <= 1.0);
                    // per-dimension independence: dimension i moved only if its own req lies
                    // on the moving side of a bound
                    let req = [x, y][i];
                    let (l0, u0) = before.bounds(i);
                    match changes[i] {
                        IntervalChange::Expanded => prop_assert!((s && req > u0) || (!s && req < l0)),
                        IntervalChange::Contracted => prop_assert!(l0 <= req && req <= u0),
                        IntervalChange::Unchanged => {}
                    }
                }
            }
        }
    }
}
