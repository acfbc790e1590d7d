//! Scalar piecewise-C² functions described by a sorted kink list and one
//! smooth branch per piece.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Value with first and second derivative at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub const fn new(value: f64, d1: f64, d2: f64) -> Self {
        Self { value, d1, d2 }
    }

    pub const fn constant(value: f64) -> Self {
        Self::new(value, 0.0, 0.0)
    }

    fn affine_map(self, scale: f64, offset: f64) -> Self {
        Self::new(scale * self.value + offset, scale * self.d1, scale * self.d2)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PiecewiseError {
    #[error("kinks must be finite and strictly increasing (index {index})")]
    UnsortedKinks { index: usize },
    #[error("expected {expected} pieces for {kinks} kinks, got {got}")]
    PieceCount { kinks: usize, expected: usize, got: usize },
    #[error("value jumps by {jump:e} across the kink at {at}")]
    Discontinuous { at: f64, jump: f64 },
    #[error("lipschitz bound must be finite and nonnegative, got {0}")]
    BadLipschitz(f64),
}

/// The smooth branches of a piecewise function.
///
/// `piece` indexes the interval between consecutive kinks, `rep` is a point
/// strictly inside that interval. Branches are smooth extensions, so `x` may
/// lie on or slightly beyond the piece boundary.
pub trait PieceFamily: Send + Sync + fmt::Debug {
    fn eval_piece(&self, piece: usize, rep: f64, x: f64) -> Jet;
}

/// Pieces given as plain closures, one per interval.
pub struct FnPieces(pub Vec<Box<dyn Fn(f64) -> Jet + Send + Sync>>);

impl fmt::Debug for FnPieces {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnPieces({} pieces)", self.0.len())
    }
}

impl PieceFamily for FnPieces {
    fn eval_piece(&self, piece: usize, _rep: f64, x: f64) -> Jet {
        (self.0[piece])(x)
    }
}

#[derive(Debug)]
struct Affine {
    slope: f64,
    intercept: f64,
}

impl PieceFamily for Affine {
    fn eval_piece(&self, _piece: usize, _rep: f64, x: f64) -> Jet {
        Jet::new(self.slope * x + self.intercept, self.slope, 0.0)
    }
}

/// A continuous function that is C² between sorted kinks.
///
/// Evaluation is `scale * branch(x) + offset`. Cloning is cheap.
#[derive(Clone, Debug)]
pub struct ScalarPiecewiseC2 {
    kinks: Arc<[f64]>,
    family: Arc<dyn PieceFamily>,
    scale: f64,
    offset: f64,
    lipschitz: f64,
}

const CONTINUITY_TOL: f64 = 1e-9;

impl ScalarPiecewiseC2 {
    /// Builds a function and checks kink order and continuity.
    ///
    /// `lipschitz_bound` refers to the unscaled branches.
    pub fn new(
        kinks: Vec<f64>,
        family: Arc<dyn PieceFamily>,
        lipschitz_bound: f64,
    ) -> Result<Self, PiecewiseError> {
        let f = Self::new_unchecked(kinks, family, lipschitz_bound)?;
        for (j, &a) in f.kinks.iter().enumerate() {
            let left = f.eval_piece(j, a).value;
            let right = f.eval_piece(j + 1, a).value;
            let jump = (left - right).abs();
            if jump > CONTINUITY_TOL * (1.0 + left.abs().max(right.abs())) {
                return Err(PiecewiseError::Discontinuous { at: a, jump });
            }
        }
        Ok(f)
    }

    /// Same as [`new`](Self::new) without the continuity sweep. Used by
    /// hysteresis level functions, which are continuous by construction.
    pub(crate) fn new_unchecked(
        kinks: Vec<f64>,
        family: Arc<dyn PieceFamily>,
        lipschitz_bound: f64,
    ) -> Result<Self, PiecewiseError> {
        for (i, k) in kinks.iter().enumerate() {
            if !k.is_finite() || (i > 0 && kinks[i - 1] >= *k) {
                return Err(PiecewiseError::UnsortedKinks { index: i });
            }
        }
        if !(lipschitz_bound.is_finite() && lipschitz_bound >= 0.0) {
            return Err(PiecewiseError::BadLipschitz(lipschitz_bound));
        }
        Ok(Self {
            kinks: kinks.into(),
            family,
            scale: 1.0,
            offset: 0.0,
            lipschitz: lipschitz_bound,
        })
    }

    /// Builds a function from one closure per piece.
    pub fn from_fns(
        kinks: Vec<f64>,
        pieces: Vec<Box<dyn Fn(f64) -> Jet + Send + Sync>>,
        lipschitz_bound: f64,
    ) -> Result<Self, PiecewiseError> {
        if pieces.len() != kinks.len() + 1 {
            return Err(PiecewiseError::PieceCount {
                kinks: kinks.len(),
                expected: kinks.len() + 1,
                got: pieces.len(),
            });
        }
        Self::new(kinks, Arc::new(FnPieces(pieces)), lipschitz_bound)
    }

    pub fn affine(slope: f64, intercept: f64) -> Self {
        Self {
            kinks: Vec::new().into(),
            family: Arc::new(Affine { slope, intercept }),
            scale: 1.0,
            offset: 0.0,
            lipschitz: slope.abs(),
        }
    }

    /// Multiplies the function by `s`. A zero factor also drops the kinks.
    pub fn scaled(mut self, s: f64) -> Self {
        self.scale *= s;
        self.offset *= s;
        if s == 0.0 {
            self.kinks = Vec::new().into();
        }
        self
    }

    /// Adds a constant.
    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset += offset;
        self
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn num_pieces(&self) -> usize {
        self.kinks.len() + 1
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz * self.scale.abs()
    }

    /// Index of the piece containing `x`; kinks belong to the piece on their right.
    pub fn piece_index(&self, x: f64) -> usize {
        self.kinks.partition_point(|&k| k <= x)
    }

    /// A point strictly inside piece `j`.
    pub fn piece_rep(&self, j: usize) -> f64 {
        let m = self.kinks.len();
        match (j, m) {
            (_, 0) => 0.0,
            (0, _) => self.kinks[0] - 1.0,
            (j, m) if j == m => self.kinks[m - 1] + 1.0,
            (j, _) => 0.5 * (self.kinks[j - 1] + self.kinks[j]),
        }
    }

    /// Evaluates the branch of piece `j` at `x`, even outside that piece.
    pub fn eval_piece(&self, j: usize, x: f64) -> Jet {
        self.family
            .eval_piece(j, self.piece_rep(j), x)
            .affine_map(self.scale, self.offset)
    }

    /// Right-continuous evaluation.
    pub fn eval(&self, x: f64) -> Jet {
        self.eval_piece(self.piece_index(x), x)
    }

    /// Evaluation with the branch on the left of `x` (left derivative at kinks).
    pub fn eval_left(&self, x: f64) -> Jet {
        self.eval_piece(self.kinks.partition_point(|&k| k < x), x)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).value
    }

    /// One-sided derivatives `(left, right)` at `x`. Points within the kink
    /// merge tolerance of a kink count as sitting on it.
    pub fn one_sided_derivatives(&self, x: f64) -> (f64, f64) {
        if let Some(j) = self.nearest_kink(x) {
            let a = self.kinks[j];
            if (x - a).abs() <= KINK_MERGE_TOL * (1.0 + x.abs()) {
                return (self.eval_piece(j, a).d1, self.eval_piece(j + 1, a).d1);
            }
        }
        let d = self.eval(x).d1;
        (d, d)
    }

    /// Index of the kink closest to `x`.
    pub fn nearest_kink(&self, x: f64) -> Option<usize> {
        if self.kinks.is_empty() {
            return None;
        }
        let i = self.kinks.partition_point(|&k| k < x);
        if i == 0 {
            Some(0)
        } else if i == self.kinks.len() {
            Some(i - 1)
        } else if x - self.kinks[i - 1] <= self.kinks[i] - x {
            Some(i - 1)
        } else {
            Some(i)
        }
    }

    /// Largest |second derivative| seen on `samples` points per piece within
    /// `radius` of each kink. Used for the smoothing error constant.
    pub fn sampled_curvature_bound(&self, radius: f64, samples: usize) -> f64 {
        let mut m: f64 = 0.0;
        let samples = samples.max(2);
        for (j, &a) in self.kinks.iter().enumerate() {
            for i in 0..samples {
                let t = radius * i as f64 / (samples - 1) as f64;
                m = m.max(self.eval_piece(j, a - t).d2.abs());
                m = m.max(self.eval_piece(j + 1, a + t).d2.abs());
            }
        }
        m
    }
}

/// Two kinks closer than this (relative to `1 + |x|`) are merged.
pub const KINK_MERGE_TOL: f64 = 1e-12;

/// Sorts and merges nearly coincident kinks in place.
pub(crate) fn sort_dedup_kinks(kinks: &mut Vec<f64>) {
    kinks.sort_by(|a, b| a.total_cmp(b));
    kinks.dedup_by(|b, a| (*b - *a).abs() <= KINK_MERGE_TOL * (1.0 + a.abs()));
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs_fn() -> ScalarPiecewiseC2 {
        ScalarPiecewiseC2::from_fns(
            vec![0.0],
            vec![
                Box::new(|x| Jet::new(-x, -1.0, 0.0)),
                Box::new(|x| Jet::new(x, 1.0, 0.0)),
            ],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn kink_is_right_continuous() {
        let f = abs_fn();
        assert_eq!(f.eval(0.0).d1, 1.0);
        assert_eq!(f.eval_left(0.0).d1, -1.0);
        assert_eq!(f.one_sided_derivatives(0.0), (-1.0, 1.0));
        assert_eq!(f.one_sided_derivatives(0.5), (1.0, 1.0));
    }

    #[test]
    fn rejects_jumps_and_bad_counts() {
        let e = ScalarPiecewiseC2::from_fns(
            vec![0.0],
            vec![Box::new(|_| Jet::constant(0.0)), Box::new(|_| Jet::constant(1.0))],
            0.0,
        );
        assert!(matches!(e, Err(PiecewiseError::Discontinuous { .. })));
        let e = ScalarPiecewiseC2::from_fns(vec![0.0], vec![Box::new(|_| Jet::constant(0.0))], 0.0);
        assert!(matches!(e, Err(PiecewiseError::PieceCount { .. })));
        let e = ScalarPiecewiseC2::affine(1.0, 0.0);
        assert!(e.kinks().is_empty());
    }

    #[test]
    fn scale_and_offset() {
        let f = abs_fn().scaled(2.0).with_offset(1.0);
        assert_eq!(f.value(-3.0), 7.0);
        assert_eq!(f.lipschitz_bound(), 2.0);
        assert!(abs_fn().scaled(0.0).kinks().is_empty());
    }

    #[test]
    fn dedup_merges_close_kinks() {
        let mut k = vec![1.0, 0.0, 1.0 + 1e-14, 2.0];
        sort_dedup_kinks(&mut k);
        assert_eq!(k, vec![0.0, 1.0, 2.0]);
    }
}
