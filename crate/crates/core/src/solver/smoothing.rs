//! Arc-based C¹ smoothing of piecewise-C² nondecreasing functions.
//!
//! Around each kink a window `[a - delta, a + delta]` is chosen in which the
//! function can be replaced by its two boundary tangent lines. The corner
//! where those lines meet is then rounded off by a circular arc tangent to
//! both lines.

use super::SolveError;
use crate::piecewise::{Jet, ScalarPiecewiseC2};

/// Window half-width used on the open side of a lone kink.
pub const ISOLATED_HALF_WIDTH: f64 = 1.0;
/// Window detection gives up after this many contractions.
pub const MAX_CONTRACTIONS: usize = 10_000;
const LADDER_FACTOR: f64 = 0.5;

/// Checks `min(s_a, s_b) <= (f(b) - f(a)) / (b - a) <= max(s_a, s_b)`, where
/// `left = (f(a), f'_+(a))` and `right = (f(b), f'_-(b))`.
pub fn tangent_extendable(left: Jet, right: Jet, a: f64, b: f64) -> bool {
    let secant = (right.value - left.value) / (b - a);
    let (lo, hi) = (left.d1.min(right.d1), left.d1.max(right.d1));
    let tol = 1e-14 * 1f64.max(lo.abs()).max(hi.abs()).max(secant.abs());
    secant >= lo - tol && secant <= hi + tol
}

/// Half of the distance to the nearest neighbouring kink.
fn gap_limit(phi: &ScalarPiecewiseC2, k: usize) -> f64 {
    let kinks = phi.kinks();
    let mut gap = f64::INFINITY;
    if k > 0 {
        gap = gap.min(kinks[k] - kinks[k - 1]);
    }
    if k + 1 < kinks.len() {
        gap = gap.min(kinks[k + 1] - kinks[k]);
    }
    if gap.is_finite() {
        0.5 * gap
    } else {
        ISOLATED_HALF_WIDTH
    }
}

fn window_ends(phi: &ScalarPiecewiseC2, k: usize, delta: f64) -> (Jet, Jet) {
    let a = phi.kinks()[k];
    (phi.eval_piece(k, a - delta), phi.eval_piece(k + 1, a + delta))
}

/// Backtracking search for a tangent-extendable half-width around kink `k`.
///
/// `delta0` is first cut to half the gap to the neighbouring kinks, so the
/// returned window never contains another kink.
pub fn detect_window(
    phi: &ScalarPiecewiseC2,
    kink_index: usize,
    delta0: f64,
    contraction: f64,
) -> Result<f64, SolveError> {
    let a = phi.kinks()[kink_index];
    let mut delta = delta0.min(gap_limit(phi, kink_index));
    for _ in 0..MAX_CONTRACTIONS {
        let (l, r) = window_ends(phi, kink_index, delta);
        if tangent_extendable(l, r, a - delta, a + delta) {
            return Ok(delta);
        }
        delta *= contraction;
    }
    Err(SolveError::WindowDetection { kink: a })
}

/// The two boundary tangent lines of a window and their intersection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentExtension {
    pub xl: f64,
    pub yl: f64,
    pub sl: f64,
    pub xr: f64,
    pub yr: f64,
    pub sr: f64,
    /// Abscissa where the lines meet (undefined for parallel lines).
    pub x0: f64,
}

impl TangentExtension {
    pub fn new(xl: f64, left: Jet, xr: f64, right: Jet) -> Self {
        let (sl, sr) = (left.d1, right.d1);
        let x0 = xl + (right.value - left.value - sr * (xr - xl)) / (sl - sr);
        Self { xl, yl: left.value, sl, xr, yr: right.value, sr, x0 }
    }

    pub fn left_line(&self, x: f64) -> f64 {
        self.yl + self.sl * (x - self.xl)
    }

    pub fn right_line(&self, x: f64) -> f64 {
        self.yr + self.sr * (x - self.xr)
    }

    /// Value of the extension `max`/`min` corner at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.x0 {
            self.left_line(x)
        } else {
            self.right_line(x)
        }
    }

    fn slopes_equal(&self) -> bool {
        (self.sl - self.sr).abs() <= 1e-15 * (1.0 + self.sl.abs() + self.sr.abs())
    }

    /// Tangency points at equal distance from the corner: the chord is the
    /// shorter of the two segments from the corner to the window ends.
    pub fn default_anchors(&self) -> (f64, f64) {
        let cl = (1.0 + self.sl * self.sl).sqrt();
        let cr = (1.0 + self.sr * self.sr).sqrt();
        let d = ((self.x0 - self.xl) * cl).min((self.xr - self.x0) * cr).max(0.0);
        (self.x0 - d / cl, self.x0 + d / cr)
    }
}

/// Circular arc tangent to both lines of a [`TangentExtension`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcData {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub xc: f64,
    pub yc: f64,
    pub radius: f64,
    /// `+1` when the arc lies above the centre (concave corner), `-1` below.
    pub sign: f64,
    // Offsets of the first tangency point from the centre. The arc is
    // evaluated relative to (x1, y1) so that huge radii stay accurate.
    u1: f64,
    v1: f64,
    // The exact slope stays between the two tangent slopes; rounding near a
    // tangency point is clamped back into that interval.
    slope_lo: f64,
    slope_hi: f64,
}

impl ArcData {
    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    /// Value and slope on the arc.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let s1 = self.v1.abs();
        let u = (x - self.x1) + self.u1;
        let s = (s1 * s1 + (self.x1 - x) * (self.u1 + u)).max(0.0).sqrt();
        let value = self.y1 + self.sign * (self.x1 - x) * (self.u1 + u) / (s + s1);
        (value, (-self.sign * u / s).clamp(self.slope_lo, self.slope_hi))
    }
}

/// Builds the arc through the tangency points at `x1` (left line) and `x2`
/// (right line), which must lie at equal distance from the corner.
pub fn build_arc(ext: &TangentExtension, x1: f64, x2: f64) -> Result<ArcData, SolveError> {
    if ext.slopes_equal() {
        return Err(SolveError::NoSmoothingNeeded);
    }
    let cl = (1.0 + ext.sl * ext.sl).sqrt();
    let cr = (1.0 + ext.sr * ext.sr).sqrt();
    let d1 = (ext.x0 - x1) * cl;
    let d2 = (x2 - ext.x0) * cr;
    // Tiny windows far from the origin carry the rounding of x0 itself.
    let rounding = 8.0 * f64::EPSILON * ext.x0.abs().max(x1.abs()).max(x2.abs()) * (cl + cr);
    let tol = 1e-9 * (d1 + d2) + rounding;
    if !(d1 >= 0.0 && d2 >= 0.0) || (d1 - d2).abs() > tol.max(f64::MIN_POSITIVE) {
        return Err(SolveError::ArcAnchors { x1, x2, x0: ext.x0 });
    }
    let (t1, t2) = (ext.sl.atan(), ext.sr.atan());
    let turn = t2 - t1;
    let radius = d1 / (0.5 * turn.abs()).tan();
    let orient = turn.signum();
    // Unit normal at P1 pointing to the centre.
    let (nx, ny) = (-orient * t1.sin(), orient * t1.cos());
    let (u1, v1) = (-radius * nx, -radius * ny);
    let y1 = ext.left_line(x1);
    Ok(ArcData {
        x1,
        y1,
        x2,
        y2: ext.right_line(x2),
        xc: x1 - u1,
        yc: y1 - v1,
        radius,
        sign: -orient,
        u1,
        v1,
        slope_lo: ext.sl.min(ext.sr),
        slope_hi: ext.sl.max(ext.sr),
    })
}

/// Smoothing data of one kink at the current `eps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KinkSmoothing {
    pub kink: f64,
    pub half_width: f64,
    pub extension: TangentExtension,
    /// `None` when both tangent slopes coincide.
    pub arc: Option<ArcData>,
}

impl KinkSmoothing {
    pub fn contains(&self, x: f64) -> bool {
        x > self.kink - self.half_width && x <= self.kink + self.half_width
    }

    fn eval(&self, x: f64) -> Option<(f64, f64)> {
        let arc = self.arc?;
        let e = &self.extension;
        Some(if x <= arc.x1 {
            (e.left_line(x), e.sl)
        } else if x <= arc.x2 {
            arc.eval(x)
        } else {
            (e.right_line(x), e.sr)
        })
    }
}

/// C¹ approximation of a piecewise-C² function at smoothing level `eps`.
///
/// Window half-widths follow a ladder `delta0 / 2^j`, with `delta0` half the
/// distance to the neighbouring kink; at level `eps` each kink uses the
/// widest tangent-extendable rung not exceeding `eps`. Windows are computed
/// on demand, so evaluation far from every kink costs one base evaluation.
#[derive(Clone, Debug)]
pub struct SmoothedNonlinearity {
    base: ScalarPiecewiseC2,
    eps: f64,
}

pub fn smooth_nonlinearity(phi: &ScalarPiecewiseC2, eps: f64) -> SmoothedNonlinearity {
    SmoothedNonlinearity::new(phi.clone(), eps)
}

pub fn eval_smoothed(s: &SmoothedNonlinearity, x: f64) -> Result<(f64, f64), SolveError> {
    s.eval(x)
}

impl SmoothedNonlinearity {
    pub fn new(base: ScalarPiecewiseC2, eps: f64) -> Self {
        assert!(eps > 0.0, "smoothing level must be positive");
        Self { base, eps }
    }

    pub fn base(&self) -> &ScalarPiecewiseC2 {
        &self.base
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        Self::new(self.base.clone(), eps)
    }

    /// First rung not exceeding `eps` on the ladder of kink `k`.
    fn start_rung(&self, k: usize) -> f64 {
        let mut delta = gap_limit(&self.base, k);
        while delta > self.eps {
            delta *= LADDER_FACTOR;
        }
        delta
    }

    /// Smoothing window of kink `k` at the current level.
    pub fn window(&self, k: usize) -> Result<KinkSmoothing, SolveError> {
        let delta = detect_window(&self.base, k, self.start_rung(k), LADDER_FACTOR)?;
        let a = self.base.kinks()[k];
        let (l, r) = window_ends(&self.base, k, delta);
        let extension = TangentExtension::new(a - delta, l, a + delta, r);
        let arc = match extension.default_anchors() {
            _ if extension.slopes_equal() => None,
            (x1, x2) => Some(build_arc(&extension, x1, x2)?),
        };
        Ok(KinkSmoothing { kink: a, half_width: delta, extension, arc })
    }

    /// All windows, mainly for inspection and tests.
    pub fn windows(&self) -> Result<Vec<KinkSmoothing>, SolveError> {
        (0..self.base.kinks().len()).map(|k| self.window(k)).collect()
    }

    /// Smoothed value and derivative.
    pub fn eval(&self, x: f64) -> Result<(f64, f64), SolveError> {
        let kinks = self.base.kinks();
        let i = kinks.partition_point(|&k| k < x);
        for k in [i.wrapping_sub(1), i] {
            if k >= kinks.len() {
                continue;
            }
            let reach = self.eps.min(gap_limit(&self.base, k));
            if (x - kinks[k]).abs() >= reach {
                continue;
            }
            let w = self.window(k)?;
            if w.contains(x) {
                if let Some(v) = w.eval(x) {
                    return Ok(v);
                }
            }
        }
        let j = self.base.eval(x);
        Ok((j.value, j.d1))
    }

    /// Distance of the smoothed derivative to the interval spanned by the
    /// one-sided base derivatives at `x`.
    pub fn derivative_gap(&self, x: f64) -> Result<f64, SolveError> {
        let (_, d) = self.eval(x)?;
        let (l, r) = self.base.one_sided_derivatives(x);
        let (lo, hi) = (l.min(r), l.max(r));
        Ok(if d < lo {
            lo - d
        } else if d > hi {
            d - hi
        } else {
            0.0
        })
    }
}

/// Euclidean norm over nodes of the per-node derivative gaps.
pub fn cdist(s: &[SmoothedNonlinearity], x: &[f64]) -> Result<f64, SolveError> {
    let mut sum = 0.0;
    for (si, &xi) in s.iter().zip(x) {
        let g = si.derivative_gap(xi)?;
        sum += g * g;
    }
    Ok(sum.sqrt())
}

/// Approximation constant `2 (M eps0 + sqrt(1 + L^2))` of a single window,
/// with `M` a sampled curvature bound near the kinks.
pub fn approximation_constant(phi: &ScalarPiecewiseC2, eps0: f64) -> f64 {
    let l = phi.lipschitz_bound();
    let m = phi.sampled_curvature_bound(eps0.min(ISOLATED_HALF_WIDTH), 16);
    2.0 * (m * eps0 + (1.0 + l * l).sqrt())
}
