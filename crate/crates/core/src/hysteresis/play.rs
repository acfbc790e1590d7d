use std::fmt;
use std::sync::Arc;

use super::HysteresisError;
use crate::piecewise::{Jet, PieceFamily, ScalarPiecewiseC2};

/// Linear play with band `[c(u-b), c(u-a)]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlayParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PlayParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, HysteresisError> {
        let p = Self { a, b, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), HysteresisError> {
        if !(self.a.is_finite() && self.b.is_finite() && self.c.is_finite()) {
            return Err(HysteresisError::InvalidPlay("non-finite parameter".into()));
        }
        if self.a >= self.b {
            return Err(HysteresisError::InvalidPlay(format!("need a < b, got a={} b={}", self.a, self.b)));
        }
        if self.c <= 0.0 {
            return Err(HysteresisError::InvalidPlay(format!("need c > 0, got {}", self.c)));
        }
        Ok(())
    }

    #[inline]
    pub fn lower_edge(&self, u: f64) -> f64 {
        self.c * (u - self.b)
    }

    #[inline]
    pub fn upper_edge(&self, u: f64) -> f64 {
        self.c * (u - self.a)
    }

    #[inline]
    fn clamp(&self, u: f64, w: f64) -> f64 {
        self.lower_edge(u).max(self.upper_edge(u).min(w))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlayState {
    pub w: f64,
}

/// Output at the initial time for initial memory `w0`.
pub fn play_init(u0: f64, w0: f64, p: &PlayParams) -> PlayState {
    PlayState { w: p.clamp(u0, w0) }
}

/// Output after one monotone input segment ending at `u_new`.
pub fn play_update(s: PlayState, u_new: f64, p: &PlayParams) -> PlayState {
    PlayState { w: p.clamp(u_new, s.w) }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Play with nonlinear band edges `gamma_r(u) <= w <= gamma_l(u)`.
#[derive(Clone)]
pub struct GeneralizedPlayParams {
    pub gamma_l: ScalarFn,
    pub gamma_r: ScalarFn,
}

impl fmt::Debug for GeneralizedPlayParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("GeneralizedPlayParams { .. }")
    }
}

impl From<PlayParams> for GeneralizedPlayParams {
    fn from(p: PlayParams) -> Self {
        Self {
            gamma_l: Arc::new(move |u| p.upper_edge(u)),
            gamma_r: Arc::new(move |u| p.lower_edge(u)),
        }
    }
}

pub fn generalized_play_update(
    w_prev: f64,
    u_new: f64,
    p: &GeneralizedPlayParams,
) -> Result<f64, HysteresisError> {
    let lo = (p.gamma_r)(u_new);
    let hi = (p.gamma_l)(u_new);
    if lo > hi {
        return Err(HysteresisError::InvertedBand { u: u_new, gamma_r: lo, gamma_l: hi });
    }
    Ok(lo.max(hi.min(w_prev)))
}

#[derive(Debug)]
struct PlayPieces {
    w: f64,
    p: PlayParams,
}

impl PieceFamily for PlayPieces {
    fn eval_piece(&self, _piece: usize, rep: f64, x: f64) -> Jet {
        let x1 = self.w / self.p.c + self.p.a;
        let x2 = self.w / self.p.c + self.p.b;
        if rep < x1 {
            Jet::new(self.p.upper_edge(x), self.p.c, 0.0)
        } else if rep > x2 {
            Jet::new(self.p.lower_edge(x), self.p.c, 0.0)
        } else {
            Jet::constant(self.w)
        }
    }
}

/// `x -> scale * play_update(history_output, x)` as a piecewise-affine function.
pub fn play_level_function(history_output: f64, p: &PlayParams, scale: f64) -> ScalarPiecewiseC2 {
    let kinks = vec![history_output / p.c + p.a, history_output / p.c + p.b];
    let family = Arc::new(PlayPieces { w: history_output, p: *p });
    ScalarPiecewiseC2::new_unchecked(kinks, family, p.c)
        .expect("play kinks are ordered because a < b")
        .scaled(scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_params() -> PlayParams {
        PlayParams::new(-0.5, 0.5, 2.0).unwrap()
    }

    #[test]
    fn init_examples() {
        let p = table_params();
        assert_eq!(play_init(0.0, 0.0, &p).w, 0.0);
        assert_eq!(play_init(0.0, 5.0, &p).w, 1.0);
        assert_eq!(play_init(2.0, 0.0, &p).w, 3.0);
    }

    #[test]
    fn update_examples() {
        let p = table_params();
        let s = play_update(PlayState { w: 0.0 }, 2.0, &p);
        assert_eq!(s.w, 3.0);
        assert_eq!(play_update(s, 1.8, &p).w, 3.0);
        assert_eq!(play_update(s, 0.5, &p).w, 2.0);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(PlayParams::new(1.0, 0.0, 1.0).is_err());
        assert!(PlayParams::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn generalized_play_cases() {
        let p = table_params();
        let g: GeneralizedPlayParams = p.into();
        let mut w = 0.0;
        let mut s = PlayState { w: 0.0 };
        for &u in &[0.3, 2.0, -1.0, 0.2, 0.4, -3.0] {
            w = generalized_play_update(w, u, &g).unwrap();
            s = play_update(s, u, &p);
            assert_eq!(w, s.w);
        }
        assert_eq!(generalized_play_update(0.1, 0.0, &g).unwrap(), 0.1);
        let degenerate = GeneralizedPlayParams {
            gamma_l: Arc::new(|u: f64| u * u),
            gamma_r: Arc::new(|u: f64| u * u),
        };
        assert_eq!(generalized_play_update(-7.0, 3.0, &degenerate).unwrap(), 9.0);
        let inverted = GeneralizedPlayParams {
            gamma_l: Arc::new(|u: f64| u),
            gamma_r: Arc::new(|u: f64| u + 1.0),
        };
        assert!(generalized_play_update(0.0, 0.0, &inverted).is_err());
    }

    #[test]
    fn level_function_shape() {
        let p = table_params();
        let f = play_level_function(0.0, &p, 1.0);
        assert_eq!(f.kinks(), &[-0.5, 0.5]);
        assert_eq!(f.eval(-1.0).d1, 2.0);
        assert_eq!(f.eval(0.0).d1, 0.0);
        assert_eq!(f.eval(1.0).d1, 2.0);
        assert_eq!(f.lipschitz_bound(), 2.0);
        let z = play_level_function(0.0, &p, 0.0);
        assert!(z.kinks().is_empty());
        assert_eq!(z.value(3.0), 0.0);
    }

    #[test]
    fn level_function_matches_pointwise_update() {
        let p = table_params();
        for &w in &[-1.3, 0.0, 0.7] {
            let f = play_level_function(w, &p, 1.0);
            for i in 0..=100 {
                let x = -3.0 + 6.0 * i as f64 / 100.0;
                assert_eq!(f.value(x), play_update(PlayState { w }, x, &p).w, "w={w} x={x}");
            }
        }
    }
}
