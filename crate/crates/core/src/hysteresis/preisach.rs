use std::fmt;
use std::sync::Arc;

use super::density::{LorentzianDensity, PreisachDensity};
use super::HysteresisError;
use crate::piecewise::{sort_dedup_kinks, Jet, PieceFamily, ScalarPiecewiseC2};

/// Quadrature grid in `r` plus the density. Cloning is cheap.
#[derive(Clone)]
pub struct PreisachParams {
    r_nodes: Arc<[f64]>,
    r_weights: Arc<[f64]>,
    density: Arc<dyn PreisachDensity>,
}

impl fmt::Debug for PreisachParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PreisachParams")
            .field("nodes", &self.r_nodes.len())
            .field("density", &self.density)
            .finish()
    }
}

impl PreisachParams {
    pub fn new(
        r_nodes: Vec<f64>,
        r_weights: Vec<f64>,
        density: Arc<dyn PreisachDensity>,
    ) -> Result<Self, HysteresisError> {
        if r_nodes.is_empty() || r_nodes.len() != r_weights.len() {
            return Err(HysteresisError::InvalidPreisach(format!(
                "{} nodes but {} weights",
                r_nodes.len(),
                r_weights.len()
            )));
        }
        if r_nodes.iter().any(|&r| !(r.is_finite() && r > 0.0)) {
            return Err(HysteresisError::InvalidPreisach("r nodes must be positive".into()));
        }
        if r_weights.iter().any(|&w| !(w.is_finite() && w >= 0.0)) {
            return Err(HysteresisError::InvalidPreisach("weights must be nonnegative".into()));
        }
        let mut sorted = r_nodes.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(HysteresisError::InvalidPreisach("r nodes must be distinct".into()));
        }
        Ok(Self { r_nodes: r_nodes.into(), r_weights: r_weights.into(), density })
    }

    /// Composite midpoint rule with `n` cells on `(0, r_max]`.
    pub fn uniform_grid(
        n: usize,
        r_max: f64,
        density: Arc<dyn PreisachDensity>,
    ) -> Result<Self, HysteresisError> {
        let h = r_max / n as f64;
        let nodes = (0..n).map(|j| (j as f64 + 0.5) * h).collect();
        Self::new(nodes, vec![h; n], density)
    }

    /// Midpoint rule in the mapped variable `s = r / (r + r_scale)`, which
    /// clusters nodes near `r_scale` and reaches far into the algebraic tail.
    pub fn graded_grid(
        n: usize,
        r_max: f64,
        r_scale: f64,
        density: Arc<dyn PreisachDensity>,
    ) -> Result<Self, HysteresisError> {
        if n == 0 || !(r_max > 0.0 && r_scale > 0.0) {
            return Err(HysteresisError::InvalidPreisach("graded grid needs n > 0, r_max > 0".into()));
        }
        let s_max = r_max / (r_max + r_scale);
        let ds = s_max / n as f64;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for j in 0..n {
            let s = (j as f64 + 0.5) * ds;
            nodes.push(r_scale * s / (1.0 - s));
            weights.push(ds * r_scale / (1.0 - s).powi(2));
        }
        Self::new(nodes, weights, density)
    }

    /// Lorentzian benchmark material on `n` graded nodes, truncated where the
    /// tail of `sup omega` drops below 1e-6 of its total mass.
    pub fn lorentzian_benchmark(n: usize) -> Result<Self, HysteresisError> {
        let lor = LorentzianDensity::BENCHMARK;
        Self::graded_grid(n, lor.r_max_for_tail(1e-6), lor.mu, Arc::new(lor))
    }

    /// Single play of half-width `r` with weight `weight`.
    pub fn single(r: f64, weight: f64, density: Arc<dyn PreisachDensity>) -> Result<Self, HysteresisError> {
        Self::new(vec![r], vec![weight], density)
    }

    pub fn r_nodes(&self) -> &[f64] {
        &self.r_nodes
    }

    pub fn r_weights(&self) -> &[f64] {
        &self.r_weights
    }

    pub fn density(&self) -> &dyn PreisachDensity {
        self.density.as_ref()
    }

    pub fn len(&self) -> usize {
        self.r_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_nodes.is_empty()
    }

    /// Bound on `|dw/du|`: `2 sum_j weight_j sup omega(r_j, .)`.
    pub fn lipschitz_bound(&self) -> f64 {
        2.0 * self
            .r_nodes
            .iter()
            .zip(self.r_weights.iter())
            .map(|(&r, &w)| w * self.density.sup_density(r))
            .sum::<f64>()
    }
}

/// One play value per r node (play with `a = -r`, `b = r`, `c = 1`).
#[derive(Clone, Debug, PartialEq)]
pub struct PreisachMemory {
    pub plays: Vec<f64>,
}

impl PreisachMemory {
    pub fn zeros(n: usize) -> Self {
        Self { plays: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.plays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plays.is_empty()
    }

    /// In-place form of [`preisach_update`].
    pub fn update(&mut self, u_new: f64, p: &PreisachParams) {
        for (w, &r) in self.plays.iter_mut().zip(p.r_nodes.iter()) {
            *w = (u_new - r).max((u_new + r).min(*w));
        }
    }
}

/// How to set up the initial memory.
#[derive(Clone, Debug, PartialEq)]
pub enum PreisachInit {
    /// Given play values, checked against the initial input.
    Explicit(Vec<f64>),
    /// Every play starts on its lower band edge for the first input of `path`
    /// (negative saturation when that input is very negative), is driven
    /// through the rest of `path`, and finally to the initial input.
    LowerBoundThenPath(Vec<f64>),
}

impl PreisachInit {
    pub fn demagnetized(n: usize) -> Self {
        Self::Explicit(vec![0.0; n])
    }
}

pub fn preisach_init(u0: f64, policy: &PreisachInit, p: &PreisachParams) -> Result<PreisachMemory, HysteresisError> {
    match policy {
        PreisachInit::Explicit(values) => {
            if values.len() != p.len() {
                return Err(HysteresisError::InvalidPreisach(format!(
                    "{} play values for {} nodes",
                    values.len(),
                    p.len()
                )));
            }
            for (index, (&w, &r)) in values.iter().zip(p.r_nodes.iter()).enumerate() {
                let (lo, hi) = (u0 - r, u0 + r);
                let tol = 1e-12 * (1.0 + u0.abs() + r);
                if w < lo - tol || w > hi + tol {
                    return Err(HysteresisError::InconsistentMemory { index, r, w, lo, hi });
                }
            }
            Ok(PreisachMemory { plays: values.clone() })
        }
        PreisachInit::LowerBoundThenPath(path) => {
            let start = path.first().copied().unwrap_or(u0);
            let mut m = PreisachMemory { plays: p.r_nodes.iter().map(|&r| start - r).collect() };
            for &u in path.iter().skip(1) {
                m.update(u, p);
            }
            m.update(u0, p);
            Ok(m)
        }
    }
}

pub fn preisach_update(m: &PreisachMemory, u_new: f64, p: &PreisachParams) -> PreisachMemory {
    let mut next = m.clone();
    next.update(u_new, p);
    next
}

/// `2 sum_j weight_j Omega(r_j, play_j)`.
pub fn preisach_output(m: &PreisachMemory, p: &PreisachParams) -> f64 {
    2.0 * m
        .plays
        .iter()
        .zip(p.r_nodes.iter().zip(p.r_weights.iter()))
        .map(|(&w, (&r, &wt))| wt * p.density.antiderivative(r, w))
        .sum::<f64>()
}

#[derive(Debug)]
struct PreisachPieces {
    plays: Vec<f64>,
    params: PreisachParams,
}

impl PieceFamily for PreisachPieces {
    fn eval_piece(&self, _piece: usize, rep: f64, x: f64) -> Jet {
        let p = &self.params;
        let mut out = Jet::default();
        for (&w, (&r, &wt)) in self.plays.iter().zip(p.r_nodes.iter().zip(p.r_weights.iter())) {
            if wt == 0.0 {
                continue;
            }
            // Branch chosen from the representative point, evaluated at x.
            let (f, slope) = if rep < w - r {
                (x + r, 1.0)
            } else if rep > w + r {
                (x - r, 1.0)
            } else {
                (w, 0.0)
            };
            out.value += wt * p.density.antiderivative(r, f);
            if slope != 0.0 {
                out.d1 += wt * p.density.density(r, f);
                out.d2 += wt * p.density.density_dsigma(r, f);
            }
        }
        Jet::new(2.0 * out.value, 2.0 * out.d1, 2.0 * out.d2)
    }
}

/// `x -> scale * preisach_output(update(m, x)) + offset`.
pub fn preisach_level_function(
    m: &PreisachMemory,
    p: &PreisachParams,
    scale: f64,
    offset: f64,
) -> ScalarPiecewiseC2 {
    let mut kinks: Vec<f64> = m
        .plays
        .iter()
        .zip(p.r_nodes.iter())
        .flat_map(|(&w, &r)| [w - r, w + r])
        .collect();
    sort_dedup_kinks(&mut kinks);
    let family = Arc::new(PreisachPieces { plays: m.plays.clone(), params: p.clone() });
    ScalarPiecewiseC2::new_unchecked(kinks, family, p.lipschitz_bound())
        .expect("kinks are sorted and finite")
        .scaled(scale)
        .with_offset(offset)
}
