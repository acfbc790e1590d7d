use std::fmt;

use crate::quadrature::integrate;

/// A Preisach density `omega(r, sigma)`, even in `sigma`.
pub trait PreisachDensity: Send + Sync + fmt::Debug {
    fn density(&self, r: f64, sigma: f64) -> f64;

    /// Partial derivative in `sigma`.
    fn density_dsigma(&self, r: f64, sigma: f64) -> f64;

    /// `Omega(r, sigma) = integral of omega(r, s) ds over [0, sigma]`, odd in `sigma`.
    fn antiderivative(&self, r: f64, sigma: f64) -> f64;

    /// Upper bound of `omega(r, .)` over all `sigma`.
    fn sup_density(&self, r: f64) -> f64;
}

/// Product of two Lorentzians centred at `sigma = ±(mu - r)`:
/// `omega = n/2 * L(sigma + r - mu) * L(sigma - r + mu)`, `L(z) = 1 / (1 + (z / (gamma mu))^2)`.
///
/// The antiderivative is evaluated in closed form (partial fractions).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LorentzianDensity {
    pub n: f64,
    pub gamma: f64,
    pub mu: f64,
}

impl LorentzianDensity {
    /// Parameters fitted to the magnetic benchmark material.
    pub const BENCHMARK: Self = Self { n: 0.080422, gamma: 0.27382, mu: 91.24317 };

    fn width(&self) -> f64 {
        self.gamma * self.mu
    }

    /// Integral of `sup_density` over `r` in `(0, inf)`.
    pub fn total_sup_mass(&self) -> f64 {
        let g = self.width();
        let core = g * (0.5 + std::f64::consts::FRAC_PI_4);
        let below = if self.mu > g { 0.25 * g * g * (1.0 / g - 1.0 / self.mu) } else { 0.0 };
        let above = 0.25 * g;
        0.5 * self.n * (core + below + above)
    }

    /// Smallest `r_max` whose tail `integral of sup_density over (r_max, inf)` is at
    /// most `rel` times the total.
    pub fn r_max_for_tail(&self, rel: f64) -> f64 {
        let g = self.width();
        // For r > mu + g the supremum is n/2 * g^2 / (4 (r - mu)^2).
        let r = self.mu + 0.5 * self.n * g * g / (4.0 * rel * self.total_sup_mass());
        r.max(self.mu + g)
    }
}

impl PreisachDensity for LorentzianDensity {
    fn density(&self, r: f64, sigma: f64) -> f64 {
        let g = self.width();
        let c = self.mu - r;
        let l1 = 1.0 / (1.0 + ((sigma - c) / g).powi(2));
        let l2 = 1.0 / (1.0 + ((sigma + c) / g).powi(2));
        0.5 * self.n * l1 * l2
    }

    fn density_dsigma(&self, r: f64, sigma: f64) -> f64 {
        let g = self.width();
        let c = self.mu - r;
        let (z1, z2) = (sigma - c, sigma + c);
        let l1 = 1.0 / (1.0 + (z1 / g).powi(2));
        let l2 = 1.0 / (1.0 + (z2 / g).powi(2));
        let dl1 = -2.0 * z1 / (g * g) * l1 * l1;
        let dl2 = -2.0 * z2 / (g * g) * l2 * l2;
        0.5 * self.n * (dl1 * l2 + l1 * dl2)
    }

    fn antiderivative(&self, r: f64, sigma: f64) -> f64 {
        // omega = n/2 g^4 / (P Q) with P = (s-c)^2+g^2, Q = (s+c)^2+g^2.
        // Partial fractions give
        //   int_0^s = (alpha/2) ln(P/Q) + beta/(2g) (atan((s-c)/g) + atan((s+c)/g)),
        // alpha = -beta/(2c), beta = 1/(2(c^2+g^2)). The log term is rewritten
        // with ln1p so that c -> 0 stays accurate.
        let g = self.width();
        let c = self.mu - r;
        let k = c * c + g * g;
        let beta = 0.5 / k;
        let q = (sigma + c).powi(2) + g * g;
        let x = -4.0 * c * sigma / q;
        let ln1p_ratio = if x.abs() < 1e-8 { 1.0 - 0.5 * x + x * x / 3.0 } else { x.ln_1p() / x };
        let log_term = beta * sigma / q * ln1p_ratio;
        let atan_term = beta / (2.0 * g) * (((sigma - c) / g).atan() + ((sigma + c) / g).atan());
        0.5 * self.n * g.powi(4) * (log_term + atan_term)
    }

    fn sup_density(&self, r: f64) -> f64 {
        let g = self.width();
        let c = self.mu - r;
        let min_pq = if c * c > g * g { 4.0 * c * c * g * g } else { (c * c + g * g).powi(2) };
        0.5 * self.n * g.powi(4) / min_pq
    }
}

/// `omega = height` on `|sigma| <= half_width`, zero outside.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxDensity {
    pub height: f64,
    pub half_width: f64,
}

impl PreisachDensity for BoxDensity {
    fn density(&self, _r: f64, sigma: f64) -> f64 {
        if sigma.abs() <= self.half_width {
            self.height
        } else {
            0.0
        }
    }

    fn density_dsigma(&self, _r: f64, _sigma: f64) -> f64 {
        0.0
    }

    fn antiderivative(&self, _r: f64, sigma: f64) -> f64 {
        self.height * sigma.clamp(-self.half_width, self.half_width)
    }

    fn sup_density(&self, _r: f64) -> f64 {
        self.height
    }
}

/// Any even density; the antiderivative is computed by adaptive quadrature.
pub struct QuadratureDensity<F> {
    omega: F,
    tol: f64,
    sup_range: f64,
}

impl<F> QuadratureDensity<F>
where
    F: Fn(f64, f64) -> f64 + Send + Sync,
{
    /// `sup_range` bounds the `sigma` interval scanned for the supremum.
    pub fn new(omega: F, sup_range: f64) -> Self {
        Self { omega, tol: 1e-12, sup_range }
    }
}

impl<F> fmt::Debug for QuadratureDensity<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuadratureDensity").field("tol", &self.tol).finish()
    }
}

impl<F> PreisachDensity for QuadratureDensity<F>
where
    F: Fn(f64, f64) -> f64 + Send + Sync,
{
    fn density(&self, r: f64, sigma: f64) -> f64 {
        (self.omega)(r, sigma)
    }

    fn density_dsigma(&self, r: f64, sigma: f64) -> f64 {
        let h = 1e-6 * (1.0 + sigma.abs());
        ((self.omega)(r, sigma + h) - (self.omega)(r, sigma - h)) / (2.0 * h)
    }

    fn antiderivative(&self, r: f64, sigma: f64) -> f64 {
        let s = sigma.abs();
        // Split long ranges so the error estimate sees localized peaks.
        let pieces = ((s / self.sup_range.max(1e-300)) * 64.0).ceil().clamp(1.0, 4096.0) as usize;
        let mut total = 0.0;
        for i in 0..pieces {
            let a = s * i as f64 / pieces as f64;
            let b = s * (i + 1) as f64 / pieces as f64;
            total += integrate(|t| (self.omega)(r, t), a, b, self.tol / pieces as f64);
        }
        total.copysign(sigma)
    }

    fn sup_density(&self, r: f64) -> f64 {
        let n = 20_000;
        (0..=n)
            .map(|i| (self.omega)(r, self.sup_range * i as f64 / n as f64))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_matches_quadrature() {
        let lor = LorentzianDensity::BENCHMARK;
        let quad = QuadratureDensity::new(move |r, s| lor.density(r, s), 400.0);
        for &r in &[0.5, 40.0, 91.24317, 91.3, 150.0, 1.0e4] {
            for &s in &[0.0, 1e-3, 5.0, -30.0, 91.0, 250.0, -400.0] {
                let a = lor.antiderivative(r, s);
                let b = quad.antiderivative(r, s);
                assert!((a - b).abs() < 1e-11 * (1.0 + b.abs()), "r={r} s={s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn derivatives_are_consistent() {
        let lor = LorentzianDensity::BENCHMARK;
        for &r in &[10.0, 91.24317, 200.0] {
            for &s in &[-120.0, -3.0, 0.5, 60.0] {
                let h = 1e-4;
                let fd = (lor.antiderivative(r, s + h) - lor.antiderivative(r, s - h)) / (2.0 * h);
                assert!((fd - lor.density(r, s)).abs() < 1e-9, "r={r} s={s}");
                let fd2 = (lor.density(r, s + h) - lor.density(r, s - h)) / (2.0 * h);
                assert!((fd2 - lor.density_dsigma(r, s)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn oddness_and_supremum() {
        let lor = LorentzianDensity::BENCHMARK;
        for &r in &[3.0, 91.0, 500.0] {
            assert_eq!(lor.antiderivative(r, 0.0), 0.0);
            let a = lor.antiderivative(r, 37.5);
            assert!((a + lor.antiderivative(r, -37.5)).abs() < 1e-16 * (1.0 + a.abs()) + 1e-18);
            let sampled = (0..=200_000)
                .map(|i| lor.density(r, 1000.0 * i as f64 / 200_000.0))
                .fold(0.0, f64::max);
            let sup = lor.sup_density(r);
            assert!(sup >= sampled * (1.0 - 1e-12) && sup <= sampled * (1.0 + 1e-6), "r={r}");
        }
    }

    #[test]
    fn tail_mass_closed_form() {
        let lor = LorentzianDensity::BENCHMARK;
        let r_max = lor.r_max_for_tail(1e-6);
        let g = lor.gamma * lor.mu;
        let near = integrate(|r| lor.sup_density(r), 0.0, lor.mu + g, 1e-13);
        let far = 0.5 * lor.n * g * g / (4.0 * g);
        assert!((near + far - lor.total_sup_mass()).abs() < 1e-10);
        let tail = 0.5 * lor.n * g * g / (4.0 * (r_max - lor.mu));
        assert!((tail / lor.total_sup_mass() - 1e-6).abs() < 1e-12);
    }

    #[test]
    fn box_density() {
        let b = BoxDensity { height: 1.0, half_width: 2.0 };
        assert_eq!(b.antiderivative(0.0, 1.5), 1.5);
        assert_eq!(b.antiderivative(0.0, -5.0), -2.0);
    }
}
