use super::{AdError, AdResult};

/// Width of the Gaussian approximation of the Dirac mass at 0,
/// `dirac_a(x) = exp(-x^2/a^2) / (a sqrt(pi))`.
///
/// The width is a modelling choice: it trades smoothing bias against
/// variance of second-order kink sensitivities. [`SmoothingConfig::for_scale`]
/// picks 5% of a problem-local scale (typically the strike).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingConfig {
    a: f64,
}

impl SmoothingConfig {
    pub fn new(a: f64) -> AdResult<Self> {
        if a > 0.0 && a.is_finite() {
            Ok(Self { a })
        } else {
            Err(AdError::InvalidSmoothingWidth(a))
        }
    }

    /// Default width: 5% of the local scale of the argument.
    pub fn for_scale(scale: f64) -> Self {
        Self { a: 0.05 * scale.abs().max(f64::MIN_POSITIVE) }
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.a
    }
}

impl Default for SmoothingConfig {
    /// Unit-scale default (`a = 0.05`).
    fn default() -> Self {
        Self { a: 0.05 }
    }
}

/// `x^+ = x H(x)`, the positive part written so its derivative is `heaviside`.
#[inline]
pub fn ramp(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Heaviside step with the symmetric convention `H(0) = 1/2`.
#[inline]
pub fn heaviside(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// Smoothed Dirac mass, `exp(-x^2/a^2) / (a sqrt(pi))`; unit integral for any `a`.
#[inline]
pub fn dirac_a(x: f64, cfg: &SmoothingConfig) -> f64 {
    let a = cfg.a;
    let t = x / a;
    (-t * t).exp() / (a * std::f64::consts::PI.sqrt())
}

/// d/dx of the smoothed Dirac: `dirac_a(x) * (-2x / a^2)`.
#[inline]
pub fn dirac_a_deriv(x: f64, cfg: &SmoothingConfig) -> f64 {
    dirac_a(x, cfg) * (-2.0 * x / (cfg.a * cfg.a))
}

/// Scalar field the expression interpreter runs over.
///
/// Implementations: `f64` (primal), [`super::Dual`] (tangent propagation),
/// [`super::Cplx`] (complex step), and `Dual<Cplx>` (tangents at complex
/// points). Fallible methods surface domain violations as errors rather
/// than silent NaNs.
pub trait AdScalar: Copy {
    fn from_re(c: f64) -> Self;

    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn neg(self) -> Self;
    fn div(self, o: Self) -> AdResult<Self>;

    fn exp(self) -> Self;
    fn ln(self) -> AdResult<Self>;
    fn sqrt(self) -> AdResult<Self>;
    fn sin(self) -> Self;
    fn cos(self) -> Self;

    fn ramp(self, cfg: &SmoothingConfig) -> Self;
    fn heaviside(self, cfg: &SmoothingConfig) -> Self;
    fn dirac(self, cfg: &SmoothingConfig) -> Self;

    /// Pointwise max. Defined for primal evaluation only; differentiating
    /// scalar types refuse it so kinks cannot slip past the ramp lint.
    fn binary_max(self, o: Self) -> AdResult<Self>;
}

impl AdScalar for f64 {
    #[inline]
    fn from_re(c: f64) -> Self {
        c
    }

    #[inline]
    fn add(self, o: Self) -> Self {
        self + o
    }
    #[inline]
    fn sub(self, o: Self) -> Self {
        self - o
    }
    #[inline]
    fn mul(self, o: Self) -> Self {
        self * o
    }
    #[inline]
    fn neg(self) -> Self {
        -self
    }

    #[inline]
    fn div(self, o: Self) -> AdResult<Self> {
        if o == 0.0 {
            Err(AdError::DivisionByZero)
        } else {
            Ok(self / o)
        }
    }

    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }

    #[inline]
    fn ln(self) -> AdResult<Self> {
        if self > 0.0 {
            Ok(f64::ln(self))
        } else {
            Err(AdError::Domain { op: "ln", arg: self })
        }
    }

    #[inline]
    fn sqrt(self) -> AdResult<Self> {
        if self >= 0.0 {
            Ok(f64::sqrt(self))
        } else {
            Err(AdError::Domain { op: "sqrt", arg: self })
        }
    }

    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }

    #[inline]
    fn ramp(self, _cfg: &SmoothingConfig) -> Self {
        ramp(self)
    }
    #[inline]
    fn heaviside(self, _cfg: &SmoothingConfig) -> Self {
        heaviside(self)
    }
    #[inline]
    fn dirac(self, cfg: &SmoothingConfig) -> Self {
        dirac_a(self, cfg)
    }

    #[inline]
    fn binary_max(self, o: Self) -> AdResult<Self> {
        Ok(f64::max(self, o))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_and_heaviside_conventions() {
        assert_eq!(ramp(-1.0), 0.0);
        assert_eq!(ramp(2.0), 2.0);
        assert_eq!(ramp(0.0), 0.0);
        assert_eq!(heaviside(0.0), 0.5);
        assert_eq!(heaviside(3.0), 1.0);
        assert_eq!(heaviside(-3.0), 0.0);
    }

    #[test]
    fn dirac_peak_value() {
        let cfg = SmoothingConfig::new(0.1).unwrap();
        let expect = 1.0 / (0.1 * std::f64::consts::PI.sqrt());
        assert!((dirac_a(0.0, &cfg) - expect).abs() < 1e-12);
        assert!((expect - 5.641895835477563).abs() < 1e-12);
    }

    #[test]
    fn dirac_unit_mass_trapezoid() {
        // Trapezoid quadrature over [-8a, 8a] with step a/100.
        for &a in &[0.01, 0.05, 0.5, 2.0] {
            let cfg = SmoothingConfig::new(a).unwrap();
            let h = a / 100.0;
            let n = (16.0 * a / h).round() as usize;
            let x0 = -8.0 * a;
            let mut acc = 0.0;
            for i in 0..=n {
                let x = x0 + i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                acc += w * dirac_a(x, &cfg);
            }
            assert!((acc * h - 1.0).abs() < 1e-6, "mass {} for a={}", acc * h, a);
        }
    }

    #[test]
    fn invalid_width_rejected() {
        assert!(SmoothingConfig::new(0.0).is_err());
        assert!(SmoothingConfig::new(-0.1).is_err());
        assert!(SmoothingConfig::new(f64::NAN).is_err());
    }
}
