use super::scalar::{dirac_a, dirac_a_deriv, heaviside, ramp, AdScalar, SmoothingConfig};
use super::{AdError, AdResult};

/// Complex number as a plain pair of reals, for complex-step differentiation.
///
/// The generalized primitives act on the real part and carry the step in the
/// imaginary part: `ramp(x + iy) = ramp(x) + iy H(x)` and
/// `H(x + iy) = H(x) + iy dirac_a(x)`, so `Im f(x + i da) / da` recovers the
/// generalized derivative at kinks instead of collapsing to zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Cplx {
    pub re: f64,
    pub im: f64,
}

impl Cplx {
    #[inline]
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

impl AdScalar for Cplx {
    #[inline]
    fn from_re(c: f64) -> Self {
        Self { re: c, im: 0.0 }
    }

    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }

    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }

    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }

    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }

    #[inline]
    fn div(self, o: Self) -> AdResult<Self> {
        let d = o.norm_sq();
        if d == 0.0 {
            return Err(AdError::DivisionByZero);
        }
        Ok(Self::new(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        ))
    }

    #[inline]
    fn exp(self) -> Self {
        let r = self.re.exp();
        Self::new(r * self.im.cos(), r * self.im.sin())
    }

    fn ln(self) -> AdResult<Self> {
        let d = self.norm_sq();
        if d == 0.0 {
            return Err(AdError::Domain { op: "ln", arg: 0.0 });
        }
        Ok(Self::new(0.5 * d.ln(), self.im.atan2(self.re)))
    }

    fn sqrt(self) -> AdResult<Self> {
        // Principal branch via half-angle; fine for the near-real arguments
        // complex step produces.
        let r = self.norm_sq().sqrt();
        if r == 0.0 {
            return Ok(Self::new(0.0, 0.0));
        }
        let theta = 0.5 * self.im.atan2(self.re);
        let s = r.sqrt();
        Ok(Self::new(s * theta.cos(), s * theta.sin()))
    }

    #[inline]
    fn sin(self) -> Self {
        Self::new(
            self.re.sin() * self.im.cosh(),
            self.re.cos() * self.im.sinh(),
        )
    }

    #[inline]
    fn cos(self) -> Self {
        Self::new(
            self.re.cos() * self.im.cosh(),
            -self.re.sin() * self.im.sinh(),
        )
    }

    #[inline]
    fn ramp(self, _cfg: &SmoothingConfig) -> Self {
        Self::new(ramp(self.re), self.im * heaviside(self.re))
    }

    #[inline]
    fn heaviside(self, cfg: &SmoothingConfig) -> Self {
        Self::new(heaviside(self.re), self.im * dirac_a(self.re, cfg))
    }

    #[inline]
    fn dirac(self, cfg: &SmoothingConfig) -> Self {
        Self::new(dirac_a(self.re, cfg), self.im * dirac_a_deriv(self.re, cfg))
    }

    fn binary_max(self, _o: Self) -> AdResult<Self> {
        Err(AdError::MaxNotDifferentiable)
    }
}
