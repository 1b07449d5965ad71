use super::scalar::{AdScalar, SmoothingConfig};
use super::AdResult;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Truncated power series `value + tangent * eps`, `eps^2 = 0`.
///
/// Generic over the component field so `Dual<Cplx>` propagates a tangent
/// through a complex-stepped evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual<T = f64> {
    pub value: T,
    pub tangent: T,
}

impl<T: AdScalar> Dual<T> {
    #[inline]
    pub fn new(value: T, tangent: T) -> Self {
        Self { value, tangent }
    }

    /// Lift a constant: zero tangent.
    #[inline]
    pub fn constant(value: T) -> Self {
        Self { value, tangent: T::from_re(0.0) }
    }

    /// Seed an input with unit tangent.
    #[inline]
    pub fn seeded(value: T) -> Self {
        Self { value, tangent: T::from_re(1.0) }
    }
}

impl<T: AdScalar> AdScalar for Dual<T> {
    #[inline]
    fn from_re(c: f64) -> Self {
        Self { value: T::from_re(c), tangent: T::from_re(0.0) }
    }

    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.value.add(o.value), self.tangent.add(o.tangent))
    }

    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.value.sub(o.value), self.tangent.sub(o.tangent))
    }

    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.value.mul(o.value),
            self.value.mul(o.tangent).add(self.tangent.mul(o.value)),
        )
    }

    #[inline]
    fn neg(self) -> Self {
        Self::new(self.value.neg(), self.tangent.neg())
    }

    #[inline]
    fn div(self, o: Self) -> AdResult<Self> {
        let v = self.value.div(o.value)?;
        // (t - v * ot) / ov, reusing the quotient.
        let t = self.tangent.sub(v.mul(o.tangent)).div(o.value)?;
        Ok(Self::new(v, t))
    }

    #[inline]
    fn exp(self) -> Self {
        let v = self.value.exp();
        Self::new(v, self.tangent.mul(v))
    }

    #[inline]
    fn ln(self) -> AdResult<Self> {
        let v = self.value.ln()?;
        Ok(Self::new(v, self.tangent.div(self.value)?))
    }

    #[inline]
    fn sqrt(self) -> AdResult<Self> {
        let v = self.value.sqrt()?;
        let two = T::from_re(2.0);
        Ok(Self::new(v, self.tangent.div(two.mul(v))?))
    }

    #[inline]
    fn sin(self) -> Self {
        Self::new(self.value.sin(), self.tangent.mul(self.value.cos()))
    }

    #[inline]
    fn cos(self) -> Self {
        Self::new(self.value.cos(), self.tangent.mul(self.value.sin()).neg())
    }

    #[inline]
    fn ramp(self, cfg: &SmoothingConfig) -> Self {
        Self::new(
            self.value.ramp(cfg),
            self.tangent.mul(self.value.heaviside(cfg)),
        )
    }

    #[inline]
    fn heaviside(self, cfg: &SmoothingConfig) -> Self {
        Self::new(
            self.value.heaviside(cfg),
            self.tangent.mul(self.value.dirac(cfg)),
        )
    }

    #[inline]
    fn dirac(self, cfg: &SmoothingConfig) -> Self {
        // d/dx dirac_a(x) = dirac_a(x) * (-2x/a^2)
        let v = self.value.dirac(cfg);
        let scale = T::from_re(-2.0 / (cfg.width() * cfg.width()));
        Self::new(v, self.tangent.mul(v).mul(self.value).mul(scale))
    }

    fn binary_max(self, _o: Self) -> AdResult<Self> {
        Err(super::AdError::MaxNotDifferentiable)
    }
}

// Ergonomic operators for the common scalar case.
impl Add for Dual<f64> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        AdScalar::add(self, o)
    }
}

impl Sub for Dual<f64> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        AdScalar::sub(self, o)
    }
}

impl Mul for Dual<f64> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        AdScalar::mul(self, o)
    }
}

impl Div for Dual<f64> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        AdScalar::div(self, o).expect("division by zero dual")
    }
}

impl Neg for Dual<f64> {
    type Output = Self;
    fn neg(self) -> Self {
        AdScalar::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_matches_power_series() {
        // (a + b eps)(c + d eps) = ac + (ad + bc) eps
        let x = Dual::new(3.0, 2.0);
        let y = Dual::new(-1.5, 0.25);
        let p = x * y;
        assert_eq!(p.value, -4.5);
        assert_eq!(p.tangent, 3.0 * 0.25 + 2.0 * (-1.5));
    }

    #[test]
    fn zero_tangent_stays_zero_through_smooth_chain() {
        let x: Dual = Dual::constant(0.7);
        let y = AdScalar::ln(AdScalar::exp(x) * x + Dual::from_re(2.0)).unwrap();
        let z = AdScalar::sin(AdScalar::sqrt(y).unwrap());
        assert_eq!(z.tangent, 0.0);
    }

    #[test]
    fn unary_rule_g_prime() {
        // <g(r), r' g'(r)> for g = exp at r = 0.3 with r' = 2.
        let x = Dual::new(0.3, 2.0);
        let y = AdScalar::exp(x);
        assert!((y.tangent - 2.0 * 0.3f64.exp()).abs() < 1e-15);
    }
}
