use crate::ad::{heaviside, ramp};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayoffKind {
    EuropeanCall,
    EuropeanPut,
    DoubleBarrierCall,
    AmericanPut,
}

impl PayoffKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "european_call" => Some(Self::EuropeanCall),
            "european_put" => Some(Self::EuropeanPut),
            "double_barrier_call" => Some(Self::DoubleBarrierCall),
            "american_put" => Some(Self::AmericanPut),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::EuropeanCall => "european_call",
            Self::EuropeanPut => "european_put",
            Self::DoubleBarrierCall => "double_barrier_call",
            Self::AmericanPut => "american_put",
        }
    }
}

impl fmt::Display for PayoffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Payoff evaluated with `ramp`/`heaviside` only, so every kink carries a
/// generalized derivative.
#[derive(Debug, Clone, Copy)]
pub struct Payoff {
    pub kind: PayoffKind,
    pub strike: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl Payoff {
    pub fn new(kind: PayoffKind, strike: f64) -> Self {
        Self { kind, strike, lo: None, hi: None }
    }

    pub fn barrier(kind: PayoffKind, strike: f64, lo: f64, hi: f64) -> Self {
        Self { kind, strike, lo: Some(lo), hi: Some(hi) }
    }

    /// Terminal-value payoff (ignores barriers).
    #[inline]
    pub fn terminal(&self, x_t: f64) -> f64 {
        match self.kind {
            PayoffKind::EuropeanCall | PayoffKind::DoubleBarrierCall => ramp(x_t - self.strike),
            PayoffKind::EuropeanPut | PayoffKind::AmericanPut => ramp(self.strike - x_t),
        }
    }

    /// Explicit strike derivative of the terminal payoff, in the
    /// generalized sense.
    #[inline]
    pub fn terminal_d_strike(&self, x_t: f64) -> f64 {
        match self.kind {
            PayoffKind::EuropeanCall | PayoffKind::DoubleBarrierCall => {
                -heaviside(x_t - self.strike)
            }
            PayoffKind::EuropeanPut | PayoffKind::AmericanPut => heaviside(self.strike - x_t),
        }
    }

    /// Early-exercise intrinsic value.
    #[inline]
    pub fn intrinsic(&self, x: f64) -> f64 {
        match self.kind {
            PayoffKind::AmericanPut | PayoffKind::EuropeanPut => ramp(self.strike - x),
            PayoffKind::EuropeanCall | PayoffKind::DoubleBarrierCall => ramp(x - self.strike),
        }
    }

    /// Knock-out indicator monitored at every discretization date
    /// (no continuity correction), written with `heaviside` so the barrier
    /// carries a generalized derivative.
    #[inline]
    pub fn barrier_indicator(&self, path: &[f64]) -> f64 {
        let (Some(lo), Some(hi)) = (self.lo, self.hi) else {
            return 1.0;
        };
        let mut ind = 1.0;
        for &x in path {
            ind *= heaviside(x - lo) * heaviside(hi - x);
            if ind == 0.0 {
                break;
            }
        }
        ind
    }

    /// Full undiscounted pathwise value on a simulated path.
    pub fn path_value(&self, path: &[f64]) -> f64 {
        let x_t = *path.last().expect("nonempty path");
        match self.kind {
            PayoffKind::EuropeanCall | PayoffKind::EuropeanPut => self.terminal(x_t),
            PayoffKind::DoubleBarrierCall => self.terminal(x_t) * self.barrier_indicator(path),
            PayoffKind::AmericanPut => self.terminal(x_t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barrier_kills_path_touching_either_side() {
        let p = Payoff::barrier(PayoffKind::DoubleBarrierCall, 100.0, 80.0, 120.0);
        assert_eq!(p.path_value(&[100.0, 110.0, 105.0]), 5.0);
        assert_eq!(p.path_value(&[100.0, 121.0, 105.0]), 0.0);
        assert_eq!(p.path_value(&[100.0, 79.0, 105.0]), 0.0);
    }

    #[test]
    fn strike_derivative_uses_heaviside() {
        let c = Payoff::new(PayoffKind::EuropeanCall, 40.0);
        assert_eq!(c.terminal_d_strike(45.0), -1.0);
        assert_eq!(c.terminal_d_strike(35.0), 0.0);
        assert_eq!(c.terminal_d_strike(40.0), -0.5);
        let p = Payoff::new(PayoffKind::EuropeanPut, 40.0);
        assert_eq!(p.terminal_d_strike(35.0), 1.0);
    }
}
