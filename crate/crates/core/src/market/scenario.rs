use super::payoff::{Payoff, PayoffKind};
use crate::ad::SmoothingConfig;
use std::fmt;

/// Market, credit, and simulation parameters for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub spot: f64,
    pub rate: f64,
    pub sigma: f64,
    pub strike: f64,
    pub maturity: f64,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
    pub payoff: PayoffKind,
    pub barrier_lo: Option<f64>,
    pub barrier_hi: Option<f64>,
    pub hazard: f64,
    pub lgd: f64,
    pub smoothing_a: Option<f64>,
    pub groups: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    UnknownKey { line: usize, key: String },
    BadValue { line: usize, key: String, value: String },
    BadSyntax { line: usize },
    MissingKey { key: &'static str },
    Invalid { msg: String },
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::UnknownKey { line, key } => write!(f, "{line}:{key}: unknown key"),
            ScenarioError::BadValue { line, key, value } => {
                write!(f, "{line}:{key}: cannot parse value '{value}'")
            }
            ScenarioError::BadSyntax { line } => {
                write!(f, "{line}: expected 'key = value'")
            }
            ScenarioError::MissingKey { key } => write!(f, "missing required key '{key}'"),
            ScenarioError::Invalid { msg } => write!(f, "invalid scenario: {msg}"),
        }
    }
}

impl std::error::Error for ScenarioError {}

impl Scenario {
    /// Parse the line-oriented `key = value` format. Blank lines and
    /// `#` comments are ignored; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut spot = None;
        let mut rate = None;
        let mut sigma = None;
        let mut strike = None;
        let mut maturity = None;
        let mut steps = None;
        let mut paths = None;
        let mut seed = None;
        let mut payoff = None;
        let mut barrier_lo = None;
        let mut barrier_hi = None;
        let mut hazard = None;
        let mut lgd = None;
        let mut smoothing_a = None;
        let mut groups = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(ScenarioError::BadSyntax { line });
            };
            let key = key.trim();
            let value = value.trim();
            let bad = || ScenarioError::BadValue {
                line,
                key: key.to_string(),
                value: value.to_string(),
            };
            let f = || value.parse::<f64>().map_err(|_| bad());
            let u = || value.parse::<usize>().map_err(|_| bad());
            match key {
                "spot" => spot = Some(f()?),
                "rate" => rate = Some(f()?),
                "sigma" => sigma = Some(f()?),
                "strike" => strike = Some(f()?),
                "maturity" => maturity = Some(f()?),
                "steps" => steps = Some(u()?),
                "paths" => paths = Some(u()?),
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad())?),
                "payoff" => payoff = Some(PayoffKind::parse(value).ok_or_else(bad)?),
                "barrier_lo" => barrier_lo = Some(f()?),
                "barrier_hi" => barrier_hi = Some(f()?),
                "hazard" => hazard = Some(f()?),
                "lgd" => lgd = Some(f()?),
                "smoothing_a" => smoothing_a = Some(f()?),
                "groups" => groups = Some(u()?),
                _ => {
                    return Err(ScenarioError::UnknownKey { line, key: key.to_string() });
                }
            }
        }

        let req = |k: &'static str| ScenarioError::MissingKey { key: k };
        let sc = Scenario {
            spot: spot.ok_or(req("spot"))?,
            rate: rate.ok_or(req("rate"))?,
            sigma: sigma.ok_or(req("sigma"))?,
            strike: strike.ok_or(req("strike"))?,
            maturity: maturity.ok_or(req("maturity"))?,
            steps: steps.ok_or(req("steps"))?,
            paths: paths.ok_or(req("paths"))?,
            seed: seed.ok_or(req("seed"))?,
            payoff: payoff.ok_or(req("payoff"))?,
            barrier_lo,
            barrier_hi,
            hazard: hazard.unwrap_or(0.0),
            lgd: lgd.unwrap_or(0.6),
            smoothing_a,
            groups: groups.unwrap_or(10),
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |msg: String| Err(ScenarioError::Invalid { msg });
        if !(self.spot > 0.0) {
            return bad(format!("spot must be positive, got {}", self.spot));
        }
        if self.sigma < 0.0 {
            return bad(format!("sigma must be nonnegative, got {}", self.sigma));
        }
        if !(self.maturity > 0.0) {
            return bad(format!("maturity must be positive, got {}", self.maturity));
        }
        if self.steps == 0 {
            return bad("steps must be >= 1".into());
        }
        if self.paths == 0 {
            return bad("paths must be >= 1".into());
        }
        if let (Some(lo), Some(hi)) = (self.barrier_lo, self.barrier_hi) {
            if !(lo < hi) {
                return bad(format!("barriers must satisfy lo < hi, got {lo} >= {hi}"));
            }
        }
        if self.payoff == PayoffKind::DoubleBarrierCall
            && (self.barrier_lo.is_none() || self.barrier_hi.is_none())
        {
            return bad("double_barrier_call needs barrier_lo and barrier_hi".into());
        }
        if !(0.0..=1.0).contains(&self.lgd) {
            return bad(format!("lgd must lie in [0, 1], got {}", self.lgd));
        }
        if self.hazard < 0.0 {
            return bad(format!("hazard must be nonnegative, got {}", self.hazard));
        }
        if let Some(a) = self.smoothing_a {
            if !(a > 0.0) {
                return bad(format!("smoothing_a must be positive, got {a}"));
            }
        }
        Ok(())
    }

    /// Smoothing width for the Dirac approximation: explicit, or 5% of the
    /// strike.
    pub fn smoothing(&self) -> SmoothingConfig {
        match self.smoothing_a {
            Some(a) => SmoothingConfig::new(a).expect("validated"),
            None => SmoothingConfig::for_scale(self.strike),
        }
    }

    pub fn payoff_struct(&self) -> Payoff {
        match (self.barrier_lo, self.barrier_hi) {
            (Some(lo), Some(hi)) => Payoff::barrier(self.payoff, self.strike, lo, hi),
            _ => Payoff::new(self.payoff, self.strike),
        }
    }

    pub fn step_size(&self) -> f64 {
        self.maturity / self.steps as f64
    }

    /// Canonical one-line-per-key rendering (stable hashing input).
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        use std::fmt::Write as _;
        let _ = writeln!(s, "spot = {}", self.spot);
        let _ = writeln!(s, "rate = {}", self.rate);
        let _ = writeln!(s, "sigma = {}", self.sigma);
        let _ = writeln!(s, "strike = {}", self.strike);
        let _ = writeln!(s, "maturity = {}", self.maturity);
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "paths = {}", self.paths);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "payoff = {}", self.payoff);
        if let Some(lo) = self.barrier_lo {
            let _ = writeln!(s, "barrier_lo = {lo}");
        }
        if let Some(hi) = self.barrier_hi {
            let _ = writeln!(s, "barrier_hi = {hi}");
        }
        let _ = writeln!(s, "hazard = {}", self.hazard);
        let _ = writeln!(s, "lgd = {}", self.lgd);
        if let Some(a) = self.smoothing_a {
            let _ = writeln!(s, "smoothing_a = {a}");
        }
        let _ = writeln!(s, "groups = {}", self.groups);
        s
    }
}
