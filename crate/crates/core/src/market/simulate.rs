use super::rng::{stream, PathRng};
use super::scenario::Scenario;
use super::{ModelError, ModelResult};
use rayon::prelude::*;

/// The parameter the tangent process differentiates against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theta {
    Spot,
    Rate,
    Sigma,
    Strike,
    Maturity,
}

impl Theta {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "spot" => Some(Self::Spot),
            "rate" => Some(Self::Rate),
            "sigma" => Some(Self::Sigma),
            "strike" => Some(Self::Strike),
            "maturity" => Some(Self::Maturity),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Spot => "spot",
            Self::Rate => "rate",
            Self::Sigma => "sigma",
            Self::Strike => "strike",
            Self::Maturity => "maturity",
        }
    }
}

/// Simulated Euler paths with the tangent process for one designated
/// parameter and the normal draws that produced them.
#[derive(Debug, Clone)]
pub struct PathBatch {
    pub m: usize,
    pub n: usize,
    pub h: f64,
    /// Path values, row-major: `x[path * (n + 1) + step]`.
    pub x: Vec<f64>,
    /// Tangent process dX/d(theta), same layout.
    pub y: Vec<f64>,
    /// Normal draws, `z[path * n + step]`.
    pub z: Vec<f64>,
    pub theta: Theta,
    pub spot: f64,
    pub rate: f64,
    pub sigma: f64,
    pub maturity: f64,
    pub seed: u64,
}

impl PathBatch {
    #[inline]
    pub fn path(&self, i: usize) -> &[f64] {
        &self.x[i * (self.n + 1)..(i + 1) * (self.n + 1)]
    }

    #[inline]
    pub fn tangent(&self, i: usize) -> &[f64] {
        &self.y[i * (self.n + 1)..(i + 1) * (self.n + 1)]
    }

    #[inline]
    pub fn noise(&self, i: usize) -> &[f64] {
        &self.z[i * self.n..(i + 1) * self.n]
    }

    /// Terminal Brownian increment sum `W_T = sqrt(h) * sum(Z)`.
    pub fn brownian_terminal(&self, i: usize) -> f64 {
        self.h.sqrt() * self.noise(i).iter().sum::<f64>()
    }
}

/// Explicit Euler scheme `X_{k+1} = X_k + r h X_k + X_k sigma sqrt(h) Z`,
/// with the tangent process integrated alongside:
/// `Y_{k+1} = Y_k + r h Y_k + r' h X_k + (Y_k sigma + sigma' X_k) sqrt(h) Z`
/// (plus the step-size terms when theta is the maturity).
///
/// The scheme is kept in this arithmetic form (no log transform); negative
/// path values are possible in principle and flow through the ramp-based
/// payoffs rather than being absorbed at zero.
pub fn simulate(sc: &Scenario, theta: Theta, rng: &PathRng) -> ModelResult<PathBatch> {
    sc.validate().map_err(|e| ModelError::InvalidParams(e.to_string()))?;
    let (m, n) = (sc.paths, sc.steps);
    let h = sc.step_size();
    let sqh = h.sqrt();
    let (r, sig) = (sc.rate, sc.sigma);

    // Per-theta coefficient selectors.
    let dx0 = if theta == Theta::Spot { 1.0 } else { 0.0 };
    let dr = if theta == Theta::Rate { 1.0 } else { 0.0 };
    let dsig = if theta == Theta::Sigma { 1.0 } else { 0.0 };
    let (dh, dsqh) = if theta == Theta::Maturity {
        (1.0 / n as f64, 1.0 / (2.0 * sqh * n as f64))
    } else {
        (0.0, 0.0)
    };

    let mut x = vec![0.0; m * (n + 1)];
    let mut y = vec![0.0; m * (n + 1)];
    let mut z = vec![0.0; m * n];

    x.par_chunks_mut(n + 1)
        .zip(y.par_chunks_mut(n + 1))
        .zip(z.par_chunks_mut(n))
        .enumerate()
        .for_each(|(path, ((xr, yr), zr))| {
            xr[0] = sc.spot;
            yr[0] = dx0;
            for k in 0..n {
                let zk = rng.normal(stream::MAIN, path as u64, k as u64);
                zr[k] = zk;
                let xk = xr[k];
                let yk = yr[k];
                xr[k + 1] = xk + r * h * xk + xk * (sig * sqh) * zk;
                yr[k + 1] = yk
                    + r * h * yk
                    + (dr * h + r * dh) * xk
                    + (yk * sig + dsig * xk) * sqh * zk
                    + xk * sig * dsqh * zk;
            }
        });

    Ok(PathBatch {
        m,
        n,
        h,
        x,
        y,
        z,
        theta,
        spot: sc.spot,
        rate: r,
        sigma: sig,
        maturity: sc.maturity,
        seed: rng.seed(),
    })
}
