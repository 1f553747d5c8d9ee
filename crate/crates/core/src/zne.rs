//! Zero-noise extrapolation over gate-time scaling.
//!
//! The hardware knob is the ratio tau/t_g: every gate duration is stretched
//! by a common factor, which amplifies both relaxation and depolarization.
//! Holding the optimized angles fixed, the sector energy is evaluated at a
//! ladder of stretch factors inside the attainable region [1, 3] and fitted
//! by linear least squares in the stretch factor; the intercept at 0 is the
//! mitigated estimate.
//!
//! The fit is only trustworthy when the penalized optimizer kept the state
//! inside the symmetry sector: there the energy responds linearly to the
//! stretch. Unpenalized optima sit in noise-built minima whose energy is
//! non-monotone in the stretch factor, and the same fit then lands far from
//! the exact energy; callers can use that as a negative control.

use crate::ansatz::ParamVector;
use crate::error::{Error, Result};
use crate::noise::NoiseParams;
use crate::vqe::{Backend, SectorProblem};

/// Fit model for the extrapolation. Only linear fits ship; the enum leaves
/// room for Richardson or exponential variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    Linear,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZneConfig {
    /// Gate-time stretch factors to evaluate, in units of the base gate time.
    pub scale_points: Vec<f64>,
    pub fit: FitKind,
    /// Attainable stretch region; informational, used for the defaults.
    pub region: (f64, f64),
}

impl Default for ZneConfig {
    fn default() -> Self {
        Self {
            scale_points: vec![1.0, 1.5, 2.0, 2.5, 3.0],
            fit: FitKind::Linear,
            region: (1.0, 3.0),
        }
    }
}

impl ZneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scale_points.len() < 2 {
            return Err(Error::Config("zne needs at least two scale points".into()));
        }
        if self.scale_points.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::Config("zne scale points must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Sector energy and survival probability at one stretch factor.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ZnePoint {
    pub tau_factor: f64,
    pub energy: f64,
    pub p_s: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ZneResult {
    pub points: Vec<ZnePoint>,
    /// Fitted energy at stretch factor 0.
    pub extrapolated: f64,
    pub slope: f64,
    /// Per-point fit residuals, same order as `points`.
    pub residuals: Vec<f64>,
}

impl ZneResult {
    pub fn residual_norm(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum::<f64>().sqrt()
    }

    /// True when the measured energies are monotone across the sweep.
    pub fn monotone(&self) -> bool {
        let es: Vec<f64> = self.points.iter().map(|p| p.energy).collect();
        es.windows(2).all(|w| w[1] >= w[0]) || es.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Evaluate the sector energy at each stretch factor with the angles fixed.
///
/// `theta_star` should come from a completed minimization at the base
/// stretch (tau_factor 1); the sweep does not re-optimize.
pub fn noise_sweep(
    problem: &SectorProblem,
    theta_star: &ParamVector,
    noise_base: &NoiseParams,
    config: &ZneConfig,
) -> Result<Vec<ZnePoint>> {
    config.validate()?;
    let mut points = Vec::with_capacity(config.scale_points.len());
    for &s in &config.scale_points {
        let backend = Backend::Mixed { noise: noise_base.with_tau_factor(s) };
        let (energy, p_s) = problem.sector_energy(theta_star, &backend)?;
        points.push(ZnePoint { tau_factor: s, energy, p_s });
    }
    Ok(points)
}

/// Least-squares fit of energy against stretch factor, reported at 0.
pub fn extrapolate(points: &[ZnePoint], fit: FitKind) -> Result<ZneResult> {
    if points.len() < 2 {
        return Err(Error::Config("zne fit needs at least two points".into()));
    }
    let FitKind::Linear = fit;
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.tau_factor).sum();
    let sy: f64 = points.iter().map(|p| p.energy).sum();
    let sxx: f64 = points.iter().map(|p| p.tau_factor * p.tau_factor).sum();
    let sxy: f64 = points.iter().map(|p| p.tau_factor * p.energy).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-12 * n * sxx.max(1.0) {
        return Err(Error::Config("zne fit abscissae are degenerate".into()));
    }
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    let residuals = points
        .iter()
        .map(|p| p.energy - (intercept + slope * p.tau_factor))
        .collect();
    Ok(ZneResult { points: points.to_vec(), extrapolated: intercept, slope, residuals })
}

/// Sweep and fit in one call.
pub fn mitigate(
    problem: &SectorProblem,
    theta_star: &ParamVector,
    noise_base: &NoiseParams,
    config: &ZneConfig,
) -> Result<ZneResult> {
    let points = noise_sweep(problem, theta_star, noise_base, config)?;
    extrapolate(&points, config.fit)
}
