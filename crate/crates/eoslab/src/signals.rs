//! Field-moment representation of the sampled quantum signal.
//!
//! A signal enters the measurement model only through its dimensionless
//! moment sequence m_k (the nonlinear coupling is folded in), so vacuum and
//! cat states reduce to a handful of numbers per truncation order.

use crate::error::{EosError, Result};
use crate::numerics::integrate;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq)]
pub struct MomentSequence {
    moments: Vec<f64>,
}

impl MomentSequence {
    pub fn new(moments: Vec<f64>) -> Result<Self> {
        if moments.is_empty() || (moments[0] - 1.0).abs() > 1e-12 {
            return Err(EosError::Domain("moment sequence needs m_0 = 1".into()));
        }
        if moments.len() > 2 && moments[2] < 0.0 {
            return Err(EosError::Domain("m_2 must be non-negative".into()));
        }
        if moments.len() > 4 && moments[4] < moments[2] * moments[2] - 1e-12 {
            return Err(EosError::Domain(
                "m_4 >= m_2^2 violated (not a valid state)".into(),
            ));
        }
        Ok(Self { moments })
    }

    pub fn k(&self) -> usize {
        self.moments.len() - 1
    }

    pub fn get(&self, k: usize) -> f64 {
        self.moments.get(k).copied().unwrap_or(0.0)
    }

    pub fn moments(&self) -> &[f64] {
        &self.moments
    }
}

/// Vacuum signal: standardized Gaussian field moments scaled by the
/// effective coupling, m_{2j} = (2j-1)!! g^{2j}, odd moments zero.
pub fn vacuum_moments(g: f64, k: usize) -> Result<MomentSequence> {
    if !(g > 0.0) {
        return Err(EosError::Domain(format!("vacuum_moments: g={g} must be > 0")));
    }
    if k < 2 {
        return Err(EosError::Domain("vacuum_moments: need K >= 2".into()));
    }
    let mut m = vec![0.0; k + 1];
    m[0] = 1.0;
    let mut double_fact = 1.0;
    for j in 1..=(k / 2) {
        double_fact *= (2 * j - 1) as f64;
        m[2 * j] = double_fact * g.powi(2 * j as i32);
    }
    MomentSequence::new(m)
}

/// Quadrature probability density of the even cat state |a> + |-a| in
/// standardized units (unit-variance Gaussian components displaced to
/// +-x0 with x0 = 2 alpha, including the superposition interference).
fn cat_density(x: f64, x0: f64) -> f64 {
    let phi = |u: f64| (-u * u / 4.0).exp();
    let psi = phi(x - x0) + phi(x + x0);
    psi * psi
}

/// Moments of the even cat-state field distribution, scaled by g per order.
/// Odd moments vanish by symmetry and are set to zero exactly.
pub fn cat_moments(alpha_cat: f64, g: f64, k: usize) -> Result<MomentSequence> {
    if !(alpha_cat > 0.0) {
        return Err(EosError::Domain(format!(
            "cat_moments: alpha_cat={alpha_cat} must be > 0"
        )));
    }
    if !(g > 0.0) {
        return Err(EosError::Domain(format!("cat_moments: g={g} must be > 0")));
    }
    let x0 = 2.0 * alpha_cat;
    let (lo, hi) = (-x0 - 10.0, x0 + 10.0);
    let norm = integrate(&|x| cat_density(x, x0), lo, hi, 1e-10)?;
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(EosError::Numerical("cat density normalization failed".into()));
    }
    let mut m = vec![0.0; k + 1];
    m[0] = 1.0;
    for order in (2..=k).step_by(2) {
        let raw = integrate(
            &|x| x.powi(order as i32) * cat_density(x, x0),
            lo,
            hi,
            1e-10,
        )?;
        m[order] = raw / norm * g.powi(order as i32);
    }
    MomentSequence::new(m)
}

/// Signal constructors as referenced from configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    Vacuum { g: f64 },
    Cat { alpha_cat: f64, g: f64 },
    Custom { moments: Vec<f64> },
}

impl SignalSpec {
    pub fn moments(&self, k: usize) -> Result<MomentSequence> {
        match self {
            SignalSpec::Vacuum { g } => vacuum_moments(*g, k),
            SignalSpec::Cat { alpha_cat, g } => cat_moments(*alpha_cat, *g, k),
            SignalSpec::Custom { moments } => MomentSequence::new(moments.clone()),
        }
    }

    pub fn coupling(&self) -> Option<f64> {
        match self {
            SignalSpec::Vacuum { g } | SignalSpec::Cat { g, .. } => Some(*g),
            SignalSpec::Custom { .. } => None,
        }
    }

    pub fn with_coupling(&self, g: f64) -> Result<Self> {
        match self {
            SignalSpec::Vacuum { .. } => Ok(SignalSpec::Vacuum { g }),
            SignalSpec::Cat { alpha_cat, .. } => {
                Ok(SignalSpec::Cat { alpha_cat: *alpha_cat, g })
            }
            SignalSpec::Custom { .. } => Err(EosError::Domain(
                "custom signals have no coupling parameter".into(),
            )),
        }
    }
}

/// Rescale the coupling of a signal constructor so its m_2 hits the target:
/// m_2 scales as g^2, so g <- g sqrt(target / current).
pub fn calibrate_coupling(spec: &SignalSpec, target_m2: f64) -> Result<f64> {
    if !(target_m2 > 0.0) {
        return Err(EosError::Domain(format!(
            "calibrate_coupling: target m_2 = {target_m2} must be > 0"
        )));
    }
    let g = spec.coupling().ok_or_else(|| {
        EosError::Domain("calibrate_coupling: signal has no coupling parameter".into())
    })?;
    let current = spec.moments(2)?.get(2);
    Ok(g * (target_m2 / current).sqrt())
}
