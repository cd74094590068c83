//! The nonlinear-beamsplitter measurement model: photocount-difference
//! distributions, moment susceptibilities, and the relative differential
//! noise amplitude D.

use crate::error::{EosError, Result};
use crate::numerics::{log_split_series, LnFactTable};
use crate::probes::PhotonDistribution;
use crate::signals::MomentSequence;

const LN_2: f64 = std::f64::consts::LN_2;

/// Log-margin kept past the probability floor when sizing the photocount
/// difference grid. Larger margins tighten the higher-order susceptibility
/// sums at a sqrt-cost in grid radius.
const GRID_LOG_MARGIN: f64 = 40.0;

/// Probability over the photocount difference on a contiguous integer grid.
/// Points ruled out by per-n parity carry exact zeros.
#[derive(Clone, Debug)]
pub struct DeltaNDistribution {
    grid_min: i64,
    probabilities: Vec<f64>,
    probe_ref: String,
}

impl DeltaNDistribution {
    pub fn grid_min(&self) -> i64 {
        self.grid_min
    }

    pub fn grid_max(&self) -> i64 {
        self.grid_min + self.probabilities.len() as i64 - 1
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn prob(&self, delta_n: i64) -> f64 {
        if delta_n < self.grid_min {
            return 0.0;
        }
        self.probabilities
            .get((delta_n - self.grid_min) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    pub fn probe_ref(&self) -> &str {
        &self.probe_ref
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probabilities
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.grid_min + i as i64, p))
    }
}

/// chi_k(dn) for k = 0..K on a contiguous integer dn grid.
#[derive(Clone, Debug)]
pub struct SusceptibilityTable {
    grid_min: i64,
    chis: Vec<Vec<f64>>,
    stride: i64,
}

impl SusceptibilityTable {
    pub fn k_order(&self) -> usize {
        self.chis.len() - 1
    }

    pub fn grid_min(&self) -> i64 {
        self.grid_min
    }

    pub fn stride(&self) -> i64 {
        self.stride
    }

    pub fn grid(&self) -> Vec<i64> {
        (0..self.chis[0].len())
            .map(|i| self.grid_min + self.stride * i as i64)
            .collect()
    }

    pub fn chi(&self, k: usize) -> &[f64] {
        &self.chis[k]
    }

    /// chi_k scaled to unit peak magnitude (for figure-style output).
    pub fn normalized(&self, k: usize) -> Vec<f64> {
        let peak = self.chis[k].iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if peak == 0.0 {
            return self.chis[k].clone();
        }
        self.chis[k].iter().map(|&v| v / peak).collect()
    }
}

/// Signal-induced deviation of the photocount distribution relative to the
/// peak of the no-signal distribution.
#[derive(Clone, Debug)]
pub struct DCurve {
    grid_min: i64,
    values: Vec<f64>,
}

impl DCurve {
    pub fn from_parts(grid_min: i64, values: Vec<f64>) -> Self {
        Self { grid_min, values }
    }

    pub fn grid_min(&self) -> i64 {
        self.grid_min
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, delta_n: i64) -> Option<f64> {
        if delta_n < self.grid_min {
            return None;
        }
        self.values.get((delta_n - self.grid_min) as usize).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.grid_min + i as i64, v))
    }
}

/// Splitting probability of the nonlinear beamsplitter:
/// P(dn; n, eps) = C(n, (n+dn)/2) a^(n+dn) b^(n-dn) with
/// a = (sqrt(1-eps^2) + eps) / sqrt(2), b = (sqrt(1-eps^2) - eps) / sqrt(2).
/// Zero when dn and n differ in parity. Evaluated in log space through
/// a^2 = (1+s)/2, b^2 = (1-s)/2, s = 2 eps sqrt(1-eps^2).
pub fn nlbs_prob(delta_n: i64, n: u64, eps: f64) -> Result<f64> {
    if eps.abs() > 1.0 {
        return Err(EosError::Domain(format!("nlbs_prob: |eps|={} > 1", eps.abs())));
    }
    if delta_n.unsigned_abs() > n {
        return Ok(0.0);
    }
    if (delta_n.rem_euclid(2)) as u64 != n % 2 {
        return Ok(0.0);
    }
    let s = 2.0 * eps * (1.0 - eps * eps).sqrt();
    let j = ((n as i64 + delta_n) / 2) as u64; // photons routed to branch a
    let ln_c = crate::numerics::log_binomial(n, j)?;
    let mut ln_p = ln_c - n as f64 * LN_2;
    if j > 0 {
        let a2 = 1.0 + s;
        if a2 == 0.0 {
            return Ok(0.0);
        }
        ln_p += j as f64 * a2.ln();
    }
    if n - j > 0 {
        let b2 = 1.0 - s;
        if b2 == 0.0 {
            return Ok(0.0);
        }
        ln_p += (n - j) as f64 * b2.ln();
    }
    Ok(ln_p.exp())
}

/// Radius of the photocount-difference grid needed to hold the probability
/// mass of every n in the probe support down to the grid floor.
fn grid_radius(probe: &PhotonDistribution) -> i64 {
    let mut r2_max = 1.0f64;
    for (n, p) in probe.iter() {
        if p <= 0.0 {
            continue;
        }
        let head = (p.ln() + GRID_LOG_MARGIN).max(0.0);
        r2_max = r2_max.max(2.0 * n as f64 * head);
    }
    let r = r2_max.sqrt().ceil() as i64 + 2;
    r.min(probe.support_max() as i64)
}

/// chi_k(dn) = sum_n alpha_k(n, dn) P(n) for k = 0..K.
///
/// `stride` subsamples the dn grid (symmetric about 0); stride 1 is the full
/// integer grid. Summation order over n is fixed, so results do not depend on
/// how callers parallelize over grid points.
pub fn susceptibilities_strided(
    probe: &PhotonDistribution,
    k_order: usize,
    stride: i64,
) -> Result<SusceptibilityTable> {
    assert!(stride >= 1);
    let (a_series, b_series) = log_split_series(k_order)?;
    let a = a_series.coeffs();
    let b = b_series.coeffs();
    let radius = grid_radius(probe);
    let lf = LnFactTable::new(probe.support_max());

    let n_points = (2 * (radius / stride) + 1) as usize;
    let grid_min = -(radius / stride) * stride;
    let mut chis = vec![vec![0.0; n_points]; k_order + 1];
    let mut e = vec![0.0; k_order + 1];
    for (idx, chi_col) in (0..n_points).map(|i| grid_min + stride * i as i64).enumerate() {
        let dn = chi_col;
        let dn_abs = dn.unsigned_abs();
        let dnf = dn as f64;
        let mut acc = vec![0.0; k_order + 1];
        for (n, p) in probe.iter() {
            if p <= 0.0 || n < dn_abs || (dn.rem_euclid(2)) as u64 != n % 2 {
                continue;
            }
            let j = ((n as i64 + dn) / 2) as u64;
            let nf = n as f64;
            let ln_alpha0 = lf.get(n) - lf.get(j) - lf.get(n - j) - nf * LN_2;
            let base = p * ln_alpha0.exp();
            // exp-series recurrence for alpha_k / alpha_0 with
            // L_i = n a_i + dn b_i
            e[0] = 1.0;
            for k in 1..=k_order {
                let mut s = 0.0;
                for i in 1..=k {
                    s += (i as f64) * (nf * a[i] + dnf * b[i]) * e[k - i];
                }
                e[k] = s / k as f64;
            }
            for k in 0..=k_order {
                acc[k] += base * e[k];
            }
        }
        for k in 0..=k_order {
            chis[k][idx] = acc[k];
        }
    }
    Ok(SusceptibilityTable { grid_min, chis, stride })
}

pub fn susceptibilities(probe: &PhotonDistribution, k_order: usize) -> Result<SusceptibilityTable> {
    susceptibilities_strided(probe, k_order, 1)
}

/// P(dn; psi) = sum_k chi_k(dn) m_k from a precomputed table.
pub fn eos_distribution_from_table(
    table: &SusceptibilityTable,
    signal: &MomentSequence,
    probe_ref: &str,
) -> Result<DeltaNDistribution> {
    if signal.k() < table.k_order() {
        return Err(EosError::Domain(format!(
            "signal provides moments up to {}, need {}",
            signal.k(),
            table.k_order()
        )));
    }
    if table.stride != 1 {
        return Err(EosError::Domain(
            "eos_distribution needs a full-resolution susceptibility table".into(),
        ));
    }
    let n_points = table.chis[0].len();
    let mut probs = vec![0.0; n_points];
    for k in 0..=table.k_order() {
        let m = signal.get(k);
        if m == 0.0 {
            continue;
        }
        for (i, &chi) in table.chis[k].iter().enumerate() {
            probs[i] += m * chi;
        }
    }
    let mut total = 0.0;
    for p in probs.iter_mut() {
        if *p < 0.0 {
            if *p < -1e-12 {
                return Err(EosError::Numerical(format!(
                    "distribution value {p:.3e} below truncation floor; \
                     increase the moment order K or reduce the coupling"
                )));
            }
            *p = 0.0;
        }
        total += *p;
    }
    if (total - 1.0).abs() > 1e-8 {
        return Err(EosError::Numerical(format!(
            "photocount distribution sums to {total:.12}, outside 1 +- 1e-8"
        )));
    }
    Ok(DeltaNDistribution {
        grid_min: table.grid_min,
        probabilities: probs,
        probe_ref: probe_ref.to_string(),
    })
}

/// Full photocount-difference distribution for a probe and signal.
pub fn eos_distribution(
    probe: &PhotonDistribution,
    signal: &MomentSequence,
    k_order: usize,
) -> Result<DeltaNDistribution> {
    let table = susceptibilities(probe, k_order)?;
    eos_distribution_from_table(&table, signal, "probe")
}

/// D(dn) = [P(dn; psi) - P(dn; 0)] / max P(dn; 0).
pub fn d_measure(
    probe: &PhotonDistribution,
    signal: &MomentSequence,
    k_order: usize,
) -> Result<DCurve> {
    let table = susceptibilities(probe, k_order)?;
    d_measure_from_table(&table, signal)
}

pub fn d_measure_from_table(
    table: &SusceptibilityTable,
    signal: &MomentSequence,
) -> Result<DCurve> {
    if table.stride != 1 {
        return Err(EosError::Domain(
            "d_measure needs a full-resolution susceptibility table".into(),
        ));
    }
    if signal.k() < table.k_order() {
        return Err(EosError::Domain(format!(
            "signal provides moments up to {}, need {}",
            signal.k(),
            table.k_order()
        )));
    }
    let p0 = &table.chis[0];
    let peak = p0.iter().fold(0.0f64, |m, &v| m.max(v));
    let n_points = p0.len();
    let mut values = vec![0.0; n_points];
    for k in 1..=table.k_order() {
        let m = signal.get(k);
        if m == 0.0 {
            continue;
        }
        for (i, &chi) in table.chis[k].iter().enumerate() {
            values[i] += m * chi;
        }
    }
    for v in values.iter_mut() {
        *v /= peak;
    }
    Ok(DCurve { grid_min: table.grid_min, values })
}

/// max - min of a D curve.
pub fn d_peak_to_peak(curve: &DCurve) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in &curve.values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

/// L1 distance between the D curves of two signals, evaluated on a (possibly
/// strided) susceptibility table; the stride reweights the grid spacing.
pub fn d_l1_from_table(
    table: &SusceptibilityTable,
    sig_a: &MomentSequence,
    sig_b: &MomentSequence,
) -> f64 {
    let p0 = &table.chis[0];
    let peak = p0.iter().fold(0.0f64, |m, &v| m.max(v));
    let mut l1 = 0.0;
    for i in 0..p0.len() {
        let mut diff = 0.0;
        for k in 1..=table.k_order() {
            diff += (sig_a.get(k) - sig_b.get(k)) * table.chis[k][i];
        }
        l1 += (diff / peak).abs();
    }
    l1 * table.stride as f64
}

/// Peak-to-peak straight off a strided susceptibility table, used by the
/// threshold sweep where only the scalar objective is needed.
pub fn d_peak_to_peak_from_table(table: &SusceptibilityTable, signal: &MomentSequence) -> f64 {
    let p0 = &table.chis[0];
    let peak = p0.iter().fold(0.0f64, |m, &v| m.max(v));
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..p0.len() {
        let mut v = 0.0;
        for k in 1..=table.k_order() {
            v += signal.get(k) * table.chis[k][i];
        }
        v /= peak;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo
}
