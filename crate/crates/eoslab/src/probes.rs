//! Photon-number distributions for all probe families: coherent, thermal,
//! Fock, and band-conditioned states (BCS) with an optional non-ideal
//! heralding detector.

use crate::error::{EosError, Result};
use crate::numerics::LnFactTable;
use serde::{Deserialize, Serialize};

/// Relative tail mass discarded when truncating supports.
pub const TAIL_TOL: f64 = 1e-13;

/// A normalized photon-number distribution on a contiguous integer support.
/// Weights outside the stored range are exactly zero (tail mass below
/// `TAIL_TOL` is dropped before normalization).
#[derive(Clone, Debug)]
pub struct PhotonDistribution {
    support_min: u64,
    weights: Vec<f64>,
    mean: f64,
}

impl PhotonDistribution {
    fn from_weights(support_min: u64, mut weights: Vec<f64>) -> Result<Self> {
        while weights.len() > 1 && *weights.last().unwrap() == 0.0 {
            weights.pop();
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(EosError::Conditioning(
                "distribution has no probability mass".into(),
            ));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(EosError::Numerical("negative probability weight".into()));
        }
        let mut mean = 0.0;
        for (i, w) in weights.iter_mut().enumerate() {
            *w /= total;
            mean += (support_min + i as u64) as f64 * *w;
        }
        Ok(Self { support_min, weights, mean })
    }

    pub fn support_min(&self) -> u64 {
        self.support_min
    }

    pub fn support_max(&self) -> u64 {
        self.support_min + self.weights.len() as u64 - 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn prob(&self, n: u64) -> f64 {
        if n < self.support_min {
            return 0.0;
        }
        self.weights.get((n - self.support_min) as usize).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        let mut acc = 0.0;
        for (i, &w) in self.weights.iter().enumerate() {
            let d = (self.support_min + i as u64) as f64 - self.mean;
            acc += w * d * d;
        }
        acc
    }

    /// Iterator over (n, P(n)) pairs.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(move |(i, &w)| (self.support_min + i as u64, w))
    }
}

/// Union of integer heralding bands [A, B], B = None meaning unbounded.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BandScheme {
    bands: Vec<(u64, Option<u64>)>,
}

impl BandScheme {
    pub fn new(bands: Vec<(u64, Option<u64>)>) -> Result<Self> {
        if bands.is_empty() {
            return Err(EosError::Domain("band scheme needs at least one band".into()));
        }
        for (i, &(a, b)) in bands.iter().enumerate() {
            if let Some(b) = b {
                if b < a {
                    return Err(EosError::Domain(format!("band [{a}, {b}] is empty")));
                }
            } else if i + 1 != bands.len() {
                return Err(EosError::Domain(
                    "only the last band may be unbounded".into(),
                ));
            }
            if i > 0 {
                let prev_end = bands[i - 1]
                    .1
                    .ok_or_else(|| EosError::Domain("only the last band may be unbounded".into()))?;
                if a <= prev_end {
                    return Err(EosError::Domain(
                        "bands must be sorted and disjoint".into(),
                    ));
                }
            }
        }
        Ok(Self { bands })
    }

    pub fn upper(a: u64) -> Self {
        Self { bands: vec![(a, None)] }
    }

    pub fn bands(&self) -> &[(u64, Option<u64>)] {
        &self.bands
    }

    pub fn contains(&self, m: u64) -> bool {
        self.bands
            .iter()
            .any(|&(a, b)| m >= a && b.map_or(true, |b| m <= b))
    }

    /// Same bands with every edge scaled by `factor` (rounded to nearest),
    /// used to express a photon-number band in detector-count units.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let bands = self
            .bands
            .iter()
            .map(|&(a, b)| {
                (
                    (a as f64 * factor).round() as u64,
                    b.map(|b| (b as f64 * factor).round() as u64),
                )
            })
            .collect();
        Self::new(bands)
    }
}

/// Heralding-branch detector model: quantum efficiency and electron gain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeraldingDetector {
    pub eta: f64,
    pub gain: f64,
}

impl HeraldingDetector {
    pub fn new(eta: f64, gain: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(EosError::Domain(format!("eta={eta} outside (0, 1]")));
        }
        if !(gain > 0.0) {
            return Err(EosError::Domain(format!("gain={gain} must be positive")));
        }
        Ok(Self { eta, gain })
    }

    /// True when the detector resolves photon number exactly.
    pub fn is_ideal(&self) -> bool {
        self.eta == 1.0 && self.gain == 1.0
    }
}

/// Poisson distribution, truncated so the discarded tail mass is below
/// `TAIL_TOL`.
pub fn coherent_dist(nu: f64) -> Result<PhotonDistribution> {
    if !(nu > 0.0) {
        return Err(EosError::Domain(format!("coherent_dist: nu={nu} must be > 0")));
    }
    let sd = nu.sqrt();
    let lo = ((nu - 15.0 * sd - 20.0).floor().max(0.0)) as u64;
    let hi = (nu + 15.0 * sd + 20.0).ceil() as u64;
    let lf = LnFactTable::new(hi);
    let ln_nu = nu.ln();
    let weights = (lo..=hi)
        .map(|n| (-nu + n as f64 * ln_nu - lf.get(n)).exp())
        .collect();
    PhotonDistribution::from_weights(lo, weights)
}

/// Geometric (thermal) distribution P(n) = (1 - xi) xi^n.
pub fn thermal_dist(xi: f64) -> Result<PhotonDistribution> {
    if !(0.0..1.0).contains(&xi) {
        return Err(EosError::Domain(format!("thermal_dist: xi={xi} outside [0, 1)")));
    }
    if xi == 0.0 {
        return PhotonDistribution::from_weights(0, vec![1.0]);
    }
    let n_max = (TAIL_TOL.ln() / xi.ln()).ceil() as u64;
    let weights = (0..=n_max).map(|n| (1.0 - xi) * xi.powi(n as i32)).collect();
    PhotonDistribution::from_weights(0, weights)
}

/// Fock state: P(n) = delta_{n, nu}.
pub fn fock_dist(nu: u64) -> PhotonDistribution {
    PhotonDistribution { support_min: nu, weights: vec![1.0], mean: nu as f64 }
}

/// Effective heralding thermal parameter for electron counts:
/// zeta = g xi / (1 + xi (g - 1)) with g = gain * eta.
pub fn heralding_zeta(xi: f64, detector: &HeraldingDetector) -> f64 {
    let g = detector.gain * detector.eta;
    g * xi / (1.0 + xi * (g - 1.0))
}

/// Band-conditioned state from a two-mode squeezed vacuum with parameter xi.
///
/// With an ideal detector (or `detector` = None) the probe keeps the thermal
/// weights restricted to the bands. With a non-ideal detector the bands select
/// electron counts m distributed as P_zeta(m); the probe given m is a
/// discretized Gaussian with mean m / (gain eta) and variance
/// m [1 + gain (1 - eta)] / (gain eta)^2.
pub fn bcs_dist(
    xi: f64,
    scheme: &BandScheme,
    detector: Option<&HeraldingDetector>,
) -> Result<PhotonDistribution> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(EosError::Domain(format!("bcs_dist: xi={xi} outside (0, 1)")));
    }
    match detector {
        None => bcs_ideal(xi, scheme),
        Some(d) if d.is_ideal() => bcs_ideal(xi, scheme),
        Some(d) => bcs_nonideal(xi, scheme, d),
    }
}

fn band_upper_limit(a: u64, b: Option<u64>, ratio: f64) -> u64 {
    match b {
        Some(b) => b,
        // geometric tail: mass beyond a + m is ratio^m relative to the edge
        None => a + (TAIL_TOL.ln() / ratio.ln()).ceil() as u64,
    }
}

fn bcs_ideal(xi: f64, scheme: &BandScheme) -> Result<PhotonDistribution> {
    let support_min = scheme.bands()[0].0;
    let last = *scheme.bands().last().unwrap();
    let support_max = band_upper_limit(last.0, last.1, xi);
    let mut weights = vec![0.0; (support_max - support_min + 1) as usize];
    for &(a, b) in scheme.bands() {
        let hi = band_upper_limit(a, b, xi);
        for n in a..=hi {
            // geometric weight relative to the support start; the same float
            // expression as thermal_dist so the full-band case matches it
            // bit for bit
            weights[(n - support_min) as usize] =
                (1.0 - xi) * xi.powi((n - support_min) as i32);
        }
    }
    PhotonDistribution::from_weights(support_min, weights).map_err(|_| {
        EosError::Conditioning("band scheme selects no probability mass".into())
    })
}

fn bcs_nonideal(
    xi: f64,
    scheme: &BandScheme,
    detector: &HeraldingDetector,
) -> Result<PhotonDistribution> {
    let zeta = heralding_zeta(xi, detector);
    let ge = detector.gain * detector.eta;
    let var_fac = (1.0 + detector.gain * (1.0 - detector.eta)) / (ge * ge);

    // collect conditioned electron counts with geometric weights
    let mut m_lo = u64::MAX;
    let mut m_hi = 0u64;
    for &(a, b) in scheme.bands() {
        m_lo = m_lo.min(a);
        m_hi = m_hi.max(band_upper_limit(a, b, zeta));
    }

    // probe support window from the extreme conditional Gaussians
    let sigma_of = |m: u64| (m as f64 * var_fac).sqrt();
    let mean_of = |m: u64| m as f64 / ge;
    let n_lo = (mean_of(m_lo) - 12.0 * sigma_of(m_lo) - 3.0).floor().max(0.0) as u64;
    let n_hi = (mean_of(m_hi) + 12.0 * sigma_of(m_hi) + 3.0).ceil() as u64;
    let mut weights = vec![0.0; (n_hi - n_lo + 1) as usize];

    let ln_zeta = zeta.ln();
    let mut any_mass = false;
    let mut scratch: Vec<f64> = Vec::new();
    for &(a, b) in scheme.bands() {
        let hi = band_upper_limit(a, b, zeta);
        for m in a..=hi {
            // relative weight zeta^(m - m_lo)
            let wm = ((m - m_lo) as f64 * ln_zeta).exp();
            if wm == 0.0 {
                continue;
            }
            any_mass = true;
            if m == 0 {
                // zero electrons: conditional distribution collapses to n = 0
                weights[0] += wm;
                continue;
            }
            let mu = mean_of(m);
            let sig = sigma_of(m);
            if sig < 0.05 {
                // narrower than the integer grid: a single point carries it
                let n = (mu.round().max(n_lo as f64) as u64).min(n_hi);
                weights[(n - n_lo) as usize] += wm;
                continue;
            }
            let win_lo = (mu - 8.0 * sig).floor();
            let win_hi = (mu + 8.0 * sig).ceil();
            let lo = (win_lo.max(n_lo as f64)) as u64;
            let hi_n = (win_hi.min(n_hi as f64)) as u64;
            // Gaussian values by the multiplicative recurrence
            // g(n+1) = g(n) r(n), r(n+1) = r(n) q: two multiplies per point
            let inv_s2 = 1.0 / (sig * sig);
            let d0 = lo as f64 - mu;
            let mut g = (-0.5 * d0 * d0 * inv_s2).exp();
            let mut r = (-(d0 + 0.5) * inv_s2).exp();
            let q = (-inv_s2).exp();
            if sig >= 3.0 && win_lo >= n_lo as f64 && win_hi <= n_hi as f64 {
                // unclipped window: the lattice sum of the Gaussian equals
                // sqrt(2 pi) sigma up to a Poisson-summation remainder that
                // is negligible for sigma >= 3
                let scale = wm / ((2.0 * std::f64::consts::PI).sqrt() * sig);
                let start = (lo - n_lo) as usize;
                let seg = &mut weights[start..start + (hi_n - lo) as usize + 1];
                for w in seg.iter_mut() {
                    *w += scale * g;
                    g *= r;
                    r *= q;
                }
            } else {
                scratch.clear();
                let mut norm = 0.0;
                for _ in lo..=hi_n {
                    scratch.push(g);
                    norm += g;
                    g *= r;
                    r *= q;
                }
                let scale = wm / norm;
                for (i, &gv) in scratch.iter().enumerate() {
                    weights[(lo - n_lo) as usize + i] += scale * gv;
                }
            }
        }
    }
    if !any_mass {
        return Err(EosError::Conditioning(
            "band scheme selects no probability mass".into(),
        ));
    }
    PhotonDistribution::from_weights(n_lo, weights)
}

/// Delta approximation of the non-ideal conditioned probe:
/// P(n) proportional to P_zeta(gain eta n) for n whose scaled count falls in
/// the bands. Valid for eta >= 0.5 and large counts.
pub fn bcs_dist_delta(
    xi: f64,
    scheme: &BandScheme,
    detector: &HeraldingDetector,
) -> Result<PhotonDistribution> {
    let zeta = heralding_zeta(xi, detector);
    let ge = detector.gain * detector.eta;
    let ln_zeta = zeta.ln();
    let ratio = (ge * ln_zeta).exp(); // per-photon decay zeta^(gain eta)

    let mut n_lo = u64::MAX;
    let mut n_hi = 0u64;
    let photon_bands: Vec<(u64, u64)> = scheme
        .bands()
        .iter()
        .map(|&(a, b)| {
            let a_n = (a as f64 / ge).ceil() as u64;
            let b_n = match b {
                Some(b) => (b as f64 / ge).floor() as u64,
                None => a_n + (TAIL_TOL.ln() / ratio.ln()).ceil() as u64,
            };
            (a_n, b_n)
        })
        .collect();
    for &(a, b) in &photon_bands {
        if b >= a {
            n_lo = n_lo.min(a);
            n_hi = n_hi.max(b);
        }
    }
    if n_lo > n_hi {
        return Err(EosError::Conditioning(
            "delta approximation: bands select no integer photon counts".into(),
        ));
    }
    let mut weights = vec![0.0; (n_hi - n_lo + 1) as usize];
    for &(a, b) in &photon_bands {
        for n in a..=b {
            weights[(n - n_lo) as usize] = ((n - n_lo) as f64 * ge * ln_zeta).exp();
        }
    }
    PhotonDistribution::from_weights(n_lo, weights)
}
