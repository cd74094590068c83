//! Phase-space representation of number-diagonal probe states:
//! W(|b|) = (2/pi) e^(-2|b|^2) sum_m (-1)^m L_m(4|b|^2) P(m).

use crate::error::Result;
use crate::probes::PhotonDistribution;

const TWO_OVER_PI: f64 = 2.0 / std::f64::consts::PI;
const RESCALE: f64 = 1e100;
const LN_RESCALE: f64 = 230.25850929940457; // ln(1e100)

/// Radial Wigner cut on a fixed grid.
#[derive(Clone, Debug)]
pub struct WignerGrid {
    pub radial_points: Vec<f64>,
    pub values: Vec<f64>,
    pub source: String,
}

/// Radial extent past which the envelope bound leaves negligible mass:
/// the Laguerre terms oscillate out to |b| ~ sqrt(m) and decay beyond.
pub fn r_max(dist: &PhotonDistribution) -> f64 {
    (dist.support_max() as f64).sqrt() + 5.0
}

/// Evaluate W at |b| = beta_abs. The Laguerre recurrence is run jointly with
/// a running rescale so magnitudes near e^(x/2) never overflow; each term is
/// reassembled in log space against the Gaussian envelope.
pub fn wigner_eval(dist: &PhotonDistribution, beta_abs: f64) -> f64 {
    let x = 4.0 * beta_abs * beta_abs;
    let envelope = -0.5 * x; // ln of e^(-2 |b|^2)
    let m_max = dist.support_max();
    let mut sum = 0.0;
    let mut scale_ln = 0.0;
    let mut prev = 1.0; // L_0
    let mut cur = 1.0 - x; // L_1
    let mut add_term = |m: u64, l_val: f64, scale_ln: f64| {
        let p = dist.prob(m);
        if p == 0.0 || l_val == 0.0 {
            return;
        }
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 } * l_val.signum();
        let ln_mag = l_val.abs().ln() + scale_ln + envelope;
        sum += p * sign * ln_mag.exp();
    };
    add_term(0, prev, scale_ln);
    if m_max >= 1 {
        add_term(1, cur, scale_ln);
    }
    for m in 1..m_max {
        let mf = m as f64;
        let next = ((2.0 * mf + 1.0 - x) * cur - mf * prev) / (mf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE || prev.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            scale_ln += LN_RESCALE;
        }
        add_term(m + 1, cur, scale_ln);
    }
    TWO_OVER_PI * sum
}

/// Radial cut with geometric spacing from r_max/1000 up to r_max (plus r=0).
pub fn wigner_grid(dist: &PhotonDistribution, n_points: usize, source: &str) -> WignerGrid {
    let rm = r_max(dist);
    let mut radial_points = vec![0.0];
    let r0 = rm * 1e-3;
    let n = n_points.max(2);
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        radial_points.push(r0 * (rm / r0).powf(t));
    }
    let values = radial_points.iter().map(|&r| wigner_eval(dist, r)).collect();
    WignerGrid { radial_points, values, source: source.to_string() }
}

/// Composite Gauss-Kronrod integration of g(r) over [0, r_max] with panels
/// sized to resolve the Laguerre oscillation.
fn radial_integral<F: Fn(f64) -> f64>(dist: &PhotonDistribution, g: F) -> f64 {
    let rm = r_max(dist);
    let osc = std::f64::consts::PI / (4.0 * (dist.support_max() as f64).sqrt().max(1.0));
    let h = osc.min(0.25);
    let n_panels = (rm / h).ceil() as usize;
    let mut total = 0.0;
    for i in 0..n_panels {
        let a = rm * i as f64 / n_panels as f64;
        let b = rm * (i + 1) as f64 / n_panels as f64;
        // 15-point Kronrod rule on [a, b]
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in GK15.iter() {
            total += w * half * g(mid + half * x);
        }
    }
    total
}

const GK15: [(f64, f64); 15] = [
    (-0.991455371120813, 0.022935322010529),
    (-0.949107912342759, 0.063092092629979),
    (-0.864864423359769, 0.104790010322250),
    (-0.741531185599394, 0.140653259715525),
    (-0.586087235467691, 0.169004726639267),
    (-0.405845151377397, 0.190350578064785),
    (-0.207784955007898, 0.204432940075298),
    (0.0, 0.209482141084728),
    (0.207784955007898, 0.204432940075298),
    (0.405845151377397, 0.190350578064785),
    (0.586087235467691, 0.169004726639267),
    (0.741531185599394, 0.140653259715525),
    (0.864864423359769, 0.104790010322250),
    (0.949107912342759, 0.063092092629979),
    (0.991455371120813, 0.022935322010529),
];

/// 2 pi int W(r) r dr over the computed radial extent; 1 for a normalized
/// state up to the truncation tail.
pub fn normalization(dist: &PhotonDistribution) -> f64 {
    2.0 * std::f64::consts::PI * radial_integral(dist, |r| wigner_eval(dist, r) * r)
}

/// 2 pi int max(0, -W(r)) r dr: the volume of the negative Wigner region,
/// zero for classical-looking states.
pub fn negativity_volume(dist: &PhotonDistribution) -> Result<f64> {
    Ok(2.0 * std::f64::consts::PI
        * radial_integral(dist, |r| (-wigner_eval(dist, r)).max(0.0) * r))
}
