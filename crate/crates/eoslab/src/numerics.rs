//! Special functions, truncated power-series arithmetic, and summation /
//! quadrature primitives used by the rest of the crate.

use crate::error::{EosError, Result};
use statrs::function::gamma::ln_gamma;

/// Default truncation order for series arithmetic.
pub const K_MAX_DEFAULT: usize = 8;

/// A power series truncated at a fixed order: c[0] + c[1] x + ... + c[K] x^K.
///
/// All arithmetic is closed under the truncation: multiplying two series and
/// truncating gives the same coefficients as truncating first.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSeries {
    coeffs: Vec<f64>,
}

impl PowerSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "series needs at least the constant term");
        Self { coeffs }
    }

    pub fn zero(k_max: usize) -> Self {
        Self { coeffs: vec![0.0; k_max + 1] }
    }

    pub fn constant(c: f64, k_max: usize) -> Self {
        let mut s = Self::zero(k_max);
        s.coeffs[0] = c;
        s
    }

    /// The series "x".
    pub fn identity(k_max: usize) -> Self {
        let mut s = Self::zero(k_max);
        if k_max >= 1 {
            s.coeffs[1] = 1.0;
        }
        s
    }

    pub fn k_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.k_max(), other.k_max());
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Self { coeffs }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * factor).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.k_max(), other.k_max());
        let k = self.k_max();
        let mut out = vec![0.0; k + 1];
        for i in 0..=k {
            if self.coeffs[i] == 0.0 {
                continue;
            }
            for j in 0..=(k - i) {
                out[i + j] += self.coeffs[i] * other.coeffs[j];
            }
        }
        Self { coeffs: out }
    }

    /// Substitute `inner` for the variable. `inner` must have zero constant
    /// term so truncation stays exact.
    pub fn compose(&self, inner: &Self) -> Self {
        assert_eq!(self.k_max(), inner.k_max());
        assert_eq!(inner.coeff(0), 0.0, "composition needs inner(0) = 0");
        let k = self.k_max();
        // Horner in the inner series.
        let mut acc = Self::constant(self.coeffs[k], k);
        for i in (0..k).rev() {
            acc = acc.mul(inner);
            acc.coeffs[0] += self.coeffs[i];
        }
        acc
    }

    /// exp of the series. Uses the derivative recurrence
    /// E_k = (1/k) sum_{i=1..k} i a_i E_{k-i}, seeded with exp(a_0).
    pub fn exp(&self) -> Self {
        let k_max = self.k_max();
        let mut e = vec![0.0; k_max + 1];
        e[0] = self.coeffs[0].exp();
        for k in 1..=k_max {
            let mut acc = 0.0;
            for i in 1..=k {
                acc += (i as f64) * self.coeffs[i] * e[k - i];
            }
            e[k] = acc / k as f64;
        }
        Self { coeffs: e }
    }

    /// Natural log of the series; requires a positive constant term.
    pub fn ln(&self) -> Result<Self> {
        if self.coeffs[0] <= 0.0 {
            return Err(EosError::Domain(
                "series log needs a positive constant term".into(),
            ));
        }
        let k_max = self.k_max();
        let a0 = self.coeffs[0];
        let mut l = vec![0.0; k_max + 1];
        l[0] = a0.ln();
        // k a_k = sum_{i=1..k} i l_i a_{k-i}
        for k in 1..=k_max {
            let mut acc = (k as f64) * self.coeffs[k];
            for i in 1..k {
                acc -= (i as f64) * l[i] * self.coeffs[k - i];
            }
            l[k] = acc / (k as f64 * a0);
        }
        Ok(Self { coeffs: l })
    }

    /// Square root of the series; requires a positive constant term.
    pub fn sqrt(&self) -> Result<Self> {
        if self.coeffs[0] <= 0.0 {
            return Err(EosError::Domain(
                "series sqrt needs a positive constant term".into(),
            ));
        }
        let k_max = self.k_max();
        let mut s = vec![0.0; k_max + 1];
        s[0] = self.coeffs[0].sqrt();
        for k in 1..=k_max {
            let mut acc = self.coeffs[k];
            for i in 1..k {
                acc -= s[i] * s[k - i];
            }
            s[k] = acc / (2.0 * s[0]);
        }
        Ok(Self { coeffs: s })
    }

    /// Horner evaluation at x.
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }
}

/// ln C(n, k) via log-gamma.
pub fn log_binomial(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(EosError::Domain(format!("log_binomial: k={k} > n={n}")));
    }
    Ok(ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0))
}

/// ln(n!).
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Precomputed ln(n!) table for hot loops over integer arguments.
pub struct LnFactTable {
    table: Vec<f64>,
}

impl LnFactTable {
    pub fn new(n_max: u64) -> Self {
        let mut table = Vec::with_capacity(n_max as usize + 1);
        table.push(0.0);
        let mut acc = 0.0;
        for n in 1..=n_max {
            acc += (n as f64).ln();
            table.push(acc);
        }
        Self { table }
    }

    #[inline]
    pub fn get(&self, n: u64) -> f64 {
        self.table[n as usize]
    }
}

/// Gaussian approximation of the centered binomial weight
/// C(n, (n+dn)/2) 2^{-n} ~ sqrt(2/(n pi)) exp(-dn^2 / 2n), valid for |dn| << n.
pub fn gaussian_binomial_approx(n: u64, delta_n: f64) -> Result<f64> {
    if n == 0 {
        return Err(EosError::Domain("gaussian_binomial_approx: n = 0".into()));
    }
    let nf = n as f64;
    Ok((2.0 / (nf * std::f64::consts::PI)).sqrt() * (-delta_n * delta_n / (2.0 * nf)).exp())
}

/// Laguerre polynomial L_m(x) by the three-term recurrence.
pub fn laguerre(m: u64, x: f64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 - x;
    for j in 1..m {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 - x) * cur - jf * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1].
const GK_NODES: [f64; 15] = [
    -0.991455371120813,
    -0.949107912342759,
    -0.864864423359769,
    -0.741531185599394,
    -0.586087235467691,
    -0.405845151377397,
    -0.207784955007898,
    0.0,
    0.207784955007898,
    0.405845151377397,
    0.586087235467691,
    0.741531185599394,
    0.864864423359769,
    0.949107912342759,
    0.991455371120813,
];
const GK_WEIGHTS: [f64; 15] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
    0.204432940075298,
    0.190350578064785,
    0.169004726639267,
    0.140653259715525,
    0.104790010322250,
    0.063092092629979,
    0.022935322010529,
];
const G7_WEIGHTS: [f64; 7] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
    0.381830050505119,
    0.279705391489277,
    0.129484966168870,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut k15 = 0.0;
    let mut g7 = 0.0;
    for (i, (&x, &w)) in GK_NODES.iter().zip(GK_WEIGHTS.iter()).enumerate() {
        let fx = f(mid + half * x);
        k15 += w * fx;
        if i % 2 == 1 {
            g7 += G7_WEIGHTS[i / 2] * fx;
        }
    }
    (k15 * half, (k15 - g7).abs() * half)
}

/// Adaptive Gauss-Kronrod integration of f on [a, b] to the given relative
/// tolerance (with a small absolute floor).
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(EosError::Domain("integrate: non-finite bounds".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let (rough, _) = gk15(f, a, b);
    let scale = rough.abs().max(1e-300);
    let mut total = 0.0;
    // (a, b, depth) work stack
    let mut stack = vec![(a, b, 0u32)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(f, lo, hi);
        if err <= rel_tol * scale.max(val.abs()) || err <= 1e-300 || depth >= 48 {
            if depth >= 48 && err > 1e3 * rel_tol * scale {
                return Err(EosError::Numerical(
                    "integrate: adaptive refinement did not converge".into(),
                ));
            }
            total += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    Ok(total)
}

/// First-order Euler-Maclaurin estimate of the discrete sum f(a) + ... + f(b):
/// (f(a) + f(b)) / 2 + integral of f over [a, b].
pub fn euler_maclaurin_sum<F: Fn(f64) -> f64>(f: &F, a: i64, b: i64) -> Result<f64> {
    if a > b {
        return Err(EosError::Domain(format!("euler_maclaurin_sum: a={a} > b={b}")));
    }
    let boundary = 0.5 * (f(a as f64) + f(b as f64));
    let integral = integrate(f, a as f64, b as f64, 1e-10)?;
    Ok(boundary + integral)
}

/// Taylor series in eps of P(dn; n, eps) / alpha_0(n, dn), where P is the
/// photocount-splitting probability of the nonlinear beamsplitter and
/// alpha_0 = C(n, (n+dn)/2) 2^{-n} is its balanced value.
///
/// Built by composing s(eps) = 2 eps sqrt(1 - eps^2) with the logs of
/// (1 + s) and (1 - s) and exponentiating, so coefficient k is
/// alpha_k(n, dn) / alpha_0(n, dn).
pub fn series_of_splitting(n: u64, delta_n: i64, k: usize) -> Result<PowerSeries> {
    if delta_n.unsigned_abs() > n {
        return Err(EosError::Domain(format!(
            "series_of_splitting: |delta_n|={} > n={n}",
            delta_n.unsigned_abs()
        )));
    }
    if (delta_n.rem_euclid(2)) as u64 != n % 2 {
        return Err(EosError::Domain(format!(
            "series_of_splitting: delta_n={delta_n} and n={n} have different parity"
        )));
    }
    let (a, b) = log_split_series(k)?;
    let nf = n as f64;
    let dnf = delta_n as f64;
    let l = a.scale(nf).add(&b.scale(dnf));
    Ok(l.exp())
}

/// The series A(eps), B(eps) with ln[P/alpha_0] = n A + dn B.
/// A = [ln(1+s) + ln(1-s)] / 2, B = [ln(1+s) - ln(1-s)] / 2,
/// s = 2 eps sqrt(1 - eps^2).
pub(crate) fn log_split_series(k: usize) -> Result<(PowerSeries, PowerSeries)> {
    // s(eps) = 2 eps sqrt(1 - eps^2)
    let mut one_minus_e2 = PowerSeries::constant(1.0, k);
    if k >= 2 {
        let mut c = vec![0.0; k + 1];
        c[0] = 1.0;
        c[2] = -1.0;
        one_minus_e2 = PowerSeries::new(c);
    }
    let root = one_minus_e2.sqrt()?;
    // multiply by 2 eps: shift up one power
    let mut s_coeffs = vec![0.0; k + 1];
    for i in 0..k {
        s_coeffs[i + 1] = 2.0 * root.coeff(i);
    }
    let s = PowerSeries::new(s_coeffs);

    // ln(1 + u) and ln(1 - u) as series in u, composed with s.
    let mut lp = vec![0.0; k + 1];
    let mut lm = vec![0.0; k + 1];
    for j in 1..=k {
        let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
        lp[j] = sign / j as f64;
        lm[j] = -1.0 / j as f64;
    }
    let log1p_s = PowerSeries::new(lp).compose(&s);
    let log1m_s = PowerSeries::new(lm).compose(&s);

    let a = log1p_s.add(&log1m_s).scale(0.5);
    let b = log1p_s.add(&log1m_s.scale(-1.0)).scale(0.5);
    Ok((a, b))
}
