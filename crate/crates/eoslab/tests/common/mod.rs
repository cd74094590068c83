//! Shared test helpers: double-double arithmetic for the polynomial-fit
//! oracle, and Monte Carlo / enumeration validators for the photocount
//! difference distribution.

#![allow(dead_code)]

use eoslab::eos_core::{nlbs_prob, DeltaNDistribution};
use eoslab::probes::PhotonDistribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use std::collections::HashMap;

/// Double-double value: an unevaluated sum hi + lo with |lo| <= ulp(hi)/2.
/// Only the handful of operations the fit oracle needs.
#[derive(Clone, Copy, Debug)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(s, e + self.lo + o.lo);
        Dd { hi, lo }
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(p, e + self.hi * o.lo + self.lo * o.hi);
        Dd { hi, lo }
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r1 = self.sub(o.mul(Dd::new(q1)));
        let q2 = r1.hi / o.hi;
        let r2 = r1.sub(o.mul(Dd::new(q2)));
        let q3 = r2.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::new(q3))
    }

    /// One dd-precision Newton step on the f64 square root.
    pub fn sqrt(self) -> Dd {
        let y = self.hi.sqrt();
        if y == 0.0 {
            return Dd::new(0.0);
        }
        let yd = Dd::new(y);
        let diff = self.sub(yd.mul(yd));
        yd.add(diff.div(Dd::new(2.0 * y)))
    }

    pub fn powi(self, mut n: u64) -> Dd {
        let mut acc = Dd::new(1.0);
        let mut base = self;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            n >>= 1;
        }
        acc
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs_f64(self) -> f64 {
        self.to_f64().abs()
    }
}

/// Splitting probability over its balanced value, (1+s)^j (1-s)^(n-j) with
/// s = 2 eps sqrt(1 - eps^2), evaluated in double-double precision.
pub fn split_ratio_dd(n: u64, delta_n: i64, eps: f64) -> Dd {
    let e = Dd::new(eps);
    let one = Dd::new(1.0);
    let s = Dd::new(2.0).mul(e).mul(one.sub(e.mul(e)).sqrt());
    let j = ((n as i64 + delta_n) / 2) as u64;
    one.add(s).powi(j).mul(one.sub(s).powi(n - j))
}

/// Solve sum_k c_k t_i^k = y_i for the interpolating coefficients by Gaussian
/// elimination with partial pivoting, entirely in double-double arithmetic.
pub fn solve_vandermonde_dd(ts: &[f64], ys: &[Dd]) -> Vec<Dd> {
    let n = ts.len();
    assert_eq!(n, ys.len());
    let mut a: Vec<Vec<Dd>> = (0..n)
        .map(|i| {
            let t = Dd::new(ts[i]);
            let mut row = Vec::with_capacity(n + 1);
            let mut p = Dd::new(1.0);
            for _ in 0..n {
                row.push(p);
                p = p.mul(t);
            }
            row.push(ys[i]);
            row
        })
        .collect();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].abs_f64() > a[piv][col].abs_f64() {
                piv = r;
            }
        }
        a.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col].div(a[col][col]);
            for c in col..=n {
                a[r][c] = a[r][c].sub(f.mul(a[col][c]));
            }
        }
    }
    let mut x = vec![Dd::new(0.0); n];
    for i in (0..n).rev() {
        let mut acc = a[i][n];
        for j in i + 1..n {
            acc = acc.sub(a[i][j].mul(x[j]));
        }
        x[i] = acc.div(a[i][i]);
    }
    x
}

/// Photocount-difference distribution for a deterministic field value eps:
/// the probe mixture of splitting probabilities, enumerated exactly.
pub fn enumerate_fixed_eps(probe: &PhotonDistribution, eps: f64) -> HashMap<i64, f64> {
    let mut out = HashMap::new();
    for (n, p) in probe.iter() {
        if p <= 0.0 {
            continue;
        }
        let n_i = n as i64;
        let mut dn = -n_i;
        while dn <= n_i {
            let q = nlbs_prob(dn, n, eps).unwrap();
            if q > 0.0 {
                *out.entry(dn).or_insert(0.0) += p * q;
            }
            dn += 2;
        }
    }
    out
}

/// Field-value sampler for a signal: returns eps given a uniform source.
pub enum FieldSampler {
    /// eps = g x, x standard normal (vacuum signal).
    Gaussian { g: f64 },
    /// eps = g x, x drawn from the even-cat quadrature density: an exact
    /// three-component normal mixture N(+-x0, 1) plus the interference
    /// component 2 exp(-x0^2/2) N(0, 1), x0 = 2 alpha.
    Cat { alpha: f64, g: f64 },
    /// Deterministic field.
    Fixed { eps: f64 },
}

impl FieldSampler {
    fn sample(&self, rng: &mut ChaCha8Rng, normal: &Normal<f64>) -> f64 {
        match self {
            FieldSampler::Gaussian { g } => g * normal.sample(rng),
            FieldSampler::Cat { alpha, g } => {
                let x0 = 2.0 * alpha;
                let w_mid = 2.0 * (-x0 * x0 / 2.0).exp();
                let z = 2.0 + w_mid;
                let u: f64 = rng.gen::<f64>() * z;
                let center = if u < 1.0 {
                    x0
                } else if u < 2.0 {
                    -x0
                } else {
                    0.0
                };
                g * (center + normal.sample(rng))
            }
            FieldSampler::Fixed { eps } => *eps,
        }
    }
}

/// Monte Carlo sample of the photocount-difference distribution: draw n from
/// the probe, eps from the field density, then the branch count from the
/// corresponding binomial. Returns empirical frequencies.
pub fn mc_delta_n(
    probe: &PhotonDistribution,
    field: &FieldSampler,
    samples: usize,
    seed: u64,
) -> HashMap<i64, f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    // cumulative table for probe sampling
    let mut cdf = Vec::with_capacity(probe.weights().len());
    let mut acc = 0.0;
    for &w in probe.weights() {
        acc += w;
        cdf.push(acc);
    }
    let mut counts: HashMap<i64, u64> = HashMap::new();
    for _ in 0..samples {
        let u: f64 = rng.gen::<f64>() * acc;
        let idx = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
        let n = probe.support_min() + idx as u64;
        let eps = field.sample(&mut rng, &normal);
        let s = 2.0 * eps * (1.0 - eps * eps).sqrt();
        let p_a = ((1.0 + s) / 2.0).clamp(0.0, 1.0);
        let j = if n == 0 {
            0
        } else {
            Binomial::new(n, p_a).unwrap().sample(&mut rng)
        };
        let dn = 2 * j as i64 - n as i64;
        *counts.entry(dn).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|(k, v)| (k, v as f64 / samples as f64))
        .collect()
}

/// Total variation distance between a computed distribution and a reference
/// given as a sparse map over delta_n.
pub fn tv_distance(dist: &DeltaNDistribution, reference: &HashMap<i64, f64>) -> f64 {
    let mut keys: Vec<i64> = dist.iter().map(|(dn, _)| dn).collect();
    for &k in reference.keys() {
        if k < dist.grid_min() || k > dist.grid_max() {
            keys.push(k);
        }
    }
    let mut tv = 0.0;
    for dn in keys {
        let a = dist.prob(dn);
        let b = reference.get(&dn).copied().unwrap_or(0.0);
        tv += (a - b).abs();
    }
    tv / 2.0
}
