//! Search over band-conditioning schemes: exhaustive threshold sweep for the
//! single-band family and a seeded stochastic local search for multi-band
//! protocols.

use crate::eos_core::{
    d_l1_from_table, d_peak_to_peak_from_table, susceptibilities_strided, SusceptibilityTable,
};
use crate::error::{EosError, Result};
use crate::probes::{bcs_dist, BandScheme, HeraldingDetector};
use crate::signals::MomentSequence;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::HashMap;
use std::rc::Rc;

/// Grid stride used when evaluating search objectives; candidate D curves are
/// smooth on the photon-noise scale, so a coarse grid ranks schemes reliably.
const OBJECTIVE_STRIDE: i64 = 4;

#[derive(Clone, Debug)]
pub enum Objective {
    /// Peak-to-peak of D for the vacuum signal.
    PeakToPeakVacuum { signal: MomentSequence },
    /// L1 distance between the D curves of two signals.
    DiscriminationL1 { sig_a: MomentSequence, sig_b: MomentSequence },
    /// Peak |chi_k| energy relative to the other orders (1..K, excluding k).
    MomentIsolation { k: usize },
}

#[derive(Clone, Debug)]
pub struct OptimizationProblem {
    pub xi: f64,
    pub detector: Option<HeraldingDetector>,
    pub objective: Objective,
    pub max_bands: usize,
    pub budget: usize,
    pub seed: u64,
    pub k_order: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceEntry {
    pub step: usize,
    pub scheme: Vec<(u64, Option<u64>)>,
    pub objective: f64,
    pub accepted: bool,
}

struct Evaluator<'a> {
    xi: f64,
    detector: Option<&'a HeraldingDetector>,
    objective: &'a Objective,
    k_order: usize,
    cache: HashMap<BandScheme, Rc<SusceptibilityTable>>,
}

impl<'a> Evaluator<'a> {
    fn table(&mut self, scheme: &BandScheme) -> Result<Rc<SusceptibilityTable>> {
        if let Some(t) = self.cache.get(scheme) {
            return Ok(t.clone());
        }
        let probe = bcs_dist(self.xi, scheme, self.detector)?;
        let table = Rc::new(susceptibilities_strided(&probe, self.k_order, OBJECTIVE_STRIDE)?);
        self.cache.insert(scheme.clone(), table.clone());
        Ok(table)
    }

    fn eval(&mut self, scheme: &BandScheme) -> Result<f64> {
        let table = self.table(scheme)?;
        Ok(match self.objective {
            Objective::PeakToPeakVacuum { signal } => {
                d_peak_to_peak_from_table(&table, signal)
            }
            Objective::DiscriminationL1 { sig_a, sig_b } => {
                d_l1_from_table(&table, sig_a, sig_b)
            }
            Objective::MomentIsolation { k } => {
                let k = *k;
                if k == 0 || k > table.k_order() {
                    return Err(EosError::Domain(format!(
                        "moment_isolation order {k} outside 1..={}",
                        table.k_order()
                    )));
                }
                let energy = |j: usize| -> f64 {
                    table.chi(j).iter().map(|&v| v * v).sum()
                };
                let own = energy(k);
                let rest: f64 = (1..=table.k_order()).filter(|&j| j != k).map(energy).sum();
                own / rest.max(1e-300)
            }
        })
    }
}

/// Exhaustive scan of the single-band family [A, inf) over a grid covering
/// [0, mean + 6 stddev] of the heralding distribution. Ties break toward the
/// lowest A. Returns the argmax and the full (A, objective) curve.
pub fn sweep_threshold(
    xi: f64,
    detector: Option<&HeraldingDetector>,
    objective: &Objective,
    k_order: usize,
) -> Result<(u64, Vec<(u64, f64)>)> {
    let herald_xi = match detector {
        Some(d) => crate::probes::heralding_zeta(xi, d),
        None => xi,
    };
    let mean = herald_xi / (1.0 - herald_xi);
    let sd = (mean * (mean + 1.0)).sqrt();
    let a_max = (mean + 6.0 * sd).ceil() as u64;
    let step = (a_max / 40).max(1);

    let mut ev = Evaluator {
        xi,
        detector,
        objective,
        k_order,
        cache: HashMap::new(),
    };
    let mut curve = Vec::new();
    let mut best: Option<(u64, f64)> = None;
    let mut a = 0u64;
    loop {
        let value = ev.eval(&BandScheme::upper(a))?;
        curve.push((a, value));
        let better = match best {
            None => true,
            Some((_, b)) => value > b,
        };
        if better {
            best = Some((a, value));
        }
        if a >= a_max {
            break;
        }
        a = (a + step).min(a_max);
    }
    let (best_a, _) = best.ok_or_else(|| {
        EosError::Conditioning("threshold sweep found no feasible band".into())
    })?;
    Ok((best_a, curve))
}

fn propose(
    scheme: &BandScheme,
    rng: &mut ChaCha8Rng,
    max_bands: usize,
    herald_scale: u64,
) -> BandScheme {
    let mut bands = scheme.bands().to_vec();
    let steps = [1u64, 2, 4, 8, herald_scale.max(1)];
    let step = steps[rng.gen_range(0..steps.len())];
    let idx = rng.gen_range(0..bands.len());
    match rng.gen_range(0..4) {
        // grow: move an edge outward
        0 => {
            let (a, b) = bands[idx];
            if rng.gen_bool(0.5) {
                bands[idx].0 = a.saturating_sub(step);
            } else if let Some(b) = b {
                bands[idx].1 = Some(b + step);
            } else {
                bands[idx].0 = a.saturating_sub(step);
            }
        }
        // shrink: move an edge inward, keeping the band non-empty
        1 => {
            let (a, b) = bands[idx];
            if rng.gen_bool(0.5) {
                let cap = b.unwrap_or(u64::MAX);
                bands[idx].0 = (a + step).min(cap);
            } else if let Some(b) = b {
                bands[idx].1 = Some(b.saturating_sub(step).max(a));
            } else {
                bands[idx].0 = a + step;
            }
        }
        // split: open a gap inside a band
        2 => {
            if bands.len() < max_bands {
                let (a, b) = bands[idx];
                let width = b.map(|b| b - a).unwrap_or(4 * herald_scale.max(4));
                if width >= 3 {
                    let cut = a + 1 + rng.gen_range(0..width - 2);
                    let right = (cut + 1 + rng.gen_range(0..step.max(1)), b);
                    bands[idx].1 = Some(cut - 1);
                    if right.0 > cut {
                        bands.insert(idx + 1, right);
                    }
                }
            }
        }
        // merge: fuse a band with its right neighbor
        _ => {
            if idx + 1 < bands.len() {
                let b_next = bands[idx + 1].1;
                bands[idx].1 = b_next;
                bands.remove(idx + 1);
            }
        }
    }
    match BandScheme::new(bands) {
        Ok(s) => s,
        Err(_) => scheme.clone(), // invalid move: keep the current scheme
    }
}

/// Seeded greedy local search over band-edge moves with restarts from the
/// best-seen scheme. Returns the best scheme and the full evaluation trace.
pub fn local_search_bands(problem: &OptimizationProblem) -> Result<(BandScheme, Vec<TraceEntry>)> {
    if problem.budget < 1 {
        return Err(EosError::Domain("local_search_bands: budget must be >= 1".into()));
    }
    if problem.max_bands < 1 {
        return Err(EosError::Domain("local_search_bands: max_bands must be >= 1".into()));
    }
    let (best_a, _) = sweep_threshold(
        problem.xi,
        problem.detector.as_ref(),
        &problem.objective,
        problem.k_order,
    )?;
    let mut ev = Evaluator {
        xi: problem.xi,
        detector: problem.detector.as_ref(),
        objective: &problem.objective,
        k_order: problem.k_order,
        cache: HashMap::new(),
    };
    let herald_scale = ((problem.xi / (1.0 - problem.xi)).sqrt().ceil() as u64).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);

    let init = BandScheme::upper(best_a);
    let init_val = ev.eval(&init)?;
    let mut trace = vec![TraceEntry {
        step: 0,
        scheme: init.bands().to_vec(),
        objective: init_val,
        accepted: true,
    }];
    let mut best = (init.clone(), init_val);
    let mut current = (init, init_val);
    let mut stale = 0usize;
    let patience = (problem.budget / 4).max(8);

    for step in 1..problem.budget {
        if stale >= patience {
            // restart from the best-seen scheme
            current = best.clone();
            stale = 0;
        }
        let candidate = propose(&current.0, &mut rng, problem.max_bands, herald_scale);
        let value = ev.eval(&candidate)?;
        let accepted = value > current.1;
        trace.push(TraceEntry {
            step,
            scheme: candidate.bands().to_vec(),
            objective: value,
            accepted,
        });
        if accepted {
            current = (candidate, value);
            stale = 0;
            if current.1 > best.1 {
                best = current.clone();
            }
        } else {
            stale += 1;
        }
    }
    Ok((best.0, trace))
}
