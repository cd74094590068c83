//! Declarative run configuration, the calibration routine, and CSV/JSON
//! export for every command of the `eoslab` binary.

use crate::bandopt::{local_search_bands, sweep_threshold, Objective, OptimizationProblem};
use crate::eos_core::{
    d_measure_from_table, d_peak_to_peak, d_peak_to_peak_from_table, eos_distribution_from_table,
    susceptibilities, DCurve,
};
use crate::error::{EosError, Result};
use crate::probes::{
    bcs_dist, coherent_dist, fock_dist, thermal_dist, BandScheme, HeraldingDetector,
    PhotonDistribution,
};
use crate::signals::SignalSpec;
use crate::wigner::{negativity_volume, normalization, r_max, wigner_grid};
use serde::Deserialize;
use serde_json::json;
use std::fs;
use std::path::Path;

pub const DEFAULT_K_ORDER: usize = 6;

#[derive(Clone, Copy, Debug)]
pub enum CommandKind {
    ProbeDist,
    Eos,
    Calibrate,
    EtaSweep,
    Wigner,
    Bandopt,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeSpec {
    Coherent {
        nu: f64,
    },
    Thermal {
        xi: f64,
    },
    Fock {
        nu: u64,
    },
    Bcs {
        xi: f64,
        bands: Vec<(u64, Option<u64>)>,
        #[serde(default)]
        detector: Option<HeraldingDetector>,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    #[serde(default = "default_target_pp")]
    pub target_pp: f64,
}

fn default_target_pp() -> f64 {
    0.06
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaSweepConfig {
    pub etas: Vec<f64>,
    #[serde(default = "default_gain")]
    pub gain: f64,
}

fn default_gain() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerConfig {
    #[serde(default = "default_wigner_points")]
    pub n_points: usize,
}

fn default_wigner_points() -> usize {
    200
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    PeakToPeakVacuum,
    DiscriminationL1,
    MomentIsolation { k: usize },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandoptConfig {
    pub objective: ObjectiveSpec,
    #[serde(default = "default_max_bands")]
    pub max_bands: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_max_bands() -> usize {
    1
}

fn default_budget() -> usize {
    1
}

/// One declarative file drives every command; sections irrelevant to the
/// invoked command are still validated. Unknown keys are hard errors.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub probe: ProbeSpec,
    #[serde(default)]
    pub signal: Option<SignalSpec>,
    #[serde(default)]
    pub signal_b: Option<SignalSpec>,
    #[serde(default = "default_k_order")]
    pub k_order: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub calibrate: Option<CalibrateConfig>,
    #[serde(default)]
    pub eta_sweep: Option<EtaSweepConfig>,
    #[serde(default)]
    pub wigner: Option<WignerConfig>,
    #[serde(default)]
    pub bandopt: Option<BandoptConfig>,
}

fn default_k_order() -> usize {
    DEFAULT_K_ORDER
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn write_csv(path: &Path, hash: &str, header: &str, rows: &[String]) -> Result<()> {
    let mut s = String::with_capacity(rows.len() * 32 + 64);
    s.push_str("# config-hash=");
    s.push_str(hash);
    s.push('\n');
    s.push_str(header);
    s.push('\n');
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| EosError::Numerical(format!("json encoding failed: {e}")))?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn build_probe(spec: &ProbeSpec) -> Result<(PhotonDistribution, String)> {
    match spec {
        ProbeSpec::Coherent { nu } => Ok((coherent_dist(*nu)?, format!("coherent nu={nu}"))),
        ProbeSpec::Thermal { xi } => Ok((thermal_dist(*xi)?, format!("thermal xi={xi}"))),
        ProbeSpec::Fock { nu } => Ok((fock_dist(*nu), format!("fock nu={nu}"))),
        ProbeSpec::Bcs { xi, bands, detector } => {
            let scheme = BandScheme::new(bands.clone()).map_err(config_err)?;
            let det = match detector {
                Some(d) => Some(HeraldingDetector::new(d.eta, d.gain).map_err(config_err)?),
                None => None,
            };
            let probe = bcs_dist(*xi, &scheme, det.as_ref())?;
            Ok((probe, format!("bcs xi={xi} bands={:?}", bands)))
        }
    }
}

fn config_err(e: EosError) -> EosError {
    EosError::Config(e.to_string())
}

fn require_signal(cfg: &RunConfig) -> Result<&SignalSpec> {
    cfg.signal
        .as_ref()
        .ok_or_else(|| EosError::Config("this command needs a \"signal\" section".into()))
}

/// Entry point shared by the binary and the tests.
pub fn run(cmd: CommandKind, config_path: &Path, out_dir: &Path, seed: Option<u64>) -> Result<()> {
    let bytes = fs::read(config_path)
        .map_err(|e| EosError::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let cfg: RunConfig = serde_json::from_slice(&bytes)
        .map_err(|e| EosError::Config(format!("invalid config: {e}")))?;
    let hash = format!("{:016x}", fnv1a64(&bytes));
    fs::create_dir_all(out_dir)?;
    let seed = seed.or(cfg.seed).unwrap_or(0);
    match cmd {
        CommandKind::ProbeDist => cmd_probe_dist(&cfg, &hash, out_dir),
        CommandKind::Eos => cmd_eos(&cfg, &hash, out_dir),
        CommandKind::Calibrate => cmd_calibrate(&cfg, &hash, out_dir),
        CommandKind::EtaSweep => cmd_eta_sweep(&cfg, &hash, out_dir),
        CommandKind::Wigner => cmd_wigner(&cfg, &hash, out_dir),
        CommandKind::Bandopt => cmd_bandopt(&cfg, &hash, out_dir, seed),
    }
}

fn cmd_probe_dist(cfg: &RunConfig, hash: &str, out: &Path) -> Result<()> {
    let (probe, desc) = build_probe(&cfg.probe)?;
    let rows: Vec<String> = probe
        .iter()
        .map(|(n, p)| format!("{n},{p},{}", if p > 0.0 { p.log10() } else { f64::NEG_INFINITY }))
        .collect();
    write_csv(&out.join("probe_dist.csv"), hash, "n,p,log10_p", &rows)?;
    let mean = probe.mean();
    let var = probe.variance();
    write_json(
        &out.join("probe_summary.json"),
        &json!({
            "probe": desc,
            "mean": mean,
            "variance": var,
            "fano": if mean > 0.0 { var / mean } else { 0.0 },
            "support_min": probe.support_min(),
            "support_max": probe.support_max(),
        }),
    )
}

fn cmd_eos(cfg: &RunConfig, hash: &str, out: &Path) -> Result<()> {
    let (probe, desc) = build_probe(&cfg.probe)?;
    let k = cfg.k_order;
    let table = susceptibilities(&probe, k)?;

    let grid = table.grid();
    let norms: Vec<Vec<f64>> = (0..=k).map(|j| table.normalized(j)).collect();
    let mut header = String::from("delta_n");
    for j in 0..=k {
        header.push_str(&format!(",chi_{j}"));
    }
    for j in 0..=k {
        header.push_str(&format!(",chi_norm_{j}"));
    }
    let rows: Vec<String> = grid
        .iter()
        .enumerate()
        .map(|(i, dn)| {
            let mut row = dn.to_string();
            for j in 0..=k {
                row.push_str(&format!(",{}", table.chi(j)[i]));
            }
            for j in 0..=k {
                row.push_str(&format!(",{}", norms[j][i]));
            }
            row
        })
        .collect();
    write_csv(&out.join("susceptibilities.csv"), hash, &header, &rows)?;

    let mut summary = json!({ "probe": desc, "k_order": k });
    let emit = |spec: &SignalSpec, suffix: &str| -> Result<f64> {
        let moments = spec.moments(k)?;
        let dist = eos_distribution_from_table(&table, &moments, &desc)?;
        let rows: Vec<String> = dist.iter().map(|(dn, p)| format!("{dn},{p}")).collect();
        write_csv(&out.join(format!("eos_dist{suffix}.csv")), hash, "delta_n,p", &rows)?;
        let curve = d_measure_from_table(&table, &moments)?;
        let rows: Vec<String> = curve.iter().map(|(dn, d)| format!("{dn},{d}")).collect();
        write_csv(&out.join(format!("d_curve{suffix}.csv")), hash, "delta_n,d", &rows)?;
        Ok(d_peak_to_peak(&curve))
    };
    let spec = require_signal(cfg)?;
    let pp = emit(spec, "")?;
    summary["peak_to_peak"] = json!(pp);
    if let Some(spec_b) = &cfg.signal_b {
        let pp_b = emit(spec_b, "_b")?;
        summary["peak_to_peak_b"] = json!(pp_b);
    }
    write_json(&out.join("eos_summary.json"), &summary)
}

fn cmd_calibrate(cfg: &RunConfig, hash: &str, out: &Path) -> Result<()> {
    let nu = match &cfg.probe {
        ProbeSpec::Coherent { nu } => *nu,
        _ => return Err(EosError::Config("calibrate needs a coherent probe".into())),
    };
    let target = cfg.calibrate.as_ref().map(|c| c.target_pp).unwrap_or(0.06);
    if target < 0.0 {
        return Err(EosError::Config(format!("target_pp={target} must be >= 0")));
    }
    let spec = cfg
        .signal
        .clone()
        .unwrap_or(SignalSpec::Vacuum { g: 1e-3 });
    if spec.coupling().is_none() {
        return Err(EosError::Config(
            "calibrate needs a signal with a coupling parameter".into(),
        ));
    }
    let k = cfg.k_order;
    let probe = coherent_dist(nu)?;
    let table = susceptibilities(&probe, k)?;
    let pp_of = |g: f64| -> Result<f64> {
        if g == 0.0 {
            return Ok(0.0);
        }
        let m = spec.with_coupling(g)?.moments(k)?;
        Ok(d_peak_to_peak_from_table(&table, &m))
    };

    let mut iterations = 0usize;
    let g = if target == 0.0 {
        0.0
    } else {
        // bracket the target, expanding the upper end up to 10 doublings
        let mut g_hi = (target / probe.mean().max(1.0)).sqrt().max(1e-6);
        let mut expansions = 0;
        while pp_of(g_hi)? < target {
            g_hi *= 2.0;
            expansions += 1;
            if expansions > 10 {
                return Err(EosError::Numerical(format!(
                    "calibration target {target} not bracketed after 10 doublings"
                )));
            }
        }
        let mut lo = 0.0;
        let mut hi = g_hi;
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let pp = pp_of(mid)?;
            iterations += 1;
            if (pp - target).abs() <= 1e-5 {
                break;
            }
            if pp < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        mid
    };
    let achieved = pp_of(g)?;
    if (achieved - target).abs() > 1e-4 {
        return Err(EosError::Numerical(format!(
            "calibration stalled: peak-to-peak {achieved} vs target {target}"
        )));
    }
    write_json(
        &out.join("calibration.json"),
        &json!({
            "config_hash": hash,
            "g": g,
            "target_pp": target,
            "achieved_pp": achieved,
            "probe_mean": probe.mean(),
            "k_order": k,
            "iterations": iterations,
        }),
    )
}

/// Local maxima of the even-lag half of a D curve whose prominence exceeds
/// the given fraction of the curve's tallest positive value.
fn prominent_peak_count(curve: &DCurve, rel_prominence: f64) -> usize {
    let v: Vec<f64> = curve
        .iter()
        .filter(|&(dn, _)| dn >= 0 && dn % 2 == 0)
        .map(|(_, val)| val)
        .collect();
    let n = v.len();
    if n < 3 {
        return 0;
    }
    // scale prominence against the tallest positive lobe, not the full
    // range: the central dip would otherwise drown out secondary structure
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > 0.0) {
        return 0;
    }
    let mut count = 0;
    for p in 1..n - 1 {
        if !(v[p] > v[p - 1] && v[p] >= v[p + 1]) {
            continue;
        }
        // min along each side until higher terrain (or the boundary); the
        // higher of the two is the key col
        let mut lmin = v[p];
        let mut i = p;
        while i > 0 {
            i -= 1;
            if v[i] > v[p] {
                break;
            }
            lmin = lmin.min(v[i]);
        }
        let mut rmin = v[p];
        let mut i = p;
        while i + 1 < n {
            i += 1;
            if v[i] > v[p] {
                break;
            }
            rmin = rmin.min(v[i]);
        }
        if v[p] - lmin.max(rmin) >= rel_prominence * hi {
            count += 1;
        }
    }
    count
}

fn double_peak_flag(curve: &DCurve) -> bool {
    prominent_peak_count(curve, 0.05) >= 2
}

fn cmd_eta_sweep(cfg: &RunConfig, hash: &str, out: &Path) -> Result<()> {
    let (xi, bands) = match &cfg.probe {
        ProbeSpec::Bcs { xi, bands, .. } => (*xi, bands.clone()),
        _ => return Err(EosError::Config("eta-sweep needs a bcs probe".into())),
    };
    let sweep = cfg
        .eta_sweep
        .as_ref()
        .ok_or_else(|| EosError::Config("eta-sweep needs an \"eta_sweep\" section".into()))?;
    if sweep.etas.is_empty() {
        return Err(EosError::Config("eta_sweep.etas must be non-empty".into()));
    }
    let scheme = BandScheme::new(bands).map_err(config_err)?;
    let k = cfg.k_order;
    let m_vac = require_signal(cfg)?.moments(k)?;
    let m_cat = cfg
        .signal_b
        .as_ref()
        .ok_or_else(|| EosError::Config("eta-sweep needs a \"signal_b\" section".into()))?
        .moments(k)?;

    // matched coherent baseline at the unconditioned mean photon number
    let nu = xi / (1.0 - xi);
    let coh_table = susceptibilities(&coherent_dist(nu)?, k)?;
    let pp_coh = d_peak_to_peak_from_table(&coh_table, &m_vac);

    let mut summary_rows = Vec::new();
    let mut summary_json = Vec::new();
    for &eta in &sweep.etas {
        let detector = HeraldingDetector::new(eta, sweep.gain).map_err(config_err)?;
        // band edges are stated in photon number; the detector reads electron
        // counts, scaled by gain * eta
        let scheme_e = if detector.is_ideal() {
            scheme.clone()
        } else {
            scheme.scaled(detector.gain * detector.eta).map_err(config_err)?
        };
        let probe = bcs_dist(xi, &scheme_e, Some(&detector))?;
        let table = susceptibilities(&probe, k)?;
        let d_vac = d_measure_from_table(&table, &m_vac)?;
        let d_cat = d_measure_from_table(&table, &m_cat)?;
        let rows: Vec<String> = d_vac
            .iter()
            .zip(d_cat.iter())
            .map(|((dn, dv), (_, dc))| format!("{dn},{dv},{dc}"))
            .collect();
        write_csv(
            &out.join(format!("eta_curves_{eta:.2}.csv")),
            hash,
            "delta_n,d_vacuum,d_signal_b",
            &rows,
        )?;
        let pp_vac = d_peak_to_peak(&d_vac);
        let ratio = pp_vac / pp_coh;
        let double = double_peak_flag(&d_cat);
        summary_rows.push(format!("{eta},{pp_vac},{ratio},{double}"));
        summary_json.push(json!({
            "eta": eta,
            "pp_vacuum": pp_vac,
            "ratio_vs_coherent": ratio,
            "double_peak": double,
        }));
    }
    write_csv(
        &out.join("eta_summary.csv"),
        hash,
        "eta,pp_vacuum,ratio_vs_coherent,double_peak",
        &summary_rows,
    )?;
    write_json(
        &out.join("eta_summary.json"),
        &json!({
            "coherent_baseline_pp": pp_coh,
            "coherent_nu": nu,
            "gain": sweep.gain,
            "points": summary_json,
        }),
    )
}

fn cmd_wigner(cfg: &RunConfig, hash: &str, out: &Path) -> Result<()> {
    let (probe, desc) = build_probe(&cfg.probe)?;
    let n_points = cfg.wigner.as_ref().map(|w| w.n_points).unwrap_or_else(default_wigner_points);
    let grid = wigner_grid(&probe, n_points, &desc);
    let rows: Vec<String> = grid
        .radial_points
        .iter()
        .zip(&grid.values)
        .map(|(r, w)| format!("{r},{w}"))
        .collect();
    write_csv(&out.join("wigner.csv"), hash, "r,w", &rows)?;
    let min_value = grid.values.iter().cloned().fold(f64::INFINITY, f64::min);
    write_json(
        &out.join("wigner_summary.json"),
        &json!({
            "probe": desc,
            "normalization": normalization(&probe),
            "negativity_volume": negativity_volume(&probe)?,
            "min_value": min_value,
            "r_max": r_max(&probe),
        }),
    )
}

fn cmd_bandopt(cfg: &RunConfig, hash: &str, out: &Path, seed: u64) -> Result<()> {
    let (xi, detector) = match &cfg.probe {
        ProbeSpec::Bcs { xi, detector, .. } => (*xi, *detector),
        _ => return Err(EosError::Config("bandopt needs a bcs probe".into())),
    };
    let bo = cfg
        .bandopt
        .as_ref()
        .ok_or_else(|| EosError::Config("bandopt needs a \"bandopt\" section".into()))?;
    let k = cfg.k_order;
    let objective = match &bo.objective {
        ObjectiveSpec::PeakToPeakVacuum => Objective::PeakToPeakVacuum {
            signal: require_signal(cfg)?.moments(k)?,
        },
        ObjectiveSpec::DiscriminationL1 => Objective::DiscriminationL1 {
            sig_a: require_signal(cfg)?.moments(k)?,
            sig_b: cfg
                .signal_b
                .as_ref()
                .ok_or_else(|| {
                    EosError::Config("discrimination_l1 needs a \"signal_b\" section".into())
                })?
                .moments(k)?,
        },
        ObjectiveSpec::MomentIsolation { k: iso_k } => Objective::MomentIsolation { k: *iso_k },
    };

    let (best_a, curve) = sweep_threshold(xi, detector.as_ref(), &objective, k)?;
    let rows: Vec<String> = curve.iter().map(|(a, v)| format!("{a},{v}")).collect();
    write_csv(&out.join("sweep.csv"), hash, "a,objective", &rows)?;

    let problem = OptimizationProblem {
        xi,
        detector,
        objective,
        max_bands: bo.max_bands,
        budget: bo.budget,
        seed,
        k_order: k,
    };
    let (best_scheme, trace) = local_search_bands(&problem)?;
    let mut lines = String::new();
    for entry in &trace {
        lines.push_str(
            &serde_json::to_string(entry)
                .map_err(|e| EosError::Numerical(format!("trace encoding failed: {e}")))?,
        );
        lines.push('\n');
    }
    fs::write(out.join("trace.jsonl"), lines)?;
    let best_objective = trace
        .iter()
        .filter(|t| t.accepted)
        .map(|t| t.objective)
        .fold(f64::NEG_INFINITY, f64::max);
    write_json(
        &out.join("bandopt_result.json"),
        &json!({
            "config_hash": hash,
            "sweep_best_a": best_a,
            "best_scheme": best_scheme.bands(),
            "best_objective": best_objective,
            "budget": bo.budget,
            "seed": seed,
        }),
    )
}
