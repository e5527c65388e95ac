//! The combined verdict: exponential mixing or essential coboundary.

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::correlate::{correlation_series, fit_decay_rate, CorrelationSeries, DecayFit, Observable};
use crate::cobound::{build_semiconjugacy, livsic, LivsicReport, SemiconjugacyReport};
use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::maps::{ExpandingMap, FiberRotation};
use crate::symbol::{direction_grid, find_n0, N0Search, WeightG};
use crate::twisted::{
    assemble_koopman, assemble_transfer, spectral_radius, OperatorKind, SobolevWeight, SpectralEstimate,
};

pub const INSTABILITY_NOTE: &str = "the dependence is real but not integral: this skew product \
is not exponentially mixing, yet arbitrarily small perturbations of τ give mixing products, \
so the non-mixing is unstable";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ExponentialMixing,
    EssentialCoboundaryIntegral,
    EssentialCoboundaryNonIntegral,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralEntry {
    pub nu: Vec<i64>,
    pub radius: Option<f64>,
    pub estimate: Option<SpectralEstimate>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymbolSummary {
    pub search: Option<N0Search>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationEntry {
    pub name: String,
    /// Fiber frequency of a `ν`-pure pair.
    pub nu: Option<Vec<i64>>,
    pub series: CorrelationSeries,
    pub fit: Option<DecayFit>,
    pub fit_error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Margins {
    pub radius: f64,
    pub certificate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub seed: u64,
    pub verdict: Verdict,
    pub notes: Vec<String>,
    pub margins: Margins,
    pub livsic: LivsicReport,
    pub semiconjugacy: Option<SemiconjugacyReport>,
    pub spectral: Vec<SpectralEntry>,
    pub symbol: SymbolSummary,
    pub correlations: Vec<CorrelationEntry>,
}

/// Radius of `F̂_ν` at cut-off `k`; `NotConverged` is returned as data, other
/// errors propagate.
pub fn spectral_entry(
    map: &ExpandingMap,
    tau: &FiberRotation,
    cfg: &ExperimentConfig,
    nu: &[i64],
) -> Result<SpectralEntry> {
    let k = cfg.spectral_k(map.dim());
    let op = match cfg.spectral.operator {
        OperatorKind::Transfer => assemble_transfer(map, tau, nu, k)?,
        OperatorKind::Koopman => assemble_koopman(map, tau, nu, k)?,
    };
    let g = WeightG::for_system(map, tau);
    let weight = SobolevWeight::build(cfg.spectral.weight, cfg.s, nu, op.basis, &g);
    let op = op.with_weight(weight);
    Ok(match spectral_radius(&op) {
        Ok(est) => SpectralEntry { nu: nu.to_vec(), radius: Some(est.radius), estimate: Some(est), error: None },
        Err(e @ Error::NotConverged { .. }) => {
            SpectralEntry { nu: nu.to_vec(), radius: None, estimate: None, error: Some(e.to_string()) }
        }
        Err(e) => return Err(e),
    })
}

/// `find_n0` over the configured direction grid.
pub fn symbol_search(
    map: &ExpandingMap,
    tau: &FiberRotation,
    h: &DensityModel,
    cfg: &ExperimentConfig,
) -> Result<N0Search> {
    let dirs = direction_grid(tau.fiber_dim(), cfg.symbol.direction_resolution)?;
    let spec = cfg.field_spec(map.dim());
    find_n0(map, tau, h, cfg.s, &dirs, cfg.symbol.n_max, &spec, cfg.symbol.margin)
}

/// [`symbol_search`] with budget and dimension failures recorded instead of
/// raised: inside the verdict the symbol bound is supporting evidence only.
pub fn symbol_summary(
    map: &ExpandingMap,
    tau: &FiberRotation,
    h: &DensityModel,
    cfg: &ExperimentConfig,
) -> Result<SymbolSummary> {
    match symbol_search(map, tau, h, cfg) {
        Ok(s) => Ok(SymbolSummary { search: Some(s), error: None }),
        Err(e @ (Error::BudgetExceeded { .. } | Error::InvalidInput(_))) => {
            Ok(SymbolSummary { search: None, error: Some(e.to_string()) })
        }
        Err(e) => Err(e),
    }
}

/// A named `(φ, ψ)` pair; `nu` is set for `ν`-pure pairs.
pub type NamedPair = (String, Option<Vec<i64>>, Observable, Observable);

/// Observable pairs from the config, or the `ν`-pure pair
/// `(e^{−2πiν·y}, e^{2πiν·y})` for `nu`.
pub fn observable_pairs(
    cfg: &ExperimentConfig,
    base_dim: usize,
    fiber_dim: usize,
    nu: &[i64],
) -> Result<Vec<NamedPair>> {
    if cfg.correlate.pairs.is_empty() {
        let psi = Observable::fiber_mode(base_dim, nu);
        return Ok(vec![(format!("nu_pure_{nu:?}"), Some(nu.to_vec()), psi.conj(), psi)]);
    }
    cfg.correlate
        .pairs
        .iter()
        .map(|p| {
            let phi = Observable::from_coefficients(base_dim, fiber_dim, &p.phi)?;
            let psi = Observable::from_coefficients(base_dim, fiber_dim, &p.psi)?;
            Ok((p.name.clone(), None, phi, psi))
        })
        .collect()
}

pub fn correlation_entries(
    map: &ExpandingMap,
    tau: &FiberRotation,
    h: &DensityModel,
    cfg: &ExperimentConfig,
    nu: &[i64],
) -> Result<Vec<CorrelationEntry>> {
    let pairs = observable_pairs(cfg, map.dim(), tau.fiber_dim(), nu)?;
    let k = cfg.correlate_k(map.dim());
    pairs
        .into_par_iter()
        .map(|(name, nu, phi, psi)| {
            let series = correlation_series(map, tau, h, &phi, &psi, cfg.correlate.n_max, k)?;
            let (fit, fit_error) = match fit_decay_rate(&series.moduli, cfg.correlate.window) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Ok(CorrelationEntry { name, nu, series, fit, fit_error })
        })
        .collect()
}

fn parallel(nu: &[i64], v: &[f64]) -> bool {
    let dot: f64 = nu.iter().zip(v).map(|(a, b)| *a as f64 * b).sum();
    let nn: f64 = nu.iter().map(|a| (*a as f64).powi(2)).sum();
    let vv: f64 = v.iter().map(|a| a * a).sum();
    nn > 0.0 && (dot * dot - nn * vv).abs() <= 1e-12 * nn * vv
}

/// Apply the verdict rules to the collected evidence.
pub fn decide(
    livsic: &LivsicReport,
    spectral: &[SpectralEntry],
    margin: f64,
    notes: &mut Vec<String>,
) -> Verdict {
    let twisted: Vec<&SpectralEntry> = spectral.iter().filter(|e| e.nu.iter().any(|&v| v != 0)).collect();
    if let Some(cert) = livsic.valid_certificate() {
        if !cert.integral {
            notes.push(INSTABILITY_NOTE.to_string());
            return Verdict::EssentialCoboundaryNonIntegral;
        }
        let conflicts: Vec<&Vec<i64>> = twisted
            .iter()
            .filter(|e| parallel(&e.nu, &cert.v) && e.radius.is_some_and(|r| r < 1.0 - margin))
            .map(|e| &e.nu)
            .collect();
        if !conflicts.is_empty() {
            notes.push(format!(
                "CONFLICT: a valid certificate exists for v = {:?} but the twisted radius at {conflicts:?} \
                 is below 1 − {margin}",
                cert.v
            ));
            return Verdict::Inconclusive;
        }
        return Verdict::EssentialCoboundaryIntegral;
    }
    let failed: Vec<&Vec<i64>> = twisted.iter().filter(|e| e.radius.is_none()).map(|e| &e.nu).collect();
    if !failed.is_empty() {
        notes.push(format!("spectral radius did not converge at {failed:?}"));
        return Verdict::Inconclusive;
    }
    let slow: Vec<(&Vec<i64>, f64)> = twisted
        .iter()
        .filter_map(|e| e.radius.filter(|&r| r >= 1.0 - margin).map(|r| (&e.nu, r)))
        .collect();
    if !slow.is_empty() {
        notes.push(format!(
            "no coboundary certificate, but radii at or above 1 − {margin}: {slow:?}"
        ));
        return Verdict::Inconclusive;
    }
    if twisted.is_empty() {
        notes.push("no twisted frequency was computed".into());
        return Verdict::Inconclusive;
    }
    Verdict::ExponentialMixing
}

/// Run livsic, the twisted spectra, the symbol bound and the correlations,
/// then decide.
pub fn dichotomy_report(cfg: &ExperimentConfig) -> Result<DecayReport> {
    cfg.validate()?;
    let sys = cfg.build()?;
    let (map, tau) = (&sys.map, &sys.tau);
    let h = cfg.density(map)?;
    let mut notes = Vec::new();

    let lv = livsic(map, tau, &cfg.livsic)?;
    let semiconjugacy = match lv.valid_certificate() {
        Some(c) if c.integral => Some(build_semiconjugacy(map, tau, c)?),
        _ => None,
    };

    let mut nus = cfg.nu_range();
    if let Some(c) = lv.valid_certificate().filter(|c| c.integral) {
        if !nus.iter().any(|nu| parallel(nu, &c.v)) {
            nus.push(c.v.iter().map(|a| a.round() as i64).collect());
            notes.push(format!("added ν = {:?} from the certificate to the spectral run", c.v));
        }
    }
    let spectral = nus
        .par_iter()
        .map(|nu| spectral_entry(map, tau, cfg, nu))
        .collect::<Result<Vec<_>>>()?;

    let symbol = symbol_summary(map, tau, &h, cfg)?;
    match (&symbol.search, &symbol.error) {
        (Some(s), _) if !s.found => notes.push(format!(
            "symbol bound stayed at or above 1 − {} up to n = {}; this is not by itself evidence either way",
            s.margin, s.n_max
        )),
        (_, Some(e)) => notes.push(format!("symbol bound skipped: {e}")),
        _ => {}
    }

    let first = nus.first().cloned().unwrap_or_else(|| vec![1; tau.fiber_dim()]);
    let correlations = correlation_entries(map, tau, &h, cfg, &first)?;

    let verdict = decide(&lv, &spectral, cfg.spectral.margin, &mut notes);
    Ok(DecayReport {
        seed: cfg.seed,
        verdict,
        notes,
        margins: Margins { radius: cfg.spectral.margin, certificate: cfg.livsic.equation_tol },
        livsic: lv,
        semiconjugacy,
        spectral,
        symbol,
        correlations,
    })
}
