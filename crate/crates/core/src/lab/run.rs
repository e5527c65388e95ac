//! Subcommand runners: each produces a JSON document and an optional CSV table.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{CorrelationRoute, ExperimentConfig};
use super::correlate::{correlation_series_direct, fit_decay_rate};
use super::report::{
    correlation_entries, dichotomy_report, observable_pairs, spectral_entry, symbol_search, DecayReport,
};
use crate::cobound::{build_semiconjugacy, collect_obstructions, livsic};
use crate::error::{Error, Result};
use crate::fft::UniformGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Density,
    TwistSpectrum,
    SymbolBound,
    Livsic,
    Correlate,
    Dichotomy,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Density,
        Command::TwistSpectrum,
        Command::SymbolBound,
        Command::Livsic,
        Command::Correlate,
        Command::Dichotomy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Density => "density",
            Command::TwistSpectrum => "twist-spectrum",
            Command::SymbolBound => "symbol-bound",
            Command::Livsic => "livsic",
            Command::Correlate => "correlate",
            Command::Dichotomy => "dichotomy",
        }
    }

    pub fn from_name(name: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == name)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub json: String,
    pub csv: Option<String>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: Command,
    seed: u64,
    config: &'a ExperimentConfig,
    result: T,
}

fn envelope<T: Serialize>(cmd: Command, cfg: &ExperimentConfig, result: T) -> Result<String> {
    let env = Envelope { command: cmd, seed: cfg.seed, config: cfg, result };
    serde_json::to_string_pretty(&env).map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))
}

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.write_record(&r).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

fn nu_label(nu: &[i64]) -> String {
    nu.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

/// Run one subcommand; nothing is written to disk.
pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let sys = cfg.build()?;
    let (map, tau) = (&sys.map, &sys.tau);
    match cmd {
        Command::Density => {
            let h = cfg.density(map)?;
            let n = if map.dim() == 1 { 256 } else { 32 };
            let grid = UniformGrid::new(map.dim(), n);
            let rows: Vec<Vec<String>> = (0..grid.len())
                .map(|i| {
                    let x = grid.point(i);
                    let mut r: Vec<String> = x.iter().map(|v| fmt(*v)).collect();
                    r.push(fmt(h.eval(&x)));
                    r
                })
                .collect();
            let mut header: Vec<String> = (0..map.dim()).map(|i| format!("x{i}")).collect();
            header.push("h".into());
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            Ok(RunOutput { json: envelope(cmd, cfg, &h)?, csv: Some(table(&header, rows)?) })
        }
        Command::TwistSpectrum => {
            let entries = cfg
                .nu_range()
                .par_iter()
                .map(|nu| spectral_entry(map, tau, cfg, nu))
                .collect::<Result<Vec<_>>>()?;
            let rows = entries.iter().map(|e| {
                let est = e.estimate.as_ref();
                vec![
                    nu_label(&e.nu),
                    e.radius.map_or(String::new(), fmt),
                    est.map_or(String::new(), |s| fmt(s.gelfand)),
                    est.map_or(String::new(), |s| fmt(s.uncertainty)),
                    est.map_or(String::new(), |s| fmt(s.leading.re)),
                    est.map_or(String::new(), |s| fmt(s.leading.im)),
                ]
            });
            let csv = table(&["nu", "radius", "gelfand", "uncertainty", "leading_re", "leading_im"], rows)?;
            Ok(RunOutput { json: envelope(cmd, cfg, &entries)?, csv: Some(csv) })
        }
        Command::SymbolBound => {
            let h = cfg.density(map)?;
            let summary = symbol_search(map, tau, &h, cfg)?;
            let mut rows = Vec::new();
            for (k, d) in summary.per_direction.iter().enumerate() {
                for (n, v) in d.sup_history.iter().enumerate() {
                    rows.push(vec![(n + 1).to_string(), k.to_string(), fmt(*v)]);
                }
            }
            let csv = table(&["n", "direction", "sup_ptilde"], rows)?;
            Ok(RunOutput { json: envelope(cmd, cfg, &summary)?, csv: Some(csv) })
        }
        Command::Livsic => {
            let report = livsic(map, tau, &cfg.livsic)?;
            let semiconjugacy = match report.valid_certificate() {
                Some(c) if c.integral => Some(build_semiconjugacy(map, tau, c)?),
                _ => None,
            };
            #[derive(Serialize)]
            struct Out<'a> {
                report: &'a crate::cobound::LivsicReport,
                semiconjugacy: Option<crate::cobound::SemiconjugacyReport>,
            }
            let obs = collect_obstructions(map, tau, cfg.livsic.p_max)?;
            let rows = obs.iter().map(|o| {
                let mut r = vec![o.id.to_string(), o.period.to_string()];
                r.extend(o.sum.iter().map(|v| fmt(*v)));
                r
            });
            let mut header = vec!["orbit".to_string(), "period".to_string()];
            header.extend((0..tau.fiber_dim()).map(|i| format!("sum{i}")));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            Ok(RunOutput {
                json: envelope(cmd, cfg, Out { report: &report, semiconjugacy })?,
                csv: Some(table(&header, rows)?),
            })
        }
        Command::Correlate => {
            let h = cfg.density(map)?;
            let first = cfg.nu_range().into_iter().next().unwrap_or_else(|| vec![1; tau.fiber_dim()]);
            let entries = match cfg.correlate.route {
                CorrelationRoute::Transfer => correlation_entries(map, tau, &h, cfg, &first)?,
                CorrelationRoute::Direct => observable_pairs(cfg, map.dim(), tau.fiber_dim(), &first)?
                    .into_iter()
                    .map(|(name, nu, phi, psi)| {
                        let d = correlation_series_direct(
                            map, tau, &h, &phi, &psi, cfg.correlate.n_max, cfg.correlate.direct_grid,
                        )?;
                        let (fit, fit_error) = match fit_decay_rate(&d.series.moduli, cfg.correlate.window) {
                            Ok(f) => (Some(f), None),
                            Err(e) => (None, Some(e.to_string())),
                        };
                        Ok(super::report::CorrelationEntry { name, nu, series: d.series, fit, fit_error })
                    })
                    .collect::<Result<Vec<_>>>()?,
            };
            let csv = correlation_csv(&entries)?;
            Ok(RunOutput { json: envelope(cmd, cfg, &entries)?, csv: Some(csv) })
        }
        Command::Dichotomy => {
            let report = dichotomy_report(cfg)?;
            let csv = correlation_csv(&report.correlations)?;
            Ok(RunOutput { json: dichotomy_document(cfg, &report)?, csv: Some(csv) })
        }
    }
}

/// The `dichotomy` JSON document for an already computed report.
pub fn dichotomy_document(cfg: &ExperimentConfig, report: &DecayReport) -> Result<String> {
    envelope(Command::Dichotomy, cfg, report)
}

fn correlation_csv(entries: &[super::report::CorrelationEntry]) -> Result<String> {
    let mut header = vec!["n".to_string()];
    for e in entries {
        header.push(format!("{}_abs", e.name));
        header.push(format!("{}_re", e.name));
        header.push(format!("{}_im", e.name));
    }
    let n_max = entries.iter().map(|e| e.series.values.len()).max().unwrap_or(0);
    let rows = (0..n_max).map(|n| {
        let mut r = vec![(n + 1).to_string()];
        for e in entries {
            let c = e.series.values[n];
            r.extend([fmt(c.norm()), fmt(c.re), fmt(c.im)]);
        }
        r
    });
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    table(&header, rows)
}

/// Run and write `<dir>/<command>.json` (and `.csv`); returns the paths written.
pub fn run_to_disk(cmd: Command, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let out = run(cmd, cfg)?;
    std::fs::create_dir_all(&cfg.output.dir)?;
    let json_path = cfg.output.dir.join(format!("{}.json", cmd.name()));
    std::fs::write(&json_path, &out.json)?;
    let mut paths = vec![json_path];
    if let (true, Some(csv)) = (cfg.output.csv, out.csv) {
        let p = cfg.output.dir.join(format!("{}.csv", cmd.name()));
        std::fs::write(&p, csv)?;
        paths.push(p);
    }
    Ok(paths)
}
