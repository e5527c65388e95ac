//! Experiments: configuration, correlation decay, the dichotomy report and
//! the subcommand runners behind the `skewmix` binary.

mod config;
mod correlate;
mod report;
mod run;

pub use config::{
    CorrelateSection, CorrelationRoute, DensitySection, ExperimentConfig, MapKindSpec, MapSpec,
    OutputSection, Override, PairSpec, SpectralSection, SymbolSection, System, TauComponent, TauSpec,
    DEFAULT_SEED,
};
pub use correlate::{
    correlation_series, correlation_series_direct, fit_decay_rate, CorrelationSeries, DecayFit,
    DirectCorrelation, Observable, NOISE_FLOOR,
};
pub use report::{
    correlation_entries, decide, dichotomy_report, spectral_entry, symbol_search, symbol_summary,
    CorrelationEntry, DecayReport, Margins, SpectralEntry, SymbolSummary, Verdict,
    INSTABILITY_NOTE,
};
pub use run::{dichotomy_document, run, run_to_disk, Command, RunOutput};
