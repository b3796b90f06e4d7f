//! Deterministic forecast verification.
//!
//! `skillscore` computes error metrics for point forecasts, fits linear
//! recalibrations under the MSE, MAE and variance-matching directives, builds
//! climatology, persistence and CLIPER reference forecasts, and reports
//! actual and *potential* RMSE/MSE skill scores. The potential RMSE skill score
//!
//! ```text
//! s = 1 - sqrt((1 - rho²) / (1 - gamma(h)²))
//! ```
//!
//! is the RMSE skill a forecast would reach after least-squares linear
//! calibration. It depends only on the forecast/observation correlation `rho`
//! and the lag-`h` autocorrelation `gamma(h)` of the observations, so it
//! rewards MAE-optimized and MSE-optimized forecasts alike.
//!
//! ```
//! use skillscore::prelude::*;
//!
//! let spec = SynthSpec { n: 2000, phi: 0.8, rho_target: 0.9, seed: 1, ..SynthSpec::default() };
//! let (obs, fcst) = spec.generate().unwrap();
//! let pairs = pair(&obs, &fcst).unwrap();
//! let report = verify(&pairs, &obs, 1, Normalizer::Mean).unwrap();
//! assert!(report.s_rmse_potential >= report.s_rmse_actual);
//! ```
//!
//! The guide in `book/` walks through each piece; its code listings are
//! compiled and run as doc-tests of this crate.

pub mod calibration;
pub mod ensemble;
mod error;
pub mod metrics;
pub mod reference;
pub mod series;
pub mod synth;

pub use error::{Degenerate, Error, Result};

pub mod prelude {
    pub use crate::calibration::{
        apply, fit, fit_mae_linear, fit_mse_linear, fit_variance_linear, LinearCalibration, Scheme,
    };
    pub use crate::ensemble::{evaluate_ensemble, pareto_front, scatter_export, EnsembleRow};
    pub use crate::metrics::{
        error_metrics, lag_autocorrelation, moments, pearson, MetricReport, MomentSummary,
        Normalizer,
    };
    pub use crate::reference::{
        climatology_forecast, cliper_rmse, fit_cliper, mase, persistence_forecast,
        potential_mse_skill, potential_rmse_skill, skill_score, verify, CliperModel, Directive,
        ReferenceStats, SkillReport,
    };
    pub use crate::series::{
        ingest_csv, lag_pairs, pair, ForecastSeries, IngestReport, ObservationSeries, PairedSeries,
    };
    pub use crate::synth::{gen_ar1, gen_ensemble, gen_forecast, EnsembleSpread, SynthSpec};
    pub use crate::{Degenerate, Error, Result};
}

// Book chapters, compiled and run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/calibration.md")]
    mod calibration {}
    #[doc = include_str!("../../../book/src/reference.md")]
    mod reference {}
    #[doc = include_str!("../../../book/src/potential_skill.md")]
    mod potential_skill {}
    #[doc = include_str!("../../../book/src/ensembles.md")]
    mod ensembles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
