//! Reference forecasts and skill scores.
//!
//! The reference for every skill score here is CLIPER, the optimal convex
//! combination of climatology and `h`-step persistence. Under the MSE
//! directive its weight is the lag-`h` autocorrelation `gamma(h)` and its RMSE
//! is `sqrt(1 - gamma²)·sigma(x)`. A forecast `f'` that is linearly calibrated
//! for minimum MSE reaches RMSE `sqrt(1 - rho²)·sigma(x)`, so its RMSE skill
//! against CLIPER follows from `rho` and `gamma` alone:
//!
//! ```text
//! s_rmse_potential = 1 - sqrt((1 - rho²) / (1 - gamma²))
//! s_mse_potential  = 1 - (1 - rho²) / (1 - gamma²)
//! ```
//!
//! The potential score is what `f'` would attain after MSE calibration, not
//! what it attains as issued; [`verify`] reports both.
//!
//! CLIPER is built on the lag overlap `t = h..n`. Persistence anomalies are
//! rescaled by `sigma(x[t]) / sigma(x[t-h])` so the MSE-directive CLIPER is
//! exactly the least-squares calibration of persistence on that sample. For a
//! stationary series the rescaling factor tends to one.

use serde::{Serialize, Serializer};

use crate::error::{Degenerate, Error, Result};
use crate::metrics::{
    correlation, error_metrics, lag_autocorrelation, mae, mean, moments, pearson, MetricReport,
    Normalizer,
};
use crate::series::{lag_pairs, ForecastSeries, ObservationSeries, PairedSeries};

/// Bracket width at which the MAE-directive weight search stops.
pub const CLIPER_WEIGHT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Directive {
    Mse,
    Mae,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliperModel {
    /// Mean of `x[t]` over the lag overlap.
    pub climatology_mean: f64,
    /// Mean of `x[t-h]` over the lag overlap.
    pub persistence_mean: f64,
    /// `sigma(x[t]) / sigma(x[t-h])` over the lag overlap.
    pub persistence_scale: f64,
    pub weight_w: f64,
    pub horizon_h: usize,
    pub directive: Directive,
    pub weight_clipped: bool,
    pub unclipped_weight: f64,
    pub fit_n: usize,
}

impl CliperModel {
    pub fn forecast_from_lagged(&self, lagged: f64) -> f64 {
        self.climatology_mean
            + self.weight_w * self.persistence_scale * (lagged - self.persistence_mean)
    }

    /// CLIPER forecasts against observations over the lag overlap.
    pub fn paired(&self, obs: &ObservationSeries) -> Result<PairedSeries> {
        let lagged = lag_pairs(obs, self.horizon_h)?;
        let f = lagged
            .forecast()
            .iter()
            .map(|&v| self.forecast_from_lagged(v))
            .collect();
        PairedSeries::new(f, lagged.observed().to_vec())
    }

    /// CLIPER as a forecast column aligned to `obs`; the first `h` rows are missing.
    pub fn forecast_column(&self, obs: &ObservationSeries, name: &str) -> ForecastSeries {
        let h = self.horizon_h.min(obs.len());
        let mut values = vec![f64::NAN; h];
        values.extend(
            obs.values()[..obs.len() - h]
                .iter()
                .map(|&v| self.forecast_from_lagged(v)),
        );
        ForecastSeries::new(name, values)
    }
}

/// Constant forecast equal to the observation mean.
pub fn climatology_forecast(obs: &ObservationSeries) -> Vec<f64> {
    vec![mean(obs.values()); obs.len()]
}

/// `h`-step persistence, paired with the observations it forecasts.
pub fn persistence_forecast(obs: &ObservationSeries, h: usize) -> Result<PairedSeries> {
    lag_pairs(obs, h)
}

pub fn fit_cliper(obs: &ObservationSeries, h: usize, directive: Directive) -> Result<CliperModel> {
    let gamma = lag_autocorrelation(obs, h)?;
    let lagged = lag_pairs(obs, h)?;
    let mp = moments(lagged.forecast())?;
    let mx = moments(lagged.observed())?;
    let mut model = CliperModel {
        climatology_mean: mx.mean,
        persistence_mean: mp.mean,
        persistence_scale: mx.std / mp.std,
        weight_w: gamma.clamp(0.0, 1.0),
        horizon_h: h,
        directive,
        weight_clipped: false,
        unclipped_weight: gamma,
        fit_n: lagged.n(),
    };
    match directive {
        Directive::Mse => {
            model.weight_clipped = model.weight_w != gamma;
        }
        Directive::Mae => {
            let loss = |w: f64| {
                let m = CliperModel {
                    weight_w: w,
                    ..model.clone()
                };
                lagged
                    .forecast()
                    .iter()
                    .zip(lagged.observed())
                    .map(|(&p, x)| (x - m.forecast_from_lagged(p)).abs())
                    .sum::<f64>()
            };
            let searched = golden_section(&loss, 0.0, 1.0, CLIPER_WEIGHT_TOLERANCE);
            // The search result is only accurate to the bracket width; the
            // MSE weight and the end points are exact competitors.
            let w = [searched, model.weight_w, 0.0, 1.0]
                .into_iter()
                .map(|w| (loss(w), w))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .map(|(_, w)| w)
                .unwrap_or(searched);
            model.weight_w = w;
            model.unclipped_weight = w;
        }
    }
    Ok(model)
}

/// Minimizes a unimodal function on `[lo, hi]`.
pub(crate) fn golden_section(g: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > tol {
        if gc <= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    0.5 * (a + b)
}

/// Closed-form RMSE of the MSE-directive CLIPER: `sqrt(1 - gamma²)·sigma`.
pub fn cliper_rmse(sigma_x: f64, gamma_h: f64) -> Result<f64> {
    if !sigma_x.is_finite() || sigma_x < 0.0 {
        return Err(Error::invalid(format!(
            "sigma must be non-negative, got {sigma_x}"
        )));
    }
    check_unit(gamma_h, "gamma")?;
    Ok((1.0 - gamma_h * gamma_h).max(0.0).sqrt() * sigma_x)
}

fn check_unit(v: f64, what: &str) -> Result<()> {
    if v.is_nan() || v.abs() > 1.0 + 1e-12 {
        return Err(Error::invalid(format!(
            "{what} must lie in [-1, 1], got {v}"
        )));
    }
    Ok(())
}

/// Generic skill `(a_f - a_r) / (a_p - a_r)`.
pub fn skill_score(a_f: f64, a_r: f64, a_p: f64) -> Result<f64> {
    if a_r == a_p {
        return Err(Degenerate::ReferenceEqualsPerfect.into());
    }
    Ok((a_f - a_r) / (a_p - a_r))
}

fn error_variance_ratio(rho: f64, gamma_h: f64) -> Result<f64> {
    check_unit(rho, "rho")?;
    check_unit(gamma_h, "gamma")?;
    if gamma_h.abs() >= 1.0 {
        return Err(Degenerate::PerfectReference.into());
    }
    Ok((1.0 - rho * rho).max(0.0) / (1.0 - gamma_h * gamma_h))
}

/// RMSE skill after MSE-optimal linear calibration, from `rho` and `gamma(h)`.
pub fn potential_rmse_skill(rho: f64, gamma_h: f64) -> Result<f64> {
    Ok(1.0 - error_variance_ratio(rho, gamma_h)?.sqrt())
}

/// MSE counterpart of [`potential_rmse_skill`].
pub fn potential_mse_skill(rho: f64, gamma_h: f64) -> Result<f64> {
    Ok(1.0 - error_variance_ratio(rho, gamma_h)?)
}

/// MAE of the forecast over the MAE of one-step persistence on `obs`.
pub fn mase(p: &PairedSeries, obs: &ObservationSeries) -> Result<f64> {
    if obs.len() < 3 {
        return Err(Error::TooShort {
            len: obs.len(),
            needed: 3,
        });
    }
    let naive = lag_pairs(obs, 1)?;
    let denom = mae(naive.forecast(), naive.observed());
    if denom == 0.0 {
        return Err(Degenerate::ZeroPersistenceError.into());
    }
    Ok(mae(p.forecast(), p.observed()) / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Warning {
    /// `gamma(h)` lies outside `[0, 1]`; the convex CLIPER differs from the
    /// closed-form RMSE used as skill denominator.
    WeightClipped,
    /// `rho < 0`; the potential score assumes a sign-flipping calibration.
    NegativeCorrelation,
}

impl Warning {
    pub fn as_str(self) -> &'static str {
        match self {
            Warning::WeightClipped => "weight_clipped",
            Warning::NegativeCorrelation => "negative_correlation",
        }
    }
}

impl Serialize for Warning {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// Everything a forecast is compared against, derived from the observations only.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceStats {
    pub horizon_h: usize,
    pub gamma_h: f64,
    /// Standard deviation of `x[t]` over the lag overlap.
    pub sigma_x: f64,
    pub n_overlap: usize,
    pub cliper_mse: CliperModel,
    pub cliper_mae: CliperModel,
    pub rmse_cliper: f64,
    pub mae_cliper: f64,
    pub persistence_mae: f64,
}

impl ReferenceStats {
    pub fn new(obs: &ObservationSeries, h: usize) -> Result<Self> {
        let cliper_mse = fit_cliper(obs, h, Directive::Mse)?;
        let cliper_mae = fit_cliper(obs, h, Directive::Mae)?;
        let gamma_h = cliper_mse.unclipped_weight;
        if gamma_h.abs() >= 1.0 {
            return Err(Degenerate::PerfectReference.into());
        }
        let lagged = lag_pairs(obs, h)?;
        let sigma_x = moments(lagged.observed())?.std;
        let mae_pairs = cliper_mae.paired(obs)?;
        let naive = lag_pairs(obs, 1)?;
        Ok(ReferenceStats {
            horizon_h: h,
            gamma_h,
            sigma_x,
            n_overlap: lagged.n(),
            rmse_cliper: cliper_rmse(sigma_x, gamma_h)?,
            mae_cliper: mae(mae_pairs.forecast(), mae_pairs.observed()),
            persistence_mae: mae(naive.forecast(), naive.observed()),
            cliper_mse,
            cliper_mae,
        })
    }

    /// Scores one forecast against this reference.
    pub fn score(&self, p: &PairedSeries, normalizer: Normalizer) -> Result<SkillReport> {
        let metrics = error_metrics(p, normalizer.resolve(p)?)?;
        let rho = pearson(p)?;
        self.report(&metrics, rho)
    }

    pub(crate) fn report(&self, m: &MetricReport, rho: f64) -> Result<SkillReport> {
        if self.persistence_mae == 0.0 {
            return Err(Degenerate::ZeroPersistenceError.into());
        }
        let mut warnings = Vec::new();
        if self.cliper_mse.weight_clipped {
            warnings.push(Warning::WeightClipped);
        }
        if rho < 0.0 {
            warnings.push(Warning::NegativeCorrelation);
        }
        Ok(SkillReport {
            n: m.n,
            n_reference: self.n_overlap,
            horizon_h: self.horizon_h,
            rho,
            gamma_h: self.gamma_h,
            sigma_x: self.sigma_x,
            rmse_f: m.rmse,
            mae_f: m.mae,
            nmae: m.nmae,
            nrmse: m.nrmse,
            rmse_cliper: self.rmse_cliper,
            mae_cliper: self.mae_cliper,
            s_rmse_actual: skill_score(m.rmse, self.rmse_cliper, 0.0)?,
            s_mae_actual: skill_score(m.mae, self.mae_cliper, 0.0)?,
            s_rmse_potential: potential_rmse_skill(rho, self.gamma_h)?,
            s_mse_potential: potential_mse_skill(rho, self.gamma_h)?,
            mase: m.mae / self.persistence_mae,
            warnings,
        })
    }
}

/// Full verification result for one forecast.
///
/// Skill values are fractions; `1` is perfect and `0` matches the reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkillReport {
    /// Valid forecast pairs.
    pub n: usize,
    /// Pairs in the lag overlap the reference is built on.
    #[serde(skip)]
    pub n_reference: usize,
    pub horizon_h: usize,
    pub rho: f64,
    pub gamma_h: f64,
    pub sigma_x: f64,
    pub rmse_f: f64,
    pub mae_f: f64,
    pub nmae: f64,
    pub nrmse: f64,
    pub rmse_cliper: f64,
    pub mae_cliper: f64,
    pub s_rmse_actual: f64,
    pub s_mae_actual: f64,
    pub s_rmse_potential: f64,
    pub s_mse_potential: f64,
    pub mase: f64,
    pub warnings: Vec<Warning>,
}

/// Scores forecast pairs `p` against CLIPER built from `obs` at horizon `h`.
pub fn verify(
    p: &PairedSeries,
    obs: &ObservationSeries,
    h: usize,
    normalizer: Normalizer,
) -> Result<SkillReport> {
    ReferenceStats::new(obs, h)?.score(p, normalizer)
}

/// Correlation of CLIPER with the observations over the overlap.
pub fn cliper_correlation(model: &CliperModel, obs: &ObservationSeries) -> Result<f64> {
    let p = model.paired(obs)?;
    correlation(p.forecast(), p.observed())
}
