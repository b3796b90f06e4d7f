//! Moments, deterministic error metrics and correlation.
//!
//! Every second moment uses the population convention (divide by `n`). Under
//! that convention the closed forms in [`crate::reference`] hold exactly on
//! finite samples rather than only asymptotically.

use serde::Serialize;

use crate::error::{Degenerate, Error, Result};
use crate::series::{lag_pairs, ObservationSeries, PairedSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSummary {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n: usize,
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub(crate) fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

/// Mean and population standard deviation.
pub fn moments(values: &[f64]) -> Result<MomentSummary> {
    if values.is_empty() {
        return Err(Error::NoValidRows);
    }
    if is_constant(values) {
        return Ok(MomentSummary {
            mean: values[0],
            std: 0.0,
            n: values.len(),
        });
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    Ok(MomentSummary {
        mean: m,
        std: var.sqrt(),
        n: values.len(),
    })
}

/// Denominator for nMAE and nRMSE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalizer {
    /// Mean observation over the valid pairs being scored.
    Mean,
    /// A fixed value such as installed capacity.
    Fixed(f64),
}

impl Normalizer {
    pub fn resolve(self, p: &PairedSeries) -> Result<f64> {
        let v = match self {
            Normalizer::Mean => mean(p.observed()),
            Normalizer::Fixed(v) => v,
        };
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Degenerate::NonPositiveNormalizer(v).into())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub bias: f64,
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub nmae: f64,
    pub nrmse: f64,
    /// `None` when either side is constant or fewer than three pairs exist.
    pub rho: Option<f64>,
    pub n: usize,
    pub normalizer: f64,
}

pub fn error_metrics(p: &PairedSeries, normalizer: f64) -> Result<MetricReport> {
    if !(normalizer > 0.0 && normalizer.is_finite()) {
        return Err(Degenerate::NonPositiveNormalizer(normalizer).into());
    }
    let n = p.n() as f64;
    let (mut sum, mut sum_abs, mut sum_sq) = (0.0, 0.0, 0.0);
    for (f, x) in p.forecast().iter().zip(p.observed()) {
        let e = f - x;
        sum += e;
        sum_abs += e.abs();
        sum_sq += e * e;
    }
    let mae = sum_abs / n;
    let mse = sum_sq / n;
    let rmse = mse.sqrt();
    Ok(MetricReport {
        bias: sum / n,
        mae,
        mse,
        rmse,
        nmae: mae / normalizer,
        nrmse: rmse / normalizer,
        rho: pearson(p).ok(),
        n: p.n(),
        normalizer,
    })
}

/// Mean absolute error of `f` against `x`.
pub(crate) fn mae(f: &[f64], x: &[f64]) -> f64 {
    f.iter().zip(x).map(|(f, x)| (f - x).abs()).sum::<f64>() / f.len() as f64
}

#[cfg(test)]
pub(crate) fn rmse(f: &[f64], x: &[f64]) -> f64 {
    (f.iter().zip(x).map(|(f, x)| (f - x) * (f - x)).sum::<f64>() / f.len() as f64).sqrt()
}

/// Pearson correlation with population moments, clamped to `[-1, 1]`.
pub fn pearson(p: &PairedSeries) -> Result<f64> {
    if p.n() < 3 {
        return Err(Error::TooShort {
            len: p.n(),
            needed: 3,
        });
    }
    correlation(p.forecast(), p.observed())
}

pub(crate) fn correlation(f: &[f64], x: &[f64]) -> Result<f64> {
    if is_constant(f) {
        return Err(Degenerate::ConstantSeries("forecast").into());
    }
    if is_constant(x) {
        return Err(Degenerate::ConstantSeries("observation").into());
    }
    let mf = mean(f);
    let mx = mean(x);
    let (mut sff, mut sxx, mut sfx) = (0.0, 0.0, 0.0);
    for (f, x) in f.iter().zip(x) {
        let df = f - mf;
        let dx = x - mx;
        sff += df * df;
        sxx += dx * dx;
        sfx += df * dx;
    }
    let denom = (sff * sxx).sqrt();
    if denom == 0.0 {
        return Err(Degenerate::ConstantSeries("forecast or observation").into());
    }
    Ok((sfx / denom).clamp(-1.0, 1.0))
}

/// Lag-`h` autocorrelation: Pearson correlation of the overlapping pairs
/// `(x[t-h], x[t])`, each side with its own mean and spread.
pub fn lag_autocorrelation(obs: &ObservationSeries, h: usize) -> Result<f64> {
    if h == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    if obs.len() < h + 3 {
        return Err(Error::TooShort {
            len: obs.len(),
            needed: h + 3,
        });
    }
    let lagged = lag_pairs(obs, h)?;
    correlation(lagged.forecast(), lagged.observed()).map_err(|e| match e {
        Error::Degenerate(Degenerate::ConstantSeries(_)) => {
            Degenerate::ConstantSeries("observation overlap").into()
        }
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn paired(f: &[f64], x: &[f64]) -> PairedSeries {
        PairedSeries::new(f.to_vec(), x.to_vec()).unwrap()
    }

    fn obs(v: &[f64]) -> ObservationSeries {
        ObservationSeries::new(v.to_vec()).unwrap()
    }

    #[test]
    fn moments_examples() {
        let m = moments(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.mean, 2.5);
        assert_relative_eq!(m.std, 1.25f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(m.std, 1.118034, epsilon = 1e-6);
        let m = moments(&[5.0, 5.0]).unwrap();
        assert_eq!((m.mean, m.std), (5.0, 0.0));
        let m = moments(&[0.1, 0.1, 0.1]).unwrap();
        assert_eq!((m.mean, m.std), (0.1, 0.0));
        let m = moments(&[7.0]).unwrap();
        assert_eq!((m.mean, m.std, m.n), (7.0, 0.0, 1));
        assert!(moments(&[]).is_err());
    }

    #[test]
    fn error_metric_examples() {
        let p = paired(&[2.0, 2.0, 4.0, 4.0], &[1.0, 2.0, 3.0, 4.0]);
        let r = error_metrics(&p, 2.5).unwrap();
        assert_eq!(r.bias, 0.5);
        assert_eq!(r.mae, 0.5);
        assert_eq!(r.mse, 0.5);
        assert_relative_eq!(r.rmse, 0.5f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(r.nmae, 0.2, epsilon = 1e-15);
        assert_relative_eq!(r.nrmse, r.rmse / 2.5);
        assert_relative_eq!(r.rho.unwrap(), 2.0 / 5f64.sqrt(), epsilon = 1e-12);

        let x = [1.0, 4.0, 2.0, 8.0];
        let r = error_metrics(&paired(&x, &x), 1.0).unwrap();
        assert_eq!((r.bias, r.mae, r.mse, r.rmse), (0.0, 0.0, 0.0, 0.0));

        let shifted: Vec<f64> = x.iter().map(|v| v - 1.5).collect();
        let r = error_metrics(&paired(&shifted, &x), 1.0).unwrap();
        assert_eq!((r.bias, r.mae, r.rmse), (-1.5, 1.5, 1.5));
    }

    #[test]
    fn error_metrics_rejects_bad_normalizer() {
        let p = paired(&[1.0], &[1.0]);
        assert!(error_metrics(&p, 0.0).unwrap_err().is_degenerate());
        assert!(error_metrics(&p, -1.0).is_err());
        assert!(error_metrics(&p, f64::NAN).is_err());
        assert_eq!(error_metrics(&p, 1.0).unwrap().rho, None);
    }

    #[test]
    fn constant_forecast_has_undefined_rho() {
        let p = paired(&[3.0, 3.0, 3.0], &[1.0, 2.0, 3.0]);
        assert_eq!(error_metrics(&p, 1.0).unwrap().rho, None);
        assert!(matches!(
            pearson(&p),
            Err(Error::Degenerate(Degenerate::ConstantSeries("forecast")))
        ));
    }

    #[test]
    fn pearson_examples() {
        let p = paired(&[2.0, 2.0, 4.0, 4.0], &[1.0, 2.0, 3.0, 4.0]);
        assert_relative_eq!(pearson(&p).unwrap(), 0.894427, epsilon = 1e-6);
        let x = [0.3, 1.7, -2.0, 5.5];
        let f: Vec<f64> = x.iter().map(|v| 2.0 + 3.0 * v).collect();
        assert_relative_eq!(pearson(&paired(&f, &x)).unwrap(), 1.0, epsilon = 1e-12);
        assert!(pearson(&paired(&[1.0, 2.0], &[1.0, 2.0])).is_err());
    }

    #[test]
    fn pearson_of_series_with_itself_is_exactly_one() {
        let x = [0.1, 0.7, 0.3, 0.9, 0.2];
        assert_eq!(pearson(&paired(&x, &x)).unwrap(), 1.0);
    }

    #[test]
    fn autocorrelation_examples() {
        let a = lag_autocorrelation(&obs(&[1.0, 2.0, 3.0, 4.0, 5.0]), 1).unwrap();
        assert_relative_eq!(a, 1.0, epsilon = 1e-15);
        let alt = obs(&[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert_relative_eq!(lag_autocorrelation(&alt, 2).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(lag_autocorrelation(&alt, 1).unwrap(), -1.0, epsilon = 1e-15);
        assert!(matches!(
            lag_autocorrelation(&obs(&[1.0, 2.0, 3.0]), 1),
            Err(Error::TooShort { .. })
        ));
        assert!(lag_autocorrelation(&obs(&[1.0, 1.0, 1.0, 1.0, 2.0]), 1).is_err());
    }

    #[test]
    fn normalizer_resolution() {
        let p = paired(&[1.0, 2.0], &[2.0, 4.0]);
        assert_eq!(Normalizer::Mean.resolve(&p).unwrap(), 3.0);
        assert_eq!(Normalizer::Fixed(10.0).resolve(&p).unwrap(), 10.0);
        let neg = paired(&[1.0, 2.0], &[-2.0, -4.0]);
        assert!(Normalizer::Mean.resolve(&neg).unwrap_err().is_degenerate());
    }

    fn pairs_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (3usize..60).prop_flat_map(|n| {
            (
                prop::collection::vec(-100.0f64..100.0, n),
                prop::collection::vec(-100.0f64..100.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn metric_report_invariants((f, x) in pairs_strategy()) {
            let p = paired(&f, &x);
            let r = error_metrics(&p, 7.0).unwrap();
            prop_assert_eq!(r.rmse, r.mse.sqrt());
            prop_assert!(r.mae <= r.rmse * (1.0 + 1e-12));
            prop_assert!(r.bias.abs() <= r.mae * (1.0 + 1e-12));
            prop_assert_eq!(r.nmae, r.mae / 7.0);
            if let Some(rho) = r.rho {
                prop_assert!((-1.0..=1.0).contains(&rho));
            }
        }

        #[test]
        fn pearson_affine_invariance(
            (f, x) in pairs_strategy(),
            a in -50.0f64..50.0,
            b in 0.01f64..20.0,
        ) {
            let base = paired(&f, &x);
            prop_assume!(pearson(&base).is_ok());
            let shifted: Vec<f64> = f.iter().map(|v| a + b * v).collect();
            let flipped: Vec<f64> = f.iter().map(|v| a - b * v).collect();
            let r0 = pearson(&base).unwrap();
            let r1 = pearson(&paired(&shifted, &x)).unwrap();
            let r2 = pearson(&paired(&flipped, &x)).unwrap();
            prop_assert!((r0 - r1).abs() <= 1e-12);
            prop_assert!((r0 + r2).abs() <= 1e-12);
        }

        #[test]
        fn autocorrelation_is_pearson_of_lag_pairs(
            x in prop::collection::vec(-10.0f64..10.0, 8..50),
            h in 1usize..5,
        ) {
            let o = obs(&x);
            let lagged = lag_pairs(&o, h).unwrap();
            match (lag_autocorrelation(&o, h), pearson(&lagged)) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
            }
        }

        #[test]
        fn std_zero_iff_constant(x in prop::collection::vec(-1e3f64..1e3, 1..30)) {
            let m = moments(&x).unwrap();
            prop_assert!(m.std >= 0.0);
            prop_assert_eq!(m.std == 0.0, is_constant(&x));
        }
    }
}
