//! Linear recalibration `f = a + b·f'` under three directives.
//!
//! * [`Scheme::Mse`]: ordinary least squares. The result is unbiased and its
//!   spread is `|rho|·sigma(x)`, never more than the observations.
//! * [`Scheme::Mae`]: least absolute deviations.
//! * [`Scheme::Variance`]: matches the mean and standard deviation of the
//!   observations.
//!
//! Fits are in-sample. Use [`PairedSeries::split`] to fit on one part of a
//! series and evaluate on another.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Degenerate, Error, Result};
use crate::metrics::{is_constant, mean};
use crate::series::PairedSeries;

/// Largest sample solved by exact enumeration; bigger samples use IRLS.
pub const LAD_EXACT_MAX_N: usize = 500;
/// Residual smoothing in the IRLS weights `1 / sqrt(r² + ε²)`.
pub const IRLS_EPSILON: f64 = 1e-8;
pub const IRLS_MAX_ITER: usize = 200;
/// Relative coefficient change below which IRLS stops.
pub const IRLS_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Mse,
    Mae,
    Variance,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Mse => "mse",
            Scheme::Mae => "mae",
            Scheme::Variance => "variance",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(Scheme::Mse),
            "mae" => Ok(Scheme::Mae),
            "variance" => Ok(Scheme::Variance),
            other => Err(Error::invalid(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearCalibration {
    pub intercept: f64,
    pub gain: f64,
    pub scheme: Scheme,
    pub fit_n: usize,
    /// False only when IRLS hit its iteration cap; the best iterate is kept.
    pub converged: bool,
}

impl LinearCalibration {
    pub fn identity(scheme: Scheme) -> Self {
        LinearCalibration {
            intercept: 0.0,
            gain: 1.0,
            scheme,
            fit_n: 0,
            converged: true,
        }
    }

    pub fn apply_one(&self, value: f64) -> f64 {
        self.intercept + self.gain * value
    }
}

/// Elementwise `a + b·value`. Non-finite inputs pass through as `NaN`-like values.
pub fn apply(c: &LinearCalibration, f_prime: &[f64]) -> Vec<f64> {
    f_prime.iter().map(|&v| c.apply_one(v)).collect()
}

pub fn fit(scheme: Scheme, p: &PairedSeries) -> Result<LinearCalibration> {
    match scheme {
        Scheme::Mse => fit_mse_linear(p),
        Scheme::Mae => fit_mae_linear(p),
        Scheme::Variance => fit_variance_linear(p),
    }
}

fn check_fit_input(p: &PairedSeries) -> Result<()> {
    if p.n() < 3 {
        return Err(Error::TooShort {
            len: p.n(),
            needed: 3,
        });
    }
    if is_constant(p.forecast()) {
        return Err(Degenerate::ConstantSeries("forecast").into());
    }
    Ok(())
}

struct CrossMoments {
    mean_f: f64,
    mean_x: f64,
    var_f: f64,
    var_x: f64,
    cov: f64,
}

fn cross_moments(f: &[f64], x: &[f64]) -> CrossMoments {
    let n = f.len() as f64;
    let mean_f = mean(f);
    let mean_x = mean(x);
    let (mut sff, mut sxx, mut sfx) = (0.0, 0.0, 0.0);
    for (f, x) in f.iter().zip(x) {
        let df = f - mean_f;
        let dx = x - mean_x;
        sff += df * df;
        sxx += dx * dx;
        sfx += df * dx;
    }
    CrossMoments {
        mean_f,
        mean_x,
        var_f: sff / n,
        var_x: sxx / n,
        cov: sfx / n,
    }
}

/// Least-squares line: `b = cov(f', x) / var(f')`, `a = mean(x) - b·mean(f')`.
pub fn fit_mse_linear(p: &PairedSeries) -> Result<LinearCalibration> {
    check_fit_input(p)?;
    let m = cross_moments(p.forecast(), p.observed());
    let gain = m.cov / m.var_f;
    Ok(LinearCalibration {
        intercept: m.mean_x - gain * m.mean_f,
        gain,
        scheme: Scheme::Mse,
        fit_n: p.n(),
        converged: true,
    })
}

/// Mean- and spread-matching line: `b = sigma(x) / sigma(f')`.
pub fn fit_variance_linear(p: &PairedSeries) -> Result<LinearCalibration> {
    check_fit_input(p)?;
    let m = cross_moments(p.forecast(), p.observed());
    let gain = (m.var_x / m.var_f).sqrt();
    Ok(LinearCalibration {
        intercept: m.mean_x - gain * m.mean_f,
        gain,
        scheme: Scheme::Variance,
        fit_n: p.n(),
        converged: true,
    })
}

/// Least-absolute-deviations line.
///
/// Exact for `n <= LAD_EXACT_MAX_N`, IRLS above.
pub fn fit_mae_linear(p: &PairedSeries) -> Result<LinearCalibration> {
    check_fit_input(p)?;
    if p.n() <= LAD_EXACT_MAX_N {
        fit_mae_exact(p)
    } else {
        fit_mae_irls(p)
    }
}

pub(crate) fn sum_abs_residuals(f: &[f64], x: &[f64], a: f64, b: f64) -> f64 {
    f.iter().zip(x).map(|(f, x)| (x - a - b * f).abs()).sum()
}

fn lower_upper_median(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        (v[n / 2], v[n / 2])
    } else {
        (v[n / 2 - 1], v[n / 2])
    }
}

/// Picks the best `(a, b)` by objective, then smallest `|b|`, then smallest `|a|`.
fn select_best(f: &[f64], x: &[f64], candidates: &[(f64, f64)]) -> (f64, f64, f64) {
    let scale: f64 = x
        .iter()
        .map(|v| v.abs())
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let tol = 1e-11 * scale;
    let scored: Vec<(f64, f64, f64)> = candidates
        .iter()
        .map(|&(a, b)| (sum_abs_residuals(f, x, a, b), a, b))
        .collect();
    let best = scored.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    scored
        .into_iter()
        .filter(|s| s.0 <= best + tol)
        .min_by(|l, r| {
            l.2.abs()
                .total_cmp(&r.2.abs())
                .then(l.1.abs().total_cmp(&r.1.abs()))
                .then(l.0.total_cmp(&r.0))
        })
        .expect("candidate set is never empty")
}

/// Exact LAD by searching lines through pairs of sample points.
///
/// An optimal two-parameter LAD line interpolates at least two points with
/// distinct `f'`. For lines pinned at anchor `i`, the objective in the slope is
/// a weighted sum of `|s_j - b|` with `s_j` the slope to point `j` and weight
/// `|f'_j - f'_i|`, so the best slopes through `i` sit at the weighted median.
/// The median and its distinct neighbours are kept as candidates for every
/// anchor, alongside the zero-slope lines through the median observations.
pub fn fit_mae_exact(p: &PairedSeries) -> Result<LinearCalibration> {
    check_fit_input(p)?;
    let (f, x) = (p.forecast(), p.observed());
    let n = f.len();
    let (lo, hi) = lower_upper_median(x);
    let mut candidates = vec![(lo, 0.0), (hi, 0.0)];
    let mut slopes: Vec<(f64, f64)> = Vec::with_capacity(n);

    for i in 0..n {
        slopes.clear();
        slopes.extend((0..n).filter(|&j| f[j] != f[i]).map(|j| {
            let df = f[j] - f[i];
            ((x[j] - x[i]) / df, df.abs())
        }));
        slopes.sort_by(|l, r| l.0.total_cmp(&r.0));
        let mut distinct: Vec<(f64, f64)> = Vec::with_capacity(slopes.len());
        for &(s, w) in slopes.iter() {
            match distinct.last_mut() {
                Some(last) if last.0 == s => last.1 += w,
                _ => distinct.push((s, w)),
            }
        }
        let total: f64 = distinct.iter().map(|d| d.1).sum();
        let mut cum = 0.0;
        let k = distinct
            .iter()
            .position(|d| {
                cum += d.1;
                cum >= 0.5 * total
            })
            .unwrap_or(distinct.len() - 1);
        for &(b, _) in &distinct[k.saturating_sub(1)..(k + 2).min(distinct.len())] {
            candidates.push((x[i] - b * f[i], b));
        }
    }

    let (_, a, b) = select_best(f, x, &candidates);
    Ok(LinearCalibration {
        intercept: a,
        gain: b,
        scheme: Scheme::Mae,
        fit_n: n,
        converged: true,
    })
}

/// LAD by iteratively reweighted least squares, started from the MSE fit.
///
/// Returns the iterate with the lowest absolute loss. `converged` is false if
/// the coefficient change never dropped below [`IRLS_TOLERANCE`].
pub fn fit_mae_irls(p: &PairedSeries) -> Result<LinearCalibration> {
    let start = fit_mse_linear(p)?;
    let (f, x) = (p.forecast(), p.observed());
    let (mut a, mut b) = (start.intercept, start.gain);
    let mut best = (sum_abs_residuals(f, x, a, b), a, b);
    let mut converged = false;
    let mut weights = vec![0.0; f.len()];

    for _ in 0..IRLS_MAX_ITER {
        for ((w, f), x) in weights.iter_mut().zip(f).zip(x) {
            let r = x - a - b * f;
            *w = 1.0 / (r * r + IRLS_EPSILON * IRLS_EPSILON).sqrt();
        }
        let Some((na, nb)) = weighted_line(f, x, &weights) else {
            break;
        };
        let step_a = (na - a).abs() <= IRLS_TOLERANCE * (1.0 + a.abs());
        let step_b = (nb - b).abs() <= IRLS_TOLERANCE * (1.0 + b.abs());
        a = na;
        b = nb;
        let loss = sum_abs_residuals(f, x, a, b);
        if loss.partial_cmp(&best.0) == Some(Ordering::Less) {
            best = (loss, a, b);
        }
        if step_a && step_b {
            converged = true;
            break;
        }
    }

    Ok(LinearCalibration {
        intercept: best.1,
        gain: best.2,
        scheme: Scheme::Mae,
        fit_n: f.len(),
        converged,
    })
}

fn weighted_line(f: &[f64], x: &[f64], w: &[f64]) -> Option<(f64, f64)> {
    let total: f64 = w.iter().sum();
    let mf = w.iter().zip(f).map(|(w, f)| w * f).sum::<f64>() / total;
    let mx = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / total;
    let (mut sff, mut sfx) = (0.0, 0.0);
    for ((w, f), x) in w.iter().zip(f).zip(x) {
        sff += w * (f - mf) * (f - mf);
        sfx += w * (f - mf) * (x - mx);
    }
    let b = sfx / sff;
    let a = mx - b * mf;
    (a.is_finite() && b.is_finite()).then_some((a, b))
}
