//! Seeded synthetic observations and forecasts with known statistics.
//!
//! Observations follow a stationary Gaussian AR(1) process, so the lag-1
//! autocorrelation is `phi`. Forecasts are `bias + gain·(x + noise)` with the
//! noise variance chosen so the population correlation with `x` equals the
//! target. Output is reproducible for a given seed within one build; no
//! cross-version stream stability is promised.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::metrics::{mean, moments};
use crate::series::{ForecastSeries, ObservationSeries};

const OBS_STREAM: u64 = 0;
const FORECAST_STREAM: u64 = 1;
const ENSEMBLE_STREAM: u64 = 2;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Parameters for one synthetic observation/forecast pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    pub phi: f64,
    pub mu: f64,
    pub sigma: f64,
    pub rho_target: f64,
    pub bias: f64,
    pub gain: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n: 1000,
            phi: 0.8,
            mu: 10.0,
            sigma: 3.0,
            rho_target: 0.8,
            bias: 0.0,
            gain: 1.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn observations(&self) -> Result<ObservationSeries> {
        gen_ar1(self.n, self.phi, self.mu, self.sigma, self.seed)
    }

    pub fn generate(&self) -> Result<(ObservationSeries, ForecastSeries)> {
        let obs = self.observations()?;
        let fcst = gen_forecast(&obs, self.rho_target, self.bias, self.gain, self.seed)?;
        Ok((obs, fcst))
    }
}

pub fn gen_ar1(n: usize, phi: f64, mu: f64, sigma: f64, seed: u64) -> Result<ObservationSeries> {
    if n < 10 {
        return Err(Error::invalid(format!("n must be at least 10, got {n}")));
    }
    if phi.is_nan() || phi.abs() >= 1.0 {
        return Err(Error::invalid(format!(
            "phi must lie in (-1, 1), got {phi}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) || !mu.is_finite() {
        return Err(Error::invalid("sigma must be positive and mu finite"));
    }
    let mut rng = rng(seed, OBS_STREAM);
    let innovation = sigma * (1.0 - phi * phi).sqrt();
    let mut values = Vec::with_capacity(n);
    let z: f64 = rng.sample(StandardNormal);
    values.push(mu + sigma * z);
    for t in 1..n {
        let z: f64 = rng.sample(StandardNormal);
        values.push(mu + phi * (values[t - 1] - mu) + innovation * z);
    }
    ObservationSeries::new(values)
}

/// `bias + gain·(x + noise)`, noise standard deviation `sigma(x)·sqrt(1/rho² - 1)`.
///
/// `rho_target = 1` is accepted as the noise-free limit.
pub fn gen_forecast(
    obs: &ObservationSeries,
    rho_target: f64,
    bias: f64,
    gain: f64,
    seed: u64,
) -> Result<ForecastSeries> {
    if !(rho_target > 0.0 && rho_target <= 1.0) {
        return Err(Error::invalid(format!(
            "rho_target must lie in (0, 1], got {rho_target}"
        )));
    }
    if gain == 0.0 || !gain.is_finite() || !bias.is_finite() {
        return Err(Error::invalid(
            "gain must be finite and non-zero, bias finite",
        ));
    }
    let sx = moments(obs.values())?.std;
    if sx == 0.0 {
        return Err(Error::invalid("observations are constant"));
    }
    let noise_std = sx * (1.0 / (rho_target * rho_target) - 1.0).max(0.0).sqrt();
    let mut rng = rng(seed, FORECAST_STREAM);
    let values = obs
        .values()
        .iter()
        .map(|&x| {
            let z: f64 = rng.sample(StandardNormal);
            bias + gain * (x + noise_std * z)
        })
        .collect();
    Ok(ForecastSeries::new("fcst", values))
}

/// Ranges for ensemble member perturbations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpread {
    /// Bias offsets drawn from `±bias_frac·mean(x)`.
    pub bias_frac: f64,
    pub gain_min: f64,
    pub gain_max: f64,
    /// Extra noise standard deviation drawn from `[0, noise_frac·sigma(x)]`.
    pub noise_frac: f64,
}

impl Default for EnsembleSpread {
    fn default() -> Self {
        EnsembleSpread {
            bias_frac: 0.3,
            gain_min: 0.6,
            gain_max: 1.4,
            noise_frac: 0.5,
        }
    }
}

impl EnsembleSpread {
    pub fn none() -> Self {
        EnsembleSpread {
            bias_frac: 0.0,
            gain_min: 1.0,
            gain_max: 1.0,
            noise_frac: 0.0,
        }
    }
}

pub fn gen_ensemble(
    obs: &ObservationSeries,
    base: &ForecastSeries,
    count: usize,
    seed: u64,
) -> Result<Vec<ForecastSeries>> {
    gen_ensemble_with(obs, base, count, EnsembleSpread::default(), seed)
}

/// `count` members `bias_k + gain_k·base + noise_k·z`, named `<base>_<k>`.
pub fn gen_ensemble_with(
    obs: &ObservationSeries,
    base: &ForecastSeries,
    count: usize,
    spread: EnsembleSpread,
    seed: u64,
) -> Result<Vec<ForecastSeries>> {
    if count < 2 {
        return Err(Error::invalid(format!(
            "ensemble needs at least 2 members, got {count}"
        )));
    }
    if base.values.len() != obs.len() {
        return Err(Error::LengthMismatch {
            left: obs.len(),
            right: base.values.len(),
        });
    }
    if !(spread.bias_frac >= 0.0 && spread.noise_frac >= 0.0 && spread.gain_min <= spread.gain_max)
    {
        return Err(Error::invalid("invalid ensemble spread"));
    }
    let level = mean(obs.values());
    let sx = moments(obs.values())?.std;
    let mut rng = rng(seed, ENSEMBLE_STREAM);
    let uniform = |lo: f64, hi: f64, rng: &mut ChaCha8Rng| lo + (hi - lo) * rng.gen::<f64>();
    let mut members = Vec::with_capacity(count);
    for k in 0..count {
        let bias_range = spread.bias_frac * level.abs();
        let bias = uniform(-bias_range, bias_range, &mut rng);
        let gain = uniform(spread.gain_min, spread.gain_max, &mut rng);
        let noise = uniform(0.0, spread.noise_frac * sx, &mut rng);
        let values = base
            .values
            .iter()
            .map(|&f| {
                let z: f64 = rng.sample(StandardNormal);
                bias + gain * f + noise * z
            })
            .collect();
        members.push(ForecastSeries::new(format!("{}_{k}", base.name), values));
    }
    Ok(members)
}
