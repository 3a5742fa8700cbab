//! Residual diagnostics: quantile residuals, correlograms, portmanteau
//! and normality statistics, and simulated envelopes for the QQ plot.
//!
//! Quantile residuals map each standardized residual through the kernel's
//! CDF and the standard normal quantile, so a correctly specified model
//! yields iid standard normal values whatever the kernel.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::{durbin_levinson, fit, FitOptions, FitResult};
use crate::kernels::{chi_square_sf, normal_quantile, std_normal, KernelFamily};
use crate::model::{recurse_state, simulate_forward, ModelSpec, ParamVector, SimState, TimeSeriesData};
use crate::streams::child_rng;
use statrs::distribution::ContinuousCDF;

/// CDF values are clamped to this band before the normal quantile so the
/// output stays finite.
const CDF_CLAMP: f64 = 1e-12;

/// Quantile residuals for standardized residuals under a given kernel.
pub fn quantile_residuals_from(kernel: &KernelFamily, z: &[f64]) -> Vec<f64> {
    z.iter()
        .map(|zt| {
            let u = kernel.cdf_standard(*zt).clamp(CDF_CLAMP, 1.0 - CDF_CLAMP);
            normal_quantile(u)
        })
        .collect()
}

/// Quantile residuals of a fit, over the likelihood rows t > m.
pub fn quantile_residuals(fit: &FitResult) -> Vec<f64> {
    quantile_residuals_from(&fit.spec.kernel, &fit.z_hat[fit.spec.m()..])
}

/// Sample autocorrelations at lags 1..=max_lag.
pub fn sample_acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if max_lag == 0 || max_lag >= n {
        return Err(Error::Dimension(format!(
            "need 0 < lags < series length, got {max_lag} with {n} points"
        )));
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let denom: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    if denom < 1e-300 {
        return Err(Error::ZeroVariance(
            "series is constant; autocorrelations undefined".into(),
        ));
    }
    let mut acf = Vec::with_capacity(max_lag);
    for k in 1..=max_lag {
        let num: f64 = (k..n).map(|t| (x[t] - mean) * (x[t - k] - mean)).sum();
        acf.push(num / denom);
    }
    Ok(acf)
}

/// Sample partial autocorrelations at lags 1..=max_lag, via the Levinson
/// recursion on the sample autocorrelations.
pub fn sample_pacf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let acf = sample_acf(x, max_lag)?;
    Ok(durbin_levinson(&acf).1)
}

#[derive(Debug, Clone)]
pub struct LjungBox {
    pub statistic: f64,
    pub p_value: f64,
    pub lags: usize,
}

/// Portmanteau test of no autocorrelation through `lags`, referred to a
/// chi-square with `lags` degrees of freedom.
pub fn ljung_box(x: &[f64], lags: usize) -> Result<LjungBox> {
    let n = x.len() as f64;
    let acf = sample_acf(x, lags)?;
    let mut q = 0.0;
    for (k, rho) in acf.iter().enumerate() {
        q += rho * rho / (n - (k + 1) as f64);
    }
    q *= n * (n + 2.0);
    Ok(LjungBox {
        statistic: q,
        p_value: chi_square_sf(q, lags as f64),
        lags,
    })
}

/// Kolmogorov-Smirnov distance between the sample and the standard
/// normal distribution.
pub fn ks_normal(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let norm = std_normal();
    let mut d = 0.0f64;
    for (i, v) in sorted.iter().enumerate() {
        let f = norm.cdf(*v);
        let hi = (i + 1) as f64 / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

#[derive(Debug, Clone)]
pub struct EnvelopeOptions {
    pub replicates: usize,
    /// Central coverage of the band; 0 collapses all three curves to the
    /// pointwise median.
    pub level: f64,
    pub seed: u64,
    /// Re-estimate the model on each simulated series instead of reusing
    /// the fitted parameters.
    pub refit: bool,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        EnvelopeOptions {
            replicates: 100,
            level: 0.95,
            seed: 0,
            refit: false,
        }
    }
}

/// Pointwise bands over the sorted quantile residuals of simulated
/// replicates, one value per order statistic.
#[derive(Debug, Clone)]
pub struct EnvelopeBands {
    pub lower: Vec<f64>,
    pub median: Vec<f64>,
    pub upper: Vec<f64>,
}

fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let w = h - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

/// Simulates `replicates` series from the fitted model over the observed
/// covariates, computes each one's sorted quantile residuals, and returns
/// pointwise quantile bands for every order statistic.
pub fn simulated_envelope(
    fit_result: &FitResult,
    data: &TimeSeriesData,
    opts: &EnvelopeOptions,
) -> Result<EnvelopeBands> {
    simulated_envelope_at(&fit_result.spec, &fit_result.theta, data, opts)
}

/// Envelope at explicit parameter values, for callers holding a stored
/// fit rather than a live one.
pub fn simulated_envelope_at(
    spec: &ModelSpec,
    theta: &ParamVector,
    data: &TimeSeriesData,
    opts: &EnvelopeOptions,
) -> Result<EnvelopeBands> {
    if opts.replicates < 19 {
        return Err(Error::Config(format!(
            "envelope needs at least 19 replicates, got {}",
            opts.replicates
        )));
    }
    if !(0.0..1.0).contains(&opts.level) {
        return Err(Error::Config(format!(
            "envelope level must lie in [0, 1), got {}",
            opts.level
        )));
    }
    let n = data.n();
    let n_used = n - spec.m();
    if n_used == 0 {
        return Err(Error::Data("no rows beyond the presample".into()));
    }

    let replicate = |b: usize| -> Result<Vec<f64>> {
        let mut rng = child_rng(opts.seed, b as u64);
        let eps = spec.kernel.sample_standard(n, &mut rng);
        let v = simulate_forward(
            spec,
            theta,
            data.x(),
            data.w(),
            &SimState::cold(spec),
            &eps,
        )?;
        let sim = TimeSeriesData::new(
            v.iter().map(|vi| vi.exp()).collect(),
            data.x().clone(),
            data.w().clone(),
        )?;
        let mut rq = if opts.refit {
            let fopts = FitOptions {
                init: Some(theta.clone()),
                ..FitOptions::default()
            };
            let refitted = fit(spec, &sim, &fopts)?;
            quantile_residuals(&refitted)
        } else {
            let st = recurse_state(spec, theta, &sim)?;
            quantile_residuals_from(&spec.kernel, &st.z[spec.m()..])
        };
        rq.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(rq)
    };

    let sorted: Vec<Vec<f64>> = (0..opts.replicates)
        .into_par_iter()
        .map(replicate)
        .collect::<Result<_>>()?;

    let p_lo = (1.0 - opts.level) / 2.0;
    let p_hi = (1.0 + opts.level) / 2.0;
    let mut lower = Vec::with_capacity(n_used);
    let mut median = Vec::with_capacity(n_used);
    let mut upper = Vec::with_capacity(n_used);
    let mut column = vec![0.0f64; opts.replicates];
    for i in 0..n_used {
        for (b, row) in sorted.iter().enumerate() {
            column[b] = row[i];
        }
        column.sort_by(|a, b| a.partial_cmp(b).unwrap());
        lower.push(empirical_quantile(&column, p_lo));
        median.push(empirical_quantile(&column, 0.5));
        upper.push(empirical_quantile(&column, p_hi));
    }
    Ok(EnvelopeBands {
        lower,
        median,
        upper,
    })
}

/// Full residual diagnostic bundle for one fit.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub rq: Vec<f64>,
    pub acf: Vec<f64>,
    pub pacf: Vec<f64>,
    pub ljung_box: LjungBox,
    pub ks_stat: f64,
    pub envelope: EnvelopeBands,
}

pub fn residual_report(
    fit_result: &FitResult,
    data: &TimeSeriesData,
    env_opts: &EnvelopeOptions,
    acf_lags: usize,
    lb_lags: usize,
) -> Result<ResidualReport> {
    residual_report_at(
        &fit_result.spec,
        &fit_result.theta,
        data,
        env_opts,
        acf_lags,
        lb_lags,
    )
}

/// Residual diagnostics at explicit parameter values; recomputes the
/// model recursion on `data` first.
pub fn residual_report_at(
    spec: &ModelSpec,
    theta: &ParamVector,
    data: &TimeSeriesData,
    env_opts: &EnvelopeOptions,
    acf_lags: usize,
    lb_lags: usize,
) -> Result<ResidualReport> {
    let st = recurse_state(spec, theta, data)?;
    let rq = quantile_residuals_from(&spec.kernel, &st.z[spec.m()..]);
    let acf = sample_acf(&rq, acf_lags)?;
    let pacf = sample_pacf(&rq, acf_lags)?;
    let lb = ljung_box(&rq, lb_lags)?;
    let ks = ks_normal(&rq);
    let envelope = simulated_envelope_at(spec, theta, data, env_opts)?;
    Ok(ResidualReport {
        rq,
        acf,
        pacf,
        ljung_box: lb,
        ks_stat: ks,
        envelope,
    })
}
