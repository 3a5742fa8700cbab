//! Dataset simulation and the replicated estimator-quality experiment.
//!
//! Replicate r of the experiment always draws from its own generator
//! stream keyed by (seed, stream id), so results are identical whatever
//! the thread schedule. With common random numbers enabled, the stream id
//! is the replicate index alone: every (n, phi) cell sees the same
//! covariates and innovations, which removes between-cell noise from the
//! comparison (and makes the ARMA estimates exactly invariant across the
//! phi grid, since rescaling the innovations maps the fitted optimum onto
//! a rescaled parameter point).

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::{fit, FitOptions};
use crate::model::{simulate_forward, ModelSpec, ParamVector, SimState, TimeSeriesData};
use crate::streams::child_rng;

/// How location covariates are produced for simulated datasets. Random
/// rules prepend an intercept column of ones and fill the remaining
/// n_beta - 1 columns with iid draws, regenerated for every dataset.
#[derive(Debug, Clone)]
pub enum CovariateRule {
    IidStandardNormal,
    IidUniform01,
    /// Use this matrix as-is (must already contain any intercept column).
    Fixed(DMatrix<f64>),
}

fn build_design<R: Rng + ?Sized>(
    rule: &CovariateRule,
    total: usize,
    n_beta: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    match rule {
        CovariateRule::Fixed(m) => {
            if m.nrows() != total {
                return Err(Error::Dimension(format!(
                    "fixed covariate matrix has {} rows, simulation needs {total}",
                    m.nrows()
                )));
            }
            if m.ncols() != n_beta {
                return Err(Error::Dimension(format!(
                    "fixed covariate matrix has {} columns, model needs {n_beta}",
                    m.ncols()
                )));
            }
            Ok(m.clone())
        }
        CovariateRule::IidStandardNormal | CovariateRule::IidUniform01 => {
            let mut x = DMatrix::from_element(total, n_beta, 1.0);
            for t in 0..total {
                for j in 1..n_beta {
                    x[(t, j)] = match rule {
                        CovariateRule::IidStandardNormal => {
                            rand_distr::StandardNormal.sample(rng)
                        }
                        CovariateRule::IidUniform01 => rng.random::<f64>(),
                        CovariateRule::Fixed(_) => unreachable!(),
                    };
                }
            }
            Ok(x)
        }
    }
}

/// Simulates a dataset of `n` retained rows, drawing covariates first and
/// innovations second from `rng` (the order matters for common random
/// numbers). The recursion starts from the all-zero presample state; a
/// burn-in prefix is simulated and discarded when requested.
pub fn generate_dataset_with<R: Rng + ?Sized>(
    spec: &ModelSpec,
    theta: &ParamVector,
    n: usize,
    rule: &CovariateRule,
    burnin: usize,
    rng: &mut R,
) -> Result<TimeSeriesData> {
    theta.validate_for(spec)?;
    if n == 0 {
        return Err(Error::Dimension("cannot simulate an empty series".into()));
    }
    if spec.n_tau != 1 {
        return Err(Error::Config(
            "simulated datasets use an intercept-only dispersion design".into(),
        ));
    }
    if matches!(rule, CovariateRule::Fixed(_)) && burnin != 0 {
        return Err(Error::Config(
            "a fixed covariate matrix cannot be extended to cover a burn-in".into(),
        ));
    }
    let total = n + burnin;
    let x = build_design(rule, total, spec.n_beta, rng)?;
    let w = DMatrix::from_element(total, 1, 1.0);
    let eps = spec.kernel.sample_standard(total, rng);
    let v = simulate_forward(spec, theta, &x, &w, &SimState::cold(spec), &eps)?;

    let y: Vec<f64> = v[burnin..].iter().map(|vi| vi.exp()).collect();
    let x_kept = x.rows(burnin, n).into_owned();
    let w_kept = DMatrix::from_element(n, 1, 1.0);
    TimeSeriesData::new(y, x_kept, w_kept)
}

/// `generate_dataset_with` seeded from scratch.
pub fn generate_dataset(
    spec: &ModelSpec,
    theta: &ParamVector,
    n: usize,
    rule: &CovariateRule,
    burnin: usize,
    seed: u64,
) -> Result<TimeSeriesData> {
    let mut rng = child_rng(seed, 0);
    generate_dataset_with(spec, theta, n, rule, burnin, &mut rng)
}

/// Replicated-fit experiment configuration. Each (n, phi) grid cell
/// simulates `replicates` datasets at the true parameters with tau's
/// intercept replaced by ln(phi) and refits the model on each.
#[derive(Debug, Clone)]
pub struct McConfig {
    pub spec: ModelSpec,
    pub true_theta: ParamVector,
    pub n_grid: Vec<usize>,
    pub phi_grid: Vec<f64>,
    pub replicates: usize,
    pub burnin: usize,
    pub covariate_rule: CovariateRule,
    pub common_random_numbers: bool,
    pub seed: u64,
    pub fit_options: FitOptions,
}

/// Bias and mean squared error for one (n, phi) cell. Rows follow the
/// flat parameter order with one extra trailing row for the dispersion on
/// its natural scale (estimated as exp of tau's intercept).
#[derive(Debug, Clone, Serialize)]
pub struct McCell {
    pub n: usize,
    pub phi: f64,
    pub names: Vec<String>,
    pub bias: Vec<f64>,
    pub mse: Vec<f64>,
    pub used: usize,
    pub excluded: usize,
    /// False when more than 5% of replicates were excluded.
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct McResultTable {
    pub cells: Vec<McCell>,
    pub replicates: usize,
}

/// Order-insensitive compensated sum.
fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn run_monte_carlo(config: &McConfig) -> Result<McResultTable> {
    let spec = &config.spec;
    config.true_theta.validate_for(spec)?;
    if spec.n_tau != 1 {
        return Err(Error::Config(
            "the experiment varies a scalar dispersion, so n_tau must be 1".into(),
        ));
    }
    if config.replicates == 0 {
        return Err(Error::Config("need at least one replicate".into()));
    }
    if config.n_grid.is_empty() || config.phi_grid.is_empty() {
        return Err(Error::Config("sample-size and dispersion grids must be nonempty".into()));
    }
    if let Some(bad) = config.phi_grid.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
        return Err(Error::Config(format!(
            "dispersion grid values must be positive, got {bad}"
        )));
    }

    let dim = spec.dim();
    let names: Vec<String> = spec
        .param_names()
        .into_iter()
        .chain(std::iter::once("phi".to_string()))
        .collect();
    let mut cells = Vec::with_capacity(config.n_grid.len() * config.phi_grid.len());
    for (ni, &n) in config.n_grid.iter().enumerate() {
        for (pi, &phi) in config.phi_grid.iter().enumerate() {
            let mut theta_cell = config.true_theta.clone();
            theta_cell.tau[0] = phi.ln();
            let truth_flat = theta_cell.to_flat();
            let cell_index = (ni * config.phi_grid.len() + pi) as u64;

            // One estimate vector per replicate, indexed by replicate so
            // aggregation order never depends on the thread schedule.
            let estimates: Vec<Option<Vec<f64>>> = (0..config.replicates)
                .into_par_iter()
                .map(|rep| {
                    let stream = if config.common_random_numbers {
                        rep as u64
                    } else {
                        cell_index * config.replicates as u64 + rep as u64
                    };
                    let mut rng = child_rng(config.seed, stream);
                    let data = generate_dataset_with(
                        spec,
                        &theta_cell,
                        n,
                        &config.covariate_rule,
                        config.burnin,
                        &mut rng,
                    )
                    .ok()?;
                    let fopts = FitOptions {
                        seed: stream,
                        ..config.fit_options.clone()
                    };
                    let res = fit(spec, &data, &fopts).ok()?;
                    if !res.converged {
                        return None;
                    }
                    let mut est = res.theta.to_flat();
                    est.push(res.theta.tau[0].exp());
                    Some(est)
                })
                .collect();

            let used = estimates.iter().filter(|e| e.is_some()).count();
            let excluded = config.replicates - used;
            let mut bias = vec![f64::NAN; dim + 1];
            let mut mse = vec![f64::NAN; dim + 1];
            if used > 0 {
                for i in 0..=dim {
                    let truth_i = if i < dim { truth_flat[i] } else { phi };
                    let errs = || {
                        estimates
                            .iter()
                            .flatten()
                            .map(move |e| e[i] - truth_i)
                    };
                    bias[i] = neumaier_sum(errs()) / used as f64;
                    mse[i] = neumaier_sum(errs().map(|d| d * d)) / used as f64;
                }
            }
            cells.push(McCell {
                n,
                phi,
                names: names.clone(),
                bias,
                mse,
                used,
                excluded,
                ok: (excluded as f64) <= 0.05 * config.replicates as f64,
            });
        }
    }
    Ok(McResultTable {
        cells,
        replicates: config.replicates,
    })
}
