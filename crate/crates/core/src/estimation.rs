//! Maximum-likelihood estimation: analytic score, observed information,
//! starting values, the fit driver, and kernel hyperparameter profiling.
//!
//! The optimizer works on the kernel-only conditional log-likelihood,
//! whose stationary points coincide with the full version; reported
//! likelihood-based quantities (AIC, BIC, loglik_full) use the full one.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_distr::Distribution;

use crate::bfgs::{self, Objective};
use crate::error::{Error, Result};
use crate::kernels::std_normal;
use crate::model::{
    conditional_loglik, recurse_state, row_dot, ModelSpec, ParamVector, RecursionState,
    TimeSeriesData,
};
use statrs::distribution::ContinuousCDF;

/// Analytic gradient of the kernel-only conditional log-likelihood, in
/// flat parameter order (beta, tau, kappa, zeta).
///
/// Location-parameter derivatives propagate through the recursion: each
/// mu_t depends on earlier residuals r_{t-j}, whose presample rows are
/// pinned at zero and therefore carry zero derivative.
pub fn score(spec: &ModelSpec, theta: &ParamVector, data: &TimeSeriesData) -> Result<Vec<f64>> {
    let st = recurse_state(spec, theta, data)?;
    let n = data.n();
    let m = spec.m();
    let v = data.v();
    let x = data.x();
    let w = data.w();
    let nb = spec.n_beta;
    let nt = spec.n_tau;
    let p = spec.p;
    let q = spec.q;
    let n_loc = nb + p + q;

    // dmu[t] holds the derivative of mu_t for every location parameter,
    // layout (beta, kappa, zeta); rows t < m stay zero because their
    // residuals are pinned.
    let mut dmu = vec![vec![0.0f64; n_loc]; n];
    let mut grad = vec![0.0f64; spec.dim()];

    for t in m..n {
        let z = st.z[t];
        let z2 = z * z;
        let gld = spec.kernel.g_log_deriv_clamped(z2);
        let sqrt_phi = st.phi[t].sqrt();

        // beta derivatives.
        for rix in 0..nb {
            let mut d = x[(t, rix)];
            for (l, k) in theta.kappa.iter().enumerate() {
                d -= k * x[(t - (l + 1), rix)];
            }
            for (j, zc) in theta.zeta.iter().enumerate() {
                d -= zc * dmu[t - (j + 1)][rix];
            }
            dmu[t][rix] = d;
        }
        // kappa derivatives.
        for l in 0..p {
            let s = t - (l + 1);
            let mut d = v[s] - row_dot(x, s, &theta.beta);
            for (j, zc) in theta.zeta.iter().enumerate() {
                d -= zc * dmu[t - (j + 1)][nb + l];
            }
            dmu[t][nb + l] = d;
        }
        // zeta derivatives.
        for j in 0..q {
            let mut d = st.r[t - (j + 1)];
            for (jj, zc) in theta.zeta.iter().enumerate() {
                d -= zc * dmu[t - (jj + 1)][nb + p + j];
            }
            dmu[t][nb + p + j] = d;
        }

        let loc_factor = -(2.0 * z / sqrt_phi) * gld;
        for rix in 0..nb {
            grad[rix] += loc_factor * dmu[t][rix];
        }
        for l in 0..p {
            grad[nb + nt + l] += loc_factor * dmu[t][nb + l];
        }
        for j in 0..q {
            grad[nb + nt + p + j] += loc_factor * dmu[t][nb + p + j];
        }
        for s in 0..nt {
            let ws = w[(t, s)];
            grad[nb + s] += -0.5 * ws - z2 * ws * gld;
        }
    }

    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("score is not finite".into()));
    }
    Ok(grad)
}

/// Observed information at `theta`: the negative Jacobian of the score by
/// central differences, symmetrized.
#[derive(Debug, Clone)]
pub struct InformationMatrix {
    pub matrix: DMatrix<f64>,
    /// Max elementwise difference between the raw matrix and its
    /// transpose, relative to the matrix scale. Large values signal an
    /// unreliable curvature estimate.
    pub asymmetry: f64,
    pub positive_definite: bool,
}

pub fn observed_information(
    spec: &ModelSpec,
    theta: &ParamVector,
    data: &TimeSeriesData,
) -> Result<InformationMatrix> {
    let dim = spec.dim();
    let flat = theta.to_flat();
    let mut raw = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        let h = 1e-5 * flat[i].abs().max(1.0);
        let mut up = flat.clone();
        up[i] += h;
        let mut dn = flat.clone();
        dn[i] -= h;
        let s_up = score(spec, &ParamVector::from_flat(spec, &up)?, data)?;
        let s_dn = score(spec, &ParamVector::from_flat(spec, &dn)?, data)?;
        for j in 0..dim {
            // Information is minus the score Jacobian.
            raw[(j, i)] = -(s_up[j] - s_dn[j]) / (2.0 * h);
        }
    }
    let scale = raw.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let mut asymmetry = 0.0f64;
    for i in 0..dim {
        for j in (i + 1)..dim {
            asymmetry = asymmetry.max((raw[(i, j)] - raw[(j, i)]).abs());
        }
    }
    asymmetry /= scale;
    let sym = (&raw + raw.transpose()) * 0.5;
    let positive_definite = Cholesky::new(sym.clone()).is_some();
    Ok(InformationMatrix {
        matrix: sym,
        asymmetry,
        positive_definite,
    })
}

/// Levinson recursion on autocorrelations rho_1..rho_k. Returns the
/// order-k coefficient vector and the sequence of reflection coefficients
/// (the partial autocorrelations).
pub(crate) fn durbin_levinson(rho: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k_max = rho.len();
    let mut coeff: Vec<f64> = Vec::new();
    let mut pacf = Vec::with_capacity(k_max);
    let mut var = 1.0f64;
    for k in 1..=k_max {
        let mut num = rho[k - 1];
        for (j, c) in coeff.iter().enumerate() {
            num -= c * rho[k - 2 - j];
        }
        let refl = if var.abs() < 1e-300 { 0.0 } else { num / var };
        let mut next = Vec::with_capacity(k);
        for j in 0..(k - 1) {
            next.push(coeff[j] - refl * coeff[k - 2 - j]);
        }
        next.push(refl);
        coeff = next;
        pacf.push(refl);
        var *= 1.0 - refl * refl;
    }
    (coeff, pacf)
}

/// Moment-based starting values: ordinary least squares for beta, the log
/// residual variance for tau's intercept (other tau entries zero),
/// Yule-Walker coefficients on the OLS residuals for kappa, and zeros for
/// zeta.
pub fn initialize(spec: &ModelSpec, data: &TimeSeriesData) -> Result<ParamVector> {
    let n = data.n();
    let x = data.x();
    let v = data.v();
    let nb = spec.n_beta;
    if x.ncols() != nb {
        return Err(Error::Dimension(format!(
            "location design has {} columns, model needs {}",
            x.ncols(),
            nb
        )));
    }
    if data.w().ncols() != spec.n_tau {
        return Err(Error::Dimension(format!(
            "dispersion design has {} columns, model needs {}",
            data.w().ncols(),
            spec.n_tau
        )));
    }

    let xtx = x.transpose() * x;
    let xtv = x.transpose() * DVector::from_column_slice(v);
    let chol = Cholesky::new(xtx).ok_or_else(|| {
        Error::Singular("location design is rank deficient".into())
    })?;
    let beta = chol.solve(&xtv);

    let resid: Vec<f64> = (0..n)
        .map(|t| v[t] - row_dot(x, t, beta.as_slice()))
        .collect();
    let var = (resid.iter().map(|e| e * e).sum::<f64>() / n as f64).max(1e-12);

    let mut tau = vec![0.0; spec.n_tau];
    tau[0] = var.ln();

    let kappa = if spec.p == 0 {
        Vec::new()
    } else {
        if n <= spec.p {
            return Err(Error::Data(format!(
                "need more than {} rows to initialize {} autoregressive lags",
                spec.p, spec.p
            )));
        }
        let mean = resid.iter().sum::<f64>() / n as f64;
        let c0: f64 = resid.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n as f64;
        if c0 < 1e-12 {
            vec![0.0; spec.p]
        } else {
            let mut rho = Vec::with_capacity(spec.p);
            for k in 1..=spec.p {
                let ck: f64 = (k..n)
                    .map(|t| (resid[t] - mean) * (resid[t - k] - mean))
                    .sum::<f64>()
                    / n as f64;
                rho.push(ck / c0);
            }
            durbin_levinson(&rho).0
        }
    };

    Ok(ParamVector {
        beta: beta.as_slice().to_vec(),
        tau,
        kappa,
        zeta: vec![0.0; spec.q],
    })
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Starting point override; defaults to `initialize`.
    pub init: Option<ParamVector>,
    /// Seeds the jittered restart tried once if the first run stalls.
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 500,
            grad_tol: 1e-6,
            init: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub n: usize,
    pub theta: ParamVector,
    /// Standard errors from the inverse observed information; absent when
    /// the information matrix is not positive definite.
    pub se: Option<Vec<f64>>,
    /// Two-sided normal p-values for each parameter; absent with the
    /// standard errors.
    pub p_values: Option<Vec<f64>>,
    pub loglik_full: f64,
    pub loglik_kernel: f64,
    pub aic: f64,
    pub bic: f64,
    /// Root mean squared log-scale residual over the likelihood rows.
    pub rmse: f64,
    pub mu_hat: Vec<f64>,
    pub r_hat: Vec<f64>,
    pub z_hat: Vec<f64>,
    pub phi_hat: Vec<f64>,
    pub information: InformationMatrix,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn state(&self) -> RecursionState {
        RecursionState {
            mu: self.mu_hat.clone(),
            r: self.r_hat.clone(),
            z: self.z_hat.clone(),
            phi: self.phi_hat.clone(),
        }
    }
}

struct NegKernelLoglik<'a> {
    spec: &'a ModelSpec,
    data: &'a TimeSeriesData,
}

impl Objective for NegKernelLoglik<'_> {
    fn value(&self, x: &[f64]) -> Option<f64> {
        let theta = ParamVector::from_flat(self.spec, x).ok()?;
        conditional_loglik(self.spec, &theta, self.data, false)
            .ok()
            .map(|l| -l)
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let theta = ParamVector::from_flat(self.spec, x).ok()?;
        let mut g = score(self.spec, &theta, self.data).ok()?;
        for gi in &mut g {
            *gi = -*gi;
        }
        Some(g)
    }
}

/// Fits the model by conditional maximum likelihood.
pub fn fit(spec: &ModelSpec, data: &TimeSeriesData, options: &FitOptions) -> Result<FitResult> {
    let n = data.n();
    let m = spec.m();
    if n <= m + spec.dim() {
        return Err(Error::Data(format!(
            "only {} usable rows for {} parameters",
            n.saturating_sub(m),
            spec.dim()
        )));
    }
    let start = match &options.init {
        Some(th) => {
            th.validate_for(spec)?;
            th.clone()
        }
        None => initialize(spec, data)?,
    };

    let obj = NegKernelLoglik { spec, data };
    let bopts = bfgs::Options {
        max_iter: options.max_iter,
        grad_tol: options.grad_tol,
        ..bfgs::Options::default()
    };
    let mut out = bfgs::minimize(&obj, &start.to_flat(), &bopts)?;

    if !out.converged {
        // One jittered restart around the moment start.
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(options.seed);
        let normal = rand_distr::StandardNormal;
        let jittered: Vec<f64> = start
            .to_flat()
            .iter()
            .map(|v| {
                let e: f64 = normal.sample(&mut rng);
                v + 0.05 * (1.0 + v.abs()) * e
            })
            .collect();
        if let Ok(retry) = bfgs::minimize(&obj, &jittered, &bopts) {
            let better = (retry.converged && !out.converged)
                || (retry.converged == out.converged && retry.value < out.value);
            if better {
                out = retry;
            }
        }
    }

    let theta = ParamVector::from_flat(spec, &out.x)?;
    let st = recurse_state(spec, &theta, data)?;
    let loglik_kernel = -out.value;
    let loglik_full = conditional_loglik(spec, &theta, data, true)?;
    let d = spec.dim() as f64;
    let n_used = (n - m) as f64;
    let aic = -2.0 * loglik_full + 2.0 * d;
    let bic = -2.0 * loglik_full + d * n_used.ln();
    let rmse = (st.r[m..].iter().map(|r| r * r).sum::<f64>() / n_used).sqrt();

    let information = observed_information(spec, &theta, data)?;
    let se = if information.positive_definite {
        Cholesky::new(information.matrix.clone()).and_then(|ch| {
            let inv = ch.inverse();
            let mut se = Vec::with_capacity(spec.dim());
            for i in 0..spec.dim() {
                let vi = inv[(i, i)];
                if vi <= 0.0 || !vi.is_finite() {
                    return None;
                }
                se.push(vi.sqrt());
            }
            Some(se)
        })
    } else {
        None
    };
    let p_values = se.as_ref().map(|se| {
        let norm = std_normal();
        out.x
            .iter()
            .zip(se)
            .map(|(est, s)| 2.0 * norm.cdf(-(est / s).abs()))
            .collect()
    });

    Ok(FitResult {
        spec: spec.clone(),
        n,
        theta,
        se,
        p_values,
        loglik_full,
        loglik_kernel,
        aic,
        bic,
        rmse,
        mu_hat: st.mu,
        r_hat: st.r,
        z_hat: st.z,
        phi_hat: st.phi,
        information,
        converged: out.converged,
        iterations: out.iterations,
    })
}

/// Two-sided normal p-values for each parameter.
pub fn wald_tests(fit: &FitResult) -> Result<Vec<f64>> {
    let se = fit.se.as_ref().ok_or_else(|| {
        Error::Singular("standard errors unavailable: information not positive definite".into())
    })?;
    let norm = std_normal();
    Ok(fit
        .theta
        .to_flat()
        .iter()
        .zip(se)
        .map(|(est, s)| 2.0 * norm.cdf(-(est / s).abs()))
        .collect())
}

/// Profile over a grid of kernel hyperparameter values.
#[derive(Debug)]
pub struct ThetaProfile {
    pub best_theta: f64,
    pub best_index: usize,
    /// (theta, full loglik) per grid point; None when that fit failed.
    pub table: Vec<(f64, Option<f64>)>,
    pub best_fit: FitResult,
}

/// Fits the model at each hyperparameter value and keeps the best full
/// log-likelihood. Ties resolve toward the smaller hyperparameter.
pub fn profile_theta(
    spec: &ModelSpec,
    data: &TimeSeriesData,
    grid: &[f64],
    options: &FitOptions,
) -> Result<ThetaProfile> {
    if grid.is_empty() {
        return Err(Error::Config("hyperparameter grid is empty".into()));
    }
    let mut table = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64, FitResult)> = None;
    for (i, th) in grid.iter().enumerate() {
        let spec_i = match spec.kernel.with_theta(*th) {
            Ok(k) => ModelSpec {
                kernel: k,
                ..spec.clone()
            },
            Err(_) => {
                table.push((*th, None));
                continue;
            }
        };
        match fit(&spec_i, data, options) {
            Ok(f) => {
                let ll = f.loglik_full;
                table.push((*th, Some(ll)));
                let replace = match &best {
                    None => true,
                    Some((_, bll, bfit)) => {
                        let bth = bfit.spec.kernel.theta().unwrap_or(f64::INFINITY);
                        ll > *bll || (ll == *bll && *th < bth)
                    }
                };
                if replace {
                    best = Some((i, ll, f));
                }
            }
            Err(_) => table.push((*th, None)),
        }
    }
    let (best_index, _, best_fit) = best.ok_or_else(|| {
        Error::Data("no hyperparameter grid point produced a successful fit".into())
    })?;
    Ok(ThetaProfile {
        best_theta: grid[best_index],
        best_index,
        table,
        best_fit,
    })
}
