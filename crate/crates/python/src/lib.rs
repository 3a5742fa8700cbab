//! Python bindings for the core library: kernels, model fitting,
//! simulation, and the stationarity/diagnostic helpers. Errors surface
//! as ValueError with the library's single-line messages.

use nalgebra::DMatrix;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use lsarmax::diagnostics;
use lsarmax::estimation::{self, FitOptions};
use lsarmax::kernels::KernelFamily;
use lsarmax::model::{ModelSpec, ParamVector, TimeSeriesData};
use lsarmax::report::{render_fit_text, FitReport};
use lsarmax::simulation::{generate_dataset, CovariateRule};
use lsarmax::theory::{check_stationarity, marginal_moments, ArmaPolynomials, PhiSpec};

fn err(e: lsarmax::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> PyResult<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(PyValueError::new_err(format!("{what} has no rows")));
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return Err(PyValueError::new_err(format!("{what} has empty rows")));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return Err(PyValueError::new_err(format!(
            "{what} row {} has {} entries, expected {ncols}",
            bad + 1,
            rows[bad].len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Density-generating kernel: log-normal, log-Student-t, or
/// log-power-exponential.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct Kernel {
    inner: KernelFamily,
}

#[pymethods]
impl Kernel {
    #[staticmethod]
    fn log_normal() -> Kernel {
        Kernel {
            inner: KernelFamily::log_normal(),
        }
    }

    #[staticmethod]
    fn log_student_t(dof: f64) -> PyResult<Kernel> {
        Ok(Kernel {
            inner: KernelFamily::log_student_t(dof).map_err(err)?,
        })
    }

    #[staticmethod]
    fn log_power_exponential(shape: f64) -> PyResult<Kernel> {
        Ok(Kernel {
            inner: KernelFamily::log_power_exponential(shape).map_err(err)?,
        })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    #[getter]
    fn theta(&self) -> Option<f64> {
        self.inner.theta()
    }

    /// Density of the positive-valued response at median `lam`,
    /// dispersion `phi`.
    fn pdf(&self, y: f64, lam: f64, phi: f64) -> PyResult<f64> {
        Ok(self.inner.log_pdf(y, lam, phi).map_err(err)?.exp())
    }

    /// CDF of the standardized log-scale innovation.
    fn cdf_standard(&self, z: f64) -> f64 {
        self.inner.cdf_standard(z)
    }

    fn quantile_standard(&self, p: f64) -> PyResult<f64> {
        self.inner.quantile_standard(p).map_err(err)
    }

    /// Variance of the standardized innovation; errors when it does not
    /// exist (Student-t needs more than 2 degrees of freedom).
    fn variance_constant(&self) -> PyResult<f64> {
        self.inner.variance_constant().map_err(err)
    }

    fn __repr__(&self) -> String {
        match self.inner.theta() {
            Some(t) => format!("Kernel({}, theta={t})", self.inner.name()),
            None => format!("Kernel({})", self.inner.name()),
        }
    }
}

/// Model shape: ARMA orders and design widths.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Model {
    spec: ModelSpec,
}

#[pymethods]
impl Model {
    #[new]
    #[pyo3(signature = (p, q, n_beta, n_tau, kernel))]
    fn new(p: usize, q: usize, n_beta: usize, n_tau: usize, kernel: Kernel) -> PyResult<Model> {
        Ok(Model {
            spec: ModelSpec::new(p, q, n_beta, n_tau, kernel.inner).map_err(err)?,
        })
    }

    #[getter]
    fn p(&self) -> usize {
        self.spec.p
    }

    #[getter]
    fn q(&self) -> usize {
        self.spec.q
    }

    #[getter]
    fn n_beta(&self) -> usize {
        self.spec.n_beta
    }

    #[getter]
    fn n_tau(&self) -> usize {
        self.spec.n_tau
    }

    #[getter]
    fn kernel(&self) -> Kernel {
        Kernel {
            inner: self.spec.kernel,
        }
    }

    /// Flat parameter order used by estimates and standard errors.
    fn param_names(&self) -> Vec<String> {
        self.spec.param_names()
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(p={}, q={}, n_beta={}, n_tau={}, kernel={})",
            self.spec.p,
            self.spec.q,
            self.spec.n_beta,
            self.spec.n_tau,
            self.spec.kernel.name()
        )
    }
}

/// Result of a maximum-likelihood fit.
#[pyclass]
struct Fit {
    inner: estimation::FitResult,
}

#[pymethods]
impl Fit {
    #[getter]
    fn estimates(&self) -> Vec<f64> {
        self.inner.theta.to_flat()
    }

    #[getter]
    fn se(&self) -> Option<Vec<f64>> {
        self.inner.se.clone()
    }

    #[getter]
    fn p_values(&self) -> Option<Vec<f64>> {
        self.inner.p_values.clone()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn loglik(&self) -> f64 {
        self.inner.loglik_full
    }

    #[getter]
    fn aic(&self) -> f64 {
        self.inner.aic
    }

    #[getter]
    fn bic(&self) -> f64 {
        self.inner.bic
    }

    #[getter]
    fn rmse(&self) -> f64 {
        self.inner.rmse
    }

    fn param_names(&self) -> Vec<String> {
        self.inner.spec.param_names()
    }

    /// Raw log-scale residuals, one per observation (presample rows are
    /// zero by construction).
    fn residuals(&self) -> Vec<f64> {
        self.inner.r_hat.clone()
    }

    /// Normalized quantile residuals for the modeled rows.
    fn quantile_residuals(&self) -> Vec<f64> {
        diagnostics::quantile_residuals(&self.inner)
    }

    fn summary(&self) -> String {
        render_fit_text(&FitReport::from_fit(&self.inner, None))
    }

    fn __repr__(&self) -> String {
        format!(
            "Fit(converged={}, loglik={:.4}, aic={:.4})",
            self.inner.converged, self.inner.loglik_full, self.inner.aic
        )
    }
}

/// Maximum-likelihood fit of `model` to a positive response series.
/// `x` and `w` are row-major design matrices; omitted means
/// intercept-only columns of ones.
#[pyfunction]
#[pyo3(signature = (model, y, x = None, w = None, max_iter = 500, grad_tol = 1e-6, seed = 0))]
fn fit(
    model: &Model,
    y: Vec<f64>,
    x: Option<Vec<Vec<f64>>>,
    w: Option<Vec<Vec<f64>>>,
    max_iter: usize,
    grad_tol: f64,
    seed: u64,
) -> PyResult<Fit> {
    let n = y.len();
    let x = match x {
        Some(rows) => rows_to_matrix(&rows, "x")?,
        None => DMatrix::from_element(n, 1, 1.0),
    };
    let w = match w {
        Some(rows) => rows_to_matrix(&rows, "w")?,
        None => DMatrix::from_element(n, 1, 1.0),
    };
    let data = TimeSeriesData::new(y, x, w).map_err(err)?;
    let options = FitOptions {
        max_iter,
        grad_tol,
        init: None,
        seed,
    };
    Ok(Fit {
        inner: estimation::fit(&model.spec, &data, &options).map_err(err)?,
    })
}

/// Draws one series from the model. Returns (y, x, w) with the
/// generated covariates, so the draw can be refitted directly.
#[pyfunction]
#[pyo3(signature = (model, n, beta, phi, kappa = Vec::new(), zeta = Vec::new(), burnin = 0, covariates = "normal", seed = 0))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    model: &Model,
    n: usize,
    beta: Vec<f64>,
    phi: f64,
    kappa: Vec<f64>,
    zeta: Vec<f64>,
    burnin: usize,
    covariates: &str,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    if !(phi > 0.0) || !phi.is_finite() {
        return Err(PyValueError::new_err(format!(
            "phi must be positive, got {phi}"
        )));
    }
    let rule = match covariates {
        "normal" => CovariateRule::IidStandardNormal,
        "uniform" => CovariateRule::IidUniform01,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown covariate rule '{other}'; expected normal or uniform"
            )))
        }
    };
    let theta = ParamVector {
        beta,
        tau: vec![phi.ln()],
        kappa,
        zeta,
    };
    theta.validate_for(&model.spec).map_err(err)?;
    let data = generate_dataset(&model.spec, &theta, n, &rule, burnin, seed).map_err(err)?;
    Ok((
        data.y().to_vec(),
        matrix_to_rows(data.x()),
        matrix_to_rows(data.w()),
    ))
}

/// Moving-average weights of the ARMA part, psi[0..=k].
#[pyfunction]
fn psi_weights(kappa: Vec<f64>, zeta: Vec<f64>, k: usize) -> Vec<f64> {
    lsarmax::theory::psi_weights(&ArmaPolynomials::new(kappa, zeta), k)
}

/// True when every autoregressive root lies outside the unit circle.
#[pyfunction]
fn is_stationary(kappa: Vec<f64>) -> bool {
    check_stationarity(&ArmaPolynomials::new(kappa, Vec::new())).all_outside
}

#[pyfunction]
fn ar_root_moduli(kappa: Vec<f64>) -> Vec<f64> {
    check_stationarity(&ArmaPolynomials::new(kappa, Vec::new())).root_moduli
}

/// Marginal log-scale variance of the stationary process.
#[pyfunction]
#[pyo3(signature = (kappa, zeta, phi = 1.0, kernel = None))]
fn theoretical_variance(
    kappa: Vec<f64>,
    zeta: Vec<f64>,
    phi: f64,
    kernel: Option<Kernel>,
) -> PyResult<f64> {
    let k = kernel.map(|k| k.inner).unwrap_or(KernelFamily::log_normal());
    let mm = marginal_moments(
        &ArmaPolynomials::new(kappa, zeta),
        PhiSpec::Constant(phi),
        &k,
        0,
    )
    .map_err(err)?;
    Ok(mm.variance())
}

/// Marginal log-scale autocorrelations at lags 0..=lags.
#[pyfunction]
#[pyo3(signature = (kappa, zeta, lags, phi = 1.0, kernel = None))]
fn theoretical_acf(
    kappa: Vec<f64>,
    zeta: Vec<f64>,
    lags: usize,
    phi: f64,
    kernel: Option<Kernel>,
) -> PyResult<Vec<f64>> {
    let k = kernel.map(|k| k.inner).unwrap_or(KernelFamily::log_normal());
    let mm = marginal_moments(
        &ArmaPolynomials::new(kappa, zeta),
        PhiSpec::Constant(phi),
        &k,
        lags,
    )
    .map_err(err)?;
    Ok((0..=lags).map(|l| mm.autocorr(l)).collect())
}

/// Sample autocorrelations at lags 1..=lags.
#[pyfunction]
fn sample_acf(x: Vec<f64>, lags: usize) -> PyResult<Vec<f64>> {
    diagnostics::sample_acf(&x, lags).map_err(err)
}

/// Sample partial autocorrelations at lags 1..=lags.
#[pyfunction]
fn sample_pacf(x: Vec<f64>, lags: usize) -> PyResult<Vec<f64>> {
    diagnostics::sample_pacf(&x, lags).map_err(err)
}

/// Ljung-Box portmanteau test; returns (statistic, p_value).
#[pyfunction]
fn ljung_box(x: Vec<f64>, lags: usize) -> PyResult<(f64, f64)> {
    let lb = diagnostics::ljung_box(&x, lags).map_err(err)?;
    Ok((lb.statistic, lb.p_value))
}

#[pymodule]
fn lsarmax_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Kernel>()?;
    m.add_class::<Model>()?;
    m.add_class::<Fit>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(psi_weights, m)?)?;
    m.add_function(wrap_pyfunction!(is_stationary, m)?)?;
    m.add_function(wrap_pyfunction!(ar_root_moduli, m)?)?;
    m.add_function(wrap_pyfunction!(theoretical_variance, m)?)?;
    m.add_function(wrap_pyfunction!(theoretical_acf, m)?)?;
    m.add_function(wrap_pyfunction!(sample_acf, m)?)?;
    m.add_function(wrap_pyfunction!(sample_pacf, m)?)?;
    m.add_function(wrap_pyfunction!(ljung_box, m)?)?;
    Ok(())
}
