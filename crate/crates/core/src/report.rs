//! Output artifacts: serializable report structures, JSON/CSV emitters,
//! and plain-text rendering for the terminal.
//!
//! The JSON fit report is the interchange format between subcommands: a
//! saved fit can be reloaded later to drive residual diagnostics without
//! refitting, so it carries everything needed to rebuild the model and
//! the design matrices.

use serde::{Deserialize, Serialize};

use crate::data::{ColumnMapping, MortalityDesign, TrendScale};
use crate::diagnostics::ResidualReport;
use crate::error::{Error, Result};
use crate::estimation::FitResult;
use crate::kernels::KernelFamily;
use crate::model::{ModelSpec, ParamVector, TimeSeriesData};
use crate::simulation::McResultTable;
use crate::theory::{ArmaPolynomials, MarginalMoments, RootReport};

pub const SCHEMA_VERSION: u32 = 1;

/// Model block of a fit report; enough to rebuild the `ModelSpec`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelBlock {
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub p: usize,
    pub q: usize,
    pub n_beta: usize,
    pub n_tau: usize,
}

/// How the dataset behind a fit was constructed, echoed into the report
/// so diagnostics can reload the same design from the raw CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "design", rename_all = "kebab-case")]
pub enum DataEcho {
    Columns {
        y: String,
        x: Vec<String>,
        w: Vec<String>,
        x_intercept: bool,
        w_intercept: bool,
    },
    Mortality {
        center_temperature: bool,
        trend: String,
    },
}

impl DataEcho {
    pub fn from_mapping(m: &ColumnMapping) -> Self {
        DataEcho::Columns {
            y: m.y.clone(),
            x: m.x.clone(),
            w: m.w.clone(),
            x_intercept: m.x_intercept,
            w_intercept: m.w_intercept,
        }
    }

    pub fn from_mortality(d: &MortalityDesign) -> Self {
        DataEcho::Mortality {
            center_temperature: d.center_temperature,
            trend: match d.trend {
                TrendScale::CalendarYears => "calendar-years".into(),
                TrendScale::WeekIndex => "week-index".into(),
            },
        }
    }

    pub fn mapping(&self) -> Option<ColumnMapping> {
        match self {
            DataEcho::Columns {
                y,
                x,
                w,
                x_intercept,
                w_intercept,
            } => Some(ColumnMapping {
                y: y.clone(),
                x: x.clone(),
                w: w.clone(),
                x_intercept: *x_intercept,
                w_intercept: *w_intercept,
            }),
            DataEcho::Mortality { .. } => None,
        }
    }

    pub fn mortality_design(&self) -> Option<MortalityDesign> {
        match self {
            DataEcho::Mortality {
                center_temperature,
                trend,
            } => Some(MortalityDesign {
                center_temperature: *center_temperature,
                trend: if trend == "week-index" {
                    TrendScale::WeekIndex
                } else {
                    TrendScale::CalendarYears
                },
            }),
            DataEcho::Columns { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedBlock {
    pub mu: Vec<f64>,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: u32,
    /// Unix seconds at generation time; the only field that varies
    /// between identical runs.
    pub generated_at: String,
    pub model: ModelBlock,
    pub n: usize,
    pub converged: bool,
    pub iterations: usize,
    pub names: Vec<String>,
    pub estimates: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_values: Option<Vec<f64>>,
    pub loglik_full: f64,
    pub loglik_kernel: f64,
    pub aic: f64,
    pub bic: f64,
    pub rmse: f64,
    pub information: Vec<Vec<f64>>,
    pub fitted: FittedBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_echo: Option<DataEcho>,
}

fn now_unix_seconds() -> String {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs().to_string())
        .unwrap_or_else(|_| "0".into())
}

impl FitReport {
    pub fn from_fit(fit: &FitResult, data_echo: Option<DataEcho>) -> Self {
        let dim = fit.spec.dim();
        let mut information = Vec::with_capacity(dim);
        for i in 0..dim {
            information.push((0..dim).map(|j| fit.information.matrix[(i, j)]).collect());
        }
        FitReport {
            schema_version: SCHEMA_VERSION,
            generated_at: now_unix_seconds(),
            model: ModelBlock {
                family: fit.spec.kernel.name().to_string(),
                theta: fit.spec.kernel.theta(),
                p: fit.spec.p,
                q: fit.spec.q,
                n_beta: fit.spec.n_beta,
                n_tau: fit.spec.n_tau,
            },
            n: fit.n,
            converged: fit.converged,
            iterations: fit.iterations,
            names: fit.spec.param_names(),
            estimates: fit.theta.to_flat(),
            se: fit.se.clone(),
            p_values: fit.p_values.clone(),
            loglik_full: fit.loglik_full,
            loglik_kernel: fit.loglik_kernel,
            aic: fit.aic,
            bic: fit.bic,
            rmse: fit.rmse,
            information,
            fitted: FittedBlock {
                mu: fit.mu_hat.clone(),
                r: fit.r_hat.clone(),
                z: fit.z_hat.clone(),
                phi: fit.phi_hat.clone(),
            },
            data_echo,
        }
    }

    /// Rebuilds the model description from the report.
    pub fn model_spec(&self) -> Result<ModelSpec> {
        let kernel = match (self.model.family.as_str(), self.model.theta) {
            ("log-normal", _) => KernelFamily::log_normal(),
            ("log-student-t", Some(t)) => KernelFamily::log_student_t(t)?,
            ("log-power-exponential", Some(t)) => KernelFamily::log_power_exponential(t)?,
            (f @ ("log-student-t" | "log-power-exponential"), None) => {
                return Err(Error::Config(format!(
                    "family '{f}' needs its extra parameter in the report"
                )))
            }
            (f, _) => return Err(Error::Config(format!("unknown family '{f}'"))),
        };
        ModelSpec::new(
            self.model.p,
            self.model.q,
            self.model.n_beta,
            self.model.n_tau,
            kernel,
        )
    }

    /// Rebuilds the estimated parameter vector from the report.
    pub fn param_vector(&self) -> Result<ParamVector> {
        let spec = self.model_spec()?;
        ParamVector::from_flat(&spec, &self.estimates)
    }
}

pub fn fit_report_json(report: &FitReport) -> Result<String> {
    serde_json::to_string_pretty(report)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Data(format!("cannot serialize fit report: {e}")))
}

pub fn parse_fit_report(json: &str) -> Result<FitReport> {
    serde_json::from_str(json).map_err(|e| Error::Data(format!("cannot parse fit report: {e}")))
}

/// One row per parameter: name, estimate, standard error, p-value.
pub fn fit_report_csv(report: &FitReport) -> String {
    let mut s = String::from("parameter,estimate,se,p_value\n");
    for (i, name) in report.names.iter().enumerate() {
        let se = report
            .se
            .as_ref()
            .map_or(String::new(), |v| format!("{}", v[i]));
        let pv = report
            .p_values
            .as_ref()
            .map_or(String::new(), |v| format!("{}", v[i]));
        s.push_str(&format!("{name},{},{se},{pv}\n", report.estimates[i]));
    }
    s
}

pub fn render_fit_text(report: &FitReport) -> String {
    let mut s = String::new();
    let theta_txt = report
        .model
        .theta
        .map_or(String::new(), |t| format!(" (theta = {t})"));
    s.push_str(&format!(
        "model: {}{}  p = {}  q = {}\n",
        report.model.family, theta_txt, report.model.p, report.model.q
    ));
    let m = report.model.p.max(report.model.q);
    s.push_str(&format!(
        "rows: {} ({} in likelihood)  converged: {} in {} iterations\n\n",
        report.n,
        report.n - m,
        if report.converged { "yes" } else { "NO" },
        report.iterations
    ));
    s.push_str(&format!(
        "{:<10} {:>14} {:>14} {:>10}\n",
        "parameter", "estimate", "se", "p"
    ));
    for (i, name) in report.names.iter().enumerate() {
        let se_txt = report
            .se
            .as_ref()
            .map_or("--".to_string(), |v| format!("({:.6})", v[i]));
        // p-values are reported for the regression coefficients; the
        // dispersion and ARMA rows keep their standard errors only.
        let p_txt = if name.starts_with("beta") {
            report
                .p_values
                .as_ref()
                .map_or("--".to_string(), |v| format!("{:.4}", v[i]))
        } else {
            String::new()
        };
        s.push_str(&format!(
            "{:<10} {:>14.6} {:>14} {:>10}\n",
            name, report.estimates[i], se_txt, p_txt
        ));
    }
    s.push_str(&format!(
        "\nloglik: {:.4} (kernel part {:.4})\naic: {:.4}  bic: {:.4}  rmse: {:.6}\n",
        report.loglik_full, report.loglik_kernel, report.aic, report.bic, report.rmse
    ));
    s
}

/// Long-format CSV of the replicated-fit experiment: one row per
/// (n, phi, parameter).
pub fn mc_table_csv(table: &McResultTable) -> String {
    let mut s = String::from("n,phi,parameter,bias,mse,used,excluded,ok\n");
    for cell in &table.cells {
        for (i, name) in cell.names.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{name},{},{},{},{},{}\n",
                cell.n, cell.phi, cell.bias[i], cell.mse[i], cell.used, cell.excluded, cell.ok
            ));
        }
    }
    s
}

pub fn mc_table_json(table: &McResultTable) -> Result<String> {
    serde_json::to_string_pretty(table)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Data(format!("cannot serialize experiment table: {e}")))
}

/// Wide text view: per sample size, parameter rows with one bias/mse pair
/// per dispersion value.
pub fn render_mc_text(table: &McResultTable) -> String {
    let mut s = String::new();
    let mut ns: Vec<usize> = table.cells.iter().map(|c| c.n).collect();
    ns.dedup();
    for n in ns {
        let cells: Vec<_> = table.cells.iter().filter(|c| c.n == n).collect();
        if cells.is_empty() {
            continue;
        }
        s.push_str(&format!("n = {n}  (replicates = {})\n", table.replicates));
        s.push_str(&format!("{:<10}", "parameter"));
        for c in &cells {
            s.push_str(&format!(
                "{:>14}{:>14}",
                format!("bias@{}", c.phi),
                format!("mse@{}", c.phi)
            ));
        }
        s.push('\n');
        for (i, name) in cells[0].names.iter().enumerate() {
            s.push_str(&format!("{:<10}", name));
            for c in &cells {
                s.push_str(&format!("{:>14.5}{:>14.5}", c.bias[i], c.mse[i]));
            }
            s.push('\n');
        }
        for c in &cells {
            if c.excluded > 0 {
                s.push_str(&format!(
                    "  phi = {}: {} of {} replicates excluded\n",
                    c.phi, c.excluded, table.replicates
                ));
            }
        }
        s.push('\n');
    }
    s
}

/// Serializable residual diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualReportDto {
    pub rq: Vec<f64>,
    pub acf: Vec<f64>,
    pub pacf: Vec<f64>,
    pub ljung_box_statistic: f64,
    pub ljung_box_p_value: f64,
    pub ljung_box_lags: usize,
    pub ks_stat: f64,
    pub envelope_lower: Vec<f64>,
    pub envelope_median: Vec<f64>,
    pub envelope_upper: Vec<f64>,
}

impl ResidualReportDto {
    pub fn from_report(rep: &ResidualReport) -> Self {
        ResidualReportDto {
            rq: rep.rq.clone(),
            acf: rep.acf.clone(),
            pacf: rep.pacf.clone(),
            ljung_box_statistic: rep.ljung_box.statistic,
            ljung_box_p_value: rep.ljung_box.p_value,
            ljung_box_lags: rep.ljung_box.lags,
            ks_stat: rep.ks_stat,
            envelope_lower: rep.envelope.lower.clone(),
            envelope_median: rep.envelope.median.clone(),
            envelope_upper: rep.envelope.upper.clone(),
        }
    }
}

pub fn residual_report_json(dto: &ResidualReportDto) -> Result<String> {
    serde_json::to_string_pretty(dto)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Data(format!("cannot serialize residual report: {e}")))
}

/// Plot-ready envelope CSV: sorted observed quantile residuals next to
/// the pointwise band values.
pub fn envelope_csv(dto: &ResidualReportDto) -> String {
    let mut rq = dto.rq.clone();
    rq.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut s = String::from("order,observed,lower,median,upper\n");
    for (i, v) in rq.iter().enumerate() {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            i + 1,
            v,
            dto.envelope_lower[i],
            dto.envelope_median[i],
            dto.envelope_upper[i]
        ));
    }
    s
}

pub fn correlogram_csv(dto: &ResidualReportDto) -> String {
    let mut s = String::from("lag,acf,pacf\n");
    for (k, (a, p)) in dto.acf.iter().zip(&dto.pacf).enumerate() {
        s.push_str(&format!("{},{},{}\n", k + 1, a, p));
    }
    s
}

pub fn render_residual_text(dto: &ResidualReportDto) -> String {
    let mut rq = dto.rq.clone();
    rq.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let outside = rq
        .iter()
        .enumerate()
        .filter(|(i, v)| **v < dto.envelope_lower[*i] || **v > dto.envelope_upper[*i])
        .count();
    let mut s = String::new();
    s.push_str(&format!("residuals: {}\n", dto.rq.len()));
    s.push_str(&format!(
        "portmanteau({} lags): statistic = {:.4}, p = {:.4}\n",
        dto.ljung_box_lags, dto.ljung_box_statistic, dto.ljung_box_p_value
    ));
    s.push_str(&format!("ks distance from standard normal: {:.4}\n", dto.ks_stat));
    s.push_str(&format!(
        "envelope: {} of {} points outside the band\n",
        outside,
        dto.rq.len()
    ));
    let show = dto.acf.len().min(5);
    s.push_str("acf: ");
    for a in dto.acf.iter().take(show) {
        s.push_str(&format!("{a:.3} "));
    }
    s.push('\n');
    s
}

/// Simulated dataset as CSV with generic column names (y, x0.., w0..),
/// including intercept columns so the file is self-describing.
pub fn dataset_csv(data: &TimeSeriesData) -> String {
    let mut header = String::from("y");
    for j in 0..data.x().ncols() {
        header.push_str(&format!(",x{j}"));
    }
    for j in 0..data.w().ncols() {
        header.push_str(&format!(",w{j}"));
    }
    let mut s = header;
    s.push('\n');
    for t in 0..data.n() {
        s.push_str(&format!("{}", data.y()[t]));
        for j in 0..data.x().ncols() {
            s.push_str(&format!(",{}", data.x()[(t, j)]));
        }
        for j in 0..data.w().ncols() {
            s.push_str(&format!(",{}", data.w()[(t, j)]));
        }
        s.push('\n');
    }
    s
}

/// Serializable stationarity/moment summary for an ARMA coefficient pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryReport {
    pub kappa: Vec<f64>,
    pub zeta: Vec<f64>,
    pub phi: f64,
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub stationary: bool,
    pub ar_root_moduli: Vec<f64>,
    pub invertible: bool,
    pub ma_root_moduli: Vec<f64>,
    pub psi: Vec<f64>,
    pub truncation: usize,
    pub variance: f64,
    pub autocorr: Vec<f64>,
    pub autocov: Vec<f64>,
}

impl TheoryReport {
    pub fn new(
        poly: &ArmaPolynomials,
        phi: f64,
        kernel: &KernelFamily,
        stationarity: &RootReport,
        invertibility: &RootReport,
        moments: &MarginalMoments,
        lags: usize,
    ) -> Self {
        TheoryReport {
            kappa: poly.kappa.clone(),
            zeta: poly.zeta.clone(),
            phi,
            family: kernel.name().to_string(),
            theta: kernel.theta(),
            stationary: stationarity.all_outside,
            ar_root_moduli: stationarity.root_moduli.clone(),
            invertible: invertibility.all_outside,
            ma_root_moduli: invertibility.root_moduli.clone(),
            psi: moments.psi[..=lags.min(moments.psi.len() - 1)].to_vec(),
            truncation: moments.truncation,
            variance: moments.variance(),
            autocorr: (0..=lags.min(moments.max_lag()))
                .map(|k| moments.autocorr(k))
                .collect(),
            autocov: (0..=lags.min(moments.max_lag()))
                .map(|k| moments.autocov(k))
                .collect(),
        }
    }
}

pub fn theory_report_json(rep: &TheoryReport) -> Result<String> {
    serde_json::to_string_pretty(rep)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Data(format!("cannot serialize theory report: {e}")))
}

pub fn render_theory_text(rep: &TheoryReport) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "ar coefficients: {:?}\nma coefficients: {:?}\n",
        rep.kappa, rep.zeta
    ));
    s.push_str(&format!(
        "stationary: {} (ar root moduli {:?})\n",
        rep.stationary, rep.ar_root_moduli
    ));
    s.push_str(&format!(
        "invertible: {} (ma root moduli {:?})\n",
        rep.invertible, rep.ma_root_moduli
    ));
    s.push_str(&format!(
        "kernel: {}{}  dispersion: {}\n",
        rep.family,
        rep.theta.map_or(String::new(), |t| format!(" (theta = {t})")),
        rep.phi
    ));
    s.push_str(&format!(
        "log-scale variance: {:.6} (tail truncated at {})\n",
        rep.variance, rep.truncation
    ));
    s.push_str("lag:      ");
    for k in 0..rep.autocorr.len() {
        s.push_str(&format!("{k:>9}"));
    }
    s.push_str("\nautocorr: ");
    for a in &rep.autocorr {
        s.push_str(&format!("{a:>9.4}"));
    }
    s.push_str("\npsi:      ");
    for p in &rep.psi {
        s.push_str(&format!("{p:>9.4}"));
    }
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::{fit, FitOptions};
    use crate::simulation::{generate_dataset, CovariateRule};

    fn example_fit() -> (FitResult, TimeSeriesData) {
        let spec = ModelSpec::new(1, 1, 2, 1, KernelFamily::log_student_t(4.0).unwrap()).unwrap();
        let truth = ParamVector {
            beta: vec![1.0, 0.7],
            tau: vec![0.0],
            kappa: vec![0.6],
            zeta: vec![0.3],
        };
        let data = generate_dataset(
            &spec,
            &truth,
            200,
            &CovariateRule::IidStandardNormal,
            0,
            77,
        )
        .unwrap();
        let res = fit(&spec, &data, &FitOptions::default()).unwrap();
        (res, data)
    }

    #[test]
    fn fit_report_round_trips_exactly_through_json() {
        let (res, _) = example_fit();
        let echo = DataEcho::Columns {
            y: "y".into(),
            x: vec!["x1".into()],
            w: vec![],
            x_intercept: true,
            w_intercept: true,
        };
        let report = FitReport::from_fit(&res, Some(echo));
        let json = fit_report_json(&report).unwrap();
        let back = parse_fit_report(&json).unwrap();

        assert_eq!(back.schema_version, SCHEMA_VERSION);
        for (a, b) in report.estimates.iter().zip(&back.estimates) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in report.fitted.z.iter().zip(&back.fitted.z) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.names, report.names);

        let spec = back.model_spec().unwrap();
        assert_eq!(spec, res.spec);
        let theta = back.param_vector().unwrap();
        assert_eq!(theta, res.theta);
        let mapping = back.data_echo.unwrap().mapping().unwrap();
        assert_eq!(mapping.y, "y");
        assert!(mapping.x_intercept);
    }

    #[test]
    fn report_reconstruction_rejects_bad_family_blocks() {
        let (res, _) = example_fit();
        let mut report = FitReport::from_fit(&res, None);
        report.model.theta = None;
        assert!(report.model_spec().is_err());
        report.model.family = "gaussian".into();
        assert!(report.model_spec().is_err());
    }

    #[test]
    fn text_and_csv_renderings_contain_the_essentials() {
        let (res, _) = example_fit();
        let report = FitReport::from_fit(&res, None);
        let txt = render_fit_text(&report);
        assert!(txt.contains("log-student-t"));
        assert!(txt.contains("beta1"));
        assert!(txt.contains("kappa1"));
        assert!(txt.contains("aic"));

        let csv = fit_report_csv(&report);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + report.names.len());
        assert!(lines[0].starts_with("parameter,"));
        assert!(lines[1].starts_with("beta0,"));
    }

    #[test]
    fn mc_outputs_cover_every_cell_row() {
        use crate::simulation::{run_monte_carlo, McConfig};
        let spec = ModelSpec::new(1, 0, 1, 1, KernelFamily::log_normal()).unwrap();
        let config = McConfig {
            spec: spec.clone(),
            true_theta: ParamVector {
                beta: vec![1.0],
                tau: vec![0.0],
                kappa: vec![0.5],
                zeta: vec![],
            },
            n_grid: vec![40, 60],
            phi_grid: vec![0.5, 1.0],
            replicates: 2,
            burnin: 0,
            covariate_rule: CovariateRule::IidStandardNormal,
            common_random_numbers: true,
            seed: 1,
            fit_options: FitOptions::default(),
        };
        let table = run_monte_carlo(&config).unwrap();
        let csv = mc_table_csv(&table);
        // 4 cells x 4 rows (beta0, tau0, kappa1, phi) + header.
        assert_eq!(csv.lines().count(), 1 + 4 * 4);
        let json = mc_table_json(&table).unwrap();
        assert!(json.contains("\"cells\""));
        let txt = render_mc_text(&table);
        assert!(txt.contains("n = 40"));
        assert!(txt.contains("bias@0.5"));
    }

    #[test]
    fn dataset_csv_round_trips_through_the_loader() {
        let spec = ModelSpec::new(1, 1, 2, 1, KernelFamily::log_normal()).unwrap();
        let truth = ParamVector {
            beta: vec![1.0, 0.7],
            tau: vec![0.0],
            kappa: vec![0.6],
            zeta: vec![0.3],
        };
        let data = generate_dataset(
            &spec,
            &truth,
            25,
            &CovariateRule::IidStandardNormal,
            0,
            3,
        )
        .unwrap();
        let csv = dataset_csv(&data);
        let mut f = tempfile::NamedTempFile::new().unwrap();
        use std::io::Write;
        f.write_all(csv.as_bytes()).unwrap();
        f.flush().unwrap();
        let mapping = ColumnMapping {
            y: "y".into(),
            x: vec!["x0".into(), "x1".into()],
            w: vec!["w0".into()],
            x_intercept: false,
            w_intercept: false,
        };
        let back = crate::data::load_csv(f.path(), &mapping).unwrap();
        assert_eq!(back.n(), 25);
        for t in 0..25 {
            assert!((back.y()[t] - data.y()[t]).abs() < 1e-12 * data.y()[t].abs());
            assert_eq!(back.x()[(t, 0)], 1.0);
        }
    }

    #[test]
    fn theory_report_serializes() {
        use crate::theory::{check_invertibility, check_stationarity, marginal_moments, PhiSpec};
        let poly = ArmaPolynomials::new(vec![0.6], vec![0.3]);
        let kernel = KernelFamily::log_normal();
        let st = check_stationarity(&poly);
        let inv = check_invertibility(&poly);
        let mm = marginal_moments(&poly, PhiSpec::Constant(1.0), &kernel, 10).unwrap();
        let rep = TheoryReport::new(&poly, 1.0, &kernel, &st, &inv, &mm, 10);
        assert!(rep.stationary && rep.invertible);
        assert!((rep.autocorr[1] - 0.7324137931034482).abs() < 1e-9);
        let json = theory_report_json(&rep).unwrap();
        assert!(json.contains("\"variance\""));
        let txt = render_theory_text(&rep);
        assert!(txt.contains("stationary: true"));

        let dto = ResidualReportDto {
            rq: vec![0.3, -0.2, 0.1],
            acf: vec![0.05, -0.02],
            pacf: vec![0.05, -0.03],
            ljung_box_statistic: 1.2,
            ljung_box_p_value: 0.55,
            ljung_box_lags: 2,
            ks_stat: 0.08,
            envelope_lower: vec![-1.0, -0.5, 0.0],
            envelope_median: vec![-0.4, 0.0, 0.4],
            envelope_upper: vec![0.0, 0.5, 1.0],
        };
        let txt = render_residual_text(&dto);
        assert!(txt.contains("portmanteau"));
        let env = envelope_csv(&dto);
        assert_eq!(env.lines().count(), 4);
        let cg = correlogram_csv(&dto);
        assert!(cg.starts_with("lag,acf,pacf"));
        assert!(residual_report_json(&dto).unwrap().contains("ks_stat"));
    }
}
