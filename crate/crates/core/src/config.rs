//! TOML-driven runners behind the command-line interface.
//!
//! Every subcommand resolves to one runner here; the binary only parses
//! arguments, prints summaries, and maps errors to exit codes. Unknown
//! TOML keys are rejected so typos fail loudly instead of silently
//! falling back to defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::data::{
    build_mortality_design, load_csv, load_mortality_csv, ColumnMapping, MortalityDesign,
    TrendScale,
};
use crate::diagnostics::{residual_report_at, EnvelopeOptions};
use crate::error::{Error, Result};
use crate::estimation::{fit, profile_theta, FitOptions};
use crate::kernels::KernelFamily;
use crate::model::{ModelSpec, ParamVector, TimeSeriesData};
use crate::report::{
    correlogram_csv, dataset_csv, envelope_csv, fit_report_csv, fit_report_json, mc_table_csv,
    mc_table_json, parse_fit_report, render_fit_text, render_mc_text, render_residual_text,
    render_theory_text, residual_report_json, theory_report_json, DataEcho, FitReport,
    ResidualReportDto, TheoryReport,
};
use crate::simulation::{run_monte_carlo, CovariateRule, McConfig};
use crate::theory::{
    check_invertibility, check_stationarity, marginal_moments, ArmaPolynomials, PhiSpec,
};

/// Environment variable naming the default directory for written files.
pub const OUTPUT_DIR_ENV: &str = "LSARMAX_OUTPUT_DIR";

pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// What a runner produced: files written plus warnings for stderr.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub paths: Vec<PathBuf>,
    pub warnings: Vec<String>,
    /// Human-readable summary for stdout.
    pub summary: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub family: String,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub theta_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub p: usize,
    #[serde(default)]
    pub q: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub path: String,
    /// "columns" maps named CSV columns; "mortality" loads the weekly
    /// cardiovascular mortality file and builds its standard design.
    #[serde(default = "default_design")]
    pub design: String,
    #[serde(default)]
    pub y: Option<String>,
    #[serde(default)]
    pub x: Vec<String>,
    #[serde(default)]
    pub w: Vec<String>,
    #[serde(default = "default_true")]
    pub x_intercept: bool,
    #[serde(default = "default_true")]
    pub w_intercept: bool,
    #[serde(default = "default_true")]
    pub center_temperature: bool,
    #[serde(default = "default_trend")]
    pub trend: String,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<String>,
    /// Subset of "json", "csv", "text"; empty means all.
    #[serde(default)]
    pub formats: Vec<String>,
    #[serde(default)]
    pub prefix: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptionsSection {
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for OptionsSection {
    fn default() -> Self {
        OptionsSection {
            max_iter: 500,
            grad_tol: 1e-6,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub model: ModelSection,
    pub data: DataSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub options: OptionsSection,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub beta: Vec<f64>,
    #[serde(default)]
    pub phi: Option<f64>,
    #[serde(default)]
    pub tau: Option<Vec<f64>>,
    #[serde(default)]
    pub kappa: Vec<f64>,
    #[serde(default)]
    pub zeta: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub model: ModelSection,
    pub params: ParamsSection,
    pub n: usize,
    #[serde(default)]
    pub burnin: usize,
    #[serde(default = "default_covariates")]
    pub covariates: String,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub n_grid: Vec<usize>,
    pub phi_grid: Vec<f64>,
    pub replicates: usize,
    #[serde(default)]
    pub burnin: usize,
    #[serde(default = "default_covariates")]
    pub covariates: String,
    #[serde(default = "default_true")]
    pub common_random_numbers: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfigToml {
    pub model: ModelSection,
    pub params: ParamsSection,
    pub mc: McSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub options: OptionsSection,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_design() -> String {
    "columns".into()
}
fn default_trend() -> String {
    "calendar-years".into()
}
fn default_covariates() -> String {
    "normal".into()
}
fn default_true() -> bool {
    true
}

/// Family name with aliases; the extra parameter is required exactly for
/// the two families that have one.
pub fn parse_kernel(family: &str, theta: Option<f64>) -> Result<KernelFamily> {
    let canon = family.trim().to_lowercase().replace('_', "-");
    match canon.as_str() {
        "log-normal" | "lognormal" | "ln" => {
            if theta.is_some() {
                return Err(Error::Config(
                    "the log-normal family takes no extra parameter".into(),
                ));
            }
            Ok(KernelFamily::log_normal())
        }
        "log-student-t" | "logstudentt" | "log-t" | "logt" | "student-t" => {
            let t = theta.ok_or_else(|| {
                Error::Config("the log-student-t family needs theta (degrees of freedom)".into())
            })?;
            KernelFamily::log_student_t(t)
        }
        "log-power-exponential" | "logpowerexponential" | "log-pe" | "logpe"
        | "power-exponential" => {
            let t = theta.ok_or_else(|| {
                Error::Config("the log-power-exponential family needs theta in (-1, 1]".into())
            })?;
            KernelFamily::log_power_exponential(t)
        }
        other => Err(Error::Config(format!(
            "unknown family '{other}'; expected log-normal, log-student-t, or log-power-exponential"
        ))),
    }
}

fn parse_trend(trend: &str) -> Result<TrendScale> {
    match trend {
        "calendar-years" => Ok(TrendScale::CalendarYears),
        "week-index" => Ok(TrendScale::WeekIndex),
        other => Err(Error::Config(format!(
            "unknown trend scale '{other}'; expected calendar-years or week-index"
        ))),
    }
}

fn parse_covariate_rule(name: &str) -> Result<CovariateRule> {
    match name {
        "normal" => Ok(CovariateRule::IidStandardNormal),
        "uniform" => Ok(CovariateRule::IidUniform01),
        other => Err(Error::Config(format!(
            "unknown covariate rule '{other}'; expected normal or uniform"
        ))),
    }
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| {
        Error::Config(format!("{}: {}", path.display(), e.to_string().replace('\n', " ")))
    })
}

struct OutputPlan {
    dir: PathBuf,
    prefix: String,
    formats: Vec<String>,
}

fn output_plan(
    section: &OutputSection,
    cli_dir: Option<&Path>,
    default_prefix: &str,
) -> Result<OutputPlan> {
    let dir = cli_dir
        .map(Path::to_path_buf)
        .or_else(|| section.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(default_output_dir);
    let prefix = section
        .prefix
        .clone()
        .unwrap_or_else(|| default_prefix.to_string());
    let formats = if section.formats.is_empty() {
        vec!["json".into(), "csv".into(), "text".into()]
    } else {
        for f in &section.formats {
            if !matches!(f.as_str(), "json" | "csv" | "text") {
                return Err(Error::Config(format!(
                    "unknown output format '{f}'; expected json, csv, or text"
                )));
            }
        }
        section.formats.clone()
    };
    Ok(OutputPlan {
        dir,
        prefix,
        formats,
    })
}

fn write_artifact(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    Ok(path)
}

fn load_configured_data(data: &DataSection) -> Result<(TimeSeriesData, DataEcho)> {
    let path = Path::new(&data.path);
    match data.design.as_str() {
        "columns" => {
            let y = data.y.clone().ok_or_else(|| {
                Error::Config("data.y names the response column and is required".into())
            })?;
            let mapping = ColumnMapping {
                y,
                x: data.x.clone(),
                w: data.w.clone(),
                x_intercept: data.x_intercept,
                w_intercept: data.w_intercept,
            };
            let ts = load_csv(path, &mapping)?;
            Ok((ts, DataEcho::from_mapping(&mapping)))
        }
        "mortality" => {
            if data.y.is_some() || !data.x.is_empty() || !data.w.is_empty() {
                return Err(Error::Config(
                    "the mortality design fixes its columns; do not set data.y/x/w".into(),
                ));
            }
            let raw = load_mortality_csv(path)?;
            let design = MortalityDesign {
                center_temperature: data.center_temperature,
                trend: parse_trend(&data.trend)?,
            };
            let ts = build_mortality_design(&raw, &design)?;
            Ok((ts, DataEcho::from_mortality(&design)))
        }
        other => Err(Error::Config(format!(
            "unknown data design '{other}'; expected columns or mortality"
        ))),
    }
}

fn effective_seed(config_seed: Option<u64>, cli_seed: Option<u64>) -> u64 {
    cli_seed.or(config_seed).unwrap_or(0)
}

pub fn run_fit(
    config_path: &Path,
    cli_seed: Option<u64>,
    cli_output: Option<&Path>,
) -> Result<RunOutput> {
    let config: FitConfig = read_toml(config_path)?;
    let (data, echo) = load_configured_data(&config.data)?;
    let seed = effective_seed(config.seed, cli_seed);
    let fopts = FitOptions {
        max_iter: config.options.max_iter,
        grad_tol: config.options.grad_tol,
        init: None,
        seed,
    };
    let plan = output_plan(&config.output, cli_output, "fit")?;

    let n_beta = data.x().ncols();
    let n_tau = data.w().ncols();
    let mut profile_rows: Option<Vec<(f64, Option<f64>)>> = None;
    let result = match (&config.model.theta_grid, config.model.theta) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "set model.theta or model.theta_grid, not both".into(),
            ))
        }
        (Some(grid), None) => {
            if grid.is_empty() {
                return Err(Error::Config("model.theta_grid is empty".into()));
            }
            let kernel = parse_kernel(&config.model.family, Some(grid[0]))?;
            let spec = ModelSpec::new(config.model.p, config.model.q, n_beta, n_tau, kernel)?;
            let profile = profile_theta(&spec, &data, grid, &fopts)?;
            profile_rows = Some(profile.table);
            profile.best_fit
        }
        (None, theta) => {
            let kernel = parse_kernel(&config.model.family, theta)?;
            let spec = ModelSpec::new(config.model.p, config.model.q, n_beta, n_tau, kernel)?;
            fit(&spec, &data, &fopts)?
        }
    };

    let report = FitReport::from_fit(&result, Some(echo));
    let mut out = RunOutput::default();
    if !result.converged {
        out.warnings
            .push("optimizer did not meet the gradient tolerance".into());
    }
    if result.se.is_none() {
        out.warnings.push(
            "observed information is not positive definite; no standard errors".into(),
        );
    }
    for f in &plan.formats {
        let path = match f.as_str() {
            "json" => write_artifact(
                &plan.dir,
                &format!("{}.json", plan.prefix),
                &fit_report_json(&report)?,
            )?,
            "csv" => write_artifact(
                &plan.dir,
                &format!("{}.csv", plan.prefix),
                &fit_report_csv(&report),
            )?,
            _ => write_artifact(
                &plan.dir,
                &format!("{}.txt", plan.prefix),
                &render_fit_text(&report),
            )?,
        };
        out.paths.push(path);
    }
    if let Some(rows) = profile_rows {
        let mut csv = String::from("theta,loglik\n");
        for (th, ll) in &rows {
            match ll {
                Some(v) => csv.push_str(&format!("{th},{v}\n")),
                None => csv.push_str(&format!("{th},\n")),
            }
        }
        out.paths.push(write_artifact(
            &plan.dir,
            &format!("{}_profile.csv", plan.prefix),
            &csv,
        )?);
    }
    out.summary = render_fit_text(&report);
    Ok(out)
}

fn params_to_theta(
    spec: &ModelSpec,
    params: &ParamsSection,
    require_scalar_tau: bool,
) -> Result<ParamVector> {
    let tau = match (&params.tau, params.phi) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("set params.phi or params.tau, not both".into()))
        }
        (Some(t), None) => t.clone(),
        (None, Some(phi)) => {
            if !(phi > 0.0) || !phi.is_finite() {
                return Err(Error::Config(format!(
                    "params.phi must be positive, got {phi}"
                )));
            }
            vec![phi.ln()]
        }
        (None, None) => {
            return Err(Error::Config(
                "params needs phi (dispersion) or tau (its log-linear coefficients)".into(),
            ))
        }
    };
    if require_scalar_tau && tau.len() != 1 {
        return Err(Error::Config(
            "simulation uses an intercept-only dispersion design; tau must have one entry".into(),
        ));
    }
    let theta = ParamVector {
        beta: params.beta.clone(),
        tau,
        kappa: params.kappa.clone(),
        zeta: params.zeta.clone(),
    };
    theta.validate_for(spec)?;
    Ok(theta)
}

pub fn run_simulate(
    config_path: &Path,
    cli_seed: Option<u64>,
    cli_output: Option<&Path>,
) -> Result<RunOutput> {
    let config: SimulateConfig = read_toml(config_path)?;
    if config.model.theta_grid.is_some() {
        return Err(Error::Config(
            "theta_grid is a fitting option; simulation needs a single theta".into(),
        ));
    }
    let kernel = parse_kernel(&config.model.family, config.model.theta)?;
    let n_beta = config.params.beta.len();
    let spec = ModelSpec::new(config.model.p, config.model.q, n_beta.max(1), 1, kernel)?;
    let theta = params_to_theta(&spec, &config.params, true)?;
    let rule = parse_covariate_rule(&config.covariates)?;
    let seed = effective_seed(config.seed, cli_seed);

    let mut out = RunOutput::default();
    if !check_stationarity(&theta.arma()).all_outside {
        out.warnings.push(
            "the autoregressive polynomial is not stationary; the simulated series may diverge"
                .into(),
        );
    }

    let data = crate::simulation::generate_dataset(
        &spec,
        &theta,
        config.n,
        &rule,
        config.burnin,
        seed,
    )?;
    let plan = output_plan(&config.output, cli_output, "simulated")?;
    let path = write_artifact(
        &plan.dir,
        &format!("{}.csv", plan.prefix),
        &dataset_csv(&data),
    )?;
    out.summary = format!(
        "wrote {} rows ({} location columns) to {}",
        data.n(),
        data.x().ncols(),
        path.display()
    );
    out.paths.push(path);
    Ok(out)
}

pub fn run_mc(
    config_path: &Path,
    cli_seed: Option<u64>,
    cli_output: Option<&Path>,
) -> Result<RunOutput> {
    let config: McConfigToml = read_toml(config_path)?;
    if config.model.theta_grid.is_some() {
        return Err(Error::Config(
            "theta_grid is a fitting option; the experiment needs a single theta".into(),
        ));
    }
    if config.params.phi.is_some() || config.params.tau.is_some() {
        return Err(Error::Config(
            "the dispersion comes from mc.phi_grid; do not set params.phi or params.tau".into(),
        ));
    }
    let kernel = parse_kernel(&config.model.family, config.model.theta)?;
    let n_beta = config.params.beta.len();
    let spec = ModelSpec::new(config.model.p, config.model.q, n_beta.max(1), 1, kernel)?;
    let true_theta = ParamVector {
        beta: config.params.beta.clone(),
        tau: vec![0.0],
        kappa: config.params.kappa.clone(),
        zeta: config.params.zeta.clone(),
    };
    true_theta.validate_for(&spec)?;
    let seed = effective_seed(config.seed, cli_seed);
    let mc = McConfig {
        spec,
        true_theta,
        n_grid: config.mc.n_grid.clone(),
        phi_grid: config.mc.phi_grid.clone(),
        replicates: config.mc.replicates,
        burnin: config.mc.burnin,
        covariate_rule: parse_covariate_rule(&config.mc.covariates)?,
        common_random_numbers: config.mc.common_random_numbers,
        seed,
        fit_options: FitOptions {
            max_iter: config.options.max_iter,
            grad_tol: config.options.grad_tol,
            init: None,
            seed,
        },
    };
    let table = run_monte_carlo(&mc)?;

    let mut out = RunOutput::default();
    for cell in &table.cells {
        if !cell.ok {
            out.warnings.push(format!(
                "cell n = {}, phi = {}: {} of {} replicates excluded",
                cell.n, cell.phi, cell.excluded, table.replicates
            ));
        }
    }
    let plan = output_plan(&config.output, cli_output, "mc")?;
    for f in &plan.formats {
        let path = match f.as_str() {
            "json" => write_artifact(
                &plan.dir,
                &format!("{}.json", plan.prefix),
                &mc_table_json(&table)?,
            )?,
            "csv" => write_artifact(
                &plan.dir,
                &format!("{}.csv", plan.prefix),
                &mc_table_csv(&table),
            )?,
            _ => write_artifact(
                &plan.dir,
                &format!("{}.txt", plan.prefix),
                &render_mc_text(&table),
            )?,
        };
        out.paths.push(path);
    }
    out.summary = render_mc_text(&table);
    Ok(out)
}

/// Arguments of the diagnose subcommand other than the two input files.
#[derive(Debug, Clone)]
pub struct DiagnoseArgs {
    pub seed: u64,
    pub envelope_replicates: usize,
    pub level: f64,
    pub lags: usize,
    pub refit: bool,
    /// Column mapping override when the fit report carries none (or the
    /// data file uses different names).
    pub mapping: Option<ColumnMapping>,
    pub output: Option<PathBuf>,
}

pub fn run_diagnose(fit_path: &Path, data_path: &Path, args: &DiagnoseArgs) -> Result<RunOutput> {
    let json = std::fs::read_to_string(fit_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", fit_path.display())))?;
    let report = parse_fit_report(&json)?;
    let spec = report.model_spec()?;
    let theta = report.param_vector()?;

    let data = if let Some(mapping) = &args.mapping {
        load_csv(data_path, mapping)?
    } else {
        match &report.data_echo {
            Some(echo) => {
                if let Some(mapping) = echo.mapping() {
                    load_csv(data_path, &mapping)?
                } else if let Some(design) = echo.mortality_design() {
                    build_mortality_design(&load_mortality_csv(data_path)?, &design)?
                } else {
                    unreachable!("echo is always one of the two designs")
                }
            }
            None => {
                return Err(Error::Config(
                    "the fit report carries no data mapping; pass column names explicitly".into(),
                ))
            }
        }
    };
    if data.n() != report.n {
        return Err(Error::Data(format!(
            "data has {} rows but the fit was computed on {}",
            data.n(),
            report.n
        )));
    }

    let env_opts = EnvelopeOptions {
        replicates: args.envelope_replicates,
        level: args.level,
        seed: args.seed,
        refit: args.refit,
    };
    let rep = residual_report_at(&spec, &theta, &data, &env_opts, args.lags, args.lags)?;
    let dto = ResidualReportDto::from_report(&rep);

    let dir = args
        .output
        .clone()
        .unwrap_or_else(default_output_dir);
    let mut out = RunOutput::default();
    out.paths.push(write_artifact(
        &dir,
        "diagnostics.json",
        &residual_report_json(&dto)?,
    )?);
    out.paths
        .push(write_artifact(&dir, "diagnostics_envelope.csv", &envelope_csv(&dto))?);
    out.paths.push(write_artifact(
        &dir,
        "diagnostics_correlogram.csv",
        &correlogram_csv(&dto),
    )?);
    out.paths.push(write_artifact(
        &dir,
        "diagnostics.txt",
        &render_residual_text(&dto),
    )?);
    out.summary = render_residual_text(&dto);
    Ok(out)
}

/// Arguments of the theory subcommand.
#[derive(Debug, Clone)]
pub struct TheoryArgs {
    pub kappa: Vec<f64>,
    pub zeta: Vec<f64>,
    pub phi: f64,
    pub lags: usize,
    pub family: String,
    pub theta: Option<f64>,
    pub format: String,
    pub output: Option<PathBuf>,
}

pub fn run_theory(args: &TheoryArgs) -> Result<RunOutput> {
    let kernel = parse_kernel(&args.family, args.theta)?;
    let poly = ArmaPolynomials::new(args.kappa.clone(), args.zeta.clone());
    let st = check_stationarity(&poly);
    let inv = check_invertibility(&poly);
    let mm = marginal_moments(&poly, PhiSpec::Constant(args.phi), &kernel, args.lags)?;
    let rep = TheoryReport::new(&poly, args.phi, &kernel, &st, &inv, &mm, args.lags);

    let rendered = match args.format.as_str() {
        "json" => theory_report_json(&rep)?,
        "text" => render_theory_text(&rep),
        other => {
            return Err(Error::Config(format!(
                "unknown format '{other}'; expected text or json"
            )))
        }
    };
    let mut out = RunOutput {
        summary: rendered.clone(),
        ..RunOutput::default()
    };
    if let Some(dir) = &args.output {
        let name = if args.format == "json" {
            "theory.json"
        } else {
            "theory.txt"
        };
        out.paths.push(write_artifact(dir, name, &rendered)?);
    }
    if !rep.invertible {
        out.warnings
            .push("moving-average polynomial is not invertible".into());
    }
    Ok(out)
}
