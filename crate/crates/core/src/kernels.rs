//! Density-generating kernels of the log-symmetric family.
//!
//! A positive response Y = exp(V) is log-symmetric when V has density
//! `xi / sqrt(phi) * g((v - mu)^2 / phi)`, where `g` is the kernel, `xi`
//! its normalizing constant, `exp(mu)` the median of Y, and `phi` the
//! skewness/relative-dispersion parameter. Three kernels are supported:
//! normal, Student-t, and power-exponential, giving the log-normal,
//! log-Student-t, and log-power-exponential distributions.
//!
//! The extra parameter `theta` is a fixed hyperparameter, never part of
//! the optimized parameter vector; a profile grid in the estimation
//! module selects it. Adding a kernel means extending the match arms in
//! this file only.

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};

const LN_2: f64 = std::f64::consts::LN_2;
const PI: f64 = std::f64::consts::PI;

/// Argument floor used when evaluating the kernel derivative ratio inside
/// score computations; the power-exponential ratio is singular at u = 0
/// for theta > 0.
pub const DERIV_CLAMP: f64 = 1e-12;

/// Kernel choice with its fixed extra parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "theta", rename_all = "kebab-case")]
pub enum KernelFamily {
    /// Normal kernel: g(u) = exp(-u/2).
    LogNormal,
    /// Student-t kernel with theta > 0 degrees of freedom:
    /// g(u) = (1 + u/theta)^(-(theta+1)/2).
    LogStudentT(f64),
    /// Power-exponential kernel with theta in (-1, 1]:
    /// g(u) = exp(-u^(1/(1+theta)) / 2).
    LogPowerExponential(f64),
}

impl KernelFamily {
    pub fn log_normal() -> Self {
        KernelFamily::LogNormal
    }

    pub fn log_student_t(theta: f64) -> Result<Self> {
        let k = KernelFamily::LogStudentT(theta);
        k.validate()?;
        Ok(k)
    }

    pub fn log_power_exponential(theta: f64) -> Result<Self> {
        let k = KernelFamily::LogPowerExponential(theta);
        k.validate()?;
        Ok(k)
    }

    /// Checks the extra-parameter domain.
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelFamily::LogNormal => Ok(()),
            KernelFamily::LogStudentT(t) if t.is_finite() && t > 0.0 => Ok(()),
            KernelFamily::LogStudentT(t) => Err(Error::Domain(format!(
                "log-student-t requires theta > 0, got {t}"
            ))),
            KernelFamily::LogPowerExponential(t) if t.is_finite() && t > -1.0 && t <= 1.0 => {
                Ok(())
            }
            KernelFamily::LogPowerExponential(t) => Err(Error::Domain(format!(
                "log-power-exponential requires theta in (-1, 1], got {t}"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::LogNormal => "log-normal",
            KernelFamily::LogStudentT(_) => "log-student-t",
            KernelFamily::LogPowerExponential(_) => "log-power-exponential",
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match *self {
            KernelFamily::LogNormal => None,
            KernelFamily::LogStudentT(t) | KernelFamily::LogPowerExponential(t) => Some(t),
        }
    }

    /// Same family with a different extra parameter; errors for the
    /// log-normal family, which has none.
    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        match self {
            KernelFamily::LogNormal => Err(Error::Domain(
                "log-normal has no extra parameter".into(),
            )),
            KernelFamily::LogStudentT(_) => Self::log_student_t(theta),
            KernelFamily::LogPowerExponential(_) => Self::log_power_exponential(theta),
        }
    }

    /// Kernel function g(u) for u >= 0.
    pub fn g(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::Domain(format!("kernel argument must be >= 0, got {u}")));
        }
        self.validate()?;
        Ok(self.log_g(u).exp())
    }

    /// log g(u). Caller guarantees u >= 0; hot path for the likelihood.
    pub fn log_g(&self, u: f64) -> f64 {
        debug_assert!(u >= 0.0);
        match *self {
            KernelFamily::LogNormal => -0.5 * u,
            KernelFamily::LogStudentT(t) => -0.5 * (t + 1.0) * (1.0 + u / t).ln(),
            KernelFamily::LogPowerExponential(t) => -0.5 * u.powf(1.0 / (1.0 + t)),
        }
    }

    /// Normalizing constant xi such that xi * g(z^2) integrates to one.
    pub fn normalizer(&self) -> f64 {
        self.log_normalizer().exp()
    }

    /// log of the normalizing constant.
    pub fn log_normalizer(&self) -> f64 {
        match *self {
            KernelFamily::LogNormal => -0.5 * (2.0 * PI).ln(),
            KernelFamily::LogStudentT(t) => {
                ln_gamma((t + 1.0) / 2.0) - ln_gamma(t / 2.0) - 0.5 * (t * PI).ln()
            }
            KernelFamily::LogPowerExponential(t) => {
                -(3.0 + t) / 2.0 * LN_2 - ln_gamma((3.0 + t) / 2.0)
            }
        }
    }

    /// Derivative ratio g'(u)/g(u) = d/du log g(u).
    ///
    /// Singular at u = 0 for the power-exponential kernel with theta > 0;
    /// score computations clamp u to [`DERIV_CLAMP`] instead.
    pub fn g_log_deriv(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::Domain(format!("kernel argument must be >= 0, got {u}")));
        }
        match *self {
            KernelFamily::LogNormal => Ok(-0.5),
            KernelFamily::LogStudentT(t) => Ok(-(t + 1.0) / (2.0 * (t + u))),
            KernelFamily::LogPowerExponential(t) => {
                let e = 1.0 / (1.0 + t);
                if u == 0.0 {
                    if t > 0.0 {
                        return Err(Error::Domain(
                            "power-exponential derivative ratio singular at u = 0".into(),
                        ));
                    }
                    // theta = 0: exponent e - 1 = 0, ratio is constant -1/2.
                    if t == 0.0 {
                        return Ok(-0.5);
                    }
                    // theta < 0: u^(e-1) -> 0.
                    return Ok(0.0);
                }
                Ok(-e / 2.0 * u.powf(e - 1.0))
            }
        }
    }

    /// Derivative ratio with the argument floored at [`DERIV_CLAMP`].
    pub fn g_log_deriv_clamped(&self, u: f64) -> f64 {
        self.g_log_deriv(u.max(DERIV_CLAMP))
            .expect("clamped argument is positive")
    }

    /// Log density of Y = exp(V) at y, with median lambda and skewness phi.
    pub fn log_pdf(&self, y: f64, lambda: f64, phi: f64) -> Result<f64> {
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::Domain(format!("response must be positive, got {y}")));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("median must be positive, got {lambda}")));
        }
        if !(phi > 0.0) || !phi.is_finite() {
            return Err(Error::Domain(format!("skewness must be positive, got {phi}")));
        }
        let v = y.ln();
        let mu = lambda.ln();
        let z2 = (v - mu) * (v - mu) / phi;
        Ok(self.log_normalizer() - 0.5 * phi.ln() + self.log_g(z2) - v)
    }

    /// CDF of the standardized log-scale error z = (v - mu)/sqrt(phi).
    pub fn cdf_standard(&self, z: f64) -> f64 {
        match *self {
            KernelFamily::LogNormal => std_normal().cdf(z),
            KernelFamily::LogStudentT(t) => {
                StudentsT::new(0.0, 1.0, t).expect("validated theta").cdf(z)
            }
            KernelFamily::LogPowerExponential(t) => {
                if t == 0.0 {
                    // Exact collapse to the normal kernel; the erf route is
                    // more accurate than the incomplete-gamma one.
                    return std_normal().cdf(z);
                }
                if z == 0.0 {
                    return 0.5;
                }
                let a = (1.0 + t) / 2.0;
                let x = 0.5 * z.abs().powf(2.0 / (1.0 + t));
                0.5 + 0.5 * z.signum() * gamma_lr(a, x)
            }
        }
    }

    /// Quantile of the standardized error; inverse of [`cdf_standard`].
    pub fn quantile_standard(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("probability must be in (0,1), got {p}")));
        }
        match *self {
            KernelFamily::LogNormal => Ok(std_normal().inverse_cdf(p)),
            _ => {
                if p == 0.5 {
                    return Ok(0.0);
                }
                // Monotone CDF: expanding bracket then bisection.
                let mut lo = -1.0;
                let mut hi = 1.0;
                while self.cdf_standard(lo) > p && lo > -1e100 {
                    lo *= 2.0;
                }
                while self.cdf_standard(hi) < p && hi < 1e100 {
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if hi - lo <= 1e-13 * (1.0 + mid.abs()) {
                        break;
                    }
                    if self.cdf_standard(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
        }
    }

    /// n iid draws of the standardized error.
    ///
    /// Log-normal: standard normal. Log-Student-t: t(theta).
    /// Log-power-exponential: random sign times S^((1+theta)/2) with
    /// S ~ chi-square(1+theta).
    pub fn sample_standard<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match *self {
            KernelFamily::LogNormal => {
                let d = rand_distr::StandardNormal;
                (0..n).map(|_| d.sample(rng)).collect()
            }
            KernelFamily::LogStudentT(t) => {
                let d = rand_distr::StudentT::new(t).expect("validated theta");
                (0..n).map(|_| d.sample(rng)).collect()
            }
            KernelFamily::LogPowerExponential(t) => {
                let d = rand_distr::ChiSquared::new(1.0 + t).expect("validated theta");
                let half = (1.0 + t) / 2.0;
                (0..n)
                    .map(|_| {
                        let s: f64 = d.sample(rng);
                        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        sign * s.powf(half)
                    })
                    .collect()
            }
        }
    }

    /// Variance of the standardized error; the kernel-specific constant in
    /// the marginal-moment formulas.
    pub fn variance_constant(&self) -> Result<f64> {
        match *self {
            KernelFamily::LogNormal => Ok(1.0),
            KernelFamily::LogStudentT(t) => {
                if t <= 2.0 {
                    return Err(Error::Domain(format!(
                        "log-student-t variance requires theta > 2, got {t}"
                    )));
                }
                Ok(t / (t - 2.0))
            }
            KernelFamily::LogPowerExponential(t) => Ok(((1.0 + t) * LN_2
                + ln_gamma(3.0 * (1.0 + t) / 2.0)
                - ln_gamma((1.0 + t) / 2.0))
            .exp()),
        }
    }
}

/// Standard normal CDF helper shared across modules.
pub(crate) fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// Standard normal quantile.
pub(crate) fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// Upper tail of the chi-square distribution, for portmanteau tests.
pub(crate) fn chi_square_sf(x: f64, df: f64) -> f64 {
    ChiSquared::new(df).expect("positive df").sf(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn normalizer_frozen_values() {
        let ln = KernelFamily::log_normal();
        assert!(close(ln.normalizer(), 0.3989422804014327, 1e-12));

        let t4 = KernelFamily::log_student_t(4.0).unwrap();
        assert!(close(t4.normalizer(), 0.375, 1e-12));
        let t9 = KernelFamily::log_student_t(9.0).unwrap();
        assert!(close(t9.normalizer(), 0.3880349088716686, 1e-12));

        let pe0 = KernelFamily::log_power_exponential(0.0).unwrap();
        assert!(close(pe0.normalizer(), 0.3989422804014327, 1e-12));
        let pe1 = KernelFamily::log_power_exponential(1.0).unwrap();
        assert!(close(pe1.normalizer(), 0.25, 1e-12));
        let pe_half = KernelFamily::log_power_exponential(0.5).unwrap();
        assert!(close(pe_half.normalizer(), 0.3234837348553590, 1e-10));
        let pe_neg = KernelFamily::log_power_exponential(-0.5).unwrap();
        assert!(close(pe_neg.normalizer(), 0.4638648042895005, 1e-10));
    }

    #[test]
    fn kernel_g_values_and_monotonicity() {
        let fams = [
            KernelFamily::log_normal(),
            KernelFamily::log_student_t(4.0).unwrap(),
            KernelFamily::log_power_exponential(0.5).unwrap(),
        ];
        for k in &fams {
            assert!(close(k.g(0.0).unwrap(), 1.0, 1e-14));
            let mut prev = f64::INFINITY;
            for u in [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0] {
                let gu = k.g(u).unwrap();
                assert!(gu > 0.0 && gu <= prev);
                prev = gu;
            }
            assert!(k.g(-1.0).is_err());
        }
        let t4 = KernelFamily::log_student_t(4.0).unwrap();
        assert!(close(t4.g(1.0).unwrap(), 0.5724334022399462, 1e-12));
        let pe0 = KernelFamily::log_power_exponential(0.0).unwrap();
        assert!(close(pe0.g(2.0).unwrap(), (-1.0f64).exp(), 1e-12));
    }

    #[test]
    fn construction_domains() {
        assert!(KernelFamily::log_student_t(0.0).is_err());
        assert!(KernelFamily::log_student_t(-1.0).is_err());
        assert!(KernelFamily::log_power_exponential(-1.0).is_err());
        assert!(KernelFamily::log_power_exponential(1.5).is_err());
        assert!(KernelFamily::log_power_exponential(1.0).is_ok());
        assert!(KernelFamily::log_normal().with_theta(3.0).is_err());
        let t = KernelFamily::log_student_t(4.0).unwrap();
        assert_eq!(t.with_theta(9.0).unwrap(), KernelFamily::LogStudentT(9.0));
    }

    #[test]
    fn deriv_ratio_frozen_values() {
        let ln = KernelFamily::log_normal();
        assert!(close(ln.g_log_deriv(3.7).unwrap(), -0.5, 1e-15));

        let t4 = KernelFamily::log_student_t(4.0).unwrap();
        assert!(close(t4.g_log_deriv(1.0).unwrap(), -0.5, 1e-15));
        assert!(close(t4.g_log_deriv(0.0).unwrap(), -0.625, 1e-15));

        let pe = KernelFamily::log_power_exponential(0.5).unwrap();
        assert!(close(pe.g_log_deriv(1.0).unwrap(), -1.0 / 3.0, 1e-14));
        assert!(pe.g_log_deriv(0.0).is_err());
        assert!(pe.g_log_deriv_clamped(0.0).is_finite());

        let pe_neg = KernelFamily::log_power_exponential(-0.5).unwrap();
        assert!(close(pe_neg.g_log_deriv(0.0).unwrap(), 0.0, 1e-15));
    }

    #[test]
    fn deriv_ratio_matches_finite_differences() {
        let fams = [
            KernelFamily::log_normal(),
            KernelFamily::log_student_t(4.0).unwrap(),
            KernelFamily::log_student_t(2.5).unwrap(),
            KernelFamily::log_power_exponential(0.5).unwrap(),
            KernelFamily::log_power_exponential(-0.4).unwrap(),
        ];
        for k in &fams {
            for u in [0.1f64, 0.5, 1.0, 2.0, 10.0] {
                let h = 1e-6 * u.max(1.0);
                let fd = (k.log_g(u + h) - k.log_g(u - h)) / (2.0 * h);
                let an = k.g_log_deriv(u).unwrap();
                assert!(
                    ((fd - an) / an).abs() < 1e-6,
                    "family {} u {u}: fd {fd} analytic {an}",
                    k.name()
                );
            }
        }
    }

    #[test]
    fn log_pdf_frozen_value() {
        let ln = KernelFamily::log_normal();
        let lp = ln.log_pdf(1.0, 1.0, 1.0).unwrap();
        assert!(close(lp, -0.9189385332046727, 1e-9));
        assert!(ln.log_pdf(0.0, 1.0, 1.0).is_err());
        assert!(ln.log_pdf(1.0, -1.0, 1.0).is_err());
        assert!(ln.log_pdf(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn median_property_and_cdf_values() {
        let fams = [
            KernelFamily::log_normal(),
            KernelFamily::log_student_t(4.0).unwrap(),
            KernelFamily::log_power_exponential(0.24).unwrap(),
            KernelFamily::log_power_exponential(-0.3).unwrap(),
        ];
        for k in &fams {
            assert!(close(k.cdf_standard(0.0), 0.5, 1e-14));
        }
        let ln = KernelFamily::log_normal();
        assert!(close(ln.cdf_standard(1.959964), 0.975, 1e-6));
        let t4 = KernelFamily::log_student_t(4.0).unwrap();
        assert!(close(t4.cdf_standard(2.776445), 0.975, 1e-6));

        // Power-exponential CDF against independently computed values.
        let pe0 = KernelFamily::log_power_exponential(0.0).unwrap();
        assert!(close(pe0.cdf_standard(-1.3), 0.096800484586, 1e-9));
        let pe24 = KernelFamily::log_power_exponential(0.24).unwrap();
        assert!(close(pe24.cdf_standard(0.4), 0.639128417774, 1e-8));
        let pe5 = KernelFamily::log_power_exponential(0.5).unwrap();
        assert!(close(pe5.cdf_standard(2.0), 0.903378057705, 1e-8));
        let pe1 = KernelFamily::log_power_exponential(1.0).unwrap();
        assert!(close(pe1.cdf_standard(2.0), 0.816060279414, 1e-8));
    }

    #[test]
    fn power_exponential_at_zero_matches_log_normal() {
        let ln = KernelFamily::log_normal();
        let pe0 = KernelFamily::log_power_exponential(0.0).unwrap();
        for z in [-3.0, -1.1, -0.2, 0.0, 0.4, 1.7, 2.9] {
            assert!(close(ln.cdf_standard(z), pe0.cdf_standard(z), 1e-12));
        }
        for y in [0.2, 0.9, 1.0, 1.8, 7.3] {
            let a = ln.log_pdf(y, 1.3, 0.7).unwrap();
            let b = pe0.log_pdf(y, 1.3, 0.7).unwrap();
            assert!(close(a, b, 1e-12));
        }
    }

    #[test]
    fn quantiles_invert_cdf() {
        let ln = KernelFamily::log_normal();
        assert!(close(ln.quantile_standard(0.975).unwrap(), 1.959963984540054, 1e-8));
        let t4 = KernelFamily::log_student_t(4.0).unwrap();
        assert!(close(t4.quantile_standard(0.975).unwrap(), 2.7764451051977987, 1e-6));

        let fams = [
            ln,
            t4,
            KernelFamily::log_power_exponential(0.5).unwrap(),
            KernelFamily::log_power_exponential(-0.4).unwrap(),
        ];
        for k in &fams {
            for p in [0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99] {
                let q = k.quantile_standard(p).unwrap();
                assert!(close(k.cdf_standard(q), p, 1e-9), "{} p={p}", k.name());
            }
            assert!(k.quantile_standard(0.0).is_err());
            assert!(k.quantile_standard(1.0).is_err());
        }
    }

    #[test]
    fn sampler_moments() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let n = 1_000_000;

        let ln = KernelFamily::log_normal();
        let s = ln.sample_standard(n, &mut rng);
        let mean = s.iter().sum::<f64>() / n as f64;
        let var = s.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!(var > 0.99 && var < 1.01, "var {var}");

        let t4 = KernelFamily::log_student_t(4.0).unwrap();
        let s = t4.sample_standard(n, &mut rng);
        let var = s.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((var - 2.0).abs() < 0.1, "t4 var {var}");
    }

    #[test]
    fn sampler_matches_cdf() {
        // KS distance between the empirical CDF of 1e5 draws and
        // cdf_standard, each family.
        let fams = [
            KernelFamily::log_normal(),
            KernelFamily::log_student_t(4.0).unwrap(),
            KernelFamily::log_power_exponential(0.5).unwrap(),
            KernelFamily::log_power_exponential(-0.4).unwrap(),
        ];
        let n = 100_000;
        for (i, k) in fams.iter().enumerate() {
            let mut rng = ChaCha12Rng::seed_from_u64(7 + i as u64);
            let mut s = k.sample_standard(n, &mut rng);
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut ks: f64 = 0.0;
            for (j, x) in s.iter().enumerate() {
                let f = k.cdf_standard(*x);
                let lo = j as f64 / n as f64;
                let hi = (j + 1) as f64 / n as f64;
                ks = ks.max((f - lo).abs()).max((f - hi).abs());
            }
            assert!(ks < 0.01, "family {} ks {ks}", k.name());
        }
    }

    #[test]
    fn power_exponential_zero_sampler_is_normal() {
        let pe0 = KernelFamily::log_power_exponential(0.0).unwrap();
        let n = 1_000_000;
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let mut s = pe0.sample_standard(n, &mut rng);
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let norm = std_normal();
        let mut ks: f64 = 0.0;
        for (j, x) in s.iter().enumerate() {
            let f = norm.cdf(*x);
            let lo = j as f64 / n as f64;
            let hi = (j + 1) as f64 / n as f64;
            ks = ks.max((f - lo).abs()).max((f - hi).abs());
        }
        assert!(ks < 0.002, "ks {ks}");
    }

    #[test]
    fn variance_constants() {
        assert!(close(KernelFamily::log_normal().variance_constant().unwrap(), 1.0, 1e-15));
        let t4 = KernelFamily::log_student_t(4.0).unwrap();
        assert!(close(t4.variance_constant().unwrap(), 2.0, 1e-12));
        let t25 = KernelFamily::log_student_t(2.5).unwrap();
        assert!(close(t25.variance_constant().unwrap(), 5.0, 1e-12));
        assert!(KernelFamily::log_student_t(2.0)
            .unwrap()
            .variance_constant()
            .is_err());

        let pe0 = KernelFamily::log_power_exponential(0.0).unwrap();
        assert!(close(pe0.variance_constant().unwrap(), 1.0, 1e-12));
        let pe5 = KernelFamily::log_power_exponential(0.5).unwrap();
        assert!(close(pe5.variance_constant().unwrap(), 2.615124050133, 1e-9));
        let pe24 = KernelFamily::log_power_exponential(0.24).unwrap();
        assert!(close(pe24.variance_constant().unwrap(), 1.550675205091, 1e-9));
    }

    #[test]
    fn serde_round_trip() {
        for k in [
            KernelFamily::log_normal(),
            KernelFamily::log_student_t(9.0).unwrap(),
            KernelFamily::log_power_exponential(0.24).unwrap(),
        ] {
            let s = serde_json::to_string(&k).unwrap();
            let back: KernelFamily = serde_json::from_str(&s).unwrap();
            assert_eq!(k, back);
        }
    }
}
