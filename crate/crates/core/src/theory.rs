//! ARMA operator theory: psi-weight expansion, stationarity and
//! invertibility checks, and marginal moments of the log-scale series.
//!
//! With a stationary AR polynomial, the centered log series has the
//! moving-average representation sum_i psi_i a_{t-i} over the raw
//! innovations a_t = sqrt(phi_t) eps_t, which yields closed forms for its
//! marginal variance and autocovariances.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::KernelFamily;

/// Coefficient threshold below which a trailing AR/MA term is treated as
/// absent when locating polynomial roots.
const COEFF_EPS: f64 = 1e-14;

/// AR and MA coefficient vectors (kappa_1..kappa_p, zeta_1..zeta_q).
#[derive(Debug, Clone, PartialEq)]
pub struct ArmaPolynomials {
    pub kappa: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl ArmaPolynomials {
    pub fn new(kappa: Vec<f64>, zeta: Vec<f64>) -> Self {
        ArmaPolynomials { kappa, zeta }
    }
}

/// Root summary for one side of the ARMA operator.
#[derive(Debug, Clone)]
pub struct RootReport {
    /// True when every polynomial root lies strictly outside the unit
    /// circle (modulus > 1 + 1e-10).
    pub all_outside: bool,
    /// Moduli of the polynomial roots (empty for order zero).
    pub root_moduli: Vec<f64>,
}

/// Moduli of the roots of 1 + c_1 B + ... + c_k B^k via the companion
/// matrix of the reversed polynomial.
fn poly_root_moduli(coeffs: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = coeffs.to_vec();
    while c.last().is_some_and(|v| v.abs() <= COEFF_EPS) {
        c.pop();
    }
    let k = c.len();
    if k == 0 {
        return Vec::new();
    }
    // Roots of p(x) = 1 + c_1 x + ... + c_k x^k equal the reciprocals of the
    // eigenvalues of the companion matrix of x^k + c_1 x^(k-1) + ... + c_k
    // (the reversed polynomial); eigenvalue w != 0 guaranteed since the
    // constant term c_k is nonzero after trimming.
    let mut m = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        m[(0, i)] = -c[i];
    }
    for i in 1..k {
        m[(i, i - 1)] = 1.0;
    }
    let eig = m.complex_eigenvalues();
    eig.iter().map(|w| 1.0 / w.norm()).collect()
}

/// Stationarity of the AR side: all roots of 1 - sum kappa_i B^i outside
/// the unit circle.
pub fn check_stationarity(poly: &ArmaPolynomials) -> RootReport {
    let coeffs: Vec<f64> = poly.kappa.iter().map(|k| -k).collect();
    let root_moduli = poly_root_moduli(&coeffs);
    let all_outside = root_moduli.iter().all(|m| *m > 1.0 + 1e-10);
    RootReport {
        all_outside,
        root_moduli,
    }
}

/// Invertibility of the MA side: all roots of 1 + sum zeta_j B^j outside
/// the unit circle.
pub fn check_invertibility(poly: &ArmaPolynomials) -> RootReport {
    let root_moduli = poly_root_moduli(&poly.zeta);
    let all_outside = root_moduli.iter().all(|m| *m > 1.0 + 1e-10);
    RootReport {
        all_outside,
        root_moduli,
    }
}

/// First K+1 weights of the MA-infinity expansion: psi_0 = 1,
/// psi_j = zeta_j [j <= q] + sum_{i<=min(j,p)} kappa_i psi_{j-i}.
pub fn psi_weights(poly: &ArmaPolynomials, k_max: usize) -> Vec<f64> {
    let p = poly.kappa.len();
    let q = poly.zeta.len();
    let mut psi = Vec::with_capacity(k_max + 1);
    psi.push(1.0);
    for j in 1..=k_max {
        let mut v = if j <= q { poly.zeta[j - 1] } else { 0.0 };
        for i in 1..=p.min(j) {
            v += poly.kappa[i - 1] * psi[j - i];
        }
        psi.push(v);
    }
    psi
}

/// Smallest truncation K <= 1e5 with |psi_K| * max(1, sum |psi|) < 1e-12.
pub fn adaptive_truncation(poly: &ArmaPolynomials) -> usize {
    const K_CAP: usize = 100_000;
    let p = poly.kappa.len();
    let q = poly.zeta.len();
    let mut psi = vec![1.0f64];
    let mut abs_sum = 1.0f64;
    for j in 1..=K_CAP {
        let mut v = if j <= q { poly.zeta[j - 1] } else { 0.0 };
        for i in 1..=p.min(j) {
            v += poly.kappa[i - 1] * psi[j - i];
        }
        psi.push(v);
        abs_sum += v.abs();
        if j >= p.max(q) && v.abs() * abs_sum.max(1.0) < 1e-12 {
            return j;
        }
    }
    K_CAP
}

/// Dispersion form for the marginal moments: constant phi or an
/// explicit path ending at the evaluation time.
#[derive(Debug, Clone, Copy)]
pub enum PhiSpec<'a> {
    Constant(f64),
    Path(&'a [f64]),
}

/// Marginal moments of the centered log series v_t - x_t' beta, evaluated
/// either under constant dispersion or at the final time of a phi path.
#[derive(Debug, Clone)]
pub struct MarginalMoments {
    pub psi: Vec<f64>,
    pub truncation: usize,
    variance: f64,
    autocov: Vec<f64>,
    autocorr: Vec<f64>,
}

impl MarginalMoments {
    /// The centered series has mean zero.
    pub fn mean_shift(&self) -> f64 {
        0.0
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Autocovariance at lag k (k = 0 gives the variance).
    pub fn autocov(&self, k: usize) -> f64 {
        self.autocov[k]
    }

    /// Autocorrelation at lag k; exactly 1 at lag 0.
    pub fn autocorr(&self, k: usize) -> f64 {
        self.autocorr[k]
    }

    pub fn max_lag(&self) -> usize {
        self.autocov.len() - 1
    }
}

/// Marginal variance and autocovariances up to `max_lag`.
///
/// Constant phi: Var = xi phi sum psi_i^2 and Cov(k) = xi phi
/// sum_i psi_i psi_{i+k} with xi the kernel variance constant. A phi path
/// evaluates the same sums with per-term phi weights at the path's end,
/// truncated to the available window; correlations then normalize by the
/// standard deviations at the two times involved.
pub fn marginal_moments(
    poly: &ArmaPolynomials,
    phi: PhiSpec<'_>,
    kernel: &KernelFamily,
    max_lag: usize,
) -> Result<MarginalMoments> {
    let st = check_stationarity(poly);
    if !st.all_outside {
        return Err(Error::NonStationary(format!(
            "AR root moduli {:?} must all exceed 1",
            st.root_moduli
        )));
    }
    let xi = kernel.variance_constant()?;
    match phi {
        PhiSpec::Constant(p) if !(p > 0.0) || !p.is_finite() => Err(Error::Domain(format!(
            "dispersion must be positive, got {p}"
        ))),
        PhiSpec::Constant(p) => {
            let k_tr = adaptive_truncation(poly);
            let psi = psi_weights(poly, k_tr);
            let mut autocov = Vec::with_capacity(max_lag + 1);
            for k in 0..=max_lag {
                let mut s = 0.0;
                if k <= k_tr {
                    for i in 0..=(k_tr - k) {
                        s += psi[i] * psi[i + k];
                    }
                }
                autocov.push(xi * p * s);
            }
            let variance = autocov[0];
            let autocorr = autocov.iter().map(|c| c / variance).collect();
            Ok(MarginalMoments {
                psi,
                truncation: k_tr,
                variance,
                autocov,
                autocorr,
            })
        }
        PhiSpec::Path(path) => {
            if path.is_empty() {
                return Err(Error::Dimension("empty dispersion path".into()));
            }
            if path.len() <= max_lag {
                return Err(Error::Dimension(format!(
                    "dispersion path length {} must exceed max lag {max_lag}",
                    path.len()
                )));
            }
            if let Some(bad) = path.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
                return Err(Error::Domain(format!(
                    "dispersion must be positive, got {bad}"
                )));
            }
            let k_tr = adaptive_truncation(poly);
            let psi = psi_weights(poly, k_tr);
            let t_end = path.len() - 1;
            // Variance at each time needed: t_end, t_end-1, ..., t_end-max_lag.
            let var_at = |t: usize| -> f64 {
                let mut s = 0.0;
                for (i, ps) in psi.iter().enumerate().take(t + 1).take(k_tr + 1) {
                    s += ps * ps * path[t - i];
                }
                xi * s
            };
            let mut autocov = Vec::with_capacity(max_lag + 1);
            let mut autocorr = Vec::with_capacity(max_lag + 1);
            for k in 0..=max_lag {
                let mut s = 0.0;
                let t_past = t_end - k;
                if k <= k_tr {
                    for j in 0..=t_past.min(k_tr - k) {
                        s += psi[j + k] * psi[j] * path[t_past - j];
                    }
                }
                let cov = xi * s;
                autocov.push(cov);
                let denom = (var_at(t_end) * var_at(t_past)).sqrt();
                autocorr.push(if k == 0 { 1.0 } else { cov / denom });
            }
            let variance = var_at(t_end);
            Ok(MarginalMoments {
                psi,
                truncation: k_tr,
                variance,
                autocov,
                autocorr,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Independent psi computation by explicit polynomial long division of
    /// (1 + zeta_1 B + ...) by (1 - kappa_1 B - ...).
    fn psi_by_long_division(kappa: &[f64], zeta: &[f64], k_max: usize) -> Vec<f64> {
        let mut num = vec![0.0; k_max + 1];
        num[0] = 1.0;
        for (j, z) in zeta.iter().enumerate() {
            if j + 1 <= k_max {
                num[j + 1] = *z;
            }
        }
        let mut den = vec![0.0; k_max + 1];
        den[0] = 1.0;
        for (i, k) in kappa.iter().enumerate() {
            if i + 1 <= k_max {
                den[i + 1] = -k;
            }
        }
        let mut quot = vec![0.0; k_max + 1];
        let mut rem = num;
        for j in 0..=k_max {
            let c = rem[j] / den[0];
            quot[j] = c;
            for i in 0..=(k_max - j) {
                rem[j + i] -= c * den[i];
            }
        }
        quot
    }

    #[test]
    fn psi_weights_ar1_geometric() {
        let poly = ArmaPolynomials::new(vec![0.6], vec![]);
        let psi = psi_weights(&poly, 20);
        for (j, p) in psi.iter().enumerate() {
            assert!(close(*p, 0.6f64.powi(j as i32), 1e-12));
        }
    }

    #[test]
    fn psi_weights_arma11_and_degenerate() {
        let poly = ArmaPolynomials::new(vec![0.6], vec![0.3]);
        let psi = psi_weights(&poly, 3);
        assert!(close(psi[0], 1.0, 1e-15));
        assert!(close(psi[1], 0.9, 1e-15));
        assert!(close(psi[2], 0.54, 1e-15));
        assert!(close(psi[3], 0.324, 1e-15));

        let none = ArmaPolynomials::new(vec![], vec![]);
        let psi = psi_weights(&none, 4);
        assert_eq!(psi, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn psi_weights_match_long_division() {
        let cases = [
            (vec![0.6], vec![0.3]),
            (vec![0.405, 0.2789], vec![]),
            (vec![0.3, -0.2], vec![0.5, 0.1]),
            (vec![], vec![0.7, -0.4]),
        ];
        for (kappa, zeta) in cases {
            let poly = ArmaPolynomials::new(kappa.clone(), zeta.clone());
            let a = psi_weights(&poly, 25);
            let b = psi_by_long_division(&kappa, &zeta, 25);
            for j in 0..=25 {
                assert!(close(a[j], b[j], 1e-12), "j={j} {:?} vs {:?}", a[j], b[j]);
            }
        }
    }

    #[test]
    fn stationarity_checks() {
        let ar1 = ArmaPolynomials::new(vec![0.6], vec![]);
        let rep = check_stationarity(&ar1);
        assert!(rep.all_outside);
        assert!(close(rep.root_moduli[0], 1.0 / 0.6, 1e-10));

        let unit = ArmaPolynomials::new(vec![1.0], vec![]);
        assert!(!check_stationarity(&unit).all_outside);

        let fitted = ArmaPolynomials::new(vec![0.405, 0.2789], vec![]);
        assert!(check_stationarity(&fitted).all_outside);

        let explosive = ArmaPolynomials::new(vec![1.2], vec![]);
        assert!(!check_stationarity(&explosive).all_outside);

        // Trailing zero coefficients do not create phantom roots.
        let padded = ArmaPolynomials::new(vec![0.6, 0.0], vec![]);
        assert_eq!(check_stationarity(&padded).root_moduli.len(), 1);

        let empty = ArmaPolynomials::new(vec![], vec![]);
        assert!(check_stationarity(&empty).all_outside);
        assert!(check_stationarity(&empty).root_moduli.is_empty());
    }

    #[test]
    fn invertibility_checks() {
        let ma1 = ArmaPolynomials::new(vec![], vec![0.3]);
        let rep = check_invertibility(&ma1);
        assert!(rep.all_outside);
        assert!(close(rep.root_moduli[0], 1.0 / 0.3, 1e-10));

        let not_inv = ArmaPolynomials::new(vec![], vec![1.5]);
        assert!(!check_invertibility(&not_inv).all_outside);
    }

    #[test]
    fn adaptive_truncation_controls_tail() {
        let polys = [
            ArmaPolynomials::new(vec![0.6], vec![0.3]),
            ArmaPolynomials::new(vec![0.405, 0.2789], vec![]),
            ArmaPolynomials::new(vec![0.95], vec![]),
        ];
        for poly in &polys {
            let k = adaptive_truncation(poly);
            let psi2 = psi_weights(poly, 2 * k);
            let s1: f64 = psi2.iter().take(k + 1).map(|p| p * p).sum();
            let s2: f64 = psi2.iter().map(|p| p * p).sum();
            assert!((s1 - s2).abs() < 1e-10, "truncation too aggressive: {}", s1 - s2);
        }
    }

    #[test]
    fn moments_ar1_closed_form() {
        let poly = ArmaPolynomials::new(vec![0.6], vec![]);
        let kern = KernelFamily::log_normal();
        let mm = marginal_moments(&poly, PhiSpec::Constant(1.0), &kern, 10).unwrap();
        assert!(close(mm.variance(), 1.0 / (1.0 - 0.36), 1e-10));
        for k in 0..=10 {
            assert!(close(mm.autocorr(k), 0.6f64.powi(k as i32), 1e-10));
        }
        assert_eq!(mm.mean_shift(), 0.0);
    }

    #[test]
    fn moments_white_noise_and_scaling() {
        let poly = ArmaPolynomials::new(vec![], vec![]);
        let kern = KernelFamily::log_normal();
        let mm = marginal_moments(&poly, PhiSpec::Constant(2.5), &kern, 3).unwrap();
        assert!(close(mm.variance(), 2.5, 1e-12));
        for k in 1..=3 {
            assert!(close(mm.autocorr(k), 0.0, 1e-12));
        }

        // Heavier-tailed kernel doubles the variance at theta = 4.
        let t4 = KernelFamily::log_student_t(4.0).unwrap();
        let mm = marginal_moments(&poly, PhiSpec::Constant(2.5), &t4, 0).unwrap();
        assert!(close(mm.variance(), 5.0, 1e-12));
    }

    #[test]
    fn moments_arma11_lag1_value() {
        let poly = ArmaPolynomials::new(vec![0.6], vec![0.3]);
        let kern = KernelFamily::log_normal();
        let mm = marginal_moments(&poly, PhiSpec::Constant(1.0), &kern, 5).unwrap();
        // Closed form: (1 + kz)(k + z) / (1 + 2kz + z^2).
        let closed = (1.0 + 0.18) * 0.9 / (1.0 + 0.36 + 0.09);
        assert!(close(mm.autocorr(1), closed, 1e-9));
        assert!(close(mm.autocorr(1), 0.7324137931034482, 1e-9));
        assert!(close(mm.autocorr(0), 1.0, 1e-15));
        for k in 2..=5 {
            // Geometric decay beyond lag 1 for ARMA(1,1).
            assert!(close(mm.autocorr(k), mm.autocorr(k - 1) * 0.6, 1e-9));
            assert!(mm.autocorr(k).abs() <= 1.0);
        }
    }

    #[test]
    fn moments_constant_path_agrees_with_constant() {
        let poly = ArmaPolynomials::new(vec![0.6], vec![0.3]);
        let kern = KernelFamily::log_normal();
        let a = marginal_moments(&poly, PhiSpec::Constant(1.7), &kern, 4).unwrap();
        let path = vec![1.7; 400];
        let b = marginal_moments(&poly, PhiSpec::Path(&path), &kern, 4).unwrap();
        assert!(close(a.variance(), b.variance(), 1e-8));
        for k in 0..=4 {
            assert!(close(a.autocorr(k), b.autocorr(k), 1e-8));
            assert!(close(a.autocov(k), b.autocov(k), 1e-8));
        }
    }

    #[test]
    fn moments_reject_bad_inputs() {
        let kern = KernelFamily::log_normal();
        let unstable = ArmaPolynomials::new(vec![1.1], vec![]);
        assert!(matches!(
            marginal_moments(&unstable, PhiSpec::Constant(1.0), &kern, 2),
            Err(Error::NonStationary(_))
        ));

        let poly = ArmaPolynomials::new(vec![0.6], vec![]);
        assert!(marginal_moments(&poly, PhiSpec::Constant(-1.0), &kern, 2).is_err());
        assert!(marginal_moments(&poly, PhiSpec::Path(&[]), &kern, 2).is_err());
        assert!(marginal_moments(&poly, PhiSpec::Path(&[1.0, 2.0]), &kern, 5).is_err());

        let t2 = KernelFamily::log_student_t(2.0).unwrap();
        assert!(marginal_moments(&poly, PhiSpec::Constant(1.0), &t2, 2).is_err());
    }

    #[test]
    fn random_stationary_polys_have_bounded_correlations() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        let kern = KernelFamily::log_normal();
        for _ in 0..50 {
            // AR(2) stationarity triangle sampled directly.
            let a: f64 = rng.random_range(-0.9..0.9);
            let b: f64 = rng.random_range(-0.9..(1.0 - a.abs()).min(0.9));
            let poly = ArmaPolynomials::new(vec![a, b], vec![rng.random_range(-0.9..0.9)]);
            if !check_stationarity(&poly).all_outside {
                continue;
            }
            let mm = marginal_moments(&poly, PhiSpec::Constant(1.0), &kern, 8).unwrap();
            assert!(mm.variance() > 0.0);
            assert!(close(mm.autocorr(0), 1.0, 1e-12));
            for k in 1..=8 {
                assert!(mm.autocorr(k).abs() <= 1.0 + 1e-12);
            }
        }
    }
}
