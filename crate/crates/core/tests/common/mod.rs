//! Helpers shared by the integration test targets.

#![allow(dead_code)]

/// Adaptive Simpson quadrature, independent of any numerics in the
/// library under test.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let err = left + right - whole;
        if depth == 0 || err.abs() <= 15.0 * tol {
            return left + right + err / 15.0;
        }
        recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 60)
}

/// One pass/fail line per criterion; the assert carries the same detail.
pub fn report(k: usize, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {k}: {tag} - {detail}");
    assert!(pass, "ACCEPTANCE {k}: FAIL - {detail}");
}

pub fn report_skip(k: usize, detail: &str) {
    println!("ACCEPTANCE {k}: SKIP - {detail}");
}

/// Subtracts the true regression part from the log series.
pub fn detrend_log(data: &lsarmax::model::TimeSeriesData, beta: &[f64]) -> Vec<f64> {
    let x = data.x();
    data.v()
        .iter()
        .enumerate()
        .map(|(t, v)| {
            let mut mu = 0.0;
            for (j, b) in beta.iter().enumerate() {
                mu += b * x[(t, j)];
            }
            v - mu
        })
        .collect()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}
