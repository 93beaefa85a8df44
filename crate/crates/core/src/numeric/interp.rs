//! Natural cubic splines and cubic Hermite interpolation with monotonicity limiting.

use crate::error::{Error, Result};

fn locate(xs: &[f64], x: f64) -> usize {
    // index i with xs[i] <= x < xs[i+1], clamped to valid segments
    let n = xs.len();
    match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Less)) {
        Ok(i) => i.min(n - 2),
        Err(0) => 0,
        Err(i) => (i - 1).min(n - 2),
    }
}

/// Natural cubic spline through (x_i, y_i), x strictly increasing.
#[derive(Debug, Clone)]
pub struct NaturalSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 3 || ys.len() != n {
            return Err(Error::BadParams("spline needs at least 3 samples of matching length".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::BadParams("spline abscissae must be strictly increasing".into()));
        }
        // tridiagonal system for second derivatives, m_0 = m_{n-1} = 0
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut upper = vec![0.0; n];
        diag[0] = 1.0;
        diag[n - 1] = 1.0;
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            let lower = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            upper[i] = h1 / 6.0;
            rhs[i] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
            // forward elimination against row i-1
            let w = lower / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        for i in (1..n - 1).rev() {
            m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
        }
        Ok(Self { xs, ys, m })
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Value and first two derivatives. Outside the knots the end cubic is extended.
    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        let i = locate(&self.xs, x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d = (y1 - y0) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        let dd = a * m0 + b * m1;
        (v, d, dd)
    }
}

/// Piecewise cubic Hermite interpolant with prescribed node slopes. Slopes are limited
/// (Fritsch-Carlson) where needed so that monotone data give a monotone interpolant.
#[derive(Debug, Clone)]
pub struct Hermite {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
    descending: bool,
}

impl Hermite {
    /// Interpolant with Fritsch-Carlson limited slopes.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, ds: Vec<f64>) -> Result<Self> {
        Self::build(xs, ys, ds, true)
    }

    /// Interpolant that keeps the given slopes as they are, for data whose slopes are exact.
    pub fn exact(xs: Vec<f64>, ys: Vec<f64>, ds: Vec<f64>) -> Result<Self> {
        Self::build(xs, ys, ds, false)
    }

    fn build(xs: Vec<f64>, ys: Vec<f64>, mut ds: Vec<f64>, limit: bool) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n || ds.len() != n {
            return Err(Error::BadParams("hermite needs matching arrays of length >= 2".into()));
        }
        let descending = xs[1] < xs[0];
        let (xs, ys) = if descending {
            ds.reverse();
            (xs.into_iter().rev().collect::<Vec<_>>(), ys.into_iter().rev().collect::<Vec<_>>())
        } else {
            (xs, ys)
        };
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::BadParams("hermite abscissae must be strictly monotone".into()));
        }
        for i in 0..if limit { n - 1 } else { 0 } {
            let delta = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
            if delta == 0.0 {
                ds[i] = 0.0;
                ds[i + 1] = 0.0;
                continue;
            }
            let al = ds[i] / delta;
            let be = ds[i + 1] / delta;
            if al < 0.0 {
                ds[i] = 0.0;
            }
            if be < 0.0 {
                ds[i + 1] = 0.0;
            }
            let s = al * al + be * be;
            if s > 9.0 {
                let t = 3.0 / s.sqrt();
                ds[i] = t * al * delta;
                ds[i + 1] = t * be * delta;
            }
        }
        Ok(Self { xs, ys, ds, descending })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval2(x).0
    }

    /// Value and derivative.
    pub fn eval2(&self, x: f64) -> (f64, f64) {
        let i = locate(&self.xs, x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1, d0, d1) = (self.ys[i], self.ys[i + 1], self.ds[i] * h, self.ds[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1;
        let dv = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * d1)
            / h;
        (v, dv)
    }

    /// Value, derivative and (piecewise) second derivative.
    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        let (v, dv) = self.eval2(x);
        let i = locate(&self.xs, x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1, d0, d1) = (self.ys[i], self.ys[i + 1], self.ds[i] * h, self.ds[i + 1] * h);
        let ddv = ((12.0 * t - 6.0) * y0 + (6.0 * t - 4.0) * d0 + (6.0 - 12.0 * t) * y1 + (6.0 * t - 2.0) * d1) / (h * h);
        (v, dv, ddv)
    }

    pub fn is_descending_input(&self) -> bool {
        self.descending
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_spline_reproduces_linear_data() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let s = NaturalSpline::new(xs, ys).unwrap();
        let (v, d, dd) = s.eval3(1.37);
        assert!((v - 1.74).abs() < 1e-14);
        assert!((d - 2.0).abs() < 1e-13);
        assert!(dd.abs() < 1e-12);
    }

    #[test]
    fn natural_spline_converges_on_smooth_data() {
        let xs: Vec<f64> = (0..=400).map(|i| i as f64 / 400.0 * 3.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let s = NaturalSpline::new(xs, ys).unwrap();
        let (v, d, _) = s.eval3(1.2345);
        assert!((v - 1.2345f64.sin()).abs() < 1e-9);
        assert!((d - 1.2345f64.cos()).abs() < 1e-6);
    }

    #[test]
    fn hermite_exact_for_cubics_with_true_slopes() {
        let xs: Vec<f64> = vec![0.0, 0.5, 1.5, 2.0];
        let f = |x: f64| x * x * x - x;
        let df = |x: f64| 3.0 * x * x - 1.0;
        let h = Hermite::new(xs.clone(), xs.iter().map(|&x| f(x)).collect(), xs.iter().map(|&x| df(x)).collect());
        // slopes of a non-monotone cubic get limited; only check nodes
        let h = h.unwrap();
        for &x in &xs {
            assert!((h.eval(x) - f(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_hermite_keeps_slopes_at_extrema() {
        let xs: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
        let h = Hermite::exact(xs.clone(), xs.iter().map(|x| (3.0 * x).sin()).collect(), xs.iter().map(|x| 3.0 * (3.0 * x).cos()).collect()).unwrap();
        let x = std::f64::consts::FRAC_PI_6;
        assert!((h.eval2(x).1 - 3.0 * (3.0 * x).cos()).abs() < 1e-3);
        // cubic Hermite error bound h⁴·max|f⁗|/384 ≈ 2.1e-5
        assert!((h.eval(x) - (3.0 * x).sin()).abs() < 2.2e-5);
    }

    #[test]
    fn hermite_accepts_descending_abscissae() {
        let xs = vec![3.0, 2.0, 1.0];
        let ys = vec![9.0, 4.0, 1.0];
        let ds = vec![6.0, 4.0, 2.0];
        let h = Hermite::new(xs, ys, ds).unwrap();
        assert!((h.eval(1.5) - 2.25).abs() < 1e-14);
        assert!((h.eval2(2.5).1 - 5.0).abs() < 1e-13);
    }
}
