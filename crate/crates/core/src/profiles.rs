//! Profile functions Q(φ): closed-form families, sampled profiles, admissible intervals,
//! boundary conditions and type classification.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::interp::{Hermite, NaturalSpline};
use crate::numeric::ode::Dopri5;
use crate::numeric::roots::{bisect, rational_approx};

/// Family and parameters of a profile function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    /// Q = K(φ0² − φ²)
    Quadratic { k: f64, phi0: f64 },
    /// Q = −Kφ² + (αφ^{2m−1} − η/m)/(2m−1)
    TypeA { m: u32, k: f64, alpha: f64, eta: f64 },
    /// Q = Kφ/m + αφ^{m+1} − 2η/(m(m+1))
    TypeB { m: u32, k: f64, alpha: f64, eta: f64 },
    /// Q = (t−1)[A + B·E(t) + C·F(t)] with t = φ/c
    TypeC {
        m: u32,
        c: f64,
        #[serde(rename = "A")]
        a: f64,
        #[serde(rename = "B")]
        b: f64,
        #[serde(rename = "C")]
        cc: f64,
    },
    /// Q = Σ coeffs[k]·φ^k
    Polynomial { coeffs: Vec<f64> },
    /// Sampled profile. Without slopes the samples are joined by a natural cubic spline;
    /// with slopes (one per sample) a cubic Hermite interpolant is used.
    Custom {
        samples: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        slopes: Option<Vec<f64>>,
    },
}

impl ProfileSpec {
    pub fn family_name(&self) -> &'static str {
        match self {
            ProfileSpec::Quadratic { .. } => "quadratic",
            ProfileSpec::TypeA { .. } => "type_a",
            ProfileSpec::TypeB { .. } => "type_b",
            ProfileSpec::TypeC { .. } => "type_c",
            ProfileSpec::Polynomial { .. } => "polynomial",
            ProfileSpec::Custom { .. } => "custom",
        }
    }

    pub fn is_custom(&self) -> bool {
        matches!(self, ProfileSpec::Custom { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
        match *self {
            ProfileSpec::Quadratic { k, phi0 } => {
                if !finite(&[k, phi0]) || k <= 0.0 || phi0 == 0.0 {
                    return Err(Error::BadParams("quadratic needs K > 0 and phi0 != 0".into()));
                }
            }
            ProfileSpec::TypeA { m, k, alpha, eta } | ProfileSpec::TypeB { m, k, alpha, eta } => {
                if m < 2 || !finite(&[k, alpha, eta]) {
                    return Err(Error::BadParams("type A/B need m >= 2 and finite K, alpha, eta".into()));
                }
            }
            ProfileSpec::TypeC { m, c, a, b, cc } => {
                if m < 2 || c == 0.0 || !finite(&[c, a, b, cc]) {
                    return Err(Error::BadParams("type C needs m >= 2 and c != 0".into()));
                }
            }
            ProfileSpec::Polynomial { ref coeffs } => {
                if coeffs.is_empty() || !finite(coeffs) {
                    return Err(Error::BadParams("polynomial needs finite coefficients".into()));
                }
            }
            ProfileSpec::Custom { ref samples, ref slopes } => {
                if samples.len() < 3 || samples.iter().any(|s| !finite(s)) {
                    return Err(Error::BadParams("custom profile needs >= 3 finite samples".into()));
                }
                if samples.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                    return Err(Error::BadParams("custom samples must have increasing phi".into()));
                }
                if let Some(s) = slopes {
                    if s.len() != samples.len() || !finite(s) {
                        return Err(Error::BadParams("custom slopes must match the samples".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Quadratic { k: f64, phi0: f64 },
    TypeA { m: i32, k: f64, alpha: f64, eta: f64 },
    TypeB { m: i32, k: f64, alpha: f64, eta: f64 },
    TypeC { m: i32, c: f64, a: f64, b: f64, cc: f64, s: Vec<f64> },
    Polynomial(Vec<f64>),
    Spline(NaturalSpline),
    Hermite(Hermite),
}

/// Evaluates Q and its first two φ-derivatives for a spec, independent of any interval.
#[derive(Debug, Clone)]
pub struct Evaluator {
    repr: Repr,
}

impl Evaluator {
    pub fn new(spec: &ProfileSpec) -> Result<Self> {
        spec.validate()?;
        let repr = match spec {
            &ProfileSpec::Quadratic { k, phi0 } => Repr::Quadratic { k, phi0 },
            &ProfileSpec::TypeA { m, k, alpha, eta } => Repr::TypeA { m: m as i32, k, alpha, eta },
            &ProfileSpec::TypeB { m, k, alpha, eta } => Repr::TypeB { m: m as i32, k, alpha, eta },
            &ProfileSpec::TypeC { m, c, a, b, cc } => Repr::TypeC { m: m as i32, c, a, b, cc, s: s_coefficients(m) },
            ProfileSpec::Polynomial { coeffs } => Repr::Polynomial(coeffs.clone()),
            ProfileSpec::Custom { samples, slopes } => {
                let xs: Vec<f64> = samples.iter().map(|s| s[0]).collect();
                let ys: Vec<f64> = samples.iter().map(|s| s[1]).collect();
                match slopes {
                    Some(ds) => Repr::Hermite(Hermite::exact(xs, ys, ds.clone())?),
                    None => Repr::Spline(NaturalSpline::new(xs, ys)?),
                }
            }
        };
        Ok(Self { repr })
    }

    /// (Q, dQ/dφ, d²Q/dφ²)
    pub fn eval(&self, phi: f64) -> (f64, f64, f64) {
        match &self.repr {
            &Repr::Quadratic { k, phi0 } => (k * (phi0 * phi0 - phi * phi), -2.0 * k * phi, -2.0 * k),
            &Repr::TypeA { m, k, alpha, eta } => {
                let n = 2 * m - 1;
                let nf = n as f64;
                let q = -k * phi * phi + (alpha * phi.powi(n) - eta / m as f64) / nf;
                let dq = -2.0 * k * phi + alpha * phi.powi(n - 1);
                let d2q = -2.0 * k + alpha * (nf - 1.0) * phi.powi(n - 2);
                (q, dq, d2q)
            }
            &Repr::TypeB { m, k, alpha, eta } => {
                let mf = m as f64;
                let q = k * phi / mf + alpha * phi.powi(m + 1) - 2.0 * eta / (mf * (mf + 1.0));
                let dq = k / mf + alpha * (mf + 1.0) * phi.powi(m);
                let d2q = alpha * (mf + 1.0) * mf * phi.powi(m - 1);
                (q, dq, d2q)
            }
            Repr::TypeC { m, c, a, b, cc, s } => {
                let t = phi / c;
                let (q, dq, d2q) = type_c_in_t(*m, *a, *b, *cc, s, t);
                (q, dq / c, d2q / (c * c))
            }
            Repr::Polynomial(c) => {
                // Horner for the value and both derivatives
                let (mut q, mut dq, mut d2q) = (0.0, 0.0, 0.0);
                for &a in c.iter().rev() {
                    d2q = d2q * phi + 2.0 * dq;
                    dq = dq * phi + q;
                    q = q * phi + a;
                }
                (q, dq, d2q)
            }
            Repr::Spline(sp) => sp.eval3(phi),
            Repr::Hermite(h) => h.eval3(phi),
        }
    }

    pub fn q(&self, phi: f64) -> f64 {
        self.eval(phi).0
    }

    /// Sample domain for sampled profiles.
    pub fn sample_domain(&self) -> Option<(f64, f64)> {
        match &self.repr {
            Repr::Spline(s) => Some(s.domain()),
            Repr::Hermite(h) => Some(h.domain()),
            _ => None,
        }
    }
}

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Coefficients s_j of S(t) = Σ_{k=1}^m (k/m) C(2m−k−1, m−1) t^{k−1}, with E(t) = (t−1) S(t).
fn s_coefficients(m: u32) -> Vec<f64> {
    let m64 = m as u64;
    (1..=m64)
        .map(|k| (k as f64 / m as f64) * binomial(2 * m64 - k - 1, m64 - 1) as f64)
        .collect()
}

/// Polynomial value and first two derivatives by Horner.
fn horner3(coef: &[f64], t: f64) -> (f64, f64, f64) {
    let mut p = 0.0;
    let mut d = 0.0;
    let mut dd = 0.0;
    for &c in coef.iter().rev() {
        dd = dd * t + 2.0 * d;
        d = d * t + p;
        p = p * t + c;
    }
    (p, d, dd)
}

/// Q and its t-derivatives for the type C family.
fn type_c_in_t(m: i32, a: f64, b: f64, cc: f64, s: &[f64], t: f64) -> (f64, f64, f64) {
    let u = t - 1.0;
    let (sv, sd, sdd) = horner3(s, t);
    // (t−1)E = u² S
    let e_q = u * u * sv;
    let e_d = 2.0 * u * sv + u * u * sd;
    let e_dd = 2.0 * sv + 4.0 * u * sd + u * u * sdd;
    let mut q = a * u + b * e_q;
    let mut dq = a + b * e_d;
    let mut ddq = b * e_dd;
    if cc != 0.0 {
        // (t−1)F = p(t) u^{1−m}, p = (t−2) t^{2m−1}
        let n = 2 * m;
        let mf = m as f64;
        let nf = n as f64;
        let p = t.powi(n) - 2.0 * t.powi(n - 1);
        let pd = nf * t.powi(n - 1) - 2.0 * (nf - 1.0) * t.powi(n - 2);
        let pdd = nf * (nf - 1.0) * t.powi(n - 2) - 2.0 * (nf - 1.0) * (nf - 2.0) * t.powi(n - 3);
        let w = u.powi(1 - m);
        let wd = (1.0 - mf) * u.powi(-m);
        let wdd = (1.0 - mf) * (-mf) * u.powi(-m - 1);
        q += cc * p * w;
        dq += cc * (pd * w + p * wd);
        ddq += cc * (pdd * w + 2.0 * pd * wd + p * wdd);
    }
    (q, dq, ddq)
}

/// F(t) = (t−2)t^{2m−1}/(t−1)^m and E(t) = (t−1) Σ_{k=1}^m (k/m) C(2m−k−1, m−1) t^{k−1}.
pub fn eval_fe(m: u32, t: f64) -> Result<(f64, f64)> {
    if m < 1 {
        return Err(Error::BadParams("eval_fe needs m >= 1".into()));
    }
    if t == 1.0 {
        return Err(Error::PoleAtOne);
    }
    let s = s_coefficients(m);
    let e = (t - 1.0) * horner3(&s, t).0;
    let mi = m as i32;
    let f = (t - 2.0) * t.powi(2 * mi - 1) / (t - 1.0).powi(mi);
    Ok((f, e))
}

/// E(t) alone; defined at t = 1.
pub fn eval_e(m: u32, t: f64) -> f64 {
    (t - 1.0) * horner3(&s_coefficients(m.max(1)), t).0
}

/// f(β) = (k−1)β^{k+1} − (k+1)β^k + (k+1)β − (k−1) and |f − (β−1)³Π(β)|.
///
/// f is evaluated by Horner in powers of (β − γ), γ the nearest of −1, 0, 1, with the
/// shifted coefficients computed exactly in integers. The roots at 1 (triple) and −1 then
/// come out with relative rather than absolute rounding error.
pub fn eval_f_bc1(k: u32, beta: f64) -> (f64, f64) {
    let k = k.max(2);
    let gamma: i32 = if beta > 0.5 { 1 } else if beta < -0.5 { -1 } else { 0 };
    let f = match bc1_shifted(k, gamma) {
        Some(coef) => {
            let x = beta - gamma as f64;
            coef.iter().rev().fold(0.0, |acc, &c| acc * x + c)
        }
        None => {
            let kf = k as f64;
            let mut coef = vec![0.0; k as usize + 2];
            coef[0] = -(kf - 1.0);
            coef[1] += kf + 1.0;
            coef[k as usize] += -(kf + 1.0);
            coef[k as usize + 1] = kf - 1.0;
            coef.iter().rev().fold(0.0, |acc, &c| acc * beta + c)
        }
    };
    let pi = (1..k).rev().fold(0.0, |acc, j| acc * beta + (j * (k - j)) as f64);
    let d = beta - 1.0;
    (f, (f - d * d * d * pi).abs())
}

fn bc1_shifted(k: u32, gamma: i32) -> Option<Vec<f64>> {
    if k > 100 {
        return None;
    }
    let n = k as usize + 1;
    let mut c = vec![0i128; n + 1];
    let ki = k as i128;
    c[0] -= ki - 1;
    c[1] += ki + 1;
    c[k as usize] -= ki + 1;
    c[n] += ki - 1;
    let g = gamma as i128;
    // shifted[j] = Σ_{i≥j} c_i C(i, j) γ^{i−j}
    let mut out = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let mut acc: i128 = 0;
        let mut gp: i128 = 1;
        for (i, &ci) in c.iter().enumerate().skip(j) {
            acc = acc.checked_add(ci.checked_mul(binomial(i as u64, j as u64) as i128)?.checked_mul(gp)?)?;
            gp *= g;
        }
        out.push(acc as f64);
    }
    Some(out)
}

/// A profile restricted to a closed interval.
#[derive(Debug, Clone)]
pub struct Profile {
    pub spec: ProfileSpec,
    pub interval: (f64, f64),
    /// dQ/dφ at (φ_min, φ_max).
    pub endpoint_slopes: (f64, f64),
    /// Whether each endpoint is a root of Q within the family's tolerance.
    pub endpoint_roots: (bool, bool),
    eval: Arc<Evaluator>,
}

const GRID: usize = 1000;

fn root_tol(spec: &ProfileSpec) -> f64 {
    if spec.is_custom() { 1e-6 } else { 1e-9 }
}

impl Profile {
    pub fn q(&self, phi: f64) -> f64 {
        self.eval.eval(phi).0
    }

    pub fn dq(&self, phi: f64) -> f64 {
        self.eval.eval(phi).1
    }

    pub fn d2q(&self, phi: f64) -> f64 {
        self.eval.eval(phi).2
    }

    /// (Q, dQ/dφ, d²Q/dφ²)
    pub fn eval(&self, phi: f64) -> (f64, f64, f64) {
        self.eval.eval(phi)
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.eval
    }

    pub fn len(&self) -> f64 {
        self.interval.1 - self.interval.0
    }

    pub fn contains(&self, phi: f64) -> bool {
        phi >= self.interval.0 && phi <= self.interval.1
    }

    /// Interior grid used for positivity checks.
    pub fn interior_grid(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.interval;
        (1..=n).map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64).collect()
    }

    /// Largest |Q| on the interior grid.
    pub fn q_scale(&self) -> f64 {
        self.interior_grid(GRID).iter().map(|&p| self.q(p).abs()).fold(0.0, f64::max)
    }

    /// Panel boundaries for piecewise quadrature over the interval: sample knots for
    /// sampled profiles, a uniform partition otherwise.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (lo, hi) = self.interval;
        let mut pts = vec![lo];
        if let ProfileSpec::Custom { samples, .. } = &self.spec {
            pts.extend(samples.iter().map(|s| s[0]).filter(|&x| x > lo && x < hi));
        } else {
            let n = 64;
            pts.extend((1..n).map(|i| lo + (hi - lo) * i as f64 / n as f64));
        }
        pts.push(hi);
        pts
    }

    /// The same family with Q multiplied by `lambda` (closed forms scale their parameters,
    /// sampled profiles scale their samples).
    pub fn scaled(&self, lambda: f64) -> Result<Profile> {
        let spec = match self.spec.clone() {
            ProfileSpec::Quadratic { k, phi0 } => ProfileSpec::Quadratic { k: k * lambda, phi0 },
            ProfileSpec::TypeA { m, k, alpha, eta } => {
                ProfileSpec::TypeA { m, k: k * lambda, alpha: alpha * lambda, eta: eta * lambda }
            }
            ProfileSpec::TypeB { m, k, alpha, eta } => {
                ProfileSpec::TypeB { m, k: k * lambda, alpha: alpha * lambda, eta: eta * lambda }
            }
            ProfileSpec::TypeC { m, c, a, b, cc } => {
                ProfileSpec::TypeC { m, c, a: a * lambda, b: b * lambda, cc: cc * lambda }
            }
            ProfileSpec::Polynomial { coeffs } => ProfileSpec::Polynomial { coeffs: coeffs.iter().map(|a| a * lambda).collect() },
            ProfileSpec::Custom { samples, slopes } => ProfileSpec::Custom {
                samples: samples.iter().map(|s| [s[0], s[1] * lambda]).collect(),
                slopes: slopes.map(|v| v.iter().map(|d| d * lambda).collect()),
            },
        };
        make_profile(spec, self.interval)
    }
}

/// Builds a profile on a closed interval, checking positivity on a dense interior grid.
pub fn make_profile(spec: ProfileSpec, interval: (f64, f64)) -> Result<Profile> {
    let (lo, hi) = interval;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::BadParams(format!("degenerate interval [{lo}, {hi}]")));
    }
    let eval = Evaluator::new(&spec)?;
    if let ProfileSpec::TypeC { c, cc, .. } = spec {
        if cc != 0.0 && c >= lo && c <= hi {
            return Err(Error::PoleInInterval(c));
        }
    }
    if let Some((dlo, dhi)) = eval.sample_domain() {
        let slack = 1e-12 * (dhi - dlo);
        if lo < dlo - slack || hi > dhi + slack {
            return Err(Error::BadParams("interval exceeds the sample domain".into()));
        }
    }
    let mut qmax: f64 = 0.0;
    for i in 1..=GRID {
        let p = lo + (hi - lo) * i as f64 / (GRID + 1) as f64;
        let q = eval.q(p);
        if !(q > 0.0) {
            return Err(Error::NonPositive(p));
        }
        qmax = qmax.max(q);
    }
    let tol = root_tol(&spec) * qmax.max(1e-300);
    let (q_lo, s_lo, _) = eval.eval(lo);
    let (q_hi, s_hi, _) = eval.eval(hi);
    Ok(Profile {
        endpoint_slopes: (s_lo, s_hi),
        endpoint_roots: (q_lo.abs() <= tol, q_hi.abs() <= tol),
        spec,
        interval,
        eval: Arc::new(eval),
    })
}

/// Search box for admissible intervals of closed-form families.
pub const SEARCH_BOX: (f64, f64) = (-1e3, 1e3);
const SEARCH_POINTS: usize = 10_000;

/// Locates the maximal interval of positivity of Q around `seed`, with root endpoints.
pub fn find_admissible_interval(spec: &ProfileSpec, seed: f64) -> Result<Profile> {
    let eval = Evaluator::new(spec)?;
    let q0 = eval.q(seed);
    if !(q0 > 0.0) {
        return Err(Error::SeedNonPositive(seed));
    }
    let (blo, bhi) = eval.sample_domain().unwrap_or(SEARCH_BOX);
    if seed < blo || seed > bhi {
        return Err(Error::SeedNonPositive(seed));
    }
    let pole = match *spec {
        ProfileSpec::TypeC { c, cc, .. } if cc != 0.0 => Some(c),
        _ => None,
    };
    let mut step = (bhi - blo) / SEARCH_POINTS as f64;
    let mut last_err = None;
    for _attempt in 0..3 {
        let lo = walk_to_root(&eval, seed, -step, blo, pole)?;
        let hi = walk_to_root(&eval, seed, step, bhi, pole)?;
        match make_profile(spec.clone(), (lo, hi)) {
            Ok(p) => return Ok(p),
            Err(Error::NonPositive(x)) => {
                last_err = Some(Error::NonPositive(x));
                step /= 10.0;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or(Error::NoRoot(bhi)))
}

fn walk_to_root(eval: &Evaluator, seed: f64, step: f64, edge: f64, pole: Option<f64>) -> Result<f64> {
    let q = |x: f64| eval.q(x);
    let mut prev = seed;
    let mut k = 1usize;
    loop {
        let mut x = seed + step * k as f64;
        let at_edge = if step > 0.0 { x >= edge } else { x <= edge };
        if at_edge {
            x = edge;
        }
        if let Some(c) = pole {
            if (c - prev) * (c - x) <= 0.0 {
                return Err(Error::PoleInInterval(c));
            }
        }
        let qx = q(x);
        if !(qx > 0.0) {
            let (a, b) = if step > 0.0 { (prev, x) } else { (x, prev) };
            if !qx.is_finite() {
                return Err(Error::PoleInInterval(x));
            }
            let mut r = bisect(&q, a, b, 1e-13);
            let (qr, dr, _) = eval.eval(r);
            if dr != 0.0 {
                let cand = r - qr / dr;
                if cand >= a && cand <= b && q(cand).abs() <= qr.abs() {
                    r = cand;
                }
            }
            let scale = q(0.5 * (seed + r)).abs().max(q(seed).abs());
            if q(r).abs() > 1e-6 * scale.max(1.0) {
                return Err(Error::PoleInInterval(r));
            }
            return Ok(r);
        }
        if at_edge {
            return Err(Error::NoRoot(edge));
        }
        prev = x;
        k += 1;
    }
}

/// Endpoint behaviour of a profile whose endpoints are roots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryReport {
    pub endpoint_values: (f64, f64),
    pub endpoint_slopes: (f64, f64),
    pub roots_ok: bool,
    pub positivity_ok: bool,
    pub slopes_nonzero: bool,
    pub slopes_opposite: bool,
}

impl BoundaryReport {
    pub fn pass(&self) -> bool {
        self.roots_ok && self.positivity_ok && self.slopes_nonzero && self.slopes_opposite
    }
}

/// Default tolerance for the "mutually opposite" test.
pub fn default_mw1_tol(profile: &Profile) -> f64 {
    if profile.spec.is_custom() { 1e-6 } else { 1e-9 }
}

pub fn check_mw1(profile: &Profile, tol: f64) -> BoundaryReport {
    let (lo, hi) = profile.interval;
    let vals = (profile.q(lo), profile.q(hi));
    let slopes = (profile.dq(lo), profile.dq(hi));
    let grid = profile.interior_grid(GRID);
    let qs: Vec<f64> = grid.iter().map(|&p| profile.q(p)).collect();
    let qmax = qs.iter().cloned().fold(0.0, f64::max);
    let positivity_ok = qs.iter().all(|&q| q > 0.0);
    let roots_ok = vals.0.abs() <= tol.max(root_tol(&profile.spec)) * qmax && vals.1.abs() <= tol.max(root_tol(&profile.spec)) * qmax;
    let smax = slopes.0.abs().max(slopes.1.abs());
    let slope_scale = smax.max(qmax / profile.len());
    let slopes_nonzero = slopes.0.abs() > 1e-8 * slope_scale && slopes.1.abs() > 1e-8 * slope_scale;
    let slopes_opposite = (slopes.0 + slopes.1).abs() <= tol * smax;
    BoundaryReport { endpoint_values: vals, endpoint_slopes: slopes, roots_ok, positivity_ok, slopes_nonzero, slopes_opposite }
}

/// Per-condition flags for a type C profile viewed as a function of t = φ/c.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyReport {
    pub t_interval: (f64, f64),
    pub analytic: bool,
    pub roots_at_ends: bool,
    pub positive_inside: bool,
    pub slopes_nonzero: bool,
    pub slopes_opposite: bool,
    pub one_not_in_interval: bool,
    /// A⁻¹·dQ/dt at the t-interval ends (None when A = 0).
    pub normalized_slopes: Option<(f64, f64)>,
    /// Nearest p/q (q ≤ 64) for each normalized slope.
    pub rational_fits: Option<((i64, i64), (i64, i64))>,
    pub rational_ok: bool,
}

impl SyReport {
    /// All structural conditions, including that 1 lies outside the interval.
    pub fn structural_pass(&self) -> bool {
        self.analytic
            && self.roots_at_ends
            && self.positive_inside
            && self.slopes_nonzero
            && self.slopes_opposite
            && self.one_not_in_interval
    }
}

pub fn check_sy(m: u32, profile: &Profile, tol: f64) -> Result<SyReport> {
    let (c, a, cc, pm) = match profile.spec {
        ProfileSpec::TypeC { m, c, a, cc, .. } => (c, a, cc, m),
        _ => return Err(Error::WrongFamily("type_c")),
    };
    if pm != m {
        return Err(Error::BadParams(format!("check_sy called with m = {m} for a profile with m = {pm}")));
    }
    let (plo, phi_hi) = profile.interval;
    let (t0, t1) = if c > 0.0 { (plo / c, phi_hi / c) } else { (phi_hi / c, plo / c) };
    let one_in = t0 <= 1.0 && 1.0 <= t1;
    let analytic = cc == 0.0 || !one_in;
    // dQ/dt = c·dQ/dφ, evaluated at the t-interval ends
    let phi_at = |t: f64| t * c;
    let dqdt = |t: f64| c * profile.dq(phi_at(t));
    let (v0, v1) = (profile.q(phi_at(t0)), profile.q(phi_at(t1)));
    let grid: Vec<f64> = profile.interior_grid(GRID);
    let qs: Vec<f64> = grid.iter().map(|&p| profile.q(p)).collect();
    let qmax = qs.iter().cloned().filter(|q| q.is_finite()).fold(0.0, f64::max);
    let positive_inside = qs.iter().all(|&q| q > 0.0 && q.is_finite());
    let roots_at_ends = v0.abs() <= tol * qmax.max(1e-300) && v1.abs() <= tol * qmax.max(1e-300);
    let (d0, d1) = (dqdt(t0), dqdt(t1));
    let smax = d0.abs().max(d1.abs());
    let slope_floor = 1e-8 * smax.max(qmax / (t1 - t0));
    let slopes_nonzero = d0.abs() > slope_floor && d1.abs() > slope_floor;
    let slopes_opposite = (d0 + d1).abs() <= tol * smax;
    let (normalized_slopes, rational_fits, rational_ok) = if a == 0.0 {
        (None, None, true)
    } else {
        let (n0, n1) = (d0 / a, d1 / a);
        let (f0, f1) = (rational_approx(n0, 64), rational_approx(n1, 64));
        let close = |v: f64, (p, q): (i64, i64)| (v - p as f64 / q as f64).abs() <= tol * v.abs().max(1.0);
        (Some((n0, n1)), Some((f0, f1)), close(n0, f0) && close(n1, f1))
    };
    Ok(SyReport {
        t_interval: (t0, t1),
        analytic,
        roots_at_ends,
        positive_inside,
        slopes_nonzero,
        slopes_opposite,
        one_not_in_interval: !one_in,
        normalized_slopes,
        rational_fits,
        rational_ok,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tag {
    A,
    B,
    C1,
    C2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeTag {
    pub tag: Tag,
    pub epsilon: i32,
    pub c: Option<f64>,
    /// Type B cannot occur for compact examples.
    pub excluded: bool,
}

pub fn classify_type(epsilon: i32, c: Option<f64>, interval: (f64, f64)) -> Result<TypeTag> {
    if !(-1..=1).contains(&epsilon) {
        return Err(Error::Inconsistent(format!("epsilon = {epsilon}")));
    }
    let tag = match (epsilon, c) {
        (0, None) => Tag::A,
        (0, Some(_)) => return Err(Error::Inconsistent("c given with epsilon = 0".into())),
        (_, None) => return Err(Error::Inconsistent("epsilon != 0 requires c".into())),
        (_, Some(0.0)) => Tag::B,
        (_, Some(cv)) if cv >= interval.0 && cv <= interval.1 => Tag::C2,
        _ => Tag::C1,
    };
    Ok(TypeTag { tag, epsilon, c, excluded: tag == Tag::B })
}

/// Parameters of the soliton profile equation pQ′ − Q + (m−1)pQ/(φ−c) = εpκ − 2s0(φ−c).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonParams {
    pub m: u32,
    pub p: f64,
    pub s0: f64,
    pub kappa: f64,
    pub epsilon: i32,
    pub c: f64,
}

impl SolitonParams {
    /// dQ/dφ prescribed by the equation.
    pub fn rhs(&self, phi: f64, q: f64) -> f64 {
        let d = phi - self.c;
        (q - (self.m as f64 - 1.0) * self.p * q / d + self.epsilon as f64 * self.p * self.kappa - 2.0 * self.s0 * d)
            / self.p
    }

    /// Equation residual for given Q, Q′.
    pub fn residual(&self, phi: f64, q: f64, dq: f64) -> f64 {
        let d = phi - self.c;
        self.p * dq - q + (self.m as f64 - 1.0) * self.p * q / d - self.epsilon as f64 * self.p * self.kappa
            + 2.0 * self.s0 * d
    }
}

const SOLITON_NODES: usize = 4001;

/// Solves the soliton profile equation through `anchor` over `range` and returns a sampled
/// profile whose node slopes are taken from the equation itself.
pub fn soliton_profile(params: SolitonParams, anchor: (f64, f64), range: (f64, f64)) -> Result<Profile> {
    let SolitonParams { m, p, epsilon, c, .. } = params;
    let (lo, hi) = range;
    if m < 2 || p == 0.0 || !(epsilon == 1 || epsilon == -1) || !(hi > lo) {
        return Err(Error::BadParams("soliton needs m >= 2, p != 0, epsilon = ±1 and a nondegenerate range".into()));
    }
    if c >= lo && c <= hi {
        return Err(Error::RangeContainsC(c));
    }
    if (epsilon as f64) * (lo - c) <= 0.0 {
        return Err(Error::BadParams("epsilon must equal sgn(phi - c) on the range".into()));
    }
    let (pa, qa) = anchor;
    if !(qa > 0.0) || pa < lo || pa > hi {
        return Err(Error::BadParams("anchor must lie in the range with Q > 0".into()));
    }
    let mut grid: Vec<f64> = (0..SOLITON_NODES).map(|i| lo + (hi - lo) * i as f64 / (SOLITON_NODES - 1) as f64).collect();
    let ia = match grid.binary_search_by(|x| x.partial_cmp(&pa).unwrap()) {
        Ok(i) => i,
        Err(i) => {
            grid.insert(i, pa);
            i
        }
    };
    let solver = Dopri5 { rtol: 1e-12, atol: 1e-14, ..Default::default() };
    let f = |x: f64, q: f64| params.rhs(x, q);
    let mut qs = vec![0.0; grid.len()];
    qs[ia] = qa;
    for i in ia + 1..grid.len() {
        qs[i] = solver.integrate(&f, grid[i - 1], qs[i - 1], grid[i])?;
        if !(qs[i] > 0.0) {
            return Err(Error::SolutionNonPositive(grid[i]));
        }
    }
    for i in (0..ia).rev() {
        qs[i] = solver.integrate(&f, grid[i + 1], qs[i + 1], grid[i])?;
        if !(qs[i] > 0.0) {
            return Err(Error::SolutionNonPositive(grid[i]));
        }
    }
    let samples: Vec<[f64; 2]> = grid.iter().zip(&qs).map(|(&x, &q)| [x, q]).collect();
    let slopes: Vec<f64> = grid.iter().zip(&qs).map(|(&x, &q)| params.rhs(x, q)).collect();
    make_profile(ProfileSpec::Custom { samples, slopes: Some(slopes) }, (lo, hi))
}

/// Outcome of the symmetry analysis for types A and B.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bc2Report {
    pub family: &'static str,
    pub interval: Option<(f64, f64)>,
    pub mw1_pass: bool,
    pub symmetric: bool,
    /// |φ_min + φ_max| / φ_max
    pub asymmetry: Option<f64>,
    pub alpha_zero: bool,
    pub note: String,
}

impl Bc2Report {
    /// Consistent with the symmetry result: any instance passing the boundary check is
    /// symmetric, and for type A it has α = 0.
    pub fn consistent(&self) -> bool {
        if !self.mw1_pass {
            return true;
        }
        match self.family {
            "type_a" => self.symmetric && self.alpha_zero,
            _ => self.symmetric,
        }
    }
}

const SYMMETRY_TOL: f64 = 1e-9;

/// Finds an admissible interval (seeded at 0, then at a few other points) and records
/// whether it passes the boundary check and whether it is symmetric about 0.
pub fn verify_bc2(spec: &ProfileSpec) -> Result<Bc2Report> {
    let (family, alpha) = match *spec {
        ProfileSpec::TypeA { alpha, .. } => ("type_a", alpha),
        ProfileSpec::TypeB { alpha, .. } => ("type_b", alpha),
        _ => return Err(Error::WrongFamily("type_a or type_b")),
    };
    let eval = Evaluator::new(spec)?;
    let seeds = [0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 5.0, -5.0];
    let mut found = None;
    for &s in &seeds {
        if eval.q(s) > 0.0 {
            if let Ok(p) = find_admissible_interval(spec, s) {
                found = Some(p);
                break;
            }
        }
    }
    let Some(profile) = found else {
        return Ok(Bc2Report {
            family,
            interval: None,
            mw1_pass: false,
            symmetric: false,
            asymmetry: None,
            alpha_zero: alpha == 0.0,
            note: "no root-bounded interval of positivity found".into(),
        });
    };
    let rep = check_mw1(&profile, default_mw1_tol(&profile));
    let (lo, hi) = profile.interval;
    let asym = (lo + hi).abs() / hi.abs().max(lo.abs());
    Ok(Bc2Report {
        family,
        interval: Some((lo, hi)),
        mw1_pass: rep.pass(),
        symmetric: asym < SYMMETRY_TOL,
        asymmetry: Some(asym),
        alpha_zero: alpha == 0.0,
        note: String::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_matches_quadratic() {
        let poly = Evaluator::new(&ProfileSpec::Polynomial { coeffs: vec![3.0, 0.0, -2.0, 0.0] }).unwrap();
        let quad = Evaluator::new(&ProfileSpec::Quadratic { k: 2.0, phi0: 1.5f64.sqrt() }).unwrap();
        for &x in &[-1.1, 0.0, 0.3, 0.9] {
            let (a, b) = (poly.eval(x), quad.eval(x));
            assert!((a.0 - b.0).abs() < 1e-14 && (a.1 - b.1).abs() < 1e-14 && (a.2 - b.2).abs() < 1e-14);
        }
        let cubic = Evaluator::new(&ProfileSpec::Polynomial { coeffs: vec![1.0, -1.0, 0.5, 2.0] }).unwrap();
        let (q, dq, d2q) = cubic.eval(0.7);
        assert!((q - (1.0 - 0.7 + 0.5 * 0.49 + 2.0 * 0.343)).abs() < 1e-14);
        assert!((dq - (-1.0 + 0.7 + 6.0 * 0.49)).abs() < 1e-14);
        assert!((d2q - (1.0 + 12.0 * 0.7)).abs() < 1e-14);
    }

    fn quad(k: f64, phi0: f64) -> ProfileSpec {
        ProfileSpec::Quadratic { k, phi0 }
    }

    #[test]
    fn quadratic_at_symmetry_point() {
        let p = make_profile(quad(1.0, 1.0), (-1.0, 1.0)).unwrap();
        assert_eq!(p.q(0.0), 1.0);
        assert_eq!(p.endpoint_roots, (true, true));
    }

    #[test]
    fn type_c_with_c_zero_is_t_minus_one_times_t_squared() {
        // m = 2: E(t) = t² − 1, so (t−1)(1 + t² − 1) = (t−1)t²
        let spec = ProfileSpec::TypeC { m: 2, c: 1.0, a: 1.0, b: 1.0, cc: 0.0 };
        let p = make_profile(spec, (1.5, 3.0)).unwrap();
        assert!((p.q(2.0) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn type_a_closed_form_endpoints() {
        let spec = ProfileSpec::TypeA { m: 2, k: 1.0, alpha: 0.0, eta: -6.0 };
        let p = find_admissible_interval(&spec, 0.0).unwrap();
        assert!((p.interval.0 + 1.0).abs() < 1e-12 && (p.interval.1 - 1.0).abs() < 1e-12);
        assert!((p.endpoint_slopes.0 - 2.0).abs() < 1e-10);
        assert!((p.endpoint_slopes.1 + 2.0).abs() < 1e-10);
    }

    #[test]
    fn fe_values() {
        let (f, _) = eval_fe(2, 2.0).unwrap();
        assert_eq!(f, 0.0);
        for m in 1..6 {
            assert_eq!(eval_e(m, 1.0), 0.0);
        }
        let (f, e) = eval_fe(2, 3.0).unwrap();
        assert!((f - 27.0 / 4.0).abs() < 1e-14);
        assert!((e - 8.0).abs() < 1e-14);
        assert_eq!(eval_fe(3, 1.0), Err(Error::PoleAtOne));
    }

    #[test]
    fn e_matches_explicit_sum_for_m3() {
        // S(t) = (1/3)C(4,2) + (2/3)C(3,2)t + C(2,2)t² = 2 + 2t + t²
        for &t in &[-1.3, 0.0, 0.4, 2.5] {
            let expect = (t - 1.0) * (2.0 + 2.0 * t + t * t);
            assert!((eval_e(3, t) - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn binomial_exact() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(40, 20), 137_846_528_820);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn bc1_examples() {
        assert_eq!(eval_f_bc1(3, 1.0).0, 0.0);
        assert_eq!(eval_f_bc1(3, -1.0).0, 0.0);
        let (f, r) = eval_f_bc1(2, 2.0);
        assert!((f - 1.0).abs() < 1e-14);
        assert!(r < 1e-13);
    }

    #[test]
    fn bc1_keeps_relative_accuracy_next_to_triple_root() {
        // f ≈ Π(1)(β−1)³ = (k−1)k(k+1)/6 · δ³
        let k = 5u32;
        let d = 1e-6;
        let (f, _) = eval_f_bc1(k, 1.0 + d);
        let lead = 20.0 * d * d * d;
        assert!((f / lead - 1.0).abs() < 1e-4, "f = {f:e}");
    }

    #[test]
    fn type_c_derivatives_match_differences() {
        let spec = ProfileSpec::TypeC { m: 3, c: -0.7, a: 0.4, b: 0.3, cc: 0.2 };
        let ev = Evaluator::new(&spec).unwrap();
        for &phi in &[-2.5, -1.6, 0.3, 1.1] {
            let h = 1e-5;
            let (_, d, dd) = ev.eval(phi);
            let fd = (ev.q(phi + h) - ev.q(phi - h)) / (2.0 * h);
            let fdd = (ev.eval(phi + h).1 - ev.eval(phi - h).1) / (2.0 * h);
            assert!((fd - d).abs() < 1e-8 * d.abs().max(1.0), "phi={phi} d={d} fd={fd}");
            assert!((fdd - dd).abs() < 1e-6 * dd.abs().max(1.0));
        }
    }

    #[test]
    fn admissible_interval_of_quadratic() {
        let p = find_admissible_interval(&quad(2.0, 1.0), 0.0).unwrap();
        assert!((p.interval.0 + 1.0).abs() < 1e-12);
        assert!((p.interval.1 - 1.0).abs() < 1e-12);
        assert!((p.endpoint_slopes.0 - 4.0).abs() < 1e-10);
        assert!((p.endpoint_slopes.1 + 4.0).abs() < 1e-10);
        assert!(check_mw1(&p, 1e-9).pass());
    }

    #[test]
    fn seed_must_be_positive() {
        assert_eq!(find_admissible_interval(&quad(1.0, 1.0), 2.0).unwrap_err(), Error::SeedNonPositive(2.0));
    }

    #[test]
    fn no_root_in_box() {
        // Q = φ² + 1 for type B with m = 2? use type A with K < 0 instead: Q = φ² + 1
        let spec = ProfileSpec::TypeA { m: 2, k: -1.0, alpha: 0.0, eta: -6.0 };
        assert!(matches!(find_admissible_interval(&spec, 0.0), Err(Error::NoRoot(_))));
    }

    fn custom(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> ProfileSpec {
        let samples = (0..n)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                [x, f(x)]
            })
            .collect();
        ProfileSpec::Custom { samples, slopes: None }
    }

    #[test]
    fn tangential_root_fails_boundary_check() {
        let spec = custom(|x| x * x * (1.0 - x), 0.0, 1.0, 401);
        let p = find_admissible_interval(&spec, 0.5).unwrap();
        assert!(p.interval.0.abs() < 1e-6 && (p.interval.1 - 1.0).abs() < 1e-6);
        let rep = check_mw1(&p, default_mw1_tol(&p));
        assert!(!rep.pass());
        assert!(!rep.slopes_opposite);
        assert!(rep.endpoint_slopes.0.abs() < 1e-2 * rep.endpoint_slopes.1.abs());
    }

    #[test]
    fn simple_roots_pass_boundary_check() {
        let spec = ProfileSpec::TypeB { m: 3, k: 0.0, alpha: -1.0, eta: -6.0 };
        // Q = 1 − φ⁴: slopes ∓4
        let p = find_admissible_interval(&spec, 0.0).unwrap();
        let rep = check_mw1(&p, 1e-9);
        assert!(rep.pass(), "{rep:?}");
        let logistic = custom(|x| x * (1.0 - x), 0.0, 1.0, 201);
        let p = find_admissible_interval(&logistic, 0.5).unwrap();
        let rep = check_mw1(&p, 1e-6);
        assert!(rep.pass(), "{rep:?}");
        // natural end conditions bias the end slopes at O(h)
        assert!((rep.endpoint_slopes.0 - 1.0).abs() < 1e-2);
    }

    #[test]
    fn pole_inside_interval_is_rejected() {
        let spec = ProfileSpec::TypeC { m: 2, c: 1.0, a: 1.0, b: 0.0, cc: 1.0 };
        assert_eq!(make_profile(spec, (0.5, 2.0)).unwrap_err(), Error::PoleInInterval(1.0));
    }

    #[test]
    fn check_sy_flags() {
        // (t−1)(4 − t²) on [1, 2]: roots at both ends, slopes 3 and −4
        let spec = ProfileSpec::TypeC { m: 2, c: 1.0, a: 3.0, b: -1.0, cc: 0.0 };
        let p = make_profile(spec, (1.0, 2.0)).unwrap();
        let r = check_sy(2, &p, 1e-9).unwrap();
        assert!(r.analytic && r.roots_at_ends && r.positive_inside && r.slopes_nonzero);
        assert!(!r.slopes_opposite);
        assert!(!r.one_not_in_interval);
        assert!(r.rational_ok);
        assert_eq!(r.rational_fits.unwrap(), ((1, 1), (-4, 3)));
        let zero_a = ProfileSpec::TypeC { m: 2, c: 1.0, a: 0.0, b: 1.0, cc: 0.0 };
        let p = make_profile(zero_a, (1.5, 2.0)).unwrap();
        let r = check_sy(2, &p, 1e-9).unwrap();
        assert!(r.rational_ok && r.normalized_slopes.is_none());
        let q = make_profile(quad(1.0, 1.0), (-1.0, 1.0)).unwrap();
        assert_eq!(check_sy(2, &q, 1e-9).unwrap_err(), Error::WrongFamily("type_c"));
    }

    #[test]
    fn classification_cases() {
        assert_eq!(classify_type(0, None, (-1.0, 1.0)).unwrap().tag, Tag::A);
        assert_eq!(classify_type(1, Some(2.0), (-1.0, 1.0)).unwrap().tag, Tag::C1);
        assert_eq!(classify_type(1, Some(0.5), (-1.0, 1.0)).unwrap().tag, Tag::C2);
        let b = classify_type(-1, Some(0.0), (1.0, 2.0)).unwrap();
        assert!(b.tag == Tag::B && b.excluded);
        assert!(matches!(classify_type(1, None, (0.0, 1.0)), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn soliton_anchor_slope() {
        let params = SolitonParams { m: 2, p: 1.0, s0: 0.0, kappa: 0.0, epsilon: 1, c: 0.0 };
        assert_eq!(params.rhs(1.0, 1.0), 0.0);
        let prof = soliton_profile(params, (1.0, 1.0), (0.8, 1.5)).unwrap();
        assert!(prof.dq(1.0).abs() < 1e-10);
        // Q′ = Q(1 − 1/φ) gives Q = e^{φ−1}/φ through (1, 1)
        for &x in &[0.85, 1.2, 1.45] {
            let exact = (x - 1.0f64).exp() / x;
            assert!((prof.q(x) - exact).abs() < 1e-10 * exact);
        }
    }

    #[test]
    fn soliton_range_must_exclude_c() {
        let params = SolitonParams { m: 2, p: 1.0, s0: 0.0, kappa: 0.0, epsilon: 1, c: 1.0 };
        assert_eq!(soliton_profile(params, (1.2, 1.0), (0.5, 2.0)).unwrap_err(), Error::RangeContainsC(1.0));
    }

    #[test]
    fn bc2_examples() {
        let r = verify_bc2(&ProfileSpec::TypeA { m: 2, k: 1.0, alpha: 0.0, eta: -6.0 }).unwrap();
        assert!(r.mw1_pass && r.symmetric && r.consistent());
        let r = verify_bc2(&ProfileSpec::TypeA { m: 3, k: 1.0, alpha: 0.5, eta: -2.0 }).unwrap();
        assert!(!r.mw1_pass);
    }
}
