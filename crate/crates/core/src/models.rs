//! Explicit model charts: U(m)-invariant shells in C^m, annuli in C with their inversion
//! duals, the Riemann sphere extended across its poles, the ball extension coefficients,
//! the hyperbolic-disk × sphere product, and the tautological line over CP¹.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::profiles::{find_admissible_interval, Profile, ProfileSpec};
use crate::reparam::{build_reparam, Endpoint, ReparamTable};
use crate::tensor::{ChartMeta, ChartMetric, FdConfig, Fields};

/// A built chart together with the reparametrization it was built from.
#[derive(Debug, Clone)]
pub struct Model {
    pub chart: ChartMetric,
    pub table: Option<Arc<ReparamTable>>,
    /// Radial range of the chart (0 for charts through the origin).
    pub r_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct ShellParams {
    pub m: usize,
    pub profile: Profile,
    pub a: f64,
    pub epsilon: i32,
    pub c: f64,
    /// φ-range covered by the chart; defaults to the interval minus 10% at each end.
    pub window: Option<(f64, f64)>,
    /// (φ_a, r_a); defaults to (interval midpoint, 1).
    pub anchor: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct AnnulusParams {
    pub profile: Profile,
    pub a: f64,
    pub window: Option<(f64, f64)>,
    pub anchor: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub enum ModelSpec {
    Shell(ShellParams),
    Annulus(AnnulusParams),
    Sphere { k: f64, phi0: f64 },
    ProductS2 { k: f64, t: f64 },
    BallCoeffs { profile: Profile, a: f64, c: f64 },
}

/// Uniform direction in R^n scaled to a radius drawn uniformly from [r_lo, r_hi].
pub fn shell_point(rng: &mut ChaCha8Rng, n: usize, r_lo: f64, r_hi: f64) -> Vec<f64> {
    loop {
        // Box-Muller pairs give an isotropic direction
        let mut v = Vec::with_capacity(n);
        while v.len() < n {
            let u1: f64 = rng.random::<f64>().max(1e-300);
            let u2: f64 = rng.random();
            let rad = (-2.0 * u1.ln()).sqrt();
            v.push(rad * (2.0 * PI * u2).cos());
            v.push(rad * (2.0 * PI * u2).sin());
        }
        v.truncate(n);
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-8 {
            let r = r_lo + (r_hi - r_lo) * rng.random::<f64>();
            return v.into_iter().map(|c| c * r / norm).collect();
        }
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum()
}

/// Σ_k (x xᵀ + Jx (Jx)ᵀ) for the standard J.
fn v_block(x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let mut jx = vec![0.0; n];
    for k in 0..n / 2 {
        jx[2 * k] = -x[2 * k + 1];
        jx[2 * k + 1] = x[2 * k];
    }
    DMatrix::from_fn(n, n, |i, j| x[i] * x[j] + jx[i] * jx[j])
}

fn default_anchor(profile: &Profile) -> (f64, f64) {
    (0.5 * (profile.interval.0 + profile.interval.1), 1.0)
}

fn window_radii(table: &ReparamTable, window: (f64, f64)) -> Result<(f64, f64)> {
    let (lo, hi) = table.interval();
    let (w0, w1) = window;
    if !(w0 > lo && w1 < hi && w1 > w0) {
        return Err(Error::TableRangeExceeded(w0.min(w1)));
    }
    let (r0, r1) = (table.r_exact(w0), table.r_exact(w1));
    Ok((r0.min(r1), r0.max(r1)))
}

fn default_window(profile: &Profile) -> (f64, f64) {
    let (lo, hi) = profile.interval;
    (lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo))
}

/// Radial chart on r_lo < |x| < r_hi whose metric depends on (r, φ(r)) only.
fn radial_chart(
    n: usize,
    table: Arc<ReparamTable>,
    radii: (f64, f64),
    metric: Arc<dyn Fn(&[f64], f64, f64) -> DMatrix<f64> + Send + Sync>,
    meta: ChartMeta,
) -> ChartMetric {
    let (r_lo, r_hi) = radii;
    let t = table.clone();
    let fields = Arc::new(move |x: &[f64]| -> Result<Fields> {
        let rr = norm2(x);
        let phi = t.phi_exact(0.5 * rr.ln())?;
        Ok(Fields { g: metric(x, rr, phi), phi })
    });
    let domain = Arc::new(move |x: &[f64]| {
        let r = norm2(x).sqrt();
        r > r_lo && r < r_hi
    });
    // keep samples well inside: the widest stencil (dY) reaches about 4·10⁻² r
    let (s_lo, s_hi) = (r_lo + 0.03 * (r_hi - r_lo), r_hi - 0.03 * (r_hi - r_lo));
    let s_lo = s_lo.max(r_lo * 1.05);
    let s_hi = s_hi.min(r_hi / 1.05);
    ChartMetric::new(n, fields, domain, 0.5 * (r_lo + r_hi), meta)
        .with_local_scale(Arc::new(|x: &[f64]| norm2(x).sqrt()))
        .with_sampler(Arc::new(move |rng: &mut ChaCha8Rng| shell_point(rng, n, s_lo, s_hi)))
}

/// The U(m)-invariant metric on a spherical shell in C^m with
/// |a|r²g = 2|φ−c|·Euclid on H and a²r²g = Q·Euclid on V.
pub fn build_shell(p: &ShellParams) -> Result<Model> {
    let ShellParams { m, ref profile, a, epsilon, c, .. } = *p;
    if !(2..=4).contains(&m) {
        return Err(Error::SpecInvariantViolated(format!("shell needs 2 <= m <= 4, got {m}")));
    }
    if !(epsilon == 1 || epsilon == -1) {
        return Err(Error::SpecInvariantViolated("shell needs epsilon = ±1".into()));
    }
    if !(epsilon as f64 * a > 0.0) {
        return Err(Error::SpecInvariantViolated("shell needs epsilon·a > 0".into()));
    }
    let (lo, hi) = profile.interval;
    if !(epsilon as f64 * (lo - c) > 0.0 && epsilon as f64 * (hi - c) > 0.0) {
        return Err(Error::SpecInvariantViolated("shell needs epsilon·(phi − c) > 0 on the interval".into()));
    }
    let table = Arc::new(build_reparam(profile, a, p.anchor.unwrap_or_else(|| default_anchor(profile)))?);
    let radii = window_radii(&table, p.window.unwrap_or_else(|| default_window(profile)))?;
    let prof = profile.clone();
    let metric = Arc::new(move |x: &[f64], rr: f64, phi: f64| -> DMatrix<f64> {
        let theta_h = 2.0 * (phi - c).abs() / (a.abs() * rr);
        let theta_v = prof.q(phi) / (a * a * rr);
        let n = x.len();
        DMatrix::identity(n, n) * theta_h + v_block(x) * ((theta_v - theta_h) / rr)
    });
    let meta = ChartMeta {
        model: "shell".into(),
        m,
        a: Some(a),
        epsilon,
        c: Some(c),
        kappa: Some(2.0 * m as f64 * a.abs()),
        profile: Some(profile.clone()),
    };
    let chart = radial_chart(2 * m, table.clone(), radii, metric, meta);
    Ok(Model { chart, table: Some(table), r_range: Some(radii) })
}

/// The conformal metric Q/(a²r²)·Euclid on an annulus in C.
pub fn build_annulus(p: &AnnulusParams) -> Result<Model> {
    let table = Arc::new(build_reparam(&p.profile, p.a, p.anchor.unwrap_or_else(|| default_anchor(&p.profile)))?);
    annulus_from_table(table, p.window.unwrap_or_else(|| default_window(&p.profile)))
}

/// Annulus chart over the φ-window of an existing table.
pub fn annulus_from_table(table: Arc<ReparamTable>, window: (f64, f64)) -> Result<Model> {
    let radii = window_radii(&table, window)?;
    let prof = table.profile().clone();
    let a = table.a;
    let metric = Arc::new(move |_x: &[f64], rr: f64, phi: f64| DMatrix::identity(2, 2) * (prof.q(phi) / (a * a * rr)));
    let meta = ChartMeta {
        model: "annulus".into(),
        m: 1,
        a: Some(a),
        epsilon: 0,
        c: None,
        kappa: None,
        profile: Some(table.profile().clone()),
    };
    let chart = radial_chart(2, table.clone(), radii, metric, meta);
    Ok(Model { chart, table: Some(table), r_range: Some(radii) })
}

/// The annulus over the same window built from the dual data r* = 1/r, a* = −a.
pub fn dual_annulus(model: &Model, window: (f64, f64)) -> Result<Model> {
    let table = model.table.as_ref().ok_or(Error::MissingMeta("reparametrization table"))?;
    annulus_from_table(Arc::new(table.dual()), window)
}

/// Coefficients (c1, c2) with g = c1·a²(x xᵀ + Jx (Jx)ᵀ) + c2·Euclid near the root c.
#[derive(Debug, Clone)]
pub struct BallExtension {
    pub table: Arc<ReparamTable>,
    pub a: f64,
    pub c: f64,
    pub endpoint: Endpoint,
}

impl BallExtension {
    /// Requires Q(c) = 0 and dQ/dφ(c) = 2a within 10⁻⁶; a is then taken as half the
    /// computed slope so the regularized coefficients have no residual pole at r = 0.
    pub fn new(profile: &Profile, a: f64, c: f64, anchor: Option<(f64, f64)>) -> Result<Self> {
        let (lo, hi) = profile.interval;
        let tol = 1e-9 * (hi - lo).max(1.0);
        let (endpoint, root, slope) = if (c - lo).abs() <= tol {
            (Endpoint::Min, profile.endpoint_roots.0, profile.endpoint_slopes.0)
        } else if (c - hi).abs() <= tol {
            (Endpoint::Max, profile.endpoint_roots.1, profile.endpoint_slopes.1)
        } else {
            return Err(Error::WrongEndpoint(format!("c = {c} is not an endpoint of [{lo}, {hi}]")));
        };
        if !root {
            return Err(Error::WrongEndpoint(format!("Q(c) != 0 at c = {c}")));
        }
        if (slope - 2.0 * a).abs() > 1e-6 * slope.abs() {
            return Err(Error::WrongEndpoint(format!("dQ/dphi = {slope} at c, but 2a = {}", 2.0 * a)));
        }
        let a = 0.5 * slope;
        let table = Arc::new(build_reparam(profile, a, anchor.unwrap_or_else(|| default_anchor(profile)))?);
        let c = [lo, hi][if endpoint == Endpoint::Min { 0 } else { 1 }];
        Ok(BallExtension { table, a, c, endpoint })
    }

    /// (c1, c2, φ) as functions of ξ = r² ≥ 0, including ξ = 0.
    pub fn coeffs_xi(&self, xi: f64) -> Result<(f64, f64, f64)> {
        let nr = self.table.near_zero(xi)?;
        let a = self.a;
        // Q − 2a(φ−c) = (φ−c)²·D, so c1 = (d/ξ)²·D/a⁴ and c2 = 2(d/ξ)/a
        let c1 = nr.d_over_xi * nr.d_over_xi * nr.dcoef / a.powi(4);
        let c2 = 2.0 * nr.d_over_xi / a;
        Ok((c1, c2, nr.phi))
    }

    pub fn coeffs(&self, r: f64) -> Result<(f64, f64)> {
        let (c1, c2, _) = self.coeffs_xi(r * r)?;
        Ok((c1, c2))
    }

    /// Metric at x ∈ R^{2m} (any m ≥ 1) and the potential.
    pub fn fields(&self, x: &[f64]) -> Result<Fields> {
        let (c1, c2, phi) = self.coeffs_xi(norm2(x))?;
        let n = x.len();
        Ok(Fields { g: v_block(x) * (c1 * self.a * self.a) + DMatrix::identity(n, n) * c2, phi })
    }
}

pub fn ball_extension_coeffs(profile: &Profile, a: f64, c: f64, r: f64) -> Result<(f64, f64)> {
    if r < 0.0 {
        return Err(Error::BadParams("r must be nonnegative".into()));
    }
    BallExtension::new(profile, a, c, None)?.coeffs(r)
}

/// Round metric of curvature K on the Riemann sphere, as the profile Q = K(φ0² − φ²)
/// with a = −Kφ0, in a disk chart about the pole φ = φ0 and its dual chart about φ = −φ0.
#[derive(Debug, Clone)]
pub struct SphereModel {
    pub k: f64,
    pub phi0: f64,
    pub a: f64,
    pub chart: ChartMetric,
    pub dual_chart: ChartMetric,
    pub ball: BallExtension,
    pub dual_ball: BallExtension,
    pub radius: f64,
}

/// Disk radius of the sphere charts; r = 1 is the equator φ = 0.
pub const SPHERE_CHART_RADIUS: f64 = 2.0;

fn ball_chart(ball: BallExtension, radius: f64, model: &str, k: f64) -> ChartMetric {
    let b = ball.clone();
    let fields = Arc::new(move |x: &[f64]| b.fields(x));
    let domain = Arc::new(move |x: &[f64]| norm2(x) < radius * radius);
    let meta = ChartMeta {
        model: model.into(),
        m: 1,
        a: Some(ball.a),
        epsilon: 0,
        c: None,
        kappa: Some(k),
        profile: Some(ball.table.profile().clone()),
    };
    let s_hi = 0.8 * radius;
    ChartMetric::new(2, fields, domain, 1.0, meta)
        .with_sampler(Arc::new(move |rng: &mut ChaCha8Rng| shell_point(rng, 2, 0.05, s_hi)))
}

pub fn build_sphere(k: f64, phi0: f64) -> Result<SphereModel> {
    if !(k > 0.0) || phi0 == 0.0 || !phi0.is_finite() {
        return Err(Error::BadParams("sphere needs K > 0 and phi0 != 0".into()));
    }
    let profile = find_admissible_interval(&ProfileSpec::Quadratic { k, phi0 }, 0.0)?;
    let a = -k * phi0;
    let (lo, hi) = profile.interval;
    let pole = if phi0 > 0.0 { hi } else { lo };
    let ball = BallExtension::new(&profile, a, pole, Some((0.0, 1.0)))?;
    let dual_table = Arc::new(ball.table.dual());
    let dual_ball = BallExtension {
        table: dual_table,
        a: -ball.a,
        c: if phi0 > 0.0 { lo } else { hi },
        endpoint: if phi0 > 0.0 { Endpoint::Min } else { Endpoint::Max },
    };
    let chart = ball_chart(ball.clone(), SPHERE_CHART_RADIUS, "sphere", k);
    let dual_chart = ball_chart(dual_ball.clone(), SPHERE_CHART_RADIUS, "sphere_dual", k);
    Ok(SphereModel { k, phi0, a: ball.a, chart, dual_chart, ball, dual_ball, radius: SPHERE_CHART_RADIUS })
}

impl SphereModel {
    /// The map ζ ↦ (√Q ζ/|ζ|, √K φ), rescaled onto the unit sphere.
    pub fn chi(&self, x: &[f64]) -> Result<[f64; 3]> {
        let nr = self.ball.table.near_zero(norm2(x))?;
        let s = nr.q_over_xi().max(0.0).sqrt();
        let rad = self.k.sqrt() * self.phi0.abs();
        Ok([s * x[0] / rad, s * x[1] / rad, self.k.sqrt() * nr.phi / rad])
    }

    /// Length of the geodesic from the pole at 0 to the opposite pole, crossing from the
    /// pole chart to the dual chart at the equator.
    pub fn pole_to_pole_length(&self, fd: &FdConfig) -> Result<f64> {
        use crate::tensor::geodesic_until;
        // the first leg ends beyond the equator |x| = 1 and the arclength to there is below L
        let l_bound = PI / self.k.sqrt();
        let first = geodesic_until(&self.chart, &[0.0, 0.0], &[1.0, 0.0], 0.75 * l_bound, fd, &|x, _| x[0] >= 1.2)?;
        let x = first.x.last().unwrap();
        let v = first.v.last().unwrap();
        if x[0] < 1.2 {
            return Err(Error::LeftDomain(*first.s.last().unwrap()));
        }
        let s1 = *first.s.last().unwrap();
        // w = 1/ζ, dw = −dζ/ζ²
        let z = Complex::new(x[0], x[1]);
        let dz = Complex::new(v[0], v[1]);
        let w = z.inv();
        let dw = -dz / (z * z);
        let stop = |y: &[f64], _: &[f64]| y[0] <= 0.0;
        let second = geodesic_until(&self.dual_chart, &[w.re, w.im], &[dw.re, dw.im], l_bound - s1 + 0.25 * l_bound, fd, &stop)?;
        let n = second.s.len();
        if n < 2 || second.x[n - 1][0] > 0.0 {
            return Err(Error::LeftDomain(s1 + second.s[n - 1]));
        }
        // cubic Hermite root of w₁(s) on the last step
        let (s0, s1b) = (second.s[n - 2], second.s[n - 1]);
        let (y0, y1) = (second.x[n - 2][0], second.x[n - 1][0]);
        let (d0, d1) = (second.v[n - 2][0], second.v[n - 1][0]);
        let h = s1b - s0;
        let herm = |t: f64| {
            let (t2, t3) = (t * t, t * t * t);
            (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1
        };
        let t = crate::numeric::roots::bisect(&herm, 0.0, 1.0, 1e-15);
        Ok(s1 + s0 + t * h)
    }
}

/// Hyperbolic disk of curvature −K times the sphere of curvature K, with φ = t·z(w).
pub fn build_product(k: f64, t: f64) -> Result<Model> {
    if !(k > 0.0) || t == 0.0 || !t.is_finite() {
        return Err(Error::BadParams("product needs K > 0 and t != 0".into()));
    }
    let fields = Arc::new(move |x: &[f64]| -> Result<Fields> {
        let rz = x[0] * x[0] + x[1] * x[1];
        let rw = x[2] * x[2] + x[3] * x[3];
        let base = 4.0 / (k * (1.0 - rz).powi(2));
        let fibre = 4.0 / (k * (1.0 + rw).powi(2));
        let mut g = DMatrix::zeros(4, 4);
        g[(0, 0)] = base;
        g[(1, 1)] = base;
        g[(2, 2)] = fibre;
        g[(3, 3)] = fibre;
        Ok(Fields { g, phi: t * (rw - 1.0) / (rw + 1.0) })
    });
    let domain = Arc::new(|x: &[f64]| x[0] * x[0] + x[1] * x[1] < 0.95 * 0.95 && x[2] * x[2] + x[3] * x[3] < 16.0);
    let meta = ChartMeta { model: "product_s2".into(), m: 2, a: None, epsilon: 0, c: None, kappa: Some(-k), profile: None };
    let sampler = Arc::new(|rng: &mut ChaCha8Rng| {
        let z = shell_point(rng, 2, 0.0, 0.6);
        // fibre radii avoid the poles and the zero set |w| = 1 of φ
        let w = if rng.random::<bool>() { shell_point(rng, 2, 0.2, 0.85) } else { shell_point(rng, 2, 1.2, 3.0) };
        vec![z[0], z[1], w[0], w[1]]
    });
    // the fibre metric shrinks like |w|⁻⁴, so FD steps grow with the fibre radius
    let local = Arc::new(|x: &[f64]| 0.5 * (1.0 + x[2] * x[2] + x[3] * x[3]));
    let chart = ChartMetric::new(4, fields, domain, 1.0, meta).with_sampler(sampler).with_local_scale(local);
    Ok(Model { chart, table: None, r_range: None })
}

/// Connection form, curvature form and Fubini-Study form of the tautological line over
/// CP¹ at an affine coordinate y, with the section w(y) = (1, y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TautologicalData {
    /// Γ(∂/∂y₁), Γ(∂/∂y₂) as (re, im).
    pub gamma: [(f64, f64); 2],
    /// Ω(∂₁, ∂₂) as (re, im); the imaginary part is a numerical residual.
    pub omega: (f64, f64),
    /// ω_FS(∂₁, ∂₂)
    pub omega_fs: f64,
}

fn herm(u: [Complex<f64>; 2], w: [Complex<f64>; 2]) -> Complex<f64> {
    // linear in the first argument
    u[0] * w[0].conj() + u[1] * w[1].conj()
}

fn taut_gamma(y: [f64; 2], h: f64) -> [Complex<f64>; 2] {
    let section = |y: [f64; 2]| [Complex::new(1.0, 0.0), Complex::new(y[0], y[1])];
    let w = section(y);
    let norm = herm(w, w);
    let mut out = [Complex::new(0.0, 0.0); 2];
    for (i, o) in out.iter_mut().enumerate() {
        let at = |t: f64| {
            let mut z = y;
            z[i] += t;
            section(z)
        };
        let (m2, m1, p1, p2) = (at(-2.0 * h), at(-h), at(h), at(2.0 * h));
        let dw = [0, 1].map(|c| (m2[c] - m1[c] * 8.0 + p1[c] * 8.0 - p2[c]) / (12.0 * h));
        *o = herm(dw, w) / norm;
    }
    out
}

/// Fubini-Study metric at y, normalized so that CP¹ has area π.
pub fn fubini_study(y: [f64; 2]) -> DMatrix<f64> {
    DMatrix::identity(2, 2) / (1.0 + y[0] * y[0] + y[1] * y[1]).powi(2)
}

pub fn tautological_connection(y: [f64; 2], fd: &FdConfig) -> TautologicalData {
    let h = fd.rel_step;
    let gamma = taut_gamma(y, h);
    let partial = |i: usize, comp: usize| -> Complex<f64> {
        let at = |t: f64| {
            let mut z = y;
            z[i] += t;
            taut_gamma(z, h)[comp]
        };
        let five = |h: f64| (at(-2.0 * h) - at(-h) * 8.0 + at(h) * 8.0 - at(2.0 * h)) / (12.0 * h);
        if fd.richardson { (five(0.5 * h) * 16.0 - five(h)) / 15.0 } else { five(h) }
    };
    let d_gamma = partial(0, 1) - partial(1, 0);
    let omega = Complex::new(0.0, 1.0) * d_gamma;
    let g = fubini_study(y);
    let j = crate::tensor::standard_j(2);
    let omega_form = j.transpose() * g;
    TautologicalData {
        gamma: [(gamma[0].re, gamma[0].im), (gamma[1].re, gamma[1].im)],
        omega: (omega.re, omega.im),
        omega_fs: omega_form[(0, 1)],
    }
}
