//! Finite-difference differential geometry on coordinate charts.
//!
//! A chart supplies the metric g and the potential φ pointwise; every derivative is
//! taken numerically with five-point central stencils and one Richardson level.
//! Curvature follows R(u,v)w = ∇_v∇_u w − ∇_u∇_v w + ∇_[u,v] w, for which the round
//! sphere has positive Ricci curvature under the contraction Σ_j g(R(w,e_j)w′, e_j).

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::Profile;

/// Metric and potential at one point.
#[derive(Debug, Clone)]
pub struct Fields {
    pub g: DMatrix<f64>,
    pub phi: f64,
}

pub type FieldFn = Arc<dyn Fn(&[f64]) -> Result<Fields> + Send + Sync>;
pub type DomainFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
pub type ScaleFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type Sampler = Arc<dyn Fn(&mut ChaCha8Rng) -> Vec<f64> + Send + Sync>;

#[derive(Debug, Clone, Default)]
pub struct ChartMeta {
    pub model: String,
    pub m: usize,
    pub a: Option<f64>,
    pub epsilon: i32,
    pub c: Option<f64>,
    pub kappa: Option<f64>,
    pub profile: Option<Profile>,
}

#[derive(Clone)]
pub struct ChartMetric {
    pub n: usize,
    pub j: DMatrix<f64>,
    pub fields: FieldFn,
    pub domain: DomainFn,
    /// Characteristic coordinate length; the default FD step is a fraction of it.
    pub scale: f64,
    pub local_scale: Option<ScaleFn>,
    pub sampler: Option<Sampler>,
    pub meta: ChartMeta,
}

impl fmt::Debug for ChartMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartMetric").field("n", &self.n).field("scale", &self.scale).field("meta", &self.meta).finish()
    }
}

/// The standard complex structure on R^{2m} with coordinates (x₁, y₁, x₂, y₂, …).
pub fn standard_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(n, n);
    for k in 0..n / 2 {
        j[(2 * k + 1, 2 * k)] = 1.0;
        j[(2 * k, 2 * k + 1)] = -1.0;
    }
    j
}

impl ChartMetric {
    pub fn new(n: usize, fields: FieldFn, domain: DomainFn, scale: f64, meta: ChartMeta) -> Self {
        ChartMetric { n, j: standard_j(n), fields, domain, scale, local_scale: None, sampler: None, meta }
    }

    pub fn with_sampler(mut self, sampler: Sampler) -> Self {
        self.sampler = Some(sampler);
        self
    }

    pub fn with_local_scale(mut self, f: ScaleFn) -> Self {
        self.local_scale = Some(f);
        self
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.n && (self.domain)(x)
    }

    pub fn eval(&self, x: &[f64]) -> Result<Fields> {
        if !self.contains(x) {
            return Err(Error::StencilOutOfDomain(x.to_vec()));
        }
        (self.fields)(x)
    }

    pub fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.eval(x)?.g)
    }

    pub fn phi(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval(x)?.phi)
    }

    pub fn step(&self, x: &[f64], fd: &FdConfig) -> f64 {
        let s = self.local_scale.as_ref().map(|f| f(x)).unwrap_or(self.scale);
        fd.rel_step * s
    }

    /// Deterministic sample points from the chart's sampling region.
    pub fn sample_points(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let sampler = self.sampler.as_ref().ok_or(Error::MissingMeta("sampling region"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..count).map(|_| sampler(&mut rng)).collect())
    }

    /// Same chart with metric λ·g.
    pub fn scaled(&self, lambda: f64) -> ChartMetric {
        let inner = self.fields.clone();
        let mut c = self.clone();
        c.fields = Arc::new(move |x| {
            let f = inner(x)?;
            Ok(Fields { g: f.g * lambda, phi: f.phi })
        });
        c
    }

    /// Same chart with metric g/φ².
    pub fn conformal_by_phi(&self) -> ChartMetric {
        let inner = self.fields.clone();
        let mut c = self.clone();
        c.fields = Arc::new(move |x| {
            let f = inner(x)?;
            Ok(Fields { g: f.g / (f.phi * f.phi), phi: f.phi })
        });
        c.meta.model = format!("{}/phi^2", self.meta.model);
        c
    }

    /// Same chart with g replaced by g + bump(x).
    pub fn with_metric_bump(&self, bump: Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>) -> ChartMetric {
        let inner = self.fields.clone();
        let mut c = self.clone();
        c.fields = Arc::new(move |x| {
            let f = inner(x)?;
            Ok(Fields { g: f.g + bump(x), phi: f.phi })
        });
        c
    }

    /// Same chart with φ replaced by f(x, φ).
    pub fn with_potential(&self, f: Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>) -> ChartMetric {
        let inner = self.fields.clone();
        let mut c = self.clone();
        c.fields = Arc::new(move |x| {
            let v = inner(x)?;
            Ok(Fields { phi: f(x, v.phi), g: v.g })
        });
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FdConfig {
    /// Step as a fraction of the local coordinate scale.
    pub rel_step: f64,
    pub richardson: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig { rel_step: 1e-3, richardson: true }
    }
}

impl FdConfig {
    pub fn without_richardson(self) -> Self {
        FdConfig { richardson: false, ..self }
    }
}

/// ∂_i f at x with the five-point stencil, optionally Richardson-extrapolated.
fn partial<F>(f: &F, x: &[f64], i: usize, h: f64, richardson: bool, domain: &DomainFn) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let at = |off: f64| -> Result<Vec<f64>> {
        let mut y = x.to_vec();
        y[i] += off;
        if !domain(&y) {
            return Err(Error::StencilOutOfDomain(x.to_vec()));
        }
        f(&y)
    };
    let five = |m2: &[f64], m1: &[f64], p1: &[f64], p2: &[f64], h: f64| -> Vec<f64> {
        (0..m2.len()).map(|k| (m2[k] - 8.0 * m1[k] + 8.0 * p1[k] - p2[k]) / (12.0 * h)).collect()
    };
    let (m2, m1, p1, p2) = (at(-2.0 * h)?, at(-h)?, at(h)?, at(2.0 * h)?);
    let coarse = five(&m2, &m1, &p1, &p2, h);
    if !richardson {
        return Ok(coarse);
    }
    let (mh, ph) = (at(-0.5 * h)?, at(0.5 * h)?);
    let fine = five(&m1, &mh, &ph, &p1, 0.5 * h);
    Ok(fine.iter().zip(&coarse).map(|(f, c)| (16.0 * f - c) / 15.0).collect())
}

fn gradient<F>(f: &F, x: &[f64], h: f64, richardson: bool, domain: &DomainFn) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    (0..x.len()).map(|i| partial(f, x, i, h, richardson, domain)).collect()
}

fn invert(g: &DMatrix<f64>, x: &[f64]) -> Result<DMatrix<f64>> {
    let chol = g.clone().cholesky().ok_or_else(|| Error::SingularMetric(x.to_vec()))?;
    Ok(chol.inverse())
}

fn flatten(f: &Fields) -> Vec<f64> {
    let mut v: Vec<f64> = f.g.iter().cloned().collect();
    v.push(f.phi);
    v
}

#[inline]
fn gi(n: usize, k: usize, i: usize, j: usize) -> usize {
    (k * n + i) * n + j
}

/// First-order jet of the chart fields at a point.
#[derive(Debug, Clone)]
struct Jet1 {
    g: DMatrix<f64>,
    ginv: DMatrix<f64>,
    phi: f64,
    dg: Vec<DMatrix<f64>>,
    dphi: DVector<f64>,
    gamma: Vec<f64>,
}

impl Jet1 {
    fn grad(&self) -> DVector<f64> {
        &self.ginv * &self.dphi
    }

    /// Γ, dφ, ∇φ and Q packed as one vector, the input of the second FD level.
    fn pack(&self) -> Vec<f64> {
        let grad = self.grad();
        let q = self.dphi.dot(&grad);
        let mut v = self.gamma.clone();
        v.extend(self.dphi.iter());
        v.extend(grad.iter());
        v.push(q);
        v
    }
}

fn jet1(chart: &ChartMetric, x: &[f64], h: f64, richardson: bool) -> Result<Jet1> {
    let n = chart.n;
    let f0 = chart.eval(x)?;
    let f = |y: &[f64]| chart.eval(y).map(|v| flatten(&v));
    let d = gradient(&f, x, h, richardson, &chart.domain)?;
    let ginv = invert(&f0.g, x)?;
    let dg: Vec<DMatrix<f64>> = d.iter().map(|v| DMatrix::from_column_slice(n, n, &v[..n * n])).collect();
    let dphi = DVector::from_iterator(n, d.iter().map(|v| v[n * n]));
    let mut gamma = vec![0.0; n * n * n];
    // Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
    for i in 0..n {
        for j in i..n {
            for l in 0..n {
                let t = 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                for k in 0..n {
                    gamma[gi(n, k, i, j)] += ginv[(k, l)] * t;
                }
            }
            for k in 0..n {
                gamma[gi(n, k, j, i)] = gamma[gi(n, k, i, j)];
            }
        }
    }
    Ok(Jet1 { g: f0.g, ginv, phi: f0.phi, dg, dphi, gamma })
}

/// Christoffel symbols Γ^k_ij, flattened with index (k·n + i)·n + j.
pub fn connection_coefficients(chart: &ChartMetric, x: &[f64], fd: &FdConfig) -> Result<Vec<f64>> {
    Ok(jet1(chart, x, chart.step(x, fd), fd.richardson)?.gamma)
}

/// Everything the verification suites need at one point.
#[derive(Debug, Clone)]
pub struct PointTensors {
    pub n: usize,
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    pub phi: f64,
    pub dg: Vec<DMatrix<f64>>,
    pub gamma: Vec<f64>,
    /// R(∂_i,∂_j)∂_k = R[i][j][k][l] ∂_l, flattened as ((i·n + j)·n + k)·n + l.
    pub riemann: Vec<f64>,
    /// Ricci contracted over a Gram-Schmidt orthonormal frame.
    pub ricci: DMatrix<f64>,
    /// Ricci by the coordinate contraction Σ_p R[a][p][b][p].
    pub ricci_coord: DMatrix<f64>,
    pub scalar: f64,
    pub dphi: DVector<f64>,
    pub grad_phi: DVector<f64>,
    /// Column k holds ∂_k ∇φ.
    pub dgrad: DMatrix<f64>,
    pub hess: DMatrix<f64>,
    pub lap: f64,
    pub q: f64,
    /// Finite-difference differential of Q = g(∇φ, ∇φ).
    pub dq: DVector<f64>,
}

impl PointTensors {
    pub fn riemann_at(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        self.riemann[((i * n + j) * n + k) * n + l]
    }

    /// R(u,v)w as a vector.
    pub fn apply_riemann(&self, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut out = DVector::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let c = u[i] * v[j] * w[k];
                    if c == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        out[l] += c * self.riemann_at(i, j, k, l);
                    }
                }
            }
        }
        out
    }
}

/// Orthonormal frame (columns) by Gram-Schmidt on the coordinate basis in index order.
pub fn orthonormal_frame(g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let mut e = DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        let mut v = e.column(j).into_owned();
        for p in 0..j {
            let ep = e.column(p).into_owned();
            let c = (ep.transpose() * g * &v)[(0, 0)];
            v -= ep * c;
        }
        let norm = (v.transpose() * g * &v)[(0, 0)].sqrt();
        e.set_column(j, &(v / norm));
    }
    e
}

/// Full second-order evaluation: connection, curvature and potential derivatives.
pub fn point_tensors(chart: &ChartMetric, x: &[f64], fd: &FdConfig) -> Result<PointTensors> {
    let n = chart.n;
    let h = chart.step(x, fd);
    let j0 = jet1(chart, x, h, fd.richardson)?;
    let packed = |y: &[f64]| jet1(chart, y, h, fd.richardson).map(|j| j.pack());
    let d = gradient(&packed, x, h, fd.richardson, &chart.domain)?;
    let n3 = n * n * n;
    let dgamma = |m: usize, k: usize, i: usize, j: usize| d[m][gi(n, k, i, j)];

    let mut riemann = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = dgamma(j, l, i, k) - dgamma(i, l, j, k);
                    for m in 0..n {
                        v += j0.gamma[gi(n, m, i, k)] * j0.gamma[gi(n, l, j, m)]
                            - j0.gamma[gi(n, m, j, k)] * j0.gamma[gi(n, l, i, m)];
                    }
                    riemann[((i * n + j) * n + k) * n + l] = v;
                }
            }
        }
    }
    let frame = orthonormal_frame(&j0.g);
    let w = &frame * frame.transpose() * &j0.g;
    let mut ricci = DMatrix::zeros(n, n);
    let mut ricci_coord = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut s = 0.0;
            let mut sc = 0.0;
            for p in 0..n {
                sc += riemann[((a * n + p) * n + b) * n + p];
                for l in 0..n {
                    s += riemann[((a * n + p) * n + b) * n + l] * w[(p, l)];
                }
            }
            ricci[(a, b)] = s;
            ricci_coord[(a, b)] = sc;
        }
    }
    let scalar = (&j0.ginv * &ricci).trace();

    let grad_phi = j0.grad();
    let mut hess = DMatrix::zeros(n, n);
    let mut dgrad = DMatrix::zeros(n, n);
    let mut dq = DVector::zeros(n);
    for m in 0..n {
        for i in 0..n {
            hess[(i, m)] = d[m][n3 + i];
            dgrad[(i, m)] = d[m][n3 + n + i];
        }
        dq[m] = d[m][n3 + 2 * n];
    }
    let mut hess = (&hess + hess.transpose()) * 0.5;
    for i in 0..n {
        for j in 0..n {
            let mut c = 0.0;
            for k in 0..n {
                c += j0.gamma[gi(n, k, i, j)] * j0.dphi[k];
            }
            hess[(i, j)] -= c;
        }
    }
    let lap = (&j0.ginv * &hess).trace();
    let q = j0.dphi.dot(&grad_phi);
    Ok(PointTensors {
        n,
        g: j0.g,
        ginv: j0.ginv,
        phi: j0.phi,
        dg: j0.dg,
        gamma: j0.gamma,
        riemann,
        ricci,
        ricci_coord,
        scalar,
        dphi: j0.dphi,
        grad_phi,
        dgrad,
        hess,
        lap,
        q,
        dq,
    })
}

#[derive(Debug, Clone)]
pub struct Curvature {
    pub riemann: Vec<f64>,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
}

pub fn curvature(chart: &ChartMetric, x: &[f64], fd: &FdConfig) -> Result<Curvature> {
    let t = point_tensors(chart, x, fd)?;
    Ok(Curvature { riemann: t.riemann, ricci: t.ricci, scalar: t.scalar })
}

#[derive(Debug, Clone)]
pub struct PotentialDerivatives {
    pub grad_phi: DVector<f64>,
    pub hess: DMatrix<f64>,
    pub lap: f64,
    pub q: f64,
}

pub fn potential_derivatives(chart: &ChartMetric, x: &[f64], fd: &FdConfig) -> Result<PotentialDerivatives> {
    let t = point_tensors(chart, x, fd)?;
    Ok(PotentialDerivatives { grad_phi: t.grad_phi, hess: t.hess, lap: t.lap, q: t.q })
}

/// Laplacian Y = Δφ at x.
pub fn laplacian(chart: &ChartMetric, x: &[f64], fd: &FdConfig) -> Result<f64> {
    Ok(point_tensors_light(chart, x, fd)?.1)
}

/// Hessian and Laplacian without the curvature contraction.
fn point_tensors_light(chart: &ChartMetric, x: &[f64], fd: &FdConfig) -> Result<(DMatrix<f64>, f64)> {
    let n = chart.n;
    let h = chart.step(x, fd);
    let j0 = jet1(chart, x, h, fd.richardson)?;
    let dphi_at = |y: &[f64]| -> Result<Vec<f64>> {
        let f = |z: &[f64]| chart.eval(z).map(|v| vec![v.phi]);
        Ok(gradient(&f, y, h, fd.richardson, &chart.domain)?.into_iter().map(|v| v[0]).collect())
    };
    let d = gradient(&dphi_at, x, h, fd.richardson, &chart.domain)?;
    let mut hess = DMatrix::from_fn(n, n, |i, m| d[m][i]);
    hess = (&hess + hess.transpose()) * 0.5;
    for i in 0..n {
        for j in 0..n {
            let mut c = 0.0;
            for k in 0..n {
                c += j0.gamma[gi(n, k, i, j)] * j0.dphi[k];
            }
            hess[(i, j)] -= c;
        }
    }
    let lap = (&j0.ginv * &hess).trace();
    Ok((hess, lap))
}

/// Step multipliers for differentiating the Laplacian. Rounding in a third derivative
/// grows like h⁻³, so both levels use wider stencils than the default.
pub const INNER_STEP_FACTOR: f64 = 5.0;
pub const OUTER_STEP_FACTOR: f64 = 5.0;

/// Finite-difference differential of the Laplacian of φ.
pub fn laplacian_differential(chart: &ChartMetric, x: &[f64], fd: &FdConfig) -> Result<DVector<f64>> {
    let h = OUTER_STEP_FACTOR * chart.step(x, fd);
    let inner = FdConfig { rel_step: INNER_STEP_FACTOR * fd.rel_step, ..*fd };
    let f = |y: &[f64]| laplacian(chart, y, &inner).map(|v| vec![v]);
    let d = gradient(&f, x, h, fd.richardson, &chart.domain)?;
    Ok(DVector::from_iterator(chart.n, d.into_iter().map(|v| v[0])))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KahlerResiduals {
    pub hermitian_res: f64,
    pub d_omega_res: f64,
    pub nabla_j_res: f64,
}

impl KahlerResiduals {
    pub fn max(&self) -> f64 {
        self.hermitian_res.max(self.d_omega_res).max(self.nabla_j_res)
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a: f64, v| a.max(v.abs()))
}

fn kahler_from(n: usize, j: &DMatrix<f64>, g: &DMatrix<f64>, dg: &[DMatrix<f64>], gamma: &[f64]) -> KahlerResiduals {
    let hermitian_res = max_abs(&(j.transpose() * g * j - g));
    // ω_ab = g(J∂_a, ∂_b) = (Jᵀg)_ab
    let domega: Vec<DMatrix<f64>> = dg
        .iter()
        .map(|d| {
            let w = j.transpose() * d;
            0.5 * (&w - w.transpose())
        })
        .collect();
    let mut d_omega_res: f64 = 0.0;
    for i in 0..n {
        for k in i + 1..n {
            for l in k + 1..n {
                let v = domega[i][(k, l)] + domega[k][(l, i)] + domega[l][(i, k)];
                d_omega_res = d_omega_res.max(v.abs());
            }
        }
    }
    // (∇_k J)^i_j = Γ^i_kl J^l_j − Γ^l_kj J^i_l
    let mut nabla_j_res: f64 = 0.0;
    for k in 0..n {
        let gk = DMatrix::from_fn(n, n, |i, l| gamma[gi(n, i, k, l)]);
        let c = &gk * j - j * &gk;
        nabla_j_res = nabla_j_res.max(max_abs(&c));
    }
    KahlerResiduals { hermitian_res, d_omega_res, nabla_j_res }
}

pub fn kahler_residuals(chart: &ChartMetric, x: &[f64], fd: &FdConfig) -> Result<KahlerResiduals> {
    let j1 = jet1(chart, x, chart.step(x, fd), fd.richardson)?;
    Ok(kahler_from(chart.n, &chart.j, &j1.g, &j1.dg, &j1.gamma))
}

pub fn kahler_from_tensors(chart: &ChartMetric, t: &PointTensors) -> KahlerResiduals {
    kahler_from(chart.n, &chart.j, &t.g, &t.dg, &t.gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KillingResiduals {
    pub sym_nabla_u_res: f64,
    pub hermitian_hess_res: f64,
}

impl KillingResiduals {
    pub fn max(&self) -> f64 {
        self.sym_nabla_u_res.max(self.hermitian_hess_res)
    }
}

pub fn killing_from_tensors(chart: &ChartMetric, t: &PointTensors) -> KillingResiduals {
    let n = chart.n;
    let j = &chart.j;
    let u = j * &t.grad_phi;
    // (∇_k u)^i = J^i_j ∂_k(∇φ)^j + Γ^i_kl u^l, stored in column k
    let mut nu = j * &t.dgrad;
    for k in 0..n {
        for i in 0..n {
            let mut c = 0.0;
            for l in 0..n {
                c += t.gamma[gi(n, i, k, l)] * u[l];
            }
            nu[(i, k)] += c;
        }
    }
    let lowered = &t.g * nu;
    let sym_nabla_u_res = max_abs(&(&lowered + lowered.transpose()));
    let hermitian_hess_res = max_abs(&(j.transpose() * &t.hess + &t.hess * j));
    KillingResiduals { sym_nabla_u_res, hermitian_hess_res }
}

pub fn killing_residual(chart: &ChartMetric, x: &[f64], fd: &FdConfig) -> Result<KillingResiduals> {
    let t = point_tensors(chart, x, fd)?;
    Ok(killing_from_tensors(chart, &t))
}

pub const GEODESIC_STEPS: usize = 1024;

#[derive(Debug, Clone)]
pub struct GeodesicPath {
    pub s: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub left_domain: bool,
    /// max | |ẋ|_g − 1 | along the path
    pub drift: f64,
}

pub fn geodesic(chart: &ChartMetric, x0: &[f64], w0: &[f64], s_max: f64, fd: &FdConfig) -> Result<GeodesicPath> {
    geodesic_until(chart, x0, w0, s_max, fd, &|_, _| false)
}

/// Integrates a unit-speed geodesic, stopping early when `stop(x, ẋ)` holds or the
/// stencil leaves the chart.
pub fn geodesic_until(
    chart: &ChartMetric,
    x0: &[f64],
    w0: &[f64],
    s_max: f64,
    fd: &FdConfig,
    stop: &dyn Fn(&[f64], &[f64]) -> bool,
) -> Result<GeodesicPath> {
    let n = chart.n;
    let g0 = chart.metric(x0)?;
    let w = DVector::from_column_slice(w0);
    let norm = (w.transpose() * &g0 * &w)[(0, 0)].sqrt();
    if !(norm > 0.0) {
        return Err(Error::BadParams("initial direction must be nonzero".into()));
    }
    let v0: Vec<f64> = w0.iter().map(|c| c / norm).collect();
    let ds = s_max / GEODESIC_STEPS as f64;
    let accel = |x: &[f64], v: &[f64]| -> Result<Vec<f64>> {
        let gamma = jet1(chart, x, chart.step(x, fd), fd.richardson)?.gamma;
        Ok((0..n)
            .map(|k| {
                let mut a = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        a -= gamma[gi(n, k, i, j)] * v[i] * v[j];
                    }
                }
                a
            })
            .collect())
    };
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + s * q).collect() };
    let mut path = GeodesicPath { s: vec![0.0], x: vec![x0.to_vec()], v: vec![v0.clone()], left_domain: false, drift: 0.0 };
    let (mut x, mut v) = (x0.to_vec(), v0);
    for step in 1..=GEODESIC_STEPS {
        let stage = || -> Result<(Vec<f64>, Vec<f64>)> {
            let a1 = accel(&x, &v)?;
            let (x2, v2) = (axpy(&x, 0.5 * ds, &v), axpy(&v, 0.5 * ds, &a1));
            let a2 = accel(&x2, &v2)?;
            let (x3, v3) = (axpy(&x, 0.5 * ds, &v2), axpy(&v, 0.5 * ds, &a2));
            let a3 = accel(&x3, &v3)?;
            let (x4, v4) = (axpy(&x, ds, &v3), axpy(&v, ds, &a3));
            let a4 = accel(&x4, &v4)?;
            let xn = (0..n).map(|i| x[i] + ds / 6.0 * (v[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i])).collect();
            let vn = (0..n).map(|i| v[i] + ds / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i])).collect();
            Ok((xn, vn))
        };
        match stage() {
            Ok((xn, vn)) => {
                x = xn;
                v = vn;
            }
            Err(Error::StencilOutOfDomain(_)) => {
                path.left_domain = true;
                break;
            }
            Err(e) => return Err(e),
        }
        let g = match chart.metric(&x) {
            Ok(g) => g,
            Err(Error::StencilOutOfDomain(_)) => {
                path.left_domain = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let vv = DVector::from_column_slice(&v);
        let speed = (vv.transpose() * &g * &vv)[(0, 0)].sqrt();
        path.drift = path.drift.max((speed - 1.0).abs());
        path.s.push(step as f64 * ds);
        path.x.push(x.clone());
        path.v.push(v.clone());
        if stop(&x, &v) {
            break;
        }
    }
    Ok(path)
}
