//! Identity suites run against built charts: the H/V eigenstructure of the Hessian and
//! Ricci tensor, the scalar identities tying Q, Y, σ, τ, μ together, conformal-Einstein
//! and soliton residuals, normal geodesics, duality and classification.
//!
//! Residuals of tensors are measured as components in a g-orthonormal frame, so they do
//! not depend on how the chart coordinates are scaled.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec;
use crate::models::{BallExtension, Model, SphereModel};
use crate::numeric::quad::adaptive;
use crate::profiles::{classify_type, Tag, TypeTag};
use crate::reparam::{boundary_limits, compute_l, BoundaryLimits};
use crate::tensor::{
    geodesic, kahler_from_tensors, killing_from_tensors, laplacian_differential, point_tensors, ChartMeta,
    ChartMetric, FdConfig, GeodesicPath, PointTensors,
};

pub const IDENTITY_TOL: f64 = 1e-5;
pub const CURVATURE_TOL: f64 = 1e-4;
/// Points with |∇φ|_g at or below this are treated as critical.
pub const CRITICAL_GRAD: f64 = 1e-6;

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a: f64, v| a.max(v.abs()))
}

fn gdot(g: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    (u.transpose() * g * v)[(0, 0)]
}

/// Norm of a covector w under g: √(wᵀ g⁻¹ w).
fn conorm(ginv: &DMatrix<f64>, w: &DVector<f64>) -> f64 {
    gdot(ginv, w, w).max(0.0).sqrt()
}

/// g-orthonormal frame whose first two columns span V = span{∇φ, J∇φ}; the rest span H.
pub fn adapted_frame(g: &DMatrix<f64>, j: &DMatrix<f64>, grad: &DVector<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    let candidates = [grad.clone(), j * grad].into_iter().chain((0..n).map(|k| {
        let mut e = DVector::zeros(n);
        e[k] = 1.0;
        e
    }));
    for mut v in candidates {
        if cols.len() == n {
            break;
        }
        let scale = gdot(g, &v, &v).sqrt();
        // two passes of Gram-Schmidt keep the frame orthonormal to rounding
        for _ in 0..2 {
            for e in &cols {
                let c = gdot(g, e, &v);
                v -= e * c;
            }
        }
        let norm = gdot(g, &v, &v).sqrt();
        if norm > 1e-6 * scale {
            cols.push(v / norm);
        }
    }
    DMatrix::from_columns(&cols)
}

/// Scalar invariants at one sample point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkrpSample {
    pub x: Vec<f64>,
    pub phi: f64,
    pub q: f64,
    pub sigma: f64,
    pub tau: f64,
    pub lambda: f64,
    pub mu: f64,
    pub y: f64,
}

/// Max-norm residuals of the block structure in an adapted orthonormal frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct BlockResiduals {
    /// Hessφ − σg on H
    pub hess_h: f64,
    /// Ric − λg on H
    pub ric_h: f64,
    /// Hessφ(H, V)
    pub hess_mixed: f64,
    /// Ric(H, V)
    pub ric_mixed: f64,
    /// Hessφ − τg on V
    pub hess_v: f64,
    /// Ric − μg on V
    pub ric_v: f64,
}

impl BlockResiduals {
    pub fn max(&self) -> f64 {
        [self.hess_h, self.ric_h, self.hess_mixed, self.ric_mixed, self.hess_v, self.ric_v]
            .into_iter()
            .fold(0.0, f64::max)
    }

    fn merge(&self, o: &BlockResiduals) -> BlockResiduals {
        BlockResiduals {
            hess_h: self.hess_h.max(o.hess_h),
            ric_h: self.ric_h.max(o.ric_h),
            hess_mixed: self.hess_mixed.max(o.hess_mixed),
            ric_mixed: self.ric_mixed.max(o.ric_mixed),
            hess_v: self.hess_v.max(o.hess_v),
            ric_v: self.ric_v.max(o.ric_v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkrpPoint {
    pub sample: SkrpSample,
    pub residuals: BlockResiduals,
    /// Mean of the diagonal Hessian entries on H, an estimate of σ independent of the trace.
    pub sigma_h: f64,
}

/// Eigenstructure analysis at one point from precomputed tensors.
pub fn skrp_point(chart: &ChartMetric, x: &[f64], t: &PointTensors) -> Result<SkrpPoint> {
    let n = t.n;
    let m = n / 2;
    if t.q.max(0.0).sqrt() <= CRITICAL_GRAD {
        return Err(Error::CriticalPoint(x.to_vec()));
    }
    let e = adapted_frame(&t.g, &chart.j, &t.grad_phi);
    let hf = e.transpose() * &t.hess * &e;
    let rf = e.transpose() * &t.ricci * &e;
    let tau = hf[(0, 0)];
    let mu = rf[(0, 0)];
    let y = t.lap;
    let (sigma, lambda) = if m >= 2 {
        let k = 2.0 * (m as f64 - 1.0);
        ((y - 2.0 * tau) / k, (t.scalar - 2.0 * mu) / k)
    } else {
        (0.0, 0.0)
    };
    let mut r = BlockResiduals::default();
    for a in 0..n {
        for b in 0..n {
            let (ha, hb) = (a >= 2, b >= 2);
            let delta = if a == b { 1.0 } else { 0.0 };
            let (hv, rv) = (hf[(a, b)], rf[(a, b)]);
            match (ha, hb) {
                (true, true) => {
                    r.hess_h = r.hess_h.max((hv - sigma * delta).abs());
                    r.ric_h = r.ric_h.max((rv - lambda * delta).abs());
                }
                (false, false) => {
                    r.hess_v = r.hess_v.max((hv - tau * delta).abs());
                    r.ric_v = r.ric_v.max((rv - mu * delta).abs());
                }
                _ => {
                    r.hess_mixed = r.hess_mixed.max(hv.abs());
                    r.ric_mixed = r.ric_mixed.max(rv.abs());
                }
            }
        }
    }
    let sigma_h = if n > 2 { (2..n).map(|a| hf[(a, a)]).sum::<f64>() / (n - 2) as f64 } else { 0.0 };
    Ok(SkrpPoint {
        sample: SkrpSample { x: x.to_vec(), phi: t.phi, q: t.q, sigma, tau, lambda, mu, y },
        residuals: r,
        sigma_h,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkrpReport {
    pub points: Vec<SkrpPoint>,
    pub max: BlockResiduals,
}

pub fn skrp_report(chart: &ChartMetric, points: &[Vec<f64>], fd: &FdConfig) -> Result<SkrpReport> {
    let pts: Vec<SkrpPoint> = exec::map(points, |x| {
        let t = point_tensors(chart, x, fd)?;
        skrp_point(chart, x, &t)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let max = pts.iter().fold(BlockResiduals::default(), |acc, p| acc.merge(&p.residuals));
    Ok(SkrpReport { points: pts, max })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct IdentityOptions {
    /// Added to τ before evaluating identity (ii); nonzero only for negative controls.
    pub tau_offset: f64,
    /// Fail with MissingC instead of skipping identity (iii) when ε = 0.
    pub require_c: bool,
}

/// Maxima over points; `None` marks an identity that does not apply to the chart.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct IdentityResiduals {
    /// |dQ − 2τ dφ|_g
    pub dq: f64,
    /// |Y − 2τ − 2(m−1)σ| with σ from the H block
    pub trace: f64,
    /// |Q − 2(φ−c)σ|
    pub sigma_c: Option<f64>,
    /// |dY + 2μ dφ|_g
    pub dy: f64,
    /// |2τ − Q′(φ)|
    pub profile: Option<f64>,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        [Some(self.dq), Some(self.trace), self.sigma_c, Some(self.dy), self.profile]
            .into_iter()
            .flatten()
            .fold(0.0, f64::max)
    }

    fn merge(&self, o: &IdentityResiduals) -> IdentityResiduals {
        let opt = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, None) => x,
            (None, y) => y,
        };
        IdentityResiduals {
            dq: self.dq.max(o.dq),
            trace: self.trace.max(o.trace),
            sigma_c: opt(self.sigma_c, o.sigma_c),
            dy: self.dy.max(o.dy),
            profile: opt(self.profile, o.profile),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub points: Vec<SkrpSample>,
    pub per_point: Vec<IdentityResiduals>,
    pub max: IdentityResiduals,
}

pub fn identity_report(chart: &ChartMetric, points: &[Vec<f64>], fd: &FdConfig) -> Result<IdentityReport> {
    identity_report_with(chart, points, fd, &IdentityOptions::default())
}

pub fn identity_report_with(
    chart: &ChartMetric,
    points: &[Vec<f64>],
    fd: &FdConfig,
    opts: &IdentityOptions,
) -> Result<IdentityReport> {
    let meta = &chart.meta;
    let c = match (meta.epsilon, meta.c) {
        (0, _) if opts.require_c => return Err(Error::MissingC),
        (0, _) => None,
        (_, Some(c)) => Some(c),
        (_, None) => return Err(Error::MissingMeta("c")),
    };
    let m = chart.n / 2;
    let rows: Vec<(SkrpSample, IdentityResiduals)> = exec::map(points, |x| {
        let t = point_tensors(chart, x, fd)?;
        let sp = skrp_point(chart, x, &t)?;
        let s = &sp.sample;
        let tau = s.tau + opts.tau_offset;
        let dq = conorm(&t.ginv, &(&t.dq - &t.dphi * (2.0 * tau)));
        let trace = (s.y - 2.0 * tau - 2.0 * (m as f64 - 1.0) * sp.sigma_h).abs();
        let sigma_c = c.map(|c| (s.q - 2.0 * (s.phi - c) * sp.sigma_h).abs());
        let dy_vec = laplacian_differential(chart, x, fd)?;
        let dy = conorm(&t.ginv, &(dy_vec + &t.dphi * (2.0 * s.mu)));
        let profile = meta.profile.as_ref().map(|p| (2.0 * tau - p.dq(s.phi)).abs());
        Ok((s.clone(), IdentityResiduals { dq, trace, sigma_c, dy, profile }))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let mut max = IdentityResiduals { sigma_c: c.map(|_| 0.0), profile: meta.profile.as_ref().map(|_| 0.0), ..Default::default() };
    for (_, r) in &rows {
        max = max.merge(r);
    }
    let (points, per_point) = rows.into_iter().unzip();
    Ok(IdentityReport { points, per_point, max })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalEinsteinReport {
    pub einstein_res: f64,
    pub lambda_spread: f64,
    pub wedge_res: f64,
    /// λ̃ at each point.
    pub lambdas: Vec<f64>,
}

/// Checks that g/φ² is Einstein and that dφ ∧ dY vanishes.
pub fn conformal_einstein_report(chart: &ChartMetric, points: &[Vec<f64>], fd: &FdConfig) -> Result<ConformalEinsteinReport> {
    let phis: Vec<f64> = points.iter().map(|x| chart.phi(x)).collect::<Result<_>>()?;
    let pmax = phis.iter().fold(0.0, |a: f64, p| a.max(p.abs()));
    if let Some(i) = phis.iter().position(|p| p.abs() <= 0.1 * pmax) {
        return Err(Error::PhiNearZero(points[i].clone()));
    }
    let conf = chart.conformal_by_phi();
    let n = chart.n;
    let rows: Vec<(f64, f64, f64)> = exec::map(points, |x| {
        let t = point_tensors(&conf, x, fd)?;
        let lam = (&t.ginv * &t.ricci).trace() / n as f64;
        let e = crate::tensor::orthonormal_frame(&t.g);
        let res = max_abs(&(e.transpose() * (&t.ricci - &t.g * lam) * &e));
        let dphi = point_tensors_dphi(chart, x, fd)?;
        let dy = laplacian_differential(chart, x, fd)?;
        let mut wedge: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                wedge = wedge.max((dphi[i] * dy[j] - dphi[j] * dy[i]).abs());
            }
        }
        Ok((res, lam, wedge))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let einstein_res = rows.iter().fold(0.0, |a: f64, r| a.max(r.0));
    let wedge_res = rows.iter().fold(0.0, |a: f64, r| a.max(r.2));
    let lambdas: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let lo = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lambda_spread = if lambdas.is_empty() { 0.0 } else { hi - lo };
    Ok(ConformalEinsteinReport { einstein_res, lambda_spread, wedge_res, lambdas })
}

fn point_tensors_dphi(chart: &ChartMetric, x: &[f64], fd: &FdConfig) -> Result<DVector<f64>> {
    let h = chart.step(x, fd);
    let mut d = DVector::zeros(chart.n);
    for i in 0..chart.n {
        let at = |off: f64| -> Result<f64> {
            let mut y = x.to_vec();
            y[i] += off;
            chart.phi(&y)
        };
        let five = |h: f64| -> Result<f64> { Ok((at(-2.0 * h)? - 8.0 * at(-h)? + 8.0 * at(h)? - at(2.0 * h)?) / (12.0 * h)) };
        d[i] = if fd.richardson { (16.0 * five(0.5 * h)? - five(h)?) / 15.0 } else { five(h)? };
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolitonReport {
    pub residual: f64,
    pub per_point: Vec<f64>,
}

/// Max over points of the frame components of Hessφ + p·Ric − s0·g.
pub fn soliton_report(chart: &ChartMetric, p: f64, s0: f64, points: &[Vec<f64>], fd: &FdConfig) -> Result<SolitonReport> {
    let per_point: Vec<f64> = exec::map(points, |x| {
        let t = point_tensors(chart, x, fd)?;
        if t.q.max(0.0).sqrt() <= CRITICAL_GRAD {
            return Err(Error::CriticalPoint(x.to_vec()));
        }
        let e = crate::tensor::orthonormal_frame(&t.g);
        Ok(max_abs(&(e.transpose() * (&t.hess + &t.ricci * p - &t.g * s0) * &e)))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let residual = per_point.iter().cloned().fold(0.0, f64::max);
    Ok(SolitonReport { residual, per_point })
}

/// Gaussian curvature scalar/2 of a real surface chart against an expected constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub expected: f64,
    pub max_rel_err: f64,
    pub values: Vec<f64>,
}

pub fn gaussian_curvature_report(chart: &ChartMetric, points: &[Vec<f64>], expected: f64, fd: &FdConfig) -> Result<CurvatureReport> {
    if chart.n != 2 {
        return Err(Error::BadParams("Gaussian curvature needs a surface chart".into()));
    }
    let values: Vec<f64> = exec::map(points, |x| point_tensors(chart, x, fd).map(|t| 0.5 * t.scalar))
        .into_iter()
        .collect::<Result<_>>()?;
    let max_rel_err = values.iter().fold(0.0, |a: f64, k| a.max((k / expected - 1.0).abs()));
    Ok(CurvatureReport { expected, max_rel_err, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureReport {
    pub kahler: f64,
    pub killing: f64,
}

/// Kähler and Killing-potential residuals, maximized over points.
pub fn structure_report(chart: &ChartMetric, points: &[Vec<f64>], fd: &FdConfig) -> Result<StructureReport> {
    let rows: Vec<(f64, f64)> = exec::map(points, |x| {
        let t = point_tensors(chart, x, fd)?;
        Ok((kahler_from_tensors(chart, &t).max(), killing_from_tensors(chart, &t).max()))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(StructureReport {
        kahler: rows.iter().fold(0.0, |a: f64, r| a.max(r.0)),
        killing: rows.iter().fold(0.0, |a: f64, r| a.max(r.1)),
    })
}

/// Chart for which normal geodesics are traced.
#[derive(Debug, Clone, Copy)]
pub enum GeodesicTarget<'a> {
    /// Fan from the pole at the chart origin.
    Sphere(&'a SphereModel),
    /// Fan of radial geodesics from the inner edge of a shell.
    Shell(&'a Model),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalGeodesicReport {
    pub fan_size: usize,
    pub dphids_res: f64,
    pub gauss_res: f64,
    /// Present only when the chart reaches both roots of Q.
    pub distance_vs_l: Option<f64>,
    pub max_drift: f64,
}

pub const FAN_SIZE: usize = 16;
/// Samples skipped between the five stencil points of dφ/ds along a path.
const PATH_STRIDE: usize = 8;

fn dphids_residual(chart: &ChartMetric, path: &GeodesicPath, sign: f64) -> Result<f64> {
    let profile = chart.meta.profile.as_ref().ok_or(Error::MissingMeta("profile"))?;
    let k = PATH_STRIDE;
    let ds = path.s[1] - path.s[0];
    let h = k as f64 * ds;
    let phi: Vec<f64> = path.x.iter().map(|x| chart.phi(x)).collect::<Result<_>>()?;
    let mut res: f64 = 0.0;
    let mut i = 2 * k;
    while i + 2 * k < phi.len() {
        let d = (phi[i - 2 * k] - 8.0 * phi[i - k] + 8.0 * phi[i + k] - phi[i + 2 * k]) / (12.0 * h);
        let q = profile.q(phi[i]).max(0.0);
        res = res.max((d - sign * q.sqrt()).abs());
        i += k;
    }
    Ok(res)
}

/// max |g(x_s, x_t)| with x_t from central differences between neighbouring fan members.
fn gauss_residual(chart: &ChartMetric, fan: &[GeodesicPath], dtheta: f64, closed: bool) -> Result<f64> {
    let count = fan.len();
    let len = fan.iter().map(|p| p.x.len()).min().unwrap_or(0);
    let mut res: f64 = 0.0;
    let members: Vec<usize> = if closed { (0..count).collect() } else { (1..count.saturating_sub(1)).collect() };
    for k in members {
        let (prev, next) = ((k + count - 1) % count, (k + 1) % count);
        for i in (0..len).step_by(PATH_STRIDE) {
            let x = &fan[k].x[i];
            let g = chart.metric(x)?;
            let xs = DVector::from_column_slice(&fan[k].v[i]);
            let xt = DVector::from_iterator(x.len(), (0..x.len()).map(|c| (fan[next].x[i][c] - fan[prev].x[i][c]) / (2.0 * dtheta)));
            res = res.max(gdot(&g, &xs, &xt).abs());
        }
    }
    Ok(res)
}

pub fn normal_geodesic_report(target: GeodesicTarget<'_>, fd: &FdConfig) -> Result<NormalGeodesicReport> {
    match target {
        GeodesicTarget::Sphere(s) => {
            let chart = &s.chart;
            let dtheta = 2.0 * PI / FAN_SIZE as f64;
            // the chart edge r = 2 sits at about 0.70·L from the pole
            let s_max = 0.573 * PI / s.k.sqrt();
            let dirs: Vec<f64> = (0..FAN_SIZE).map(|k| k as f64 * dtheta).collect();
            let fan: Vec<GeodesicPath> = exec::map(&dirs, |&th| geodesic(chart, &[0.0, 0.0], &[th.cos(), th.sin()], s_max, fd))
                .into_iter()
                .collect::<Result<_>>()?;
            if let Some(p) = fan.iter().find(|p| p.left_domain) {
                return Err(Error::LeftDomain(*p.s.last().unwrap()));
            }
            let sign = s.a.signum();
            let dphids_res = fan.iter().map(|p| dphids_residual(chart, p, sign)).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
            let gauss_res = gauss_residual(chart, &fan, dtheta, true)?;
            let l = compute_l(s.ball.table.profile())?;
            let d = s.pole_to_pole_length(fd)?;
            Ok(NormalGeodesicReport {
                fan_size: FAN_SIZE,
                dphids_res,
                gauss_res,
                distance_vs_l: Some((d - l).abs()),
                max_drift: fan.iter().fold(0.0, |a: f64, p| a.max(p.drift)),
            })
        }
        GeodesicTarget::Shell(model) => {
            let chart = &model.chart;
            let (r_lo, r_hi) = model.r_range.ok_or(Error::MissingMeta("radial range"))?;
            let profile = chart.meta.profile.as_ref().ok_or(Error::MissingMeta("profile"))?;
            let a = chart.meta.a.ok_or(Error::MissingMeta("a"))?;
            if chart.n < 4 {
                return Err(Error::BadParams("shell fan needs complex dimension >= 2".into()));
            }
            // stay clear of the chart edges by the stencil reach
            let (r0, r1) = (r_lo * 1.02, r_hi / 1.02);
            let (p0, p1) = (chart.phi(&unit_point(chart.n, r0, 0.0))?, chart.phi(&unit_point(chart.n, r1, 0.0))?);
            let (lo, hi) = (p0.min(p1), p0.max(p1));
            let s_max = adaptive(|p: f64| 1.0 / profile.q(p).sqrt(), lo, hi, 1e-12, 1e-14)?;
            // the fan sweeps a quarter circle in the (e1, e3) plane
            let dtheta = 0.5 * PI / (FAN_SIZE - 1) as f64;
            let dirs: Vec<f64> = (0..FAN_SIZE).map(|k| k as f64 * dtheta).collect();
            let fan: Vec<GeodesicPath> = exec::map(&dirs, |&th| {
                let x0 = unit_point(chart.n, r0, th);
                let w: Vec<f64> = x0.iter().map(|c| c / r0).collect();
                geodesic(chart, &x0, &w, s_max, fd)
            })
            .into_iter()
            .collect::<Result<_>>()?;
            if let Some(p) = fan.iter().find(|p| p.left_domain) {
                return Err(Error::LeftDomain(*p.s.last().unwrap()));
            }
            // outward radial motion raises φ exactly when a > 0
            let sign = a.signum();
            let dphids_res = fan.iter().map(|p| dphids_residual(chart, p, sign)).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
            let gauss_res = gauss_residual(chart, &fan, dtheta, false)?;
            Ok(NormalGeodesicReport {
                fan_size: FAN_SIZE,
                dphids_res,
                gauss_res,
                distance_vs_l: None,
                max_drift: fan.iter().fold(0.0, |acc: f64, p| acc.max(p.drift)),
            })
        }
    }
}

fn unit_point(n: usize, r: f64, theta: f64) -> Vec<f64> {
    let mut x = vec![0.0; n];
    x[0] = r * theta.cos();
    x[2] = r * theta.sin();
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityReport {
    /// max |ι*g* − g| / |g| over points, ι(ζ) = 1/ζ
    pub metric_res: f64,
    /// max |φ*∘ι − φ|
    pub phi_res: f64,
}

/// Compares an annulus with the pullback of its dual under ζ ↦ 1/ζ.
pub fn duality_report(model: &Model, dual: &Model, points: &[Vec<f64>]) -> Result<DualityReport> {
    if model.chart.n != 2 || dual.chart.n != 2 {
        return Err(Error::BadParams("duality is checked on annuli in C".into()));
    }
    let rows: Vec<(f64, f64)> = exec::map(points, |x| {
        let f = model.chart.eval(x)?;
        let rr = x[0] * x[0] + x[1] * x[1];
        let y = [x[0] / rr, -x[1] / rr];
        let fd = dual.chart.eval(&y)?;
        // d(1/ζ) = −dζ/ζ² as a real 2×2 matrix
        let (zr, zi) = (x[0] * x[0] - x[1] * x[1], 2.0 * x[0] * x[1]);
        let (wr, wi) = (-zr / (rr * rr), zi / (rr * rr));
        let jac = DMatrix::from_row_slice(2, 2, &[wr, -wi, wi, wr]);
        let pull = jac.transpose() * &fd.g * &jac;
        Ok((max_abs(&(pull - &f.g)) / max_abs(&f.g), (fd.phi - f.phi).abs()))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(DualityReport {
        metric_res: rows.iter().fold(0.0, |a: f64, r| a.max(r.0)),
        phi_res: rows.iter().fold(0.0, |a: f64, r| a.max(r.1)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallReport {
    /// (c1, c2) at r = 0
    pub coeffs_at_zero: (f64, f64),
    pub coeffs_finite: bool,
    /// Smallest eigenvalue of the metric at the origin.
    pub min_eigenvalue: f64,
    pub limits: BoundaryLimits,
}

impl BallReport {
    pub fn pass(&self) -> bool {
        self.coeffs_finite && self.min_eigenvalue > 0.0 && self.limits.pass
    }
}

pub fn ball_extension_report(ball: &BallExtension, probe_radii: &[f64]) -> Result<BallReport> {
    let (c1, c2) = ball.coeffs(0.0)?;
    let mut finite = c1.is_finite() && c2.is_finite();
    for &r in probe_radii {
        let (a, b) = ball.coeffs(r)?;
        finite &= a.is_finite() && b.is_finite();
    }
    // at the origin g = c2·Euclid
    let g0 = ball.fields(&[0.0, 0.0])?.g;
    let min_eigenvalue = g0.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    let limits = boundary_limits(&ball.table, ball.endpoint)?;
    Ok(BallReport { coeffs_at_zero: (c1, c2), coeffs_finite: finite, min_eigenvalue, limits })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub tag: TypeTag,
    pub notes: Vec<String>,
}

pub fn classify_model(meta: &ChartMeta) -> Result<Classification> {
    let interval = match (meta.epsilon, meta.profile.as_ref()) {
        (_, Some(p)) => p.interval,
        (0, None) => (f64::NAN, f64::NAN),
        (_, None) => return Err(Error::MissingMeta("profile interval")),
    };
    if meta.epsilon != 0 && meta.c.is_none() {
        return Err(Error::MissingMeta("c"));
    }
    let c = if meta.epsilon == 0 { None } else { meta.c };
    let tag = classify_type(meta.epsilon, c, interval)?;
    let mut notes = Vec::new();
    match tag.tag {
        Tag::B => notes.push("type B does not occur on compact manifolds".to_string()),
        Tag::C2 => {
            notes.push("type C2 requires 1 in the normalized phi-range".to_string());
            notes.push("compact type C2 examples are expected not to exist; reported only".to_string());
        }
        _ => {}
    }
    Ok(Classification { tag, notes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_product, build_shell, build_sphere, ShellParams};
    use crate::profiles::{find_admissible_interval, make_profile, ProfileSpec};
    use crate::tensor::{ChartMeta, Fields};
    use std::sync::Arc;

    fn euclid_sq(n: usize) -> ChartMetric {
        let fields = Arc::new(move |x: &[f64]| Ok(Fields { g: DMatrix::identity(n, n), phi: x.iter().map(|c| c * c).sum() }));
        let meta = ChartMeta { model: "euclid".into(), m: n / 2, ..Default::default() };
        ChartMetric::new(n, fields, Arc::new(|x: &[f64]| x.iter().all(|c| c.abs() < 10.0)), 10.0, meta)
    }

    #[test]
    fn euclidean_norm_square() {
        let chart = euclid_sq(4);
        let pts = vec![vec![0.3, -0.2, 1.0, 0.5], vec![1.0, 2.0, -1.0, 0.1]];
        let rep = skrp_report(&chart, &pts, &FdConfig::default()).unwrap();
        for p in &rep.points {
            let s = &p.sample;
            assert!((s.sigma - 2.0).abs() < 1e-9 && (s.tau - 2.0).abs() < 1e-9);
            assert!(s.lambda.abs() < 1e-9 && s.mu.abs() < 1e-9);
        }
        assert!(rep.max.max() < 1e-8);
        let sol = soliton_report(&chart, 3.7, 2.0, &pts, &FdConfig::default()).unwrap();
        assert!(sol.residual < 1e-10, "{}", sol.residual);
    }

    #[test]
    fn critical_point_rejected() {
        let chart = euclid_sq(4);
        let err = skrp_report(&chart, &[vec![0.0; 4]], &FdConfig::default()).unwrap_err();
        assert!(matches!(err, Error::CriticalPoint(_)));
    }

    #[test]
    fn adapted_frame_is_orthonormal() {
        let g = DMatrix::from_row_slice(4, 4, &[2.0, 0.1, 0.0, 0.3, 0.1, 2.0, -0.3, 0.0, 0.0, -0.3, 1.5, 0.2, 0.3, 0.0, 0.2, 1.5]);
        let j = crate::tensor::standard_j(4);
        let v = DVector::from_vec(vec![0.4, -1.0, 0.2, 0.7]);
        let e = adapted_frame(&g, &j, &v);
        assert!(max_abs(&(e.transpose() * &g * &e - DMatrix::identity(4, 4))) < 1e-13);
        let e0 = e.column(0).into_owned();
        assert!((&e0 - &v / gdot(&g, &v, &v).sqrt()).norm() < 1e-13);
    }

    #[test]
    fn product_is_type_a_and_skips_sigma_c() {
        let model = build_product(1.0, 1.5).unwrap();
        let cl = classify_model(&model.chart.meta).unwrap();
        assert_eq!(cl.tag.tag, Tag::A);
        let pts = model.chart.sample_points(2, 1).unwrap();
        let rep = identity_report(&model.chart, &pts, &FdConfig::default()).unwrap();
        assert!(rep.max.sigma_c.is_none());
        let err = identity_report_with(&model.chart, &pts, &FdConfig::default(), &IdentityOptions { require_c: true, ..Default::default() });
        assert_eq!(err.unwrap_err(), Error::MissingC);
    }

    #[test]
    fn classification_notes() {
        let profile = make_profile(ProfileSpec::TypeC { m: 2, c: 1.0, a: 2.0, b: 0.5, cc: 0.1 }, (1.5, 3.0)).unwrap();
        let mut meta = ChartMeta { epsilon: 1, c: Some(1.0), profile: Some(profile), ..Default::default() };
        assert_eq!(classify_model(&meta).unwrap().tag.tag, Tag::C1);
        meta.c = Some(2.0);
        let cl = classify_model(&meta).unwrap();
        assert_eq!(cl.tag.tag, Tag::C2);
        assert!(!cl.notes.is_empty());
        meta.profile = None;
        assert!(matches!(classify_model(&meta), Err(Error::MissingMeta(_))));
    }

    #[test]
    fn shell_blocks_small() {
        let profile = find_admissible_interval(&ProfileSpec::Quadratic { k: 1.0, phi0: 1.0 }, 0.0).unwrap();
        let model = build_shell(&ShellParams { m: 2, profile, a: 0.8, epsilon: 1, c: -2.0, window: None, anchor: None }).unwrap();
        let pts = model.chart.sample_points(4, 11).unwrap();
        let rep = skrp_report(&model.chart, &pts, &FdConfig::default()).unwrap();
        assert!(rep.max.max() < 1e-5, "{:?}", rep.max);
        for p in &rep.points {
            // Q = 2(φ − c)σ forces sgn σ = ε
            assert!(p.sample.sigma > 0.0);
        }
    }

    #[test]
    fn sphere_curvature_near_pole() {
        let s = build_sphere(4.0, 1.0).unwrap();
        let pts = vec![vec![1e-3, 0.0], vec![0.0, 5e-3], vec![0.7, 0.2]];
        let rep = gaussian_curvature_report(&s.chart, &pts, 4.0, &FdConfig::default()).unwrap();
        assert!(rep.max_rel_err < 1e-5, "{:?}", rep.values);
    }
}
