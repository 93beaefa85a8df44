//! The correspondence φ ↔ r ↔ s defined by d(log r)/dφ = a/Q and ds/dφ = (sgn a)/√Q.
//!
//! Two independent representations are kept. The node table is integrated with an
//! adaptive Runge-Kutta scheme and interpolated by monotone cubics. The evaluator
//! computes log r(φ) by piecewise Gauss-Legendre quadrature and inverts it by Newton
//! iteration; it is smooth to rounding level and is what metric charts use, because
//! finite-difference curvature amplifies any interpolation ripple.
//!
//! At a simple root e of Q the integrand a/Q has the pole a/(Q′(e)(φ−e)). It is split
//! off analytically: log r = a[b_lo log|φ−φ_min| + b_hi log|φ−φ_max| + I(φ)] + C with
//! b = 1/Q′(e) at root endpoints, and the bounded remainder I is evaluated near the root
//! through P(φ) = Q/(φ−e) and D(φ) = (P − Q′(e))/(φ−e), both written as integrals of
//! Q′ and Q″ so that no cancellation occurs.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::interp::Hermite;
use crate::numeric::ode::Dopri5;
use crate::numeric::quad::{adaptive, gauss12, gauss20};
use crate::profiles::Profile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Min,
    Max,
}

impl Endpoint {
    fn idx(self) -> usize {
        match self {
            Endpoint::Min => 0,
            Endpoint::Max => 1,
        }
    }
}

/// Sentinel radius standing in for r = ∞.
pub const R_INFINITY: f64 = 1e12;
const TABLE_NODES: usize = 2049;
const CLIP: f64 = 1e-6;

/// Quantities of the unit (a = 1) integral of 1/Q, shared by a table and its dual.
#[derive(Debug)]
struct Core {
    profile: Profile,
    ends: [f64; 2],
    root: [bool; 2],
    slope: [f64; 2],
    b: [f64; 2],
    zone: f64,
    bps: Vec<f64>,
    cum: Vec<f64>,
}

impl Core {
    fn new(profile: &Profile) -> Result<Self> {
        let (lo, hi) = profile.interval;
        let root = [profile.endpoint_roots.0, profile.endpoint_roots.1];
        let slope = [profile.endpoint_slopes.0, profile.endpoint_slopes.1];
        let mut b = [0.0; 2];
        for i in 0..2 {
            if root[i] {
                if slope[i].abs() < 1e-12 {
                    return Err(Error::SingularEndpoint(slope[i]));
                }
                b[i] = 1.0 / slope[i];
            }
        }
        let bps = profile.breakpoints();
        let zone = (hi - lo) / 64.0;
        let mut core = Core { profile: profile.clone(), ends: [lo, hi], root, slope, b, zone, bps, cum: Vec::new() };
        let mut cum = vec![0.0];
        for w in core.bps.windows(2) {
            let v = gauss20().integrate(|x| core.remainder(x), w[0], w[1]);
            cum.push(cum.last().unwrap() + v);
        }
        if cum.iter().any(|v| !v.is_finite()) {
            let bad = core.bps.iter().find(|&&x| !(core.profile.q(x) > 0.0)).cloned().unwrap_or(lo);
            return Err(Error::NonPositiveQ(bad));
        }
        core.cum = cum;
        Ok(core)
    }

    /// P = Q/(φ−e) and D = (P − Q′(e))/(φ−e) for the endpoint with index i.
    fn pd(&self, i: usize, phi: f64) -> (f64, f64) {
        let e = self.ends[i];
        let d = phi - e;
        let rule = gauss12();
        let p = rule.integrate(|s| self.profile.dq(e + s * d), 0.0, 1.0);
        let dd = rule.integrate(|w| (1.0 - w) * self.profile.d2q(e + w * d), 0.0, 1.0);
        (p, dd)
    }

    /// Bounded part of 1/Q after removing the root poles.
    fn remainder(&self, phi: f64) -> f64 {
        let dl = phi - self.ends[0];
        let dh = phi - self.ends[1];
        let pole = |i: usize, d: f64| if self.b[i] != 0.0 { self.b[i] / d } else { 0.0 };
        if self.root[0] && dl < self.zone {
            let (p, dd) = self.pd(0, phi);
            return -dd / (p * self.slope[0]) - pole(1, dh);
        }
        if self.root[1] && -dh < self.zone {
            let (p, dd) = self.pd(1, phi);
            return -dd / (p * self.slope[1]) - pole(0, dl);
        }
        1.0 / self.profile.q(phi) - pole(0, dl) - pole(1, dh)
    }

    fn integral(&self, phi: f64) -> f64 {
        let n = self.bps.len();
        let k = match self.bps.binary_search_by(|v| v.partial_cmp(&phi).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        };
        self.cum[k] + gauss20().integrate(|x| self.remainder(x), self.bps[k], phi)
    }

    /// Unit log-radius U(φ) with U′ = 1/Q, excluding the log term of endpoint `skip`.
    fn unit(&self, phi: f64, skip: Option<usize>) -> f64 {
        let mut u = self.integral(phi);
        for i in 0..2 {
            if self.b[i] != 0.0 && skip != Some(i) {
                u += self.b[i] * (phi - self.ends[i]).abs().ln();
            }
        }
        u
    }

    /// Derivative of `unit(·, Some(skip))`.
    fn unit_deriv_skip(&self, phi: f64, skip: usize) -> f64 {
        let o = 1 - skip;
        let mut v = self.remainder(phi);
        if self.b[o] != 0.0 {
            v += self.b[o] / (phi - self.ends[o]);
        }
        v
    }
}

/// Values at a point near the endpoint where r → 0, expressed without cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearRoot {
    pub phi: f64,
    /// φ − e, with e the root endpoint.
    pub d: f64,
    /// (φ − e)/r²
    pub d_over_xi: f64,
    /// Q/(φ − e)
    pub p: f64,
    /// (Q/(φ − e) − Q′(e))/(φ − e)
    pub dcoef: f64,
}

impl NearRoot {
    /// Q/r²
    pub fn q_over_xi(&self) -> f64 {
        self.p * self.d_over_xi
    }
}

/// Node table and evaluator for one choice of (profile, a, anchor).
#[derive(Debug, Clone)]
pub struct ReparamTable {
    pub a: f64,
    pub anchor: (f64, f64),
    /// Nodes ordered by increasing r.
    pub phi: Vec<f64>,
    pub r: Vec<f64>,
    pub log_r: Vec<f64>,
    pub s: Vec<f64>,
    /// Arclength of the whole interval measured like `s` (to the last node when that end is not a root).
    pub s_total: f64,
    /// Distance invariant, when both endpoints are simple roots.
    pub l: Option<f64>,
    pub r_minus: f64,
    pub r_plus: f64,
    /// r_+ is infinite and represented by [`R_INFINITY`].
    pub overflow: bool,
    /// Endpoint of the profile interval where r → 0.
    pub zero_end: Option<Endpoint>,
    /// Endpoint where r → ∞.
    pub infinite_end: Option<Endpoint>,
    core: Arc<Core>,
    c_log: f64,
    phi_to_logr: Hermite,
    logr_to_phi: Hermite,
    phi_to_s: Hermite,
}

fn graded_nodes(lo: f64, hi: f64, root: [bool; 2]) -> Vec<f64> {
    let len = hi - lo;
    let half = (TABLE_NODES - 1) / 2;
    let delta = CLIP * len;
    let dist = |j: usize, is_root: bool| -> f64 {
        let u = j as f64 / half as f64;
        if is_root {
            delta * (0.5 * len / delta).powf(u)
        } else {
            0.5 * len * u
        }
    };
    let mut left: Vec<f64> = (0..=half).map(|j| lo + dist(j, root[0])).collect();
    let right: Vec<f64> = (0..half).rev().map(|j| hi - dist(j, root[1])).collect();
    left.pop();
    left.push(lo + 0.5 * len);
    left.extend(right);
    left
}

impl ReparamTable {
    pub fn profile(&self) -> &Profile {
        &self.core.profile
    }

    pub fn interval(&self) -> (f64, f64) {
        self.core.profile.interval
    }

    /// log r(φ) from the quadrature evaluator.
    pub fn log_r_exact(&self, phi: f64) -> f64 {
        self.a * self.core.unit(phi, None) + self.c_log
    }

    pub fn r_exact(&self, phi: f64) -> f64 {
        self.log_r_exact(phi).exp()
    }

    /// φ(r) from the table interpolant.
    pub fn phi_interp(&self, r: f64) -> f64 {
        self.logr_to_phi.eval(r.ln())
    }

    /// r(φ) from the table interpolant.
    pub fn r_interp(&self, phi: f64) -> f64 {
        self.phi_to_logr.eval(phi).exp()
    }

    /// d log r/dφ from the table interpolant.
    pub fn dlogr_interp(&self, phi: f64) -> f64 {
        self.phi_to_logr.eval2(phi).1
    }

    /// s(φ) and ds/dφ from the table interpolant.
    pub fn s_interp(&self, phi: f64) -> (f64, f64) {
        self.phi_to_s.eval2(phi)
    }

    fn table_guess(&self, log_r: f64) -> f64 {
        let (lo, hi) = self.interval();
        let first = self.log_r[0];
        let last = *self.log_r.last().unwrap();
        let g = if log_r <= first {
            self.phi[0]
        } else if log_r >= last {
            *self.phi.last().unwrap()
        } else {
            self.logr_to_phi.eval(log_r)
        };
        g.clamp(lo, hi)
    }

    /// φ with log r(φ) = `log_r`, solved on the quadrature evaluator.
    pub fn phi_exact(&self, log_r: f64) -> Result<f64> {
        let guess = self.table_guess(log_r);
        let core = &self.core;
        for i in 0..2 {
            if core.root[i] && (guess - core.ends[i]).abs() < core.zone {
                return Ok(self.solve_near(i, log_r, guess)?.phi);
            }
        }
        self.newton_phi(log_r, guess)
    }

    fn newton_phi(&self, log_r: f64, guess: f64) -> Result<f64> {
        let (lo, hi) = self.interval();
        let len = hi - lo;
        let inc = self.a > 0.0;
        let (mut blo, mut bhi) = (lo, hi);
        let mut x = guess.clamp(lo + 1e-300, hi);
        if x <= lo || x >= hi {
            x = 0.5 * (lo + hi);
        }
        for _ in 0..100 {
            let f = self.log_r_exact(x) - log_r;
            if (f > 0.0) == inc {
                bhi = x;
            } else {
                blo = x;
            }
            let q = self.core.profile.q(x);
            let mut next = x - f * q / self.a;
            let newton = next >= blo && next <= bhi;
            if !newton {
                next = 0.5 * (blo + bhi);
            }
            let step = (next - x).abs();
            x = next;
            // quadratic convergence: the error after this step is far below rounding
            if newton && step <= 1e-9 * len {
                return Ok(x);
            }
        }
        Err(Error::TableRangeExceeded(log_r.exp()))
    }

    /// Newton in u = log|φ − e| near the root endpoint with index i.
    fn solve_near(&self, i: usize, log_r: f64, guess: f64) -> Result<NearRoot> {
        let core = &self.core;
        let e = core.ends[i];
        let sgn = if i == 0 { 1.0 } else { -1.0 };
        let ab = self.a * core.b[i];
        let lam = |u: f64| -> f64 {
            let phi = e + sgn * u.exp();
            self.a * (core.b[i] * u + core.unit(phi, Some(i))) + self.c_log
        };
        let umax = (core.ends[1] - core.ends[0]).ln();
        let mut u = {
            let d = (guess - e).abs();
            if d > 0.0 && d.ln() < umax {
                d.ln()
            } else {
                // leading-order asymptotics log r ≈ ab·log|d| + const
                let g0 = self.a * core.unit(e, Some(i)) + self.c_log;
                ((log_r - g0) / ab).min(umax - 1.0)
            }
        };
        // log r is monotone in u with direction sgn(a)·sgn
        let dir = self.a.signum() * sgn;
        let (mut u_lo, mut u_hi) = (f64::NEG_INFINITY, umax);
        for _ in 0..200 {
            let phi = e + sgn * u.exp();
            let f = lam(u) - log_r;
            if f * dir > 0.0 {
                u_hi = u;
            } else {
                u_lo = u;
            }
            let fd = self.a * (core.b[i] + core.unit_deriv_skip(phi, i) * sgn * u.exp());
            let mut next = u - f / fd;
            let newton = next >= u_lo && next <= u_hi;
            if !newton {
                next = if u_lo.is_finite() { 0.5 * (u_lo + u_hi) } else { u_hi - 2.0 * u_hi.abs().max(1.0) };
            }
            let step = (next - u).abs();
            u = next;
            // u is a log, so the step bounds the relative error in φ − e
            if newton && step <= 1e-9 {
                break;
            }
        }
        if !u.is_finite() {
            return Err(Error::TableRangeExceeded(log_r.exp()));
        }
        let d = sgn * u.exp();
        let phi = e + d;
        let (p, dcoef) = core.pd(i, phi);
        let d_over_xi = sgn * (u - 2.0 * log_r).exp();
        Ok(NearRoot { phi, d, d_over_xi, p, dcoef })
    }

    /// Regularized values at ξ = r² (ξ ≥ 0) near the endpoint where r → 0.
    pub fn near_zero(&self, xi: f64) -> Result<NearRoot> {
        let end = self.zero_end.ok_or_else(|| Error::WrongEndpoint("table has no r = 0 endpoint".into()))?;
        let i = end.idx();
        let core = &self.core;
        let e = core.ends[i];
        if xi <= 0.0 {
            let sgn = if i == 0 { 1.0 } else { -1.0 };
            let g = 2.0 * (self.a * core.unit(e, Some(i)) + self.c_log);
            let (p, dcoef) = core.pd(i, e);
            return Ok(NearRoot { phi: e, d: 0.0, d_over_xi: sgn * (-g).exp(), p, dcoef });
        }
        let log_r = 0.5 * xi.ln();
        let guess = self.table_guess(log_r);
        self.solve_near(i, log_r, guess)
    }

    /// Relative residual of d(log r)/dφ = a/Q, re-checked by differencing the interpolant.
    pub fn ode_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let n = self.phi.len();
        for j in 1..n - 1 {
            let x = self.phi[j];
            let h = 1e-3 * (self.phi[j + 1] - self.phi[j]).abs().min((self.phi[j] - self.phi[j - 1]).abs());
            let (xp, xm) = (x + h, x - h);
            let fd = (self.phi_to_logr.eval(xp) - self.phi_to_logr.eval(xm)) / (xp - xm);
            let exact = self.a / self.core.profile.q(x);
            worst = worst.max((fd / exact - 1.0).abs());
        }
        worst
    }

    /// Returns the table for r* = 1/r, a* = −a on the same φ nodes.
    pub fn dual(&self) -> ReparamTable {
        let phi: Vec<f64> = self.phi.iter().rev().cloned().collect();
        let log_r: Vec<f64> = self.log_r.iter().rev().map(|v| -v).collect();
        let r: Vec<f64> = self.r.iter().rev().map(|v| 1.0 / v).collect();
        let s: Vec<f64> = self.s.iter().rev().map(|v| self.s_total - v).collect();
        let a = -self.a;
        let (r_minus, r_plus, overflow) = limits_of(self.infinite_end, self.zero_end, &r);
        let q = |x: f64| self.core.profile.q(x);
        let dl: Vec<f64> = phi.iter().map(|&x| a / q(x)).collect();
        let dp: Vec<f64> = phi.iter().map(|&x| q(x) / a).collect();
        let ds: Vec<f64> = phi.iter().map(|&x| a.signum() / q(x).sqrt()).collect();
        ReparamTable {
            a,
            anchor: (self.anchor.0, 1.0 / self.anchor.1),
            phi_to_logr: Hermite::new(phi.clone(), log_r.clone(), dl).expect("dual table nodes stay monotone"),
            logr_to_phi: Hermite::new(log_r.clone(), phi.clone(), dp).expect("dual table nodes stay monotone"),
            phi_to_s: Hermite::new(phi.clone(), s.clone(), ds).expect("dual table nodes stay monotone"),
            phi,
            r,
            log_r,
            s,
            s_total: self.s_total,
            l: self.l,
            r_minus,
            r_plus,
            overflow,
            zero_end: self.infinite_end,
            infinite_end: self.zero_end,
            core: self.core.clone(),
            c_log: -self.c_log,
        }
    }

    /// Whether the quadrature evaluator is shared with `other` (true for duals).
    pub fn shares_evaluator(&self, other: &ReparamTable) -> bool {
        Arc::ptr_eq(&self.core, &other.core)
    }
}

fn limits_of(zero_end: Option<Endpoint>, infinite_end: Option<Endpoint>, r: &[f64]) -> (f64, f64, bool) {
    let r_minus = if zero_end.is_some() { 0.0 } else { r[0] };
    let overflow = infinite_end.is_some();
    let r_plus = if overflow { R_INFINITY } else { *r.last().unwrap() };
    (r_minus, r_plus, overflow)
}

/// Integrates d(log r)/dφ = a/Q through the anchor and tabulates φ, r and s.
pub fn build_reparam(profile: &Profile, a: f64, anchor: (f64, f64)) -> Result<ReparamTable> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::BadParams("a must be nonzero".into()));
    }
    let (lo, hi) = profile.interval;
    let (pa, ra) = anchor;
    if !(pa > lo && pa < hi) {
        return Err(Error::AnchorOutOfRange(pa));
    }
    if !(ra > 0.0) {
        return Err(Error::BadParams("anchor radius must be positive".into()));
    }
    let core = Arc::new(Core::new(profile)?);
    let root = core.root;
    let nodes = graded_nodes(lo, hi, root);
    for &x in &nodes {
        if !(profile.q(x) > 0.0) {
            return Err(Error::NonPositiveQ(x));
        }
    }

    // Runge-Kutta route for the bounded remainder, node to node.
    let solver = Dopri5::default();
    let rhs = |x: f64, _y: f64| core.remainder(x);
    let mut rem = vec![0.0; nodes.len()];
    for j in 1..nodes.len() {
        rem[j] = solver.integrate(&rhs, nodes[j - 1], rem[j - 1], nodes[j])?;
    }
    let ja = nodes.partition_point(|&x| x < pa).min(nodes.len() - 1);
    let rem_a = solver.integrate(&rhs, nodes[ja], rem[ja], pa)?;
    let singular = |x: f64| -> f64 {
        (0..2).filter(|&i| core.b[i] != 0.0).map(|i| core.b[i] * (x - core.ends[i]).abs().ln()).sum()
    };
    let c_table = ra.ln() - a * (singular(pa) + rem_a);
    let mut log_r: Vec<f64> = nodes.iter().zip(&rem).map(|(&x, &v)| a * (singular(x) + v) + c_table).collect();
    let c_log = ra.ln() - a * core.unit(pa, None);

    // Arclength from the r → 0 end (or from the first node), increasing with r.
    let mut phi = nodes;
    if a < 0.0 {
        phi.reverse();
        log_r.reverse();
    }
    let zero_end = endpoint_where(&core, a, true);
    let infinite_end = endpoint_where(&core, a, false);
    let mut s = vec![0.0; phi.len()];
    s[0] = match zero_end {
        Some(end) => half_integral(&core, end.idx(), phi[0])?,
        None => 0.0,
    };
    let inv_sqrt = |x: f64| 1.0 / profile.q(x).sqrt();
    for j in 1..phi.len() {
        let (x0, x1) = (phi[j - 1].min(phi[j]), phi[j - 1].max(phi[j]));
        // near a root Q is (φ − e)·P with P smooth, and Q itself loses relative accuracy
        let near = (0..2).find(|&i| core.root[i] && (x0 - core.ends[i]).abs().max((x1 - core.ends[i]).abs()) < core.zone);
        s[j] = s[j - 1]
            + match near {
                Some(i) => {
                    let (w0, w1) = ((x0 - core.ends[i]).abs().sqrt(), (x1 - core.ends[i]).abs().sqrt());
                    w_integral(&core, i, w0.min(w1), w0.max(w1))?
                }
                None => adaptive(inv_sqrt, x0, x1, 1e-12, 0.0)?,
            };
    }
    let s_total = *s.last().unwrap()
        + match infinite_end {
            Some(end) => half_integral(&core, end.idx(), *phi.last().unwrap())?,
            None => 0.0,
        };
    let r: Vec<f64> = log_r.iter().map(|v| v.exp()).collect();
    let (r_minus, r_plus, overflow) = limits_of(zero_end, infinite_end, &r);
    let l = if root[0] && root[1] { compute_l(profile).ok() } else { None };
    let dl: Vec<f64> = phi.iter().map(|&x| a / profile.q(x)).collect();
    let dp: Vec<f64> = phi.iter().map(|&x| profile.q(x) / a).collect();
    let ds: Vec<f64> = phi.iter().map(|&x| a.signum() / profile.q(x).sqrt()).collect();
    Ok(ReparamTable {
        a,
        anchor,
        phi_to_logr: Hermite::new(phi.clone(), log_r.clone(), dl)?,
        logr_to_phi: Hermite::new(log_r.clone(), phi.clone(), dp)?,
        phi_to_s: Hermite::new(phi.clone(), s.clone(), ds)?,
        phi,
        r,
        log_r,
        s,
        s_total,
        l,
        r_minus,
        r_plus,
        overflow,
        zero_end,
        infinite_end,
        core,
        c_log,
    })
}

fn endpoint_where(core: &Core, a: f64, zero: bool) -> Option<Endpoint> {
    [Endpoint::Min, Endpoint::Max].into_iter().find(|end| {
        let i = end.idx();
        // log r ≈ a·b·log|φ − e|: r → 0 iff a·b > 0
        core.root[i] && ((a * core.b[i] > 0.0) == zero)
    })
}

/// ∫ dφ/√Q between the root endpoint with index i and φ, via φ = e ± w².
fn half_integral(core: &Core, i: usize, phi: f64) -> Result<f64> {
    w_integral(core, i, 0.0, (phi - core.ends[i]).abs().sqrt())
}

/// ∫ dφ/√Q over e ± [w0², w1²] near the root endpoint with index i.
fn w_integral(core: &Core, i: usize, w0: f64, w1: f64) -> Result<f64> {
    let e = core.ends[i];
    let sgn = if i == 0 { 1.0 } else { -1.0 };
    let f = |w: f64| {
        let x = e + sgn * w * w;
        let (p, _) = core.pd(i, x);
        // Q = (x − e)·P and dφ = 2w dw, so dφ/√Q = 2 dw/√(±P)
        2.0 / (sgn * p).sqrt()
    };
    adaptive(f, w0, w1, 1e-12, 0.0)
}

/// The distance invariant L = ∫ dφ/√Q over the profile interval.
pub fn compute_l(profile: &Profile) -> Result<f64> {
    let (lo, hi) = profile.interval;
    if !(profile.endpoint_roots.0 && profile.endpoint_roots.1) {
        return Err(Error::WrongEndpoint("both endpoints must be roots of Q".into()));
    }
    for s in [profile.endpoint_slopes.0, profile.endpoint_slopes.1] {
        if s.abs() < 1e-12 {
            return Err(Error::SingularEndpoint(s));
        }
    }
    let sq = |e: f64, sgn: f64| {
        move |w: f64| {
            let x = e + sgn * w * w;
            let p = gauss12().integrate(|t| profile.dq(e + t * (x - e)), 0.0, 1.0);
            2.0 / (sgn * p).sqrt()
        }
    };
    let w = (0.5 * (hi - lo)).sqrt();
    let left = adaptive(sq(lo, 1.0), 0.0, w, 1e-9, 0.0)?;
    let right = adaptive(sq(hi, -1.0), 0.0, w, 1e-9, 0.0)?;
    Ok(left + right)
}

/// One-sided derivative estimate with its convergence ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivDiag {
    pub value: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothDiag {
    pub dphi_dxi: DerivDiag,
    pub d2phi_dxi2: DerivDiag,
    pub dq_dxi: DerivDiag,
    pub d2q_dxi2: DerivDiag,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryLimits {
    /// lim Q/r², extrapolated from the three smallest-r table nodes.
    pub q0: f64,
    /// The same limit from the regularized evaluator.
    pub q0_regularized: f64,
    pub smooth_diag: SmoothDiag,
    pub pass: bool,
}

fn neville0(xs: &[f64], ys: &[f64]) -> f64 {
    // polynomial through (x_i, y_i) evaluated at 0
    let n = xs.len();
    let mut p = ys.to_vec();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (xs[i + k] * p[i] - xs[i] * p[i + 1]) / (xs[i + k] - xs[i]);
        }
    }
    p[0]
}

/// Limit of Q/r² and smoothness diagnostics of φ and Q/r² as functions of ξ = r².
pub fn boundary_limits(table: &ReparamTable, endpoint: Endpoint) -> Result<BoundaryLimits> {
    let profile = table.profile();
    let i = endpoint.idx();
    let root = [profile.endpoint_roots.0, profile.endpoint_roots.1][i];
    let slope = [profile.endpoint_slopes.0, profile.endpoint_slopes.1][i];
    if !root {
        return Err(Error::WrongEndpoint(format!("{endpoint:?} is not a root of Q")));
    }
    if (slope - 2.0 * table.a).abs() > 1e-6 * slope.abs() {
        return Err(Error::WrongEndpoint(format!("dQ/dphi = {slope} at {endpoint:?}, but 2a = {}", 2.0 * table.a)));
    }
    debug_assert_eq!(table.zero_end, Some(endpoint));
    let xs: Vec<f64> = table.r[..3].iter().map(|r| r * r).collect();
    let ys: Vec<f64> = (0..3).map(|j| profile.q(table.phi[j]) / xs[j]).collect();
    let q0 = neville0(&xs, &ys);
    let at0 = table.near_zero(0.0)?;
    let q0_regularized = at0.q_over_xi();

    // step in ξ corresponding to a φ-offset of about 1% of the interval
    let e = [profile.interval.0, profile.interval.1][i];
    let sgn = if i == 0 { 1.0 } else { -1.0 };
    let h0 = table.r_exact(e + sgn * 0.01 * profile.len()).powi(2);
    let phi_of = |xi: f64| table.near_zero(xi).map(|n| n.phi);
    let q_of = |xi: f64| table.near_zero(xi).map(|n| n.q_over_xi());
    let diag = |f: &dyn Fn(f64) -> Result<f64>| -> Result<(DerivDiag, DerivDiag)> {
        let f0 = f(0.0)?;
        let mut d1 = Vec::new();
        let mut d2 = Vec::new();
        for k in 0..3 {
            let h = h0 / f64::powi(2.0, k);
            let (f1, f2) = (f(h)?, f(2.0 * h)?);
            d1.push((f1 - f0) / h);
            d2.push((f2 - 2.0 * f1 + f0) / (h * h));
        }
        let ratio = |v: &[f64]| (v[0] - v[1]) / (v[1] - v[2]);
        // first-order one-sided differences: Richardson with factor 2
        let first = DerivDiag { value: 2.0 * d1[2] - d1[1], ratio: ratio(&d1) };
        let second = DerivDiag { value: 2.0 * d2[2] - d2[1], ratio: ratio(&d2) };
        Ok((first, second))
    };
    let (dphi, d2phi) = diag(&phi_of)?;
    let (dq, d2q) = diag(&q_of)?;
    let smooth_diag = SmoothDiag { dphi_dxi: dphi, d2phi_dxi2: d2phi, dq_dxi: dq, d2q_dxi2: d2q };
    let ok = |d: &DerivDiag| d.ratio.is_finite() && (0.2..=5.0).contains(&d.ratio);
    let pass = q0 > 0.0 && ok(&dphi) && ok(&d2phi) && ok(&dq) && ok(&d2q);
    Ok(BoundaryLimits { q0, q0_regularized, smooth_diag, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{find_admissible_interval, make_profile, ProfileSpec};

    fn quadratic(k: f64, phi0: f64) -> Profile {
        find_admissible_interval(&ProfileSpec::Quadratic { k, phi0 }, 0.0).unwrap()
    }

    #[test]
    fn sphere_closed_form() {
        // r² = (φ0 − φ)/(φ0 + φ) for Q = K(φ0² − φ²), a = −Kφ0, r(0) = 1
        let p = quadratic(4.0, 1.0);
        let t = build_reparam(&p, -4.0, (0.0, 1.0)).unwrap();
        for &x in &[-0.999f64, -0.7, -0.2, 0.3, 0.9, 0.99999] {
            let exact = 0.5 * ((1.0 - x) / (1.0 + x)).ln();
            assert!((t.log_r_exact(x) - exact).abs() < 1e-12, "x={x}");
            assert!((t.r_interp(x) / exact.exp() - 1.0).abs() < 1e-9);
        }
        assert_eq!(t.zero_end, Some(Endpoint::Max));
        assert_eq!(t.infinite_end, Some(Endpoint::Min));
        assert!(t.overflow && t.r_plus == R_INFINITY && t.r_minus == 0.0);
    }

    #[test]
    fn decreasing_r_for_negative_a() {
        let p = quadratic(1.0, 1.0);
        let t = build_reparam(&p, -1.0, (0.0, 1.0)).unwrap();
        assert!(t.phi.windows(2).all(|w| w[1] < w[0]));
        assert!(t.r.windows(2).all(|w| w[1] > w[0]));
        assert!(t.s.windows(2).all(|w| w[1] > w[0]));
        assert!(t.r[0] < 1e-2);
        assert!(t.phi.len() >= 512);
    }

    #[test]
    fn anchor_scales_r() {
        let spec = ProfileSpec::TypeA { m: 2, k: 1.0, alpha: 0.0, eta: -6.0 };
        let p = find_admissible_interval(&spec, 0.0).unwrap();
        let t1 = build_reparam(&p, 0.7, (0.2, 1.0)).unwrap();
        let t2 = build_reparam(&p, 0.7, (0.2, 2.0)).unwrap();
        for (a, b) in t1.r.iter().zip(&t2.r) {
            assert!((b / a - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn table_and_evaluator_agree() {
        let spec = ProfileSpec::TypeC { m: 2, c: 1.0, a: 2.0, b: 0.5, cc: 0.1 };
        let p = make_profile(spec, (1.5, 3.0)).unwrap();
        let t = build_reparam(&p, 0.9, (2.0, 1.3)).unwrap();
        for j in (0..t.phi.len()).step_by(97) {
            assert!((t.log_r[j] - t.log_r_exact(t.phi[j])).abs() < 1e-9);
        }
        let res = t.ode_residual();
        assert!(res < 1e-8, "{res}");
    }

    #[test]
    fn l_of_quadratic() {
        for &(k, phi0) in &[(4.0, 1.0), (4.0, -2.5), (1.0, 0.3)] {
            let l = compute_l(&quadratic(k, phi0)).unwrap();
            assert!((l - std::f64::consts::PI / f64::sqrt(k)).abs() < 1e-8, "k={k} phi0={phi0} l={l}");
        }
    }

    #[test]
    fn l_scales_with_q() {
        let p = quadratic(1.5, 0.8);
        let l = compute_l(&p).unwrap();
        let l2 = compute_l(&p.scaled(2.0).unwrap()).unwrap();
        assert!((l2 - l / 2f64.sqrt()).abs() < 1e-9 * l);
    }

    #[test]
    fn dual_is_involution() {
        let p = quadratic(2.0, 1.0);
        let t = build_reparam(&p, -2.0, (0.1, 1.7)).unwrap();
        let dd = t.dual().dual();
        for j in 0..t.phi.len() {
            assert_eq!(t.phi[j], dd.phi[j]);
            assert!((t.r[j] - dd.r[j]).abs() <= 1e-12 * t.r[j]);
            assert!((t.s[j] - dd.s[j]).abs() <= 1e-12 * t.s.last().unwrap());
        }
        assert_eq!(dd.a, t.a);
        let res = t.dual().ode_residual();
        assert!(res < 1e-8, "{res} {}", t.ode_residual());
    }

    #[test]
    fn boundary_limit_of_sphere() {
        let p = quadratic(1.0, 1.0);
        let t = build_reparam(&p, -1.0, (0.0, 1.0)).unwrap();
        let b = boundary_limits(&t, Endpoint::Max).unwrap();
        // Q/r² = (1 − φ²)(1 + φ)/(1 − φ) → 4 at φ = 1
        assert!((b.q0_regularized - 4.0).abs() < 1e-12);
        assert!((b.q0 - 4.0).abs() < 1e-6);
        assert!(b.pass, "{b:?}");
        assert!((b.smooth_diag.dphi_dxi.value / (b.q0 / (2.0 * t.a)) - 1.0).abs() < 5e-4);
        assert!(matches!(boundary_limits(&t, Endpoint::Min), Err(Error::WrongEndpoint(_))));
    }
}
