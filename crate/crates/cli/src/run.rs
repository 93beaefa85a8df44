//! Model construction and plan execution.

use std::f64::consts::PI;

use serde::Serialize;
use skrp_core::models::{
    build_annulus, build_product, build_shell, build_sphere, dual_annulus, AnnulusParams, BallExtension, Model,
    ShellParams, SphereModel,
};
use skrp_core::profiles::{find_admissible_interval, make_profile, soliton_profile, Profile, ProfileSpec};
use skrp_core::reparam::compute_l;
use skrp_core::tensor::ChartMetric;
use skrp_core::verify::{
    ball_extension_report, classify_model, conformal_einstein_report, duality_report, gaussian_curvature_report,
    identity_report_with, normal_geodesic_report, skrp_report, soliton_report, structure_report, GeodesicTarget,
    IdentityOptions, SkrpSample,
};

use crate::config::{CheckConfig, ModelConfig, ProfileConfig, RunConfig};
use crate::error::CliError;

const IDENTITY_TOL: f64 = 1e-5;
const CURVATURE_TOL: f64 = 1e-4;
const STRUCTURE_TOL: f64 = 1e-6;
const WEDGE_TOL: f64 = 1e-6;
const DPHIDS_TOL: f64 = 1e-5;
const DUALITY_METRIC_TOL: f64 = 1e-10;
const DUALITY_PHI_TOL: f64 = 1e-9;
const DISTANCE_L_TOL: f64 = 1e-8;
const RATIO_WINDOW: f64 = 5.0;

/// A built model: a chart with its table, the sphere pair, or bare ball coefficients.
pub enum Built {
    Chart(Box<Model>),
    Sphere(Box<SphereModel>),
    Ball(BallExtension),
}

impl Built {
    pub fn chart(&self) -> Option<&ChartMetric> {
        match self {
            Built::Chart(m) => Some(&m.chart),
            Built::Sphere(s) => Some(&s.chart),
            Built::Ball(_) => None,
        }
    }

    pub fn profile(&self) -> Option<&Profile> {
        match self {
            Built::Chart(m) => m.chart.meta.profile.as_ref(),
            Built::Sphere(s) => s.chart.meta.profile.as_ref(),
            Built::Ball(b) => Some(b.table.profile()),
        }
    }
}

fn config_err(what: &str) -> impl Fn(skrp_core::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{what}: {e}"))
}

pub fn build_profile(cfg: &ProfileConfig) -> Result<Profile, CliError> {
    match (&cfg.spec, &cfg.soliton) {
        (Some(spec), None) => match cfg.interval {
            Some(interval) => make_profile(spec.clone(), interval).map_err(config_err("profile")),
            None => find_admissible_interval(spec, cfg.search_seed.unwrap_or(0.0)).map_err(config_err("profile")),
        },
        (None, Some(s)) => {
            if cfg.interval.is_some() || cfg.search_seed.is_some() {
                return Err(CliError::Config("soliton profiles take their range from `soliton.range`".into()));
            }
            soliton_profile(s.params, s.anchor, s.range).map_err(config_err("soliton profile"))
        }
        _ => Err(CliError::Config("profile needs exactly one of `spec` and `soliton`".into())),
    }
}

pub fn build_model(cfg: &RunConfig) -> Result<Built, CliError> {
    let profile = || -> Result<Profile, CliError> {
        let p = cfg.profile.as_ref().ok_or_else(|| CliError::Config(format!("model {} needs a profile", cfg.model.name())))?;
        build_profile(p)
    };
    let no_profile = || -> Result<(), CliError> {
        match cfg.profile {
            Some(_) => Err(CliError::Config(format!("model {} takes no profile", cfg.model.name()))),
            None => Ok(()),
        }
    };
    let built = match cfg.model {
        ModelConfig::Shell { m, a, epsilon, c, window, anchor } => {
            let p = ShellParams { m, profile: profile()?, a, epsilon, c, window, anchor };
            Built::Chart(Box::new(build_shell(&p).map_err(config_err("shell"))?))
        }
        ModelConfig::Annulus { a, window, anchor } => {
            let p = AnnulusParams { profile: profile()?, a, window, anchor };
            Built::Chart(Box::new(build_annulus(&p).map_err(config_err("annulus"))?))
        }
        ModelConfig::Sphere { k, phi0 } => {
            no_profile()?;
            Built::Sphere(Box::new(build_sphere(k, phi0).map_err(config_err("sphere"))?))
        }
        ModelConfig::ProductS2 { k, t } => {
            no_profile()?;
            Built::Chart(Box::new(build_product(k, t).map_err(config_err("product_s2"))?))
        }
        ModelConfig::BallCoeffs { a, c } => {
            Built::Ball(BallExtension::new(&profile()?, a, c, None).map_err(config_err("ball_coeffs"))?)
        }
    };
    Ok(built)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// pass iff residual ≤ tolerance
    Upper,
    /// pass iff residual > tolerance
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// `None` when the check could not be evaluated or does not apply.
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub bound: Bound,
    pub pass: bool,
    pub reference: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    fn new(name: &str, residual: f64, tolerance: f64, bound: Bound, reference: &str) -> Self {
        let pass = match bound {
            Bound::Upper => residual <= tolerance,
            Bound::Lower => residual > tolerance,
        };
        CheckResult { name: name.into(), residual: Some(residual), tolerance, bound, pass, reference: reference.into(), note: None }
    }

    fn upper(name: &str, residual: f64, tolerance: f64, reference: &str) -> Self {
        Self::new(name, residual, tolerance, Bound::Upper, reference)
    }

    fn failed(name: &str, tolerance: f64, reference: &str, err: &skrp_core::Error) -> Self {
        CheckResult {
            name: name.into(),
            residual: None,
            tolerance,
            bound: Bound::Upper,
            pass: false,
            reference: reference.into(),
            note: Some(err.to_string()),
        }
    }

    fn vacuous(name: &str, tolerance: f64, reference: &str, note: &str) -> Self {
        CheckResult {
            name: name.into(),
            residual: None,
            tolerance,
            bound: Bound::Upper,
            pass: true,
            reference: reference.into(),
            note: Some(note.into()),
        }
    }
}

/// Rejects checks that the model cannot run, before any numerics.
pub fn validate_plan(cfg: &RunConfig, built: &Built) -> Result<(), CliError> {
    let model = cfg.model.name();
    let bad = |check: &str, why: &str| Err(CliError::Config(format!("check {check} on model {model}: {why}")));
    if !(cfg.tol_scale > 0.0 && cfg.tol_scale.is_finite()) {
        return Err(CliError::Config("tol_scale must be positive".into()));
    }
    if cfg.fd.rel_step.is_nan() || cfg.fd.rel_step <= 0.0 {
        return Err(CliError::Config("fd.rel_step must be positive".into()));
    }
    for check in &cfg.plan {
        match check {
            CheckConfig::CurvatureK { expected, .. } => match built.chart() {
                Some(c) if c.n == 2 => {
                    if expected.is_none() && !matches!(built, Built::Sphere(_)) {
                        return bad("curvature_K", "`expected` is required off the sphere");
                    }
                }
                _ => return bad("curvature_K", "needs a surface chart"),
            },
            CheckConfig::SkrpBlocks { .. }
            | CheckConfig::Identities { .. }
            | CheckConfig::ConformalEinstein { .. }
            | CheckConfig::Soliton { .. }
            | CheckConfig::KahlerKilling { .. }
            | CheckConfig::Classification { .. } => {
                if built.chart().is_none() {
                    return bad("chart check", "ball_coeffs has no chart");
                }
            }
            CheckConfig::NormalGeodesics { .. } => {
                if !matches!(cfg.model, ModelConfig::Sphere { .. } | ModelConfig::Shell { .. }) {
                    return bad("normal_geodesics", "needs a sphere or shell");
                }
            }
            CheckConfig::Duality { .. } => {
                if !matches!(cfg.model, ModelConfig::Annulus { .. }) {
                    return bad("duality", "needs an annulus");
                }
            }
            CheckConfig::BallExtension { .. } => {
                if !matches!(built, Built::Sphere(_) | Built::Ball(_)) {
                    return bad("ball_extension", "needs ball_coeffs or a sphere");
                }
            }
            CheckConfig::DistanceL { expected, .. } => {
                let Some(p) = built.profile() else {
                    return bad("distance_L", "needs a profile");
                };
                if expected.is_none() && !matches!(p.spec, ProfileSpec::Quadratic { .. }) {
                    return bad("distance_L", "`expected` is required unless the profile is quadratic");
                }
            }
        }
    }
    Ok(())
}

/// Probe points at the given radii, on directions rotating by the golden angle.
fn radial_probes(radii: &[f64]) -> Vec<Vec<f64>> {
    radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let t = 0.7 + 2.399_963_229_728_653 * i as f64;
            vec![r * t.cos(), r * t.sin()]
        })
        .collect()
}

pub struct PlanOutput {
    pub checks: Vec<CheckResult>,
    pub samples: Vec<SkrpSample>,
}

/// Runs every check of the plan; numerical failures are recorded, not returned.
pub fn run_plan(cfg: &RunConfig, built: &Built) -> Result<PlanOutput, CliError> {
    validate_plan(cfg, built)?;
    let fd = &cfg.fd;
    let ts = cfg.tol_scale;
    let points = match built.chart() {
        Some(c) => c.sample_points(cfg.points, cfg.seed).map_err(config_err("sampling"))?,
        None => Vec::new(),
    };
    let mut checks = Vec::new();
    let mut samples: Vec<SkrpSample> = Vec::new();
    for check in &cfg.plan {
        match check {
            CheckConfig::CurvatureK { expected, tolerance, extra_radii } => {
                let chart = built.chart().unwrap();
                let k = expected.unwrap_or_else(|| match built {
                    Built::Sphere(s) => s.k,
                    _ => unreachable!("validated"),
                });
                let mut pts = points.clone();
                pts.extend(radial_probes(extra_radii));
                let tol = tolerance.unwrap_or(IDENTITY_TOL) * ts;
                let reference = "scalar curvature / 2 = K";
                checks.push(match gaussian_curvature_report(chart, &pts, k, fd) {
                    Ok(r) => CheckResult::upper("curvature_K", r.max_rel_err, tol, reference),
                    Err(e) => CheckResult::failed("curvature_K", tol, reference, &e),
                });
            }
            CheckConfig::SkrpBlocks { tolerance } => {
                let tol = tolerance.unwrap_or(IDENTITY_TOL) * ts;
                let names = [
                    ("skrp.hess_h", "Hess phi = sigma g on H"),
                    ("skrp.ric_h", "Ric = lambda g on H"),
                    ("skrp.hess_mixed", "Hess phi(H, V) = 0"),
                    ("skrp.ric_mixed", "Ric(H, V) = 0"),
                    ("skrp.hess_v", "Hess phi = tau g on V"),
                    ("skrp.ric_v", "Ric = mu g on V"),
                ];
                match skrp_report(built.chart().unwrap(), &points, fd) {
                    Ok(r) => {
                        let m = r.max;
                        let vals = [m.hess_h, m.ric_h, m.hess_mixed, m.ric_mixed, m.hess_v, m.ric_v];
                        for ((name, reference), v) in names.iter().zip(vals) {
                            checks.push(CheckResult::upper(name, v, tol, reference));
                        }
                        if samples.is_empty() {
                            samples = r.points.into_iter().map(|p| p.sample).collect();
                        }
                    }
                    Err(e) => checks.extend(names.iter().map(|(n, reference)| CheckResult::failed(n, tol, reference, &e))),
                }
            }
            CheckConfig::Identities { tolerance, require_c } => {
                let tol = tolerance.unwrap_or(IDENTITY_TOL) * ts;
                let opts = IdentityOptions { require_c: *require_c, ..Default::default() };
                let refs = [
                    ("identity.dq", "dQ = 2 tau dphi"),
                    ("identity.trace", "Y = 2 tau + 2(m-1) sigma"),
                    ("identity.sigma_c", "Q = 2(phi - c) sigma"),
                    ("identity.dy", "dY = -2 mu dphi"),
                    ("identity.profile", "2 tau = Q'(phi)"),
                ];
                match identity_report_with(built.chart().unwrap(), &points, fd, &opts) {
                    Ok(r) => {
                        let m = r.max;
                        let vals = [Some(m.dq), Some(m.trace), m.sigma_c, Some(m.dy), m.profile];
                        for ((name, reference), v) in refs.iter().zip(vals) {
                            checks.push(match v {
                                Some(v) => CheckResult::upper(name, v, tol, reference),
                                None => CheckResult::vacuous(name, tol, reference, "not applicable to this chart"),
                            });
                        }
                        if samples.is_empty() {
                            samples = r.points;
                        }
                    }
                    Err(e) => checks.extend(refs.iter().map(|(n, reference)| CheckResult::failed(n, tol, reference, &e))),
                }
            }
            CheckConfig::ConformalEinstein { tolerance, wedge_tolerance } => {
                let tol = tolerance.unwrap_or(CURVATURE_TOL) * ts;
                let wtol = wedge_tolerance.unwrap_or(WEDGE_TOL) * ts;
                let refs = [
                    ("einstein_res", tol, "Ric(g/phi^2) = lambda g/phi^2"),
                    ("lambda_spread", tol, "Einstein constant of g/phi^2 is constant"),
                    ("wedge_res", wtol, "dphi ^ dY = 0"),
                ];
                match conformal_einstein_report(built.chart().unwrap(), &points, fd) {
                    Ok(r) => {
                        for ((name, t, reference), v) in refs.iter().zip([r.einstein_res, r.lambda_spread, r.wedge_res]) {
                            checks.push(CheckResult::upper(name, v, *t, reference));
                        }
                    }
                    Err(e) => checks.extend(refs.iter().map(|(n, t, reference)| CheckResult::failed(n, *t, reference, &e))),
                }
            }
            CheckConfig::Soliton { p, s0, tolerance } => {
                let tol = tolerance.unwrap_or(CURVATURE_TOL) * ts;
                let reference = "Hess phi + p Ric = s0 g";
                checks.push(match soliton_report(built.chart().unwrap(), *p, *s0, &points, fd) {
                    Ok(r) => CheckResult::upper("soliton", r.residual, tol, reference),
                    Err(e) => CheckResult::failed("soliton", tol, reference, &e),
                });
            }
            CheckConfig::KahlerKilling { tolerance } => {
                let tol = tolerance.unwrap_or(STRUCTURE_TOL) * ts;
                let refs = [("kahler", "g(J., J.) = g, d omega = 0, nabla J = 0"), ("killing", "J grad phi is a Killing field")];
                match structure_report(built.chart().unwrap(), &points, fd) {
                    Ok(r) => {
                        checks.push(CheckResult::upper(refs[0].0, r.kahler, tol, refs[0].1));
                        checks.push(CheckResult::upper(refs[1].0, r.killing, tol, refs[1].1));
                    }
                    Err(e) => checks.extend(refs.iter().map(|(n, reference)| CheckResult::failed(n, tol, reference, &e))),
                }
            }
            CheckConfig::NormalGeodesics { dphids_tolerance, gauss_tolerance, distance_tolerance } => {
                let dtol = dphids_tolerance.unwrap_or(DPHIDS_TOL) * ts;
                let gtol = gauss_tolerance.unwrap_or(CURVATURE_TOL) * ts;
                let ltol = distance_tolerance.unwrap_or(CURVATURE_TOL) * ts;
                let target = match built {
                    Built::Sphere(s) => GeodesicTarget::Sphere(s),
                    Built::Chart(m) => GeodesicTarget::Shell(m),
                    Built::Ball(_) => unreachable!("validated"),
                };
                let refs = [
                    ("geodesic.dphids", dtol, "dphi/ds = sgn(a) sqrt(Q)"),
                    ("geodesic.gauss", gtol, "g(x_s, x_t) = 0 across the fan"),
                    ("geodesic.distance_vs_L", ltol, "pole-to-pole length = L"),
                ];
                match normal_geodesic_report(target, fd) {
                    Ok(r) => {
                        checks.push(CheckResult::upper(refs[0].0, r.dphids_res, dtol, refs[0].2));
                        checks.push(CheckResult::upper(refs[1].0, r.gauss_res, gtol, refs[1].2));
                        checks.push(match r.distance_vs_l {
                            Some(v) => CheckResult::upper(refs[2].0, v, ltol, refs[2].2),
                            None => CheckResult::vacuous(refs[2].0, ltol, refs[2].2, "chart does not reach both roots of Q"),
                        });
                    }
                    Err(e) => checks.extend(refs.iter().map(|(n, t, reference)| CheckResult::failed(n, *t, reference, &e))),
                }
            }
            CheckConfig::Duality { metric_tolerance, phi_tolerance } => {
                let mtol = metric_tolerance.unwrap_or(DUALITY_METRIC_TOL) * ts;
                let ptol = phi_tolerance.unwrap_or(DUALITY_PHI_TOL) * ts;
                let Built::Chart(model) = built else { unreachable!("validated") };
                let window = match cfg.model {
                    ModelConfig::Annulus { window, .. } => window,
                    _ => None,
                };
                let refs = [
                    ("duality.metric", mtol, "inversion pulls the dual metric back to g"),
                    ("duality.phi", ptol, "phi is unchanged under r -> 1/r"),
                ];
                let profile = model.chart.meta.profile.as_ref().unwrap();
                let (lo, hi) = profile.interval;
                let w = window.unwrap_or((lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo)));
                match dual_annulus(model, w).and_then(|dual| duality_report(model, &dual, &points)) {
                    Ok(r) => {
                        checks.push(CheckResult::upper(refs[0].0, r.metric_res, mtol, refs[0].2));
                        checks.push(CheckResult::upper(refs[1].0, r.phi_res, ptol, refs[1].2));
                    }
                    Err(e) => checks.extend(refs.iter().map(|(n, t, reference)| CheckResult::failed(n, *t, reference, &e))),
                }
            }
            CheckConfig::BallExtension { probe_radii } => {
                let ball = match built {
                    Built::Sphere(s) => &s.ball,
                    Built::Ball(b) => b,
                    Built::Chart(_) => unreachable!("validated"),
                };
                let window = RATIO_WINDOW.ln();
                match ball_extension_report(ball, probe_radii) {
                    Ok(r) => {
                        let finite = if r.coeffs_finite { 0.0 } else { 1.0 };
                        checks.push(CheckResult::upper("ball.coeffs_finite", finite, 0.0, "c1, c2 finite up to r = 0"));
                        checks.push(CheckResult::new("ball.min_eigenvalue", r.min_eigenvalue, 0.0, Bound::Lower, "limit metric at r = 0 is positive definite"));
                        checks.push(CheckResult::new("ball.q0", r.limits.q0, 0.0, Bound::Lower, "lim Q/r^2 > 0"));
                        let d = &r.limits.smooth_diag;
                        for (name, diag) in [
                            ("ball.dphi_dxi_ratio", d.dphi_dxi),
                            ("ball.d2phi_dxi2_ratio", d.d2phi_dxi2),
                            ("ball.dq_dxi_ratio", d.dq_dxi),
                            ("ball.d2q_dxi2_ratio", d.d2q_dxi2),
                        ] {
                            let res = if diag.ratio > 0.0 { diag.ratio.ln().abs() } else { f64::INFINITY };
                            checks.push(CheckResult::upper(name, res, window, "|log ratio| <= log 5: one-sided derivative in r^2 converges"));
                        }
                    }
                    Err(e) => checks.push(CheckResult::failed("ball.coeffs_finite", 0.0, "c1, c2 finite up to r = 0", &e)),
                }
            }
            CheckConfig::DistanceL { expected, tolerance } => {
                let profile = built.profile().unwrap();
                let exact = expected.unwrap_or_else(|| match profile.spec {
                    ProfileSpec::Quadratic { k, .. } => PI / k.sqrt(),
                    _ => unreachable!("validated"),
                });
                let tol = tolerance.unwrap_or(DISTANCE_L_TOL) * ts;
                let reference = "L = integral of dphi / sqrt(Q)";
                checks.push(match compute_l(profile) {
                    Ok(l) => CheckResult::upper("distance_L", (l - exact).abs(), tol, reference),
                    Err(e) => CheckResult::failed("distance_L", tol, reference, &e),
                });
            }
            CheckConfig::Classification { expected } => {
                let reference = "type tag from epsilon, c and the phi-range";
                checks.push(match classify_model(&built.chart().unwrap().meta) {
                    Ok(c) => {
                        let mut r = match expected {
                            Some(t) => CheckResult::upper("classification", if *t == c.tag.tag { 0.0 } else { 1.0 }, 0.0, reference),
                            None => CheckResult::vacuous("classification", 0.0, reference, ""),
                        };
                        let mut note = format!("{:?}", c.tag.tag);
                        for n in &c.notes {
                            note.push_str("; ");
                            note.push_str(n);
                        }
                        r.note = Some(note);
                        r
                    }
                    Err(e) => CheckResult::failed("classification", 0.0, reference, &e),
                });
            }
        }
    }
    Ok(PlanOutput { checks, samples })
}

/// Grid rows for `build`: coordinates, φ and the upper triangle of g.
pub fn metric_grid(chart: &ChartMetric, points: &[Vec<f64>]) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let n = chart.n;
    let mut columns: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    columns.push("phi".into());
    for i in 0..n {
        for j in i..n {
            columns.push(format!("g{i}{j}"));
        }
    }
    let mut rows = Vec::with_capacity(points.len());
    for x in points {
        let f = chart.eval(x).map_err(|e| CliError::Config(format!("grid: {e}")))?;
        let mut row = x.clone();
        row.push(f.phi);
        for i in 0..n {
            for j in i..n {
                row.push(f.g[(i, j)]);
            }
        }
        rows.push(row);
    }
    Ok((columns, rows))
}

