//! Parameter sweeps written as CSV.

use std::io::Write;

use skrp_core::profiles::{eval_f_bc1, verify_bc2, ProfileSpec};

use crate::config::{SweepConfig, SweepKind};
use crate::error::CliError;

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Writes the sweep to `out`; a sweep with an empty range produces only the header.
pub fn run_sweep<W: Write>(cfg: &SweepConfig, out: W) -> Result<usize, CliError> {
    let mut w = csv::Writer::from_writer(out);
    let mut rows = 0;
    match &cfg.sweep {
        SweepKind::Bc1 { k, beta } => {
            w.write_record(["k", "beta", "f", "sign", "factor_residual"])?;
            let betas = beta.values()?;
            if k.from < 2 && k.from <= k.to {
                return Err(CliError::Config("bc1 sweep needs k >= 2".into()));
            }
            for kk in k.from..=k.to {
                for &b in &betas {
                    let (f, res) = eval_f_bc1(kk, b);
                    let sign = if f > 0.0 { 1 } else if f < 0.0 { -1 } else { 0 };
                    w.write_record([kk.to_string(), format!("{b:e}"), format!("{f:e}"), sign.to_string(), format!("{res:e}")])?;
                    rows += 1;
                }
            }
        }
        SweepKind::TypeA { m, alpha, k, eta } => {
            w.write_record([
                "m", "alpha", "k", "eta", "phi_min", "phi_max", "mw1_pass", "symmetric", "asymmetry", "consistent", "note",
            ])?;
            let ks = k.values()?;
            let etas = eta.values()?;
            for &kv in &ks {
                for &ev in &etas {
                    let spec = ProfileSpec::TypeA { m: *m, k: kv, alpha: *alpha, eta: ev };
                    let r = verify_bc2(&spec).map_err(|e| CliError::Config(format!("type_a sweep: {e}")))?;
                    let (lo, hi) = r.interval.map_or((None, None), |(a, b)| (Some(a), Some(b)));
                    w.write_record([
                        m.to_string(),
                        format!("{alpha:e}"),
                        format!("{kv:e}"),
                        format!("{ev:e}"),
                        opt(lo),
                        opt(hi),
                        r.mw1_pass.to_string(),
                        r.symmetric.to_string(),
                        opt(r.asymmetry),
                        r.consistent().to_string(),
                        r.note.clone(),
                    ])?;
                    rows += 1;
                }
            }
        }
    }
    w.flush()?;
    Ok(rows)
}
