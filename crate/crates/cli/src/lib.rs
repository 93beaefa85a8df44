//! Config-driven runner: builds a model from a JSON config, runs its check plan and
//! writes a report.

pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod sweep;

use std::path::{Path, PathBuf};

use serde::Serialize;
use skrp_core::verify::{classify_model, Classification};

use config::RunConfig;
use error::CliError;
use report::{ModelSummary, Report};
use run::{build_model, metric_grid, run_plan, Built};

/// Overrides given on the command line; they are folded into the config that the report echoes.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol_scale: Option<f64>,
    pub points: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.tol_scale {
            cfg.tol_scale = t;
        }
        if let Some(p) = self.points {
            cfg.points = p;
        }
    }
}

pub fn verify(cfg: RunConfig) -> Result<Report, CliError> {
    let built = build_model(&cfg)?;
    let out = run_plan(&cfg, &built)?;
    Ok(Report::new(cfg, &built, out.checks, out.samples))
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildOutput {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub model: ModelSummary,
    pub grid_columns: Vec<String>,
    pub grid_rows: usize,
    pub grid_path: Option<PathBuf>,
}

/// Builds the model and writes a CSV grid of the metric (or of the ball coefficients).
pub fn build(cfg: RunConfig, grid_path: Option<&Path>) -> Result<BuildOutput, CliError> {
    let built = build_model(&cfg)?;
    let (columns, rows) = match &built {
        Built::Ball(ball) => {
            let rows = (0..cfg.points.max(2))
                .map(|i| {
                    let r = 10f64.powf(-4.0 + 4.0 * i as f64 / (cfg.points.max(2) - 1) as f64) * 0.99;
                    let (c1, c2) = ball.coeffs(r).map_err(|e| CliError::Config(format!("grid: {e}")))?;
                    Ok(vec![r, c1, c2])
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            (vec!["r".into(), "c1".into(), "c2".into()], rows)
        }
        _ => {
            let chart = built.chart().unwrap();
            let pts = chart.sample_points(cfg.points, cfg.seed).map_err(|e| CliError::Config(format!("sampling: {e}")))?;
            metric_grid(chart, &pts)?
        }
    };
    if let Some(path) = grid_path {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&columns)?;
        for row in &rows {
            w.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
    }
    Ok(BuildOutput {
        tool: "skrp",
        version: env!("CARGO_PKG_VERSION"),
        model: ModelSummary::of(&cfg, &built),
        config: cfg,
        grid_columns: columns,
        grid_rows: rows.len(),
        grid_path: grid_path.map(Path::to_path_buf),
    })
}

pub fn classify(cfg: &RunConfig) -> Result<Classification, CliError> {
    let built = build_model(cfg)?;
    let chart = built
        .chart()
        .ok_or_else(|| CliError::Config(format!("model {} has no chart to classify", cfg.model.name())))?;
    classify_model(&chart.meta).map_err(|e| CliError::Config(format!("classification: {e}")))
}
