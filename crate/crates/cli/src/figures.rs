//! Standard figure bundles: fixed sweeps written as CSV plus one SVG per figure.

use std::path::{Path, PathBuf};

use qkd_ratelab::{run_sweep, Axis, FiberSpec, Model, ModelParams, RateSeries, Scenario, SweepSpec};

use crate::output::{render_svg, Curve};
use crate::{write_series_csv, write_svg, CliError};

/// Detector efficiencies swept in figures 2a and 2b.
pub const DEFAULT_FIG2_ETA_D: [f64; 5] = [0.98, 0.95, 0.90, 0.88, 0.86];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig1a,
    Fig1b,
    Fig1c,
    Fig1d,
    Fig2a,
    Fig2b,
}

pub const ALL_FIGURES: [Figure; 6] =
    [Figure::Fig1a, Figure::Fig1b, Figure::Fig1c, Figure::Fig1d, Figure::Fig2a, Figure::Fig2b];

impl Figure {
    pub fn id(self) -> &'static str {
        match self {
            Figure::Fig1a => "1a",
            Figure::Fig1b => "1b",
            Figure::Fig1c => "1c",
            Figure::Fig1d => "1d",
            Figure::Fig2a => "2a",
            Figure::Fig2b => "2b",
        }
    }

    pub fn scenario(self) -> Scenario {
        match self {
            Figure::Fig1a | Figure::Fig1b | Figure::Fig2a => Scenario::AsymmetricRelayAtAlice,
            Figure::Fig1c | Figure::Fig1d | Figure::Fig2b => Scenario::Symmetric,
        }
    }

    /// Loss range `(stop_db, points)`; every figure starts at 0 dB.
    pub fn range(self) -> (f64, usize) {
        match self {
            Figure::Fig1a | Figure::Fig1c | Figure::Fig2a => (6.0, 121),
            Figure::Fig1b | Figure::Fig1d | Figure::Fig2b => (1.5, 61),
        }
    }
}

pub fn parse_figure_list(list: &str) -> Result<Vec<Figure>, CliError> {
    let mut out = Vec::new();
    for id in list.split(',').map(str::trim) {
        if id == "all" {
            out.extend(ALL_FIGURES);
            continue;
        }
        let fig = ALL_FIGURES.into_iter().find(|f| f.id() == id).ok_or_else(|| {
            CliError::Validation(format!(
                "invalid value `{id}` for `figure`: expected 1a, 1b, 1c, 1d, 2a, 2b or all"
            ))
        })?;
        out.push(fig);
    }
    out.dedup();
    Ok(out)
}

pub fn parse_eta_list(list: &str) -> Result<Vec<f64>, CliError> {
    list.split(',')
        .map(str::trim)
        .map(|v| match v.parse::<f64>() {
            Ok(x) if x > 0.0 && x <= 1.0 => Ok(x),
            _ => Err(CliError::Validation(format!(
                "invalid value `{v}` for `fig2.eta_d_values`: expected numbers in (0, 1]"
            ))),
        })
        .collect()
}

pub fn axis_label(axis: Axis) -> &'static str {
    match axis {
        Axis::TotalLossDb => "total loss (dB)",
        Axis::DistanceKm => "total distance (km)",
    }
}

fn sweep(model: Model, fig: Figure, params: &ModelParams) -> Result<RateSeries, CliError> {
    let (stop, points) = fig.range();
    let spec = SweepSpec {
        model,
        scenario: fig.scenario(),
        axis: Axis::TotalLossDb,
        start: 0.0,
        stop,
        points,
        fiber: FiberSpec::default(),
        params: *params,
    };
    Ok(run_sweep(&spec)?)
}

/// Writes the bundle for `fig` into `dir` and returns the files written.
pub fn reproduce(
    fig: Figure,
    params: &ModelParams,
    fig2_eta_d: &[f64],
    dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let mut labelled: Vec<(String, String, RateSeries)> = Vec::new();
    match fig {
        Figure::Fig1a | Figure::Fig1b | Figure::Fig1c | Figure::Fig1d => {
            for model in [Model::Dv, Model::Cv] {
                let series = sweep(model, fig, params)?;
                let name = model.as_str();
                labelled.push((name.to_owned(), name.to_uppercase(), series));
            }
        }
        Figure::Fig2a | Figure::Fig2b => {
            for &eta in fig2_eta_d {
                let mut p = *params;
                p.cv = p.cv.with_eta_d(eta)?;
                let series = sweep(Model::Cv, fig, &p)?;
                let tag = crate::output::fmt_num(eta);
                labelled.push((format!("cv_eta{tag}"), format!("CV eta_d={tag}"), series));
            }
        }
    }

    let mut written = Vec::new();
    for (stem, _, series) in &labelled {
        let path = dir.join(format!("fig{}_{stem}.csv", fig.id()));
        write_series_csv(&path, series)?;
        written.push(path);
    }
    let curves: Vec<Curve<'_>> = labelled
        .iter()
        .map(|(_, label, series)| Curve { label: label.clone(), series })
        .collect();
    let title = format!("Figure {} ({})", fig.id(), fig.scenario());
    let svg_path = dir.join(format!("fig{}.svg", fig.id()));
    write_svg(&svg_path, &render_svg(&title, axis_label(Axis::TotalLossDb), &curves))?;
    written.push(svg_path);
    Ok(written)
}
