use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    best_fit_sphere, default_window, fit_exponential_rate, identity_residuals, mean_convexity_onset,
    paper_decay_bound, DiagnosticsRecord, OdeTerms, TimeSeries,
};
use crate::mesh::TriMesh;

#[derive(Debug, Error)]
pub enum SeriesIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

const ODE_COLUMNS: [&str; 3] = ["t", "dh_dt", "d_int_H2_dt"];

fn write_rows<W: Write>(
    mut w: W,
    header: &[&str],
    rows: impl Iterator<Item = Vec<f64>>,
) -> std::io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()
}

fn read_rows<R: BufRead>(r: R, header: &[&str]) -> Result<Vec<Vec<f64>>, SeriesIoError> {
    let mut lines = r.lines();
    let first = lines.next().transpose()?.ok_or(SeriesIoError::Malformed {
        line: 1,
        msg: "empty file".into(),
    })?;
    let got: Vec<&str> = first.trim().split(',').map(str::trim).collect();
    if got != header {
        return Err(SeriesIoError::Malformed {
            line: 1,
            msg: format!("expected header {:?}", header.join(",")),
        });
    }
    let mut rows = Vec::new();
    let mut prev_t = f64::NEG_INFINITY;
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| SeriesIoError::Malformed {
                line: lineno,
                msg: e.to_string(),
            })?;
        if row.len() != header.len() {
            return Err(SeriesIoError::Malformed {
                line: lineno,
                msg: format!("expected {} columns, got {}", header.len(), row.len()),
            });
        }
        if !(row[0] > prev_t) {
            return Err(SeriesIoError::Malformed {
                line: lineno,
                msg: format!("t = {} does not increase", row[0]),
            });
        }
        prev_t = row[0];
        rows.push(row);
    }
    Ok(rows)
}

/// One header row plus one row per snapshot, 17 significant digits.
pub fn write_series_csv<W: Write>(series: &TimeSeries, w: W) -> std::io::Result<()> {
    write_rows(
        w,
        &DiagnosticsRecord::COLUMNS,
        series.records.iter().map(|r| r.to_row().to_vec()),
    )
}

/// Parses `series.csv`; `t` must strictly increase. The dimension is left
/// at 0 for the caller to fill in.
pub fn read_series_csv<R: BufRead>(r: R) -> Result<TimeSeries, SeriesIoError> {
    let records = read_rows(r, &DiagnosticsRecord::COLUMNS)?
        .into_iter()
        .map(|row| DiagnosticsRecord::from_row(row.try_into().expect("width checked")))
        .collect();
    Ok(TimeSeries {
        records,
        ..TimeSeries::default()
    })
}

pub fn write_ode_terms_csv<W: Write>(terms: &[OdeTerms], w: W) -> std::io::Result<()> {
    write_rows(
        w,
        &ODE_COLUMNS,
        terms.iter().map(|o| vec![o.t, o.dh_dt, o.d_int_h2_dt]),
    )
}

pub fn read_ode_terms_csv<R: BufRead>(r: R) -> Result<Vec<OdeTerms>, SeriesIoError> {
    Ok(read_rows(r, &ODE_COLUMNS)?
        .into_iter()
        .map(|row| OdeTerms {
            t: row[0],
            dh_dt: row[1],
            d_int_h2_dt: row[2],
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalSphere {
    pub center: [f64; 3],
    pub radius: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxResiduals {
    pub area: Option<f64>,
    pub h_ode: Option<f64>,
    #[serde(rename = "H2_ode")]
    pub h2_ode: Option<f64>,
}

/// Contents of `summary.json`. Quantities that cannot be computed (a window
/// with too few samples, no final mesh) are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub termination: Option<String>,
    pub fitted_rate: Option<f64>,
    #[serde(rename = "R2")]
    pub r2: Option<f64>,
    pub delta_paper: Option<f64>,
    pub final_sphere: Option<FinalSphere>,
    pub mean_convexity_onset: Option<f64>,
    pub max_residuals: MaxResiduals,
}

/// Builds the summary from a series, the final mesh and the termination
/// label. Pure function of its inputs, so re-analysis of written artifacts
/// reproduces it exactly.
pub fn summarize(series: &TimeSeries, final_mesh: Option<&TriMesh>, termination: Option<&str>) -> Summary {
    let fit = fit_exponential_rate(series, "int_traceless_sq", default_window(series)).ok();
    let residuals = identity_residuals(series);
    Summary {
        termination: termination.map(str::to_string),
        fitted_rate: fit.map(|f| f.rate),
        r2: fit.map(|f| f.r2),
        delta_paper: (!series.records.is_empty()).then(|| paper_decay_bound(series)),
        final_sphere: final_mesh
            .and_then(|m| best_fit_sphere(m).ok())
            .map(|s| FinalSphere {
                center: s.center,
                radius: s.radius,
                residual: s.residual,
            }),
        mean_convexity_onset: mean_convexity_onset(series),
        max_residuals: MaxResiduals {
            area: residuals.max_area(),
            h_ode: residuals.max_h(),
            h2_ode: residuals.max_h2(),
        },
    }
}
