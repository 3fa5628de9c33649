//! Plain-text output: headerless CSV matrices and JSON diagnostics.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Serialize, Serializer};

use crate::error::{Result, TopicError};
use crate::estimator::TopicEstimate;

/// Scientific notation with 17 significant digits, enough to round-trip.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(m.len() * 24);
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|&x| format_f64(x)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut data = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| TopicError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        match ncols {
            None => ncols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(TopicError::Parse {
                    line: i + 1,
                    message: format!("expected {c} fields, found {}", row.len()),
                })
            }
            _ => {}
        }
        data.extend(row);
        nrows += 1;
    }
    Ok(DMatrix::from_row_slice(nrows, ncols.unwrap_or(0), &data))
}

fn io_err(path: &Path, source: std::io::Error) -> TopicError {
    TopicError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_text(path, &matrix_to_csv(m))
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_matrix_csv(&text)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| TopicError::InvalidArgument(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}

/// `index,singular_value` with 1-based indices.
pub fn scree_csv(singular_values: &[f64]) -> String {
    let mut out = String::from("index,singular_value\n");
    for (i, s) in singular_values.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, format_f64(*s)));
    }
    out
}

fn threshold_value<S: Serializer>(t: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if t.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*t)
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub wall_time_ms: f64,
}

/// Summary of every stage of a fit, as written to `diagnostics.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub k: usize,
    pub p: usize,
    pub singular_values: Vec<f64>,
    #[serde(serialize_with = "threshold_value")]
    pub threshold: f64,
    pub degenerate_rows: Vec<usize>,
    pub zero_rows: Vec<usize>,
    pub clusters: usize,
    pub kmeans_inertia: Option<f64>,
    pub kmeans_converged: Option<bool>,
    pub centers: Vec<Vec<f64>>,
    pub vertices: Vec<Vec<f64>>,
    pub selected_indices: Vec<usize>,
    pub max_residual: Option<f64>,
    pub fallback_used: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl Diagnostics {
    pub fn from_estimate(est: &TopicEstimate, threshold: f64, timing: Option<Timing>) -> Self {
        Self {
            k: est.k(),
            p: est.a_hat.nrows(),
            singular_values: est
                .spectral
                .as_ref()
                .map(|s| s.singular_values.clone())
                .unwrap_or_default(),
            threshold,
            degenerate_rows: est
                .ratio
                .as_ref()
                .map(|r| r.degenerate_rows.iter().map(|&i| est.kept_rows[i]).collect())
                .unwrap_or_default(),
            zero_rows: est.zero_rows.clone(),
            clusters: est.clusters_used,
            kmeans_inertia: est.kmeans.as_ref().map(|k| k.inertia),
            kmeans_converged: est.kmeans.as_ref().map(|k| k.converged),
            centers: est.kmeans.as_ref().map(|k| rows_of(&k.centers)).unwrap_or_default(),
            vertices: est.vh.as_ref().map(|v| rows_of(&v.vertices)).unwrap_or_default(),
            selected_indices: est
                .vh
                .as_ref()
                .map(|v| v.selected_indices.clone())
                .unwrap_or_default(),
            max_residual: est.vh.as_ref().map(|v| v.max_residual),
            fallback_used: est.vh.as_ref().is_some_and(|v| v.fallback_used),
            timing,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let m = DMatrix::from_row_slice(2, 3, &[0.1, 1.0 / 3.0, -2.5e-300, 0.0, 1e300, f64::MIN_POSITIVE]);
        let back = parse_matrix_csv(&matrix_to_csv(&m)).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn ragged_csv_is_rejected() {
        assert!(matches!(
            parse_matrix_csv("1,2\n3\n"),
            Err(TopicError::Parse { line: 2, .. })
        ));
        assert!(parse_matrix_csv("1,x\n").is_err());
    }

    #[test]
    fn scree_format() {
        assert_eq!(
            scree_csv(&[2.0, 0.5]),
            "index,singular_value\n1,2.0000000000000000e0\n2,5.0000000000000000e-1\n"
        );
    }
}
