//! File formats: matrix CSV (comma-separated rows, no header), matrix JSON
//! (`{"rows", "cols", "data"}` with row-major data), and the persisted
//! regression model.
//!
//! Floats are written with Rust's shortest round-trip formatting, so values
//! survive a write/read cycle exactly.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::RegressionModel;
use crate::graph::SpectralPolynomial;

pub fn matrix_to_csv(m: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str, source: &str) -> Result<Array2<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in trimmed.split(',') {
            let v: f64 = field.trim().parse().map_err(|e| Error::Parse {
                path: source.to_string(),
                line: line_no + 1,
                message: format!("bad float {field:?}: {e}"),
            })?;
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    path: source.to_string(),
                    line: line_no + 1,
                    message: format!("ragged row: {} fields, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: source.to_string(),
            line: 0,
            message: "no rows".to_string(),
        });
    }
    let n_rows = rows.len();
    let n_cols = rows[0].len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((n_rows, n_cols), flat).map_err(|e| Error::Parse {
        path: source.to_string(),
        line: 0,
        message: e.to_string(),
    })
}

pub fn write_matrix_csv(path: &Path, m: &Array2<f64>) -> Result<()> {
    fs::write(path, matrix_to_csv(m))?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path)?;
    matrix_from_csv(&text, &path.display().to_string())
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    /// Row-major flat data.
    data: Vec<f64>,
}

pub fn matrix_to_json(m: &Array2<f64>) -> String {
    let payload = MatrixJson {
        rows: m.nrows(),
        cols: m.ncols(),
        data: m.iter().copied().collect(),
    };
    serde_json::to_string(&payload).expect("matrix serialization cannot fail")
}

pub fn matrix_from_json(text: &str) -> Result<Array2<f64>> {
    let payload: MatrixJson = serde_json::from_str(text)?;
    if payload.data.len() != payload.rows * payload.cols {
        return Err(Error::InvalidConfig(format!(
            "matrix JSON claims {}x{} but carries {} values",
            payload.rows,
            payload.cols,
            payload.data.len()
        )));
    }
    Array2::from_shape_vec((payload.rows, payload.cols), payload.data)
        .map_err(|e| Error::InvalidConfig(e.to_string()))
}

pub fn write_matrix_json(path: &Path, m: &Array2<f64>) -> Result<()> {
    fs::write(path, matrix_to_json(m))?;
    Ok(())
}

pub fn read_matrix_json(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path)?;
    matrix_from_json(&text)
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelJson {
    k: usize,
    w: Vec<f64>,
    sigma: f64,
    alpha: f64,
    beta: f64,
    h: [f64; 3],
    format_version: u32,
}

pub fn model_to_json(model: &RegressionModel) -> String {
    let payload = ModelJson {
        k: model.w.len(),
        w: model.w.to_vec(),
        sigma: model.sigma,
        alpha: model.alpha,
        beta: model.beta,
        h: model.h.coeffs(),
        format_version: MODEL_FORMAT_VERSION,
    };
    serde_json::to_string_pretty(&payload).expect("model serialization cannot fail")
}

pub fn model_from_json(text: &str) -> Result<RegressionModel> {
    let payload: ModelJson = serde_json::from_str(text)?;
    if payload.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::ModelVersion(payload.format_version));
    }
    if payload.w.len() != payload.k {
        return Err(Error::InvalidConfig(format!(
            "model JSON claims k = {} but w has {} entries",
            payload.k,
            payload.w.len()
        )));
    }
    RegressionModel::new(
        Array1::from_vec(payload.w),
        payload.sigma,
        SpectralPolynomial::from_coeffs(&payload.h)?,
        payload.alpha,
        payload.beta,
    )
}

pub fn write_model(path: &Path, model: &RegressionModel) -> Result<()> {
    fs::write(path, model_to_json(model))?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<RegressionModel> {
    let text = fs::read_to_string(path)?;
    model_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn csv_round_trip_preserves_values() {
        let m = array![
            [0.1234567890123456, -1e-15, 3.0],
            [1.0 / 3.0, 2.0f64.sqrt(), 0.0]
        ];
        let text = matrix_to_csv(&m);
        let back = matrix_from_csv(&text, "mem").unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        let err = matrix_from_csv("1,2\n3\n", "mem").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn json_round_trip_preserves_values() {
        let m = array![[1.0, 2.5e-13], [0.0, -7.25]];
        let back = matrix_from_json(&matrix_to_json(&m)).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn json_rejects_inconsistent_shape() {
        let err = matrix_from_json(r#"{"rows":2,"cols":2,"data":[1.0,2.0,3.0]}"#).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn model_round_trip() {
        let model = RegressionModel::new(
            array![0.25, -0.5, 1.0 / 3.0],
            0.017,
            SpectralPolynomial::new(0.0, 1.0, 0.0),
            0.01,
            1.0,
        )
        .unwrap();
        let text = model_to_json(&model);
        let back = model_from_json(&text).unwrap();
        assert_eq!(model.w, back.w);
        assert_eq!(model.sigma, back.sigma);
        assert_eq!(model.h, back.h);
        assert_eq!(model.alpha, back.alpha);
        assert_eq!(model.beta, back.beta);
    }

    #[test]
    fn model_rejects_unknown_version() {
        let text = r#"{"k":1,"w":[1.0],"sigma":0.1,"alpha":0.0,"beta":0.0,"h":[0.0,1.0,0.0],"format_version":2}"#;
        assert!(matches!(model_from_json(text), Err(Error::ModelVersion(2))));
    }
}
