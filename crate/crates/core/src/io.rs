//! JSON documents for HMM parameters, moments and learned models.
//!
//! Matrices are written row-major as lists of rows. Every float is written
//! with 17 significant digits so that a write/read cycle reproduces the
//! exact `f64`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::HmmParams;
use crate::learn::{ModelProvenance, PsrModel};
use crate::moments::{MomentStats, Provenance};

/// 17 significant digits in scientific notation, e.g. `2.5000000000000000e-1`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_vec(out: &mut String, v: impl IntoIterator<Item = f64>) {
    out.push('[');
    for (i, x) in v.into_iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&fmt_f64(x));
    }
    out.push(']');
}

fn write_matrix(out: &mut String, a: &DMatrix<f64>, indent: &str) {
    if a.nrows() == 0 {
        out.push_str("[]");
        return;
    }
    out.push_str("[\n");
    for (i, row) in a.row_iter().enumerate() {
        out.push_str(indent);
        out.push_str("  ");
        write_vec(out, row.iter().copied());
        if i + 1 < a.nrows() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str(indent);
    out.push(']');
}

fn matrix_from_rows(rows: &[Vec<f64>], nrows: usize, ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::ShapeMismatch(format!("{what} must be {nrows}x{ncols}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn vector_of_len(v: &[f64], len: usize, what: &str) -> Result<DVector<f64>> {
    if v.len() != len {
        return Err(Error::ShapeMismatch(format!(
            "{what} must have length {len}, got {}",
            v.len()
        )));
    }
    Ok(DVector::from_column_slice(v))
}

#[derive(Deserialize)]
struct HmmDoc {
    m: usize,
    n: usize,
    #[serde(rename = "T")]
    t: Vec<Vec<f64>>,
    #[serde(rename = "O")]
    o: Vec<Vec<f64>>,
    pi: Vec<f64>,
}

pub fn hmm_from_json(text: &str) -> Result<HmmParams> {
    let doc: HmmDoc = serde_json::from_str(text)?;
    let t = matrix_from_rows(&doc.t, doc.m, doc.m, "T")?;
    let o = matrix_from_rows(&doc.o, doc.n, doc.m, "O")?;
    let pi = vector_of_len(&doc.pi, doc.m, "pi")?;
    HmmParams::new(t, o, pi)
}

pub fn hmm_to_json(params: &HmmParams) -> String {
    let mut out = String::from("{\n");
    writeln!(out, "  \"m\": {},\n  \"n\": {},", params.m(), params.n()).unwrap();
    out.push_str("  \"T\": ");
    write_matrix(&mut out, params.transition(), "  ");
    out.push_str(",\n  \"O\": ");
    write_matrix(&mut out, params.emission(), "  ");
    out.push_str(",\n  \"pi\": ");
    write_vec(&mut out, params.initial().iter().copied());
    out.push_str("\n}\n");
    out
}

#[derive(Deserialize)]
struct MomentsDoc {
    n: usize,
    #[serde(rename = "P1")]
    p1: Vec<f64>,
    #[serde(rename = "P21")]
    p21: Vec<Vec<f64>>,
    #[serde(rename = "P3")]
    p3: Vec<Vec<Vec<f64>>>,
    provenance: Provenance,
}

/// Reads a moments document; sums must hold to `1e-9`.
pub fn moments_from_json(text: &str) -> Result<MomentStats> {
    let doc: MomentsDoc = serde_json::from_str(text)?;
    let n = doc.n;
    if doc.p3.len() != n {
        return Err(Error::ShapeMismatch(format!("P3 must hold {n} matrices")));
    }
    let stats = MomentStats {
        n,
        p1: vector_of_len(&doc.p1, n, "P1")?,
        p21: matrix_from_rows(&doc.p21, n, n, "P21")?,
        p3: doc
            .p3
            .iter()
            .map(|rows| matrix_from_rows(rows, n, n, "P3 entry"))
            .collect::<Result<_>>()?,
        provenance: doc.provenance,
    };
    stats.validate(1e-9)?;
    Ok(stats)
}

fn write_matrix_list(out: &mut String, mats: &[DMatrix<f64>]) {
    out.push_str("[\n");
    for (k, a) in mats.iter().enumerate() {
        out.push_str("    ");
        write_matrix(out, a, "    ");
        if k + 1 < mats.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("  ]");
}

pub fn moments_to_json(stats: &MomentStats) -> String {
    let mut out = String::from("{\n");
    writeln!(out, "  \"n\": {},", stats.n).unwrap();
    out.push_str("  \"P1\": ");
    write_vec(&mut out, stats.p1.iter().copied());
    out.push_str(",\n  \"P21\": ");
    write_matrix(&mut out, &stats.p21, "  ");
    out.push_str(",\n  \"P3\": ");
    write_matrix_list(&mut out, &stats.p3);
    writeln!(
        out,
        ",\n  \"provenance\": {}",
        serde_json::to_string(&stats.provenance).expect("provenance serializes")
    )
    .unwrap();
    out.push_str("}\n");
    out
}

#[derive(Deserialize, Serialize)]
struct ModelDoc {
    n: usize,
    m: usize,
    #[serde(rename = "U")]
    u: Vec<Vec<f64>>,
    b1: Vec<f64>,
    binf: Vec<f64>,
    #[serde(rename = "B")]
    ops: Vec<Vec<Vec<f64>>>,
    provenance: ModelProvenance,
    #[serde(default)]
    singular_values: Vec<f64>,
}

pub fn model_from_json(text: &str) -> Result<PsrModel> {
    let doc: ModelDoc = serde_json::from_str(text)?;
    let (n, m) = (doc.n, doc.m);
    if doc.ops.len() != n {
        return Err(Error::ShapeMismatch(format!("B must hold {n} matrices")));
    }
    PsrModel::new(
        matrix_from_rows(&doc.u, n, m, "U")?,
        vector_of_len(&doc.b1, m, "b1")?,
        vector_of_len(&doc.binf, m, "binf")?,
        doc.ops
            .iter()
            .map(|rows| matrix_from_rows(rows, m, m, "B entry"))
            .collect::<Result<_>>()?,
        doc.provenance,
        doc.singular_values,
    )
}

pub fn model_to_json(model: &PsrModel) -> String {
    let mut out = String::from("{\n");
    writeln!(out, "  \"n\": {},\n  \"m\": {},", model.n(), model.m()).unwrap();
    out.push_str("  \"U\": ");
    write_matrix(&mut out, &model.u, "  ");
    out.push_str(",\n  \"b1\": ");
    write_vec(&mut out, model.b1.iter().copied());
    out.push_str(",\n  \"binf\": ");
    write_vec(&mut out, model.binf.iter().copied());
    out.push_str(",\n  \"B\": ");
    write_matrix_list(&mut out, &model.ops);
    writeln!(
        out,
        ",\n  \"provenance\": {},",
        serde_json::to_string(&model.provenance).expect("provenance serializes")
    )
    .unwrap();
    out.push_str("  \"singular_values\": ");
    write_vec(&mut out, model.singular_values.iter().copied());
    out.push_str("\n}\n");
    out
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::exact_moments;
    use crate::learn::learn_psr;
    use crate::linalg::RankSpec;

    const COIN: &str = r#"{"m": 1, "n": 2, "T": [[1.0]], "O": [[0.5], [0.5]], "pi": [1.0]}"#;

    #[test]
    fn formats_seventeen_digits() {
        assert_eq!(fmt_f64(0.25), "2.5000000000000000e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn hmm_document() {
        let params = hmm_from_json(COIN).unwrap();
        assert_eq!((params.m(), params.n()), (1, 2));
        assert_eq!(hmm_from_json(&hmm_to_json(&params)).unwrap(), params);
    }

    #[test]
    fn hmm_document_errors() {
        let zero_pi = r#"{"m": 2, "n": 2, "T": [[1,0],[0,1]], "O": [[1,0],[0,1]], "pi": [1.0, 0.0]}"#;
        assert!(matches!(hmm_from_json(zero_pi), Err(Error::ZeroPriorEntry { .. })));
        let bad_shape = r#"{"m": 2, "n": 2, "T": [[1,0]], "O": [[1,0],[0,1]], "pi": [0.5, 0.5]}"#;
        assert!(matches!(hmm_from_json(bad_shape), Err(Error::ShapeMismatch(_))));
        assert!(matches!(hmm_from_json("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn moments_and_model_documents() {
        let params = hmm_from_json(COIN).unwrap();
        let mm = exact_moments(&params);
        assert_eq!(moments_from_json(&moments_to_json(&mm)).unwrap(), mm);
        let model = learn_psr(&mm, RankSpec::Explicit(1)).unwrap();
        let text = model_to_json(&model);
        assert_eq!(model_from_json(&text).unwrap(), model);
        assert!(text.contains("\"kind\":\"from_exact_moments\""));
    }
}
