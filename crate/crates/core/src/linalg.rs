//! Dense linear-algebra helpers: sorted SVD, thin basis extraction and a
//! Moore-Penrose pseudoinverse with a relative singular-value cutoff.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative threshold used by [`RankSpec::auto`].
pub const DEFAULT_AUTO_RANK_THRESHOLD: f64 = 1e-6;

/// Singular values below `cutoff * sigma_max` are treated as zero by [`pinv`].
pub const DEFAULT_PINV_CUTOFF: f64 = 1e-12;

/// How many singular directions to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RankSpec {
    Explicit(usize),
    /// Keep every direction with `sigma_k > threshold * sigma_1`.
    Auto(f64),
}

impl RankSpec {
    pub fn auto() -> Self {
        RankSpec::Auto(DEFAULT_AUTO_RANK_THRESHOLD)
    }
}

/// Singular value decomposition with singular values in non-increasing order.
#[derive(Debug, Clone)]
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v_t: DMatrix<f64>,
}

/// Thin SVD by one-sided Jacobi rotations, singular values non-increasing.
///
/// Columns of `u` belonging to numerically-zero singular values are replaced
/// by an orthonormal completion, so `u` always has orthonormal columns.
pub fn sorted_svd(a: &DMatrix<f64>) -> Result<SortedSvd> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix passed to SVD"));
    }
    if a.nrows() < a.ncols() {
        let t = sorted_svd(&a.transpose())?;
        return Ok(SortedSvd {
            u: t.v_t.transpose(),
            singular_values: t.singular_values,
            v_t: t.u.transpose(),
        });
    }
    let (rows, cols) = a.shape();
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    const MAX_SWEEPS: usize = 100;
    let mut converged = cols < 2;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..rows {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                for i in 0..rows {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * x - s * y;
                    w[(i, q)] = s * x + c * y;
                }
                for i in 0..cols {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonFinite("SVD did not converge"));
    }

    let norms: Vec<f64> = w.column_iter().map(|c| c.norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let singular_values: Vec<f64> = order.iter().map(|&j| norms[j]).collect();

    let floor = singular_values[0] * rows as f64 * f64::EPSILON;
    let mut u = DMatrix::<f64>::zeros(rows, cols);
    let mut filled = 0;
    for (k, &j) in order.iter().enumerate() {
        if singular_values[k] > floor && singular_values[k] > 0.0 {
            u.set_column(k, &(w.column(j) / singular_values[k]));
            filled = k + 1;
        } else {
            break;
        }
    }
    complete_orthonormal(&mut u, filled);
    let v_t = DMatrix::from_fn(cols, cols, |r, c| v[(c, order[r])]);
    Ok(SortedSvd {
        u,
        singular_values,
        v_t,
    })
}

/// Fill columns `filled..` of `u` with unit vectors orthogonal to everything
/// before them, drawn from the standard basis by largest residual.
fn complete_orthonormal(u: &mut DMatrix<f64>, filled: usize) {
    let rows = u.nrows();
    for k in filled..u.ncols() {
        let mut best: Option<DVector<f64>> = None;
        let mut best_norm = -1.0;
        for e in 0..rows {
            let mut cand = DVector::<f64>::zeros(rows);
            cand[e] = 1.0;
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                for j in 0..k {
                    let proj = u.column(j).dot(&cand);
                    cand.axpy(-proj, &u.column(j), 1.0);
                }
            }
            let nrm = cand.norm();
            if nrm > best_norm {
                best_norm = nrm;
                best = Some(cand);
            }
        }
        let cand = best.expect("rows >= cols");
        u.set_column(k, &(cand / best_norm));
    }
}

/// Flip each column so that its largest-magnitude entry is positive. On ties
/// the first index wins.
pub fn canonicalize_signs(u: &mut DMatrix<f64>) {
    for mut col in u.column_iter_mut() {
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if !col.is_empty() && col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Raised when an explicit rank reaches into the numerically-zero part of the
/// spectrum. Learning still proceeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankWarning {
    pub requested: usize,
    pub numerical_rank: usize,
}

impl std::fmt::Display for RankWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "requested rank {} exceeds numerical rank {}",
            self.requested, self.numerical_rank
        )
    }
}

/// Top left singular vectors of a moment matrix together with its full spectrum.
#[derive(Debug, Clone)]
pub struct SvdBasis {
    /// n x m, orthonormal columns, sign-canonicalized.
    pub u: DMatrix<f64>,
    /// All singular values, non-increasing.
    pub singular_values: Vec<f64>,
    pub warning: Option<RankWarning>,
}

impl SvdBasis {
    pub fn rank(&self) -> usize {
        self.u.ncols()
    }
}

fn numerical_rank(singular_values: &[f64], threshold: f64) -> usize {
    let top = singular_values.first().copied().unwrap_or(0.0);
    singular_values.iter().take_while(|&&s| s > threshold * top).count()
}

/// Thin SVD basis of a square moment matrix.
pub fn thin_svd_basis(p21: &DMatrix<f64>, rank: RankSpec) -> Result<SvdBasis> {
    let n = p21.nrows();
    if n != p21.ncols() || n == 0 {
        return Err(Error::ShapeMismatch(format!(
            "moment matrix must be square and non-empty, got {}x{}",
            p21.nrows(),
            p21.ncols()
        )));
    }
    if p21.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroMatrix);
    }
    let svd = sorted_svd(p21)?;
    if svd.singular_values[0] <= 0.0 {
        return Err(Error::ZeroMatrix);
    }

    let (m, warning) = match rank {
        RankSpec::Explicit(m) => {
            if m == 0 || m > n {
                return Err(Error::InvalidRank { requested: m, dim: n });
            }
            let numerical = numerical_rank(&svd.singular_values, DEFAULT_AUTO_RANK_THRESHOLD);
            let warning = (numerical < m).then_some(RankWarning {
                requested: m,
                numerical_rank: numerical,
            });
            (m, warning)
        }
        RankSpec::Auto(threshold) => {
            if !(threshold.is_finite() && threshold >= 0.0) {
                return Err(Error::Parse(format!("invalid auto-rank threshold {threshold}")));
            }
            (numerical_rank(&svd.singular_values, threshold).max(1), None)
        }
    };

    let mut u = svd.u.columns(0, m).into_owned();
    canonicalize_signs(&mut u);
    Ok(SvdBasis {
        u,
        singular_values: svd.singular_values,
        warning,
    })
}

/// Moore-Penrose pseudoinverse plus the number of singular values kept.
#[derive(Debug, Clone)]
pub struct Pinv {
    pub matrix: DMatrix<f64>,
    pub kept: usize,
    pub singular_values: Vec<f64>,
}

/// Pseudoinverse by SVD, dropping singular values `<= cutoff * sigma_max`.
pub fn pinv(a: &DMatrix<f64>, cutoff: f64) -> Result<Pinv> {
    let svd = sorted_svd(a)?;
    let top = svd.singular_values.first().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return Err(Error::PinvDegenerate);
    }
    let threshold = cutoff * top;
    let kept = svd.singular_values.iter().take_while(|&&s| s > threshold).count();
    if kept == 0 {
        return Err(Error::PinvDegenerate);
    }
    // V_k diag(1/s) U_k^T
    let v_k = svd.v_t.rows(0, kept).transpose();
    let mut scaled = v_k;
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col /= svd.singular_values[j];
    }
    let matrix = scaled * svd.u.columns(0, kept).transpose();
    Ok(Pinv {
        matrix,
        kept,
        singular_values: svd.singular_values,
    })
}

/// `||(I - U U^T) A||_F` for a basis `U` with orthonormal columns.
pub fn projection_residual(u: &DMatrix<f64>, a: &DMatrix<f64>) -> f64 {
    let projected = u * (u.transpose() * a);
    (a - projected).norm()
}

/// `||U^T U - I||_max`.
pub fn orthonormality_defect(u: &DMatrix<f64>) -> f64 {
    let gram = u.transpose() * u;
    let eye = DMatrix::<f64>::identity(gram.nrows(), gram.ncols());
    (gram - eye).amax()
}

pub fn ones(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0)
}
