//! Learning a predictive-state representation from moments, and the analytic
//! construction of the same representation from known HMM parameters.
//!
//! With a basis `U` of the observation-prediction subspace:
//!
//! ```text
//! b1   = U^T P1
//! binf = U^T 1
//! B_x  = U^T P3x1 (U^T P21)^+
//! ```
//!
//! For exact moments `B_x` equals `(U^T O) T diag(O_x) (U^T O)^-1`, which is
//! what [`psr_from_hmm`] computes directly.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::HmmParams;
use crate::linalg::{
    ones, orthonormality_defect, pinv, projection_residual, thin_svd_basis, RankSpec, RankWarning, DEFAULT_PINV_CUTOFF,
};
use crate::moments::{EstimationMode, MomentStats, Provenance};

/// Where a model came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelProvenance {
    FromExactMoments,
    FromEmpiricalMoments {
        mode: EstimationMode,
        firsts: u64,
        pairs: u64,
        triples: u64,
    },
    AnalyticFromHmm,
}

impl From<Provenance> for ModelProvenance {
    fn from(p: Provenance) -> Self {
        match p {
            Provenance::Exact => ModelProvenance::FromExactMoments,
            Provenance::Empirical {
                mode,
                firsts,
                pairs,
                triples,
            } => ModelProvenance::FromEmpiricalMoments {
                mode,
                firsts,
                pairs,
                triples,
            },
        }
    }
}

/// A learned (or analytically constructed) observable-operator model.
#[derive(Debug, Clone, PartialEq)]
pub struct PsrModel {
    /// n x m basis with orthonormal columns.
    pub u: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub binf: DVector<f64>,
    /// One m x m operator per symbol.
    pub ops: Vec<DMatrix<f64>>,
    pub provenance: ModelProvenance,
    /// Spectrum of the pair-moment matrix the basis came from (empty for
    /// analytic models).
    pub singular_values: Vec<f64>,
}

impl PsrModel {
    /// Checked constructor; verifies shapes and finiteness only.
    pub fn new(
        u: DMatrix<f64>,
        b1: DVector<f64>,
        binf: DVector<f64>,
        ops: Vec<DMatrix<f64>>,
        provenance: ModelProvenance,
        singular_values: Vec<f64>,
    ) -> Result<Self> {
        let (n, m) = u.shape();
        if n == 0 || m == 0 || m > n {
            return Err(Error::ShapeMismatch(format!(
                "U must be n x m with 1 <= m <= n, got {n}x{m}"
            )));
        }
        if b1.len() != m || binf.len() != m {
            return Err(Error::ShapeMismatch(format!("b1 and binf must have length m = {m}")));
        }
        if ops.len() != n || ops.iter().any(|b| b.shape() != (m, m)) {
            return Err(Error::ShapeMismatch(format!("need n = {n} operators of shape {m}x{m}")));
        }
        let finite = u
            .iter()
            .chain(b1.iter())
            .chain(binf.iter())
            .chain(ops.iter().flat_map(|b| b.iter()))
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("model parameters"));
        }
        Ok(PsrModel {
            u,
            b1,
            binf,
            ops,
            provenance,
            singular_values,
        })
    }

    /// Alphabet size.
    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    /// Representation dimension.
    pub fn m(&self) -> usize {
        self.u.ncols()
    }

    pub fn op(&self, x: usize) -> &DMatrix<f64> {
        &self.ops[x]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnOptions {
    /// Relative singular-value cutoff for `(U^T P21)^+`.
    pub pinv_cutoff: f64,
}

impl Default for LearnOptions {
    fn default() -> Self {
        LearnOptions {
            pinv_cutoff: DEFAULT_PINV_CUTOFF,
        }
    }
}

/// A model plus what went on while fitting it.
#[derive(Debug, Clone)]
pub struct Learned {
    pub model: PsrModel,
    pub rank_warning: Option<RankWarning>,
    /// Singular values of `U^T P21` that survived the cutoff.
    pub pinv_kept: usize,
}

impl Learned {
    /// True when the basis or the pseudoinverse had to drop directions.
    pub fn is_degenerate(&self) -> bool {
        self.rank_warning.is_some() || self.pinv_kept < self.model.m()
    }
}

pub fn learn_psr(moments: &MomentStats, rank: RankSpec) -> Result<PsrModel> {
    learn_psr_detailed(moments, rank, &LearnOptions::default()).map(|l| l.model)
}

pub fn learn_psr_detailed(moments: &MomentStats, rank: RankSpec, opts: &LearnOptions) -> Result<Learned> {
    let basis = thin_svd_basis(&moments.p21, rank)?;
    let mut learned = learn_with_basis(moments, basis.u, opts)?;
    learned.model.singular_values = basis.singular_values;
    learned.rank_warning = basis.warning;
    Ok(learned)
}

/// Runs the estimator with a caller-supplied basis instead of the SVD one.
pub fn learn_psr_with_basis(moments: &MomentStats, u: &DMatrix<f64>) -> Result<PsrModel> {
    learn_with_basis(moments, u.clone(), &LearnOptions::default()).map(|l| l.model)
}

fn learn_with_basis(moments: &MomentStats, u: DMatrix<f64>, opts: &LearnOptions) -> Result<Learned> {
    let n = moments.n;
    if u.nrows() != n || u.ncols() == 0 || u.ncols() > n {
        return Err(Error::ShapeMismatch(format!(
            "basis is {}x{}, moments have n = {n}",
            u.nrows(),
            u.ncols()
        )));
    }
    let ut = u.transpose();
    let b1 = &ut * &moments.p1;
    let binf = &ut * ones(n);
    let projected_pairs = &ut * &moments.p21;
    let inv = pinv(&projected_pairs, opts.pinv_cutoff)?;
    let ops = moments.p3.par_iter().map(|p3x| &ut * p3x * &inv.matrix).collect();
    let model = PsrModel::new(u, b1, binf, ops, moments.provenance.into(), Vec::new())?;
    Ok(Learned {
        model,
        rank_warning: None,
        pinv_kept: inv.kept,
    })
}

/// Residual tolerance for `range(U) = range(O)` in [`psr_from_hmm`].
pub const BASIS_RESIDUAL_TOL: f64 = 1e-8;

/// Builds the representation straight from `(T, O, pi)`:
/// `b1 = U^T O pi`, `binf = U^T 1`, `B_x = (U^T O) T diag(O_x) (U^T O)^-1`.
pub fn psr_from_hmm(params: &HmmParams, u: &DMatrix<f64>) -> Result<PsrModel> {
    let (n, m) = (params.n(), params.m());
    if u.shape() != (n, m) {
        return Err(Error::ShapeMismatch(format!(
            "basis must be {n}x{m}, got {}x{}",
            u.nrows(),
            u.ncols()
        )));
    }
    let defect = orthonormality_defect(u);
    if defect > BASIS_RESIDUAL_TOL {
        return Err(Error::BasisMismatch { residual: defect });
    }
    let residual = projection_residual(u, params.emission());
    if residual > BASIS_RESIDUAL_TOL {
        return Err(Error::BasisMismatch { residual });
    }

    let ut = u.transpose();
    let uo = &ut * params.emission();
    let svd = crate::linalg::sorted_svd(&uo)?;
    let top = svd.singular_values[0];
    if !(svd.singular_values[m - 1] > 1e-10 * top) {
        return Err(Error::SingularUO);
    }
    let uo_inv = uo.clone().try_inverse().ok_or(Error::SingularUO)?;

    let b1 = &uo * params.initial();
    let binf = &ut * ones(n);
    let ops = (0..n).map(|x| &uo * params.observation_operator(x) * &uo_inv).collect();
    PsrModel::new(u.clone(), b1, binf, ops, ModelProvenance::AnalyticFromHmm, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::exact_moments;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn coin() -> HmmParams {
        HmmParams::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(2, 1, 0.5),
            DVector::from_element(1, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn coin_model_by_hand() {
        let model = learn_psr(&exact_moments(&coin()), RankSpec::Explicit(1)).unwrap();
        assert!((model.b1[0] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((model.binf[0] - SQRT_2).abs() < 1e-15);
        for x in 0..2 {
            assert!((model.op(x)[(0, 0)] - 0.5).abs() < 1e-15);
        }
        assert!((model.binf[0] * model.op(0)[(0, 0)] * model.b1[0] - 0.5).abs() < 1e-15);
        assert_eq!(model.provenance, ModelProvenance::FromExactMoments);
        assert_eq!(model.singular_values.len(), 2);
    }

    #[test]
    fn coin_analytic_matches_learned() {
        let u = DMatrix::from_element(2, 1, FRAC_1_SQRT_2);
        let a = psr_from_hmm(&coin(), &u).unwrap();
        let l = learn_psr_with_basis(&exact_moments(&coin()), &u).unwrap();
        assert!((&a.b1 - &l.b1).amax() < 1e-12);
        assert!((&a.binf - &l.binf).amax() < 1e-12);
        for x in 0..2 {
            assert!((a.op(x) - l.op(x)).amax() < 1e-12);
        }
        assert_eq!(a.provenance, ModelProvenance::AnalyticFromHmm);
    }

    #[test]
    fn identity_analytic() {
        let m = 3;
        let params = HmmParams::new(
            DMatrix::identity(m, m),
            DMatrix::identity(m, m),
            DVector::from_element(m, 1.0 / 3.0),
        )
        .unwrap();
        let model = psr_from_hmm(&params, &DMatrix::identity(m, m)).unwrap();
        assert_eq!(model.b1, *params.initial());
        assert_eq!(model.binf, DVector::from_element(m, 1.0));
        for x in 0..m {
            let mut e = DMatrix::zeros(m, m);
            e[(x, x)] = 1.0;
            assert_eq!(model.ops[x], e);
        }
    }

    #[test]
    fn wrong_basis_rejected() {
        let params = HmmParams::new(
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.5, 0.0, 0.5]),
            DVector::from_element(2, 0.5),
        )
        .unwrap();
        let u = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(psr_from_hmm(&params, &u), Err(Error::BasisMismatch { .. })));
        let not_orthonormal = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        assert!(matches!(
            psr_from_hmm(&params, &not_orthonormal),
            Err(Error::BasisMismatch { .. })
        ));
    }

    #[test]
    fn degenerate_moments_flagged() {
        // one symbol never observed: its operator is zero
        let mut mm = exact_moments(&coin());
        mm.n = 3;
        mm.p1 = DVector::from_vec(vec![0.5, 0.5, 0.0]);
        mm.p21 = DMatrix::from_fn(3, 3, |i, j| if i < 2 && j < 2 { 0.25 } else { 0.0 });
        mm.p3 = (0..3)
            .map(|x| DMatrix::from_fn(3, 3, |i, j| if x < 2 && i < 2 && j < 2 { 0.125 } else { 0.0 }))
            .collect();
        let learned = learn_psr_detailed(&mm, RankSpec::Explicit(1), &LearnOptions::default()).unwrap();
        assert_eq!(learned.model.op(2)[(0, 0)], 0.0);
        assert!(!learned.is_degenerate());
        let learned = learn_psr_detailed(&mm, RankSpec::Explicit(2), &LearnOptions::default()).unwrap();
        assert!(learned.is_degenerate());
    }
}
