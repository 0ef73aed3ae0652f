//! Recursive inference with a [`PsrModel`]: sequence probabilities,
//! next-symbol prediction and the normalized belief update.
//!
//! Beliefs are kept scaled so that `binf . b = 1`; the logs of the per-step
//! normalizers accumulate in [`BeliefState::log_scale`], which is therefore
//! the log-probability of everything observed so far.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::learn::PsrModel;

/// Normalizers at or below this value invalidate the state.
pub const ALPHA_MIN: f64 = 1e-300;

/// Longest sequence accepted by [`sequence_prob_direct`].
pub const DIRECT_PRODUCT_MAX_LEN: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    pub b: DVector<f64>,
    /// Sum of the logs of every normalizer applied so far.
    pub log_scale: f64,
    /// Number of updates applied since initialization.
    pub t: usize,
    pub valid: bool,
    /// 1-based index of the update whose normalizer fell below [`ALPHA_MIN`].
    pub failed_at: Option<usize>,
}

pub fn init_belief(model: &PsrModel) -> Result<BeliefState> {
    let norm = model.binf.dot(&model.b1);
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidInit { normalizer: norm });
    }
    Ok(BeliefState {
        b: &model.b1 / norm,
        log_scale: norm.ln(),
        t: 0,
        valid: true,
        failed_at: None,
    })
}

/// Next-symbol prediction in raw and clamped form.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// `binf . B_x b` for every `x`; may dip below zero for learned models.
    pub raw: DVector<f64>,
    /// `raw` clipped at zero and renormalized (uniform if nothing survives).
    pub clamped: DVector<f64>,
}

impl Prediction {
    pub fn raw_sum(&self) -> f64 {
        self.raw.sum()
    }
}

/// Clip at zero and renormalize; uniform when the clipped mass vanishes.
pub fn clamp_distribution(raw: &DVector<f64>) -> DVector<f64> {
    let clipped = raw.map(|v| if v > 0.0 && v.is_finite() { v } else { 0.0 });
    let total = clipped.sum();
    if total > 0.0 && total.is_finite() {
        clipped / total
    } else {
        DVector::from_element(raw.len(), 1.0 / raw.len() as f64)
    }
}

fn ensure_valid(state: &BeliefState) -> Result<()> {
    if state.valid {
        Ok(())
    } else {
        Err(Error::InvalidState {
            step: state.failed_at.unwrap_or(state.t),
        })
    }
}

pub fn predict_next_distribution(model: &PsrModel, state: &BeliefState) -> Result<Prediction> {
    ensure_valid(state)?;
    let raw = DVector::from_iterator(model.n(), model.ops.iter().map(|op| model.binf.dot(&(op * &state.b))));
    let clamped = clamp_distribution(&raw);
    Ok(Prediction { raw, clamped })
}

/// Result of one update: the new state and the normalizer that was applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    pub state: BeliefState,
    pub alpha: f64,
}

/// Observe `x` (0-based). Failure is carried in the returned state; only an
/// out-of-range symbol is an error.
pub fn belief_update(model: &PsrModel, state: &BeliefState, x: usize) -> Result<Update> {
    if x >= model.n() {
        return Err(Error::SymbolOutOfRange {
            symbol: x + 1,
            n: model.n(),
        });
    }
    let t = state.t + 1;
    if !state.valid {
        return Ok(Update {
            state: BeliefState { t, ..state.clone() },
            alpha: 0.0,
        });
    }
    let next = model.op(x) * &state.b;
    let alpha = model.binf.dot(&next);
    if alpha > ALPHA_MIN && alpha.is_finite() {
        Ok(Update {
            state: BeliefState {
                b: next / alpha,
                log_scale: state.log_scale + alpha.ln(),
                t,
                valid: true,
                failed_at: None,
            },
            alpha,
        })
    } else {
        Ok(Update {
            state: BeliefState {
                b: state.b.clone(),
                log_scale: f64::NEG_INFINITY,
                t,
                valid: false,
                failed_at: Some(t),
            },
            alpha: if alpha.is_finite() { alpha } else { 0.0 },
        })
    }
}

/// `log Pr[x_{1:t}]` through the normalized recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceScore {
    /// `-inf` whenever `valid` is false.
    pub log_prob: f64,
    pub valid: bool,
}

pub fn sequence_logprob(model: &PsrModel, seq: &[usize]) -> Result<SequenceScore> {
    if let Some(&bad) = seq.iter().find(|&&x| x >= model.n()) {
        return Err(Error::SymbolOutOfRange {
            symbol: bad + 1,
            n: model.n(),
        });
    }
    let mut state = match init_belief(model) {
        Ok(s) => s,
        Err(Error::InvalidInit { .. }) => {
            return Ok(SequenceScore {
                log_prob: f64::NEG_INFINITY,
                valid: false,
            })
        }
        Err(e) => return Err(e),
    };
    for &x in seq {
        state = belief_update(model, &state, x)?.state;
        if !state.valid {
            break;
        }
    }
    Ok(SequenceScore {
        log_prob: if state.valid {
            state.log_scale
        } else {
            f64::NEG_INFINITY
        },
        valid: state.valid,
    })
}

/// `binf^T B_{x_t} ... B_{x_1} b1` evaluated without normalization.
pub fn sequence_prob_direct(model: &PsrModel, seq: &[usize]) -> Result<f64> {
    if seq.len() > DIRECT_PRODUCT_MAX_LEN {
        return Err(Error::SequenceTooLong {
            len: seq.len(),
            limit: DIRECT_PRODUCT_MAX_LEN,
        });
    }
    let mut v = model.b1.clone();
    for &x in seq {
        if x >= model.n() {
            return Err(Error::SymbolOutOfRange {
                symbol: x + 1,
                n: model.n(),
            });
        }
        v = model.op(x) * v;
    }
    Ok(model.binf.dot(&v))
}

/// `U b`: the predicted next-observation distribution in the standard basis.
pub fn predicted_observation_vector(model: &PsrModel, state: &BeliefState) -> Result<DVector<f64>> {
    ensure_valid(state)?;
    Ok(&model.u * &state.b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::{exact_moments, HmmParams};
    use crate::learn::{learn_psr, psr_from_hmm};
    use crate::linalg::RankSpec;
    use nalgebra::DMatrix;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn coin_model() -> PsrModel {
        let params = HmmParams::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(2, 1, 0.5),
            DVector::from_element(1, 1.0),
        )
        .unwrap();
        learn_psr(&exact_moments(&params), RankSpec::Explicit(1)).unwrap()
    }

    fn identity_model(m: usize) -> PsrModel {
        let params = HmmParams::new(
            DMatrix::identity(m, m),
            DMatrix::identity(m, m),
            DVector::from_element(m, 1.0 / m as f64),
        )
        .unwrap();
        psr_from_hmm(&params, &DMatrix::identity(m, m)).unwrap()
    }

    #[test]
    fn coin_init_and_predict() {
        let model = coin_model();
        let s = init_belief(&model).unwrap();
        assert!((s.b[0] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(s.log_scale.abs() < 1e-15);
        let p = predict_next_distribution(&model, &s).unwrap();
        assert!((p.raw[0] - 0.5).abs() < 1e-15 && (p.raw[1] - 0.5).abs() < 1e-15);
        assert!((&p.raw - &p.clamped).amax() < 1e-15);
        let ub = predicted_observation_vector(&model, &s).unwrap();
        assert!((ub[0] - 0.5).abs() < 1e-15 && (ub[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn coin_update() {
        let model = coin_model();
        let s = init_belief(&model).unwrap();
        let u = belief_update(&model, &s, 0).unwrap();
        assert!((u.state.b[0] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((u.state.log_scale - 0.5f64.ln()).abs() < 1e-15);
        assert!((u.alpha - 0.5).abs() < 1e-15);
        assert_eq!(u.state.t, 1);
        let score = sequence_logprob(&model, &[0, 1, 1]).unwrap();
        assert!(score.valid);
        assert!((score.log_prob - 0.125f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn identity_model_collapses_and_fails() {
        let model = identity_model(3);
        let s = init_belief(&model).unwrap();
        assert!((s.b.sum() - 1.0).abs() < 1e-15);
        let p = predict_next_distribution(&model, &s).unwrap();
        assert!((p.raw - DVector::from_element(3, 1.0 / 3.0)).amax() < 1e-15);

        let u = belief_update(&model, &s, 1).unwrap();
        assert_eq!(u.state.b, DVector::from_vec(vec![0.0, 1.0, 0.0]));
        assert!((u.state.log_scale - (1.0f64 / 3.0).ln()).abs() < 1e-15);
        assert_eq!(
            predicted_observation_vector(&model, &u.state).unwrap(),
            DVector::from_vec(vec![0.0, 1.0, 0.0])
        );

        let f = belief_update(&model, &u.state, 2).unwrap();
        assert_eq!(f.alpha, 0.0);
        assert!(!f.state.valid);
        assert_eq!(f.state.failed_at, Some(2));
        assert!(!f.state.log_scale.is_nan());
        assert!(matches!(
            predict_next_distribution(&model, &f.state),
            Err(Error::InvalidState { step: 2 })
        ));
        let again = belief_update(&model, &f.state, 0).unwrap();
        assert_eq!(again.state.t, 3);
        assert!(!again.state.valid);
        assert!(!again.alpha.is_nan());

        let score = sequence_logprob(&model, &[1, 1, 1, 1]).unwrap();
        assert!((score.log_prob - (1.0f64 / 3.0).ln()).abs() < 1e-15);
        let score = sequence_logprob(&model, &[1, 2]).unwrap();
        assert!(!score.valid);
        assert_eq!(score.log_prob, f64::NEG_INFINITY);
    }

    #[test]
    fn corrupted_initial_vector() {
        let mut model = coin_model();
        model.b1 = -&model.b1;
        assert!(matches!(init_belief(&model), Err(Error::InvalidInit { .. })));
        let score = sequence_logprob(&model, &[0]).unwrap();
        assert!(!score.valid);
    }

    #[test]
    fn clamping() {
        let c = clamp_distribution(&DVector::from_vec(vec![-0.1, 0.3, 0.9]));
        assert!((c - DVector::from_vec(vec![0.0, 0.25, 0.75])).amax() < 1e-15);
        let c = clamp_distribution(&DVector::from_vec(vec![-0.1, 0.0]));
        assert_eq!(c, DVector::from_vec(vec![0.5, 0.5]));
    }

    #[test]
    fn direct_product_limits() {
        let model = coin_model();
        let p = sequence_prob_direct(&model, &[0; 20]).unwrap();
        assert!((p - 0.5f64.powi(20)).abs() < 1e-18);
        assert!(matches!(
            sequence_prob_direct(&model, &[0; 21]),
            Err(Error::SequenceTooLong { .. })
        ));
        assert!(matches!(
            sequence_logprob(&model, &[2]),
            Err(Error::SymbolOutOfRange { symbol: 3, n: 2 })
        ));
    }
}
