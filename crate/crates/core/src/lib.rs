//! Spectral learning of predictive-state representations for discrete hidden
//! Markov models.
//!
//! The learner never estimates the transition or emission matrices. It reads
//! three observable moments off the data (the marginal of the first symbol,
//! the joint of the first two, and the joint of the first three sliced by the
//! middle symbol), takes a thin SVD to find the subspace that next-symbol
//! predictions live in, and builds one small linear operator per symbol.
//! Inference is then a product of those operators.
//!
//! ```
//! use nalgebra::{DMatrix, DVector};
//! use spectral_psr::{
//!     exact_moments, forward_loglikelihood, learn_psr, sequence_logprob, HmmParams, RankSpec,
//! };
//!
//! let params = HmmParams::new(
//!     DMatrix::from_row_slice(2, 2, &[0.9, 0.2, 0.1, 0.8]),
//!     DMatrix::from_row_slice(3, 2, &[0.7, 0.1, 0.2, 0.3, 0.1, 0.6]),
//!     DVector::from_vec(vec![0.6, 0.4]),
//! )?;
//! let model = learn_psr(&exact_moments(&params), RankSpec::Explicit(2))?;
//!
//! let seq = [0, 2, 2, 1];
//! let learned = sequence_logprob(&model, &seq)?.log_prob;
//! let truth = forward_loglikelihood(&params, &seq)?.log_prob;
//! assert!((learned - truth).abs() < 1e-9);
//! # Ok::<(), spectral_psr::Error>(())
//! ```
//!
//! Symbols are 0-based throughout the library; the text formats in [`io`]
//! and [`corpus`] use 1-based symbols.

// negated comparisons are deliberate: they also catch NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod error;
pub mod eval;
pub mod hmm;
pub mod inference;
pub mod io;
pub mod learn;
pub mod linalg;
pub mod moments;

pub use corpus::SequenceCorpus;
pub use error::{Error, Result};
pub use eval::{
    brute_force_distribution, convergence_sweep, l1_error, DistributionTable, SequenceScorer, SweepConfig, SweepRecord,
    SweepReport, SweepSource, SweepSummary,
};
pub use hmm::{exact_moments, forward_loglikelihood, sample_sequences, ForwardResult, HmmParams, Tolerances};
pub use inference::{
    belief_update, init_belief, predict_next_distribution, predicted_observation_vector, sequence_logprob,
    sequence_prob_direct, BeliefState, Prediction, SequenceScore, Update, ALPHA_MIN,
};
pub use learn::{
    learn_psr, learn_psr_detailed, learn_psr_with_basis, psr_from_hmm, LearnOptions, Learned, ModelProvenance, PsrModel,
};
pub use linalg::{thin_svd_basis, RankSpec, SvdBasis};
pub use moments::{
    count_triples, estimate_moments, normalize_counts, EstimationMode, MomentStats, Provenance, TripleCounts,
};
