//! Exhaustive enumeration of length-`t` distributions, an L1 metric between
//! them, and sample-size sweeps of the spectral learner against its
//! generating HMM.

use std::fmt::Write as _;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hmm::{exact_moments, sample_sequences, HmmParams};
use crate::learn::{learn_psr_detailed, LearnOptions, PsrModel};
use crate::linalg::RankSpec;
use crate::moments::{estimate_moments, EstimationMode};

/// Largest table [`brute_force_distribution`] will build.
pub const ENUMERATION_LIMIT: usize = 1_000_000;

/// Anything that assigns unnormalized probabilities to prefixes by a linear
/// recursion `v -> step(v, x)`, read out by `terminal(v)`.
pub trait SequenceScorer {
    fn alphabet_size(&self) -> usize;
    fn initial(&self) -> DVector<f64>;
    fn step(&self, v: &DVector<f64>, x: usize) -> DVector<f64>;
    fn terminal(&self, v: &DVector<f64>) -> f64;
}

/// Forward messages `Pr[h_t, x_{1:t-1}]`, unscaled.
impl SequenceScorer for HmmParams {
    fn alphabet_size(&self) -> usize {
        self.n()
    }

    fn initial(&self) -> DVector<f64> {
        HmmParams::initial(self).clone()
    }

    fn step(&self, v: &DVector<f64>, x: usize) -> DVector<f64> {
        self.observation_operator(x) * v
    }

    fn terminal(&self, v: &DVector<f64>) -> f64 {
        v.sum()
    }
}

/// Raw `binf^T B_{x_t} ... B_{x_1} b1`, no clamping.
impl SequenceScorer for PsrModel {
    fn alphabet_size(&self) -> usize {
        self.n()
    }

    fn initial(&self) -> DVector<f64> {
        self.b1.clone()
    }

    fn step(&self, v: &DVector<f64>, x: usize) -> DVector<f64> {
        self.op(x) * v
    }

    fn terminal(&self, v: &DVector<f64>) -> f64 {
        self.binf.dot(v)
    }
}

/// Probabilities of every sequence in `[n]^t`, in lexicographic order
/// (first symbol most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionTable {
    pub n: usize,
    pub t: usize,
    pub probs: Vec<f64>,
}

impl DistributionTable {
    fn index(&self, seq: &[usize]) -> Option<usize> {
        if seq.len() != self.t {
            return None;
        }
        let mut idx = 0;
        for &x in seq {
            if x >= self.n {
                return None;
            }
            idx = idx * self.n + x;
        }
        Some(idx)
    }

    /// Probability of a 0-based sequence of the table's length.
    pub fn get(&self, seq: &[usize]) -> Option<f64> {
        self.index(seq).map(|i| self.probs[i])
    }

    pub fn sequence_at(&self, mut index: usize) -> Vec<usize> {
        let mut seq = vec![0; self.t];
        for slot in seq.iter_mut().rev() {
            *slot = index % self.n;
            index /= self.n;
        }
        seq
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.probs.iter().enumerate().map(|(i, &p)| (self.sequence_at(i), p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Enumerates `[n]^t` depth-first, sharing prefix computations.
pub fn brute_force_distribution<S: SequenceScorer + ?Sized>(scorer: &S, t: usize) -> Result<DistributionTable> {
    let n = scorer.alphabet_size();
    let size = (n as u128).checked_pow(t as u32).unwrap_or(u128::MAX);
    if size > ENUMERATION_LIMIT as u128 {
        return Err(Error::EnumerationTooLarge {
            n,
            t,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut probs = Vec::with_capacity(size as usize);
    fn descend<S: SequenceScorer + ?Sized>(scorer: &S, v: &DVector<f64>, depth: usize, out: &mut Vec<f64>) {
        if depth == 0 {
            out.push(scorer.terminal(v));
            return;
        }
        for x in 0..scorer.alphabet_size() {
            descend(scorer, &scorer.step(v, x), depth - 1, out);
        }
    }
    descend(scorer, &scorer.initial(), t, &mut probs);
    Ok(DistributionTable { n, t, probs })
}

/// `sum |p - q|` over a shared key set.
pub fn l1_error(p: &DistributionTable, q: &DistributionTable) -> Result<f64> {
    if p.n != q.n || p.t != q.t || p.probs.len() != q.probs.len() {
        return Err(Error::KeyMismatch);
    }
    Ok(p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum())
}

/// What the learner sees in each sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepSource {
    /// `N` sampled sequences per cell.
    Sampled,
    /// Population moments regardless of `N`.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub sample_sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Length of the evaluated distribution.
    pub eval_len: usize,
    pub mode: EstimationMode,
    pub source: SweepSource,
}

impl SweepConfig {
    pub fn new(sample_sizes: Vec<usize>, seeds: Vec<u64>, eval_len: usize) -> Self {
        SweepConfig {
            sample_sizes,
            seeds,
            eval_len,
            mode: EstimationMode::Heads,
            source: SweepSource::Sampled,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub n_samples: usize,
    pub seed: u64,
    pub l1_error: f64,
    pub degenerate: bool,
    /// Sequences whose raw model probability is not strictly positive.
    pub invalid_sequences: usize,
    /// Error kind when learning failed outright.
    pub failure: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub n_samples: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// e.g. `"hmm m=2 n=4"`.
    pub descriptor: String,
    pub config: SweepConfig,
    /// Ordered by sample size, then by seed, as given in the config.
    pub records: Vec<SweepRecord>,
    pub summary: Vec<SweepSummary>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn sweep_cell(
    params: &HmmParams,
    truth: &DistributionTable,
    n_samples: usize,
    seed: u64,
    config: &SweepConfig,
) -> Result<SweepRecord> {
    let moments = match config.source {
        SweepSource::Exact => Ok(exact_moments(params)),
        SweepSource::Sampled => {
            let corpus = sample_sequences(params, n_samples, config.eval_len.max(3), seed);
            estimate_moments(&corpus, config.mode)
        }
    };
    let learned =
        moments.and_then(|mm| learn_psr_detailed(&mm, RankSpec::Explicit(params.m()), &LearnOptions::default()));
    match learned {
        Ok(learned) => {
            let table = brute_force_distribution(&learned.model, config.eval_len)?;
            Ok(SweepRecord {
                n_samples,
                seed,
                l1_error: l1_error(truth, &table)?,
                degenerate: learned.is_degenerate(),
                invalid_sequences: table.probs.iter().filter(|&&p| !(p > 0.0)).count(),
                failure: None,
            })
        }
        // a model that could not be learned predicts nothing: its error is the
        // full mass of the truth
        Err(e @ (Error::NoTriples | Error::ZeroMatrix | Error::PinvDegenerate | Error::NonFinite(_))) => {
            Ok(SweepRecord {
                n_samples,
                seed,
                l1_error: truth.total(),
                degenerate: true,
                invalid_sequences: truth.probs.len(),
                failure: Some(e.kind()),
            })
        }
        Err(e) => Err(e),
    }
}

/// Learns a model for every `(N, seed)` cell and compares its length-`t`
/// distribution with the generating HMM's.
pub fn convergence_sweep(params: &HmmParams, config: &SweepConfig) -> Result<SweepReport> {
    if config.sample_sizes.is_empty() || config.seeds.is_empty() {
        return Err(Error::Parse("sweep needs at least one sample size and one seed".into()));
    }
    if config.sample_sizes.contains(&0) {
        return Err(Error::Parse("sample sizes must be positive".into()));
    }
    if config.eval_len == 0 {
        return Err(Error::Parse("evaluation length must be positive".into()));
    }
    let truth = brute_force_distribution(params, config.eval_len)?;

    let cells: Vec<(usize, u64)> = config
        .sample_sizes
        .iter()
        .flat_map(|&n| config.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let records = cells
        .par_iter()
        .map(|&(n, seed)| sweep_cell(params, &truth, n, seed, config))
        .collect::<Result<Vec<_>>>()?;

    let summary = config
        .sample_sizes
        .iter()
        .map(|&n| {
            let mut errs: Vec<f64> = records
                .iter()
                .filter(|r| r.n_samples == n)
                .map(|r| r.l1_error)
                .collect();
            errs.sort_by(f64::total_cmp);
            SweepSummary {
                n_samples: n,
                median: quantile(&errs, 0.5),
                q25: quantile(&errs, 0.25),
                q75: quantile(&errs, 0.75),
            }
        })
        .collect();

    Ok(SweepReport {
        descriptor: format!("hmm m={} n={}", params.m(), params.n()),
        config: config.clone(),
        records,
        summary,
    })
}

impl SweepReport {
    /// `N,seed,l1_error,degenerate_flag`
    pub fn detail_csv(&self) -> String {
        let mut out = String::from("N,seed,l1_error,degenerate_flag\n");
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{}",
                r.n_samples,
                r.seed,
                crate::io::fmt_f64(r.l1_error),
                u8::from(r.degenerate)
            )
            .unwrap();
        }
        out
    }

    /// `N,median_l1,q25,q75`
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("N,median_l1,q25,q75\n");
        for s in &self.summary {
            writeln!(
                out,
                "{},{},{},{}",
                s.n_samples,
                crate::io::fmt_f64(s.median),
                crate::io::fmt_f64(s.q25),
                crate::io::fmt_f64(s.q75)
            )
            .unwrap();
        }
        out
    }
}
