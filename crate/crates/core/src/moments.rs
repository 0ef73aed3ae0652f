//! Observable statistics `P1`, `P21` and the `P3x1` stack, either in closed
//! form (see [`crate::hmm::exact_moments`]) or estimated from a corpus by
//! integer counting followed by one normalization.

use std::fmt;
use std::ops::AddAssign;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::SequenceCorpus;
use crate::error::{Error, Result};

/// Which positions of each sequence feed the estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimationMode {
    /// Only `(x1, x2, x3)` of each sequence. Unbiased for any initial
    /// distribution.
    #[default]
    Heads,
    /// Every position, adjacent pair and window of three. Unbiased only
    /// when the initial distribution is stationary.
    Sliding,
}

impl fmt::Display for EstimationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimationMode::Heads => "heads",
            EstimationMode::Sliding => "sliding",
        })
    }
}

impl FromStr for EstimationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heads" => Ok(EstimationMode::Heads),
            "sliding" => Ok(EstimationMode::Sliding),
            other => Err(Error::Parse(format!("unknown estimation mode {other:?}"))),
        }
    }
}

/// Where a set of moments came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Empirical {
        mode: EstimationMode,
        firsts: u64,
        pairs: u64,
        triples: u64,
    },
}

/// Raw tallies. `c21[i * n + j]` counts `(x2 = i, x1 = j)`;
/// `c3[(x * n + i) * n + j]` counts `(x3 = i, x2 = x, x1 = j)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleCounts {
    pub n: usize,
    pub c1: Vec<u64>,
    pub c21: Vec<u64>,
    pub c3: Vec<u64>,
    pub total_firsts: u64,
    pub total_pairs: u64,
    pub total_triples: u64,
    pub mode: EstimationMode,
}

impl TripleCounts {
    pub fn zeros(n: usize, mode: EstimationMode) -> Self {
        TripleCounts {
            n,
            c1: vec![0; n],
            c21: vec![0; n * n],
            c3: vec![0; n * n * n],
            total_firsts: 0,
            total_pairs: 0,
            total_triples: 0,
            mode,
        }
    }

    pub fn pair(&self, second: usize, first: usize) -> u64 {
        self.c21[second * self.n + first]
    }

    pub fn triple(&self, third: usize, middle: usize, first: usize) -> u64 {
        self.c3[(middle * self.n + third) * self.n + first]
    }

    fn add_first(&mut self, a: usize) {
        self.c1[a] += 1;
        self.total_firsts += 1;
    }

    fn add_pair(&mut self, a: usize, b: usize) {
        self.c21[b * self.n + a] += 1;
        self.total_pairs += 1;
    }

    fn add_triple(&mut self, a: usize, b: usize, c: usize) {
        self.c3[(b * self.n + c) * self.n + a] += 1;
        self.total_triples += 1;
    }

    fn add_sequence(&mut self, seq: &[usize]) {
        match self.mode {
            EstimationMode::Heads => {
                if let Some(&a) = seq.first() {
                    self.add_first(a);
                }
                if seq.len() >= 2 {
                    self.add_pair(seq[0], seq[1]);
                }
                if seq.len() >= 3 {
                    self.add_triple(seq[0], seq[1], seq[2]);
                }
            }
            EstimationMode::Sliding => {
                for &a in seq {
                    self.add_first(a);
                }
                for w in seq.windows(2) {
                    self.add_pair(w[0], w[1]);
                }
                for w in seq.windows(3) {
                    self.add_triple(w[0], w[1], w[2]);
                }
            }
        }
    }
}

impl AddAssign<&TripleCounts> for TripleCounts {
    fn add_assign(&mut self, rhs: &TripleCounts) {
        assert_eq!(self.n, rhs.n, "alphabet mismatch in count merge");
        assert_eq!(self.mode, rhs.mode, "mode mismatch in count merge");
        for (a, b) in self.c1.iter_mut().zip(&rhs.c1) {
            *a += b;
        }
        for (a, b) in self.c21.iter_mut().zip(&rhs.c21) {
            *a += b;
        }
        for (a, b) in self.c3.iter_mut().zip(&rhs.c3) {
            *a += b;
        }
        self.total_firsts += rhs.total_firsts;
        self.total_pairs += rhs.total_pairs;
        self.total_triples += rhs.total_triples;
    }
}

/// Tally the corpus. The merge is integer addition, so the result does not
/// depend on how rayon splits the work.
pub fn count_triples(corpus: &SequenceCorpus, mode: EstimationMode) -> Result<TripleCounts> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let n = corpus.n();
    let counts = corpus
        .sequences()
        .par_iter()
        .fold(
            || TripleCounts::zeros(n, mode),
            |mut acc, seq| {
                acc.add_sequence(seq);
                acc
            },
        )
        .reduce(
            || TripleCounts::zeros(n, mode),
            |mut a, b| {
                a += &b;
                a
            },
        );
    if counts.total_triples == 0 {
        return Err(Error::NoTriples);
    }
    Ok(counts)
}

/// Observable moments over an alphabet of size `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentStats {
    pub n: usize,
    /// `P1[i] = Pr[x1 = i]`
    pub p1: DVector<f64>,
    /// `P21[(i, j)] = Pr[x2 = i, x1 = j]`
    pub p21: DMatrix<f64>,
    /// `p3[x][(i, j)] = Pr[x3 = i, x2 = x, x1 = j]`
    pub p3: Vec<DMatrix<f64>>,
    pub provenance: Provenance,
}

/// Divide each tally by its own total.
pub fn normalize_counts(counts: &TripleCounts) -> Result<MomentStats> {
    if counts.total_firsts == 0 || counts.total_pairs == 0 || counts.total_triples == 0 {
        return Err(Error::DivisionByZeroGuard);
    }
    let n = counts.n;
    let firsts = counts.total_firsts as f64;
    let pairs = counts.total_pairs as f64;
    let triples = counts.total_triples as f64;
    let p1 = DVector::from_iterator(n, counts.c1.iter().map(|&c| c as f64 / firsts));
    let p21 = DMatrix::from_fn(n, n, |i, j| counts.pair(i, j) as f64 / pairs);
    let p3 = (0..n)
        .map(|x| DMatrix::from_fn(n, n, |i, j| counts.triple(i, x, j) as f64 / triples))
        .collect();
    Ok(MomentStats {
        n,
        p1,
        p21,
        p3,
        provenance: Provenance::Empirical {
            mode: counts.mode,
            firsts: counts.total_firsts,
            pairs: counts.total_pairs,
            triples: counts.total_triples,
        },
    })
}

pub fn estimate_moments(corpus: &SequenceCorpus, mode: EstimationMode) -> Result<MomentStats> {
    normalize_counts(&count_triples(corpus, mode)?)
}

impl MomentStats {
    /// Checks shapes, finiteness, the `[0, 1]` range and the three
    /// sum-to-one identities at tolerance `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let n = self.n;
        if n == 0
            || self.p1.len() != n
            || self.p21.shape() != (n, n)
            || self.p3.len() != n
            || self.p3.iter().any(|p| p.shape() != (n, n))
        {
            return Err(Error::ShapeMismatch(format!("moment shapes inconsistent with n = {n}")));
        }
        let all = self
            .p1
            .iter()
            .chain(self.p21.iter())
            .chain(self.p3.iter().flat_map(|p| p.iter()));
        for &v in all {
            if !v.is_finite() {
                return Err(Error::NonFinite("moments"));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::NotStochastic {
                    what: "moments",
                    detail: format!("entry {v} outside [0, 1]"),
                });
            }
        }
        let sums = [
            ("P1", self.p1.sum()),
            ("P21", self.p21.sum()),
            ("P3", self.p3.iter().map(|p| p.sum()).sum()),
        ];
        for (label, s) in sums {
            if (s - 1.0).abs() > tol {
                return Err(Error::NotStochastic {
                    what: "moments",
                    detail: format!("{label} sums to {s:.17}"),
                });
            }
        }
        Ok(())
    }
}
