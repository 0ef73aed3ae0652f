//! Ground-truth hidden Markov models in the standard `(T, O, pi)`
//! parameterization.
//!
//! Matrices are column-stochastic: `T[(i, j)] = Pr[h_t = i | h_{t-1} = j]` and
//! `O[(i, j)] = Pr[x_t = i | h_t = j]`. Symbols and states are 0-based here;
//! the text formats in [`crate::io`] and [`crate::corpus`] are 1-based.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::SequenceCorpus;
use crate::error::{Error, Result};
use crate::linalg::sorted_svd;
use crate::moments::{MomentStats, Provenance};

/// Validation tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation of every column sum (and of `pi`) from 1.
    pub stochastic: f64,
    /// Full column rank requires `sigma_min > rank * sigma_max`.
    pub rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            stochastic: 1e-12,
            rank: 1e-10,
        }
    }
}

/// A validated HMM. Construction goes through [`HmmParams::new`], so every
/// value of this type satisfies the stochasticity, positivity and rank
/// requirements.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmParams {
    transition: DMatrix<f64>,
    emission: DMatrix<f64>,
    initial: DVector<f64>,
}

fn check_distribution(what: &'static str, label: &str, v: &[f64], tol: f64) -> Result<()> {
    if let Some(bad) = v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::NotStochastic {
            what,
            detail: format!("{label} has entry {bad} outside [0, 1]"),
        });
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::NotStochastic {
            what,
            detail: format!("{label} sums to {sum:.17}"),
        });
    }
    Ok(())
}

fn check_full_column_rank(which: &'static str, a: &DMatrix<f64>, tol: f64) -> Result<()> {
    let svd = sorted_svd(a)?;
    let top = svd.singular_values[0];
    let bottom = *svd.singular_values.last().unwrap();
    let ratio = if top > 0.0 { bottom / top } else { 0.0 };
    if svd.singular_values.len() < a.ncols() || !(ratio > tol) {
        return Err(Error::RankDeficient { which, ratio });
    }
    Ok(())
}

impl HmmParams {
    pub fn new(transition: DMatrix<f64>, emission: DMatrix<f64>, initial: DVector<f64>) -> Result<Self> {
        Self::with_tolerances(transition, emission, initial, &Tolerances::default())
    }

    pub fn with_tolerances(
        transition: DMatrix<f64>,
        emission: DMatrix<f64>,
        initial: DVector<f64>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let m = transition.nrows();
        if m == 0 || transition.ncols() != m {
            return Err(Error::ShapeMismatch(format!(
                "T must be m x m with m >= 1, got {}x{}",
                transition.nrows(),
                transition.ncols()
            )));
        }
        if emission.ncols() != m {
            return Err(Error::ShapeMismatch(format!(
                "O must have m = {m} columns, got {}",
                emission.ncols()
            )));
        }
        let n = emission.nrows();
        if n < m {
            return Err(Error::ShapeMismatch(format!("need n >= m, got n = {n}, m = {m}")));
        }
        if initial.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "pi must have length m = {m}, got {}",
                initial.len()
            )));
        }

        for (j, col) in transition.column_iter().enumerate() {
            check_distribution("T", &format!("column {}", j + 1), col.as_slice(), tol.stochastic)?;
        }
        for (j, col) in emission.column_iter().enumerate() {
            check_distribution("O", &format!("column {}", j + 1), col.as_slice(), tol.stochastic)?;
        }
        check_distribution("pi", "pi", initial.as_slice(), tol.stochastic)?;
        if let Some((index, &value)) = initial.iter().enumerate().find(|(_, &p)| p <= 0.0) {
            return Err(Error::ZeroPriorEntry { index, value });
        }

        check_full_column_rank("T", &transition, tol.rank)?;
        check_full_column_rank("O", &emission, tol.rank)?;

        Ok(HmmParams {
            transition,
            emission,
            initial,
        })
    }

    /// Hidden-state count.
    pub fn m(&self) -> usize {
        self.transition.nrows()
    }

    /// Alphabet size.
    pub fn n(&self) -> usize {
        self.emission.nrows()
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn emission(&self) -> &DMatrix<f64> {
        &self.emission
    }

    pub fn initial(&self) -> &DVector<f64> {
        &self.initial
    }

    /// Row `x` of `O` as a column vector: `Pr[x | h = j]` for every `j`.
    pub fn emission_row(&self, x: usize) -> DVector<f64> {
        self.emission.row(x).transpose()
    }

    /// `T diag(O_x)`: maps `Pr[h_t, x_{1:t-1}]` to `Pr[h_{t+1}, x_{1:t}]`.
    pub fn observation_operator(&self, x: usize) -> DMatrix<f64> {
        let mut op = self.transition.clone();
        for (j, mut col) in op.column_iter_mut().enumerate() {
            col *= self.emission[(x, j)];
        }
        op
    }

    /// Random HMM with Dirichlet(1) columns, rejecting draws where `T` or `O`
    /// has `sigma_min / sigma_max < 0.05` so that test instances stay
    /// reasonably conditioned.
    pub fn random<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<Self> {
        if m == 0 || n < m {
            return Err(Error::ShapeMismatch(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
        }
        const MIN_CONDITION: f64 = 0.05;
        loop {
            let transition = random_stochastic(m, m, rng);
            let emission = random_stochastic(n, m, rng);
            let dir = random_stochastic(m, 1, rng);
            let initial = DVector::from_fn(m, |i, _| 0.8 * dir[(i, 0)] + 0.2 / m as f64);
            let initial = &initial / initial.sum();
            if condition_ratio(&transition) < MIN_CONDITION || condition_ratio(&emission) < MIN_CONDITION {
                continue;
            }
            if let Ok(params) = HmmParams::new(transition, emission, initial) {
                return Ok(params);
            }
        }
    }
}

fn condition_ratio(a: &DMatrix<f64>) -> f64 {
    match sorted_svd(a) {
        Ok(svd) => svd.singular_values.last().unwrap() / svd.singular_values[0],
        Err(_) => 0.0,
    }
}

fn random_stochastic<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    let mut a = DMatrix::from_fn(rows, cols, |_, _| {
        let u: f64 = rng.random();
        -(1.0 - u).ln()
    });
    for mut col in a.column_iter_mut() {
        let s = col.sum();
        if s > 0.0 {
            col /= s;
        } else {
            col.fill(1.0 / rows as f64);
        }
    }
    a
}

/// Draws an index from a discrete distribution given by `weights` (summing to 1).
fn sample_categorical<'a, R: Rng + ?Sized>(weights: impl Iterator<Item = &'a f64>, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.enumerate() {
        if w > 0.0 {
            last_positive = i;
        }
        acc += w;
        if u < acc {
            return i;
        }
    }
    last_positive
}

/// Deterministic per-sequence stream: sequence `index` always draws from the
/// same ChaCha stream regardless of how the work is partitioned.
pub fn sequence_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Sample `count` sequences of exactly `length` symbols.
pub fn sample_sequences(params: &HmmParams, count: usize, length: usize, seed: u64) -> SequenceCorpus {
    let sequences = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = sequence_rng(seed, i as u64);
            let mut seq = Vec::with_capacity(length);
            let mut h = sample_categorical(params.initial.iter(), &mut rng);
            for step in 0..length {
                seq.push(sample_categorical(params.emission.column(h).iter(), &mut rng));
                if step + 1 < length {
                    h = sample_categorical(params.transition.column(h).iter(), &mut rng);
                }
            }
            seq
        })
        .collect();
    SequenceCorpus::new(params.n(), sequences).expect("sampled symbols are in range")
}

/// Output of the scaled forward recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardResult {
    /// `log Pr[x_{1:t}]`, or `-inf` for an impossible sequence.
    pub log_prob: f64,
    /// `Pr[h_{t+1} | x_{1:t}]`. For an impossible sequence, the last
    /// well-defined belief before the failing step.
    pub belief: DVector<f64>,
    pub possible: bool,
    /// 1-based position of the first zero-probability observation.
    pub failed_at: Option<usize>,
}

/// Scaled forward algorithm. Symbols are 0-based.
pub fn forward_loglikelihood(params: &HmmParams, seq: &[usize]) -> Result<ForwardResult> {
    let n = params.n();
    if let Some(&bad) = seq.iter().find(|&&x| x >= n) {
        return Err(Error::SymbolOutOfRange { symbol: bad + 1, n });
    }
    let mut belief = params.initial.clone();
    let mut log_prob = 0.0;
    for (t, &x) in seq.iter().enumerate() {
        let weighted = belief.component_mul(&params.emission_row(x));
        let c = weighted.sum();
        if !(c > 0.0) {
            return Ok(ForwardResult {
                log_prob: f64::NEG_INFINITY,
                belief,
                possible: false,
                failed_at: Some(t + 1),
            });
        }
        log_prob += c.ln();
        belief = &params.transition * (weighted / c);
    }
    Ok(ForwardResult {
        log_prob,
        belief,
        possible: true,
        failed_at: None,
    })
}

/// Population moments `P1 = O pi`, `P21 = O T diag(pi) O^T` and
/// `P3x1 = O T diag(O_x) T diag(pi) O^T`.
pub fn exact_moments(params: &HmmParams) -> MomentStats {
    let o = &params.emission;
    let t = &params.transition;
    let p1 = o * &params.initial;
    // T diag(pi) O^T, shared by every moment
    let mut t_pi = t.clone();
    for (j, mut col) in t_pi.column_iter_mut().enumerate() {
        col *= params.initial[j];
    }
    let t_pi_ot = &t_pi * o.transpose();
    let p21 = o * &t_pi_ot;
    let p3 = (0..params.n())
        .map(|x| o * params.observation_operator(x) * &t_pi_ot)
        .collect();
    MomentStats {
        n: params.n(),
        p1,
        p21,
        p3,
        provenance: Provenance::Exact,
    }
}
