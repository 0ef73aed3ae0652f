#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use spectral_psr::HmmParams;

pub fn random_hmm(m: usize, n: usize, seed: u64) -> HmmParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    HmmParams::random(m, n, &mut rng).unwrap()
}

pub fn coin() -> HmmParams {
    HmmParams::new(
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(2, 1, 0.5),
        DVector::from_element(1, 1.0),
    )
    .unwrap()
}

pub fn identity(m: usize) -> HmmParams {
    HmmParams::new(
        DMatrix::identity(m, m),
        DMatrix::identity(m, m),
        DVector::from_element(m, 1.0 / m as f64),
    )
    .unwrap()
}

/// Every sequence in [n]^t, lexicographic.
pub fn all_sequences(n: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..t {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..n).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

/// Sum over every hidden path of the joint probability. Independent of the
/// forward recursion.
pub fn path_sum_probability(params: &HmmParams, seq: &[usize]) -> f64 {
    let m = params.m();
    let (t, o, pi) = (params.transition(), params.emission(), params.initial());
    let mut total = 0.0;
    for path in all_sequences(m, seq.len()) {
        let mut p = pi[path[0]] * o[(seq[0], path[0])];
        for k in 1..seq.len() {
            p *= t[(path[k], path[k - 1])] * o[(seq[k], path[k])];
        }
        total += p;
    }
    total
}

/// Haar-ish random orthogonal matrix from the QR of a Gaussian matrix.
pub fn random_orthogonal(m: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(m, m, |_, _| StandardNormal.sample(&mut rng));
    g.qr().q()
}

pub fn close(a: f64, b: f64, abs: f64, rel: f64) -> bool {
    (a - b).abs() <= abs.max(rel * a.abs().max(b.abs()))
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run(args: &[&str], stdin: &str) -> Run {
    use std::io::Write;
    use std::process::{Command, Stdio};
    let mut child = Command::new(env!("CARGO_BIN_EXE_spectral-psr"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary starts");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

pub fn write_hmm(dir: &std::path::Path, name: &str, params: &HmmParams) -> String {
    let path = dir.join(name);
    std::fs::write(&path, spectral_psr::io::hmm_to_json(params)).unwrap();
    path.to_str().unwrap().to_string()
}

pub fn path_str(dir: &std::path::Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

/// 1-based corpus text for every sequence in [n]^t.
pub fn corpus_of_all(n: usize, t: usize) -> String {
    let mut text = format!("#n={n}\n");
    for seq in all_sequences(n, t) {
        let line: Vec<String> = seq.iter().map(|x| (x + 1).to_string()).collect();
        text.push_str(&line.join(" "));
        text.push('\n');
    }
    text
}
