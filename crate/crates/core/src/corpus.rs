//! Observation corpora and their line-oriented text format.
//!
//! ```text
//! #n=3
//! 1 2 3
//! 3 3 1 2
//! ```
//!
//! Symbols are 1-based on disk and 0-based in memory.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceCorpus {
    n: usize,
    sequences: Vec<Vec<usize>>,
}

impl SequenceCorpus {
    /// Builds a corpus from 0-based sequences.
    pub fn new(n: usize, sequences: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::ShapeMismatch("alphabet size must be positive".into()));
        }
        for seq in &sequences {
            if seq.is_empty() {
                return Err(Error::Parse("sequences must contain at least one symbol".into()));
            }
            if let Some(&bad) = seq.iter().find(|&&x| x >= n) {
                return Err(Error::SymbolOutOfRange { symbol: bad + 1, n });
            }
        }
        Ok(SequenceCorpus { n, sequences })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sequences(&self) -> &[Vec<usize>] {
        &self.sequences
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Concatenates two corpora over the same alphabet.
    pub fn concat(&self, other: &SequenceCorpus) -> Result<SequenceCorpus> {
        if self.n != other.n {
            return Err(Error::AlphabetMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        let mut sequences = self.sequences.clone();
        sequences.extend(other.sequences.iter().cloned());
        Ok(SequenceCorpus { n: self.n, sequences })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let n = loop {
            let Some((_, line)) = lines.next() else {
                return Err(Error::Parse("missing `#n=<alphabet size>` header".into()));
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let value = line
                .strip_prefix("#n=")
                .ok_or_else(|| Error::Parse(format!("expected `#n=<alphabet size>` header, found {line:?}")))?;
            break value
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad alphabet size {value:?}: {e}")))?;
        };
        if n == 0 {
            return Err(Error::Parse("alphabet size must be positive".into()));
        }

        let mut sequences = Vec::new();
        for (lineno, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let seq = line
                .split_whitespace()
                .map(|tok| {
                    let s: usize = tok
                        .parse()
                        .map_err(|_| Error::Parse(format!("line {}: bad symbol {tok:?}", lineno + 1)))?;
                    if s == 0 || s > n {
                        return Err(Error::SymbolOutOfRange { symbol: s, n });
                    }
                    Ok(s - 1)
                })
                .collect::<Result<Vec<_>>>()?;
            sequences.push(seq);
        }
        SequenceCorpus::new(n, sequences)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("#n={}\n", self.n);
        for seq in &self.sequences {
            for (i, &x) in seq.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write!(out, "{}", x + 1).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_renders() {
        let text = "#n=3\n1 2 3\n\n3 3 1 2\n";
        let c = SequenceCorpus::parse(text).unwrap();
        assert_eq!(c.n(), 3);
        assert_eq!(c.sequences(), &[vec![0, 1, 2], vec![2, 2, 0, 1]]);
        assert_eq!(c.to_text(), "#n=3\n1 2 3\n3 3 1 2\n");
    }

    #[test]
    fn rejects_out_of_range_and_garbage() {
        assert_eq!(
            SequenceCorpus::parse("#n=2\n1 3\n").unwrap_err(),
            Error::SymbolOutOfRange { symbol: 3, n: 2 }
        );
        assert!(matches!(
            SequenceCorpus::parse("#n=2\n1 0\n"),
            Err(Error::SymbolOutOfRange { .. })
        ));
        assert!(matches!(SequenceCorpus::parse("#n=2\n1 x\n"), Err(Error::Parse(_))));
        assert!(matches!(SequenceCorpus::parse("1 2\n"), Err(Error::Parse(_))));
        assert!(matches!(SequenceCorpus::parse(""), Err(Error::Parse(_))));
    }

    #[test]
    fn concat_checks_alphabet() {
        let a = SequenceCorpus::new(2, vec![vec![0]]).unwrap();
        let b = SequenceCorpus::new(3, vec![vec![2]]).unwrap();
        assert!(matches!(a.concat(&b), Err(Error::AlphabetMismatch { .. })));
        assert_eq!(a.concat(&a).unwrap().len(), 2);
    }
}
