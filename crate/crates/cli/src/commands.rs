use std::io::{self, BufRead, Write};
use std::path::Path;

use spectral_psr::io::{
    fmt_f64, hmm_from_json, model_from_json, model_to_json, moments_from_json, moments_to_json, read_to_string,
    write_string,
};
use spectral_psr::{
    belief_update, convergence_sweep, estimate_moments, exact_moments, init_belief, learn_psr_detailed,
    predict_next_distribution, sample_sequences, sequence_logprob, Error, LearnOptions, RankSpec, Result,
    SequenceCorpus, SweepConfig,
};

use crate::{report, GenArgs, LearnArgs, PredictArgs, ScoreArgs, SweepArgs};

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_string(path, text),
        None => io::stdout().write_all(text.as_bytes()).map_err(Error::from),
    }
}

fn check_alphabet(expected: Option<usize>, found: usize) -> Result<()> {
    match expected {
        Some(n) if n != found => Err(Error::AlphabetMismatch { expected: n, found }),
        _ => Ok(()),
    }
}

fn read_corpus(path: &Path) -> Result<SequenceCorpus> {
    SequenceCorpus::parse(&read_to_string(path)?)
}

pub fn gen(args: &GenArgs) -> Result<u8> {
    let params = hmm_from_json(&read_to_string(&args.hmm)?)?;
    if args.length == 0 {
        return Err(Error::Parse("--length must be positive".into()));
    }
    let corpus = sample_sequences(&params, args.count, args.length, args.seed);
    emit(args.out.as_deref(), &corpus.to_text())?;
    Ok(0)
}

pub fn learn(args: &LearnArgs) -> Result<u8> {
    let (moments, default_rank) = if let Some(path) = &args.exact {
        let params = hmm_from_json(&read_to_string(path)?)?;
        (exact_moments(&params), RankSpec::Explicit(params.m()))
    } else if let Some(path) = &args.moments {
        (moments_from_json(&read_to_string(path)?)?, RankSpec::auto())
    } else if let Some(path) = &args.corpus {
        let corpus = read_corpus(path)?;
        check_alphabet(args.n, corpus.n())?;
        (estimate_moments(&corpus, args.mode)?, RankSpec::auto())
    } else {
        return Err(Error::Parse("learn needs one of --corpus, --moments or --exact".into()));
    };
    check_alphabet(args.n, moments.n)?;
    if let Some(path) = &args.emit_moments {
        write_string(path, &moments_to_json(&moments))?;
    }

    let rank = match (args.m, args.auto_rank_threshold) {
        (Some(m), _) => RankSpec::Explicit(m),
        (None, Some(threshold)) => RankSpec::Auto(threshold),
        (None, None) => default_rank,
    };
    let learned = learn_psr_detailed(&moments, rank, &LearnOptions::default())?;
    let model = &learned.model;

    let mut diag = format!("rank\t{}\nsingular_values", model.m());
    for s in &model.singular_values {
        diag.push('\t');
        diag.push_str(&fmt_f64(*s));
    }
    diag.push('\n');
    if let Some(w) = &learned.rank_warning {
        diag.push_str(&format!("warning\tRankWarning\t{w}\n"));
    }
    if learned.pinv_kept < model.m() {
        diag.push_str(&format!(
            "warning\tPinvTruncated\tkept {} of {} directions\n",
            learned.pinv_kept,
            model.m()
        ));
    }
    // diagnostics go wherever the model does not
    if args.out.is_some() {
        print!("{diag}");
    } else {
        eprint!("{diag}");
    }
    emit(args.out.as_deref(), &model_to_json(model))?;
    Ok(0)
}

pub fn score(args: &ScoreArgs) -> Result<u8> {
    let model = model_from_json(&read_to_string(&args.model)?)?;
    check_alphabet(args.n, model.n())?;
    let corpus = read_corpus(&args.corpus)?;
    check_alphabet(Some(model.n()), corpus.n())?;
    let mut out = String::new();
    for seq in corpus.sequences() {
        let s = sequence_logprob(&model, seq)?;
        out.push_str(&fmt_f64(s.log_prob));
        out.push_str(if s.valid { "\tvalid\n" } else { "\tinvalid\n" });
    }
    emit(args.out.as_deref(), &out)?;
    Ok(0)
}

fn parse_symbol(line: &str, n: usize) -> Result<usize> {
    let s: usize = line.parse().map_err(|_| Error::Parse(format!("bad symbol {line:?}")))?;
    if s == 0 || s > n {
        return Err(Error::SymbolOutOfRange { symbol: s, n });
    }
    Ok(s - 1)
}

/// Streams predictions; rejected input lines are reported and skipped, and
/// turn the final exit code into 2.
pub fn predict(args: &PredictArgs) -> Result<u8> {
    let model = model_from_json(&read_to_string(&args.model)?)?;
    check_alphabet(args.n, model.n())?;
    let n = model.n();
    let mut state = init_belief(&model)?;
    let uniform = fmt_f64(1.0 / n as f64);
    let mut rejected = false;

    let stdin = io::stdin();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for line in stdin.lock().lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let x = match parse_symbol(line, n) {
            Ok(x) => x,
            Err(e) => {
                report(&e);
                rejected = true;
                continue;
            }
        };
        let update = belief_update(&model, &state, x)?;
        state = update.state;
        let mut row = Vec::with_capacity(n + 3);
        if state.valid {
            let p = predict_next_distribution(&model, &state)?;
            row.extend(p.clamped.iter().map(|&v| fmt_f64(v)));
        } else {
            row.extend(std::iter::repeat_n(uniform.clone(), n));
        }
        row.push(fmt_f64(update.alpha));
        row.push(fmt_f64(state.log_scale));
        row.push(if state.valid { "valid" } else { "invalid" }.to_string());
        writeln!(out, "{}", row.join("\t"))?;
        out.flush()?;
    }
    Ok(if rejected { 2 } else { 0 })
}

fn parse_list<T: std::str::FromStr>(text: &str, flag: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("{flag}: bad entry {tok:?}")))
        })
        .collect()
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("--sweep-seeds: bad range {text:?}")))?;
        let b: u64 = b
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("--sweep-seeds: bad range {text:?}")))?;
        return Ok((a..b).collect());
    }
    parse_list(text, "--sweep-seeds")
}

pub fn sweep(args: &SweepArgs) -> Result<u8> {
    let params = hmm_from_json(&read_to_string(&args.hmm)?)?;
    let mut config = SweepConfig::new(
        parse_list(&args.sweep_ns, "--sweep-ns")?,
        parse_seeds(&args.sweep_seeds)?,
        args.eval_len,
    );
    config.mode = args.mode;
    let report = convergence_sweep(&params, &config)?;
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        write_string(&dir.join("sweep_detail.csv"), &report.detail_csv())?;
        write_string(&dir.join("sweep_summary.csv"), &report.summary_csv())?;
    }
    emit(None, &report.summary_csv())?;
    Ok(0)
}
