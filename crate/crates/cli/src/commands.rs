//! The subcommands other than `train`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use pulda_core::corpus::{read_uci_bow, synth_corpus, write_uci_bow, Corpus, SynthParams};
use pulda_core::eval::topic_coherence;
use pulda_core::ppu_check::{run_ppu_suite, SuiteSettings};
use pulda_core::stats::read_snapshot;
use pulda_core::tdemo::{run_t_comparison, write_t_report};

use crate::config::Settings;
use crate::{Common, Failure};

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

pub fn load_corpus(s: &Settings) -> Result<Corpus, Failure> {
    let docword = open(s.require_corpus()?)?;
    let vocab = s.vocab.as_deref().map(open).transpose()?;
    Ok(read_uci_bow(docword, vocab, s.rare_limit)?)
}

/// Writes `text` to stdout and, when `--out` is set, to `name` inside it.
fn report(s: &Settings, name: &str, text: &[u8]) -> Result<(), Failure> {
    std::io::stdout().write_all(text)?;
    if let Some(dir) = &s.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), text)?;
    }
    Ok(())
}

pub fn synth(common: &Common, vocab_size: usize, docs: usize, doc_len: usize) -> Result<(), Failure> {
    let s = Settings::resolve(common)?;
    let out = s.require_out()?;
    let params = SynthParams {
        topics: s.topics.unwrap_or(10),
        vocab_size,
        docs,
        doc_len,
        alpha: s.alpha,
        beta: s.beta,
        seed: s.seed,
    };
    let synth = synth_corpus(&params).map_err(|e| Failure::Usage(e.to_string()))?;
    std::fs::create_dir_all(out)?;
    let mut docword = BufWriter::new(File::create(out.join("docword.txt"))?);
    let mut vocab = BufWriter::new(File::create(out.join("vocab.txt"))?);
    write_uci_bow(&synth.corpus, &mut docword, &mut vocab)?;
    docword.flush()?;
    vocab.flush()?;
    println!(
        "{} documents, {} tokens, {} words in {}",
        synth.corpus.num_docs(),
        synth.corpus.num_tokens(),
        synth.corpus.vocab_size(),
        out.display()
    );
    Ok(())
}

pub fn ppu_check(common: &Common) -> Result<(), Failure> {
    let s = Settings::resolve(common)?;
    let suite = run_ppu_suite(SuiteSettings::default(), s.seed)?;
    let mut table = Vec::new();
    suite.write_table(&mut table)?;
    report(&s, "ppu_check.txt", &table)?;
    if suite.passed() {
        Ok(())
    } else {
        Err(Failure::Check("Poisson Pólya urn suite outside its thresholds".into()))
    }
}

pub fn tdemo(common: &Common, rhos: &[f64]) -> Result<(), Failure> {
    let s = Settings::resolve(common)?;
    let rows = run_t_comparison(rhos, s.iters.unwrap_or(10_000), s.seed).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut text = Vec::new();
    write_t_report(&mut text, &rows)?;
    report(&s, "tdemo.csv", &text)
}

pub fn eval_coherence(common: &Common, snapshot: &Path) -> Result<(), Failure> {
    let s = Settings::resolve(common)?;
    let corpus = load_corpus(&s)?;
    let snap = read_snapshot(snapshot)?;
    if snap.header.vocab_size != corpus.vocab_size() || snap.header.docs != corpus.num_docs() {
        return Err(Failure::Data(format!(
            "snapshot has D={} V={} but the corpus has D={} V={}; use the training --rare-limit",
            snap.header.docs,
            snap.header.vocab_size,
            corpus.num_docs(),
            corpus.vocab_size()
        )));
    }
    let scores = topic_coherence(&snap.topic_word, &corpus, s.top)?;
    let mut text = Vec::new();
    writeln!(text, "topic,coherence")?;
    for (k, c) in scores.iter().enumerate() {
        writeln!(text, "{k},{c}")?;
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    writeln!(text, "mean,{mean}")?;
    report(&s, "coherence.csv", &text)
}
