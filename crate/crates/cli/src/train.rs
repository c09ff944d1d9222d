//! The `train` subcommand and its run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use pulda_core::corpus::Corpus;
use pulda_core::eval::{top_words, write_metrics_row, METRICS_CSV_HEADER};
use pulda_core::sampler::{IterationMetrics, Sampler, SamplerConfig};
use pulda_core::stats::{init_state, write_snapshot, SnapshotHeader};

use crate::commands::load_corpus;
use crate::config::Settings;
use crate::{Common, Failure};

/// One line of the JSONL event log.
#[derive(Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Event<'a> {
    Start {
        sampler: &'a str,
        topics: usize,
        docs: usize,
        vocab_size: usize,
        tokens: usize,
        seed: u64,
        workers: usize,
    },
    Iteration {
        iteration: u64,
        log_joint: f64,
        phi_seconds: f64,
        z_seconds: f64,
        b_work: u64,
        bound: u64,
        a_hits: u64,
        fallbacks: u64,
    },
    Finish {
        iterations: usize,
        final_log_joint: f64,
        fallbacks: u64,
    },
}

fn emit<W: Write>(out: &mut W, event: &Event) -> Result<(), Failure> {
    serde_json::to_writer(&mut *out, event).map_err(|e| Failure::Data(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// SHA-256 over the filtered corpus: vocabulary words, then each document's
/// length and token ids, all little-endian.
pub fn corpus_hash(corpus: &Corpus) -> String {
    let mut h = Sha256::new();
    for w in corpus.vocab().words() {
        h.update(w.as_bytes());
        h.update(b"\n");
    }
    for doc in corpus.docs() {
        h.update((doc.len() as u64).to_le_bytes());
        for &t in doc {
            h.update(t.to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn display(p: Option<&Path>) -> String {
    p.map(|p| p.display().to_string()).unwrap_or_default()
}

pub fn train(common: &Common) -> Result<(), Failure> {
    let s = Settings::resolve(common)?;
    let corpus_path = s.require_corpus()?.to_path_buf();
    let out = s.require_out()?.to_path_buf();
    let topics = s.topics.ok_or_else(|| Failure::Usage("-K is required".into()))?;
    let mut config = SamplerConfig::new(s.sampler, topics);
    config.alpha = vec![s.alpha];
    config.beta = s.beta;
    if let Some(n) = s.iters {
        config.iterations = n;
    }
    config.seed = s.seed;
    config.workers = s.workers;
    config.cache_limit = s.cache_limit;
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    let started = unix_now();
    let corpus = load_corpus(&s)?;
    std::fs::create_dir_all(&out)?;
    let metrics_path = out.join("metrics.csv");
    let events_path = out.join("events.jsonl");
    let mut metrics_out = BufWriter::new(File::create(&metrics_path)?);
    let mut events = BufWriter::new(File::create(&events_path)?);
    writeln!(metrics_out, "{METRICS_CSV_HEADER}")?;
    let variant = config.variant.to_string();
    emit(
        &mut events,
        &Event::Start {
            sampler: &variant,
            topics,
            docs: corpus.num_docs(),
            vocab_size: corpus.vocab_size(),
            tokens: corpus.num_tokens(),
            seed: config.seed,
            workers: config.workers,
        },
    )?;

    let mut state = init_state(&corpus, topics, config.seed)?;
    let mut sampler = Sampler::new(config.clone(), &corpus)?;
    let mut last = IterationMetrics::default();
    let mut fallbacks = 0;
    for _ in 0..config.iterations {
        let mut m = sampler.run_iteration(&mut state, &corpus)?;
        if !s.timings {
            m.phi_phase_seconds = 0.0;
            m.z_phase_seconds = 0.0;
        }
        write_metrics_row(&mut metrics_out, &m, s.timings)?;
        emit(
            &mut events,
            &Event::Iteration {
                iteration: m.iteration,
                log_joint: m.log_joint,
                phi_seconds: m.phi_phase_seconds,
                z_seconds: m.z_phase_seconds,
                b_work: m.b_bucket_work,
                bound: m.sparsity_bound,
                a_hits: m.a_bucket_hits,
                fallbacks: m.fallback_count,
            },
        )?;
        fallbacks += m.fallback_count;
        last = m;
    }
    metrics_out.flush()?;
    emit(
        &mut events,
        &Event::Finish {
            iterations: config.iterations,
            final_log_joint: last.log_joint,
            fallbacks,
        },
    )?;

    let header = SnapshotHeader {
        topics,
        vocab_size: corpus.vocab_size(),
        docs: corpus.num_docs(),
        alpha: s.alpha,
        beta: s.beta,
        iteration: sampler.iteration(),
        seed: config.seed,
    };
    let snapshot = write_snapshot(&out.join("snapshot"), &header, &state)?;

    let top_path = out.join("top_words.txt");
    let mut top = BufWriter::new(File::create(&top_path)?);
    for (k, words) in top_words(state.topic_word(), s.top).iter().enumerate() {
        let names: Vec<&str> = words.iter().map(|&w| corpus.vocab().word(w)).collect();
        writeln!(top, "{k}: {}", names.join(" "))?;
    }
    top.flush()?;

    let finished = unix_now();
    let mut manifest = BufWriter::new(File::create(out.join("manifest.txt"))?);
    let entries: Vec<(&str, String)> = vec![
        ("command", "train".into()),
        ("corpus", corpus_path.display().to_string()),
        ("vocab", display(s.vocab.as_deref())),
        ("rare_limit", s.rare_limit.to_string()),
        ("sampler", variant.clone()),
        ("K", topics.to_string()),
        ("alpha", s.alpha.to_string()),
        ("beta", s.beta.to_string()),
        ("iters", config.iterations.to_string()),
        ("seed", config.seed.to_string()),
        ("workers", config.workers.to_string()),
        ("L", config.cache_limit.to_string()),
        ("timings", s.timings.to_string()),
        ("top", s.top.to_string()),
        ("out", out.display().to_string()),
        ("docs", corpus.num_docs().to_string()),
        ("vocab_size", corpus.vocab_size().to_string()),
        ("tokens", corpus.num_tokens().to_string()),
        ("corpus_sha256", corpus_hash(&corpus)),
        ("started_unix", format!("{started:.3}")),
        ("finished_unix", format!("{finished:.3}")),
        ("final_log_joint", last.log_joint.to_string()),
        ("metrics", metrics_path.display().to_string()),
        ("events", events_path.display().to_string()),
        ("snapshot_model", snapshot.model.display().to_string()),
        ("snapshot_topic_word", snapshot.topic_word.display().to_string()),
        ("snapshot_doc_topic", snapshot.doc_topic.display().to_string()),
        ("top_words", top_path.display().to_string()),
    ];
    for (k, v) in entries {
        writeln!(manifest, "{k} = {v}")?;
    }
    manifest.flush()?;
    println!(
        "{} iterations of {variant}, final log joint {}; outputs in {}",
        config.iterations,
        last.log_joint,
        out.display()
    );
    Ok(())
}
