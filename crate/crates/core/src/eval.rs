//! Diagnostics: the collapsed log joint, topic coherence, effective sample
//! size, top words and the per-iteration metrics CSV.

use std::io::Write;

use statrs::function::gamma::ln_gamma;

use crate::corpus::{Corpus, WordId};
use crate::error::{domain, Result};
use crate::sampler::IterationMetrics;
use crate::stats::{recount, DocTopic, SparsePhi, Topic, TopicState, TopicWord};

/// One scalar per iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSeries {
    pub label: String,
    pub values: Vec<f64>,
}

impl TraceSeries {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if let Some(x) = values.iter().find(|x| !x.is_finite()) {
            return Err(domain(format!("trace values must be finite, got {x}")));
        }
        Ok(Self {
            label: label.into(),
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ess(&self) -> f64 {
        ess(&self.values)
    }
}

/// Collapsed `log p(w, z)` under symmetric priors, tallying `z` first.
pub fn log_joint(corpus: &Corpus, z: &[Topic], k: usize, alpha: f64, beta: f64) -> Result<f64> {
    let (m, n) = recount(corpus, z, k)?;
    Ok(log_joint_counts(&m, &n, corpus, &vec![alpha; k], beta))
}

/// As [`log_joint`] for an existing state, with one α per topic.
pub fn log_joint_state(state: &TopicState, corpus: &Corpus, alpha: &[f64], beta: f64) -> f64 {
    log_joint_counts(state.doc_topic(), state.topic_word(), corpus, alpha, beta)
}

/// ```text
/// Σ_k [Σ_v lnΓ(n_kv + β) − lnΓ(n_k· + Vβ)] + K [lnΓ(Vβ) − V lnΓ(β)]
///   + Σ_d [Σ_k lnΓ(m_dk + α_k) − lnΓ(N_d + Σα)] + D [lnΓ(Σα) − Σ_k lnΓ(α_k)]
/// ```
///
/// evaluated over nonzero counts only (zero counts cancel against the
/// normalizers).
pub fn log_joint_counts(m: &DocTopic, n: &TopicWord, corpus: &Corpus, alpha: &[f64], beta: f64) -> f64 {
    let v = n.vocab_size() as f64;
    let lg_beta = ln_gamma(beta);
    let lg_vbeta = ln_gamma(v * beta);
    let mut word_part = 0.0;
    for k in 0..n.num_topics() {
        let mut s = 0.0;
        for &(_, c) in n.row(k) {
            s += ln_gamma(c as f64 + beta) - lg_beta;
        }
        word_part += s + lg_vbeta - ln_gamma(n.total(k) as f64 + v * beta);
    }
    let alpha_sum: f64 = alpha.iter().sum();
    let lg_alpha: Vec<f64> = alpha.iter().map(|&a| ln_gamma(a)).collect();
    let lg_alpha_sum = ln_gamma(alpha_sum);
    let mut doc_part = 0.0;
    for d in 0..m.num_docs() {
        let mut s = 0.0;
        for (k, &c) in m.row(d).iter().enumerate() {
            if c > 0 {
                s += ln_gamma(c as f64 + alpha[k]) - lg_alpha[k];
            }
        }
        doc_part += s + lg_alpha_sum - ln_gamma(corpus.doc(d).len() as f64 + alpha_sum);
    }
    word_part + doc_part
}

/// Per topic, the `m` highest-count words, ties broken by ascending id. Words
/// with zero count fill in (ascending) when a topic has fewer than `m`
/// nonzero words; `m` is capped at V.
pub fn top_words(n: &TopicWord, m: usize) -> Vec<Vec<WordId>> {
    (0..n.num_topics())
        .map(|k| {
            let mut row: Vec<(WordId, u32)> = n.row(k).to_vec();
            row.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            let mut out: Vec<WordId> = row.iter().take(m).map(|e| e.0).collect();
            let mut w = 0;
            while out.len() < m.min(n.vocab_size()) {
                if n.get(k, w) == 0 {
                    out.push(w);
                }
                w += 1;
            }
            out
        })
        .collect()
}

/// As [`top_words`], ranking by probability in Φ.
pub fn top_words_phi(phi: &SparsePhi, m: usize) -> Vec<Vec<WordId>> {
    let mut rows: Vec<Vec<(WordId, f64)>> = vec![Vec::new(); phi.num_topics()];
    for w in 0..phi.vocab_size() as WordId {
        let (topics, values) = phi.column(w);
        for (&k, &p) in topics.iter().zip(values) {
            rows[k as usize].push((w, p));
        }
    }
    rows.into_iter()
        .map(|mut row| {
            row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let mut out: Vec<WordId> = row.iter().take(m).map(|e| e.0).collect();
            let present: std::collections::HashSet<WordId> = out.iter().copied().collect();
            let mut w = 0;
            while out.len() < m.min(phi.vocab_size()) {
                if !present.contains(&w) {
                    out.push(w);
                }
                w += 1;
            }
            out
        })
        .collect()
}

/// Sorted ids of documents containing each word in `words`.
fn document_sets(corpus: &Corpus, words: &[WordId]) -> Vec<Vec<u32>> {
    let mut slot = vec![usize::MAX; corpus.vocab_size()];
    for (i, &w) in words.iter().enumerate() {
        slot[w as usize] = i;
    }
    let mut sets = vec![Vec::new(); words.len()];
    for (d, doc) in corpus.docs().enumerate() {
        for &w in doc {
            let i = slot[w as usize];
            if i != usize::MAX && sets[i].last() != Some(&(d as u32)) {
                sets[i].push(d as u32);
            }
        }
    }
    sets
}

fn intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Coherence of one ranked word list:
/// `Σ_{m≥2} Σ_{l<m} ln((D(v_m, v_l) + 1) / D(v_l))`, with `D` counting
/// documents.
pub fn coherence_of(corpus: &Corpus, words: &[WordId]) -> Result<f64> {
    let sets = document_sets(corpus, words);
    let mut score = 0.0;
    for m in 1..words.len() {
        for l in 0..m {
            let dl = sets[l].len();
            if dl == 0 {
                return Err(domain(format!("word {} never occurs in the corpus", words[l])));
            }
            score += ((intersection_size(&sets[m], &sets[l]) + 1) as f64 / dl as f64).ln();
        }
    }
    Ok(score)
}

/// Per-topic coherence over each topic's top `m` words with nonzero count.
pub fn topic_coherence(n: &TopicWord, corpus: &Corpus, m: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(domain("coherence needs at least two top words"));
    }
    top_words(n, m)
        .into_iter()
        .enumerate()
        .map(|(k, words)| {
            let words: Vec<WordId> = words.into_iter().filter(|&w| n.get(k, w) > 0).collect();
            coherence_of(corpus, &words)
        })
        .collect()
}

/// Effective sample size with Geyer's initial monotone positive sequence.
///
/// Pair sums `Γ_j = γ(2j) + γ(2j+1)` of the sample autocovariances are added
/// while positive, each capped at its predecessor. The result is capped at the
/// trace length; a constant trace has ESS equal to its length.
pub fn ess(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return n as f64;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let acov = |t: usize| x[..n - t].iter().zip(&x[t..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let g0 = acov(0);
    if g0 <= 0.0 {
        return n as f64;
    }
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut t = 0;
    while t + 1 < n {
        let pair = (if t == 0 { g0 } else { acov(t) }) + acov(t + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        t += 2;
    }
    let var = -g0 + 2.0 * sum;
    if var <= 0.0 {
        return n as f64;
    }
    (n as f64 * g0 / var).min(n as f64)
}

pub const METRICS_CSV_HEADER: &str = "iteration,log_joint,phi_seconds,z_seconds,b_work,bound,fallbacks";

/// Writes the metrics CSV. With `timings` false both timing columns are
/// written as 0, which makes the file a pure function of the seed.
pub fn write_metrics_csv<W: Write>(mut out: W, metrics: &[IterationMetrics], timings: bool) -> std::io::Result<()> {
    writeln!(out, "{METRICS_CSV_HEADER}")?;
    for m in metrics {
        write_metrics_row(&mut out, m, timings)?;
    }
    Ok(())
}

pub fn write_metrics_row<W: Write>(mut out: W, m: &IterationMetrics, timings: bool) -> std::io::Result<()> {
    let (p, z) = if timings {
        (m.phi_phase_seconds, m.z_phase_seconds)
    } else {
        (0.0, 0.0)
    };
    writeln!(
        out,
        "{},{},{},{},{},{},{}",
        m.iteration, m.log_joint, p, z, m.b_bucket_work, m.sparsity_bound, m.fallback_count
    )
}
