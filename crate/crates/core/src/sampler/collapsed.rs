//! The fully collapsed sampler, with Θ and Φ both integrated out.

use rand::Rng;

use crate::corpus::Corpus;
use crate::error::Result;
use crate::rand_dist::{stream_rng, StreamKind};
use crate::stats::{Topic, TopicState, TopicWord};

/// Unnormalized full conditional of one token of some word `v`:
/// `(n[k][v] + β) / (n[k][·] + Vβ) · (m[d][k] + α_k)`, with the token's own
/// counts already removed. `n_col[k]` is `n[k][v]`.
#[allow(clippy::too_many_arguments)]
#[inline]
pub fn collapsed_conditional(
    n_col: &[u32],
    n_totals: &[u64],
    m_row: &[u32],
    alpha: &[f64],
    beta: f64,
    vocab_size: usize,
    out: &mut [f64],
) {
    let vb = vocab_size as f64 * beta;
    for k in 0..out.len() {
        out[k] = (n_col[k] as f64 + beta) / (n_totals[k] as f64 + vb) * (m_row[k] as f64 + alpha[k]);
    }
}

/// One sequential sweep over every token, updating `m` and `n` immediately.
/// Draws come from a single stream named by `(seed, iteration)`.
pub fn collapsed_iteration(
    state: &mut TopicState,
    corpus: &Corpus,
    alpha: &[f64],
    beta: f64,
    seed: u64,
    iteration: u64,
) -> Result<()> {
    let k = state.num_topics();
    let v = corpus.vocab_size();
    let mut rng = stream_rng(seed, StreamKind::Collapsed, iteration, 0);
    let mut n = state.n.to_dense_by_word();
    let mut totals = state.n.totals().to_vec();
    let mut weights = vec![0.0; k];
    let tokens = corpus.tokens();
    for d in 0..corpus.num_docs() {
        let mut row = state.m.row_mut(d);
        for i in corpus.doc_range(d) {
            let w = tokens[i] as usize;
            let old = state.z[i] as usize;
            let col = &mut n[w * k..(w + 1) * k];
            row.decrement(old as Topic);
            col[old] -= 1;
            totals[old] -= 1;
            collapsed_conditional(col, &totals, row.counts(), alpha, beta, v, &mut weights);
            let new = draw_categorical(&weights, &mut rng);
            row.increment(new as Topic);
            col[new] += 1;
            totals[new] += 1;
            state.z[i] = new as Topic;
        }
    }
    state.n = TopicWord::from_dense_by_word(k, v, &n);
    Ok(())
}

fn draw_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, &w) in weights.iter().enumerate() {
        if u < w {
            return k;
        }
        u -= w;
    }
    weights.len() - 1
}
