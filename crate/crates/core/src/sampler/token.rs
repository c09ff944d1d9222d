//! The doubly sparse token conditional
//! `P(z = k) ∝ φ[k][v] α_k + φ[k][v] m[d][k]`.

use rand::Rng;

use crate::corpus::WordId;
use crate::stats::{ATableSet, SparsePhi, Topic};

/// Inner-loop work counters, summed over tokens.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TokenCounters {
    /// Topics visited while accumulating σ_b.
    pub b_bucket_work: u64,
    /// Σ min(K_d^(m), K_v^(Φ)) over the same tokens.
    pub sparsity_bound: u64,
    pub a_bucket_hits: u64,
    pub fallback_count: u64,
}

impl TokenCounters {
    pub fn merge(&mut self, other: &TokenCounters) {
        self.b_bucket_work += other.b_bucket_work;
        self.sparsity_bound += other.sparsity_bound;
        self.a_bucket_hits += other.a_bucket_hits;
        self.fallback_count += other.fallback_count;
    }
}

/// Draws a topic for one token of word `v`.
///
/// `counts` is the document's dense topic row and `nonzero` its nonzero
/// topics, both with the token itself already removed. σ_b is accumulated
/// over the shorter of `nonzero` and the nonzero entries of Φ column `v`,
/// probing the other side in O(1). With u ~ U(0, σ_a + σ_b), the a-bucket is
/// served by the word's alias table and the b-bucket by a scan of the
/// recorded `(topic, weight)` pairs.
///
/// An empty Φ column has no mass at all; the draw then falls back to
/// `∝ α_k + m[d][k]` and is counted in `fallback_count`.
#[allow(clippy::too_many_arguments)]
#[inline]
pub fn draw_z_token<R: Rng + ?Sized>(
    v: WordId,
    counts: &[u32],
    nonzero: &[Topic],
    phi: &SparsePhi,
    alpha: &[f64],
    a_tables: &ATableSet,
    rng: &mut R,
    scratch: &mut Vec<(Topic, f64)>,
    counters: &mut TokenCounters,
) -> Topic {
    let (col_topics, col_values) = phi.column(v);
    scratch.clear();
    let mut sigma_b = 0.0;
    let visited = if nonzero.len() <= col_topics.len() {
        let col = phi.dense_column(v);
        for &k in nonzero {
            let w = col[k as usize] * counts[k as usize] as f64;
            if w > 0.0 {
                scratch.push((k, w));
                sigma_b += w;
            }
        }
        nonzero.len()
    } else {
        for (&k, &p) in col_topics.iter().zip(col_values) {
            let c = counts[k as usize];
            if c > 0 {
                let w = p * c as f64;
                scratch.push((k, w));
                sigma_b += w;
            }
        }
        col_topics.len()
    };
    counters.b_bucket_work += visited as u64;
    counters.sparsity_bound += nonzero.len().min(col_topics.len()) as u64;

    let sigma_a = a_tables.sigma_a(v);
    let total = sigma_a + sigma_b;
    if !(total > 0.0) {
        counters.fallback_count += 1;
        return fallback(counts, alpha, rng);
    }
    let mut u = rng.random::<f64>() * total;
    if u < sigma_a {
        counters.a_bucket_hits += 1;
        return col_topics[a_tables.table(v).sample(rng)];
    }
    u -= sigma_a;
    for &(k, w) in scratch.iter() {
        if u < w {
            return k;
        }
        u -= w;
    }
    // rounding can leave u just past the last weight
    scratch.last().map(|e| e.0).expect("b-bucket has mass")
}

fn fallback<R: Rng + ?Sized>(counts: &[u32], alpha: &[f64], rng: &mut R) -> Topic {
    let total: f64 = counts.iter().zip(alpha).map(|(&c, &a)| a + c as f64).sum();
    let mut u = rng.random::<f64>() * total;
    for (k, (&c, &a)) in counts.iter().zip(alpha).enumerate() {
        let w = a + c as f64;
        if u < w {
            return k as Topic;
        }
        u -= w;
    }
    (counts.len() - 1) as Topic
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::chi_square_gof;
    use crate::rand_dist::{stream_rng, StreamKind};
    use crate::stats::rebuild_a_tables;

    fn run(
        v: WordId,
        counts: &[u32],
        phi: &SparsePhi,
        alpha: &[f64],
        draws: usize,
        seed: u64,
    ) -> (Vec<usize>, TokenCounters) {
        let nonzero: Vec<Topic> = (0..counts.len() as u32).filter(|&k| counts[k as usize] > 0).collect();
        let a = rebuild_a_tables(phi, alpha);
        let mut rng = stream_rng(seed, StreamKind::Check, 0, 0);
        let mut scratch = Vec::new();
        let mut ctr = TokenCounters::default();
        let mut hist = vec![0; counts.len()];
        for _ in 0..draws {
            let k = draw_z_token(v, counts, &nonzero, phi, alpha, &a, &mut rng, &mut scratch, &mut ctr);
            hist[k as usize] += 1;
        }
        (hist, ctr)
    }

    #[test]
    fn two_topic_example() {
        // column v: (0.2, 0.5); m = (3, 0); alpha 0.1 -> (0.62, 0.05)
        let phi = SparsePhi::from_rows(2, &[vec![(0, 0.8), (1, 0.2)], vec![(0, 0.5), (1, 0.5)]]);
        let (hist, ctr) = run(1, &[3, 0], &phi, &[0.1, 0.1], 100_000, 1);
        let p1: f64 = 0.62 / 0.67;
        assert!((p1 - 0.9254).abs() < 1e-4);
        assert!(chi_square_gof(&hist, &[p1, 1.0 - p1]) > 0.001);
        assert!(ctr.b_bucket_work <= ctr.sparsity_bound);
        assert_eq!(ctr.fallback_count, 0);
    }

    #[test]
    fn empty_document_uses_only_the_alias_table() {
        let phi = SparsePhi::from_rows(2, &[vec![(0, 0.8), (1, 0.2)], vec![(0, 0.5), (1, 0.5)]]);
        let (hist, ctr) = run(1, &[0, 0], &phi, &[0.1, 0.1], 50_000, 2);
        assert_eq!(ctr.a_bucket_hits, 50_000);
        assert_eq!(ctr.b_bucket_work, 0);
        assert!(chi_square_gof(&hist, &[0.2 / 0.7, 0.5 / 0.7]) > 0.001);
    }

    #[test]
    fn dense_column_visits_only_document_topics() {
        let k = 8;
        let rows: Vec<Vec<(WordId, f64)>> = (0..k).map(|_| vec![(0, 0.5), (1, 0.5)]).collect();
        let phi = SparsePhi::from_rows(2, &rows);
        let mut counts = vec![0; k];
        counts[5] = 4;
        let (_, ctr) = run(0, &counts, &phi, &vec![0.1; k], 1000, 3);
        assert_eq!(ctr.b_bucket_work, 1000);
        assert_eq!(ctr.sparsity_bound, 1000);
    }

    #[test]
    fn law_matches_direct_normalization() {
        let k = 6;
        let rows: Vec<Vec<(WordId, f64)>> = vec![
            vec![(0, 0.3), (2, 0.7)],
            vec![(2, 1.0)],
            vec![(0, 0.1), (1, 0.4), (2, 0.5)],
            vec![(1, 1.0)],
            vec![(0, 0.6), (2, 0.4)],
            vec![(0, 0.25), (1, 0.25), (2, 0.5)],
        ];
        let phi = SparsePhi::from_rows(3, &rows);
        let alpha = [0.1, 0.2, 0.05, 0.3, 0.1, 0.15];
        // document topics outnumber the column in one case and not the other
        for (v, counts) in [(0u32, [2u32, 1, 0, 4, 0, 1]), (2, [0, 0, 3, 0, 0, 0])] {
            let weights: Vec<f64> = (0..k)
                .map(|t| phi.get(t as Topic, v) * (alpha[t] + counts[t] as f64))
                .collect();
            let (hist, ctr) = run(v, &counts, &phi, &alpha, 100_000, 4 + v as u64);
            assert!(chi_square_gof(&hist, &weights) > 0.001, "word {v}: {hist:?}");
            assert!(ctr.b_bucket_work <= ctr.sparsity_bound);
        }
    }

    #[test]
    fn empty_column_falls_back_to_document_prior() {
        let phi = SparsePhi::from_rows(2, &[vec![(0, 1.0)], vec![(0, 1.0)]]);
        let (hist, ctr) = run(1, &[2, 0], &phi, &[0.5, 0.5], 60_000, 9);
        assert_eq!(ctr.fallback_count, 60_000);
        assert!(chi_square_gof(&hist, &[2.5, 0.5]) > 0.001);
    }
}
