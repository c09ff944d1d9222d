//! Φ draws: Dirichlet rows for the partially collapsed sampler, Poisson Pólya
//! urn rows for the Pólya urn sampler.

use rand::Rng;

use crate::corpus::WordId;
use crate::error::Result;
use crate::rand_dist::{dirichlet_sample_into, poisson_sample, PoissonAliasCache};
use crate::stats::{SparsePhi, TopicWord};

/// One Dirichlet row `φ_k ~ Dir(n_k + β)`, written densely into `out`.
pub fn draw_phi_pc_row<R: Rng + ?Sized>(
    row: &[(WordId, u32)],
    beta: f64,
    concentration: &mut [f64],
    out: &mut [f64],
    rng: &mut R,
) -> Result<()> {
    concentration.fill(beta);
    for &(w, c) in row {
        concentration[w as usize] += c as f64;
    }
    dirichlet_sample_into(concentration, out, rng)
}

/// Dense Φ with rows `φ_k ~ Dir(n_k + β)`, all drawn from `rng` in topic
/// order.
pub fn draw_phi_pc<R: Rng + ?Sized>(n: &TopicWord, beta: f64, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    let v = n.vocab_size();
    let mut conc = vec![0.0; v];
    (0..n.num_topics())
        .map(|k| {
            let mut out = vec![0.0; v];
            draw_phi_pc_row(n.row(k), beta, &mut conc, &mut out, rng)?;
            Ok(out)
        })
        .collect()
}

/// Index of the `j`-th word (0-based) absent from the sorted `row`.
#[inline]
fn nth_absent_word(row: &[(WordId, u32)], j: usize) -> WordId {
    // row[i].0 - i counts the absent words below row[i].0 and never decreases
    let (mut lo, mut hi) = (0, row.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if row[mid].0 as usize - mid <= j {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    (j + lo) as WordId
}

/// One Poisson Pólya urn row `φ_k ~ PPU(n_k + β)` in sparse `(word, value)`
/// form, sorted by word.
///
/// Counts at the nonzero positions come from `cache`. The `Z` zero-count
/// positions are handled as a block: their total `T ~ Pois(βZ)` is drawn once
/// and `T` arrivals are scattered uniformly over those positions, which has
/// the same law as `Z` independent Pois(β) draws. A zero row total triggers a
/// full redraw.
pub fn draw_phi_pu_row<R: Rng + ?Sized>(
    row: &[(WordId, u32)],
    vocab_size: usize,
    cache: &PoissonAliasCache,
    rng: &mut R,
    out: &mut Vec<(WordId, f64)>,
) -> Result<()> {
    let beta = cache.beta();
    let zero_slots = vocab_size - row.len();
    let mut counts: Vec<(WordId, u64)> = Vec::with_capacity(row.len());
    let mut scattered: Vec<WordId> = Vec::new();
    loop {
        counts.clear();
        scattered.clear();
        let mut total = 0u64;
        for &(w, l) in row {
            let x = cache.sample(l as u64, rng);
            if x > 0 {
                counts.push((w, x));
                total += x;
            }
        }
        if zero_slots > 0 && beta > 0.0 {
            let arrivals = poisson_sample(beta * zero_slots as f64, rng)?;
            for _ in 0..arrivals {
                let j = rng.random_range(0..zero_slots);
                scattered.push(nth_absent_word(row, j));
            }
            total += arrivals;
        }
        if total == 0 {
            continue;
        }
        scattered.sort_unstable();
        out.clear();
        let t = total as f64;
        let mut s = scattered.iter().peekable();
        let mut c = counts.iter().peekable();
        loop {
            let take_scattered = match (c.peek(), s.peek()) {
                (Some(&&(wc, _)), Some(&&ws)) => ws < wc,
                (None, Some(_)) => true,
                (Some(_), None) => false,
                (None, None) => break,
            };
            if take_scattered {
                let w = *s.next().unwrap();
                let mut x = 1u64;
                while s.peek() == Some(&&w) {
                    s.next();
                    x += 1;
                }
                out.push((w, x as f64 / t));
            } else {
                let &(w, x) = c.next().unwrap();
                out.push((w, x as f64 / t));
            }
        }
        return Ok(());
    }
}

/// Sparse Φ with rows `φ_k ~ PPU(n_k + β)`, all drawn from `rng` in topic
/// order. `cache` fixes the symmetric β.
pub fn draw_phi_pu<R: Rng + ?Sized>(
    n: &TopicWord,
    cache: &PoissonAliasCache,
    rng: &mut R,
) -> Result<SparsePhi> {
    let rows = (0..n.num_topics())
        .map(|k| {
            let mut out = Vec::new();
            draw_phi_pu_row(n.row(k), n.vocab_size(), cache, rng, &mut out)?;
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SparsePhi::from_rows(n.vocab_size(), &rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::{ks_p_value, ks_statistic};
    use crate::rand_dist::{ppu_sample_direct, stream_rng, StreamKind};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn absent_word_index(words in prop::collection::btree_set(0u32..60, 0..40)) {
            let row: Vec<(WordId, u32)> = words.iter().map(|&w| (w, 1)).collect();
            let absent: Vec<WordId> = (0..60).filter(|w| !words.contains(w)).collect();
            for (j, &w) in absent.iter().enumerate() {
                prop_assert_eq!(nth_absent_word(&row, j), w);
            }
        }
    }

    #[test]
    fn pu_row_zero_block_law() {
        let cache = PoissonAliasCache::new(0.01, 100).unwrap();
        let mut rng = stream_rng(1, StreamKind::Check, 0, 0);
        let row = [(0, 5)];
        let n = 400_000;
        let mut second_zero = 0;
        let mut out = Vec::new();
        for _ in 0..n {
            draw_phi_pu_row(&row, 3, &cache, &mut rng, &mut out).unwrap();
            let s: f64 = out.iter().map(|e| e.1).sum();
            assert!((s - 1.0).abs() < 1e-12);
            if !out.iter().any(|e| e.0 == 1) {
                second_zero += 1;
            }
        }
        // conditioned on a nonzero row total (rate 5.03)
        let all_zero = (-5.03f64).exp();
        assert!((all_zero - 0.0065).abs() < 1e-4);
        let p = ((-0.01f64).exp() - all_zero) / (1.0 - all_zero);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let f = second_zero as f64 / n as f64;
        assert!((f - p).abs() < 3.5 * se, "{f} vs {p}");
    }

    #[test]
    fn pu_row_without_prior_mass() {
        let cache = PoissonAliasCache::new(0.0, 100).unwrap();
        let mut rng = stream_rng(2, StreamKind::Check, 0, 0);
        let mut out = Vec::new();
        for _ in 0..1000 {
            draw_phi_pu_row(&[(0, 5)], 3, &cache, &mut rng, &mut out).unwrap();
            assert_eq!(out, vec![(0, 1.0)]);
        }
    }

    #[test]
    fn pu_row_matches_direct_ppu() {
        // the block decomposition has the law of coordinate-wise Poisson draws
        let cache = PoissonAliasCache::new(0.3, 100).unwrap();
        let row = [(1, 2), (4, 1)];
        let conc = [0.3, 2.3, 0.3, 0.3, 1.3, 0.3];
        let mut r1 = stream_rng(3, StreamKind::Check, 0, 0);
        let mut r2 = stream_rng(3, StreamKind::Check, 0, 1);
        let n = 100_000;
        let mut out = Vec::new();
        for probe in [0u32, 1, 3] {
            let a: Vec<f64> = (0..n)
                .map(|_| {
                    draw_phi_pu_row(&row, 6, &cache, &mut r1, &mut out).unwrap();
                    out.iter().find(|e| e.0 == probe).map_or(0.0, |e| e.1)
                })
                .collect();
            let b: Vec<f64> = (0..n)
                .map(|_| ppu_sample_direct(&conc, &mut r2).unwrap().to_dense()[probe as usize])
                .collect();
            let d = ks_statistic(&a, &b);
            assert!(ks_p_value(d, n, n) > 0.001, "word {probe}: D = {d}");
        }
    }

    #[test]
    fn pc_prior_row_mean() {
        let n = TopicWord::zeros(1, 4);
        let mut rng = stream_rng(4, StreamKind::Check, 0, 0);
        let draws = 50_000;
        let mut sum = [0.0; 4];
        for _ in 0..draws {
            let phi = draw_phi_pc(&n, 0.01, &mut rng).unwrap();
            assert!((phi[0].iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (s, p) in sum.iter_mut().zip(&phi[0]) {
                *s += p;
            }
        }
        // Var = (1/4)(3/4)/(0.04 + 1)
        let se = (0.1875f64 / 1.04 / draws as f64).sqrt();
        for s in sum {
            assert!((s / draws as f64 - 0.25).abs() < 3.5 * se);
        }
    }

    #[test]
    fn pc_concentrated_row_mean() {
        let n = TopicWord::from_triplets(2, 5, [(0, 0, 1000), (1, 0, 1000)]).unwrap();
        let mut rng = stream_rng(5, StreamKind::Check, 0, 0);
        let draws = 20_000;
        let mut sums = [0.0; 2];
        for _ in 0..draws {
            let phi = draw_phi_pc(&n, 0.01, &mut rng).unwrap();
            sums[0] += phi[0][0];
            sums[1] += phi[1][0];
        }
        let expect = 1000.01 / 1000.05;
        for s in sums {
            assert!((s / draws as f64 - expect).abs() < 1e-5, "{}", s / draws as f64);
        }
    }
}
