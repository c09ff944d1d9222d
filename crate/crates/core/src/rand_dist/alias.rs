//! Walker/Vose alias tables.

use rand::Rng;

use crate::error::{Error, Result};

/// O(1) categorical sampler over a fixed weight vector.
///
/// Bucket `i` keeps itself with probability `prob[i]` and otherwise defers to
/// `alias[i]`.
#[derive(Debug, Clone, Default)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    /// Builds a table in O(n). Weights need not be normalized.
    pub fn new(weights: &[f64]) -> Result<Self> {
        let n = weights.len();
        if n > u32::MAX as usize {
            return Err(Error::InvalidWeights(format!("{n} categories")));
        }
        let mut total = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidWeights(format!("weight {i} is {w}")));
            }
            total += w;
        }
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidWeights("weights sum to zero".into()));
        }

        let scale = n as f64 / total;
        let mut scaled: Vec<f64> = weights.iter().map(|&w| w * scale).collect();
        let mut prob = vec![1.0; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();

        let mut small = Vec::with_capacity(n);
        let mut large = Vec::with_capacity(n);
        for (i, &p) in scaled.iter().enumerate() {
            if p < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            prob[s] = scaled[s];
            alias[s] = l as u32;
            // donate the deficit of s to l
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // leftovers are 1 up to rounding
        for i in small.into_iter().chain(large) {
            prob[i] = 1.0;
            alias[i] = i as u32;
        }
        Ok(Self { prob, alias })
    }

    /// One fair-die draw plus one Bernoulli. Panics on an empty table.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        assert!(!self.prob.is_empty(), "sampling from an empty alias table");
        let i = rng.random_range(0..self.prob.len());
        if rng.random::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    /// Category probabilities implied by the table.
    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.prob.len();
        let mut out: Vec<f64> = self.prob.clone();
        for (j, &a) in self.alias.iter().enumerate() {
            out[a as usize] += 1.0 - self.prob[j];
        }
        for p in &mut out {
            *p /= n as f64;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rand_dist::{stream_rng, StreamKind};
    use proptest::prelude::*;

    fn counts(table: &AliasTable, draws: usize, seed: u64) -> Vec<usize> {
        let mut rng = stream_rng(seed, StreamKind::Check, 0, 0);
        let mut c = vec![0; table.len()];
        for _ in 0..draws {
            c[table.sample(&mut rng)] += 1;
        }
        c
    }

    #[test]
    fn fair_coin() {
        let t = AliasTable::new(&[0.5, 0.5]).unwrap();
        let n = 100_000;
        let c = counts(&t, n, 1);
        let se = (0.25 / n as f64).sqrt();
        let f = c[0] as f64 / n as f64;
        assert!((f - 0.5).abs() < 3.0 * se, "{f}");
    }

    #[test]
    fn degenerate_support() {
        let t = AliasTable::new(&[1.0, 0.0]).unwrap();
        assert_eq!(counts(&t, 10_000, 2)[1], 0);
        let single = AliasTable::new(&[3.0]).unwrap();
        assert_eq!(counts(&single, 100, 3), vec![100]);
    }

    #[test]
    fn one_two_three() {
        let t = AliasTable::new(&[1.0, 2.0, 3.0]).unwrap();
        let c = counts(&t, 100_000, 4);
        let p = crate::hypothesis::chi_square_gof(&c, &[1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]);
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(AliasTable::new(&[]).is_err());
        assert!(AliasTable::new(&[0.0, 0.0]).is_err());
        assert!(AliasTable::new(&[1.0, -0.5]).is_err());
        assert!(AliasTable::new(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    #[should_panic(expected = "empty alias table")]
    fn empty_table_is_a_contract_violation() {
        let t = AliasTable::default();
        let mut rng = stream_rng(0, StreamKind::Check, 0, 0);
        t.sample(&mut rng);
    }

    proptest! {
        #[test]
        fn reconstructs_normalized_weights(w in prop::collection::vec(0.0f64..100.0, 1..200)) {
            prop_assume!(w.iter().sum::<f64>() > 0.0);
            let t = AliasTable::new(&w).unwrap();
            let total: f64 = w.iter().sum();
            for (p, wi) in t.probabilities().iter().zip(&w) {
                prop_assert!((p - wi / total).abs() < 1e-12);
            }
        }
    }
}
