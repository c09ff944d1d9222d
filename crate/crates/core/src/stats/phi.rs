//! Column-indexed sparse Φ and the per-word a-bucket alias tables.

use crate::corpus::WordId;
use crate::error::{Error, Result};
use crate::rand_dist::AliasTable;

use super::Topic;

/// Sparse word-topic probabilities.
///
/// Column `v` lists its structurally nonzero `(topic, φ[k][v])` entries in
/// ascending topic order. A word-major dense mirror gives O(1) probes of any
/// entry; structurally absent entries read as exactly 0. Refilling clears only
/// the previously stored entries, so a refill costs O(nnz) rather than O(KV).
#[derive(Debug, Clone)]
pub struct SparsePhi {
    k: usize,
    v: usize,
    col_start: Vec<usize>,
    col_topics: Vec<Topic>,
    col_values: Vec<f64>,
    dense: Vec<f64>,
}

impl SparsePhi {
    pub fn new(k: usize, v: usize) -> Self {
        Self {
            k,
            v,
            col_start: vec![0; v + 1],
            col_topics: Vec::new(),
            col_values: Vec::new(),
            dense: vec![0.0; k * v],
        }
    }

    /// Φ from sparse rows: `rows[k]` holds `(word, value)` pairs sorted by
    /// word, with every value > 0.
    pub fn from_rows(v: usize, rows: &[Vec<(WordId, f64)>]) -> Self {
        let mut phi = Self::new(rows.len(), v);
        phi.fill_from_rows(rows);
        phi
    }

    /// Φ from dense rows (`rows[k][v]`); zero entries are left out.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let v = rows.first().map_or(0, Vec::len);
        let sparse: Vec<Vec<(WordId, f64)>> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|e| *e.1 > 0.0)
                    .map(|(w, &p)| (w as WordId, p))
                    .collect()
            })
            .collect();
        Self::from_rows(v, &sparse)
    }

    /// Replaces the contents with `rows`, reusing allocations.
    pub fn fill_from_rows(&mut self, rows: &[Vec<(WordId, f64)>]) {
        assert_eq!(rows.len(), self.k);
        for w in 0..self.v {
            for i in self.col_start[w]..self.col_start[w + 1] {
                self.dense[w * self.k + self.col_topics[i] as usize] = 0.0;
            }
        }
        let nnz: usize = rows.iter().map(Vec::len).sum();
        self.col_start.iter_mut().for_each(|s| *s = 0);
        for row in rows {
            for &(w, _) in row {
                self.col_start[w as usize + 1] += 1;
            }
        }
        for w in 0..self.v {
            self.col_start[w + 1] += self.col_start[w];
        }
        self.col_topics.resize(nnz, 0);
        self.col_values.resize(nnz, 0.0);
        let mut cursor: Vec<usize> = self.col_start[..self.v].to_vec();
        // rows in topic order, so every column comes out sorted by topic
        for (t, row) in rows.iter().enumerate() {
            for &(w, p) in row {
                debug_assert!(p > 0.0);
                let slot = &mut cursor[w as usize];
                self.col_topics[*slot] = t as Topic;
                self.col_values[*slot] = p;
                *slot += 1;
                self.dense[w as usize * self.k + t] = p;
            }
        }
    }

    pub fn num_topics(&self) -> usize {
        self.k
    }

    pub fn vocab_size(&self) -> usize {
        self.v
    }

    pub fn nnz(&self) -> usize {
        self.col_topics.len()
    }

    /// Nonzero topics and values of column `v`.
    #[inline]
    pub fn column(&self, v: WordId) -> (&[Topic], &[f64]) {
        let r = self.col_start[v as usize]..self.col_start[v as usize + 1];
        (&self.col_topics[r.clone()], &self.col_values[r])
    }

    #[inline]
    pub fn column_nnz(&self, v: WordId) -> usize {
        self.col_start[v as usize + 1] - self.col_start[v as usize]
    }

    /// Dense column `v` (length K).
    #[inline]
    pub fn dense_column(&self, v: WordId) -> &[f64] {
        &self.dense[v as usize * self.k..(v as usize + 1) * self.k]
    }

    #[inline]
    pub fn get(&self, k: Topic, v: WordId) -> f64 {
        self.dense[v as usize * self.k + k as usize]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.k];
        for (&t, &p) in self.col_topics.iter().zip(&self.col_values) {
            s[t as usize] += p;
        }
        s
    }

    /// Every row sums to one within `tol`.
    pub fn check_rows(&self, tol: f64) -> Result<()> {
        for (k, s) in self.row_sums().into_iter().enumerate() {
            if (s - 1.0).abs() > tol {
                return Err(Error::Consistency(format!("row {k} of phi sums to {s}")));
            }
        }
        Ok(())
    }
}

/// Per-word alias tables over the a-bucket weights `φ[k][v] α_k`, restricted
/// to the structurally nonzero entries of column `v`, plus their sums σ_a(v).
#[derive(Debug, Clone, Default)]
pub struct ATableSet {
    tables: Vec<AliasTable>,
    sigma_a: Vec<f64>,
}

impl ATableSet {
    /// Alias table of word `v`. Index `i` maps to the `i`-th topic of
    /// `phi.column(v)`. Empty when the column is.
    #[inline]
    pub fn table(&self, v: WordId) -> &AliasTable {
        &self.tables[v as usize]
    }

    #[inline]
    pub fn sigma_a(&self, v: WordId) -> f64 {
        self.sigma_a[v as usize]
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// As [`rebuild_a_tables`], splitting the vocabulary across `workers`
    /// threads. The result does not depend on `workers`.
    pub fn build_parallel(phi: &SparsePhi, alpha: &[f64], workers: usize) -> Self {
        let v = phi.vocab_size();
        let workers = workers.clamp(1, v.max(1));
        if workers == 1 {
            return build_range(phi, alpha, 0..v);
        }
        let chunk = v.div_ceil(workers);
        let parts: Vec<ATableSet> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|i| {
                    let r = (i * chunk).min(v)..((i + 1) * chunk).min(v);
                    s.spawn(move || build_range(phi, alpha, r))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("a-table worker panicked")).collect()
        });
        let mut out = ATableSet {
            tables: Vec::with_capacity(v),
            sigma_a: Vec::with_capacity(v),
        };
        for p in parts {
            out.tables.extend(p.tables);
            out.sigma_a.extend(p.sigma_a);
        }
        out
    }
}

fn build_range(phi: &SparsePhi, alpha: &[f64], words: std::ops::Range<usize>) -> ATableSet {
    let mut tables = Vec::with_capacity(words.len());
    let mut sigma_a = Vec::with_capacity(words.len());
    let mut weights = Vec::new();
    for w in words {
        let (topics, values) = phi.column(w as WordId);
        weights.clear();
        weights.extend(topics.iter().zip(values).map(|(&t, &p)| p * alpha[t as usize]));
        let s: f64 = weights.iter().sum();
        if weights.is_empty() {
            tables.push(AliasTable::default());
        } else {
            tables.push(AliasTable::new(&weights).expect("positive a-bucket weights"));
        }
        sigma_a.push(s);
    }
    ATableSet { tables, sigma_a }
}

/// Builds the a-bucket alias tables and σ_a for every word. O(nnz(Φ)).
pub fn rebuild_a_tables(phi: &SparsePhi, alpha: &[f64]) -> ATableSet {
    assert_eq!(alpha.len(), phi.num_topics());
    build_range(phi, alpha, 0..phi.vocab_size())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> SparsePhi {
        // column 1 holds (k0: 0.2, k2: 0.5); rows normalized
        let rows = vec![
            vec![(0, 0.8), (1, 0.2)],
            vec![(2, 1.0)],
            vec![(0, 0.5), (1, 0.5)],
        ];
        SparsePhi::from_rows(3, &rows)
    }

    #[test]
    fn columns_and_lookups() {
        let phi = example();
        assert_eq!(phi.nnz(), 5);
        assert_eq!(phi.column(1), (&[0u32, 2][..], &[0.2, 0.5][..]));
        assert_eq!(phi.column_nnz(2), 1);
        assert_eq!(phi.get(1, 1), 0.0);
        assert_eq!(phi.get(2, 1), 0.5);
        phi.check_rows(1e-9).unwrap();
    }

    #[test]
    fn refill_clears_old_entries() {
        let mut phi = example();
        phi.fill_from_rows(&[vec![(2, 1.0)], vec![(0, 1.0)], vec![(1, 1.0)]]);
        assert_eq!(phi.get(0, 1), 0.0);
        assert_eq!(phi.get(0, 0), 0.0);
        assert_eq!(phi.get(2, 1), 1.0);
        assert_eq!(phi.column(1), (&[2u32][..], &[1.0][..]));
        assert_eq!(phi.nnz(), 3);
        let dense_nnz = (0..3u32)
            .flat_map(|w| (0..3u32).map(move |k| (k, w)))
            .filter(|&(k, w)| phi.get(k, w) != 0.0)
            .count();
        assert_eq!(dense_nnz, 3);
    }

    #[test]
    fn sigma_a_example() {
        let phi = example();
        let a = rebuild_a_tables(&phi, &[0.1, 0.1, 0.1]);
        assert!((a.sigma_a(1) - 0.07).abs() < 1e-15);
        let p = a.table(1).probabilities();
        assert!((p[0] - 0.02 / 0.07).abs() < 1e-12);
        assert!((p[1] - 0.05 / 0.07).abs() < 1e-12);
    }

    #[test]
    fn empty_column() {
        let phi = SparsePhi::from_rows(3, &[vec![(0, 1.0)], vec![(2, 1.0)]]);
        let a = rebuild_a_tables(&phi, &[0.1, 0.1]);
        assert!(a.table(1).is_empty());
        assert_eq!(a.sigma_a(1), 0.0);
    }

    #[test]
    fn alpha_scaling() {
        let phi = example();
        let a = rebuild_a_tables(&phi, &[0.1, 0.2, 0.3]);
        let b = rebuild_a_tables(&phi, &[1.0, 2.0, 3.0]);
        for w in 0..3 {
            assert!((b.sigma_a(w) - 10.0 * a.sigma_a(w)).abs() < 1e-12);
            for (x, y) in a.table(w).probabilities().iter().zip(b.table(w).probabilities()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parallel_build_matches_dense_recomputation() {
        let rows: Vec<Vec<f64>> = (0..7)
            .map(|k| {
                let r: Vec<f64> = (0..23).map(|w| ((k * 31 + w * 17) % 5) as f64).collect();
                let s: f64 = r.iter().sum();
                r.into_iter().map(|x| x / s).collect()
            })
            .collect();
        let phi = SparsePhi::from_dense(&rows);
        phi.check_rows(1e-9).unwrap();
        let alpha: Vec<f64> = (0..7).map(|k| 0.05 + 0.01 * k as f64).collect();
        let a = ATableSet::build_parallel(&phi, &alpha, 4);
        assert_eq!(a.len(), 23);
        #[allow(clippy::needless_range_loop)]
        for w in 0..23 {
            let dense: f64 = (0..7).map(|k| rows[k][w] * alpha[k]).sum();
            assert!((a.sigma_a(w as WordId) - dense).abs() < 1e-12);
            assert_eq!(phi.column_nnz(w as WordId), (0..7).filter(|&k| rows[k][w] > 0.0).count());
        }
    }
}
