//! Sufficient statistics and sparse Φ storage.
//!
//! * `m` ([`DocTopic`]): dense D×K counts plus a per-document list of the
//!   topics with a nonzero count.
//! * `n` ([`TopicWord`]): per-topic rows of `(word, count)` sorted by word,
//!   with dense row totals.

mod phi;
mod snapshot;

pub use phi::{rebuild_a_tables, ATableSet, SparsePhi};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SnapshotHeader, SnapshotPaths};

use rand::Rng;

use crate::corpus::{Corpus, WordId};
use crate::error::{domain, Error, Result};
use crate::rand_dist::{stream_rng, StreamKind};

pub type Topic = u32;

/// Document-topic counts `m`.
#[derive(Debug, Clone)]
pub struct DocTopic {
    k: usize,
    counts: Vec<u32>,
    nz: Vec<Topic>,
    nz_start: Vec<usize>,
    nz_len: Vec<u32>,
}

impl DocTopic {
    /// All-zero counts shaped for `corpus`. Each document's nonzero list has
    /// room for `min(K, N_d)` topics.
    pub fn zeros(corpus: &Corpus, k: usize) -> Self {
        let d = corpus.num_docs();
        let mut nz_start = Vec::with_capacity(d + 1);
        nz_start.push(0);
        for doc in corpus.docs() {
            let last = *nz_start.last().unwrap();
            nz_start.push(last + doc.len().min(k));
        }
        Self {
            k,
            counts: vec![0; d * k],
            nz: vec![0; *nz_start.last().unwrap()],
            nz_start,
            nz_len: vec![0; d],
        }
    }

    pub fn num_docs(&self) -> usize {
        self.nz_len.len()
    }

    pub fn num_topics(&self) -> usize {
        self.k
    }

    pub fn count(&self, d: usize, k: Topic) -> u32 {
        self.counts[d * self.k + k as usize]
    }

    /// Dense row of document `d`.
    pub fn row(&self, d: usize) -> &[u32] {
        &self.counts[d * self.k..(d + 1) * self.k]
    }

    /// Topics with a nonzero count in document `d`, in no particular order.
    pub fn nonzero(&self, d: usize) -> &[Topic] {
        let s = self.nz_start[d];
        &self.nz[s..s + self.nz_len[d] as usize]
    }

    pub fn row_mut(&mut self, d: usize) -> DocRowMut<'_> {
        let s = self.nz_start[d];
        let e = self.nz_start[d + 1];
        DocRowMut {
            counts: &mut self.counts[d * self.k..(d + 1) * self.k],
            nz: &mut self.nz[s..e],
            nz_len: &mut self.nz_len[d],
        }
    }

    /// Splits into disjoint mutable views over contiguous document blocks.
    /// `bounds` are block boundaries: `0 = b_0 < b_1 < ... = D`.
    pub fn split_mut(&mut self, bounds: &[usize]) -> Vec<DocTopicShard<'_>> {
        let mut shards = Vec::with_capacity(bounds.len().saturating_sub(1));
        let mut counts: &mut [u32] = &mut self.counts;
        let mut nz: &mut [Topic] = &mut self.nz;
        let mut nz_len: &mut [u32] = &mut self.nz_len;
        for w in bounds.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let (c, rest) = std::mem::take(&mut counts).split_at_mut((hi - lo) * self.k);
            counts = rest;
            let (z, rest) = std::mem::take(&mut nz).split_at_mut(self.nz_start[hi] - self.nz_start[lo]);
            nz = rest;
            let (l, rest) = std::mem::take(&mut nz_len).split_at_mut(hi - lo);
            nz_len = rest;
            shards.push(DocTopicShard {
                k: self.k,
                first_doc: lo,
                counts: c,
                nz: z,
                nz_start: &self.nz_start[lo..=hi],
                nz_len: l,
            });
        }
        shards
    }

    fn sorted_nonzero(&self, d: usize) -> Vec<Topic> {
        let mut v = self.nonzero(d).to_vec();
        v.sort_unstable();
        v
    }
}

impl PartialEq for DocTopic {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k
            && self.counts == other.counts
            && self.nz_len == other.nz_len
            && (0..self.num_docs()).all(|d| self.sorted_nonzero(d) == other.sorted_nonzero(d))
    }
}

/// Mutable view of one document's topic counts.
pub struct DocRowMut<'a> {
    counts: &'a mut [u32],
    nz: &'a mut [Topic],
    nz_len: &'a mut u32,
}

impl DocRowMut<'_> {
    #[inline]
    pub fn counts(&self) -> &[u32] {
        self.counts
    }

    #[inline]
    pub fn nonzero(&self) -> &[Topic] {
        &self.nz[..*self.nz_len as usize]
    }

    #[inline]
    pub fn increment(&mut self, k: Topic) {
        let c = &mut self.counts[k as usize];
        if *c == 0 {
            self.nz[*self.nz_len as usize] = k;
            *self.nz_len += 1;
        }
        *c += 1;
    }

    #[inline]
    pub fn decrement(&mut self, k: Topic) {
        let c = &mut self.counts[k as usize];
        debug_assert!(*c > 0, "decrementing an empty topic count");
        *c -= 1;
        if *c == 0 {
            let len = *self.nz_len as usize;
            let pos = self.nz[..len].iter().position(|&t| t == k).expect("topic in nonzero list");
            self.nz.swap(pos, len - 1);
            *self.nz_len -= 1;
        }
    }
}

/// Disjoint mutable view over a contiguous block of documents.
pub struct DocTopicShard<'a> {
    k: usize,
    first_doc: usize,
    counts: &'a mut [u32],
    nz: &'a mut [Topic],
    nz_start: &'a [usize],
    nz_len: &'a mut [u32],
}

impl DocTopicShard<'_> {
    pub fn first_doc(&self) -> usize {
        self.first_doc
    }

    pub fn num_docs(&self) -> usize {
        self.nz_len.len()
    }

    /// Row of global document `d`.
    pub fn row_mut(&mut self, d: usize) -> DocRowMut<'_> {
        let i = d - self.first_doc;
        let base = self.nz_start[0];
        DocRowMut {
            counts: &mut self.counts[i * self.k..(i + 1) * self.k],
            nz: &mut self.nz[self.nz_start[i] - base..self.nz_start[i + 1] - base],
            nz_len: &mut self.nz_len[i],
        }
    }
}

/// Topic-word counts `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicWord {
    vocab_size: usize,
    rows: Vec<Vec<(WordId, u32)>>,
    totals: Vec<u64>,
}

impl TopicWord {
    pub fn zeros(k: usize, vocab_size: usize) -> Self {
        Self {
            vocab_size,
            rows: vec![Vec::new(); k],
            totals: vec![0; k],
        }
    }

    /// Builds from `(topic, word, count)` triples; repeated pairs add up.
    pub fn from_triplets(
        k: usize,
        vocab_size: usize,
        triplets: impl IntoIterator<Item = (Topic, WordId, u32)>,
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(WordId, u32)>> = vec![Vec::new(); k];
        for (t, w, c) in triplets {
            if t as usize >= k {
                return Err(Error::Range {
                    what: "topic",
                    value: t as u64,
                    limit: k as u64,
                });
            }
            if w as usize >= vocab_size {
                return Err(Error::Range {
                    what: "word id",
                    value: w as u64,
                    limit: vocab_size as u64,
                });
            }
            rows[t as usize].push((w, c));
        }
        let mut totals = Vec::with_capacity(k);
        for row in &mut rows {
            row.sort_unstable_by_key(|e| e.0);
            row.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
            row.retain(|e| e.1 > 0);
            totals.push(row.iter().map(|e| e.1 as u64).sum());
        }
        Ok(Self {
            vocab_size,
            rows,
            totals,
        })
    }

    pub fn num_topics(&self) -> usize {
        self.rows.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Nonzero `(word, count)` entries of topic `k`, ascending by word.
    pub fn row(&self, k: usize) -> &[(WordId, u32)] {
        &self.rows[k]
    }

    pub fn total(&self, k: usize) -> u64 {
        self.totals[k]
    }

    pub fn totals(&self) -> &[u64] {
        &self.totals
    }

    pub fn get(&self, k: usize, v: WordId) -> u32 {
        let row = &self.rows[k];
        row.binary_search_by_key(&v, |e| e.0).map_or(0, |i| row[i].1)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Adds sorted, aggregated `(word, delta)` pairs to row `k`.
    pub(crate) fn apply_row_deltas(&mut self, k: usize, deltas: &[(WordId, i64)]) -> Result<()> {
        if deltas.is_empty() {
            return Ok(());
        }
        let old = &self.rows[k];
        let mut merged = Vec::with_capacity(old.len() + deltas.len());
        let mut total = self.totals[k] as i64;
        let (mut i, mut j) = (0, 0);
        while i < old.len() || j < deltas.len() {
            let (w, c) = match (old.get(i), deltas.get(j)) {
                (Some(&(wo, co)), Some(&(wd, cd))) if wo == wd => {
                    i += 1;
                    j += 1;
                    (wo, co as i64 + cd)
                }
                (Some(&(wo, co)), Some(&(wd, _))) if wo < wd => {
                    i += 1;
                    (wo, co as i64)
                }
                (Some(&(wo, co)), None) => {
                    i += 1;
                    (wo, co as i64)
                }
                (_, Some(&(wd, cd))) => {
                    j += 1;
                    (wd, cd)
                }
                (None, None) => unreachable!(),
            };
            if c < 0 {
                return Err(Error::Consistency(format!("n[{k}][{w}] would become {c}")));
            }
            if c > 0 {
                merged.push((w, c as u32));
            }
        }
        total += deltas.iter().map(|d| d.1).sum::<i64>();
        self.rows[k] = merged;
        self.totals[k] = total as u64;
        Ok(())
    }

    /// Dense word-major copy: entry `v * K + k`.
    pub fn to_dense_by_word(&self) -> Vec<u32> {
        let k = self.num_topics();
        let mut out = vec![0; self.vocab_size * k];
        for (t, row) in self.rows.iter().enumerate() {
            for &(w, c) in row {
                out[w as usize * k + t] = c;
            }
        }
        out
    }

    /// Inverse of [`TopicWord::to_dense_by_word`].
    pub fn from_dense_by_word(k: usize, vocab_size: usize, dense: &[u32]) -> Self {
        let mut rows: Vec<Vec<(WordId, u32)>> = vec![Vec::new(); k];
        for (w, col) in dense.chunks_exact(k).enumerate() {
            for (t, &c) in col.iter().enumerate() {
                if c > 0 {
                    rows[t].push((w as WordId, c));
                }
            }
        }
        let totals = rows.iter().map(|r| r.iter().map(|e| e.1 as u64).sum()).collect();
        Self {
            vocab_size,
            rows,
            totals,
        }
    }
}

/// Topic indicators plus the sufficient statistics they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicState {
    k: usize,
    pub(crate) z: Vec<Topic>,
    pub(crate) m: DocTopic,
    pub(crate) n: TopicWord,
}

impl TopicState {
    /// State for given indicators, tallied from scratch.
    pub fn from_assignments(corpus: &Corpus, k: usize, z: Vec<Topic>) -> Result<Self> {
        let (m, n) = recount(corpus, &z, k)?;
        Ok(Self { k, z, m, n })
    }

    pub fn num_topics(&self) -> usize {
        self.k
    }

    pub fn assignments(&self) -> &[Topic] {
        &self.z
    }

    pub fn doc_topic(&self) -> &DocTopic {
        &self.m
    }

    pub fn topic_word(&self) -> &TopicWord {
        &self.n
    }

    /// Count conservation: `Σ_k m[d][k] = N_d`, `Σ_v n[k][v] = n[k][·]` and
    /// `Σ_k n[k][·] = N`.
    pub fn check_conservation(&self, corpus: &Corpus) -> Result<()> {
        for (d, doc) in corpus.docs().enumerate() {
            let s: u64 = self.m.row(d).iter().map(|&c| c as u64).sum();
            if s != doc.len() as u64 {
                return Err(Error::Consistency(format!(
                    "document {d}: topic counts sum to {s}, length {}",
                    doc.len()
                )));
            }
        }
        let mut grand = 0;
        for k in 0..self.k {
            let s: u64 = self.n.row(k).iter().map(|e| e.1 as u64).sum();
            if s != self.n.total(k) {
                return Err(Error::Consistency(format!(
                    "topic {k}: row sums to {s}, total says {}",
                    self.n.total(k)
                )));
            }
            grand += s;
        }
        if grand != corpus.num_tokens() as u64 {
            return Err(Error::Consistency(format!(
                "topic-word counts sum to {grand}, corpus has {} tokens",
                corpus.num_tokens()
            )));
        }
        Ok(())
    }

    /// Full recount equality against the maintained statistics.
    pub fn check_recount(&self, corpus: &Corpus) -> Result<()> {
        let (m, n) = recount(corpus, &self.z, self.k)?;
        if m != self.m || n != self.n {
            return Err(Error::Consistency("maintained statistics differ from recount".into()));
        }
        Ok(())
    }
}

/// Uniform random topic indicators, deterministic in `seed`.
pub fn init_state(corpus: &Corpus, k: usize, seed: u64) -> Result<TopicState> {
    if k == 0 {
        return Err(domain("number of topics must be at least 1"));
    }
    if k > u32::MAX as usize {
        return Err(domain("too many topics"));
    }
    let mut rng = stream_rng(seed, StreamKind::Init, 0, 0);
    let z = (0..corpus.num_tokens())
        .map(|_| rng.random_range(0..k as u32))
        .collect();
    TopicState::from_assignments(corpus, k, z)
}

/// Rebuilds `(m, n)` by tallying `z`.
pub fn recount(corpus: &Corpus, z: &[Topic], k: usize) -> Result<(DocTopic, TopicWord)> {
    if z.len() != corpus.num_tokens() {
        return Err(domain(format!(
            "{} indicators for {} tokens",
            z.len(),
            corpus.num_tokens()
        )));
    }
    if let Some(&bad) = z.iter().find(|&&t| t as usize >= k) {
        return Err(Error::Range {
            what: "topic",
            value: bad as u64,
            limit: k as u64,
        });
    }
    let mut m = DocTopic::zeros(corpus, k);
    for d in 0..corpus.num_docs() {
        let mut row = m.row_mut(d);
        for i in corpus.doc_range(d) {
            row.increment(z[i]);
        }
    }
    let triplets = corpus.tokens().iter().zip(z).map(|(&w, &t)| (t, w, 1));
    let n = TopicWord::from_triplets(k, corpus.vocab_size(), triplets)?;
    Ok((m, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;

    fn corpus() -> Corpus {
        Corpus::new(
            Vocabulary::numbered(4),
            vec![vec![0, 1, 1, 3], vec![], vec![2, 2, 0]],
        )
        .unwrap()
    }

    #[test]
    fn single_topic_init() {
        let c = corpus();
        let s = init_state(&c, 1, 5).unwrap();
        assert!(s.assignments().iter().all(|&t| t == 0));
        for d in 0..3 {
            assert_eq!(s.doc_topic().row(d), &[c.doc(d).len() as u32]);
        }
        s.check_conservation(&c).unwrap();
        s.check_recount(&c).unwrap();
    }

    #[test]
    fn init_is_deterministic_and_consistent() {
        let c = corpus();
        let a = init_state(&c, 3, 11).unwrap();
        let b = init_state(&c, 3, 11).unwrap();
        assert_eq!(a, b);
        a.check_recount(&c).unwrap();
        assert!(init_state(&c, 0, 1).is_err());
    }

    #[test]
    fn recount_edge_cases() {
        let empty = Corpus::new(Vocabulary::numbered(2), vec![vec![], vec![]]).unwrap();
        let (m, n) = recount(&empty, &[], 3).unwrap();
        assert_eq!(m.row(0), &[0, 0, 0]);
        assert_eq!(n.nnz(), 0);
        assert_eq!(n.totals(), &[0, 0, 0]);

        let one = Corpus::new(Vocabulary::numbered(2), vec![vec![1]]).unwrap();
        let (m, n) = recount(&one, &[3], 4).unwrap();
        assert_eq!(m.row(0), &[0, 0, 0, 1]);
        assert_eq!(m.nonzero(0), &[3]);
        assert_eq!(n.row(3), &[(1, 1)]);
        assert_eq!(n.nnz(), 1);
        assert!(matches!(recount(&one, &[4], 4), Err(Error::Range { .. })));
    }

    #[test]
    fn row_updates_track_nonzeros() {
        let c = corpus();
        let mut m = DocTopic::zeros(&c, 5);
        let mut r = m.row_mut(0);
        r.increment(2);
        r.increment(4);
        r.increment(2);
        r.decrement(4);
        assert_eq!(r.nonzero(), &[2]);
        r.decrement(2);
        r.decrement(2);
        assert!(r.nonzero().is_empty());
        assert_eq!(m.row(0), &[0; 5]);
    }

    #[test]
    fn shards_cover_disjoint_documents() {
        let c = corpus();
        let mut s = init_state(&c, 3, 2).unwrap();
        let before = s.m.clone();
        {
            let mut shards = s.m.split_mut(&[0, 1, 3]);
            assert_eq!(shards[1].first_doc(), 1);
            assert_eq!(shards[1].num_docs(), 2);
            let mut row = shards[1].row_mut(2);
            let k = row.nonzero()[0];
            row.decrement(k);
            row.increment(k);
        }
        assert_eq!(s.m, before);
    }

    #[test]
    fn row_delta_merge() {
        let mut n = TopicWord::from_triplets(2, 6, [(0, 1, 2), (0, 4, 1), (1, 0, 3)]).unwrap();
        n.apply_row_deltas(0, &[(0, 1), (1, -2), (4, 3), (5, 1)]).unwrap();
        assert_eq!(n.row(0), &[(0, 1), (4, 4), (5, 1)]);
        assert_eq!(n.total(0), 6);
        assert!(n.apply_row_deltas(1, &[(0, -4)]).is_err());
        let dense = n.to_dense_by_word();
        assert_eq!(TopicWord::from_dense_by_word(2, 6, &dense), n);
    }
}
