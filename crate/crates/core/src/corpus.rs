//! Bag-of-words corpora: the UCI reader/writer, rare-word filtering, and the
//! LDA generative process for synthetic data.
//!
//! Word ids are 0-based internally. Documents are stored back to back in one
//! token array, so per-token state (topic indicators) can be laid out in
//! parallel with it.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use crate::error::{domain, Error, Result};
use crate::rand_dist::{dirichlet_sample, stream_rng, AliasTable, StreamKind};

pub type WordId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
}

impl Vocabulary {
    pub fn new(words: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if !seen.insert(w.as_str()) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("duplicate vocabulary word {w:?}"),
                });
            }
        }
        Ok(Self { words })
    }

    /// Placeholder names `w0, w1, ...`.
    pub fn numbered(size: usize) -> Self {
        Self {
            words: (0..size).map(|i| format!("w{i}")).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Immutable tokenized corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    vocab: Vocabulary,
    tokens: Vec<WordId>,
    // offsets[d]..offsets[d + 1] is document d
    offsets: Vec<usize>,
}

impl Corpus {
    pub fn new(vocab: Vocabulary, docs: Vec<Vec<WordId>>) -> Result<Self> {
        let v = vocab.len() as u64;
        let mut tokens = Vec::with_capacity(docs.iter().map(Vec::len).sum());
        let mut offsets = Vec::with_capacity(docs.len() + 1);
        offsets.push(0);
        for doc in docs {
            for &w in &doc {
                if w as u64 >= v {
                    return Err(Error::Range {
                        what: "word id",
                        value: w as u64,
                        limit: v,
                    });
                }
            }
            tokens.extend(doc);
            offsets.push(tokens.len());
        }
        Ok(Self {
            vocab,
            tokens,
            offsets,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn num_docs(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[WordId] {
        &self.tokens
    }

    pub fn doc(&self, d: usize) -> &[WordId] {
        &self.tokens[self.offsets[d]..self.offsets[d + 1]]
    }

    /// Token index range of document `d`.
    pub fn doc_range(&self, d: usize) -> std::ops::Range<usize> {
        self.offsets[d]..self.offsets[d + 1]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn docs(&self) -> impl Iterator<Item = &[WordId]> + '_ {
        self.offsets.windows(2).map(|w| &self.tokens[w[0]..w[1]])
    }

    /// Corpus-wide occurrence count of every word.
    pub fn word_frequencies(&self) -> Vec<u64> {
        let mut f = vec![0; self.vocab_size()];
        for &w in &self.tokens {
            f[w as usize] += 1;
        }
        f
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("expected {what}, found {s:?}"),
    })
}

/// Reads a UCI bag-of-words corpus.
///
/// `docword` holds three header lines (D, W, NNZ) and then NNZ lines of
/// 1-indexed `docId wordId count`. `vocab`, when given, names word `i` on
/// line `i`. Words with fewer than `rare_word_limit` occurrences are dropped
/// and the vocabulary is re-indexed; documents emptied by the filter are kept.
/// Within a document, tokens are expanded in ascending word order.
pub fn read_uci_bow<R: BufRead, S: BufRead>(
    docword: R,
    vocab: Option<S>,
    rare_word_limit: u64,
) -> Result<Corpus> {
    let mut lines = docword.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut header = [0u64; 3];
    for (slot, name) in header.iter_mut().zip(["D", "W", "NNZ"]) {
        let (no, line) = lines.next().ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("missing header line {name}"),
        })?;
        *slot = parse_field(line?.trim(), no, name)?;
    }
    let [num_docs, num_words, nnz] = header;

    let mut doc_counts: Vec<Vec<(WordId, u64)>> = vec![Vec::new(); num_docs as usize];
    let mut freq = vec![0u64; num_words as usize];
    let mut seen = 0u64;
    let mut last_line = 3;
    for (no, line) in lines {
        let line = line?;
        last_line = no;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: no,
                msg: format!("expected `docId wordId count`, found {line:?}"),
            });
        }
        let d: u64 = parse_field(fields[0], no, "docId")?;
        let w: u64 = parse_field(fields[1], no, "wordId")?;
        let c: u64 = parse_field(fields[2], no, "count")?;
        if d == 0 || d > num_docs {
            return Err(Error::Range {
                what: "docId",
                value: d,
                limit: num_docs,
            });
        }
        if w == 0 || w > num_words {
            return Err(Error::Range {
                what: "wordId",
                value: w,
                limit: num_words,
            });
        }
        doc_counts[(d - 1) as usize].push(((w - 1) as WordId, c));
        freq[(w - 1) as usize] += c;
        seen += 1;
    }
    if seen != nnz {
        return Err(Error::Parse {
            line: last_line,
            msg: format!("header promises {nnz} entries, found {seen}"),
        });
    }

    let names = match vocab {
        Some(r) => {
            let mut words = Vec::with_capacity(num_words as usize);
            for (i, l) in r.lines().enumerate() {
                let l = l?;
                let w = l.trim_end_matches(['\r', '\n']);
                if w.is_empty() && i as u64 >= num_words {
                    continue;
                }
                words.push(w.to_string());
            }
            if words.len() as u64 != num_words {
                return Err(Error::Parse {
                    line: words.len(),
                    msg: format!("vocabulary has {} words, header says {num_words}", words.len()),
                });
            }
            words
        }
        None => (0..num_words).map(|i| format!("w{i}")).collect(),
    };

    // old id -> new id
    let mut remap = vec![None; num_words as usize];
    let mut kept = Vec::new();
    for (old, name) in names.into_iter().enumerate() {
        if freq[old] >= rare_word_limit {
            remap[old] = Some(kept.len() as WordId);
            kept.push(name);
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary(rare_word_limit));
    }
    let vocab = Vocabulary::new(kept)?;

    let docs = doc_counts
        .into_iter()
        .map(|mut entries| {
            entries.sort_by_key(|e| e.0);
            let mut doc = Vec::new();
            for (w, c) in entries {
                if let Some(nw) = remap[w as usize] {
                    doc.extend(std::iter::repeat_n(nw, c as usize));
                }
            }
            doc
        })
        .collect();
    Corpus::new(vocab, docs)
}

/// Writes `corpus` in UCI format (docword and vocabulary files).
pub fn write_uci_bow<W: Write, V: Write>(corpus: &Corpus, mut docword: W, mut vocab: V) -> std::io::Result<()> {
    let mut triples = Vec::new();
    let mut counts = vec![0u64; corpus.vocab_size()];
    for (d, doc) in corpus.docs().enumerate() {
        for &w in doc {
            counts[w as usize] += 1;
        }
        let mut words: Vec<WordId> = doc.to_vec();
        words.sort_unstable();
        words.dedup();
        for w in words {
            triples.push((d + 1, w + 1, counts[w as usize]));
            counts[w as usize] = 0;
        }
    }
    writeln!(docword, "{}\n{}\n{}", corpus.num_docs(), corpus.vocab_size(), triples.len())?;
    for (d, w, c) in triples {
        writeln!(docword, "{d} {w} {c}")?;
    }
    for w in corpus.vocab().words() {
        writeln!(vocab, "{w}")?;
    }
    Ok(())
}

/// Parameters of the LDA generative process.
#[derive(Debug, Clone, Copy)]
pub struct SynthParams {
    pub topics: usize,
    pub vocab_size: usize,
    pub docs: usize,
    pub doc_len: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
}

/// A synthetic corpus with the latent variables that generated it.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    /// Generating topic of every token, parallel to `corpus.tokens()`.
    pub topics: Vec<u32>,
    pub theta: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
}

/// Samples a corpus from LDA: `φ_k ~ Dir(β)`, `θ_d ~ Dir(α)`, then a topic
/// and a word per token. Deterministic in `seed`.
pub fn synth_corpus(p: &SynthParams) -> Result<SyntheticCorpus> {
    if p.topics == 0 || p.vocab_size == 0 || p.docs == 0 || p.doc_len == 0 {
        return Err(domain("synthetic corpus sizes must be positive"));
    }
    if !(p.alpha > 0.0) || !(p.beta > 0.0) {
        return Err(domain("synthetic corpus priors must be positive"));
    }
    let mut rng = stream_rng(p.seed, StreamKind::Synth, 0, 0);
    let phi: Vec<Vec<f64>> = (0..p.topics)
        .map(|_| dirichlet_sample(&vec![p.beta; p.vocab_size], &mut rng))
        .collect::<Result<_>>()?;
    let word_tables: Vec<AliasTable> = phi.iter().map(|row| AliasTable::new(row)).collect::<Result<_>>()?;

    let mut docs = Vec::with_capacity(p.docs);
    let mut topics = Vec::with_capacity(p.docs * p.doc_len);
    let mut theta = Vec::with_capacity(p.docs);
    for _ in 0..p.docs {
        let th = dirichlet_sample(&vec![p.alpha; p.topics], &mut rng)?;
        let topic_table = AliasTable::new(&th)?;
        let doc: Vec<WordId> = (0..p.doc_len)
            .map(|_| {
                let k = topic_table.sample(&mut rng);
                topics.push(k as u32);
                word_tables[k].sample(&mut rng) as WordId
            })
            .collect();
        docs.push(doc);
        theta.push(th);
    }
    Ok(SyntheticCorpus {
        corpus: Corpus::new(Vocabulary::numbered(p.vocab_size), docs)?,
        topics,
        theta,
        phi,
    })
}
