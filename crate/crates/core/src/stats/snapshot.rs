//! Model snapshots: a `key = value` manifest plus sparse triplet files.
//!
//! ```text
//! model.txt       K, V, D, alpha, beta, iteration, seed
//! topic_word.txt  `k v count` per nonzero n entry
//! doc_topic.txt   `d k count` per nonzero m entry
//! ```
//!
//! Ids are 0-based and refer to the filtered vocabulary.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::{TopicState, TopicWord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub topics: usize,
    pub vocab_size: usize,
    pub docs: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iteration: u64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SnapshotPaths {
    pub model: PathBuf,
    pub topic_word: PathBuf,
    pub doc_topic: PathBuf,
}

impl SnapshotPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            model: dir.join("model.txt"),
            topic_word: dir.join("topic_word.txt"),
            doc_topic: dir.join("doc_topic.txt"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub topic_word: TopicWord,
    /// Nonzero `(d, k, count)` entries of m, by document then topic.
    pub doc_topic: Vec<(usize, u32, u32)>,
}

pub fn write_snapshot(dir: &Path, header: &SnapshotHeader, state: &TopicState) -> Result<SnapshotPaths> {
    std::fs::create_dir_all(dir)?;
    let paths = SnapshotPaths::in_dir(dir);

    let mut f = BufWriter::new(File::create(&paths.model)?);
    writeln!(f, "K = {}", header.topics)?;
    writeln!(f, "V = {}", header.vocab_size)?;
    writeln!(f, "D = {}", header.docs)?;
    writeln!(f, "alpha = {}", header.alpha)?;
    writeln!(f, "beta = {}", header.beta)?;
    writeln!(f, "iteration = {}", header.iteration)?;
    writeln!(f, "seed = {}", header.seed)?;
    f.flush()?;

    let mut f = BufWriter::new(File::create(&paths.topic_word)?);
    let n = state.topic_word();
    for k in 0..n.num_topics() {
        for &(w, c) in n.row(k) {
            writeln!(f, "{k} {w} {c}")?;
        }
    }
    f.flush()?;

    let mut f = BufWriter::new(File::create(&paths.doc_topic)?);
    let m = state.doc_topic();
    for d in 0..m.num_docs() {
        for (k, &c) in m.row(d).iter().enumerate() {
            if c > 0 {
                writeln!(f, "{d} {k} {c}")?;
            }
        }
    }
    f.flush()?;
    Ok(paths)
}

fn parse<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad value {s:?}"),
    })
}

fn triplets(path: &Path) -> Result<Vec<(u64, u64, u32)>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("{}: expected three fields", path.display()),
            });
        }
        out.push((parse(f[0], i + 1)?, parse(f[1], i + 1)?, parse(f[2], i + 1)?));
    }
    Ok(out)
}

pub fn read_snapshot(dir: &Path) -> Result<Snapshot> {
    let paths = SnapshotPaths::in_dir(dir);
    let mut kv = std::collections::HashMap::new();
    for (i, line) in BufReader::new(File::open(&paths.model)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: format!("expected `key = value`, found {line:?}"),
        })?;
        kv.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
    }
    let get = |key: &str| {
        kv.get(key).ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("model.txt is missing `{key}`"),
        })
    };
    let header = SnapshotHeader {
        topics: parse(&get("K")?.1, get("K")?.0)?,
        vocab_size: parse(&get("V")?.1, get("V")?.0)?,
        docs: parse(&get("D")?.1, get("D")?.0)?,
        alpha: parse(&get("alpha")?.1, get("alpha")?.0)?,
        beta: parse(&get("beta")?.1, get("beta")?.0)?,
        iteration: parse(&get("iteration")?.1, get("iteration")?.0)?,
        seed: parse(&get("seed")?.1, get("seed")?.0)?,
    };
    let topic_word = TopicWord::from_triplets(
        header.topics,
        header.vocab_size,
        triplets(&paths.topic_word)?
            .into_iter()
            .map(|(k, v, c)| (k as u32, v as u32, c)),
    )?;
    let mut doc_topic = Vec::new();
    for (d, k, c) in triplets(&paths.doc_topic)? {
        if d as usize >= header.docs || k as usize >= header.topics {
            return Err(Error::Range {
                what: "doc_topic entry",
                value: d.max(k),
                limit: header.docs.max(header.topics) as u64,
            });
        }
        doc_topic.push((d as usize, k as u32, c));
    }
    Ok(Snapshot {
        header,
        topic_word,
        doc_topic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synth_corpus, SynthParams};
    use crate::stats::init_state;

    #[test]
    fn round_trip() {
        let s = synth_corpus(&SynthParams {
            topics: 3,
            vocab_size: 40,
            docs: 12,
            doc_len: 15,
            alpha: 0.1,
            beta: 0.01,
            seed: 4,
        })
        .unwrap();
        let state = init_state(&s.corpus, 5, 8).unwrap();
        let header = SnapshotHeader {
            topics: 5,
            vocab_size: 40,
            docs: 12,
            alpha: 0.1,
            beta: 0.01,
            iteration: 17,
            seed: 8,
        };
        let dir = std::env::temp_dir().join(format!("pulda-snapshot-{}", std::process::id()));
        write_snapshot(&dir, &header, &state).unwrap();
        let snap = read_snapshot(&dir).unwrap();
        assert_eq!(snap.header, header);
        assert_eq!(&snap.topic_word, state.topic_word());
        let m = state.doc_topic();
        let expect: Vec<(usize, u32, u32)> = (0..12)
            .flat_map(|d| (0..5u32).map(move |k| (d, k)))
            .filter(|&(d, k)| m.count(d, k) > 0)
            .map(|(d, k)| (d, k, m.count(d, k)))
            .collect();
        assert_eq!(snap.doc_topic, expect);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
