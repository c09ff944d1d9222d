//! Flat `key = value` configuration files. Command-line flags override them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pulda_core::rand_dist::DEFAULT_CACHE_LIMIT;
use pulda_core::sampler::{Variant, DEFAULT_ALPHA, DEFAULT_BETA};

use crate::{Common, Failure};

pub const DEFAULT_RARE_LIMIT: u64 = 10;
pub const DEFAULT_TOP: usize = 10;

/// Keys a run manifest carries besides the configuration echo. They are
/// accepted and ignored so a manifest can be fed back through `--config`.
const MANIFEST_ONLY: &[&str] = &[
    "command",
    "docs",
    "vocab_size",
    "tokens",
    "corpus_sha256",
    "started_unix",
    "finished_unix",
    "metrics",
    "events",
    "snapshot_model",
    "snapshot_topic_word",
    "snapshot_doc_topic",
    "top_words",
    "final_log_joint",
];

/// Configuration keys, after aliases are resolved.
pub const KEYS: &[&str] = &[
    "corpus",
    "vocab",
    "rare_limit",
    "K",
    "alpha",
    "beta",
    "iters",
    "seed",
    "workers",
    "sampler",
    "out",
    "L",
    "timings",
    "top",
];

#[derive(Debug, Default, Clone, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

fn canonical(key: &str) -> String {
    match key.replace('-', "_").as_str() {
        "topics" => "K".into(),
        "cache_limit" => "L".into(),
        k => k.into(),
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("config line {}: expected `key = value`", i + 1)))?;
            let key = canonical(k.trim());
            if MANIFEST_ONLY.contains(&key.as_str()) || v.trim().is_empty() {
                continue;
            }
            if !KEYS.contains(&key.as_str()) {
                return Err(Failure::Usage(format!("config line {}: unknown key `{}`", i + 1, k.trim())));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The flag when given, else the file's value for `key`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, Failure> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Failure::Usage(format!("config key `{key}`: cannot parse {v:?}"))),
        }
    }
}

/// Every option after merging flags, the config file and defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub corpus: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub rare_limit: u64,
    pub topics: Option<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub iters: Option<usize>,
    pub seed: u64,
    pub workers: usize,
    pub sampler: Variant,
    pub out: Option<PathBuf>,
    pub cache_limit: usize,
    pub timings: bool,
    pub top: usize,
}

impl Settings {
    pub fn resolve(c: &Common) -> Result<Self, Failure> {
        let file = match &c.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let sampler = match file.pick(c.sampler.clone(), "sampler")? {
            None => Variant::Pu,
            Some(s) => s.parse::<Variant>().map_err(|e| Failure::Usage(e.to_string()))?,
        };
        let timings = if c.no_timings {
            false
        } else {
            file.pick(None, "timings")?.unwrap_or(true)
        };
        Ok(Self {
            corpus: file.pick(c.corpus.clone(), "corpus")?,
            vocab: file.pick(c.vocab.clone(), "vocab")?,
            rare_limit: file.pick(c.rare_limit, "rare_limit")?.unwrap_or(DEFAULT_RARE_LIMIT),
            topics: file.pick(c.topics, "K")?,
            alpha: file.pick(c.alpha, "alpha")?.unwrap_or(DEFAULT_ALPHA),
            beta: file.pick(c.beta, "beta")?.unwrap_or(DEFAULT_BETA),
            iters: file.pick(c.iters, "iters")?,
            seed: file.pick(c.seed, "seed")?.unwrap_or(0),
            workers: file.pick(c.workers, "workers")?.unwrap_or(1),
            sampler,
            out: file.pick(c.out.clone(), "out")?,
            cache_limit: file.pick(c.cache_limit, "L")?.unwrap_or(DEFAULT_CACHE_LIMIT),
            timings,
            top: file.pick(c.top, "top")?.unwrap_or(DEFAULT_TOP),
        })
    }

    pub fn require_out(&self) -> Result<&Path, Failure> {
        self.out
            .as_deref()
            .ok_or_else(|| Failure::Usage("--out DIR is required".into()))
    }

    pub fn require_corpus(&self) -> Result<&Path, Failure> {
        self.corpus
            .as_deref()
            .ok_or_else(|| Failure::Usage("--corpus FILE is required".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let c = ConfigFile::parse("# run\nK = 20\nalpha=0.5\n\ncache-limit = 50\n").unwrap();
        assert_eq!(c.pick::<usize>(None, "K").unwrap(), Some(20));
        assert_eq!(c.pick(Some(7usize), "K").unwrap(), Some(7));
        assert_eq!(c.pick::<f64>(None, "alpha").unwrap(), Some(0.5));
        assert_eq!(c.pick::<usize>(None, "L").unwrap(), Some(50));
        assert_eq!(c.pick::<u64>(None, "seed").unwrap(), None);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(matches!(ConfigFile::parse("kk = 1"), Err(Failure::Usage(_))));
        assert!(matches!(ConfigFile::parse("K 20"), Err(Failure::Usage(_))));
        let c = ConfigFile::parse("K = many").unwrap();
        assert!(c.pick::<usize>(None, "K").is_err());
    }

    #[test]
    fn defaults_and_precedence() {
        let s = Settings::resolve(&Common::default()).unwrap();
        assert_eq!(s.rare_limit, 10);
        assert_eq!(s.alpha, 0.1);
        assert_eq!(s.beta, 0.01);
        assert_eq!(s.cache_limit, 100);
        assert_eq!(s.sampler, Variant::Pu);
        assert!(s.timings);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "sampler = pc\nseed = 4\ntimings = false\nK = 8\n").unwrap();
        let c = Common {
            config: Some(path),
            seed: Some(9),
            ..Common::default()
        };
        let s = Settings::resolve(&c).unwrap();
        assert_eq!((s.sampler, s.seed, s.timings, s.topics), (Variant::Pc, 9, false, Some(8)));
    }

    #[test]
    fn manifest_keys_and_empty_values_are_ignored() {
        let c = ConfigFile::parse("K = 3\ncorpus_sha256 = ab12\ntokens = 9\nvocab =\n").unwrap();
        assert_eq!(c.pick::<usize>(None, "K").unwrap(), Some(3));
        assert_eq!(c.pick::<PathBuf>(None, "vocab").unwrap(), None);
    }
}
