//! Gibbs samplers for LDA: the partially collapsed sampler (Dirichlet Φ), the
//! Pólya urn sampler (Poisson Pólya urn Φ) and the fully collapsed baseline.
//!
//! The two Φ-based samplers run a bulk-synchronous iteration. Phase A draws
//! every Φ row in parallel over topics and rebuilds the a-bucket alias tables.
//! Phase B sweeps contiguous document shards in parallel; each worker owns its
//! documents' `m` rows and `z` slots and buffers signed `n` deltas, which are
//! merged after the barrier.
//!
//! Every Φ row and every document draws from its own random stream, named by
//! `(seed, iteration, topic)` or `(seed, iteration, document)`. Trajectories
//! therefore depend on the seed alone, not on the worker count or on thread
//! scheduling.

mod collapsed;
mod phi;
mod token;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub use collapsed::{collapsed_conditional, collapsed_iteration};
pub use phi::{draw_phi_pc, draw_phi_pc_row, draw_phi_pu, draw_phi_pu_row};
pub use token::{draw_z_token, TokenCounters};

use crate::corpus::{Corpus, WordId};
use crate::error::{domain, Error, Result};
use crate::eval::log_joint_state;
use crate::rand_dist::{stream_rng, PoissonAliasCache, StreamKind, DEFAULT_CACHE_LIMIT};
use crate::stats::{ATableSet, DocTopicShard, SparsePhi, Topic, TopicState, TopicWord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Pólya urn sampler: Φ rows from the Poisson Pólya urn.
    Pu,
    /// Partially collapsed sampler: Φ rows from the Dirichlet.
    Pc,
    /// Fully collapsed sampler; sequential.
    Collapsed,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Pu => "pu",
            Variant::Pc => "pc",
            Variant::Collapsed => "collapsed",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pu" => Ok(Variant::Pu),
            "pc" => Ok(Variant::Pc),
            "collapsed" => Ok(Variant::Collapsed),
            _ => Err(domain(format!("unknown sampler '{s}' (expected pu, pc or collapsed)"))),
        }
    }
}

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_BETA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub variant: Variant,
    pub topics: usize,
    /// Either one symmetric value or one value per topic.
    pub alpha: Vec<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    pub workers: usize,
    /// Largest count served by the Poisson alias cache.
    pub cache_limit: usize,
}

impl SamplerConfig {
    pub fn new(variant: Variant, topics: usize) -> Self {
        Self {
            variant,
            topics,
            alpha: vec![DEFAULT_ALPHA],
            beta: DEFAULT_BETA,
            iterations: 1000,
            seed: 0,
            workers: 1,
            cache_limit: DEFAULT_CACHE_LIMIT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.topics == 0 || self.topics > u32::MAX as usize {
            return Err(domain(format!("number of topics must be in 1..2^32, got {}", self.topics)));
        }
        if self.alpha.len() != 1 && self.alpha.len() != self.topics {
            return Err(domain(format!(
                "alpha has {} entries for {} topics",
                self.alpha.len(),
                self.topics
            )));
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(domain(format!("alpha must be positive, got {a}")));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(domain(format!("beta must be positive, got {}", self.beta)));
        }
        if self.workers == 0 {
            return Err(domain("workers must be at least 1"));
        }
        Ok(())
    }

    /// α expanded to one entry per topic.
    pub fn alpha_vector(&self) -> Vec<f64> {
        if self.alpha.len() == 1 {
            vec![self.alpha[0]; self.topics]
        } else {
            self.alpha.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IterationMetrics {
    /// 1-based.
    pub iteration: u64,
    pub log_joint: f64,
    pub phi_phase_seconds: f64,
    pub z_phase_seconds: f64,
    pub b_bucket_work: u64,
    pub sparsity_bound: u64,
    pub a_bucket_hits: u64,
    pub fallback_count: u64,
}

/// Driver holding per-run workspaces: Φ, the a-bucket tables, the Poisson
/// cache and the document shards.
pub struct Sampler {
    config: SamplerConfig,
    alpha: Vec<f64>,
    cache: Option<PoissonAliasCache>,
    phi: SparsePhi,
    rows: Vec<Vec<(WordId, f64)>>,
    a_tables: ATableSet,
    shards: Vec<usize>,
    iteration: u64,
}

impl Sampler {
    pub fn new(config: SamplerConfig, corpus: &Corpus) -> Result<Self> {
        config.validate()?;
        let cache = match config.variant {
            Variant::Pu => Some(PoissonAliasCache::new(config.beta, config.cache_limit)?),
            _ => None,
        };
        let k = config.topics;
        Ok(Self {
            alpha: config.alpha_vector(),
            cache,
            phi: SparsePhi::new(k, corpus.vocab_size()),
            rows: vec![Vec::new(); k],
            a_tables: ATableSet::default(),
            shards: shard_bounds(corpus.offsets(), config.workers),
            iteration: 0,
            config,
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    /// Completed iterations.
    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    /// Φ drawn in the last iteration (empty before the first).
    pub fn phi(&self) -> &SparsePhi {
        &self.phi
    }

    /// Document block boundaries used for Phase B.
    pub fn shards(&self) -> &[usize] {
        &self.shards
    }

    /// One full sweep of the configured variant.
    pub fn run_iteration(&mut self, state: &mut TopicState, corpus: &Corpus) -> Result<IterationMetrics> {
        if state.num_topics() != self.config.topics {
            return Err(domain(format!(
                "state has {} topics, sampler expects {}",
                state.num_topics(),
                self.config.topics
            )));
        }
        let mut metrics = match self.config.variant {
            Variant::Collapsed => {
                let t = Instant::now();
                collapsed_iteration(state, corpus, &self.alpha, self.config.beta, self.config.seed, self.iteration)?;
                IterationMetrics {
                    z_phase_seconds: t.elapsed().as_secs_f64(),
                    ..Default::default()
                }
            }
            Variant::Pu | Variant::Pc => self.bulk_iteration(state, corpus)?,
        };
        if cfg!(debug_assertions) {
            state.check_conservation(corpus)?;
        }
        self.iteration += 1;
        metrics.iteration = self.iteration;
        metrics.log_joint = log_joint_state(state, corpus, &self.alpha, self.config.beta);
        Ok(metrics)
    }

    fn bulk_iteration(&mut self, state: &mut TopicState, corpus: &Corpus) -> Result<IterationMetrics> {
        let t = Instant::now();
        self.draw_phi(&state.n)?;
        self.a_tables = ATableSet::build_parallel(&self.phi, &self.alpha, self.config.workers);
        let phi_phase_seconds = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let counters = self.sweep_documents(state, corpus)?;
        if counters.b_bucket_work > counters.sparsity_bound {
            return Err(Error::Consistency(format!(
                "b-bucket work {} exceeds the sparsity bound {}",
                counters.b_bucket_work, counters.sparsity_bound
            )));
        }
        Ok(IterationMetrics {
            phi_phase_seconds,
            z_phase_seconds: t.elapsed().as_secs_f64(),
            b_bucket_work: counters.b_bucket_work,
            sparsity_bound: counters.sparsity_bound,
            a_bucket_hits: counters.a_bucket_hits,
            fallback_count: counters.fallback_count,
            ..Default::default()
        })
    }

    /// Phase A: every row of Φ from its own stream, topics split into
    /// contiguous blocks across workers.
    fn draw_phi(&mut self, n: &TopicWord) -> Result<()> {
        let k = self.config.topics;
        let v = n.vocab_size();
        let workers = self.config.workers.min(k);
        let chunk = k.div_ceil(workers);
        let (seed, it, beta) = (self.config.seed, self.iteration, self.config.beta);
        let cache = self.cache.as_ref();
        let draw_block = |first: usize, rows: &mut [Vec<(WordId, f64)>]| -> Result<()> {
            let mut conc = Vec::new();
            let mut dense = Vec::new();
            for (i, out) in rows.iter_mut().enumerate() {
                let t = first + i;
                let mut rng = stream_rng(seed, StreamKind::PhiRow, it, t as u64);
                match cache {
                    Some(cache) => draw_phi_pu_row(n.row(t), v, cache, &mut rng, out)?,
                    None => {
                        conc.resize(v, 0.0);
                        dense.resize(v, 0.0);
                        draw_phi_pc_row(n.row(t), beta, &mut conc, &mut dense, &mut rng)?;
                        out.clear();
                        out.extend(
                            dense
                                .iter()
                                .enumerate()
                                .filter(|e| *e.1 > 0.0)
                                .map(|(w, &p)| (w as WordId, p)),
                        );
                    }
                }
            }
            Ok(())
        };
        if workers <= 1 {
            draw_block(0, &mut self.rows)?;
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = self
                    .rows
                    .chunks_mut(chunk)
                    .enumerate()
                    .map(|(i, block)| {
                        let draw_block = &draw_block;
                        s.spawn(move || draw_block(i * chunk, block))
                    })
                    .collect();
                handles
                    .into_iter()
                    .try_for_each(|h| h.join().expect("phi worker panicked"))
            })?;
        }
        self.phi.fill_from_rows(&self.rows);
        Ok(())
    }

    /// Phase B: per-shard token sweeps, then the `n` delta merge.
    fn sweep_documents(&mut self, state: &mut TopicState, corpus: &Corpus) -> Result<TokenCounters> {
        let k = self.config.topics;
        let ctx = SweepContext {
            corpus,
            phi: &self.phi,
            a_tables: &self.a_tables,
            alpha: &self.alpha,
            seed: self.config.seed,
            iteration: self.iteration,
            topics: k,
        };
        let offsets = corpus.offsets();
        let mut m_shards = state.m.split_mut(&self.shards);
        let mut z_rest: &mut [Topic] = &mut state.z;
        let mut z_shards = Vec::with_capacity(m_shards.len());
        for w in self.shards.windows(2) {
            let (head, tail) = std::mem::take(&mut z_rest).split_at_mut(offsets[w[1]] - offsets[w[0]]);
            z_shards.push(head);
            z_rest = tail;
        }

        let results: Vec<ShardResult> = if m_shards.len() == 1 {
            vec![ctx.sweep(&mut m_shards[0], z_shards.pop().expect("one shard"))]
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = m_shards
                    .iter_mut()
                    .zip(z_shards)
                    .map(|(m, z)| {
                        let ctx = &ctx;
                        s.spawn(move || ctx.sweep(m, z))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("document worker panicked")).collect()
            })
        };

        let mut counters = TokenCounters::default();
        let mut merged: Vec<(WordId, i64)> = Vec::new();
        for r in &results {
            counters.merge(&r.counters);
        }
        for t in 0..k {
            merged.clear();
            for r in &results {
                merged.extend_from_slice(&r.deltas[t]);
            }
            if merged.is_empty() {
                continue;
            }
            merged.sort_unstable_by_key(|e| e.0);
            merged.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
            merged.retain(|e| e.1 != 0);
            state.n.apply_row_deltas(t, &merged)?;
        }
        Ok(counters)
    }
}

struct SweepContext<'a> {
    corpus: &'a Corpus,
    phi: &'a SparsePhi,
    a_tables: &'a ATableSet,
    alpha: &'a [f64],
    seed: u64,
    iteration: u64,
    topics: usize,
}

struct ShardResult {
    counters: TokenCounters,
    /// Per topic, unsorted `(word, ±1)` changes.
    deltas: Vec<Vec<(WordId, i64)>>,
}

impl SweepContext<'_> {
    fn sweep(&self, m: &mut DocTopicShard<'_>, z: &mut [Topic]) -> ShardResult {
        let mut counters = TokenCounters::default();
        let mut deltas = vec![Vec::new(); self.topics];
        let mut scratch = Vec::new();
        let first = m.first_doc();
        let base = self.corpus.offsets()[first];
        for d in first..first + m.num_docs() {
            let mut rng = stream_rng(self.seed, StreamKind::Document, self.iteration, d as u64);
            let mut row = m.row_mut(d);
            for i in self.corpus.doc_range(d) {
                let v = self.corpus.tokens()[i];
                let old = z[i - base];
                row.decrement(old);
                let new = draw_z_token(
                    v,
                    row.counts(),
                    row.nonzero(),
                    self.phi,
                    self.alpha,
                    self.a_tables,
                    &mut rng,
                    &mut scratch,
                    &mut counters,
                );
                row.increment(new);
                if new != old {
                    z[i - base] = new;
                    deltas[old as usize].push((v, -1));
                    deltas[new as usize].push((v, 1));
                }
            }
        }
        ShardResult { counters, deltas }
    }
}

/// Contiguous document blocks balanced by token count: block `i` starts at the
/// first document whose starting token offset reaches `i·N/workers`. Returns
/// `workers + 1` non-decreasing boundaries from 0 to D (blocks may be empty).
pub fn shard_bounds(offsets: &[usize], workers: usize) -> Vec<usize> {
    let d = offsets.len() - 1;
    let n = offsets[d];
    let workers = workers.max(1);
    let mut bounds = Vec::with_capacity(workers + 1);
    bounds.push(0);
    for i in 1..workers {
        let target = (n as u128 * i as u128 / workers as u128) as usize;
        let b = offsets[..d].partition_point(|&o| o < target);
        bounds.push(b.max(*bounds.last().unwrap()));
    }
    bounds.push(d);
    bounds
}
