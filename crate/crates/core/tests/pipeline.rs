use proptest::prelude::*;

use pulda_core::corpus::{read_uci_bow, synth_corpus, write_uci_bow, Corpus, SynthParams, Vocabulary};
use pulda_core::eval::{log_joint, top_words, topic_coherence};
use pulda_core::sampler::{Sampler, SamplerConfig, Variant};
use pulda_core::stats::{init_state, read_snapshot, write_snapshot, SnapshotHeader, TopicState};

fn small() -> Corpus {
    synth_corpus(&SynthParams {
        topics: 5,
        vocab_size: 120,
        docs: 80,
        doc_len: 60,
        alpha: 0.1,
        beta: 0.01,
        seed: 11,
    })
    .unwrap()
    .corpus
}

fn train(corpus: &Corpus, variant: Variant, k: usize, workers: usize, iters: usize) -> TopicState {
    let mut cfg = SamplerConfig::new(variant, k);
    cfg.seed = 3;
    cfg.workers = workers;
    let mut state = init_state(corpus, k, cfg.seed).unwrap();
    let mut sampler = Sampler::new(cfg, corpus).unwrap();
    for _ in 0..iters {
        let m = sampler.run_iteration(&mut state, corpus).unwrap();
        assert!(m.b_bucket_work <= m.sparsity_bound);
        assert!(m.log_joint.is_finite());
    }
    state
}

#[test]
fn uci_round_trip_then_train_snapshot_and_score() {
    let corpus = small();
    let (mut docword, mut vocab) = (Vec::new(), Vec::new());
    write_uci_bow(&corpus, &mut docword, &mut vocab).unwrap();
    let reread = read_uci_bow(&docword[..], Some(&vocab[..]), 1).unwrap();
    assert_eq!(reread.num_tokens(), corpus.num_tokens());
    // words that never occur fall below any positive rare-word limit
    let used = corpus.word_frequencies().iter().filter(|&&f| f > 0).count();
    assert_eq!(reread.vocab_size(), used);

    for variant in [Variant::Pu, Variant::Pc, Variant::Collapsed] {
        let state = train(&reread, variant, 5, 3, 30);
        state.check_recount(&reread).unwrap();
        let lj = log_joint(&reread, state.assignments(), 5, 0.1, 0.01).unwrap();
        assert!(lj.is_finite());

        let dir = tempfile::tempdir().unwrap();
        let header = SnapshotHeader {
            topics: 5,
            vocab_size: reread.vocab_size(),
            docs: reread.num_docs(),
            alpha: 0.1,
            beta: 0.01,
            iteration: 30,
            seed: 3,
        };
        write_snapshot(dir.path(), &header, &state).unwrap();
        let snap = read_snapshot(dir.path()).unwrap();
        assert_eq!(snap.header, header);
        assert_eq!(&snap.topic_word, state.topic_word());
        assert_eq!(top_words(&snap.topic_word, 10), top_words(state.topic_word(), 10));

        let scores = topic_coherence(&snap.topic_word, &reread, 10).unwrap();
        assert_eq!(scores.len(), 5);
        assert!(scores.iter().all(|c| c.is_finite()));
    }
}

#[test]
fn training_raises_the_log_joint() {
    let corpus = small();
    let init = init_state(&corpus, 5, 3).unwrap();
    let before = log_joint(&corpus, init.assignments(), 5, 0.1, 0.01).unwrap();
    for variant in [Variant::Pu, Variant::Pc, Variant::Collapsed] {
        let state = train(&corpus, variant, 5, 2, 50);
        let after = log_joint(&corpus, state.assignments(), 5, 0.1, 0.01).unwrap();
        assert!(after > before + 1000.0, "{variant}: {before} -> {after}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn counts_stay_exact_on_arbitrary_corpora(
        docs in prop::collection::vec(prop::collection::vec(0u32..12, 0..25), 1..12),
        k in 1usize..6,
        workers in 1usize..5,
        pu in any::<bool>(),
    ) {
        let corpus = Corpus::new(Vocabulary::numbered(12), docs).unwrap();
        let variant = if pu { Variant::Pu } else { Variant::Pc };
        let state = train(&corpus, variant, k, workers, 4);
        state.check_recount(&corpus).unwrap();
        let serial = train(&corpus, variant, k, 1, 4);
        prop_assert_eq!(state.assignments(), serial.assignments());
    }
}
