use pasta_core::bridge::{BridgeClient, BridgeOracle, BridgeSpec, DEFAULT_TIMEOUT, STUB_EMBED_DIM};
use pasta_core::data::{load_manifest, Aggregation, ExplanationKind, Question, SplitAssignment, SplitConfig};
use pasta_core::pipeline::{build_samples, embed_explanations, EmbedOptions};
use pasta_core::synth::{synth_dataset, SynthConfig};
use pasta_core::xai::{run_batch, BatchConfig, PerturbationKind, PerturbationStrategy, ThresholdSet};

fn small() -> SynthConfig {
    SynthConfig { n_images: 12, n_saliency: 4, n_concept: 2, image_size: 16, seed: 5, questions: vec![Question::Q1, Question::Q4], ..SynthConfig::default() }
}

#[test]
fn synthetic_dataset_flows_to_samples() {
    let dir = tempfile::tempdir().unwrap();
    let options = EmbedOptions::default();
    let written = synth_dataset(dir.path(), &small(), &options).unwrap();
    let manifest = load_manifest(dir.path()).unwrap();
    assert_eq!(manifest.records, written.records);
    assert!(manifest.validate().is_clean());
    assert_eq!(manifest.records.len(), 12 * 6 * 2);

    let client = BridgeClient::connect(&BridgeSpec::Stub, DEFAULT_TIMEOUT).unwrap();
    let pairs = manifest.annotated_pairs();
    let embeddings = embed_explanations(&manifest, &pairs, &client, &options).unwrap();
    assert_eq!(embeddings.len(), pairs.len());
    assert!(embeddings.values().all(|v| v.len() == STUB_EMBED_DIM));
    // same artifacts embed to the same vectors
    assert_eq!(embeddings, embed_explanations(&manifest, &pairs, &client, &options).unwrap());

    let samples = build_samples::<f32>(&manifest, &embeddings, Question::Q4, Aggregation::Mean).unwrap();
    assert_eq!(samples.len(), 12 * 6);
    assert!(samples.iter().all(|s| (1.0..=5.0).contains(&s.target) && s.input().unwrap().len() == STUB_EMBED_DIM + 3));

    let split = SplitAssignment::build(&pairs, 3, SplitConfig::default()).unwrap();
    let total = split.train.pairs.len() + split.val.pairs.len() + split.test.pairs.len() + split.discarded;
    assert_eq!(total, pairs.len());
    assert!(split.train.image_ids.is_disjoint(&split.test.image_ids));
    assert!(split.train.xai_ids.is_disjoint(&split.test.xai_ids));
}

#[test]
fn xai_batch_covers_saliency_explanations() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_dataset(dir.path(), &small(), &EmbedOptions::default()).unwrap();
    let client = BridgeClient::connect(&BridgeSpec::Stub, DEFAULT_TIMEOUT).unwrap();
    let config = BatchConfig {
        strategies: vec![
            PerturbationStrategy::new(PerturbationKind::DEFAULT_UNIFORM, 1),
            PerturbationStrategy::new(PerturbationKind::BlackPatch, 1),
        ],
        thresholds: ThresholdSet::new(vec![10, 50]).unwrap(),
    };
    let records = run_batch(&manifest, &BridgeOracle { client: &client }, &config).unwrap();
    let saliency = manifest.file.explanations.iter().filter(|e| e.kind == ExplanationKind::Saliency).count();
    assert_eq!(records.len(), saliency);
    for r in &records {
        assert_eq!(r.faithfulness.len(), 2);
        for f in r.faithfulness.values() {
            assert!((0.0..=1.0).contains(&f.sufficiency) && (0.0..=1.0).contains(&f.necessity));
        }
        assert!((0.0..=1.0).contains(&r.gini));
        assert!(r.stats.is_some());
    }
    assert_eq!(records, run_batch(&manifest, &BridgeOracle { client: &client }, &config).unwrap());
}
