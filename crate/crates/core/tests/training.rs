use comply::model::{self, Mode};
use comply::synthetic::{template_data, TemplateSpec};
use comply::toy::{self, ToyConfig};
use comply::trainer::{self, Start};
use comply::{Corpus, Error, Optimizer, TrainConfig, Vocabulary};

fn sgd(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size: 16,
        optimizer: Optimizer::Sgd,
        lr0: 1e-2,
        seed: 4,
        ..TrainConfig::default()
    }
}

fn partial(config: TrainConfig, run: usize) -> TrainConfig {
    TrainConfig {
        run_epochs: Some(run),
        ..config
    }
}

fn templates() -> (Vocabulary, Corpus) {
    let data = template_data(&TemplateSpec::default());
    let vocab = Vocabulary::from_text(&data.corpus.join("\n"), 1000).unwrap();
    let corpus = Corpus::from_lines(data.corpus.iter().map(String::as_str), &vocab, 64).unwrap();
    (vocab, corpus)
}

#[test]
fn two_epochs_equal_one_plus_resumed_one() {
    let (vocab, corpus) = templates();
    let full = trainer::train(&corpus, &vocab, &sgd(2), Mode::Complex, Start::Fresh { neurons: 12 }).unwrap();

    let first_half = partial(sgd(2), 1);
    let half = trainer::train(
        &corpus,
        &vocab,
        &first_half,
        Mode::Complex,
        Start::Fresh { neurons: 12 },
    )
    .unwrap();
    assert_eq!(half.meta.trained_epochs, 1);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("half.cply");
    model::save_model(&half.weights, &half.meta, &path).unwrap();
    let resumed = trainer::train_resume(&path, &corpus, &vocab, &sgd(2)).unwrap();

    assert_eq!(resumed.meta.trained_epochs, 2);
    assert_eq!(resumed.weights, full.weights);
    assert_eq!(resumed.trace.epochs.len(), 1);
    assert_eq!(resumed.trace.epochs[0].epoch, 2);
}

#[test]
fn flyvec_resume_is_exact_too() {
    let (vocab, corpus) = templates();
    let config = TrainConfig {
        window: Some(3),
        ..sgd(2)
    };
    let full = trainer::train(&corpus, &vocab, &config, Mode::RealFlyVec, Start::Fresh { neurons: 6 }).unwrap();
    let half_config = partial(config.clone(), 1);
    let half = trainer::train(
        &corpus,
        &vocab,
        &half_config,
        Mode::RealFlyVec,
        Start::Fresh { neurons: 6 },
    )
    .unwrap();
    let rest = trainer::train(
        &corpus,
        &vocab,
        &config,
        Mode::RealFlyVec,
        Start::Resume {
            weights: half.weights,
            meta: half.meta,
        },
    )
    .unwrap();
    assert_eq!(rest.weights, full.weights);
}

#[test]
fn resume_with_nothing_left_is_identity() {
    let (vocab, corpus) = templates();
    let done = trainer::train(&corpus, &vocab, &sgd(2), Mode::Complex, Start::Fresh { neurons: 8 }).unwrap();
    let again = trainer::train(
        &corpus,
        &vocab,
        &sgd(2),
        Mode::Complex,
        Start::Resume {
            weights: done.weights.clone(),
            meta: done.meta.clone(),
        },
    )
    .unwrap();
    assert_eq!(again.weights, done.weights);
    assert!(again.trace.epochs.is_empty());

    let zero = partial(sgd(5), 0);
    let half = trainer::train(
        &corpus,
        &vocab,
        &partial(sgd(5), 1),
        Mode::Complex,
        Start::Fresh { neurons: 8 },
    )
    .unwrap();
    let same = trainer::train(
        &corpus,
        &vocab,
        &zero,
        Mode::Complex,
        Start::Resume {
            weights: half.weights.clone(),
            meta: half.meta.clone(),
        },
    )
    .unwrap();
    assert_eq!(same.weights, half.weights);
    assert_eq!(same.meta, half.meta);
}

#[test]
fn resume_against_another_vocabulary_fails() {
    let (vocab, corpus) = templates();
    let half = trainer::train(
        &corpus,
        &vocab,
        &partial(sgd(2), 1),
        Mode::Complex,
        Start::Fresh { neurons: 4 },
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.cply");
    model::save_model(&half.weights, &half.meta, &path).unwrap();

    let mut entries: Vec<(String, u64)> = vocab
        .tokens()
        .iter()
        .zip(vocab.frequencies().counts())
        .map(|(t, &c)| (t.clone(), c))
        .collect();
    entries[0].1 += 1;
    let other = Vocabulary::from_entries(entries).unwrap();
    let err = trainer::train_resume(&path, &corpus, &other, &sgd(2)).unwrap_err();
    assert!(matches!(err, Error::VocabMismatch), "{err:?}");
}

#[test]
fn toy_energy_block_means_decrease() {
    let report = toy::run(&ToyConfig::default()).unwrap();
    let energies: Vec<f64> = report.trained.trace.epochs.iter().map(|e| e.mean_energy).collect();
    assert_eq!(energies.len(), ToyConfig::default().epochs);
    let blocks: Vec<f64> = energies
        .chunks(50)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    for (i, pair) in blocks.windows(2).enumerate() {
        assert!(pair[1] <= pair[0] + 1e-6, "block {i}: {} -> {}", pair[0], pair[1]);
    }
    // per-epoch values oscillate once the first token's weight reaches the Arg branch cut
    let rises = energies.windows(2).filter(|p| p[1] > p[0] + 1e-6).count();
    let first_rise = energies
        .windows(2)
        .position(|p| p[1] > p[0] + 1e-6)
        .unwrap_or(energies.len());
    assert!(first_rise > 50, "energy rose already at epoch {}", first_rise + 1);
    assert!(rises < energies.len());
}

#[test]
fn rows_that_never_win_are_untouched_under_adam() {
    let vocab = toy::toy_vocab();
    let corpus = toy::toy_corpus(&vocab);
    let config = TrainConfig {
        epochs: 30,
        batch_size: 2,
        lr0: 1e-2,
        ..TrainConfig::default()
    };
    let init: comply::ComplexWeights = model::init_weights(6, 10, Mode::Complex, config.seed).unwrap();
    let out = trainer::train(&corpus, &vocab, &config, Mode::Complex, Start::Fresh { neurons: 6 }).unwrap();
    let changed = (0..6).filter(|&mu| !out.weights.rows_equal(&init, mu)).count();
    let max_winners = out.trace.epochs.iter().map(|e| e.distinct_winners).max().unwrap();
    assert!(changed >= 1 && changed <= 2 * config.epochs);
    assert!(
        changed < 6,
        "{changed} rows changed; at most {max_winners} distinct winners per epoch"
    );
}

#[test]
fn learning_rate_reaches_zero() {
    let c = TrainConfig::default();
    assert_eq!(c.lr_at(100, 100), 0.0);
    assert_eq!(c.lr_at(0, 100), c.lr0);
    assert!((0..=100).all(|t| c.lr_at(t, 100) >= 0.0));
}
