//! Four Kenyon cells, ten digit words, two sentences: `1 2 ... 9` and its
//! reversal. After training each sentence is imprinted in its own neuron,
//! with weight phases in the lower half-plane, and the other two neurons
//! are untouched.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::energy::{self, PhasedSentence};
use crate::error::Result;
use crate::model::{self, ComplexWeights, Mode, Scalar};
use crate::trainer::{self, Corpus, Optimizer, Start, TrainConfig, TrainOutput};
use crate::vocab::Vocabulary;

pub const SEQUENCES: [&str; 2] = ["1 2 3 4 5 6 7 8 9", "9 8 7 6 5 4 3 2 1"];

#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub neurons: usize,
    pub seed: u64,
    pub lr0: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            neurons: 4,
            seed: 0,
            lr0: 1e-3,
            epochs: 2000,
            batch_size: SEQUENCES.len(),
        }
    }
}

impl ToyConfig {
    /// Trainer settings: plain SGD.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            run_epochs: None,
            lr0: self.lr0,
            batch_size: self.batch_size,
            window: None,
            max_sentence_len: 64,
            seed: self.seed,
            optimizer: Optimizer::Sgd,
            threads: 1,
        }
    }
}

/// Digits `0..=9`, id = digit.
pub fn toy_vocab() -> Vocabulary {
    let count = |d: usize| if d == 0 { 1 } else { SEQUENCES.len() as u64 };
    Vocabulary::from_entries((0..10).map(|d| (d.to_string(), count(d)))).expect("digit vocabulary")
}

pub fn toy_corpus(vocab: &Vocabulary) -> Corpus {
    Corpus::from_lines(SEQUENCES, vocab, 64).expect("toy sentences encode")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ToyReport {
    pub initial: ComplexWeights,
    pub trained: TrainOutput,
    /// Winning neuron of each sentence after training.
    pub winners: [usize; 2],
    pub checks: Vec<ToyCheck>,
}

impl ToyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        let _ = writeln!(out, "overall: {}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }
}

/// `Arg` of the weights row `mu` holds for `ids`, in sentence order.
pub fn learned_phases<S: Scalar>(w: &ComplexWeights<S>, mu: usize, ids: &[u32]) -> Vec<f64> {
    ids.iter().map(|&id| energy::arg0(w.get(mu, id as usize))).collect()
}

/// `neuron,token,re,im` rows for every weight.
pub fn weights_csv(w: &ComplexWeights, vocab: &Vocabulary) -> String {
    let mut out = String::from("neuron,token,re,im\n");
    for mu in 0..w.neurons() {
        for j in 0..w.width() {
            let z = w.get(mu, j);
            let tok = vocab.token(j as u32).unwrap_or("?");
            let _ = writeln!(out, "{mu},{tok},{},{}", z.re, z.im);
        }
    }
    out
}

pub fn run(config: &ToyConfig) -> Result<ToyReport> {
    let vocab = toy_vocab();
    let corpus = toy_corpus(&vocab);
    let initial: ComplexWeights = model::init_weights(config.neurons, vocab.len(), Mode::Complex, config.seed)?;
    let trained = trainer::train(
        &corpus,
        &vocab,
        &config.train_config(),
        Mode::Complex,
        Start::Fresh {
            neurons: config.neurons,
        },
    )?;
    let w = &trained.weights;
    let sentences: Vec<PhasedSentence> = corpus.sentences().iter().map(PhasedSentence::new).collect();
    let winners = [
        energy::select_winner(w, &sentences[0])?,
        energy::select_winner(w, &sentences[1])?,
    ];

    let mut checks = Vec::new();
    let changed: Vec<usize> = (0..w.neurons()).filter(|&mu| !w.rows_equal(&initial, mu)).collect();
    checks.push(ToyCheck {
        name: "two neurons changed",
        passed: changed.len() == 2,
        detail: format!("changed neurons {changed:?}, others bitwise equal to init"),
    });
    let mut sorted_winners = winners.to_vec();
    sorted_winners.sort_unstable();
    checks.push(ToyCheck {
        name: "distinct imprinting neurons",
        passed: winners[0] != winners[1] && sorted_winners == changed,
        detail: format!("1..9 -> neuron {}, 9..1 -> neuron {}", winners[0], winners[1]),
    });

    for (s, &mu) in sentences.iter().zip(&winners) {
        let phases = learned_phases(w, mu, s.ids());
        let in_lower = phases.iter().all(|&a| (-PI..0.0).contains(&a));
        let increasing = phases.windows(2).all(|p| p[0] < p[1]);
        let shown: Vec<String> = phases.iter().map(|a| format!("{:.3}", a / PI)).collect();
        let label = if s.ids()[0] == 1 { "1..9" } else { "9..1" };
        checks.push(ToyCheck {
            name: "phases in [-pi, 0)",
            passed: in_lower,
            detail: format!("{label} neuron {mu}: phases/pi [{}]", shown.join(", ")),
        });
        checks.push(ToyCheck {
            name: "phases increase along the sentence",
            passed: increasing,
            detail: format!("{label} neuron {mu}"),
        });
    }

    Ok(ToyReport {
        initial,
        trained,
        winners,
        checks,
    })
}
