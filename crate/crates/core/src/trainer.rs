//! Corpus streaming and winner-take-all energy minimization.
//!
//! Each batch: pick the winner of every sample, sum the per-sample row
//! gradients per winning row, then take one optimizer step with a linearly
//! annealed learning rate. Rows that never win receive no update.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy::{self, BagOfWordsWindow, PhasedSentence, RowGradient};
use crate::error::{Error, Result};
use crate::model::{self, ComplexWeights, Mode, ModelMeta};
use crate::vocab::{FrequencyTable, TokenSeq, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub const fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Length of the annealing schedule, in epochs.
    pub epochs: usize,
    /// Epochs to run in this call; `None` runs to the end of the schedule.
    pub run_epochs: Option<usize>,
    pub lr0: f64,
    pub batch_size: usize,
    /// Sliding-window length, required in flyvec mode.
    pub window: Option<usize>,
    pub max_sentence_len: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
    /// Worker threads for per-sample winner/gradient computation.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 15,
            run_epochs: None,
            lr0: 4e-4,
            batch_size: 256,
            window: None,
            max_sentence_len: 64,
            seed: 0,
            optimizer: Optimizer::adam(),
            threads: 1,
        }
    }
}

impl TrainConfig {
    /// `lr0 * (1 - step / total)`, clamped at zero.
    pub fn lr_at(&self, step: usize, total: usize) -> f64 {
        if total == 0 {
            return 0.0;
        }
        (self.lr0 * (1.0 - step as f64 / total as f64)).max(0.0)
    }

    fn validate(&self, mode: Mode) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if self.max_sentence_len == 0 {
            return bad("max sentence length must be positive");
        }
        if mode == Mode::RealFlyVec && !matches!(self.window, Some(w) if w > 0) {
            return bad("flyvec mode requires a positive window length");
        }
        Ok(())
    }
}

/// Encoded training sentences.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    sentences: Vec<TokenSeq>,
    dropped: usize,
}

impl Corpus {
    pub fn from_sequences(sentences: Vec<TokenSeq>) -> Self {
        Corpus { sentences, dropped: 0 }
    }

    /// Encodes one sentence per line; lines with no known word are dropped.
    pub fn from_lines<'a>(
        lines: impl IntoIterator<Item = &'a str>,
        vocab: &Vocabulary,
        max_len: usize,
    ) -> Result<Self> {
        let mut sentences = Vec::new();
        let mut dropped = 0;
        for line in lines {
            match vocab.encode(line, max_len) {
                Ok(seq) => sentences.push(seq),
                Err(Error::EmptyEncoding) => dropped += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(Corpus { sentences, dropped })
    }

    pub fn from_text_file(path: impl AsRef<Path>, vocab: &Vocabulary, max_len: usize) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_lines(text.lines(), vocab, max_len)
    }

    /// Pre-tokenized input: one line of space-separated ids per sentence.
    pub fn from_id_file(path: impl AsRef<Path>, words: usize, max_len: usize) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut sentences = Vec::new();
        let mut dropped = 0;
        for (i, line) in text.lines().enumerate() {
            let ids = line
                .split_whitespace()
                .map(|t| match t.parse::<u32>() {
                    Ok(id) if (id as usize) < words => Ok(id),
                    _ => Err(Error::DatasetFormat {
                        line: i + 1,
                        msg: format!("bad token id {t:?} for vocabulary of {words}"),
                    }),
                })
                .take(max_len)
                .collect::<Result<Vec<u32>>>()?;
            match TokenSeq::new(ids) {
                Ok(seq) => sentences.push(seq),
                Err(_) => dropped += 1,
            }
        }
        Ok(Corpus { sentences, dropped })
    }

    pub fn sentences(&self) -> &[TokenSeq] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Lines that encoded to nothing.
    pub fn dropped(&self) -> usize {
        self.dropped
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sample {
    Sentence(PhasedSentence),
    Window(BagOfWordsWindow),
}

/// One window per target position, with up to `window - 1` neighbours
/// (`(window - 1) / 2` on the left, the rest on the right), clipped at the
/// sentence edges.
pub fn sentence_windows(ids: &[u32], window: usize) -> Vec<BagOfWordsWindow> {
    let span = window.saturating_sub(1);
    let left = span / 2;
    let right = span - left;
    (0..ids.len())
        .map(|t| {
            let lo = t.saturating_sub(left);
            let hi = (t + right + 1).min(ids.len());
            let context: Vec<u32> = (lo..hi).filter(|&i| i != t).map(|i| ids[i]).collect();
            BagOfWordsWindow::new(&context, ids[t])
        })
        .collect()
}

/// Sentence visiting order for `epoch`, derived from `seed` alone.
pub fn epoch_order(len: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64 + 1);
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut rng);
    order
}

/// Batches of one epoch, built lazily in shuffled sentence order.
pub struct BatchStream<'a> {
    corpus: &'a Corpus,
    order: Vec<usize>,
    next_sentence: usize,
    mode: Mode,
    window: usize,
    batch_size: usize,
    pending: std::collections::VecDeque<Sample>,
}

impl Iterator for BatchStream<'_> {
    type Item = Vec<Sample>;

    fn next(&mut self) -> Option<Vec<Sample>> {
        while self.pending.len() < self.batch_size && self.next_sentence < self.order.len() {
            let seq = &self.corpus.sentences[self.order[self.next_sentence]];
            self.next_sentence += 1;
            match self.mode {
                Mode::Complex => self.pending.push_back(Sample::Sentence(PhasedSentence::new(seq))),
                Mode::RealFlyVec => self
                    .pending
                    .extend(sentence_windows(seq.ids(), self.window).into_iter().map(Sample::Window)),
            }
        }
        if self.pending.is_empty() {
            return None;
        }
        let n = self.batch_size.min(self.pending.len());
        Some(self.pending.drain(..n).collect())
    }
}

pub fn make_batches<'a>(corpus: &'a Corpus, config: &TrainConfig, mode: Mode, epoch: usize) -> Result<BatchStream<'a>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    config.validate(mode)?;
    Ok(BatchStream {
        corpus,
        order: epoch_order(corpus.len(), config.seed, epoch),
        next_sentence: 0,
        mode,
        window: config.window.unwrap_or(1),
        batch_size: config.batch_size,
        pending: Default::default(),
    })
}

fn batches_per_epoch(corpus: &Corpus, config: &TrainConfig, mode: Mode) -> usize {
    let samples = match mode {
        Mode::Complex => corpus.len(),
        Mode::RealFlyVec => corpus.sentences.iter().map(TokenSeq::len).sum(),
    };
    samples.div_ceil(config.batch_size)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_energy: f64,
    pub distinct_winners: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainTrace {
    pub epochs: Vec<EpochRecord>,
}

impl TrainTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,mean_energy,distinct_winners,seconds\n");
        for r in &self.epochs {
            let _ = writeln!(
                out,
                "{},{},{},{:.6}",
                r.epoch, r.mean_energy, r.distinct_winners, r.seconds
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

pub enum Start {
    Fresh { neurons: usize },
    Resume { weights: ComplexWeights, meta: ModelMeta },
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub weights: ComplexWeights,
    pub meta: ModelMeta,
    pub trace: TrainTrace,
}

struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    // row -> (m_re, m_im, v_re, v_im)
    moments: BTreeMap<usize, [Vec<f64>; 4]>,
}

struct RowAccum {
    radial: f64,
    entries: Vec<(usize, f64, f64)>,
}

impl RowAccum {
    fn add(&mut self, g: RowGradient) {
        self.radial += g.radial;
        self.entries.extend(g.entries);
    }

    fn dense(&self, w: &ComplexWeights, mu: usize) -> (Vec<f64>, Vec<f64>) {
        RowGradient {
            neuron: mu,
            radial: self.radial,
            entries: self.entries.clone(),
        }
        .dense(w)
    }
}

fn process_sample(w: &ComplexWeights, sample: &Sample, p: &FrequencyTable) -> (f64, RowGradient) {
    match sample {
        Sample::Sentence(s) => {
            let mu = energy::select_winner_unchecked(w, s);
            (
                energy::energy_unchecked(w, mu, s, p),
                energy::gradient_unchecked(w, mu, s, p),
            )
        }
        Sample::Window(v) => {
            // ids were validated against the vocabulary up front
            let mu = energy::flyvec_winner(w, v).expect("validated window");
            (
                energy::flyvec_sample_energy_at(w, mu, v, p).expect("validated window"),
                energy::flyvec_energy_gradient_at(w, mu, v, p).expect("validated window"),
            )
        }
    }
}

/// Minimizes the per-sample energy over `corpus`.
pub fn train(
    corpus: &Corpus,
    vocab: &Vocabulary,
    config: &TrainConfig,
    mode: Mode,
    start: Start,
) -> Result<TrainOutput> {
    config.validate(mode)?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let words = vocab.len();
    if let Some(id) = corpus
        .sentences
        .iter()
        .flat_map(|s| s.ids())
        .find(|&&id| id as usize >= words)
    {
        return Err(Error::DimensionMismatch(format!(
            "corpus token id {id} >= vocabulary size {words}"
        )));
    }

    let (mut w, start_epoch) = match start {
        Start::Fresh { neurons } => (model::init_weights(neurons, words, mode, config.seed)?, 0),
        Start::Resume { weights, meta } => {
            if meta.vocab_hash != vocab.checksum() {
                return Err(Error::VocabMismatch);
            }
            if weights.mode() != mode || weights.words() != words {
                return Err(Error::DimensionMismatch(format!(
                    "checkpoint is {} with {} words, run is {} with {words}",
                    weights.mode().name(),
                    weights.words(),
                    mode.name()
                )));
            }
            (weights, meta.trained_epochs as usize)
        }
    };
    if start_epoch > config.epochs {
        return Err(Error::InvalidArgument(format!(
            "checkpoint already trained {start_epoch} epochs, schedule has {}",
            config.epochs
        )));
    }
    let end_epoch = match config.run_epochs {
        Some(n) => (start_epoch + n).min(config.epochs),
        None => config.epochs,
    };

    let per_epoch = batches_per_epoch(corpus, config, mode);
    let total_steps = config.epochs * per_epoch;
    let p = vocab.frequencies();
    let pool = if config.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.threads)
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?,
        )
    } else {
        None
    };
    let mut adam = match config.optimizer {
        Optimizer::Adam { beta1, beta2, eps } => Some(Adam {
            beta1,
            beta2,
            eps,
            t: 0,
            moments: BTreeMap::new(),
        }),
        Optimizer::Sgd => None,
    };

    let mut trace = TrainTrace::default();
    for epoch in start_epoch..end_epoch {
        let clock = Instant::now();
        let mut energy_sum = 0.0;
        let mut samples = 0usize;
        let mut winners = HashSet::new();

        for (b, batch) in make_batches(corpus, config, mode, epoch)?.enumerate() {
            let step = epoch * per_epoch + b;
            let lr = config.lr_at(step, total_steps);
            let results: Vec<(f64, RowGradient)> = match &pool {
                Some(pool) => pool.install(|| batch.par_iter().map(|s| process_sample(&w, s, p)).collect()),
                None => batch.iter().map(|s| process_sample(&w, s, p)).collect(),
            };

            let mut rows: BTreeMap<usize, RowAccum> = BTreeMap::new();
            for (e, g) in results {
                energy_sum += e;
                samples += 1;
                winners.insert(g.neuron);
                rows.entry(g.neuron)
                    .or_insert(RowAccum {
                        radial: 0.0,
                        entries: Vec::new(),
                    })
                    .add(g);
            }

            let grads: BTreeMap<usize, (Vec<f64>, Vec<f64>)> =
                rows.iter().map(|(&mu, acc)| (mu, acc.dense(&w, mu))).collect();
            let touched: Vec<usize> = match &adam {
                Some(a) => a
                    .moments
                    .keys()
                    .chain(grads.keys())
                    .copied()
                    .collect::<std::collections::BTreeSet<_>>()
                    .into_iter()
                    .collect(),
                None => grads.keys().copied().collect(),
            };
            let backup: Vec<(usize, Vec<f32>, Vec<f32>)> = touched
                .iter()
                .map(|&mu| (mu, w.row_re(mu).to_vec(), w.row_im(mu).to_vec()))
                .collect();

            match &mut adam {
                None => {
                    for (&mu, (g_re, g_im)) in &grads {
                        let (re, im) = w.row_mut(mu);
                        sgd_update(re, g_re, lr);
                        if mode == Mode::Complex {
                            sgd_update(im, g_im, lr);
                        }
                    }
                }
                Some(adam) => adam_step(adam, &mut w, &grads, lr, mode),
            }

            if touched
                .iter()
                .any(|&mu| w.row_re(mu).iter().chain(w.row_im(mu)).any(|x| !x.is_finite()))
            {
                for (mu, re, im) in backup {
                    let (r, i) = w.row_mut(mu);
                    r.copy_from_slice(&re);
                    i.copy_from_slice(&im);
                }
                return Err(Error::NonFinite {
                    epoch,
                    step,
                    last_good: Box::new(w),
                });
            }
        }

        trace.epochs.push(EpochRecord {
            epoch: epoch + 1,
            mean_energy: energy_sum / samples.max(1) as f64,
            distinct_winners: winners.len(),
            seconds: clock.elapsed().as_secs_f64(),
        });
    }

    Ok(TrainOutput {
        weights: w,
        meta: ModelMeta {
            seed: config.seed,
            trained_epochs: end_epoch as u32,
            vocab_hash: vocab.checksum(),
        },
        trace,
    })
}

fn sgd_update(row: &mut [f32], grad: &[f64], lr: f64) {
    for (x, g) in row.iter_mut().zip(grad) {
        if *g != 0.0 {
            *x = (*x as f64 - lr * g) as f32;
        }
    }
}

fn adam_step(
    adam: &mut Adam,
    w: &mut ComplexWeights,
    grads: &BTreeMap<usize, (Vec<f64>, Vec<f64>)>,
    lr: f64,
    mode: Mode,
) {
    adam.t += 1;
    let width = w.width();
    for &mu in grads.keys() {
        adam.moments
            .entry(mu)
            .or_insert_with(|| std::array::from_fn(|_| vec![0.0; width]));
    }
    let c1 = 1.0 - adam.beta1.powi(adam.t);
    let c2 = 1.0 - adam.beta2.powi(adam.t);
    let zeros = vec![0.0; width];
    for (&mu, [m_re, m_im, v_re, v_im]) in adam.moments.iter_mut() {
        let (g_re, g_im) = grads
            .get(&mu)
            .map(|(a, b)| (a.as_slice(), b.as_slice()))
            .unwrap_or((&zeros, &zeros));
        let (re, im) = w.row_mut(mu);
        let update = |x: &mut [f32], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for j in 0..x.len() {
                m[j] = adam.beta1 * m[j] + (1.0 - adam.beta1) * g[j];
                v[j] = adam.beta2 * v[j] + (1.0 - adam.beta2) * g[j] * g[j];
                if m[j] != 0.0 {
                    let step = lr * (m[j] / c1) / ((v[j] / c2).sqrt() + adam.eps);
                    x[j] = (x[j] as f64 - step) as f32;
                }
            }
        };
        update(re, g_re, m_re, v_re);
        if mode == Mode::Complex {
            update(im, g_im, m_im, v_im);
        }
    }
}

/// Continues a checkpointed run along its original schedule.
pub fn train_resume(
    checkpoint: impl AsRef<Path>,
    corpus: &Corpus,
    vocab: &Vocabulary,
    config: &TrainConfig,
) -> Result<TrainOutput> {
    let (weights, meta) = model::load_model(checkpoint)?;
    let mode = weights.mode();
    train(corpus, vocab, config, mode, Start::Resume { weights, meta })
}
