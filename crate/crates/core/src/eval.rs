//! Sentence-pair evaluation on hash cosine similarity.
//!
//! STS-style data is scored with Spearman's rank correlation against gold
//! similarities; duplicate-detection data with average precision. Both
//! read three-column TSV files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy::{PhasedSentence, WordBag};
use crate::error::{Error, Result};
use crate::hasher::{self, HashCode, ProductForm};
use crate::model::ComplexWeights;
use crate::vocab::Vocabulary;

/// Which scorer turns a sentence into a hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Comply,
    ComplyM(ProductForm),
    FlyVec,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Comply => "comply",
            Variant::ComplyM(_) => "complym",
            Variant::FlyVec => "flyvec",
        }
    }
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant input"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores vs {} gold values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two points"));
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// Mean precision at each positive, ranking by descending score with ties
/// broken by original position.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(Error::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if labels[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / positives as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord<T> {
    pub sentence_a: String,
    pub sentence_b: String,
    pub target: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StsDataset {
    pub records: Vec<PairRecord<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairClassDataset {
    pub records: Vec<PairRecord<bool>>,
}

fn parse_pairs<T>(text: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<PairRecord<T>>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::DatasetFormat {
            line: i + 1,
            msg: msg.into(),
        };
        let mut f = line.split('\t');
        let (Some(a), Some(b), Some(t), None) = (f.next(), f.next(), f.next(), f.next()) else {
            return Err(bad("expected 3 tab-separated fields"));
        };
        let target = parse(t.trim()).ok_or_else(|| bad("bad target column"))?;
        out.push(PairRecord {
            sentence_a: a.to_owned(),
            sentence_b: b.to_owned(),
            target,
        });
    }
    Ok(out)
}

impl StsDataset {
    pub fn from_tsv(text: &str) -> Result<Self> {
        let records = parse_pairs(text, |t| t.parse::<f64>().ok().filter(|x| x.is_finite()))?;
        let ds = StsDataset { records };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.records.len() < 2 {
            return Err(Error::InvalidArgument("STS dataset needs at least 2 records".into()));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_tsv(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = writeln!(out, "{}\t{}\t{}", r.sentence_a, r.sentence_b, r.target);
        }
        out
    }
}

impl PairClassDataset {
    pub fn from_tsv(text: &str) -> Result<Self> {
        let records = parse_pairs(text, |t| match t {
            "0" => Some(false),
            "1" => Some(true),
            _ => None,
        })?;
        let ds = PairClassDataset { records };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = self.records.iter().filter(|r| r.target).count();
        if pos == 0 || pos == self.records.len() {
            return Err(Error::InvalidArgument(
                "pair-classification dataset needs both classes".into(),
            ));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_tsv(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = writeln!(out, "{}\t{}\t{}", r.sentence_a, r.sentence_b, r.target as u8);
        }
        out
    }
}

/// Turns raw text into hash codes for a fixed model and scorer.
#[derive(Debug, Clone, Copy)]
pub struct Hasher<'a> {
    pub weights: &'a ComplexWeights,
    pub vocab: &'a Vocabulary,
    pub variant: Variant,
    pub max_len: usize,
}

impl<'a> Hasher<'a> {
    pub fn new(weights: &'a ComplexWeights, vocab: &'a Vocabulary, variant: Variant) -> Self {
        Hasher {
            weights,
            vocab,
            variant,
            max_len: 64,
        }
    }

    /// Neuron scores for `text`; `Err(EmptyEncoding)` when no word is known.
    pub fn scores(&self, text: &str) -> Result<Vec<f64>> {
        let seq = self.vocab.encode(text, self.max_len)?;
        match self.variant {
            Variant::Comply => hasher::comply_scores(self.weights, &PhasedSentence::new(&seq)),
            Variant::ComplyM(form) => hasher::complym_scores(self.weights, &PhasedSentence::new(&seq), form),
            Variant::FlyVec => hasher::flyvec_scores(self.weights, &WordBag::new(seq.ids())),
        }
    }

    pub fn hash(&self, text: &str, k: usize) -> Result<HashCode> {
        if k == 0 || k > self.weights.neurons() {
            return Err(Error::HashLengthOutOfRange {
                k,
                neurons: self.weights.neurons(),
            });
        }
        HashCode::top_k(&self.scores(text)?, k)
    }
}

/// Scores of both sides of every pair that survives encoding.
struct ScoredPairs<T> {
    /// `(scores_a, scores_b, target)`
    pairs: Vec<(Vec<f64>, Vec<f64>, T)>,
    dropped: usize,
}

fn score_pairs<T: Copy + Send + Sync>(hasher: &Hasher, records: &[PairRecord<T>]) -> Result<ScoredPairs<T>> {
    let scored: Vec<_> = records
        .par_iter()
        .map(|r| (hasher.scores(&r.sentence_a), hasher.scores(&r.sentence_b), r.target))
        .collect();
    let mut pairs = Vec::with_capacity(records.len());
    let mut dropped = 0;
    for r in scored {
        match r {
            (Ok(a), Ok(b), t) => pairs.push((a, b, t)),
            (Err(Error::EmptyEncoding), _, _) | (_, Err(Error::EmptyEncoding), _) => dropped += 1,
            (Err(e), _, _) | (_, Err(e), _) => return Err(e),
        }
    }
    if pairs.is_empty() {
        return Err(Error::AllPairsDropped { dropped });
    }
    Ok(ScoredPairs { pairs, dropped })
}

fn cosines<T: Copy>(pairs: &[(Vec<f64>, Vec<f64>, T)], idx: &[usize], k: usize) -> Result<(Vec<f64>, Vec<T>)> {
    let mut sims = Vec::with_capacity(idx.len());
    let mut targets = Vec::with_capacity(idx.len());
    for &i in idx {
        let (a, b, t) = &pairs[i];
        let ha = HashCode::top_k(a, k)?;
        let hb = HashCode::top_k(b, k)?;
        sims.push(hasher::hash_cosine(&ha, &hb)?);
        targets.push(*t);
    }
    Ok((sims, targets))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub metric: f64,
    pub used: usize,
    pub dropped: usize,
}

/// Spearman correlation between hash cosines and gold similarities.
pub fn eval_sts(hasher: &Hasher, dataset: &StsDataset, k: usize) -> Result<EvalReport> {
    let scored = score_pairs(hasher, &dataset.records)?;
    let all: Vec<usize> = (0..scored.pairs.len()).collect();
    let (sims, gold) = cosines(&scored.pairs, &all, k)?;
    Ok(EvalReport {
        metric: spearman(&sims, &gold)?,
        used: scored.pairs.len(),
        dropped: scored.dropped,
    })
}

/// Average precision of hash cosines against duplicate labels.
pub fn eval_pair_classification(hasher: &Hasher, dataset: &PairClassDataset, k: usize) -> Result<EvalReport> {
    let scored = score_pairs(hasher, &dataset.records)?;
    let all: Vec<usize> = (0..scored.pairs.len()).collect();
    let (sims, labels) = cosines(&scored.pairs, &all, k)?;
    Ok(EvalReport {
        metric: average_precision(&sims, &labels)?,
        used: scored.pairs.len(),
        dropped: scored.dropped,
    })
}

/// Seeded shuffle of `0..n` cut into `folds` contiguous near-equal parts.
pub fn fold_partition(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds == 0 || n < folds {
        return Err(Error::TooFewRecords { records: n, folds });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        out.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub enum Task<'a> {
    Sts(&'a StsDataset),
    PairClass(&'a PairClassDataset),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub k: usize,
    pub per_fold: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// Hash length chosen on the first fold, scored on the others.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub best_k: usize,
    pub selection_metric: f64,
    /// Mean and sample standard deviation over the held-out folds;
    /// `None` with a single fold.
    pub test_mean: Option<f64>,
    pub test_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub selection: Selection,
    pub dropped: usize,
}

impl SweepResult {
    /// `k,fold,metric` rows, folds numbered from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,fold,metric\n");
        for p in &self.points {
            for (f, m) in p.per_fold.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", p.k, f + 1, m);
            }
        }
        out
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Per-fold metric for every hash length in `ks`, plus the selection protocol.
pub fn sweep_hash_length(hasher: &Hasher, task: Task, ks: &[usize], folds: usize, seed: u64) -> Result<SweepResult> {
    if ks.is_empty() || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "ks must be non-empty and strictly increasing".into(),
        ));
    }
    let per_k = |run: &dyn Fn(usize, &[usize]) -> Result<f64>, n: usize| -> Result<Vec<SweepPoint>> {
        let parts = fold_partition(n, folds, seed)?;
        ks.iter()
            .map(|&k| {
                let per_fold = parts.iter().map(|idx| run(k, idx)).collect::<Result<Vec<_>>>()?;
                let (mean, std) = mean_std(&per_fold);
                Ok(SweepPoint { k, per_fold, mean, std })
            })
            .collect()
    };

    let (points, dropped) = match task {
        Task::Sts(ds) => {
            let scored = score_pairs(hasher, &ds.records)?;
            let run = |k: usize, idx: &[usize]| {
                let (sims, gold) = cosines(&scored.pairs, idx, k)?;
                spearman(&sims, &gold)
            };
            (per_k(&run, scored.pairs.len())?, scored.dropped)
        }
        Task::PairClass(ds) => {
            let scored = score_pairs(hasher, &ds.records)?;
            let run = |k: usize, idx: &[usize]| {
                let (sims, labels) = cosines(&scored.pairs, idx, k)?;
                average_precision(&sims, &labels)
            };
            (per_k(&run, scored.pairs.len())?, scored.dropped)
        }
    };

    // strict > keeps the smallest k among equals
    let best = points
        .iter()
        .fold(None::<&SweepPoint>, |best, p| match best {
            Some(b) if b.per_fold[0] >= p.per_fold[0] => Some(b),
            _ => Some(p),
        })
        .expect("ks is non-empty");
    let held_out = &best.per_fold[1..];
    let (test_mean, test_std) = if held_out.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_std(held_out);
        (Some(m), Some(s))
    };
    let selection = Selection {
        best_k: best.k,
        selection_metric: best.per_fold[0],
        test_mean,
        test_std,
    };
    Ok(SweepResult {
        points,
        selection,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_examples() {
        assert_eq!(spearman(&[1., 2., 3.], &[1., 2., 3.]).unwrap(), 1.0);
        assert_eq!(spearman(&[1., 2., 3.], &[3., 2., 1.]).unwrap(), -1.0);
        let rho = spearman(&[1., 2., 3., 4.], &[1., 3., 2., 4.]).unwrap();
        assert!((rho - 0.8).abs() < 1e-15, "{rho}");
        assert!(matches!(
            spearman(&[1., 1., 1.], &[1., 2., 3.]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(spearman(&[1.], &[1.]).is_err());
        assert!(spearman(&[1., 2.], &[1.]).is_err());
    }

    #[test]
    fn average_ranks_with_ties() {
        assert_eq!(average_ranks(&[10., 20., 10., 30.]), [1.5, 3., 1.5, 4.]);
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[0.9, 0.8, 0.1], &[true, true, false]).unwrap(), 1.0);
        assert_eq!(average_precision(&[0.9, 0.8], &[false, true]).unwrap(), 0.5);
        let ap = average_precision(&[0.9, 0.8, 0.7], &[true, false, true]).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-15);
        // constant scores: ties by index
        assert_eq!(average_precision(&[0.3, 0.3], &[true, false]).unwrap(), 1.0);
        assert_eq!(average_precision(&[0.3, 0.3], &[false, true]).unwrap(), 0.5);
        assert_eq!(
            average_precision(&[0.9, 0.8, 0.7, 0.1], &[false, false, false, true]).unwrap(),
            0.25
        );
        assert!(matches!(average_precision(&[0.1], &[false]), Err(Error::NoPositives)));
    }

    #[test]
    fn folds_are_a_seeded_partition() {
        let parts = fold_partition(23, 5, 9).unwrap();
        assert_eq!(parts, fold_partition(23, 5, 9).unwrap());
        assert_eq!(parts.len(), 5);
        let mut all: Vec<usize> = parts.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert!(parts.iter().all(|p| p.len() == 4 || p.len() == 5));
        assert!(matches!(
            fold_partition(5, 7, 0),
            Err(Error::TooFewRecords { records: 5, folds: 7 })
        ));
    }

    #[test]
    fn dataset_parsing() {
        let ds = StsDataset::from_tsv("a b\tc d\t4.5\ne\tf\t0\n").unwrap();
        assert_eq!(ds.records.len(), 2);
        assert_eq!(ds.records[0].target, 4.5);
        assert_eq!(StsDataset::from_tsv(&ds.to_tsv()).unwrap(), ds);
        assert!(StsDataset::from_tsv("a\tb\tx\nc\td\t1\n").is_err());
        assert!(StsDataset::from_tsv("a\tb\t1\n").is_err());

        let pc = PairClassDataset::from_tsv("a\tb\t1\nc\td\t0\n").unwrap();
        assert!(pc.records[0].target);
        assert!(PairClassDataset::from_tsv("a\tb\t1\nc\td\t1\n").is_err());
        assert!(PairClassDataset::from_tsv("a\tb\t2\nc\td\t0\n").is_err());
    }
}
