//! Seeded synthetic data: word-sequence templates, their reversals, and a
//! similarity fixture where reversed sentences count as dissimilar.
//!
//! A bag-of-words model cannot tell a template from its reversal; a model
//! that sees word order can.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::{PairClassDataset, PairRecord, StsDataset};

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateSpec {
    pub templates: usize,
    pub words: usize,
    pub length: usize,
    /// Copies of each template and of each reversal in the corpus.
    pub copies: usize,
    pub seed: u64,
}

impl Default for TemplateSpec {
    /// 20 templates x (forward + reversed) x 5 copies = 200 sentences.
    fn default() -> Self {
        TemplateSpec {
            templates: 20,
            words: 40,
            length: 8,
            copies: 5,
            seed: 13,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateData {
    pub templates: Vec<Vec<String>>,
    /// Shuffled corpus lines.
    pub corpus: Vec<String>,
    pub sts: StsDataset,
    pub pair_class: PairClassDataset,
}

pub fn word(i: usize) -> String {
    format!("w{i:02}")
}

fn join(ws: &[String]) -> String {
    ws.join(" ")
}

fn reversed(ws: &[String]) -> Vec<String> {
    ws.iter().rev().cloned().collect()
}

/// Builds the corpus and both fixtures.
///
/// STS gold, per template `t`:
/// `(t, t)` 5, `(t, t minus one word)` 4, `(t, reverse t)` 1,
/// `(t, another template)` 0. Pair classification labels the first two
/// kinds duplicates.
pub fn template_data(spec: &TemplateSpec) -> TemplateData {
    assert!(spec.length >= 3 && spec.length <= spec.words && spec.templates >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let vocab: Vec<String> = (0..spec.words).map(word).collect();

    let templates: Vec<Vec<String>> = (0..spec.templates)
        .map(|_| vocab.choose_multiple(&mut rng, spec.length).cloned().collect())
        .collect();

    let mut corpus = Vec::with_capacity(2 * spec.templates * spec.copies);
    for t in &templates {
        for _ in 0..spec.copies {
            corpus.push(join(t));
            corpus.push(join(&reversed(t)));
        }
    }
    corpus.shuffle(&mut rng);

    let mut sts = Vec::new();
    let mut pc = Vec::new();
    let mut push = |a: String, b: String, gold: f64| {
        pc.push(PairRecord {
            sentence_a: a.clone(),
            sentence_b: b.clone(),
            target: gold >= 4.0,
        });
        sts.push(PairRecord {
            sentence_a: a,
            sentence_b: b,
            target: gold,
        });
    };
    for (i, t) in templates.iter().enumerate() {
        let mut dropped = t.clone();
        dropped.remove(rng.random_range(0..t.len()));
        let other = (i + 1 + rng.random_range(0..spec.templates - 1)) % spec.templates;
        push(join(t), join(t), 5.0);
        push(join(t), join(&dropped), 4.0);
        push(join(t), join(&reversed(t)), 1.0);
        push(join(t), join(&templates[other]), 0.0);
    }

    TemplateData {
        templates,
        corpus,
        sts: StsDataset { records: sts },
        pair_class: PairClassDataset { records: pc },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shape() {
        let d = template_data(&TemplateSpec::default());
        assert_eq!(d.corpus.len(), 200);
        assert_eq!(d.templates.len(), 20);
        assert_eq!(d.sts.records.len(), 80);
        assert!(d.sts.validate().is_ok());
        assert!(d.pair_class.validate().is_ok());
        for t in &d.templates {
            let mut s = t.clone();
            s.sort();
            s.dedup();
            assert_eq!(s.len(), t.len(), "template words are distinct");
        }
    }

    #[test]
    fn seeded() {
        let spec = TemplateSpec::default();
        assert_eq!(template_data(&spec), template_data(&spec));
    }
}
