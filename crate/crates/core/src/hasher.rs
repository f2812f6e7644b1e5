//! k-Winner-Takes-All binary hash codes.
//!
//! Every neuron gets a real score; the `k` highest scores set their bits.
//! Ties at the boundary go to the lower neuron index, so the bit set at
//! length `k` is always a subset of the one at `k + 1`.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::energy::{self, arg0, check_ids, PhasedSentence, RealInput};
use crate::error::{Error, Result};
use crate::model::{ComplexWeights, Mode, Scalar};

/// How the ComplyM scorer combines magnitudes and phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProductForm {
    /// `sum_l |t_l| * |Arg t_l|`.
    #[default]
    PerPosition,
    /// `(sum_l |t_l|) * (sum_l |Arg t_l|)`.
    Aggregate,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HashCode {
    neurons: usize,
    words: Vec<u64>,
}

impl HashCode {
    /// Sets the bits of the `k` highest scores.
    pub fn top_k(scores: &[f64], k: usize) -> Result<Self> {
        let neurons = scores.len();
        if k == 0 || k > neurons {
            return Err(Error::HashLengthOutOfRange { k, neurons });
        }
        let mut order: Vec<usize> = (0..neurons).collect();
        let rank = |&a: &usize, &b: &usize| -> Ordering { scores[b].total_cmp(&scores[a]).then(a.cmp(&b)) };
        if k < neurons {
            order.select_nth_unstable_by(k - 1, rank);
        }
        let mut code = HashCode::empty(neurons);
        for &mu in &order[..k] {
            code.set(mu);
        }
        Ok(code)
    }

    fn empty(neurons: usize) -> Self {
        HashCode {
            neurons,
            words: vec![0; neurons.div_ceil(64)],
        }
    }

    fn set(&mut self, mu: usize) {
        self.words[mu / 64] |= 1 << (mu % 64);
    }

    /// Builds a code from explicit bit positions.
    pub fn from_bits(neurons: usize, bits: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut code = HashCode::empty(neurons);
        for mu in bits {
            if mu >= neurons {
                return Err(Error::InvalidArgument(format!("bit {mu} >= K={neurons}")));
            }
            code.set(mu);
        }
        if code.popcount() == 0 {
            return Err(Error::InvalidArgument("hash code needs at least one bit".into()));
        }
        Ok(code)
    }

    pub fn neurons(&self) -> usize {
        self.neurons
    }

    pub fn is_set(&self, mu: usize) -> bool {
        mu < self.neurons && self.words[mu / 64] >> (mu % 64) & 1 == 1
    }

    pub fn popcount(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Hash length; equals [`popcount`](Self::popcount).
    pub fn k(&self) -> usize {
        self.popcount()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.neurons).filter(|&mu| self.is_set(mu))
    }

    pub fn overlap(&self, other: &HashCode) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// `K` bits as hex, most significant bit = neuron 0, zero-padded on the right.
    pub fn to_hex(&self) -> String {
        let mut out = String::with_capacity(self.neurons.div_ceil(4));
        for nibble in 0..self.neurons.div_ceil(4) {
            let mut v = 0u8;
            for b in 0..4 {
                v = (v << 1) | self.is_set(4 * nibble + b) as u8;
            }
            let _ = write!(out, "{v:x}");
        }
        out
    }

    pub fn from_hex(hex: &str, neurons: usize) -> Result<Self> {
        if hex.len() != neurons.div_ceil(4) {
            return Err(Error::InvalidArgument(format!(
                "expected {} hex digits for K={neurons}, got {}",
                neurons.div_ceil(4),
                hex.len()
            )));
        }
        let mut bits = Vec::new();
        for (nibble, c) in hex.chars().enumerate() {
            let v = c
                .to_digit(16)
                .ok_or_else(|| Error::InvalidArgument(format!("bad hex digit {c:?}")))?;
            for b in 0..4 {
                if v >> (3 - b) & 1 == 1 {
                    bits.push(4 * nibble + b);
                }
            }
        }
        Self::from_bits(neurons, bits)
    }
}

/// Cosine similarity of two binary codes: `overlap / sqrt(|h1| |h2|)`.
pub fn hash_cosine(a: &HashCode, b: &HashCode) -> Result<f64> {
    if a.neurons != b.neurons {
        return Err(Error::DimensionMismatch(format!(
            "hash lengths {} vs {}",
            a.neurons, b.neurons
        )));
    }
    let denom = ((a.popcount() * b.popcount()) as f64).sqrt();
    if denom == 0.0 {
        return Err(Error::InvalidArgument("empty hash code".into()));
    }
    Ok(a.overlap(b) as f64 / denom)
}

fn require_complex<S: Scalar>(w: &ComplexWeights<S>) -> Result<()> {
    if w.mode() != Mode::Complex {
        return Err(Error::ModeMismatch {
            expected: Mode::Complex.name(),
            found: w.mode().name(),
        });
    }
    Ok(())
}

/// Additive scores `sum_l |t_l| + |Arg t_l|` for every neuron.
pub fn comply_scores<S: Scalar>(w: &ComplexWeights<S>, s: &PhasedSentence) -> Result<Vec<f64>> {
    require_complex(w)?;
    check_ids(w, s.ids())?;
    Ok((0..w.neurons())
        .map(|mu| energy::activation_unchecked(w, mu, s).score())
        .collect())
}

/// Multiplicative scores for every neuron.
pub fn complym_scores<S: Scalar>(w: &ComplexWeights<S>, s: &PhasedSentence, form: ProductForm) -> Result<Vec<f64>> {
    require_complex(w)?;
    check_ids(w, s.ids())?;
    Ok((0..w.neurons())
        .map(|mu| match form {
            ProductForm::PerPosition => energy::terms(w, mu, s).map(|t| t.norm() * arg0(t).abs()).sum(),
            ProductForm::Aggregate => {
                let a = energy::activation_unchecked(w, mu, s);
                a.magnitude_sum * a.phase_sum
            }
        })
        .collect())
}

/// Dot-product scores `<W_mu, v>` of the real model.
pub fn flyvec_scores<S: Scalar>(w: &ComplexWeights<S>, v: &impl RealInput) -> Result<Vec<f64>> {
    energy::check_real_input(w, v)?;
    let comps = v.components(w.words());
    Ok((0..w.neurons())
        .map(|mu| energy::dot_components(w, mu, &comps))
        .collect())
}

fn check_k<S: Scalar>(w: &ComplexWeights<S>, k: usize) -> Result<()> {
    if k == 0 || k > w.neurons() {
        return Err(Error::HashLengthOutOfRange {
            k,
            neurons: w.neurons(),
        });
    }
    Ok(())
}

pub fn comply_hash<S: Scalar>(w: &ComplexWeights<S>, s: &PhasedSentence, k: usize) -> Result<HashCode> {
    check_k(w, k)?;
    HashCode::top_k(&comply_scores(w, s)?, k)
}

pub fn complym_hash<S: Scalar>(
    w: &ComplexWeights<S>,
    s: &PhasedSentence,
    k: usize,
    form: ProductForm,
) -> Result<HashCode> {
    check_k(w, k)?;
    HashCode::top_k(&complym_scores(w, s, form)?, k)
}

pub fn flyvec_hash<S: Scalar>(w: &ComplexWeights<S>, v: &impl RealInput, k: usize) -> Result<HashCode> {
    check_k(w, k)?;
    HashCode::top_k(&flyvec_scores(w, v)?, k)
}

/// One line of a hash dump: `<index>\t<k>\t<hex>`.
pub fn dump_line(index: usize, code: &HashCode) -> String {
    format!("{index}\t{}\t{}", code.k(), code.to_hex())
}

/// Parses a dump line back into `(index, code)`.
pub fn parse_dump_line(line: &str, neurons: usize) -> Result<(usize, HashCode)> {
    let bad = || Error::InvalidArgument(format!("malformed hash line {line:?}"));
    let mut f = line.split('\t');
    let (Some(i), Some(k), Some(hex), None) = (f.next(), f.next(), f.next(), f.next()) else {
        return Err(bad());
    };
    let index = i.parse().map_err(|_| bad())?;
    let k: usize = k.parse().map_err(|_| bad())?;
    let code = HashCode::from_hex(hex, neurons)?;
    if code.k() != k {
        return Err(bad());
    }
    Ok((index, code))
}
