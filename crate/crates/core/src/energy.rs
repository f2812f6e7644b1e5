//! Phased inputs, Kenyon-cell activations, winner selection, per-sample
//! energies and their analytic gradients.
//!
//! A sentence `[s_0, ..., s_{L-1}]` is presented as one-hot rows rotated by
//! `e^{i pi l / L}`. Because each row is one-hot, the Hermitian product with
//! neuron `mu` collapses to a single entry:
//!
//! ```text
//! <W_mu, z_l>_H = w_{mu, s_l} * e^{-i pi l / L}
//! ```
//!
//! The selection score of a neuron is `sum_l |<W_mu, z_l>_H| + |Arg <W_mu, z_l>_H|`
//! and the training energy of a sample against the winning row is
//!
//! ```text
//! E = -( sum_l |w_{s_l}| / p_{s_l} / ||W_mu|| + sum_l |Arg(w_{s_l} e^{-i pi l / L})| )
//! ```
//!
//! Conventions: `Arg(0) = 0`, `Arg` maps to `(-pi, pi]`, the row norm is
//! clamped below by [`NORM_EPS`], and the word frequencies `p` enter the
//! energy only (never selection or hashing).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ComplexWeights, Mode, Scalar};
use crate::vocab::{FrequencyTable, TokenSeq};

/// Lower clamp on a row norm used as a denominator.
pub const NORM_EPS: f64 = 1e-12;

/// `e^{i pi l / len}`: the `2 len`-th roots of unity in the upper half-plane.
pub fn phase_for_position(l: usize, len: usize) -> Result<Complex64> {
    if l >= len {
        return Err(Error::InvalidArgument(format!(
            "position {l} out of range for length {len}"
        )));
    }
    Ok(Complex64::from_polar(1.0, position_angle(l, len)))
}

#[inline]
fn position_angle(l: usize, len: usize) -> f64 {
    PI * l as f64 / len as f64
}

/// `Arg` with `Arg(0) = 0`.
#[inline]
pub fn arg0(z: Complex64) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        0.0
    } else {
        z.im.atan2(z.re)
    }
}

/// A token sequence together with its per-position unit phases.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasedSentence {
    ids: Vec<u32>,
    phases: Vec<Complex64>,
}

impl PhasedSentence {
    pub fn new(seq: &TokenSeq) -> Self {
        Self::from_valid_ids(seq.ids().to_vec())
    }

    pub fn from_ids(ids: Vec<u32>) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::EmptyEncoding);
        }
        Ok(Self::from_valid_ids(ids))
    }

    fn from_valid_ids(ids: Vec<u32>) -> Self {
        let len = ids.len();
        let phases = (0..len)
            .map(|l| Complex64::from_polar(1.0, position_angle(l, len)))
            .collect();
        PhasedSentence { ids, phases }
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Phase angle of position `l`, in `[0, pi)`.
    pub fn angle(&self, l: usize) -> f64 {
        position_angle(l, self.len())
    }
}

impl From<&TokenSeq> for PhasedSentence {
    fn from(seq: &TokenSeq) -> Self {
        PhasedSentence::new(seq)
    }
}

/// The two summands of a neuron's selection score.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActivationBreakdown {
    /// `sum_l |<W_mu, z_l>_H|`, in `[0, inf)`.
    pub magnitude_sum: f64,
    /// `sum_l |Arg <W_mu, z_l>_H|`, in `[0, L pi]`.
    pub phase_sum: f64,
}

impl ActivationBreakdown {
    /// The additive selection/hash score.
    pub fn score(&self) -> f64 {
        self.magnitude_sum + self.phase_sum
    }
}

pub(crate) fn check_ids<S: Scalar>(w: &ComplexWeights<S>, ids: &[u32]) -> Result<()> {
    match ids.iter().find(|&&id| id as usize >= w.width()) {
        Some(id) => Err(Error::DimensionMismatch(format!(
            "token id {id} >= row width {}",
            w.width()
        ))),
        None => Ok(()),
    }
}

fn check_neuron<S: Scalar>(w: &ComplexWeights<S>, mu: usize) -> Result<()> {
    if mu >= w.neurons() {
        return Err(Error::InvalidArgument(format!(
            "neuron {mu} out of range for K={}",
            w.neurons()
        )));
    }
    Ok(())
}

/// Per-position `<W_mu, z_l>_H`, without bounds checks.
#[inline]
pub(crate) fn terms<'a, S: Scalar>(
    w: &'a ComplexWeights<S>,
    mu: usize,
    s: &'a PhasedSentence,
) -> impl Iterator<Item = Complex64> + 'a {
    s.ids
        .iter()
        .zip(&s.phases)
        .map(move |(&id, ph)| w.get(mu, id as usize) * ph.conj())
}

#[inline]
pub(crate) fn activation_unchecked<S: Scalar>(
    w: &ComplexWeights<S>,
    mu: usize,
    s: &PhasedSentence,
) -> ActivationBreakdown {
    let mut out = ActivationBreakdown::default();
    for t in terms(w, mu, s) {
        out.magnitude_sum += t.norm();
        out.phase_sum += arg0(t).abs();
    }
    out
}

pub fn neuron_activation<S: Scalar>(
    w: &ComplexWeights<S>,
    mu: usize,
    s: &PhasedSentence,
) -> Result<ActivationBreakdown> {
    check_neuron(w, mu)?;
    check_ids(w, s.ids())?;
    Ok(activation_unchecked(w, mu, s))
}

/// Index of the maximum, lowest index on ties.
pub(crate) fn argmax(scores: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, x) in scores.into_iter().enumerate() {
        if x > best_score {
            best = i;
            best_score = x;
        }
    }
    best
}

pub(crate) fn select_winner_unchecked<S: Scalar>(w: &ComplexWeights<S>, s: &PhasedSentence) -> usize {
    argmax((0..w.neurons()).map(|mu| activation_unchecked(w, mu, s).score()))
}

/// 1-WTA: the neuron with the largest `magnitude_sum + phase_sum`.
pub fn select_winner<S: Scalar>(w: &ComplexWeights<S>, s: &PhasedSentence) -> Result<usize> {
    check_ids(w, s.ids())?;
    Ok(select_winner_unchecked(w, s))
}

/// Energy of `s` against an already chosen row `mu`.
pub fn sample_energy_at<S: Scalar>(
    w: &ComplexWeights<S>,
    mu: usize,
    s: &PhasedSentence,
    p: &FrequencyTable,
) -> Result<f64> {
    check_neuron(w, mu)?;
    check_ids(w, s.ids())?;
    Ok(energy_unchecked(w, mu, s, p))
}

pub(crate) fn energy_unchecked<S: Scalar>(
    w: &ComplexWeights<S>,
    mu: usize,
    s: &PhasedSentence,
    p: &FrequencyTable,
) -> f64 {
    let norm = w.row_norm(mu).max(NORM_EPS);
    let mut magnitude = 0.0;
    let mut phase = 0.0;
    for (t, &id) in terms(w, mu, s).zip(&s.ids) {
        magnitude += t.norm() / p.divisor(id);
        phase += arg0(t).abs();
    }
    -(magnitude / norm + phase)
}

/// Energy of `s` against its own winner.
pub fn sample_energy<S: Scalar>(w: &ComplexWeights<S>, s: &PhasedSentence, p: &FrequencyTable) -> Result<f64> {
    check_ids(w, s.ids())?;
    let mu = select_winner_unchecked(w, s);
    Ok(energy_unchecked(w, mu, s, p))
}

/// Gradient of a per-sample energy, confined to the winning row.
///
/// The full row gradient is `radial * W_mu + sum(entries)`: the norm
/// denominator contributes a multiple of the whole row, every other term
/// touches only the columns the sample indexes. Entries may repeat a column.
#[derive(Debug, Clone, PartialEq)]
pub struct RowGradient {
    pub neuron: usize,
    pub radial: f64,
    /// `(column, dE/d re, dE/d im)`.
    pub entries: Vec<(usize, f64, f64)>,
}

impl RowGradient {
    /// Materializes the gradient over the full row.
    pub fn dense<S: Scalar>(&self, w: &ComplexWeights<S>) -> (Vec<f64>, Vec<f64>) {
        let mut g_re: Vec<f64> = w.row_re(self.neuron).iter().map(|x| self.radial * x.to_f64()).collect();
        let mut g_im: Vec<f64> = w.row_im(self.neuron).iter().map(|x| self.radial * x.to_f64()).collect();
        for &(j, a, b) in &self.entries {
            g_re[j] += a;
            g_im[j] += b;
        }
        (g_re, g_im)
    }
}

/// Analytic gradient of [`sample_energy_at`] with respect to row `mu`.
///
/// Non-differentiable terms (`w = 0`, or a phase difference of exactly
/// `0` or `+-pi`) contribute a zero subgradient.
pub fn energy_gradient_at<S: Scalar>(
    w: &ComplexWeights<S>,
    mu: usize,
    s: &PhasedSentence,
    p: &FrequencyTable,
) -> Result<RowGradient> {
    check_neuron(w, mu)?;
    check_ids(w, s.ids())?;
    Ok(gradient_unchecked(w, mu, s, p))
}

pub(crate) fn gradient_unchecked<S: Scalar>(
    w: &ComplexWeights<S>,
    mu: usize,
    s: &PhasedSentence,
    p: &FrequencyTable,
) -> RowGradient {
    let raw_norm = w.row_norm(mu);
    let norm = raw_norm.max(NORM_EPS);
    let mut magnitude = 0.0;
    let mut entries = Vec::with_capacity(s.len());
    for (t, &id) in terms(w, mu, s).zip(&s.ids) {
        let wj = w.get(mu, id as usize);
        let r = wj.norm();
        if r == 0.0 {
            continue;
        }
        let pj = p.divisor(id);
        magnitude += r / pj;
        // d(|w|)/d(re, im) = (re, im) / r
        let mut g_re = -(wj.re / r) / (pj * norm);
        let mut g_im = -(wj.im / r) / (pj * norm);
        let phi = arg0(t);
        if phi != 0.0 && phi.abs() < PI {
            // d(Arg w)/d(re, im) = (-im, re) / r^2
            let sgn = phi.signum();
            let r2 = r * r;
            g_re -= sgn * (-wj.im / r2);
            g_im -= sgn * (wj.re / r2);
        }
        entries.push((id as usize, g_re, g_im));
    }
    let radial = if raw_norm > NORM_EPS {
        magnitude / (norm * norm * norm)
    } else {
        0.0
    };
    RowGradient {
        neuron: mu,
        radial,
        entries,
    }
}

/// Winner plus gradient in one pass.
pub fn energy_gradient<S: Scalar>(
    w: &ComplexWeights<S>,
    s: &PhasedSentence,
    p: &FrequencyTable,
) -> Result<RowGradient> {
    check_ids(w, s.ids())?;
    let mu = select_winner_unchecked(w, s);
    Ok(gradient_unchecked(w, mu, s, p))
}

// ---------------------------------------------------------------------------
// Real-valued bag-of-words baseline
// ---------------------------------------------------------------------------

/// Inputs to the real model, as sparse components of a `2 * Nvoc` vector.
pub trait RealInput {
    /// `(column, word id, value)` triples; `words` is the block size.
    fn components(&self, words: usize) -> Vec<(usize, u32, f64)>;

    fn word_ids(&self) -> Vec<u32>;
}

/// A sliding-window sample: context word counts plus one target word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BagOfWordsWindow {
    context: Vec<(u32, u32)>,
    target: u32,
}

impl BagOfWordsWindow {
    pub fn new(context_ids: &[u32], target: u32) -> Self {
        BagOfWordsWindow {
            context: count_ids(context_ids),
            target,
        }
    }

    /// Sorted `(word, count)` pairs of the context block.
    pub fn context(&self) -> &[(u32, u32)] {
        &self.context
    }

    pub fn target(&self) -> u32 {
        self.target
    }

    pub fn context_len(&self) -> u32 {
        self.context.iter().map(|&(_, c)| c).sum()
    }
}

impl RealInput for BagOfWordsWindow {
    fn components(&self, words: usize) -> Vec<(usize, u32, f64)> {
        let mut out: Vec<_> = self
            .context
            .iter()
            .map(|&(id, c)| (id as usize, id, c as f64))
            .collect();
        out.push((words + self.target as usize, self.target, 1.0));
        out
    }

    fn word_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.context.iter().map(|&(id, _)| id).collect();
        ids.push(self.target);
        ids
    }
}

/// A whole sentence as word counts in the context block; used for hashing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordBag {
    counts: Vec<(u32, u32)>,
}

impl WordBag {
    pub fn new(ids: &[u32]) -> Self {
        WordBag { counts: count_ids(ids) }
    }

    pub fn counts(&self) -> &[(u32, u32)] {
        &self.counts
    }
}

impl RealInput for WordBag {
    fn components(&self, _words: usize) -> Vec<(usize, u32, f64)> {
        self.counts.iter().map(|&(id, c)| (id as usize, id, c as f64)).collect()
    }

    fn word_ids(&self) -> Vec<u32> {
        self.counts.iter().map(|&(id, _)| id).collect()
    }
}

fn count_ids(ids: &[u32]) -> Vec<(u32, u32)> {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    let mut out: Vec<(u32, u32)> = Vec::new();
    for id in sorted {
        match out.last_mut() {
            Some((last, c)) if *last == id => *c += 1,
            _ => out.push((id, 1)),
        }
    }
    out
}

fn require_mode<S: Scalar>(w: &ComplexWeights<S>, mode: Mode) -> Result<()> {
    if w.mode() != mode {
        return Err(Error::ModeMismatch {
            expected: mode.name(),
            found: w.mode().name(),
        });
    }
    Ok(())
}

pub(crate) fn check_real_input<S: Scalar>(w: &ComplexWeights<S>, v: &impl RealInput) -> Result<()> {
    require_mode(w, Mode::RealFlyVec)?;
    match v.word_ids().into_iter().find(|&id| id as usize >= w.words()) {
        Some(id) => Err(Error::DimensionMismatch(format!(
            "word id {id} >= vocabulary size {}",
            w.words()
        ))),
        None => Ok(()),
    }
}

#[inline]
pub(crate) fn dot_components<S: Scalar>(w: &ComplexWeights<S>, mu: usize, comps: &[(usize, u32, f64)]) -> f64 {
    let row = w.row_re(mu);
    comps.iter().map(|&(col, _, x)| x * row[col].to_f64()).sum()
}

/// Plain dot-product winner, lowest index on ties.
pub fn flyvec_winner<S: Scalar>(w: &ComplexWeights<S>, v: &impl RealInput) -> Result<usize> {
    check_real_input(w, v)?;
    let comps = v.components(w.words());
    Ok(argmax((0..w.neurons()).map(|mu| dot_components(w, mu, &comps))))
}

/// `-<W_mu, v / p> / ||W_mu||` for the dot-product winner `mu`.
pub fn flyvec_sample_energy<S: Scalar>(w: &ComplexWeights<S>, v: &impl RealInput, p: &FrequencyTable) -> Result<f64> {
    let mu = flyvec_winner(w, v)?;
    flyvec_sample_energy_at(w, mu, v, p)
}

pub fn flyvec_sample_energy_at<S: Scalar>(
    w: &ComplexWeights<S>,
    mu: usize,
    v: &impl RealInput,
    p: &FrequencyTable,
) -> Result<f64> {
    check_real_input(w, v)?;
    check_neuron(w, mu)?;
    let comps = scaled_components(w, v, p);
    Ok(-dot_components(w, mu, &comps) / w.row_norm(mu).max(NORM_EPS))
}

fn scaled_components<S: Scalar>(
    w: &ComplexWeights<S>,
    v: &impl RealInput,
    p: &FrequencyTable,
) -> Vec<(usize, u32, f64)> {
    let mut comps = v.components(w.words());
    for c in &mut comps {
        c.2 /= p.divisor(c.1);
    }
    comps
}

pub fn flyvec_energy_gradient_at<S: Scalar>(
    w: &ComplexWeights<S>,
    mu: usize,
    v: &impl RealInput,
    p: &FrequencyTable,
) -> Result<RowGradient> {
    check_real_input(w, v)?;
    check_neuron(w, mu)?;
    let comps = scaled_components(w, v, p);
    let raw_norm = w.row_norm(mu);
    let norm = raw_norm.max(NORM_EPS);
    let dot = dot_components(w, mu, &comps);
    let radial = if raw_norm > NORM_EPS {
        dot / (norm * norm * norm)
    } else {
        0.0
    };
    Ok(RowGradient {
        neuron: mu,
        radial,
        entries: comps.into_iter().map(|(col, _, x)| (col, -x / norm, 0.0)).collect(),
    })
}
