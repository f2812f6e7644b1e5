//! The `K x Nvoc` synapse matrix and its binary checkpoint format.
//!
//! Weights are stored as two parallel row-major arrays (real and imaginary
//! parts), one row per Kenyon cell. All arithmetic is carried out in `f64`;
//! the storage scalar is `f32` for models and checkpoints, and `f64` where
//! finite-difference checks need the extra precision.
//!
//! Checkpoint layout (little-endian):
//!
//! ```text
//! b"CPLY" | u32 version=1 | u32 mode | u32 K | u32 Nvoc | u64 seed
//! | u32 trained_epochs | [u8; 32] vocab checksum
//! | K*Nvoc f32 real parts | K*Nvoc f32 imaginary parts | u32 crc32
//! ```
//!
//! The trailing CRC covers every preceding byte.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{CheckpointError, Error, Result};

pub const MAGIC: &[u8; 4] = b"CPLY";
pub const FORMAT_VERSION: u32 = 1;
/// Standard deviation of each initial weight component.
pub const INIT_STD: f64 = 0.1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 4 + 8 + 4 + 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// `W` in `C^{K x Nvoc}`, sentences with positional phases.
    Complex,
    /// Real `W` over a doubled vocabulary (context block, target block).
    RealFlyVec,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Complex => "complex",
            Mode::RealFlyVec => "flyvec",
        }
    }

    fn tag(self) -> u32 {
        match self {
            Mode::Complex => 0,
            Mode::RealFlyVec => 1,
        }
    }

    fn from_tag(tag: u32) -> Result<Self, CheckpointError> {
        match tag {
            0 => Ok(Mode::Complex),
            1 => Ok(Mode::RealFlyVec),
            t => Err(CheckpointError::Mode(t)),
        }
    }
}

/// Storage scalar for weights.
pub trait Scalar: Copy + Default + PartialEq + Send + Sync + std::fmt::Debug + 'static {
    fn to_f64(self) -> f64;
    fn from_f64(x: f64) -> Self;
}

impl Scalar for f32 {
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
}

impl Scalar for f64 {
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexWeights<S: Scalar = f32> {
    neurons: usize,
    width: usize,
    mode: Mode,
    re: Vec<S>,
    im: Vec<S>,
}

impl<S: Scalar> ComplexWeights<S> {
    pub fn zeros(neurons: usize, width: usize, mode: Mode) -> Self {
        ComplexWeights {
            neurons,
            width,
            mode,
            re: vec![S::default(); neurons * width],
            im: vec![S::default(); neurons * width],
        }
    }

    /// Wraps existing arrays, checking shape and finiteness.
    pub fn from_parts(neurons: usize, width: usize, mode: Mode, re: Vec<S>, im: Vec<S>) -> Result<Self> {
        let n = neurons
            .checked_mul(width)
            .ok_or_else(|| Error::DimensionMismatch("K * Nvoc overflows".into()))?;
        if re.len() != n || im.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected {n} entries per part, got re={} im={}",
                re.len(),
                im.len()
            )));
        }
        if mode == Mode::RealFlyVec && !width.is_multiple_of(2) {
            return Err(Error::DimensionMismatch(
                "flyvec width must be even (context + target blocks)".into(),
            ));
        }
        if re.iter().chain(&im).any(|x| !x.to_f64().is_finite()) {
            return Err(Error::InvalidArgument("weights must be finite".into()));
        }
        if mode == Mode::RealFlyVec && im.iter().any(|x| x.to_f64() != 0.0) {
            return Err(Error::InvalidArgument(
                "flyvec weights must have zero imaginary part".into(),
            ));
        }
        Ok(ComplexWeights {
            neurons,
            width,
            mode,
            re,
            im,
        })
    }

    /// Number of Kenyon cells (rows).
    pub fn neurons(&self) -> usize {
        self.neurons
    }

    /// Row length: `Nvoc` in complex mode, `2 * Nvoc` in flyvec mode.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of distinct words the model can index.
    pub fn words(&self) -> usize {
        match self.mode {
            Mode::Complex => self.width,
            Mode::RealFlyVec => self.width / 2,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Real scalars held by the model.
    pub fn parameter_count(&self) -> usize {
        match self.mode {
            Mode::Complex => 2 * self.neurons * self.width,
            Mode::RealFlyVec => self.neurons * self.width,
        }
    }

    pub fn re(&self) -> &[S] {
        &self.re
    }

    pub fn im(&self) -> &[S] {
        &self.im
    }

    pub fn row_re(&self, mu: usize) -> &[S] {
        &self.re[mu * self.width..(mu + 1) * self.width]
    }

    pub fn row_im(&self, mu: usize) -> &[S] {
        &self.im[mu * self.width..(mu + 1) * self.width]
    }

    pub(crate) fn row_mut(&mut self, mu: usize) -> (&mut [S], &mut [S]) {
        let r = mu * self.width..(mu + 1) * self.width;
        (&mut self.re[r.clone()], &mut self.im[r])
    }

    #[inline]
    pub fn get(&self, mu: usize, j: usize) -> Complex64 {
        let i = mu * self.width + j;
        Complex64::new(self.re[i].to_f64(), self.im[i].to_f64())
    }

    pub fn set(&mut self, mu: usize, j: usize, w: Complex64) {
        let i = mu * self.width + j;
        self.re[i] = S::from_f64(w.re);
        self.im[i] = S::from_f64(w.im);
    }

    /// Hermitian norm of a row.
    pub fn row_norm(&self, mu: usize) -> f64 {
        self.row_re(mu)
            .iter()
            .zip(self.row_im(mu))
            .map(|(a, b)| {
                let (a, b) = (a.to_f64(), b.to_f64());
                a * a + b * b
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale_row(&mut self, mu: usize, c: f64) {
        let (re, im) = self.row_mut(mu);
        for x in re.iter_mut().chain(im.iter_mut()) {
            *x = S::from_f64(x.to_f64() * c);
        }
    }

    pub fn rows_equal(&self, other: &Self, mu: usize) -> bool {
        self.row_re(mu) == other.row_re(mu) && self.row_im(mu) == other.row_im(mu)
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().chain(&self.im).all(|x| x.to_f64().is_finite())
    }

    pub fn cast<T: Scalar>(&self) -> ComplexWeights<T> {
        let conv = |v: &[S]| v.iter().map(|x| T::from_f64(x.to_f64())).collect();
        ComplexWeights {
            neurons: self.neurons,
            width: self.width,
            mode: self.mode,
            re: conv(&self.re),
            im: conv(&self.im),
        }
    }
}

/// Draws `N(0, 0.1)` components; the imaginary part stays zero in flyvec mode.
///
/// `words` is the vocabulary size; the flyvec row width is `2 * words`.
pub fn init_weights<S: Scalar>(neurons: usize, words: usize, mode: Mode, seed: u64) -> Result<ComplexWeights<S>> {
    if neurons == 0 || words == 0 {
        return Err(Error::InvalidArgument("K and Nvoc must be positive".into()));
    }
    let width = match mode {
        Mode::Complex => words,
        Mode::RealFlyVec => 2 * words,
    };
    let mut w = ComplexWeights::zeros(neurons, width, mode);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, INIT_STD).expect("valid std");
    for mu in 0..neurons {
        loop {
            let (re, im) = w.row_mut(mu);
            for x in re.iter_mut() {
                *x = S::from_f64(normal.sample(&mut rng));
            }
            if mode == Mode::Complex {
                for x in im.iter_mut() {
                    *x = S::from_f64(normal.sample(&mut rng));
                }
            }
            if w.row_norm(mu) > 0.0 {
                break;
            }
        }
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelMeta {
    pub seed: u64,
    pub trained_epochs: u32,
    pub vocab_hash: [u8; 32],
}

pub fn encode_checkpoint(w: &ComplexWeights, meta: &ModelMeta) -> Result<Vec<u8>> {
    let as_u32 =
        |x: usize, what: &str| u32::try_from(x).map_err(|_| Error::InvalidArgument(format!("{what} exceeds u32")));
    let n = w.re.len();
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * n + 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&w.mode.tag().to_le_bytes());
    buf.extend_from_slice(&as_u32(w.neurons, "K")?.to_le_bytes());
    buf.extend_from_slice(&as_u32(w.width, "Nvoc")?.to_le_bytes());
    buf.extend_from_slice(&meta.seed.to_le_bytes());
    buf.extend_from_slice(&meta.trained_epochs.to_le_bytes());
    buf.extend_from_slice(&meta.vocab_hash);
    for x in w.re.iter().chain(&w.im) {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    Ok(buf)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(ComplexWeights, ModelMeta)> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(CheckpointError::BadMagic.into());
    }
    if bytes.len() < HEADER_LEN {
        return Err(CheckpointError::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        }
        .into());
    }
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != FORMAT_VERSION {
        return Err(CheckpointError::Version(version).into());
    }
    let mode = Mode::from_tag(u32_at(8))?;
    let neurons = u32_at(12) as usize;
    let width = u32_at(16) as usize;
    let seed = u64::from_le_bytes(bytes[20..28].try_into().unwrap());
    let trained_epochs = u32_at(28);
    let vocab_hash: [u8; 32] = bytes[32..64].try_into().unwrap();

    let n = neurons
        .checked_mul(width)
        .ok_or_else(|| CheckpointError::Invalid("K * Nvoc overflows".into()))?;
    let expected = HEADER_LEN + 8 * n + 4;
    if bytes.len() < expected {
        return Err(CheckpointError::Truncated {
            expected,
            found: bytes.len(),
        }
        .into());
    }
    if bytes.len() > expected {
        return Err(CheckpointError::Trailing.into());
    }
    let body = &bytes[..expected - 4];
    let stored = u32::from_le_bytes(bytes[expected - 4..].try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(CheckpointError::Crc { stored, computed }.into());
    }
    let floats: Vec<f32> = body[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let (re, im) = floats.split_at(n);
    let w = ComplexWeights::from_parts(neurons, width, mode, re.to_vec(), im.to_vec())
        .map_err(|e| CheckpointError::Invalid(e.to_string()))?;
    Ok((
        w,
        ModelMeta {
            seed,
            trained_epochs,
            vocab_hash,
        },
    ))
}

pub fn save_model(w: &ComplexWeights, meta: &ModelMeta, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_checkpoint(w, meta)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(ComplexWeights, ModelMeta)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> ModelMeta {
        ModelMeta {
            seed: 7,
            trained_epochs: 3,
            vocab_hash: [0xab; 32],
        }
    }

    #[test]
    fn init_is_deterministic() {
        let a: ComplexWeights = init_weights(4, 10, Mode::Complex, 7).unwrap();
        let b: ComplexWeights = init_weights(4, 10, Mode::Complex, 7).unwrap();
        assert_eq!(a, b);
        let c: ComplexWeights = init_weights(4, 10, Mode::Complex, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn flyvec_init_is_real_with_doubled_width() {
        let w: ComplexWeights = init_weights(4, 10, Mode::RealFlyVec, 7).unwrap();
        assert_eq!(w.width(), 20);
        assert_eq!(w.words(), 10);
        assert!(w.im().iter().all(|&x| x == 0.0));
        assert!(w.re().iter().any(|&x| x != 0.0));
    }

    #[test]
    fn parameter_count_parity() {
        let c: ComplexWeights = init_weights(5, 12, Mode::Complex, 1).unwrap();
        let f: ComplexWeights = init_weights(5, 12, Mode::RealFlyVec, 1).unwrap();
        assert_eq!(c.parameter_count(), 2 * 5 * 12);
        assert_eq!(c.parameter_count(), f.parameter_count());
    }

    #[test]
    fn init_phases_cover_both_half_planes() {
        let w: ComplexWeights = init_weights(10, 20, Mode::Complex, 3).unwrap();
        let neg = w.im().iter().filter(|&&x| x < 0.0).count();
        let pos = w.im().iter().filter(|&&x| x > 0.0).count();
        assert_eq!(neg + pos, 200);
        // Binomial(200, 1/2): both counts far from the tails.
        assert!(neg > 60 && pos > 60, "neg={neg} pos={pos}");
        for mu in 0..10 {
            assert!(w.row_norm(mu) > 0.0);
        }
    }

    #[test]
    fn init_std_is_about_point_one() {
        let w: ComplexWeights = init_weights(50, 200, Mode::Complex, 11).unwrap();
        let n = w.re().len() as f64;
        let var = w.re().iter().map(|&x| (x as f64).powi(2)).sum::<f64>() / n;
        assert!((var.sqrt() - INIT_STD).abs() < 0.005, "std={}", var.sqrt());
    }

    #[test]
    fn checkpoint_round_trip_is_bitwise() {
        let w: ComplexWeights = init_weights(3, 5, Mode::Complex, 9).unwrap();
        let bytes = encode_checkpoint(&w, &meta()).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 8 * 15 + 4);
        let (w2, m2) = decode_checkpoint(&bytes).unwrap();
        assert_eq!(m2, meta());
        let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(w.re()), bits(w2.re()));
        assert_eq!(bits(w.im()), bits(w2.im()));
        assert_eq!(w2.mode(), Mode::Complex);
    }

    #[test]
    fn checkpoint_header_layout() {
        let w: ComplexWeights = init_weights(2, 3, Mode::RealFlyVec, 1).unwrap();
        let bytes = encode_checkpoint(&w, &meta()).unwrap();
        assert_eq!(&bytes[0..4], b"CPLY");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &1u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &2u32.to_le_bytes());
        assert_eq!(&bytes[16..20], &6u32.to_le_bytes());
        assert_eq!(&bytes[20..28], &7u64.to_le_bytes());
        assert_eq!(&bytes[28..32], &3u32.to_le_bytes());
    }

    #[test]
    fn checkpoint_errors() {
        let w: ComplexWeights = init_weights(2, 4, Mode::Complex, 1).unwrap();
        let bytes = encode_checkpoint(&w, &meta()).unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            decode_checkpoint(&bad),
            Err(Error::Checkpoint(CheckpointError::BadMagic))
        ));

        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(
            decode_checkpoint(&bad),
            Err(Error::Checkpoint(CheckpointError::Version(2)))
        ));

        let truncated = &bytes[..bytes.len() - 1];
        assert!(matches!(
            decode_checkpoint(truncated),
            Err(Error::Checkpoint(CheckpointError::Truncated { .. }))
        ));

        let mut bad = bytes.clone();
        bad[HEADER_LEN + 1] ^= 0x40;
        assert!(matches!(
            decode_checkpoint(&bad),
            Err(Error::Checkpoint(CheckpointError::Crc { .. }))
        ));
    }
}
