//! Biometric templates: unit-norm real embeddings, their fixed-point
//! quantization, and the synthetic identity model that stands in for face and
//! voice feature extractors.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{self, DecodeError, Reader};

/// Default embedding dimension for both modalities.
pub const DEFAULT_DIMENSION: usize = 128;
/// Default quantization scale (signed 8-bit range).
pub const DEFAULT_SCALE: i64 = 127;

const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbeddingError {
    #[error("embedding contains a non-finite value at index {0}")]
    NonFinite(usize),
    #[error("embedding dimension {0} is below the minimum of 2")]
    TooShort(usize),
    #[error("embedding has zero norm")]
    ZeroNorm,
    #[error("embedding is not unit-norm (norm = {0})")]
    NotUnitNorm(f64),
    #[error("quantization scale must be at least 1, got {0}")]
    BadScale(i64),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("modality mismatch: {left} vs {right}")]
    ModalityMismatch { left: Modality, right: Modality },
    #[error("template value {value} at index {index} exceeds scale {scale}")]
    OutOfScale { index: usize, value: i64, scale: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Face,
    Voice,
}

impl Modality {
    pub fn code(self) -> u8 {
        match self {
            Modality::Face => 1,
            Modality::Voice => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Modality::Face),
            2 => Some(Modality::Voice),
            _ => None,
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Face => "face",
            Modality::Voice => "voice",
        })
    }
}

/// A unit-norm real feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEmbedding", into = "RawEmbedding")]
pub struct Embedding {
    modality: Modality,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawEmbedding {
    modality: Modality,
    values: Vec<f64>,
}

impl TryFrom<RawEmbedding> for Embedding {
    type Error = EmbeddingError;
    fn try_from(raw: RawEmbedding) -> Result<Self, Self::Error> {
        Embedding::new(raw.modality, raw.values)
    }
}

impl From<Embedding> for RawEmbedding {
    fn from(e: Embedding) -> Self {
        RawEmbedding {
            modality: e.modality,
            values: e.values,
        }
    }
}

impl Embedding {
    /// Validates an already unit-norm vector.
    pub fn new(modality: Modality, values: Vec<f64>) -> Result<Self, EmbeddingError> {
        check_shape(&values)?;
        let norm = l2_norm(&values);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(EmbeddingError::NotUnitNorm(norm));
        }
        Ok(Self { modality, values })
    }

    /// Scales an arbitrary non-zero vector to unit norm.
    pub fn normalized(modality: Modality, mut values: Vec<f64>) -> Result<Self, EmbeddingError> {
        check_shape(&values)?;
        let norm = l2_norm(&values);
        if norm == 0.0 || !norm.is_finite() {
            return Err(EmbeddingError::ZeroNorm);
        }
        values.iter_mut().for_each(|v| *v /= norm);
        Ok(Self { modality, values })
    }

    /// Standard basis vector `e_index`.
    pub fn basis(modality: Modality, dimension: usize, index: usize) -> Result<Self, EmbeddingError> {
        let mut values = alloc::vec![0.0; dimension];
        if let Some(v) = values.get_mut(index) {
            *v = 1.0;
        }
        Self::new(modality, values)
    }

    /// Uniformly random direction on the unit sphere.
    pub fn random<R: RngCore + ?Sized>(modality: Modality, dimension: usize, rng: &mut R) -> Self {
        loop {
            let values: Vec<f64> = (0..dimension)
                .map(|_| StandardNormal.sample(&mut *rng))
                .collect();
            if let Ok(e) = Self::normalized(modality, values) {
                return e;
            }
        }
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cosine(&self, other: &Embedding) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }
}

fn check_shape(values: &[f64]) -> Result<(), EmbeddingError> {
    if values.len() < 2 {
        return Err(EmbeddingError::TooShort(values.len()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(EmbeddingError::NonFinite(i));
    }
    Ok(())
}

fn l2_norm(values: &[f64]) -> f64 {
    libm::sqrt(values.iter().map(|v| v * v).sum())
}

/// Fixed-point template with every element in `[-scale, scale]`.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizedTemplate {
    modality: Modality,
    scale: i64,
    values: Vec<i64>,
}

// Templates are biometric secrets; keep them out of logs.
impl fmt::Debug for QuantizedTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuantizedTemplate")
            .field("modality", &self.modality)
            .field("scale", &self.scale)
            .field("dimension", &self.values.len())
            .finish_non_exhaustive()
    }
}

impl QuantizedTemplate {
    pub fn from_values(modality: Modality, scale: i64, values: Vec<i64>) -> Result<Self, EmbeddingError> {
        if scale < 1 {
            return Err(EmbeddingError::BadScale(scale));
        }
        if values.len() < 2 {
            return Err(EmbeddingError::TooShort(values.len()));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| v.abs() > scale) {
            return Err(EmbeddingError::OutOfScale { index, value, scale });
        }
        Ok(Self { modality, scale, values })
    }

    pub fn zeros(modality: Modality, scale: i64, dimension: usize) -> Result<Self, EmbeddingError> {
        Self::from_values(modality, scale, alloc::vec![0; dimension])
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// Real vector `values / scale`.
    pub fn dequantize(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| *v as f64 / self.scale as f64)
            .collect()
    }

    /// Bytes used per element in the canonical encoding.
    pub fn element_width(scale: i64) -> usize {
        if scale <= i8::MAX as i64 {
            1
        } else if scale <= i16::MAX as i64 {
            2
        } else {
            4
        }
    }

    /// Canonical encoding: `d (u32) ‖ modality (u8) ‖ scale (u32) ‖ values`,
    /// each value as a big-endian two's-complement integer of
    /// [`element_width`](Self::element_width) bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(9 + self.values.len() * 4);
        codec::put_u32(&mut out, self.values.len() as u32);
        codec::put_u8(&mut out, self.modality.code());
        codec::put_u32(&mut out, self.scale as u32);
        out.extend_from_slice(&self.value_bytes());
        out
    }

    /// The element block of [`to_bytes`](Self::to_bytes) without the header.
    pub fn value_bytes(&self) -> Vec<u8> {
        let width = Self::element_width(self.scale);
        let mut out = Vec::with_capacity(self.values.len() * width);
        for v in &self.values {
            let be = v.to_be_bytes();
            out.extend_from_slice(&be[8 - width..]);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let d = r.u32()? as usize;
        let modality = Modality::from_code(r.u8()?).ok_or(DecodeError::InvalidValue("modality"))?;
        let scale = r.u32()? as i64;
        if scale == 0 || scale > i32::MAX as i64 {
            return Err(DecodeError::InvalidValue("scale"));
        }
        let width = Self::element_width(scale);
        let block = r.take(d.checked_mul(width).ok_or(DecodeError::InvalidValue("dimension"))?)?;
        r.finish()?;
        let values = block
            .chunks(width)
            .map(|c| {
                let fill = if c[0] & 0x80 != 0 { 0xff } else { 0 };
                let mut be = [fill; 8];
                be[8 - width..].copy_from_slice(c);
                i64::from_be_bytes(be)
            })
            .collect();
        Self::from_values(modality, scale, values).map_err(|_| DecodeError::InvalidValue("template"))
    }
}

/// `round(e * scale)` clamped to `[-scale, scale]`.
pub fn quantize(e: &Embedding, scale: i64) -> Result<QuantizedTemplate, EmbeddingError> {
    if scale < 1 {
        return Err(EmbeddingError::BadScale(scale));
    }
    check_shape(&e.values)?;
    let values = e
        .values
        .iter()
        .map(|v| (libm::round(v * scale as f64) as i64).clamp(-scale, scale))
        .collect();
    Ok(QuantizedTemplate {
        modality: e.modality,
        scale,
        values,
    })
}

/// Exact integer inner product of two templates of the same shape.
pub fn inner_product_int(a: &QuantizedTemplate, b: &QuantizedTemplate) -> Result<i64, EmbeddingError> {
    if a.dimension() != b.dimension() {
        return Err(EmbeddingError::DimensionMismatch {
            left: a.dimension(),
            right: b.dimension(),
        });
    }
    if a.modality != b.modality {
        return Err(EmbeddingError::ModalityMismatch {
            left: a.modality,
            right: b.modality,
        });
    }
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum())
}

/// Similarity derived from an integer score of two unit-norm templates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub cosine: f64,
    /// `2 - 2 cos`, the squared euclidean distance between unit vectors.
    pub euclidean_sq: f64,
}

pub fn score_to_cosine(score: i64, scale: i64) -> Similarity {
    let cosine = score as f64 / (scale * scale) as f64;
    Similarity {
        cosine,
        euclidean_sq: 2.0 - 2.0 * cosine,
    }
}

/// Largest possible `|score|` for templates of this shape.
pub fn score_bound(dimension: usize, scale: i64) -> i64 {
    dimension as i64 * scale * scale
}

/// Synthetic enrolled subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityProfile {
    pub subject: String,
    pub face: Embedding,
    pub voice: Embedding,
    /// Expected L2 norm of the per-observation noise before re-normalization.
    pub sigma: f64,
}

impl IdentityProfile {
    pub fn mean(&self, modality: Modality) -> &Embedding {
        match modality {
            Modality::Face => &self.face,
            Modality::Voice => &self.voice,
        }
    }
}

/// Draws a noisy capture of `profile`: the mean plus isotropic Gaussian
/// noise whose expected norm is `sigma` (per-coordinate standard deviation
/// `sigma / sqrt(d)`), projected back onto the unit sphere.
pub fn sample_observation<R: RngCore + ?Sized>(
    profile: &IdentityProfile,
    modality: Modality,
    rng: &mut R,
) -> Embedding {
    let mean = profile.mean(modality);
    if profile.sigma <= 0.0 {
        return mean.clone();
    }
    let per_coord = profile.sigma / libm::sqrt(mean.dimension() as f64);
    loop {
        let values: Vec<f64> = mean
            .values
            .iter()
            .map(|m| {
                let z: f64 = StandardNormal.sample(&mut *rng);
                m + per_coord * z
            })
            .collect();
        if let Ok(e) = Embedding::normalized(modality, values) {
            return e;
        }
    }
}
