//! Sinusoidal positional embeddings over scalar patch positions and the
//! cosine-similarity fields derived from them.

use crate::error::{Error, Result};
use crate::grid::GridShape;
use crate::order::PatchOrder;

pub const DEFAULT_BASE: f64 = 10_000.0;

/// Angular frequencies `w_k = base^(-2k/d_model)` for `k in 0..d_model/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySet {
    d_model: usize,
    base: f64,
    frequencies: Vec<f64>,
}

impl FrequencySet {
    pub fn new(d_model: usize, base: f64) -> Result<Self> {
        if d_model < 2 || d_model % 2 != 0 {
            return Err(Error::InvalidDModel(d_model));
        }
        if !(base > 1.0) || !base.is_finite() {
            return Err(Error::InvalidBase(base));
        }
        let frequencies = (0..d_model / 2)
            .map(|k| base.powf(-2.0 * k as f64 / d_model as f64))
            .collect();
        Ok(Self {
            d_model,
            base,
            frequencies,
        })
    }

    pub fn d_model(&self) -> usize {
        self.d_model
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }
}

pub fn make_frequencies(d_model: usize, base: f64) -> Result<FrequencySet> {
    FrequencySet::new(d_model, base)
}

/// Per-cell offset strictly inside (-1, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ContextBias {
    shape: GridShape,
    values: Vec<f64>,
}

impl ContextBias {
    pub fn new(shape: GridShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::LengthMismatch {
                expected: shape.len(),
                actual: values.len(),
            });
        }
        if let Some((cell, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.abs() < 1.0))
        {
            return Err(Error::BiasOutOfRange { cell, value });
        }
        Ok(Self { shape, values })
    }

    pub fn zeros(shape: GridShape) -> Self {
        Self {
            shape,
            values: vec![0.0; shape.len()],
        }
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Pointwise `static + bias`. The result may be fractional and may swap the
/// ranks of neighbouring cells.
pub fn apply_bias(static_order: &PatchOrder, bias: &ContextBias) -> Result<PatchOrder> {
    if static_order.shape() != bias.shape() {
        return Err(Error::ShapeMismatch {
            left: static_order.shape().to_string(),
            right: bias.shape().to_string(),
        });
    }
    let positions = static_order
        .positions()
        .iter()
        .zip(bias.values())
        .map(|(x, c)| x + c)
        .collect();
    PatchOrder::new(static_order.shape(), positions)
}

/// `h x w x d_model` embedding tensor, one row per cell in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingField {
    shape: GridShape,
    d_model: usize,
    data: Vec<f64>,
}

impl EmbeddingField {
    /// Wraps an externally produced tensor (e.g. loaded from disk).
    pub fn from_raw(shape: GridShape, d_model: usize, data: Vec<f64>) -> Result<Self> {
        if d_model == 0 {
            return Err(Error::InvalidDModel(d_model));
        }
        if data.len() != shape.len() * d_model {
            return Err(Error::LengthMismatch {
                expected: shape.len() * d_model,
                actual: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i / d_model));
        }
        Ok(Self {
            shape,
            d_model,
            data,
        })
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn d_model(&self) -> usize {
        self.d_model
    }

    pub fn row(&self, cell: usize) -> &[f64] {
        &self.data[cell * self.d_model..(cell + 1) * self.d_model]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d_model)
    }
}

/// `concat(sin(x w_0..), cos(x w_0..))` for each cell position `x`.
pub fn embed(order: &PatchOrder, freqs: &FrequencySet) -> EmbeddingField {
    let half = freqs.d_model() / 2;
    let mut data = vec![0.0; order.shape().len() * freqs.d_model()];
    for (row, &x) in data.chunks_exact_mut(freqs.d_model()).zip(order.positions()) {
        let (sin_half, cos_half) = row.split_at_mut(half);
        for ((s, c), &w) in sin_half.iter_mut().zip(cos_half).zip(freqs.frequencies()) {
            let (sv, cv) = (x * w).sin_cos();
            *s = sv;
            *c = cv;
        }
    }
    EmbeddingField {
        shape: order.shape(),
        d_model: freqs.d_model(),
        data,
    }
}

/// Symmetric matrix of pairwise cosine similarities between cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityField {
    shape: GridShape,
    values: Vec<f64>,
}

impl SimilarityField {
    /// Wraps a precomputed `N x N` matrix. Entries are clamped to [-1, 1].
    pub fn from_matrix(shape: GridShape, mut values: Vec<f64>) -> Result<Self> {
        let n = shape.len();
        if values.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i / n));
        }
        for v in &mut values {
            *v = v.clamp(-1.0, 1.0);
        }
        Ok(Self { shape, values })
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.shape.len() + b]
    }

    /// Similarities of every cell to `center`, row-major.
    pub fn row(&self, center: usize) -> &[f64] {
        let n = self.shape.len();
        &self.values[center * n..(center + 1) * n]
    }
}

pub fn cosine_field(emb: &EmbeddingField) -> Result<SimilarityField> {
    let shape = emb.shape();
    let n = shape.len();
    let norms: Vec<f64> = emb.rows().map(|r| dot(r, r).sqrt()).collect();
    if let Some(cell) = norms.iter().position(|&v| v == 0.0) {
        let (row, col) = shape.coords(cell);
        return Err(Error::ZeroNorm { cell, row, col });
    }
    let mut values = vec![0.0; n * n];
    for a in 0..n {
        values[a * n + a] = 1.0;
        for b in a + 1..n {
            let s = (dot(emb.row(a), emb.row(b)) / (norms[a] * norms[b])).clamp(-1.0, 1.0);
            values[a * n + b] = s;
            values[b * n + a] = s;
        }
    }
    Ok(SimilarityField { shape, values })
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(w: usize, h: usize) -> GridShape {
        GridShape::new(w, h).unwrap()
    }

    fn order(positions: &[f64]) -> PatchOrder {
        PatchOrder::new(shape(positions.len(), 1), positions.to_vec()).unwrap()
    }

    #[test]
    fn frequencies() {
        assert_eq!(make_frequencies(4, 10_000.0).unwrap().frequencies(), &[1.0, 0.01]);
        assert_eq!(make_frequencies(2, 10_000.0).unwrap().frequencies(), &[1.0]);
        assert!(matches!(make_frequencies(3, 10_000.0), Err(Error::InvalidDModel(3))));
        assert!(make_frequencies(0, 10_000.0).is_err());
        assert!(make_frequencies(4, 1.0).is_err());
    }

    #[test]
    fn frequencies_strictly_decrease() {
        let f = make_frequencies(768, DEFAULT_BASE).unwrap();
        assert_eq!(f.frequencies()[0], 1.0);
        assert!(f.frequencies().windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn bias_identity_and_swap() {
        let g = order(&[0., 1., 2.]);
        let zero = ContextBias::zeros(g.shape());
        assert_eq!(apply_bias(&g, &zero).unwrap(), g);

        let g = order(&[0., 1.]);
        let b = ContextBias::new(g.shape(), vec![0.6, -0.6]).unwrap();
        let x = apply_bias(&g, &b).unwrap();
        assert_eq!(x.positions(), &[0.6, 0.4]);
        assert_eq!(x.ranked_cells(), vec![1, 0]);

        let g = order(&[0., 1., 2.]);
        let b = ContextBias::new(g.shape(), vec![0.3, -0.2, 0.1]).unwrap();
        let x = apply_bias(&g, &b).unwrap();
        assert_eq!(x.positions(), &[0.3, 0.8, 2.1]);
    }

    #[test]
    fn bias_bounds_and_shape() {
        let s = shape(2, 1);
        assert!(ContextBias::new(s, vec![1.0, 0.0]).is_err());
        assert!(ContextBias::new(s, vec![0.0, f64::NAN]).is_err());
        let b = ContextBias::zeros(shape(3, 1));
        assert!(matches!(
            apply_bias(&order(&[0., 1.]), &b),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn embed_values() {
        let f4 = make_frequencies(4, 10_000.0).unwrap();
        let e = embed(&order(&[0.0, 1.0]), &f4);
        assert_eq!(e.row(0), &[0.0, 0.0, 1.0, 1.0]);
        assert_eq!(e.row(1), &[1f64.sin(), 0.01f64.sin(), 1f64.cos(), 0.01f64.cos()]);

        let f2 = make_frequencies(2, 10_000.0).unwrap();
        let e = embed(&order(&[0.5]), &f2);
        assert_eq!(e.row(0), &[0.5f64.sin(), 0.5f64.cos()]);
    }

    #[test]
    fn cosine_examples() {
        let f2 = make_frequencies(2, 10_000.0).unwrap();
        let s = cosine_field(&embed(&order(&[0.0, 0.0]), &f2)).unwrap();
        assert_eq!(s.get(0, 0), 1.0);
        assert_eq!(s.get(0, 1), 1.0);

        let s = cosine_field(&embed(&order(&[0.0, std::f64::consts::PI]), &f2)).unwrap();
        assert!((s.get(0, 1) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_norm_row_is_reported() {
        let e = EmbeddingField::from_raw(shape(2, 1), 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            cosine_field(&e),
            Err(Error::ZeroNorm { cell: 1, row: 0, col: 1 })
        ));
    }

    #[test]
    fn cosine_field_is_exactly_symmetric() {
        let f = make_frequencies(16, DEFAULT_BASE).unwrap();
        let g = crate::order::gilbert_order(shape(5, 4));
        let s = cosine_field(&embed(&g, &f)).unwrap();
        for a in 0..20 {
            assert_eq!(s.get(a, a), 1.0);
            for b in 0..20 {
                assert_eq!(s.get(a, b).to_bits(), s.get(b, a).to_bits());
            }
        }
    }
}
