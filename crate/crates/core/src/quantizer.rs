//! Codebooks, nearest-entry quantization and the codebook losses.

use candle_core::{DType, Tensor, Var, D};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::ParamStore;
use crate::ops;

/// Nearest entry by Euclidean distance, lowest index on ties. Returns the
/// index and the squared distance.
pub fn nearest_entry(z: &[f64], entries: &[Vec<f64>]) -> Result<(usize, f64)> {
    if entries.is_empty() {
        return Err(Error::Empty("codebook"));
    }
    let mut best = (0, f64::INFINITY);
    for (k, e) in entries.iter().enumerate() {
        if e.len() != z.len() {
            return Err(Error::DimensionMismatch { expected: e.len(), actual: z.len() });
        }
        let d: f64 = e.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.1 {
            best = (k, d);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizeResult {
    pub quantized: Vec<f64>,
    pub index: usize,
}

/// An ordered set of trainable embedding vectors with lookup counters.
#[derive(Debug, Clone)]
pub struct Codebook {
    name: String,
    entries: Var,
    usage: Vec<u64>,
}

impl Codebook {
    pub fn new(store: &mut ParamStore, name: &str, size: usize, dim: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        if size == 0 || dim == 0 {
            return Err(Error::InvalidParameter("codebook size and dimension must be positive".into()));
        }
        let bound = 1.0 / size as f64;
        let key = format!("codebook.{name}");
        store.uniform(&key, &[size, dim], bound, rng)?;
        let entries = store.get(&key).expect("just registered").clone();
        Ok(Self { name: name.to_string(), entries, usage: vec![0; size] })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.usage.len()
    }

    pub fn dim(&self) -> usize {
        self.entries.dims()[1]
    }

    /// `[S, d]` entry tensor (a trainable variable).
    pub fn entries(&self) -> &Tensor {
        self.entries.as_tensor()
    }

    pub fn set_entries(&self, entries: &Tensor) -> Result<()> {
        if entries.dims() != self.entries.dims() {
            return Err(Error::DimensionMismatch { expected: self.entries.elem_count(), actual: entries.elem_count() });
        }
        Ok(self.entries.set(&entries.to_dtype(self.entries.dtype())?)?)
    }

    pub fn entry_vecs(&self) -> Result<Vec<Vec<f64>>> {
        Ok(self.entries.to_dtype(DType::F64)?.to_vec2::<f64>()?)
    }

    pub fn usage(&self) -> &[u64] {
        &self.usage
    }

    pub fn reset_usage(&mut self) {
        self.usage.iter_mut().for_each(|u| *u = 0);
    }

    pub fn set_usage(&mut self, usage: Vec<u64>) -> Result<()> {
        if usage.len() != self.size() {
            return Err(Error::Arity { what: "usage counters", expected: self.size(), actual: usage.len() });
        }
        self.usage = usage;
        Ok(())
    }

    pub fn record(&mut self, indices: &[usize]) {
        for &i in indices {
            self.usage[i] += 1;
        }
    }

    pub fn used_entries(&self) -> usize {
        self.usage.iter().filter(|&&u| u > 0).count()
    }

    pub fn quantize(&mut self, z: &[f64], count: bool) -> Result<QuantizeResult> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: z.len() });
        }
        let entries = self.entry_vecs()?;
        let (index, _) = nearest_entry(z, &entries)?;
        if count {
            self.usage[index] += 1;
        }
        Ok(QuantizeResult { quantized: entries[index].clone(), index })
    }

    /// Batched lookup: `z [B, d]` to `(indices, entries [B, d])`. The
    /// returned entries carry gradient to the codebook, not to `z`.
    pub fn lookup(&self, z: &Tensor) -> Result<(Vec<usize>, Tensor)> {
        let (_, d) = z.dims2()?;
        if d != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: d });
        }
        let entries = self.entry_vecs()?;
        let zs = z.to_dtype(DType::F64)?.to_vec2::<f64>()?;
        let indices = zs
            .iter()
            .map(|row| nearest_entry(row, &entries).map(|(k, _)| k))
            .collect::<Result<Vec<_>>>()?;
        let quantized = self.gather(&indices)?;
        Ok((indices, quantized))
    }

    /// Entry rows for `indices`, `[n, d]`.
    pub fn gather(&self, indices: &[usize]) -> Result<Tensor> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.size()) {
            return Err(Error::IndexOutOfRange { index: bad, size: self.size() });
        }
        let idx: Vec<u32> = indices.iter().map(|&i| i as u32).collect();
        let idx = Tensor::from_vec(idx, indices.len(), self.entries.device())?;
        Ok(self.entries.index_select(&idx, 0)?)
    }

    /// Overwrites the entries with distinct rows drawn from `features`
    /// (`[n, d]`), cycling with small jitter when `n < S`.
    pub fn init_from_features(&self, features: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Result<()> {
        if features.is_empty() {
            return Err(Error::Empty("feature set for codebook initialization"));
        }
        let s = self.size();
        let d = self.dim();
        let order: Vec<usize> = if features.len() >= s {
            sample(rng, features.len(), s).into_vec()
        } else {
            (0..s).map(|i| i % features.len()).collect()
        };
        let spread = feature_spread(features).max(1e-6);
        let mut data = Vec::with_capacity(s * d);
        for (slot, &i) in order.iter().enumerate() {
            let row = &features[i];
            if row.len() != d {
                return Err(Error::DimensionMismatch { expected: d, actual: row.len() });
            }
            let jitter = if slot >= features.len() { 1e-2 * spread } else { 0.0 };
            data.extend(row.iter().map(|v| v + jitter * rng.random_range(-1.0..1.0)));
        }
        let t = Tensor::from_vec(data, (s, d), self.entries.device())?.to_dtype(self.entries.dtype())?;
        self.set_entries(&t)
    }
}

fn feature_spread(features: &[Vec<f64>]) -> f64 {
    let d = features[0].len();
    let n = features.len() as f64;
    let mut var = 0.0;
    for k in 0..d {
        let mean: f64 = features.iter().map(|f| f[k]).sum::<f64>() / n;
        var += features.iter().map(|f| (f[k] - mean).powi(2)).sum::<f64>() / n;
    }
    (var / d as f64).sqrt()
}

/// Forward value of the entry, gradient of `z`.
pub fn straight_through(z: &Tensor, quantized: &Tensor) -> Result<Tensor> {
    Ok(ops::straight_through(z, quantized)?)
}

/// `Σ_i ‖sg(q_i) − z_i‖² + β Σ_i ‖sg(z_i) − q_i‖²`, per batch row, summed
/// over the listed features and averaged over the batch. Each tensor is
/// `[B, d]`.
pub fn commitment_loss(z: &[Tensor], q: &[Tensor], beta: f64) -> Result<Tensor> {
    if z.len() != q.len() || z.is_empty() {
        return Err(Error::Arity { what: "quantized features", expected: z.len(), actual: q.len() });
    }
    let mut total: Option<Tensor> = None;
    for (z, q) in z.iter().zip(q) {
        let enc = q.detach().sub(z)?.sqr()?.sum(D::Minus1)?;
        let book = z.detach().sub(q)?.sqr()?.sum(D::Minus1)?;
        let term = enc.add(&book.affine(beta, 0.0)?)?;
        total = Some(match total {
            Some(t) => t.add(&term)?,
            None => term,
        });
    }
    Ok(total.expect("non-empty").mean_all()?)
}

/// `(L_h, L_o, L_E)` for one sample given plain feature vectors.
pub fn codebook_losses(
    z_parts: &[Vec<f64>],
    q_parts: &[Vec<f64>],
    z_type: &[f64],
    q_type: &[f64],
    beta: f64,
    lambda_e: f64,
) -> Result<(f64, f64, f64)> {
    if z_parts.len() != q_parts.len() {
        return Err(Error::Arity { what: "quantized part features", expected: z_parts.len(), actual: q_parts.len() });
    }
    let pair = |z: &[f64], q: &[f64]| -> Result<f64> {
        if z.len() != q.len() {
            return Err(Error::DimensionMismatch { expected: z.len(), actual: q.len() });
        }
        let d: f64 = z.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(d + beta * d)
    };
    let mut l_h = 0.0;
    for (z, q) in z_parts.iter().zip(q_parts) {
        l_h += pair(z, q)?;
    }
    let l_o = pair(z_type, q_type)?;
    Ok((l_h, l_o, lambda_e * (l_h + l_o)))
}
