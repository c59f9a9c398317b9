//! Named parameter store and the small layers the model is built from.

use std::collections::BTreeMap;
use std::path::Path;

use candle_core::{DType, Device, Tensor, Var, D};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Owns every trainable tensor under a dotted name. Layers keep clones of
/// the underlying tensors, so loading a checkpoint writes through in place.
#[derive(Debug)]
pub struct ParamStore {
    vars: BTreeMap<String, Var>,
    dtype: DType,
    device: Device,
}

impl ParamStore {
    pub fn new(dtype: DType, device: Device) -> Self {
        Self { vars: BTreeMap::new(), dtype, device }
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    /// Registers a tensor filled from `init`, which receives the flat
    /// element index.
    pub fn add(&mut self, name: &str, shape: &[usize], mut init: impl FnMut(usize) -> f64) -> Result<Tensor> {
        if self.vars.contains_key(name) {
            return Err(Error::InvalidInput(format!("parameter {name} registered twice")));
        }
        let n: usize = shape.iter().product();
        let data: Vec<f64> = (0..n).map(&mut init).collect();
        let t = Tensor::from_vec(data, shape, &self.device)?.to_dtype(self.dtype)?;
        let var = Var::from_tensor(&t)?;
        let out = var.as_tensor().clone();
        self.vars.insert(name.to_string(), var);
        Ok(out)
    }

    pub fn uniform(&mut self, name: &str, shape: &[usize], bound: f64, rng: &mut ChaCha8Rng) -> Result<Tensor> {
        self.add(name, shape, |_| rng.random_range(-bound..=bound))
    }

    pub fn zeros(&mut self, name: &str, shape: &[usize]) -> Result<Tensor> {
        self.add(name, shape, |_| 0.0)
    }

    pub fn vars(&self) -> &BTreeMap<String, Var> {
        &self.vars
    }

    pub fn get(&self, name: &str) -> Option<&Var> {
        self.vars.get(name)
    }

    /// Variables whose name starts with any of `prefixes`.
    pub fn vars_with_prefix(&self, prefixes: &[&str]) -> Vec<(String, Var)> {
        self.vars
            .iter()
            .filter(|(k, _)| prefixes.iter().any(|p| k.starts_with(p)))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.vars.values().map(|v| v.elem_count()).sum()
    }

    pub fn tensors(&self) -> BTreeMap<String, Tensor> {
        self.vars.iter().map(|(k, v)| (k.clone(), v.as_tensor().clone())).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let map: std::collections::HashMap<String, Tensor> = self.tensors().into_iter().collect();
        candle_core::safetensors::save(&map, path)?;
        Ok(())
    }

    /// Overwrites every registered variable from a safetensors file. Names
    /// and shapes must match exactly.
    pub fn load(&self, path: &Path) -> Result<()> {
        let loaded = candle_core::safetensors::load(path, &self.device)?;
        self.assign(&loaded)
    }

    pub fn assign(&self, tensors: &std::collections::HashMap<String, Tensor>) -> Result<()> {
        if tensors.len() != self.vars.len() {
            return Err(Error::Format(format!(
                "checkpoint has {} tensors, model has {}",
                tensors.len(),
                self.vars.len()
            )));
        }
        for (name, var) in &self.vars {
            let t = tensors
                .get(name)
                .ok_or_else(|| Error::Format(format!("checkpoint is missing {name}")))?;
            if t.dims() != var.dims() {
                return Err(Error::Format(format!("{name}: shape {:?} vs {:?}", t.dims(), var.dims())));
            }
            var.set(&t.to_dtype(self.dtype)?)?;
        }
        Ok(())
    }
}

/// `y = x W + b` with `W [in, out]`.
#[derive(Debug, Clone)]
pub struct Linear {
    weight: Tensor,
    bias: Tensor,
}

impl Linear {
    pub fn new(store: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let weight = store.uniform(&format!("{name}.weight"), &[fan_in, fan_out], bound, rng)?;
        let bias = store.zeros(&format!("{name}.bias"), &[fan_out])?;
        Ok(Self { weight, bias })
    }

    /// Zero weights and bias.
    pub fn zeroed(store: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize) -> Result<Self> {
        let weight = store.zeros(&format!("{name}.weight"), &[fan_in, fan_out])?;
        let bias = store.zeros(&format!("{name}.bias"), &[fan_out])?;
        Ok(Self { weight, bias })
    }

    /// Applies to the last dimension; leading dimensions are flattened
    /// into a single matrix product.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let dims = x.dims().to_vec();
        let fan_in = *dims.last().ok_or_else(|| Error::InvalidInput("linear layer input is a scalar".into()))?;
        let rows = x.reshape(((), fan_in))?.matmul(&self.weight)?.broadcast_add(&self.bias)?;
        let mut out = dims;
        *out.last_mut().expect("non-empty") = self.weight.dim(1)?;
        Ok(rows.reshape(out)?)
    }

    pub fn weight(&self) -> &Tensor {
        &self.weight
    }
}

/// Linear layers with ReLU between them (none after the last).
#[derive(Debug, Clone)]
pub struct Mlp {
    layers: Vec<Linear>,
}

impl Mlp {
    pub fn new(store: &mut ParamStore, name: &str, widths: &[usize], rng: &mut ChaCha8Rng) -> Result<Self> {
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(store, &format!("{name}.{i}"), w[0], w[1], rng))
            .collect::<Result<_>>()?;
        Ok(Self { layers })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(&h)?;
            if i + 1 < self.layers.len() {
                h = h.relu()?;
            }
        }
        Ok(h)
    }
}

/// Single-head pre-norm-free self-attention block with a feed-forward
/// sublayer; both sublayers are residual.
#[derive(Debug, Clone)]
pub struct AttentionBlock {
    query: Linear,
    key: Linear,
    value: Linear,
    out: Linear,
    ff: Mlp,
    scale: f64,
}

impl AttentionBlock {
    pub fn new(store: &mut ParamStore, name: &str, width: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(Self {
            query: Linear::new(store, &format!("{name}.q"), width, width, rng)?,
            key: Linear::new(store, &format!("{name}.k"), width, width, rng)?,
            value: Linear::new(store, &format!("{name}.v"), width, width, rng)?,
            out: Linear::new(store, &format!("{name}.o"), width, width, rng)?,
            ff: Mlp::new(store, &format!("{name}.ff"), &[width, 2 * width, width], rng)?,
            scale: 1.0 / (width as f64).sqrt(),
        })
    }

    /// `x [B, L, W]`; `mask [L, L]` is added to the attention logits.
    pub fn forward(&self, x: &Tensor, mask: Option<&Tensor>) -> Result<Tensor> {
        let q = self.query.forward(x)?;
        let k = self.key.forward(x)?;
        let v = self.value.forward(x)?;
        let mut logits = q.matmul(&k.transpose(1, 2)?.contiguous()?)?.affine(self.scale, 0.0)?;
        if let Some(m) = mask {
            logits = logits.broadcast_add(m)?;
        }
        let attn = candle_nn::ops::softmax(&logits, D::Minus1)?;
        let h = x.add(&self.out.forward(&attn.matmul(&v)?)?)?;
        Ok(h.add(&self.ff.forward(&h)?)?)
    }
}

/// Additive causal mask: 0 on and below the diagonal, -1e9 above.
pub fn causal_mask(len: usize, dtype: DType, device: &Device) -> Result<Tensor> {
    let data: Vec<f64> = (0..len * len)
        .map(|i| if i % len > i / len { -1e9 } else { 0.0 })
        .collect();
    Ok(Tensor::from_vec(data, (len, len), device)?.to_dtype(dtype)?)
}

/// Shared per-point MLP, max pooling over points, linear head.
#[derive(Debug, Clone)]
pub struct PointNet {
    point_mlp: Mlp,
    head: Linear,
}

impl PointNet {
    pub fn new(store: &mut ParamStore, name: &str, hidden: &[usize], out: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut widths = vec![3];
        widths.extend_from_slice(hidden);
        let point_mlp = Mlp::new(store, &format!("{name}.point"), &widths, rng)?;
        let last = *widths.last().unwrap_or(&3);
        let head = Linear::new(store, &format!("{name}.head"), last, out, rng)?;
        Ok(Self { point_mlp, head })
    }

    /// `points [B, n, 3]` to `[B, out]`.
    pub fn forward(&self, points: &Tensor) -> Result<Tensor> {
        let h = self.point_mlp.forward(points)?.relu()?;
        self.head.forward(&h.max(1)?)
    }
}
