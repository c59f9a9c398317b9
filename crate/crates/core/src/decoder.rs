//! Two-stage grasp decoding: posture with skeletal gating, then position
//! from the gradient-stopped posture feature.

use candle_core::{DType, Tensor};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hand::{HandLayer, POSITION_DIM, POSTURE_DIM};
use crate::nn::{AttentionBlock, Linear, Mlp, ParamStore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecoderConfig {
    pub hidden: usize,
    pub gate_hidden: usize,
    /// Posture values per token of the correction transformer; must divide 55.
    pub correction_chunk: usize,
    pub correction_width: usize,
    /// Decode position first, then posture.
    pub reversed: bool,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self { hidden: 256, gate_hidden: 64, correction_chunk: 5, correction_width: 32, reversed: false }
    }
}

/// Gate `G(θ) ∈ [0,1]^55` from joint angles and correction `T(M)` from an
/// attention block over posture chunks.
#[derive(Debug, Clone)]
pub struct SkeletalCorrection {
    gate: Mlp,
    embed: Linear,
    position: Tensor,
    block: AttentionBlock,
    unembed: Linear,
    chunk: usize,
}

impl SkeletalCorrection {
    pub fn new(store: &mut ParamStore, num_angles: usize, cfg: &DecoderConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let chunk = cfg.correction_chunk;
        if chunk == 0 || POSTURE_DIM % chunk != 0 {
            return Err(Error::Config(format!("correction_chunk {chunk} must divide {POSTURE_DIM}")));
        }
        let w = cfg.correction_width;
        let tokens = POSTURE_DIM / chunk;
        let gate = Mlp::new(store, "dec.gate", &[num_angles, cfg.gate_hidden, POSTURE_DIM], rng)?;
        let embed = Linear::new(store, "dec.correction.embed", chunk, w, rng)?;
        let position = store.add("dec.correction.position", &[tokens, w], |_| 0.02 * rng.random_range(-1.0..1.0))?;
        let block = AttentionBlock::new(store, "dec.correction.block", w, rng)?;
        let unembed = Linear::new(store, "dec.correction.unembed", w, chunk, rng)?;
        Ok(Self { gate, embed, position, block, unembed, chunk })
    }

    /// `angles [B, K]` to gate values `[B, 55]` in `[0, 1]`.
    pub fn gate(&self, angles: &Tensor) -> Result<Tensor> {
        Ok(candle_nn::ops::sigmoid(&self.gate.forward(angles)?)?)
    }

    /// `posture [B, 55]` to correction values `[B, 55]`.
    pub fn delta(&self, posture: &Tensor) -> Result<Tensor> {
        let b = posture.dim(0)?;
        let tokens = POSTURE_DIM / self.chunk;
        let x = posture.reshape((b, tokens, self.chunk))?;
        let h = self.embed.forward(&x)?.broadcast_add(&self.position)?;
        let h = self.block.forward(&h, None)?;
        Ok(self.unembed.forward(&h)?.reshape((b, POSTURE_DIM))?)
    }

    /// Joint angles of the posture with position zeroed.
    pub fn angles(&self, layer: &HandLayer, posture: &Tensor) -> Result<Tensor> {
        let b = posture.dim(0)?;
        let zeros = Tensor::zeros((b, POSITION_DIM), posture.dtype(), posture.device())?;
        let (_, joints) = layer.forward(&Tensor::cat(&[posture, &zeros], 1)?)?;
        layer.joint_angles(&joints)
    }

    /// `(corrected, gate, delta)` with `corrected = posture + gate ⊙ delta`.
    pub fn correct(&self, layer: &HandLayer, posture: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
        let gate = self.gate(&self.angles(layer, posture)?)?;
        let delta = self.delta(posture)?;
        let corrected = apply_correction(posture, &gate, &delta)?;
        Ok((corrected, gate, delta))
    }
}

pub fn apply_correction(posture: &Tensor, gate: &Tensor, delta: &Tensor) -> Result<Tensor> {
    Ok(posture.add(&gate.mul(delta)?)?)
}

#[derive(Debug, Clone)]
pub struct DecodeOutput {
    pub raw_posture: Tensor,
    pub posture: Tensor,
    pub position: Tensor,
    pub gate: Tensor,
    pub delta: Tensor,
}

impl DecodeOutput {
    /// `[B, 61]` posture ∥ position.
    pub fn params(&self) -> Result<Tensor> {
        Ok(Tensor::cat(&[&self.posture, &self.position], 1)?)
    }
}

#[derive(Debug, Clone)]
pub struct DualStageDecoder {
    posture: Mlp,
    correction: SkeletalCorrection,
    stage_encoder: Mlp,
    position: Mlp,
    reversed: bool,
}

impl DualStageDecoder {
    pub fn new(
        store: &mut ParamStore,
        num_parts: usize,
        latent_dim: usize,
        num_angles: usize,
        cfg: &DecoderConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let d = latent_dim;
        let h = cfg.hidden;
        let correction = SkeletalCorrection::new(store, num_angles, cfg, rng)?;
        let (posture_in, position_in, encoded) = if cfg.reversed {
            (num_parts * d + 2 * d, num_parts * d + d, POSITION_DIM)
        } else {
            (num_parts * d + d, 2 * d, POSTURE_DIM)
        };
        Ok(Self {
            posture: Mlp::new(store, "dec.posture", &[posture_in, h, h, POSTURE_DIM], rng)?,
            correction,
            stage_encoder: Mlp::new(store, "dec.stage_encoder", &[encoded, h, d], rng)?,
            position: Mlp::new(store, "dec.position", &[position_in, h, h, POSITION_DIM], rng)?,
            reversed: cfg.reversed,
        })
    }

    pub fn correction(&self) -> &SkeletalCorrection {
        &self.correction
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    /// Raw posture from quantized part features and the object type feature.
    pub fn decode_posture(&self, parts: &[Tensor], z_type: &Tensor) -> Result<Tensor> {
        let mut inputs: Vec<&Tensor> = parts.iter().collect();
        inputs.push(z_type);
        self.posture.forward(&Tensor::cat(&inputs, 1)?)
    }

    /// Posture feature `z_h`.
    pub fn encode_posture(&self, posture: &Tensor) -> Result<Tensor> {
        self.stage_encoder.forward(posture)
    }

    /// Position from `sg(z_h)` and the object pose feature.
    pub fn decode_position(&self, z_h: &Tensor, z_pose: &Tensor) -> Result<Tensor> {
        self.position.forward(&Tensor::cat(&[&z_h.detach(), z_pose], 1)?)
    }

    pub fn decode(&self, layer: &HandLayer, parts: &[Tensor], z_type: &Tensor, z_pose: &Tensor) -> Result<DecodeOutput> {
        if self.reversed {
            let mut inputs: Vec<&Tensor> = parts.iter().collect();
            inputs.push(z_pose);
            let position = self.position.forward(&Tensor::cat(&inputs, 1)?)?;
            let z_x = self.stage_encoder.forward(&position)?.detach();
            let mut inputs: Vec<&Tensor> = parts.iter().collect();
            inputs.push(z_type);
            inputs.push(&z_x);
            let raw_posture = self.posture.forward(&Tensor::cat(&inputs, 1)?)?;
            let (posture, gate, delta) = self.correction.correct(layer, &raw_posture)?;
            return Ok(DecodeOutput { raw_posture, posture, position, gate, delta });
        }
        let raw_posture = self.decode_posture(parts, z_type)?;
        let (posture, gate, delta) = self.correction.correct(layer, &raw_posture)?;
        let z_h = self.encode_posture(&posture)?;
        let position = self.decode_position(&z_h, z_pose)?;
        Ok(DecodeOutput { raw_posture, posture, position, gate, delta })
    }
}

/// Convenience for tests and tools: `[B, n]` tensor of a dtype from rows.
pub fn rows_tensor(rows: &[Vec<f64>], dtype: DType, device: &candle_core::Device) -> Result<Tensor> {
    let n = rows.first().map(Vec::len).unwrap_or(0);
    let data: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Tensor::from_vec(data, (rows.len(), n), device)?.to_dtype(dtype)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand::HandTemplate;
    use candle_core::{Device, Var};
    use rand::SeedableRng;

    fn setup(cfg: &DecoderConfig) -> (ParamStore, DualStageDecoder, HandLayer) {
        let t = HandTemplate::toy();
        let layer = HandLayer::new(&t, DType::F64, &Device::Cpu).unwrap();
        let mut store = ParamStore::new(DType::F64, Device::Cpu);
        let dec = DualStageDecoder::new(&mut store, 6, 8, t.num_angles(), cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        (store, dec, layer)
    }

    fn random(rows: usize, cols: usize, seed: u64, scale: f64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..rows * cols).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        Tensor::from_vec(data, (rows, cols), &Device::Cpu).unwrap()
    }

    #[test]
    fn zero_gate_and_zero_delta_are_identities() {
        let posture = random(3, 55, 1, 0.3);
        let zeros = posture.zeros_like().unwrap();
        let ones = posture.ones_like().unwrap();
        let delta = random(3, 55, 2, 1.0);
        let p = posture.to_vec2::<f64>().unwrap();
        assert_eq!(apply_correction(&posture, &zeros, &delta).unwrap().to_vec2::<f64>().unwrap(), p);
        assert_eq!(apply_correction(&posture, &ones, &zeros).unwrap().to_vec2::<f64>().unwrap(), p);
    }

    #[test]
    fn correction_is_gate_times_delta() {
        let (_s, dec, layer) = setup(&DecoderConfig::default());
        let posture = random(2, 55, 3, 0.3);
        let (corrected, gate, delta) = dec.correction().correct(&layer, &posture).unwrap();
        let g2 = dec.correction().gate(&dec.correction().angles(&layer, &posture).unwrap()).unwrap();
        let d2 = dec.correction().delta(&posture).unwrap();
        let (c, p) = (corrected.to_vec2::<f64>().unwrap(), posture.to_vec2::<f64>().unwrap());
        let (g, d) = (g2.to_vec2::<f64>().unwrap(), d2.to_vec2::<f64>().unwrap());
        for i in 0..2 {
            for k in 0..55 {
                assert!((c[i][k] - p[i][k] - g[i][k] * d[i][k]).abs() < 1e-12);
                assert!((0.0..=1.0).contains(&g[i][k]));
            }
        }
        assert_eq!(gate.to_vec2::<f64>().unwrap(), g);
        assert_eq!(delta.to_vec2::<f64>().unwrap(), d);
    }

    #[test]
    fn output_sizes_and_determinism() {
        let (_s, dec, layer) = setup(&DecoderConfig::default());
        let parts: Vec<Tensor> = (0..6).map(|i| random(2, 8, 10 + i, 1.0)).collect();
        let (zt, zp) = (random(2, 8, 20, 1.0), random(2, 8, 21, 1.0));
        let a = dec.decode(&layer, &parts, &zt, &zp).unwrap();
        let b = dec.decode(&layer, &parts, &zt, &zp).unwrap();
        assert_eq!(a.posture.dims(), &[2, 55]);
        assert_eq!(a.position.dims(), &[2, 6]);
        assert_eq!(a.params().unwrap().dims(), &[2, 61]);
        assert_eq!(a.params().unwrap().to_vec2::<f64>().unwrap(), b.params().unwrap().to_vec2::<f64>().unwrap());
        assert_eq!(dec.encode_posture(&a.posture).unwrap().dims(), &[2, 8]);
    }

    #[test]
    fn posture_feature_receives_gradient() {
        let (_s, dec, _) = setup(&DecoderConfig::default());
        let p = Var::from_tensor(&random(1, 55, 4, 0.3)).unwrap();
        let g = dec.encode_posture(p.as_tensor()).unwrap().sqr().unwrap().sum_all().unwrap().backward().unwrap();
        let grad = g.get(&p).unwrap().abs().unwrap().sum_all().unwrap().to_scalar::<f64>().unwrap();
        assert!(grad > 0.0);
    }

    #[test]
    fn position_loss_never_reaches_posture_stage() {
        for reversed in [false, true] {
            let (store, dec, layer) = setup(&DecoderConfig { reversed, ..Default::default() });
            let parts: Vec<Tensor> = (0..6).map(|i| random(2, 8, 30 + i, 1.0)).collect();
            let (zt, zp) = (random(2, 8, 40, 1.0), random(2, 8, 41, 1.0));
            let out = dec.decode(&layer, &parts, &zt, &zp).unwrap();
            let target = random(2, 6, 42, 0.1);
            let loss = out.position.sub(&target).unwrap().sqr().unwrap().sum_all().unwrap();
            let grads = loss.backward().unwrap();
            let upstream = if reversed { vec!["dec.stage_encoder"] } else { vec!["dec.posture", "dec.gate", "dec.correction", "dec.stage_encoder"] };
            for (name, var) in store.vars_with_prefix(&upstream) {
                if let Some(g) = grads.get(&var) {
                    let n = g.abs().unwrap().sum_all().unwrap().to_scalar::<f64>().unwrap();
                    assert_eq!(n, 0.0, "{name}");
                }
            }
            let pos_var = store.get("dec.position.0.weight").unwrap();
            assert!(grads.get(pos_var).is_some());
        }
    }
}
