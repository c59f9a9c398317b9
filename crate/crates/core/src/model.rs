//! The full grasp model: object and part encoders, one codebook per
//! object/part, and the dual-stage decoder.

use std::path::Path;

use candle_core::{DType, Device, Tensor};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::{derive_seed, TemplateKind};
use crate::decoder::{DecodeOutput, DecoderConfig, DualStageDecoder};
use crate::encoder::{points_tensor, EncoderConfig, EncoderId, Encoders};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::hand::{center_vertices, forward_with_layer, HandLayer, HandMesh, HandParams, HandTemplate, PARAM_DIM};
use crate::nn::ParamStore;
use crate::prior::{IndexSequence, PriorModel};
use crate::quantizer::{straight_through, Codebook};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    pub decoder: DecoderConfig,
    /// Entries per codebook.
    pub codebook_size: usize,
    pub template: TemplateKind,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderConfig::default(),
            decoder: DecoderConfig::default(),
            codebook_size: 64,
            template: TemplateKind::Standard,
            seed: 0,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelMeta {
    config: ModelConfig,
    usage: Vec<Vec<u64>>,
}

/// Everything one training step needs from the network.
#[derive(Debug)]
pub struct ForwardOutput {
    pub z_type: Tensor,
    pub z_pose: Tensor,
    pub z_parts: Vec<Tensor>,
    /// Codebook rows selected for each part (gradient to the codebooks).
    pub q_parts: Vec<Tensor>,
    pub q_type: Tensor,
    pub object_indices: Vec<usize>,
    /// `part_indices[i][b]`: entry of book `i` chosen for batch row `b`.
    pub part_indices: Vec<Vec<usize>>,
    pub decoded: DecodeOutput,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOptions {
    pub temperature: f64,
    /// Fraction of object points dropped before encoding, in `[0, 1)`.
    pub mask_ratio: f64,
    pub seed: u64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self { temperature: 1.0, mask_ratio: 0.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedGrasp {
    pub params: HandParams,
    pub mesh: HandMesh,
    pub indices: IndexSequence,
}

#[derive(Debug)]
pub struct GraspModel {
    config: ModelConfig,
    store: ParamStore,
    template: HandTemplate,
    layer: HandLayer,
    layer64: HandLayer,
    encoders: Encoders,
    object_book: Codebook,
    part_books: Vec<Codebook>,
    decoder: DualStageDecoder,
}

impl GraspModel {
    pub fn new(config: &ModelConfig, dtype: DType) -> Result<Self> {
        let device = Device::Cpu;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new(dtype, device.clone());
        let template = config.template.build();
        let layer = HandLayer::new(&template, dtype, &device)?;
        let layer64 = HandLayer::new(&template, DType::F64, &device)?;
        let encoders = Encoders::new(&mut store, &config.encoder, &template, &mut rng)?;
        let d = encoders.latent_dim();
        let s = config.codebook_size;
        let object_book = Codebook::new(&mut store, "object", s, d, &mut rng)?;
        let part_books = (0..encoders.num_parts())
            .map(|i| Codebook::new(&mut store, &format!("part{i}"), s, d, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let decoder =
            DualStageDecoder::new(&mut store, encoders.num_parts(), d, layer.num_angles(), &config.decoder, &mut rng)?;
        Ok(Self { config: config.clone(), store, template, layer, layer64, encoders, object_book, part_books, decoder })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn template(&self) -> &HandTemplate {
        &self.template
    }

    /// Hand layer in the model's dtype.
    pub fn layer(&self) -> &HandLayer {
        &self.layer
    }

    pub fn encoders(&self) -> &Encoders {
        &self.encoders
    }

    pub fn decoder(&self) -> &DualStageDecoder {
        &self.decoder
    }

    pub fn num_parts(&self) -> usize {
        self.part_books.len()
    }

    pub fn object_book(&self) -> &Codebook {
        &self.object_book
    }

    pub fn part_books(&self) -> &[Codebook] {
        &self.part_books
    }

    /// Object book first, then the part books.
    pub fn books_mut(&mut self) -> impl Iterator<Item = &mut Codebook> {
        std::iter::once(&mut self.object_book).chain(self.part_books.iter_mut())
    }

    /// Vocabulary sizes for the prior: object book, then each part book.
    pub fn vocab(&self) -> Vec<usize> {
        std::iter::once(self.object_book.size()).chain(self.part_books.iter().map(Codebook::size)).collect()
    }

    /// `clouds [B, n, 3]` to `(z_type, z_pose)`.
    pub fn encode_objects(&self, clouds: &Tensor) -> Result<(Tensor, Tensor)> {
        Ok((self.encoders.encode(EncoderId::ObjectType, clouds)?, self.encoders.encode(EncoderId::ObjectPose, clouds)?))
    }

    /// Centered hand vertices `[B, V, 3]` to continuous part features.
    pub fn encode_hands(&self, centered: &Tensor) -> Result<Vec<Tensor>> {
        self.encoders.encode_part_tensors(&self.encoders.split_parts(centered)?)
    }

    /// Training forward pass on object clouds and centered ground-truth
    /// hand vertices.
    pub fn forward(&self, clouds: &Tensor, centered: &Tensor) -> Result<ForwardOutput> {
        let (z_type, z_pose) = self.encode_objects(clouds)?;
        let (object_indices, q_type) = self.object_book.lookup(&z_type)?;
        let z_parts = self.encode_hands(centered)?;
        let mut q_parts = Vec::with_capacity(z_parts.len());
        let mut st = Vec::with_capacity(z_parts.len());
        let mut part_indices = Vec::with_capacity(z_parts.len());
        for (z, book) in z_parts.iter().zip(&self.part_books) {
            let (idx, q) = book.lookup(z)?;
            st.push(straight_through(z, &q)?);
            q_parts.push(q);
            part_indices.push(idx);
        }
        let decoded = self.decoder.decode(&self.layer, &st, &z_type, &z_pose)?;
        Ok(ForwardOutput { z_type, z_pose, z_parts, q_parts, q_type, object_indices, part_indices, decoded })
    }

    /// Codebook indices of a ground-truth pair.
    pub fn index_sequence(&self, cloud: &[Vec3], hand_vertices: &[Vec3]) -> Result<IndexSequence> {
        let dtype = self.store.dtype();
        let clouds = points_tensor(cloud, dtype, self.store.device())?;
        let (centered, _) = center_vertices(hand_vertices);
        let hands = points_tensor(&centered, dtype, self.store.device())?;
        let (z_type, _) = self.encode_objects(&clouds)?;
        let (object, _) = self.object_book.lookup(&z_type)?;
        let parts = self
            .encode_hands(&hands)?
            .iter()
            .zip(&self.part_books)
            .map(|(z, b)| b.lookup(z).map(|(i, _)| i[0]))
            .collect::<Result<Vec<_>>>()?;
        Ok(IndexSequence { object: object[0], parts })
    }

    /// Decodes a grasp for one object from explicit part indices.
    pub fn decode_indices(&self, cloud: &[Vec3], parts: &[usize]) -> Result<(HandParams, usize)> {
        if parts.len() != self.num_parts() {
            return Err(Error::Arity { what: "part indices", expected: self.num_parts(), actual: parts.len() });
        }
        let clouds = points_tensor(cloud, self.store.dtype(), self.store.device())?;
        let (z_type, z_pose) = self.encode_objects(&clouds)?;
        let (object, _) = self.object_book.lookup(&z_type)?;
        let q = parts
            .iter()
            .zip(&self.part_books)
            .map(|(&i, b)| b.gather(&[i]))
            .collect::<Result<Vec<_>>>()?;
        let out = self.decoder.decode(&self.layer, &q, &z_type, &z_pose)?;
        let values = out.params()?.to_dtype(DType::F64)?.flatten_all()?.to_vec1::<f64>()?;
        debug_assert_eq!(values.len(), PARAM_DIM);
        Ok((HandParams::from_slice(&values)?, object[0]))
    }

    /// Inference: object index from the cloud, part indices from the prior,
    /// then decoding and skinning.
    pub fn generate_grasp(&self, prior: &PriorModel, cloud: &[Vec3], opts: &SampleOptions) -> Result<GeneratedGrasp> {
        if prior.vocab() != self.vocab().as_slice() {
            return Err(Error::NotReady("prior vocabulary does not match the model's codebooks".into()));
        }
        let kept = mask_points(cloud, opts.mask_ratio, derive_seed(opts.seed, 0))?;
        let clouds = points_tensor(&kept, self.store.dtype(), self.store.device())?;
        let (z_type, _) = self.encode_objects(&clouds)?;
        let (object, _) = self.object_book.lookup(&z_type)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, 1));
        let parts = prior.sample_indices(object[0], opts.temperature, &mut rng)?;
        let (params, _) = self.decode_indices(&kept, &parts)?;
        let mesh = forward_with_layer(&params, &self.layer64)?;
        Ok(GeneratedGrasp { params, mesh, indices: IndexSequence { object: object[0], parts } })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.store.save(&dir.join("model.safetensors"))?;
        let usage = std::iter::once(&self.object_book)
            .chain(&self.part_books)
            .map(|b| b.usage().to_vec())
            .collect();
        let meta = ModelMeta { config: self.config.clone(), usage };
        std::fs::write(dir.join("model.json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn load(dir: &Path, dtype: DType) -> Result<Self> {
        let meta_path = dir.join("model.json");
        if !meta_path.exists() {
            return Err(Error::NotReady(format!("no trained model in {}", dir.display())));
        }
        let meta: ModelMeta = serde_json::from_str(&std::fs::read_to_string(meta_path)?)?;
        let mut model = Self::new(&meta.config, dtype)?;
        model.store.load(&dir.join("model.safetensors"))?;
        if meta.usage.len() != 1 + model.part_books.len() {
            return Err(Error::Format("usage counters do not match the codebooks".into()));
        }
        for (book, usage) in model.books_mut().zip(meta.usage) {
            book.set_usage(usage)?;
        }
        Ok(model)
    }
}

/// Drops `ratio` of the points at random, keeping at least one, in original
/// order.
pub fn mask_points(cloud: &[Vec3], ratio: f64, seed: u64) -> Result<Vec<Vec3>> {
    if cloud.is_empty() {
        return Err(Error::Empty("point cloud"));
    }
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::InvalidParameter(format!("mask ratio must be in [0, 1), got {ratio}")));
    }
    if ratio == 0.0 {
        return Ok(cloud.to_vec());
    }
    let keep = ((cloud.len() as f64 * (1.0 - ratio)).round() as usize).clamp(1, cloud.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, cloud.len(), keep).into_vec();
    idx.sort_unstable();
    Ok(idx.into_iter().map(|i| cloud[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::PriorConfig;

    fn toy() -> ModelConfig {
        ModelConfig {
            encoder: EncoderConfig { latent_dim: 8, hidden: vec![8], ..Default::default() },
            decoder: DecoderConfig { hidden: 16, gate_hidden: 8, correction_width: 8, ..Default::default() },
            codebook_size: 4,
            template: TemplateKind::Toy,
            seed: 3,
        }
    }

    fn cloud() -> Vec<Vec3> {
        (0..50).map(|i| [0.01 * (i as f64).sin(), 0.01 * (i as f64).cos(), 0.0005 * i as f64]).collect()
    }

    #[test]
    fn generation_is_deterministic_and_valid() {
        let model = GraspModel::new(&toy(), DType::F32).unwrap();
        let prior = PriorModel::new(&model.vocab(), &PriorConfig { width: 8, layers: 1, ..Default::default() }).unwrap();
        let opts = SampleOptions { seed: 5, ..Default::default() };
        let a = model.generate_grasp(&prior, &cloud(), &opts).unwrap();
        let b = model.generate_grasp(&prior, &cloud(), &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.indices.parts.len(), 6);
        assert!(a.indices.parts.iter().all(|&i| i < 4));
        assert_eq!(a.mesh.vertices.len(), model.template().num_vertices());
        for ratio in [0.5, 0.9] {
            let g = model.generate_grasp(&prior, &cloud(), &SampleOptions { mask_ratio: ratio, ..opts }).unwrap();
            assert!(g.mesh.vertices.iter().flatten().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn mismatched_prior_is_not_ready() {
        let model = GraspModel::new(&toy(), DType::F32).unwrap();
        let prior = PriorModel::new(&[4, 4, 4], &PriorConfig { width: 8, layers: 1, ..Default::default() }).unwrap();
        assert!(matches!(model.generate_grasp(&prior, &cloud(), &SampleOptions::default()), Err(Error::NotReady(_))));
    }

    #[test]
    fn save_load_round_trip() {
        let mut model = GraspModel::new(&toy(), DType::F32).unwrap();
        model.books_mut().next().unwrap().record(&[1, 1, 2]);
        let dir = tempfile::tempdir().unwrap();
        model.save(dir.path()).unwrap();
        let back = GraspModel::load(dir.path(), DType::F32).unwrap();
        assert_eq!(back.object_book().usage(), model.object_book().usage());
        let hand: Vec<Vec3> = model.template().vertices.clone();
        assert_eq!(back.index_sequence(&cloud(), &hand).unwrap(), model.index_sequence(&cloud(), &hand).unwrap());
        assert!(matches!(GraspModel::load(&dir.path().join("none"), DType::F32), Err(Error::NotReady(_))));
    }

    #[test]
    fn masking() {
        let c = cloud();
        assert_eq!(mask_points(&c, 0.5, 1).unwrap().len(), 25);
        assert_eq!(mask_points(&c, 0.9, 1).unwrap().len(), 5);
        assert!(mask_points(&c, 1.0, 1).is_err());
    }
}
