//! Two-phase training: the VQ model on the full objective, then the prior
//! on the frozen index sequences.

use std::fs::File;
use std::path::{Path, PathBuf};

use candle_core::{DType, Tensor};
use log::info;
use rand::seq::index::sample;
use rayon::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, TrainConfig};
use crate::datagen::{derive_seed, Dataset};
use crate::error::{Error, Result};
use crate::geometry::{MeshSolid, PointGrid, Vec3};
use crate::hand::{center_vertices, tensor_points, PARAM_DIM};
use crate::losses::{
    compute_contact_sets, contact_map, contact_map_consistency, contact_pairs, pair_distance_sum, penetration_pairs,
    reconstruction_loss_batch, total_loss, LossComponents, LossWeights,
};
use crate::model::GraspModel;
use crate::optim::Adam;
use crate::prior::{fit_prior, IndexSequence, PriorModel};
use crate::quantizer::commitment_loss;

/// Per-object data the loss terms query.
pub struct PreparedObject {
    pub cloud: Vec<Vec3>,
    pub solid: MeshSolid,
    pub grid: PointGrid,
}

pub struct PreparedSample {
    pub object: usize,
    pub params: Vec<f64>,
    pub vertices: Vec<Vec3>,
    pub centered: Vec<Vec3>,
    /// Ground-truth contact map: indices into the object cloud.
    pub gt_contact: Vec<usize>,
}

pub struct TrainingData {
    pub objects: Vec<PreparedObject>,
    pub samples: Vec<PreparedSample>,
}

impl TrainingData {
    pub fn new(dataset: &Dataset, tau: f64) -> Result<Self> {
        dataset.validate()?;
        let objects = dataset
            .objects
            .iter()
            .map(|o| {
                Ok(PreparedObject { cloud: o.cloud.clone(), solid: o.solid()?, grid: PointGrid::new(&o.cloud, 0.005) })
            })
            .collect::<Result<Vec<_>>>()?;
        let samples = dataset
            .grasps
            .iter()
            .map(|g| {
                let (centered, _) = center_vertices(&g.vertices);
                Ok(PreparedSample {
                    object: g.object,
                    params: g.params.to_vec(),
                    vertices: g.vertices.clone(),
                    centered,
                    gt_contact: contact_map(&g.vertices, &dataset.objects[g.object].cloud, tau)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { objects, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Epoch means of every loss term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub learning_rate: f64,
    pub total: f64,
    pub reconstruction: f64,
    pub posture: f64,
    pub position: f64,
    pub vertices: f64,
    pub codebook: f64,
    pub contact_map: f64,
    pub contact: f64,
    pub penetration: f64,
    pub grad_norm: f64,
}

const POINTS_STREAM: u64 = 1 << 32;
const SHUFFLE_STREAM: u64 = 2 << 32;

#[derive(Debug, Serialize, Deserialize)]
struct TrainState {
    epoch: usize,
    seed: u64,
    history: Vec<EpochStats>,
}

pub struct Trainer {
    model: GraspModel,
    opt: Adam,
    cfg: TrainConfig,
    weights: LossWeights,
    seed: u64,
    epoch: usize,
    history: Vec<EpochStats>,
}

impl Trainer {
    pub fn new(model: GraspModel, cfg: &TrainConfig, weights: &LossWeights, seed: u64) -> Result<Self> {
        let vars = model.store().vars().iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let opt = Adam::new(vars, cfg.learning_rate_at(0), cfg.adam)?;
        Ok(Self { model, opt, cfg: cfg.clone(), weights: *weights, seed, epoch: 0, history: Vec::new() })
    }

    pub fn model(&self) -> &GraspModel {
        &self.model
    }

    pub fn into_model(self) -> GraspModel {
        self.model
    }

    /// Completed epochs.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn history(&self) -> &[EpochStats] {
        &self.history
    }

    fn cloud_for(&self, data: &TrainingData, sample: usize, epoch: usize) -> Vec<Vec3> {
        let cloud = &data.objects[data.samples[sample].object].cloud;
        let n = self.cfg.train_points;
        if n == 0 || n >= cloud.len() {
            return cloud.clone();
        }
        let stream = POINTS_STREAM + (epoch as u64) * data.len() as u64 + sample as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, stream));
        let mut idx = sample_indices(&mut rng, cloud.len(), n);
        idx.sort_unstable();
        idx.into_iter().map(|i| cloud[i]).collect()
    }

    fn batch_tensors(&self, data: &TrainingData, batch: &[usize], epoch: usize) -> Result<[Tensor; 4]> {
        let dtype = self.model.store().dtype();
        let dev = self.model.store().device().clone();
        let clouds: Vec<Vec<Vec3>> = batch.iter().map(|&i| self.cloud_for(data, i, epoch)).collect();
        let n = clouds[0].len();
        if clouds.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidInput("object clouds in a batch must have equal size".into()));
        }
        let v = data.samples[batch[0]].vertices.len();
        let flat = |f: &dyn Fn(usize) -> Vec<f64>| -> Vec<f64> { batch.iter().flat_map(|&i| f(i)).collect() };
        let clouds = Tensor::from_vec(clouds.into_iter().flatten().flatten().collect::<Vec<_>>(), (batch.len(), n, 3), &dev)?
            .to_dtype(dtype)?;
        let centered = Tensor::from_vec(
            flat(&|i| data.samples[i].centered.iter().flatten().copied().collect()),
            (batch.len(), v, 3),
            &dev,
        )?
        .to_dtype(dtype)?;
        let params =
            Tensor::from_vec(flat(&|i| data.samples[i].params.clone()), (batch.len(), PARAM_DIM), &dev)?.to_dtype(dtype)?;
        let vertices = Tensor::from_vec(
            flat(&|i| data.samples[i].vertices.iter().flatten().copied().collect()),
            (batch.len(), v, 3),
            &dev,
        )?
        .to_dtype(dtype)?;
        Ok([clouds, centered, params, vertices])
    }

    /// Loss graph and scalar components for one batch.
    pub fn batch_loss(&mut self, data: &TrainingData, batch: &[usize], epoch: usize) -> Result<(Tensor, EpochStats)> {
        let [clouds, centered, params, vertices] = self.batch_tensors(data, batch, epoch)?;
        let out = self.model.forward(&clouds, &centered)?;
        let w = self.weights;
        let rec = reconstruction_loss_batch(&params, &out.decoded.posture, &out.decoded.position, &vertices, self.model.layer(), &w)?;

        let mut z: Vec<Tensor> = out.z_parts.clone();
        z.push(out.z_type.clone());
        let mut q: Vec<Tensor> = out.q_parts.clone();
        q.push(out.q_type.clone());
        let l_e = commitment_loss(&z, &q, w.beta)?.affine(w.lambda_e, 0.0)?;

        let b = batch.len() as f64;
        let candidates = &self.model.template().contact_candidates;
        let rows: Vec<Vec<Vec3>> = (0..batch.len())
            .map(|row| tensor_points(&rec.pred_vertices.get(row)?))
            .collect::<Result<_>>()?;
        let tau = self.cfg.tau;
        let pairs = batch
            .par_iter()
            .zip(&rows)
            .map(|(&i, pts)| {
                let s = &data.samples[i];
                let obj = &data.objects[s.object];
                let sets = compute_contact_sets(pts, &s.gt_contact, &obj.cloud, &obj.solid, candidates, tau)?;
                Ok((
                    contact_map_consistency(&sets),
                    contact_pairs(pts, &sets, &obj.cloud),
                    penetration_pairs(pts, &sets, &obj.grid),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut l_c: Option<Tensor> = None;
        let mut l_p: Option<Tensor> = None;
        let mut l_m = 0.0;
        for (row, (m, contact, penetration)) in pairs.iter().enumerate() {
            let pred = rec.pred_vertices.get(row)?;
            l_m += m;
            let c = pair_distance_sum(&pred, contact, false)?;
            let p = pair_distance_sum(&pred, penetration, true)?;
            l_c = Some(match l_c {
                Some(t) => t.add(&c)?,
                None => c,
            });
            l_p = Some(match l_p {
                Some(t) => t.add(&p)?,
                None => p,
            });
        }
        let l_c = l_c.expect("non-empty batch").affine(1.0 / b, 0.0)?;
        let l_p = l_p.expect("non-empty batch").affine(1.0 / b, 0.0)?;
        l_m /= b;

        let scalar = |t: &Tensor| -> Result<f64> { Ok(t.to_dtype(DType::F64)?.to_scalar::<f64>()?) };
        let components = LossComponents {
            reconstruction: scalar(&rec.total)?,
            codebook: scalar(&l_e)?,
            contact_map: l_m,
            contact: scalar(&l_c)?,
            penetration: scalar(&l_p)?,
        };
        let total_value = total_loss(&components, &w)?;
        let total = rec
            .total
            .add(&l_e)?
            .add(&l_c.affine(w.lambda_c, 0.0)?)?
            .add(&l_p.affine(w.lambda_p, 0.0)?)?
            .affine(1.0, w.lambda_m * l_m)?;

        for (book, idx) in self.model.books_mut().zip(std::iter::once(&out.object_indices).chain(&out.part_indices)) {
            book.record(idx);
        }
        let stats = EpochStats {
            epoch,
            learning_rate: self.opt.learning_rate(),
            total: total_value,
            reconstruction: components.reconstruction,
            posture: scalar(&rec.posture)?,
            position: scalar(&rec.position)?,
            vertices: scalar(&rec.vertices)?,
            codebook: components.codebook,
            contact_map: l_m,
            contact: components.contact,
            penetration: components.penetration,
            grad_norm: 0.0,
        };
        Ok((total, stats))
    }

    /// Sets every codebook to encoder outputs of the training data.
    pub fn init_codebooks(&mut self, data: &TrainingData) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, 7));
        let mut object_feats = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        let mut part_feats: Vec<Vec<Vec<f64>>> = vec![Vec::new(); self.model.num_parts()];
        let all: Vec<usize> = (0..data.len()).collect();
        for chunk in all.chunks(self.cfg.batch_size) {
            let [clouds, centered, _, _] = self.batch_tensors(data, chunk, 0)?;
            let (z_type, _) = self.model.encode_objects(&clouds)?;
            let z_type = z_type.to_dtype(DType::F64)?.to_vec2::<f64>()?;
            for (row, &i) in chunk.iter().enumerate() {
                if seen.insert(data.samples[i].object) {
                    object_feats.push(z_type[row].clone());
                }
            }
            for (feats, z) in part_feats.iter_mut().zip(self.model.encode_hands(&centered)?) {
                feats.extend(z.to_dtype(DType::F64)?.to_vec2::<f64>()?);
            }
        }
        let mut books = self.model.books_mut();
        books.next().expect("object book").init_from_features(&object_feats, &mut rng)?;
        for (book, feats) in books.zip(&part_feats) {
            book.init_from_features(feats, &mut rng)?;
        }
        Ok(())
    }

    /// Trains one epoch and returns its mean losses.
    pub fn run_epoch(&mut self, data: &TrainingData) -> Result<EpochStats> {
        if data.is_empty() {
            return Err(Error::Empty("training set"));
        }
        let epoch = self.epoch;
        if epoch == 0 && self.opt.steps() == 0 && self.cfg.data_init_codebooks {
            self.init_codebooks(data)?;
        }
        self.opt.set_learning_rate(self.cfg.learning_rate_at(epoch));
        for book in self.model.books_mut() {
            book.reset_usage();
        }
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(self.seed, SHUFFLE_STREAM + epoch as u64)));
        let mut sum = EpochStats::default();
        let mut batches = 0.0;
        for chunk in order.chunks(self.cfg.batch_size) {
            let (loss, stats) = self.batch_loss(data, chunk, epoch)?;
            let grad_norm = self.opt.step(&loss.backward()?)?;
            accumulate(&mut sum, &stats, grad_norm);
            batches += 1.0;
        }
        let mut mean = scale_stats(&sum, 1.0 / batches);
        mean.epoch = epoch;
        mean.learning_rate = self.opt.learning_rate();
        self.epoch += 1;
        self.history.push(mean);
        Ok(mean)
    }

    /// Writes model, optimizer moments and loop state to `dir`.
    pub fn save_checkpoint(&self, dir: &Path) -> Result<()> {
        self.model.save(dir)?;
        self.opt.save(&dir.join("optim.safetensors"))?;
        let state = TrainState { epoch: self.epoch, seed: self.seed, history: self.history.clone() };
        std::fs::write(dir.join("state.json"), serde_json::to_string_pretty(&state)?)?;
        Ok(())
    }

    /// Restores a checkpoint written by [`Trainer::save_checkpoint`].
    pub fn resume(dir: &Path, cfg: &TrainConfig, weights: &LossWeights) -> Result<Self> {
        let state_path = dir.join("state.json");
        if !state_path.exists() {
            return Err(Error::NotReady(format!("no training state in {}", dir.display())));
        }
        let state: TrainState = serde_json::from_str(&std::fs::read_to_string(state_path)?)?;
        let model = GraspModel::load(dir, DType::F32)?;
        let mut trainer = Self::new(model, cfg, weights, state.seed)?;
        trainer.opt.load(&dir.join("optim.safetensors"))?;
        trainer.epoch = state.epoch;
        trainer.history = state.history;
        Ok(trainer)
    }
}

fn sample_indices(rng: &mut ChaCha8Rng, len: usize, n: usize) -> Vec<usize> {
    sample(rng, len, n).into_vec()
}

fn accumulate(sum: &mut EpochStats, s: &EpochStats, grad_norm: f64) {
    sum.total += s.total;
    sum.reconstruction += s.reconstruction;
    sum.posture += s.posture;
    sum.position += s.position;
    sum.vertices += s.vertices;
    sum.codebook += s.codebook;
    sum.contact_map += s.contact_map;
    sum.contact += s.contact;
    sum.penetration += s.penetration;
    sum.grad_norm += grad_norm;
}

fn scale_stats(s: &EpochStats, k: f64) -> EpochStats {
    EpochStats {
        epoch: s.epoch,
        learning_rate: s.learning_rate,
        total: s.total * k,
        reconstruction: s.reconstruction * k,
        posture: s.posture * k,
        position: s.position * k,
        vertices: s.vertices * k,
        codebook: s.codebook * k,
        contact_map: s.contact_map * k,
        contact: s.contact * k,
        penetration: s.penetration * k,
        grad_norm: s.grad_norm * k,
    }
}

/// Codebook indices of every training pair under the frozen model.
pub fn collect_sequences(model: &GraspModel, data: &TrainingData) -> Result<Vec<IndexSequence>> {
    let dtype = model.store().dtype();
    let dev = model.store().device().clone();
    let mut object_index = vec![None; data.objects.len()];
    let mut out = Vec::with_capacity(data.len());
    for s in &data.samples {
        let object = match object_index[s.object] {
            Some(i) => i,
            None => {
                let cloud = crate::encoder::points_tensor(&data.objects[s.object].cloud, dtype, &dev)?;
                let (z, _) = model.encode_objects(&cloud)?;
                let (idx, _) = model.object_book().lookup(&z)?;
                object_index[s.object] = Some(idx[0]);
                idx[0]
            }
        };
        let hands = crate::encoder::points_tensor(&s.centered, dtype, &dev)?;
        let parts = model
            .encode_hands(&hands)?
            .iter()
            .zip(model.part_books())
            .map(|(z, b)| b.lookup(z).map(|(i, _)| i[0]))
            .collect::<Result<Vec<_>>>()?;
        out.push(IndexSequence { object, parts });
    }
    Ok(out)
}

/// Locations of a run's artifacts under its output directory.
#[derive(Debug, Clone)]
pub struct RunLayout {
    pub root: PathBuf,
}

impl RunLayout {
    pub fn new(root: &Path) -> Self {
        Self { root: root.to_path_buf() }
    }
    pub fn config(&self) -> PathBuf {
        self.root.join("config.toml")
    }
    pub fn checkpoint(&self) -> PathBuf {
        self.root.join("checkpoint")
    }
    pub fn prior(&self) -> PathBuf {
        self.root.join("prior")
    }
    pub fn loss_csv(&self) -> PathBuf {
        self.root.join("loss.csv")
    }
    pub fn prior_loss_csv(&self) -> PathBuf {
        self.root.join("prior_loss.csv")
    }
    pub fn usage_csv(&self) -> PathBuf {
        self.root.join("usage.csv")
    }
}

pub fn write_loss_csv(history: &[EpochStats], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    for s in history {
        w.serialize(s).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// `book,index,count` rows for every codebook.
pub fn write_usage_csv(model: &GraspModel, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(["book", "index", "count"]).map_err(|e| Error::Format(e.to_string()))?;
    let books = std::iter::once(model.object_book()).chain(model.part_books());
    for book in books {
        for (i, c) in book.usage().iter().enumerate() {
            w.write_record([book.name().to_string(), i.to_string(), c.to_string()])
                .map_err(|e| Error::Format(e.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub history: Vec<EpochStats>,
    pub prior_history: Vec<f64>,
    pub sequences: Vec<IndexSequence>,
}

/// Phase 1 (resuming from `out/checkpoint` when asked and present), then
/// phase 2 on the frozen codebooks. Writes every artifact under `out`.
pub fn run_training(cfg: &RunConfig, dataset: &Dataset, out: &Path, resume: bool) -> Result<TrainSummary> {
    cfg.validate()?;
    if dataset.template != cfg.model.template {
        return Err(Error::Config(format!(
            "dataset was generated with the {:?} template, model expects {:?}",
            dataset.template, cfg.model.template
        )));
    }
    let layout = RunLayout::new(out);
    std::fs::create_dir_all(out)?;
    std::fs::write(layout.config(), cfg.to_toml_string()?)?;
    let data = TrainingData::new(dataset, cfg.train.tau)?;

    let mut trainer = if resume && layout.checkpoint().join("state.json").exists() {
        Trainer::resume(&layout.checkpoint(), &cfg.train, &cfg.loss)?
    } else {
        let mut model_cfg = cfg.model.clone();
        model_cfg.seed = derive_seed(cfg.seed, 11);
        Trainer::new(GraspModel::new(&model_cfg, DType::F32)?, &cfg.train, &cfg.loss, cfg.seed)?
    };
    while trainer.epoch() < cfg.train.epochs {
        let s = trainer.run_epoch(&data)?;
        info!(
            "epoch {} lr {:.2e} total {:.4} L_v {:.5} L_c {:.5} L_p {:.6} L_m {:.3} L_E {:.5}",
            s.epoch, s.learning_rate, s.total, s.vertices, s.contact, s.penetration, s.contact_map, s.codebook
        );
        let done = trainer.epoch();
        if done % cfg.train.checkpoint_every.max(1) == 0 || done == cfg.train.epochs {
            trainer.save_checkpoint(&layout.checkpoint())?;
            write_loss_csv(trainer.history(), &layout.loss_csv())?;
        }
    }
    if !layout.checkpoint().join("state.json").exists() {
        trainer.save_checkpoint(&layout.checkpoint())?;
    }
    write_loss_csv(trainer.history(), &layout.loss_csv())?;
    write_usage_csv(trainer.model(), &layout.usage_csv())?;

    let history = trainer.history().to_vec();
    let model = trainer.into_model();
    let sequences = collect_sequences(&model, &data)?;
    let mut prior_cfg = cfg.prior.clone();
    prior_cfg.seed = derive_seed(cfg.seed, 13);
    let (prior, prior_history) = fit_prior(&sequences, &model.vocab(), &prior_cfg)?;
    prior.save(&layout.prior())?;
    let mut w = csv::Writer::from_writer(File::create(layout.prior_loss_csv())?);
    w.write_record(["epoch", "nll"]).map_err(|e| Error::Format(e.to_string()))?;
    for (i, nll) in prior_history.iter().enumerate() {
        w.write_record([i.to_string(), nll.to_string()]).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush()?;
    info!("prior NLL {:.4} -> {:.4}", prior_history.first().unwrap_or(&f64::NAN), prior_history.last().unwrap_or(&f64::NAN));
    Ok(TrainSummary { history, prior_history, sequences })
}

/// Loads the model and prior written by [`run_training`].
pub fn load_trained(out: &Path) -> Result<(GraspModel, PriorModel)> {
    let layout = RunLayout::new(out);
    let model = GraspModel::load(&layout.checkpoint(), DType::F32)?;
    let prior = PriorModel::load(&layout.prior())?;
    Ok((model, prior))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_corpus, DatagenConfig};

    fn small_run() -> (RunConfig, Dataset) {
        let mut cfg = RunConfig { seed: 3, ..Default::default() };
        cfg.datagen = DatagenConfig { objects: 2, grasps_per_object: 2, cloud_points: 256, seed: 3, ..Default::default() };
        cfg.model.codebook_size = 4;
        cfg.model.encoder.num_parts = 2;
        cfg.train.epochs = 2;
        cfg.train.batch_size = 2;
        cfg.train.train_points = 64;
        cfg.prior.epochs = 3;
        let data = generate_corpus(&cfg.datagen).unwrap();
        (cfg, data)
    }

    #[test]
    fn epoch_losses_are_finite_and_logged() {
        let (cfg, data) = small_run();
        let dir = tempfile::tempdir().unwrap();
        let summary = run_training(&cfg, &data, dir.path(), false).unwrap();
        assert_eq!(summary.history.len(), 2);
        assert!(summary.history.iter().all(|s| s.total.is_finite() && s.grad_norm > 0.0));
        assert_eq!(summary.sequences.len(), data.len());
        let layout = RunLayout::new(dir.path());
        for p in [layout.config(), layout.loss_csv(), layout.usage_csv(), layout.prior_loss_csv()] {
            assert!(p.exists(), "{}", p.display());
        }
        let (model, prior) = load_trained(dir.path()).unwrap();
        assert_eq!(model.vocab(), prior.vocab());
    }

    #[test]
    fn resume_reproduces_the_next_epoch() {
        let (cfg, data) = small_run();
        let prepared = TrainingData::new(&data, cfg.train.tau).unwrap();
        let fresh = || {
            let mut m = cfg.model.clone();
            m.seed = 5;
            Trainer::new(GraspModel::new(&m, DType::F32).unwrap(), &cfg.train, &cfg.loss, cfg.seed).unwrap()
        };
        let mut straight = fresh();
        straight.run_epoch(&prepared).unwrap();
        let second = straight.run_epoch(&prepared).unwrap();

        let mut first = fresh();
        first.run_epoch(&prepared).unwrap();
        let dir = tempfile::tempdir().unwrap();
        first.save_checkpoint(dir.path()).unwrap();
        let mut resumed = Trainer::resume(dir.path(), &cfg.train, &cfg.loss).unwrap();
        assert_eq!(resumed.epoch(), 1);
        let again = resumed.run_epoch(&prepared).unwrap();
        assert_eq!(again, second);
    }

    #[test]
    fn template_mismatch_is_a_config_error() {
        let (mut cfg, data) = small_run();
        cfg.model.template = crate::datagen::TemplateKind::Toy;
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(run_training(&cfg, &data, dir.path(), false), Err(Error::Config(_))));
    }
}
