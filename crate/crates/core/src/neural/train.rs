use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::loss::{point_loss, sign_of, LossTerms, LossWeights};
use super::model::{Architecture, MlpModel, RayQuery};
use crate::field::{DirectionalField, FieldSource, GridSpec, RayProfile};
use crate::geometry::Direction;

/// Samples per parallel work item. Fixed so that gradient sums are
/// reduced in the same order whatever the thread count.
const CHUNK: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lr_halve_every: usize,
    /// Corners per axis of the training ray lattice.
    pub lattice: usize,
    pub points_per_ray: usize,
    pub resample_every: usize,
    pub loss: LossWeights,
    pub mask_threshold: f64,
    pub seed: u64,
    pub arch: Architecture,
    /// Restrict training to the rays whose second plane coordinate equals
    /// this value (a 2D slice of the lattice).
    pub slice: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 1024,
            learning_rate: 1e-3,
            lr_halve_every: 20,
            lattice: 257,
            points_per_ray: 256,
            resample_every: 10,
            loss: LossWeights::default(),
            mask_threshold: 0.5,
            seed: 0,
            arch: Architecture::default(),
            slice: None,
        }
    }
}

impl TrainConfig {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |what: &str| Err(TrainError::InvalidConfig(what.to_string()));
        let a = &self.arch;
        if self.batch_size == 0 || self.points_per_ray == 0 || self.resample_every == 0 || self.lr_halve_every == 0 {
            return bad("batch_size, points_per_ray, resample_every and lr_halve_every must be positive");
        }
        if self.lattice < 2 {
            return bad("lattice must have at least 2 corners per axis");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        let w = &self.loss;
        if !(w.value > 0.0 && w.derivative > 0.0 && w.prediction > 0.0) {
            return bad("loss weights must be positive");
        }
        if !(self.mask_threshold > 0.0 && self.mask_threshold < 1.0) {
            return bad("mask_threshold must lie in (0, 1)");
        }
        if a.width == 0 || a.mask_width == 0 || a.uodf_layers < 2 || a.mask_layers < 2 || !(a.softplus_beta > 0.0) {
            return bad("architecture needs positive widths, beta, and at least 2 linear layers per network");
        }
        Ok(())
    }

    /// Step size during `epoch` (0-based).
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * 0.5f64.powi((epoch / self.lr_halve_every) as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub learning_rate: f64,
    pub terms: LossTerms,
    pub mask_bce: f64,
    pub best_total: f64,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("training needs a ground-truth field with crossing lists")]
    NotGroundTruth,
    #[error("field lattice has {field} corners per axis but the configuration asks for {config}")]
    LatticeMismatch { field: usize, config: usize },
    #[error("training diverged in epoch {epoch} (non-finite loss)")]
    Diverged {
        epoch: usize,
        /// Model after the last finite epoch.
        last_good: Box<MlpModel>,
        log: Vec<EpochLog>,
    },
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    pub log: Vec<EpochLog>,
}

/// Adam with the usual moment decay rates.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(n: usize) -> Adam {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = Self::B1 * *m + (1.0 - Self::B1) * g;
            *v = Self::B2 * *v + (1.0 - Self::B2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

/// Ray indices of `grid` selected by `slice`.
pub fn selected_rays(grid: &GridSpec, slice: Option<f64>) -> Vec<usize> {
    let r = grid.resolution();
    (0..grid.ray_count())
        .filter(|&ray| slice.is_none_or(|v| grid.coord(ray / r) == v))
        .collect()
}

fn sample_points(field: &DirectionalField, rays: &[usize], cfg: &TrainConfig, round: u64) -> Vec<RayQuery> {
    let grid = field.grid();
    rays.par_iter()
        .filter(|&&ray| field.rays()[ray].is_some())
        .flat_map_iter(|&ray| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream((round << 32) | ray as u64);
            let (iu, iv) = field.ray_plane_indices(ray);
            let (u, v) = (grid.coord(iu), grid.coord(iv));
            (0..cfg.points_per_ray)
                .map(move |_| RayQuery {
                    ray: ray as u32,
                    u,
                    v,
                    s: rng.random_range(-1.0..=1.0),
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

struct ChunkResult {
    grads: Vec<f64>,
    sums: [f64; 3],
    count: usize,
}

fn uodf_chunk(model: &MlpModel, field: &DirectionalField, chunk: &[RayQuery], w: &LossWeights) -> ChunkResult {
    let trace = model.uodf_trace(chunk);
    let y = trace.output();
    let dy = trace.output_tangent().unwrap();
    let mut gy = Array1::zeros(chunk.len());
    let mut gdy = Array1::zeros(chunk.len());
    let mut sums = [0.0; 3];
    for (i, q) in chunk.iter().enumerate() {
        let hits = &field.rays()[q.ray as usize].as_ref().expect("training rays are defined").hits;
        let l = point_loss(y[i], dy[i], q.s, hits);
        sums[0] += l.value;
        sums[1] += l.derivative;
        sums[2] += l.prediction;
        gy[i] = w.value * l.d_value_dy + w.prediction * l.d_prediction_dy;
        gdy[i] = w.derivative * l.d_derivative_ddy;
    }
    ChunkResult {
        grads: model.uodf.backward(&trace, gy.view(), Some(gdy.view())),
        sums,
        count: chunk.len(),
    }
}

fn mask_chunk(model: &MlpModel, rays: &[(f64, f64, f64)]) -> ChunkResult {
    let uv: Vec<(f64, f64)> = rays.iter().map(|&(u, v, _)| (u, v)).collect();
    let x = model.mask_inputs(&uv);
    let trace = model.mask.forward(x.view(), None);
    let z = trace.output();
    let mut gz = Array1::zeros(rays.len());
    let mut bce = 0.0;
    for (i, &(_, _, label)) in rays.iter().enumerate() {
        let zi = z[i];
        bce += zi.max(0.0) - zi * label + (-zi.abs()).exp().ln_1p();
        gz[i] = 1.0 / (1.0 + (-zi).exp()) - label;
    }
    ChunkResult {
        grads: model.mask.backward(&trace, gz.view(), None),
        sums: [bce, 0.0, 0.0],
        count: rays.len(),
    }
}

/// Sum chunk results in chunk order.
fn reduce(results: Vec<ChunkResult>, n_params: usize) -> ChunkResult {
    let mut total = ChunkResult {
        grads: vec![0.0; n_params],
        sums: [0.0; 3],
        count: 0,
    };
    for r in results {
        for (a, b) in total.grads.iter_mut().zip(&r.grads) {
            *a += b;
        }
        for k in 0..3 {
            total.sums[k] += r.sums[k];
        }
        total.count += r.count;
    }
    total
}

/// Fit the UODF and mask networks of `field.direction()` to an exact field.
///
/// Each epoch walks the current point set in shuffled batches; every UODF
/// step is paired with a mask step on randomly drawn lattice rays.
pub fn train_direction(field: &DirectionalField, cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if field.source() != FieldSource::GroundTruth {
        return Err(TrainError::NotGroundTruth);
    }
    let grid = field.grid();
    if grid.resolution() != cfg.lattice {
        return Err(TrainError::LatticeMismatch {
            field: grid.resolution(),
            config: cfg.lattice,
        });
    }
    let mut model = MlpModel::new(field.direction(), cfg.arch, cfg.seed);
    let mut log = Vec::with_capacity(cfg.epochs);
    let rays = selected_rays(&grid, cfg.slice);
    let mask_rays: Vec<(f64, f64, f64)> = rays
        .iter()
        .map(|&ray| {
            let (iu, iv) = field.ray_plane_indices(ray);
            (grid.coord(iu), grid.coord(iv), field.rays()[ray].is_some() as u8 as f64)
        })
        .collect();
    let mut uodf_opt = Adam::new(model.uodf.params().len());
    let mut mask_opt = Adam::new(model.mask.params().len());
    let mut mask_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    mask_rng.set_stream(u64::MAX);
    let mut points = Vec::new();
    let mut best = f64::INFINITY;
    let mut last_good = model.clone();

    for epoch in 0..cfg.epochs {
        if epoch % cfg.resample_every == 0 {
            points = sample_points(field, &rays, cfg, (epoch / cfg.resample_every) as u64);
        }
        let mut order_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        order_rng.set_stream((1 << 62) | epoch as u64);
        points.shuffle(&mut order_rng);
        let lr = cfg.learning_rate_at(epoch);
        let mut sums = [0.0; 3];
        let mut bce = 0.0;
        let mut seen = 0usize;
        let mut mask_seen = 0usize;
        for batch in points.chunks(cfg.batch_size) {
            let parts: Vec<ChunkResult> = batch
                .par_chunks(CHUNK)
                .map(|c| uodf_chunk(&model, field, c, &cfg.loss))
                .collect();
            let mut r = reduce(parts, model.uodf.params().len());
            let inv = 1.0 / r.count as f64;
            r.grads.iter_mut().for_each(|g| *g *= inv);
            uodf_opt.step(model.uodf.params_mut(), &r.grads, lr);
            for (s, v) in sums.iter_mut().zip(r.sums) {
                *s += v;
            }
            seen += r.count;

            if !mask_rays.is_empty() {
                let draw: Vec<(f64, f64, f64)> = (0..batch.len())
                    .map(|_| mask_rays[mask_rng.random_range(0..mask_rays.len())])
                    .collect();
                let parts: Vec<ChunkResult> = draw.par_chunks(CHUNK).map(|c| mask_chunk(&model, c)).collect();
                let mut m = reduce(parts, model.mask.params().len());
                let inv = 1.0 / m.count as f64;
                m.grads.iter_mut().for_each(|g| *g *= inv);
                mask_opt.step(model.mask.params_mut(), &m.grads, lr);
                bce += m.sums[0];
                mask_seen += m.count;
            }
        }
        let n = seen.max(1) as f64;
        let terms = cfg.loss.combine(sums[0] / n, sums[1] / n, sums[2] / n);
        let mask_bce = bce / mask_seen.max(1) as f64;
        let finite = terms.total.is_finite() && mask_bce.is_finite() && model.uodf.params().iter().all(|p| p.is_finite());
        if !finite {
            return Err(TrainError::Diverged {
                epoch,
                last_good: Box::new(last_good),
                log,
            });
        }
        best = best.min(terms.total);
        model.epoch = epoch + 1;
        log::info!(
            "{} epoch {epoch}: lr {lr:.2e} L_all {:.4} (value {:.5}, der {:.4}, pred {:.5}) mask bce {:.4}",
            model.direction,
            terms.total,
            terms.value,
            terms.derivative,
            terms.prediction,
            mask_bce
        );
        log.push(EpochLog {
            epoch,
            learning_rate: lr,
            terms,
            mask_bce,
            best_total: best,
        });
        last_good = model.clone();
    }
    Ok(TrainOutcome { model, log })
}

/// Sample a trained model on `grid`: rays whose mask probability exceeds
/// `threshold` get predicted distances, with signs from the predicted
/// derivative (`+1` at zero).
pub fn predict_field(model: &MlpModel, grid: &GridSpec, threshold: f64, slice: Option<f64>) -> DirectionalField {
    let r = grid.resolution();
    let direction: Direction = model.direction;
    let selected = selected_rays(grid, slice);
    let mut keep = vec![false; grid.ray_count()];
    for &ray in &selected {
        keep[ray] = true;
    }
    let logit_threshold = (threshold / (1.0 - threshold)).ln();
    let rays = (0..grid.ray_count())
        .into_par_iter()
        .map(|ray| {
            if !keep[ray] {
                return None;
            }
            let (u, v) = (grid.coord(ray % r), grid.coord(ray / r));
            if model.mask_logits(&[(u, v)])[0] <= logit_threshold {
                return None;
            }
            let queries: Vec<RayQuery> = (0..r)
                .map(|i| RayQuery {
                    ray: ray as u32,
                    u,
                    v,
                    s: grid.coord(i),
                })
                .collect();
            let preds = model.forward_uodf_batch(&queries);
            Some(RayProfile {
                hits: Vec::new(),
                distances: preds.iter().map(|p| p.0).collect(),
                signs: preds.iter().map(|p| sign_of(p.1) as i8).collect(),
            })
        })
        .collect();
    DirectionalField::new(direction, *grid, FieldSource::Predicted, rays)
}
