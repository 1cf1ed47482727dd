use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encoding::PosEncoding;
use super::mlp::{parameter_count, Activation, Mlp, Trace};
use crate::geometry::Direction;

/// Network shapes. Layer counts are numbers of linear layers, so
/// `uodf_layers = 10` means nine hidden layers of `width` units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Architecture {
    pub width: usize,
    pub uodf_layers: usize,
    pub mask_width: usize,
    pub mask_layers: usize,
    pub frequencies: usize,
    pub softplus_beta: f64,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture {
            width: 256,
            uodf_layers: 10,
            mask_width: 256,
            mask_layers: 3,
            frequencies: 10,
            softplus_beta: 100.0,
        }
    }
}

impl Architecture {
    pub fn encoding(&self) -> PosEncoding {
        PosEncoding {
            frequencies: self.frequencies,
        }
    }

    /// Encoded ray plus the 3D point.
    pub fn uodf_input_dim(&self) -> usize {
        self.encoding().dim() + 3
    }

    pub fn uodf_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.uodf_input_dim()];
        s.extend(std::iter::repeat_n(self.width, self.uodf_layers - 1));
        s.push(1);
        s
    }

    pub fn mask_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.encoding().dim()];
        s.extend(std::iter::repeat_n(self.mask_width, self.mask_layers - 1));
        s.push(1);
        s
    }

    pub fn parameter_count(&self) -> usize {
        parameter_count(&self.uodf_sizes()) + parameter_count(&self.mask_sizes())
    }

    pub fn hidden_activation(&self) -> Activation {
        Activation::Softplus {
            beta: self.softplus_beta,
        }
    }
}

/// A query on a lattice ray: ray index within the training field plus the
/// plane coordinates and the axis coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayQuery {
    pub ray: u32,
    pub u: f64,
    pub v: f64,
    pub s: f64,
}

/// Anything that predicts a UODF value and its derivative along the ray.
pub trait UodfModel: Sync {
    fn eval(&self, queries: &[RayQuery]) -> Vec<(f64, f64)>;
}

/// UODF regressor and silhouette classifier for one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub direction: Direction,
    pub arch: Architecture,
    pub uodf: Mlp,
    pub mask: Mlp,
    pub seed: u64,
    /// Completed training epochs.
    pub epoch: usize,
}

impl MlpModel {
    pub fn new(direction: Direction, arch: Architecture, seed: u64) -> MlpModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hidden = arch.hidden_activation();
        let uodf = Mlp::new(&arch.uodf_sizes(), hidden, hidden, &mut rng);
        let mask = Mlp::new(&arch.mask_sizes(), hidden, Activation::Identity, &mut rng);
        MlpModel {
            direction,
            arch,
            uodf,
            mask,
            seed,
            epoch: 0,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.uodf.params().len() + self.mask.params().len()
    }

    fn tangent_index(&self) -> usize {
        self.arch.encoding().dim() + self.direction.axis()
    }

    /// Input rows and their derivative along the ray axis.
    pub fn uodf_inputs(&self, queries: &[RayQuery]) -> (Array2<f64>, Array2<f64>) {
        let enc = self.arch.encoding();
        let dim = self.arch.uodf_input_dim();
        let mut x = Array2::zeros((queries.len(), dim));
        let mut t = Array2::zeros((queries.len(), dim));
        let ti = self.tangent_index();
        for (i, q) in queries.iter().enumerate() {
            let mut row = x.row_mut(i);
            let row = row.as_slice_mut().unwrap();
            enc.encode_into(q.u, q.v, &mut row[..dim - 3]);
            let p = self.direction.compose(q.u, q.v, q.s);
            row[dim - 3..].copy_from_slice(&[p.x, p.y, p.z]);
            t[[i, ti]] = 1.0;
        }
        (x, t)
    }

    pub fn mask_inputs(&self, rays: &[(f64, f64)]) -> Array2<f64> {
        let enc = self.arch.encoding();
        let mut x = Array2::zeros((rays.len(), enc.dim()));
        for (i, &(u, v)) in rays.iter().enumerate() {
            enc.encode_into(u, v, x.row_mut(i).as_slice_mut().unwrap());
        }
        x
    }

    pub fn uodf_trace(&self, queries: &[RayQuery]) -> Trace {
        let (x, t) = self.uodf_inputs(queries);
        self.uodf.forward(x.view(), Some(t.view()))
    }

    /// Predicted distance and its derivative along the axis for each query.
    pub fn forward_uodf_batch(&self, queries: &[RayQuery]) -> Vec<(f64, f64)> {
        let trace = self.uodf_trace(queries);
        let dy = trace.output_tangent().unwrap();
        trace.output().iter().zip(dy.iter()).map(|(&y, &d)| (y, d)).collect()
    }

    pub fn forward_uodf(&self, u: f64, v: f64, s: f64) -> (f64, f64) {
        self.forward_uodf_batch(&[RayQuery { ray: 0, u, v, s }])[0]
    }

    pub fn mask_logits(&self, rays: &[(f64, f64)]) -> Vec<f64> {
        let x = self.mask_inputs(rays);
        self.mask.forward(x.view(), None).output().to_vec()
    }

    pub fn mask_probability(&self, u: f64, v: f64) -> f64 {
        let z = self.mask_logits(&[(u, v)])[0];
        1.0 / (1.0 + (-z).exp())
    }
}

impl UodfModel for MlpModel {
    fn eval(&self, queries: &[RayQuery]) -> Vec<(f64, f64)> {
        self.forward_uodf_batch(queries)
    }
}
