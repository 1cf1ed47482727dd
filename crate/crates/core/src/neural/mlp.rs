//! Dense network with exact first derivatives along one input direction.
//!
//! The forward pass optionally carries a tangent (forward-mode derivative)
//! next to the activations. The backward pass differentiates both the output
//! and its tangent with respect to every parameter, which is what a loss on
//! the input-derivative needs.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    /// `ln(1 + exp(beta z)) / beta`
    Softplus { beta: f64 },
    Identity,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub fn value(self, z: f64) -> f64 {
        match self {
            Activation::Softplus { beta } => {
                let x = beta * z;
                (x.max(0.0) + (-x.abs()).exp().ln_1p()) / beta
            }
            Activation::Identity => z,
        }
    }

    pub fn d1(self, z: f64) -> f64 {
        match self {
            Activation::Softplus { beta } => sigmoid(beta * z),
            Activation::Identity => 1.0,
        }
    }

    pub fn d2(self, z: f64) -> f64 {
        match self {
            Activation::Softplus { beta } => {
                let s = sigmoid(beta * z);
                beta * s * (1.0 - s)
            }
            Activation::Identity => 0.0,
        }
    }
}

/// Fully connected network; all parameters live in one flat vector, layer by
/// layer, each layer as a row-major `out x in` weight matrix then its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
    hidden: Activation,
    output: Activation,
}

/// Intermediate values of a batched forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Input of each layer, then the network output.
    acts: Vec<Array2<f64>>,
    tans: Option<Vec<Array2<f64>>>,
    pre: Vec<Array2<f64>>,
    pre_tans: Option<Vec<Array2<f64>>>,
}

impl Trace {
    /// First output column.
    pub fn output(&self) -> ArrayView1<'_, f64> {
        self.acts.last().unwrap().column(0)
    }

    pub fn output_tangent(&self) -> Option<ArrayView1<'_, f64>> {
        self.tans.as_ref().map(|t| t.last().unwrap().column(0))
    }
}

pub fn parameter_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// Weights and biases uniform in `+-1/sqrt(fan_in)`.
    pub fn new(sizes: &[usize], hidden: Activation, output: Activation, rng: &mut dyn RngCore) -> Mlp {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&s| s > 0), "invalid layer sizes {sizes:?}");
        let mut params = Vec::with_capacity(parameter_count(sizes));
        for w in sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            params.extend((0..w[0] * w[1] + w[1]).map(|_| rng.random_range(-bound..bound)));
        }
        Mlp {
            sizes: sizes.to_vec(),
            params,
            hidden,
            output,
        }
    }

    pub fn from_params(sizes: &[usize], hidden: Activation, output: Activation, params: Vec<f64>) -> Option<Mlp> {
        (sizes.len() >= 2 && params.len() == parameter_count(sizes)).then(|| Mlp {
            sizes: sizes.to_vec(),
            params,
            hidden,
            output,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn hidden(&self) -> Activation {
        self.hidden
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    fn offset(&self, layer: usize) -> usize {
        parameter_count(&self.sizes[..=layer])
    }

    fn layer(&self, l: usize) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
        let off = self.offset(l);
        let w = ArrayView2::from_shape((n_out, n_in), &self.params[off..off + n_out * n_in]).unwrap();
        let b = ArrayView1::from(&self.params[off + n_out * n_in..off + n_out * n_in + n_out]);
        (w, b)
    }

    fn activation(&self, l: usize) -> Activation {
        if l + 1 == self.n_layers() {
            self.output
        } else {
            self.hidden
        }
    }

    /// Batched forward pass; rows of `x` are samples. `tangent`, if given,
    /// is the derivative of `x` along the direction of interest.
    pub fn forward(&self, x: ArrayView2<'_, f64>, tangent: Option<ArrayView2<'_, f64>>) -> Trace {
        assert_eq!(x.ncols(), self.sizes[0]);
        let mut acts = vec![x.to_owned()];
        let mut tans = tangent.map(|t| vec![t.to_owned()]);
        let mut pre = Vec::with_capacity(self.n_layers());
        let mut pre_tans = tans.as_ref().map(|_| Vec::with_capacity(self.n_layers()));
        for l in 0..self.n_layers() {
            let (w, b) = self.layer(l);
            let act = self.activation(l);
            let z = acts[l].dot(&w.t()) + b;
            acts.push(z.mapv(|v| act.value(v)));
            if let (Some(tans), Some(pre_tans)) = (tans.as_mut(), pre_tans.as_mut()) {
                let zt = tans[l].dot(&w.t());
                let mut ht = zt.clone();
                Zip::from(&mut ht).and(&z).for_each(|h, &zv| *h *= act.d1(zv));
                tans.push(ht);
                pre_tans.push(zt);
            }
            pre.push(z);
        }
        Trace {
            acts,
            tans,
            pre,
            pre_tans,
        }
    }

    /// Parameter gradient of `sum_i gy[i] * y[i] + gyt[i] * dy[i]` where `y`
    /// is the output column and `dy` its tangent.
    pub fn backward(&self, trace: &Trace, gy: ArrayView1<'_, f64>, gyt: Option<ArrayView1<'_, f64>>) -> Vec<f64> {
        let mut grads = vec![0.0; self.params.len()];
        let batch = gy.len();
        let mut gh = gy.to_owned().into_shape_with_order((batch, 1)).unwrap();
        let mut ght = gyt.map(|g| g.to_owned().into_shape_with_order((batch, 1)).unwrap());
        assert!(ght.is_none() || trace.tans.is_some(), "tangent gradient needs a tangent trace");
        for l in (0..self.n_layers()).rev() {
            let (w, _) = self.layer(l);
            let act = self.activation(l);
            let z = &trace.pre[l];
            let mut gz = gh;
            Zip::from(&mut gz).and(z).for_each(|g, &zv| *g *= act.d1(zv));
            let mut gzt: Option<Array2<f64>> = None;
            if let Some(ght) = ght.as_ref() {
                let zt = &trace.pre_tans.as_ref().unwrap()[l];
                Zip::from(&mut gz)
                    .and(ght)
                    .and(z)
                    .and(zt)
                    .for_each(|g, &gt, &zv, &ztv| *g += gt * act.d2(zv) * ztv);
                let mut t = ght.clone();
                Zip::from(&mut t).and(z).for_each(|g, &zv| *g *= act.d1(zv));
                gzt = Some(t);
            }
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = self.offset(l);
            let (gw_slice, rest) = grads[off..].split_at_mut(n_out * n_in);
            let mut gw = ndarray::ArrayViewMut2::from_shape((n_out, n_in), gw_slice).unwrap();
            gw.assign(&gz.t().dot(&trace.acts[l]));
            if let Some(gzt) = gzt.as_ref() {
                gw += &gzt.t().dot(&trace.tans.as_ref().unwrap()[l]);
            }
            let gb: Array1<f64> = gz.sum_axis(Axis(0));
            rest[..n_out].copy_from_slice(gb.as_slice().unwrap());
            if l > 0 {
                ght = gzt.map(|g| g.dot(&w));
                gh = gz.dot(&w);
            } else {
                gh = gz;
            }
        }
        grads
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn softplus_derivatives_match_differences() {
        let a = Activation::Softplus { beta: 100.0 };
        for z in [-0.05, -0.003, 0.0, 0.004, 0.03] {
            let h = 1e-7;
            let fd1 = (a.value(z + h) - a.value(z - h)) / (2.0 * h);
            let fd2 = (a.d1(z + h) - a.d1(z - h)) / (2.0 * h);
            assert!((fd1 - a.d1(z)).abs() < 1e-6);
            assert!((fd2 - a.d2(z)).abs() < 1e-4 * a.d2(z).max(1.0));
        }
        assert!(a.value(-10.0) >= 0.0 && a.value(10.0) == 10.0);
    }

    #[test]
    fn layer_offsets_cover_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Mlp::new(&[3, 5, 2], Activation::Identity, Activation::Identity, &mut rng);
        assert_eq!(m.params().len(), 3 * 5 + 5 + 5 * 2 + 2);
        assert_eq!(m.offset(1), 20);
    }

    #[test]
    fn identity_network_is_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = Mlp::new(&[2, 4, 1], Activation::Identity, Activation::Identity, &mut rng);
        let x = Array2::from_shape_vec((3, 2), vec![0.0, 0.0, 1.0, 0.0, 2.0, 0.0]).unwrap();
        let t = m.forward(x.view(), None);
        let y = t.output();
        assert!(((y[2] - y[1]) - (y[1] - y[0])).abs() < 1e-14);
    }
}
