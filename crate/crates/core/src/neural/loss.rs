use serde::{Deserialize, Serialize};

use super::model::{RayQuery, UodfModel};
use crate::field::{ray_distance, DirectionalField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub value: f64,
    pub derivative: f64,
    pub prediction: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            value: 3000.0,
            derivative: 50.0,
            prediction: 1000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossTerms {
    pub value: f64,
    pub derivative: f64,
    pub prediction: f64,
    pub total: f64,
}

impl LossWeights {
    pub fn combine(&self, value: f64, derivative: f64, prediction: f64) -> LossTerms {
        LossTerms {
            value,
            derivative,
            prediction,
            total: self.value * value + self.derivative * derivative + self.prediction * prediction,
        }
    }
}

/// `+1` for non-negative input, `-1` otherwise.
pub fn sign_of(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn sign_or_zero(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Unweighted loss of one prediction and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointLoss {
    pub value: f64,
    pub derivative: f64,
    pub prediction: f64,
    /// d(value + prediction terms)/dy, split by term.
    pub d_value_dy: f64,
    pub d_prediction_dy: f64,
    /// d(derivative term)/d(dy/ds).
    pub d_derivative_ddy: f64,
}

/// Loss of prediction `y` with axis derivative `dy` at coordinate `s` on a
/// ray with sorted crossings `hits` (non-empty).
///
/// The surface-point term evaluates the exact field at the predicted
/// crossing `s - sign(dy) * y`; its sign changes are ignored when
/// differentiating, as the sign is piecewise constant.
pub fn point_loss(y: f64, dy: f64, s: f64, hits: &[f64]) -> PointLoss {
    let (gt, _) = ray_distance(hits, s).expect("point on a defined ray");
    let sg = sign_of(dy);
    let q = s - sg * y;
    let (uq, slope) = ray_distance(hits, q).unwrap();
    PointLoss {
        value: (y - gt).abs(),
        derivative: (dy.abs() - 1.0).abs(),
        prediction: uq,
        d_value_dy: sign_or_zero(y - gt),
        d_prediction_dy: -sg * slope as f64,
        d_derivative_ddy: sign_or_zero(dy.abs() - 1.0) * sg,
    }
}

/// Batch loss with per-point gradients of the weighted total.
#[derive(Debug, Clone, PartialEq)]
pub struct LossEval {
    pub terms: LossTerms,
    /// `(dL/dy, dL/d(dy))` per query; zero for excluded ones.
    pub grads: Vec<(f64, f64)>,
    /// Queries on rays where the ground truth is undefined.
    pub excluded: usize,
}

pub fn loss_from_predictions(
    preds: &[(f64, f64)],
    queries: &[RayQuery],
    field: &DirectionalField,
    weights: &LossWeights,
) -> LossEval {
    assert_eq!(preds.len(), queries.len());
    let losses: Vec<Option<PointLoss>> = queries
        .iter()
        .zip(preds)
        .map(|(q, &(y, dy))| {
            field.rays()[q.ray as usize]
                .as_ref()
                .filter(|r| !r.hits.is_empty())
                .map(|r| point_loss(y, dy, q.s, &r.hits))
        })
        .collect();
    let n = losses.iter().flatten().count();
    let excluded = queries.len() - n;
    if excluded > 0 {
        log::debug!("{excluded} loss queries on undefined rays were skipped");
    }
    if n == 0 {
        return LossEval {
            terms: LossTerms::default(),
            grads: vec![(0.0, 0.0); queries.len()],
            excluded,
        };
    }
    let inv = 1.0 / n as f64;
    let (mut v, mut d, mut p) = (0.0, 0.0, 0.0);
    let grads = losses
        .iter()
        .map(|l| match l {
            None => (0.0, 0.0),
            Some(l) => {
                v += l.value;
                d += l.derivative;
                p += l.prediction;
                (
                    inv * (weights.value * l.d_value_dy + weights.prediction * l.d_prediction_dy),
                    inv * weights.derivative * l.d_derivative_ddy,
                )
            }
        })
        .collect();
    LossEval {
        terms: weights.combine(v * inv, d * inv, p * inv),
        grads,
        excluded,
    }
}

/// Loss of `model` on `queries` against the exact field.
pub fn loss_terms(model: &dyn UodfModel, queries: &[RayQuery], field: &DirectionalField, weights: &LossWeights) -> LossEval {
    loss_from_predictions(&model.eval(queries), queries, field, weights)
}

/// Exact field used as a model: distance and derivative sign from the
/// crossings of each query's ray.
pub struct GroundTruthOracle<'a>(pub &'a DirectionalField);

impl UodfModel for GroundTruthOracle<'_> {
    fn eval(&self, queries: &[RayQuery]) -> Vec<(f64, f64)> {
        queries
            .iter()
            .map(|q| {
                self.0.rays()[q.ray as usize]
                    .as_ref()
                    .and_then(|r| ray_distance(&r.hits, q.s))
                    .map_or((f64::NAN, f64::NAN), |(d, s)| (d, s as f64))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_sum() {
        let t = LossWeights::default().combine(0.01, 0.2, 0.005);
        assert!((t.total - 45.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction_has_zero_loss() {
        let hits = [-0.3, 0.4];
        for s in [-0.9, -0.3, 0.0, 0.2, 0.9] {
            let (d, sg) = ray_distance(&hits, s).unwrap();
            let l = point_loss(d, sg as f64, s, &hits);
            assert_eq!((l.value, l.derivative), (0.0, 0.0));
            // s - sign * d only rounds back to the crossing
            assert!(l.prediction < 1e-15);
        }
    }

    #[test]
    fn constant_output_has_unit_derivative_loss() {
        let l = point_loss(0.2, 0.0, 0.1, &[0.5]);
        assert_eq!(l.derivative, 1.0);
        // sign(0) = +1, so the predicted crossing is 0.1 - 0.2 = -0.1
        assert!((l.prediction - 0.6).abs() < 1e-15);
    }
}
