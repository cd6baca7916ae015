//! Central finite-difference checks of the analytic gradients.
//!
//! Errors are measured per parameter tensor as
//! `|a - n| / max(|a|, |n|)` with Euclidean norms, and the worst tensor is
//! reported. Tensors whose analytic and numeric gradients are both below
//! `1e-10` in norm count as exact.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::classifier::{softmax_xent, SoftmaxModel};
use crate::error::Result;
use crate::projection::{cosine, ProjectionModel, Side};

pub const DEFAULT_STEP: f64 = 1e-5;

/// Points closer than this to the hinge kink, or with a projected vector
/// shorter than this, are not checked.
pub const EXCLUSION: f64 = 1e-6;

pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n) * (a - n))
        .sum::<f64>()
        .sqrt();
    let scale = norm(analytic).max(norm(numeric));
    if scale < 1e-10 {
        0.0
    } else {
        diff / scale
    }
}

/// Central differences of `f` at `params`, one coordinate at a time.
pub fn numeric_gradient(params: &[f64], step: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = params.to_vec();
    (0..params.len())
        .map(|i| {
            probe[i] = params[i] + step;
            let up = f(&probe);
            probe[i] = params[i] - step;
            let down = f(&probe);
            probe[i] = params[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

fn matrix_like(template: &Array2<f64>, values: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec(template.raw_dim(), values.to_vec()).expect("same shape")
}

/// Worst per-tensor relative error of the hinge-loss gradient at one triple,
/// or `None` when the point is excluded.
pub fn projection_check(
    model: &ProjectionModel,
    source: ArrayView1<'_, f64>,
    target: ArrayView1<'_, f64>,
    unrelated: ArrayView1<'_, f64>,
    step: f64,
) -> Result<Option<f64>> {
    let rs = model.project(Side::Source, source)?;
    let rt = model.project(Side::Target, target)?;
    let ru = model.project(Side::Target, unrelated)?;
    let norm = |r: &Array1<f64>| r.dot(r).sqrt();
    if [&rs, &rt, &ru].into_iter().any(|r| norm(r) < EXCLUSION) {
        return Ok(None);
    }
    let delta = cosine(rs.view(), rt.view()) - cosine(rs.view(), ru.view());
    if (model.margin - delta).abs() < EXCLUSION {
        return Ok(None);
    }
    let (_, grads) = model.hinge_loss_grad(source, target, unrelated);
    let loss = |m: &ProjectionModel| m.hinge_loss(source, target, unrelated);

    let sw = numeric_gradient(
        model.source_weights.as_slice().expect("contiguous"),
        step,
        |v| {
            loss(&ProjectionModel {
                source_weights: matrix_like(&model.source_weights, v),
                ..model.clone()
            })
        },
    );
    let sb = numeric_gradient(
        model.source_bias.as_slice().expect("contiguous"),
        step,
        |v| {
            loss(&ProjectionModel {
                source_bias: Array1::from(v.to_vec()),
                ..model.clone()
            })
        },
    );
    let tw = numeric_gradient(
        model.target_weights.as_slice().expect("contiguous"),
        step,
        |v| {
            loss(&ProjectionModel {
                target_weights: matrix_like(&model.target_weights, v),
                ..model.clone()
            })
        },
    );
    let tb = numeric_gradient(
        model.target_bias.as_slice().expect("contiguous"),
        step,
        |v| {
            loss(&ProjectionModel {
                target_bias: Array1::from(v.to_vec()),
                ..model.clone()
            })
        },
    );
    let errors = [
        relative_error(grads.source_weights.as_slice().expect("contiguous"), &sw),
        relative_error(grads.source_bias.as_slice().expect("contiguous"), &sb),
        relative_error(grads.target_weights.as_slice().expect("contiguous"), &tw),
        relative_error(grads.target_bias.as_slice().expect("contiguous"), &tb),
    ];
    Ok(Some(errors.into_iter().fold(0.0, f64::max)))
}

/// Worst per-tensor relative error of the cross-entropy gradient.
pub fn softmax_check(
    model: &SoftmaxModel,
    x: ArrayView2<'_, f64>,
    y: &[usize],
    step: f64,
) -> Result<f64> {
    let (_, grads) = softmax_xent(model, x, y)?;
    let loss = |m: &SoftmaxModel| softmax_xent(m, x, y).map(|(l, _)| l).unwrap_or(f64::NAN);
    let w = numeric_gradient(model.weights.as_slice().expect("contiguous"), step, |v| {
        loss(&SoftmaxModel {
            weights: matrix_like(&model.weights, v),
            ..model.clone()
        })
    });
    let b = numeric_gradient(model.bias.as_slice().expect("contiguous"), step, |v| {
        loss(&SoftmaxModel {
            bias: Array1::from(v.to_vec()),
            ..model.clone()
        })
    });
    Ok(
        relative_error(grads.weights.as_slice().expect("contiguous"), &w).max(relative_error(
            grads.bias.as_slice().expect("contiguous"),
            &b,
        )),
    )
}
