use rayon::prelude::*;

use super::{check_dim, check_rows, norm_sq, LinearKind, LinearModel, TrainConfig, TrainInfo, CHUNK_ROWS};
use crate::error::{Error, Result};
use crate::vector::FeatureVector;

/// Mean hinge loss `max(0, 1 - s * (w.x + b))` with `s` in {-1, +1}, plus
/// `(l2_reg / 2) * ||w||^2`, and one subgradient `(g_w, g_b)`.
pub fn hinge_objective(w: &[f64], b: f64, x: &[FeatureVector], y: &[usize], l2_reg: f64) -> (f64, Vec<f64>, f64) {
    let d = w.len();
    let partials: Vec<(f64, Vec<f64>, f64)> = x
        .par_chunks(CHUNK_ROWS)
        .zip(y.par_chunks(CHUNK_ROWS))
        .map(|(xs, ys)| {
            let mut loss = 0.0;
            let mut gw = vec![0.0; d];
            let mut gb = 0.0;
            for (xi, &yi) in xs.iter().zip(ys) {
                let s = if yi == 1 { 1.0 } else { -1.0 };
                let margin = s * (xi.dot(w) + b);
                if margin < 1.0 {
                    loss += 1.0 - margin;
                    xi.axpy_into(-s, &mut gw);
                    gb -= s;
                }
            }
            (loss, gw, gb)
        })
        .collect();
    let inv_n = 1.0 / x.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; d];
    let mut gb = 0.0;
    for (l, g, b) in partials {
        loss += l;
        gb += b;
        for (a, v) in gw.iter_mut().zip(g) {
            *a += v;
        }
    }
    for (g, wi) in gw.iter_mut().zip(w) {
        *g = *g * inv_n + l2_reg * wi;
    }
    (loss * inv_n + 0.5 * l2_reg * norm_sq(w), gw, gb * inv_n)
}

/// Deterministic subgradient descent on the regularized hinge loss with
/// step `step_size / sqrt(t)`. Returns the lowest-objective iterate seen,
/// which is never worse than the zero model.
pub fn train_linear_svc(x: &[FeatureVector], y: &[usize], cfg: &TrainConfig) -> Result<LinearModel> {
    cfg.validate()?;
    let d = check_rows(x, y)?;
    if let Some(bad) = y.iter().find(|l| **l > 1) {
        return Err(Error::invalid(format!("linear SVC needs binary labels, found {bad}")));
    }
    if y.iter().all(|l| *l == y[0]) {
        return Err(Error::data(format!("only class {} present in training labels", y[0])));
    }

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let (mut f, mut gw, mut gb) = hinge_objective(&w, b, x, y, cfg.l2_reg);
    let mut best = (f, w.clone(), b);
    let mut trace = vec![f];
    let mut iterations = 0;
    for t in 1..=cfg.max_iters {
        if norm_sq(&gw) + gb * gb == 0.0 {
            break;
        }
        let eta = cfg.step_size / (t as f64).sqrt();
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= eta * g;
        }
        b -= eta * gb;
        (f, gw, gb) = hinge_objective(&w, b, x, y, cfg.l2_reg);
        if !f.is_finite() {
            return Err(Error::numeric("hinge objective is not finite; lower step_size"));
        }
        iterations = t;
        if f < best.0 {
            best = (f, w.clone(), b);
            trace.push(f);
        }
    }

    let mut model = LinearModel::zeros(LinearKind::Svc, 2, d);
    model.weights[0] = best.1;
    model.intercepts[0] = best.2;
    model.info = TrainInfo {
        iterations,
        final_objective: best.0,
        objective_trace: trace,
    };
    Ok(model)
}

/// Label 1 when the margin is strictly positive.
pub fn predict_svc(model: &LinearModel, x: &FeatureVector) -> Result<(usize, f64)> {
    if model.kind != LinearKind::Svc {
        return Err(Error::invalid("not an SVC model"));
    }
    check_dim(model.dimension, x)?;
    let margin = x.dot(&model.weights[0]) + model.intercepts[0];
    Ok((usize::from(margin > 0.0), margin))
}
