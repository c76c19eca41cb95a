use rayon::prelude::*;

use super::{check_dim, check_rows, norm_sq, LinearKind, LinearModel, ParamGradient, TrainConfig, TrainInfo, CHUNK_ROWS};
use crate::error::{Error, Result};
use crate::vector::FeatureVector;

/// Armijo sufficient-decrease constant.
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Mean multinomial cross-entropy plus `(l2_reg / 2) * ||W||^2`, and its
/// exact gradient. Intercepts are not regularized.
pub fn logistic_objective(model: &LinearModel, x: &[FeatureVector], y: &[usize], l2_reg: f64) -> Result<(f64, ParamGradient)> {
    if model.kind != LinearKind::Logistic {
        return Err(Error::invalid("logistic objective needs a logistic model"));
    }
    check_rows(x, y)?;
    check_dim(model.dimension, &x[0])?;
    if let Some(bad) = y.iter().find(|l| **l >= model.num_classes) {
        return Err(Error::invalid(format!("label {bad} out of range for {} classes", model.num_classes)));
    }
    let flat = model.to_flat();
    let (loss, grad) = objective_flat(&flat, model.num_classes, model.dimension, x, y, l2_reg, true);
    Ok((loss, ParamGradient::from_flat(&grad, model.num_classes, model.dimension)))
}

/// Loss and (optionally) gradient over flat parameters.
fn objective_flat(params: &[f64], k: usize, d: usize, x: &[FeatureVector], y: &[usize], l2_reg: f64, want_grad: bool) -> (f64, Vec<f64>) {
    let n = x.len();
    let partials: Vec<(f64, Vec<f64>)> = x
        .par_chunks(CHUNK_ROWS)
        .zip(y.par_chunks(CHUNK_ROWS))
        .map(|(xs, ys)| {
            let mut loss = 0.0;
            let mut grad = if want_grad { vec![0.0; k * (d + 1)] } else { Vec::new() };
            let mut scores = vec![0.0; k];
            for (xi, &yi) in xs.iter().zip(ys) {
                for (c, s) in scores.iter_mut().enumerate() {
                    *s = xi.dot(&params[c * d..(c + 1) * d]) + params[k * d + c];
                }
                let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = scores.iter().map(|s| (s - m).exp()).sum();
                let lse = m + z.ln();
                loss += lse - scores[yi];
                if want_grad {
                    for c in 0..k {
                        let p = (scores[c] - lse).exp();
                        let r = p - if c == yi { 1.0 } else { 0.0 };
                        if r != 0.0 {
                            xi.axpy_into(r, &mut grad[c * d..(c + 1) * d]);
                            grad[k * d + c] += r;
                        }
                    }
                }
            }
            (loss, grad)
        })
        .collect();

    let inv_n = 1.0 / n as f64;
    let mut loss = 0.0;
    let mut grad = if want_grad { vec![0.0; k * (d + 1)] } else { Vec::new() };
    for (l, g) in partials {
        loss += l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    loss *= inv_n;
    for g in grad.iter_mut() {
        *g *= inv_n;
    }
    let w = &params[..k * d];
    loss += 0.5 * l2_reg * norm_sq(w);
    if want_grad {
        for (g, wi) in grad[..k * d].iter_mut().zip(w) {
            *g += l2_reg * wi;
        }
    }
    (loss, grad)
}

/// Full-batch gradient descent with backtracking (step halving until the
/// Armijo condition holds). Stops when the gradient norm drops below
/// `cfg.tol`, when no step gives a decrease, or after `cfg.max_iters`.
pub fn train_logistic(x: &[FeatureVector], y: &[usize], num_classes: usize, cfg: &TrainConfig) -> Result<LinearModel> {
    cfg.validate()?;
    if num_classes < 2 {
        return Err(Error::invalid("logistic regression needs at least two classes"));
    }
    let d = check_rows(x, y)?;
    if let Some(bad) = y.iter().find(|l| **l >= num_classes) {
        return Err(Error::invalid(format!("label {bad} out of range for {num_classes} classes")));
    }
    if y.iter().all(|l| *l == y[0]) {
        return Err(Error::data(format!("only class {} present in training labels", y[0])));
    }

    let mut model = LinearModel::zeros(LinearKind::Logistic, num_classes, d);
    let mut params = model.to_flat();
    let (mut f, mut g) = objective_flat(&params, num_classes, d, x, y, cfg.l2_reg, true);
    if !f.is_finite() {
        return Err(Error::numeric("initial logistic loss is not finite"));
    }
    let mut trace = vec![f];
    let mut step = cfg.step_size;
    let mut iterations = 0;
    let mut cand = vec![0.0; params.len()];

    for _ in 0..cfg.max_iters {
        let gnorm_sq = norm_sq(&g);
        if gnorm_sq.sqrt() < cfg.tol {
            break;
        }
        let mut accepted = None;
        let mut saw_finite = false;
        for _ in 0..MAX_HALVINGS {
            for ((c, p), gi) in cand.iter_mut().zip(&params).zip(&g) {
                *c = p - step * gi;
            }
            let (fc, _) = objective_flat(&cand, num_classes, d, x, y, cfg.l2_reg, false);
            saw_finite |= fc.is_finite();
            if fc.is_finite() && fc <= f - ARMIJO * step * gnorm_sq {
                accepted = Some(fc);
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some(_) => {
                std::mem::swap(&mut params, &mut cand);
                let (fa, ga) = objective_flat(&params, num_classes, d, x, y, cfg.l2_reg, true);
                f = fa;
                g = ga;
                trace.push(f);
                iterations += 1;
                step = (step * 2.0).min(cfg.step_size);
            }
            None if !saw_finite => {
                return Err(Error::numeric("logistic loss became non-finite for every trial step; lower step_size"));
            }
            None => break,
        }
    }

    model.set_flat(&params);
    if !model.is_finite() {
        return Err(Error::numeric("logistic parameters are not finite"));
    }
    model.info = TrainInfo {
        iterations,
        final_objective: f,
        objective_trace: trace,
    };
    Ok(model)
}

/// Most probable class (lowest index on ties) and the class probabilities.
pub fn predict_logistic(model: &LinearModel, x: &FeatureVector) -> Result<(usize, Vec<f64>)> {
    if model.kind != LinearKind::Logistic {
        return Err(Error::invalid("not a logistic model"));
    }
    let probs = softmax(&model.scores(x)?);
    Ok((argmax(&probs), probs))
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
