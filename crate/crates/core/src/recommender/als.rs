use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::interactions::InteractionSet;
use crate::error::{Error, Result};
use crate::rng;

pub const FACTOR_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlsConfig {
    pub rank: usize,
    pub reg: f64,
    pub max_sweeps: usize,
    /// Confidence scale, implicit feedback only.
    pub alpha: f64,
    pub implicit: bool,
    pub seed: u64,
}

impl Default for AlsConfig {
    fn default() -> Self {
        AlsConfig {
            rank: 10,
            reg: 0.1,
            max_sweeps: 10,
            alpha: 40.0,
            implicit: false,
            seed: 0,
        }
    }
}

/// Implicit-feedback confidence `1 + alpha * r`.
pub fn confidence(alpha: f64, r: f64) -> f64 {
    1.0 + alpha * r
}

/// Implicit-feedback preference: 1 for a positive rating, else 0.
pub fn preference(r: f64) -> f64 {
    if r > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// User and item factor matrices, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorModel {
    pub format_version: u32,
    pub rank: usize,
    pub config: AlsConfig,
    pub user_ids: Vec<String>,
    pub item_ids: Vec<String>,
    pub user_factors: Vec<f64>,
    pub item_factors: Vec<f64>,
    /// Training interactions per user and per item.
    pub user_counts: Vec<u32>,
    pub item_counts: Vec<u32>,
    pub global_mean: f64,
    /// Regularized objective at initialization and after every half-sweep.
    pub objective_trace: Vec<f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl FactorModel {
    pub fn num_users(&self) -> usize {
        self.user_counts.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_counts.len()
    }

    pub fn user_vec(&self, u: usize) -> &[f64] {
        &self.user_factors[u * self.rank..(u + 1) * self.rank]
    }

    pub fn item_vec(&self, i: usize) -> &[f64] {
        &self.item_factors[i * self.rank..(i + 1) * self.rank]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Probe {
            format_version: u32,
        }
        let probe: Probe = serde_json::from_str(s).map_err(|e| Error::CorruptArtifact(format!("factor model: {e}")))?;
        if probe.format_version != FACTOR_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: probe.format_version,
                expected: FACTOR_FORMAT_VERSION,
            });
        }
        let m: FactorModel = serde_json::from_str(s).map_err(|e| Error::CorruptArtifact(format!("factor model: {e}")))?;
        let (nu, ni) = (m.user_counts.len(), m.item_counts.len());
        if m.rank == 0
            || m.user_factors.len() != nu * m.rank
            || m.item_factors.len() != ni * m.rank
            || m.user_ids.len() != nu
            || m.item_ids.len() != ni
        {
            return Err(Error::CorruptArtifact("factor model: inconsistent dimensions".into()));
        }
        Ok(m)
    }
}

/// Solves `A x = b` in place for symmetric positive definite `A` (n x n,
/// row-major) by Cholesky factorization. `b` receives the solution.
pub fn cholesky_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Result<()> {
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max).max(1.0);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 1e-12 * scale) {
            return Err(Error::numeric(
                "singular normal equations in ALS; increase the regularization",
            ));
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Ok(())
}

fn gram(f: &[f64], rank: usize) -> Vec<f64> {
    let mut g = vec![0.0; rank * rank];
    for row in f.chunks_exact(rank) {
        for a in 0..rank {
            for b in 0..rank {
                g[a * rank + b] += row[a] * row[b];
            }
        }
    }
    g
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Which half-sweep: solve the rows of `solve` against fixed `fixed`.
struct HalfSweep<'a> {
    lists: &'a [Vec<(u32, f64)>],
    fixed: &'a [f64],
    rank: usize,
    reg: f64,
    implicit: Option<(f64, &'a [f64])>,
}

impl HalfSweep<'_> {
    fn run(&self, solve: &mut [f64]) -> Result<()> {
        let k = self.rank;
        solve
            .par_chunks_mut(k)
            .zip(self.lists.par_iter())
            .try_for_each(|(row, obs)| {
                let mut a = match self.implicit {
                    Some((_, g)) => g.to_vec(),
                    None => vec![0.0; k * k],
                };
                let mut b = vec![0.0; k];
                for &(j, r) in obs {
                    let v = &self.fixed[j as usize * k..(j as usize + 1) * k];
                    let (w, t) = match self.implicit {
                        Some((alpha, _)) => {
                            let c = confidence(alpha, r);
                            (c - 1.0, c * preference(r))
                        }
                        None => (1.0, r),
                    };
                    for p in 0..k {
                        b[p] += t * v[p];
                        for q in 0..k {
                            a[p * k + q] += w * v[p] * v[q];
                        }
                    }
                }
                if self.implicit.is_none() && obs.is_empty() {
                    row.fill(0.0);
                    return if self.reg > 0.0 {
                        Ok(())
                    } else {
                        Err(Error::numeric("singular normal equations in ALS; increase the regularization"))
                    };
                }
                for p in 0..k {
                    a[p * k + p] += self.reg;
                }
                cholesky_solve(&mut a, &mut b, k)?;
                row.copy_from_slice(&b);
                Ok(())
            })
    }
}

/// Regularized objective for the current factors.
pub fn als_objective(data: &InteractionSet, users: &[f64], items: &[f64], cfg: &AlsConfig) -> f64 {
    let k = cfg.rank;
    let reg = cfg.reg * (sq_norm(users) + sq_norm(items));
    let pred = |u: u32, i: u32| dot(&users[u as usize * k..(u as usize + 1) * k], &items[i as usize * k..(i as usize + 1) * k]);
    if cfg.implicit {
        // sum over all pairs of (u.v)^2 = trace(G_u G_v)
        let (gu, gv) = (gram(users, k), gram(items, k));
        let all: f64 = gu.iter().zip(&gv).map(|(a, b)| a * b).sum();
        let corr: f64 = data
            .triples
            .iter()
            .map(|&(u, i, r)| {
                let s = pred(u, i);
                confidence(cfg.alpha, r) * (preference(r) - s).powi(2) - s * s
            })
            .sum();
        all + corr + reg
    } else {
        let loss: f64 = data.triples.iter().map(|&(u, i, r)| (r - pred(u, i)).powi(2)).sum();
        loss + reg
    }
}

fn validate(data: &InteractionSet, cfg: &AlsConfig) -> Result<()> {
    if cfg.rank == 0 {
        return Err(Error::invalid("rank must be positive"));
    }
    if !(cfg.reg >= 0.0) || !cfg.reg.is_finite() {
        return Err(Error::invalid("reg must be a nonnegative number"));
    }
    if data.triples.is_empty() {
        return Err(Error::data("no interactions to factorize"));
    }
    if cfg.implicit {
        if !(cfg.alpha > 0.0) {
            return Err(Error::invalid("alpha must be positive for implicit feedback"));
        }
        if data.triples.iter().any(|t| t.2 < 0.0) {
            return Err(Error::invalid("implicit feedback needs nonnegative ratings"));
        }
    }
    Ok(())
}

fn train(data: &InteractionSet, cfg: &AlsConfig) -> Result<FactorModel> {
    validate(data, cfg)?;
    let k = cfg.rank;
    let (nu, ni) = (data.num_users(), data.num_items());
    let mut r = rng::seeded(cfg.seed);
    let scale = 1.0 / (k as f64).sqrt();
    let mut items: Vec<f64> = (0..ni * k).map(|_| r.gen_range(-0.5..0.5) * scale).collect();
    let mut users = vec![0.0; nu * k];
    let by_user = data.by_user();
    let by_item = data.by_item();

    let mut trace = vec![als_objective(data, &users, &items, cfg)];
    let check = |v: f64| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::numeric("ALS objective became non-finite"))
        }
    };
    for _ in 0..cfg.max_sweeps {
        let g = cfg.implicit.then(|| gram(&items, k));
        HalfSweep {
            lists: &by_user,
            fixed: &items,
            rank: k,
            reg: cfg.reg,
            implicit: g.as_deref().map(|g| (cfg.alpha, g)),
        }
        .run(&mut users)?;
        trace.push(check(als_objective(data, &users, &items, cfg))?);

        let g = cfg.implicit.then(|| gram(&users, k));
        HalfSweep {
            lists: &by_item,
            fixed: &users,
            rank: k,
            reg: cfg.reg,
            implicit: g.as_deref().map(|g| (cfg.alpha, g)),
        }
        .run(&mut items)?;
        trace.push(check(als_objective(data, &users, &items, cfg))?);
    }

    let global_mean = data.triples.iter().map(|t| t.2).sum::<f64>() / data.triples.len() as f64;
    let mut warnings = vec![];
    if k > nu.min(ni) {
        warnings.push(format!("rank {k} exceeds min(users, items) = {}", nu.min(ni)));
    }
    Ok(FactorModel {
        format_version: FACTOR_FORMAT_VERSION,
        rank: k,
        config: cfg.clone(),
        user_ids: data.user_ids.clone(),
        item_ids: data.item_ids.clone(),
        user_factors: users,
        item_factors: items,
        user_counts: by_user.iter().map(|l| l.len() as u32).collect(),
        item_counts: by_item.iter().map(|l| l.len() as u32).collect(),
        global_mean,
        objective_trace: trace,
        warnings,
    })
}

/// Explicit-feedback ALS on `sum (r - u.v)^2 + reg (|U|^2 + |V|^2)`.
pub fn train_als_explicit(data: &InteractionSet, cfg: &AlsConfig) -> Result<FactorModel> {
    if cfg.implicit {
        return Err(Error::invalid("config asks for implicit feedback"));
    }
    train(data, cfg)
}

/// Implicit-feedback ALS with confidence-weighted binary preferences.
pub fn train_als_implicit(data: &InteractionSet, cfg: &AlsConfig) -> Result<FactorModel> {
    if !cfg.implicit {
        return Err(Error::invalid("config asks for explicit feedback"));
    }
    train(data, cfg)
}

/// Trains whichever variant the config selects.
pub fn train_als(data: &InteractionSet, cfg: &AlsConfig) -> Result<FactorModel> {
    train(data, cfg)
}
