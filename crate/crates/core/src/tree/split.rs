//! Impurity criteria and quantile-binned split search.
//!
//! Features are read column-wise from a [`ColumnIndex`] holding only the
//! nonzero entries, so a node's zero-valued rows are accounted for in bulk.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::vector::FeatureVector;

/// Splits must improve impurity by more than this to count as positive.
pub(crate) const MIN_GAIN: f64 = 1e-12;

/// Gini impurity `1 - sum p_i^2` of class counts.
pub fn gini(counts: &[f64]) -> Result<f64> {
    let total: f64 = counts.iter().sum();
    if counts.is_empty() || !(total > 0.0) || counts.iter().any(|c| *c < 0.0) {
        return Err(Error::invalid("gini needs nonnegative counts with a positive total"));
    }
    Ok(gini_unchecked(counts, total))
}

fn gini_unchecked(counts: &[f64], total: f64) -> f64 {
    1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>()
}

/// Node statistics for an impurity criterion.
pub(crate) trait Criterion: Sync {
    type Stats: Clone + Send;

    fn empty(&self) -> Self::Stats;
    fn add_row(&self, s: &mut Self::Stats, row: usize, weight: f64);
    fn merge(&self, a: &mut Self::Stats, b: &Self::Stats);
    fn diff(&self, a: &Self::Stats, b: &Self::Stats) -> Self::Stats;
    fn count(&self, s: &Self::Stats) -> f64;
    fn impurity(&self, s: &Self::Stats) -> f64;
}

pub(crate) struct GiniCriterion<'a> {
    pub labels: &'a [usize],
    pub num_classes: usize,
}

impl Criterion for GiniCriterion<'_> {
    type Stats = Vec<f64>;

    fn empty(&self) -> Vec<f64> {
        vec![0.0; self.num_classes]
    }
    fn add_row(&self, s: &mut Vec<f64>, row: usize, weight: f64) {
        s[self.labels[row]] += weight;
    }
    fn merge(&self, a: &mut Vec<f64>, b: &Vec<f64>) {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
    }
    fn diff(&self, a: &Vec<f64>, b: &Vec<f64>) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| (x - y).max(0.0)).collect()
    }
    fn count(&self, s: &Vec<f64>) -> f64 {
        s.iter().sum()
    }
    fn impurity(&self, s: &Vec<f64>) -> f64 {
        let total = self.count(s);
        if total > 0.0 {
            gini_unchecked(s, total)
        } else {
            0.0
        }
    }
}

/// Variance of a real target.
pub(crate) struct VarianceCriterion<'a> {
    pub targets: &'a [f64],
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Moments {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Criterion for VarianceCriterion<'_> {
    type Stats = Moments;

    fn empty(&self) -> Moments {
        Moments::default()
    }
    fn add_row(&self, s: &mut Moments, row: usize, weight: f64) {
        let t = self.targets[row];
        s.n += weight;
        s.sum += weight * t;
        s.sum_sq += weight * t * t;
    }
    fn merge(&self, a: &mut Moments, b: &Moments) {
        a.n += b.n;
        a.sum += b.sum;
        a.sum_sq += b.sum_sq;
    }
    fn diff(&self, a: &Moments, b: &Moments) -> Moments {
        Moments {
            n: (a.n - b.n).max(0.0),
            sum: a.sum - b.sum,
            sum_sq: a.sum_sq - b.sum_sq,
        }
    }
    fn count(&self, s: &Moments) -> f64 {
        s.n
    }
    fn impurity(&self, s: &Moments) -> f64 {
        if s.n <= 0.0 {
            return 0.0;
        }
        let mean = s.sum / s.n;
        (s.sum_sq / s.n - mean * mean).max(0.0)
    }
}

/// Column-major view of the nonzero entries of a row set.
pub(crate) struct ColumnIndex {
    pub dim: usize,
    pub rows: usize,
    cols: Vec<Vec<(u32, f64)>>,
}

impl ColumnIndex {
    pub fn build(rows: &[FeatureVector]) -> Result<Self> {
        let dim = rows.first().map_or(0, FeatureVector::dim);
        let mut cols = vec![Vec::new(); dim];
        for (r, v) in rows.iter().enumerate() {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.dim(),
                });
            }
            for (j, x) in v.iter_nonzero() {
                cols[j].push((r as u32, x));
            }
        }
        Ok(ColumnIndex {
            dim,
            rows: rows.len(),
            cols,
        })
    }

    pub fn column(&self, j: usize) -> &[(u32, f64)] {
        &self.cols[j]
    }
}

/// A chosen split: rows with `value <= threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Searches `features` (ascending) for the best split of the node whose rows
/// have multiplicity `mult[row]` (zero for rows outside the node).
pub(crate) fn search<C: Criterion>(
    crit: &C,
    index: &ColumnIndex,
    mult: &[u32],
    node_stats: &C::Stats,
    features: &[usize],
    max_bins: usize,
    min_child: f64,
) -> Option<Split> {
    let n = crit.count(node_stats);
    let parent = crit.impurity(node_stats);
    let mut best: Option<Split> = None;
    let mut entries: Vec<(f64, usize, u32)> = Vec::new();
    let mut groups: Vec<(f64, C::Stats)> = Vec::new();

    for &j in features {
        entries.clear();
        for &(r, v) in &index.cols[j] {
            let m = mult[r as usize];
            if m > 0 {
                entries.push((v, r as usize, m));
            }
        }
        entries.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));

        let mut nonzero = crit.empty();
        for &(_, r, m) in &entries {
            crit.add_row(&mut nonzero, r, m as f64);
        }
        let zero_stats = crit.diff(node_stats, &nonzero);
        let has_zero = crit.count(&zero_stats) > 0.5;

        // distinct values in ascending order with their stats
        groups.clear();
        let mut zero_placed = !has_zero;
        for &(v, r, m) in &entries {
            if !zero_placed && v > 0.0 {
                groups.push((0.0, zero_stats.clone()));
                zero_placed = true;
            }
            match groups.last_mut() {
                Some((gv, s)) if *gv == v => crit.add_row(s, r, m as f64),
                _ => {
                    let mut s = crit.empty();
                    crit.add_row(&mut s, r, m as f64);
                    groups.push((v, s));
                }
            }
        }
        if !zero_placed {
            groups.push((0.0, zero_stats.clone()));
        }
        if groups.len() < 2 {
            continue;
        }

        let counts: Vec<f64> = groups.iter().map(|g| crit.count(&g.1)).collect();
        let boundaries = candidate_boundaries(&counts, max_bins);

        let mut left = crit.empty();
        let mut next = 0usize;
        for g in boundaries {
            while next <= g {
                crit.merge(&mut left, &groups[next].1);
                next += 1;
            }
            let nl = crit.count(&left);
            let nr = n - nl;
            if nl < min_child || nr < min_child {
                continue;
            }
            let right = crit.diff(node_stats, &left);
            let gain = parent - (nl / n) * crit.impurity(&left) - (nr / n) * crit.impurity(&right);
            if gain > MIN_GAIN && best.map_or(true, |b| gain > b.gain) {
                let (lo, hi) = (groups[g].0, groups[g + 1].0);
                best = Some(Split {
                    feature: j,
                    threshold: lo + (hi - lo) / 2.0,
                    gain,
                });
            }
        }
    }
    best
}

/// Indices `g` of distinct-value groups after which a cut is considered.
///
/// With at most `max_bins` distinct values every gap is a candidate.
/// Otherwise the cuts are the boundaries of `max_bins` equal-frequency bins.
fn candidate_boundaries(counts: &[f64], max_bins: usize) -> Vec<usize> {
    let last = counts.len() - 1;
    if counts.len() <= max_bins {
        return (0..last).collect();
    }
    let total: f64 = counts.iter().sum();
    let mut out = Vec::with_capacity(max_bins);
    let mut cum = 0.0;
    let mut g = 0usize;
    for q in 1..max_bins {
        let target = total * q as f64 / max_bins as f64;
        while g < last && cum + counts[g] < target {
            cum += counts[g];
            g += 1;
        }
        if g < last && out.last() != Some(&g) {
            out.push(g);
        }
    }
    out
}

/// Best split of a labelled row set over `feature_subset`.
///
/// Returns `None` when fewer than two rows are given or no split has a
/// positive impurity decrease. Ties go to the lower feature index, then the
/// lower threshold.
pub fn best_split(rows: &[FeatureVector], labels: &[usize], feature_subset: &[usize], max_bins: usize) -> Result<Option<Split>> {
    if rows.len() != labels.len() {
        return Err(Error::invalid("rows and labels differ in length"));
    }
    if rows.len() < 2 {
        return Ok(None);
    }
    let index = ColumnIndex::build(rows)?;
    let mut features = feature_subset.to_vec();
    features.sort_unstable();
    features.dedup();
    if features.iter().any(|f| *f >= index.dim) {
        return Err(Error::invalid("feature subset index out of range"));
    }
    let num_classes = labels.iter().max().map_or(1, |m| m + 1);
    let crit = GiniCriterion {
        labels,
        num_classes,
    };
    let mult = vec![1u32; rows.len()];
    let mut stats = crit.empty();
    for r in 0..rows.len() {
        crit.add_row(&mut stats, r, 1.0);
    }
    Ok(search(&crit, &index, &mult, &stats, &features, max_bins.max(2), 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[3.0, 0.0]).unwrap(), 0.0);
        assert_eq!(gini(&[1.0, 1.0]).unwrap(), 0.5);
        assert!((gini(&[1.0; 4]).unwrap() - 0.75).abs() < 1e-15);
        assert!(gini(&[]).is_err());
        assert!(gini(&[0.0, 0.0]).is_err());
    }

    fn dense_rows(v: &[&[f64]]) -> Vec<FeatureVector> {
        v.iter().map(|r| FeatureVector::dense(r.to_vec())).collect()
    }

    #[test]
    fn split_examples() {
        let rows = dense_rows(&[&[0.0], &[1.0]]);
        let s = best_split(&rows, &[0, 1], &[0], 32).unwrap().unwrap();
        assert_eq!(s.feature, 0);
        assert!(s.threshold > 0.0 && s.threshold < 1.0);
        assert!((s.gain - 0.5).abs() < 1e-12);

        let rows = dense_rows(&[&[0.0], &[1.0], &[2.0]]);
        assert!(best_split(&rows, &[1, 1, 1], &[0], 32).unwrap().is_none());

        let rows = dense_rows(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]]);
        let s = best_split(&rows, &[0, 1, 1], &[1, 0], 32).unwrap().unwrap();
        assert_eq!(s.feature, 0);
    }

    #[test]
    fn sparse_and_dense_rows_give_same_split() {
        let mut r = rng::seeded(9);
        for _ in 0..20 {
            let dense: Vec<Vec<f64>> = (0..30)
                .map(|_| (0..4).map(|_| if r.gen_bool(0.5) { 0.0 } else { r.gen_range(-3..4) as f64 }).collect())
                .collect();
            let labels: Vec<usize> = (0..30).map(|_| r.gen_range(0..3)).collect();
            let d: Vec<_> = dense.iter().map(|v| FeatureVector::dense(v.clone())).collect();
            let s: Vec<_> = dense
                .iter()
                .map(|v| FeatureVector::sparse(4, v.iter().enumerate().map(|(i, x)| (i as u32, *x)).collect()).unwrap())
                .collect();
            assert_eq!(best_split(&d, &labels, &[0, 1, 2, 3], 32).unwrap(), best_split(&s, &labels, &[0, 1, 2, 3], 32).unwrap());
        }
    }

    #[test]
    fn quantile_boundaries() {
        assert_eq!(candidate_boundaries(&[1.0, 1.0, 1.0], 4), vec![0, 1]);
        // 8 equal groups, 4 bins: cuts after groups 1, 3, 5
        assert_eq!(candidate_boundaries(&[1.0; 8], 4), vec![1, 3, 5]);
        // heavy first group absorbs early quantiles
        assert_eq!(candidate_boundaries(&[10.0, 1.0, 1.0, 1.0], 2), vec![0]);
    }
}
