//! Analogy-based estimators of the dependent variable: k nearest neighbours
//! and optimized set reduction (OSR).

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ProjectRecord, Scale};
use crate::distance::HeterogeneousMetric;
use crate::error::{Error, Result};
use crate::relief::FactorSet;
use crate::stats::median;

/// A project to estimate, with the factors the estimator may look at.
#[derive(Debug, Clone, Copy)]
pub struct EstimationQuery<'a> {
    pub record: &'a ProjectRecord,
    pub factors: &'a FactorSet,
}

impl EstimationQuery<'_> {
    /// Active column indices in `ds`, checking the query has them all.
    fn columns(&self, ds: &Dataset) -> Result<Vec<usize>> {
        if self.factors.is_empty() {
            return Err(Error::InvalidArgument("active factor set is empty".into()));
        }
        let names: Vec<&String> = self.factors.factors.iter().collect();
        let cols = ds.resolve_factors(&names)?;
        for (&c, n) in cols.iter().zip(&names) {
            if self.record.values[c].is_missing() {
                return Err(Error::InvalidArgument(format!(
                    "query '{}' has no value for active factor '{n}'",
                    self.record.id
                )));
            }
        }
        Ok(cols)
    }
}

/// Training records with an observed dependent value, and that value.
fn training(ds: &Dataset) -> Result<Vec<(usize, f64)>> {
    let dep = ds.dependent_index()?;
    Ok(ds
        .records()
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.values[dep].as_f64().map(|y| (i, y)))
        .collect())
}

/// Mean dependent value of the `k` training records nearest to the query.
///
/// Distances use the heterogeneous metric restricted to the active factors,
/// fitted on the training records plus the query; ties at equal distance
/// are resolved by record id.
pub fn knn_estimate(ds: &Dataset, q: &EstimationQuery<'_>, k: usize) -> Result<f64> {
    let cols = q.columns(ds)?;
    let train = training(ds)?;
    if k == 0 || k > train.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} but {} training records have a dependent value",
            train.len()
        )));
    }
    let records = ds.records();
    let metric = HeterogeneousMetric::fit_records(
        ds,
        train.iter().map(|&(i, _)| &records[i]).chain(std::iter::once(q.record)),
        &cols,
    );
    let mut scored: Vec<(f64, &str, f64)> = train
        .iter()
        .map(|&(i, y)| (metric.distance(q.record, &records[i]), records[i].id.as_str(), y))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    Ok(scored.iter().take(k).map(|s| s.2).sum::<f64>() / k as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OsrConfig {
    /// Quantile bins for numeric factors.
    #[serde(default = "OsrConfig::default_bins")]
    pub bins: usize,
    /// Equal-frequency classes of the dependent variable.
    #[serde(default = "OsrConfig::default_classes")]
    pub classes: usize,
    /// Smallest subset a predicate may leave.
    #[serde(default = "OsrConfig::default_min_subset")]
    pub min_subset: usize,
}

impl OsrConfig {
    fn default_bins() -> usize {
        4
    }
    fn default_classes() -> usize {
        3
    }
    fn default_min_subset() -> usize {
        5
    }
}

impl Default for OsrConfig {
    fn default() -> Self {
        OsrConfig {
            bins: Self::default_bins(),
            classes: Self::default_classes(),
            min_subset: Self::default_min_subset(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OsrPredicate {
    pub factor: String,
    /// Human-readable condition, e.g. `bin 2/4 [3.5, 7)` or `= high`.
    pub condition: String,
    /// Records left after applying this predicate.
    pub subset_size: usize,
    /// Class entropy (bits) of that subset.
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OsrTrace {
    pub query: String,
    pub initial_size: usize,
    pub initial_entropy: f64,
    pub predicates: Vec<OsrPredicate>,
    pub terminal_ids: Vec<String>,
    pub prediction: f64,
}

/// Cut points splitting `values` into `parts` equal-frequency groups;
/// a value belongs to group `#{cuts <= v}`.
fn quantile_cuts(values: &[f64], parts: usize) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    (1..parts).map(|j| v[j * v.len() / parts]).collect()
}

fn group_of(cuts: &[f64], v: f64) -> usize {
    cuts.iter().filter(|&&c| c <= v).count()
}

fn class_entropy(classes: &[usize], members: &[usize], n_classes: usize) -> f64 {
    let mut counts = vec![0usize; n_classes];
    for &m in members {
        counts[classes[m]] += 1;
    }
    let n = members.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

struct Candidate {
    name: String,
    condition: String,
    /// Training positions (into `train`) satisfying the predicate.
    holds: Vec<bool>,
}

fn fmt_bound(v: Option<f64>, neg: bool) -> String {
    match v {
        Some(x) => format!("{x}"),
        None if neg => "-inf".into(),
        None => "inf".into(),
    }
}

/// Optimized set reduction: greedily narrows the training set with
/// predicates that hold for the query until class entropy of the dependent
/// variable stops decreasing, then predicts the median of what is left.
///
/// Numeric factors are split into quantile bins on the training values;
/// ordinal and nominal factors use exact level equality. Each factor is used
/// at most once and entropy ties go to the lexicographically first factor.
pub fn osr_estimate(ds: &Dataset, q: &EstimationQuery<'_>, cfg: OsrConfig) -> Result<(f64, OsrTrace)> {
    if cfg.bins < 2 || cfg.classes < 2 || cfg.min_subset < 2 {
        return Err(Error::InvalidArgument("OSR needs bins >= 2, classes >= 2 and min_subset >= 2".into()));
    }
    let cols = q.columns(ds)?;
    let train = training(ds)?;
    if train.is_empty() {
        return Err(Error::InvalidArgument("no training record has a dependent value".into()));
    }
    let records = ds.records();
    let ys: Vec<f64> = train.iter().map(|&(_, y)| y).collect();
    let class_cuts = quantile_cuts(&ys, cfg.classes);
    let classes: Vec<usize> = ys.iter().map(|&y| group_of(&class_cuts, y)).collect();

    let mut candidates: Vec<Candidate> = cols
        .iter()
        .map(|&c| {
            let d = &ds.descriptors()[c];
            let qv = q.record.values[c];
            match &d.scale {
                Scale::Continuous | Scale::Integer => {
                    let vals: Vec<f64> = train
                        .iter()
                        .filter_map(|&(i, _)| records[i].values[c].as_f64())
                        .collect();
                    let cuts = if vals.is_empty() { Vec::new() } else { quantile_cuts(&vals, cfg.bins) };
                    let qb = group_of(&cuts, qv.as_f64().expect("checked non-missing"));
                    let holds = train
                        .iter()
                        .map(|&(i, _)| records[i].values[c].as_f64().is_some_and(|v| group_of(&cuts, v) == qb))
                        .collect();
                    let lo = if qb == 0 { None } else { Some(cuts[qb - 1]) };
                    let hi = cuts.get(qb).copied();
                    Candidate {
                        name: d.name.clone(),
                        condition: format!(
                            "bin {}/{} [{}, {})",
                            qb + 1,
                            cfg.bins,
                            fmt_bound(lo, true),
                            fmt_bound(hi, false)
                        ),
                        holds,
                    }
                }
                Scale::Ordinal(_) | Scale::Nominal(_) => {
                    let holds = train.iter().map(|&(i, _)| records[i].values[c] == qv).collect();
                    Candidate {
                        name: d.name.clone(),
                        condition: format!("= {}", d.format_value(qv)),
                        holds,
                    }
                }
            }
        })
        .collect();
    candidates.sort_by(|a, b| a.name.cmp(&b.name));

    let mut subset: Vec<usize> = (0..train.len()).collect();
    let mut entropy = class_entropy(&classes, &subset, cfg.classes);
    let initial_entropy = entropy;
    let mut used = vec![false; candidates.len()];
    let mut predicates = Vec::new();
    loop {
        let mut best: Option<(usize, Vec<usize>, f64)> = None;
        for (ci, cand) in candidates.iter().enumerate() {
            if used[ci] {
                continue;
            }
            let next: Vec<usize> = subset.iter().copied().filter(|&p| cand.holds[p]).collect();
            if next.len() < cfg.min_subset || next.len() == subset.len() {
                continue;
            }
            let h = class_entropy(&classes, &next, cfg.classes);
            if best.as_ref().is_none_or(|b| h.partial_cmp(&b.2) == Some(Ordering::Less)) {
                best = Some((ci, next, h));
            }
        }
        match best {
            Some((ci, next, h)) if h < entropy - 1e-12 => {
                used[ci] = true;
                predicates.push(OsrPredicate {
                    factor: candidates[ci].name.clone(),
                    condition: candidates[ci].condition.clone(),
                    subset_size: next.len(),
                    entropy: h,
                });
                subset = next;
                entropy = h;
            }
            _ => break,
        }
    }
    let terminal: Vec<f64> = subset.iter().map(|&p| ys[p]).collect();
    let prediction = median(&terminal).expect("subset is never empty");
    let trace = OsrTrace {
        query: q.record.id.clone(),
        initial_size: train.len(),
        initial_entropy,
        predicates,
        terminal_ids: subset.iter().map(|&p| records[train[p].0].id.clone()).collect(),
        prediction,
    };
    Ok((prediction, trace))
}

/// Estimator selection for evaluation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EstimatorConfig {
    Knn {
        #[serde(default = "default_knn_k")]
        k: usize,
    },
    Osr {
        #[serde(default = "OsrConfig::default_bins")]
        bins: usize,
        #[serde(default = "OsrConfig::default_classes")]
        classes: usize,
        #[serde(default = "OsrConfig::default_min_subset")]
        min_subset: usize,
    },
}

fn default_knn_k() -> usize {
    3
}

impl EstimatorConfig {
    pub fn knn(k: usize) -> Self {
        EstimatorConfig::Knn { k }
    }

    pub fn osr(cfg: OsrConfig) -> Self {
        EstimatorConfig::Osr {
            bins: cfg.bins,
            classes: cfg.classes,
            min_subset: cfg.min_subset,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            EstimatorConfig::Knn { k } => format!("k-NN(k={k})"),
            EstimatorConfig::Osr { bins, classes, min_subset } => {
                let cfg = OsrConfig { bins, classes, min_subset };
                if cfg == OsrConfig::default() {
                    "OSR".into()
                } else {
                    format!("OSR(bins={bins},classes={classes},min={min_subset})")
                }
            }
        }
    }

    pub fn predict(&self, train: &Dataset, q: &EstimationQuery<'_>) -> Result<Prediction> {
        match *self {
            EstimatorConfig::Knn { k } => Ok(Prediction {
                value: knn_estimate(train, q, k)?,
                trace: None,
            }),
            EstimatorConfig::Osr { bins, classes, min_subset } => {
                let (value, trace) = osr_estimate(train, q, OsrConfig { bins, classes, min_subset })?;
                Ok(Prediction {
                    value,
                    trace: Some(trace),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub value: f64,
    pub trace: Option<OsrTrace>,
}
