//! RReliefF factor weighting for a continuous target, and weight-based
//! factor-set construction.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::distance::HeterogeneousMetric;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReliefConfig {
    /// Instance iterations; `None` sweeps every record once in dataset order.
    #[serde(default)]
    pub m: Option<usize>,
    /// Nearest neighbours per instance.
    #[serde(default = "ReliefConfig::default_k")]
    pub k: usize,
    /// Rank decay of neighbour influence.
    #[serde(default = "ReliefConfig::default_sigma")]
    pub sigma: f64,
}

impl ReliefConfig {
    fn default_k() -> usize {
        10
    }
    fn default_sigma() -> f64 {
        20.0
    }
}

impl Default for ReliefConfig {
    fn default() -> Self {
        ReliefConfig {
            m: None,
            k: Self::default_k(),
            sigma: Self::default_sigma(),
        }
    }
}

/// Per-factor relevance weights in `[-1, 1]`, in dataset predictor order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector {
    pub weights: Vec<(String, f64)>,
    pub iterations: usize,
    pub k: usize,
    pub sigma: f64,
    pub seed: u64,
    /// Set when the target was constant and every weight was forced to 0.
    pub constant_target: bool,
}

impl WeightVector {
    pub fn get(&self, factor: &str) -> Option<f64> {
        self.weights.iter().find(|(f, _)| f == factor).map(|&(_, w)| w)
    }

    /// Factors by weight descending, ties by name.
    pub fn ranked(&self) -> Vec<(String, f64)> {
        rank_scores(&self.weights)
    }

    /// `factor,weight,rank` rows sorted by weight descending.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["factor", "weight", "rank"])?;
        for (i, (f, v)) in self.ranked().iter().enumerate() {
            w.write_record([f.clone(), format!("{v}"), (i + 1).to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Infeasible(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }
}

/// Scores closer than this rank as ties.
pub const TIE_RESOLUTION: f64 = 1e-12;

/// Sorts `(name, score)` pairs by score descending, ties lexicographically.
/// Scores are compared on a `TIE_RESOLUTION` grid so that values equal up to
/// summation order still tie.
pub fn rank_scores(scores: &[(String, f64)]) -> Vec<(String, f64)> {
    let key = |s: f64| (s / TIE_RESOLUTION).round();
    let mut v = scores.to_vec();
    v.sort_by(|a, b| key(b.1).total_cmp(&key(a.1)).then_with(|| a.0.cmp(&b.0)));
    v
}

#[derive(Default, Clone)]
struct Accumulator {
    n_dc: f64,
    n_da: Vec<f64>,
    n_dc_da: Vec<f64>,
    influence: f64,
}

impl Accumulator {
    fn zeros(n: usize) -> Self {
        Accumulator {
            n_dc: 0.0,
            n_da: vec![0.0; n],
            n_dc_da: vec![0.0; n],
            influence: 0.0,
        }
    }

    fn add(&mut self, other: &Accumulator) {
        self.n_dc += other.n_dc;
        self.influence += other.influence;
        for (a, b) in self.n_da.iter_mut().zip(&other.n_da) {
            *a += b;
        }
        for (a, b) in self.n_dc_da.iter_mut().zip(&other.n_dc_da) {
            *a += b;
        }
    }
}

/// RReliefF weights over every predictor of a complete dataset.
///
/// For each selected instance, its `k` nearest neighbours (heterogeneous
/// distance, ties by record order) contribute with influence
/// `exp(-(rank/sigma)^2)` normalized over the `k` ranks. The weight of
/// factor `A` is `N_dC&dA/N_dC - (N_dA - N_dC&dA)/(m' - N_dC)` where `m'` is
/// the total influence accumulated.
pub fn rrelieff(ds: &Dataset, cfg: ReliefConfig, seed: u64) -> Result<WeightVector> {
    let dep = ds.dependent_index()?;
    let preds = ds.predictor_indices();
    let n = ds.len();
    if !ds.is_complete() || ds.records().iter().any(|r| r.values[dep].is_missing()) {
        return Err(Error::InvalidArgument(
            "RReliefF needs a complete dataset (impute first)".into(),
        ));
    }
    if cfg.k == 0 || cfg.sigma.is_nan() || cfg.sigma <= 0.0 {
        return Err(Error::InvalidArgument("RReliefF needs k >= 1 and sigma > 0".into()));
    }
    if n < cfg.k + 1 {
        return Err(Error::InvalidArgument(format!(
            "RReliefF with k = {} needs at least {} records, got {n}",
            cfg.k,
            cfg.k + 1
        )));
    }
    let m = cfg.m.unwrap_or(n);
    if m == 0 {
        return Err(Error::InvalidArgument("RReliefF needs m >= 1".into()));
    }

    let records = ds.records();
    let target: Vec<f64> = records.iter().map(|r| r.values[dep].as_f64().unwrap()).collect();
    let (t_lo, t_hi) = target
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let t_span = t_hi - t_lo;

    let wv = |weights: Vec<f64>, constant_target| WeightVector {
        weights: preds
            .iter()
            .zip(weights)
            .map(|(&c, w)| (ds.descriptors()[c].name.clone(), w))
            .collect(),
        iterations: m,
        k: cfg.k,
        sigma: cfg.sigma,
        seed,
        constant_target,
    };
    if t_span <= 0.0 {
        return Ok(wv(vec![0.0; preds.len()], true));
    }

    let instances: Vec<usize> = if m == n {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m).map(|_| rng.gen_range(0..n)).collect()
    };

    let metric = HeterogeneousMetric::fit(ds, &preds);
    let mut influence: Vec<f64> = (1..=cfg.k)
        .map(|rank| (-(rank as f64 / cfg.sigma).powi(2)).exp())
        .collect();
    let total: f64 = influence.iter().sum();
    influence.iter_mut().for_each(|d| *d /= total);

    let partials: Vec<Accumulator> = instances
        .par_iter()
        .map(|&i| {
            let ri = &records[i];
            let mut others: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (metric.distance(ri, &records[j]), j))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut acc = Accumulator::zeros(preds.len());
            for (&(_, j), &d) in others.iter().take(cfg.k).zip(&influence) {
                let rj = &records[j];
                let dc = (target[i] - target[j]).abs() / t_span;
                acc.n_dc += dc * d;
                acc.influence += d;
                for (a, &c) in preds.iter().enumerate() {
                    let da = metric.diff(c, ri.values[c], rj.values[c]).unwrap_or(0.0);
                    acc.n_da[a] += da * d;
                    acc.n_dc_da[a] += dc * da * d;
                }
            }
            acc
        })
        .collect();
    // sequential sum keeps the result independent of thread scheduling
    let mut acc = Accumulator::zeros(preds.len());
    for p in &partials {
        acc.add(p);
    }

    let weights = (0..preds.len())
        .map(|a| {
            let first = if acc.n_dc > 0.0 { acc.n_dc_da[a] / acc.n_dc } else { 0.0 };
            let rest = acc.influence - acc.n_dc;
            let second = if rest > 0.0 { (acc.n_da[a] - acc.n_dc_da[a]) / rest } else { 0.0 };
            let w = first - second;
            debug_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&w), "weight {w} out of range");
            w.clamp(-1.0, 1.0)
        })
        .collect();
    Ok(wv(weights, false))
}

/// Origin of a factor set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Provenance {
    #[serde(rename = "FM")]
    Measured,
    #[serde(rename = "FM_R")]
    MeasuredRelevant,
    #[serde(rename = "FM_R10")]
    MeasuredRelevantTop,
    #[serde(rename = "FE")]
    Expert,
    #[serde(rename = "FI")]
    Integrated,
    #[serde(rename = "FT")]
    Total,
    #[serde(rename = "FC")]
    Common,
    #[serde(rename = "FC_E25")]
    CommonExpertTop,
    #[serde(rename = "FC_R25")]
    CommonReliefTop,
    #[serde(rename = "FC_I25")]
    CommonIntegratedTop,
    #[serde(rename = "custom")]
    Custom,
}

impl Provenance {
    pub fn symbol(self) -> &'static str {
        match self {
            Provenance::Measured => "FM",
            Provenance::MeasuredRelevant => "FM_R",
            Provenance::MeasuredRelevantTop => "FM_R10",
            Provenance::Expert => "FE",
            Provenance::Integrated => "FI",
            Provenance::Total => "FT",
            Provenance::Common => "FC",
            Provenance::CommonExpertTop => "FC_E25",
            Provenance::CommonReliefTop => "FC_R25",
            Provenance::CommonIntegratedTop => "FC_I25",
            Provenance::Custom => "custom",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A named, non-empty set of factor names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorSet {
    pub label: String,
    pub provenance: Provenance,
    pub factors: BTreeSet<String>,
}

impl FactorSet {
    pub fn new(
        label: impl Into<String>,
        provenance: Provenance,
        factors: impl IntoIterator<Item = String>,
    ) -> Result<Self> {
        let label = label.into();
        let factors: BTreeSet<String> = factors.into_iter().collect();
        if factors.is_empty() {
            return Err(Error::Infeasible(format!("factor set {label} is empty")));
        }
        Ok(FactorSet {
            label,
            provenance,
            factors,
        })
    }

    /// Set labeled with its provenance symbol.
    pub fn standard(provenance: Provenance, factors: impl IntoIterator<Item = String>) -> Result<Self> {
        Self::new(provenance.symbol(), provenance, factors)
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn contains(&self, factor: &str) -> bool {
        self.factors.contains(factor)
    }

    pub fn is_subset(&self, other: &FactorSet) -> bool {
        self.factors.is_subset(&other.factors)
    }
}

/// Factors with strictly positive weight, labeled FM_R.
pub fn positive_weight_set(wv: &WeightVector) -> Result<FactorSet> {
    let factors: Vec<String> = wv
        .weights
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(f, _)| f.clone())
        .collect();
    if factors.is_empty() {
        return Err(Error::Infeasible("no factor received a positive weight".into()));
    }
    FactorSet::standard(Provenance::MeasuredRelevant, factors)
}

/// Number of items kept by a top-`p` cut over `n` items: `ceil(p * n)`.
pub fn top_count(n: usize, p: f64) -> usize {
    // tolerate representation error such as 0.1 * 30 = 3.0000000000000004
    (((p * n as f64) - 1e-9).ceil().max(1.0) as usize).min(n)
}

/// The `ceil(p * N)` highest-scored factors, ties broken by name.
pub fn top_fraction(
    scored: &[(String, f64)],
    p: f64,
    label: impl Into<String>,
    provenance: Provenance,
) -> Result<FactorSet> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!("fraction must lie in (0, 1], got {p}")));
    }
    let n = top_count(scored.len(), p);
    FactorSet::new(label, provenance, rank_scores(scored).into_iter().take(n).map(|(f, _)| f))
}
