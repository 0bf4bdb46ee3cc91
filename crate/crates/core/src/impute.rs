//! k-NN hot-deck imputation of missing predictor cells.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ProjectRecord, Scale, Value};
use crate::distance::HeterogeneousMetric;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImputationConfig {
    /// Number of donor records per missing cell.
    pub k: usize,
}

impl Default for ImputationConfig {
    fn default() -> Self {
        ImputationConfig { k: 5 }
    }
}

/// Fills every missing predictor cell from its `k` nearest donors.
///
/// Distances are taken on factors observed in both records, using the
/// original data only, so imputed values never act as donors. Numeric and
/// ordinal cells get the donor mean (rounded for integer and ordinal scales),
/// nominal cells the donor mode with ties drawn from a generator seeded per
/// cell. When no donor shares an observed factor with the record, the
/// column mean/mode is used. Dependent and identifier cells are never touched.
pub fn knn_impute(ds: &Dataset, cfg: ImputationConfig, seed: u64) -> Result<Dataset> {
    if cfg.k == 0 {
        return Err(Error::InvalidArgument("imputation k must be at least 1".into()));
    }
    let preds = ds.predictor_indices();
    if ds.is_complete() {
        return Ok(ds.clone());
    }
    if ds.len() < 2 {
        return Err(Error::InvalidArgument("imputation needs at least 2 records".into()));
    }
    for &c in &preds {
        if ds.records().iter().all(|r| r.values[c].is_missing()) {
            return Err(Error::Infeasible(format!(
                "factor '{}' is missing in every record and cannot be imputed",
                ds.descriptors()[c].name
            )));
        }
    }

    let metric = HeterogeneousMetric::fit(ds, &preds);
    let n_cols = ds.descriptors().len();
    let records = ds.records();

    let imputed: Vec<ProjectRecord> = (0..records.len())
        .into_par_iter()
        .map(|ri| {
            let rec = &records[ri];
            let missing: Vec<usize> = preds.iter().copied().filter(|&c| rec.values[c].is_missing()).collect();
            if missing.is_empty() {
                return rec.clone();
            }
            let dists: Vec<f64> = records.iter().map(|o| metric.distance(rec, o)).collect();
            let mut values = rec.values.clone();
            for c in missing {
                let mut donors: Vec<usize> = (0..records.len())
                    .filter(|&j| j != ri && !records[j].values[c].is_missing() && dists[j].is_finite())
                    .collect();
                donors.sort_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(a.cmp(&b)));
                donors.truncate(cfg.k);
                if donors.is_empty() {
                    donors = (0..records.len()).filter(|&j| !records[j].values[c].is_missing()).collect();
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream((ri * n_cols + c) as u64);
                let donor_values: Vec<Value> = donors.iter().map(|&j| records[j].values[c]).collect();
                values[c] = aggregate(&ds.descriptors()[c].scale, &donor_values, &mut rng);
            }
            ProjectRecord {
                id: rec.id.clone(),
                values,
            }
        })
        .collect();
    Ok(ds.with_records(imputed))
}

fn aggregate(scale: &Scale, donors: &[Value], rng: &mut impl Rng) -> Value {
    match scale {
        Scale::Nominal(_) => {
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for v in donors {
                if let Value::Level(l) = v {
                    *counts.entry(*l).or_default() += 1;
                }
            }
            let best = counts.values().copied().max().unwrap_or(0);
            let modes: Vec<usize> = counts.iter().filter(|&(_, &n)| n == best).map(|(&l, _)| l).collect();
            let pick = if modes.len() > 1 { rng.gen_range(0..modes.len()) } else { 0 };
            Value::Level(modes[pick])
        }
        _ => {
            let xs: Vec<f64> = donors.iter().filter_map(|v| v.as_f64()).collect();
            let m = crate::stats::mean(&xs);
            match scale {
                Scale::Continuous => Value::Number(m),
                Scale::Integer => Value::Number(m.round()),
                Scale::Ordinal(_) => Value::Level(m.round() as usize),
                Scale::Nominal(_) => unreachable!(),
            }
        }
    }
}
