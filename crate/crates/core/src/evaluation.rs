//! Leave-one-out evaluation of estimators over factor sets: MRE, MMRE,
//! MdMRE, Pred(25) and one-way ANOVA on MRE.

use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{EstimationQuery, EstimatorConfig, OsrTrace};
use crate::relief::FactorSet;
use crate::stats::{f_sf, mean, median};

/// Two results differ significantly when `p` is below this level.
pub const SIGNIFICANCE_LEVEL: f64 = 0.02;

/// Pred(25) counts estimates with MRE at or below this.
pub const PRED_LEVEL: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRecord {
    pub project_id: String,
    pub actual: f64,
    pub predicted: f64,
    pub mre: f64,
}

impl EstimateRecord {
    pub fn new(project_id: impl Into<String>, actual: f64, predicted: f64) -> Result<Self> {
        Ok(EstimateRecord {
            project_id: project_id.into(),
            actual,
            predicted,
            mre: mre(actual, predicted)?,
        })
    }
}

/// Magnitude of relative error `|actual - predicted| / actual`.
pub fn mre(actual: f64, predicted: f64) -> Result<f64> {
    if actual.is_nan() || actual <= 0.0 {
        return Err(Error::InvalidArgument(format!("MRE needs a positive actual value, got {actual}")));
    }
    Ok((actual - predicted).abs() / actual)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsSummary {
    pub mmre: f64,
    pub mdmre: f64,
    pub pred25: f64,
    pub n: usize,
}

pub fn summarize(records: &[EstimateRecord]) -> Result<MetricsSummary> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("cannot summarize an empty estimate list".into()));
    }
    let mres: Vec<f64> = records.iter().map(|r| r.mre).collect();
    let hits = mres.iter().filter(|&&m| m <= PRED_LEVEL).count();
    Ok(MetricsSummary {
        mmre: mean(&mres),
        mdmre: median(&mres).expect("non-empty"),
        pred25: hits as f64 / mres.len() as f64,
        n: mres.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnovaResult {
    pub f: f64,
    pub p_value: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub significant: bool,
    /// Zero within-group variance with differing means: F is infinite.
    pub degenerate: bool,
}

/// One-way fixed-effects ANOVA over any number of groups.
pub fn one_way_anova(groups: &[&[f64]]) -> Result<AnovaResult> {
    if groups.len() < 2 || groups.iter().any(|g| g.len() < 2) {
        return Err(Error::InvalidArgument("ANOVA needs at least 2 groups of at least 2 values".into()));
    }
    let n: usize = groups.iter().map(|g| g.len()).sum();
    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let m = mean(g);
        ss_between += g.len() as f64 * (m - grand).powi(2);
        ss_within += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let df_between = groups.len() - 1;
    let df_within = n - groups.len();
    let result = |f: f64, p: f64, degenerate| AnovaResult {
        f,
        p_value: p,
        df_between,
        df_within,
        significant: p < SIGNIFICANCE_LEVEL,
        degenerate,
    };
    // relative scale for "zero" so that rounding noise in equal means stays 0
    let scale = groups.iter().flat_map(|g| g.iter()).map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
    if ss_within <= scale * 1e-24 {
        return Ok(if ss_between <= scale * 1e-24 {
            result(0.0, 1.0, false)
        } else {
            result(f64::INFINITY, 0.0, true)
        });
    }
    let f = (ss_between / df_between as f64) / (ss_within / df_within as f64);
    Ok(result(f, f_sf(f, df_between as f64, df_within as f64), false))
}

/// Two-group ANOVA of MRE lists; equivalent to the pooled two-sample t-test.
pub fn anova_mre(a: &[f64], b: &[f64]) -> Result<AnovaResult> {
    one_way_anova(&[a, b])
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoocvRun {
    /// One estimate per eligible record, in dataset order.
    pub records: Vec<EstimateRecord>,
    /// OSR traces in the same order (empty for k-NN).
    pub traces: Vec<OsrTrace>,
    /// Records without a usable dependent value.
    pub excluded: Vec<String>,
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::Infeasible(format!("thread pool: {e}"))),
        _ => Ok(f()),
    }
}

/// Estimates every record from all the others, restricted to `fs`.
///
/// Folds run in parallel (on a pool of `jobs` threads when given) and are
/// collected in dataset order, so results match a sequential run.
pub fn loocv(ds: &Dataset, est: &EstimatorConfig, fs: &FactorSet, jobs: Option<usize>) -> Result<LoocvRun> {
    let dep = ds.dependent_index()?;
    let mut eligible = Vec::new();
    let mut excluded = Vec::new();
    for (i, r) in ds.records().iter().enumerate() {
        match r.values[dep].as_f64() {
            Some(y) if y > 0.0 => eligible.push((i, y)),
            _ => excluded.push(r.id.clone()),
        }
    }
    if eligible.len() < 3 {
        return Err(Error::Infeasible(format!(
            "leave-one-out needs at least 3 records with a dependent value, found {}",
            eligible.len()
        )));
    }
    let folds: Vec<Result<(EstimateRecord, Option<OsrTrace>)>> = with_jobs(jobs, || {
        eligible
            .par_iter()
            .map(|&(i, actual)| {
                let target = &ds.records()[i];
                let train = ds.without_record(i);
                assert!(
                    train.records().iter().all(|r| r.id != target.id),
                    "fold for '{}' leaks the held-out record",
                    target.id
                );
                let q = EstimationQuery {
                    record: target,
                    factors: fs,
                };
                let p = est.predict(&train, &q)?;
                Ok((EstimateRecord::new(target.id.clone(), actual, p.value)?, p.trace))
            })
            .collect()
    })?;
    let mut records = Vec::with_capacity(folds.len());
    let mut traces = Vec::new();
    for f in folds {
        let (r, t) = f?;
        records.push(r);
        traces.extend(t);
    }
    Ok(LoocvRun {
        records,
        traces,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub estimator: String,
    pub factor_set: String,
    /// Factors actually used (measured members of the set).
    pub factors: Vec<String>,
    pub summary: MetricsSummary,
    pub estimates: Vec<EstimateRecord>,
    #[serde(skip)]
    pub traces: Vec<OsrTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaComparison {
    pub estimator: String,
    pub set_a: String,
    pub set_b: String,
    pub result: AnovaResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub records: usize,
    pub eligible: usize,
    pub excluded: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub anova: Vec<AnovaComparison>,
}

/// Narrows a factor set to the factors measured in `ds`.
pub fn estimation_set(ds: &Dataset, fs: &FactorSet) -> Result<FactorSet> {
    let measured: HashSet<String> = ds.predictor_names().into_iter().collect();
    FactorSet::new(
        fs.label.clone(),
        fs.provenance,
        fs.factors.iter().filter(|f| measured.contains(*f)).cloned(),
    )
    .map_err(|_| Error::Infeasible(format!("factor set {} has no measured factor", fs.label)))
}

/// LOOCV of every estimator on every set, plus pairwise ANOVA between the
/// sets of each estimator. Rows keep the given estimator order, then set order.
pub fn compare_factor_sets(
    ds: &Dataset,
    estimators: &[EstimatorConfig],
    sets: &[FactorSet],
    jobs: Option<usize>,
) -> Result<EvaluationReport> {
    let mut seen = HashSet::new();
    for e in estimators {
        for s in sets {
            if !seen.insert((e.label(), s.label.clone())) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate report row ({}, {})",
                    e.label(),
                    s.label
                )));
            }
        }
    }
    let usable: Vec<FactorSet> = sets.iter().map(|s| estimation_set(ds, s)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut anova = Vec::new();
    let mut excluded = Vec::new();
    for e in estimators {
        let first = rows.len();
        for s in &usable {
            let run = loocv(ds, e, s, jobs)?;
            excluded = run.excluded;
            rows.push(ReportRow {
                estimator: e.label(),
                factor_set: s.label.clone(),
                factors: s.factors.iter().cloned().collect(),
                summary: summarize(&run.records)?,
                estimates: run.records,
                traces: run.traces,
            });
        }
        let group = &rows[first..];
        for i in 0..group.len() {
            for j in i + 1..group.len() {
                let mres = |r: &ReportRow| r.estimates.iter().map(|x| x.mre).collect::<Vec<_>>();
                anova.push(AnovaComparison {
                    estimator: e.label(),
                    set_a: group[i].factor_set.clone(),
                    set_b: group[j].factor_set.clone(),
                    result: anova_mre(&mres(&group[i]), &mres(&group[j]))?,
                });
            }
        }
    }
    let eligible = rows.first().map_or(0, |r| r.summary.n);
    Ok(EvaluationReport {
        records: ds.len(),
        eligible,
        excluded,
        rows,
        anova,
    })
}

/// Percentage with one decimal, e.g. `73.7%`.
pub fn percent(x: f64) -> String {
    format!("{:.1}%", x * 100.0)
}

impl EvaluationReport {
    /// `estimator,factor_set,n,mmre,mdmre,pred25` at full precision.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["estimator", "factor_set", "n", "mmre", "mdmre", "pred25"])?;
        for r in &self.rows {
            w.write_record([
                r.estimator.clone(),
                r.factor_set.clone(),
                r.summary.n.to_string(),
                format!("{}", r.summary.mmre),
                format!("{}", r.summary.mdmre),
                format!("{}", r.summary.pred25),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Infeasible(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Terminal table: one block per estimator, then the ANOVA comparisons.
    pub fn to_text_table(&self) -> String {
        let pw = self.rows.iter().map(|r| r.estimator.len()).max().unwrap_or(0).max("Predictor".len());
        let sw = self.rows.iter().map(|r| r.factor_set.len()).max().unwrap_or(0).max("Factors Set".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<pw$}  {:<sw$}  {:>7}  {:>7}  {:>7}",
            "Predictor", "Factors Set", "MMRE", "MdMRE", "Pred.25"
        );
        let mut last = "";
        for r in &self.rows {
            let name = if r.estimator == last { "" } else { r.estimator.as_str() };
            last = &r.estimator;
            let _ = writeln!(
                out,
                "{:<pw$}  {:<sw$}  {:>7}  {:>7}  {:>7}",
                name,
                r.factor_set,
                percent(r.summary.mmre),
                percent(r.summary.mdmre),
                percent(r.summary.pred25)
            );
        }
        if !self.anova.is_empty() {
            let _ = writeln!(out, "\nANOVA of MRE (significant at p < {SIGNIFICANCE_LEVEL})");
            for a in &self.anova {
                let _ = writeln!(
                    out,
                    "{:<pw$}  {} vs {}: F = {:.3}, p = {:.3}{}",
                    a.estimator,
                    a.set_a,
                    a.set_b,
                    a.result.f,
                    a.result.p_value,
                    if a.result.significant { " *" } else { "" }
                );
            }
        }
        if !self.excluded.is_empty() {
            let _ = writeln!(out, "\n{} record(s) excluded (no positive dependent value)", self.excluded.len());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recs(mres: &[f64]) -> Vec<EstimateRecord> {
        mres.iter()
            .enumerate()
            .map(|(i, &m)| EstimateRecord {
                project_id: format!("p{i}"),
                actual: 1.0,
                predicted: 1.0 + m,
                mre: m,
            })
            .collect()
    }

    #[test]
    fn mre_examples() {
        assert_eq!(mre(100.0, 100.0).unwrap(), 0.0);
        assert_eq!(mre(100.0, 75.0).unwrap(), 0.25);
        assert_eq!(mre(100.0, 200.0).unwrap(), 1.0);
        assert!(mre(0.0, 1.0).is_err());
        assert!(mre(-2.0, 1.0).is_err());
    }

    #[test]
    fn summarize_examples() {
        let s = summarize(&recs(&[0.1, 0.2, 0.4, 0.8])).unwrap();
        assert!((s.mmre - 0.375).abs() < 1e-12);
        assert!((s.mdmre - 0.3).abs() < 1e-12);
        assert_eq!(s.pred25, 0.5);
        let perfect = summarize(&recs(&[0.0; 5])).unwrap();
        assert_eq!((perfect.mmre, perfect.mdmre, perfect.pred25), (0.0, 0.0, 1.0));
        let one = summarize(&recs(&[0.3])).unwrap();
        assert_eq!((one.mmre, one.mdmre, one.pred25), (0.3, 0.3, 0.0));
        assert!(summarize(&[]).is_err());
        // inclusive threshold
        assert_eq!(summarize(&recs(&[0.25])).unwrap().pred25, 1.0);
    }

    #[test]
    fn anova_examples() {
        let r = anova_mre(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((r.f - 13.5).abs() < 1e-12);
        assert_eq!((r.df_between, r.df_within), (1, 4));
        assert!(!r.significant);
        let same = anova_mre(&[0.1, 0.5, 0.9], &[0.1, 0.5, 0.9]).unwrap();
        assert_eq!((same.f, same.p_value), (0.0, 1.0));
        let flat = anova_mre(&[0.2, 0.2], &[0.2, 0.2]).unwrap();
        assert_eq!((flat.f, flat.p_value, flat.degenerate), (0.0, 1.0, false));
        let split = anova_mre(&[0.2, 0.2], &[0.7, 0.7]).unwrap();
        assert_eq!(split.p_value, 0.0);
        assert!(split.degenerate && split.significant);
        assert!(anova_mre(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn percent_format() {
        assert_eq!(percent(0.737), "73.7%");
        assert_eq!(percent(0.0), "0.0%");
    }
}
