//! Heterogeneous Euclidean/overlap distance over mixed-scale factors.

use crate::data::{Dataset, ProjectRecord, Value};

#[derive(Debug, Clone, Copy)]
enum ColumnDiff {
    /// Numeric or ordinal: `|a - b| / span` over the observed range.
    Ordered { span: f64 },
    /// Nominal: 0 when equal, 1 otherwise.
    Overlap,
}

/// Per-factor differences and their combination into a record distance,
/// fitted to the observed value ranges of a set of records.
#[derive(Debug, Clone)]
pub struct HeterogeneousMetric {
    columns: Vec<(usize, ColumnDiff)>,
}

impl HeterogeneousMetric {
    /// Fits ranges on every record of `ds` for the given columns.
    pub fn fit(ds: &Dataset, columns: &[usize]) -> Self {
        Self::fit_records(ds, ds.records().iter(), columns)
    }

    /// Fits ranges on an explicit record set (the records need not belong to `ds`,
    /// but must share its descriptor layout).
    pub fn fit_records<'a>(
        ds: &Dataset,
        records: impl Iterator<Item = &'a ProjectRecord> + Clone,
        columns: &[usize],
    ) -> Self {
        let columns = columns
            .iter()
            .map(|&c| {
                let kind = if ds.descriptors()[c].scale.is_ordered() {
                    let (lo, hi) = records
                        .clone()
                        .filter_map(|r| r.values[c].as_f64())
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                            (lo.min(v), hi.max(v))
                        });
                    ColumnDiff::Ordered {
                        span: if hi > lo { hi - lo } else { 0.0 },
                    }
                } else {
                    ColumnDiff::Overlap
                };
                (c, kind)
            })
            .collect();
        HeterogeneousMetric { columns }
    }

    pub fn columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.columns.iter().map(|&(c, _)| c)
    }

    fn diff_kind(kind: ColumnDiff, a: Value, b: Value) -> Option<f64> {
        match kind {
            ColumnDiff::Ordered { span } => {
                let (a, b) = (a.as_f64()?, b.as_f64()?);
                Some(if span > 0.0 { (a - b).abs() / span } else { 0.0 })
            }
            ColumnDiff::Overlap => match (a, b) {
                (Value::Missing, _) | (_, Value::Missing) => None,
                (a, b) => Some(if a == b { 0.0 } else { 1.0 }),
            },
        }
    }

    /// Normalized difference on column `col`, `None` when either side is missing
    /// or the column is not part of this metric.
    pub fn diff(&self, col: usize, a: Value, b: Value) -> Option<f64> {
        let &(_, kind) = self.columns.iter().find(|&&(c, _)| c == col)?;
        Self::diff_kind(kind, a, b)
    }

    /// `sqrt(mean of squared per-factor diffs)` over jointly observed factors;
    /// infinite when the pair shares no observed factor.
    pub fn distance(&self, a: &ProjectRecord, b: &ProjectRecord) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for &(c, kind) in &self.columns {
            if let Some(d) = Self::diff_kind(kind, a.values[c], b.values[c]) {
                sum += d * d;
                n += 1;
            }
        }
        if n == 0 {
            f64::INFINITY
        } else {
            (sum / n as f64).sqrt()
        }
    }
}
