//! Project dataset model: typed factor descriptors, records with explicit
//! missing cells, CSV/JSON ingestion, missingness profiling, pruning and
//! min-max normalization.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Literal token marking a missing cell in data files.
pub const MISSING_TOKEN: &str = "?";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Independent,
    Dependent,
    Identifier,
    Size,
}

impl Role {
    /// Predictors are the columns analysed as candidate factors.
    pub fn is_predictor(self) -> bool {
        matches!(self, Role::Independent | Role::Size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Project,
    Process,
    Personnel,
    Product,
    Context,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scale {
    Continuous,
    Integer,
    /// Ordered levels, mapped to `0..L-1`.
    Ordinal(Vec<String>),
    /// Unordered levels.
    Nominal(Vec<String>),
}

impl Scale {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Scale::Continuous | Scale::Integer)
    }

    /// Numeric and ordinal scales support differences and means.
    pub fn is_ordered(&self) -> bool {
        !matches!(self, Scale::Nominal(_))
    }

    pub fn levels(&self) -> Option<&[String]> {
        match self {
            Scale::Ordinal(l) | Scale::Nominal(l) => Some(l),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Scale::Continuous => "continuous",
            Scale::Integer => "integer",
            Scale::Ordinal(_) => "ordinal",
            Scale::Nominal(_) => "nominal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorDescriptor {
    pub name: String,
    pub scale: Scale,
    pub role: Role,
    pub category: Option<Category>,
}

impl FactorDescriptor {
    pub fn new(name: impl Into<String>, scale: Scale, role: Role) -> Self {
        FactorDescriptor {
            name: name.into(),
            scale,
            role,
            category: None,
        }
    }

    pub fn with_category(mut self, category: Category) -> Self {
        self.category = Some(category);
        self
    }

    fn parse_cell(&self, raw: &str) -> std::result::Result<Value, String> {
        if raw == MISSING_TOKEN {
            return Ok(Value::Missing);
        }
        if raw.is_empty() {
            return Err(format!("empty cell for factor '{}' (use '?' for missing)", self.name));
        }
        match &self.scale {
            Scale::Continuous => raw
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Value::Number)
                .ok_or_else(|| format!("factor '{}': '{raw}' is not a finite number", self.name)),
            Scale::Integer => raw
                .parse::<i64>()
                .map(|v| Value::Number(v as f64))
                .map_err(|_| format!("factor '{}': '{raw}' is not an integer", self.name)),
            Scale::Ordinal(levels) | Scale::Nominal(levels) => levels
                .iter()
                .position(|l| l == raw)
                .map(Value::Level)
                .ok_or_else(|| format!("factor '{}': '{raw}' is not a declared level", self.name)),
        }
    }

    /// Renders a cell the way `load_dataset` reads it back.
    pub fn format_value(&self, value: Value) -> String {
        match value {
            Value::Missing => MISSING_TOKEN.to_string(),
            Value::Number(v) => match self.scale {
                Scale::Integer if v.fract() == 0.0 => format!("{}", v as i64),
                _ => format!("{v}"),
            },
            Value::Level(i) => self
                .scale
                .levels()
                .and_then(|l| l.get(i))
                .cloned()
                .unwrap_or_else(|| i.to_string()),
        }
    }

    fn check_value(&self, value: Value) -> std::result::Result<(), String> {
        match (value, &self.scale) {
            (Value::Missing, _) => Ok(()),
            (Value::Number(v), Scale::Continuous) if v.is_finite() => Ok(()),
            (Value::Number(v), Scale::Integer) if v.is_finite() && v.fract() == 0.0 => Ok(()),
            (Value::Level(i), Scale::Ordinal(l) | Scale::Nominal(l)) if i < l.len() => Ok(()),
            (v, s) => Err(format!(
                "factor '{}': value {v} does not conform to {} scale",
                self.name,
                s.kind_name()
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Missing,
    Number(f64),
    /// Index into the descriptor's declared levels.
    Level(usize),
}

impl Value {
    pub fn is_missing(self) -> bool {
        matches!(self, Value::Missing)
    }

    /// Numeric view: numbers as-is, levels as their index.
    pub fn as_f64(self) -> Option<f64> {
        match self {
            Value::Missing => None,
            Value::Number(v) => Some(v),
            Value::Level(i) => Some(i as f64),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Missing => f.write_str(MISSING_TOKEN),
            Value::Number(v) => write!(f, "{v}"),
            Value::Level(i) => write!(f, "level#{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectRecord {
    pub id: String,
    /// One value per dataset descriptor, in descriptor order.
    pub values: Vec<Value>,
}

/// Validated, immutable project repository.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    id_column: String,
    descriptors: Vec<FactorDescriptor>,
    records: Vec<ProjectRecord>,
}

impl Dataset {
    /// Builds a dataset, checking every invariant. `descriptors` must not
    /// contain the identifier column; record ids live in `ProjectRecord::id`.
    pub fn new(
        id_column: impl Into<String>,
        descriptors: Vec<FactorDescriptor>,
        records: Vec<ProjectRecord>,
    ) -> Result<Self> {
        let id_column = id_column.into();
        let mut names = HashSet::new();
        names.insert(id_column.as_str());
        for d in &descriptors {
            if !names.insert(d.name.as_str()) {
                return Err(Error::Validation(format!("duplicate factor name '{}'", d.name)));
            }
            if d.role == Role::Identifier {
                return Err(Error::Validation(format!(
                    "factor '{}': only one identifier column is allowed",
                    d.name
                )));
            }
            if let Some(levels) = d.scale.levels() {
                if levels.len() < 2 {
                    return Err(Error::Validation(format!(
                        "factor '{}': {} scale needs at least 2 levels",
                        d.name,
                        d.scale.kind_name()
                    )));
                }
                let distinct: HashSet<_> = levels.iter().collect();
                if distinct.len() != levels.len() {
                    return Err(Error::Validation(format!("factor '{}': duplicate level", d.name)));
                }
            }
            if d.role == Role::Dependent && !d.scale.is_numeric() {
                return Err(Error::Validation(format!(
                    "dependent variable '{}' must be numeric",
                    d.name
                )));
            }
        }
        let dependents: Vec<_> = descriptors.iter().filter(|d| d.role == Role::Dependent).collect();
        if dependents.len() > 1 {
            return Err(Error::Validation(format!(
                "more than one dependent variable: {}",
                dependents.iter().map(|d| d.name.as_str()).collect::<Vec<_>>().join(", ")
            )));
        }
        let dep_idx = descriptors.iter().position(|d| d.role == Role::Dependent);

        let mut ids = HashSet::new();
        for r in &records {
            if !ids.insert(r.id.as_str()) {
                return Err(Error::Validation(format!("duplicate record id '{}'", r.id)));
            }
            if r.values.len() != descriptors.len() {
                return Err(Error::Validation(format!(
                    "record '{}' has {} values, expected {}",
                    r.id,
                    r.values.len(),
                    descriptors.len()
                )));
            }
            for (d, v) in descriptors.iter().zip(&r.values) {
                d.check_value(*v)
                    .map_err(|m| Error::Validation(format!("record '{}': {m}", r.id)))?;
            }
            if let Some(j) = dep_idx {
                if let Value::Number(v) = r.values[j] {
                    if v <= 0.0 {
                        return Err(Error::Validation(format!(
                            "record '{}': dependent variable '{}' must be strictly positive, got {v}",
                            r.id, descriptors[j].name
                        )));
                    }
                }
            }
        }
        Ok(Dataset {
            id_column,
            descriptors,
            records,
        })
    }

    pub fn id_column(&self) -> &str {
        &self.id_column
    }

    pub fn descriptors(&self) -> &[FactorDescriptor] {
        &self.descriptors
    }

    pub fn records(&self) -> &[ProjectRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.descriptors.iter().position(|d| d.name == name)
    }

    pub fn record_index(&self, id: &str) -> Option<usize> {
        self.records.iter().position(|r| r.id == id)
    }

    pub fn dependent_index(&self) -> Result<usize> {
        self.descriptors
            .iter()
            .position(|d| d.role == Role::Dependent)
            .ok_or_else(|| Error::Validation("dataset has no dependent variable".into()))
    }

    /// Column indices of candidate factors, in descriptor order.
    pub fn predictor_indices(&self) -> Vec<usize> {
        (0..self.descriptors.len())
            .filter(|&i| self.descriptors[i].role.is_predictor())
            .collect()
    }

    pub fn predictor_names(&self) -> Vec<String> {
        self.predictor_indices()
            .into_iter()
            .map(|i| self.descriptors[i].name.clone())
            .collect()
    }

    /// Resolves factor names to column indices; unknown names are an error.
    pub fn resolve_factors<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                let n = n.as_ref();
                match self.column_index(n) {
                    Some(i) if self.descriptors[i].role.is_predictor() => Ok(i),
                    Some(_) => Err(Error::InvalidArgument(format!("'{n}' is not a predictor factor"))),
                    None => Err(Error::InvalidArgument(format!("unknown factor '{n}'"))),
                }
            })
            .collect()
    }

    /// True when no predictor cell is missing.
    pub fn is_complete(&self) -> bool {
        let cols = self.predictor_indices();
        self.records
            .iter()
            .all(|r| cols.iter().all(|&c| !r.values[c].is_missing()))
    }

    /// Same schema, records replaced. Values are assumed to conform already.
    pub(crate) fn with_records(&self, records: Vec<ProjectRecord>) -> Dataset {
        Dataset {
            id_column: self.id_column.clone(),
            descriptors: self.descriptors.clone(),
            records,
        }
    }

    /// Copy without the record at `idx`.
    pub fn without_record(&self, idx: usize) -> Dataset {
        let records = self
            .records
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != idx)
            .map(|(_, r)| r.clone())
            .collect();
        self.with_records(records)
    }

    /// Keeps only descriptors at `keep_cols` (in order) and records at `keep_rows`.
    pub(crate) fn subset(&self, keep_cols: &[usize], keep_rows: &[usize]) -> Dataset {
        let descriptors = keep_cols.iter().map(|&c| self.descriptors[c].clone()).collect();
        let records = keep_rows
            .iter()
            .map(|&r| {
                let rec = &self.records[r];
                ProjectRecord {
                    id: rec.id.clone(),
                    values: keep_cols.iter().map(|&c| rec.values[c]).collect(),
                }
            })
            .collect();
        Dataset {
            id_column: self.id_column.clone(),
            descriptors,
            records,
        }
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        let mut header = vec![self.id_column.clone()];
        header.extend(self.descriptors.iter().map(|d| d.name.clone()));
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.id.clone()];
            row.extend(self.descriptors.iter().zip(&r.values).map(|(d, v)| d.format_value(*v)));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Infeasible(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()?).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ScaleKind {
    Continuous,
    Integer,
    Ordinal,
    Nominal,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ColumnSpec {
    scale: ScaleKind,
    role: Role,
    #[serde(default)]
    category: Option<Category>,
    #[serde(default)]
    levels: Option<Vec<String>>,
}

/// Column schema: name → scale/role/category/levels.
#[derive(Debug, Clone)]
pub struct Schema {
    columns: BTreeMap<String, ColumnSpec>,
}

impl Schema {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let columns: BTreeMap<String, ColumnSpec> = serde_json::from_str(text)?;
        Ok(Schema { columns })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let columns: BTreeMap<String, ColumnSpec> =
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: e.line() as u64,
                message: e.to_string(),
            })?;
        Ok(Schema { columns })
    }

    fn descriptor(&self, name: &str) -> Result<FactorDescriptor> {
        let spec = self
            .columns
            .get(name)
            .ok_or_else(|| Error::Validation(format!("column '{name}' is not declared in the schema")))?;
        let levels = || {
            spec.levels.clone().ok_or_else(|| {
                Error::Validation(format!("column '{name}': ordinal/nominal scale needs 'levels'"))
            })
        };
        let scale = match spec.scale {
            ScaleKind::Continuous | ScaleKind::Integer if spec.levels.is_some() && spec.role != Role::Identifier => {
                return Err(Error::Validation(format!(
                    "column '{name}': 'levels' only apply to ordinal/nominal scales"
                )));
            }
            ScaleKind::Continuous => Scale::Continuous,
            ScaleKind::Integer => Scale::Integer,
            // The identifier column is free text whatever its declared scale.
            _ if spec.role == Role::Identifier => Scale::Nominal(Vec::new()),
            ScaleKind::Ordinal => Scale::Ordinal(levels()?),
            ScaleKind::Nominal => Scale::Nominal(levels()?),
        };
        Ok(FactorDescriptor {
            name: name.to_string(),
            scale,
            role: spec.role,
            category: spec.category,
        })
    }
}

/// Reads a CSV data file against a JSON schema.
pub fn load_dataset(data: impl AsRef<Path>, schema: impl AsRef<Path>) -> Result<Dataset> {
    let schema = Schema::load(schema)?;
    let data = data.as_ref();
    let text = fs::read_to_string(data).map_err(|e| Error::io(data, e))?;
    parse_dataset(&text, &schema, data)
}

/// Parses CSV text; `origin` is only used in error messages.
pub fn parse_dataset(text: &str, schema: &Schema, origin: &Path) -> Result<Dataset> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();

    let mut columns = Vec::with_capacity(header.len());
    for name in &header {
        columns.push(schema.descriptor(name)?);
    }
    let id_positions: Vec<usize> = (0..columns.len())
        .filter(|&i| columns[i].role == Role::Identifier)
        .collect();
    let id_pos = match id_positions.as_slice() {
        [p] => *p,
        [] => return Err(Error::Validation("no column has role 'identifier'".into())),
        _ => return Err(Error::Validation("more than one identifier column".into())),
    };

    let mut records = Vec::new();
    for (row_no, row) in reader.records().enumerate() {
        let line = row_no as u64 + 2;
        let row = row.map_err(|e| parse_err(line, e.to_string()))?;
        if row.len() != header.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", header.len(), row.len()),
            ));
        }
        let id = row[id_pos].to_string();
        if id.is_empty() || id == MISSING_TOKEN {
            return Err(parse_err(line, "record id must be present".into()));
        }
        let mut values = Vec::with_capacity(header.len() - 1);
        for (i, raw) in row.iter().enumerate() {
            if i == id_pos {
                continue;
            }
            let v = columns[i]
                .parse_cell(raw)
                .map_err(|m| Error::Validation(format!("record '{id}': {m}")))?;
            values.push(v);
        }
        records.push(ProjectRecord { id, values });
    }
    let id_column = columns.remove(id_pos).name;
    Dataset::new(id_column, columns, records)
}

/// Missing-cell ratios over predictor columns only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissingnessProfile {
    pub factors: Vec<(String, f64)>,
    pub records: Vec<(String, f64)>,
    pub missing_cells: usize,
    pub total_cells: usize,
    pub total: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn profile_missingness(ds: &Dataset) -> MissingnessProfile {
    let cols = ds.predictor_indices();
    let n = ds.len();
    let factors = cols
        .iter()
        .map(|&c| {
            let miss = ds.records.iter().filter(|r| r.values[c].is_missing()).count();
            (ds.descriptors[c].name.clone(), ratio(miss, n))
        })
        .collect();
    let mut missing_cells = 0;
    let records = ds
        .records
        .iter()
        .map(|r| {
            let miss = cols.iter().filter(|&&c| r.values[c].is_missing()).count();
            missing_cells += miss;
            (r.id.clone(), ratio(miss, cols.len()))
        })
        .collect();
    let total_cells = cols.len() * n;
    MissingnessProfile {
        factors,
        records,
        missing_cells,
        total_cells,
        total: ratio(missing_cells, total_cells),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruneThresholds {
    /// Factors with missing ratio `>=` this are dropped.
    pub factor: f64,
    /// Records with missing ratio `>` this are dropped.
    pub project: f64,
}

impl Default for PruneThresholds {
    fn default() -> Self {
        PruneThresholds {
            factor: 0.90,
            project: 0.55,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PruneOutcome {
    pub dataset: Dataset,
    pub dropped_factors: Vec<String>,
    pub dropped_records: Vec<String>,
}

/// Drops mostly-missing factors, then (on the remaining factors) mostly-missing
/// records. The factor-then-record round repeats until nothing changes, so the
/// result is a fixed point of the procedure.
pub fn prune_missing(ds: &Dataset, thresholds: PruneThresholds) -> Result<PruneOutcome> {
    for (name, t) in [("factor", thresholds.factor), ("project", thresholds.project)] {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} threshold must lie in (0, 1], got {t}"
            )));
        }
    }
    let mut cols: Vec<usize> = (0..ds.descriptors.len()).collect();
    let mut rows: Vec<usize> = (0..ds.len()).collect();
    let mut dropped_factors = Vec::new();
    let mut dropped_records = Vec::new();
    let is_pred = |c: usize| ds.descriptors[c].role.is_predictor();

    loop {
        let before = (cols.len(), rows.len());

        let n = rows.len();
        cols.retain(|&c| {
            if !is_pred(c) {
                return true;
            }
            let miss = rows.iter().filter(|&&r| ds.records[r].values[c].is_missing()).count();
            let drop = ratio(miss, n) >= thresholds.factor;
            if drop {
                dropped_factors.push(ds.descriptors[c].name.clone());
            }
            !drop
        });
        let preds: Vec<usize> = cols.iter().copied().filter(|&c| is_pred(c)).collect();
        if preds.is_empty() {
            return Err(Error::Infeasible(format!(
                "pruning would remove every factor; raise the factor threshold (now {})",
                thresholds.factor
            )));
        }

        rows.retain(|&r| {
            let rec = &ds.records[r];
            let miss = preds.iter().filter(|&&c| rec.values[c].is_missing()).count();
            let drop = ratio(miss, preds.len()) > thresholds.project;
            if drop {
                dropped_records.push(rec.id.clone());
            }
            !drop
        });
        if rows.is_empty() {
            return Err(Error::Infeasible(format!(
                "pruning would remove every project; raise the project threshold (now {})",
                thresholds.project
            )));
        }

        if (cols.len(), rows.len()) == before {
            break;
        }
    }
    Ok(PruneOutcome {
        dataset: ds.subset(&cols, &rows),
        dropped_factors,
        dropped_records,
    })
}

/// Result of min-max scaling numeric predictors to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub dataset: Dataset,
    /// Observed (min, max) per scaled factor.
    pub ranges: BTreeMap<String, (f64, f64)>,
}

impl Normalized {
    /// Maps scaled values back to the original units. Constant factors come
    /// back as their constant.
    pub fn denormalize(&self, ds: &Dataset) -> Dataset {
        let cols: Vec<(usize, f64, f64)> = ds
            .descriptors
            .iter()
            .enumerate()
            .filter_map(|(i, d)| self.ranges.get(&d.name).map(|&(lo, hi)| (i, lo, hi)))
            .collect();
        let records = ds
            .records
            .iter()
            .map(|r| {
                let mut values = r.values.clone();
                for &(c, lo, hi) in &cols {
                    if let Value::Number(v) = values[c] {
                        values[c] = Value::Number(lo + v * (hi - lo));
                    }
                }
                ProjectRecord {
                    id: r.id.clone(),
                    values,
                }
            })
            .collect();
        ds.with_records(records)
    }
}

/// Scales every numeric predictor by `(v - min) / (max - min)`; constant
/// factors map to 0 and missing cells stay missing. The scaled columns are
/// re-typed as continuous.
pub fn normalize_numeric(ds: &Dataset) -> Normalized {
    let mut ranges = BTreeMap::new();
    let mut descriptors = ds.descriptors.clone();
    let mut records = ds.records.clone();
    for c in ds.predictor_indices() {
        if !ds.descriptors[c].scale.is_numeric() {
            continue;
        }
        let observed = ds.records.iter().filter_map(|r| r.values[c].as_f64());
        let Some((lo, hi)) = observed.fold(None, |acc: Option<(f64, f64)>, v| {
            Some(acc.map_or((v, v), |(lo, hi)| (lo.min(v), hi.max(v))))
        }) else {
            continue;
        };
        let span = hi - lo;
        for r in &mut records {
            if let Value::Number(v) = r.values[c] {
                r.values[c] = Value::Number(if span > 0.0 { (v - lo) / span } else { 0.0 });
            }
        }
        descriptors[c].scale = Scale::Continuous;
        ranges.insert(ds.descriptors[c].name.clone(), (lo, hi));
    }
    Normalized {
        dataset: Dataset {
            id_column: ds.id_column.clone(),
            descriptors,
            records,
        },
        ranges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &str = r#"{
        "id": {"scale": "nominal", "role": "identifier"},
        "prod": {"scale": "continuous", "role": "dependent"},
        "f1": {"scale": "continuous", "role": "independent", "category": "project"},
        "f2": {"scale": "integer", "role": "independent"},
        "f3": {"scale": "continuous", "role": "independent"},
        "f4": {"scale": "ordinal", "role": "independent", "levels": ["low", "mid", "high"]},
        "f5": {"scale": "nominal", "role": "independent", "levels": ["a", "b"]}
    }"#;

    fn parse(text: &str) -> Result<Dataset> {
        parse_dataset(text, &Schema::from_json_str(SCHEMA).unwrap(), Path::new("test.csv"))
    }

    #[test]
    fn minimal_file_loads() {
        let ds = parse("id,prod\np1,10\np2,20\n").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.id_column(), "id");
        assert_eq!(profile_missingness(&ds).total, 0.0);
        assert_eq!(ds.records()[1].values, vec![Value::Number(20.0)]);
    }

    #[test]
    fn duplicate_id_names_record() {
        let err = parse("id,prod\np1,10\np1,10\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert!(err.to_string().contains("p1"), "{err}");
    }

    #[test]
    fn wrong_arity_reports_line() {
        let err = parse("id,prod,f1\np1,10,1\np2,20\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nonconforming_value_names_factor_and_record() {
        let err = parse("id,prod,f2\np1,10,1.5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("f2") && msg.contains("p1"), "{msg}");
        let err = parse("id,prod,f4\np1,10,huge\n").unwrap_err();
        assert!(err.to_string().contains("f4"));
    }

    #[test]
    fn empty_cell_is_an_error_not_missing() {
        assert!(parse("id,prod,f1\np1,10,\n").is_err());
    }

    #[test]
    fn undeclared_column_rejected() {
        let err = parse("id,prod,zzz\np1,10,1\n").unwrap_err();
        assert!(err.to_string().contains("zzz"));
    }

    #[test]
    fn unknown_schema_key_rejected() {
        let bad = r#"{"id": {"scale": "nominal", "role": "identifier", "colour": "red"}}"#;
        assert!(Schema::from_json_str(bad).is_err());
    }

    #[test]
    fn nonpositive_dependent_rejected() {
        assert!(parse("id,prod\np1,0\n").is_err());
        assert!(parse("id,prod\np1,?\n").is_ok());
    }

    #[test]
    fn missing_ratio_counts_independent_cells_only() {
        // 3 records x (prod, f1, f3): one predictor cell missing, one dependent missing.
        let ds = parse("id,prod,f1,f3\np1,1,1,?\np2,?,2,2\np3,3,3,3\n").unwrap();
        let p = profile_missingness(&ds);
        assert_eq!(p.total_cells, 6);
        assert_eq!(p.missing_cells, 1);
        assert!((p.total - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(p.factors, vec![("f1".into(), 0.0), ("f3".into(), 1.0 / 3.0)]);
        assert_eq!(p.records[0], ("p1".into(), 0.5));
    }

    #[test]
    fn half_missing_gives_half() {
        let ds = parse("id,prod,f1,f3\np1,1,1,?\np2,2,?,2\n").unwrap();
        assert_eq!(profile_missingness(&ds).total, 0.5);
    }

    /// Five factors, six projects. f5 is entirely missing. p6 lacks f1..f3
    /// (3 of 4 after f5 goes). p5 lacks f1, f2 and f5: 3/5 = 0.6 before the
    /// factor pass but 2/4 = 0.5 after it, so it survives only because the
    /// factor pass runs first.
    pub(crate) const PRUNE_FIXTURE: &str = "id,prod,f1,f2,f3,f4,f5\n\
        p1,10,1,2,3,low,?\n\
        p2,12,2,3,4,mid,?\n\
        p3,14,3,4,5,high,?\n\
        p4,16,4,5,6,low,?\n\
        p5,18,?,?,7,mid,?\n\
        p6,20,?,?,?,high,?\n";

    #[test]
    fn prune_fixture_drops_exactly_hand_count() {
        let ds = parse(PRUNE_FIXTURE).unwrap();
        let out = prune_missing(&ds, PruneThresholds::default()).unwrap();
        assert_eq!(out.dropped_factors, vec!["f5"]);
        assert_eq!(out.dropped_records, vec!["p6"]);
        assert_eq!(out.dataset.predictor_names(), vec!["f1", "f2", "f3", "f4"]);
        assert_eq!(out.dataset.len(), 5);
        let again = prune_missing(&out.dataset, PruneThresholds::default()).unwrap();
        assert_eq!(again.dataset, out.dataset);
        assert!(again.dropped_factors.is_empty() && again.dropped_records.is_empty());
    }

    #[test]
    fn prune_complete_is_identity() {
        let ds = parse("id,prod,f1,f3\np1,1,1,1\np2,2,2,2\n").unwrap();
        let out = prune_missing(&ds, PruneThresholds::default()).unwrap();
        assert_eq!(out.dataset, ds);
    }

    #[test]
    fn prune_everything_is_an_error() {
        let ds = parse("id,prod,f1,f3\np1,1,?,?\np2,2,?,?\n").unwrap();
        let err = prune_missing(&ds, PruneThresholds::default()).unwrap_err();
        assert!(err.to_string().contains("threshold"));
        assert!(prune_missing(&ds, PruneThresholds { factor: 0.0, project: 0.5 }).is_err());
    }

    #[test]
    fn normalize_examples() {
        let ds = parse("id,prod,f1,f2,f3\np1,1,10,7,0\np2,2,20,7,1\np3,3,30,7,?\n").unwrap();
        let n = normalize_numeric(&ds);
        let col = |c: usize| -> Vec<Value> { n.dataset.records().iter().map(|r| r.values[c]).collect() };
        assert_eq!(col(1), vec![Value::Number(0.0), Value::Number(0.5), Value::Number(1.0)]);
        assert_eq!(col(2), vec![Value::Number(0.0); 3]);
        assert_eq!(col(3), vec![Value::Number(0.0), Value::Number(1.0), Value::Missing]);
        // dependent untouched
        assert_eq!(col(0), vec![Value::Number(1.0), Value::Number(2.0), Value::Number(3.0)]);
        assert_eq!(n.ranges["f1"], (10.0, 30.0));
    }

    #[test]
    fn csv_round_trip_preserves_values() {
        let text = "id,prod,f1,f2,f4,f5\np1,10.5,0.25,3,low,a\np2,?,?,4,high,b\n";
        let ds = parse(text).unwrap();
        assert_eq!(ds.to_csv_string().unwrap(), text);
    }
}
