//! Hierarchical multi-criteria decision model.
//!
//! A tree of directories and criteria whose leaves are models: each model
//! maps one metric of an alternative to a preference in `[0, 1]` through a
//! value function, and every inner node aggregates its children as
//! `pref_i(a) = sum_j w_j * pref_j(a)` with sibling weights summing to 1.
//! Preferences are absolute (no normalization across alternatives), so
//! adding or removing alternatives never changes anyone else's score.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expert::CriterionScores;
use crate::relief::WeightVector;

pub const WEIGHT_TOLERANCE: f64 = 1e-9;

pub const METRIC_RRF_WEIGHT: &str = "rrf_weight";
pub const METRIC_IMPACT: &str = "expert_impact";
pub const METRIC_DIFFICULTY: &str = "expert_difficulty";
pub const METRIC_CONTROLLABILITY: &str = "expert_controllability";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Root,
    Directory,
    Criterion,
    Model,
}

impl NodeKind {
    fn may_contain(self, child: NodeKind) -> bool {
        use NodeKind::*;
        matches!(
            (self, child),
            (Root, Directory | Criterion) | (Directory, Directory | Criterion) | (Criterion, Model | Criterion)
        )
    }
}

/// Maps a metric value to a preference in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueFunction {
    /// Linear interpolation between breakpoints, constant beyond the ends.
    PiecewiseLinear(Vec<(f64, f64)>),
    /// Level lookup with a fallback for undeclared levels.
    Categorical { levels: BTreeMap<String, f64>, default: f64 },
}

impl ValueFunction {
    pub fn piecewise(points: Vec<(f64, f64)>) -> Result<Self> {
        let f = ValueFunction::PiecewiseLinear(points);
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        match self {
            ValueFunction::PiecewiseLinear(points) => {
                if points.is_empty() {
                    return Err(Error::Validation("value function needs at least one breakpoint".into()));
                }
                if points.iter().any(|&(x, y)| !x.is_finite() || !in_unit(y)) {
                    return Err(Error::Validation("breakpoints need finite x and val in [0, 1]".into()));
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::Validation("breakpoint x values must be strictly increasing".into()));
                }
            }
            ValueFunction::Categorical { levels, default } => {
                if !in_unit(*default) || levels.values().any(|&v| !in_unit(v)) {
                    return Err(Error::Validation("categorical val outputs must lie in [0, 1]".into()));
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, value: &MetricValue) -> Result<f64> {
        match (self, value) {
            (ValueFunction::PiecewiseLinear(points), MetricValue::Number(x)) => {
                let x = *x;
                let (first, last) = (points[0], points[points.len() - 1]);
                if x <= first.0 {
                    return Ok(first.1);
                }
                if x >= last.0 {
                    return Ok(last.1);
                }
                let i = points.partition_point(|p| p.0 <= x);
                let (x0, y0) = points[i - 1];
                let (x1, y1) = points[i];
                Ok(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
            }
            (ValueFunction::PiecewiseLinear(_), MetricValue::Level(l)) => Err(Error::InvalidArgument(format!(
                "piecewise-linear val cannot map categorical value '{l}'"
            ))),
            (ValueFunction::Categorical { levels, default }, v) => {
                let key = match v {
                    MetricValue::Level(l) => l.clone(),
                    MetricValue::Number(x) => format!("{x}"),
                };
                Ok(levels.get(&key).copied().unwrap_or(*default))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricValue {
    Number(f64),
    Level(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub metric: String,
    pub val: ValueFunction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McdaNode {
    pub name: String,
    pub kind: NodeKind,
    /// Weight relative to siblings; 1 for the root.
    pub weight: f64,
    pub locked: bool,
    pub children: Vec<McdaNode>,
    pub model: Option<Model>,
}

impl McdaNode {
    pub fn root(name: impl Into<String>, children: Vec<McdaNode>) -> Self {
        Self::inner(name, NodeKind::Root, 1.0, children)
    }

    pub fn inner(name: impl Into<String>, kind: NodeKind, weight: f64, children: Vec<McdaNode>) -> Self {
        McdaNode {
            name: name.into(),
            kind,
            weight,
            locked: false,
            children,
            model: None,
        }
    }

    pub fn model(name: impl Into<String>, weight: f64, metric: impl Into<String>, val: ValueFunction) -> Self {
        McdaNode {
            name: name.into(),
            kind: NodeKind::Model,
            weight,
            locked: false,
            children: Vec::new(),
            model: Some(Model {
                metric: metric.into(),
                val,
            }),
        }
    }

    pub fn locked(mut self) -> Self {
        self.locked = true;
        self
    }

    /// Checks every structural invariant of a complete decision tree.
    pub fn validate(&self) -> Result<()> {
        if self.kind != NodeKind::Root {
            return Err(Error::Validation(format!("top node '{}' must be a root", self.name)));
        }
        self.validate_node()
    }

    fn validate_node(&self) -> Result<()> {
        let here = &self.name;
        if !(0.0..=1.0).contains(&self.weight) {
            return Err(Error::Validation(format!("node '{here}': weight {} outside [0, 1]", self.weight)));
        }
        match (self.kind, &self.model) {
            (NodeKind::Model, None) => {
                return Err(Error::Validation(format!("model node '{here}' has no value function")))
            }
            (NodeKind::Model, Some(m)) => {
                if !self.children.is_empty() {
                    return Err(Error::Validation(format!("model node '{here}' must be a leaf")));
                }
                m.val
                    .validate()
                    .map_err(|e| Error::Validation(format!("model node '{here}': {e}")))?;
                return Ok(());
            }
            (_, Some(_)) => {
                return Err(Error::Validation(format!("only model nodes carry a value function ('{here}')")))
            }
            (_, None) => {}
        }
        if self.children.is_empty() {
            return Err(Error::Validation(format!("node '{here}' needs at least one child")));
        }
        for c in &self.children {
            if !self.kind.may_contain(c.kind) {
                return Err(Error::Validation(format!(
                    "{:?} node '{here}' cannot contain {:?} node '{}'",
                    self.kind, c.kind, c.name
                )));
            }
            c.validate_node()?;
        }
        let sum: f64 = self.children.iter().map(|c| c.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::Validation(format!("children of '{here}' have weights summing to {sum}")));
        }
        Ok(())
    }

    /// Metrics referenced by the model leaves.
    pub fn metrics(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_metrics(&mut out);
        out
    }

    fn collect_metrics(&self, out: &mut BTreeSet<String>) {
        if let Some(m) = &self.model {
            out.insert(m.metric.clone());
        }
        for c in &self.children {
            c.collect_metrics(out);
        }
    }

    /// Child-index path to the first node (depth-first) with this name.
    pub fn find_path(&self, name: &str) -> Option<Vec<usize>> {
        if self.name == name {
            return Some(Vec::new());
        }
        self.children.iter().enumerate().find_map(|(i, c)| {
            c.find_path(name).map(|mut p| {
                p.insert(0, i);
                p
            })
        })
    }

    pub fn node_at(&self, path: &[usize]) -> Option<&McdaNode> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => self.children.get(i)?.node_at(rest),
        }
    }

    fn node_at_mut(&mut self, path: &[usize]) -> Option<&mut McdaNode> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => self.children.get_mut(i)?.node_at_mut(rest),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: NodeSpec = serde_json::from_str(text)?;
        let node = spec.into_node(true)?;
        node.validate()?;
        Ok(node)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&NodeSpec::from_node(self))?)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    points: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    categories: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSpec {
    metric: String,
    val: ValSpec,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    lock: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    children: Option<Vec<NodeSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    model: Option<ModelSpec>,
}

impl NodeSpec {
    fn into_node(self, is_top: bool) -> Result<McdaNode> {
        let name = self.name.unwrap_or_else(|| format!("{:?}", self.kind).to_lowercase());
        let weight = match (self.weight, is_top) {
            (Some(w), _) => w,
            (None, true) => 1.0,
            (None, false) => return Err(Error::Validation(format!("node '{name}' needs a weight"))),
        };
        let model = self
            .model
            .map(|m| {
                let val = match (m.val.points, m.val.categories) {
                    (Some(p), None) => ValueFunction::PiecewiseLinear(p.into_iter().map(|[x, y]| (x, y)).collect()),
                    (None, Some(levels)) => ValueFunction::Categorical {
                        levels,
                        default: m.val.default.unwrap_or(0.0),
                    },
                    _ => {
                        return Err(Error::Validation(format!(
                            "model '{name}': val needs exactly one of 'points' or 'categories'"
                        )))
                    }
                };
                Ok(Model { metric: m.metric, val })
            })
            .transpose()?;
        let children = self
            .children
            .unwrap_or_default()
            .into_iter()
            .map(|c| c.into_node(false))
            .collect::<Result<Vec<_>>>()?;
        Ok(McdaNode {
            name,
            kind: self.kind,
            weight,
            locked: self.lock,
            children,
            model,
        })
    }

    fn from_node(n: &McdaNode) -> NodeSpec {
        NodeSpec {
            name: Some(n.name.clone()),
            kind: n.kind,
            weight: (n.kind != NodeKind::Root).then_some(n.weight),
            lock: n.locked,
            children: (!n.children.is_empty()).then(|| n.children.iter().map(NodeSpec::from_node).collect()),
            model: n.model.as_ref().map(|m| ModelSpec {
                metric: m.metric.clone(),
                val: match &m.val {
                    ValueFunction::PiecewiseLinear(p) => ValSpec {
                        points: Some(p.iter().map(|&(x, y)| [x, y]).collect()),
                        categories: None,
                        default: None,
                    },
                    ValueFunction::Categorical { levels, default } => ValSpec {
                        points: None,
                        categories: Some(levels.clone()),
                        default: Some(*default),
                    },
                },
            }),
        }
    }
}

/// A candidate factor described by named metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alternative {
    pub name: String,
    pub metrics: BTreeMap<String, MetricValue>,
}

impl Alternative {
    pub fn new(name: impl Into<String>) -> Self {
        Alternative {
            name: name.into(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn with(mut self, metric: impl Into<String>, value: f64) -> Self {
        self.metrics.insert(metric.into(), MetricValue::Number(value));
        self
    }
}

/// Preference of `alt` at `node`.
pub fn evaluate(node: &McdaNode, alt: &Alternative) -> Result<f64> {
    if let Some(m) = &node.model {
        let v = alt.metrics.get(&m.metric).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "alternative '{}' lacks metric '{}' required by node '{}'",
                alt.name, m.metric, node.name
            ))
        })?;
        let p = m.val.apply(v)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Infeasible(format!(
                "internal invariant violated: node '{}' produced preference {p}",
                node.name
            )));
        }
        return Ok(p);
    }
    let mut total = 0.0;
    for c in &node.children {
        total += c.weight * evaluate(c, alt)?;
    }
    // guard against 1 + ulp from weights that sum to 1 within tolerance
    Ok(total.clamp(0.0, 1.0))
}

/// Alternatives sorted by preference descending, ties by name.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreferenceRanking {
    pub entries: Vec<(String, f64)>,
    pub tie_break: &'static str,
}

impl PreferenceRanking {
    pub fn preference(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|&(_, p)| p)
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// `factor,preference,rank` rows.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["factor", "preference", "rank"])?;
        for (i, (f, p)) in self.entries.iter().enumerate() {
            w.write_record([f.clone(), format!("{p}"), (i + 1).to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Infeasible(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }
}

pub fn rank_alternatives(tree: &McdaNode, alts: &[Alternative]) -> Result<PreferenceRanking> {
    let scored = alts
        .iter()
        .map(|a| Ok((a.name.clone(), evaluate(tree, a)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PreferenceRanking {
        entries: crate::relief::rank_scores(&scored),
        tie_break: "lexicographic by name",
    })
}

/// Sets the weight of the node at `path` and spreads the remaining mass over
/// its unlocked siblings in proportion to their previous weights (uniformly
/// when those are all 0). Locked siblings keep their weight.
pub fn rebalance_weights(tree: &McdaNode, path: &[usize], new_weight: f64) -> Result<McdaNode> {
    let (&idx, parent_path) = path
        .split_last()
        .ok_or_else(|| Error::InvalidArgument("the root weight cannot be edited".into()))?;
    if !(0.0..=1.0).contains(&new_weight) {
        return Err(Error::InvalidArgument(format!("weight {new_weight} outside [0, 1]")));
    }
    let mut out = tree.clone();
    let parent = out
        .node_at_mut(parent_path)
        .filter(|p| idx < p.children.len())
        .ok_or_else(|| Error::InvalidArgument(format!("no node at path {path:?}")))?;
    let siblings = &mut parent.children;
    if siblings[idx].weight == new_weight {
        return Ok(out);
    }
    let locked: f64 = siblings
        .iter()
        .enumerate()
        .filter(|&(i, s)| i != idx && s.locked)
        .map(|(_, s)| s.weight)
        .sum();
    let free: Vec<usize> = (0..siblings.len()).filter(|&i| i != idx && !siblings[i].locked).collect();
    let remaining = 1.0 - locked - new_weight;
    if remaining < -WEIGHT_TOLERANCE {
        return Err(Error::Infeasible(format!(
            "locked siblings hold {locked}, leaving no room for weight {new_weight}"
        )));
    }
    if free.is_empty() {
        return Err(Error::Infeasible("no unlocked sibling can absorb the change".into()));
    }
    let remaining = remaining.max(0.0);
    let prior: f64 = free.iter().map(|&i| siblings[i].weight).sum();
    for &i in &free {
        siblings[i].weight = if prior > 0.0 {
            remaining * siblings[i].weight / prior
        } else {
            remaining / free.len() as f64
        };
    }
    siblings[idx].weight = new_weight;
    Ok(out)
}

/// Likert 1..5 mapped linearly onto `[0, 1]`, reversed for cost criteria.
fn likert_val(benefit: bool) -> ValueFunction {
    let (lo, hi) = if benefit { (0.0, 1.0) } else { (1.0, 0.0) };
    ValueFunction::PiecewiseLinear(vec![(1.0, lo), (5.0, hi)])
}

/// val over relief weights: 0 at the smallest weight, 0.5 at zero, 1 at the
/// largest. Anchors that would collide (all weights on one side of zero) are
/// dropped, so the function stays strictly increasing over the observed range.
fn weight_val(min_w: f64, max_w: f64) -> ValueFunction {
    let mut points = Vec::new();
    if min_w < 0.0 {
        points.push((min_w, 0.0));
    }
    points.push((0.0, 0.5));
    if max_w > 0.0 {
        points.push((max_w, 1.0));
    }
    ValueFunction::PiecewiseLinear(points)
}

/// Two-branch tree combining relief weights (data evidence) and mean expert
/// Likert scores (expert judgment), plus one alternative per factor in the
/// union of both sources. Missing Likert scores default to the neutral 3 and
/// missing weights to 0.
pub fn build_default_tree(
    wv: &WeightVector,
    scores: &CriterionScores,
    data_share: f64,
) -> Result<(McdaNode, Vec<Alternative>)> {
    if !(0.0..=1.0).contains(&data_share) {
        return Err(Error::InvalidArgument(format!("data share {data_share} outside [0, 1]")));
    }
    let means = scores.mean_by_factor();
    let mut universe: BTreeSet<String> = wv.weights.iter().map(|(f, _)| f.clone()).collect();
    universe.extend(means.keys().cloned());
    if universe.is_empty() {
        return Err(Error::Infeasible("no factors to integrate".into()));
    }

    let (min_w, max_w) = wv
        .weights
        .iter()
        .fold((0.0f64, 0.0f64), |(lo, hi), &(_, w)| (lo.min(w), hi.max(w)));
    let third = 1.0 / 3.0;
    let criterion = |name: &str, metric: &str, benefit: bool| {
        McdaNode::inner(
            name,
            NodeKind::Criterion,
            third,
            vec![McdaNode::model(format!("{name}-val"), 1.0, metric, likert_val(benefit))],
        )
    };
    let tree = McdaNode::root(
        "factor-relevance",
        vec![
            McdaNode::inner(
                "data-evidence",
                NodeKind::Directory,
                data_share,
                vec![McdaNode::inner(
                    "rrf-weight",
                    NodeKind::Criterion,
                    1.0,
                    vec![McdaNode::model("rrf-weight-val", 1.0, METRIC_RRF_WEIGHT, weight_val(min_w, max_w))],
                )],
            ),
            McdaNode::inner(
                "expert-judgment",
                NodeKind::Directory,
                1.0 - data_share,
                vec![
                    criterion("impact", METRIC_IMPACT, true),
                    criterion("controllability", METRIC_CONTROLLABILITY, true),
                    criterion("difficulty", METRIC_DIFFICULTY, false),
                ],
            ),
        ],
    );
    tree.validate()?;

    let alts = universe
        .into_iter()
        .map(|f| {
            let w = wv.get(&f).unwrap_or(0.0);
            let s = means.get(&f);
            Alternative::new(f.clone())
                .with(METRIC_RRF_WEIGHT, w)
                .with(METRIC_IMPACT, s.map_or(3.0, |s| s.impact))
                .with(METRIC_DIFFICULTY, s.map_or(3.0, |s| s.difficulty))
                .with(METRIC_CONTROLLABILITY, s.map_or(3.0, |s| s.controllability))
        })
        .collect();
    Ok((tree, alts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expert::Likert;

    fn constant(v: f64) -> ValueFunction {
        ValueFunction::PiecewiseLinear(vec![(0.0, v)])
    }

    fn identity() -> ValueFunction {
        ValueFunction::PiecewiseLinear(vec![(0.0, 0.0), (1.0, 1.0)])
    }

    fn crit(weight: f64, children: Vec<McdaNode>) -> McdaNode {
        McdaNode::inner("c", NodeKind::Criterion, weight, children)
    }

    #[test]
    fn single_model_passes_through() {
        let t = McdaNode::root("r", vec![crit(1.0, vec![McdaNode::model("m", 1.0, "x", constant(0.7))])]);
        t.validate().unwrap();
        assert_eq!(evaluate(&t, &Alternative::new("a").with("x", 3.0)).unwrap(), 0.7);
    }

    #[test]
    fn weighted_sum_of_two_models() {
        let t = McdaNode::root(
            "r",
            vec![crit(
                1.0,
                vec![
                    McdaNode::model("m1", 0.5, "x", identity()),
                    McdaNode::model("m2", 0.5, "y", identity()),
                ],
            )],
        );
        let a = Alternative::new("a").with("x", 0.4).with("y", 0.8);
        assert!((evaluate(&t, &a).unwrap() - 0.6).abs() < 1e-15);
        let zero = Alternative::new("z").with("x", 0.0).with("y", -3.0);
        assert_eq!(evaluate(&t, &zero).unwrap(), 0.0);
        let err = evaluate(&t, &Alternative::new("b").with("x", 0.1)).unwrap_err().to_string();
        assert!(err.contains("'y'") && err.contains("m2"), "{err}");
    }

    #[test]
    fn piecewise_interpolates_and_clamps() {
        let f = ValueFunction::piecewise(vec![(-1.0, 0.0), (0.0, 0.5), (2.0, 1.0)]).unwrap();
        let at = |x: f64| f.apply(&MetricValue::Number(x)).unwrap();
        assert_eq!(at(-5.0), 0.0);
        assert_eq!(at(-0.5), 0.25);
        assert_eq!(at(1.0), 0.75);
        assert_eq!(at(9.0), 1.0);
        assert!(ValueFunction::piecewise(vec![(1.0, 0.0), (1.0, 1.0)]).is_err());
        assert!(ValueFunction::piecewise(vec![(1.0, 1.5)]).is_err());
    }

    #[test]
    fn categorical_lookup_with_default() {
        let f = ValueFunction::Categorical {
            levels: BTreeMap::from([("high".to_string(), 1.0), ("low".to_string(), 0.2)]),
            default: 0.5,
        };
        assert_eq!(f.apply(&MetricValue::Level("low".into())).unwrap(), 0.2);
        assert_eq!(f.apply(&MetricValue::Level("other".into())).unwrap(), 0.5);
    }

    #[test]
    fn ranking_ties_and_subsets() {
        let t = McdaNode::root("r", vec![crit(1.0, vec![McdaNode::model("m", 1.0, "x", identity())])]);
        let alts = vec![
            Alternative::new("C").with("x", 0.3),
            Alternative::new("A").with("x", 0.9),
            Alternative::new("B").with("x", 0.3),
        ];
        let r = rank_alternatives(&t, &alts).unwrap();
        assert_eq!(r.names(), vec!["A", "B", "C"]);
        let sub = rank_alternatives(&t, &alts[1..]).unwrap();
        assert_eq!(sub.names(), vec!["A", "B"]);
        assert_eq!(sub.preference("B"), r.preference("B"));
        let one = rank_alternatives(&t, &alts[..1]).unwrap();
        assert_eq!(one.entries, vec![("C".to_string(), 0.3)]);
    }

    fn three_siblings(locked_second: bool) -> McdaNode {
        let mut b = McdaNode::model("b", 0.2, "x", identity());
        if locked_second {
            b = b.locked();
        }
        McdaNode::root(
            "r",
            vec![crit(
                1.0,
                vec![
                    McdaNode::model("a", 0.6, "x", identity()),
                    b,
                    McdaNode::model("c", 0.2, "x", identity()),
                ],
            )],
        )
    }

    #[test]
    fn rebalance_examples() {
        let t = McdaNode::root(
            "r",
            vec![crit(
                1.0,
                vec![McdaNode::model("a", 0.5, "x", identity()), McdaNode::model("b", 0.5, "x", identity())],
            )],
        );
        let r = rebalance_weights(&t, &[0, 0], 0.8).unwrap();
        let w: Vec<f64> = r.children[0].children.iter().map(|c| c.weight).collect();
        assert!((w[0] - 0.8).abs() < 1e-12 && (w[1] - 0.2).abs() < 1e-12);
        assert_eq!(rebalance_weights(&t, &[0, 0], 0.5).unwrap(), t);

        let r = rebalance_weights(&three_siblings(true), &[0, 0], 0.5).unwrap();
        let w: Vec<f64> = r.children[0].children.iter().map(|c| c.weight).collect();
        assert!((w[0] - 0.5).abs() < 1e-12 && w[1] == 0.2 && (w[2] - 0.3).abs() < 1e-12);
        r.validate().unwrap();
    }

    #[test]
    fn rebalance_rejects_overfull_lock() {
        let mut t = three_siblings(true);
        t.children[0].children[2].locked = true;
        assert!(rebalance_weights(&t, &[0, 0], 0.9).is_err());
        assert!(rebalance_weights(&t, &[], 0.9).is_err());
    }

    #[test]
    fn structure_validation() {
        // model directly under root
        let bad = McdaNode::root("r", vec![McdaNode::model("m", 1.0, "x", identity())]);
        assert!(bad.validate().is_err());
        let bad_sum = McdaNode::root("r", vec![crit(0.7, vec![McdaNode::model("m", 1.0, "x", identity())])]);
        assert!(bad_sum.validate().is_err());
        let empty = McdaNode::root("r", vec![McdaNode::inner("d", NodeKind::Directory, 1.0, vec![])]);
        assert!(empty.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{
            "kind": "root",
            "children": [
              {"name": "d", "kind": "directory", "weight": 1.0, "children": [
                {"name": "c", "kind": "criterion", "weight": 1.0, "lock": true, "children": [
                  {"name": "m1", "kind": "model", "weight": 0.25, "model": {"metric": "x", "val": {"points": [[0, 0], [1, 1]]}}},
                  {"name": "m2", "kind": "model", "weight": 0.75, "model": {"metric": "lvl", "val": {"categories": {"hi": 1.0}, "default": 0.1}}}
                ]}
              ]}
            ]
        }"#;
        let t = McdaNode::from_json_str(text).unwrap();
        assert!(t.children[0].children[0].locked);
        assert_eq!(t.metrics().into_iter().collect::<Vec<_>>(), vec!["lvl", "x"]);
        assert_eq!(McdaNode::from_json_str(&t.to_json_string().unwrap()).unwrap(), t);
        assert!(McdaNode::from_json_str(r#"{"kind": "root", "colour": 1}"#).is_err());
        assert_eq!(t.find_path("m2"), Some(vec![0, 0, 1]));
    }

    fn fixture() -> (WeightVector, CriterionScores) {
        let wv = WeightVector {
            weights: vec![("a".into(), 0.4), ("b".into(), -0.2), ("c".into(), 0.1)],
            iterations: 3,
            k: 1,
            sigma: 20.0,
            seed: 0,
            constant_target: false,
        };
        let mut s = CriterionScores::new();
        s.insert("e1", "a", Likert { impact: 5, difficulty: 5, controllability: 1 }).unwrap();
        s.insert("e1", "b", Likert { impact: 5, difficulty: 1, controllability: 5 }).unwrap();
        (wv, s)
    }

    #[test]
    fn default_tree_hand_computed() {
        let (wv, s) = fixture();
        let (tree, alts) = build_default_tree(&wv, &s, 0.5).unwrap();
        let r = rank_alternatives(&tree, &alts).unwrap();
        // data val: a -> 1, b -> 0, c -> 0.5 + 0.5 * 0.1 / 0.4 = 0.625
        // expert val (mean of impact, controllability, 1 - difficulty):
        //   a: (1 + 0 + 0) / 3, b: (1 + 1 + 1) / 3, c: neutral 0.5
        let expect = |d: f64, e: f64| 0.5 * d + 0.5 * e;
        assert!((r.preference("a").unwrap() - expect(1.0, 1.0 / 3.0)).abs() < 1e-12);
        assert!((r.preference("b").unwrap() - expect(0.0, 1.0)).abs() < 1e-12);
        assert!((r.preference("c").unwrap() - expect(0.625, 0.5)).abs() < 1e-12);
        assert_eq!(r.names(), vec!["a", "c", "b"]);
    }

    #[test]
    fn default_tree_extreme_shares() {
        let (wv, s) = fixture();
        let (tree, alts) = build_default_tree(&wv, &s, 1.0).unwrap();
        assert_eq!(rank_alternatives(&tree, &alts).unwrap().names(), vec!["a", "c", "b"]);
        let (tree, alts) = build_default_tree(&wv, &s, 0.0).unwrap();
        assert_eq!(rank_alternatives(&tree, &alts).unwrap().names(), vec!["b", "c", "a"]);
    }
}
