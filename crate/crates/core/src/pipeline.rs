//! End-to-end selection run: prune, impute, weigh, aggregate experts,
//! integrate, build factor sets and evaluate them.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{load_dataset, prune_missing, Dataset, PruneThresholds};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, OsrConfig};
use crate::evaluation::{compare_factor_sets, EvaluationReport};
use crate::expert::{aggregate_expert_scores, expert_concordance, kendall_w, Concordance, CriterionScores, ExpertRankingSet};
use crate::impute::{knn_impute, ImputationConfig};
use crate::mcda::{
    build_default_tree, rank_alternatives, Alternative, McdaNode, PreferenceRanking, METRIC_CONTROLLABILITY,
    METRIC_DIFFICULTY, METRIC_IMPACT, METRIC_RRF_WEIGHT,
};
use crate::relief::{positive_weight_set, rank_scores, rrelieff, top_fraction, FactorSet, Provenance, ReliefConfig, WeightVector};

/// Metric carrying the aggregated expert rank score on every alternative.
pub const METRIC_EXPERT_SCORE: &str = "expert_score";

/// One factor set to build. Fractions apply to the top-cut kinds
/// (FM_R10, FC_E25, FC_R25, FC_I25, FI); `threshold` only to FI, where it
/// keeps alternatives with preference `>=` the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetRecipe {
    pub kind: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<String>>,
}

impl SetRecipe {
    pub fn of(kind: Provenance) -> Self {
        SetRecipe {
            kind,
            label: None,
            fraction: None,
            threshold: None,
            factors: None,
        }
    }

    fn default_fraction(&self) -> Option<f64> {
        match self.kind {
            Provenance::MeasuredRelevantTop => Some(0.10),
            Provenance::CommonExpertTop
            | Provenance::CommonReliefTop
            | Provenance::CommonIntegratedTop
            | Provenance::Integrated => Some(0.25),
            _ => None,
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Validation(format!("recipe {}: {what}", self.kind)));
        if self.fraction.is_some() && self.default_fraction().is_none() {
            return bad("fraction is not applicable");
        }
        if self.threshold.is_some() && self.kind != Provenance::Integrated {
            return bad("threshold only applies to FI");
        }
        if self.threshold.is_some() && self.fraction.is_some() {
            return bad("give either fraction or threshold, not both");
        }
        match (self.kind, &self.factors, &self.label) {
            (Provenance::Custom, None, _) => bad("custom sets need a factor list"),
            (Provenance::Custom, _, None) => bad("custom sets need a label"),
            (k, Some(_), _) if k != Provenance::Custom => bad("factor lists only apply to custom sets"),
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.kind.symbol().to_string())
    }
}

fn default_data_share() -> f64 {
    0.5
}

fn default_estimators() -> Vec<EstimatorConfig> {
    vec![EstimatorConfig::knn(3), EstimatorConfig::osr(OsrConfig::default())]
}

fn default_recipes() -> Vec<SetRecipe> {
    use Provenance::*;
    [Measured, MeasuredRelevant, MeasuredRelevantTop, Common, CommonExpertTop, CommonReliefTop, CommonIntegratedTop]
        .into_iter()
        .map(SetRecipe::of)
        .collect()
}

/// JSON run description. Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub data: PathBuf,
    pub schema: PathBuf,
    pub experts: PathBuf,
    pub scores: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<PathBuf>,
    #[serde(default = "default_data_share")]
    pub data_share: f64,
    #[serde(default)]
    pub prune: PruneThresholds,
    #[serde(default)]
    pub imputation: ImputationConfig,
    #[serde(default)]
    pub relief: ReliefConfig,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorConfig>,
    #[serde(default = "default_recipes")]
    pub factor_sets: Vec<SetRecipe>,
    #[serde(default)]
    pub seed: u64,
    /// Fold-level worker threads; absent uses every core. Never affects results.
    #[serde(default, skip_serializing)]
    pub jobs: Option<usize>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunManifest {
    pub fn from_json_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut m: RunManifest = serde_json::from_str(text)?;
        m.base_dir = base_dir.into();
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json_str(&text, base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.data_share) {
            return Err(Error::Validation(format!("data_share {} outside [0, 1]", self.data_share)));
        }
        if self.estimators.is_empty() {
            return Err(Error::Validation("manifest lists no estimator".into()));
        }
        if self.factor_sets.is_empty() {
            return Err(Error::Validation("manifest lists no factor set".into()));
        }
        let mut labels = BTreeSet::new();
        for r in &self.factor_sets {
            r.check()?;
            if !labels.insert(r.label()) {
                return Err(Error::Validation(format!("duplicate factor set label {}", r.label())));
            }
        }
        Ok(())
    }
}

/// Scores each factor-set construction draws on.
pub struct SelectionInputs<'a> {
    /// Pruned dataset; its predictors form FM.
    pub dataset: &'a Dataset,
    pub weights: &'a WeightVector,
    /// Aggregated expert score per expert-named factor; the keys form FE.
    pub expert_scores: &'a BTreeMap<String, f64>,
    pub ranking: &'a PreferenceRanking,
}

/// The always-built reference sets plus the requested ones, in recipe order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorSets {
    pub measured: FactorSet,
    pub expert: FactorSet,
    pub common: FactorSet,
    pub total: FactorSet,
    pub relevant: FactorSet,
    pub requested: Vec<FactorSet>,
}

fn scores_within(scores: impl IntoIterator<Item = (String, f64)>, within: &FactorSet) -> Vec<(String, f64)> {
    scores.into_iter().filter(|(f, _)| within.contains(f)).collect()
}

pub fn build_factor_sets(inp: &SelectionInputs<'_>, recipes: &[SetRecipe]) -> Result<FactorSets> {
    let measured = FactorSet::standard(Provenance::Measured, inp.dataset.predictor_names())?;
    let expert = FactorSet::standard(Provenance::Expert, inp.expert_scores.keys().cloned())
        .map_err(|_| Error::Infeasible("experts named no factor".into()))?;
    let common = FactorSet::standard(
        Provenance::Common,
        measured.factors.intersection(&expert.factors).cloned(),
    )
    .map_err(|_| Error::Infeasible("no expert-named factor has measurement data (FC is empty)".into()))?;
    let total = FactorSet::standard(Provenance::Total, measured.factors.union(&expert.factors).cloned())?;
    let relevant = positive_weight_set(inp.weights)?;

    let weights: Vec<(String, f64)> = inp.weights.weights.clone();
    let experts: Vec<(String, f64)> = inp.expert_scores.iter().map(|(f, &s)| (f.clone(), s)).collect();
    let prefs: Vec<(String, f64)> = inp.ranking.entries.clone();

    let mut requested = Vec::with_capacity(recipes.len());
    for r in recipes {
        r.check()?;
        let label = r.label();
        let p = r.fraction.or(r.default_fraction());
        let relabel = |s: &FactorSet| FactorSet::new(label.clone(), r.kind, s.factors.iter().cloned());
        let set = match r.kind {
            Provenance::Measured => relabel(&measured)?,
            Provenance::Expert => relabel(&expert)?,
            Provenance::Common => relabel(&common)?,
            Provenance::Total => relabel(&total)?,
            Provenance::MeasuredRelevant => relabel(&relevant)?,
            Provenance::MeasuredRelevantTop => {
                top_fraction(&scores_within(weights.clone(), &relevant), p.unwrap(), label, r.kind)?
            }
            Provenance::CommonExpertTop => {
                top_fraction(&scores_within(experts.clone(), &common), p.unwrap(), label, r.kind)?
            }
            Provenance::CommonReliefTop => {
                top_fraction(&scores_within(weights.clone(), &common), p.unwrap(), label, r.kind)?
            }
            Provenance::CommonIntegratedTop => {
                top_fraction(&scores_within(prefs.clone(), &common), p.unwrap(), label, r.kind)?
            }
            Provenance::Integrated => match r.threshold {
                Some(t) => FactorSet::new(
                    label,
                    r.kind,
                    rank_scores(&prefs).into_iter().filter(|&(_, s)| s >= t).map(|(f, _)| f),
                )
                .map_err(|_| Error::Infeasible(format!("no alternative reaches preference {t}")))?,
                None => top_fraction(&prefs, p.unwrap(), label, r.kind)?,
            },
            Provenance::Custom => {
                let names = r.factors.as_deref().unwrap_or_default();
                if let Some(f) = names.iter().find(|f| !total.contains(f)) {
                    return Err(Error::Validation(format!("custom set {label} names unknown factor '{f}'")));
                }
                FactorSet::new(label, r.kind, names.iter().cloned())?
            }
        };
        requested.push(set);
    }
    let sets = FactorSets {
        measured,
        expert,
        common,
        total,
        relevant,
        requested,
    };
    sets.check_algebra()?;
    Ok(sets)
}

impl FactorSets {
    /// FM_R10 ⊆ FM_R ⊆ FM, FC_*25 ⊆ FC ⊆ FM, FC ⊆ FE, FM ∪ FE ⊆ FT.
    pub fn check_algebra(&self) -> Result<()> {
        let require = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Infeasible(format!("factor-set invariant violated: {what}")))
            }
        };
        require(self.relevant.is_subset(&self.measured), "FM_R ⊆ FM")?;
        require(self.common.is_subset(&self.measured), "FC ⊆ FM")?;
        require(self.common.is_subset(&self.expert), "FC ⊆ FE")?;
        require(self.measured.is_subset(&self.total), "FM ⊆ FT")?;
        require(self.expert.is_subset(&self.total), "FE ⊆ FT")?;
        for s in &self.requested {
            let parent = match s.provenance {
                Provenance::Measured | Provenance::MeasuredRelevant => &self.measured,
                Provenance::MeasuredRelevantTop => &self.relevant,
                Provenance::Common => &self.expert,
                Provenance::CommonExpertTop | Provenance::CommonReliefTop | Provenance::CommonIntegratedTop => {
                    &self.common
                }
                Provenance::Expert | Provenance::Integrated | Provenance::Total | Provenance::Custom => &self.total,
            };
            require(s.is_subset(parent), &format!("{} ⊆ {}", s.label, parent.label))?;
        }
        Ok(())
    }

    pub fn get(&self, label: &str) -> Option<&FactorSet> {
        self.requested.iter().find(|s| s.label == label)
    }
}

/// Agreement between the expert, relief and integrated orderings of FC.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcordanceSummary {
    /// Agreement among the individual experts over all expert-named factors.
    pub experts: Option<Concordance>,
    /// Expert score vs relief weight over FC.
    pub expert_relief: Option<Concordance>,
    /// Expert score, relief weight and integrated preference over FC.
    pub expert_relief_integrated: Option<Concordance>,
}

fn fc_concordance(common: &FactorSet, sources: &[&dyn Fn(&str) -> f64]) -> Option<Concordance> {
    // negate so that the highest score takes rank 1
    let judges: Vec<Vec<f64>> = sources
        .iter()
        .map(|score| common.factors.iter().map(|f| -score(f)).collect())
        .collect();
    kendall_w(&judges).ok()
}

/// In-memory results of a run.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub records_loaded: usize,
    pub pruned: Dataset,
    pub dropped_factors: Vec<String>,
    pub dropped_records: Vec<String>,
    pub imputed: Dataset,
    pub weights: WeightVector,
    pub expert_scores: BTreeMap<String, f64>,
    pub tree: McdaNode,
    pub ranking: PreferenceRanking,
    pub sets: FactorSets,
    pub concordance: ConcordanceSummary,
    pub report: EvaluationReport,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    seed: u64,
    manifest: &'a RunManifest,
    records_loaded: usize,
    records_after_prune: usize,
    dropped_factors: &'a [String],
    dropped_records: &'a [String],
    relief_iterations: usize,
    files: Vec<&'static str>,
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

pub fn scores_csv(scores: &[(String, f64)], column: &str) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["factor", column, "rank"])?;
    for (i, (f, s)) in rank_scores(scores).iter().enumerate() {
        w.write_record([f.clone(), format!("{s}"), (i + 1).to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Infeasible(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

/// File-name form of a label: alphanumerics kept, everything else `_`.
pub fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect::<String>()
        .trim_matches('_')
        .to_string()
}

/// Ranks every factor known to the data or the experts. Uses `tree` when
/// given, else the default two-branch tree with the given data share.
/// Alternatives carry the relief weight, mean Likert scores and the
/// aggregated expert score.
pub fn integrate(
    weights: &WeightVector,
    expert_scores: &BTreeMap<String, f64>,
    scores: &CriterionScores,
    tree: Option<McdaNode>,
    data_share: f64,
) -> Result<(McdaNode, PreferenceRanking)> {
    let (default_tree, alts) = build_default_tree(weights, scores, data_share)?;
    let tree = tree.unwrap_or(default_tree);
    let mut alts: Vec<_> = alts
        .into_iter()
        .map(|a| {
            let s = expert_scores.get(&a.name).copied().unwrap_or(0.0);
            a.with(METRIC_EXPERT_SCORE, s)
        })
        .collect();
    let known: BTreeSet<String> = alts.iter().map(|a| a.name.clone()).collect();
    for (f, &s) in expert_scores {
        if !known.contains(f) {
            alts.push(
                Alternative::new(f.clone())
                    .with(METRIC_RRF_WEIGHT, 0.0)
                    .with(METRIC_IMPACT, 3.0)
                    .with(METRIC_DIFFICULTY, 3.0)
                    .with(METRIC_CONTROLLABILITY, 3.0)
                    .with(METRIC_EXPERT_SCORE, s),
            );
        }
    }
    let ranking = rank_alternatives(&tree, &alts)?;
    Ok((tree, ranking))
}

/// Kendall's W among the experts, and between the expert, relief and
/// integrated orderings of the common set. `None` where W is undefined.
pub fn concordance_summary(
    rankings: &ExpertRankingSet,
    common: &FactorSet,
    weights: &WeightVector,
    expert_scores: &BTreeMap<String, f64>,
    ranking: &PreferenceRanking,
) -> ConcordanceSummary {
    let e = |f: &str| expert_scores.get(f).copied().unwrap_or(0.0);
    let r = |f: &str| weights.get(f).unwrap_or(0.0);
    let i = |f: &str| ranking.preference(f).unwrap_or(0.0);
    ConcordanceSummary {
        experts: expert_concordance(rankings).ok(),
        expert_relief: fc_concordance(common, &[&e, &r]),
        expert_relief_integrated: fc_concordance(common, &[&e, &r, &i]),
    }
}

/// Runs every stage and returns the intermediate results without touching disk.
pub fn execute(manifest: &RunManifest) -> Result<PipelineOutput> {
    let raw = load_dataset(manifest.resolve(&manifest.data), manifest.resolve(&manifest.schema))
        .map_err(Error::in_stage("load"))?;
    let rankings = ExpertRankingSet::load(manifest.resolve(&manifest.experts)).map_err(Error::in_stage("load"))?;
    let scores = CriterionScores::load(manifest.resolve(&manifest.scores)).map_err(Error::in_stage("load"))?;
    let tree_file = manifest
        .tree
        .as_ref()
        .map(|t| McdaNode::load(manifest.resolve(t)))
        .transpose()
        .map_err(Error::in_stage("load"))?;

    let pruned = prune_missing(&raw, manifest.prune).map_err(Error::in_stage("prune"))?;
    let imputed = knn_impute(&pruned.dataset, manifest.imputation, manifest.seed).map_err(Error::in_stage("impute"))?;
    let weights = rrelieff(&imputed, manifest.relief, manifest.seed).map_err(Error::in_stage("weigh"))?;
    let expert_scores = aggregate_expert_scores(&rankings);

    let (tree, ranking) = integrate(&weights, &expert_scores, &scores, tree_file, manifest.data_share)
        .map_err(Error::in_stage("integrate"))?;

    let sets = build_factor_sets(
        &SelectionInputs {
            dataset: &pruned.dataset,
            weights: &weights,
            expert_scores: &expert_scores,
            ranking: &ranking,
        },
        &manifest.factor_sets,
    )
    .map_err(Error::in_stage("select"))?;
    let concordance = concordance_summary(&rankings, &sets.common, &weights, &expert_scores, &ranking);

    let report = compare_factor_sets(&imputed, &manifest.estimators, &sets.requested, manifest.jobs)
        .map_err(Error::in_stage("evaluate"))?;

    Ok(PipelineOutput {
        dropped_factors: pruned.dropped_factors,
        dropped_records: pruned.dropped_records,
        pruned: pruned.dataset,
        imputed,
        weights,
        expert_scores,
        tree,
        ranking,
        sets,
        concordance,
        report,
        records_loaded: raw.len(),
    })
}

/// Runs the pipeline and writes every artifact under `out_dir`.
pub fn run_pipeline(manifest: &RunManifest, out_dir: &Path) -> Result<PipelineOutput> {
    let out = execute(manifest)?;
    write_artifacts(manifest, &out, out_dir).map_err(Error::in_stage("write"))?;
    Ok(out)
}

fn write_artifacts(manifest: &RunManifest, out: &PipelineOutput, dir: &Path) -> Result<()> {
    let trace_dir = dir.join("trace");
    fs::create_dir_all(&trace_dir).map_err(|e| Error::io(&trace_dir, e))?;
    let expert_rows: Vec<(String, f64)> = out.expert_scores.iter().map(|(f, &s)| (f.clone(), s)).collect();
    let files: [(&'static str, String); 11] = [
        ("pruned.csv", out.pruned.to_csv_string()?),
        ("imputed.csv", out.imputed.to_csv_string()?),
        ("weights.csv", out.weights.to_csv_string()?),
        ("expert_scores.csv", scores_csv(&expert_rows, "score")?),
        ("tree.json", out.tree.to_json_string()?),
        ("ranking.csv", out.ranking.to_csv_string()?),
        ("sets.json", serde_json::to_string_pretty(&out.sets)?),
        ("concordance.json", serde_json::to_string_pretty(&out.concordance)?),
        ("report.csv", out.report.to_csv_string()?),
        ("report.json", out.report.to_json_string()?),
        ("report.txt", out.report.to_text_table()),
    ];
    for (name, text) in &files {
        write(dir, name, text)?;
    }
    for row in &out.report.rows {
        if !row.traces.is_empty() {
            let name = format!("{}_{}.json", file_stem(&row.estimator), file_stem(&row.factor_set));
            write(&trace_dir, &name, &serde_json::to_string_pretty(&row.traces)?)?;
        }
    }
    let record = RunRecord {
        seed: manifest.seed,
        manifest,
        records_loaded: out.records_loaded,
        records_after_prune: out.pruned.len(),
        dropped_factors: &out.dropped_factors,
        dropped_records: &out.dropped_records,
        relief_iterations: out.weights.iterations,
        files: files.iter().map(|(n, _)| *n).collect(),
    };
    write(dir, "run.json", &serde_json::to_string_pretty(&record)?)
}
