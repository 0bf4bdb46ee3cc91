use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use factorsel::data::{load_dataset, profile_missingness, prune_missing, Dataset, PruneThresholds};
use factorsel::estimators::{EstimationQuery, EstimatorConfig, OsrConfig};
use factorsel::evaluation::{compare_factor_sets, percent};
use factorsel::expert::{aggregate_expert_scores, expert_concordance, CriterionScores, ExpertRankingSet};
use factorsel::impute::{knn_impute, ImputationConfig};
use factorsel::mcda::McdaNode;
use factorsel::pipeline::{
    build_factor_sets, concordance_summary, integrate, run_pipeline, scores_csv, RunManifest, SelectionInputs,
    SetRecipe,
};
use factorsel::relief::{rrelieff, FactorSet, Provenance, ReliefConfig, WeightVector};
use factorsel::{Error, Result};

#[derive(Parser)]
#[command(name = "factorsel", version, about = "Productivity-factor selection and evaluation")]
struct Cli {
    #[command(flatten)]
    opts: Options,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Options {
    /// Project data (CSV, "?" marks a missing cell)
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Column schema (JSON)
    #[arg(long, global = true)]
    schema: Option<PathBuf>,
    /// Expert rankings (CSV: expert_id,category,factor,rank)
    #[arg(long, global = true)]
    experts: Option<PathBuf>,
    /// Expert Likert scores (CSV: expert_id,factor,impact,difficulty,controllability)
    #[arg(long, global = true)]
    scores: Option<PathBuf>,
    /// Preference tree (JSON); the default two-branch tree when absent
    #[arg(long, global = true)]
    tree: Option<PathBuf>,
    /// Run manifest (JSON)
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Neighbours: imputation donors, relief neighbours or k-NN analogies
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Relief iterations (default: one sweep over all records)
    #[arg(long, global = true)]
    m: Option<usize>,
    /// Relief rank decay
    #[arg(long, global = true)]
    sigma: Option<f64>,
    /// Random seed (default 0; overrides the manifest seed for `run`)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for cross-validation folds
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    output_dir: PathBuf,
    /// Drop factors missing in at least this fraction of records
    #[arg(long, global = true, default_value_t = 0.90)]
    factor_thresh: f64,
    /// Drop records missing more than this fraction of factors
    #[arg(long, global = true, default_value_t = 0.55)]
    project_thresh: f64,
    /// Fraction kept by top-cut factor sets (FC_E25, FC_R25, FC_I25, FI)
    #[arg(long, global = true)]
    top_fraction: Option<f64>,
    /// Weight of the data branch in the default preference tree
    #[arg(long, global = true, default_value_t = 0.5)]
    data_share: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorKind {
    Knn,
    Osr,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Missing-data ratios per factor and record
    Profile,
    /// Drop mostly-missing factors, then mostly-missing records
    Prune,
    /// Fill missing cells from nearest donors
    Impute,
    /// RReliefF weights (complete data)
    Weigh,
    /// Aggregated expert scores and their concordance
    Experts,
    /// Rank factors with the preference tree
    Integrate,
    /// Build the standard factor sets
    Select,
    /// Estimate one project from all the others
    Estimate {
        /// Id of the project to estimate
        #[arg(long)]
        query: String,
        /// Comma-separated factors (default: every measured factor)
        #[arg(long, value_delimiter = ',')]
        factors: Vec<String>,
        #[arg(long, value_enum, default_value = "knn")]
        estimator: EstimatorKind,
        /// Print the set-reduction trace as JSON
        #[arg(long)]
        trace: bool,
    },
    /// Leave-one-out evaluation of measured factors (and an optional custom set)
    Evaluate {
        #[arg(long, value_delimiter = ',')]
        factors: Vec<String>,
        #[arg(long, value_enum, default_value = "both")]
        estimator: EstimatorKind,
    },
    /// Full pipeline from a manifest
    Run,
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::Validation(format!("--{flag} is required for this command")))
}

fn dataset(o: &Options) -> Result<Dataset> {
    load_dataset(required(&o.data, "data")?, required(&o.schema, "schema")?)
}

fn thresholds(o: &Options) -> PruneThresholds {
    PruneThresholds {
        factor: o.factor_thresh,
        project: o.project_thresh,
    }
}

fn relief_config(o: &Options) -> ReliefConfig {
    let d = ReliefConfig::default();
    ReliefConfig {
        m: o.m,
        k: o.k.unwrap_or(d.k),
        sigma: o.sigma.unwrap_or(d.sigma),
    }
}

fn estimators(kind: EstimatorKind, k: Option<usize>) -> Vec<EstimatorConfig> {
    let knn = EstimatorConfig::knn(k.unwrap_or(3));
    let osr = EstimatorConfig::osr(OsrConfig::default());
    match kind {
        EstimatorKind::Knn => vec![knn],
        EstimatorKind::Osr => vec![osr],
        EstimatorKind::Both => vec![knn, osr],
    }
}

struct Out<'a>(&'a Path);

impl Out<'_> {
    fn write(&self, name: &str, text: &str) -> Result<()> {
        fs::create_dir_all(self.0).map_err(|e| io_err(self.0, e))?;
        let path = self.0.join(name);
        fs::write(&path, text).map_err(|e| io_err(&path, e))
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn print_scores(title: &str, rows: &[(String, f64)]) {
    let w = rows.iter().map(|(f, _)| f.len()).max().unwrap_or(0).max(6);
    println!("{:<w$}  {title}", "factor");
    for (f, s) in rows {
        println!("{f:<w$}  {s:.4}");
    }
}

fn weights(o: &Options, ds: &Dataset) -> Result<WeightVector> {
    rrelieff(ds, relief_config(o), o.seed.unwrap_or(0))
}

fn expert_inputs(o: &Options) -> Result<(ExpertRankingSet, CriterionScores)> {
    Ok((
        ExpertRankingSet::load(required(&o.experts, "experts")?)?,
        CriterionScores::load(required(&o.scores, "scores")?)?,
    ))
}

fn recipes(o: &Options) -> Vec<SetRecipe> {
    use Provenance::*;
    [
        Measured,
        Expert,
        Total,
        MeasuredRelevant,
        MeasuredRelevantTop,
        Common,
        CommonExpertTop,
        CommonReliefTop,
        CommonIntegratedTop,
        Integrated,
    ]
    .into_iter()
    .map(|kind| {
        let mut r = SetRecipe::of(kind);
        if matches!(kind, CommonExpertTop | CommonReliefTop | CommonIntegratedTop | Integrated) {
            r.fraction = o.top_fraction;
        }
        r
    })
    .collect()
}

fn run(cli: Cli) -> Result<()> {
    let o = &cli.opts;
    let out = Out(&o.output_dir);
    match &cli.command {
        Command::Profile => {
            let ds = dataset(o)?;
            let p = profile_missingness(&ds);
            let mut csv = String::from("kind,name,missing_ratio\n");
            for (f, r) in &p.factors {
                csv.push_str(&format!("factor,{f},{r}\n"));
            }
            for (id, r) in &p.records {
                csv.push_str(&format!("record,{id},{r}\n"));
            }
            out.write("profile.csv", &csv)?;
            let w = p.factors.iter().map(|(f, _)| f.len()).max().unwrap_or(0).max(6);
            println!("{:<w$}  missing", "factor");
            for (f, r) in &p.factors {
                println!("{f:<w$}  {:>7}", percent(*r));
            }
            println!(
                "total: {} of {} cells missing ({}) over {} records",
                p.missing_cells,
                p.total_cells,
                percent(p.total),
                p.records.len()
            );
        }
        Command::Prune => {
            let ds = dataset(o)?;
            let before = profile_missingness(&ds).total;
            let p = prune_missing(&ds, thresholds(o))?;
            out.write("pruned.csv", &p.dataset.to_csv_string()?)?;
            println!("dropped factors: {}", p.dropped_factors.join(", "));
            println!("dropped records: {}", p.dropped_records.join(", "));
            println!(
                "missing cells: {} -> {}",
                percent(before),
                percent(profile_missingness(&p.dataset).total)
            );
        }
        Command::Impute => {
            let ds = dataset(o)?;
            let cfg = ImputationConfig {
                k: o.k.unwrap_or(ImputationConfig::default().k),
            };
            let filled = knn_impute(&ds, cfg, o.seed.unwrap_or(0))?;
            out.write("imputed.csv", &filled.to_csv_string()?)?;
            println!("imputed {} cells", profile_missingness(&ds).missing_cells);
        }
        Command::Weigh => {
            let ds = dataset(o)?;
            let wv = weights(o, &ds)?;
            out.write("weights.csv", &wv.to_csv_string()?)?;
            if wv.constant_target {
                eprintln!("warning: dependent variable is constant; every weight is 0");
            }
            print_scores("weight", &wv.ranked());
        }
        Command::Experts => {
            let rankings = ExpertRankingSet::load(required(&o.experts, "experts")?)?;
            let scores: Vec<(String, f64)> = aggregate_expert_scores(&rankings).into_iter().collect();
            out.write("expert_scores.csv", &scores_csv(&scores, "score")?)?;
            print_scores("score", &factorsel::relief::rank_scores(&scores));
            match expert_concordance(&rankings) {
                Ok(c) => {
                    out.write("concordance.json", &serde_json::to_string_pretty(&c)?)?;
                    println!("Kendall W = {:.3} (p = {:.3}, {} experts)", c.w, c.p_value, c.judges);
                }
                Err(e) => eprintln!("warning: concordance undefined: {e}"),
            }
        }
        Command::Integrate | Command::Select => {
            let ds = dataset(o)?;
            let wv = weights(o, &ds)?;
            let (rankings, scores) = expert_inputs(o)?;
            let expert_scores = aggregate_expert_scores(&rankings);
            let tree = o.tree.as_ref().map(McdaNode::load).transpose()?;
            let (tree, ranking) = integrate(&wv, &expert_scores, &scores, tree, o.data_share)?;
            out.write("ranking.csv", &ranking.to_csv_string()?)?;
            if matches!(cli.command, Command::Integrate) {
                out.write("tree.json", &tree.to_json_string()?)?;
                print_scores("preference", &ranking.entries);
                return Ok(());
            }
            let sets = build_factor_sets(
                &SelectionInputs {
                    dataset: &ds,
                    weights: &wv,
                    expert_scores: &expert_scores,
                    ranking: &ranking,
                },
                &recipes(o),
            )?;
            out.write("sets.json", &serde_json::to_string_pretty(&sets)?)?;
            let conc = concordance_summary(&rankings, &sets.common, &wv, &expert_scores, &ranking);
            out.write("concordance.json", &serde_json::to_string_pretty(&conc)?)?;
            for s in &sets.requested {
                println!("{:<8} {:>3}  {}", s.label, s.len(), s.factors.iter().cloned().collect::<Vec<_>>().join(", "));
            }
        }
        Command::Estimate {
            query,
            factors,
            estimator,
            trace,
        } => {
            let ds = dataset(o)?;
            let idx = ds
                .record_index(query)
                .ok_or_else(|| Error::Validation(format!("no project with id '{query}'")))?;
            let fs = factor_set(&ds, factors, "query")?;
            let train = ds.without_record(idx);
            let q = EstimationQuery {
                record: &ds.records()[idx],
                factors: &fs,
            };
            let mut lines = String::from("estimator,project_id,prediction\n");
            for est in estimators(*estimator, o.k) {
                let p = est.predict(&train, &q)?;
                println!("{}: {}", est.label(), p.value);
                lines.push_str(&format!("{},{query},{}\n", est.label(), p.value));
                if let (true, Some(t)) = (*trace, &p.trace) {
                    let json = serde_json::to_string_pretty(t)?;
                    out.write("trace.json", &json)?;
                    println!("{json}");
                }
            }
            out.write("estimate.csv", &lines)?;
        }
        Command::Evaluate { factors, estimator } => {
            let ds = dataset(o)?;
            let mut sets = vec![FactorSet::standard(Provenance::Measured, ds.predictor_names())?];
            if !factors.is_empty() {
                sets.push(factor_set(&ds, factors, "custom")?);
            }
            let report = compare_factor_sets(&ds, &estimators(*estimator, o.k), &sets, o.jobs)?;
            if !report.excluded.is_empty() {
                eprintln!(
                    "warning: {} record(s) without a positive dependent value excluded",
                    report.excluded.len()
                );
            }
            out.write("report.csv", &report.to_csv_string()?)?;
            out.write("report.json", &report.to_json_string()?)?;
            let table = report.to_text_table();
            out.write("report.txt", &table)?;
            print!("{table}");
        }
        Command::Run => {
            let mut m = RunManifest::load(required(&o.manifest, "manifest")?)?;
            if let Some(seed) = o.seed {
                m.seed = seed;
            }
            if o.jobs.is_some() {
                m.jobs = o.jobs;
            }
            let result = run_pipeline(&m, &o.output_dir)?;
            print!("{}", result.report.to_text_table());
        }
    }
    Ok(())
}

fn factor_set(ds: &Dataset, names: &[String], label: &str) -> Result<FactorSet> {
    if names.is_empty() {
        return FactorSet::standard(Provenance::Measured, ds.predictor_names());
    }
    ds.resolve_factors(names)?;
    FactorSet::new(label, Provenance::Custom, names.iter().cloned())
}

fn stage(c: &Command) -> &'static str {
    match c {
        Command::Profile => "profile",
        Command::Prune => "prune",
        Command::Impute => "impute",
        Command::Weigh => "weigh",
        Command::Experts => "experts",
        Command::Integrate => "integrate",
        Command::Select => "select",
        Command::Estimate { .. } => "estimate",
        Command::Evaluate { .. } => "evaluate",
        Command::Run => "run",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let name = stage(&cli.command);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let e = Error::in_stage(name)(e);
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}
