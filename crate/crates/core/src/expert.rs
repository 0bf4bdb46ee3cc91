//! Expert rankings, Likert criterion scores, their aggregation and
//! rank-concordance statistics.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Category;
use crate::error::{Error, Result};
use crate::stats::{chi2_sf, midranks};

/// Longest ranked list an expert gives per category, and the worst rank.
pub const MAX_RANK: u8 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertProfile {
    pub id: String,
    pub role: String,
    pub years_experience: u32,
    pub projects_performed: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingEntry {
    pub expert_id: String,
    pub category: Category,
    pub factor: String,
    /// 1 = most relevant.
    pub rank: u8,
}

/// Per-expert, per-category top-5 factor lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpertRankingSet {
    experts: BTreeSet<String>,
    entries: Vec<RankingEntry>,
}

impl ExpertRankingSet {
    pub fn new(entries: Vec<RankingEntry>) -> Result<Self> {
        let mut seen_rank = HashSet::new();
        let mut seen_factor = HashSet::new();
        for e in &entries {
            if !(1..=MAX_RANK).contains(&e.rank) {
                return Err(Error::Validation(format!(
                    "expert '{}', factor '{}': rank {} outside 1..{MAX_RANK}",
                    e.expert_id, e.factor, e.rank
                )));
            }
            if !seen_rank.insert((&e.expert_id, e.category, e.rank)) {
                return Err(Error::Validation(format!(
                    "expert '{}' uses rank {} twice in category {:?}",
                    e.expert_id, e.rank, e.category
                )));
            }
            if !seen_factor.insert((&e.expert_id, e.category, &e.factor)) {
                return Err(Error::Validation(format!(
                    "expert '{}' ranks '{}' twice in category {:?}",
                    e.expert_id, e.factor, e.category
                )));
            }
        }
        let experts = entries.iter().map(|e| e.expert_id.clone()).collect();
        Ok(ExpertRankingSet { experts, entries })
    }

    /// Registers experts that took part but may have ranked nothing.
    pub fn with_experts(mut self, ids: impl IntoIterator<Item = String>) -> Self {
        self.experts.extend(ids);
        self
    }

    pub fn experts(&self) -> &BTreeSet<String> {
        &self.experts
    }

    pub fn entries(&self) -> &[RankingEntry] {
        &self.entries
    }

    /// Every factor named by at least one expert.
    pub fn factors(&self) -> BTreeSet<String> {
        self.entries.iter().map(|e| e.factor.clone()).collect()
    }

    /// Reads `expert_id,category,factor,rank` rows.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut entries = Vec::new();
        for (i, row) in rdr.deserialize::<RankingEntry>().enumerate() {
            entries.push(row.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i as u64 + 2,
                message: e.to_string(),
            })?);
        }
        Self::new(entries)
    }

    /// Per-expert score of one factor: `(6 - rank) / 5`, best over categories, 0 if unranked.
    fn expert_score(&self, expert: &str, factor: &str) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.expert_id == expert && e.factor == factor)
            .map(|e| rank_score(e.rank))
            .fold(0.0, f64::max)
    }
}

fn rank_score(rank: u8) -> f64 {
    f64::from(MAX_RANK + 1 - rank) / f64::from(MAX_RANK)
}

/// Mean over experts of the rank score `(6 - r) / 5`, unranked counting as 0.
pub fn aggregate_expert_scores(rankings: &ExpertRankingSet) -> BTreeMap<String, f64> {
    let m = rankings.experts.len() as f64;
    rankings
        .factors()
        .into_iter()
        .map(|f| {
            let total: f64 = rankings.experts.iter().map(|e| rankings.expert_score(e, &f)).sum();
            (f, total / m)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Likert {
    pub impact: u8,
    pub difficulty: u8,
    pub controllability: u8,
}

#[derive(Debug, Deserialize)]
struct ScoreRow {
    expert_id: String,
    factor: String,
    impact: u8,
    difficulty: u8,
    controllability: u8,
}

/// Mean Likert scores of one factor across the experts who scored it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanLikert {
    pub impact: f64,
    pub difficulty: f64,
    pub controllability: f64,
}

/// Per-expert, per-factor Likert scores (1..5) on impact, difficulty and controllability.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CriterionScores {
    scores: BTreeMap<(String, String), Likert>,
}

impl CriterionScores {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, expert: impl Into<String>, factor: impl Into<String>, s: Likert) -> Result<()> {
        let (expert, factor) = (expert.into(), factor.into());
        for (name, v) in [("impact", s.impact), ("difficulty", s.difficulty), ("controllability", s.controllability)] {
            if !(1..=5).contains(&v) {
                return Err(Error::Validation(format!(
                    "expert '{expert}', factor '{factor}': {name} score {v} outside 1..5"
                )));
            }
        }
        if self.scores.insert((expert.clone(), factor.clone()), s).is_some() {
            return Err(Error::Validation(format!("expert '{expert}' scores '{factor}' twice")));
        }
        Ok(())
    }

    /// Reads `expert_id,factor,impact,difficulty,controllability` rows.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut out = Self::new();
        for (i, row) in rdr.deserialize::<ScoreRow>().enumerate() {
            let row = row.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i as u64 + 2,
                message: e.to_string(),
            })?;
            out.insert(
                row.expert_id,
                row.factor,
                Likert {
                    impact: row.impact,
                    difficulty: row.difficulty,
                    controllability: row.controllability,
                },
            )?;
        }
        Ok(out)
    }

    pub fn factors(&self) -> BTreeSet<String> {
        self.scores.keys().map(|(_, f)| f.clone()).collect()
    }

    pub fn get(&self, expert: &str, factor: &str) -> Option<Likert> {
        self.scores.get(&(expert.to_string(), factor.to_string())).copied()
    }

    pub fn mean_by_factor(&self) -> BTreeMap<String, MeanLikert> {
        let mut sums: BTreeMap<String, (f64, f64, f64, usize)> = BTreeMap::new();
        for ((_, f), s) in &self.scores {
            let e = sums.entry(f.clone()).or_default();
            e.0 += f64::from(s.impact);
            e.1 += f64::from(s.difficulty);
            e.2 += f64::from(s.controllability);
            e.3 += 1;
        }
        sums.into_iter()
            .map(|(f, (i, d, c, n))| {
                let n = n as f64;
                (
                    f,
                    MeanLikert {
                        impact: i / n,
                        difficulty: d / n,
                        controllability: c / n,
                    },
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Concordance {
    pub w: f64,
    pub chi2: f64,
    pub df: usize,
    pub p_value: f64,
    pub judges: usize,
    pub objects: usize,
}

/// Kendall's coefficient of concordance for `m` judges (rows) over `n`
/// objects (columns). Each row is re-ranked with midranks, so raw scores or
/// ranks drawn from a larger list are accepted; lower values rank first.
/// The p-value uses the chi-square approximation `m (n - 1) W` on `n - 1` df.
pub fn kendall_w(judges: &[Vec<f64>]) -> Result<Concordance> {
    let m = judges.len();
    if m < 2 {
        return Err(Error::InvalidArgument("Kendall's W needs at least 2 judges".into()));
    }
    let n = judges[0].len();
    if n < 3 {
        return Err(Error::InvalidArgument(
            "Kendall's W chi-square approximation needs at least 3 objects".into(),
        ));
    }
    if judges.iter().any(|j| j.len() != n || j.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidArgument("every judge must rank the same objects with finite values".into()));
    }
    let mut totals = vec![0.0; n];
    let mut ties = 0.0;
    for j in judges {
        let r = midranks(j);
        for (t, v) in totals.iter_mut().zip(&r) {
            *t += v;
        }
        let mut sorted = r.clone();
        sorted.sort_by(f64::total_cmp);
        let mut i = 0;
        while i < n {
            let mut k = i;
            while k + 1 < n && sorted[k + 1] == sorted[i] {
                k += 1;
            }
            let t = (k - i + 1) as f64;
            ties += t * t * t - t;
            i = k + 1;
        }
    }
    let (mf, nf) = (m as f64, n as f64);
    let mean = totals.iter().sum::<f64>() / nf;
    let s: f64 = totals.iter().map(|t| (t - mean).powi(2)).sum();
    let denom = mf * mf * (nf * nf * nf - nf) - mf * ties;
    if denom <= 0.0 {
        return Err(Error::Infeasible("every judge ties all objects; W is undefined".into()));
    }
    let w = (12.0 * s / denom).clamp(0.0, 1.0);
    let chi2 = mf * (nf - 1.0) * w;
    Ok(Concordance {
        w,
        chi2,
        df: n - 1,
        p_value: chi2_sf(chi2, nf - 1.0),
        judges: m,
        objects: n,
    })
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

/// Spearman's rank correlation (Pearson on midranks).
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InvalidArgument("need two equally long samples of length >= 2".into()));
    }
    Ok(pearson(&midranks(a), &midranks(b)))
}

/// Kendall's tau-b between two rankings.
pub fn kendall_tau_b(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InvalidArgument("need two equally long samples of length >= 2".into()));
    }
    let (mut conc, mut disc, mut ties_a, mut ties_b) = (0.0f64, 0.0, 0.0, 0.0);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let da = a[i].total_cmp(&a[j]);
            let db = b[i].total_cmp(&b[j]);
            match (da.is_eq(), db.is_eq()) {
                (true, true) => {}
                (true, false) => ties_a += 1.0,
                (false, true) => ties_b += 1.0,
                (false, false) if da == db => conc += 1.0,
                (false, false) => disc += 1.0,
            }
        }
    }
    let denom = ((conc + disc + ties_a) * (conc + disc + ties_b)).sqrt();
    Ok(if denom == 0.0 { 0.0 } else { (conc - disc) / denom })
}

/// Concordance of the experts' rank scores over every factor any of them named;
/// unranked factors tie at the bottom of an expert's list.
pub fn expert_concordance(rankings: &ExpertRankingSet) -> Result<Concordance> {
    let factors: Vec<String> = rankings.factors().into_iter().collect();
    let rows: Vec<Vec<f64>> = rankings
        .experts
        .iter()
        .map(|e| factors.iter().map(|f| -rankings.expert_score(e, f)).collect())
        .collect();
    kendall_w(&rows)
}
