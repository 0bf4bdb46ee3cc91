//! Regenerates the bundled synthetic inputs.
//!
//! `cargo run -p factorsel --example gen_synthetic -- crates/core/data`

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LEVELS3: [&str; 3] = ["low", "medium", "high"];
const TOOLS: [&str; 3] = ["none", "some", "heavy"];
const DOCS: [&str; 3] = ["poor", "fair", "good"];
const LANGS: [&str; 3] = ["cobol", "java", "c"];
const METHODS: [&str; 2] = ["waterfall", "iterative"];

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn put(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap_or_else(|e| panic!("{}: {e}", dir.join(name).display()));
}

fn projects(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let header = [
        "project_id",
        "productivity",
        "size_fp",
        "team_size",
        "experience",
        "tool_use",
        "req_volatility",
        "language",
        "methodology",
        "domain_knowledge",
        "doc_quality",
        "reuse_ratio",
        "office_noise",
        "meeting_hours",
        "legacy_port",
    ];
    let mut out = header.join(",") + "\n";
    let heavy_gaps = [7, 23];
    for p in 1..=40 {
        let exp = rng.gen_range(0..3usize);
        let tool = rng.gen_range(0..3usize);
        let vol = rng.gen_range(0..3usize);
        let lang = rng.gen_range(0..3usize);
        let method = rng.gen_range(0..2usize);
        let domain: f64 = (rng.gen_range(0.0..10.0f64) * 10.0).round() / 10.0;
        let docs = rng.gen_range(0..3usize);
        let reuse: f64 = (rng.gen_range(0.0..0.6f64) * 100.0).round() / 100.0;
        let noise: f64 = (rng.gen_range(30.0..70.0f64) * 10.0).round() / 10.0;
        let meetings = rng.gen_range(1..15u32);
        let size = rng.gen_range(80..1500u32);
        let team = rng.gen_range(2..20u32);
        let prod = 8.0 + 6.0 * exp as f64 + 4.0 * tool as f64 - 3.0 * vol as f64
            + 0.8 * domain
            + if lang == 1 { 2.0 } else { 0.0 }
            + 1.5 * gauss(&mut rng);
        let prod = (prod.max(1.0) * 100.0).round() / 100.0;
        let mut cells = vec![
            size.to_string(),
            team.to_string(),
            LEVELS3[exp].to_string(),
            TOOLS[tool].to_string(),
            LEVELS3[vol].to_string(),
            LANGS[lang].to_string(),
            METHODS[method].to_string(),
            format!("{domain}"),
            DOCS[docs].to_string(),
            format!("{reuse}"),
            format!("{noise}"),
            meetings.to_string(),
        ];
        if heavy_gaps.contains(&p) {
            // 9 of 12 factors missing: above the record threshold
            cells.iter_mut().take(9).for_each(|c| *c = "?".into());
        } else {
            for c in cells.iter_mut() {
                if rng.gen_bool(0.07) {
                    *c = "?".into();
                }
            }
        }
        let legacy = if p % 20 == 0 { format!("{}", p / 20) } else { "?".into() };
        let _ = writeln!(out, "P{p:02},{prod},{},{legacy}", cells.join(","));
    }
    put(dir, "projects.csv", &out);
}

const SCHEMA: &str = r#"{
  "project_id": {"scale": "nominal", "role": "identifier"},
  "productivity": {"scale": "continuous", "role": "dependent"},
  "size_fp": {"scale": "integer", "role": "size", "category": "product"},
  "team_size": {"scale": "integer", "role": "independent", "category": "project"},
  "experience": {"scale": "ordinal", "role": "independent", "category": "personnel", "levels": ["low", "medium", "high"]},
  "tool_use": {"scale": "ordinal", "role": "independent", "category": "process", "levels": ["none", "some", "heavy"]},
  "req_volatility": {"scale": "ordinal", "role": "independent", "category": "product", "levels": ["low", "medium", "high"]},
  "language": {"scale": "nominal", "role": "independent", "category": "product", "levels": ["cobol", "java", "c"]},
  "methodology": {"scale": "nominal", "role": "independent", "category": "process", "levels": ["waterfall", "iterative"]},
  "domain_knowledge": {"scale": "continuous", "role": "independent", "category": "personnel"},
  "doc_quality": {"scale": "ordinal", "role": "independent", "category": "process", "levels": ["poor", "fair", "good"]},
  "reuse_ratio": {"scale": "continuous", "role": "independent", "category": "product"},
  "office_noise": {"scale": "continuous", "role": "independent", "category": "context"},
  "meeting_hours": {"scale": "integer", "role": "independent", "category": "context"},
  "legacy_port": {"scale": "integer", "role": "independent", "category": "context"}
}
"#;

/// (category, factors in rank order).
type Categories = &'static [(&'static str, &'static [&'static str])];

const RANKINGS: [(&str, Categories); 3] = [
    (
        "e1",
        &[
            ("personnel", &["experience", "domain_knowledge", "team_cohesion"]),
            ("process", &["tool_use", "process_maturity", "doc_quality"]),
            ("product", &["req_volatility", "product_complexity", "language"]),
            ("project", &["schedule_pressure", "team_size"]),
        ],
    ),
    (
        "e2",
        &[
            ("personnel", &["domain_knowledge", "experience"]),
            ("process", &["process_maturity", "tool_use", "methodology"]),
            ("product", &["product_complexity", "req_volatility", "reuse_ratio"]),
            ("context", &["meeting_hours"]),
        ],
    ),
    (
        "e3",
        &[
            ("personnel", &["experience", "team_cohesion"]),
            ("process", &["tool_use", "doc_quality"]),
            ("product", &["language", "req_volatility"]),
            ("project", &["team_size", "schedule_pressure"]),
        ],
    ),
];

fn experts(dir: &Path) {
    let mut out = String::from("expert_id,category,factor,rank\n");
    let mut named = std::collections::BTreeSet::new();
    for (e, cats) in RANKINGS {
        for (cat, factors) in cats {
            for (i, f) in factors.iter().enumerate() {
                let _ = writeln!(out, "{e},{cat},{f},{}", i + 1);
                named.insert(*f);
            }
        }
    }
    put(dir, "experts.csv", &out);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut scores = String::from("expert_id,factor,impact,difficulty,controllability\n");
    for (e, _) in RANKINGS {
        for f in &named {
            let impact = rng.gen_range(2..=5u8);
            let difficulty = rng.gen_range(1..=5u8);
            let control = rng.gen_range(1..=5u8);
            let _ = writeln!(scores, "{e},{f},{impact},{difficulty},{control}");
        }
    }
    put(dir, "scores.csv", &scores);
}

const MANIFEST: &str = r#"{
  "data": "projects.csv",
  "schema": "schema.json",
  "experts": "experts.csv",
  "scores": "scores.csv",
  "data_share": 0.5,
  "prune": {"factor": 0.9, "project": 0.55},
  "imputation": {"k": 5},
  "relief": {"k": 10, "sigma": 20.0},
  "estimators": [{"kind": "knn", "k": 3}, {"kind": "osr"}],
  "factor_sets": [
    {"kind": "FM"},
    {"kind": "FE"},
    {"kind": "FT"},
    {"kind": "FM_R"},
    {"kind": "FM_R10"},
    {"kind": "FC"},
    {"kind": "FC_E25"},
    {"kind": "FC_R25"},
    {"kind": "FC_I25"},
    {"kind": "FI", "fraction": 0.25}
  ],
  "seed": 42
}
"#;

/// Small complete table for fold-by-fold checks.
fn loocv_table(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut out = String::from("id,effort,f1,f2,f3,f4,f5,f6\n");
    for p in 1..=12 {
        let f1: f64 = (rng.gen_range(0.0..10.0f64) * 10.0).round() / 10.0;
        let f2 = rng.gen_range(1..8u32);
        let f3 = rng.gen_range(0..3usize);
        let f4 = rng.gen_range(0..3usize);
        let f5: f64 = (rng.gen_range(0.0..1.0f64) * 100.0).round() / 100.0;
        let f6 = rng.gen_range(0..3usize);
        let y = 10.0 + 2.0 * f1 + 3.0 * f3 as f64 + if f4 == 2 { 5.0 } else { 0.0 } + rng.gen_range(0.0..4.0f64);
        let y = (y * 10.0).round() / 10.0;
        let _ = writeln!(
            out,
            "r{p:02},{y},{f1},{f2},{},{},{f5},{}",
            LEVELS3[f3],
            ["a", "b", "c"][f4],
            DOCS[f6]
        );
    }
    put(dir, "table12.csv", &out);
    put(
        dir,
        "table12.schema.json",
        r#"{
  "id": {"scale": "nominal", "role": "identifier"},
  "effort": {"scale": "continuous", "role": "dependent"},
  "f1": {"scale": "continuous", "role": "independent"},
  "f2": {"scale": "integer", "role": "independent"},
  "f3": {"scale": "ordinal", "role": "independent", "levels": ["low", "medium", "high"]},
  "f4": {"scale": "nominal", "role": "independent", "levels": ["a", "b", "c"]},
  "f5": {"scale": "continuous", "role": "independent"},
  "f6": {"scale": "ordinal", "role": "independent", "levels": ["poor", "fair", "good"]}
}
"#,
    );
}

fn main() {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "crates/core/data".into()));
    let synth = root.join("synthetic");
    fs::create_dir_all(&synth).expect("create output directory");
    projects(&synth);
    put(&synth, "schema.json", SCHEMA);
    experts(&synth);
    put(&synth, "manifest.json", MANIFEST);
    loocv_table(&root);
    println!("wrote {}", root.display());
}
