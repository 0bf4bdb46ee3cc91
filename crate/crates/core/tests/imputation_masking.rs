mod synth;

use factorsel::data::{Dataset, ProjectRecord, Value};
use factorsel::impute::{knn_impute, ImputationConfig};
use synth::{correlated, mask};

fn rmse(truth: &Dataset, guess: impl Fn(usize, usize) -> f64, cells: &[(usize, usize)]) -> f64 {
    let se: f64 = cells
        .iter()
        .map(|&(i, c)| (truth.records()[i].values[c].as_f64().unwrap() - guess(i, c)).powi(2))
        .sum();
    (se / cells.len() as f64).sqrt()
}

#[test]
fn nearest_donors_beat_column_means() {
    let mut wins = 0;
    for seed in 0..30 {
        let full = correlated(seed, 60);
        let (holey, cells) = mask(&full, 0.10, seed);
        let filled = knn_impute(&holey, ImputationConfig::default(), seed).unwrap();
        let col_mean = |c: usize| {
            let v: Vec<f64> = holey.records().iter().filter_map(|r| r.values[c].as_f64()).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let knn = rmse(&full, |i, c| filled.records()[i].values[c].as_f64().unwrap(), &cells);
        let mean = rmse(&full, |_, c| col_mean(c), &cells);
        if knn <= mean {
            wins += 1;
        }
    }
    assert!(wins >= 25, "k-NN won {wins}/30");
}

#[test]
fn observed_cells_never_change() {
    let full = correlated(3, 50);
    let (holey, _) = mask(&full, 0.15, 3);
    let filled = knn_impute(&holey, ImputationConfig { k: 3 }, 3).unwrap();
    assert!(filled.is_complete());
    for (a, b) in holey.records().iter().zip(filled.records()) {
        for (x, y) in a.values.iter().zip(&b.values) {
            if !x.is_missing() {
                assert_eq!(x, y);
            }
        }
    }
}

#[test]
fn duplicated_rows_recover_masked_value_exactly() {
    let full = correlated(8, 20);
    let mut records = full.records().to_vec();
    let copies: Vec<ProjectRecord> = records
        .iter()
        .map(|r| ProjectRecord {
            id: format!("{}-copy", r.id),
            values: r.values.clone(),
        })
        .collect();
    records.extend(copies);
    let mut holey = records.clone();
    let mut expected = Vec::new();
    for (i, c) in [(0, 1), (4, 3), (9, 5), (13, 2)] {
        expected.push((i, c, holey[i].values[c]));
        holey[i].values[c] = Value::Missing;
    }
    let ds = Dataset::new("id", full.descriptors().to_vec(), holey).unwrap();
    let filled = knn_impute(&ds, ImputationConfig { k: 1 }, 0).unwrap();
    for (i, c, v) in expected {
        assert_eq!(filled.records()[i].values[c], v);
    }
}

#[test]
fn same_seed_same_result() {
    let full = correlated(21, 40);
    let (holey, _) = mask(&full, 0.1, 21);
    let a = knn_impute(&holey, ImputationConfig::default(), 5).unwrap();
    let b = knn_impute(&holey, ImputationConfig::default(), 5).unwrap();
    assert_eq!(a.to_csv_string().unwrap(), b.to_csv_string().unwrap());
}
