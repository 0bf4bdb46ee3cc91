#![allow(dead_code)]
//! Synthetic datasets shared by the property and acceptance suites.

use factorsel::data::{Dataset, FactorDescriptor, ProjectRecord, Role, Scale, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` rows of `factors` uniform columns; target `f1 + 0.5 f2` plus noise
/// with standard deviation 5% of the noiseless target range, shifted by 1
/// to keep the target positive.
pub fn linear_task(seed: u64, n: usize, factors: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..factors).map(|_| rng.gen::<f64>()).collect()).collect();
    let clean: Vec<f64> = x.iter().map(|r| r[0] + 0.5 * r[1]).collect();
    let lo = clean.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = clean.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sd = 0.05 * (hi - lo);
    let y = clean
        .iter()
        .map(|c| {
            let (u1, u2): (f64, f64) = (rng.gen_range(f64::EPSILON..1.0), rng.gen());
            1.0 + c + sd * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        })
        .collect();
    (x, y)
}

pub fn numeric_dataset(x: &[Vec<f64>], y: &[f64]) -> Dataset {
    let mut desc = vec![FactorDescriptor::new("y", Scale::Continuous, Role::Dependent)];
    desc.extend((0..x[0].len()).map(|f| FactorDescriptor::new(format!("f{}", f + 1), Scale::Continuous, Role::Independent)));
    let records = x
        .iter()
        .zip(y)
        .enumerate()
        .map(|(i, (row, &t))| ProjectRecord {
            id: format!("r{i:03}"),
            values: std::iter::once(Value::Number(t)).chain(row.iter().map(|&v| Value::Number(v))).collect(),
        })
        .collect();
    Dataset::new("id", desc, records).unwrap()
}

/// Five factors driven by one latent variable, plus a positive target.
pub fn correlated(seed: u64, n: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loadings = [1.0, 0.8, -0.6, 0.5, 1.2];
    let mut desc = vec![FactorDescriptor::new("y", Scale::Continuous, Role::Dependent)];
    desc.extend((0..loadings.len()).map(|j| FactorDescriptor::new(format!("f{j}"), Scale::Continuous, Role::Independent)));
    let records = (0..n)
        .map(|i| {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let mut values = vec![Value::Number(10.0 + z)];
            values.extend(loadings.iter().map(|a| Value::Number(a * z + 0.1 * rng.gen_range(-1.0..1.0))));
            ProjectRecord {
                id: format!("p{i:03}"),
                values,
            }
        })
        .collect();
    Dataset::new("id", desc, records).unwrap()
}

/// Masks about `rate` of the predictor cells, never a whole record or column.
pub fn mask(ds: &Dataset, rate: f64, seed: u64) -> (Dataset, Vec<(usize, usize)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
    let cols = ds.predictor_indices();
    let mut records = ds.records().to_vec();
    let mut masked = Vec::new();
    for (i, r) in records.iter_mut().enumerate() {
        for &c in &cols {
            let left = cols.iter().filter(|&&k| !r.values[k].is_missing()).count();
            if left > 1 && rng.gen_bool(rate) {
                r.values[c] = Value::Missing;
                masked.push((i, c));
            }
        }
    }
    (Dataset::new("id", ds.descriptors().to_vec(), records).unwrap(), masked)
}
