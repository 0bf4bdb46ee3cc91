mod oracle;
mod synth;

use factorsel::relief::{rrelieff, ReliefConfig};
use synth::{linear_task, numeric_dataset};

fn cfg() -> ReliefConfig {
    ReliefConfig { m: None, k: 10, sigma: 20.0 }
}

#[test]
fn recovers_the_two_informative_factors() {
    let mut hits = 0;
    for seed in 0..30 {
        let (x, y) = linear_task(seed, 60, 10);
        let wv = rrelieff(&numeric_dataset(&x, &y), cfg(), seed).unwrap();
        let top: Vec<String> = wv.ranked().into_iter().take(2).map(|(f, _)| f).collect();
        if top.contains(&"f1".to_string()) && top.contains(&"f2".to_string()) {
            hits += 1;
        }
    }
    assert!(hits >= 28, "top-2 recovered in {hits}/30 seeds");
}

#[test]
fn matches_reference_implementation() {
    for seed in [1, 2, 3] {
        let (x, y) = linear_task(seed, 40, 5);
        let wv = rrelieff(&numeric_dataset(&x, &y), cfg(), seed).unwrap();
        let reference = oracle::rrelieff(&x, &y, 10, 20.0);
        for ((_, w), r) in wv.weights.iter().zip(&reference) {
            assert!((w - r).abs() < 1e-12, "{w} vs {r}");
        }
    }
}

#[test]
fn constant_factor_weighs_exactly_zero() {
    let (mut x, y) = linear_task(5, 60, 4);
    for r in x.iter_mut() {
        r.push(3.0);
    }
    let wv = rrelieff(&numeric_dataset(&x, &y), cfg(), 5).unwrap();
    assert_eq!(wv.get("f5"), Some(0.0));
}

#[test]
fn duplicated_factors_weigh_the_same() {
    let (mut x, y) = linear_task(9, 60, 4);
    for r in x.iter_mut() {
        let v = r[0];
        r.push(v);
    }
    let wv = rrelieff(&numeric_dataset(&x, &y), cfg(), 9).unwrap();
    assert!((wv.get("f1").unwrap() - wv.get("f5").unwrap()).abs() < 1e-9);
}

#[test]
fn weights_stay_in_range_and_sampling_is_seeded() {
    let (x, y) = linear_task(11, 50, 6);
    let ds = numeric_dataset(&x, &y);
    let sampled = ReliefConfig { m: Some(30), ..cfg() };
    let a = rrelieff(&ds, sampled, 4).unwrap();
    assert_eq!(a, rrelieff(&ds, sampled, 4).unwrap());
    assert!(a.weights.iter().all(|(_, w)| (-1.0..=1.0).contains(w)));
    assert_eq!(a.iterations, 30);
}

#[test]
fn row_order_does_not_change_full_sweep_weights() {
    let (x, y) = linear_task(17, 45, 5);
    let base = rrelieff(&numeric_dataset(&x, &y), cfg(), 0).unwrap();
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.reverse();
    // distinct continuous values make neighbour ties vanishingly unlikely
    let px: Vec<Vec<f64>> = idx.iter().map(|&i| x[i].clone()).collect();
    let py: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let perm = rrelieff(&numeric_dataset(&px, &py), cfg(), 0).unwrap();
    for ((_, a), (_, b)) in base.weights.iter().zip(&perm.weights) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn constant_target_flags_and_zeroes() {
    let (x, _) = linear_task(2, 20, 3);
    let wv = rrelieff(&numeric_dataset(&x, &[4.0; 20]), cfg(), 0).unwrap();
    assert!(wv.constant_target);
    assert!(wv.weights.iter().all(|(_, w)| *w == 0.0));
}

#[test]
fn too_few_records_for_k_is_an_error() {
    let (x, y) = linear_task(2, 10, 3);
    assert!(rrelieff(&numeric_dataset(&x, &y), cfg(), 0).is_err());
}
