//! Brute-force reference implementations used to check the library.
//! The tabular ones work on plain vectors parsed straight from CSV text and
//! share no code with the crate under test.
#![allow(dead_code)]

use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Numeric,
    /// Ordered levels, compared by position.
    Ordinal(&'static [&'static str]),
    Nominal,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Cat(String),
}

impl Cell {
    fn num(&self, kind: Kind) -> f64 {
        match (self, kind) {
            (Cell::Num(x), _) => *x,
            (Cell::Cat(s), Kind::Ordinal(levels)) => levels.iter().position(|l| l == s).unwrap() as f64,
            _ => panic!("not numeric"),
        }
    }
}

/// Complete table: ids, targets and factor cells by column.
pub struct Table {
    pub ids: Vec<String>,
    pub y: Vec<f64>,
    pub names: Vec<String>,
    pub kinds: Vec<Kind>,
    pub cells: Vec<Vec<Cell>>,
}

impl Table {
    /// `text` has the id first, the target second, then factors in `kinds` order.
    pub fn parse(text: &str, kinds: &[Kind]) -> Table {
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let mut t = Table {
            ids: vec![],
            y: vec![],
            names: header[2..].iter().map(|s| s.to_string()).collect(),
            kinds: kinds.to_vec(),
            cells: vec![],
        };
        for line in lines.filter(|l| !l.is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            t.ids.push(f[0].to_string());
            t.y.push(f[1].parse().unwrap());
            t.cells.push(
                f[2..]
                    .iter()
                    .zip(kinds)
                    .map(|(s, k)| match k {
                        Kind::Numeric => Cell::Num(s.parse().unwrap()),
                        _ => Cell::Cat(s.to_string()),
                    })
                    .collect(),
            );
        }
        t
    }

    pub fn col(&self, name: &str) -> usize {
        self.names.iter().position(|n| n == name).unwrap()
    }
}

/// Distance between rows `a` and `b` over `cols`, ranges taken from `fit_rows`.
pub fn distance(t: &Table, cols: &[usize], fit_rows: &[usize], a: usize, b: usize) -> f64 {
    let mut s = 0.0;
    for &c in cols {
        let d = match t.kinds[c] {
            Kind::Nominal => {
                if t.cells[a][c] == t.cells[b][c] {
                    0.0
                } else {
                    1.0
                }
            }
            k => {
                let vals: Vec<f64> = fit_rows.iter().map(|&r| t.cells[r][c].num(k)).collect();
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if hi > lo {
                    (t.cells[a][c].num(k) - t.cells[b][c].num(k)).abs() / (hi - lo)
                } else {
                    0.0
                }
            }
        };
        s += d * d;
    }
    (s / cols.len() as f64).sqrt()
}

/// Leave-one-out k-NN predictions; ties at equal distance go to the smaller id.
pub fn knn_loocv(t: &Table, cols: &[usize], k: usize) -> Vec<f64> {
    let n = t.ids.len();
    (0..n)
        .map(|q| {
            let train: Vec<usize> = (0..n).filter(|&r| r != q).collect();
            let fit: Vec<usize> = (0..n).collect();
            let mut d: Vec<(f64, &str, f64)> = train
                .iter()
                .map(|&r| (distance(t, cols, &fit, q, r), t.ids[r].as_str(), t.y[r]))
                .collect();
            d.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(y.1)));
            d[..k].iter().map(|x| x.2).sum::<f64>() / k as f64
        })
        .collect()
}

fn cuts(values: &[f64], parts: usize) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (1..parts).map(|j| v[j * v.len() / parts]).collect()
}

fn bucket(cuts: &[f64], x: f64) -> usize {
    cuts.iter().filter(|&&c| c <= x).count()
}

fn entropy(labels: &[usize]) -> f64 {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let n = labels.len() as f64;
    counts.values().map(|&c| c as f64 / n).map(|p| -p * p.log2()).sum()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Leave-one-out set-reduction predictions: equal-frequency classes of the
/// target, quantile bins for numeric factors, level equality otherwise;
/// greedy strictly-decreasing entropy with lexicographic tie-break; each
/// factor once; subsets must shrink and keep `min_subset` rows; median of
/// the terminal subset.
pub fn osr_loocv(t: &Table, cols: &[usize], bins: usize, classes: usize, min_subset: usize) -> Vec<f64> {
    let n = t.ids.len();
    (0..n)
        .map(|q| {
            let train: Vec<usize> = (0..n).filter(|&r| r != q).collect();
            let ys: Vec<f64> = train.iter().map(|&r| t.y[r]).collect();
            let ccuts = cuts(&ys, classes);
            let label: BTreeMap<usize, usize> = train.iter().map(|&r| (r, bucket(&ccuts, t.y[r]))).collect();
            let mut order: Vec<usize> = cols.to_vec();
            order.sort_by(|&a, &b| t.names[a].cmp(&t.names[b]));
            let holds = |c: usize, r: usize| -> bool {
                match t.kinds[c] {
                    Kind::Numeric => {
                        let vals: Vec<f64> = train.iter().map(|&x| t.cells[x][c].num(Kind::Numeric)).collect();
                        let cs = cuts(&vals, bins);
                        bucket(&cs, t.cells[r][c].num(Kind::Numeric)) == bucket(&cs, t.cells[q][c].num(Kind::Numeric))
                    }
                    _ => t.cells[r][c] == t.cells[q][c],
                }
            };
            let mut subset = train.clone();
            let mut h = entropy(&subset.iter().map(|r| label[r]).collect::<Vec<_>>());
            let mut used: Vec<usize> = vec![];
            loop {
                let mut best: Option<(f64, Vec<usize>, usize)> = None;
                for &c in &order {
                    if used.contains(&c) {
                        continue;
                    }
                    let next: Vec<usize> = subset.iter().copied().filter(|&r| holds(c, r)).collect();
                    if next.len() < min_subset || next.len() == subset.len() {
                        continue;
                    }
                    let e = entropy(&next.iter().map(|r| label[r]).collect::<Vec<_>>());
                    if best.as_ref().is_none_or(|b| e < b.0) {
                        best = Some((e, next, c));
                    }
                }
                match best {
                    Some((e, next, c)) if e < h - 1e-12 => {
                        used.push(c);
                        subset = next;
                        h = e;
                    }
                    _ => break,
                }
            }
            median(subset.iter().map(|&r| t.y[r]).collect())
        })
        .collect()
}

/// RReliefF over purely numeric complete data, full sweep in row order.
pub fn rrelieff(x: &[Vec<f64>], y: &[f64], k: usize, sigma: f64) -> Vec<f64> {
    let n = x.len();
    let a = x[0].len();
    let span = |v: &dyn Fn(usize) -> f64| {
        let vals: Vec<f64> = (0..n).map(v).collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let spans: Vec<f64> = (0..a).map(|f| span(&|i| x[i][f])).collect();
    let ty = span(&|i| y[i]);
    let diff = |f: usize, i: usize, j: usize| {
        if spans[f] > 0.0 {
            (x[i][f] - x[j][f]).abs() / spans[f]
        } else {
            0.0
        }
    };
    let raw: Vec<f64> = (1..=k).map(|r| (-(r as f64 / sigma) * (r as f64 / sigma)).exp()).collect();
    let z: f64 = raw.iter().sum();
    let (mut ndc, mut nda, mut ndcda) = (0.0, vec![0.0; a], vec![0.0; a]);
    for i in 0..n {
        let mut nb: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (((0..a).map(|f| diff(f, i, j).powi(2)).sum::<f64>() / a as f64).sqrt(), j))
            .collect();
        nb.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap().then(p.1.cmp(&q.1)));
        for (r, &(_, j)) in nb.iter().take(k).enumerate() {
            let d = raw[r] / z;
            let dc = (y[i] - y[j]).abs() / ty;
            ndc += dc * d;
            for f in 0..a {
                nda[f] += diff(f, i, j) * d;
                ndcda[f] += dc * diff(f, i, j) * d;
            }
        }
    }
    let m = n as f64;
    (0..a).map(|f| ndcda[f] / ndc - (nda[f] - ndcda[f]) / (m - ndc)).collect()
}

/// Two-sample pooled t statistic.
pub fn pooled_t(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let ss = |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    let df = (a.len() + b.len() - 2) as f64;
    let sp2 = (ss(a, ma) + ss(b, mb)) / df;
    let t = (ma - mb) / (sp2 * (1.0 / a.len() as f64 + 1.0 / b.len() as f64)).sqrt();
    (t, df)
}

pub mod trees {
    //! Random preference trees and a path-product reference evaluation.

    use factorsel::mcda::{Alternative, McdaNode, MetricValue, NodeKind, ValueFunction};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub const METRICS: [&str; 4] = ["m0", "m1", "m2", "m3"];

    fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0f64) + 1e-3).collect();
        let s: f64 = raw.iter().sum();
        raw.iter().map(|w| w / s).collect()
    }

    fn val(rng: &mut ChaCha8Rng) -> ValueFunction {
        let n = rng.gen_range(1..4);
        let mut xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        ValueFunction::PiecewiseLinear(xs.into_iter().map(|x| (x, rng.gen_range(0.0..=1.0))).collect())
    }

    fn children(rng: &mut ChaCha8Rng, parent: NodeKind, depth: usize, max: usize, tag: &str) -> Vec<McdaNode> {
        let n = rng.gen_range(1..=3);
        let ws = weights(rng, n);
        ws.into_iter()
            .enumerate()
            .map(|(i, w)| {
                let name = format!("{tag}.{i}");
                let leaf_level = depth + 1 == max;
                match parent {
                    NodeKind::Criterion if leaf_level || rng.gen_bool(0.6) => {
                        let metric = METRICS[rng.gen_range(0..METRICS.len())];
                        McdaNode::model(name, w, metric, val(rng))
                    }
                    NodeKind::Criterion => {
                        let c = children(rng, NodeKind::Criterion, depth + 1, max, &name);
                        McdaNode::inner(name, NodeKind::Criterion, w, c)
                    }
                    _ => {
                        // directories must leave room for a criterion and its model
                        let kind = if depth + 2 < max && rng.gen_bool(0.4) {
                            NodeKind::Directory
                        } else {
                            NodeKind::Criterion
                        };
                        let c = children(rng, kind, depth + 1, max, &name);
                        McdaNode::inner(name, kind, w, c)
                    }
                }
            })
            .collect()
    }

    /// Valid tree of depth 2..=4 (root at depth 0, models at most at depth 4).
    pub fn random_tree(seed: u64) -> McdaNode {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let max = rng.gen_range(2..=4);
        McdaNode::root("root", children(&mut rng, NodeKind::Root, 0, max, "n"))
    }

    pub fn random_alternative(rng: &mut ChaCha8Rng, name: &str) -> Alternative {
        METRICS
            .iter()
            .fold(Alternative::new(name), |a, m| a.with(*m, rng.gen_range(-6.0..6.0)))
    }

    fn interp(points: &[(f64, f64)], x: f64) -> f64 {
        if x <= points[0].0 {
            return points[0].1;
        }
        for w in points.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if x <= x1 {
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
            }
        }
        points[points.len() - 1].1
    }

    /// Sum over leaves of (product of weights on the path) times leaf preference.
    pub fn path_sum(node: &McdaNode, alt: &Alternative, scale: f64) -> f64 {
        match &node.model {
            Some(m) => {
                let ValueFunction::PiecewiseLinear(points) = &m.val else { panic!("numeric trees only") };
                let Some(MetricValue::Number(x)) = alt.metrics.get(&m.metric) else { panic!("metric") };
                scale * interp(points, *x)
            }
            None => node.children.iter().map(|c| path_sum(c, alt, scale * c.weight)).sum(),
        }
    }

    pub fn depth(node: &McdaNode) -> usize {
        node.children.iter().map(|c| 1 + depth(c)).max().unwrap_or(0)
    }

    /// Paths of every non-root node.
    pub fn paths(node: &McdaNode, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for (i, c) in node.children.iter().enumerate() {
            prefix.push(i);
            out.push(prefix.clone());
            paths(c, prefix, out);
            prefix.pop();
        }
    }
}
