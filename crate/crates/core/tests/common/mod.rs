//! Naive reference computations, written independently of the library.

#![allow(dead_code)]

use cbr_core::{CostKind, CostRecord};
use rand::Rng;

const LN2: f64 = std::f64::consts::LN_2;

pub fn entropy(p: &[f64]) -> f64 {
    let mut h = 0.0;
    for &x in p {
        if x > 0.0 {
            h -= x * x.ln();
        }
    }
    h / LN2
}

/// `None` when `p` puts mass where `q` has none.
pub fn kl(p: &[f64], q: &[f64]) -> Option<f64> {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return None;
            }
            d += a * (a.ln() - b.ln());
        }
    }
    Some(d / LN2)
}

/// `I(X;Y)` from the joint table `p(x) c(y|x)`.
pub fn mutual_information(px: &[f64], rows: &[Vec<f64>]) -> f64 {
    let k = rows.first().map_or(0, Vec::len);
    let mut py = vec![0.0; k];
    for (p, row) in px.iter().zip(rows) {
        for (j, c) in row.iter().enumerate() {
            py[j] += p * c;
        }
    }
    let mut i = 0.0;
    for (p, row) in px.iter().zip(rows) {
        for (j, c) in row.iter().enumerate() {
            let joint = p * c;
            if joint > 0.0 {
                i += joint * (joint / (p * py[j])).ln();
            }
        }
    }
    i / LN2
}

/// Group masses of a grouping given as the group index of each letter.
pub fn group_masses(p: &[f64], groups: &[usize], k: usize) -> Vec<f64> {
    let mut q = vec![0.0; k];
    for (x, &g) in p.iter().zip(groups) {
        q[g] += x;
    }
    q
}

pub fn random_pmf<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Random surjection of `n` letters onto `k` groups.
pub fn random_groups<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    let mut g: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
    // shuffle so the first k letters are not always singletons
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        g.swap(i, j);
    }
    g
}

pub fn cost(amount: f64) -> CostRecord {
    CostRecord::new(CostKind::Time, amount, "s").unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
