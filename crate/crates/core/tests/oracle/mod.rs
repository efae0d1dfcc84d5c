//! Reference implementations used only by tests: an exact-rational Fisher
//! test and an exhaustive, unpruned miner with its own Hausdorff distance,
//! neighbourhoods and Westfall-Young calibration. Nothing here calls the
//! search, distance or p-value code under test. Label permutations come from
//! `PermutationSet`, which fixes the random input both sides must share.

#![allow(dead_code)]

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use madsm_core::model::{Dataset, Label};
use madsm_core::stats::PermutationSet;

pub fn binom(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

/// Two-sided point-probability p-value as an exact fraction.
pub fn fet_rational(a: usize, x: usize, n: usize, n1: usize) -> BigRational {
    let n0 = n - n1;
    let lo = x.saturating_sub(n0);
    let hi = x.min(n1);
    assert!(lo <= a && a <= hi, "infeasible cell");
    let mass = |k: usize| binom(n1, k) * binom(n0, x - k);
    let observed = mass(a);
    let tail: BigInt = (lo..=hi).map(mass).filter(|m| *m <= observed).sum();
    BigRational::new(tail, binom(n, x))
}

/// Correctly rounded conversion of a small fraction to `f64`.
pub fn to_f64(r: &BigRational) -> f64 {
    r.numer().to_f64().unwrap() / r.denom().to_f64().unwrap()
}

pub fn fet_f64(a: usize, x: usize, n: usize, n1: usize) -> f64 {
    to_f64(&fet_rational(a, x, n, n1))
}

/// Smallest p-value over every feasible `a` at support `x`.
pub fn psi_f64(x: usize, n: usize, n1: usize) -> f64 {
    let lo = x.saturating_sub(n - n1);
    (lo..=x.min(n1)).map(|a| fet_f64(a, x, n, n1)).fold(1.0, f64::min)
}

fn euclid(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Exhaustive symmetric Hausdorff distance between two point sets.
pub fn hausdorff_naive(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let directed = |p: &[Vec<f64>], q: &[Vec<f64>]| {
        p.iter()
            .map(|u| q.iter().map(|v| euclid(u, v)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

fn window(ds: &Dataset, i: usize, s: usize, len: usize) -> Vec<Vec<f64>> {
    (s..s + len).map(|t| ds.matrix(i).column(t).to_vec()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleNode {
    pub matrix: usize,
    pub start: usize,
    pub end: usize,
    pub p_value: f64,
    pub positives: usize,
    pub support: usize,
    pub neighborhood: usize,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub threshold: f64,
    pub delta_star: f64,
    pub pmin: Vec<f64>,
    /// Nodes with `p < delta_star`, sorted by (p, matrix, start, end).
    pub discoveries: Vec<OracleNode>,
    pub nodes: usize,
}

/// Every window of length at least `l` is a node, and `p_min` starts at
/// `alpha`. A same-length window `(j, s')` is a neighbour of `(i, s, e)` when
/// every pair of equal-length prefixes of length `l..=e-s+1` lies within `eps`
/// (timestep point sets, Euclidean base).
pub fn brute_force(ds: &Dataset, l: usize, eps: f64, b: usize, alpha: f64, seed: u64) -> OracleResult {
    let n = ds.len();
    let labels: Vec<Label> = ds.labels();
    let n1 = labels.iter().filter(|l| l.is_positive()).count();
    let perms = PermutationSet::generate(&labels, b, seed);
    let perm_pos: Vec<Vec<bool>> = (0..b).map(|k| perms.get(k).to_vec()).collect();

    let mut pmin = vec![alpha; b];
    let mut nodes = Vec::new();
    for i in 0..n {
        let mi = ds.matrix(i).len();
        for s in 0..mi {
            for e in s + l.max(1) - 1..mi {
                let len = e - s + 1;
                let mut nb = Vec::new();
                for j in 0..n {
                    let mj = ds.matrix(j).len();
                    for s2 in 0..mj {
                        if s2 + len > mj {
                            break;
                        }
                        let ok =
                            (l..=len).all(|pl| hausdorff_naive(&window(ds, i, s, pl), &window(ds, j, s2, pl)) <= eps);
                        if ok {
                            nb.push(j);
                        }
                    }
                }
                let support: BTreeSet<usize> = nb.iter().copied().collect();
                let x = support.len();
                let a = support.iter().filter(|&&j| labels[j].is_positive()).count();
                for (k, pos) in perm_pos.iter().enumerate() {
                    let ab = support.iter().filter(|&&j| pos[j]).count();
                    pmin[k] = pmin[k].min(fet_f64(ab, x, n, n1));
                }
                nodes.push(OracleNode {
                    matrix: i,
                    start: s,
                    end: e,
                    p_value: fet_f64(a, x, n, n1),
                    positives: a,
                    support: x,
                    neighborhood: nb.len(),
                });
            }
        }
    }

    let mut sorted = pmin.clone();
    sorted.sort_by(f64::total_cmp);
    let idx = ((alpha * b as f64 + 1e-9).floor() as usize).min(b - 1);
    let threshold = sorted[idx];
    let delta_star = sorted.iter().copied().filter(|v| *v < threshold).fold(0.0, f64::max);
    let total = nodes.len();
    let mut discoveries: Vec<OracleNode> = nodes.into_iter().filter(|v| v.p_value < delta_star).collect();
    discoveries.sort_by(|u, v| {
        u.p_value
            .total_cmp(&v.p_value)
            .then(u.matrix.cmp(&v.matrix))
            .then(u.start.cmp(&v.start))
            .then(u.end.cmp(&v.end))
    });
    OracleResult {
        threshold,
        delta_star,
        pmin,
        discoveries,
        nodes: total,
    }
}
