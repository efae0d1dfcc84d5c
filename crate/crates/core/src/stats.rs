//! Fisher's exact test, minimum attainable p-values, label permutations and
//! Westfall–Young threshold calibration.
//!
//! A node's 2x2 table has fixed margins: `x` matrices support the pattern,
//! `n1` matrices are positive, `N` in total. Under the null the number of
//! supporting positives `A` is hypergeometric with
//! `P(A = a) = C(n1, a) C(n0, x - a) / C(N, x)`.
//!
//! The point masses are computed as exact integer counts `C(n1, a) C(n0, x - a)`
//! in `u128` whenever they fit (N up to about 125), so ties in the two-sided
//! rule are decided exactly and the only rounding is the final division.
//! Larger tables fall back to log-factorials with a relative tie tolerance.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Label;

/// Identifier of the permutation generator, recorded in result documents.
pub const PERMUTATION_PRNG: &str = "chacha8 (rand_chacha 0.3) + fisher-yates shuffle (rand 0.8)";

/// Sidedness of the exact test, recorded in result documents.
pub const FET_SIDEDNESS: &str = "two-sided (point probability)";

const LOG_TIE_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("infeasible table: a={a}, x={x} for margins N={total}, n1={positives}")]
    Infeasible {
        a: usize,
        x: usize,
        total: usize,
        positives: usize,
    },
    #[error("unknown matrix id {id} (dataset has {n})")]
    UnknownId { id: usize, n: usize },
}

/// Class margins of the 2x2 table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContingencyMargins {
    pub total: usize,
    pub positives: usize,
    pub negatives: usize,
}

impl ContingencyMargins {
    pub fn new(positives: usize, negatives: usize) -> Self {
        Self {
            total: positives + negatives,
            positives,
            negatives,
        }
    }

    /// Range of `a` values achievable at support `x`.
    pub fn achievable(&self, x: usize) -> std::ops::RangeInclusive<usize> {
        x.saturating_sub(self.negatives)..=x.min(self.positives)
    }
}

pub(crate) fn binomial_u128(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(c)
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        out.push(acc);
    }
    out
}

/// Two-sided p-values for every achievable `a` at support `x`; entry `i`
/// corresponds to `a = lo + i` with `lo = max(0, x - n0)`.
fn pvalue_row(x: usize, m: &ContingencyMargins, lnf: &mut Option<Vec<f64>>) -> Vec<f64> {
    let range = m.achievable(x);
    let (lo, hi) = (*range.start(), *range.end());
    if lo > hi {
        return Vec::new();
    }
    let exact: Option<Vec<u128>> = (lo..=hi)
        .map(|a| {
            let l = binomial_u128(m.positives, a)?;
            let r = binomial_u128(m.negatives, x - a)?;
            l.checked_mul(r)
        })
        .collect();
    match exact.and_then(|c| exact_row(&c)) {
        Some(row) => row,
        None => {
            let lnf = lnf.get_or_insert_with(|| ln_factorials(m.total));
            log_row(x, lo, hi, m, lnf)
        }
    }
}

fn exact_row(counts: &[u128]) -> Option<Vec<f64>> {
    let total = counts.iter().try_fold(0u128, |acc, c| acc.checked_add(*c))?;
    let mut sorted: Vec<u128> = counts.to_vec();
    sorted.sort_unstable();
    let mut prefix = Vec::with_capacity(sorted.len());
    let mut acc: u128 = 0;
    for c in &sorted {
        acc += c;
        prefix.push(acc);
    }
    let row = counts
        .iter()
        .map(|c| {
            // number of masses <= c
            let upto = sorted.partition_point(|v| v <= c);
            prefix[upto - 1] as f64 / total as f64
        })
        .collect();
    Some(row)
}

fn log_row(x: usize, lo: usize, hi: usize, m: &ContingencyMargins, lnf: &[f64]) -> Vec<f64> {
    let ln_c = |n: usize, k: usize| lnf[n] - lnf[k] - lnf[n - k];
    let ln_total = ln_c(m.total, x);
    let masses: Vec<f64> = (lo..=hi)
        .map(|a| ln_c(m.positives, a) + ln_c(m.negatives, x - a) - ln_total)
        .collect();
    let tol = LOG_TIE_TOLERANCE.ln_1p();
    masses
        .iter()
        .map(|&lm| {
            let p: f64 = masses.iter().filter(|&&o| o <= lm + tol).map(|o| o.exp()).sum();
            p.min(1.0)
        })
        .collect()
}

/// Two-sided Fisher exact p-value of observing `a` positives among `x`
/// supporting matrices.
pub fn fet_pvalue(a: usize, x: usize, margins: &ContingencyMargins) -> Result<f64, StatsError> {
    let range = margins.achievable(x);
    if x > margins.total || !range.contains(&a) {
        return Err(StatsError::Infeasible {
            a,
            x,
            total: margins.total,
            positives: margins.positives,
        });
    }
    let row = pvalue_row(x, margins, &mut None);
    Ok(row[a - range.start()])
}

/// `psi(x)`: the smallest p-value any table with support `x` can reach.
pub fn min_attainable_p(x: usize, margins: &ContingencyMargins) -> f64 {
    if x > margins.total {
        return 1.0;
    }
    pvalue_row(x, margins, &mut None).into_iter().fold(1.0, f64::min)
}

/// `min_{1 <= x' <= x} psi(x')`, a lower bound on the p-value of a node with
/// support `x` and of every node whose support is no larger. Returns 1 for
/// `x = 0`.
pub fn envelope_bound(x: usize, margins: &ContingencyMargins) -> f64 {
    (1..=x.min(margins.total))
        .map(|xp| min_attainable_p(xp, margins))
        .fold(1.0, f64::min)
}

/// Precomputed p-values, `psi` and envelope for every support of one margin
/// configuration.
#[derive(Debug, Clone)]
pub struct PValueTable {
    margins: ContingencyMargins,
    rows: Vec<Vec<f64>>,
    psi: Vec<f64>,
    envelope: Vec<f64>,
}

impl PValueTable {
    pub fn new(margins: ContingencyMargins) -> Self {
        let mut lnf = None;
        let rows: Vec<Vec<f64>> = (0..=margins.total).map(|x| pvalue_row(x, &margins, &mut lnf)).collect();
        let psi: Vec<f64> = rows.iter().map(|r| r.iter().copied().fold(1.0, f64::min)).collect();
        let mut envelope = Vec::with_capacity(psi.len());
        let mut running = 1.0_f64;
        for (x, &p) in psi.iter().enumerate() {
            if x >= 1 {
                running = running.min(p);
            }
            envelope.push(running);
        }
        Self {
            margins,
            rows,
            psi,
            envelope,
        }
    }

    pub fn margins(&self) -> &ContingencyMargins {
        &self.margins
    }

    /// Caller guarantees `(a, x)` is feasible.
    #[inline]
    pub fn pvalue(&self, a: usize, x: usize) -> f64 {
        self.rows[x][a - x.saturating_sub(self.margins.negatives)]
    }

    pub fn psi(&self, x: usize) -> f64 {
        self.psi[x]
    }

    #[inline]
    pub fn envelope(&self, x: usize) -> f64 {
        self.envelope[x]
    }
}

/// `B` uniformly shuffled copies of a label vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationSet {
    seed: u64,
    labels: Vec<Vec<bool>>,
}

impl PermutationSet {
    pub fn generate(labels: &[Label], count: usize, seed: u64) -> Self {
        let original: Vec<bool> = labels.iter().map(|l| l.is_positive()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels = (0..count)
            .map(|_| {
                let mut v = original.clone();
                v.shuffle(&mut rng);
                v
            })
            .collect();
        Self { seed, labels }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, b: usize) -> &[bool] {
        &self.labels[b]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[bool]> {
        self.labels.iter().map(Vec::as_slice)
    }
}

/// FET p-value of a support set under one permuted labelling.
pub fn permuted_support_pvalue(
    support_ids: &[usize],
    perm_labels: &[bool],
    margins: &ContingencyMargins,
) -> Result<f64, StatsError> {
    let mut a = 0;
    for &id in support_ids {
        match perm_labels.get(id) {
            Some(true) => a += 1,
            Some(false) => {}
            None => {
                return Err(StatsError::UnknownId {
                    id,
                    n: perm_labels.len(),
                })
            }
        }
    }
    fet_pvalue(a, support_ids.len(), margins)
}

/// 0-based position of `P_sort^(floor(alpha B) + 1)` in the ascending sort.
pub fn threshold_index(alpha: f64, permutations: usize) -> usize {
    // nudge so that e.g. 0.29 * 100 floors to 29
    let k = (alpha * permutations as f64 + 1e-9).floor() as usize;
    k.min(permutations.saturating_sub(1))
}

/// Per-permutation running minimum p-values, each starting at `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct PMinVector {
    values: Vec<f64>,
}

impl PMinVector {
    pub fn new(permutations: usize, alpha: f64) -> Self {
        Self {
            values: vec![alpha; permutations],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, b: usize) -> f64 {
        self.values[b]
    }

    /// Lowers entry `b` to `p` if smaller. Returns whether it changed.
    #[inline]
    pub fn update(&mut self, b: usize, p: f64) -> bool {
        if p < self.values[b] {
            self.values[b] = p;
            true
        } else {
            false
        }
    }

    /// Element-wise minimum with another vector.
    pub fn merge(&mut self, other: &PMinVector) {
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            if *o < *v {
                *v = *o;
            }
        }
    }

    /// The order statistic `P_sort^(floor(alpha B) + 1)` used as the pruning
    /// threshold.
    pub fn threshold(&self, alpha: f64) -> f64 {
        let mut scratch = self.values.clone();
        self.threshold_with(alpha, &mut scratch)
    }

    pub(crate) fn threshold_with(&self, alpha: f64, scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        scratch.extend_from_slice(&self.values);
        let k = threshold_index(alpha, scratch.len());
        *scratch.select_nth_unstable_by(k, f64::total_cmp).1
    }
}

/// Westfall–Young threshold: the largest sorted `p_min` value strictly below
/// `P_sort^(floor(alpha B) + 1)`, or 0 when there is none.
pub fn calibrate_delta(p_min: &[f64], alpha: f64) -> f64 {
    if p_min.is_empty() {
        return 0.0;
    }
    let mut sorted = p_min.to_vec();
    sorted.sort_by(f64::total_cmp);
    let t = sorted[threshold_index(alpha, sorted.len())];
    sorted.iter().copied().filter(|&v| v < t).fold(0.0, f64::max)
}
