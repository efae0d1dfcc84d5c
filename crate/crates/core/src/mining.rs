//! Discriminative sub-matrix mining with Westfall–Young calibration.
//!
//! Every length-`L` window ("seed") of every matrix roots a chain of nodes
//! `(s, e) -> (s, e + 1) -> ...`. A node carries its ε-neighbourhood: the
//! same-length windows within ε of the anchor. The seed neighbourhood is a
//! full scan; each extension only filters the parent's neighbours after
//! appending one column to each, so the set of supporting matrices can only
//! shrink along a chain.
//!
//! At every node the envelope bound `psi_hat(x)` of its support `x` is compared
//! with the current pruning threshold `P_sort^(floor(alpha B) + 1)` of the
//! per-permutation minimum p-values. If the bound reaches the threshold the
//! rest of the chain cannot hold a discovery and is skipped. Otherwise the
//! permuted p-values lower `p_min`, the true-label p-value is recorded, and
//! the chain is extended. After the traversal `delta*` is calibrated from
//! `p_min` and the recorded nodes below it are reported.
//!
//! Seeds are processed in fixed-size batches. Every seed of a batch starts
//! from the same snapshot of `p_min` and keeps a private copy; copies are
//! merged by element-wise minimum after the batch. A snapshot is never lower
//! than the final vector, so pruning is never more aggressive than a serial
//! run, and because the batch layout does not depend on the thread count the
//! whole result is identical for any number of threads.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distance::{window_distance, BaseDistance, DistanceMode, PairState};
use crate::model::{validate_dataset, Dataset, SubMatrixRef, Violation};
use crate::stats::{calibrate_delta, ContingencyMargins, PMinVector, PValueTable, PermutationSet};

/// Seeds per synchronisation batch.
pub const SEED_BATCH: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MiningError {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("single-class dataset ({positives} positive, {negatives} negative)")]
    SingleClass { positives: usize, negatives: usize },
    #[error("invalid dataset: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidDataset(Vec<Violation>),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("failed to build thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinerConfig {
    pub min_length: usize,
    pub epsilon: f64,
    pub permutations: usize,
    pub alpha: f64,
    pub distance_mode: DistanceMode,
    pub base_distance: BaseDistance,
    pub seed: u64,
    /// Disabling pruning enumerates every sub-matrix of length >= L.
    pub prune: bool,
}

impl Default for MinerConfig {
    fn default() -> Self {
        Self {
            min_length: 5,
            epsilon: 4.0,
            permutations: 1000,
            alpha: 0.05,
            distance_mode: DistanceMode::TimestepPointSet,
            base_distance: BaseDistance::Euclidean,
            seed: 0,
            prune: true,
        }
    }
}

impl MinerConfig {
    pub fn validate(&self) -> Result<(), MiningError> {
        let bad = |m: &str| Err(MiningError::InvalidConfig(m.to_string()));
        if self.min_length < 1 {
            return bad("min_length must be at least 1");
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be a finite non-negative number");
        }
        if self.permutations < 1 {
            return bad("permutations must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        Ok(())
    }
}

/// An anchor window with its ε-neighbourhood.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub anchor: SubMatrixRef,
    pub neighborhood: Vec<SubMatrixRef>,
    /// Sorted distinct matrix indices present in the neighbourhood.
    pub support: Vec<usize>,
}

impl Node {
    fn from_neighbors(anchor: SubMatrixRef, neighborhood: Vec<SubMatrixRef>) -> Self {
        let mut support: Vec<usize> = neighborhood.iter().map(|r| r.matrix).collect();
        support.push(anchor.matrix);
        support.sort_unstable();
        support.dedup();
        Self {
            anchor,
            neighborhood,
            support,
        }
    }
}

/// All windows of length exactly `min_length`, ordered by matrix then start.
pub fn enumerate_seeds(dataset: &Dataset, min_length: usize) -> Vec<SubMatrixRef> {
    let mut out = Vec::new();
    if min_length == 0 {
        return out;
    }
    for (i, m) in dataset.matrices().iter().enumerate() {
        if m.len() >= min_length {
            out.extend((0..=m.len() - min_length).map(|s| SubMatrixRef::new(i, s, s + min_length - 1)));
        }
    }
    out
}

fn ref_distance(dataset: &Dataset, a: SubMatrixRef, b: SubMatrixRef, mode: DistanceMode, base: BaseDistance) -> f64 {
    let va = dataset.submatrix(a).expect("valid anchor window");
    let vb = dataset.submatrix(b).expect("valid neighbour window");
    window_distance(&va, &vb, mode, base)
}

/// Every same-length window of the dataset within `epsilon` of `anchor`,
/// including the anchor itself.
pub fn seed_neighborhood(
    anchor: SubMatrixRef,
    dataset: &Dataset,
    epsilon: f64,
    mode: DistanceMode,
    base: BaseDistance,
) -> Vec<SubMatrixRef> {
    enumerate_seeds(dataset, anchor.len())
        .into_iter()
        .filter(|&r| ref_distance(dataset, anchor, r, mode, base) <= epsilon)
        .collect()
}

/// Root node of the chain starting at `anchor`.
pub fn seed_node(
    anchor: SubMatrixRef,
    dataset: &Dataset,
    epsilon: f64,
    mode: DistanceMode,
    base: BaseDistance,
) -> Node {
    Node::from_neighbors(anchor, seed_neighborhood(anchor, dataset, epsilon, mode, base))
}

/// Node for `(s, e + 1)` obtained by extending every neighbour by one column
/// and keeping those still within `epsilon`. `None` when the anchor's matrix
/// has no further column.
pub fn extend_node(
    node: &Node,
    dataset: &Dataset,
    epsilon: f64,
    mode: DistanceMode,
    base: BaseDistance,
) -> Option<Node> {
    let anchor = node.anchor;
    if anchor.end + 1 >= dataset.matrix(anchor.matrix).len() {
        return None;
    }
    let next = anchor.extended();
    let neighborhood = node
        .neighborhood
        .iter()
        .filter(|r| r.end + 1 < dataset.matrix(r.matrix).len())
        .map(SubMatrixRef::extended)
        .filter(|&r| ref_distance(dataset, next, r, mode, base) <= epsilon)
        .collect();
    Some(Node::from_neighbors(next, neighborhood))
}

/// Rebuilds the node for `anchor` by replaying its chain from the seed.
pub fn rebuild_node(dataset: &Dataset, config: &MinerConfig, anchor: SubMatrixRef) -> Option<Node> {
    let l = config.min_length;
    if anchor.len() < l || anchor.end >= dataset.matrix(anchor.matrix).len() {
        return None;
    }
    let seed = SubMatrixRef::new(anchor.matrix, anchor.start, anchor.start + l - 1);
    let mut node = seed_node(
        seed,
        dataset,
        config.epsilon,
        config.distance_mode,
        config.base_distance,
    );
    while node.anchor.end < anchor.end {
        node = extend_node(
            &node,
            dataset,
            config.epsilon,
            config.distance_mode,
            config.base_distance,
        )?;
    }
    Some(node)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discovery {
    pub attack_id: String,
    pub matrix: usize,
    pub start: usize,
    pub end: usize,
    pub p_value: f64,
    /// Supporting matrices labelled positive (`a`).
    pub positives_supporting: usize,
    /// Supporting matrices (`x`).
    pub support: usize,
    pub neighborhood_size: usize,
}

impl Discovery {
    pub fn window(&self) -> SubMatrixRef {
        SubMatrixRef::new(self.matrix, self.start, self.end)
    }
}

/// Union of the discovery windows of one matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedWindows {
    pub attack_id: String,
    pub matrix: usize,
    pub windows: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub seeds: u64,
    pub nodes_visited: u64,
    pub nodes_pruned: u64,
    pub distance_evaluations: u64,
}

impl Counters {
    fn add(&mut self, o: &Counters) {
        self.seeds += o.seeds;
        self.nodes_visited += o.nodes_visited;
        self.nodes_pruned += o.nodes_pruned;
        self.distance_evaluations += o.distance_evaluations;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningResult {
    pub config: MinerConfig,
    pub margins: ContingencyMargins,
    /// Final `P_sort^(floor(alpha B) + 1)`.
    pub threshold: f64,
    pub delta_star: f64,
    pub discoveries: Vec<Discovery>,
    pub merged_windows: Vec<MergedWindows>,
    pub counters: Counters,
}

#[derive(Debug, Clone)]
struct Candidate {
    anchor: SubMatrixRef,
    p: f64,
    a: usize,
    x: usize,
    neighborhood: usize,
}

struct SeedOutcome {
    pmin: PMinVector,
    candidates: Vec<Candidate>,
    counters: Counters,
}

struct Neighbor {
    window: SubMatrixRef,
    state: Option<PairState>,
}

/// Fixed-width bitsets over matrix indices.
struct Bits {
    words: usize,
}

impl Bits {
    fn build(&self, members: impl Iterator<Item = usize>) -> Vec<u64> {
        let mut v = vec![0u64; self.words];
        for i in members {
            v[i / 64] |= 1 << (i % 64);
        }
        v
    }

    #[inline]
    fn intersect_count(a: &[u64], b: &[u64]) -> usize {
        a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
    }
}

struct Engine<'a> {
    dataset: &'a Dataset,
    config: MinerConfig,
    table: PValueTable,
    bits: Bits,
    true_pos: Vec<u64>,
    /// `permutations * words` bitsets of permuted positives.
    perm_pos: Vec<u64>,
}

impl<'a> Engine<'a> {
    fn new(dataset: &'a Dataset, config: MinerConfig) -> Self {
        let n = dataset.len();
        let bits = Bits {
            words: n.div_ceil(64).max(1),
        };
        let labels = dataset.labels();
        let true_pos = bits.build(
            labels
                .iter()
                .enumerate()
                .filter(|(_, l)| l.is_positive())
                .map(|(i, _)| i),
        );
        let perms = PermutationSet::generate(&labels, config.permutations, config.seed);
        let mut perm_pos = Vec::with_capacity(perms.len() * bits.words);
        for p in perms.iter() {
            perm_pos.extend(bits.build(p.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)));
        }
        let margins = ContingencyMargins::new(dataset.n_pos(), dataset.n_neg());
        Self {
            dataset,
            config,
            table: PValueTable::new(margins),
            bits,
            true_pos,
            perm_pos,
        }
    }

    fn pair_distance(&self, anchor: SubMatrixRef, other: &mut Neighbor, counters: &mut Counters) -> f64 {
        let a = self.dataset.submatrix(anchor).expect("valid anchor");
        let b = self.dataset.submatrix(other.window).expect("valid neighbour");
        match self.config.distance_mode {
            DistanceMode::TimestepPointSet => {
                let base = self.config.base_distance;
                let state = match other.state.as_mut() {
                    Some(s) => {
                        s.extend(&a, &b, base);
                        s
                    }
                    None => other.state.insert(PairState::new(&a, &b, base)),
                };
                counters.distance_evaluations += 1;
                state.distance()
            }
            DistanceMode::NestedAgent => {
                counters.distance_evaluations += 1;
                window_distance(&a, &b, DistanceMode::NestedAgent, self.config.base_distance)
            }
        }
    }

    fn seed_neighbors(&self, seed: SubMatrixRef, all_seeds: &[SubMatrixRef], counters: &mut Counters) -> Vec<Neighbor> {
        let eps = self.config.epsilon;
        all_seeds
            .iter()
            .filter_map(|&r| {
                let mut n = Neighbor { window: r, state: None };
                (self.pair_distance(seed, &mut n, counters) <= eps).then_some(n)
            })
            .collect()
    }

    fn process_seed(&self, seed: SubMatrixRef, all_seeds: &[SubMatrixRef], snapshot: &PMinVector) -> SeedOutcome {
        let alpha = self.config.alpha;
        let eps = self.config.epsilon;
        let words = self.bits.words;
        let mut pmin = snapshot.clone();
        let mut scratch = Vec::with_capacity(pmin.len());
        let mut threshold = pmin.threshold_with(alpha, &mut scratch);
        let mut counters = Counters {
            seeds: 1,
            ..Counters::default()
        };
        let mut candidates = Vec::new();

        let mut anchor = seed;
        let mut neighbors = self.seed_neighbors(seed, all_seeds, &mut counters);
        loop {
            counters.nodes_visited += 1;
            let support = self.bits.build(
                neighbors
                    .iter()
                    .map(|n| n.window.matrix)
                    .chain(std::iter::once(anchor.matrix)),
            );
            let x: usize = support.iter().map(|w| w.count_ones() as usize).sum();
            let bound = self.table.envelope(x);
            if self.config.prune && bound >= threshold {
                counters.nodes_pruned += 1;
                break;
            }

            let mut changed = false;
            for b in 0..pmin.len() {
                if bound < pmin.get(b) {
                    let perm = &self.perm_pos[b * words..(b + 1) * words];
                    let a = Bits::intersect_count(&support, perm);
                    changed |= pmin.update(b, self.table.pvalue(a, x));
                }
            }
            if changed {
                threshold = pmin.threshold_with(alpha, &mut scratch);
            }

            let a = Bits::intersect_count(&support, &self.true_pos);
            let p = self.table.pvalue(a, x);
            if p < threshold {
                candidates.push(Candidate {
                    anchor,
                    p,
                    a,
                    x,
                    neighborhood: neighbors.len(),
                });
            }

            if anchor.end + 1 >= self.dataset.matrix(anchor.matrix).len() {
                break;
            }
            anchor = anchor.extended();
            neighbors.retain_mut(|n| {
                if n.window.end + 1 >= self.dataset.matrix(n.window.matrix).len() {
                    return false;
                }
                n.window = n.window.extended();
                self.pair_distance(anchor, n, &mut counters) <= eps
            });
        }
        SeedOutcome {
            pmin,
            candidates,
            counters,
        }
    }

    fn run(&self) -> MiningResult {
        let cfg = self.config;
        let seeds = enumerate_seeds(self.dataset, cfg.min_length);
        let mut global = PMinVector::new(cfg.permutations, cfg.alpha);
        let mut candidates = Vec::new();
        let mut counters = Counters::default();
        for batch in seeds.chunks(SEED_BATCH) {
            let outcomes: Vec<SeedOutcome> = batch
                .par_iter()
                .map(|&s| self.process_seed(s, &seeds, &global))
                .collect();
            for o in outcomes {
                global.merge(&o.pmin);
                candidates.extend(o.candidates);
                counters.add(&o.counters);
            }
        }
        let threshold = global.threshold(cfg.alpha);
        let delta_star = calibrate_delta(global.values(), cfg.alpha);

        let mut discoveries: Vec<Discovery> = candidates
            .into_iter()
            .filter(|c| c.p < delta_star)
            .map(|c| Discovery {
                attack_id: self.dataset.matrix(c.anchor.matrix).attack_id().to_string(),
                matrix: c.anchor.matrix,
                start: c.anchor.start,
                end: c.anchor.end,
                p_value: c.p,
                positives_supporting: c.a,
                support: c.x,
                neighborhood_size: c.neighborhood,
            })
            .collect();
        sort_discoveries(&mut discoveries);
        let merged_windows = merge_windows(&discoveries);
        MiningResult {
            config: cfg,
            margins: *self.table.margins(),
            threshold,
            delta_star,
            discoveries,
            merged_windows,
            counters,
        }
    }
}

/// p-value ascending, then attack id, start, end.
pub fn sort_discoveries(d: &mut [Discovery]) {
    d.sort_by(|a, b| {
        a.p_value
            .total_cmp(&b.p_value)
            .then_with(|| a.attack_id.cmp(&b.attack_id))
            .then(a.start.cmp(&b.start))
            .then(a.end.cmp(&b.end))
    });
}

/// Per-matrix union of discovery windows (adjacent windows are joined),
/// ordered by attack id.
pub fn merge_windows(discoveries: &[Discovery]) -> Vec<MergedWindows> {
    let mut by_matrix: BTreeMap<(&str, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for d in discoveries {
        by_matrix
            .entry((d.attack_id.as_str(), d.matrix))
            .or_default()
            .push((d.start, d.end));
    }
    by_matrix
        .into_iter()
        .map(|((id, matrix), mut w)| {
            w.sort_unstable();
            let mut merged: Vec<(usize, usize)> = Vec::with_capacity(w.len());
            for (s, e) in w {
                match merged.last_mut() {
                    Some(last) if s <= last.1 + 1 => last.1 = last.1.max(e),
                    _ => merged.push((s, e)),
                }
            }
            MergedWindows {
                attack_id: id.to_string(),
                matrix,
                windows: merged,
            }
        })
        .collect()
}

fn check_inputs(dataset: &Dataset, config: &MinerConfig) -> Result<(), MiningError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(MiningError::EmptyDataset);
    }
    let fatal: Vec<Violation> = validate_dataset(dataset, None)
        .into_iter()
        .filter(|v| v.kind.is_fatal())
        .collect();
    if !fatal.is_empty() {
        return Err(MiningError::InvalidDataset(fatal));
    }
    let (positives, negatives) = (dataset.n_pos(), dataset.n_neg());
    if positives == 0 || negatives == 0 {
        return Err(MiningError::SingleClass { positives, negatives });
    }
    Ok(())
}

/// Mines the dataset on the current rayon thread pool.
pub fn mine(dataset: &Dataset, config: &MinerConfig) -> Result<MiningResult, MiningError> {
    check_inputs(dataset, config)?;
    Ok(Engine::new(dataset, *config).run())
}

/// Mines the dataset on a dedicated pool of `threads` workers.
pub fn mine_with_threads(dataset: &Dataset, config: &MinerConfig, threads: usize) -> Result<MiningResult, MiningError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| MiningError::ThreadPool(e.to_string()))?;
    pool.install(|| mine(dataset, config))
}

/// Smallest ε at which the mean seed support (distinct matrices within ε of
/// a seed, counting its own) reaches `target_mean_support`. Depends only on
/// trajectories, never on labels.
pub fn epsilon_for_mean_support(
    dataset: &Dataset,
    min_length: usize,
    mode: DistanceMode,
    base: BaseDistance,
    target_mean_support: f64,
) -> f64 {
    let seeds = enumerate_seeds(dataset, min_length);
    if seeds.is_empty() {
        return 0.0;
    }
    let n = dataset.len();
    let mut nearest: Vec<f64> = seeds
        .par_iter()
        .flat_map_iter(|&s| {
            let mut best = vec![f64::INFINITY; n];
            for &r in &seeds {
                if r.matrix != s.matrix {
                    let d = ref_distance(dataset, s, r, mode, base);
                    if d < best[r.matrix] {
                        best[r.matrix] = d;
                    }
                }
            }
            best.into_iter().filter(|d| d.is_finite())
        })
        .collect();
    nearest.sort_by(f64::total_cmp);
    let needed = ((target_mean_support - 1.0) * seeds.len() as f64).ceil();
    if needed <= 0.0 || nearest.is_empty() {
        return 0.0;
    }
    let idx = (needed as usize).min(nearest.len()) - 1;
    nearest[idx]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Label, Point2D, TrajectoryMatrix};
    use crate::stats::fet_pvalue;

    /// K = 1 matrix whose single agent sits at the given x positions.
    fn line(id: &str, label: Label, xs: &[f64]) -> TrajectoryMatrix {
        let frames: Vec<Vec<Point2D>> = xs.iter().map(|&x| vec![Point2D::new(x, 0.0)]).collect();
        TrajectoryMatrix::from_frames(id, label, &frames).unwrap()
    }

    #[test]
    fn seed_counts() {
        let d = Dataset::new(vec![
            line("a", Label::Positive, &[0.0; 10]),
            line("b", Label::Negative, &[0.0; 5]),
            line("c", Label::Negative, &[0.0; 4]),
        ]);
        let seeds = enumerate_seeds(&d, 5);
        assert_eq!(seeds.iter().filter(|s| s.matrix == 0).count(), 6);
        assert_eq!(seeds.iter().filter(|s| s.matrix == 1).count(), 1);
        assert_eq!(seeds.iter().filter(|s| s.matrix == 2).count(), 0);
    }

    #[test]
    fn zero_epsilon_neighbourhood_is_self() {
        let xs: Vec<f64> = (0..8).map(|t| t as f64).collect();
        let d = Dataset::new(vec![
            line("a", Label::Positive, &xs),
            line("b", Label::Negative, &[50.0; 8]),
        ]);
        let anchor = SubMatrixRef::new(0, 2, 4);
        let n = seed_neighborhood(anchor, &d, 0.0, DistanceMode::TimestepPointSet, BaseDistance::Euclidean);
        assert_eq!(n, vec![anchor]);
    }

    #[test]
    fn huge_epsilon_saturates() {
        let xs: Vec<f64> = (0..8).map(|t| t as f64).collect();
        let d = Dataset::new(vec![
            line("a", Label::Positive, &xs),
            line("b", Label::Negative, &[50.0; 6]),
        ]);
        let anchor = SubMatrixRef::new(0, 0, 2);
        let n = seed_neighborhood(anchor, &d, 1e6, DistanceMode::TimestepPointSet, BaseDistance::Euclidean);
        assert_eq!(n, enumerate_seeds(&d, 3));
    }

    #[test]
    fn far_translated_matrix_excluded() {
        let xs: Vec<f64> = (0..6).map(|t| t as f64 * 0.5).collect();
        let shifted: Vec<f64> = xs.iter().map(|x| x + 10.0).collect();
        let d = Dataset::new(vec![
            line("a", Label::Positive, &xs),
            line("b", Label::Negative, &shifted),
        ]);
        let eps = 1.2;
        let anchor = SubMatrixRef::new(0, 1, 3);
        let got = seed_neighborhood(anchor, &d, eps, DistanceMode::TimestepPointSet, BaseDistance::Euclidean);
        // brute force: window (s..s+2) of `a` vs anchor {0.5,1,1.5}
        let expected: Vec<SubMatrixRef> = (0..4)
            .filter(|&s| {
                let w: Vec<f64> = (s..s + 3).map(|t| xs[t]).collect();
                let anc = [0.5, 1.0, 1.5];
                let dir = |p: &[f64], q: &[f64]| {
                    p.iter()
                        .map(|u| q.iter().map(|v| (u - v).abs()).fold(f64::INFINITY, f64::min))
                        .fold(0.0, f64::max)
                };
                dir(&w, &anc).max(dir(&anc, &w)) <= eps
            })
            .map(|s| SubMatrixRef::new(0, s, s + 2))
            .collect();
        assert_eq!(got, expected);
        assert!(got.iter().all(|r| r.matrix == 0));
    }

    #[test]
    fn duplicated_matrices_keep_full_neighbourhood() {
        let xs: Vec<f64> = (0..7).map(|t| (t * t) as f64).collect();
        let d = Dataset::new(vec![
            line("a", Label::Positive, &xs),
            line("b", Label::Negative, &xs),
            line("c", Label::Negative, &xs),
        ]);
        let mode = DistanceMode::TimestepPointSet;
        let base = BaseDistance::Euclidean;
        let node = seed_node(SubMatrixRef::new(0, 0, 2), &d, 0.0, mode, base);
        assert_eq!(node.neighborhood.len(), 3);
        let next = extend_node(&node, &d, 0.0, mode, base).unwrap();
        assert_eq!(next.neighborhood.len(), 3);
        assert_eq!(next.support, vec![0, 1, 2]);
    }

    #[test]
    fn extension_drops_finished_and_diverging_neighbours() {
        let mode = DistanceMode::TimestepPointSet;
        let base = BaseDistance::Euclidean;
        let d = Dataset::new(vec![
            line("anchor", Label::Positive, &[0.0, 1.0, 2.0, 3.0, 4.0]),
            // tracks the anchor
            line("close", Label::Negative, &[0.1, 1.1, 2.1, 3.1, 4.1]),
            // same first three columns, then jumps away
            line("diverge", Label::Negative, &[0.0, 1.0, 2.0, 9.0, 9.0]),
            // ends right after the seed window
            line("short", Label::Negative, &[0.0, 1.0, 2.0]),
        ]);
        let node = seed_node(SubMatrixRef::new(0, 0, 2), &d, 0.5, mode, base);
        assert_eq!(node.support, vec![0, 1, 2, 3]);
        let next = extend_node(&node, &d, 0.5, mode, base).unwrap();
        // recompute by brute force: windows [0,3] of each matrix vs anchor
        let survivors: Vec<usize> = (0..3)
            .filter(|&i| {
                crate::distance::submatrix_distance(
                    d.matrix(0),
                    SubMatrixRef::new(0, 0, 3),
                    d.matrix(i),
                    SubMatrixRef::new(i, 0, 3),
                    mode,
                    base,
                )
                .unwrap()
                    <= 0.5
            })
            .collect();
        assert_eq!(survivors, vec![0, 1]);
        assert_eq!(next.support, survivors);
        assert!(next.support.iter().all(|m| node.support.contains(m)));
    }

    fn planted_twelve() -> Dataset {
        // five positives share a motif at x ~ 0; the others wander far apart.
        let mut ms = Vec::new();
        for i in 0..12 {
            let label = if i < 5 { Label::Positive } else { Label::Negative };
            let xs: Vec<f64> = if i < 5 {
                (0..6).map(|t| t as f64 + 0.01 * i as f64).collect()
            } else {
                (0..6).map(|t| 100.0 * i as f64 + 3.0 * t as f64).collect()
            };
            ms.push(line(&format!("m{i:02}"), label, &xs));
        }
        Dataset::new(ms)
    }

    #[test]
    fn planted_support_reaches_minimum_p() {
        let d = planted_twelve();
        let cfg = MinerConfig {
            min_length: 3,
            epsilon: 0.5,
            permutations: 200,
            alpha: 0.05,
            seed: 3,
            ..MinerConfig::default()
        };
        let r = mine(&d, &cfg).unwrap();
        let target = fet_pvalue(5, 5, &ContingencyMargins::new(5, 7)).unwrap();
        assert!((target - 1.0 / 792.0).abs() < 1e-15);
        if r.delta_star > target {
            assert!(!r.discoveries.is_empty());
            assert!(r.discoveries.iter().all(|x| x.p_value == target && x.matrix < 5));
        }
        assert!(r.discoveries.iter().all(|x| x.p_value < r.delta_star));
    }

    #[test]
    fn zero_epsilon_distinct_data_has_no_discoveries() {
        let mut ms = Vec::new();
        for i in 0..10 {
            let label = if i % 2 == 0 { Label::Positive } else { Label::Negative };
            let xs: Vec<f64> = (0..7).map(|t| (i * 10 + t) as f64).collect();
            ms.push(line(&format!("m{i}"), label, &xs));
        }
        let cfg = MinerConfig {
            min_length: 3,
            epsilon: 0.0,
            permutations: 100,
            ..MinerConfig::default()
        };
        let r = mine(&Dataset::new(ms), &cfg).unwrap();
        assert!(r.discoveries.is_empty());
        assert_eq!(r.delta_star, 0.0);
        // every seed has support 1 and psi_hat(1) = 0.5 >= alpha: pruned at once
        assert_eq!(r.counters.nodes_pruned, r.counters.seeds);
    }

    #[test]
    fn input_errors() {
        let cfg = MinerConfig::default();
        assert_eq!(mine(&Dataset::new(vec![]), &cfg), Err(MiningError::EmptyDataset));
        let one_class = Dataset::new(vec![
            line("a", Label::Positive, &[0.0; 6]),
            line("b", Label::Positive, &[1.0; 6]),
        ]);
        assert!(matches!(mine(&one_class, &cfg), Err(MiningError::SingleClass { .. })));
        let bad = MinerConfig { alpha: 1.5, ..cfg };
        let ok = Dataset::new(vec![
            line("a", Label::Positive, &[0.0; 6]),
            line("b", Label::Negative, &[1.0; 6]),
        ]);
        assert!(matches!(mine(&ok, &bad), Err(MiningError::InvalidConfig(_))));
        let dup = Dataset::new(vec![
            line("a", Label::Positive, &[0.0; 6]),
            line("a", Label::Negative, &[1.0; 6]),
        ]);
        assert!(matches!(mine(&dup, &cfg), Err(MiningError::InvalidDataset(_))));
    }

    #[test]
    fn merged_windows_join_overlaps() {
        let mk = |s, e| Discovery {
            attack_id: "x".into(),
            matrix: 0,
            start: s,
            end: e,
            p_value: 0.001,
            positives_supporting: 1,
            support: 1,
            neighborhood_size: 1,
        };
        let m = merge_windows(&[mk(5, 8), mk(0, 3), mk(2, 4), mk(10, 12)]);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].windows, vec![(0, 8), (10, 12)]);
    }

    #[test]
    fn epsilon_calibration_hits_target() {
        let d = planted_twelve();
        let eps = epsilon_for_mean_support(&d, 3, DistanceMode::TimestepPointSet, BaseDistance::Euclidean, 3.0);
        let seeds = enumerate_seeds(&d, 3);
        let mean = seeds
            .iter()
            .map(|&s| {
                seed_node(s, &d, eps, DistanceMode::TimestepPointSet, BaseDistance::Euclidean)
                    .support
                    .len()
            })
            .sum::<usize>() as f64
            / seeds.len() as f64;
        assert!(mean >= 3.0, "mean support {mean}");
    }
}
