//! Synthetic labelled datasets: null data with labels independent of the
//! trajectories, and planted-motif data where positives carry a shared
//! multi-agent window.
//!
//! Trajectories are Gaussian random walks reflected at the edges of a
//! rectangle. Every matrix draws from its own ChaCha stream (stream id = matrix
//! index) of the master seed, and labels, the motif template and the choice of
//! planted matrices use three further reserved streams, so a matrix never
//! depends on how any other matrix was generated.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{default_agent_names, Dataset, Label, TrajectoryMatrix, DEFAULT_SAMPLE_RATE_HZ};

const LABEL_STREAM: u64 = u64::MAX;
const TEMPLATE_STREAM: u64 = u64::MAX - 1;
const PLANT_STREAM: u64 = u64::MAX - 2;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid synthetic configuration: {0}")]
pub struct SynthError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_matrices: usize,
    pub n_pos: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub agents: usize,
    /// Standard deviation of each per-frame coordinate step.
    pub step_scale: f64,
    /// Reflecting rectangle `[0, width] x [0, height]`.
    pub width: f64,
    pub height: f64,
    pub motif_length: usize,
    /// Standard deviation of the noise added to each planted copy.
    pub motif_jitter: f64,
    /// Fraction of positives that receive the motif.
    pub plant_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_matrices: 12,
            n_pos: 5,
            min_len: 10,
            max_len: 20,
            agents: 5,
            step_scale: 1.0,
            width: 94.0,
            height: 50.0,
            motif_length: 6,
            motif_jitter: 0.1,
            plant_rate: 1.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |m: &str| Err(SynthError(m.into()));
        if self.n_pos > self.n_matrices {
            return fail("n_pos exceeds n_matrices");
        }
        if self.min_len < 1 || self.min_len > self.max_len {
            return fail("need 1 <= min_len <= max_len");
        }
        if self.agents < 1 {
            return fail("need at least one agent");
        }
        if self.motif_length < 1 || self.motif_length > self.min_len {
            return fail("need 1 <= motif_length <= min_len");
        }
        if !(0.0..=1.0).contains(&self.plant_rate) {
            return fail("plant_rate must lie in [0, 1]");
        }
        if !(self.step_scale >= 0.0 && self.step_scale.is_finite())
            || !(self.motif_jitter >= 0.0 && self.motif_jitter.is_finite())
        {
            return fail("step_scale and motif_jitter must be finite and non-negative");
        }
        if !(self.width > 0.0 && self.height > 0.0) {
            return fail("bounds must be positive");
        }
        Ok(())
    }
}

/// A planted motif occurrence, `0`-based inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedWindow {
    pub attack_id: String,
    pub matrix: usize,
    pub start: usize,
    pub end: usize,
}

pub fn attack_id(i: usize) -> String {
    format!("syn{i:04}")
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn reflect(v: f64, hi: f64) -> f64 {
    let period = 2.0 * hi;
    let r = v.rem_euclid(period);
    if r > hi {
        period - r
    } else {
        r
    }
}

struct Walker<'a> {
    cfg: &'a SynthConfig,
    step: Normal<f64>,
}

impl<'a> Walker<'a> {
    fn new(cfg: &'a SynthConfig) -> Self {
        Self {
            cfg,
            step: Normal::new(0.0, cfg.step_scale).expect("validated step scale"),
        }
    }

    fn start(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.cfg.agents)
            .flat_map(|_| {
                [
                    rng.gen_range(0.0..=self.cfg.width),
                    rng.gen_range(0.0..=self.cfg.height),
                ]
            })
            .collect()
    }

    fn step_from(&self, col: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        col.chunks(2)
            .flat_map(|p| {
                [
                    reflect(p[0] + self.step.sample(rng), self.cfg.width),
                    reflect(p[1] + self.step.sample(rng), self.cfg.height),
                ]
            })
            .collect()
    }

    /// `n` columns continuing from `from` (exclusive).
    fn walk(&self, from: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
        for _ in 0..n {
            let next = self.step_from(out.last().map(Vec::as_slice).unwrap_or(from), rng);
            out.push(next);
        }
        out
    }
}

fn labels_for(cfg: &SynthConfig) -> Vec<Label> {
    let mut order: Vec<usize> = (0..cfg.n_matrices).collect();
    order.shuffle(&mut stream(cfg.seed, LABEL_STREAM));
    let mut labels = vec![Label::Negative; cfg.n_matrices];
    for &i in &order[..cfg.n_pos] {
        labels[i] = Label::Positive;
    }
    labels
}

fn null_matrix(cfg: &SynthConfig, walker: &Walker<'_>, i: usize, label: Label) -> TrajectoryMatrix {
    let mut rng = stream(cfg.seed, i as u64);
    let len = rng.gen_range(cfg.min_len..=cfg.max_len);
    let first = walker.start(&mut rng);
    let rest = walker.walk(&first, len - 1, &mut rng);
    let coords: Vec<f64> = std::iter::once(first).chain(rest).flatten().collect();
    TrajectoryMatrix::from_columns(attack_id(i), label, cfg.agents, coords)
        .expect("column layout")
        .with_sample_rate(DEFAULT_SAMPLE_RATE_HZ)
}

/// Random walks with `n_pos` positive labels assigned independently of them.
pub fn gen_null(cfg: &SynthConfig) -> Result<Dataset, SynthError> {
    cfg.validate()?;
    let walker = Walker::new(cfg);
    let labels = labels_for(cfg);
    let matrices = (0..cfg.n_matrices)
        .map(|i| null_matrix(cfg, &walker, i, labels[i]))
        .collect();
    Ok(Dataset::with_agent_names(matrices, default_agent_names(cfg.agents)))
}

/// Null data in which `round(plant_rate * n_pos)` positives contain a jittered
/// copy of one shared motif. Returns the dataset and every planted window.
pub fn gen_planted(cfg: &SynthConfig) -> Result<(Dataset, Vec<PlantedWindow>), SynthError> {
    cfg.validate()?;
    let walker = Walker::new(cfg);
    let labels = labels_for(cfg);

    let mut trng = stream(cfg.seed, TEMPLATE_STREAM);
    let t0 = walker.start(&mut trng);
    let template: Vec<Vec<f64>> = std::iter::once(t0.clone())
        .chain(walker.walk(&t0, cfg.motif_length - 1, &mut trng))
        .collect();

    let mut positives: Vec<usize> = (0..cfg.n_matrices).filter(|&i| labels[i].is_positive()).collect();
    positives.shuffle(&mut stream(cfg.seed, PLANT_STREAM));
    let count = (cfg.plant_rate * cfg.n_pos as f64).round() as usize;
    let mut planted: Vec<usize> = positives.into_iter().take(count).collect();
    planted.sort_unstable();

    let jitter = Normal::new(0.0, cfg.motif_jitter).expect("validated jitter");
    let mut truth = Vec::new();
    let matrices = (0..cfg.n_matrices)
        .map(|i| {
            if planted.binary_search(&i).is_err() {
                return null_matrix(cfg, &walker, i, labels[i]);
            }
            let mut rng = stream(cfg.seed, i as u64);
            let len = rng.gen_range(cfg.min_len..=cfg.max_len);
            let start = rng.gen_range(0..=len - cfg.motif_length);
            let motif: Vec<Vec<f64>> = template
                .iter()
                .map(|col| {
                    col.chunks(2)
                        .flat_map(|p| {
                            [
                                reflect(p[0] + jitter.sample(&mut rng), cfg.width),
                                reflect(p[1] + jitter.sample(&mut rng), cfg.height),
                            ]
                        })
                        .collect()
                })
                .collect();
            let mut before = walker.walk(&motif[0], start, &mut rng);
            before.reverse();
            let after = walker.walk(
                motif.last().expect("non-empty motif"),
                len - start - cfg.motif_length,
                &mut rng,
            );
            let coords: Vec<f64> = before.into_iter().chain(motif).chain(after).flatten().collect();
            truth.push(PlantedWindow {
                attack_id: attack_id(i),
                matrix: i,
                start,
                end: start + cfg.motif_length - 1,
            });
            TrajectoryMatrix::from_columns(attack_id(i), labels[i], cfg.agents, coords)
                .expect("column layout")
                .with_sample_rate(DEFAULT_SAMPLE_RATE_HZ)
        })
        .collect();
    Ok((
        Dataset::with_agent_names(matrices, default_agent_names(cfg.agents)),
        truth,
    ))
}
