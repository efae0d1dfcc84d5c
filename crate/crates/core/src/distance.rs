//! Point, point-set and sub-matrix distances.
//!
//! Point sets are slices of coordinate vectors (`AsRef<[f64]>`), so the same
//! kernels serve 2-D agent points and the `2K`-dimensional column vectors of a
//! trajectory window.
//!
//! The directed Hausdorff kernel uses the early-break scan: while looking for
//! the nearest neighbour of `a`, the scan stops as soon as some `b` is closer
//! than the running maximum, since `a` can no longer raise it. The result is
//! identical to the exhaustive max-min.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{SubMatrix, SubMatrixRef, TrajectoryMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistanceError {
    #[error("dimension mismatch: {left} vs {right}")]
    Shape { left: usize, right: usize },
    #[error("point set is empty")]
    EmptySet,
    #[error("agent count mismatch: {left} vs {right}")]
    AgentMismatch { left: usize, right: usize },
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// Base distance between two coordinate vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseDistance {
    #[default]
    Euclidean,
    Manhattan,
    Chebyshev,
}

impl BaseDistance {
    pub fn name(self) -> &'static str {
        match self {
            BaseDistance::Euclidean => "euclidean",
            BaseDistance::Manhattan => "manhattan",
            BaseDistance::Chebyshev => "chebyshev",
        }
    }

    /// Distance between equal-length vectors. Lengths are not checked.
    #[inline]
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        self.accumulate(a.iter().copied().zip(b.iter().copied()))
    }

    /// Distance over a stream of coordinate pairs.
    #[inline]
    pub fn accumulate(self, pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
        match self {
            BaseDistance::Euclidean => pairs
                .map(|(x, y)| {
                    let d = x - y;
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
            BaseDistance::Manhattan => pairs.map(|(x, y)| (x - y).abs()).sum(),
            BaseDistance::Chebyshev => pairs.map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
        }
    }

    pub fn checked(self, a: &[f64], b: &[f64]) -> Result<f64, DistanceError> {
        if a.len() != b.len() {
            return Err(DistanceError::Shape {
                left: a.len(),
                right: b.len(),
            });
        }
        Ok(self.eval(a, b))
    }
}

impl std::str::FromStr for BaseDistance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euclidean" => Ok(Self::Euclidean),
            "manhattan" => Ok(Self::Manhattan),
            "chebyshev" => Ok(Self::Chebyshev),
            other => Err(format!("unknown base distance `{other}`")),
        }
    }
}

/// How two sub-matrices are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    /// Each time step is one point in `2K`-space; Hausdorff over the columns.
    #[default]
    TimestepPointSet,
    /// Hausdorff over the `K` agent sub-trajectories, each compared as a whole.
    NestedAgent,
}

impl DistanceMode {
    pub fn name(self) -> &'static str {
        match self {
            DistanceMode::TimestepPointSet => "timestep",
            DistanceMode::NestedAgent => "nested",
        }
    }
}

impl std::str::FromStr for DistanceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "timestep" => Ok(Self::TimestepPointSet),
            "nested" => Ok(Self::NestedAgent),
            other => Err(format!("unknown distance mode `{other}`")),
        }
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64, DistanceError> {
    BaseDistance::Euclidean.checked(a, b)
}

fn check_sets<A: AsRef<[f64]>, B: AsRef<[f64]>>(a: &[A], b: &[B]) -> Result<(), DistanceError> {
    if a.is_empty() || b.is_empty() {
        return Err(DistanceError::EmptySet);
    }
    let dim = a[0].as_ref().len();
    for p in a.iter().map(AsRef::as_ref).chain(b.iter().map(AsRef::as_ref)) {
        if p.len() != dim {
            return Err(DistanceError::Shape {
                left: dim,
                right: p.len(),
            });
        }
    }
    Ok(())
}

/// `max_{a in A} min_{b in B} base(a, b)`
pub fn directed_hausdorff<A: AsRef<[f64]>, B: AsRef<[f64]>>(
    a: &[A],
    b: &[B],
    base: BaseDistance,
) -> Result<f64, DistanceError> {
    check_sets(a, b)?;
    Ok(directed_early_break(
        a.iter().map(AsRef::as_ref),
        || b.iter().map(AsRef::as_ref),
        base,
    ))
}

/// Symmetric Hausdorff distance, the larger of the two directed distances.
pub fn hausdorff<A: AsRef<[f64]>, B: AsRef<[f64]>>(a: &[A], b: &[B], base: BaseDistance) -> Result<f64, DistanceError> {
    let ab = directed_hausdorff(a, b, base)?;
    let ba = directed_hausdorff(b, a, base)?;
    Ok(ab.max(ba))
}

#[inline]
fn directed_early_break<'a, IA, IB, FB>(a: IA, b: FB, base: BaseDistance) -> f64
where
    IA: Iterator<Item = &'a [f64]>,
    IB: Iterator<Item = &'a [f64]>,
    FB: Fn() -> IB,
{
    let mut cmax = 0.0_f64;
    for pa in a {
        let mut cmin = f64::INFINITY;
        let mut dominated = false;
        for pb in b() {
            let d = base.eval(pa, pb);
            if d < cmax {
                dominated = true;
                break;
            }
            if d < cmin {
                cmin = d;
            }
        }
        if !dominated && cmin > cmax {
            cmax = cmin;
        }
    }
    cmax
}

/// Distance between two windows that are already known to be valid.
pub fn window_distance(a: &SubMatrix<'_>, b: &SubMatrix<'_>, mode: DistanceMode, base: BaseDistance) -> f64 {
    match mode {
        DistanceMode::TimestepPointSet => {
            let ab = directed_early_break(a.columns(), || b.columns(), base);
            let ba = directed_early_break(b.columns(), || a.columns(), base);
            ab.max(ba)
        }
        DistanceMode::NestedAgent => nested_agent_distance(a, b, base),
    }
}

fn agent_trajectory_distance(a: &SubMatrix<'_>, ka: usize, b: &SubMatrix<'_>, kb: usize, base: BaseDistance) -> f64 {
    if a.len() == b.len() {
        // flattened (x_0, y_0, x_1, y_1, ...) sequences
        base.accumulate((0..a.len()).flat_map(|t| {
            let p = a.point(t, ka);
            let q = b.point(t, kb);
            [(p.x, q.x), (p.y, q.y)]
        }))
    } else {
        let pa = a.agent_points(ka);
        let pb = b.agent_points(kb);
        let ab = directed_early_break(pa.iter().map(|p| &p[..]), || pb.iter().map(|p| &p[..]), base);
        let ba = directed_early_break(pb.iter().map(|p| &p[..]), || pa.iter().map(|p| &p[..]), base);
        ab.max(ba)
    }
}

fn nested_agent_distance(a: &SubMatrix<'_>, b: &SubMatrix<'_>, base: BaseDistance) -> f64 {
    let (ka, kb) = (a.agents(), b.agents());
    let mut inner = vec![0.0; ka * kb];
    for i in 0..ka {
        for j in 0..kb {
            inner[i * kb + j] = agent_trajectory_distance(a, i, b, j, base);
        }
    }
    let ab = (0..ka)
        .map(|i| (0..kb).map(|j| inner[i * kb + j]).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let ba = (0..kb)
        .map(|j| (0..ka).map(|i| inner[i * kb + j]).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    ab.max(ba)
}

/// Distance between two sub-matrices given by reference into their matrices.
pub fn submatrix_distance(
    m1: &TrajectoryMatrix,
    r1: SubMatrixRef,
    m2: &TrajectoryMatrix,
    r2: SubMatrixRef,
    mode: DistanceMode,
    base: BaseDistance,
) -> Result<f64, DistanceError> {
    if m1.agents() != m2.agents() {
        return Err(DistanceError::AgentMismatch {
            left: m1.agents(),
            right: m2.agents(),
        });
    }
    let a = m1.submatrix(r1.start, r1.end)?;
    let b = m2.submatrix(r2.start, r2.end)?;
    Ok(window_distance(&a, &b, mode, base))
}

/// Column-wise nearest-neighbour distances for a pair of equal-length windows
/// in [`DistanceMode::TimestepPointSet`], kept so that appending one column to
/// both windows costs `O(l)` base evaluations instead of `O(l^2)`.
///
/// `distance()` is bit-identical to [`window_distance`] on the same windows.
#[derive(Debug, Clone)]
pub struct PairState {
    /// `forward[i]`: min over neighbour columns of base(anchor_i, .)
    forward: Vec<f64>,
    /// `backward[j]`: min over anchor columns of base(., neighbour_j)
    backward: Vec<f64>,
}

impl PairState {
    pub fn new(anchor: &SubMatrix<'_>, other: &SubMatrix<'_>, base: BaseDistance) -> Self {
        let (la, lb) = (anchor.len(), other.len());
        let mut forward = vec![f64::INFINITY; la];
        let mut backward = vec![f64::INFINITY; lb];
        for (i, ca) in anchor.columns().enumerate() {
            for (j, cb) in other.columns().enumerate() {
                let d = base.eval(ca, cb);
                if d < forward[i] {
                    forward[i] = d;
                }
                if d < backward[j] {
                    backward[j] = d;
                }
            }
        }
        Self { forward, backward }
    }

    pub fn distance(&self) -> f64 {
        self.forward.iter().chain(&self.backward).copied().fold(0.0, f64::max)
    }

    /// Appends the last column of each (already extended) window. Returns the
    /// number of base-distance evaluations performed.
    pub fn extend(&mut self, anchor: &SubMatrix<'_>, other: &SubMatrix<'_>, base: BaseDistance) -> usize {
        let la = self.forward.len();
        let lb = self.backward.len();
        debug_assert_eq!(anchor.len(), la + 1);
        debug_assert_eq!(other.len(), lb + 1);
        let a_new = anchor.column(la);
        let b_new = other.column(lb);

        let mut new_forward = base.eval(a_new, b_new);
        let mut new_backward = new_forward;
        for (i, f) in self.forward.iter_mut().enumerate() {
            let d = base.eval(anchor.column(i), b_new);
            if d < *f {
                *f = d;
            }
            if d < new_backward {
                new_backward = d;
            }
        }
        for (j, bw) in self.backward.iter_mut().enumerate() {
            let d = base.eval(a_new, other.column(j));
            if d < *bw {
                *bw = d;
            }
            if d < new_forward {
                new_forward = d;
            }
        }
        self.forward.push(new_forward);
        self.backward.push(new_backward);
        la + lb + 1
    }
}
