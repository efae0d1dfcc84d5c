//! Trajectory data model: agents, trajectory matrices, sub-matrix windows and
//! labeled datasets.
//!
//! A [`TrajectoryMatrix`] stores one attack as `K` role-ordered agent
//! trajectories of equal length. Coordinates are kept column-major: column `t`
//! is the flat vector `(x_0, y_0, x_1, y_1, ..., x_{K-1}, y_{K-1})` of all agent
//! positions at time step `t`, which is the layout the distance kernels
//! consume directly.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default tracking sample rate of the cropped attack data.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("index {index} out of range for matrix of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("inverted window: start {start} > end {end}")]
    InvertedWindow { start: usize, end: usize },
    #[error("frame {frame} has {found} agents, expected {expected}")]
    RaggedFrame {
        frame: usize,
        found: usize,
        expected: usize,
    },
    #[error("trajectory matrix has no agents")]
    NoAgents,
}

/// A court position in coordinate units (feet by default).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// The five tracked roles of a basketball attack, in their fixed row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgentRole {
    Ball,
    Shooter,
    ShooterDefender,
    LastPasser,
    LastPasserDefender,
}

impl AgentRole {
    pub const ALL: [AgentRole; 5] = [
        AgentRole::Ball,
        AgentRole::Shooter,
        AgentRole::ShooterDefender,
        AgentRole::LastPasser,
        AgentRole::LastPasserDefender,
    ];

    /// Column-name prefix used by the trajectory file header.
    pub fn column_prefix(self) -> &'static str {
        match self {
            AgentRole::Ball => "ball",
            AgentRole::Shooter => "shooter",
            AgentRole::ShooterDefender => "shooter_def",
            AgentRole::LastPasser => "passer",
            AgentRole::LastPasserDefender => "passer_def",
        }
    }

    pub fn ordinal(self) -> usize {
        self as usize
    }
}

/// Binary attack label: `+1` effective, `-1` ineffective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "+1")]
    Positive,
    #[serde(rename = "-1")]
    Negative,
}

impl Label {
    pub fn is_positive(self) -> bool {
        matches!(self, Label::Positive)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "+1",
            Label::Negative => "-1",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "+1" => Some(Label::Positive),
            "-1" => Some(Label::Negative),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One attack: `K` agent trajectories sharing `m` time steps.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMatrix {
    attack_id: String,
    label: Label,
    agents: usize,
    coords: Vec<f64>,
    sample_rate_hz: f64,
}

impl TrajectoryMatrix {
    /// Builds a matrix from per-frame agent positions. Every frame must hold
    /// the same number of agents. Coordinate finiteness and non-emptiness are
    /// reported by [`validate_dataset`] rather than rejected here.
    pub fn from_frames(
        attack_id: impl Into<String>,
        label: Label,
        frames: &[Vec<Point2D>],
    ) -> Result<Self, ModelError> {
        let agents = frames.first().map(Vec::len).unwrap_or(0);
        let mut coords = Vec::with_capacity(frames.len() * agents * 2);
        for (t, frame) in frames.iter().enumerate() {
            if frame.len() != agents {
                return Err(ModelError::RaggedFrame {
                    frame: t,
                    found: frame.len(),
                    expected: agents,
                });
            }
            for p in frame {
                coords.push(p.x);
                coords.push(p.y);
            }
        }
        if agents == 0 && !frames.is_empty() {
            return Err(ModelError::NoAgents);
        }
        Ok(Self {
            attack_id: attack_id.into(),
            label,
            agents,
            coords,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
        })
    }

    /// Builds a matrix from a column-major flat coordinate buffer.
    pub fn from_columns(
        attack_id: impl Into<String>,
        label: Label,
        agents: usize,
        coords: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if agents == 0 {
            return Err(ModelError::NoAgents);
        }
        if !coords.len().is_multiple_of(2 * agents) {
            return Err(ModelError::RaggedFrame {
                frame: coords.len() / (2 * agents),
                found: (coords.len() % (2 * agents)) / 2,
                expected: agents,
            });
        }
        Ok(Self {
            attack_id: attack_id.into(),
            label,
            agents,
            coords,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
        })
    }

    pub fn with_sample_rate(mut self, hz: f64) -> Self {
        self.sample_rate_hz = hz;
        self
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = label;
        self
    }

    pub fn attack_id(&self) -> &str {
        &self.attack_id
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// Number of agents (rows).
    pub fn agents(&self) -> usize {
        self.agents
    }

    /// Number of time steps (columns).
    pub fn len(&self) -> usize {
        if self.agents == 0 {
            0
        } else {
            self.coords.len() / (2 * self.agents)
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Dimension of one column vector (`2K`).
    pub fn column_dim(&self) -> usize {
        2 * self.agents
    }

    pub fn column(&self, t: usize) -> &[f64] {
        let d = self.column_dim();
        &self.coords[t * d..(t + 1) * d]
    }

    pub fn point(&self, t: usize, agent: usize) -> Point2D {
        let c = self.column(t);
        Point2D::new(c[2 * agent], c[2 * agent + 1])
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn frames(&self) -> Vec<Vec<Point2D>> {
        (0..self.len())
            .map(|t| (0..self.agents).map(|k| self.point(t, k)).collect())
            .collect()
    }

    fn check_window(&self, start: usize, end: usize) -> Result<(), ModelError> {
        let len = self.len();
        if start >= len {
            return Err(ModelError::IndexOutOfRange { index: start, len });
        }
        if end >= len {
            return Err(ModelError::IndexOutOfRange { index: end, len });
        }
        if start > end {
            return Err(ModelError::InvertedWindow { start, end });
        }
        Ok(())
    }

    /// View of columns `start..=end`.
    pub fn submatrix(&self, start: usize, end: usize) -> Result<SubMatrix<'_>, ModelError> {
        self.check_window(start, end)?;
        Ok(SubMatrix {
            matrix: self,
            start,
            end,
        })
    }

    /// Keeps frames `t2_frame..=t0_frame` (last-passer reception through shot).
    pub fn crop(&self, t2_frame: usize, t0_frame: usize) -> Result<TrajectoryMatrix, ModelError> {
        self.check_window(t2_frame, t0_frame)?;
        let d = self.column_dim();
        Ok(TrajectoryMatrix {
            attack_id: self.attack_id.clone(),
            label: self.label,
            agents: self.agents,
            coords: self.coords[t2_frame * d..(t0_frame + 1) * d].to_vec(),
            sample_rate_hz: self.sample_rate_hz,
        })
    }
}

/// Free-function form of [`TrajectoryMatrix::submatrix`].
pub fn extract_submatrix(matrix: &TrajectoryMatrix, start: usize, end: usize) -> Result<SubMatrix<'_>, ModelError> {
    matrix.submatrix(start, end)
}

/// Free-function form of [`TrajectoryMatrix::crop`].
pub fn crop_attack(
    matrix: &TrajectoryMatrix,
    t2_frame: usize,
    t0_frame: usize,
) -> Result<TrajectoryMatrix, ModelError> {
    matrix.crop(t2_frame, t0_frame)
}

/// Borrowed `K x (end - start + 1)` window of a trajectory matrix.
#[derive(Debug, Clone, Copy)]
pub struct SubMatrix<'a> {
    matrix: &'a TrajectoryMatrix,
    start: usize,
    end: usize,
}

impl<'a> SubMatrix<'a> {
    pub fn matrix(&self) -> &'a TrajectoryMatrix {
        self.matrix
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn agents(&self) -> usize {
        self.matrix.agents()
    }

    /// Column `t` of the view, i.e. column `start + t` of the matrix.
    pub fn column(&self, t: usize) -> &'a [f64] {
        self.matrix.column(self.start + t)
    }

    pub fn columns(&self) -> impl ExactSizeIterator<Item = &'a [f64]> + 'a {
        let m = self.matrix;
        (self.start..self.end + 1).map(move |t| m.column(t))
    }

    pub fn point(&self, t: usize, agent: usize) -> Point2D {
        self.matrix.point(self.start + t, agent)
    }

    /// The window's trajectory of one agent.
    pub fn agent_points(&self, agent: usize) -> Vec<[f64; 2]> {
        (0..self.len()).map(|t| self.point(t, agent).to_array()).collect()
    }
}

/// A contiguous column window `[start, end]` (0-based, inclusive) of the
/// matrix at index `matrix` in its dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubMatrixRef {
    pub matrix: usize,
    pub start: usize,
    pub end: usize,
}

impl SubMatrixRef {
    pub const fn new(matrix: usize, start: usize, end: usize) -> Self {
        Self { matrix, start, end }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    pub fn extended(&self) -> Self {
        Self {
            end: self.end + 1,
            ..*self
        }
    }
}

/// A labeled collection of attacks.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    matrices: Vec<TrajectoryMatrix>,
    agent_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset whose agents carry the basketball role names when
    /// `K = 5`, and generic `agent{j}` names otherwise.
    pub fn new(matrices: Vec<TrajectoryMatrix>) -> Self {
        let k = matrices.first().map(TrajectoryMatrix::agents).unwrap_or(0);
        Self {
            matrices,
            agent_names: default_agent_names(k),
        }
    }

    pub fn with_agent_names(matrices: Vec<TrajectoryMatrix>, agent_names: Vec<String>) -> Self {
        Self { matrices, agent_names }
    }

    pub fn matrices(&self) -> &[TrajectoryMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, index: usize) -> &TrajectoryMatrix {
        &self.matrices[index]
    }

    pub fn agent_names(&self) -> &[String] {
        &self.agent_names
    }

    pub fn agents(&self) -> usize {
        self.agent_names.len()
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// `|G+|`
    pub fn n_pos(&self) -> usize {
        self.matrices.iter().filter(|m| m.label().is_positive()).count()
    }

    /// `|G-|`
    pub fn n_neg(&self) -> usize {
        self.len() - self.n_pos()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.matrices.iter().map(TrajectoryMatrix::label).collect()
    }

    pub fn index_of(&self, attack_id: &str) -> Option<usize> {
        self.matrices.iter().position(|m| m.attack_id() == attack_id)
    }

    pub fn submatrix(&self, r: SubMatrixRef) -> Result<SubMatrix<'_>, ModelError> {
        self.matrices
            .get(r.matrix)
            .ok_or(ModelError::IndexOutOfRange {
                index: r.matrix,
                len: self.matrices.len(),
            })?
            .submatrix(r.start, r.end)
    }
}

/// Header-style agent names: role prefixes for the 5-agent layout, `agent{j}`
/// otherwise.
pub fn default_agent_names(k: usize) -> Vec<String> {
    if k == AgentRole::ALL.len() {
        AgentRole::ALL.iter().map(|r| r.column_prefix().to_string()).collect()
    } else {
        (0..k).map(|j| format!("agent{j}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    DuplicateId,
    NonFiniteCoordinate,
    EmptyMatrix,
    AgentCountMismatch,
    NonPositiveSampleRate,
    /// Shorter than the minimum mining length; skipped by the miner.
    ShorterThanMinLength,
}

impl ViolationKind {
    pub fn rule(self) -> &'static str {
        match self {
            ViolationKind::DuplicateId => "duplicate id",
            ViolationKind::NonFiniteCoordinate => "non-finite coordinate",
            ViolationKind::EmptyMatrix => "empty matrix",
            ViolationKind::AgentCountMismatch => "agent count mismatch",
            ViolationKind::NonPositiveSampleRate => "non-positive sample rate",
            ViolationKind::ShorterThanMinLength => "shorter than minimum length",
        }
    }

    /// Fatal violations make a dataset unusable for mining.
    pub fn is_fatal(self) -> bool {
        !matches!(self, ViolationKind::ShorterThanMinLength)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub attack_id: String,
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.attack_id, self.kind.rule(), self.detail)
    }
}

/// Checks every dataset and matrix invariant. When `min_length` is given,
/// matrices shorter than it are flagged as non-fatal violations.
pub fn validate_dataset(dataset: &Dataset, min_length: Option<usize>) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let k = dataset.agents();
    for m in dataset.matrices() {
        let id = m.attack_id();
        let count = seen.entry(id).or_insert(0);
        *count += 1;
        if *count == 2 {
            out.push(Violation {
                attack_id: id.to_string(),
                kind: ViolationKind::DuplicateId,
                detail: "attack id appears more than once".into(),
            });
        }
        if m.agents() != k {
            out.push(Violation {
                attack_id: id.to_string(),
                kind: ViolationKind::AgentCountMismatch,
                detail: format!("{} agents, dataset has {k}", m.agents()),
            });
        }
        if m.is_empty() {
            out.push(Violation {
                attack_id: id.to_string(),
                kind: ViolationKind::EmptyMatrix,
                detail: "no frames".into(),
            });
        }
        if !(m.sample_rate_hz() > 0.0 && m.sample_rate_hz().is_finite()) {
            out.push(Violation {
                attack_id: id.to_string(),
                kind: ViolationKind::NonPositiveSampleRate,
                detail: format!("{}", m.sample_rate_hz()),
            });
        }
        if let Some(pos) = m.coords().iter().position(|v| !v.is_finite()) {
            let d = m.column_dim();
            out.push(Violation {
                attack_id: id.to_string(),
                kind: ViolationKind::NonFiniteCoordinate,
                detail: format!("frame {}, agent {}", pos / d, (pos % d) / 2),
            });
        }
        if let Some(l) = min_length {
            if !m.is_empty() && m.len() < l {
                out.push(Violation {
                    attack_id: id.to_string(),
                    kind: ViolationKind::ShorterThanMinLength,
                    detail: format!("length {} < {l}", m.len()),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(id: &str, label: Label, len: usize, k: usize) -> TrajectoryMatrix {
        let frames: Vec<Vec<Point2D>> = (0..len)
            .map(|t| {
                (0..k)
                    .map(|j| Point2D::new(t as f64 + j as f64 * 0.5, 2.0 * t as f64 - j as f64))
                    .collect()
            })
            .collect();
        TrajectoryMatrix::from_frames(id, label, &frames).unwrap()
    }

    #[test]
    fn full_window_is_identity() {
        let m = ramp("a", Label::Positive, 10, 5);
        let v = extract_submatrix(&m, 0, 9).unwrap();
        assert_eq!(v.len(), 10);
        for t in 0..10 {
            assert_eq!(v.column(t), m.column(t));
        }
    }

    #[test]
    fn window_first_column_is_matrix_column() {
        let m = ramp("a", Label::Positive, 10, 5);
        let v = extract_submatrix(&m, 3, 7).unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(v.agents(), 5);
        assert_eq!(v.column(0), m.column(3));
        assert_eq!(v.columns().count(), 5);
    }

    #[test]
    fn out_of_range_window_names_index() {
        let m = ramp("a", Label::Positive, 10, 5);
        assert_eq!(
            extract_submatrix(&m, 7, 12).unwrap_err(),
            ModelError::IndexOutOfRange { index: 12, len: 10 }
        );
        assert!(matches!(
            extract_submatrix(&m, 8, 7),
            Err(ModelError::InvertedWindow { .. })
        ));
    }

    #[test]
    fn crop_keeps_interval() {
        let m = ramp("a", Label::Negative, 50, 5);
        let c = crop_attack(&m, 10, 40).unwrap();
        assert_eq!(c.len(), 31);
        assert_eq!(c.attack_id(), "a");
        assert_eq!(c.label(), Label::Negative);
        assert_eq!(c.column(0), m.column(10));
        assert_eq!(crop_attack(&m, 0, 49).unwrap(), m);
        assert!(crop_attack(&m, 30, 20).is_err());
        assert!(crop_attack(&m, 0, 50).is_err());
    }

    #[test]
    fn crop_idempotent_on_full_range() {
        let m = ramp("a", Label::Negative, 50, 5).crop(5, 30).unwrap();
        let again = m.crop(0, m.len() - 1).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn ragged_frames_rejected() {
        let frames = vec![vec![Point2D::new(0.0, 0.0); 2], vec![Point2D::new(0.0, 0.0); 3]];
        assert!(matches!(
            TrajectoryMatrix::from_frames("x", Label::Positive, &frames),
            Err(ModelError::RaggedFrame { frame: 1, .. })
        ));
    }

    fn twelve_attacks() -> Dataset {
        let mut ms = Vec::new();
        for i in 0..12 {
            let label = if i < 5 { Label::Positive } else { Label::Negative };
            ms.push(ramp(&format!("att{i}"), label, 8 + i, 5));
        }
        Dataset::new(ms)
    }

    #[test]
    fn well_formed_dataset_validates() {
        let d = twelve_attacks();
        assert_eq!(d.n_pos(), 5);
        assert_eq!(d.n_neg(), 7);
        assert!(validate_dataset(&d, None).is_empty());
        assert_eq!(d.agent_names()[2], "shooter_def");
    }

    #[test]
    fn duplicate_id_reported_once() {
        let mut ms = twelve_attacks().matrices().to_vec();
        ms.push(ramp("att3", Label::Negative, 6, 5));
        let report = validate_dataset(&Dataset::new(ms), None);
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].kind, ViolationKind::DuplicateId);
        assert_eq!(report[0].attack_id, "att3");
    }

    #[test]
    fn nan_coordinate_reported() {
        let mut frames = ramp("n", Label::Positive, 6, 5).frames();
        frames[2][1].y = f64::NAN;
        let bad = TrajectoryMatrix::from_frames("n", Label::Positive, &frames).unwrap();
        let mut ms = twelve_attacks().matrices().to_vec();
        ms.push(bad);
        let report = validate_dataset(&Dataset::new(ms), None);
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].kind, ViolationKind::NonFiniteCoordinate);
        assert_eq!(report[0].detail, "frame 2, agent 1");
    }

    #[test]
    fn short_matrices_flagged_non_fatal() {
        let d = twelve_attacks();
        let report = validate_dataset(&d, Some(10));
        // lengths 8 and 9 are short
        assert_eq!(report.len(), 2);
        assert!(report.iter().all(|v| !v.kind.is_fatal()));
    }

    #[test]
    fn suffix_of_window_matches_later_window() {
        let m = ramp("a", Label::Positive, 12, 3);
        let (s, e) = (2, 10);
        let outer = m.submatrix(s, e).unwrap();
        for t in s..=e {
            let inner = m.submatrix(t, e).unwrap();
            for c in 0..inner.len() {
                assert_eq!(outer.column(t - s + c), inner.column(c));
            }
        }
    }
}
