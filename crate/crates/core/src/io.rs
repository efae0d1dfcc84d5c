//! Delimited text formats for trajectories, labels, shot tables and shot
//! events, plus the JSON results document.
//!
//! Every parse error carries the file, the 1-based line and the 1-based
//! column. Coordinates are written with Rust's shortest round-tripping float
//! formatting, so a write/read cycle is bit-exact.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labeling::{LabelDecision, PlayerShotStats, Position, ShotEvent, ShotStatsTable};
use crate::mining::MiningResult;
use crate::model::{
    default_agent_names, validate_dataset, AgentRole, Dataset, Label, Point2D, TrajectoryMatrix, Violation,
};
use crate::stats::{FET_SIDEDNESS, PERMUTATION_PRNG};
use crate::synth::PlantedWindow;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{file}:{line}:{column}: {message}")]
    Parse {
        file: String,
        line: u64,
        column: usize,
        message: String,
    },
    #[error("{file}: missing label for attack `{attack_id}`")]
    MissingLabel { file: String, attack_id: String },
    #[error("{file}:{line}: label for unknown attack `{attack_id}`")]
    UnknownAttack { file: String, line: u64, attack_id: String },
    #[error("invalid dataset: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidDataset(Vec<Violation>),
    #[error("{file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: {message}")]
    Document { file: String, message: String },
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            file: path.display().to_string(),
            source,
        }
    }
}

type Result<T> = std::result::Result<T, IoError>;

/// Row reader that tracks positions for error messages.
struct Rows {
    file: String,
    reader: csv::Reader<File>,
}

struct Row {
    line: u64,
    fields: csv::StringRecord,
}

impl Rows {
    fn open(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| IoError::io(path, e))?;
        let reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(f);
        Ok(Self {
            file: path.display().to_string(),
            reader,
        })
    }

    fn err(&self, line: u64, column: usize, message: impl Into<String>) -> IoError {
        IoError::Parse {
            file: self.file.clone(),
            line,
            column,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Option<Result<Row>> {
        let mut rec = csv::StringRecord::new();
        match self.reader.read_record(&mut rec) {
            Ok(false) => None,
            Ok(true) => {
                let line = rec.position().map(|p| p.line()).unwrap_or(0);
                Some(Ok(Row { line, fields: rec }))
            }
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                let msg = match e.kind() {
                    csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                        format!("expected {expected_len} fields, found {len}")
                    }
                    _ => e.to_string(),
                };
                Some(Err(self.err(line, 1, msg)))
            }
        }
    }

    /// Reads the header row and checks it matches `expected` exactly.
    fn expect_header(&mut self, expected: &[&str]) -> Result<()> {
        let row = self.header()?;
        if row.fields.iter().ne(expected.iter().copied()) {
            return Err(self.err(row.line, 1, format!("header must be `{}`", expected.join(","))));
        }
        Ok(())
    }

    fn header(&mut self) -> Result<Row> {
        match self.next() {
            Some(r) => r,
            None => Err(self.err(1, 1, "missing header row")),
        }
    }

    fn field<'r>(&self, row: &'r Row, col: usize) -> &'r str {
        row.fields.get(col).unwrap_or("")
    }

    fn f64_at(&self, row: &Row, col: usize) -> Result<f64> {
        let s = self.field(row, col);
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) => Err(self.err(row.line, col + 1, format!("non-finite number `{s}`"))),
            Err(_) => Err(self.err(row.line, col + 1, format!("malformed number `{s}`"))),
        }
    }

    fn u64_at(&self, row: &Row, col: usize) -> Result<u64> {
        let s = self.field(row, col);
        s.parse::<u64>()
            .map_err(|_| self.err(row.line, col + 1, format!("malformed integer `{s}`")))
    }

    fn id_at(&self, row: &Row, col: usize) -> Result<String> {
        let s = self.field(row, col);
        if s.is_empty() {
            return Err(self.err(row.line, col + 1, "empty identifier"));
        }
        Ok(s.to_string())
    }
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let f = File::create(path).map_err(|e| IoError::io(path, e))?;
    Ok(csv::WriterBuilder::new().has_headers(false).from_writer(f))
}

fn csv_err(path: &Path, e: csv::Error) -> IoError {
    let source = match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => std::io::Error::other(format!("{other:?}")),
    };
    IoError::io(path, source)
}

/// `attack_id,frame,<agent>_x,<agent>_y,...`
pub fn trajectory_header(agent_names: &[String]) -> Vec<String> {
    let mut h = vec!["attack_id".to_string(), "frame".to_string()];
    for a in agent_names {
        h.push(format!("{a}_x"));
        h.push(format!("{a}_y"));
    }
    h
}

/// Accepts the five-role basketball header or the generic `agent{j}` header.
fn agent_names_from_header(fields: &[&str]) -> Option<Vec<String>> {
    if fields.len() < 4 || !fields.len().is_multiple_of(2) || fields[0] != "attack_id" || fields[1] != "frame" {
        return None;
    }
    let k = (fields.len() - 2) / 2;
    let candidates = [
        AgentRole::ALL
            .iter()
            .map(|r| r.column_prefix().to_string())
            .collect::<Vec<_>>(),
        (0..k).map(|j| format!("agent{j}")).collect(),
    ];
    candidates.into_iter().find(|names| {
        names.len() == k
            && trajectory_header(names)
                .iter()
                .map(String::as_str)
                .eq(fields.iter().copied())
    })
}

/// Reads a trajectory file. Every attack gets a provisional negative label;
/// use [`load_dataset`] to attach real labels.
pub fn read_trajectories(path: &Path) -> Result<Dataset> {
    let mut rows = Rows::open(path)?;
    let header = rows.header()?;
    let fields: Vec<&str> = header.fields.iter().collect();
    let names = agent_names_from_header(&fields).ok_or_else(|| {
        rows.err(
            header.line,
            1,
            format!(
                "header must be `{}` or the generic agent{{j}}_x,agent{{j}}_y layout",
                trajectory_header(&default_agent_names(AgentRole::ALL.len())).join(",")
            ),
        )
    })?;
    let k = names.len();

    let mut matrices: Vec<TrajectoryMatrix> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut current: Option<(String, Vec<f64>)> = None;
    let flush = |cur: Option<(String, Vec<f64>)>, out: &mut Vec<TrajectoryMatrix>| {
        if let Some((id, coords)) = cur {
            out.push(TrajectoryMatrix::from_columns(id, Label::Negative, k, coords).expect("whole frames"));
        }
    };
    while let Some(row) = rows.next() {
        let row = row?;
        let id = rows.id_at(&row, 0)?;
        let frame = rows.u64_at(&row, 1)?;
        let continuing = matches!(&current, Some((cur, _)) if *cur == id);
        if !continuing {
            if seen.contains(&id) {
                return Err(rows.err(row.line, 1, format!("rows for attack `{id}` are not contiguous")));
            }
            flush(current.take(), &mut matrices);
            seen.insert(id.clone());
            current = Some((id, Vec::new()));
        }
        let (_, coords) = current.as_mut().expect("current attack");
        let expected = (coords.len() / (2 * k)) as u64;
        if frame != expected {
            return Err(rows.err(
                row.line,
                2,
                format!(
                    "frame gap at line {}: expected frame {expected}, found {frame}",
                    row.line
                ),
            ));
        }
        for c in 0..2 * k {
            coords.push(rows.f64_at(&row, c + 2)?);
        }
    }
    flush(current.take(), &mut matrices);
    Ok(Dataset::with_agent_names(matrices, names))
}

/// Reads `attack_id,label` rows, keeping file order.
pub fn read_labels(path: &Path) -> Result<Vec<(String, Label, u64)>> {
    let mut rows = Rows::open(path)?;
    rows.expect_header(&["attack_id", "label"])?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    while let Some(row) = rows.next() {
        let row = row?;
        let id = rows.id_at(&row, 0)?;
        let raw = rows.field(&row, 1);
        let label = Label::parse(raw)
            .ok_or_else(|| rows.err(row.line, 2, format!("label must be `+1` or `-1`, found `{raw}`")))?;
        if !seen.insert(id.clone()) {
            return Err(rows.err(row.line, 1, format!("duplicate label for attack `{id}`")));
        }
        out.push((id, label, row.line));
    }
    Ok(out)
}

/// Trajectories plus labels, checked with [`validate_dataset`]. Attacks
/// shorter than `min_length` are reported by the validator but not rejected.
pub fn load_dataset(trajectories: &Path, labels: &Path) -> Result<Dataset> {
    let raw = read_trajectories(trajectories)?;
    let label_rows = read_labels(labels)?;
    let file = labels.display().to_string();
    let mut map: HashMap<&str, Label> = HashMap::new();
    for (id, label, line) in &label_rows {
        if raw.index_of(id).is_none() {
            return Err(IoError::UnknownAttack {
                file,
                line: *line,
                attack_id: id.clone(),
            });
        }
        map.insert(id, *label);
    }
    let mut matrices = Vec::with_capacity(raw.len());
    for m in raw.matrices() {
        let label = *map.get(m.attack_id()).ok_or_else(|| IoError::MissingLabel {
            file: file.clone(),
            attack_id: m.attack_id().to_string(),
        })?;
        matrices.push(m.clone().with_label(label));
    }
    let ds = Dataset::with_agent_names(matrices, raw.agent_names().to_vec());
    let fatal: Vec<Violation> = validate_dataset(&ds, None)
        .into_iter()
        .filter(|v| v.kind.is_fatal())
        .collect();
    if !fatal.is_empty() {
        return Err(IoError::InvalidDataset(fatal));
    }
    Ok(ds)
}

pub fn write_trajectories(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(trajectory_header(ds.agent_names()))
        .map_err(|e| csv_err(path, e))?;
    for m in ds.matrices() {
        for t in 0..m.len() {
            let mut rec = vec![m.attack_id().to_string(), t.to_string()];
            rec.extend(m.column(t).iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| IoError::io(path, e))
}

pub fn write_labels<'a>(rows: impl IntoIterator<Item = (&'a str, Label)>, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["attack_id", "label"]).map_err(|e| csv_err(path, e))?;
    for (id, label) in rows {
        w.write_record([id, label.as_str()]).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| IoError::io(path, e))
}

pub fn write_dataset_labels(ds: &Dataset, path: &Path) -> Result<()> {
    write_labels(ds.matrices().iter().map(|m| (m.attack_id(), m.label())), path)
}

/// Per-attack labeling details: zone, defender band and both probabilities.
pub fn write_label_details(decisions: &[LabelDecision], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "attack_id",
        "label",
        "zone",
        "defender_category",
        "raw_three_point_prob",
        "adjusted_three_point_prob",
    ])
    .map_err(|e| csv_err(path, e))?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for d in decisions {
        w.write_record([
            d.attack_id.clone(),
            d.label.as_str().to_string(),
            d.zone.map(|z| z.name().to_string()).unwrap_or_default(),
            d.defender.map(|c| c.name().to_string()).unwrap_or_default(),
            opt(d.raw_three_point_prob),
            opt(d.adjusted_three_point_prob),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| IoError::io(path, e))
}

pub const SHOT_STATS_HEADER: [&str; 4] = [
    "player_id",
    "position",
    "three_point_attempts",
    "three_point_success_prob",
];

/// Reads the player shot table; position defaults are attempt-weighted means.
pub fn read_shot_stats(path: &Path) -> Result<ShotStatsTable> {
    let mut rows = Rows::open(path)?;
    rows.expect_header(&SHOT_STATS_HEADER)?;
    let mut players = Vec::new();
    let mut seen = HashSet::new();
    while let Some(row) = rows.next() {
        let row = row?;
        let player_id = rows.id_at(&row, 0)?;
        let code = rows.field(&row, 1);
        let position = Position::from_code(code)
            .ok_or_else(|| rows.err(row.line, 2, format!("unknown position code `{code}`")))?;
        let attempts = rows.u64_at(&row, 2)?;
        let attempts = u32::try_from(attempts).map_err(|_| rows.err(row.line, 3, "attempt count too large"))?;
        let prob = rows.f64_at(&row, 3)?;
        if !(0.0..=1.0).contains(&prob) {
            return Err(rows.err(row.line, 4, format!("probability {prob} outside [0, 1]")));
        }
        if !seen.insert(player_id.clone()) {
            return Err(rows.err(row.line, 1, format!("duplicate player `{player_id}`")));
        }
        players.push(PlayerShotStats {
            player_id,
            position,
            three_point_attempts: attempts,
            three_point_success_prob: prob,
        });
    }
    Ok(ShotStatsTable::from_players(players))
}

pub fn write_shot_stats(players: &[PlayerShotStats], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SHOT_STATS_HEADER).map_err(|e| csv_err(path, e))?;
    for p in players {
        w.write_record([
            p.player_id.clone(),
            p.position.code().to_string(),
            p.three_point_attempts.to_string(),
            p.three_point_success_prob.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| IoError::io(path, e))
}

pub const SHOT_EVENTS_HEADER: [&str; 6] = [
    "attack_id",
    "shooter_id",
    "shot_x",
    "shot_y",
    "defender_distance_ft",
    "shot_attempted",
];

pub fn read_shot_events(path: &Path) -> Result<Vec<ShotEvent>> {
    let mut rows = Rows::open(path)?;
    rows.expect_header(&SHOT_EVENTS_HEADER)?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    while let Some(row) = rows.next() {
        let row = row?;
        let attack_id = rows.id_at(&row, 0)?;
        if !seen.insert(attack_id.clone()) {
            return Err(rows.err(row.line, 1, format!("duplicate event for attack `{attack_id}`")));
        }
        let shooter_id = rows.field(&row, 1).to_string();
        let x = rows.f64_at(&row, 2)?;
        let y = rows.f64_at(&row, 3)?;
        let d = rows.f64_at(&row, 4)?;
        let shot_attempted = match rows.field(&row, 5) {
            "1" | "true" => true,
            "0" | "false" => false,
            other => {
                return Err(rows.err(row.line, 6, format!("shot_attempted must be 0/1, found `{other}`")));
            }
        };
        out.push(ShotEvent {
            attack_id,
            shooter_id,
            shot_point: Point2D::new(x, y),
            nearest_defender_distance: d,
            shot_attempted,
        });
    }
    Ok(out)
}

pub fn write_shot_events(events: &[ShotEvent], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SHOT_EVENTS_HEADER).map_err(|e| csv_err(path, e))?;
    for e in events {
        w.write_record([
            e.attack_id.clone(),
            e.shooter_id.clone(),
            e.shot_point.x.to_string(),
            e.shot_point.y.to_string(),
            e.nearest_defender_distance.to_string(),
            if e.shot_attempted { "1" } else { "0" }.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| IoError::io(path, e))
}

pub const GROUND_TRUTH_HEADER: [&str; 3] = ["attack_id", "start", "end"];

pub fn write_ground_truth(windows: &[PlantedWindow], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(GROUND_TRUTH_HEADER).map_err(|e| csv_err(path, e))?;
    for g in windows {
        w.write_record([g.attack_id.clone(), g.start.to_string(), g.end.to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| IoError::io(path, e))
}

/// Reads ground truth windows, resolving ids against `ds`.
pub fn read_ground_truth(path: &Path, ds: &Dataset) -> Result<Vec<PlantedWindow>> {
    let mut rows = Rows::open(path)?;
    rows.expect_header(&GROUND_TRUTH_HEADER)?;
    let mut out = Vec::new();
    while let Some(row) = rows.next() {
        let row = row?;
        let attack_id = rows.id_at(&row, 0)?;
        let matrix = ds
            .index_of(&attack_id)
            .ok_or_else(|| rows.err(row.line, 1, format!("unknown attack `{attack_id}`")))?;
        let start = rows.u64_at(&row, 1)? as usize;
        let end = rows.u64_at(&row, 2)? as usize;
        if start > end || end >= ds.matrix(matrix).len() {
            return Err(rows.err(row.line, 2, format!("window [{start}, {end}] out of range")));
        }
        out.push(PlantedWindow {
            attack_id,
            matrix,
            start,
            end,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub fet: String,
    pub permutation_prng: String,
    pub window_convention: String,
}

impl Default for RunMetadata {
    fn default() -> Self {
        Self {
            fet: FET_SIDEDNESS.to_string(),
            permutation_prng: PERMUTATION_PRNG.to_string(),
            window_convention: "0-based inclusive".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub format_version: u32,
    pub metadata: RunMetadata,
    pub result: MiningResult,
}

impl ResultDocument {
    pub fn new(result: MiningResult) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            metadata: RunMetadata::default(),
            result,
        }
    }
}

pub fn results_to_string(result: &MiningResult) -> String {
    let mut s = serde_json::to_string_pretty(&ResultDocument::new(result.clone())).expect("serializable result");
    s.push('\n');
    s
}

pub fn write_results(result: &MiningResult, path: &Path) -> Result<()> {
    let mut f = File::create(path).map_err(|e| IoError::io(path, e))?;
    f.write_all(results_to_string(result).as_bytes())
        .map_err(|e| IoError::io(path, e))
}

pub fn read_results(path: &Path) -> Result<MiningResult> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let file = path.display().to_string();
    let doc: ResultDocument = serde_json::from_str(&text).map_err(|e| IoError::Parse {
        file: file.clone(),
        line: e.line() as u64,
        column: e.column(),
        message: e.to_string(),
    })?;
    if doc.format_version != FORMAT_VERSION {
        return Err(IoError::Document {
            file,
            message: format!("unsupported format_version {}", doc.format_version),
        });
    }
    Ok(doc.result)
}

/// Discovery windows grouped by attack id, as read back from a results file.
pub fn windows_by_attack(result: &MiningResult) -> BTreeMap<String, Vec<(usize, usize)>> {
    let mut out: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
    for d in &result.discoveries {
        out.entry(d.attack_id.clone()).or_default().push((d.start, d.end));
    }
    out
}
