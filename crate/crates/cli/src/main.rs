use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use madsm_core::distance::{BaseDistance, DistanceMode};
use madsm_core::io;
use madsm_core::labeling::{label_attack, LabelRules};
use madsm_core::mining::{mine, mine_with_threads, MinerConfig, MiningError};
use madsm_core::model::{validate_dataset, Dataset};
use madsm_core::render::{render_attack_svg, RenderSpec};
use madsm_core::synth::{gen_planted, SynthConfig};

#[derive(Parser)]
#[command(
    name = "madsm",
    version,
    about = "Statistically discriminative sub-matrix mining for multi-agent trajectories"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Label attacks from shot events and a player shot table.
    Label(LabelArgs),
    /// Mine significant sub-matrices and write a results document.
    Mine(MineArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Draw attacks as SVG court plots.
    Render(RenderArgs),
}

#[derive(Args)]
struct LabelArgs {
    /// Shot events: attack_id,shooter_id,shot_x,shot_y,defender_distance_ft,shot_attempted
    #[arg(long)]
    events: PathBuf,
    /// Player shot table: player_id,position,three_point_attempts,three_point_success_prob
    #[arg(long)]
    stats: PathBuf,
    /// Output label file.
    #[arg(long)]
    out: PathBuf,
    /// Optional per-attack zone, defender band and probabilities.
    #[arg(long)]
    details: Option<PathBuf>,
    #[arg(long, default_value_t = 0.35)]
    three_point_threshold: f64,
    #[arg(long, default_value_t = 10)]
    min_attempts: u32,
}

#[derive(Args)]
struct MineArgs {
    #[arg(long)]
    trajectories: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Output results document (JSON).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    min_length: usize,
    #[arg(long, default_value_t = 4.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    permutations: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "timestep")]
    distance_mode: DistanceMode,
    #[arg(long, default_value = "euclidean")]
    base: BaseDistance,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    /// Disable pruning; output must match the pruned run (testing only).
    #[arg(long)]
    no_prune: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Output trajectory file.
    #[arg(long)]
    trajectories: PathBuf,
    /// Output label file.
    #[arg(long)]
    labels: PathBuf,
    /// Output ground-truth windows of planted motifs.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    n_matrices: usize,
    #[arg(long, default_value_t = 5)]
    n_pos: usize,
    #[arg(long, default_value_t = 10)]
    min_len: usize,
    #[arg(long, default_value_t = 20)]
    max_len: usize,
    #[arg(long, default_value_t = 5)]
    agents: usize,
    #[arg(long, default_value_t = 1.0)]
    step_scale: f64,
    #[arg(long, default_value_t = 94.0)]
    width: f64,
    #[arg(long, default_value_t = 50.0)]
    height: f64,
    #[arg(long, default_value_t = 6)]
    motif_length: usize,
    #[arg(long, default_value_t = 0.1)]
    motif_jitter: f64,
    /// Fraction of positives carrying the motif; 0 gives null data.
    #[arg(long, default_value_t = 0.0)]
    plant_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    trajectories: PathBuf,
    /// Labels shown in plot titles; attacks are drawn as negative without it.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Results document whose discovery windows are marked.
    #[arg(long)]
    results: Option<PathBuf>,
    /// Output directory, one `<attack_id>.svg` per attack.
    #[arg(long)]
    out: PathBuf,
    /// Attacks to draw (repeatable); all attacks by default.
    #[arg(long = "attack")]
    attacks: Vec<String>,
    #[arg(long)]
    threads: Option<usize>,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let run = match cli.command {
        Command::Label(a) => label(a),
        Command::Mine(a) => mine_cmd(a),
        Command::Synth(a) => synth(a),
        Command::Render(a) => render(a),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn label(a: LabelArgs) -> Outcome {
    let stats = io::read_shot_stats(&a.stats)?;
    let events = io::read_shot_events(&a.events)?;
    let rules = LabelRules {
        three_point_threshold: a.three_point_threshold,
        min_attempts: a.min_attempts,
        ..LabelRules::default()
    };
    let decisions = events
        .iter()
        .map(|e| label_attack(e, &stats, &rules).map_err(|err| format!("attack `{}`: {err}", e.attack_id)))
        .collect::<Result<Vec<_>, _>>()?;
    io::write_labels(decisions.iter().map(|d| (d.attack_id.as_str(), d.label)), &a.out)?;
    if let Some(p) = &a.details {
        io::write_label_details(&decisions, p)?;
    }
    let pos = decisions.iter().filter(|d| d.label.is_positive()).count();
    eprintln!("labelled {} attacks: {pos} effective", decisions.len());
    Ok(())
}

fn mine_cmd(a: MineArgs) -> Outcome {
    let config = MinerConfig {
        min_length: a.min_length,
        epsilon: a.epsilon,
        permutations: a.permutations,
        alpha: a.alpha,
        distance_mode: a.distance_mode,
        base_distance: a.base,
        seed: a.seed,
        prune: !a.no_prune,
    };
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    if a.threads == Some(0) {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    let ds = io::load_dataset(&a.trajectories, &a.labels)?;
    for v in validate_dataset(&ds, Some(config.min_length)) {
        eprintln!("warning: {v}");
    }
    let result = match a.threads {
        Some(t) => mine_with_threads(&ds, &config, t),
        None => mine(&ds, &config),
    }
    .map_err(|e| match e {
        MiningError::InvalidConfig(m) => Failure::Usage(m),
        other => Failure::Data(other.to_string()),
    })?;
    io::write_results(&result, &a.out)?;
    eprintln!(
        "delta* = {:e}; {} discoveries in {} attacks; {} nodes visited, {} pruned",
        result.delta_star,
        result.discoveries.len(),
        result.merged_windows.len(),
        result.counters.nodes_visited,
        result.counters.nodes_pruned
    );
    Ok(())
}

fn synth(a: SynthArgs) -> Outcome {
    let cfg = SynthConfig {
        n_matrices: a.n_matrices,
        n_pos: a.n_pos,
        min_len: a.min_len,
        max_len: a.max_len,
        agents: a.agents,
        step_scale: a.step_scale,
        width: a.width,
        height: a.height,
        motif_length: a.motif_length,
        motif_jitter: a.motif_jitter,
        plant_rate: a.plant_rate,
        seed: a.seed,
    };
    let (ds, truth) = gen_planted(&cfg).map_err(|e| Failure::Usage(e.to_string()))?;
    io::write_trajectories(&ds, &a.trajectories)?;
    io::write_dataset_labels(&ds, &a.labels)?;
    if let Some(p) = &a.truth {
        io::write_ground_truth(&truth, p)?;
    }
    Ok(())
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn render(a: RenderArgs) -> Outcome {
    if a.threads == Some(0) {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    let ds: Dataset = match &a.labels {
        Some(l) => io::load_dataset(&a.trajectories, l)?,
        None => io::read_trajectories(&a.trajectories)?,
    };
    let windows: BTreeMap<String, Vec<(usize, usize)>> = match &a.results {
        Some(r) => io::windows_by_attack(&io::read_results(r)?),
        None => BTreeMap::new(),
    };
    for id in windows.keys().chain(&a.attacks) {
        if ds.index_of(id).is_none() {
            return Err(Failure::Data(format!("unknown attack `{id}`")));
        }
    }
    let selected: Vec<usize> = if a.attacks.is_empty() {
        (0..ds.len()).collect()
    } else {
        a.attacks.iter().filter_map(|id| ds.index_of(id)).collect()
    };
    fs::create_dir_all(&a.out).map_err(|e| format!("{}: {e}", a.out.display()))?;
    let spec = RenderSpec::default();
    let draw = |i: &usize| -> Result<(), String> {
        let m = ds.matrix(*i);
        let w = windows.get(m.attack_id()).map(Vec::as_slice).unwrap_or(&[]);
        let svg = render_attack_svg(m, w, ds.agent_names(), &spec).map_err(|e| e.to_string())?;
        let path: PathBuf = Path::new(&a.out).join(format!("{}.svg", file_stem(m.attack_id())));
        fs::write(&path, svg).map_err(|e| format!("{}: {e}", path.display()))
    };
    let results: Vec<Result<(), String>> = match a.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| e.to_string())?
            .install(|| selected.par_iter().map(draw).collect()),
        None => selected.par_iter().map(draw).collect(),
    };
    results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(())
}
