//! The five subcommands, plus the in-memory steps they are built from.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use swarm_core::dynamics::{estimate_resonances, fit_global, read_qdyn, write_qdyn, DynamicsMatrix, FitReport};
use swarm_core::gridsearch::{collect, enumerate_grid, load_dataset, save_dataset, DatasetRecord, SweepConfig};
use swarm_core::policy::{run_path, DirectObserver, Episode, EpisodeLog, Loop, Observer, Outcome};
use swarm_core::{build_path, derive_seed, Exec, GridPosition, Mt19937, Plant, SwarmState, TargetPath, N_TRANSDUCERS};
use swarm_vision::{
    compress, render_frame, scatter_disks, synthetic_sequence, write_detections, write_pgm16, write_pgm8, Detection,
    Pipeline, PipelineConfig, SceneSpec, SequenceConfig, Source, VisionObserver, BUBBLE_DIAMETER_UM,
    CONTAMINANT_DIAMETER_UM,
};

use crate::config::{ExperimentConfig, ObserveMode};
use crate::svg::{error_svg, trajectory_svg};

pub const DATASET_FILE: &str = "dataset.csv";
pub const QDYN_FILE: &str = "q_global.qdyn";
pub const EPISODE_FILE: &str = "episode.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.svg";
pub const DETECTIONS_FILE: &str = "detections.csv";
pub const REPLAY_TRAJECTORY_FILE: &str = "replay_trajectory.svg";
pub const REPLAY_ERRORS_FILE: &str = "replay_errors.svg";

/// Exit status for scripting: 0 success, 2 input or configuration error,
/// 3 stuck, 4 step budget exceeded.
pub const EXIT_INPUT: i32 = 2;

pub fn exit_code(outcome: Outcome) -> i32 {
    match outcome {
        Outcome::Success => 0,
        Outcome::Stuck => 3,
        Outcome::BudgetExceeded => 4,
    }
}

fn out_dir(cfg: &ExperimentConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("cannot create output directory {}", cfg.out.display()))?;
    Ok(&cfg.out)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// The undisturbed plant the sweep is collected on.
pub fn sweep_plant(cfg: &ExperimentConfig) -> Result<Plant> {
    Ok(Plant::new(cfg.plant.clone(), cfg.channel)?)
}

pub fn collect_records(cfg: &ExperimentConfig) -> Result<Vec<DatasetRecord>> {
    let plant = sweep_plant(cfg)?;
    Ok(collect(&enumerate_grid(), &plant, &SweepConfig::default(), cfg.seed)?)
}

pub struct FitOutput {
    pub q: DynamicsMatrix,
    pub report: FitReport,
    pub resonances: [f64; N_TRANSDUCERS],
}

pub fn fit_records(cfg: &ExperimentConfig, records: &[DatasetRecord]) -> Result<FitOutput> {
    let resonances = estimate_resonances(records)?;
    let (q, report) = fit_global(records, cfg.channel.grid_n, &cfg.learner, Exec::Parallel)?;
    Ok(FitOutput { q, report, resonances })
}

pub struct RunOutput {
    pub episode: Episode,
    pub path: TargetPath,
    pub detections: Option<Vec<Detection>>,
}

/// Contaminants and free bubbles for closed-loop vision runs, kept clear of
/// the starting swarm.
pub fn vision_scene(cfg: &ExperimentConfig) -> SceneSpec {
    let mut rng = Mt19937::new(derive_seed(cfg.seed, 0x5ce7e));
    let start = GridPosition::new(cfg.start_x, cfg.start_y);
    let cell = cfg.channel.cell_um();
    let clear = |c: GridPosition, d: f64| {
        let min = (cfg.start_diameter_um + d) / 2.0 / cell + 5.0;
        c.dist_sq(start) > min * min
    };
    let v = &cfg.vision;
    SceneSpec {
        channel: cfg.channel,
        contaminants: scatter_disks(&cfg.channel, v.contaminants, CONTAMINANT_DIAMETER_UM, &mut rng, &clear),
        bubbles: scatter_disks(&cfg.channel, v.bubbles, BUBBLE_DIAMETER_UM, &mut rng, &clear),
        noise_sigma: v.noise_sigma,
        ..Default::default()
    }
}

pub fn run_episode(cfg: &ExperimentConfig, q: &DynamicsMatrix) -> Result<RunOutput> {
    let plant = Plant::new(cfg.run_plant_config(), cfg.channel)?;
    let path = build_path(&cfg.path_shape()?, &cfg.channel, cfg.delta)?;
    let ctx = Loop { q_global: q, plant: &plant, learner: &cfg.learner, nav: &cfg.nav };
    let start = SwarmState::new(GridPosition::new(cfg.start_x, cfg.start_y), cfg.start_diameter_um);
    let (episode, detections) = match cfg.observe {
        ObserveMode::Direct => (run_path(start, path.clone(), &ctx, cfg.seed, &mut DirectObserver)?, None),
        ObserveMode::Vision => {
            let pipe = PipelineConfig { channel: cfg.channel, ..Default::default() };
            let mut obs = VisionObserver::new(vision_scene(cfg), pipe, cfg.seed, Exec::Parallel)?;
            let ep = run_path(start, path.clone(), &ctx, cfg.seed, &mut obs as &mut dyn Observer)?;
            (ep, Some(obs.into_detections()))
        }
    };
    Ok(RunOutput { episode, path, detections })
}

pub fn cmd_collect(cfg: &ExperimentConfig, dry_run: bool, w: &mut dyn Write) -> Result<Option<PathBuf>> {
    let grid = enumerate_grid();
    if dry_run {
        for c in grid.combos() {
            writeln!(w, "combo {:4}: k={} f={:.3} MHz V={:.0} Vpp", c.id, c.action.k, c.action.f_mhz, c.action.v_pp)?;
        }
        writeln!(w, "{} combos (dry run, nothing written)", grid.len())?;
        return Ok(None);
    }
    let dir = out_dir(cfg)?;
    let path = dir.join(DATASET_FILE);
    let records = collect_records(cfg)?;
    save_dataset(&records, &path)?;
    writeln!(w, "combos:  {}", grid.len())?;
    writeln!(w, "records: {}", records.len())?;
    for k in 1..=N_TRANSDUCERS as u8 {
        let speeds: Vec<f64> = records.iter().filter(|r| r.k == k).map(DatasetRecord::speed).collect();
        let mean = speeds.iter().sum::<f64>() / speeds.len().max(1) as f64;
        writeln!(w, "k={k}: mean speed {mean:.3} cells/s over {} records", speeds.len())?;
    }
    writeln!(w, "wrote {}", path.display())?;
    Ok(Some(path))
}

pub fn cmd_fit(cfg: &ExperimentConfig, dataset: &Path, w: &mut dyn Write) -> Result<PathBuf> {
    let records = load_dataset(dataset)?;
    if records.is_empty() {
        bail!("{}: dataset has no records", dataset.display());
    }
    let fit = fit_records(cfg, &records)?;
    let dir = out_dir(cfg)?;
    let path = dir.join(QDYN_FILE);
    write_qdyn(&fit.q, &path)?;
    for (i, f) in fit.resonances.iter().enumerate() {
        writeln!(w, "k={}: f0 = {f:.3} MHz", i + 1)?;
    }
    let cells = cfg.channel.grid_n * cfg.channel.grid_n;
    for i in 0..N_TRANSDUCERS {
        let r = &fit.report;
        writeln!(
            w,
            "k={}: {} samples; {cells} cells: {} regression, {} weighted mean, {} nearest",
            i + 1,
            r.samples[i],
            r.regression[i],
            r.weighted_mean[i],
            r.nearest[i]
        )?;
    }
    writeln!(w, "shape {:?}", fit.q.shape())?;
    writeln!(w, "wrote {}", path.display())?;
    Ok(path)
}

/// Runs one episode and writes its log and plot. Returns the outcome; the
/// caller maps it to an exit status.
pub fn cmd_run(cfg: &ExperimentConfig, q_path: &Path, w: &mut dyn Write) -> Result<Outcome> {
    let q = read_qdyn(q_path)?;
    let run = run_episode(cfg, &q)?;
    let dir = out_dir(cfg)?;
    let ep = &run.episode;
    ep.log.save(&dir.join(EPISODE_FILE))?;
    let title = format!(
        "{} | alpha {} beta {} delta {}{} | seed {}",
        cfg.path,
        cfg.learner.alpha,
        cfg.learner.beta,
        cfg.delta,
        if cfg.disturb { " | disturbed" } else { "" },
        cfg.seed
    );
    let svg = trajectory_svg(&cfg.channel, &run.path.waypoints, &ep.log.rows, Some(ep.outcome), &title);
    write_text(&dir.join(TRAJECTORY_FILE), &svg)?;
    if let Some(d) = &run.detections {
        write_detections(&dir.join(DETECTIONS_FILE), d)?;
    }
    writeln!(
        w,
        "outcome: {} after {} steps ({} of {} waypoints)",
        ep.outcome,
        ep.log.rows.len(),
        ep.state.path.cursor,
        ep.state.path.len()
    )?;
    writeln!(w, "wrote {} and {}", dir.join(EPISODE_FILE).display(), dir.join(TRAJECTORY_FILE).display())?;
    Ok(ep.outcome)
}

pub struct VisionSummary {
    pub frames: usize,
    pub max_error: f64,
    pub mean_error: f64,
    pub detections: usize,
    pub misses: usize,
}

/// Renders a synthetic sequence, runs the pipeline on it and writes the
/// detections, the compressed frames, and the first full-resolution frame.
pub fn cmd_vision(cfg: &ExperimentConfig, w: &mut dyn Write) -> Result<VisionSummary> {
    let v = &cfg.vision;
    let seq = SequenceConfig {
        channel: cfg.channel,
        frames: v.frames,
        contaminants: v.contaminants,
        bubbles: v.bubbles,
        noise_sigma: v.noise_sigma,
        ..Default::default()
    };
    let scenes = synthetic_sequence(&seq, cfg.seed);
    let dir = out_dir(cfg)?;
    let frames_dir = dir.join("frames");
    fs::create_dir_all(&frames_dir).with_context(|| format!("cannot create {}", frames_dir.display()))?;
    let mut pipe = Pipeline::new(PipelineConfig { channel: cfg.channel, ..Default::default() });
    let mut rows = Vec::new();
    let (mut errors, mut misses, mut detects) = (Vec::new(), 0, 0);
    let mut busy = 0.0;
    for (i, scene) in scenes.iter().enumerate() {
        let hi = render_frame(scene, derive_seed(cfg.seed, i as u64), Exec::Parallel);
        if i == 0 {
            write_pgm16(&frames_dir.join("frame_0000_hi.pgm"), &hi)?;
        }
        let t = Instant::now();
        let lo = compress(&hi, Exec::Parallel);
        let d = pipe.process(&lo);
        busy += t.elapsed().as_secs_f64();
        write_pgm8(&frames_dir.join(format!("frame_{i:04}.pgm")), &lo)?;
        match d {
            Some(d) => {
                let truth = scene.swarm.expect("sequence scenes contain a swarm").center;
                errors.push(d.position().dist_sq(truth).sqrt());
                if d.source == Source::Detect {
                    detects += 1;
                }
                rows.push(d);
            }
            None => misses += 1,
        }
    }
    write_detections(&dir.join(DETECTIONS_FILE), &rows)?;
    let max_error = errors.iter().copied().fold(0.0, f64::max);
    let mean_error = errors.iter().sum::<f64>() / errors.len().max(1) as f64;
    writeln!(w, "frames: {} ({} detect, {} track, {} missed)", scenes.len(), detects, rows.len() - detects, misses)?;
    writeln!(w, "threshold: {}", pipe.threshold().map_or("-".into(), |t| t.to_string()))?;
    writeln!(w, "centroid error: mean {mean_error:.3} cells, max {max_error:.3} cells")?;
    writeln!(w, "compress + pipeline: {:.1} frames/s", scenes.len() as f64 / busy.max(1e-9))?;
    writeln!(w, "wrote {} and {}", dir.join(DETECTIONS_FILE).display(), frames_dir.display())?;
    Ok(VisionSummary { frames: scenes.len(), max_error, mean_error, detections: rows.len(), misses })
}

/// Waypoints in visit order, recovered from the log's target columns.
pub fn logged_waypoints(log: &EpisodeLog) -> Vec<GridPosition> {
    let mut out: Vec<GridPosition> = Vec::new();
    let mut last_cursor = None;
    for r in &log.rows {
        if last_cursor != Some(r.cursor) || out.is_empty() {
            let p = GridPosition::new(r.tx, r.ty);
            if out.last() != Some(&p) {
                out.push(p);
            }
            last_cursor = Some(r.cursor);
        }
    }
    out
}

pub fn cmd_replay(cfg: &ExperimentConfig, log_path: &Path, w: &mut dyn Write) -> Result<(PathBuf, PathBuf)> {
    let log = EpisodeLog::load(log_path)?;
    if log.rows.is_empty() {
        bail!("{}: episode log has no rows", log_path.display());
    }
    let dir = out_dir(cfg)?;
    let name = log_path.display().to_string();
    let traj = dir.join(REPLAY_TRAJECTORY_FILE);
    let errs = dir.join(REPLAY_ERRORS_FILE);
    write_text(&traj, &trajectory_svg(&cfg.channel, &logged_waypoints(&log), &log.rows, None, &name))?;
    write_text(&errs, &error_svg(&log.rows, &name))?;
    let third = (log.rows.len() / 3).max(1);
    let mean = |rows: &[swarm_core::policy::LogRow], f: fn(&swarm_core::policy::LogRow) -> f64| {
        rows.iter().map(f).sum::<f64>() / rows.len().max(1) as f64
    };
    let (head, tail) = (&log.rows[..third], &log.rows[log.rows.len() - third..]);
    writeln!(w, "steps: {}", log.rows.len())?;
    writeln!(
        w,
        "local error:  first third {:.2}, last third {:.2} cells/s",
        mean(head, |r| r.err_local),
        mean(tail, |r| r.err_local)
    )?;
    writeln!(
        w,
        "global error: first third {:.2}, last third {:.2} cells/s",
        mean(head, |r| r.err_global),
        mean(tail, |r| r.err_global)
    )?;
    writeln!(w, "wrote {} and {}", traj.display(), errs.display())?;
    Ok((traj, errs))
}
