//! Greedy one-step policy over the four canonical actions and the closed
//! navigation loop around it.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::action::N_TRANSDUCERS;
use crate::dynamics::{blended_at, init_local, update_local, DynamicsMatrix, History, LearnerConfig, Observation};
use crate::error::{Error, Result};
use crate::geometry::{DisplacementVector, GridPosition};
use crate::gridsearch::{csv_error, read_csv};
use crate::mt19937::Mt19937;
use crate::path::TargetPath;
use crate::plant::{Plant, SwarmState, FRAME_RATE};

pub const EPISODE_HEADER: &str = "n,t_s,x,y,tx,ty,k,pred_dx,pred_dy,obs_dx,obs_dy,err_local,err_global,cursor";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavigatorConfig {
    /// Seconds per control step.
    pub control_dt: f64,
    pub budget: usize,
    /// Steps without waypoint progress before the episode counts as stuck.
    pub stall_limit: usize,
}

impl Default for NavigatorConfig {
    fn default() -> Self {
        Self { control_dt: 1.0 / FRAME_RATE, budget: 5_000, stall_limit: 500 }
    }
}

impl NavigatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.control_dt > 0.0 && self.control_dt.is_finite()) {
            return Err(Error::Config(format!("control_dt must be positive, got {}", self.control_dt)));
        }
        if self.stall_limit == 0 {
            return Err(Error::Config("stall_limit must be at least 1".into()));
        }
        Ok(())
    }

    /// Plant frames per control step and the length of each.
    pub fn frames(&self) -> (usize, f64) {
        let n = ((self.control_dt * FRAME_RATE).round() as usize).max(1);
        (n, self.control_dt / n as f64)
    }
}

/// Index (1-based) of the action whose predicted landing point is closest
/// to `target`. Ties go to the lowest index.
pub fn choose_from(
    predicted: &[DisplacementVector; N_TRANSDUCERS],
    swarm: GridPosition,
    target: GridPosition,
    control_dt: f64,
) -> u8 {
    let mut best = (f64::INFINITY, 1u8);
    for (i, v) in predicted.iter().enumerate() {
        let d = target.dist_sq(swarm + *v * control_dt);
        if d < best.0 {
            best = (d, i as u8 + 1);
        }
    }
    best.1
}

pub fn choose_pzt(q: &DynamicsMatrix, swarm: GridPosition, target: GridPosition, control_dt: f64) -> u8 {
    let predicted = std::array::from_fn(|i| q.at(swarm, i as u8 + 1));
    choose_from(&predicted, swarm, target, control_dt)
}

/// Where the controller believes the swarm is.
pub trait Observer {
    fn observe(&mut self, swarm: &SwarmState, plant: &Plant) -> GridPosition;
}

/// Reads the plant's centroid directly.
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectObserver;

impl Observer for DirectObserver {
    fn observe(&mut self, swarm: &SwarmState, _plant: &Plant) -> GridPosition {
        swarm.centroid
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavigatorState {
    pub n: usize,
    pub swarm: SwarmState,
    pub observed: GridPosition,
    pub path: TargetPath,
    pub q_local: DynamicsMatrix,
    pub history: History,
}

impl NavigatorState {
    pub fn new(
        swarm: SwarmState,
        observed: GridPosition,
        path: TargetPath,
        grid_n: usize,
        learner: &LearnerConfig,
    ) -> Self {
        Self {
            n: 0,
            swarm,
            observed,
            path,
            q_local: init_local(grid_n, learner.init_value),
            history: History::new(learner.window_m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub n: usize,
    pub t_s: f64,
    pub x: f64,
    pub y: f64,
    pub tx: f64,
    pub ty: f64,
    pub k: u8,
    pub pred_dx: f64,
    pub pred_dy: f64,
    pub obs_dx: f64,
    pub obs_dy: f64,
    pub err_local: f64,
    pub err_global: f64,
    pub cursor: usize,
}

/// The loop's dependencies that stay fixed over an episode.
#[derive(Debug, Clone, Copy)]
pub struct Loop<'a> {
    pub q_global: &'a DynamicsMatrix,
    pub plant: &'a Plant,
    pub learner: &'a LearnerConfig,
    pub nav: &'a NavigatorConfig,
}

/// One pass of observe, choose, actuate, learn, advance.
pub fn control_step(state: &mut NavigatorState, ctx: &Loop, rng: &mut Mt19937, observer: &mut dyn Observer) -> LogRow {
    let target = state.path.current().expect("control_step needs an incomplete path");
    let p = state.observed;
    let beta = ctx.learner.beta;
    let predicted: [DisplacementVector; N_TRANSDUCERS] =
        std::array::from_fn(|i| blended_at(ctx.q_global, &state.q_local, beta, p, i as u8 + 1));
    let k = choose_from(&predicted, p, target, ctx.nav.control_dt);
    let action = ctx.plant.config().canonical_actions()[k as usize - 1];

    let (frames, dt) = ctx.nav.frames();
    for _ in 0..frames {
        state.swarm = ctx.plant.transport_step(&state.swarm, &action, dt, rng);
    }
    let seen = observer.observe(&state.swarm, ctx.plant);
    let velocity = (seen - p) * (1.0 / ctx.nav.control_dt);
    state.history.push(Observation { position: p, k, velocity });
    update_local(&mut state.q_local, &state.history.to_vec(), ctx.learner.alpha, ctx.learner.update_radius_cells);
    state.observed = seen;
    state.path.advance(seen);

    let pred = predicted[k as usize - 1];
    let row = LogRow {
        n: state.n,
        t_s: state.n as f64 * ctx.nav.control_dt,
        x: p.x,
        y: p.y,
        tx: target.x,
        ty: target.y,
        k,
        pred_dx: pred.dx,
        pred_dy: pred.dy,
        obs_dx: velocity.dx,
        obs_dy: velocity.dy,
        err_local: (pred - velocity).norm(),
        err_global: (ctx.q_global.at(p, k) - velocity).norm(),
        cursor: state.path.cursor,
    };
    state.n += 1;
    row
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Stuck,
    BudgetExceeded,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Success => "success",
            Outcome::Stuck => "stuck",
            Outcome::BudgetExceeded => "budget_exceeded",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeLog {
    pub rows: Vec<LogRow>,
}

impl EpisodeLog {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{EPISODE_HEADER}").map_err(|e| Error::io(path, e))?;
        let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for r in &self.rows {
            csv.serialize(r).map_err(|e| csv_error(path, e))?;
        }
        csv.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self { rows: read_csv(path, EPISODE_HEADER)? })
    }
}

/// Result of a navigation episode.
#[derive(Debug, Clone)]
pub struct Episode {
    pub log: EpisodeLog,
    pub outcome: Outcome,
    pub state: NavigatorState,
}

/// Runs the loop until the path is complete, the step budget is spent, or
/// `stall_limit` steps pass without the cursor moving.
pub fn run_path(
    swarm: SwarmState,
    path: TargetPath,
    ctx: &Loop,
    seed: u32,
    observer: &mut dyn Observer,
) -> Result<Episode> {
    ctx.nav.validate()?;
    ctx.learner.validate()?;
    let grid_n = ctx.plant.channel().grid_n;
    if ctx.q_global.grid_n() != grid_n {
        return Err(Error::Config(format!(
            "global matrix is {0}x{0} but the channel grid is {1}x{1}",
            ctx.q_global.grid_n(),
            grid_n
        )));
    }
    let mut rng = Mt19937::new(seed);
    let observed = observer.observe(&swarm, ctx.plant);
    let mut state = NavigatorState::new(swarm, observed, path, grid_n, ctx.learner);
    state.path.advance(observed);
    let mut log = EpisodeLog::default();
    let mut last_cursor = state.path.cursor;
    let mut since_progress = 0;
    let outcome = loop {
        if state.path.is_complete() {
            break Outcome::Success;
        }
        if state.n >= ctx.nav.budget {
            break Outcome::BudgetExceeded;
        }
        if since_progress >= ctx.nav.stall_limit {
            break Outcome::Stuck;
        }
        log.rows.push(control_step(&mut state, ctx, &mut rng, observer));
        if state.path.cursor > last_cursor {
            last_cursor = state.path.cursor;
            since_progress = 0;
        } else {
            since_progress += 1;
        }
    };
    Ok(Episode { log, outcome, state })
}
