//! Action-space sweep: 6 voltages x 41 frequencies x 4 transducers, each held
//! for 99 frames on a freshly coalesced swarm.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::action::{ActionSpec, MAX_VPP, N_TRANSDUCERS};
use crate::error::{Error, Result};
use crate::geometry::GridPosition;
use crate::mt19937::{derive_seed, Mt19937};
use crate::par::{map_range, Exec};
use crate::plant::{Plant, BUBBLE_RADIUS_UM, FRAME_RATE};

pub const VOLTAGES: [f64; 6] = [10.0, 12.0, 14.0, 16.0, 18.0, 20.0];
pub const N_FREQUENCIES: usize = 41;
pub const FRAMES_PER_COMBO: usize = 99;
pub const MAX_RETRIES: usize = 3;
pub const DATASET_HEADER: &str = "combo_id,k,f_mhz,v_pp,frame_idx,t_s,x,y,dx_dt,dy_dt";

/// Frequency `i` of the sweep, computed from integers so 2.0 is exact.
pub fn frequency(i: usize) -> f64 {
    (1500 + 25 * i) as f64 / 1000.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Combo {
    pub id: usize,
    pub action: ActionSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    pub voltages: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub transducers: Vec<u8>,
}

impl SearchGrid {
    pub fn len(&self) -> usize {
        self.voltages.len() * self.frequencies.len() * self.transducers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All combinations, transducer-major, then frequency, then voltage.
    pub fn combos(&self) -> Vec<Combo> {
        let mut out = Vec::with_capacity(self.len());
        for &k in &self.transducers {
            for &f in &self.frequencies {
                for &v in &self.voltages {
                    let action = ActionSpec::new(k, v, f).expect("grid values are valid");
                    out.push(Combo { id: out.len(), action });
                }
            }
        }
        out
    }
}

pub fn enumerate_grid() -> SearchGrid {
    SearchGrid {
        voltages: VOLTAGES.to_vec(),
        frequencies: (0..N_FREQUENCIES).map(frequency).collect(),
        transducers: (1..=N_TRANSDUCERS as u8).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub combo_id: usize,
    pub k: u8,
    pub f_mhz: f64,
    pub v_pp: f64,
    pub frame_idx: u32,
    pub t_s: f64,
    pub x: f64,
    pub y: f64,
    pub dx_dt: f64,
    pub dy_dt: f64,
}

impl DatasetRecord {
    pub fn position(&self) -> GridPosition {
        GridPosition::new(self.x, self.y)
    }

    pub fn speed(&self) -> f64 {
        self.dx_dt.hypot(self.dy_dt)
    }
}

/// How each combo's swarm is prepared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub n_bubbles: usize,
    pub cloud_radius_cells: f64,
    pub bubble_radius_um: (f64, f64),
    pub max_coalesce_steps: usize,
    pub exec: Exec,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_bubbles: 12,
            cloud_radius_cells: 15.0,
            bubble_radius_um: (5.0, BUBBLE_RADIUS_UM.1),
            max_coalesce_steps: 2_000,
            exec: Exec::default(),
        }
    }
}

/// Starting point for a combo. The coordinate along the push direction sits
/// far enough upstream that a 3 s push at `top_v_pp`, on resonance, stays off
/// the far wall.
fn start_position(plant: &Plant, k: u8, top_v_pp: f64, rng: &mut Mt19937) -> GridPosition {
    let max = plant.channel().max_coord();
    let travel = (top_v_pp / MAX_VPP) * plant.config().v_max_cells_per_s * FRAMES_PER_COMBO as f64 / FRAME_RATE;
    let margin = 10.0;
    let hi = (max - margin - travel).max(margin + 1.0);
    let along = rng.uniform(margin, hi);
    let across = rng.uniform(margin, max - margin);
    match k {
        1 => GridPosition::new(along, across),
        2 => GridPosition::new(max - along, across),
        3 => GridPosition::new(across, along),
        _ => GridPosition::new(across, max - along),
    }
}

/// One combo. The swarm is prepared from a stream shared by every voltage of
/// the same (k, f) pair, so voltages are compared from the same start; the
/// transport noise has its own per-combo stream.
fn run_combo(plant: &Plant, sweep: &SweepConfig, combo: &Combo, group: Group, seed: u32) -> Result<Vec<DatasetRecord>> {
    let dt = plant.frame_dt();
    let clock = (combo.id * FRAMES_PER_COMBO) as u64;
    let group_clock = (group.first_id * FRAMES_PER_COMBO) as u64;
    let mut noise = Mt19937::new(derive_seed(derive_seed(seed, NOISE_STREAM), combo.id as u64));
    for attempt in 0..=MAX_RETRIES {
        let stream = (group.index as u64) << 8 | attempt as u64;
        let mut rng = Mt19937::new(derive_seed(seed, stream));
        let center = start_position(plant, combo.action.k, group.top_v_pp, &mut rng);
        let bubbles =
            plant.seed_bubbles(&mut rng, sweep.n_bubbles, center, sweep.cloud_radius_cells, sweep.bubble_radius_um);
        let Ok(formed) = plant.coalesce(bubbles, &mut rng, group_clock, sweep.max_coalesce_steps) else {
            continue;
        };
        let mut state = formed.swarm;
        state.step = clock;
        let mut out = Vec::with_capacity(FRAMES_PER_COMBO);
        for j in 0..FRAMES_PER_COMBO {
            let next = plant.transport_step(&state, &combo.action, dt, &mut noise);
            out.push(DatasetRecord {
                combo_id: combo.id,
                k: combo.action.k,
                f_mhz: combo.action.f_mhz,
                v_pp: combo.action.v_pp,
                frame_idx: j as u32,
                t_s: j as f64 / FRAME_RATE,
                x: state.centroid.x,
                y: state.centroid.y,
                dx_dt: (next.centroid.x - state.centroid.x) / dt,
                dy_dt: (next.centroid.y - state.centroid.y) / dt,
            });
            state = next;
        }
        return Ok(out);
    }
    Err(Error::CollectFailed { combo_id: combo.id, attempts: MAX_RETRIES + 1 })
}

const NOISE_STREAM: u64 = 0x6e_6f69_7365;

/// The (k, f) pair a combo belongs to.
#[derive(Debug, Clone, Copy)]
struct Group {
    index: usize,
    first_id: usize,
    top_v_pp: f64,
}

/// Runs the sweep. Combos are independent, seeded from `seed` and their own
/// indices, so the result is the same for every execution strategy.
pub fn collect(grid: &SearchGrid, plant: &Plant, sweep: &SweepConfig, seed: u32) -> Result<Vec<DatasetRecord>> {
    let combos = grid.combos();
    let n_v = grid.voltages.len().max(1);
    let top_v_pp = grid.voltages.iter().copied().fold(0.0, f64::max);
    let per_combo = map_range(sweep.exec, combos.len(), |i| {
        let group = Group { index: i / n_v, first_id: i / n_v * n_v, top_v_pp };
        run_combo(plant, sweep, &combos[i], group, seed)
    });
    let mut records = Vec::with_capacity(combos.len() * FRAMES_PER_COMBO);
    for r in per_combo {
        records.extend(r?);
    }
    Ok(records)
}

pub fn save_dataset(records: &[DatasetRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{DATASET_HEADER}").map_err(|e| Error::io(path, e))?;
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for r in records {
        csv.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    csv.flush().map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: &Path) -> Result<Vec<DatasetRecord>> {
    read_csv(path, DATASET_HEADER)
}

pub(crate) fn read_csv<T: serde::de::DeserializeOwned>(path: &Path, header: &str) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let found = rdr.headers().map_err(|e| csv_error(path, e))?.iter().collect::<Vec<_>>().join(",");
    if found != header {
        return Err(Error::Header { path: path.into(), expected: header.into(), found });
    }
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row.map_err(|e| csv_error(path, e))?);
    }
    Ok(out)
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        csv::ErrorKind::Deserialize { err, .. } => Error::Row { path: path.into(), line, message: err.to_string() },
        other => Error::Row { path: path.into(), line, message: format!("{other:?}") },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ChannelConfig;
    use crate::plant::PlantConfig;

    #[test]
    fn grid_has_984_combos_in_order() {
        let g = enumerate_grid();
        assert_eq!(g.len(), 984);
        let c = g.combos();
        assert_eq!(c.len(), 984);
        let first = c[0].action;
        assert_eq!((first.k, first.f_mhz, first.v_pp), (1, 1.5, 10.0));
        let last = c[983].action;
        assert_eq!((last.k, last.f_mhz, last.v_pp), (4, 2.5, 20.0));
        assert!(g.frequencies.contains(&2.0));
        assert_eq!(g.frequencies[20], 2.0);
        assert_eq!(g.frequencies[29], 2.225);
        assert!(c.iter().enumerate().all(|(i, c)| c.id == i));
    }

    fn small_grid() -> SearchGrid {
        SearchGrid { voltages: vec![20.0], frequencies: vec![2.0, 2.25], transducers: vec![1, 2] }
    }

    #[test]
    fn on_resonance_is_faster_than_detuned() {
        let plant = Plant::new(PlantConfig::default(), ChannelConfig::default()).unwrap();
        let recs = collect(&small_grid(), &plant, &SweepConfig::default(), 7).unwrap();
        assert_eq!(recs.len(), 4 * FRAMES_PER_COMBO);
        let mean = |id: usize| {
            let r: Vec<_> = recs.iter().filter(|r| r.combo_id == id).collect();
            r.iter().map(|r| r.speed()).sum::<f64>() / r.len() as f64
        };
        assert!(mean(0) > mean(1));
        assert!(mean(2) > mean(3));
    }

    #[test]
    fn zero_noise_velocity_is_the_euler_step() {
        let cfg = PlantConfig { responsiveness_decay: 1.0, ..PlantConfig::default().zero_noise() };
        let plant = Plant::new(cfg, ChannelConfig::default()).unwrap();
        let recs = collect(&small_grid(), &plant, &SweepConfig::default(), 3).unwrap();
        for r in &recs {
            let a = ActionSpec::new(r.k, r.v_pp, r.f_mhz).unwrap();
            let t = (r.combo_id * FRAMES_PER_COMBO) as u64 + r.frame_idx as u64;
            let v = plant.ground_truth_velocity(r.position(), &a, t);
            let next = GridPosition::new(r.x + r.dx_dt / 33.0, r.y + r.dy_dt / 33.0);
            if plant.channel().contains(next) && next.x > 0.0 && next.y > 0.0 && next.x < 299.0 && next.y < 299.0 {
                assert!((r.dx_dt - v.dx).abs() <= 1e-9 && (r.dy_dt - v.dy).abs() <= 1e-9, "{r:?} vs {v:?}");
            }
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let plant = Plant::new(PlantConfig::default(), ChannelConfig::default()).unwrap();
        let seq = SweepConfig { exec: Exec::Sequential, ..Default::default() };
        let par = SweepConfig { exec: Exec::Parallel, ..Default::default() };
        let a = collect(&small_grid(), &plant, &seq, 11).unwrap();
        let b = collect(&small_grid(), &plant, &par, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let plant = Plant::new(PlantConfig::default(), ChannelConfig::default()).unwrap();
        let recs = collect(&small_grid(), &plant, &SweepConfig::default(), 5).unwrap();
        save_dataset(&recs, &path).unwrap();
        assert_eq!(load_dataset(&path).unwrap(), recs);

        save_dataset(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), format!("{DATASET_HEADER}\n"));
        assert!(load_dataset(&path).unwrap().is_empty());

        std::fs::write(&path, format!("{DATASET_HEADER}\n0,1,2,20,0,0,5,5,1,1\n0,1,2,20,1,0.03,5,5,abc,1\n")).unwrap();
        match load_dataset(&path) {
            Err(Error::Row { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected row error, got {other:?}"),
        }

        std::fs::write(&path, "combo,k\n").unwrap();
        assert!(matches!(load_dataset(&path), Err(Error::Header { .. })));
    }
}
