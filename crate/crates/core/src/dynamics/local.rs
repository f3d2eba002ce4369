use std::collections::{BTreeMap, VecDeque};

use super::{DynamicsMatrix, MatrixKind};
use crate::geometry::{DisplacementVector, GridPosition};

/// One observed step: where the action was taken, which transducer, and the
/// resulting velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub position: GridPosition,
    pub k: u8,
    pub velocity: DisplacementVector,
}

/// The last `window_m` observations, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    cap: usize,
    items: VecDeque<Observation>,
}

impl History {
    pub fn new(window_m: usize) -> Self {
        assert!(window_m > 0, "window must hold at least one observation");
        Self { cap: window_m, items: VecDeque::with_capacity(window_m) }
    }

    pub fn push(&mut self, o: Observation) {
        if self.items.len() == self.cap {
            self.items.pop_front();
        }
        self.items.push_back(o);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Observation> {
        self.items.iter()
    }

    pub fn to_vec(&self) -> Vec<Observation> {
        self.items.iter().copied().collect()
    }
}

pub fn init_local(grid_n: usize, value: f64) -> DynamicsMatrix {
    DynamicsMatrix::filled(grid_n, MatrixKind::Local, value)
}

/// EMA update toward the window mean of observed velocities.
///
/// With `radius == 0` only the cell containing each observation is touched,
/// and its target is the mean over observations in that cell. With a positive
/// radius every cell centre within `radius` of an observation is touched, and
/// its target is the mean over observations within `radius` of it. Entries for
/// other cells and other transducers are left bit-identical.
pub fn update_local(q: &mut DynamicsMatrix, history: &[Observation], alpha: f64, radius: f64) {
    if alpha == 0.0 || history.is_empty() {
        return;
    }
    let n = q.grid_n();
    let max = (n - 1) as f64;
    let mut targets: BTreeMap<(u8, usize, usize), (DisplacementVector, usize)> = BTreeMap::new();
    for o in history {
        if radius == 0.0 {
            let (ix, iy) = o.position.cell(n);
            let e = targets.entry((o.k, iy, ix)).or_insert((DisplacementVector::ZERO, 0));
            e.0 = e.0 + o.velocity;
            e.1 += 1;
            continue;
        }
        let r2 = radius * radius;
        let x0 = (o.position.x - radius).ceil().max(0.0) as usize;
        let x1 = (o.position.x + radius).floor().min(max) as usize;
        let y0 = (o.position.y - radius).ceil().max(0.0) as usize;
        let y1 = (o.position.y + radius).floor().min(max) as usize;
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                let c = GridPosition::new(ix as f64, iy as f64);
                if c.dist_sq(o.position) <= r2 {
                    let e = targets.entry((o.k, iy, ix)).or_insert((DisplacementVector::ZERO, 0));
                    e.0 = e.0 + o.velocity;
                    e.1 += 1;
                }
            }
        }
    }
    for ((k, iy, ix), (sum, count)) in targets {
        let target = sum * (1.0 / count as f64);
        let old = q.get(ix, iy, k);
        let new = if alpha == 1.0 { target } else { old * (1.0 - alpha) + target * alpha };
        q.set(ix, iy, k, new);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn obs(x: f64, y: f64, k: u8, dx: f64, dy: f64) -> Observation {
        Observation { position: GridPosition::new(x, y), k, velocity: DisplacementVector::new(dx, dy) }
    }

    #[test]
    fn init_fills() {
        let q = init_local(300, 0.0);
        assert_eq!(q.shape(), [300, 300, 2, 4]);
        assert!(q.values().iter().all(|&v| v == 0.0));
        assert!(init_local(10, 1.5).values().iter().all(|&v| v == 1.5));
        assert_eq!(init_local(10, 1.5), init_local(10, 1.5));
    }

    #[test]
    fn alpha_zero_is_identity() {
        let mut q = init_local(20, 0.3);
        let before = q.clone();
        update_local(&mut q, &[obs(5.0, 5.0, 1, 9.0, 9.0)], 0.0, 0.0);
        assert_eq!(q, before);
    }

    #[test]
    fn alpha_one_copies_observation() {
        let mut q = init_local(20, 0.0);
        update_local(&mut q, &[obs(7.2, 3.9, 2, 3.0, -2.0)], 1.0, 0.0);
        assert_eq!(q.get(7, 4, 2), DisplacementVector::new(3.0, -2.0));
    }

    #[test]
    fn small_alpha_step() {
        let mut q = init_local(20, 0.0);
        let h = [obs(4.0, 4.0, 1, 8.0, 0.0), obs(4.1, 4.2, 1, 12.0, 0.0)];
        update_local(&mut q, &h, 0.05, 0.0);
        assert!((q.get(4, 4, 1).dx - 0.5).abs() < 1e-15);
    }

    #[test]
    fn radius_reaches_neighbours_only() {
        let mut q = init_local(20, 0.0);
        update_local(&mut q, &[obs(10.0, 10.0, 3, 0.0, 4.0)], 1.0, 2.0);
        assert_eq!(q.get(12, 10, 3), DisplacementVector::new(0.0, 4.0));
        assert_eq!(q.get(11, 11, 3), DisplacementVector::new(0.0, 4.0));
        assert_eq!(q.get(12, 11, 3), DisplacementVector::ZERO);
        assert_eq!(q.get(10, 10, 1), DisplacementVector::ZERO);
    }

    #[test]
    fn history_keeps_last_m() {
        let mut h = History::new(3);
        for i in 0..5 {
            h.push(obs(i as f64, 0.0, 1, 0.0, 0.0));
        }
        let xs: Vec<f64> = h.iter().map(|o| o.position.x).collect();
        assert_eq!(xs, vec![2.0, 3.0, 4.0]);
    }

    proptest! {
        #[test]
        fn untouched_entries_are_bit_identical(
            pts in proptest::collection::vec((0.0f64..29.0, 0.0f64..29.0, 1u8..=4, -80.0f64..80.0, -80.0f64..80.0), 1..6),
            alpha in 0.0f64..=1.0,
            radius in prop_oneof![Just(0.0), 0.5f64..4.0],
        ) {
            let base = {
                let vals: Vec<f64> = (0..30 * 30 * 8).map(|i| (i as f64 * 0.37).sin()).collect();
                DynamicsMatrix::from_values(30, MatrixKind::Local, vals).unwrap()
            };
            let h: Vec<_> = pts.iter().map(|&(x, y, k, dx, dy)| obs(x, y, k, dx, dy)).collect();
            let mut q = base.clone();
            update_local(&mut q, &h, alpha, radius);
            for iy in 0..30 {
                for ix in 0..30 {
                    for k in 1..=4u8 {
                        let c = GridPosition::new(ix as f64, iy as f64);
                        let reached = h.iter().any(|o| o.k == k && if radius == 0.0 {
                            o.position.cell(30) == (ix, iy)
                        } else {
                            c.dist_sq(o.position) <= radius * radius
                        });
                        if !reached {
                            let (a, b) = (q.get(ix, iy, k), base.get(ix, iy, k));
                            prop_assert_eq!(a.dx.to_bits(), b.dx.to_bits());
                            prop_assert_eq!(a.dy.to_bits(), b.dy.to_bits());
                        }
                    }
                }
            }
        }

        #[test]
        fn geometric_convergence(q0 in -50.0f64..50.0, v in -50.0f64..50.0, alpha in 0.01f64..0.99, n in 1usize..60) {
            let mut q = init_local(4, q0);
            let h = [obs(1.0, 1.0, 1, v, 0.0)];
            for _ in 0..n {
                update_local(&mut q, &h, alpha, 0.0);
            }
            let want = v + (1.0 - alpha).powi(n as i32) * (q0 - v);
            let got = q.get(1, 1, 1).dx;
            prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0));
        }
    }
}
