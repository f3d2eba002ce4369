//! Suzuki-Abe border following. Only the outermost outer borders are
//! returned; each carries the raw moments of the region it encloses.

use crate::image::Image;

#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    /// Border pixels `(x, y)` in following order.
    pub points: Vec<(usize, usize)>,
    pub m00: f64,
    pub m10: f64,
    pub m01: f64,
}

impl Contour {
    pub fn area(&self) -> f64 {
        self.m00
    }

    pub fn centroid(&self) -> (f64, f64) {
        (self.m10 / self.m00, self.m01 / self.m00)
    }

    /// Diameter of the disk with the same area, in pixels.
    pub fn equivalent_diameter(&self) -> f64 {
        2.0 * (self.m00 / std::f64::consts::PI).sqrt()
    }
}

// Clockwise with y pointing down: E, SE, S, SW, W, NW, N, NE.
const DIRS: [(isize, isize); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

fn dir_of(from: (usize, usize), to: (usize, usize)) -> usize {
    let d = (to.0 as isize - from.0 as isize, to.1 as isize - from.1 as isize);
    DIRS.iter().position(|&x| x == d).expect("neighbouring pixels")
}

fn step(p: (usize, usize), d: usize) -> (usize, usize) {
    ((p.0 as isize + DIRS[d].0) as usize, (p.1 as isize + DIRS[d].1) as usize)
}

struct Border {
    is_hole: bool,
    parent: i32,
}

/// Outer borders of the nonzero regions of `edges` that are not nested inside
/// another region's hole. Borders with fewer than 3 pixels are dropped.
pub fn contours(edges: &Image<u8>) -> Vec<Contour> {
    let (w, h) = (edges.width(), edges.height());
    let pw = w + 2;
    // Padded label image (x, y) -> f[y * pw + x]; the frame is a hole border.
    let mut f = vec![0i32; pw * (h + 2)];
    for y in 0..h {
        for x in 0..w {
            if edges.get(x, y) != 0 {
                f[(y + 1) * pw + x + 1] = 1;
            }
        }
    }
    let at = |f: &[i32], p: (usize, usize)| f[p.1 * pw + p.0];

    let mut borders = vec![Border { is_hole: true, parent: 0 }, Border { is_hole: true, parent: 0 }];
    let mut out = Vec::new();
    let mut nbd: i32 = 1;
    for y in 1..=h {
        let mut lnbd: i32 = 1;
        for x in 1..=w {
            let v = f[y * pw + x];
            let start = if v == 1 && f[y * pw + x - 1] == 0 {
                Some((false, (x - 1, y)))
            } else if v >= 1 && f[y * pw + x + 1] == 0 {
                if v > 1 {
                    lnbd = v;
                }
                Some((true, (x + 1, y)))
            } else {
                None
            };
            if let Some((is_hole, from)) = start {
                nbd += 1;
                let prev = &borders[lnbd as usize];
                let parent = if prev.is_hole == is_hole { prev.parent } else { lnbd };
                borders.push(Border { is_hole, parent });
                let points = follow(&mut f, pw, (x, y), from, nbd);
                if !is_hole && parent == 1 && points.len() >= 3 {
                    let pts: Vec<(usize, usize)> = points.iter().map(|&(px, py)| (px - 1, py - 1)).collect();
                    out.push(region_moments(pts));
                }
            }
            let v = at(&f, (x, y));
            if v != 0 && v != 1 {
                lnbd = v.abs();
            }
        }
    }
    out
}

/// Follows one border starting at `start`, entering from the zero pixel `from`.
fn follow(f: &mut [i32], pw: usize, start: (usize, usize), from: (usize, usize), nbd: i32) -> Vec<(usize, usize)> {
    let idx = |p: (usize, usize)| p.1 * pw + p.0;
    let d0 = dir_of(start, from);
    let first = (0..8).map(|k| (d0 + k) % 8).map(|d| step(start, d)).find(|&p| f[idx(p)] != 0);
    let Some(p1) = first else {
        f[idx(start)] = -nbd;
        return vec![start];
    };
    let mut points = Vec::new();
    let (mut p2, mut p3) = (p1, start);
    loop {
        let d = dir_of(p3, p2);
        let mut east_zero = false;
        let mut p4 = p3;
        for k in 1..=8 {
            let dk = (d + 8 - k) % 8;
            let q = step(p3, dk);
            if f[idx(q)] != 0 {
                p4 = q;
                break;
            }
            if dk == 0 {
                east_zero = true;
            }
        }
        if east_zero {
            f[idx(p3)] = -nbd;
        } else if f[idx(p3)] == 1 {
            f[idx(p3)] = nbd;
        }
        points.push(p3);
        if p4 == start && p3 == p1 {
            break;
        }
        p2 = p3;
        p3 = p4;
    }
    points
}

/// Moments of the pixels on or inside a closed border: everything in the
/// bounding box that a 4-connected flood from outside cannot reach.
fn region_moments(points: Vec<(usize, usize)>) -> Contour {
    let x0 = points.iter().map(|p| p.0).min().unwrap();
    let x1 = points.iter().map(|p| p.0).max().unwrap();
    let y0 = points.iter().map(|p| p.1).min().unwrap();
    let y1 = points.iter().map(|p| p.1).max().unwrap();
    let bw = x1 - x0 + 3;
    let bh = y1 - y0 + 3;
    // 0 = unknown, 1 = border, 2 = outside
    let mut m = vec![0u8; bw * bh];
    for &(x, y) in &points {
        m[(y - y0 + 1) * bw + (x - x0 + 1)] = 1;
    }
    let mut stack = vec![0usize];
    m[0] = 2;
    while let Some(i) = stack.pop() {
        let (x, y) = (i % bw, i / bw);
        let mut push = |j: usize| {
            if m[j] == 0 {
                m[j] = 2;
                stack.push(j);
            }
        };
        if x > 0 {
            push(i - 1);
        }
        if x + 1 < bw {
            push(i + 1);
        }
        if y > 0 {
            push(i - bw);
        }
        if y + 1 < bh {
            push(i + bw);
        }
    }
    let (mut m00, mut m10, mut m01) = (0.0, 0.0, 0.0);
    for (i, &v) in m.iter().enumerate() {
        if v != 2 {
            let x = (i % bw + x0) as f64 - 1.0;
            let y = (i / bw + y0) as f64 - 1.0;
            m00 += 1.0;
            m10 += x;
            m01 += y;
        }
    }
    Contour { points, m00, m10, m01 }
}
