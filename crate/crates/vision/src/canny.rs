//! Canny edge detector: Sobel gradients, non-maximum suppression quantised to
//! four directions, double threshold, 8-connected hysteresis.

use crate::image::Image;

pub const DEFAULT_CANNY_LOW: f32 = 50.0;
pub const DEFAULT_CANNY_HIGH: f32 = 150.0;

/// 3x3 Sobel derivatives with replicate borders.
pub fn sobel(img: &Image<f32>) -> (Image<f32>, Image<f32>) {
    let (w, h) = (img.width(), img.height());
    let mut gx = Image::filled(w, h, 0.0f32);
    let mut gy = Image::filled(w, h, 0.0f32);
    for y in 0..h {
        let yi = y as isize;
        for x in 0..w {
            let xi = x as isize;
            let p = |dx: isize, dy: isize| img.get_clamped(xi + dx, yi + dy);
            let dx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let dy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            gx.set(x, y, dx);
            gy.set(x, y, dy);
        }
    }
    (gx, gy)
}

/// Edge map with edges at 255. `low < high` is expected; the thresholds are
/// swapped otherwise.
pub fn canny(img: &Image<f32>, low: f32, high: f32) -> Image<u8> {
    let (low, high) = if low <= high { (low, high) } else { (high, low) };
    let (w, h) = (img.width(), img.height());
    let (gx, gy) = sobel(img);
    let mag: Vec<f32> = gx.data().iter().zip(gy.data()).map(|(a, b)| a.hypot(*b)).collect();
    let m = |x: isize, y: isize| -> f32 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };

    let tan22 = (std::f32::consts::PI / 8.0).tan();
    let tan67 = (3.0 * std::f32::consts::PI / 8.0).tan();
    // 0 = suppressed, 1 = weak, 2 = strong
    let mut class = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let v = mag[i];
            if v <= low {
                continue;
            }
            let (dx, dy) = (gx.data()[i], gy.data()[i]);
            let (ax, ay) = (dx.abs(), dy.abs());
            let (xi, yi) = (x as isize, y as isize);
            // Neighbours along the gradient; strict on one side, non-strict on
            // the other, so a plateau of two equal maxima keeps one pixel.
            let (a, b) = if ay <= tan22 * ax {
                (m(xi - 1, yi), m(xi + 1, yi))
            } else if ay > tan67 * ax {
                (m(xi, yi - 1), m(xi, yi + 1))
            } else if (dx > 0.0) == (dy > 0.0) {
                (m(xi - 1, yi - 1), m(xi + 1, yi + 1))
            } else {
                (m(xi + 1, yi - 1), m(xi - 1, yi + 1))
            };
            if v > a && v >= b {
                class[i] = if v >= high { 2 } else { 1 };
            }
        }
    }

    let mut out = Image::filled(w, h, 0u8);
    let mut stack: Vec<usize> = (0..w * h).filter(|&i| class[i] == 2).collect();
    for &i in &stack {
        out.data_mut()[i] = 255;
    }
    while let Some(i) = stack.pop() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if class[j] == 1 && out.data()[j] == 0 {
                    out.data_mut()[j] = 255;
                    stack.push(j);
                }
            }
        }
    }
    out
}
