use crate::image::{FrameLo, Image};

/// Pixels darker than `t` become foreground (255); the rest background (0).
pub fn threshold(f: &FrameLo, t: u8) -> Image<u8> {
    f.map(|v| if v < t { 255 } else { 0 })
}

/// Otsu's threshold over the pooled histogram of `frames`: the `t` that
/// splits intensities into `< t` and `>= t` with the least within-class
/// variance (ties to the lowest `t`). A single-valued histogram returns that
/// value, which classifies everything as background.
pub fn otsu_threshold<'a, I>(frames: I) -> u8
where
    I: IntoIterator<Item = &'a FrameLo>,
{
    let mut hist = [0u64; 256];
    for f in frames {
        for &v in f.data() {
            hist[v as usize] += 1;
        }
    }
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return 0;
    }
    let sum_all: f64 = hist.iter().enumerate().map(|(v, &c)| v as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0u64, 0.0f64);
    let mut best: Option<(f64, u8)> = None;
    for t in 1..256usize {
        w0 += hist[t - 1];
        sum0 += (t - 1) as f64 * hist[t - 1] as f64;
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let m0 = sum0 / w0 as f64;
        let m1 = (sum_all - sum0) / w1 as f64;
        // Maximising between-class variance minimises within-class variance.
        let between = w0 as f64 * w1 as f64 * (m0 - m1).powi(2);
        if best.is_none_or(|(b, _)| between > b) {
            best = Some((between, t as u8));
        }
    }
    match best {
        Some((_, t)) => t,
        None => hist.iter().position(|&c| c > 0).unwrap_or(0) as u8,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_frame_is_background() {
        let f = Image::filled(8, 8, 200u8);
        assert!(threshold(&f, 100).data().iter().all(|&v| v == 0));
        assert_eq!(otsu_threshold([&f]), 200);
        assert!(threshold(&f, otsu_threshold([&f])).data().iter().all(|&v| v == 0));
    }

    #[test]
    fn dark_disk_is_foreground() {
        let mut f = Image::filled(40, 40, 220u8);
        let inside = |x: usize, y: usize| (x as f64 - 20.0).powi(2) + (y as f64 - 20.0).powi(2) <= 64.0;
        for y in 0..40 {
            for x in 0..40 {
                if inside(x, y) {
                    f.set(x, y, 20);
                }
            }
        }
        let b = threshold(&f, 100);
        for y in 0..40 {
            for x in 0..40 {
                assert_eq!(b.get(x, y) == 255, inside(x, y));
            }
        }
        let t = otsu_threshold([&f]);
        assert!(t > 20 && t <= 220);
        assert_eq!(threshold(&f, t), b);
    }

    #[test]
    fn otsu_splits_bimodal_histogram() {
        let mut data = vec![50u8; 500];
        data.extend(vec![60u8; 500]);
        data.extend(vec![180u8; 500]);
        data.extend(vec![190u8; 500]);
        let f = Image::from_vec(2000, 1, data).unwrap();
        let t = otsu_threshold([&f]);
        assert!(t > 60 && t <= 180, "t = {t}");
    }
}
