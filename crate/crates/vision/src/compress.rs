//! Area-weighted block-mean downsampling to `LO_RES`² followed by linear
//! 16-to-8-bit range mapping.

use swarm_core::Exec;

use crate::image::{FrameHi, FrameLo, Image, LO_RES};

/// For each output index, the contributing input indices and overlap widths.
fn weights(n_in: usize, n_out: usize) -> Vec<Vec<(usize, f64)>> {
    let s = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|j| {
            let (a, b) = (j as f64 * s, (j + 1) as f64 * s);
            (a.floor() as usize..(b.ceil() as usize).min(n_in))
                .map(|i| (i, b.min(i as f64 + 1.0) - a.max(i as f64)))
                .filter(|&(_, w)| w > 0.0)
                .collect()
        })
        .collect()
}

pub fn compress(f: &FrameHi, exec: Exec) -> FrameLo {
    let (w, h) = (f.width(), f.height());
    let wx = weights(w, LO_RES);
    let wy = weights(h, LO_RES);
    let scale = 255.0 / 65535.0 / ((w as f64 / LO_RES as f64) * (h as f64 / LO_RES as f64));

    let mut data = vec![0u8; LO_RES * LO_RES];
    swarm_core::par::for_each_chunk_mut(exec, &mut data, LO_RES, |j, out| {
        // Blend the contributing input rows, then the contributing columns.
        let mut acc = vec![0.0f32; w];
        for &(y, wt) in &wy[j] {
            let wt = wt as f32;
            for (a, &v) in acc.iter_mut().zip(f.row(y)) {
                *a += wt * v as f32;
            }
        }
        for (o, ws) in out.iter_mut().zip(&wx) {
            let sum: f64 = ws.iter().map(|&(i, wt)| wt * acc[i] as f64).sum();
            *o = (sum * scale).round().clamp(0.0, 255.0) as u8;
        }
    });
    Image::from_vec(LO_RES, LO_RES, data).expect("frame size")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::HI_RES;

    #[test]
    fn range_endpoints() {
        assert!(compress(&Image::hi(65535), Exec::Parallel).data().iter().all(|&v| v == 255));
        assert!(compress(&Image::hi(0), Exec::Parallel).data().iter().all(|&v| v == 0));
    }

    fn split(at: usize) -> FrameLo {
        let mut f = Image::hi(0);
        for y in 0..HI_RES {
            for x in at..HI_RES {
                f.set(x, y, 65535);
            }
        }
        compress(&f, Exec::Sequential)
    }

    #[test]
    fn unaligned_split_has_one_mixed_column() {
        let lo = split(1000);
        // 1000 / (2048 / 300) = 146.48: column 146 straddles the edge.
        for y in [0, 150, 299] {
            assert!((0..146).all(|x| lo.get(x, y) == 0));
            assert!((147..LO_RES).all(|x| lo.get(x, y) == 255));
            let m = lo.get(146, y);
            assert!(m > 0 && m < 255);
        }
        let expected_fraction = 147.0 - 1000.0 * 300.0 / 2048.0;
        assert!((lo.get(146, 10) as f64 / 255.0 - expected_fraction).abs() < 1.0 / 255.0);
    }

    #[test]
    fn aligned_split_has_no_mixed_column() {
        let lo = split(1024);
        assert!((0..150).all(|x| lo.get(x, 5) == 0));
        assert!((150..LO_RES).all(|x| lo.get(x, 5) == 255));
    }

    #[test]
    fn weights_cover_each_output_block() {
        for ws in weights(HI_RES, LO_RES) {
            let total: f64 = ws.iter().map(|w| w.1).sum();
            assert!((total - HI_RES as f64 / LO_RES as f64).abs() < 1e-9);
        }
    }
}
