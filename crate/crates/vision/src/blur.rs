use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlurKernel {
    /// Uniform 2x2, weights 1/4, anchored at its top-left element.
    #[default]
    Box2,
    /// Separable [1 2 1]/4 in each direction, centred.
    Gaussian3,
}

impl BlurKernel {
    /// Shift (pixels, both axes) to add to positions measured on the blurred
    /// image to map them back to input coordinates.
    pub fn offset(self) -> f64 {
        match self {
            BlurKernel::Box2 => 0.5,
            BlurKernel::Gaussian3 => 0.0,
        }
    }
}

/// Convolution with replicate borders.
pub fn blur<T: Copy + Into<f32>>(img: &Image<T>, kernel: BlurKernel) -> Image<f32> {
    let (w, h) = (img.width(), img.height());
    let mut out = Image::filled(w, h, 0.0f32);
    match kernel {
        BlurKernel::Box2 => {
            for y in 0..h {
                let y1 = (y + 1).min(h - 1);
                for x in 0..w {
                    let x1 = (x + 1).min(w - 1);
                    let s =
                        img.get(x, y).into() + img.get(x1, y).into() + img.get(x, y1).into() + img.get(x1, y1).into();
                    out.set(x, y, 0.25 * s);
                }
            }
        }
        BlurKernel::Gaussian3 => {
            let mut tmp = Image::filled(w, h, 0.0f32);
            for y in 0..h {
                for x in 0..w {
                    let xi = x as isize;
                    let v = img.get_clamped(xi - 1, y as isize).into()
                        + 2.0 * img.get(x, y).into()
                        + img.get_clamped(xi + 1, y as isize).into();
                    tmp.set(x, y, 0.25 * v);
                }
            }
            for y in 0..h {
                let yi = y as isize;
                for x in 0..w {
                    let v =
                        tmp.get_clamped(x as isize, yi - 1) + 2.0 * tmp.get(x, y) + tmp.get_clamped(x as isize, yi + 1);
                    out.set(x, y, 0.25 * v);
                }
            }
        }
    }
    out
}
