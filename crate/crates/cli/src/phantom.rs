//! A synthetic complex test object: nested ellipses with smooth intensity
//! ramps inside each region and a smooth background phase.

use soupdil::linalg::C64;
use soupdil::patches::ComplexImage;

struct Ellipse {
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
    angle: f64,
    value: f64,
    /// Linear intensity ramp across the ellipse, as a fraction of `value`.
    ramp: f64,
}

const ELLIPSES: [Ellipse; 7] = [
    Ellipse { cx: 0.0, cy: 0.0, a: 0.72, b: 0.92, angle: 0.0, value: 0.8, ramp: 0.15 },
    Ellipse { cx: 0.0, cy: -0.02, a: 0.66, b: 0.85, angle: 0.0, value: -0.5, ramp: 0.0 },
    Ellipse { cx: 0.24, cy: 0.05, a: 0.12, b: 0.32, angle: -0.3, value: 0.45, ramp: 0.3 },
    Ellipse { cx: -0.24, cy: 0.05, a: 0.16, b: 0.38, angle: 0.3, value: 0.35, ramp: -0.3 },
    Ellipse { cx: 0.0, cy: 0.4, a: 0.2, b: 0.14, angle: 0.0, value: 0.3, ramp: 0.2 },
    Ellipse { cx: 0.06, cy: -0.55, a: 0.07, b: 0.05, angle: 0.0, value: 0.5, ramp: 0.0 },
    Ellipse { cx: -0.1, cy: -0.35, a: 0.05, b: 0.09, angle: 0.5, value: 0.4, ramp: 0.0 },
];

/// Sub-pixel samples per axis; edge pixels get partial-volume values.
const SUB: usize = 4;

fn magnitude(x: f64, y: f64) -> f64 {
    let mut mag = 0.0;
    for e in &ELLIPSES {
        let (s, co) = e.angle.sin_cos();
        let (dx, dy) = (x - e.cx, y - e.cy);
        let u = (co * dx + s * dy) / e.a;
        let v = (-s * dx + co * dy) / e.b;
        if u * u + v * v <= 1.0 {
            mag += e.value * (1.0 + e.ramp * u);
        }
    }
    mag
}

/// `size × size` phantom with unit peak magnitude.
pub fn phantom(size: usize) -> ComplexImage {
    let step = 2.0 / size as f64;
    let img = ComplexImage::from_fn(size, size, |r, c| {
        let (x0, y0) = (c as f64 * step - 1.0, r as f64 * step - 1.0);
        let mut mag = 0.0;
        for i in 0..SUB {
            for j in 0..SUB {
                let x = x0 + (j as f64 + 0.5) * step / SUB as f64;
                let y = y0 + (i as f64 + 0.5) * step / SUB as f64;
                mag += magnitude(x, y);
            }
        }
        mag /= (SUB * SUB) as f64;
        let (x, y) = (x0 + 0.5 * step, y0 + 0.5 * step);
        let phase = 0.6 * x - 0.4 * y + 0.5 * (x * x + y * y);
        C64::from_polar(mag.max(0.0), phase)
    });
    img.normalized_to_unit_peak().expect("phantom is not empty")
}
