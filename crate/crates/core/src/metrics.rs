//! Full-reference quality metrics on `[0, 1]` samples.

use crate::codec::{ImageBuffer, CHANNELS};

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// `10 log10(1 / MSE)`; `f64::INFINITY` for identical inputs.
pub fn psnr_unit(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "psnr inputs differ in length");
    let mse = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

pub fn psnr(x: &ImageBuffer, y: &ImageBuffer) -> f64 {
    psnr_unit(&x.to_unit_range(), &y.to_unit_range())
}

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
pub fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-(d * d) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Valid-region separable filtering of an `h x w` plane.
fn filter_valid(plane: &[f64], h: usize, w: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (oh, ow) = (h + 1 - SSIM_WINDOW, w + 1 - SSIM_WINDOW);
    let mut horiz = vec![0.0; h * ow];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz[y * ow + x] = taps
                .iter()
                .zip(&row[x..x + SSIM_WINDOW])
                .map(|(t, v)| t * v)
                .sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for (t, tap) in taps.iter().enumerate() {
            let src = &horiz[(y + t) * ow..(y + t + 1) * ow];
            for (o, v) in out[y * ow..(y + 1) * ow].iter_mut().zip(src) {
                *o += tap * v;
            }
        }
    }
    out
}

/// Mean SSIM of one `h x w` plane pair over all fully covered window positions.
pub fn ssim_plane(a: &[f64], b: &[f64], h: usize, w: usize) -> f64 {
    assert!(
        h >= SSIM_WINDOW && w >= SSIM_WINDOW,
        "plane smaller than the SSIM window"
    );
    let taps = gaussian_window();
    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);
    let aa: Vec<f64> = a.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = b.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let mu_a = filter_valid(a, h, w, &taps);
    let mu_b = filter_valid(b, h, w, &taps);
    let e_aa = filter_valid(&aa, h, w, &taps);
    let e_bb = filter_valid(&bb, h, w, &taps);
    let e_ab = filter_valid(&ab, h, w, &taps);
    let n = mu_a.len();
    (0..n)
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = e_aa[i] - ma * ma;
            let vb = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .sum::<f64>()
        / n as f64
}

/// SSIM averaged over the three color planes, computed on `[0, 1]` samples.
pub fn ssim(x: &ImageBuffer, y: &ImageBuffer) -> f64 {
    assert_eq!(
        (x.width(), x.height()),
        (y.width(), y.height()),
        "ssim inputs differ in size"
    );
    let (w, h) = (x.width(), x.height());
    let to_unit = |p: &[f64]| -> Vec<f64> { p.iter().map(|v| (v + 1.0) / 2.0).collect() };
    (0..CHANNELS)
        .map(|c| ssim_plane(&to_unit(x.plane(c)), &to_unit(y.plane(c)), h, w))
        .sum::<f64>()
        / CHANNELS as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs() {
        let a: Vec<f64> = (0..3 * 16 * 16)
            .map(|i| ((i * 7919) % 255) as f64 / 127.5 - 1.0)
            .collect();
        let x = ImageBuffer::new(16, 16, a).unwrap();
        assert_eq!(psnr(&x, &x), f64::INFINITY);
        assert!((ssim(&x, &x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_offset_psnr() {
        let a = vec![0.3; 100];
        let b = vec![0.4; 100];
        assert!((psnr_unit(&a, &b) - 20.0).abs() < 1e-9);
    }

    #[test]
    fn window_is_normalized_and_symmetric() {
        let w = gaussian_window();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for i in 0..SSIM_WINDOW {
            assert_eq!(w[i], w[SSIM_WINDOW - 1 - i]);
        }
    }

    #[test]
    fn ssim_drops_with_noise() {
        let a: Vec<f64> = (0..32 * 32).map(|i| (i % 32) as f64 / 31.0).collect();
        let b: Vec<f64> = a
            .iter()
            .enumerate()
            .map(|(i, v)| v + if i % 2 == 0 { 0.05 } else { -0.05 })
            .collect();
        let s = ssim_plane(&a, &b, 32, 32);
        assert!(s < 1.0 && s > -1.0);
    }
}
