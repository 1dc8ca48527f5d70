use std::path::Path;

use super::{ImageBuffer, CHANNELS};
use crate::{Error, Result};

/// Loads an 8-bit PNG or binary PPM and maps `[0, 255]` linearly to `[-1, 1]`.
pub fn load_image(path: &Path) -> Result<ImageBuffer> {
    let img = image::open(path)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?
        .to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut data = vec![0.0; CHANNELS * w * h];
    for (x, y, px) in img.enumerate_pixels() {
        for c in 0..CHANNELS {
            data[(c * h + y as usize) * w + x as usize] = f64::from(px[c]) / 127.5 - 1.0;
        }
    }
    ImageBuffer::new(w, h, data)
}

pub fn save_png(img: &ImageBuffer, path: &Path) -> Result<()> {
    let (w, h) = (img.width(), img.height());
    let mut out = image::RgbImage::new(w as u32, h as u32);
    for (x, y, px) in out.enumerate_pixels_mut() {
        for c in 0..CHANNELS {
            let v = img.plane(c)[y as usize * w + x as usize];
            px[c] = ((v + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8;
        }
    }
    out.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}
