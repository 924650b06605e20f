//! Pixel-level baselines: PixCorr and SSIM.
//!
//! Inputs must already share a resolution; nothing here resizes.

use serde::{Deserialize, Serialize};

use crate::data::ImagePixels;
use crate::error::{Error, Result};
use crate::vector::pearson;

fn check_dims(gt: &ImagePixels, recon: &ImagePixels) -> Result<()> {
    if gt.same_dimensions(recon) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            gt.width(),
            gt.height(),
            recon.width(),
            recon.height()
        )))
    }
}

/// Pearson correlation over all flattened RGB values.
pub fn pixcorr(gt: &ImagePixels, recon: &ImagePixels) -> Result<f64> {
    check_dims(gt, recon)?;
    let a: Vec<f64> = gt.data().iter().map(|&v| v as f64).collect();
    let b: Vec<f64> = recon.data().iter().map(|&v| v as f64).collect();
    pearson(&a, &b).map_err(|e| match e {
        Error::ZeroVariance(_) => Error::ZeroVariance("constant image".into()),
        other => other,
    })
}

/// SSIM parameters. The defaults are the original Wang et al. settings and
/// are recorded in report metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
        }
    }
}

impl SsimParams {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    fn kernel(&self) -> Vec<f64> {
        let half = (self.window / 2) as f64;
        let raw: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - half;
                (-(d * d) / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / sum).collect()
    }
}

/// ITU-R BT.601 luma, unrounded.
pub fn luma(image: &ImagePixels) -> Vec<f64> {
    image
        .data()
        .chunks_exact(3)
        .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
        .collect()
}

/// Valid-mode separable convolution of a `w x h` plane.
fn filter_valid(plane: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let k = kernel.len();
    let (ow, oh) = (w - k + 1, h - k + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let src = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = kernel.iter().zip(&src[x..x + k]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, a)| a * rows[(y + i) * ow + x])
                .sum();
        }
    }
    out
}

pub fn ssim(gt: &ImagePixels, recon: &ImagePixels) -> Result<f64> {
    ssim_with(gt, recon, &SsimParams::default())
}

/// Mean SSIM over every valid window position of the luma planes.
pub fn ssim_with(gt: &ImagePixels, recon: &ImagePixels, params: &SsimParams) -> Result<f64> {
    check_dims(gt, recon)?;
    let (w, h) = (gt.width() as usize, gt.height() as usize);
    if w < params.window || h < params.window {
        return Err(Error::InvalidArgument(format!(
            "image too small for SSIM: {w}x{h} is below the {0}x{0} window",
            params.window
        )));
    }
    let x = luma(gt);
    let y = luma(recon);
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a * b).collect();
    let kernel = params.kernel();
    let mx = filter_valid(&x, w, h, &kernel);
    let my = filter_valid(&y, w, h, &kernel);
    let exx = filter_valid(&xx, w, h, &kernel);
    let eyy = filter_valid(&yy, w, h, &kernel);
    let exy = filter_valid(&xy, w, h, &kernel);
    let (c1, c2) = (params.c1(), params.c2());
    let mut total = 0.0;
    for i in 0..mx.len() {
        let (mux, muy) = (mx[i], my[i]);
        let sx = exx[i] - mux * mux;
        let sy = eyy[i] - muy * muy;
        let sxy = exy[i] - mux * muy;
        let num = (2.0 * mux * muy + c1) * (2.0 * sxy + c2);
        let den = (mux * mux + muy * muy + c1) * (sx + sy + c2);
        total += num / den;
    }
    Ok(total / mx.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(w: u32, h: u32, v: u8) -> ImagePixels {
        ImagePixels::from_fn(w, h, |_, _| [v, v, v])
    }

    fn textured(w: u32, h: u32, shift: u32) -> ImagePixels {
        ImagePixels::from_fn(w, h, |x, y| {
            let u = x + shift;
            let v = ((u * 37 + y * 11) % 97 + (u * u + y) % 31 * 3) as u8;
            [v, v.wrapping_mul(3), 255 - v]
        })
    }

    #[test]
    fn pixcorr_examples() {
        let a = textured(5, 4, 0);
        assert_eq!(pixcorr(&a, &a).unwrap(), 1.0);
        let neg = ImagePixels::new(5, 4, a.data().iter().map(|v| 255 - v).collect()).unwrap();
        assert_eq!(pixcorr(&a, &neg).unwrap(), -1.0);
        let gt = ImagePixels::new(2, 1, vec![0, 0, 0, 255, 255, 255]).unwrap();
        let rc = ImagePixels::new(2, 1, vec![0, 0, 0, 128, 128, 128]).unwrap();
        assert!((pixcorr(&gt, &rc).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            pixcorr(&gray(2, 2, 5), &gray(2, 2, 6)),
            Err(Error::ZeroVariance(_))
        ));
        assert!(matches!(
            pixcorr(&gray(2, 2, 5), &gray(3, 2, 6)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn ssim_identity_is_exact() {
        let a = textured(24, 19, 0);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn ssim_constant_images_closed_form() {
        let c1 = SsimParams::default().c1();
        assert!((c1 - 6.5025).abs() < 1e-12);
        let expected = (2.0 * 100.0 * 150.0 + c1) / (100.0f64.powi(2) + 150.0f64.powi(2) + c1);
        let got = ssim(&gray(16, 16, 100), &gray(16, 16, 150)).unwrap();
        assert!((got - expected).abs() < 1e-6, "{got} vs {expected}");
        assert!((got - 0.923092).abs() < 1e-6);
    }

    #[test]
    fn ssim_penalizes_shift_and_is_symmetric() {
        let a = textured(32, 32, 0);
        let b = textured(32, 32, 3);
        let s = ssim(&a, &b).unwrap();
        assert!(s < 1.0);
        assert_eq!(s, ssim(&b, &a).unwrap());
    }

    #[test]
    fn ssim_size_checks() {
        assert!(matches!(
            ssim(&gray(10, 20, 1), &gray(10, 20, 1)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(ssim(&gray(11, 11, 1), &gray(11, 11, 1)).is_ok());
        assert!(matches!(
            ssim(&gray(12, 12, 1), &gray(11, 12, 1)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn kernel_normalized() {
        let k = SsimParams::default().kernel();
        assert_eq!(k.len(), 11);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(k[0], k[10]);
    }
}
