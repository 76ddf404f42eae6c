//! Reference-based image and video quality metrics: PSNR and SSIM.

use crate::error::MetricsError;

/// SSIM window: 11x11 Gaussian, sigma 1.5 (the original parameterization).
pub const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const DYNAMIC_RANGE: f64 = 255.0;

/// Peak signal-to-noise ratio in dB over all RGB channels jointly,
/// `10*log10(255^2 / MSE)`. Identical images report +infinity.
pub fn psnr(
    a: &[[u8; 3]],
    b: &[[u8; 3]],
    width: u32,
    height: u32,
) -> Result<f64, MetricsError> {
    check_dims(a, b, width, height)?;
    let mut se = 0.0f64;
    for (pa, pb) in a.iter().zip(b) {
        for c in 0..3 {
            let d = pa[c] as f64 - pb[c] as f64;
            se += d * d;
        }
    }
    let mse = se / (3.0 * a.len() as f64);
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (DYNAMIC_RANGE * DYNAMIC_RANGE / mse).log10())
}

/// Mean local SSIM on Rec.601 luma with the standard Gaussian window.
/// Windows are evaluated only where they fit entirely inside the image.
pub fn ssim(
    a: &[[u8; 3]],
    b: &[[u8; 3]],
    width: u32,
    height: u32,
) -> Result<f64, MetricsError> {
    check_dims(a, b, width, height)?;
    let (w, h) = (width as usize, height as usize);
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(MetricsError::TooSmall(width, height, SSIM_WINDOW as u32));
    }
    let la = luma(a);
    let lb = luma(b);
    let kernel = gaussian_kernel();
    let c1 = (K1 * DYNAMIC_RANGE).powi(2);
    let c2 = (K2 * DYNAMIC_RANGE).powi(2);
    let half = SSIM_WINDOW / 2;

    let mut total = 0.0f64;
    let mut count = 0usize;
    for cy in half..h - half {
        for cx in half..w - half {
            let (mut mx, mut my) = (0.0f64, 0.0f64);
            let (mut sxx, mut syy, mut sxy) = (0.0f64, 0.0f64, 0.0f64);
            for ky in 0..SSIM_WINDOW {
                for kx in 0..SSIM_WINDOW {
                    let i = (cy + ky - half) * w + cx + kx - half;
                    let g = kernel[ky * SSIM_WINDOW + kx];
                    mx += g * la[i];
                    my += g * lb[i];
                    sxx += g * la[i] * la[i];
                    syy += g * lb[i] * lb[i];
                    sxy += g * la[i] * lb[i];
                }
            }
            let vx = sxx - mx * mx;
            let vy = syy - my * my;
            let cov = sxy - mx * my;
            let s = ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            total += s;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

fn check_dims(
    a: &[[u8; 3]],
    b: &[[u8; 3]],
    width: u32,
    height: u32,
) -> Result<(), MetricsError> {
    let n = (width * height) as usize;
    if a.len() != n || b.len() != n {
        return Err(MetricsError::DimensionMismatch(
            width,
            height,
            width,
            (b.len() as u32).checked_div(width.max(1)).unwrap_or(0),
        ));
    }
    Ok(())
}

fn luma(rgb: &[[u8; 3]]) -> Vec<f64> {
    rgb.iter()
        .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
        .collect()
}

fn gaussian_kernel() -> Vec<f64> {
    let half = SSIM_WINDOW as i64 / 2;
    let mut k = Vec::with_capacity(SSIM_WINDOW * SSIM_WINDOW);
    for y in -half..=half {
        for x in -half..=half {
            k.push((-((x * x + y * y) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp());
        }
    }
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameMetrics {
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoMetrics {
    pub per_frame: Vec<FrameMetrics>,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
}

/// Per-frame PSNR/SSIM plus arithmetic means over the sequence.
pub fn video_metrics(
    pred: &[(Vec<[u8; 3]>, u32, u32)],
    reference: &[(Vec<[u8; 3]>, u32, u32)],
) -> Result<VideoMetrics, MetricsError> {
    if pred.len() != reference.len() {
        return Err(MetricsError::LengthMismatch(pred.len(), reference.len()));
    }
    if pred.is_empty() {
        return Err(MetricsError::LengthMismatch(0, 0));
    }
    let mut per_frame = Vec::with_capacity(pred.len());
    for ((pa, wa, ha), (pb, wb, hb)) in pred.iter().zip(reference) {
        if wa != wb || ha != hb {
            return Err(MetricsError::DimensionMismatch(*wa, *ha, *wb, *hb));
        }
        per_frame.push(FrameMetrics {
            psnr: psnr(pa, pb, *wa, *ha)?,
            ssim: ssim(pa, pb, *wa, *ha)?,
        });
    }
    let mean_psnr = per_frame.iter().map(|m| m.psnr).sum::<f64>() / per_frame.len() as f64;
    let mean_ssim = per_frame.iter().map(|m| m.ssim).sum::<f64>() / per_frame.len() as f64;
    Ok(VideoMetrics {
        per_frame,
        mean_psnr,
        mean_ssim,
    })
}
