//! Hole filling for reprojected frames and naive scene/robot composition.

use crate::error::FrameError;
use crate::rendering::RenderedRobotFrame;
use crate::reprojection::RgbdFrame;

/// Fill every invalid pixel with a pull-push pyramid: box-downsample valid
/// colors with weight propagation to 1x1, then walk back down, completing
/// each level from the coarser one by bilinear interpolation and blending
/// by saturated weight. Deterministic, parameter-free, and bit-preserving
/// on valid input pixels. Output validity is all-true; depth is untouched
/// (filled pixels carry color only).
pub fn hole_fill(frame: &RgbdFrame) -> Result<RgbdFrame, FrameError> {
    let n_valid = frame.valid_count();
    if n_valid == 0 {
        return Err(FrameError::NoValidPixels);
    }
    if n_valid == frame.validity.len() {
        return Ok(frame.clone());
    }

    struct Level {
        w: usize,
        h: usize,
        weight: Vec<f64>,
        color: Vec<[f64; 3]>,
    }

    let (w0, h0) = (frame.width as usize, frame.height as usize);
    let mut base = Level {
        w: w0,
        h: h0,
        weight: frame.validity.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect(),
        color: frame
            .rgb
            .iter()
            .map(|p| [p[0] as f64, p[1] as f64, p[2] as f64])
            .collect(),
    };
    // zero out invalid colors so they can never leak through the averages
    for (c, &w) in base.color.iter_mut().zip(&base.weight) {
        if w == 0.0 {
            *c = [0.0; 3];
        }
    }

    // pull: box-average each 2x2 block of children
    let mut levels = vec![base];
    while levels.last().unwrap().w > 1 || levels.last().unwrap().h > 1 {
        let fine = levels.last().unwrap();
        let (cw, ch) = (fine.w.div_ceil(2), fine.h.div_ceil(2));
        let mut coarse = Level {
            w: cw,
            h: ch,
            weight: vec![0.0; cw * ch],
            color: vec![[0.0; 3]; cw * ch],
        };
        for cy in 0..ch {
            for cx in 0..cw {
                let (mut wsum, mut acc, mut children) = (0.0, [0.0f64; 3], 0u32);
                for dy in 0..2 {
                    for dx in 0..2 {
                        let (fx, fy) = (cx * 2 + dx, cy * 2 + dy);
                        if fx < fine.w && fy < fine.h {
                            let i = fy * fine.w + fx;
                            wsum += fine.weight[i];
                            for c in 0..3 {
                                acc[c] += fine.weight[i] * fine.color[i][c];
                            }
                            children += 1;
                        }
                    }
                }
                let i = cy * cw + cx;
                coarse.weight[i] = wsum / children as f64;
                if wsum > 0.0 {
                    coarse.color[i] = std::array::from_fn(|c| acc[c] / wsum);
                }
            }
        }
        levels.push(coarse);
    }

    // push: complete each level from the (already complete) coarser one
    for k in (0..levels.len() - 1).rev() {
        let (fine_slice, coarse_slice) = levels.split_at_mut(k + 1);
        let fine = &mut fine_slice[k];
        let coarse = &coarse_slice[0];
        for y in 0..fine.h {
            for x in 0..fine.w {
                let i = y * fine.w + x;
                let w = fine.weight[i].min(1.0);
                if w >= 1.0 {
                    continue;
                }
                let interp = bilinear(coarse.w, coarse.h, &coarse.color, x, y);
                for c in 0..3 {
                    fine.color[i][c] = w * fine.color[i][c] + (1.0 - w) * interp[c];
                }
                fine.weight[i] = 1.0;
            }
        }
    }

    let mut out = frame.clone();
    let filled = &levels[0];
    for i in 0..out.validity.len() {
        if !out.validity[i] {
            out.rgb[i] =
                std::array::from_fn(|c| filled.color[i][c].round().clamp(0.0, 255.0) as u8);
            out.validity[i] = true;
        }
    }
    Ok(out)
}

/// Bilinear sample of the coarse level at the center of fine pixel (x, y),
/// with clamped borders.
fn bilinear(cw: usize, ch: usize, color: &[[f64; 3]], x: usize, y: usize) -> [f64; 3] {
    let sample = |coord: usize, extent: usize| {
        let c = (coord as f64 - 0.5) / 2.0;
        let i0 = c.floor();
        let frac = c - i0;
        let i0 = (i0 as i64).clamp(0, extent as i64 - 1) as usize;
        let i1 = (i0 + 1).min(extent - 1);
        (i0, i1, frac)
    };
    let (x0, x1, fx) = sample(x, cw);
    let (y0, y1, fy) = sample(y, ch);
    std::array::from_fn(|c| {
        let top = (1.0 - fx) * color[y0 * cw + x0][c] + fx * color[y0 * cw + x1][c];
        let bottom = (1.0 - fx) * color[y1 * cw + x0][c] + fx * color[y1 * cw + x1][c];
        (1.0 - fy) * top + fy * bottom
    })
}

/// The baseline composition: robot pixels where the render mask is set,
/// scene pixels elsewhere. Depth and validity are merged the same way so
/// the result is a complete frame.
pub fn naive_compose(
    scene: &RgbdFrame,
    robot: &RenderedRobotFrame,
    depth_scale: f64,
) -> Result<RgbdFrame, FrameError> {
    if scene.width != robot.width || scene.height != robot.height {
        return Err(FrameError::DimensionMismatch {
            expected_w: scene.width,
            expected_h: scene.height,
            got_w: robot.width,
            got_h: robot.height,
        });
    }
    let mut out = scene.clone();
    let robot_depth = robot.depth_map(depth_scale);
    for i in 0..out.rgb.len() {
        if robot.mask[i] {
            out.rgb[i] = robot.rgb[i];
            out.depth.data[i] = robot_depth.data[i];
            out.validity[i] = true;
        }
    }
    Ok(out)
}
