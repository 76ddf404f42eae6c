//! Cross-checks PSNR/SSIM against independently written reference
//! implementations.

use egoshift_core::metrics::{psnr, ssim};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Reference SSIM written with a different structure: separable 1-D Gaussian
/// convolutions over full mean/second-moment maps, then pointwise combination
/// over the valid region.
fn ssim_reference(a: &[[u8; 3]], b: &[[u8; 3]], w: usize, h: usize) -> f64 {
    let luma = |img: &[[u8; 3]]| -> Vec<f64> {
        img.iter()
            .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
            .collect()
    };
    let x = luma(a);
    let y = luma(b);

    // 1-D kernel; the 2-D window is its outer product, so the separable
    // convolution matches the direct double sum up to float associativity
    // differences — which is the point of the cross-check.
    let sigma = 1.5f64;
    let g1: Vec<f64> = (-5i64..=5)
        .map(|t| (-(t * t) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = g1.iter().sum();
    let g1: Vec<f64> = g1.iter().map(|v| v / norm).collect();

    // horizontal then vertical convolution, valid region only
    let conv = |img: &[f64]| -> Vec<f64> {
        let vw = w - 10;
        let mut horiz = vec![0.0f64; vw * h];
        for row in 0..h {
            for out_x in 0..vw {
                let mut acc = 0.0;
                for (k, gk) in g1.iter().enumerate() {
                    acc += gk * img[row * w + out_x + k];
                }
                horiz[row * vw + out_x] = acc;
            }
        }
        let vh = h - 10;
        let mut full = vec![0.0f64; vw * vh];
        for out_y in 0..vh {
            for out_x in 0..vw {
                let mut acc = 0.0;
                for (k, gk) in g1.iter().enumerate() {
                    acc += gk * horiz[(out_y + k) * vw + out_x];
                }
                full[out_y * vw + out_x] = acc;
            }
        }
        full
    };

    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
    let mu_x = conv(&x);
    let mu_y = conv(&y);
    let m_xx = conv(&xx);
    let m_yy = conv(&yy);
    let m_xy = conv(&xy);

    let c1 = (0.01f64 * 255.0).powi(2);
    let c2 = (0.03f64 * 255.0).powi(2);
    let mut total = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let vx = m_xx[i] - mx * mx;
        let vy = m_yy[i] - my * my;
        let cov = m_xy[i] - mx * my;
        total += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
            / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    total / mu_x.len() as f64
}

/// Reference PSNR via integer squared-error accumulation.
fn psnr_reference(a: &[[u8; 3]], b: &[[u8; 3]]) -> f64 {
    let se: u64 = a
        .iter()
        .zip(b)
        .flat_map(|(pa, pb)| (0..3).map(move |c| pa[c].abs_diff(pb[c]) as u64))
        .map(|d| d * d)
        .sum();
    if se == 0 {
        return f64::INFINITY;
    }
    let mse = se as f64 / (3 * a.len()) as f64;
    10.0 * (255.0f64 * 255.0 / mse).log10()
}

fn random_pair(seed: u64, w: usize, h: usize) -> (Vec<[u8; 3]>, Vec<[u8; 3]>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // smooth base plus noise so local statistics are non-degenerate
    let base: Vec<[u8; 3]> = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            [
                (127.0 + 100.0 * (0.2 * x).sin()) as u8,
                (127.0 + 100.0 * (0.15 * y).cos()) as u8,
                (127.0 + 80.0 * (0.1 * (x + y)).sin()) as u8,
            ]
        })
        .collect();
    let degraded = base
        .iter()
        .map(|p| p.map(|c| (c as i32 + rng.gen_range(-30..=30)).clamp(0, 255) as u8))
        .collect();
    (base, degraded)
}

#[test]
fn ssim_agrees_with_separable_convolution_reference() {
    for seed in 0..10u64 {
        let (w, h) = (40 + (seed as usize % 3) * 7, 32 + (seed as usize % 4) * 5);
        let (a, b) = random_pair(seed, w, h);
        let fast = ssim(&a, &b, w as u32, h as u32).unwrap();
        let slow = ssim_reference(&a, &b, w, h);
        assert!(
            (fast - slow).abs() < 1e-9,
            "seed {seed}: {fast} vs {slow}"
        );
        assert!(fast > 0.0 && fast < 1.0, "seed {seed}: {fast}");
    }
}

#[test]
fn psnr_agrees_with_integer_accumulation_reference() {
    for seed in 0..10u64 {
        let (a, b) = random_pair(seed, 37, 29);
        let fast = psnr(&a, &b, 37, 29).unwrap();
        let slow = psnr_reference(&a, &b);
        assert!((fast - slow).abs() < 1e-9, "seed {seed}: {fast} vs {slow}");
    }
}

#[test]
fn heavier_degradation_scores_lower_on_both_metrics() {
    let (base, light) = random_pair(3, 48, 48);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let heavy: Vec<[u8; 3]> = base
        .iter()
        .map(|p| p.map(|c| (c as i32 + rng.gen_range(-90..=90)).clamp(0, 255) as u8))
        .collect();
    assert!(psnr(&base, &heavy, 48, 48).unwrap() < psnr(&base, &light, 48, 48).unwrap());
    assert!(ssim(&base, &heavy, 48, 48).unwrap() < ssim(&base, &light, 48, 48).unwrap());
}
