//! Hole-fill contract properties on random hole patterns.

use egoshift_core::imageops::hole_fill;
use egoshift_core::reprojection::RgbdFrame;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_frame_with_holes(seed: u64) -> RgbdFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = rng.gen_range(6u32..40);
    let h = rng.gen_range(6u32..40);
    let mut f = RgbdFrame::empty(w, h);
    for i in 0..f.rgb.len() {
        f.rgb[i] = [rng.gen(), rng.gen(), rng.gen()];
        f.depth.data[i] = rng.gen_range(500..4000);
        f.validity[i] = true;
    }
    // punch out random rectangles plus salt noise; keep at least one valid
    for _ in 0..rng.gen_range(1..4) {
        let rw = rng.gen_range(1..=w / 2);
        let rh = rng.gen_range(1..=h / 2);
        let x0 = rng.gen_range(0..w - rw);
        let y0 = rng.gen_range(0..h - rh);
        for y in y0..y0 + rh {
            for x in x0..x0 + rw {
                let i = f.index(x, y);
                f.validity[i] = false;
                f.rgb[i] = [0; 3];
            }
        }
    }
    for i in 0..f.rgb.len() {
        if rng.gen_bool(0.05) {
            f.validity[i] = false;
            f.rgb[i] = [0; 3];
        }
    }
    if f.valid_count() == 0 {
        f.validity[0] = true;
        f.rgb[0] = [128, 128, 128];
    }
    f
}

#[test]
fn hole_fill_contract_on_100_random_patterns() {
    for seed in 0..100u64 {
        let f = random_frame_with_holes(seed);
        let filled = hole_fill(&f).unwrap();

        // validity all-true
        assert!(filled.validity.iter().all(|v| *v), "seed {seed}");

        // valid input pixels preserved bit-exactly
        for i in 0..f.rgb.len() {
            if f.validity[i] {
                assert_eq!(filled.rgb[i], f.rgb[i], "seed {seed} pixel {i}");
            }
        }

        // filled values stay within the global per-channel range of the
        // valid input colors (convex-combination bound)
        let (mut lo, mut hi) = ([255u8; 3], [0u8; 3]);
        for i in 0..f.rgb.len() {
            if f.validity[i] {
                for c in 0..3 {
                    lo[c] = lo[c].min(f.rgb[i][c]);
                    hi[c] = hi[c].max(f.rgb[i][c]);
                }
            }
        }
        for i in 0..f.rgb.len() {
            if !f.validity[i] {
                for c in 0..3 {
                    assert!(
                        filled.rgb[i][c] >= lo[c] && filled.rgb[i][c] <= hi[c],
                        "seed {seed} pixel {i} channel {c}"
                    );
                }
            }
        }

        // idempotence: a second pass is bitwise-identical
        let twice = hole_fill(&filled).unwrap();
        assert_eq!(twice, filled, "seed {seed}");
    }
}
