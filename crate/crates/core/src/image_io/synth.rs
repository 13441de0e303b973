//! Deterministic synthetic grayscale scenes for exercising image codecs
//! when no photographic corpus is at hand. Each scene mixes smooth shading,
//! oriented texture, hard-edged shapes and mild noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::ImageBuffer;

pub fn scene(width: usize, height: usize, seed: u64) -> ImageBuffer {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let fx = rng.random_range(1.5..6.0);
    let fy = rng.random_range(1.5..6.0);
    let texture_freq = rng.random_range(0.15..0.45);
    let texture_angle: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let texture_amp = rng.random_range(6.0..18.0);
    let shapes: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.random_range(0.0..width as f64),
                rng.random_range(0.0..height as f64),
                rng.random_range(0.05..0.25) * width.min(height) as f64,
                rng.random_range(-60.0..60.0),
            )
        })
        .collect();

    let (ca, sa) = (texture_angle.cos(), texture_angle.sin());
    let mut samples = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let u = x as f64 / width as f64;
            let v = y as f64 / height as f64;
            let mut p = 128.0
                + 50.0 * (std::f64::consts::TAU * fx * u * 0.25).sin()
                + 30.0 * (std::f64::consts::TAU * fy * v * 0.25).cos();
            // Texture only in the right half so scenes have flat and busy regions.
            if u > 0.5 {
                p += texture_amp * ((x as f64 * ca + y as f64 * sa) * texture_freq).sin();
            }
            for &(cx, cy, r, delta) in &shapes {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                if dx * dx + dy * dy <= r * r {
                    p += delta;
                }
            }
            p += rng.random_range(-3.0..3.0);
            samples.push(p.round().clamp(0.0, 255.0) as u8);
        }
    }
    ImageBuffer::new(width, height, 1, samples).expect("geometry is consistent")
}

/// `count` scenes named `scene_00.pgm`, `scene_01.pgm`, ... with seeds
/// `seed, seed + 1, ...`.
pub fn scenes(count: usize, width: usize, height: usize, seed: u64) -> Vec<(String, ImageBuffer)> {
    (0..count)
        .map(|i| {
            (
                format!("scene_{i:02}.pgm"),
                scene(width, height, seed.wrapping_add(i as u64)),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        assert_eq!(scene(40, 30, 5), scene(40, 30, 5));
        assert_ne!(scene(40, 30, 5), scene(40, 30, 6));
    }

    #[test]
    fn uses_dynamic_range() {
        let img = scene(64, 64, 1);
        let min = *img.samples().iter().min().unwrap();
        let max = *img.samples().iter().max().unwrap();
        assert!(max - min > 60);
    }
}
