//! Seeded workloads shared by the benchmarks.

use fusekit::geometry::so3;
use fusekit::{ColoredPointCloud, Sim3, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn points(seed: u64, n: usize, half: f64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Vec3::new(
                rng.random_range(-half..half),
                rng.random_range(-half..half),
                rng.random_range(-half..half),
            )
        })
        .collect()
}

pub fn cloud(seed: u64, n: usize, half: f64) -> ColoredPointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0105);
    let colors = (0..n)
        .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
        .collect();
    ColoredPointCloud::new(points(seed, n, half), colors).expect("valid cloud")
}

/// A fixed, moderately rotated similarity.
pub fn transform() -> Sim3 {
    Sim3::new(1.3, so3::exp(&Vec3::new(0.2, -0.1, 0.3)), Vec3::new(0.5, -1.0, 2.0)).expect("positive scale")
}

/// Points on a displaced wavy surface, so ICP has structure to lock onto.
pub fn surface(seed: u64, n: usize) -> ColoredPointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions: Vec<Vec3> = (0..n)
        .map(|_| {
            let (x, y): (f64, f64) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            Vec3::new(x, y, 0.5 * (x.sin() + (0.7 * y).cos()))
        })
        .collect();
    let colors = vec![Vec3::repeat(0.5); n];
    ColoredPointCloud::new(positions, colors).expect("valid cloud")
}
