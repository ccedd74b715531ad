//! Counter-based random streams: every consumer derives its own generator
//! from the run seed and a tag path, so scheduling order never changes a
//! result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::Vec3;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic generator for `(seed, path...)`.
pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut key = splitmix(seed);
    for &p in path {
        key = splitmix(key ^ splitmix(p));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(path.first().copied().unwrap_or(0));
    rng
}

/// Uniform point in the Euclidean ball of radius `r` about `center`.
pub fn uniform_in_ball(rng: &mut impl rand::Rng, center: &Vec3, r: f64) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if v.norm_squared() <= 1.0 {
            return center + v * r;
        }
    }
}
