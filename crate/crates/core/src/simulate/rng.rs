use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::real::Real;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for one path on one axis: the key is derived from
/// `(seed, axis)` and the ChaCha stream id is the path index.
pub(crate) fn path_rng(seed: u64, axis: usize, path: u64) -> ChaCha8Rng {
    let key = splitmix64(seed ^ splitmix64(axis as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(path);
    rng
}

/// Writes a discrete Wiener path `W(t_0 = 0), W(t_1), …` into `out` and
/// returns nothing else; `out.len()` is `steps + 1`.
pub(crate) fn fill_path<T: Real>(rng: &mut ChaCha8Rng, sqrt_dt: T, out: &mut [T]) {
    let mut w = T::zero();
    out[0] = w;
    for slot in out.iter_mut().skip(1) {
        let z: f64 = rng.sample(StandardNormal);
        w = w + sqrt_dt * T::lit(z);
        *slot = w;
    }
}
