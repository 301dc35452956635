//! Counter-based Gaussian generator. Every draw is a pure function of
//! (seed, stream, k1, k2, slot), so a Fourier mode receives the same value
//! on every grid that resolves it.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn pack(k1: i64, k2: i64, slot: u64) -> u64 {
    // 24 bits per wavenumber is far beyond any grid we build.
    let a = (k1 as u64) & 0xFF_FFFF;
    let b = (k2 as u64) & 0xFF_FFFF;
    (a << 40) | (b << 16) | (slot & 0xFFFF)
}

/// Raw 64-bit counter output.
#[inline]
pub fn counter_u64(seed: u64, stream: u64, k1: i64, k2: i64, slot: u64) -> u64 {
    let key = mix64(seed.wrapping_add(GOLDEN.wrapping_mul(stream.wrapping_add(1))));
    mix64(key ^ mix64(pack(k1, k2, slot).wrapping_add(GOLDEN)))
}

/// Uniform on the open interval (0, 1).
#[inline]
pub fn counter_uniform(seed: u64, stream: u64, k1: i64, k2: i64, slot: u64) -> f64 {
    let x = counter_u64(seed, stream, k1, k2, slot) >> 11;
    (x as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Pair of independent standard normals for one mode (Box-Muller on libm,
/// so the bits do not depend on the platform math library).
#[inline]
pub fn counter_gaussian_pair(seed: u64, stream: u64, k1: i64, k2: i64) -> (f64, f64) {
    let u1 = counter_uniform(seed, stream, k1, k2, 0);
    let u2 = counter_uniform(seed, stream, k1, k2, 1);
    let r = libm::sqrt(-2.0 * libm::log(u1));
    let th = 2.0 * std::f64::consts::PI * u2;
    (r * libm::cos(th), r * libm::sin(th))
}

/// Streams used across the crate, kept apart so ensembles never reuse noise draws.
pub mod streams {
    pub const WHITE_NOISE: u64 = 0;
    pub const ENSEMBLE_BASE: u64 = 1000;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_vectors() {
        // Frozen outputs; any change here breaks reproducibility of stored runs.
        assert_eq!(mix64(0), 0);
        assert_eq!(mix64(1), 0x5692_161D_100B_05E5);
        let v = [
            counter_u64(0, 0, 1, 0, 0),
            counter_u64(42, 0, -3, 5, 1),
            counter_u64(u64::MAX, 7, 63, -64, 0),
        ];
        let again = [
            counter_u64(0, 0, 1, 0, 0),
            counter_u64(42, 0, -3, 5, 1),
            counter_u64(u64::MAX, 7, 63, -64, 0),
        ];
        assert_eq!(v, again);
        assert_eq!(v, FROZEN);
    }

    const FROZEN: [u64; 3] = [11240427648595828919, 16813669780797462045, 18098749321284868549];

    #[test]
    fn gaussian_moments() {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        let m = 200_000;
        for i in 0..m {
            let (a, b) = counter_gaussian_pair(9, 0, i as i64 % 500, i as i64 / 500);
            s1 += a + b;
            s2 += a * a + b * b;
        }
        let mean = s1 / (2 * m) as f64;
        let var = s2 / (2 * m) as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn uniform_in_open_interval() {
        for i in 0..10_000 {
            let u = counter_uniform(3, 1, i, -i, 0);
            assert!(u > 0.0 && u < 1.0);
        }
    }
}
