//! Exact uniform sampling of big integers.
//!
//! Every random decision in the crate flows through [`uniform_below`]: a
//! rejection loop over fixed-width random blocks, which is exactly uniform
//! for unbounded integers. Sessions use a seeded ChaCha12 stream, so one
//! seed fully determines the output sequence on a given build.

use num_bigint::BigUint;
use num_traits::Zero;
use rand::{RngCore, SeedableRng};

/// The deterministic per-session generator.
pub type SessionRng = rand_chacha::ChaCha12Rng;

pub fn session_rng(seed: u64) -> SessionRng {
    SessionRng::seed_from_u64(seed)
}

/// A uniform integer in `[0, bound)`, exact for any positive `bound`.
///
/// Draws `bound.bits()` random bits, masks the top block, and rejects
/// values `>= bound`; each round succeeds with probability > 1/2.
pub fn uniform_below<R: RngCore + ?Sized>(rng: &mut R, bound: &BigUint) -> BigUint {
    assert!(!bound.is_zero(), "uniform_below requires a positive bound");
    let bits = bound.bits();
    let blocks = bits.div_ceil(32) as usize;
    let top_bits = bits - 32 * (blocks as u64 - 1);
    let mask: u32 = if top_bits == 32 {
        u32::MAX
    } else {
        (1u32 << top_bits) - 1
    };
    let mut buf = vec![0u32; blocks];
    loop {
        for b in buf.iter_mut() {
            *b = rng.next_u32();
        }
        buf[blocks - 1] &= mask;
        let candidate = BigUint::from_slice(&buf);
        if &candidate < bound {
            return candidate;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stays_below_bound() {
        let mut rng = session_rng(7);
        for bound in [1u64, 2, 3, 5, 31, 1 << 20] {
            let b = BigUint::from(bound);
            for _ in 0..200 {
                assert!(uniform_below(&mut rng, &b) < b);
            }
        }
    }

    #[test]
    fn covers_small_ranges() {
        let mut rng = session_rng(42);
        let bound = BigUint::from(7u32);
        let mut seen = [false; 7];
        for _ in 0..500 {
            let v: u32 = uniform_below(&mut rng, &bound).try_into().unwrap();
            seen[v as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn wide_bounds_work() {
        let mut rng = session_rng(1);
        let bound = BigUint::from(1u8) << 200;
        let v = uniform_below(&mut rng, &bound);
        assert!(v < bound);
        let odd = (BigUint::from(1u8) << 130) + BigUint::from(12345u32);
        for _ in 0..50 {
            assert!(uniform_below(&mut rng, &odd) < odd);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a: Vec<BigUint> = {
            let mut rng = session_rng(99);
            (0..20)
                .map(|_| uniform_below(&mut rng, &BigUint::from(1000u32)))
                .collect()
        };
        let b: Vec<BigUint> = {
            let mut rng = session_rng(99);
            (0..20)
                .map(|_| uniform_below(&mut rng, &BigUint::from(1000u32)))
                .collect()
        };
        assert_eq!(a, b);
    }
}
