//! Deterministic counting PRNG.
//!
//! All randomness in the workbench is derived by hashing `(seed, salt, a, b)`
//! tuples through a splitmix-style finalizer, so any relation bit or sample is
//! a pure function of the generator spec and never depends on platform, crate
//! versions or call history.

#[inline]
fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Hash a keyed tuple to 64 bits.
pub fn mix(seed: u64, salt: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e3779b97f4a7c15);
    z = finalize(z.wrapping_add(a.wrapping_mul(0xd1b54a32d192ed03)));
    z = finalize(z.wrapping_add(b.wrapping_mul(0x8cb92ba72f3d8dd7)));
    finalize(z)
}

/// One keyed coin flip.
pub fn bit(seed: u64, salt: u64, a: u64, b: u64) -> bool {
    mix(seed, salt, a, b) & 1 == 1
}

/// Sequential deterministic generator for sampling loops in tests and
/// evidence runs.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        finalize(self.state)
    }

    /// Uniform-ish draw from `0..bound` (`bound` must be nonzero).
    pub fn below(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound as u64) as usize
    }

    pub fn coin(&mut self) -> bool {
        self.next_u64() & 1 == 1
    }

    /// A `k`-element subset of `0..n`, sorted, without replacement.
    pub fn subset(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        let mut out = Vec::with_capacity(k);
        for _ in 0..k {
            let i = self.below(pool.len());
            out.push(pool.swap_remove(i));
        }
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_is_pure() {
        assert_eq!(mix(7, 1, 2, 3), mix(7, 1, 2, 3));
        assert_ne!(mix(7, 1, 2, 3), mix(8, 1, 2, 3));
    }

    #[test]
    fn sequence_reproducible() {
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn subset_shape() {
        let mut r = SplitMix64::new(7);
        let s = r.subset(10, 4);
        assert_eq!(s.len(), 4);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(s.iter().all(|&v| v < 10));
    }
}
