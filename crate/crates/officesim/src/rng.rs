//! Counter-based random number generation.
//!
//! Every random decision in a run is keyed by *where it happens* — a chain of
//! (tag, value) pairs such as (replication, agent, day, minute, purpose) mixed
//! into a 64-bit key — rather than drawn from a shared sequential stream. Two
//! consequences the simulator relies on:
//!
//! * removing an agent, reordering replications, or skipping a whole phase
//!   never shifts anybody else's draws;
//! * paired scenario arms (same seed, different strategy) see identical draws
//!   at identical decision points, which is what makes common-random-number
//!   comparisons between strategies meaningful.
//!
//! The mixer is the splitmix64 finalizer, applied once per chained part. It is
//! not cryptographic; it just has to be stable across platforms and versions,
//! which is why this is hand-rolled instead of depending on an external
//! generator whose stream may change under us.

/// Domain-separation tags for the draw-site chain.
///
/// Values are stable; changing one silently changes every seeded output.
pub mod tag {
    pub const REPLICATION: u64 = 0x01;
    pub const USER: u64 = 0x02;
    pub const DAY: u64 = 0x03;
    pub const MINUTE: u64 = 0x04;
    pub const PURPOSE: u64 = 0x05;
    pub const LIGHT: u64 = 0x06;
    pub const INDEX: u64 = 0x07;
    pub const ATTEMPT: u64 = 0x08;
    pub const MODULE: u64 = 0x09;
}

/// Purposes distinguishing draws that share the same (agent, day, minute) site.
pub mod purpose {
    pub const WEEKEND_PRESENCE: u64 = 0x10;
    pub const ARRIVAL: u64 = 0x11;
    pub const LEAVE: u64 = 0x12;
    pub const MIDDAY_GATE: u64 = 0x13;
    pub const MIDDAY_START: u64 = 0x14;
    pub const MIDDAY_DURATION: u64 = 0x15;
    pub const EXCURSION_GATE: u64 = 0x20;
    pub const EXCURSION_ROOM: u64 = 0x21;
    pub const EXCURSION_STAY: u64 = 0x22;
    pub const COMPUTER_STOP: u64 = 0x23;
    pub const COMPUTER_OFF: u64 = 0x24;
    pub const LEAVE_OFF: u64 = 0x25;
    pub const EMAIL_GATE: u64 = 0x30;
    pub const EMAIL_RECIPIENT: u64 = 0x31;
    pub const STAFF_LIGHT_OFF: u64 = 0x40;
    pub const POP_AWARENESS: u64 = 0x50;
    pub const POP_SHUFFLE_WORK: u64 = 0x51;
    pub const POP_SHUFFLE_AWARENESS: u64 = 0x52;
    pub const ASSIGN_SHUFFLE: u64 = 0x53;
    pub const WS_REWIRE: u64 = 0x60;
    pub const WS_TARGET: u64 = 0x61;
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A draw-site key. Cheap to copy; extend with [`RngKey::with`], consume with
/// one of the draw methods. Each fully-chained key yields one fixed value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngKey(u64);

impl RngKey {
    pub fn root(seed: u64) -> Self {
        RngKey(mix64(seed ^ GOLDEN))
    }

    /// Chain a (tag, value) pair into the key.
    #[inline]
    pub fn with(self, tag: u64, value: u64) -> Self {
        RngKey(mix64(
            self.0 ^ tag.wrapping_mul(GOLDEN) ^ value.wrapping_add(GOLDEN),
        ))
    }

    /// Collapse the key to a plain seed (for handing to sub-modules).
    #[inline]
    pub fn seed(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn next_u64(self) -> u64 {
        mix64(self.0 ^ GOLDEN)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn uniform(self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Bernoulli draw.
    #[inline]
    pub fn chance(self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform index in [0, n). `n` must be nonzero.
    #[inline]
    pub fn pick(self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.uniform() * n as f64) as usize % n
    }

    /// Uniform integer in [lo, hi). `hi` must exceed `lo`.
    #[inline]
    pub fn range_u32(self, lo: u32, hi: u32) -> u32 {
        debug_assert!(lo < hi);
        lo + self.pick((hi - lo) as usize) as u32
    }

    /// Uniform real in [lo, hi).
    #[inline]
    pub fn range_f64(self, lo: f64, hi: f64) -> f64 {
        lo + self.uniform() * (hi - lo)
    }
}

/// FNV-1a over an id string. Agent streams are keyed by this rather than by
/// array position, so removing one agent leaves everyone else's draws intact.
pub fn stable_hash(s: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Deterministic Fisher-Yates shuffle driven by per-index draws.
pub fn shuffle<T>(items: &mut [T], key: RngKey, purpose: u64) {
    let site = key.with(tag::PURPOSE, purpose);
    for i in (1..items.len()).rev() {
        let j = site.with(tag::INDEX, i as u64).pick(i + 1);
        items.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyed_draws_are_stable() {
        // Frozen values: byte-identical output is part of the crate contract,
        // so a change here is a breaking change to every seeded artifact.
        let k = RngKey::root(42);
        assert_eq!(k.next_u64(), 16389234289310759295);
        assert_eq!(k.with(tag::USER, 7).next_u64(), 3789413184183620349);
        let u = k.with(tag::DAY, 3).with(tag::MINUTE, 600).uniform();
        assert!((u - 0.44135489942429285).abs() < 1e-15);
    }

    #[test]
    fn chain_order_matters() {
        let k = RngKey::root(1);
        assert_ne!(
            k.with(tag::USER, 1).with(tag::DAY, 2).next_u64(),
            k.with(tag::DAY, 2).with(tag::USER, 1).next_u64()
        );
    }

    #[test]
    fn uniform_in_unit_interval() {
        let k = RngKey::root(9);
        for i in 0..10_000 {
            let u = k.with(tag::INDEX, i).uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn uniform_mean_is_centered() {
        let k = RngKey::root(123);
        let n = 20_000;
        let sum: f64 = (0..n).map(|i| k.with(tag::INDEX, i).uniform()).sum();
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn pick_covers_range() {
        let k = RngKey::root(5);
        let mut seen = [false; 10];
        for i in 0..1000 {
            seen[k.with(tag::INDEX, i).pick(10)] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut v: Vec<u32> = (0..50).collect();
        shuffle(&mut v, RngKey::root(3), purpose::POP_SHUFFLE_WORK);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(v, (0..50).collect::<Vec<_>>());
    }
}
