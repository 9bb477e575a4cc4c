//! Seed-keyed deterministic byte streams (SHAKE256) and uniform sampling.

use num_bigint::BigUint;
use num_traits::Zero;
use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::{Shake256, Shake256Reader};

pub struct Stream {
    reader: Shake256Reader,
}

impl Stream {
    /// Stream over `SHAKE256(part_0 ‖ part_1 ‖ …)`.
    pub fn new(parts: &[&[u8]]) -> Self {
        let mut h = Shake256::default();
        for p in parts {
            h.update(p);
        }
        Self {
            reader: h.finalize_xof(),
        }
    }

    pub fn fill(&mut self, buf: &mut [u8]) {
        self.reader.read(buf);
    }

    pub fn next_u32(&mut self) -> u32 {
        let mut b = [0u8; 4];
        self.fill(&mut b);
        u32::from_be_bytes(b)
    }

    /// `bits` random bits as an integer (top byte masked).
    pub fn bits(&mut self, bits: u64) -> BigUint {
        let nbytes = bits.div_ceil(8) as usize;
        let mut buf = vec![0u8; nbytes];
        self.fill(&mut buf);
        let excess = nbytes as u64 * 8 - bits;
        if excess > 0 {
            buf[0] &= 0xff >> excess;
        }
        BigUint::from_bytes_be(&buf)
    }

    /// Uniform integer in `[0, bound)`.
    ///
    /// Draws `8·ceil(|bound|/8)`-bit big-endian values and rejects those at
    /// or above the largest multiple of `bound`, then reduces.
    pub fn below(&mut self, bound: &BigUint) -> BigUint {
        assert!(!bound.is_zero());
        let nbytes = bound.bits().div_ceil(8) as usize;
        let space = BigUint::from(1u32) << (nbytes * 8);
        let limit = &space - (&space % bound);
        let mut buf = vec![0u8; nbytes];
        loop {
            self.fill(&mut buf);
            let x = BigUint::from_bytes_be(&buf);
            if x < limit {
                return x % bound;
            }
        }
    }

    /// Uniform integer in `[0, bound)` for small bounds.
    pub fn below_u32(&mut self, bound: u32) -> u32 {
        assert!(bound > 0);
        let limit = u32::MAX - (u32::MAX % bound);
        loop {
            let x = self.next_u32();
            if x < limit {
                return x % bound;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        let q = BigUint::from(11u32);
        let mut a = Stream::new(&[b"x", &[1, 2]]);
        let mut b = Stream::new(&[b"x", &[1, 2]]);
        let xs: Vec<_> = (0..50).map(|_| a.below(&q)).collect();
        let ys: Vec<_> = (0..50).map(|_| b.below(&q)).collect();
        assert_eq!(xs, ys);
        assert!(xs.iter().all(|x| x < &q));
        // all residues show up in 50 draws of Z_11 for this stream
        for r in 0u32..11 {
            assert!(xs.contains(&BigUint::from(r)));
        }
    }

    #[test]
    fn bits_respects_width() {
        let mut s = Stream::new(&[b"w"]);
        for _ in 0..100 {
            assert!(s.bits(13).bits() <= 13);
        }
    }
}
