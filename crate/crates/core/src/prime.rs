//! Probabilistic primality testing (trial division + Miller–Rabin).

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::stream::Stream;

/// Miller–Rabin rounds; error probability at most 4^-40 = 2^-80.
pub const MR_ROUNDS: usize = 40;

const SMALL_PRIMES: [u32; 54] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191,
    193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

/// Witnesses are drawn from a stream keyed by `n` itself, so the verdict is
/// a pure function of `n`.
pub fn is_probable_prime(n: &BigUint) -> bool {
    if let Some(small) = n.to_u32() {
        if small < 2 {
            return false;
        }
        if SMALL_PRIMES.contains(&small) {
            return true;
        }
    }
    for &sp in &SMALL_PRIMES {
        if (n % sp).is_zero() {
            return false;
        }
    }
    if n < &BigUint::from(251u32 * 251) {
        return true;
    }

    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let mut d = n_minus_1.clone();
    let mut s = 0u32;
    while d.is_even() {
        d >>= 1;
        s += 1;
    }
    let mut witnesses = Stream::new(&[b"mr-witness", &n.to_bytes_be()]);
    // witness range [2, n-2]
    let span = n - 3u32;
    'rounds: for _ in 0..MR_ROUNDS {
        let a = witnesses.below(&span) + 2u32;
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                continue 'rounds;
            }
            if x == one {
                return false;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sieve(limit: usize) -> Vec<bool> {
        let mut is = vec![true; limit];
        is[0] = false;
        is[1] = false;
        for i in 2..limit {
            if is[i] {
                let mut j = i * i;
                while j < limit {
                    is[j] = false;
                    j += i;
                }
            }
        }
        is
    }

    #[test]
    fn agrees_with_sieve_below_100k() {
        let s = sieve(100_000);
        for (n, &expected) in s.iter().enumerate() {
            assert_eq!(is_probable_prime(&BigUint::from(n)), expected, "n = {n}");
        }
    }

    #[test]
    fn carmichael_and_known_primes() {
        for c in [561u64, 41041, 825265, 321197185, 5394826801] {
            assert!(!is_probable_prime(&BigUint::from(c)));
        }
        let m127 = (BigUint::one() << 127) - 1u32;
        assert!(is_probable_prime(&m127));
        assert!(!is_probable_prime(&(&m127 * &m127)));
    }
}
