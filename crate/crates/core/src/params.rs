//! Public system parameters `G = (p, q, g)` and code geometry.
//!
//! `q` is a prime dividing `p − 1`, and every `g_v` generates the order-`q`
//! subgroup of `Z_p*`. Data and coding coefficients live in `Z_q`; hashes
//! live in that subgroup.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::arith::{self, CombTable, FixedBases, MontField};
use crate::prime::is_probable_prime;
use crate::stream::Stream;

pub const MAGIC: &[u8; 4] = b"CCLS";
pub const FORMAT_VERSION: u8 = 0x01;

/// Prime-search budget, per candidate bit.
const ATTEMPTS_PER_BIT: u64 = 100;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParamsError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("parameter generation failed: {0}")]
    GenerationFailure(String),
    #[error("malformed parameter encoding: {0}")]
    MalformedEncoding(String),
    #[error("parameters unusable for arithmetic: {0}")]
    Unusable(String),
}

#[derive(Clone)]
pub struct SystemParams {
    p: BigUint,
    q: BigUint,
    g: Vec<BigUint>,
    k: u32,
    element_size: u32,
    s_b: u64,
    seed: [u8; 32],
    ctx: OnceLock<Result<Arc<GroupContext>, ParamsError>>,
}

impl PartialEq for SystemParams {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p
            && self.q == other.q
            && self.g == other.g
            && self.k == other.k
            && self.element_size == other.element_size
            && self.s_b == other.s_b
            && self.seed == other.seed
    }
}

impl Eq for SystemParams {}

impl fmt::Debug for SystemParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemParams")
            .field("p_bits", &self.p.bits())
            .field("q_bits", &self.q.bits())
            .field("m", &self.g.len())
            .field("k", &self.k)
            .field("element_size", &self.element_size)
            .field("s_b", &self.s_b)
            .finish()
    }
}

/// `m = ceil(ceil(s_B / k) / element_size)`.
pub fn elements_per_fragment(s_b: u64, k: u32, element_size: u32) -> u64 {
    s_b.div_ceil(k as u64).div_ceil(element_size as u64).max(1)
}

/// `(p_bits, q_bits, element_size)` of the production profile.
pub const PRODUCTION: (u64, u64, u32) = (1024, 257, 32);

impl SystemParams {
    /// Assembles parameters without checking them; see [`validate_params`].
    pub fn from_parts(
        p: BigUint,
        q: BigUint,
        g: Vec<BigUint>,
        k: u32,
        element_size: u32,
        s_b: u64,
        seed: [u8; 32],
    ) -> Self {
        Self {
            p,
            q,
            g,
            k,
            element_size,
            s_b,
            seed,
            ctx: OnceLock::new(),
        }
    }

    /// The hand-checkable profile `p = 23, q = 11, g = (2, 4)`, `k = m = 2`.
    /// Elements are supplied directly, so `element_size` is 0 and blocks
    /// cannot be split.
    pub fn toy() -> Self {
        Self::from_parts(
            BigUint::from(23u32),
            BigUint::from(11u32),
            vec![BigUint::from(2u32), BigUint::from(4u32)],
            2,
            0,
            0,
            [0; 32],
        )
    }

    /// Production profile (1024-bit p, 257-bit q, 32-byte elements).
    pub fn production(k: u32, s_b: u64, seed: [u8; 32]) -> Result<Self, ParamsError> {
        generate_params(PRODUCTION.0, PRODUCTION.1, k, s_b, PRODUCTION.2, seed)
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }
    pub fn q(&self) -> &BigUint {
        &self.q
    }
    pub fn g(&self) -> &[BigUint] {
        &self.g
    }
    pub fn k(&self) -> usize {
        self.k as usize
    }
    pub fn m(&self) -> usize {
        self.g.len()
    }
    pub fn element_size(&self) -> usize {
        self.element_size as usize
    }
    pub fn s_b(&self) -> u64 {
        self.s_b
    }
    pub fn seed(&self) -> &[u8; 32] {
        &self.seed
    }

    /// `ceil(|p|/8)`: width of a serialized group element.
    pub fn hash_bytes(&self) -> usize {
        self.p.bits().div_ceil(8) as usize
    }

    /// `ceil(|q|/8)`: width of a serialized field element.
    pub fn element_bytes(&self) -> usize {
        self.q.bits().div_ceil(8) as usize
    }

    /// Same group and seed, new `(k, s_B)`. The generator vector is the
    /// prefix (or seed-stream extension) of the current one, so the result is
    /// identical to calling [`generate_params`] with the new geometry.
    pub fn reshape(&self, k: u32, s_b: u64) -> Result<Self, ParamsError> {
        if k == 0 || s_b < k as u64 {
            return Err(ParamsError::InvalidGeometry(format!(
                "need k >= 1 and s_B >= k (k={k}, s_B={s_b})"
            )));
        }
        if self.element_size == 0 {
            return Err(ParamsError::InvalidGeometry(
                "profile has no element size".into(),
            ));
        }
        let m = elements_per_fragment(s_b, k, self.element_size) as usize;
        let g = if m <= self.g.len() {
            self.g[..m].to_vec()
        } else {
            derive_generators(&self.p, &self.q, &self.seed, m)?
        };
        Ok(Self::from_parts(
            self.p.clone(),
            self.q.clone(),
            g,
            k,
            self.element_size,
            s_b,
            self.seed,
        ))
    }

    /// Cached Montgomery contexts and precomputed generator tables.
    pub(crate) fn context(&self) -> Result<&GroupContext, ParamsError> {
        self.ctx
            .get_or_init(|| GroupContext::build(self).map(Arc::new))
            .as_ref()
            .map(|a| a.as_ref())
            .map_err(Clone::clone)
    }
}

/// Per-parameter arithmetic state, built once and read-only thereafter.
pub(crate) struct GroupContext {
    pub p: MontField,
    pub q: MontField,
    pub generators: GeneratorTables,
}

pub(crate) enum GeneratorTables {
    /// Small `m`: comb tables, no squarings per hash.
    Comb(CombTable),
    /// Large `m`: shared-squaring interleaved exponentiation.
    Straus(FixedBases),
}

/// Memory cap for generator comb tables.
const COMB_BUDGET_BYTES: usize = 48 << 20;

impl GroupContext {
    fn build(params: &SystemParams) -> Result<Self, ParamsError> {
        let p = MontField::new(&params.p)
            .ok_or_else(|| ParamsError::Unusable("p must be an odd integer >= 3".into()))?;
        let q = MontField::new(&params.q)
            .ok_or_else(|| ParamsError::Unusable("q must be an odd integer >= 3".into()))?;
        let g: Vec<Vec<u64>> = params.g.iter().map(|x| p.to_mont(x)).collect();
        let q_bits = params.q.bits() as usize;
        let comb_window = 8;
        let generators =
            if CombTable::footprint(g.len(), p.limbs(), q_bits, comb_window) <= COMB_BUDGET_BYTES {
                GeneratorTables::Comb(CombTable::new(&p, &g, q_bits, comb_window))
            } else {
                let bytes_per = p.limbs() * 8;
                let window = if g.len() * 32 * bytes_per <= COMB_BUDGET_BYTES {
                    6
                } else if g.len() * 16 * bytes_per <= COMB_BUDGET_BYTES {
                    5
                } else {
                    4
                };
                GeneratorTables::Straus(FixedBases::new(&p, &g, window))
            };
        Ok(Self {
            p,
            q,
            generators,
        })
    }

    /// `∏ g_v^{e_v}` in Montgomery form; exponents already reduced mod q.
    pub fn generator_product(&self, exponents: &[&[u64]]) -> Vec<u64> {
        match &self.generators {
            GeneratorTables::Comb(t) => t.multi_exp(&self.p, exponents),
            GeneratorTables::Straus(t) => t.multi_exp(&self.p, exponents),
        }
    }
}

/// Generates a Schnorr group of the requested sizes plus `m` subgroup
/// generators, deterministically from `seed`.
///
/// `q` is searched first from a seed stream; then `p = q·t + 1` over
/// increasing even `t` starting at a seed-derived point of the range that
/// keeps `|p| = p_bits`.
pub fn generate_params(
    p_bits: u64,
    q_bits: u64,
    k: u32,
    s_b: u64,
    element_size: u32,
    seed: [u8; 32],
) -> Result<SystemParams, ParamsError> {
    if q_bits < 2 || p_bits <= q_bits {
        return Err(ParamsError::InvalidGeometry(format!(
            "need q_bits >= 2 and p_bits > q_bits (got {p_bits}/{q_bits})"
        )));
    }
    if p_bits > 64 * arith::MAX_LIMBS as u64 {
        return Err(ParamsError::InvalidGeometry(format!(
            "p_bits {p_bits} exceeds the supported {}",
            64 * arith::MAX_LIMBS
        )));
    }
    if element_size == 0 || element_size as u64 * 8 >= q_bits {
        return Err(ParamsError::InvalidGeometry(format!(
            "element_size*8 = {} must be in [8, |q|) with |q| = {q_bits}",
            element_size as u64 * 8
        )));
    }
    if k == 0 || s_b < k as u64 {
        return Err(ParamsError::InvalidGeometry(format!(
            "need k >= 1 and s_B >= k (k={k}, s_B={s_b})"
        )));
    }

    let (p, q) = find_group(p_bits, q_bits, &seed)?;
    let m = elements_per_fragment(s_b, k, element_size) as usize;
    let g = derive_generators(&p, &q, &seed, m)?;
    Ok(SystemParams::from_parts(p, q, g, k, element_size, s_b, seed))
}

fn find_group(p_bits: u64, q_bits: u64, seed: &[u8; 32]) -> Result<(BigUint, BigUint), ParamsError> {
    let mut stream = Stream::new(&[
        b"ccls-group",
        seed,
        &p_bits.to_be_bytes(),
        &q_bits.to_be_bytes(),
    ]);
    let one = BigUint::one();

    let top_q = &one << (q_bits - 1);
    let mut q = None;
    for _ in 0..ATTEMPTS_PER_BIT * q_bits {
        let candidate = stream.bits(q_bits) | &top_q | &one;
        if is_probable_prime(&candidate) {
            q = Some(candidate);
            break;
        }
    }
    let q = q.ok_or_else(|| {
        ParamsError::GenerationFailure(format!("no {q_bits}-bit prime q found"))
    })?;

    // p in [2^(p_bits-1), 2^p_bits - 1]  =>  t in [t_min, t_max]
    let p_low = &one << (p_bits - 1);
    let p_high = (&one << p_bits) - &one;
    let t_min = (&p_low - &one).div_ceil(&q);
    let t_max = (&p_high - &one) / &q;
    let t_min = if t_min.is_odd() { t_min + 1u32 } else { t_min };
    if t_min > t_max {
        return Err(ParamsError::GenerationFailure(format!(
            "no {p_bits}-bit p = q*t + 1 exists for this q"
        )));
    }
    let span = &t_max - &t_min + 1u32;
    let mut t = &t_min + stream.below(&span);
    if t.is_odd() {
        t += 1u32;
    }
    for _ in 0..ATTEMPTS_PER_BIT * p_bits {
        if t > t_max {
            t = t_min.clone();
        }
        let p = &q * &t + &one;
        if is_probable_prime(&p) {
            return Ok((p, q));
        }
        t += 2u32;
    }
    Err(ParamsError::GenerationFailure(format!(
        "no {p_bits}-bit prime p = q*t + 1 found within the attempt budget"
    )))
}

/// `g_v = x_v^((p−1)/q) mod p` for seed-derived `x_v ∈ [2, p−2]`, skipping
/// results equal to 1. The stream depends only on `(seed, p, q)`, so a
/// shorter vector is always a prefix of a longer one.
fn derive_generators(
    p: &BigUint,
    q: &BigUint,
    seed: &[u8; 32],
    m: usize,
) -> Result<Vec<BigUint>, ParamsError> {
    let one = BigUint::one();
    let cofactor = (p - &one) / q;
    let span = p - 3u32;
    if span.is_zero() {
        return Err(ParamsError::GenerationFailure("p too small".into()));
    }
    let mut stream = Stream::new(&[b"ccls-generators", seed, &p.to_bytes_be(), &q.to_bytes_be()]);
    let mut g = Vec::with_capacity(m);
    let mut misses = 0u64;
    while g.len() < m {
        let x = stream.below(&span) + 2u32;
        let gv = x.modpow(&cofactor, p);
        if gv == one {
            misses += 1;
            if misses > 1000 + 10 * m as u64 {
                return Err(ParamsError::GenerationFailure(
                    "could not find subgroup generators".into(),
                ));
            }
            continue;
        }
        g.push(gv);
    }
    Ok(g)
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    QNotPrime,
    PNotPrime,
    QDoesNotDivide,
    GeneratorIsIdentity(usize),
    GeneratorOutOfRange(usize),
    GeneratorWrongOrder(usize),
    NoGenerators,
    ZeroFragments,
    Geometry,
    FragmentLength { expected: u64, actual: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::QNotPrime => write!(f, "q not prime"),
            Violation::PNotPrime => write!(f, "p not prime"),
            Violation::QDoesNotDivide => write!(f, "q does not divide p-1"),
            Violation::GeneratorIsIdentity(v) => write!(f, "generator equals identity (g[{v}])"),
            Violation::GeneratorOutOfRange(v) => write!(f, "generator outside [1, p-1] (g[{v}])"),
            Violation::GeneratorWrongOrder(v) => write!(f, "generator not of order q (g[{v}])"),
            Violation::NoGenerators => write!(f, "generator vector is empty"),
            Violation::ZeroFragments => write!(f, "k must be positive"),
            Violation::Geometry => write!(f, "element_size*8 must be below |q|"),
            Violation::FragmentLength { expected, actual } => {
                write!(f, "m = {actual} but s_B/k/element_size gives {expected}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(|v| v.to_string()).collect()
    }
}

/// Checks every parameter invariant and reports all failures.
///
/// Geometry checks are skipped for profiles with `element_size = 0`, whose
/// elements are supplied directly.
pub fn validate_params(params: &SystemParams) -> ValidationReport {
    let mut violations = Vec::new();
    let one = BigUint::one();
    let q_prime = is_probable_prime(&params.q);
    if !q_prime {
        violations.push(Violation::QNotPrime);
    }
    if !is_probable_prime(&params.p) {
        violations.push(Violation::PNotPrime);
    }
    let divides = !params.q.is_zero() && params.p > one && ((&params.p - &one) % &params.q).is_zero();
    if !divides {
        violations.push(Violation::QDoesNotDivide);
    }
    if params.g.is_empty() {
        violations.push(Violation::NoGenerators);
    }
    for (v, gv) in params.g.iter().enumerate() {
        if gv == &one {
            violations.push(Violation::GeneratorIsIdentity(v));
        } else if gv.is_zero() || gv >= &params.p {
            violations.push(Violation::GeneratorOutOfRange(v));
        } else if params.p > one && gv.modpow(&params.q, &params.p) != one {
            violations.push(Violation::GeneratorWrongOrder(v));
        }
    }
    if params.k == 0 {
        violations.push(Violation::ZeroFragments);
    }
    if params.element_size > 0 {
        if params.element_size as u64 * 8 >= params.q.bits() {
            violations.push(Violation::Geometry);
        }
        if params.k > 0 {
            let expected = elements_per_fragment(params.s_b, params.k, params.element_size);
            if expected != params.g.len() as u64 {
                violations.push(Violation::FragmentLength {
                    expected,
                    actual: params.g.len(),
                });
            }
        }
    }
    ValidationReport { violations }
}

/// Binary parameter file: `"CCLS" ‖ 0x01 ‖ len32(p) ‖ p ‖ len32(q) ‖ q ‖ m32 ‖
/// g_1..g_m (each ceil(|p|/8) bytes) ‖ k32 ‖ element_size32 ‖ s_B64 ‖ seed`,
/// all integers big-endian.
pub fn serialize_params(params: &SystemParams) -> Vec<u8> {
    let width = params.hash_bytes();
    let p = params.p.to_bytes_be();
    let q = params.q.to_bytes_be();
    let mut out = Vec::with_capacity(4 + 1 + 8 + p.len() + q.len() + 4 + width * params.m() + 48);
    out.extend_from_slice(MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&(p.len() as u32).to_be_bytes());
    out.extend_from_slice(&p);
    out.extend_from_slice(&(q.len() as u32).to_be_bytes());
    out.extend_from_slice(&q);
    out.extend_from_slice(&(params.m() as u32).to_be_bytes());
    for gv in &params.g {
        out.extend_from_slice(&fixed_width_be(gv, width));
    }
    out.extend_from_slice(&params.k.to_be_bytes());
    out.extend_from_slice(&params.element_size.to_be_bytes());
    out.extend_from_slice(&params.s_b.to_be_bytes());
    out.extend_from_slice(&params.seed);
    out
}

pub fn parse_params(bytes: &[u8]) -> Result<SystemParams, ParamsError> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != MAGIC {
        return Err(ParamsError::MalformedEncoding("bad magic".into()));
    }
    let version = r.take(1)?[0];
    if version != FORMAT_VERSION {
        return Err(ParamsError::MalformedEncoding(format!(
            "unsupported version {version:#04x}"
        )));
    }
    let p_len = r.u32()? as usize;
    let p = BigUint::from_bytes_be(r.take(p_len)?);
    let q_len = r.u32()? as usize;
    let q = BigUint::from_bytes_be(r.take(q_len)?);
    if p.is_zero() || q.is_zero() {
        return Err(ParamsError::MalformedEncoding("zero modulus".into()));
    }
    let width = p.bits().div_ceil(8) as usize;
    let m = r.u32()? as usize;
    if m.checked_mul(width).is_none_or(|n| n > r.remaining()) {
        return Err(ParamsError::MalformedEncoding("truncated generators".into()));
    }
    let g = (0..m)
        .map(|_| r.take(width).map(BigUint::from_bytes_be))
        .collect::<Result<Vec<_>, _>>()?;
    let k = r.u32()?;
    let element_size = r.u32()?;
    let s_b = u64::from_be_bytes(r.take(8)?.try_into().unwrap());
    let seed: [u8; 32] = r.take(32)?.try_into().unwrap();
    if r.remaining() != 0 {
        return Err(ParamsError::MalformedEncoding(format!(
            "{} trailing bytes",
            r.remaining()
        )));
    }
    Ok(SystemParams::from_parts(p, q, g, k, element_size, s_b, seed))
}

/// Big-endian bytes of `x`, left-padded to `width`.
pub fn fixed_width_be(x: &BigUint, width: usize) -> Vec<u8> {
    let raw = x.to_bytes_be();
    let raw: &[u8] = if x.is_zero() { &[] } else { &raw };
    assert!(raw.len() <= width, "value wider than {width} bytes");
    let mut out = vec![0u8; width - raw.len()];
    out.extend_from_slice(raw);
    out
}

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], ParamsError> {
        if self.remaining() < n {
            return Err(ParamsError::MalformedEncoding(format!(
                "truncated: wanted {n} bytes at offset {}",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u32(&mut self) -> Result<u32, ParamsError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, ParamsError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small(seed: u8) -> SystemParams {
        generate_params(128, 65, 4, 1000, 8, [seed; 32]).unwrap()
    }

    #[test]
    fn toy_profile_validates() {
        let toy = SystemParams::toy();
        assert!(validate_params(&toy).is_ok(), "{:?}", validate_params(&toy));
        // the three facts behind the profile
        assert_eq!(BigUint::from(22u32) % 11u32, BigUint::zero());
        assert_eq!(BigUint::from(2u32).modpow(&BigUint::from(11u32), &BigUint::from(23u32)), BigUint::one());
        assert_eq!(BigUint::from(4u32).modpow(&BigUint::from(11u32), &BigUint::from(23u32)), BigUint::one());
    }

    #[test]
    fn identity_generator_reported() {
        let mut toy = SystemParams::toy();
        toy.g[0] = BigUint::one();
        let report = validate_params(&toy);
        assert_eq!(report.violations, vec![Violation::GeneratorIsIdentity(0)]);
        assert!(report.messages()[0].contains("generator equals identity"));
    }

    #[test]
    fn composite_q_reported() {
        let mut toy = SystemParams::toy();
        toy.q = BigUint::from(12u32);
        let report = validate_params(&toy);
        assert!(report.violations.contains(&Violation::QNotPrime));
        assert!(report.messages().iter().any(|m| m == "q not prime"));
    }

    #[test]
    fn element_size_too_wide_for_q() {
        let err = generate_params(1024, 257, 32, 1 << 20, 33, [0; 32]).unwrap_err();
        assert!(matches!(err, ParamsError::InvalidGeometry(_)));
    }

    #[test]
    fn bad_bit_sizes_rejected() {
        assert!(generate_params(64, 64, 1, 8, 1, [0; 32]).is_err());
        assert!(generate_params(10, 1, 1, 8, 1, [0; 32]).is_err());
    }

    #[test]
    fn small_generation_is_valid_and_deterministic() {
        let a = small(7);
        let b = small(7);
        assert_eq!(a, b);
        assert_eq!(serialize_params(&a), serialize_params(&b));
        assert_ne!(a, small(8));
        assert_eq!(a.p().bits(), 128);
        assert_eq!(a.q().bits(), 65);
        assert_eq!(a.m(), 32); // ceil(ceil(1000/4)/8)
        assert!(validate_params(&a).is_ok());
    }

    #[test]
    fn reshape_is_prefix_of_generation() {
        let big = generate_params(128, 65, 2, 1000, 8, [3; 32]).unwrap();
        let direct = generate_params(128, 65, 8, 1000, 8, [3; 32]).unwrap();
        assert_eq!(big.reshape(8, 1000).unwrap(), direct);
        assert_eq!(direct.reshape(2, 1000).unwrap(), big);
    }

    #[test]
    fn truncated_encoding_rejected() {
        let bytes = serialize_params(&SystemParams::toy());
        for cut in [0, 3, 5, 9, bytes.len() - 1] {
            assert!(matches!(
                parse_params(&bytes[..cut]),
                Err(ParamsError::MalformedEncoding(_))
            ));
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(parse_params(&extra).is_err());
        let mut bad_magic = bytes;
        bad_magic[0] = b'X';
        assert!(parse_params(&bad_magic).is_err());
    }

    #[test]
    fn toy_roundtrip() {
        let toy = SystemParams::toy();
        assert_eq!(parse_params(&serialize_params(&toy)).unwrap(), toy);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn roundtrip_any_fields(
            p in 5u64..u64::MAX,
            q in 3u64..1_000_000,
            g in proptest::collection::vec(1u64..1000, 0..6),
            k in any::<u32>(),
            es in any::<u32>(),
            s_b in any::<u64>(),
            seed in any::<[u8; 32]>(),
        ) {
            let p = BigUint::from(p) | BigUint::from(1u32 << 10);
            let g = g.into_iter().map(BigUint::from).collect();
            let params = SystemParams::from_parts(p, BigUint::from(q), g, k, es, s_b, seed);
            prop_assert_eq!(parse_params(&serialize_params(&params)).unwrap(), params);
        }
    }
}
