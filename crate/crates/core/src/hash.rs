//! Homomorphic fragment hashing.
//!
//! `h(F) = ∏_v g_v^{f_v} mod p`. Because exponents add under multiplication,
//! the hash of a linear combination `Σ α_l·F_l` (mod q) equals
//! `∏_l h(F_l)^{α_l}` (mod p), which lets a node check a coded fragment's
//! hash against the certified source hashes without seeing any data.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::arith::{FixedBases, MontField};
use crate::params::{fixed_width_be, ParamsError, SystemParams};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HashError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("element {index} is not below q")]
    ElementOutOfRange { index: usize },
    #[error("hash value not in [1, p-1]")]
    InvalidHash,
    #[error(transparent)]
    Params(#[from] ParamsError),
}

/// A group element of the order-q subgroup of `Z_p*`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FragmentHash(BigUint);

impl FragmentHash {
    pub fn new(value: BigUint) -> Self {
        Self(value)
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_one()
    }

    /// Fixed-width `ceil(|p|/8)`-byte big-endian encoding.
    pub fn to_bytes(&self, params: &SystemParams) -> Vec<u8> {
        fixed_width_be(&self.0, params.hash_bytes())
    }

    pub fn from_bytes(params: &SystemParams, bytes: &[u8]) -> Result<Self, HashError> {
        if bytes.len() != params.hash_bytes() {
            return Err(HashError::DimensionMismatch {
                expected: params.hash_bytes(),
                actual: bytes.len(),
            });
        }
        let v = BigUint::from_bytes_be(bytes);
        if v.is_zero() || &v >= params.p() {
            return Err(HashError::InvalidHash);
        }
        Ok(Self(v))
    }

    pub fn to_hex(&self, params: &SystemParams) -> String {
        hex::encode(self.to_bytes(params))
    }
}

impl fmt::Debug for FragmentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FragmentHash({:x})", self.0)
    }
}

impl From<u32> for FragmentHash {
    fn from(v: u32) -> Self {
        Self(BigUint::from(v))
    }
}

/// `m` elements of `Z_q`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Fragment {
    elements: Vec<BigUint>,
}

impl Fragment {
    pub fn new(elements: Vec<BigUint>) -> Self {
        Self { elements }
    }

    pub fn from_u64s(values: &[u64]) -> Self {
        Self::new(values.iter().map(|&v| BigUint::from(v)).collect())
    }

    pub fn zero(m: usize) -> Self {
        Self::new(vec![BigUint::zero(); m])
    }

    pub fn elements(&self) -> &[BigUint] {
        &self.elements
    }

    pub fn elements_mut(&mut self) -> &mut [BigUint] {
        &mut self.elements
    }

    pub fn into_elements(self) -> Vec<BigUint> {
        self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Checks length `m` and that every element is below `q`.
    pub fn check(&self, params: &SystemParams) -> Result<(), HashError> {
        if self.elements.len() != params.m() {
            return Err(HashError::DimensionMismatch {
                expected: params.m(),
                actual: self.elements.len(),
            });
        }
        if let Some(index) = self.elements.iter().position(|e| e >= params.q()) {
            return Err(HashError::ElementOutOfRange { index });
        }
        Ok(())
    }

    /// Wire form: 4-byte big-endian count, then `ceil(|q|/8)`-byte elements.
    pub fn to_wire(&self, params: &SystemParams) -> Vec<u8> {
        let w = params.element_bytes();
        let mut out = Vec::with_capacity(4 + w * self.len());
        out.extend_from_slice(&(self.len() as u32).to_be_bytes());
        for e in &self.elements {
            out.extend_from_slice(&fixed_width_be(e, w));
        }
        out
    }
}

impl fmt::Debug for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.elements.len() <= 8 {
            f.debug_list().entries(self.elements.iter().map(|e| e.to_string())).finish()
        } else {
            write!(f, "Fragment[{} elements]", self.elements.len())
        }
    }
}

fn mont_hash(field: &MontField, acc: &[u64]) -> FragmentHash {
    FragmentHash(field.from_mont(acc))
}

/// `∏_v g_v^{f_v} mod p`.
pub fn hash_fragment(params: &SystemParams, fragment: &Fragment) -> Result<FragmentHash, HashError> {
    fragment.check(params)?;
    let ctx = params.context()?;
    let exps: Vec<Vec<u64>> = fragment.elements.iter().map(|e| e.to_u64_digits()).collect();
    let refs: Vec<&[u64]> = exps.iter().map(|e| e.as_slice()).collect();
    Ok(mont_hash(&ctx.p, &ctx.generator_product(&refs)))
}

/// Element-wise [`hash_fragment`] over a block's `k` fragments.
pub fn hash_block(params: &SystemParams, fragments: &[Fragment]) -> Result<Vec<FragmentHash>, HashError> {
    if fragments.len() != params.k() {
        return Err(HashError::DimensionMismatch {
            expected: params.k(),
            actual: fragments.len(),
        });
    }
    fragments.iter().map(|f| hash_fragment(params, f)).collect()
}

/// `∏_l h_l^{α_l} mod p`, exponents reduced mod q.
pub fn combine_hashes(
    params: &SystemParams,
    source_hashes: &[FragmentHash],
    coeffs: &[BigUint],
) -> Result<FragmentHash, HashError> {
    if source_hashes.len() != params.k() || coeffs.len() != params.k() {
        return Err(HashError::DimensionMismatch {
            expected: params.k(),
            actual: if source_hashes.len() != params.k() {
                source_hashes.len()
            } else {
                coeffs.len()
            },
        });
    }
    let ctx = params.context()?;
    let (bases, exps) = support(params, &ctx.p, source_hashes, coeffs);
    let b: Vec<&[u64]> = bases.iter().map(|v| v.as_slice()).collect();
    let e: Vec<&[u64]> = exps.iter().map(|v| v.as_slice()).collect();
    Ok(mont_hash(&ctx.p, &ctx.p.multi_exp(&b, &e)))
}

/// Bases and reduced exponents for the nonzero coefficients only.
fn support(
    params: &SystemParams,
    field: &MontField,
    hashes: &[FragmentHash],
    coeffs: &[BigUint],
) -> (Vec<Vec<u64>>, Vec<Vec<u64>>) {
    let mut bases = Vec::new();
    let mut exps = Vec::new();
    for (h, a) in hashes.iter().zip(coeffs) {
        let e = reduce(a, params.q());
        if e.is_zero() {
            continue;
        }
        bases.push(field.to_mont(&h.0));
        exps.push(e.to_u64_digits());
    }
    (bases, exps)
}

fn reduce(a: &BigUint, q: &BigUint) -> BigUint {
    if a < q {
        a.clone()
    } else {
        a % q
    }
}

/// Whether `claimed` equals the combination of `source_hashes` under `coeffs`.
pub fn verify_coded_hash(
    params: &SystemParams,
    source_hashes: &[FragmentHash],
    coeffs: &[BigUint],
    claimed: &FragmentHash,
) -> Result<bool, HashError> {
    Ok(&combine_hashes(params, source_hashes, coeffs)? == claimed)
}

/// Whether `fragment` hashes to `claimed`.
pub fn verify_coded_fragment(
    params: &SystemParams,
    fragment: &Fragment,
    claimed: &FragmentHash,
) -> Result<bool, HashError> {
    Ok(&hash_fragment(params, fragment)? == claimed)
}

/// Precomputed tables over one block's source hashes, for checking many
/// coded-fragment hashes of that block.
pub struct SourceHashVerifier<'p> {
    params: &'p SystemParams,
    tables: FixedBases,
}

impl<'p> SourceHashVerifier<'p> {
    pub fn new(params: &'p SystemParams, source_hashes: &[FragmentHash]) -> Result<Self, HashError> {
        if source_hashes.len() != params.k() {
            return Err(HashError::DimensionMismatch {
                expected: params.k(),
                actual: source_hashes.len(),
            });
        }
        let ctx = params.context()?;
        let bases: Vec<Vec<u64>> = source_hashes.iter().map(|h| ctx.p.to_mont(&h.0)).collect();
        let window = if params.q().bits() > 128 { 6 } else { 4 };
        Ok(Self {
            params,
            tables: FixedBases::new(&ctx.p, &bases, window),
        })
    }

    /// Same value as [`combine_hashes`] over the stored source hashes.
    pub fn combine(&self, coeffs: &[BigUint]) -> Result<FragmentHash, HashError> {
        if coeffs.len() != self.tables.len() {
            return Err(HashError::DimensionMismatch {
                expected: self.tables.len(),
                actual: coeffs.len(),
            });
        }
        let ctx = self.params.context()?;
        let exps: Vec<(usize, Vec<u64>)> = coeffs
            .iter()
            .enumerate()
            .filter_map(|(i, a)| {
                let e = reduce(a, self.params.q());
                (!e.is_zero()).then(|| (i, e.to_u64_digits()))
            })
            .collect();
        let terms: Vec<(usize, &[u64])> = exps.iter().map(|(i, e)| (*i, e.as_slice())).collect();
        Ok(mont_hash(&ctx.p, &self.tables.multi_exp_sparse(&ctx.p, &terms)))
    }

    pub fn verify(&self, coeffs: &[BigUint], claimed: &FragmentHash) -> Result<bool, HashError> {
        Ok(&self.combine(coeffs)? == claimed)
    }
}

/// Uniformly random element of the order-q subgroup (a power of `g_1`).
pub(crate) fn subgroup_element(params: &SystemParams, exponent: &BigUint) -> Result<FragmentHash, HashError> {
    let ctx = params.context()?;
    let g1 = ctx.p.to_mont(&params.g()[0]);
    let e = reduce(exponent, params.q()).to_u64_digits();
    let e = if e.is_empty() { vec![0] } else { e };
    Ok(mont_hash(&ctx.p, &ctx.p.pow(&g1, &e)))
}
