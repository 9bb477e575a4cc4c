//! Random linear coding over `Z_q`: block splitting, deterministic
//! coefficient derivation, encoding and Gaussian-elimination decoding.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::arith::{self, MontField};
use crate::hash::{Fragment, HashError};
use crate::params::{fixed_width_be, ParamsError, Reader, SystemParams};
use crate::stream::Stream;

/// Bytes of the big-endian length prefix written ahead of the block.
pub const LENGTH_PREFIX: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodingError {
    #[error("block of {len} bytes exceeds the maximum of {max}")]
    BlockTooLarge { len: u64, max: u64 },
    #[error("corrupt layout: {0}")]
    CorruptLayout(String),
    #[error("degree {degree} outside [1, {k}]")]
    InvalidDegree { degree: usize, k: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("coded fragments belong to different blocks ({0} and {1})")]
    MixedBlocks(u64, u64),
    #[error("rank deficient: {rank} independent rows, {needed} needed")]
    RankDeficient { rank: usize, needed: usize },
    #[error("parameters have no element size; blocks cannot be packed")]
    NoElementSize,
    #[error("malformed fragment encoding: {0}")]
    Malformed(String),
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error(transparent)]
    Params(#[from] ParamsError),
}

/// Identity `(i, j, u)` of a coded fragment: node, block, index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Origin {
    pub node_id: u64,
    pub block_id: u64,
    pub index: u32,
}

impl Origin {
    pub fn new(node_id: u64, block_id: u64, index: u32) -> Self {
        Self {
            node_id,
            block_id,
            index,
        }
    }
}

/// The `k` coefficients a node uses for one coded fragment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffVector {
    pub origin: Origin,
    pub degree: usize,
    coeffs: Vec<BigUint>,
}

impl CoeffVector {
    pub fn coeffs(&self) -> &[BigUint] {
        &self.coeffs
    }

    /// Positions of the nonzero coefficients.
    pub fn support(&self) -> Vec<usize> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, _)| i)
            .collect()
    }

    /// A vector with explicit coefficients, for tests and oracles.
    pub fn from_coeffs(origin: Origin, coeffs: Vec<BigUint>) -> Self {
        let degree = coeffs.iter().filter(|c| !c.is_zero()).count();
        Self {
            origin,
            degree,
            coeffs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedFragment {
    pub origin: Origin,
    pub fragment: Fragment,
}

impl CodedFragment {
    /// Wire form: 8-byte `i`, 8-byte `j`, 4-byte `u` (big-endian), then the
    /// fragment's wire form.
    pub fn to_wire(&self, params: &SystemParams) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + 4 + params.element_bytes() * self.fragment.len());
        out.extend_from_slice(&self.origin.node_id.to_be_bytes());
        out.extend_from_slice(&self.origin.block_id.to_be_bytes());
        out.extend_from_slice(&self.origin.index.to_be_bytes());
        out.extend_from_slice(&self.fragment.to_wire(params));
        out
    }

    pub fn from_wire(params: &SystemParams, bytes: &[u8]) -> Result<Self, CodingError> {
        let mut r = Reader::new(bytes);
        let (origin, fragment) = read_coded(params, &mut r)?;
        if r.remaining() != 0 {
            return Err(CodingError::Malformed("trailing bytes".into()));
        }
        Ok(Self { origin, fragment })
    }
}

pub(crate) fn read_coded(
    params: &SystemParams,
    r: &mut Reader<'_>,
) -> Result<(Origin, Fragment), CodingError> {
    let malformed = |e: ParamsError| CodingError::Malformed(e.to_string());
    let node_id = r.u64().map_err(malformed)?;
    let block_id = r.u64().map_err(malformed)?;
    let index = r.u32().map_err(malformed)?;
    let fragment = read_fragment(params, r)?;
    Ok((Origin::new(node_id, block_id, index), fragment))
}

pub(crate) fn read_fragment(params: &SystemParams, r: &mut Reader<'_>) -> Result<Fragment, CodingError> {
    let malformed = |e: ParamsError| CodingError::Malformed(e.to_string());
    let count = r.u32().map_err(malformed)? as usize;
    let w = params.element_bytes();
    if count.checked_mul(w).is_none_or(|n| n > r.remaining()) {
        return Err(CodingError::Malformed("truncated fragment".into()));
    }
    let elements = (0..count)
        .map(|_| r.take(w).map(BigUint::from_bytes_be))
        .collect::<Result<Vec<_>, _>>()
        .map_err(malformed)?;
    Ok(Fragment::new(elements))
}

/// Parses a plain fragment's wire form.
pub fn fragment_from_wire(params: &SystemParams, bytes: &[u8]) -> Result<Fragment, CodingError> {
    let mut r = Reader::new(bytes);
    let f = read_fragment(params, &mut r)?;
    if r.remaining() != 0 {
        return Err(CodingError::Malformed("trailing bytes".into()));
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub block_len: u64,
    pub k: usize,
    pub m: usize,
    pub element_size: usize,
}

impl BlockLayout {
    pub fn capacity(&self) -> u64 {
        (self.k * self.m * self.element_size) as u64
    }
}

/// Largest block [`split_block`] accepts under `params`.
pub fn max_block_len(params: &SystemParams) -> u64 {
    let capacity = (params.k() * params.m() * params.element_size()) as u64;
    capacity.saturating_sub(LENGTH_PREFIX as u64).min(params.s_b())
}

/// Splits `8-byte length ‖ block ‖ zero padding` into `k` fragments of `m`
/// big-endian `element_size`-byte chunks; chunk `t` lands in fragment
/// `t / m` at position `t % m`.
pub fn split_block(params: &SystemParams, block: &[u8]) -> Result<(Vec<Fragment>, BlockLayout), CodingError> {
    let es = params.element_size();
    if es == 0 {
        return Err(CodingError::NoElementSize);
    }
    let max = max_block_len(params);
    if block.len() as u64 > max {
        return Err(CodingError::BlockTooLarge {
            len: block.len() as u64,
            max,
        });
    }
    let layout = BlockLayout {
        block_len: block.len() as u64,
        k: params.k(),
        m: params.m(),
        element_size: es,
    };
    let mut payload = vec![0u8; layout.capacity() as usize];
    payload[..LENGTH_PREFIX].copy_from_slice(&layout.block_len.to_be_bytes());
    payload[LENGTH_PREFIX..LENGTH_PREFIX + block.len()].copy_from_slice(block);

    let fragments = payload
        .chunks(layout.m * es)
        .map(|frag| Fragment::new(frag.chunks(es).map(BigUint::from_bytes_be).collect()))
        .collect();
    Ok((fragments, layout))
}

/// Inverse of [`split_block`].
pub fn reassemble_block(
    params: &SystemParams,
    fragments: &[Fragment],
    layout: &BlockLayout,
) -> Result<Vec<u8>, CodingError> {
    if fragments.len() != layout.k {
        return Err(CodingError::DimensionMismatch {
            expected: layout.k,
            actual: fragments.len(),
        });
    }
    let es = layout.element_size;
    if es == 0 || layout.k != params.k() || layout.m != params.m() || es != params.element_size() {
        return Err(CodingError::CorruptLayout("layout disagrees with parameters".into()));
    }
    let mut payload = Vec::with_capacity(layout.capacity() as usize);
    for f in fragments {
        if f.len() != layout.m {
            return Err(CodingError::DimensionMismatch {
                expected: layout.m,
                actual: f.len(),
            });
        }
        for e in f.elements() {
            if e.bits() > 8 * es as u64 {
                return Err(CodingError::CorruptLayout("element wider than element_size".into()));
            }
            payload.extend_from_slice(&fixed_width_be(e, es));
        }
    }
    let len = u64::from_be_bytes(payload[..LENGTH_PREFIX].try_into().unwrap());
    if len > layout.capacity() - LENGTH_PREFIX as u64 {
        return Err(CodingError::CorruptLayout(format!(
            "length prefix {len} exceeds payload capacity {}",
            layout.capacity() - LENGTH_PREFIX as u64
        )));
    }
    payload.truncate(LENGTH_PREFIX + len as usize);
    payload.drain(..LENGTH_PREFIX);
    Ok(payload)
}

/// Coefficients for coded fragment `u` of block `j` on node `i`.
///
/// The stream is `SHAKE256(seed ‖ i ‖ j ‖ u)` (8/8/4-byte big-endian). For
/// `d = k` all `k` coefficients are uniform in `[0, q)`, redrawn if all zero;
/// for `d < k` a partial Fisher–Yates shuffle picks `d` positions, each given
/// a coefficient uniform in `[1, q)`.
pub fn derive_coefficients(
    params: &SystemParams,
    node_id: u64,
    block_id: u64,
    index: u32,
    degree: usize,
) -> Result<CoeffVector, CodingError> {
    let k = params.k();
    if degree == 0 || degree > k {
        return Err(CodingError::InvalidDegree { degree, k });
    }
    let q = params.q();
    let mut stream = Stream::new(&[
        params.seed(),
        &node_id.to_be_bytes(),
        &block_id.to_be_bytes(),
        &index.to_be_bytes(),
    ]);
    let mut coeffs = vec![BigUint::zero(); k];
    if degree == k {
        loop {
            for c in coeffs.iter_mut() {
                *c = stream.below(q);
            }
            if coeffs.iter().any(|c| !c.is_zero()) {
                break;
            }
        }
    } else {
        let mut positions: Vec<usize> = (0..k).collect();
        for t in 0..degree {
            let r = t + stream.below_u32((k - t) as u32) as usize;
            positions.swap(t, r);
        }
        let q_minus_1 = q - 1u32;
        for &pos in &positions[..degree] {
            coeffs[pos] = stream.below(&q_minus_1) + 1u32;
        }
    }
    Ok(CoeffVector {
        origin: Origin::new(node_id, block_id, index),
        degree,
        coeffs,
    })
}

/// `Σ_l α_l·F_l mod q`, element-wise. Source fragments outside the vector's
/// support are never read.
pub fn encode_fragment(
    params: &SystemParams,
    fragments: &[Fragment],
    cv: &CoeffVector,
) -> Result<CodedFragment, CodingError> {
    let k = params.k();
    let m = params.m();
    if fragments.len() != k || cv.coeffs.len() != k {
        return Err(CodingError::DimensionMismatch {
            expected: k,
            actual: if fragments.len() != k { fragments.len() } else { cv.coeffs.len() },
        });
    }
    let field = &params.context()?.q;
    let n = field.limbs();
    // Products of Montgomery-form coefficients and plain data are summed
    // unreduced; one reduction per element strips the extra factor R.
    let mut terms = Vec::new();
    for (l, alpha) in cv.coeffs.iter().enumerate() {
        if alpha.is_zero() {
            continue;
        }
        let src = &fragments[l];
        if src.len() != m {
            return Err(CodingError::DimensionMismatch {
                expected: m,
                actual: src.len(),
            });
        }
        terms.push((field.to_mont(alpha), src.elements()));
    }
    let mut acc = vec![0u64; m * n];
    let mut wide = vec![0u64; 2 * n + 1];
    let mut plain = vec![0u64; n];
    for v in 0..m {
        wide.fill(0);
        for (alpha, src) in &terms {
            load(field, &src[v], &mut plain);
            // packed data rarely fills the top limb
            let len = if plain[n - 1] == 0 { n - 1 } else { n };
            arith::mac_wide(&mut wide, alpha, &plain[..len]);
        }
        field.redc(&mut wide, &mut acc[v * n..(v + 1) * n]);
    }
    let elements = acc.chunks(n).map(arith::from_limbs).collect();
    Ok(CodedFragment {
        origin: cv.origin,
        fragment: Fragment::new(elements),
    })
}

/// Writes `e mod q` as plain limbs into `out`.
fn load(field: &MontField, e: &BigUint, out: &mut [u64]) {
    if e < field.modulus() {
        out.fill(0);
        for (o, d) in out.iter_mut().zip(e.iter_u64_digits()) {
            *o = d;
        }
    } else {
        out.copy_from_slice(&arith::pad(&(e % field.modulus()), out.len()));
    }
}

/// Incremental Gaussian elimination over `Z_q`.
///
/// Rows are kept in echelon form with unit leading coefficients; each new row
/// is reduced against existing pivots in column order and its first
/// surviving nonzero column becomes its pivot. Dependent rows are dropped, so
/// with more than `k` inputs the first `k` independent ones (in input order)
/// determine the solution.
pub struct Decoder<'p> {
    field: &'p MontField,
    k: usize,
    m: usize,
    /// column → index into `rows`
    pivots: Vec<Option<usize>>,
    rows: Vec<Row>,
}

struct Row {
    /// Montgomery form, `k` entries.
    coeffs: Vec<u64>,
    /// Plain residues, `m` entries.
    data: Vec<u64>,
}

impl<'p> Decoder<'p> {
    pub fn new(params: &'p SystemParams) -> Result<Self, CodingError> {
        let ctx = params.context()?;
        Ok(Self {
            field: &ctx.q,
            k: params.k(),
            m: params.m(),
            pivots: vec![None; params.k()],
            rows: Vec::with_capacity(params.k()),
        })
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_complete(&self) -> bool {
        self.rank() == self.k
    }

    /// Adds one equation; returns whether it raised the rank.
    pub fn push(&mut self, coeffs: &[BigUint], fragment: &Fragment) -> Result<bool, CodingError> {
        if coeffs.len() != self.k {
            return Err(CodingError::DimensionMismatch {
                expected: self.k,
                actual: coeffs.len(),
            });
        }
        if fragment.len() != self.m {
            return Err(CodingError::DimensionMismatch {
                expected: self.m,
                actual: fragment.len(),
            });
        }
        if self.is_complete() {
            return Ok(false);
        }
        let f = self.field;
        let n = f.limbs();
        let mut row = Row {
            coeffs: coeffs.iter().flat_map(|c| f.to_mont(c)).collect(),
            data: vec![0u64; self.m * n],
        };
        for (v, e) in fragment.elements().iter().enumerate() {
            load(f, e, &mut row.data[v * n..(v + 1) * n]);
        }

        let mut lead = None;
        for c in 0..self.k {
            let entry = &row.coeffs[c * n..(c + 1) * n];
            if arith::is_zero(entry) {
                continue;
            }
            match self.pivots[c] {
                Some(p) => {
                    let factor = entry.to_vec();
                    let pivot = &self.rows[p];
                    // pivot row is zero before column c and 1 at c
                    for j in c..self.k {
                        f.sub_mul_assign(
                            &mut row.coeffs[j * n..(j + 1) * n],
                            &factor,
                            &pivot.coeffs[j * n..(j + 1) * n],
                        );
                    }
                    for v in 0..self.m {
                        f.sub_mul_assign(
                            &mut row.data[v * n..(v + 1) * n],
                            &factor,
                            &pivot.data[v * n..(v + 1) * n],
                        );
                    }
                }
                None => {
                    lead = Some(c);
                    break;
                }
            }
        }
        let Some(c) = lead else {
            return Ok(false);
        };
        let inv = f.to_mont(&mod_inverse(&f.from_mont(&row.coeffs[c * n..(c + 1) * n]), f.modulus()));
        let mut tmp = vec![0u64; n];
        for j in c..self.k {
            f.mul_into(&inv, &row.coeffs[j * n..(j + 1) * n], &mut tmp);
            row.coeffs[j * n..(j + 1) * n].copy_from_slice(&tmp);
        }
        for v in 0..self.m {
            f.mul_into(&inv, &row.data[v * n..(v + 1) * n], &mut tmp);
            row.data[v * n..(v + 1) * n].copy_from_slice(&tmp);
        }
        self.pivots[c] = Some(self.rows.len());
        self.rows.push(row);
        Ok(true)
    }

    /// Back-substitutes and returns the `k` source fragments.
    pub fn finish(mut self) -> Result<Vec<Fragment>, CodingError> {
        if !self.is_complete() {
            return Err(CodingError::RankDeficient {
                rank: self.rank(),
                needed: self.k,
            });
        }
        let f = self.field;
        let n = f.limbs();
        let order: Vec<usize> = self.pivots.iter().map(|p| p.expect("complete")).collect();
        // Rows of higher pivot columns are fully reduced by the time they
        // are used, so only the data part needs updating.
        for c in (0..self.k).rev() {
            let r = order[c];
            for (c2, &r2) in order.iter().enumerate().skip(c + 1) {
                let factor = self.rows[r].coeffs[c2 * n..(c2 + 1) * n].to_vec();
                if arith::is_zero(&factor) {
                    continue;
                }
                let src = std::mem::take(&mut self.rows[r2].data);
                let row = &mut self.rows[r];
                for v in 0..self.m {
                    f.sub_mul_assign(&mut row.data[v * n..(v + 1) * n], &factor, &src[v * n..(v + 1) * n]);
                }
                row.coeffs[c2 * n..(c2 + 1) * n].fill(0);
                self.rows[r2].data = src;
            }
        }
        Ok(order
            .iter()
            .map(|&r| Fragment::new(self.rows[r].data.chunks(n).map(arith::from_limbs).collect()))
            .collect())
    }
}

/// Inverse via the extended Euclidean algorithm; `a` must be a unit mod `m`.
pub(crate) fn mod_inverse(a: &BigUint, m: &BigUint) -> BigUint {
    let a = BigInt::from_biguint(Sign::Plus, a.clone());
    let m_int = BigInt::from_biguint(Sign::Plus, m.clone());
    let eg = a.extended_gcd(&m_int);
    debug_assert!(eg.gcd.is_one());
    eg.x.mod_floor(&m_int).to_biguint().expect("non-negative after mod_floor")
}

/// Solves for the `k` source fragments from coded fragments of one block.
///
/// Coefficient vectors must be recomputed by the caller, never taken from
/// the wire.
pub fn decode_block(
    params: &SystemParams,
    coded: &[(CoeffVector, CodedFragment)],
) -> Result<Vec<Fragment>, CodingError> {
    if let Some((first, _)) = coded.first() {
        for (cv, cf) in coded {
            for b in [cv.origin.block_id, cf.origin.block_id] {
                if b != first.origin.block_id {
                    return Err(CodingError::MixedBlocks(first.origin.block_id, b));
                }
            }
        }
    }
    let mut decoder = Decoder::new(params)?;
    for (cv, cf) in coded {
        if decoder.is_complete() {
            break;
        }
        decoder.push(cv.coeffs(), &cf.fragment)?;
    }
    decoder.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::generate_params;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn ints(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    fn cv(coeffs: &[u64], u: u32) -> CoeffVector {
        CoeffVector::from_coeffs(Origin::new(0, 0, u), ints(coeffs))
    }

    fn coded(elements: &[u64], u: u32) -> CodedFragment {
        CodedFragment {
            origin: Origin::new(0, 0, u),
            fragment: Fragment::from_u64s(elements),
        }
    }

    fn small(k: u32, s_b: u64) -> SystemParams {
        generate_params(96, 41, k, s_b, 4, [9; 32]).unwrap()
    }

    #[test]
    fn toy_encode() {
        let toy = SystemParams::toy();
        let src = [Fragment::from_u64s(&[3, 5]), Fragment::from_u64s(&[1, 2])];
        let out = encode_fragment(&toy, &src, &cv(&[2, 3], 0)).unwrap();
        assert_eq!(out.fragment, Fragment::from_u64s(&[9, 5]));
        let out = encode_fragment(&toy, &src, &cv(&[0, 1], 0)).unwrap();
        assert_eq!(out.fragment, src[1]);
        let out = encode_fragment(&toy, &src, &cv(&[0, 0], 0)).unwrap();
        assert_eq!(out.fragment, Fragment::zero(2));
    }

    #[test]
    fn toy_decode() {
        let toy = SystemParams::toy();
        let rows = vec![(cv(&[2, 3], 0), coded(&[9, 5], 0)), (cv(&[1, 1], 1), coded(&[4, 7], 1))];
        let out = decode_block(&toy, &rows).unwrap();
        assert_eq!(out, vec![Fragment::from_u64s(&[3, 5]), Fragment::from_u64s(&[1, 2])]);
    }

    #[test]
    fn toy_rank_deficient() {
        let toy = SystemParams::toy();
        let rows = vec![(cv(&[2, 3], 0), coded(&[9, 5], 0)), (cv(&[4, 6], 1), coded(&[7, 10], 1))];
        assert_eq!(
            decode_block(&toy, &rows),
            Err(CodingError::RankDeficient { rank: 1, needed: 2 })
        );
    }

    #[test]
    fn extra_rows_use_first_independent() {
        let toy = SystemParams::toy();
        // the dependent second row is skipped; the third completes the rank
        let rows = vec![
            (cv(&[2, 3], 0), coded(&[9, 5], 0)),
            (cv(&[4, 6], 1), coded(&[7, 10], 1)),
            (cv(&[1, 1], 2), coded(&[4, 7], 2)),
            (cv(&[1, 0], 3), coded(&[0, 0], 3)), // inconsistent, never reached
        ];
        let out = decode_block(&toy, &rows).unwrap();
        assert_eq!(out[0], Fragment::from_u64s(&[3, 5]));
    }

    #[test]
    fn mixed_blocks_rejected() {
        let toy = SystemParams::toy();
        let mut other = coded(&[4, 7], 1);
        other.origin.block_id = 5;
        let rows = vec![(cv(&[2, 3], 0), coded(&[9, 5], 0)), (cv(&[1, 1], 1), other)];
        assert!(matches!(decode_block(&toy, &rows), Err(CodingError::MixedBlocks(0, 5))));
    }

    #[test]
    fn split_edge_cases() {
        let params = small(4, 100);
        let (frags, layout) = split_block(&params, &[]).unwrap();
        assert_eq!(frags.len(), 4);
        assert_eq!(layout.block_len, 0);
        assert!(frags.iter().flat_map(|f| f.elements()).all(|e| e.is_zero()));
        assert_eq!(reassemble_block(&params, &frags, &layout).unwrap(), Vec::<u8>::new());

        let zeros = vec![0u8; 100];
        let (frags, layout) = split_block(&params, &zeros).unwrap();
        // the length prefix spans the first two 4-byte elements
        assert_eq!(frags[0].elements()[0], BigUint::zero());
        assert_eq!(frags[0].elements()[1], BigUint::from(100u32));
        assert!(frags.iter().flat_map(|f| f.elements()).skip(2).all(|e| e.is_zero()));
        assert_eq!(reassemble_block(&params, &frags, &layout).unwrap(), zeros);

        assert!(matches!(
            split_block(&params, &[0u8; 101]),
            Err(CodingError::BlockTooLarge { len: 101, .. })
        ));
    }

    #[test]
    fn tampered_length_prefix() {
        let params = small(4, 100);
        let (mut frags, layout) = split_block(&params, b"hello").unwrap();
        frags[0].elements_mut()[1] = BigUint::from(u32::MAX);
        assert!(matches!(
            reassemble_block(&params, &frags, &layout),
            Err(CodingError::CorruptLayout(_))
        ));
    }

    #[test]
    fn split_needs_element_size() {
        assert_eq!(split_block(&SystemParams::toy(), b""), Err(CodingError::NoElementSize));
    }

    #[test]
    fn coefficient_degrees() {
        let params = generate_params(96, 41, 256, 256 * 4, 4, [1; 32]).unwrap();
        let a = derive_coefficients(&params, 3, 4, 5, 4).unwrap();
        assert_eq!(a, derive_coefficients(&params, 3, 4, 5, 4).unwrap());
        assert_eq!(a.support().len(), 4);
        let dense = derive_coefficients(&params, 3, 4, 5, 256).unwrap();
        assert!(dense.support().len() > 200);
        assert!(dense.coeffs().iter().all(|c| c < params.q()));
        assert!(matches!(
            derive_coefficients(&params, 0, 0, 0, 0),
            Err(CodingError::InvalidDegree { .. })
        ));
        assert!(derive_coefficients(&params, 0, 0, 0, 257).is_err());
    }

    #[test]
    fn distinct_origins_give_distinct_vectors() {
        let params = small(8, 64);
        let mut seen = HashSet::new();
        for i in 0..25u64 {
            for j in 0..20u64 {
                for u in 0..20u32 {
                    let v = derive_coefficients(&params, i, j, u, 8).unwrap();
                    assert!(seen.insert(v.coeffs().to_vec()), "collision at {i},{j},{u}");
                }
            }
        }
        assert_eq!(seen.len(), 10_000);
    }

    #[test]
    fn encode_reads_only_support() {
        let params = small(6, 6 * 4 * 3);
        let (frags, _) = split_block(&params, b"some block contents").unwrap();
        let cv = derive_coefficients(&params, 1, 2, 0, 2).unwrap();
        let base = encode_fragment(&params, &frags, &cv).unwrap();
        let support = cv.support();
        let mut altered = frags.clone();
        for (l, f) in altered.iter_mut().enumerate() {
            if !support.contains(&l) {
                *f = Fragment::from_u64s(&[7, 7, 7]);
            }
        }
        assert_eq!(encode_fragment(&params, &altered, &cv).unwrap(), base);
    }

    #[test]
    fn wire_roundtrip_and_truncation() {
        let params = small(4, 64);
        let (frags, _) = split_block(&params, b"wire").unwrap();
        let cf = encode_fragment(&params, &frags, &derive_coefficients(&params, 9, 8, 7, 4).unwrap()).unwrap();
        let bytes = cf.to_wire(&params);
        assert_eq!(bytes.len(), 20 + 4 + params.m() * params.element_bytes());
        assert_eq!(CodedFragment::from_wire(&params, &bytes).unwrap(), cf);
        assert!(CodedFragment::from_wire(&params, &bytes[..bytes.len() - 1]).is_err());
        let f = fragment_from_wire(&params, &frags[0].to_wire(&params)).unwrap();
        assert_eq!(f, frags[0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn split_reassemble_identity(block in proptest::collection::vec(any::<u8>(), 0..=500)) {
            let params = small(8, 500);
            let (frags, layout) = split_block(&params, &block).unwrap();
            for f in &frags {
                prop_assert!(f.check(&params).is_ok());
            }
            prop_assert_eq!(reassemble_block(&params, &frags, &layout).unwrap(), block);
        }

        #[test]
        fn encode_decode_roundtrip(block in proptest::collection::vec(any::<u8>(), 0..=300), node in 0u64..50, d in 1usize..=6) {
            let params = small(6, 300);
            let (frags, layout) = split_block(&params, &block).unwrap();
            let mut decoder = Decoder::new(&params).unwrap();
            let mut u = 0;
            while !decoder.is_complete() {
                let cv = derive_coefficients(&params, node, 1, u, d).unwrap();
                let cf = encode_fragment(&params, &frags, &cv).unwrap();
                decoder.push(cv.coeffs(), &cf.fragment).unwrap();
                u += 1;
                prop_assert!(u < 500);
            }
            let out = decoder.finish().unwrap();
            prop_assert_eq!(reassemble_block(&params, &out, &layout).unwrap(), block);
        }
    }
}
