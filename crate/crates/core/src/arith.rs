//! Montgomery arithmetic over a runtime-sized odd modulus, plus interleaved
//! sliding-window multi-exponentiation.
//!
//! Residues are little-endian `u64` limb slices of exactly `limbs()` words.
//! Values are in Montgomery form (`x·R mod N`, `R = 2^(64·limbs)`) unless a
//! function says otherwise.

use num_bigint::BigUint;
use num_traits::Zero;

/// Largest supported modulus, in 64-bit limbs (4096 bits).
pub const MAX_LIMBS: usize = 64;

/// Moduli up to this many limbs get unrolled multiplication kernels.
const SMALL_LIMBS: usize = 17;

#[derive(Clone, Debug)]
pub struct MontField {
    modulus: BigUint,
    n: Vec<u64>,
    n_inv: u64,
    /// R^2 mod N
    r2: Vec<u64>,
    /// R mod N, i.e. 1 in Montgomery form.
    one: Vec<u64>,
}

impl MontField {
    /// Returns `None` for even moduli, moduli below 3, or moduli wider than
    /// [`MAX_LIMBS`].
    pub fn new(modulus: &BigUint) -> Option<Self> {
        if modulus < &BigUint::from(3u32) || !modulus.bit(0) {
            return None;
        }
        let n = modulus.to_u64_digits();
        if n.len() > MAX_LIMBS {
            return None;
        }
        // Newton iteration for n[0]^-1 mod 2^64, then negate.
        let mut inv: u64 = 1;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(n[0].wrapping_mul(inv)));
        }
        let bits = 64 * n.len() as u64;
        let r = BigUint::from(1u32) << bits;
        let one = pad(&(&r % modulus), n.len());
        let r2 = pad(&((&r * &r) % modulus), n.len());
        Some(Self {
            modulus: modulus.clone(),
            n,
            n_inv: inv.wrapping_neg(),
            r2,
            one,
        })
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn limbs(&self) -> usize {
        self.n.len()
    }

    pub fn one(&self) -> &[u64] {
        &self.one
    }

    pub fn zero(&self) -> Vec<u64> {
        vec![0; self.limbs()]
    }

    /// Reduces `x` mod N and converts to Montgomery form.
    pub fn to_mont(&self, x: &BigUint) -> Vec<u64> {
        let reduced = if x < &self.modulus {
            pad(x, self.limbs())
        } else {
            pad(&(x % &self.modulus), self.limbs())
        };
        let mut out = self.zero();
        self.mul_into(&reduced, &self.r2, &mut out);
        out
    }

    pub fn from_mont(&self, a: &[u64]) -> BigUint {
        let mut unit = self.zero();
        unit[0] = 1;
        let mut out = self.zero();
        self.mul_into(a, &unit, &mut out);
        from_limbs(&out)
    }

    /// `out = a·b·R^-1 mod N` (CIOS). `out` must not alias `a` or `b`.
    ///
    /// With `a` in Montgomery form and `b` a plain residue the result is the
    /// plain product `a·b mod N`.
    pub fn mul_into(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        debug_assert!(a.len() == self.limbs() && b.len() == self.limbs() && out.len() == self.limbs());
        macro_rules! fixed {
            ($($s:literal)*) => {
                match self.limbs() {
                    $($s => out.copy_from_slice(&cios::<$s>(a, b, &self.n, self.n_inv)),)*
                    _ => cios_dyn(a, b, &self.n, self.n_inv, out),
                }
            };
        }
        fixed!(1 2 3 4 5 6 7 8 9 10 11 12 13 14 15 16 17)
    }

    /// Montgomery reduction of a wide value: `out = t·R^-1 mod N`.
    ///
    /// `t` holds `2·limbs() + 1` words, must be below `N·R`, and is
    /// clobbered.
    pub fn redc(&self, t: &mut [u64], out: &mut [u64]) {
        let s = self.limbs();
        debug_assert!(t.len() == 2 * s + 1 && out.len() == s);
        macro_rules! fixed {
            ($(($s:literal, $w:literal))*) => {
                match s {
                    $($s => return redc_fixed::<$s, $w>(
                        t.try_into().expect("width"),
                        &self.n,
                        self.n_inv,
                        out,
                    ),)*
                    _ => {}
                }
            };
        }
        fixed!((2, 5) (3, 7) (4, 9) (5, 11) (6, 13));
        for i in 0..s {
            let mm = t[i].wrapping_mul(self.n_inv) as u128;
            let mut c: u128 = 0;
            for j in 0..s {
                let x = t[i + j] as u128 + mm * (self.n[j] as u128) + c;
                t[i + j] = x as u64;
                c = x >> 64;
            }
            for w in t[i + s..].iter_mut() {
                if c == 0 {
                    break;
                }
                let x = *w as u128 + c;
                *w = x as u64;
                c = x >> 64;
            }
        }
        out.copy_from_slice(&t[s..2 * s]);
        if t[2 * s] != 0 || !lt(out, &self.n) {
            sub_in_place(out, &self.n);
        }
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let mut out = self.zero();
        self.mul_into(a, b, &mut out);
        out
    }

    /// `acc = acc·b` in Montgomery form.
    /// Runs `f` on a zeroed scratch residue.
    #[inline(always)]
    fn scratch<R>(&self, f: impl FnOnce(&mut [u64]) -> R) -> R {
        let s = self.limbs();
        if s <= SMALL_LIMBS {
            f(&mut [0u64; SMALL_LIMBS][..s])
        } else {
            f(&mut [0u64; MAX_LIMBS][..s])
        }
    }

    pub fn mul_assign(&self, acc: &mut [u64], b: &[u64]) {
        self.scratch(|tmp| {
            self.mul_into(acc, b, tmp);
            acc.copy_from_slice(tmp);
        })
    }

    pub fn square_assign(&self, acc: &mut [u64]) {
        self.scratch(|tmp| {
            self.mul_into(acc, acc, tmp);
            acc.copy_from_slice(tmp);
        })
    }

    /// `acc = acc + b mod N` for reduced inputs (either representation).
    pub fn add_assign(&self, acc: &mut [u64], b: &[u64]) {
        let mut carry = 0u64;
        for (x, &y) in acc.iter_mut().zip(b) {
            let (s1, c1) = x.overflowing_add(y);
            let (s2, c2) = s1.overflowing_add(carry);
            *x = s2;
            carry = (c1 | c2) as u64;
        }
        if carry != 0 || !lt(acc, &self.n) {
            sub_in_place(acc, &self.n);
        }
    }

    /// `acc = acc - b mod N` for reduced inputs.
    pub fn sub_assign(&self, acc: &mut [u64], b: &[u64]) {
        if sub_in_place(acc, b) {
            add_in_place(acc, &self.n);
        }
    }

    /// `acc = acc - a·b mod N`, with `a` in Montgomery form and `b` in either
    /// form (the result has `b`'s form).
    pub fn sub_mul_assign(&self, acc: &mut [u64], a: &[u64], b: &[u64]) {
        self.scratch(|tmp| {
            self.mul_into(a, b, tmp);
            self.sub_assign(acc, tmp);
        })
    }

    /// Product of `bases[i]^exponents[i]`, bases in Montgomery form, exponents
    /// as little-endian limbs. Zero exponents are skipped.
    pub fn multi_exp(&self, bases: &[&[u64]], exponents: &[&[u64]]) -> Vec<u64> {
        assert_eq!(bases.len(), exponents.len());
        let max_bits = exponents.iter().map(|e| bit_len(e)).max().unwrap_or(0);
        let window = window_for(max_bits);
        let mut tables = Vec::with_capacity(bases.len());
        let mut digits = Vec::with_capacity(bases.len());
        for (b, e) in bases.iter().zip(exponents) {
            if bit_len(e) == 0 {
                continue;
            }
            tables.push(OddPowers::build(self, b, window));
            digits.push(*e);
        }
        let terms: Vec<(&OddPowers, &[u64])> = tables.iter().zip(digits).collect();
        self.interleave(&terms, window)
    }

    fn interleave(&self, terms: &[(&OddPowers, &[u64])], window: u32) -> Vec<u64> {
        let max_bits = terms.iter().map(|(_, e)| bit_len(e)).max().unwrap_or(0);
        let mut acc = self.one.clone();
        if max_bits == 0 {
            return acc;
        }
        // events[bit] = (term, odd digit) whose lowest bit sits at `bit`
        let mut events: Vec<Vec<(u32, u32)>> = vec![Vec::new(); max_bits];
        for (t, (_, e)) in terms.iter().enumerate() {
            for (pos, digit) in sliding_windows(e, window) {
                events[pos].push((t as u32, digit));
            }
        }
        let mut started = false;
        for bit in (0..max_bits).rev() {
            if started {
                self.square_assign(&mut acc);
            }
            for &(t, digit) in &events[bit] {
                let entry = terms[t as usize].0.get(digit);
                if started {
                    self.mul_assign(&mut acc, entry);
                } else {
                    acc.copy_from_slice(entry);
                    started = true;
                }
            }
        }
        acc
    }

    /// Single exponentiation with a plain-integer exponent.
    pub fn pow(&self, base: &[u64], exponent: &[u64]) -> Vec<u64> {
        self.multi_exp(&[base], &[exponent])
    }
}

/// Odd powers `b, b^3, …, b^(2^w − 1)` of one base, in Montgomery form.
#[derive(Clone, Debug)]
pub struct OddPowers {
    limbs: usize,
    table: Vec<u64>,
}

impl OddPowers {
    pub fn build(field: &MontField, base: &[u64], window: u32) -> Self {
        let s = field.limbs();
        let count = 1usize << (window - 1);
        let mut table = Vec::with_capacity(count * s);
        table.extend_from_slice(base);
        if count > 1 {
            let sq = field.mul(base, base);
            for i in 1..count {
                let prev = table[(i - 1) * s..i * s].to_vec();
                table.extend_from_slice(&field.mul(&prev, &sq));
            }
        }
        Self { limbs: s, table }
    }

    fn get(&self, odd_digit: u32) -> &[u64] {
        let i = (odd_digit >> 1) as usize;
        &self.table[i * self.limbs..(i + 1) * self.limbs]
    }
}

/// Odd-power tables for a fixed list of bases, reused across many
/// multi-exponentiations over the same bases.
#[derive(Clone, Debug)]
pub struct FixedBases {
    window: u32,
    tables: Vec<OddPowers>,
}

impl FixedBases {
    pub fn new(field: &MontField, bases: &[Vec<u64>], window: u32) -> Self {
        assert!((1..=10).contains(&window));
        let tables = bases
            .iter()
            .map(|b| OddPowers::build(field, b, window))
            .collect();
        Self { window, tables }
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// Product of `base[i]^exponents[i]`; `exponents.len()` may not exceed
    /// the number of bases.
    pub fn multi_exp(&self, field: &MontField, exponents: &[&[u64]]) -> Vec<u64> {
        assert!(exponents.len() <= self.tables.len());
        let terms: Vec<(&OddPowers, &[u64])> = self
            .tables
            .iter()
            .zip(exponents)
            .filter(|(_, e)| bit_len(e) > 0)
            .map(|(t, e)| (t, *e))
            .collect();
        field.interleave(&terms, self.window)
    }

    /// Like [`multi_exp`](Self::multi_exp) but over `(base index, exponent)`
    /// pairs, so sparse exponent vectors cost only their support.
    pub fn multi_exp_sparse(&self, field: &MontField, terms: &[(usize, &[u64])]) -> Vec<u64> {
        let terms: Vec<(&OddPowers, &[u64])> = terms
            .iter()
            .filter(|(_, e)| bit_len(e) > 0)
            .map(|&(i, e)| (&self.tables[i], e))
            .collect();
        field.interleave(&terms, self.window)
    }
}

/// Fixed-base comb tables: `table[v][i][d] = base_v^(d·2^(w·i))`, so an
/// exponentiation needs one multiplication per nonzero `w`-bit digit and no
/// squarings. Memory grows as `bases · ceil(bits/w) · (2^w − 1)` residues.
#[derive(Clone, Debug)]
pub struct CombTable {
    limbs: usize,
    window: u32,
    windows: usize,
    per_base: usize,
    table: Vec<u64>,
}

impl CombTable {
    pub fn new(field: &MontField, bases: &[Vec<u64>], exponent_bits: usize, window: u32) -> Self {
        assert!((1..=10).contains(&window));
        let s = field.limbs();
        let windows = exponent_bits.div_ceil(window as usize).max(1);
        let digits = (1usize << window) - 1;
        let per_base = windows * digits;
        let mut table = Vec::with_capacity(bases.len() * per_base * s);
        for b in bases {
            let mut step = b.clone();
            for _ in 0..windows {
                // step = b^(2^(w·i)); row holds step^1 … step^(2^w − 1)
                let start = table.len();
                table.extend_from_slice(&step);
                for d in 1..digits {
                    let prev = &table[start + (d - 1) * s..start + d * s];
                    let next = field.mul(prev, &step);
                    table.extend_from_slice(&next);
                }
                let last = table[start + (digits - 1) * s..start + digits * s].to_vec();
                // step^(2^w) = step^(2^w − 1) · step
                step = field.mul(&last, &step);
            }
        }
        Self {
            limbs: s,
            window,
            windows,
            per_base,
            table,
        }
    }

    /// Bytes a table over `bases` residues of `limbs` words would occupy.
    pub fn footprint(bases: usize, limbs: usize, exponent_bits: usize, window: u32) -> usize {
        let windows = exponent_bits.div_ceil(window as usize).max(1);
        bases * windows * ((1usize << window) - 1) * limbs * 8
    }

    /// Exponents must be below `2^exponent_bits` given at construction.
    pub fn multi_exp(&self, field: &MontField, exponents: &[&[u64]]) -> Vec<u64> {
        let s = self.limbs;
        let mut acc = field.one().to_vec();
        let mask = (1u64 << self.window) - 1;
        for (v, e) in exponents.iter().enumerate() {
            debug_assert!(bit_len(e) <= self.windows * self.window as usize);
            for i in 0..self.windows {
                let pos = i * self.window as usize;
                let d = extract(e, pos, self.window) & mask;
                if d == 0 {
                    continue;
                }
                let off = (v * self.per_base + i * ((1usize << self.window) - 1) + d as usize - 1) * s;
                field.mul_assign(&mut acc, &self.table[off..off + s]);
            }
        }
        acc
    }
}

fn extract(e: &[u64], pos: usize, width: u32) -> u64 {
    let w = pos / 64;
    let o = pos % 64;
    if w >= e.len() {
        return 0;
    }
    let mut x = e[w] >> o;
    if o + width as usize > 64 && w + 1 < e.len() {
        x |= e[w + 1] << (64 - o);
    }
    x
}

fn window_for(bits: usize) -> u32 {
    match bits {
        0..=24 => 2,
        25..=80 => 3,
        81..=240 => 4,
        241..=720 => 5,
        _ => 6,
    }
}

/// Right-to-left sliding-window recoding: `(bit position, odd digit)` pairs
/// with `e = Σ digit·2^pos`, each digit below `2^window`.
fn sliding_windows(e: &[u64], window: u32) -> Vec<(usize, u32)> {
    let bits = bit_len(e);
    let mut out = Vec::with_capacity(bits / (window as usize + 1) + 1);
    let mut i = 0;
    while i < bits {
        if !bit(e, i) {
            i += 1;
            continue;
        }
        let mut digit = 0u32;
        for w in 0..window as usize {
            if i + w < bits && bit(e, i + w) {
                digit |= 1 << w;
            }
        }
        out.push((i, digit));
        i += window as usize;
    }
    out
}

#[inline]
fn bit(e: &[u64], i: usize) -> bool {
    (e[i / 64] >> (i % 64)) & 1 == 1
}

pub fn bit_len(e: &[u64]) -> usize {
    for (i, &w) in e.iter().enumerate().rev() {
        if w != 0 {
            return 64 * i + 64 - w.leading_zeros() as usize;
        }
    }
    0
}

/// `acc += a·b` on plain little-endian limbs; `acc` must be wide enough to
/// absorb the carry.
pub fn mac_wide(acc: &mut [u64], a: &[u64], b: &[u64]) {
    macro_rules! fixed {
        ($(($s:literal, $t:literal, $w:literal))*) => {
            match (a.len(), b.len(), acc.len()) {
                $(($s, $t, $w) => mac_fixed::<$s, $t, $w>(
                    acc.try_into().expect("width"),
                    a.try_into().expect("width"),
                    b.try_into().expect("width"),
                ),)*
                _ => mac_dyn(acc, a, b),
            }
        };
    }
    fixed!((2, 2, 5) (2, 1, 5) (3, 3, 7) (3, 2, 7) (4, 4, 9) (4, 3, 9) (5, 5, 11) (5, 4, 11) (6, 6, 13) (6, 5, 13))
}

#[inline(always)]
fn mac_fixed<const S: usize, const T: usize, const W: usize>(acc: &mut [u64; W], a: &[u64; S], b: &[u64; T]) {
    for i in 0..S {
        let ai = a[i] as u128;
        let mut c: u128 = 0;
        for j in 0..T {
            let x = acc[i + j] as u128 + ai * (b[j] as u128) + c;
            acc[i + j] = x as u64;
            c = x >> 64;
        }
        let mut k = i + T;
        while c != 0 && k < W {
            let x = acc[k] as u128 + c;
            acc[k] = x as u64;
            c = x >> 64;
            k += 1;
        }
    }
}

fn mac_dyn(acc: &mut [u64], a: &[u64], b: &[u64]) {
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        let ai = ai as u128;
        let mut c: u128 = 0;
        for (j, &bj) in b.iter().enumerate() {
            let x = acc[i + j] as u128 + ai * (bj as u128) + c;
            acc[i + j] = x as u64;
            c = x >> 64;
        }
        for w in acc[i + b.len()..].iter_mut() {
            if c == 0 {
                break;
            }
            let x = *w as u128 + c;
            *w = x as u64;
            c = x >> 64;
        }
    }
}

#[inline(always)]
fn redc_fixed<const S: usize, const W: usize>(t: &mut [u64; W], n: &[u64], n_inv: u64, out: &mut [u64]) {
    let n: &[u64; S] = n.try_into().expect("limb count");
    for i in 0..S {
        let mm = t[i].wrapping_mul(n_inv) as u128;
        let mut c: u128 = 0;
        for j in 0..S {
            let x = t[i + j] as u128 + mm * (n[j] as u128) + c;
            t[i + j] = x as u64;
            c = x >> 64;
        }
        let mut k = i + S;
        while c != 0 && k < W {
            let x = t[k] as u128 + c;
            t[k] = x as u64;
            c = x >> 64;
            k += 1;
        }
    }
    out.copy_from_slice(&t[S..2 * S]);
    if t[2 * S] != 0 || !lt(out, n) {
        sub_in_place(out, n);
    }
}

/// CIOS Montgomery product for a compile-time limb count.
#[inline(always)]
fn cios<const S: usize>(a: &[u64], b: &[u64], n: &[u64], n_inv: u64) -> [u64; S] {
    let a: &[u64; S] = a.try_into().expect("limb count");
    let b: &[u64; S] = b.try_into().expect("limb count");
    let n: &[u64; S] = n.try_into().expect("limb count");
    let mut t = [0u64; S];
    let mut top = 0u64;
    for &ai in a {
        let ai = ai as u128;
        let mut c: u128 = 0;
        for j in 0..S {
            let x = t[j] as u128 + ai * (b[j] as u128) + c;
            t[j] = x as u64;
            c = x >> 64;
        }
        let x = top as u128 + c;
        top = x as u64;
        let overflow = (x >> 64) as u64;

        let mm = t[0].wrapping_mul(n_inv) as u128;
        let x = t[0] as u128 + mm * (n[0] as u128);
        let mut c = x >> 64;
        for j in 1..S {
            let x = t[j] as u128 + mm * (n[j] as u128) + c;
            t[j - 1] = x as u64;
            c = x >> 64;
        }
        let x = top as u128 + c;
        t[S - 1] = x as u64;
        top = overflow + (x >> 64) as u64;
    }
    if top != 0 || !lt(&t, n) {
        sub_in_place(&mut t, n);
    }
    t
}

fn cios_dyn(a: &[u64], b: &[u64], n: &[u64], n_inv: u64, out: &mut [u64]) {
    let s = n.len();
    let mut t = [0u64; MAX_LIMBS + 2];
    for &ai in &a[..s] {
        let ai = ai as u128;
        let mut c: u128 = 0;
        for j in 0..s {
            let x = t[j] as u128 + ai * (b[j] as u128) + c;
            t[j] = x as u64;
            c = x >> 64;
        }
        let x = t[s] as u128 + c;
        t[s] = x as u64;
        t[s + 1] = (x >> 64) as u64;

        let mm = t[0].wrapping_mul(n_inv) as u128;
        let x = t[0] as u128 + mm * (n[0] as u128);
        let mut c = x >> 64;
        for j in 1..s {
            let x = t[j] as u128 + mm * (n[j] as u128) + c;
            t[j - 1] = x as u64;
            c = x >> 64;
        }
        let x = t[s] as u128 + c;
        t[s - 1] = x as u64;
        t[s] = t[s + 1] + (x >> 64) as u64;
    }
    out.copy_from_slice(&t[..s]);
    if t[s] != 0 || !lt(out, n) {
        sub_in_place(out, n);
    }
}

fn lt(a: &[u64], b: &[u64]) -> bool {
    for (x, y) in a.iter().zip(b).rev() {
        if x != y {
            return x < y;
        }
    }
    false
}

/// Returns the borrow out.
fn sub_in_place(a: &mut [u64], b: &[u64]) -> bool {
    let mut borrow = 0u64;
    for (x, &y) in a.iter_mut().zip(b) {
        let (d1, b1) = x.overflowing_sub(y);
        let (d2, b2) = d1.overflowing_sub(borrow);
        *x = d2;
        borrow = (b1 | b2) as u64;
    }
    borrow != 0
}

fn add_in_place(a: &mut [u64], b: &[u64]) {
    let mut carry = 0u64;
    for (x, &y) in a.iter_mut().zip(b) {
        let (s1, c1) = x.overflowing_add(y);
        let (s2, c2) = s1.overflowing_add(carry);
        *x = s2;
        carry = (c1 | c2) as u64;
    }
}

/// Little-endian limbs of `x`, zero-extended to `len` words.
pub fn pad(x: &BigUint, len: usize) -> Vec<u64> {
    let mut v = x.to_u64_digits();
    debug_assert!(v.len() <= len);
    v.resize(len, 0);
    v
}

pub fn from_limbs(limbs: &[u64]) -> BigUint {
    if limbs.iter().all(|&w| w == 0) {
        return BigUint::zero();
    }
    let mut digits = Vec::with_capacity(limbs.len() * 2);
    for &w in limbs {
        digits.push(w as u32);
        digits.push((w >> 32) as u32);
    }
    BigUint::new(digits)
}

pub fn is_zero(a: &[u64]) -> bool {
    a.iter().all(|&w| w == 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(s: &str) -> BigUint {
        BigUint::parse_bytes(s.as_bytes(), 10).unwrap()
    }

    #[test]
    fn rejects_even_and_tiny_moduli() {
        assert!(MontField::new(&BigUint::from(10u32)).is_none());
        assert!(MontField::new(&BigUint::from(1u32)).is_none());
        assert!(MontField::new(&BigUint::from(3u32)).is_some());
    }

    #[test]
    fn toy_multi_exp() {
        let f = MontField::new(&BigUint::from(23u32)).unwrap();
        let g1 = f.to_mont(&BigUint::from(2u32));
        let g2 = f.to_mont(&BigUint::from(4u32));
        let r = f.multi_exp(&[&g1, &g2], &[&[3], &[5]]);
        assert_eq!(f.from_mont(&r), BigUint::from(4u32));
        let r = f.multi_exp(&[&g1, &g2], &[&[0], &[0]]);
        assert_eq!(f.from_mont(&r), BigUint::from(1u32));
    }

    #[test]
    fn sliding_windows_reconstruct() {
        let e = [0xdead_beef_1234_5678u64, 0x9];
        for w in 1..7 {
            let mut acc = BigUint::zero();
            for (pos, d) in sliding_windows(&e, w) {
                assert!(d % 2 == 1 && d < (1 << w));
                acc += BigUint::from(d) << pos;
            }
            assert_eq!(acc, from_limbs(&e));
        }
    }

    proptest! {
        #[test]
        fn mul_matches_biguint(a in any::<[u64; 3]>(), b in any::<[u64; 3]>()) {
            let p = big("6277101735386680763835789423207666416102355444464034512659");
            let f = MontField::new(&p).unwrap();
            let (a, b) = (from_limbs(&a), from_limbs(&b));
            let prod = f.mul(&f.to_mont(&a), &f.to_mont(&b));
            prop_assert_eq!(f.from_mont(&prod), (&a * &b) % &p);
            let mut s = f.to_mont(&a);
            f.sub_assign(&mut s, &f.to_mont(&b));
            prop_assert_eq!(f.from_mont(&s), ((&a % &p) + &p - (&b % &p)) % &p);
        }

        #[test]
        fn multi_exp_matches_modpow(
            bases in proptest::collection::vec(any::<u64>(), 1..5),
            exps in proptest::collection::vec(any::<[u64; 4]>(), 1..5),
        ) {
            let p = big("179769313486231590772930519078902473361797697894230657273430081157732675805500963132708477322407536021120113879871393357658789768568481215271864416290883");
            let f = MontField::new(&p).unwrap();
            let n = bases.len().min(exps.len());
            let mont: Vec<Vec<u64>> = bases[..n].iter().map(|&b| f.to_mont(&BigUint::from(b))).collect();
            let mut expected = BigUint::from(1u32);
            for i in 0..n {
                expected = expected * BigUint::from(bases[i]).modpow(&from_limbs(&exps[i]), &p) % &p;
            }
            let b_refs: Vec<&[u64]> = mont.iter().map(|v| v.as_slice()).collect();
            let e_refs: Vec<&[u64]> = exps[..n].iter().map(|e| e.as_slice()).collect();
            prop_assert_eq!(f.from_mont(&f.multi_exp(&b_refs, &e_refs)), expected.clone());
            let fixed = FixedBases::new(&f, &mont, 6);
            prop_assert_eq!(f.from_mont(&fixed.multi_exp(&f, &e_refs)), expected.clone());
            let comb = CombTable::new(&f, &mont, 256, 5);
            prop_assert_eq!(f.from_mont(&comb.multi_exp(&f, &e_refs)), expected);
        }

        #[test]
        fn lazy_dot_product_matches_biguint(
            terms in proptest::collection::vec((any::<[u64; 5]>(), any::<[u64; 4]>()), 1..40),
            top in any::<bool>(),
        ) {
            // 257-bit odd modulus
            let q = (BigUint::from(1u32) << 256) + BigUint::from(0x2f_u32);
            let f = MontField::new(&q).unwrap();
            let mut wide = vec![0u64; 11];
            let mut expected = BigUint::zero();
            for (a, b) in &terms {
                let a = from_limbs(a) % &q;
                let mut b_limbs = b.to_vec();
                if top {
                    b_limbs.push(1);
                }
                let b = from_limbs(&b_limbs) % &q;
                let b_limbs = pad(&b, if top { 5 } else { 4 }.max(b.to_u64_digits().len()));
                expected = (expected + &a * &b) % &q;
                mac_wide(&mut wide, &f.to_mont(&a), &b_limbs);
            }
            let mut out = f.zero();
            f.redc(&mut wide, &mut out);
            prop_assert_eq!(from_limbs(&out), expected);
        }
    }
}
