//! Storage analysis: compression factor and the `k` that minimizes it.

use std::fmt::Write as _;

use thiserror::Error;

/// Hash size (bytes) that reproduces the reference compression table.
pub const DEFAULT_S_H: f64 = 134.0;
/// One mebibyte, the reference block size.
pub const DEFAULT_S_B: f64 = 1_048_576.0;

pub const TABLE_K: [u64; 5] = [4, 32, 64, 128, 256];
pub const TABLE_R: [u64; 2] = [1, 5];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn positive(name: &str, v: f64) -> Result<(), PlannerError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(PlannerError::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

/// `c = (k + r)·S_H / S_B + r / k`: stored bytes per block byte.
pub fn compression_factor(k: u64, r: u64, s_b: f64, s_h: f64) -> Result<f64, PlannerError> {
    positive("k", k as f64)?;
    positive("r", r as f64)?;
    positive("S_B", s_b)?;
    positive("S_H", s_h)?;
    Ok((k + r) as f64 * s_h / s_b + r as f64 / k as f64)
}

/// Integer minimizer of [`compression_factor`]: the better of the floor
/// and ceiling of `sqrt(r·S_B / S_H)`.
pub fn optimal_k(r: u64, s_b: f64, s_h: f64) -> Result<u64, PlannerError> {
    positive("r", r as f64)?;
    positive("S_B", s_b)?;
    positive("S_H", s_h)?;
    let real = (r as f64 * s_b / s_h).sqrt();
    let lo = (real.floor() as u64).max(1);
    let hi = (real.ceil() as u64).max(1);
    let c = |k| compression_factor(k, r, s_b, s_h);
    Ok(if c(hi)? < c(lo)? { hi } else { lo })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoragePlan {
    pub k: u64,
    pub r: u64,
    pub s_b: f64,
    pub s_h: f64,
    pub c: f64,
    pub k_opt: u64,
}

impl StoragePlan {
    pub fn new(k: u64, r: u64, s_b: f64, s_h: f64) -> Result<Self, PlannerError> {
        Ok(Self {
            k,
            r,
            s_b,
            s_h,
            c: compression_factor(k, r, s_b, s_h)?,
            k_opt: optimal_k(r, s_b, s_h)?,
        })
    }
}

/// Cross product of `k_list × r_list`, `k` varying slowest.
pub fn sweep_table(k_list: &[u64], r_list: &[u64], s_b: f64, s_h: f64) -> Result<Vec<StoragePlan>, PlannerError> {
    if k_list.is_empty() || r_list.is_empty() {
        return Err(PlannerError::InvalidArgument("empty k or r list".into()));
    }
    let mut out = Vec::with_capacity(k_list.len() * r_list.len());
    for &k in k_list {
        for &r in r_list {
            out.push(StoragePlan::new(k, r, s_b, s_h)?);
        }
    }
    Ok(out)
}

/// `x` to `digits` significant digits, without exponent notation.
pub fn sig_digits(x: f64, digits: i32) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (digits - 1 - magnitude).max(0) as usize;
    let scale = 10f64.powi(digits - 1 - magnitude);
    let rounded = (x * scale).round() / scale;
    format!("{rounded:.decimals$}")
}

/// Header `k,r,S_B,S_H,c`, `c` to six significant digits.
pub fn table_csv(plans: &[StoragePlan]) -> String {
    let mut out = String::from("k,r,S_B,S_H,c\n");
    for p in plans {
        let _ = writeln!(out, "{},{},{},{},{}", p.k, p.r, p.s_b, p.s_h, sig_digits(p.c, 6));
    }
    out
}

/// Least-squares `S_H` for observed `(k, r, c)` at block size `s_b`.
pub fn fit_hash_size(observations: &[(u64, u64, f64)], s_b: f64) -> Result<f64, PlannerError> {
    positive("S_B", s_b)?;
    let (mut num, mut den) = (0.0, 0.0);
    for &(k, r, c) in observations {
        positive("k", k as f64)?;
        let a = (k + r) as f64 / s_b;
        num += a * (c - r as f64 / k as f64);
        den += a * a;
    }
    if den == 0.0 {
        return Err(PlannerError::InvalidArgument("no observations".into()));
    }
    Ok(num / den)
}
