//! Timing harness for encode, hash and combine, with CSV output and checks
//! on how the timings scale with `k`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::hint::black_box;
use std::time::Instant;

use num_bigint::BigUint;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::coding::{derive_coefficients, encode_fragment, max_block_len, split_block, CodingError};
use crate::hash::{combine_hashes, hash_fragment, subgroup_element, Fragment, HashError};
use crate::params::{ParamsError, SystemParams};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown suite {0:?} (expected encode, hash or combine)")]
    InvalidSuite(String),
    #[error("malformed benchmark csv: {0}")]
    MalformedCsv(String),
    #[error("invalid benchmark settings: {0}")]
    InvalidSettings(String),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Coding(#[from] CodingError),
    #[error(transparent)]
    Hash(#[from] HashError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    Encode,
    Hash,
    Combine,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Encode, Suite::Hash, Suite::Combine];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Encode => "encode",
            Suite::Hash => "hash",
            Suite::Combine => "combine",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| BenchError::InvalidSuite(s.to_string()))
    }
}

/// Coefficient degree of a benchmark series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degree {
    Fixed(usize),
    /// `d = k`
    Full,
}

impl Degree {
    fn at(self, k: usize) -> usize {
        match self {
            Degree::Fixed(d) => d.min(k),
            Degree::Full => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSettings {
    pub k_list: Vec<u32>,
    pub degrees: Vec<Degree>,
    /// Block sizes in bytes (`s_B`).
    pub sizes: Vec<u64>,
    pub trials: usize,
    /// Untimed runs before each series.
    pub warmup: usize,
    pub seed: u64,
}

impl Default for BenchSettings {
    fn default() -> Self {
        Self {
            k_list: vec![4, 32, 64, 128, 256],
            degrees: vec![Degree::Fixed(4), Degree::Full],
            sizes: vec![32 * 1024, 1 << 20],
            trials: 50,
            warmup: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub operation: String,
    pub k: u32,
    pub d: usize,
    pub block_size: u64,
    pub trial_count: usize,
    pub mean_s: f64,
    pub min_s: f64,
    pub max_s: f64,
}

pub const CSV_HEADER: &str = "operation,k,d,block_size,trials,mean_s,min_s,max_s";

fn time_trials(trials: usize, warmup: usize, mut f: impl FnMut()) -> (f64, f64, f64) {
    for _ in 0..warmup {
        f();
    }
    let mut times = Vec::with_capacity(trials);
    for _ in 0..trials {
        let t = Instant::now();
        f();
        times.push(t.elapsed().as_secs_f64());
    }
    let min = times.iter().copied().fold(f64::INFINITY, f64::min);
    let max = times.iter().copied().fold(0.0, f64::max);
    (times.iter().sum::<f64>() / trials as f64, min, max)
}

fn random_fragment(rng: &mut ChaCha8Rng, m: usize, element_bytes: usize) -> Fragment {
    Fragment::new(
        (0..m)
            .map(|_| {
                let mut b = vec![0u8; element_bytes];
                rng.fill_bytes(&mut b);
                BigUint::from_bytes_be(&b)
            })
            .collect(),
    )
}

/// Runs one suite. `base` supplies the group; it is reshaped to every
/// `(k, size)` point.
///
/// * `encode`: split a block of the largest admissible size, derive one
///   coefficient vector and encode one coded fragment.
/// * `hash`: hash one fragment of `m` random elements (`d` is not used and
///   reported as 0).
/// * `combine`: combine `k` source hashes under one coefficient vector
///   (independent of block size, reported as 0).
pub fn run_suite(
    suite: Suite,
    base: &SystemParams,
    settings: &BenchSettings,
) -> Result<Vec<BenchRecord>, BenchError> {
    if settings.trials == 0 || settings.k_list.is_empty() {
        return Err(BenchError::InvalidSettings("need trials >= 1 and at least one k".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut out = Vec::new();
    let record = |op: &str, k: u32, d: usize, size: u64, (mean, min, max): (f64, f64, f64)| BenchRecord {
        operation: op.to_string(),
        k,
        d,
        block_size: size,
        trial_count: settings.trials,
        mean_s: mean,
        min_s: min,
        max_s: max,
    };
    match suite {
        Suite::Encode => {
            for &size in &settings.sizes {
                for &k in &settings.k_list {
                    let params = base.reshape(k, size)?;
                    let mut block = vec![0u8; max_block_len(&params) as usize];
                    rng.fill_bytes(&mut block);
                    for &deg in &settings.degrees {
                        let d = deg.at(k as usize);
                        let mut u = 0u32;
                        let t = time_trials(settings.trials, settings.warmup, || {
                            let (fragments, _) = split_block(&params, &block).expect("block fits");
                            let cv = derive_coefficients(&params, 1, 0, u, d).expect("valid degree");
                            black_box(encode_fragment(&params, &fragments, &cv).expect("k fragments"));
                            u += 1;
                        });
                        out.push(record("encode", k, d, size, t));
                    }
                }
            }
        }
        Suite::Hash => {
            for &size in &settings.sizes {
                for &k in &settings.k_list {
                    let params = base.reshape(k, size)?;
                    let fragment = random_fragment(&mut rng, params.m(), params.element_size());
                    let t = time_trials(settings.trials, settings.warmup, || {
                        black_box(hash_fragment(&params, &fragment).expect("well-formed"));
                    });
                    out.push(record("hash", k, 0, size, t));
                }
            }
        }
        Suite::Combine => {
            for &k in &settings.k_list {
                let params = base.reshape(k, k as u64)?;
                let hashes = (0..k)
                    .map(|_| {
                        let mut e = [0u8; 40];
                        rng.fill_bytes(&mut e);
                        subgroup_element(&params, &BigUint::from_bytes_be(&e))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                for &deg in &settings.degrees {
                    let d = deg.at(k as usize);
                    let vectors = (0..settings.trials + settings.warmup)
                        .map(|u| derive_coefficients(&params, rng.gen(), 0, u as u32, d))
                        .collect::<Result<Vec<_>, _>>()?;
                    let mut next = vectors.iter().cycle();
                    let t = time_trials(settings.trials, settings.warmup, || {
                        let cv = next.next().expect("cycle");
                        black_box(combine_hashes(&params, &hashes, cv.coeffs()).expect("k hashes"));
                    });
                    out.push(record("combine", k, d, 0, t));
                }
            }
        }
    }
    Ok(out)
}

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.9},{:.9},{:.9}",
            r.operation, r.k, r.d, r.block_size, r.trial_count, r.mean_s, r.min_s, r.max_s
        );
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<BenchRecord>, BenchError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(CSV_HEADER) {
        return Err(BenchError::MalformedCsv(format!("expected header {CSV_HEADER}")));
    }
    lines
        .enumerate()
        .map(|(n, line)| {
            let f: Vec<&str> = line.trim().split(',').collect();
            let bad = || BenchError::MalformedCsv(format!("row {}: {line}", n + 1));
            if f.len() != 8 {
                return Err(bad());
            }
            Ok(BenchRecord {
                operation: f[0].to_string(),
                k: f[1].parse().map_err(|_| bad())?,
                d: f[2].parse().map_err(|_| bad())?,
                block_size: f[3].parse().map_err(|_| bad())?,
                trial_count: f[4].parse().map_err(|_| bad())?,
                mean_s: f[5].parse().map_err(|_| bad())?,
                min_s: f[6].parse().map_err(|_| bad())?,
                max_s: f[7].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn series<'a>(
    records: &'a [BenchRecord],
    op: &str,
    pred: impl Fn(&BenchRecord) -> bool,
) -> BTreeMap<u64, BTreeMap<u32, &'a BenchRecord>> {
    let mut out: BTreeMap<u64, BTreeMap<u32, &BenchRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.operation == op && pred(r)) {
        out.entry(r.block_size).or_default().insert(r.k, r);
    }
    out
}

fn fmt_times(points: &BTreeMap<u32, &BenchRecord>) -> String {
    points
        .iter()
        .map(|(k, r)| format!("k={k}:{:.3e}", r.min_s))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Scaling checks over the best (minimum) time of each point:
///
/// * encode at `d = 4`: `max / min < 2` across `k`, per block size;
/// * hash at the largest block size: strictly decreasing in `k`, and the
///   log–log slope of time against `m` in `[0.8, 1.2]`;
/// * combine at `d = k`: strictly increasing in `k`; at `d = 4` faster than
///   `d = k` for every `k ≥ 32`.
///
/// A check whose series is absent from `records` is omitted.
pub fn check_shapes(records: &[BenchRecord]) -> Vec<ShapeCheck> {
    let mut checks = Vec::new();

    for (size, points) in series(records, "encode", |r| r.d == 4 || (r.k <= 4 && r.d == r.k as usize)) {
        if points.len() < 2 {
            continue;
        }
        let times: Vec<f64> = points.values().map(|r| r.min_s).collect();
        let ratio = times.iter().copied().fold(0.0, f64::max) / times.iter().copied().fold(f64::INFINITY, f64::min);
        checks.push(ShapeCheck {
            name: format!("encode d=4 flat in k at {size} B"),
            passed: ratio < 2.0,
            detail: format!("max/min = {ratio:.3}; {}", fmt_times(&points)),
        });
    }

    let hash = series(records, "hash", |_| true);
    if let Some((size, points)) = hash.iter().next_back() {
        if points.len() >= 2 {
            let times: Vec<f64> = points.values().map(|r| r.min_s).collect();
            let decreasing = times.windows(2).all(|w| w[1] < w[0]);
            checks.push(ShapeCheck {
                name: format!("hash time strictly decreasing in k at {size} B"),
                passed: decreasing,
                detail: fmt_times(points),
            });
            let pts: Vec<(f64, f64)> = points
                .values()
                .map(|r| (*size as f64 / r.k as f64, r.min_s))
                .collect();
            let slope = log_log_slope(&pts);
            checks.push(ShapeCheck {
                name: format!("hash time linear in m at {size} B"),
                passed: (0.8..=1.2).contains(&slope),
                detail: format!("log-log slope = {slope:.3}"),
            });
        }
    }

    let full = series(records, "combine", |r| r.d == r.k as usize);
    if let Some(points) = full.get(&0) {
        if points.len() >= 2 {
            let times: Vec<f64> = points.values().map(|r| r.min_s).collect();
            checks.push(ShapeCheck {
                name: "combine d=k strictly increasing in k".into(),
                passed: times.windows(2).all(|w| w[1] > w[0]),
                detail: fmt_times(points),
            });
        }
        let sparse = series(records, "combine", |r| r.d == 4 && r.k >= 32);
        if let Some(sparse) = sparse.get(&0) {
            let mut ok = true;
            let mut detail = Vec::new();
            for (k, s) in sparse {
                if let Some(f) = points.get(k) {
                    ok &= s.min_s < f.min_s;
                    detail.push(format!("k={k}: d=4 {:.3e} vs d=k {:.3e}", s.min_s, f.min_s));
                }
            }
            if !detail.is_empty() {
                checks.push(ShapeCheck {
                    name: "combine d=4 below d=k for k >= 32".into(),
                    passed: ok,
                    detail: detail.join("; "),
                });
            }
        }
    }
    checks
}
