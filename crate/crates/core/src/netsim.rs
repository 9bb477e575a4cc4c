//! Deterministic in-process network of nodes with adversarial peers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::coding::{derive_coefficients, max_block_len, CodedFragment, Origin};
use crate::hash::{hash_fragment, subgroup_element, FragmentHash, HashError, SourceHashVerifier};
use crate::node::{
    BlockManifest, FetchError, NodeError, NodeState, Offense, PeerDirectory, PeerNetwork,
    RecoveryTrace, TraceEvent,
};
use crate::params::{generate_params, ParamsError, SystemParams};
use crate::stream::Stream;

#[derive(Debug, Error)]
pub enum NetsimError {
    #[error("config not found: {0}")]
    ConfigNotFound(String),
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error("tampered trace: {0}")]
    TamperedTrace(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Node(#[from] NodeError),
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error(transparent)]
    Params(#[from] ParamsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Honest,
    /// Serves honest hashes but flips one element of every fragment.
    CorruptFragment,
    /// Serves a random subgroup element in place of every hash.
    CorruptHash,
    /// Times out on every request.
    Unresponsive,
}

/// Fractions of the nodes running each adversarial strategy.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AdversaryMix {
    pub corrupt_fragment: f64,
    pub corrupt_hash: f64,
    pub unresponsive: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_nodes: usize,
    pub k: u32,
    pub r: u32,
    pub d: usize,
    pub block_count: usize,
    /// Bytes per block, or the upper bound when `vary_block_size` is set.
    pub block_size: u64,
    /// Draw each block length uniformly from `0..=block_size`.
    pub vary_block_size: bool,
    pub adversaries: AdversaryMix,
    pub rng_seed: u64,
    pub epsilon: f64,
    pub p_bits: u64,
    pub q_bits: u64,
    pub element_size: u32,
    /// Maximum block size the parameters are generated for; defaults to
    /// `block_size` plus the length prefix.
    pub s_b: Option<u64>,
    pub params_seed: [u8; 32],
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_nodes: 20,
            k: 32,
            r: 2,
            d: 32,
            block_count: 10,
            block_size: 4000,
            vary_block_size: false,
            adversaries: AdversaryMix::default(),
            rng_seed: 0,
            epsilon: crate::node::DEFAULT_EPSILON,
            p_bits: 1024,
            q_bits: 257,
            element_size: 32,
            s_b: None,
            params_seed: [0; 32],
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), NetsimError> {
        let bad = |m: String| Err(NetsimError::InvalidConfig(m));
        if self.n_nodes == 0 || self.k == 0 || self.r == 0 {
            return bad("n_nodes, k and r must be positive".into());
        }
        if self.d == 0 || self.d > self.k as usize {
            return bad(format!("d={} outside [1, k={}]", self.d, self.k));
        }
        let a = &self.adversaries;
        let fractions = [a.corrupt_fragment, a.corrupt_hash, a.unresponsive];
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return bad("adversary fractions must lie in [0, 1]".into());
        }
        if fractions.iter().sum::<f64>() > 1.0 + 1e-9 {
            return bad("adversary fractions sum above 1".into());
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return bad("epsilon must be >= 0".into());
        }
        Ok(())
    }

    /// Parses flat `key = value` lines; `#` starts a comment. Unknown keys
    /// are rejected, missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, NetsimError> {
        let mut c = Self::default();
        let mut d_is_k = false;
        let mut d_set = false;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| NetsimError::InvalidConfig(format!("line {}: expected key = value", n + 1)))?;
            let err = || NetsimError::InvalidConfig(format!("line {}: bad value for {key}: {value}", n + 1));
            macro_rules! num {
                () => {
                    value.parse().map_err(|_| err())?
                };
            }
            match key {
                "n_nodes" => c.n_nodes = num!(),
                "k" => c.k = num!(),
                "r" => c.r = num!(),
                "d" => {
                    d_set = true;
                    if value == "k" {
                        d_is_k = true;
                    } else {
                        c.d = num!();
                    }
                }
                "block_count" => c.block_count = num!(),
                "block_size" => c.block_size = num!(),
                "vary_block_size" => c.vary_block_size = num!(),
                "corrupt_fragment" => c.adversaries.corrupt_fragment = num!(),
                "corrupt_hash" => c.adversaries.corrupt_hash = num!(),
                "unresponsive" => c.adversaries.unresponsive = num!(),
                "rng_seed" => c.rng_seed = num!(),
                "epsilon" => c.epsilon = num!(),
                "p_bits" => c.p_bits = num!(),
                "q_bits" => c.q_bits = num!(),
                "element_size" => c.element_size = num!(),
                "s_b" => c.s_b = Some(num!()),
                "params_seed" => {
                    let bytes = hex::decode(value).map_err(|_| err())?;
                    c.params_seed = bytes.try_into().map_err(|_| err())?;
                }
                _ => return Err(NetsimError::InvalidConfig(format!("line {}: unknown key {key}", n + 1))),
            }
        }
        if d_is_k || !d_set {
            c.d = c.k as usize;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, NetsimError> {
        match std::fs::read_to_string(path) {
            Ok(text) => Self::parse(&text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                Err(NetsimError::ConfigNotFound(path.display().to_string()))
            }
            Err(e) => Err(e.into()),
        }
    }

    pub fn generate_params(&self) -> Result<SystemParams, NetsimError> {
        Ok(generate_params(
            self.p_bits,
            self.q_bits,
            self.k,
            self.s_b
                .unwrap_or((self.block_size + crate::coding::LENGTH_PREFIX as u64).max(self.k as u64)),
            self.element_size,
            self.params_seed,
        )?)
    }
}

/// Outcome of one recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryRecord {
    pub block_id: u64,
    pub recoverer: u64,
    pub block_len: u64,
    pub succeeded: bool,
    pub bit_exact: bool,
    pub hashes_fetched: usize,
    pub fragments_fetched: usize,
    pub bad_hashes: usize,
    pub bad_fragments: usize,
    pub timeouts: usize,
    pub blacklisted: usize,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioMetrics {
    pub recoveries_attempted: usize,
    pub recoveries_succeeded: usize,
    /// Successful recoveries equal to the original block.
    pub recoveries_bit_exact: usize,
    pub hashes_fetched: usize,
    pub fragments_fetched: usize,
    pub timeouts: usize,
    pub bad_hashes_detected: usize,
    pub bad_fragments_detected: usize,
    pub corrupt_hashes_served: usize,
    pub corrupt_fragments_served: usize,
    /// Corrupt items a recoverer accepted as valid.
    pub undetected_corruptions: usize,
    /// Distinct peers blacklisted by at least one recoverer.
    pub peers_blacklisted: usize,
    pub honest_blacklisted: usize,
    /// Adversaries that served a recoverer corrupt data without being
    /// blacklisted by it.
    pub corrupt_unpunished: usize,
    /// Mean over successful recoveries of `fragments_fetched / k - 1`.
    pub measured_epsilon: f64,
    /// Honest stored fragments per block fall short of `k`.
    pub unsolvable: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseTimes {
    pub params_s: f64,
    pub ingest_s: f64,
    pub recovery_s: f64,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub metrics: ScenarioMetrics,
    pub records: Vec<RecoveryRecord>,
    pub traces: Vec<RecoveryTrace>,
    pub roles: Vec<Strategy>,
    pub wall_times: PhaseTimes,
}

pub const CSV_HEADER: &str = "block_id,recoverer,block_len,succeeded,bit_exact,hashes_fetched,fragments_fetched,bad_hashes,bad_fragments,timeouts,blacklisted,epsilon";

impl ScenarioReport {
    /// One row per recovery, then a `summary` row with totals (mean epsilon).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{:.6}",
                r.block_id,
                r.recoverer,
                r.block_len,
                r.succeeded as u8,
                r.bit_exact as u8,
                r.hashes_fetched,
                r.fragments_fetched,
                r.bad_hashes,
                r.bad_fragments,
                r.timeouts,
                r.blacklisted,
                r.epsilon
            );
        }
        let m = &self.metrics;
        let _ = writeln!(
            out,
            "summary,,,{},{},{},{},{},{},{},{},{:.6}",
            m.recoveries_succeeded,
            m.recoveries_bit_exact,
            m.hashes_fetched,
            m.fragments_fetched,
            m.bad_hashes_detected,
            m.bad_fragments_detected,
            m.timeouts,
            m.peers_blacklisted,
            m.measured_epsilon
        );
        out
    }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport, NetsimError> {
    config.validate()?;
    let start = Instant::now();
    let params = config.generate_params()?;
    let params_s = start.elapsed().as_secs_f64();
    let mut report = run_scenario_with_params(config, &params)?;
    report.wall_times.params_s = params_s;
    Ok(report)
}

/// Node `i` of the scenario has id `i + 1`; id 0 is an outside observer
/// used as recoverer when no node is honest.
pub fn run_scenario_with_params(
    config: &ScenarioConfig,
    params: &SystemParams,
) -> Result<ScenarioReport, NetsimError> {
    config.validate()?;
    if params.k() != config.k as usize {
        return Err(NetsimError::InvalidConfig(format!(
            "parameters have k={}, config k={}",
            params.k(),
            config.k
        )));
    }
    let max_len = max_block_len(params);
    if config.block_size > max_len {
        return Err(NetsimError::InvalidConfig(format!(
            "block_size {} exceeds the largest block ({max_len}) the parameters allow",
            config.block_size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let roles = assign_roles(config, &mut rng);
    let honest: Vec<u64> = (0..config.n_nodes)
        .filter(|&i| roles[i] == Strategy::Honest)
        .map(|i| i as u64 + 1)
        .collect();

    let blocks: Vec<Vec<u8>> = (0..config.block_count)
        .map(|_| {
            let len = if config.vary_block_size {
                rng.gen_range(0..=config.block_size)
            } else {
                config.block_size
            };
            let mut b = vec![0u8; len as usize];
            rng.fill_bytes(&mut b);
            b
        })
        .collect();
    let recoverers: Vec<u64> = (0..config.block_count)
        .map(|_| honest.choose(&mut rng).copied().unwrap_or(0))
        .collect();

    let mut times = PhaseTimes::default();
    let t = Instant::now();
    let mut nodes: Vec<NodeState> = (0..config.n_nodes)
        .map(|i| {
            NodeState::new(i as u64 + 1, config.r, config.d)
                .and_then(|n| n.with_epsilon(config.epsilon))
                .map(|n| n.with_selection_seed(config.rng_seed))
        })
        .collect::<Result<_, _>>()?;
    let mut observer = NodeState::new(0, config.r, config.d)?
        .with_epsilon(config.epsilon)?
        .with_selection_seed(config.rng_seed);
    for (j, block) in blocks.iter().enumerate() {
        let manifest = BlockManifest::for_block(params, j as u64, block)?;
        for node in nodes.iter_mut() {
            node.ingest_block(params, j as u64, block, Some(&manifest))?;
        }
        observer.pin_manifest(manifest);
    }
    times.ingest_s = t.elapsed().as_secs_f64();

    let mut metrics = ScenarioMetrics {
        unsolvable: honest.len().saturating_sub(1) * (config.r as usize) < params.k(),
        ..Default::default()
    };
    let mut records = Vec::new();
    let mut traces = Vec::new();
    let mut blacklisted_anywhere = BTreeSet::new();
    let mut eps_sum = 0.0;

    let t = Instant::now();
    for (j, block) in blocks.iter().enumerate() {
        let j = j as u64;
        let who = recoverers[j as usize];
        let placeholder = NodeState::new(who, config.r, config.d)?;
        let mut me = if who == 0 {
            std::mem::replace(&mut observer, placeholder)
        } else {
            std::mem::replace(&mut nodes[who as usize - 1], placeholder)
        };
        me.drop_block(j);
        let directory = PeerDirectory::uniform((1..=config.n_nodes as u64).filter(|&id| id != who), config.r);
        let mut net = SimNetwork {
            params,
            nodes: &nodes,
            roles: &roles,
            seed: config.rng_seed,
            corrupt_served: BTreeSet::new(),
        };
        let outcome = me.recover_block(params, j, &directory, &mut net);
        let corrupt_served = std::mem::take(&mut net.corrupt_served);
        let (trace, recovered) = match outcome {
            Ok(rec) => (rec.trace, Some(rec.block)),
            Err(NodeError::RecoveryFailed { trace, .. }) => (*trace, None),
            Err(e) => return Err(e.into()),
        };

        for item in &corrupt_served {
            match item.kind {
                ItemKind::Hash => metrics.corrupt_hashes_served += 1,
                ItemKind::Fragment => metrics.corrupt_fragments_served += 1,
            }
            if !me.is_blacklisted(item.peer) {
                metrics.corrupt_unpunished += 1;
            }
        }
        for ev in &trace.events {
            let accepted = match ev {
                TraceEvent::HashChecked { origin, valid: true, .. } => Some((origin, ItemKind::Hash)),
                TraceEvent::FragmentChecked { requested, valid: true, .. } => Some((requested, ItemKind::Fragment)),
                _ => None,
            };
            if let Some((o, kind)) = accepted {
                if corrupt_served.contains(&Served { peer: o.node_id, index: o.index, kind }) {
                    metrics.undetected_corruptions += 1;
                }
            }
        }

        let record = RecoveryRecord {
            block_id: j,
            recoverer: who,
            block_len: block.len() as u64,
            succeeded: recovered.is_some(),
            bit_exact: recovered.as_ref() == Some(block),
            hashes_fetched: trace.hashes_fetched(),
            fragments_fetched: trace.fragments_fetched(),
            bad_hashes: trace.bad_hashes(),
            bad_fragments: trace.bad_fragments(),
            timeouts: trace.timeouts(),
            blacklisted: trace.blacklisted().len(),
            epsilon: trace.fragments_fetched() as f64 / params.k() as f64 - 1.0,
        };
        metrics.recoveries_attempted += 1;
        if record.succeeded {
            metrics.recoveries_succeeded += 1;
            eps_sum += record.epsilon;
        }
        metrics.recoveries_bit_exact += record.bit_exact as usize;
        metrics.hashes_fetched += record.hashes_fetched;
        metrics.fragments_fetched += record.fragments_fetched;
        metrics.timeouts += record.timeouts;
        metrics.bad_hashes_detected += record.bad_hashes;
        metrics.bad_fragments_detected += record.bad_fragments;
        records.push(record);
        traces.push(trace);

        if who == 0 {
            observer = me;
        } else {
            nodes[who as usize - 1] = me;
        }
    }
    times.recovery_s = t.elapsed().as_secs_f64();

    for n in nodes.iter().chain(std::iter::once(&observer)) {
        blacklisted_anywhere.extend(n.blacklist().keys().copied());
    }
    metrics.peers_blacklisted = blacklisted_anywhere.len();
    metrics.honest_blacklisted = blacklisted_anywhere
        .iter()
        .filter(|&&id| id == 0 || roles[id as usize - 1] == Strategy::Honest)
        .count();
    if metrics.recoveries_succeeded > 0 {
        metrics.measured_epsilon = eps_sum / metrics.recoveries_succeeded as f64;
    }
    Ok(ScenarioReport {
        metrics,
        records,
        traces,
        roles,
        wall_times: times,
    })
}

/// Adversary counts are `round(n · fraction)`, assigned to a seeded random
/// subset of the nodes.
fn assign_roles(config: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Vec<Strategy> {
    let n = config.n_nodes;
    let a = &config.adversaries;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut roles = vec![Strategy::Honest; n];
    let mut next = 0;
    for (fraction, strategy) in [
        (a.corrupt_fragment, Strategy::CorruptFragment),
        (a.corrupt_hash, Strategy::CorruptHash),
        (a.unresponsive, Strategy::Unresponsive),
    ] {
        let count = ((n as f64 * fraction).round() as usize).min(n - next);
        for &i in &order[next..next + count] {
            roles[i] = strategy;
        }
        next += count;
    }
    roles
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum ItemKind {
    Hash,
    Fragment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Served {
    peer: u64,
    index: u32,
    kind: ItemKind,
}

struct SimNetwork<'a> {
    params: &'a SystemParams,
    nodes: &'a [NodeState],
    roles: &'a [Strategy],
    seed: u64,
    corrupt_served: BTreeSet<Served>,
}

impl SimNetwork<'_> {
    fn node(&self, peer: u64) -> Result<(&NodeState, Strategy), FetchError> {
        if peer == 0 || peer as usize > self.nodes.len() {
            return Err(FetchError::Timeout);
        }
        let i = peer as usize - 1;
        match self.roles[i] {
            Strategy::Unresponsive => Err(FetchError::Timeout),
            s => Ok((&self.nodes[i], s)),
        }
    }

    /// Per-item adversarial randomness, fixed by `(seed, peer, block, index)`.
    fn stream(&self, tag: &[u8], peer: u64, block_id: u64, index: u32) -> Stream {
        Stream::new(&[
            tag,
            &self.seed.to_be_bytes(),
            &peer.to_be_bytes(),
            &block_id.to_be_bytes(),
            &index.to_be_bytes(),
        ])
    }
}

impl PeerNetwork for SimNetwork<'_> {
    fn fetch_manifest(&mut self, peer: u64, block_id: u64) -> Result<BlockManifest, FetchError> {
        let (node, _) = self.node(peer)?;
        node.serve_manifest(block_id).map_err(|_| FetchError::NotStored)
    }

    fn fetch_hash(&mut self, peer: u64, block_id: u64, index: u32) -> Result<FragmentHash, FetchError> {
        let (node, role) = self.node(peer)?;
        let (honest, _) = node.serve_hash(block_id, index).map_err(|_| FetchError::NotStored)?;
        if role != Strategy::CorruptHash {
            return Ok(honest);
        }
        let exponent = self.stream(b"netsim-hash", peer, block_id, index).below(self.params.q());
        let forged = subgroup_element(self.params, &exponent).map_err(|_| FetchError::Timeout)?;
        if forged != honest {
            self.corrupt_served.insert(Served {
                peer,
                index,
                kind: ItemKind::Hash,
            });
        }
        Ok(forged)
    }

    fn fetch_fragment(&mut self, peer: u64, block_id: u64, index: u32) -> Result<CodedFragment, FetchError> {
        let (node, role) = self.node(peer)?;
        let mut f = node.serve_fragment(block_id, index).map_err(|_| FetchError::NotStored)?;
        if role == Strategy::CorruptFragment {
            let q = self.params.q();
            let mut s = self.stream(b"netsim-fragment", peer, block_id, index);
            let pos = s.below_u32(f.fragment.len() as u32) as usize;
            let delta = s.below(&(q - 1u32)) + 1u32;
            let e = &mut f.fragment.elements_mut()[pos];
            *e = (&*e + delta) % q;
            self.corrupt_served.insert(Served {
                peer,
                index,
                kind: ItemKind::Fragment,
            });
        }
        Ok(f)
    }
}

/// Every blacklisting in a trace, each confirmed by a failing check.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Verdict {
    pub checks_replayed: usize,
    pub confirmed: BTreeMap<u64, Offense>,
}

/// Re-runs every recorded check of `trace` and confirms each blacklisting.
pub fn replay_trace(params: &SystemParams, trace: &RecoveryTrace) -> Result<Verdict, NetsimError> {
    let tampered = |m: String| NetsimError::TamperedTrace(m);
    let mut verdict = Verdict::default();
    if trace.events.is_empty() {
        return Ok(verdict);
    }
    let verifier = SourceHashVerifier::new(params, &trace.source_hashes)
        .map_err(|e| tampered(format!("source hashes unusable: {e}")))?;
    let expected = |o: &Origin| -> Result<FragmentHash, NetsimError> {
        if o.block_id != trace.block_id {
            return Err(tampered(format!("check for block {} in trace of block {}", o.block_id, trace.block_id)));
        }
        let cv = derive_coefficients(params, o.node_id, o.block_id, o.index, trace.degree)
            .map_err(|e| tampered(e.to_string()))?;
        Ok(verifier.combine(cv.coeffs())?)
    };
    let mut failed: BTreeSet<(u64, Offense)> = BTreeSet::new();
    for (n, ev) in trace.events.iter().enumerate() {
        match ev {
            TraceEvent::HashChecked { origin, claimed, valid } => {
                if (&expected(origin)? == claimed) != *valid {
                    return Err(tampered(format!("event {n}: hash check of {origin:?} does not replay")));
                }
                if !valid {
                    failed.insert((origin.node_id, Offense::BadHash));
                }
                verdict.checks_replayed += 1;
            }
            TraceEvent::FragmentChecked {
                requested,
                claimed,
                received,
                valid,
            } => {
                if &expected(requested)? != claimed {
                    return Err(tampered(format!("event {n}: fragment checked against an unverified hash")));
                }
                let matches = received.origin == *requested
                    && received.fragment.check(params).is_ok()
                    && &hash_fragment(params, &received.fragment)? == claimed;
                if matches != *valid {
                    return Err(tampered(format!("event {n}: fragment check of {requested:?} does not replay")));
                }
                if !valid {
                    failed.insert((requested.node_id, Offense::BadFragment));
                }
                verdict.checks_replayed += 1;
            }
            TraceEvent::Unresponsive { .. } => {}
            TraceEvent::Blacklisted { peer, offense } => {
                if !failed.contains(&(*peer, *offense)) {
                    return Err(tampered(format!(
                        "event {n}: peer {peer} blacklisted for {offense:?} without a failing check"
                    )));
                }
                verdict.confirmed.insert(*peer, *offense);
            }
        }
    }
    Ok(verdict)
}
