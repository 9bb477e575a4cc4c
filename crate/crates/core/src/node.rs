//! Node lifecycle: coded storage of ingested blocks, serving peers, and
//! verified recovery with local blacklisting.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::coding::{
    derive_coefficients, encode_fragment, read_coded, reassemble_block, split_block, BlockLayout,
    CodedFragment, CodingError, Decoder, Origin,
};
use crate::hash::{
    combine_hashes, hash_block, hash_fragment, FragmentHash, HashError, SourceHashVerifier,
};
use crate::params::{ParamsError, Reader, SystemParams};

/// Bytes of per-block metadata besides the hashes: block id, length, k and
/// element size.
pub const MANIFEST_OVERHEAD: u64 = 24;

/// Over-download factor used when none is configured.
pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Debug, Error)]
pub enum NodeError {
    #[error("provided manifest for block {0} disagrees with the block contents")]
    ManifestMismatch(u64),
    #[error("block {block_id} index {index} is not stored here")]
    NotStored { block_id: u64, index: u32 },
    #[error("no trustworthy manifest for block {0}")]
    ManifestUnavailable(u64),
    #[error("malformed manifest: {0}")]
    MalformedManifest(String),
    #[error("recovery of block {block_id} failed: {reason}")]
    RecoveryFailed {
        block_id: u64,
        reason: String,
        trace: Box<RecoveryTrace>,
    },
    #[error("invalid node configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Coding(#[from] CodingError),
    #[error(transparent)]
    Hash(#[from] HashError),
}

/// Certified per-block data: layout and the `k` source-fragment hashes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockManifest {
    pub block_id: u64,
    pub layout: BlockLayout,
    pub source_hashes: Vec<FragmentHash>,
}

impl BlockManifest {
    /// Manifest of a block, computed from its contents.
    pub fn for_block(params: &SystemParams, block_id: u64, block: &[u8]) -> Result<Self, NodeError> {
        let (fragments, layout) = split_block(params, block)?;
        Ok(Self {
            block_id,
            layout,
            source_hashes: hash_block(params, &fragments)?,
        })
    }

    /// One `key=value` per line, in the order `block_id`, `block_len`, `k`,
    /// `element_size`, `hash[0]` .. `hash[k-1]`. Hashes are lowercase hex,
    /// fixed width `2·ceil(|p|/8)`.
    pub fn to_text(&self, params: &SystemParams) -> String {
        let mut out = format!(
            "block_id={}\nblock_len={}\nk={}\nelement_size={}\n",
            self.block_id, self.layout.block_len, self.layout.k, self.layout.element_size
        );
        for (i, h) in self.source_hashes.iter().enumerate() {
            out.push_str(&format!("hash[{i}]={}\n", h.to_hex(params)));
        }
        out
    }

    pub fn from_text(params: &SystemParams, text: &str) -> Result<Self, NodeError> {
        let bad = |msg: String| NodeError::MalformedManifest(msg);
        let mut lines = text.lines();
        let mut field = |key: &str| -> Result<String, NodeError> {
            let line = lines.next().ok_or_else(|| bad(format!("missing {key}")))?;
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected {key}=...")))?;
            if k != key {
                return Err(bad(format!("expected {key}, found {k}")));
            }
            Ok(v.to_string())
        };
        let num = |key: &str, v: String| -> Result<u64, NodeError> {
            if v.is_empty() || !v.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad(format!("{key} is not a decimal integer")));
            }
            v.parse().map_err(|_| bad(format!("{key} out of range")))
        };
        let block_id = num("block_id", field("block_id")?)?;
        let block_len = num("block_len", field("block_len")?)?;
        let k = num("k", field("k")?)? as usize;
        let element_size = num("element_size", field("element_size")?)? as usize;
        if k != params.k() || element_size != params.element_size() {
            return Err(bad(format!(
                "geometry k={k}, element_size={element_size} does not match parameters"
            )));
        }
        let width = 2 * params.hash_bytes();
        let mut source_hashes = Vec::with_capacity(k);
        for i in 0..k {
            let v = field(&format!("hash[{i}]"))?;
            if v.len() != width || v.bytes().any(|b| b.is_ascii_uppercase()) {
                return Err(bad(format!("hash[{i}] must be {width} lowercase hex digits")));
            }
            let bytes = hex::decode(&v).map_err(|e| bad(format!("hash[{i}]: {e}")))?;
            source_hashes.push(FragmentHash::from_bytes(params, &bytes)?);
        }
        if lines.next().is_some() {
            return Err(bad("trailing lines".into()));
        }
        let layout = BlockLayout {
            block_len,
            k,
            m: params.m(),
            element_size,
        };
        if block_len + crate::coding::LENGTH_PREFIX as u64 > layout.capacity() {
            return Err(bad(format!("block_len {block_len} exceeds capacity")));
        }
        Ok(Self {
            block_id,
            layout,
            source_hashes,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Offense {
    BadHash,
    BadFragment,
    Unresponsive,
}

/// What a failed check saw: the hash the peer claimed and, for fragments,
/// a SHA-256 digest of the fragment's wire form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evidence {
    pub claimed_hash: FragmentHash,
    pub fragment_digest: Option<[u8; 32]>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeerReport {
    pub reporter: u64,
    pub accused: u64,
    pub block_id: u64,
    pub index: u32,
    pub offense: Offense,
    pub evidence: Option<Evidence>,
}

/// Everything a node keeps for one block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredBlock {
    pub manifest: BlockManifest,
    pub fragments: Vec<CodedFragment>,
    pub hashes: Vec<FragmentHash>,
}

impl StoredBlock {
    /// 4-byte big-endian count, then per index the coded fragment's wire
    /// form followed by its fixed-width hash. The manifest is kept apart.
    pub fn fragments_to_bytes(&self, params: &SystemParams) -> Vec<u8> {
        let mut out = (self.fragments.len() as u32).to_be_bytes().to_vec();
        for (f, h) in self.fragments.iter().zip(&self.hashes) {
            out.extend_from_slice(&f.to_wire(params));
            out.extend_from_slice(&h.to_bytes(params));
        }
        out
    }

    pub fn from_parts(params: &SystemParams, manifest: BlockManifest, bytes: &[u8]) -> Result<Self, NodeError> {
        let mut r = Reader::new(bytes);
        let malformed = |e: ParamsError| NodeError::Coding(CodingError::Malformed(e.to_string()));
        let count = r.u32().map_err(malformed)?;
        let mut fragments = Vec::new();
        let mut hashes = Vec::new();
        for _ in 0..count {
            let (origin, fragment) = read_coded(params, &mut r)?;
            fragments.push(CodedFragment { origin, fragment });
            let h = r.take(params.hash_bytes()).map_err(malformed)?;
            hashes.push(FragmentHash::from_bytes(params, h)?);
        }
        if r.remaining() != 0 {
            return Err(CodingError::Malformed("trailing bytes".into()).into());
        }
        Ok(Self {
            manifest,
            fragments,
            hashes,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FetchError {
    Timeout,
    NotStored,
}

/// Request/response access to other nodes.
pub trait PeerNetwork {
    fn fetch_manifest(&mut self, peer: u64, block_id: u64) -> Result<BlockManifest, FetchError>;
    fn fetch_hash(&mut self, peer: u64, block_id: u64, index: u32) -> Result<FragmentHash, FetchError>;
    fn fetch_fragment(&mut self, peer: u64, block_id: u64, index: u32) -> Result<CodedFragment, FetchError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectoryEntry {
    pub node_id: u64,
    pub indices: Vec<u32>,
}

/// Which peers advertise which coded-fragment indices of a block.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PeerDirectory {
    pub entries: Vec<DirectoryEntry>,
}

impl PeerDirectory {
    /// Every listed peer advertising indices `0..r`.
    pub fn uniform(peers: impl IntoIterator<Item = u64>, r: u32) -> Self {
        Self {
            entries: peers
                .into_iter()
                .map(|node_id| DirectoryEntry {
                    node_id,
                    indices: (0..r).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    HashChecked {
        origin: Origin,
        claimed: FragmentHash,
        valid: bool,
    },
    /// `claimed` is the already verified hash for `requested`.
    FragmentChecked {
        requested: Origin,
        claimed: FragmentHash,
        received: CodedFragment,
        valid: bool,
    },
    Unresponsive {
        peer: u64,
        index: u32,
    },
    Blacklisted {
        peer: u64,
        offense: Offense,
    },
}

/// Record of one recovery, sufficient to re-check every verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryTrace {
    pub recoverer: u64,
    pub block_id: u64,
    pub degree: usize,
    pub source_hashes: Vec<FragmentHash>,
    pub events: Vec<TraceEvent>,
}

impl RecoveryTrace {
    fn count(&self, pred: impl Fn(&TraceEvent) -> bool) -> usize {
        self.events.iter().filter(|e| pred(e)).count()
    }

    pub fn hashes_fetched(&self) -> usize {
        self.count(|e| matches!(e, TraceEvent::HashChecked { .. }))
    }

    pub fn fragments_fetched(&self) -> usize {
        self.count(|e| matches!(e, TraceEvent::FragmentChecked { .. }))
    }

    pub fn bad_hashes(&self) -> usize {
        self.count(|e| matches!(e, TraceEvent::HashChecked { valid: false, .. }))
    }

    pub fn bad_fragments(&self) -> usize {
        self.count(|e| matches!(e, TraceEvent::FragmentChecked { valid: false, .. }))
    }

    pub fn timeouts(&self) -> usize {
        self.count(|e| matches!(e, TraceEvent::Unresponsive { .. }))
    }

    pub fn blacklisted(&self) -> Vec<u64> {
        self.events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::Blacklisted { peer, .. } => Some(*peer),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Recovery {
    pub block: Vec<u8>,
    pub trace: RecoveryTrace,
}

#[derive(Debug, Clone)]
pub struct NodeState {
    node_id: u64,
    r: u32,
    degree: usize,
    epsilon: f64,
    selection_seed: u64,
    store: BTreeMap<u64, StoredBlock>,
    pinned: BTreeMap<u64, BlockManifest>,
    blacklist: BTreeMap<u64, Offense>,
    reports: Vec<PeerReport>,
}

impl NodeState {
    pub fn new(node_id: u64, r: u32, degree: usize) -> Result<Self, NodeError> {
        if r == 0 || degree == 0 {
            return Err(NodeError::InvalidConfig("r and d must be positive".into()));
        }
        Ok(Self {
            node_id,
            r,
            degree,
            epsilon: DEFAULT_EPSILON,
            selection_seed: node_id,
            store: BTreeMap::new(),
            pinned: BTreeMap::new(),
            blacklist: BTreeMap::new(),
            reports: Vec::new(),
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self, NodeError> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(NodeError::InvalidConfig(format!("epsilon {epsilon} must be >= 0")));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    /// Seed of the peer shuffle used during recovery.
    pub fn with_selection_seed(mut self, seed: u64) -> Self {
        self.selection_seed = seed;
        self
    }

    pub fn node_id(&self) -> u64 {
        self.node_id
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn stored(&self, block_id: u64) -> Option<&StoredBlock> {
        self.store.get(&block_id)
    }

    pub fn stored_blocks(&self) -> impl Iterator<Item = (&u64, &StoredBlock)> {
        self.store.iter()
    }

    pub fn blacklist(&self) -> &BTreeMap<u64, Offense> {
        &self.blacklist
    }

    pub fn is_blacklisted(&self, peer: u64) -> bool {
        self.blacklist.contains_key(&peer)
    }

    pub fn reports(&self) -> &[PeerReport] {
        &self.reports
    }

    /// Trust `manifest` for its block without fetching it from peers.
    pub fn pin_manifest(&mut self, manifest: BlockManifest) {
        self.pinned.insert(manifest.block_id, manifest);
    }

    pub fn manifest(&self, block_id: u64) -> Option<&BlockManifest> {
        self.pinned.get(&block_id)
    }

    /// Forget the coded fragments of a block; its pinned manifest stays.
    pub fn drop_block(&mut self, block_id: u64) -> Option<StoredBlock> {
        self.store.remove(&block_id)
    }

    /// Replaces a block by `r` coded fragments and their hashes. The hashes
    /// are obtained from the source hashes, not from the coded data.
    pub fn ingest_block(
        &mut self,
        params: &SystemParams,
        block_id: u64,
        block: &[u8],
        manifest: Option<&BlockManifest>,
    ) -> Result<(), NodeError> {
        let (fragments, layout) = split_block(params, block)?;
        let source_hashes = hash_block(params, &fragments)?;
        let manifest = match manifest {
            Some(given) => {
                if given.block_id != block_id
                    || given.layout != layout
                    || given.source_hashes != source_hashes
                {
                    return Err(NodeError::ManifestMismatch(block_id));
                }
                given.clone()
            }
            None => BlockManifest {
                block_id,
                layout,
                source_hashes,
            },
        };

        let vectors = (0..self.r)
            .map(|u| derive_coefficients(params, self.node_id, block_id, u, self.degree))
            .collect::<Result<Vec<_>, _>>()?;
        let coded = vectors
            .iter()
            .map(|cv| encode_fragment(params, &fragments, cv))
            .collect::<Result<Vec<_>, _>>()?;
        let hashes = if vectors.len() == 1 {
            vec![combine_hashes(params, &manifest.source_hashes, vectors[0].coeffs())?]
        } else {
            let verifier = SourceHashVerifier::new(params, &manifest.source_hashes)?;
            vectors
                .iter()
                .map(|cv| verifier.combine(cv.coeffs()))
                .collect::<Result<Vec<_>, _>>()?
        };
        drop(fragments);

        self.pinned.insert(block_id, manifest.clone());
        self.store.insert(
            block_id,
            StoredBlock {
                manifest,
                fragments: coded,
                hashes,
            },
        );
        Ok(())
    }

    /// Adopts a previously stored entry after checking that fragment `u`
    /// has origin `(node_id, block, u)` and that its hash equals the
    /// combination of the manifest's source hashes.
    pub fn import_block(&mut self, params: &SystemParams, entry: StoredBlock) -> Result<(), NodeError> {
        let j = entry.manifest.block_id;
        let bad = || NodeError::ManifestMismatch(j);
        if entry.fragments.len() != entry.hashes.len() || entry.fragments.len() != self.r as usize {
            return Err(NodeError::InvalidConfig(format!(
                "block {j}: expected {} fragments, found {}",
                self.r,
                entry.fragments.len()
            )));
        }
        let verifier = SourceHashVerifier::new(params, &entry.manifest.source_hashes)?;
        for (u, (f, h)) in entry.fragments.iter().zip(&entry.hashes).enumerate() {
            if f.origin != Origin::new(self.node_id, j, u as u32) {
                return Err(bad());
            }
            let cv = derive_coefficients(params, self.node_id, j, u as u32, self.degree)?;
            if !verifier.verify(cv.coeffs(), h)? {
                return Err(bad());
            }
        }
        self.pinned.insert(j, entry.manifest.clone());
        self.store.insert(j, entry);
        Ok(())
    }

    pub fn serve_manifest(&self, block_id: u64) -> Result<BlockManifest, NodeError> {
        self.pinned
            .get(&block_id)
            .cloned()
            .ok_or(NodeError::NotStored { block_id, index: 0 })
    }

    pub fn serve_hash(&self, block_id: u64, index: u32) -> Result<(FragmentHash, Origin), NodeError> {
        let entry = self.entry(block_id, index)?;
        Ok((
            entry.hashes[index as usize].clone(),
            entry.fragments[index as usize].origin,
        ))
    }

    pub fn serve_fragment(&self, block_id: u64, index: u32) -> Result<CodedFragment, NodeError> {
        Ok(self.entry(block_id, index)?.fragments[index as usize].clone())
    }

    fn entry(&self, block_id: u64, index: u32) -> Result<&StoredBlock, NodeError> {
        self.store
            .get(&block_id)
            .filter(|e| (index as usize) < e.fragments.len())
            .ok_or(NodeError::NotStored { block_id, index })
    }

    /// Bytes held for a block: `r` fragments of `m` elements, `k + r` hashes
    /// and the manifest metadata.
    pub fn stored_bytes(&self, params: &SystemParams, block_id: u64) -> Option<u64> {
        let e = self.store.get(&block_id)?;
        let r = e.fragments.len() as u64;
        let k = e.manifest.source_hashes.len() as u64;
        Some(
            r * params.m() as u64 * params.element_bytes() as u64
                + (k + r) * params.hash_bytes() as u64
                + MANIFEST_OVERHEAD,
        )
    }

    /// Re-hashes every stored fragment and lists the `(block, index)` pairs
    /// whose stored hash disagrees.
    pub fn audit(&self, params: &SystemParams) -> Result<Vec<(u64, u32)>, NodeError> {
        let mut bad = Vec::new();
        for (&j, e) in &self.store {
            for (u, (f, h)) in e.fragments.iter().zip(&e.hashes).enumerate() {
                if &hash_fragment(params, &f.fragment)? != h {
                    bad.push((j, u as u32));
                }
            }
        }
        Ok(bad)
    }

    /// Logs a report and blacklists the accused unless the offense is
    /// `Unresponsive`. A peer keeps its first recorded offense.
    pub fn report_malicious(
        &mut self,
        accused: u64,
        block_id: u64,
        index: u32,
        offense: Offense,
        evidence: Option<Evidence>,
    ) -> PeerReport {
        let report = PeerReport {
            reporter: self.node_id,
            accused,
            block_id,
            index,
            offense,
            evidence,
        };
        if offense != Offense::Unresponsive {
            self.blacklist.entry(accused).or_insert(offense);
        }
        self.reports.push(report.clone());
        report
    }

    /// Runs the verified recovery of block `block_id` against `network`.
    pub fn recover_block(
        &mut self,
        params: &SystemParams,
        block_id: u64,
        directory: &PeerDirectory,
        network: &mut dyn PeerNetwork,
    ) -> Result<Recovery, NodeError> {
        let manifest = self.obtain_manifest(params, block_id, directory, network)?;
        let k = params.k();
        let mut trace = RecoveryTrace {
            recoverer: self.node_id,
            block_id,
            degree: self.degree,
            source_hashes: manifest.source_hashes.clone(),
            events: Vec::new(),
        };
        let verifier = SourceHashVerifier::new(params, &manifest.source_hashes)?;
        let mut decoder = Decoder::new(params)?;

        let mut queue = self.candidates(block_id, directory).into_iter();
        let mut silent: BTreeSet<u64> = BTreeSet::new();
        // verified hashes whose fragments have not been fetched yet
        let mut pending: Vec<(Origin, Vec<BigUint>, FragmentHash)> = Vec::new();
        let mut verified_total = 0usize;
        let mut target = ((k as f64) * (1.0 + self.epsilon) - 1e-9).ceil().max(k as f64) as usize;
        let step = k.div_ceil(10).max(1);

        loop {
            while verified_total < target {
                let Some((peer, index)) = queue.next() else { break };
                if self.is_blacklisted(peer) || silent.contains(&peer) {
                    continue;
                }
                let origin = Origin::new(peer, block_id, index);
                let claimed = match network.fetch_hash(peer, block_id, index) {
                    Ok(h) => h,
                    Err(FetchError::NotStored) => continue,
                    Err(FetchError::Timeout) => {
                        self.note_silence(&mut trace, &mut silent, peer, block_id, index);
                        continue;
                    }
                };
                let cv = derive_coefficients(params, peer, block_id, index, self.degree)?;
                let valid = verifier.verify(cv.coeffs(), &claimed)?;
                trace.events.push(TraceEvent::HashChecked {
                    origin,
                    claimed: claimed.clone(),
                    valid,
                });
                if valid {
                    verified_total += 1;
                    pending.push((origin, cv.coeffs().to_vec(), claimed));
                } else {
                    let evidence = Evidence {
                        claimed_hash: claimed,
                        fragment_digest: None,
                    };
                    self.accuse(&mut trace, peer, block_id, index, Offense::BadHash, evidence);
                }
            }

            let mut progressed = false;
            for (origin, coeffs, claimed) in std::mem::take(&mut pending) {
                if decoder.is_complete() {
                    break;
                }
                let peer = origin.node_id;
                if self.is_blacklisted(peer) || silent.contains(&peer) {
                    continue;
                }
                let received = match network.fetch_fragment(peer, block_id, origin.index) {
                    Ok(f) => f,
                    Err(FetchError::NotStored) => continue,
                    Err(FetchError::Timeout) => {
                        self.note_silence(&mut trace, &mut silent, peer, block_id, origin.index);
                        continue;
                    }
                };
                progressed = true;
                let valid = received.origin == origin
                    && received.fragment.check(params).is_ok()
                    && hash_fragment(params, &received.fragment)? == claimed;
                if valid {
                    decoder.push(&coeffs, &received.fragment)?;
                }
                let digest = fragment_digest(params, &received);
                trace.events.push(TraceEvent::FragmentChecked {
                    requested: origin,
                    claimed: claimed.clone(),
                    received,
                    valid,
                });
                if !valid {
                    let evidence = Evidence {
                        claimed_hash: claimed,
                        fragment_digest: Some(digest),
                    };
                    self.accuse(&mut trace, peer, block_id, origin.index, Offense::BadFragment, evidence);
                }
            }

            if decoder.is_complete() {
                break;
            }
            let exhausted = queue.len() == 0;
            if exhausted && !progressed {
                return Err(NodeError::RecoveryFailed {
                    block_id,
                    reason: format!(
                        "peers exhausted with {} of {k} independent verified fragments",
                        decoder.rank()
                    ),
                    trace: Box::new(trace),
                });
            }
            target = verified_total.max(target) + step;
        }

        let sources = decoder.finish()?;
        let block = reassemble_block(params, &sources, &manifest.layout)?;
        Ok(Recovery { block, trace })
    }

    fn accuse(
        &mut self,
        trace: &mut RecoveryTrace,
        peer: u64,
        block_id: u64,
        index: u32,
        offense: Offense,
        evidence: Evidence,
    ) {
        let fresh = !self.is_blacklisted(peer);
        self.report_malicious(peer, block_id, index, offense, Some(evidence));
        if fresh {
            trace.events.push(TraceEvent::Blacklisted { peer, offense });
        }
    }

    fn note_silence(
        &mut self,
        trace: &mut RecoveryTrace,
        silent: &mut BTreeSet<u64>,
        peer: u64,
        block_id: u64,
        index: u32,
    ) {
        trace.events.push(TraceEvent::Unresponsive { peer, index });
        silent.insert(peer);
        self.report_malicious(peer, block_id, index, Offense::Unresponsive, None);
    }

    /// `(peer, index)` pairs in request order: peers shuffled by a seeded
    /// generator, then taken round-robin one index at a time.
    fn candidates(&self, block_id: u64, directory: &PeerDirectory) -> Vec<(u64, u32)> {
        let mut entries: Vec<&DirectoryEntry> = directory
            .entries
            .iter()
            .filter(|e| e.node_id != self.node_id && !self.is_blacklisted(e.node_id))
            .collect();
        let mut seed = [0u8; 32];
        seed[..8].copy_from_slice(&self.selection_seed.to_be_bytes());
        seed[8..16].copy_from_slice(&block_id.to_be_bytes());
        seed[16..24].copy_from_slice(&self.node_id.to_be_bytes());
        entries.shuffle(&mut ChaCha8Rng::from_seed(seed));

        let depth = entries.iter().map(|e| e.indices.len()).max().unwrap_or(0);
        let mut out = Vec::new();
        for round in 0..depth {
            for e in &entries {
                if let Some(&u) = e.indices.get(round) {
                    out.push((e.node_id, u));
                }
            }
        }
        out
    }

    /// Pinned manifest, or one served identically by two distinct peers.
    fn obtain_manifest(
        &mut self,
        params: &SystemParams,
        block_id: u64,
        directory: &PeerDirectory,
        network: &mut dyn PeerNetwork,
    ) -> Result<BlockManifest, NodeError> {
        if let Some(m) = self.pinned.get(&block_id) {
            return Ok(m.clone());
        }
        let mut seen: Vec<BlockManifest> = Vec::new();
        let mut peers: Vec<u64> = self
            .candidates(block_id, directory)
            .into_iter()
            .map(|(p, _)| p)
            .collect();
        let mut uniq = BTreeSet::new();
        peers.retain(|p| uniq.insert(*p));
        for peer in peers {
            let Ok(m) = network.fetch_manifest(peer, block_id) else { continue };
            let plausible = m.block_id == block_id
                && m.layout.k == params.k()
                && m.layout.m == params.m()
                && m.layout.element_size == params.element_size()
                && m.source_hashes.len() == params.k();
            if !plausible {
                continue;
            }
            if seen.contains(&m) {
                self.pinned.insert(block_id, m.clone());
                return Ok(m);
            }
            seen.push(m);
        }
        Err(NodeError::ManifestUnavailable(block_id))
    }
}

/// SHA-256 of a coded fragment's wire form.
pub fn fragment_digest(params: &SystemParams, fragment: &CodedFragment) -> [u8; 32] {
    Sha256::digest(fragment.to_wire(params)).into()
}

/// A set of honest nodes answering requests from their own stores.
pub struct LocalNetwork<'a> {
    nodes: BTreeMap<u64, &'a NodeState>,
}

impl<'a> LocalNetwork<'a> {
    pub fn new(nodes: impl IntoIterator<Item = &'a NodeState>) -> Self {
        Self {
            nodes: nodes.into_iter().map(|n| (n.node_id(), n)).collect(),
        }
    }

    /// Directory advertising every index each node holds for `block_id`.
    pub fn directory(&self, block_id: u64) -> PeerDirectory {
        PeerDirectory {
            entries: self
                .nodes
                .values()
                .filter_map(|n| {
                    n.stored(block_id).map(|e| DirectoryEntry {
                        node_id: n.node_id(),
                        indices: (0..e.fragments.len() as u32).collect(),
                    })
                })
                .collect(),
        }
    }

    fn node(&self, peer: u64) -> Result<&NodeState, FetchError> {
        self.nodes.get(&peer).copied().ok_or(FetchError::Timeout)
    }
}

impl PeerNetwork for LocalNetwork<'_> {
    fn fetch_manifest(&mut self, peer: u64, block_id: u64) -> Result<BlockManifest, FetchError> {
        self.node(peer)?
            .serve_manifest(block_id)
            .map_err(|_| FetchError::NotStored)
    }

    fn fetch_hash(&mut self, peer: u64, block_id: u64, index: u32) -> Result<FragmentHash, FetchError> {
        self.node(peer)?
            .serve_hash(block_id, index)
            .map(|(h, _)| h)
            .map_err(|_| FetchError::NotStored)
    }

    fn fetch_fragment(&mut self, peer: u64, block_id: u64, index: u32) -> Result<CodedFragment, FetchError> {
        self.node(peer)?
            .serve_fragment(block_id, index)
            .map_err(|_| FetchError::NotStored)
    }
}
