//! Low-storage coded blockchain node.
//!
//! Nodes keep a few random linear combinations ("coded fragments") of each
//! block instead of the block itself, together with homomorphic hashes that
//! let any recovering node reject corrupted fragments before decoding.

pub mod arith;
pub mod bench;
pub mod coding;
pub mod hash;
pub mod netsim;
pub mod node;
pub mod params;
pub mod planner;
mod prime;
mod stream;

pub use coding::{
    decode_block, derive_coefficients, encode_fragment, reassemble_block, split_block, BlockLayout,
    CodedFragment, CodingError, CoeffVector, Decoder, Origin,
};
pub use hash::{
    combine_hashes, hash_block, hash_fragment, verify_coded_fragment, verify_coded_hash, Fragment,
    FragmentHash, HashError, SourceHashVerifier,
};
pub use netsim::{
    replay_trace, run_scenario, run_scenario_with_params, AdversaryMix, NetsimError, ScenarioConfig,
    ScenarioMetrics, ScenarioReport, Strategy, Verdict,
};
pub use node::{
    BlockManifest, DirectoryEntry, Evidence, FetchError, LocalNetwork, NodeError, NodeState, Offense,
    PeerDirectory, PeerNetwork, PeerReport, Recovery, RecoveryTrace, StoredBlock, TraceEvent,
};
pub use params::{
    generate_params, parse_params, serialize_params, validate_params, ParamsError, SystemParams,
    ValidationReport,
};
pub use planner::{compression_factor, optimal_k, sweep_table, PlannerError, StoragePlan};
pub use prime::is_probable_prime;
