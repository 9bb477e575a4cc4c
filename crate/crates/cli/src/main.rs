use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use lsnode::bench::{self, BenchSettings, Degree, Suite};
use lsnode::planner::{self, TABLE_K, TABLE_R};
use lsnode::{
    generate_params, parse_params, serialize_params, validate_params, BlockManifest, LocalNetwork, NetsimError,
    NodeError, NodeState, ParamsError, ScenarioConfig, StoredBlock, SystemParams,
};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("recovery failed: {0}")]
    Recovery(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    NotFound(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Verification(_) => 3,
            CliError::Recovery(_) => 4,
            CliError::Io { .. } | CliError::NotFound(_) => 5,
        }
    }
}

impl From<ParamsError> for CliError {
    fn from(e: ParamsError) -> Self {
        match e {
            ParamsError::InvalidGeometry(_) => CliError::Usage(e.to_string()),
            _ => CliError::Verification(e.to_string()),
        }
    }
}

impl From<NodeError> for CliError {
    fn from(e: NodeError) -> Self {
        match e {
            NodeError::RecoveryFailed { .. } | NodeError::ManifestUnavailable(_) => CliError::Recovery(e.to_string()),
            NodeError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Verification(e.to_string()),
        }
    }
}

impl From<NetsimError> for CliError {
    fn from(e: NetsimError) -> Self {
        match e {
            NetsimError::ConfigNotFound(_) => CliError::NotFound(e.to_string()),
            NetsimError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            NetsimError::Io(source) => CliError::Io {
                path: PathBuf::from("<scenario>"),
                source,
            },
            _ => CliError::Verification(e.to_string()),
        }
    }
}

impl From<bench::BenchError> for CliError {
    fn from(e: bench::BenchError) -> Self {
        match e {
            bench::BenchError::MalformedCsv(_) => CliError::Verification(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<planner::PlannerError> for CliError {
    fn from(e: planner::PlannerError) -> Self {
        CliError::Usage(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Low-storage coded block node.
///
/// Exit codes: 0 ok, 2 usage, 3 verification failure, 4 recovery failure,
/// 5 I/O.
#[derive(Parser)]
#[command(name = "lsnode", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Schnorr group and fragment generators.
    GenParams(GenParamsArgs),
    /// Replace a block by `r` coded fragments in a node store directory.
    ///
    /// The store holds `node.txt`, `block-<id>.manifest` and
    /// `block-<id>.frags`.
    Encode(EncodeArgs),
    /// Recover a block from one or more store directories.
    Recover(RecoverArgs),
    /// Run a seeded network simulation.
    ///
    /// CSV columns: block_id, recoverer, block_len, succeeded, bit_exact,
    /// hashes_fetched, fragments_fetched, bad_hashes, bad_fragments,
    /// timeouts, blacklisted, epsilon. The last row is `summary` with
    /// totals and the mean epsilon.
    Simulate(SimulateArgs),
    /// Compression factor and the optimal k.
    ///
    /// CSV columns: k, r, S_B, S_H, c.
    Plan(PlanArgs),
    /// Time encode, hash and combine, or check the shape of a timing CSV.
    ///
    /// CSV columns: operation, k, d, block_size, trials, mean_s, min_s,
    /// max_s.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenParamsArgs {
    #[arg(long, default_value_t = 1024)]
    p_bits: u64,
    #[arg(long, default_value_t = 257)]
    q_bits: u64,
    #[arg(long)]
    k: u32,
    /// Maximum block size in bytes.
    #[arg(long = "sB")]
    s_b: u64,
    #[arg(long, default_value_t = 32)]
    element_size: u32,
    /// 32 bytes as 64 hex digits.
    #[arg(long, value_parser = parse_seed)]
    seed: Option<[u8; 32]>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    r: u32,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    node_id: u64,
    #[arg(long)]
    block_id: u64,
    #[arg(long = "in")]
    input: PathBuf,
    /// Store directory, created if absent.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long = "store", required = true)]
    stores: Vec<PathBuf>,
    #[arg(long)]
    block_id: u64,
    /// Trusted manifest. Without it the manifest is taken from a quorum of
    /// two stores.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Node id of the recovering node.
    #[arg(long, default_value_t = 0)]
    node_id: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `params_seed` from the config.
    #[arg(long, value_parser = parse_seed)]
    seed: Option<[u8; 32]>,
    /// Per-recovery CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    /// Sweep k over 4,32,64,128,256 and r over 1,5.
    #[arg(long, conflicts_with_all = ["k"])]
    table: bool,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long, default_value_t = 1)]
    r: u64,
    #[arg(long = "sB", default_value_t = planner::DEFAULT_S_B)]
    s_b: f64,
    #[arg(long = "sH", default_value_t = planner::DEFAULT_S_H)]
    s_h: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// encode, hash, combine or all.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Comma-separated k values.
    #[arg(long, value_delimiter = ',', default_values_t = [4u32, 32, 64, 128, 256])]
    k: Vec<u32>,
    /// Comma-separated degrees; `k` means d = k.
    #[arg(long, value_delimiter = ',', default_values = ["4", "k"])]
    d: Vec<String>,
    /// Comma-separated block sizes in bytes.
    #[arg(long = "sB", value_delimiter = ',', default_values_t = [32768u64, 1048576])]
    s_b: Vec<u64>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 2)]
    warmup: usize,
    /// Group parameters; production parameters are generated from --seed
    /// when absent.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, value_parser = parse_seed)]
    seed: Option<[u8; 32]>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Check the shapes of an existing CSV instead of measuring.
    #[arg(long)]
    check: Option<PathBuf>,
}

fn parse_seed(s: &str) -> std::result::Result<[u8; 32], String> {
    let bytes = hex::decode(s).map_err(|e| format!("seed: {e}"))?;
    bytes
        .try_into()
        .map_err(|b: Vec<u8>| format!("seed must be 32 bytes, got {}", b.len()))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read(path)?).map_err(|_| CliError::Verification(format!("{}: not UTF-8", path.display())))
}

fn write(path: &Path, data: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, data).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_params(path: &Path) -> Result<SystemParams> {
    let params = parse_params(&read(path)?)?;
    let report = validate_params(&params);
    if !report.is_ok() {
        return Err(CliError::Verification(report.messages().join("; ")));
    }
    Ok(params)
}

fn gen_params(a: GenParamsArgs) -> Result<()> {
    let params = generate_params(a.p_bits, a.q_bits, a.k, a.s_b, a.element_size, a.seed.unwrap_or_default())?;
    write(&a.out, serialize_params(&params))?;
    eprintln!(
        "p: {} bits, q: {} bits, k = {}, m = {}, element size {}",
        params.p().bits(),
        params.q().bits(),
        params.k(),
        params.m(),
        params.element_size()
    );
    Ok(())
}

struct StoreNode {
    node_id: u64,
    r: u32,
    d: usize,
}

impl StoreNode {
    fn to_text(&self) -> String {
        format!("node_id={}\nr={}\nd={}\n", self.node_id, self.r, self.d)
    }

    fn from_text(text: &str) -> Option<Self> {
        let mut fields = [None; 3];
        for line in text.lines() {
            let (key, value) = line.split_once('=')?;
            let slot = ["node_id", "r", "d"].iter().position(|k| *k == key)?;
            fields[slot] = Some(value.parse::<u64>().ok()?);
        }
        Some(Self {
            node_id: fields[0]?,
            r: fields[1]?.try_into().ok()?,
            d: fields[2]?.try_into().ok()?,
        })
    }
}

fn block_paths(store: &Path, block_id: u64) -> (PathBuf, PathBuf) {
    (
        store.join(format!("block-{block_id}.manifest")),
        store.join(format!("block-{block_id}.frags")),
    )
}

fn encode(a: EncodeArgs) -> Result<()> {
    let params = load_params(&a.params)?;
    let block = read(&a.input)?;
    let node_file = a.out.join("node.txt");
    let settings = StoreNode {
        node_id: a.node_id,
        r: a.r,
        d: a.d,
    };
    if node_file.exists() {
        let existing = StoreNode::from_text(&read_text(&node_file)?)
            .ok_or_else(|| CliError::Verification(format!("{}: malformed", node_file.display())))?;
        if existing.node_id != a.node_id {
            return Err(CliError::Usage(format!(
                "{} belongs to node {}, not {}",
                a.out.display(),
                existing.node_id,
                a.node_id
            )));
        }
    }
    let mut node = NodeState::new(a.node_id, a.r, a.d)?;
    node.ingest_block(&params, a.block_id, &block, None)?;
    let entry = node.stored(a.block_id).expect("just ingested");

    fs::create_dir_all(&a.out).map_err(|source| CliError::Io {
        path: a.out.clone(),
        source,
    })?;
    let (manifest_path, frags_path) = block_paths(&a.out, a.block_id);
    write(&node_file, settings.to_text())?;
    write(&manifest_path, entry.manifest.to_text(&params))?;
    write(&frags_path, entry.fragments_to_bytes(&params))?;
    eprintln!(
        "block {}: {} bytes -> {} coded fragments ({} bytes stored)",
        a.block_id,
        block.len(),
        entry.fragments.len(),
        node.stored_bytes(&params, a.block_id).unwrap_or(0)
    );
    Ok(())
}

fn load_store(params: &SystemParams, store: &Path, block_id: u64) -> Result<NodeState> {
    let node_file = store.join("node.txt");
    let settings = StoreNode::from_text(&read_text(&node_file)?)
        .ok_or_else(|| CliError::Verification(format!("{}: malformed", node_file.display())))?;
    let mut node = NodeState::new(settings.node_id, settings.r, settings.d)?;
    let (manifest_path, frags_path) = block_paths(store, block_id);
    if manifest_path.exists() {
        let manifest = BlockManifest::from_text(params, &read_text(&manifest_path)?)?;
        let entry = StoredBlock::from_parts(params, manifest, &read(&frags_path)?)?;
        node.import_block(params, entry)?;
    }
    Ok(node)
}

fn recover(a: RecoverArgs) -> Result<()> {
    let params = load_params(&a.params)?;
    let peers = a
        .stores
        .iter()
        .map(|s| load_store(&params, s, a.block_id))
        .collect::<Result<Vec<_>>>()?;
    let mut ids: Vec<u64> = peers.iter().map(|n| n.node_id()).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) || ids.contains(&a.node_id) {
        return Err(CliError::Usage("store node ids must be distinct from each other and from --node-id".into()));
    }
    let mut recoverer = NodeState::new(a.node_id, 1, params.k())?;
    if let Some(path) = &a.manifest {
        let manifest = BlockManifest::from_text(&params, &read_text(path)?)?;
        if manifest.block_id != a.block_id {
            return Err(CliError::Usage(format!(
                "manifest is for block {}, not {}",
                manifest.block_id, a.block_id
            )));
        }
        recoverer.pin_manifest(manifest);
    }
    let mut network = LocalNetwork::new(&peers);
    let directory = network.directory(a.block_id);
    let recovery = recoverer.recover_block(&params, a.block_id, &directory, &mut network)?;
    write(&a.out, &recovery.block)?;
    let t = &recovery.trace;
    eprintln!(
        "block {}: {} bytes recovered; {} hashes and {} fragments fetched, {} rejected",
        a.block_id,
        recovery.block.len(),
        t.hashes_fetched(),
        t.fragments_fetched(),
        t.bad_hashes() + t.bad_fragments()
    );
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut config = ScenarioConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        config.params_seed = seed;
    }
    let report = lsnode::run_scenario(&config)?;
    emit(a.out.as_deref(), &report.to_csv())?;
    let m = &report.metrics;
    eprintln!(
        "{}/{} recovered ({} bit-exact), epsilon {:.4}, {} blacklisted ({} honest), {} undetected",
        m.recoveries_succeeded,
        m.recoveries_attempted,
        m.recoveries_bit_exact,
        m.measured_epsilon,
        m.peers_blacklisted,
        m.honest_blacklisted,
        m.undetected_corruptions
    );
    if m.recoveries_succeeded < m.recoveries_attempted {
        return Err(CliError::Recovery(format!(
            "{} of {} recoveries failed",
            m.recoveries_attempted - m.recoveries_succeeded,
            m.recoveries_attempted
        )));
    }
    Ok(())
}

fn plan(a: PlanArgs) -> Result<()> {
    let plans = if a.table {
        planner::sweep_table(&TABLE_K, &TABLE_R, a.s_b, a.s_h)?
    } else if let Some(k) = a.k {
        vec![planner::StoragePlan::new(k, a.r, a.s_b, a.s_h)?]
    } else {
        let k = planner::optimal_k(a.r, a.s_b, a.s_h)?;
        eprintln!("optimal k for r = {}: {k}", a.r);
        vec![planner::StoragePlan::new(k, a.r, a.s_b, a.s_h)?]
    };
    emit(a.out.as_deref(), &planner::table_csv(&plans))
}

fn run_checks(records: &[bench::BenchRecord]) -> Result<()> {
    let checks = bench::check_shapes(records);
    if checks.is_empty() {
        return Err(CliError::Verification("no checkable series in the CSV".into()));
    }
    let mut failed = 0;
    for c in &checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(CliError::Verification(format!("{failed} of {} shape checks", checks.len())));
    }
    Ok(())
}

fn run_bench(a: BenchArgs) -> Result<()> {
    if let Some(path) = &a.check {
        return run_checks(&bench::parse_csv(&read_text(path)?)?);
    }
    let suites = if a.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![a.suite.parse::<Suite>()?]
    };
    let degrees = a
        .d
        .iter()
        .map(|d| match d.as_str() {
            "k" => Ok(Degree::Full),
            s => s
                .parse()
                .ok()
                .filter(|&d| d > 0)
                .map(Degree::Fixed)
                .ok_or_else(|| CliError::Usage(format!("bad degree {s:?}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let settings = BenchSettings {
        k_list: a.k,
        degrees,
        sizes: a.s_b,
        trials: a.trials,
        warmup: a.warmup,
        seed: 0,
    };
    if settings.trials < 10 {
        eprintln!("warning: fewer than 10 trials per point");
    }
    let base = match &a.params {
        Some(p) => load_params(p)?,
        None => {
            let largest = settings.sizes.iter().copied().max().unwrap_or(1 << 20);
            SystemParams::production(4, largest, a.seed.unwrap_or_default())?
        }
    };
    let mut records = Vec::new();
    for suite in suites {
        eprintln!("running {} suite", suite.name());
        records.extend(bench::run_suite(suite, &base, &settings)?);
    }
    emit(a.out.as_deref(), &bench::to_csv(&records))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenParams(a) => gen_params(a),
        Command::Encode(a) => encode(a),
        Command::Recover(a) => recover(a),
        Command::Simulate(a) => simulate(a),
        Command::Plan(a) => plan(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
