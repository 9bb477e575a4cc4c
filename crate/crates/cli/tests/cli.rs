use std::path::Path;
use std::process::{Command, Output};

fn lsnode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsnode"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_params(dir: &Path, k: u32) -> std::path::PathBuf {
    let out = dir.join("params.bin");
    let o = lsnode(&[
        "gen-params", "--p-bits", "256", "--q-bits", "97", "--k", &k.to_string(), "--sB", "4000",
        "--element-size", "8", "--out", p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

fn encode(params: &Path, input: &Path, store: &Path, node: u64, r: u32, d: u32) -> Output {
    lsnode(&[
        "encode", "--params", p(params), "--r", &r.to_string(), "--d", &d.to_string(), "--node-id",
        &node.to_string(), "--block-id", "7", "--in", p(input), "--out", p(store),
    ])
}

#[test]
fn plan_table_csv() {
    let o = lsnode(&["plan", "--table", "--sB", "1048576", "--sH", "134"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "k,r,S_B,S_H,c");
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[1], "4,1,1048576,134,0.250639");
    assert_eq!(rows[6], "64,5,1048576,134,0.0869427");
}

#[test]
fn plan_optimal_k() {
    let o = lsnode(&["plan", "--r", "1"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("optimal k for r = 1: 88"));
    assert!(String::from_utf8(o.stdout).unwrap().contains("\n88,1,"));
    assert_eq!(lsnode(&["plan", "--k", "0"]).status.code(), Some(2));
}

#[test]
fn missing_config() {
    let o = lsnode(&["simulate", "--config", "missing.cfg"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("config not found"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(lsnode(&["encode"]).status.code(), Some(2));
    assert_eq!(lsnode(&["bench", "--suite", "fft", "--check", "x.csv"]).status.code(), Some(5));
    assert_eq!(lsnode(&["gen-params", "--k", "1", "--sB", "9", "--seed", "abcd", "--out", "x"]).status.code(), Some(2));
}

#[test]
fn gen_params_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = small_params(dir.path(), 4);
    let first = std::fs::read(&a).unwrap();
    let b = small_params(dir.path(), 4);
    assert_eq!(first, std::fs::read(b).unwrap());
}

#[test]
fn encode_then_recover_loopback() {
    let dir = tempfile::tempdir().unwrap();
    let params = small_params(dir.path(), 4);
    let input = dir.path().join("block.bin");
    let data: Vec<u8> = (0..3000u32).map(|i| (i * 7 + i / 13) as u8).collect();
    std::fs::write(&input, &data).unwrap();
    let store = dir.path().join("store");
    let o = encode(&params, &input, &store, 1, 6, 4);
    assert!(o.status.success(), "{}", stderr(&o));

    let out = dir.path().join("recovered.bin");
    let manifest = store.join("block-7.manifest");
    let o = lsnode(&[
        "recover", "--params", p(&params), "--store", p(&store), "--block-id", "7", "--manifest", p(&manifest),
        "--out", p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(&out).unwrap(), data);

    // the store contents are a function of the inputs alone
    let frags = std::fs::read(store.join("block-7.frags")).unwrap();
    assert!(encode(&params, &input, &store, 1, 6, 4).status.success());
    assert_eq!(std::fs::read(store.join("block-7.frags")).unwrap(), frags);
}

#[test]
fn recover_from_two_stores_without_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let params = small_params(dir.path(), 4);
    let input = dir.path().join("block.bin");
    std::fs::write(&input, b"a short block that still spans several fragments").unwrap();
    let s1 = dir.path().join("s1");
    let s2 = dir.path().join("s2");
    assert!(encode(&params, &input, &s1, 1, 3, 4).status.success());
    assert!(encode(&params, &input, &s2, 2, 3, 4).status.success());
    let out = dir.path().join("out.bin");
    let o = lsnode(&[
        "recover", "--params", p(&params), "--store", p(&s1), "--store", p(&s2), "--block-id", "7", "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&input).unwrap());

    // one store cannot form a manifest quorum
    let o = lsnode(&["recover", "--params", p(&params), "--store", p(&s1), "--block-id", "7", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn tampered_store_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let params = small_params(dir.path(), 4);
    let input = dir.path().join("block.bin");
    std::fs::write(&input, vec![9u8; 500]).unwrap();
    let store = dir.path().join("store");
    assert!(encode(&params, &input, &store, 1, 6, 4).status.success());
    let frags = store.join("block-7.frags");
    let mut bytes = std::fs::read(&frags).unwrap();
    let at = bytes.len() / 3;
    bytes[at] ^= 1;
    std::fs::write(&frags, bytes).unwrap();
    let o = lsnode(&[
        "recover", "--params", p(&params), "--store", p(&store), "--block-id", "7", "--manifest",
        p(&store.join("block-7.manifest")), "--out", p(&dir.path().join("out")),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("net.cfg");
    std::fs::write(
        &cfg,
        "# small honest network\nn_nodes = 6\nk = 4\nr = 2\nd = k\nblock_count = 3\nblock_size = 300\n\
         p_bits = 256\nq_bits = 97\nelement_size = 8\n",
    )
    .unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = lsnode(&["simulate", "--config", p(&cfg), "--out", p(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read_to_string(out).unwrap()
    };
    let csv = run("a.csv");
    assert!(csv.starts_with("block_id,recoverer,block_len,succeeded,bit_exact,"));
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().last().unwrap().starts_with("summary,,,3,3,"));
    assert_eq!(csv, run("b.csv"));
}

#[test]
fn bench_check_flags_bad_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.csv");
    let header = "operation,k,d,block_size,trials,mean_s,min_s,max_s\n";
    std::fs::write(
        &good,
        format!("{header}hash,4,0,1048576,10,0.4,0.4,0.4\nhash,32,0,1048576,10,0.05,0.05,0.05\nhash,256,0,1048576,10,0.00625,0.00625,0.00625\n"),
    )
    .unwrap();
    assert!(lsnode(&["bench", "--check", p(&good)]).status.success());
    let bad = dir.path().join("bad.csv");
    std::fs::write(
        &bad,
        format!("{header}hash,4,0,1048576,10,0.4,0.4,0.4\nhash,32,0,1048576,10,0.5,0.5,0.5\n"),
    )
    .unwrap();
    assert_eq!(lsnode(&["bench", "--check", p(&bad)]).status.code(), Some(3));
}

#[test]
fn bench_runs_small_suite() {
    let dir = tempfile::tempdir().unwrap();
    let params = small_params(dir.path(), 4);
    let out = dir.path().join("b.csv");
    let o = lsnode(&[
        "bench", "--params", p(&params), "--suite", "combine", "--k", "4,8", "--trials", "2", "--warmup", "0",
        "--out", p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.contains("\ncombine,8,8,0,2,"));
}
