use std::fs;
use std::path::{Path, PathBuf};

use stochanneal::io::{
    brute_force_maxcut, load_instance, read_manifest, read_results, write_manifest, write_results, BestKnownRegistry,
    Manifest, Provenance,
};
use stochanneal::{DeviceParams, Error};

fn corpus(kind: &str) -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/rudy").join(kind);
    let mut files: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
}

#[test]
fn golden_corpus_parses() {
    let files = corpus("good");
    assert!(files.len() >= 4);
    for f in files {
        let inst = load_instance(&f).unwrap_or_else(|e| panic!("{}: {e}", f.display()));
        assert!(inst.edges.iter().all(|e| e.i < e.j && e.j < inst.n && e.w != 0));
    }
    let square = load_instance(corpus("good").iter().find(|p| p.ends_with("square.rudy")).unwrap()).unwrap();
    assert_eq!(square.name, "square");
    assert_eq!(brute_force_maxcut(&square).unwrap().0, 4);
}

#[test]
fn malformed_corpus_is_rejected_with_line_numbers() {
    let files = corpus("bad");
    assert!(files.len() >= 10);
    for f in files {
        let err = load_instance(&f).expect_err(&f.display().to_string());
        let line = match err {
            Error::Malformed { line, .. }
            | Error::DuplicateEdge { line, .. }
            | Error::SelfLoop { line, .. }
            | Error::NodeOutOfRange { line, .. } => line,
            other => panic!("{}: unexpected {other}", f.display()),
        };
        assert!(line >= 1, "{}", f.display());
        assert!(err_text(&f).contains(&format!("line {line}")), "{}", err_text(&f));
    }
}

fn err_text(p: &Path) -> String {
    load_instance(p).unwrap_err().to_string()
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(load_instance("/nonexistent/graph.rudy"), Err(Error::Io(_))));
}

#[test]
fn registry_and_results_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut reg = BestKnownRegistry::default();
    let k3 = load_instance(corpus("good").iter().find(|p| p.ends_with("k3.rudy")).unwrap()).unwrap();
    reg.insert_exact(&k3).unwrap();
    reg.insert("g_big", 1200, Provenance::Proxy);
    let path = dir.path().join("best_known.json");
    reg.save(&path).unwrap();
    assert_eq!(BestKnownRegistry::load(&path).unwrap(), reg);

    let results = dir.path().join("r.csv");
    write_results(fs::File::create(&results).unwrap(), &[]).unwrap();
    assert!(read_results(fs::File::open(&results).unwrap()).unwrap().is_empty());
}

#[test]
fn manifest_hash_tracks_parameter_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = DeviceParams::reference_json().as_bytes().to_vec();
    let mut params = DeviceParams::reference();
    let same = stochanneal::device::sha256_hex(&a);
    assert_eq!(
        same,
        stochanneal::device::sha256_hex(DeviceParams::reference_json().as_bytes())
    );
    params.drift.s_rw = 12.0;
    let b = params.to_json().unwrap();
    assert_ne!(same, stochanneal::device::sha256_hex(b.as_bytes()));

    let m = Manifest {
        tool: "stochanneal".into(),
        version: "0.1.0".into(),
        command: "solve".into(),
        argv: vec!["solve".into(), "--seed".into(), "3".into()],
        seed: 3,
        params_sha256: same,
        config: serde_json::json!({"runs": 4}),
        timestamp: 0,
    };
    let path = dir.path().join("m.json");
    write_manifest(&path, &m).unwrap();
    assert_eq!(read_manifest(&path).unwrap(), m);
}
