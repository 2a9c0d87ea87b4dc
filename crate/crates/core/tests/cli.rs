use std::process::{Command, Output};

use compsim::cli::{EXIT_CONFIG, EXIT_OK};
use compsim::hamiltonian::load_hamiltonian;
use compsim::sequence::{sequence_unitary, GateSequence, SequenceKind};

fn compsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compsim"))
        .args(args)
        .output()
        .expect("spawn compsim")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn help_and_version_exit_cleanly() {
    assert_eq!(compsim(&["--help"]).status.code(), Some(EXIT_OK));
    assert_eq!(compsim(&["--version"]).status.code(), Some(EXIT_OK));
}

#[test]
fn configuration_errors_use_their_own_exit_code() {
    let cases: &[&[&str]] = &[
        &["--time", "1", "--eps", "0.01", "cost"],
        &[
            "--ham",
            "bundled:nope",
            "--time",
            "1",
            "--eps",
            "0.01",
            "cost",
        ],
        &[
            "--ham",
            "/does/not/exist.json",
            "--time",
            "1",
            "--eps",
            "0.01",
            "cost",
        ],
        &[
            "--ham",
            "bundled:xz",
            "--time",
            "-1",
            "--eps",
            "0.01",
            "cost",
        ],
        &[
            "--ham",
            "bundled:xz",
            "--time",
            "1",
            "--eps",
            "0.01",
            "--order",
            "3",
            "cost",
        ],
        &[
            "--ham",
            "bundled:xz",
            "--time",
            "1",
            "--eps",
            "0.01",
            "--nb",
            "2",
            "--c",
            "1",
            "cost",
        ],
        &[
            "--ham",
            "bundled:xz",
            "--time",
            "1",
            "--eps",
            "0.01",
            "--order",
            "2",
            "partition",
            "--scheme",
            "gradient",
        ],
        &["--bogus-flag"],
    ];
    for args in cases {
        let out = compsim(args);
        assert_eq!(
            out.status.code(),
            Some(EXIT_CONFIG),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(out.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn malformed_hamiltonian_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"dim": 2, "terms": [{"pauli_string": "X", "coeff": 1, "extra": 3}]}"#,
    )
    .unwrap();
    let out = compsim(&[
        "--ham",
        path.to_str().unwrap(),
        "--time",
        "1",
        "--eps",
        "0.01",
        "cost",
    ]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn cost_sweeps_every_partition() {
    let out = compsim(&[
        "--ham",
        "bundled:ising2",
        "--time",
        "1",
        "--eps",
        "0.01",
        "cost",
    ]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let text = stdout(&out);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    assert!(headers.iter().any(|h| h == "c_comp"));
    assert_eq!(rdr.records().count(), 16);
}

#[test]
fn out_flag_writes_the_same_bytes_as_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cost.json");
    let base = [
        "--ham",
        "bundled:heisenberg2",
        "--time",
        "1",
        "--eps",
        "0.01",
        "--format",
        "json",
    ];
    let printed = compsim(&[&base[..], &["cost"]].concat());
    let written = compsim(&[&base[..], &["--out", path.to_str().unwrap(), "cost"]].concat());
    assert_eq!(written.status.code(), Some(EXIT_OK));
    assert!(written.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), printed.stdout);
    let parsed: serde_json::Value = serde_json::from_slice(&printed.stdout).unwrap();
    assert!(parsed.is_array());
}

#[test]
fn simulate_rows_respect_bounds_and_write_a_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let seq_path = dir.path().join("seq.txt");
    let out = compsim(&[
        "--ham",
        "bundled:heisenberg2",
        "--time",
        "0.5",
        "--eps",
        "0.01",
        "--nb",
        "4",
        "simulate",
        "--sequence-out",
        seq_path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(EXIT_OK),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let within = rdr
        .headers()
        .unwrap()
        .iter()
        .position(|h| h == "within_bound")
        .unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| &r[within] == "true"));

    let seq = GateSequence::from_text(&std::fs::read_to_string(&seq_path).unwrap()).unwrap();
    assert!(matches!(seq.kind, SequenceKind::Composite(_)));
    assert_eq!(seq.total_time, 0.5);
    let h = load_hamiltonian(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/heisenberg2.json"
    ))
    .unwrap();
    let u = sequence_unitary(&seq, &h).unwrap();
    assert!(compsim::linalg::unitary_deviation(&u) < 1e-10);
}

#[test]
fn partition_schemes_emit_term_tables() {
    let prob = compsim(&[
        "--ham",
        "bundled:ising2",
        "--time",
        "1",
        "--eps",
        "0.01",
        "--c",
        "0.5",
        "partition",
    ]);
    assert_eq!(prob.status.code(), Some(EXIT_OK));
    let text = stdout(&prob);
    assert!(text.starts_with("term,h,p,"));
    assert_eq!(text.lines().count(), 5);

    let grad = compsim(&[
        "--ham",
        "bundled:commuting2",
        "--time",
        "1",
        "--eps",
        "0.01",
        "--order",
        "1",
        "partition",
        "--scheme",
        "gradient",
    ]);
    assert_eq!(grad.status.code(), Some(EXIT_OK));
    let text = stdout(&grad);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let in_a = rdr
        .headers()
        .unwrap()
        .iter()
        .position(|h| h == "in_a")
        .unwrap();
    assert!(rdr.records().all(|r| &r.unwrap()[in_a] == "true"));
}

#[test]
fn verify_passes_on_bundled_hamiltonians() {
    let out = compsim(&["--trials", "500", "verify"]);
    assert_eq!(
        out.status.code(),
        Some(EXIT_OK),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn seeds_change_sampled_output() {
    let run = |seed: &str| {
        stdout(&compsim(&[
            "--ham",
            "bundled:ising2",
            "--time",
            "1",
            "--eps",
            "0.01",
            "--trials",
            "500",
            "--seed",
            seed,
            "--format",
            "json",
            "partition",
        ]))
    };
    assert_eq!(run("5"), run("5"));
    assert_ne!(run("5"), run("6"));
}
