use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vdsynth(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vdsynth")).args(args).current_dir(cwd).output().unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = vdsynth(args, cwd);
    assert!(out.status.success(), "{args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn generate_verify_and_measure() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let text = ok(&["generate", "--family", "multiplier", "--width", "2", "--out", "m2.net"], d);
    assert!(text.starts_with("multiplier2: 4 inputs, 4 outputs"), "{text}");

    let golden = fs::read_to_string(d.join("m2.net")).unwrap();
    fs::write(d.join("stuck.net"), stuck_lsb(&golden)).unwrap();

    let text = ok(&["errors", "--golden", "m2.net", "--candidate", "stuck.net", "--wcae", "0"], d);
    assert!(text.contains("wcae 1/15"), "{text}");
    assert!(text.contains("mae 1/60"), "{text}");
    assert!(text.contains("witness 0x5"), "{text}");
    assert!(text.contains("violations 4"), "{text}");

    let text = ok(&["verify", "--golden", "m2.net", "--candidate", "stuck.net", "--wcae", "0"], d);
    assert!(text.starts_with("VIOLATES witness=0x"), "{text}");
    let text = ok(&["verify", "--golden", "m2.net", "--candidate", "stuck.net", "--wcae", "1/15"], d);
    assert!(text.starts_with("WITHIN_BOUND"), "{text}");
    let text = ok(
        &[
            "verify",
            "--golden",
            "m2.net",
            "--candidate",
            "stuck.net",
            "--wcae",
            "0",
            "--miter",
            "carry-chain",
            "--dump-cnf",
            "miter.cnf",
        ],
        d,
    );
    assert!(text.starts_with("VIOLATES"), "{text}");
    assert!(fs::read_to_string(d.join("miter.cnf")).unwrap().starts_with("p cnf "));
}

/// Adds a constant-0 gate and drives output 0 with it.
fn stuck_lsb(netlist: &str) -> String {
    let gates = netlist.lines().filter(|l| l.starts_with('g')).count();
    let mut out = String::new();
    for line in netlist.lines() {
        if line.starts_with("out0 ") {
            out.push_str(&format!("g{gates} = CONST0\nout0 = g{gates}\n"));
        } else {
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

#[test]
fn approximate_writes_a_valid_circuit_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["generate", "--family", "multiplier", "--width", "3", "--out", "m3.net"], d);
    let args = [
        "approximate",
        "--golden",
        "m3.net",
        "--wcae",
        "10%",
        "--strategy",
        "ada4",
        "--generations",
        "500",
        "--seed",
        "4",
        "--out",
        "best.net",
        "--log",
        "log.csv",
        "--no-timing",
    ];
    let text = ok(&args, d);
    assert!(text.contains("500 generations"), "{text}");
    let log = fs::read(d.join("log.csv")).unwrap();
    assert!(log.starts_with(b"generation,elapsed_ms,candidate_size,decision,conflicts,limit,best_size,improvement\n"));

    let text = ok(&["errors", "--golden", "m3.net", "--candidate", "best.net"], d);
    let max_abs: u128 = text.lines().find_map(|l| l.strip_prefix("max_abs ")).unwrap().parse().unwrap();
    assert!(max_abs <= 6, "{text}"); // floor(0.1 * 63)

    ok(&args, d);
    assert_eq!(fs::read(d.join("log.csv")).unwrap(), log);
}

#[test]
fn campaign_run_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("c.toml"),
        "output_dir = \"res\"\n[[experiment]]\nfamily = \"adder\"\nwidth = 3\nwcae = \"10%\"\n\
         strategies = [\"lim100\", \"ada5\"]\ngenerations = 300\nreplications = 2\n",
    )
    .unwrap();
    let text = ok(&["campaign", "run", "c.toml", "--jobs", "1"], d);
    assert!(text.starts_with("4 runs executed, 0 already complete, 0 failed"), "{text}");
    let text = ok(&["campaign", "run", "c.toml"], d);
    assert!(text.starts_with("0 runs executed, 4 already complete"), "{text}");
    let text = ok(&["campaign", "report", "res"], d);
    for name in ["runs.csv", "relative_sizes.csv", "versatility.csv", "convergence.csv", "limits.csv"] {
        assert!(text.contains(name));
        assert!(d.join("res").join(name).exists());
    }
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["generate", "--family", "adder", "--width", "2", "--out", "a.net"], d);
    let bad: [&[&str]; 4] = [
        &["approximate", "--golden", "a.net", "--wcae", "1%", "--out", "x.net"],
        &["verify", "--golden", "a.net", "--candidate", "missing.net", "--wcae", "1%"],
        &["verify", "--golden", "a.net", "--candidate", "a.net", "--wcae", "2"],
        &["generate", "--family", "abacus", "--width", "2", "--out", "x.net"],
    ];
    for args in bad {
        let out = vdsynth(args, d);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty());
    }
}
