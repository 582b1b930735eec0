use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const NAIL: &str = env!("CARGO_BIN_EXE_nail");
const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures");

fn nail(dir: &Path, args: &[&str]) -> Output {
    Command::new(NAIL).args(args).current_dir(dir).output().unwrap()
}

fn fixture(name: &str) -> String {
    format!("{FIXTURES}/{name}")
}

fn instrument(dir: &Path) {
    let o = nail(
        dir,
        &[
            "instrument", "--design", &fixture("regfile.nir"), "--annotations", &fixture("regfile_annotations.json"),
            "--out", "rf_inst.nir", "--descriptor", "chain.json",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

fn pack(dir: &Path, out: &str) -> Output {
    nail(dir, &["pack", "--descriptor", "chain.json", "--set", "rf_wdata_cond.targetAddr=15", "--set", "rf_wdata_inj.mask=0xff", "--out", out])
}

#[test]
fn outputs_are_byte_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [a.path(), b.path()] {
        instrument(d);
        assert!(pack(d, "cfg.bin").status.success());
        assert!(nail(d, &["companion", "--descriptor", "chain.json", "--out", "c.h"]).status.success());
        let run = nail(
            d,
            &[
                "run", "--baseline", &fixture("regfile.nir"), "--design", "rf_inst.nir", "--config", "rocket=cfg.bin",
                "--stimulus", &fixture("regfile_stimulus.json"), "--enable-at", "140", "--mode", "broadside",
                "--log", "log.jsonl", "--report", "r.json",
            ],
        );
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    }
    for f in ["rf_inst.nir", "chain.json", "cfg.bin", "c.h", "log.jsonl", "r.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn exit_codes_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    instrument(d);

    // IO
    assert_eq!(nail(d, &["companion", "--descriptor", "missing.json", "--out", "c.h"]).status.code(), Some(2));
    // Parse
    fs::write(d.join("bad.nir"), "circuit t: module t: input a UInt<1>").unwrap();
    let o = nail(d, &["instrument", "--design", "bad.nir", "--annotations", &fixture("regfile_annotations.json"), "--out", "x", "--descriptor", "y"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1:"), "diagnostic should carry a position");
    // Validate
    fs::write(d.join("ann.json"), r#"{"chains":{"c":[{"target":"nope","injector":"stuckAt"}]}}"#).unwrap();
    let o = nail(d, &["instrument", "--design", &fixture("regfile.nir"), "--annotations", "ann.json", "--out", "x", "--descriptor", "y"]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    let o = nail(d, &["pack", "--descriptor", "chain.json", "--set", "rf_wdata_cond.targetAddr=32", "--out", "x"]);
    assert_eq!(o.status.code(), Some(4));
    // Checksum
    assert!(pack(d, "cfg.bin").status.success());
    let mut bytes = fs::read(d.join("cfg.bin")).unwrap();
    bytes[0] ^= 1;
    fs::write(d.join("cfg.bin"), bytes).unwrap();
    let o = nail(
        d,
        &["run", "--baseline", &fixture("regfile.nir"), "--design", "rf_inst.nir", "--config", "cfg.bin", "--stimulus", &fixture("regfile_stimulus.json"), "--enable-at", "1"],
    );
    assert_eq!(o.status.code(), Some(5));
    // Usage
    assert_eq!(nail(d, &["pack", "--bogus"]).status.code(), Some(1));
}

#[test]
fn help_lists_every_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = nail(dir.path(), &["run", "--help"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for flag in ["--baseline", "--design", "--config", "--stimulus", "--load-at", "--enable-at", "--disable-at", "--mode", "--chain", "--log", "--report"] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
}

#[test]
fn several_chains_need_a_placeholder() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("ann.json"),
        r#"{"chains":{"a":[{"target":"rf_wdata","injector":"stuckAt"}],"b":[{"target":"rf_waddr","injector":"cycleWindow"}]}}"#,
    )
    .unwrap();
    let args = |desc: &'static str| {
        ["instrument", "--design", &fixture("regfile.nir"), "--annotations", "ann.json", "--out", "i.nir", "--descriptor", desc]
            .map(String::from)
    };
    assert_eq!(Command::new(NAIL).args(args("chain.json")).current_dir(d).output().unwrap().status.code(), Some(1));
    assert!(Command::new(NAIL).args(args("chain_{chain}.json")).current_dir(d).output().unwrap().status.success());
    assert!(d.join("chain_a.json").exists() && d.join("chain_b.json").exists());
}
