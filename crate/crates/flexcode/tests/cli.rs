//! End-to-end exercises of the command layer and the shard format on disk.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

use flexcode::cli::{cmd_audit, cmd_decode, cmd_encode, cmd_repair};
use flexcode::shard::ShardHeader;

fn write_profile(dir: &std::path::Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

const MDS_PROFILE: &str = r#"
family = "mds"
n = 4
k = 2
ell = 3
tuples = [[3, 2], [2, 3]]
[field]
p = 2
degree = 8
"#;

const LRC_PROFILE: &str = r#"
family = "lrc"
n = 12
k = 4
ell = 3
tuples = [[6, 2], [4, 3]]
[field]
p = 2
degree = 8
[lrc]
locality = 2
"#;

const PMDS_PROFILE: &str = r#"
family = "pmds"
n = 5
k = 3
ell = 4
tuples = [[4, 3], [3, 4]]
[pmds]
symbol_failures = 2
"#;

const MSR_PROFILE: &str = r#"
family = "msr"
n = 4
k = 2
ell = 3
tuples = [[3, 2], [2, 3]]
"#;

#[test]
fn mds_six_symbol_input_makes_four_three_symbol_shards() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), "p.toml", MDS_PROFILE);
    let input = dir.path().join("in.bin");
    fs::write(&input, [10u8, 20, 30, 40, 50, 60]).unwrap();
    let summary = cmd_encode(&profile, &input, dir.path()).unwrap();
    assert_eq!(summary.shards.len(), 4);
    assert_eq!(summary.stripes, 1);
    for p in &summary.shards {
        let bytes = fs::read(p).unwrap();
        let (h, off) = ShardHeader::from_bytes(&bytes).unwrap();
        assert_eq!(bytes.len() - off, 3); // three one-byte symbols per node
        assert_eq!(h.input_len, 6);
    }
    // decode from every qualifying subset gives identical bytes
    let all: Vec<PathBuf> = summary.shards.clone();
    for skip in 0..4 {
        let subset: Vec<PathBuf> = all
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, p)| p.clone())
            .collect();
        let out = dir.path().join(format!("out{skip}.bin"));
        let s = cmd_decode(&subset, None, &out).unwrap();
        assert_eq!(s.layer, 0); // three shards decode at the top layer
        assert_eq!(fs::read(&out).unwrap(), [10, 20, 30, 40, 50, 60]);
    }
    for skip in [[0usize, 1], [1, 3], [2, 3]] {
        let subset: Vec<PathBuf> = all
            .iter()
            .enumerate()
            .filter(|(i, _)| !skip.contains(i))
            .map(|(_, p)| p.clone())
            .collect();
        let out = dir.path().join("out2.bin");
        let s = cmd_decode(&subset, None, &out).unwrap();
        assert_eq!(s.layer, 1);
        assert_eq!(s.threshold, 2);
        assert_eq!(fs::read(&out).unwrap(), [10, 20, 30, 40, 50, 60]);
    }
}

#[test]
fn empty_input_round_trips_with_recorded_length() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), "p.toml", MDS_PROFILE);
    let input = dir.path().join("empty.bin");
    fs::write(&input, []).unwrap();
    let summary = cmd_encode(&profile, &input, dir.path()).unwrap();
    assert_eq!(summary.stripes, 1); // one zero-padded stripe
    let out = dir.path().join("out.bin");
    cmd_decode(&summary.shards, None, &out).unwrap();
    assert_eq!(fs::read(&out).unwrap(), Vec::<u8>::new());
}

#[test]
fn multi_stripe_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), "p.toml", MDS_PROFILE);
    let input = dir.path().join("in.bin");
    let data: Vec<u8> = (0..1000u32).map(|i| (i * 7 + 3) as u8).collect();
    fs::write(&input, &data).unwrap();
    let summary = cmd_encode(&profile, &input, dir.path()).unwrap();
    assert_eq!(summary.stripes, 167); // ceil(1000 / 6)
    let out = dir.path().join("out.bin");
    cmd_decode(&summary.shards[..2], None, &out).unwrap();
    assert_eq!(fs::read(&out).unwrap(), data);
}

#[test]
fn explicit_layer_and_infeasible_errors() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), "p.toml", MDS_PROFILE);
    let input = dir.path().join("in.bin");
    fs::write(&input, b"hello world").unwrap();
    let summary = cmd_encode(&profile, &input, dir.path()).unwrap();
    let out = dir.path().join("out.bin");
    // explicit layer 2 from 2 shards
    let s = cmd_decode(&summary.shards[2..4], Some(2), &out).unwrap();
    assert_eq!(s.layer, 1);
    assert_eq!(fs::read(&out).unwrap(), b"hello world");
    // layer 1 needs 3 shards
    assert!(matches!(
        cmd_decode(&summary.shards[..2], Some(1), &out),
        Err(flexcode::Error::ColumnCount { have: 2, need: 3 })
    ));
    // one shard decodes nothing
    assert!(matches!(
        cmd_decode(&summary.shards[..1], None, &out),
        Err(flexcode::Error::NoFeasibleLayer(1))
    ));
}

#[test]
fn corrupt_shard_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), "p.toml", MDS_PROFILE);
    let input = dir.path().join("in.bin");
    fs::write(&input, b"abcdef").unwrap();
    let summary = cmd_encode(&profile, &input, dir.path()).unwrap();
    let mut bytes = fs::read(&summary.shards[0]).unwrap();
    bytes[9] ^= 1; // inside the header
    fs::write(&summary.shards[0], bytes).unwrap();
    let out = dir.path().join("out.bin");
    assert!(matches!(
        cmd_decode(&summary.shards[..3], None, &out),
        Err(flexcode::Error::Checksum)
    ));
}

#[test]
fn lrc_repair_reads_exactly_r_shards_and_restores_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), "p.toml", LRC_PROFILE);
    let input = dir.path().join("in.bin");
    let data: Vec<u8> = (0..60u8).collect();
    fs::write(&input, &data).unwrap();
    let summary = cmd_encode(&profile, &input, dir.path()).unwrap();
    // lose node 7; repair from the rest
    let survivors: Vec<PathBuf> = summary
        .shards
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != 7)
        .map(|(_, p)| p.clone())
        .collect();
    let rep = cmd_repair(&survivors, 7, dir.path()).unwrap();
    assert_eq!(rep.shards_read, 2); // locality r = 2
    let original = fs::read(&summary.shards[7]).unwrap();
    let rebuilt = fs::read(&rep.shard).unwrap();
    assert_eq!(original, rebuilt, "repaired shard must be bit-identical");
    // a missing group peer is an error
    let partial: Vec<PathBuf> = summary
        .shards
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != 7 && *i != 6)
        .map(|(_, p)| p.clone())
        .collect();
    assert!(matches!(
        cmd_repair(&partial, 7, dir.path()),
        Err(flexcode::Error::MissingHelper(6))
    ));
}

#[test]
fn lrc_decode_auto_selects_the_cheaper_bottom_layer() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), "p.toml", LRC_PROFILE);
    let input = dir.path().join("in.bin");
    let data: Vec<u8> = (100..160u8).collect();
    fs::write(&input, &data).unwrap();
    let summary = cmd_encode(&profile, &input, dir.path()).unwrap();
    let out = dir.path().join("out.bin");
    // with all 12 shards, 5 nodes * 3 rows = 15 symbols beats 8 * 2 = 16
    let s = cmd_decode(&summary.shards, None, &out).unwrap();
    assert_eq!(s.layer, 1);
    assert_eq!(s.symbols_read, 15 * summary.stripes as usize);
    assert_eq!(fs::read(&out).unwrap(), data);
    // force the top layer
    let s = cmd_decode(&summary.shards, Some(1), &out).unwrap();
    assert_eq!(s.layer, 0);
    assert_eq!(fs::read(&out).unwrap(), data);
}

#[test]
fn pmds_round_trip_under_node_loss() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), "p.toml", PMDS_PROFILE);
    let input = dir.path().join("in.bin");
    let data: Vec<u8> = (0..200u8).map(|i| i.wrapping_mul(31)).collect();
    fs::write(&input, &data).unwrap();
    let summary = cmd_encode(&profile, &input, dir.path()).unwrap();
    assert_eq!(summary.shards.len(), 5);
    let out = dir.path().join("out.bin");
    // lose two nodes, read all four rows (layer 2)
    let subset = vec![
        summary.shards[0].clone(),
        summary.shards[2].clone(),
        summary.shards[3].clone(),
    ];
    let s = cmd_decode(&subset, None, &out).unwrap();
    assert_eq!(s.layer, 1);
    assert_eq!(fs::read(&out).unwrap(), data);
    // lose one node: the top layer reads fewer rows
    let s = cmd_decode(&summary.shards[..4], None, &out).unwrap();
    assert_eq!(s.layer, 0);
    assert_eq!(fs::read(&out).unwrap(), data);
}

#[test]
fn msr_round_trip_and_repair_bandwidth() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), "p.toml", MSR_PROFILE);
    let input = dir.path().join("in.bin");
    let data: Vec<u8> = (0..96u8).collect(); // exactly one stripe: 6 blocks * 16
    fs::write(&input, &data).unwrap();
    let summary = cmd_encode(&profile, &input, dir.path()).unwrap();
    assert_eq!(summary.stripes, 1);
    let out = dir.path().join("out.bin");
    let s = cmd_decode(&summary.shards[..2], None, &out).unwrap();
    assert_eq!(s.layer, 1);
    assert_eq!(fs::read(&out).unwrap(), data);

    let survivors: Vec<PathBuf> = summary.shards[1..].to_vec();
    let rep = cmd_repair(&survivors, 0, dir.path()).unwrap();
    assert_eq!(rep.shards_read, 3);
    assert_eq!(rep.symbols_transferred, rep.bound.unwrap());
    assert_eq!(
        fs::read(&rep.shard).unwrap(),
        fs::read(&summary.shards[0]).unwrap()
    );
}

#[test]
fn audits_pass_for_profiles_and_report_fixture_defects() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [
        ("mds.toml", MDS_PROFILE),
        ("lrc.toml", LRC_PROFILE),
        ("pmds.toml", PMDS_PROFILE),
        ("msr.toml", MSR_PROFILE),
    ] {
        let p = write_profile(dir.path(), name, body);
        let outcome = cmd_audit(Some(&p), false).unwrap();
        assert!(outcome.pass(), "{name} audit failed: {:?}", outcome.lines);
    }
    // the hand-wired instance honestly reports its scaled-column defects
    let outcome = cmd_audit(None, true).unwrap();
    let map: std::collections::HashMap<_, _> = outcome.lines.iter().cloned().collect();
    assert!(map["base-column rank condition"]);
    assert!(map["flexible decode from any 2 nodes, 3 rows"]);
    assert!(map["repair rebuilds every node exactly"]);
    assert!(!outcome.pass());
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_flexcode");
    let dir = tempfile::tempdir().unwrap();
    // validation failure: bad profile
    let bad = write_profile(dir.path(), "bad.toml", "family = \"mds\"\n");
    let input = dir.path().join("in.bin");
    fs::write(&input, b"x").unwrap();
    let status = Command::new(bin)
        .args(["encode", "--profile"])
        .arg(&bad)
        .arg("--out-dir")
        .arg(dir.path())
        .arg(&input)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // io failure: missing input
    let good = write_profile(dir.path(), "good.toml", MDS_PROFILE);
    let status = Command::new(bin)
        .args(["encode", "--profile"])
        .arg(&good)
        .arg("--out-dir")
        .arg(dir.path())
        .arg(dir.path().join("nope.bin"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
    // decode-infeasible: one shard
    let summary = {
        let input = dir.path().join("in2.bin");
        fs::write(&input, b"abcdef").unwrap();
        cmd_encode(&good, &input, dir.path()).unwrap()
    };
    let status = Command::new(bin)
        .args(["decode", "--out"])
        .arg(dir.path().join("o.bin"))
        .arg(&summary.shards[0])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
    // success + sweep to stdout
    let output = Command::new(bin)
        .args([
            "latency", "sweep", "--steps", "3", "--t-trans-max", "0.1",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.starts_with("t_trans,e_fixed_1,e_fixed_2,e_flexible,savings_pct_vs_best_fixed"));
}
