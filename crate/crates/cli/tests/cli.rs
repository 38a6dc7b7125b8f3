use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).display().to_string()
}

fn nz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nz")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn tmp(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("nz-cli-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d.join(name)
}

#[test]
fn fig8_volume() {
    let o = nz(&["volume", &fixture("fig8.tri")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("2.0298832128"));
    let o = nz(&["--prec", "15", "volume", &fixture("fig8.tri")]);
    assert!(stdout(&o).contains("2.0298832128"));
}

#[test]
fn malformed_input_exits_2() {
    let bad = tmp("bad.tri");
    std::fs::write(&bad, "not a triangulation\n").unwrap();
    assert_eq!(nz(&["volume", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(nz(&["volume", "/nonexistent/x.tri"]).status.code(), Some(2));
    assert_eq!(nz(&["--prec", "99", "volume", &fixture("fig8.tri")]).status.code(), Some(2));
    assert_eq!(nz(&["bloch", "move", &fixture("fig8.tri"), "--move", "twist"]).status.code(), Some(2));
    assert_eq!(nz(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn sweep_is_monotone() {
    let o = nz(&["--json", "fill", &fixture("fig8.tri"), "--sweep", "8..20"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let items = v["items"].as_array().unwrap();
    let vols: Vec<f64> = items
        .iter()
        .filter_map(|i| i["values"].as_array().unwrap().iter().find(|kv| kv[0] == "volume").map(|kv| kv[1].as_str().unwrap().parse().unwrap()))
        .collect();
    assert_eq!(vols.len(), 13);
    assert!(vols.windows(2).all(|w| w[0] < w[1]));
    assert!(vols.iter().all(|&x| x < 2.0298832129));
    assert!(items.iter().any(|i| i["name"] == "monotone increasing" && i["pass"] == true));
}

#[test]
fn report_round_trip() {
    let rep = tmp("cvol.json");
    let o = nz(&["--report", rep.to_str().unwrap(), "cvol", &fixture("sister.tri")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("23/6"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(v["provenance"][0], "fixture:sister");
    assert!(!v["command"].as_array().unwrap().iter().any(|a| a == "--report"));
    assert_eq!(nz(&["check", rep.to_str().unwrap()]).status.code(), Some(0));

    let tampered = std::fs::read_to_string(&rep).unwrap().replace("23/6", "11/3");
    std::fs::write(&rep, tampered).unwrap();
    let o = nz(&["check", rep.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("differ: Re/pi^2"));
}

#[test]
fn nahm_series() {
    let o = nz(&["nahm", "--A", "2", "--order", "12"]);
    assert_eq!(o.status.code(), Some(0));
    let coeffs: Vec<i64> = stdout(&o).lines().map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap()).collect();
    // partitions into parts ≡ ±1 mod 5
    assert_eq!(coeffs, [1, 1, 1, 1, 2, 2, 3, 3, 4, 5, 6, 7, 9]);
    let o = nz(&["nahm", "--A", "1", "--b", "1/2", "--order", "6"]);
    let coeffs: Vec<i64> = stdout(&o).lines().map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap()).collect();
    // (-q; q)_∞: partitions into distinct parts
    assert_eq!(coeffs, [1, 1, 1, 2, 2, 3, 4]);
}

#[test]
fn nahm_solution() {
    let o = nz(&["nahm-solve", "--A", "2,1;1,2"]);
    assert_eq!(o.status.code(), Some(0));
    // 1 - z = z^3
    assert!(stdout(&o).contains("0.6823278038"));
    assert!(stdout(&o).contains("vanishes"));
}

#[test]
fn zeta_value() {
    let o = nz(&["zeta", "--disc", "-3", "--terms", "100000"]);
    assert_eq!(o.status.code(), Some(0));
    // ζ(2)·L(2, χ₋₃)
    assert!(stdout(&o).contains("1.2851909556"));
    assert_eq!(nz(&["zeta", "--disc", "-12"]).status.code(), Some(2));
    assert_eq!(nz(&["dilog", "1,0"]).status.code(), Some(2));
}

#[test]
fn dilog_kummer() {
    let o = nz(&["dilog", "0.5,0.8660254037844386"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).matches("1.0149416064").count(), 3);
}

#[test]
fn bloch_export_reimports() {
    let pair = tmp("fig8.pair");
    let o = nz(&["bloch", "export", &fixture("fig8.tri")]);
    std::fs::write(&pair, &o.stdout).unwrap();
    let o = nz(&["bloch", "regulator", pair.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("2.0298832128"));
    let o = nz(&["bloch", "move", pair.to_str().unwrap(), "--move", "rotate:1,2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("pi^2"));
}

#[test]
fn structural_commands() {
    for f in ["fig8.tri", "sister.tri", "whitehead.tri"] {
        for cmd in ["validate", "complex", "solve", "cvol"] {
            assert_eq!(nz(&[cmd, &fixture(f)]).status.code(), Some(0), "{cmd} {f}");
        }
        assert!(stdout(&nz(&["matrices", &fixture(f)])).contains("completion"));
    }
    assert_eq!(nz(&["potential", &fixture("fig8.tri"), "--grid", "-0.05..0.05/3"]).status.code(), Some(0));
}
