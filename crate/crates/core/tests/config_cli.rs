//! Configuration parsing and the command-line interface: exit codes, the
//! output directory variable and the CSV schemas of every artifact.

use std::path::Path;
use std::process::{Command, Output};

use ebamr::config::parse_config;
use ebamr::validate::{self, preset};
use ebamr::Error;

const PRESETS: [&str; 12] = [
    validate::CHANNEL,
    validate::CHANNEL_MOL,
    validate::CHANNEL_FRD,
    validate::CHANNEL_NO_RERD,
    validate::FREE_STREAM,
    validate::SMALL_CELL,
    validate::SMALL_CELL_CF,
    validate::SOD[0],
    validate::SOD[1],
    validate::SOD[2],
    validate::CYLINDER,
    validate::CYLINDER_FULL,
];

fn ebamr(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ebamr"))
        .args(args)
        .env("EBAMR_OUT", out)
        .output()
        .expect("binary runs")
}

fn header(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().next().unwrap().to_string()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn presets_round_trip() {
    for text in PRESETS {
        let cfg = preset(text);
        let again = parse_config(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }
}

#[test]
fn bad_values_are_rejected_by_key() {
    let cases = [
        ("cfl = 0.4", "cfl = 1.5", "cfl"),
        ("t_end = 0.4", "t_end = -1.0", "t_end"),
        ("max_level = 1", "max_level = 2", "refinement.boxes"),
        (
            "problem = \"rotated_channel_shock\"",
            "problem = \"\"",
            "problem",
        ),
    ];
    for (from, to, key) in cases {
        let text = validate::CHANNEL.replace(from, to);
        match parse_config(&text) {
            Err(Error::Validation { key: k, .. }) => assert_eq!(k, key, "{to}"),
            other => panic!("{to}: {other:?}"),
        }
    }
}

#[test]
fn unknown_key_names_its_line() {
    let text = validate::CHANNEL.replace("[output]", "[output]\nplot_every = 3");
    let want = text.lines().position(|l| l.starts_with("plot_every")).unwrap() + 1;
    match parse_config(&text) {
        Err(Error::Parse { line, msg }) => {
            assert_eq!(line, want);
            assert!(msg.contains("plot_every"), "{msg}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.toml", &validate::CHANNEL.replace("0.4\nintegrator", "1.5\nintegrator"));
    let o = ebamr(&["run", &bad], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cfl"));
    let o = ebamr(&["run", "/nonexistent/config.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = validate::SMALL_CELL_CF.to_string() + "\n[sync]\nstabilize = false\n";
    let cfg = write_config(dir.path(), "cf.toml", &text);
    let o = ebamr(&["run", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("negative energy and pressure"));
}

#[test]
fn free_stream_run_writes_plotfiles() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fs.toml", validate::FREE_STREAM);
    let out = dir.path().join("out");
    let o = ebamr(&["run", &cfg], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(header(&out.join("plt_final_level0.csv")), "i,j,x,y,Λ,rho,u,v,p");
    assert_eq!(header(&out.join("plt_final_level1.csv")), "i,j,x,y,Λ,rho,u,v,p");
    let manifest: toml::Table =
        std::fs::read_to_string(out.join("plt_final_manifest.toml")).unwrap().parse().unwrap();
    assert_eq!(manifest["nlevels"].as_integer(), Some(2));
    assert_eq!(manifest["step"].as_integer(), Some(10));
    assert!(manifest["time"].as_float().unwrap() > 0.0);
    assert_eq!(manifest["levels"].as_array().unwrap().len(), 2);
}

#[test]
fn ledger_and_register_dump_columns() {
    let dir = tempfile::tempdir().unwrap();
    let text = validate::CHANNEL.replace("t_end = 0.4", "t_end = 0.4\nmax_steps = 2")
        + "register_dump = true\n";
    let cfg = write_config(dir.path(), "ch.toml", &text);
    let o = ebamr(&["run", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let h = header(&dir.path().join("ledger.csv"));
    assert!(
        h.starts_with("step,time,dt,mass,mom_x,mom_y,energy,d_mass,"),
        "{h}"
    );
    for col in ["bflux_mass", "cfflux_mass", "sync_mass", "defect_mass", "defect_energy"] {
        assert!(h.split(',').any(|c| c == col), "{col} missing");
    }
    let rows = std::fs::read_to_string(dir.path().join("ledger.csv")).unwrap();
    assert_eq!(rows.lines().count(), 3);
    assert_eq!(
        header(&dir.path().join("registers.csv")),
        "step,level,I,J,component,δR_coarse,δR_fine,δF,δ𝐑"
    );
}

#[test]
fn sod_profile_columns() {
    let dir = tempfile::tempdir().unwrap();
    let text = validate::SOD[0].replace("t_end = 0.1", "t_end = 0.02");
    assert_ne!(text, validate::SOD[0]);
    let cfg = write_config(dir.path(), "sod.toml", &text);
    let o = ebamr(&["run", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        header(&dir.path().join("profile.csv")),
        "s,rho,u,v,p,exact_rho,exact_u,exact_p"
    );
}

#[test]
fn geometry_dump_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sc.toml", validate::SMALL_CELL);
    let o = ebamr(&["geom-dump", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        header(&dir.path().join("geometry_level0.csv")),
        "i,j,Λ,ax_lo,ax_hi,ay_lo,ay_hi,Af,nfx,nfy,class"
    );
    let m = dir.path().join("merge_level0.csv");
    assert!(header(&m).starts_with("row,col,value"));
    // every column of the dump sums to one
    let mut sums = std::collections::HashMap::<usize, f64>::new();
    for line in std::fs::read_to_string(&m).unwrap().lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        *sums.entry(f[1].parse().unwrap()).or_default() += f[2].parse::<f64>().unwrap();
    }
    assert!(sums.values().all(|s| (s - 1.0).abs() <= 1e-14));
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = ebamr(&["validate", "--corrupt-a"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("FAIL"), "{table}");
}
