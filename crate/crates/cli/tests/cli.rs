use std::process::Command;

use bootperc::engine::ScheduleKind;
use bootperc::experiment::{parse_json, ConfigError, PMode, CSV_HEADER};
use bootperc_cli::{parse_config, parse_invocation, CliError, Invocation};

fn args(line: &str) -> Vec<String> {
    std::iter::once("bootperc".to_string())
        .chain(line.split_whitespace().map(String::from))
        .collect()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bootperc"))
}

#[test]
fn power_threshold_with_pc_search() {
    let c = parse_config(args(
        "--n 16 --k 1 --threshold power:0.8 --variant boot --pc --trials 20000 --seed 7",
    ))
    .unwrap();
    let r = c.resolve().unwrap();
    assert_eq!(r.r, 10);
    assert_eq!(c.p, PMode::AutoPc);
    assert_eq!((c.trials, c.seed), (20_000, 7));
}

#[test]
fn majority_with_formula_relaxation() {
    let c = parse_config(args(
        "--n 10 --k 2 --threshold majority --variant boot3 --t k_power:1 --p 0.45",
    ))
    .unwrap();
    let r = c.resolve().unwrap();
    assert_eq!(
        (r.degree, r.r, r.t, r.variant),
        (55, 28, 10, ScheduleKind::Boot3)
    );
    assert_eq!(c.p, PMode::Value(0.45));
    let inline = parse_config(args(
        "--n 10 --k 2 --threshold majority --variant boot3:k_power:1 --p 0.45",
    ))
    .unwrap();
    assert_eq!(inline, c);
}

#[test]
fn radius_above_dimension_is_rejected() {
    let err = parse_config(args("--n 4 --k 5 --threshold const:2 --p 0.5")).unwrap_err();
    assert!(
        matches!(err, CliError::Config(ConfigError::Cube(_))),
        "{err}"
    );
}

#[test]
fn configuration_errors() {
    let cases = [
        "--n 6 --threshold const:4 --variant boot2 --t 2 --p 0.5",
        "--n 6 --threshold const:0 --p 0.5",
        "--n 6 --threshold const:3 --variant boot1 --p 0.5",
        "--n 6 --threshold const:3 --variant boot1:1 --t 1 --p 0.5",
        "--n 6 --threshold const:3",
        "--n 6 --threshold power:0.8 --p 1.5",
        "--threshold const:3 --p 0.5",
    ];
    for case in cases {
        assert!(
            matches!(parse_config(args(case)), Err(CliError::Config(_))),
            "{case}"
        );
    }
    for case in [
        "--n 6 --threshold const:3 --p 0.5 --bogus 1",
        "--n 6 --threshold const:3 --p 0.5 --pc",
    ] {
        assert!(
            matches!(parse_config(args(case)), Err(CliError::Usage(_))),
            "{case}"
        );
    }
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(
        &path,
        r#"{"n": 12, "threshold": "power:0.8", "variant": "boot1", "t": "eps2_na:0.05", "p": "0.4", "trials": 50}"#,
    )
    .unwrap();
    let line = format!("--config {} --trials 80 --seed 5", path.display());
    let c = parse_config(args(&line)).unwrap();
    let r = c.resolve().unwrap();
    assert_eq!((r.r, r.t), (8, 1));
    assert_eq!((c.trials, c.seed, c.p), (80, 5, PMode::Value(0.4)));

    std::fs::write(
        &path,
        r#"{"n": 12, "threshold": "power:0.8", "p": "0.4", "colour": 1}"#,
    )
    .unwrap();
    let line = format!("--config {}", path.display());
    assert!(matches!(
        parse_config(args(&line)),
        Err(CliError::Config(ConfigError::File { .. }))
    ));
}

#[test]
fn preset_subcommand() {
    match parse_invocation(args("preset theorem3 --trials 2000 --seed 4 --format json")).unwrap() {
        Invocation::Preset { configs, .. } => {
            assert_eq!(configs.len(), 3);
            assert!(configs
                .iter()
                .all(|c| c.trials == 2000 && c.seed == 4 && c.k == 2));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(
        parse_invocation(args("preset theorem9")),
        Err(CliError::Usage(_))
    ));
}

#[test]
fn binary_writes_csv_and_uses_exit_codes() {
    let out = bin()
        .args(
            args("--n 6 --threshold const:2 --sweep 0.1:0.3:3 --trials 400 --seed 1")
                .iter()
                .skip(1),
        )
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER.join(","));
    assert_eq!(lines.len(), 4);

    let code = |line: &str, env: Option<(&str, &str)>| {
        let mut cmd = bin();
        cmd.args(args(line).iter().skip(1));
        if let Some((k, v)) = env {
            cmd.env(k, v);
        }
        cmd.output().unwrap().status.code()
    };
    assert_eq!(
        code("--n 4 --k 5 --threshold const:2 --p 0.5", None),
        Some(2)
    );
    assert_eq!(
        code("--n 4 --threshold const:2 --p 0.5 --frobnicate", None),
        Some(2)
    );
    assert_eq!(
        code(
            "--n 4 --threshold const:2 --p 0.5",
            Some(("BOOTPERC_THREADS", "zero"))
        ),
        Some(2)
    );
    assert_eq!(code("factorize --n 5 --k 2", None), Some(2));
    assert_eq!(
        code(
            "--n 4 --threshold const:2 --p 0.5 --trials 10 --output /nonexistent-dir/x.csv",
            None
        ),
        Some(3)
    );
    assert_eq!(code("--help", None), Some(0));
}

#[test]
fn binary_factorization_export() {
    let out = bin()
        .args(["factorize", "--n", "4", "--k", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "1,2|3,4\n1,3|2,4\n1,4|2,3\n"
    );
}

#[test]
fn binary_output_is_thread_count_independent() {
    let run = |threads: &str, format: &str| {
        let out = bin()
            .args([
                "--n",
                "9",
                "--threshold",
                "const:3",
                "--pc",
                "--trials",
                "1000",
                "--tolerance",
                "0.05",
            ])
            .args(["--seed", "21", "--format", format])
            .env("BOOTPERC_THREADS", threads)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    assert_eq!(run("1", "csv"), run("4", "csv"));
    let one = parse_json(std::str::from_utf8(&run("1", "json")).unwrap()).unwrap();
    let four = parse_json(std::str::from_utf8(&run("4", "json")).unwrap()).unwrap();
    assert_eq!(one[0].without_wall_time(), four[0].without_wall_time());
}
