//! End-to-end tests against the built binary: exit codes, report shapes,
//! configuration precedence, and byte-level determinism of CSV output.

use std::process::{Command, Output};

const ENV_KEYS: [&str; 6] = [
    "ABELIA_SIEVE_LIMIT",
    "ABELIA_CLASSGROUP_DISC_BOUND",
    "ABELIA_CACHE_PATH",
    "ABELIA_EPS_DELTA",
    "ABELIA_OUTPUT_FORMAT",
    "ABELIA_PARALLELISM",
];

fn run_with(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_abelia"));
    for key in ENV_KEYS {
        cmd.env_remove(key);
    }
    for (key, value) in envs {
        cmd.env(key, value);
    }
    cmd.args(args).output().expect("binary spawns")
}

fn run(args: &[&str]) -> Output {
    run_with(args, &[])
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("regular exit")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf8 stdout")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("utf8 stderr")
}

#[test]
fn no_arguments_is_a_usage_error() {
    let out = run(&[]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("Usage"));
}

#[test]
fn bounds_delta_reports_the_rank3_saving() {
    let out = run(&["bounds", "delta", "--ell", "3", "--p", "2", "--r", "3"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("\"delta\": \"1/468\""));
    assert!(text.contains("\"source\": \"even-rank3\""));
    assert!(text.contains("\"alternative\": \"1/3\""));
    assert!(text.contains("\"grh_delta\": \"1/42\""));
}

#[test]
fn bounds_delta_rejects_bad_parameters() {
    let out = run(&["bounds", "delta", "--ell", "1", "--p", "2", "--r", "3"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("\"error\":\"usage\""));

    let out = run(&["bounds", "delta", "--ell", "3", "--p", "4", "--r", "3"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn bounds_table_emits_the_exact_csv_row() {
    let out = run(&["bounds", "table", "--ell-max", "7", "--p-list", "2", "--out", "csv"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "ell,ell_reduced,p,r,eta0,delta,delta_value,grh_delta,r0,source,rank2_delta,\
         rank3_exceeds_rank2"
    );
    assert!(text
        .lines()
        .any(|l| l == "3,3,2,3,6,1/468,0.00213675213675,1/42,7,even-rank3,1/588,true"));
}

#[test]
fn bounds_crossover_ranks() {
    let out = run(&["bounds", "crossover", "--ell", "3", "--p", "2"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("\"r0\": 7"));

    let out = run(&["bounds", "crossover", "--ell", "2", "--p", "3"]);
    assert!(stdout(&out).contains("\"r0\": 4"));

    let out = run(&["bounds", "crossover", "--ell", "3", "--p", "2", "--alternative"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("\"r0\": 3"));
    assert!(text.contains("below the formula's domain"));
}

#[test]
fn torsion_field_total_three() {
    let out = run(&["torsion", "field", "--discs", "-23,5", "--ell", "3"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("\"total\": \"3\""));
    assert!(text.contains("\"delta_ref\": \"1/588\""));
    assert!(text.contains("\"disc_l\": \"13225\""));
}

#[test]
fn torsion_scan_csv_is_byte_identical() {
    let args = ["torsion", "scan", "--cond-max", "60", "--rank", "2", "--ell", "3", "--out", "csv"];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
    let text = stdout(&first);
    assert_eq!(
        text.lines().next().unwrap(),
        "disc_L,subfield_discs,subfield_torsions,total,exponent,half_minus_delta"
    );
    assert!(text.lines().any(|l| l.starts_with("225,-3 5 -15,")));
    assert!(stderr(&first).contains("finite-height report only"));
}

#[test]
fn corrupted_cache_is_a_resource_error() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("cache.jsonl");
    std::fs::write(&path, "not json\n").expect("writable");
    let cache = path.to_str().expect("utf8 path");

    let out = run(&["classgroup", "--disc", "-23", "--cache", cache]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("\"error\":\"resource\""));

    let out = run(&["selftest", "--sieve-limit", "1000", "--cache", cache]);
    assert_eq!(code(&out), 3);
}

#[test]
fn cache_persists_between_invocations() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("cache.jsonl");
    let cache = path.to_str().expect("utf8 path");

    let first = run(&["classgroup", "--disc", "-23", "--cache", cache]);
    assert_eq!(code(&first), 0);
    let stored = std::fs::read_to_string(&path).expect("cache written");
    assert!(stored.contains("\"D\":-23"));

    let second = run(&["classgroup", "--disc", "-23", "--cache", cache]);
    assert_eq!(code(&second), 0);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn selftest_reduced_scale_passes() {
    let out = run(&["selftest", "--sieve-limit", "2000", "--disc-bound", "2000"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("closed-form savings"));
    assert!(text.contains("all suites passed"));
}

#[test]
fn config_env_flag_precedence() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("abelia.conf");
    std::fs::write(&path, "# raise epsilon\neps_delta=1/2\n").expect("writable");
    let conf = path.to_str().expect("utf8 path");
    let base = ["bounds", "delta", "--ell", "3", "--p", "2", "--r", "3"];

    let mut with_file = base.to_vec();
    with_file.extend(["--config", conf]);
    assert!(stdout(&run(&with_file)).contains("\"delta\": \"1/1800\""));

    let env_wins = run_with(&with_file, &[("ABELIA_EPS_DELTA", "0")]);
    assert!(stdout(&env_wins).contains("\"delta\": \"1/468\""));

    let mut with_flag = with_file.clone();
    with_flag.extend(["--eps-delta", "1/2"]);
    let flag_wins = run_with(&with_flag, &[("ABELIA_EPS_DELTA", "0")]);
    assert!(stdout(&flag_wins).contains("\"delta\": \"1/1800\""));
}

#[test]
fn env_selects_the_output_format() {
    let base = ["bounds", "delta", "--ell", "3", "--p", "2", "--r", "3"];
    let csv = run_with(&base, &[("ABELIA_OUTPUT_FORMAT", "csv")]);
    assert!(stdout(&csv).starts_with("ell,ell_reduced,"));

    let mut json_flag = base.to_vec();
    json_flag.extend(["--out", "json"]);
    let json = run_with(&json_flag, &[("ABELIA_OUTPUT_FORMAT", "csv")]);
    assert!(stdout(&json).starts_with("{"));
}

#[test]
fn rejected_configuration_values() {
    let out = run(&["primes", "pi", "--x", "5", "--sieve-limit", "10"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("sieve_limit must be at least 1000"));

    let out = run(&["classgroup", "--disc", "-23", "--disc-bound", "10"]);
    assert_eq!(code(&out), 1);

    let out = run_with(
        &["bounds", "delta", "--ell", "3", "--p", "2", "--r", "3"],
        &[("ABELIA_EPS_DELTA", "nonsense")],
    );
    assert_eq!(code(&out), 1);
}

#[test]
fn sieve_cap_yields_a_resource_exit() {
    let out = run(&["primes", "pi", "--x", "5000", "--sieve-limit", "1000"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("\"error\":\"resource\""));
}

#[test]
fn primes_pi_counts() {
    let out = run(&["primes", "pi", "--x", "100", "--sieve-limit", "1000"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("\"count\": 25"));

    let out =
        run(&["primes", "pi", "--x", "100", "--q", "4", "--a", "1", "--sieve-limit", "1000"]);
    assert!(stdout(&out).contains("\"count\": 11"));

    let out =
        run(&["primes", "pi", "--x", "100", "--q", "4", "--a", "2", "--sieve-limit", "1000"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn bt_check_small_grid_is_clean() {
    let out = run(&["primes", "bt-check", "--grid", "12", "--sieve-limit", "2000"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("\"violations\": []"));
}

#[test]
fn pigeonhole_and_goodbad_reports() {
    let record = "f=15;H=4;p=2;r=2";
    let out =
        run(&["primes", "pigeonhole", "--ext", record, "--x", "2000", "--sieve-limit", "2000"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("\"violations\": 0"));

    let out = run(&[
        "primes",
        "goodbad",
        "--ext",
        record,
        "--theta",
        "0.5",
        "--sieve-limit",
        "2000",
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("\"verdict\": \"Bad\""));
}

#[test]
fn classgroup_range_csv_is_exact() {
    let out = run(&["classgroup", "--range", "-50", "-3", "--ell", "3", "--out", "csv"]);
    assert_eq!(code(&out), 0);
    let expected = "\
disc,narrow,invariant_factors,order,ell,torsion
-47,false,5,5,3,1
-43,false,,1,3,1
-40,false,2,2,3,1
-39,false,4,4,3,1
-35,false,2,2,3,1
-31,false,3,3,3,3
-24,false,2,2,3,1
-23,false,3,3,3,3
-20,false,2,2,3,1
-19,false,,1,3,1
-15,false,2,2,3,1
-11,false,,1,3,1
-8,false,,1,3,1
-7,false,,1,3,1
-4,false,,1,3,1
-3,false,,1,3,1
";
    assert_eq!(stdout(&out), expected);
}

#[test]
fn classgroup_needs_exactly_one_selector() {
    let out = run(&["classgroup"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("exactly one of --disc and --range"));

    let out = run(&["classgroup", "--disc", "-23", "--range", "-50", "-3"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn field_subfield_table() {
    let out = run(&["field", "--discs", "-3,5", "--out", "csv"]);
    assert_eq!(code(&out), 0);
    let expected = "\
degree,conductor,disc,subgroup_generators
2,3,3,1
2,5,5,4
2,15,15,2
";
    assert_eq!(stdout(&out), expected);
    assert!(stderr(&out).contains("conductor 15"));

    let out = run(&["field", "--ext", "f=15;H=4;p=2;r=2", "--dim", "2"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("\"discriminant\": \"225\""));

    let out = run(&["field", "--discs", "-3,5", "--dim", "3"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn algebra_verify_exhaustive_run() {
    let out = run(&["algebra", "verify", "--ell", "3", "--p", "2", "--r", "2", "--max-dim", "2"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("\"failures\": []"));
    assert!(text.contains("\"mode\": \"exhaustive\""));

    let out = run(&["algebra", "verify", "--ell", "3", "--p", "3", "--r", "2"]);
    assert_eq!(code(&out), 1);
}
