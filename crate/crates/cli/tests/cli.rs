use std::path::Path;
use std::process::{Command, Output};

fn natgrad_lens(args: &[&str], cwd: &Path, out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_natgrad-lens"));
    cmd.args(args).current_dir(cwd).env_remove(natgrad_lens_cli::OUT_ENV);
    if let Some(dir) = out_env {
        cmd.env(natgrad_lens_cli::OUT_ENV, dir);
    }
    cmd.output().unwrap()
}

#[test]
fn output_directory_precedence() {
    let root = tempfile::tempdir().unwrap();
    let (flag, file, env) = (
        root.path().join("flag"),
        root.path().join("file"),
        root.path().join("env"),
    );
    let config = root.path().join("run.conf");
    std::fs::write(&config, format!("out = {}\nsteps = 5\nm = 2\n", file.display())).unwrap();
    let args = ["effectiveness", "--input"];

    let losses = root.path().join("losses.txt");
    std::fs::write(&losses, "3\n2\n2.5\n1\n").unwrap();
    let base: Vec<&str> = args.iter().copied().chain([losses.to_str().unwrap()]).collect();

    let with_flag: Vec<&str> = base.iter().copied().chain(["--out", flag.to_str().unwrap()]).collect();
    assert!(natgrad_lens(&with_flag, root.path(), Some(&env)).status.success());
    assert!(flag.join("effectiveness.csv").exists());

    assert!(natgrad_lens(&base, root.path(), Some(&env)).status.success());
    assert!(env.join("effectiveness.csv").exists());

    assert!(natgrad_lens(&base, root.path(), None).status.success());
    assert!(root.path().join("effectiveness.csv").exists());

    let fa = ["fa", "--config", config.to_str().unwrap()];
    let run = natgrad_lens(&fa, root.path(), Some(&env));
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(file.join("trace.csv").exists());
    assert!(!env.join("trace.csv").exists());
}

#[test]
fn bad_invocations_fail_with_a_message() {
    let root = tempfile::tempdir().unwrap();
    let bad_config = root.path().join("bad.conf");
    std::fs::write(&bad_config, "no_such_key = 1\n").unwrap();
    let cases: [&[&str]; 5] = [
        &["lti", "--gamma", "2"],
        &["effectiveness"],
        &["analyze", "--input", "missing.csv"],
        &["lti", "--config", bad_config.to_str().unwrap()],
        &["lti", "--a", "1 0; 0 1"],
    ];
    for args in cases {
        let run = natgrad_lens(args, root.path(), None);
        assert!(!run.status.success(), "{args:?} succeeded");
        assert!(String::from_utf8_lossy(&run.stderr).contains("error"), "{args:?}");
    }
}

#[test]
fn degenerate_pairs_do_not_fail_analyze() {
    let root = tempfile::tempdir().unwrap();
    let input = root.path().join("pairs.csv");
    std::fs::write(&input, "dim,g_0,g_1,y_0,y_1\n2,1,0,0.5,0.5\n2,1,0,0,1\n2,0,0,1,1\n").unwrap();
    let run = natgrad_lens(
        &["analyze", "--input", input.to_str().unwrap(), "--out", "."],
        root.path(),
        None,
    );
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(root.path().join("spectra.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains("degenerate")).count(), 2);
}
