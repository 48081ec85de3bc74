use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wavesplit::harness::{run_experiment, write_csv, write_rows, ExperimentConfig, ExperimentKind};
use wavesplit::Error;

#[derive(Parser, Debug)]
#[command(name = "wavesplit", version, about = "Domain-splitting wave solver experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment named in the config file.
    Run(Common),
    /// Errors against the exact solution and distances to Crank-Nicolson.
    Convergence(Common),
    /// Largest stable step of the splitting scheme for each overlap.
    CflScan(Common),
    /// Decay of interface data into the subdomain interior.
    Decay(Common),
    /// Distance to Crank-Nicolson for several subdomain grids.
    Topology(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML experiment description.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV (overrides `output.path`; default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for subdomain solves (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Seed of the perturbed 1D mesh.
    #[arg(long)]
    seed: Option<u64>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidInput(_) => 2,
        _ => 3,
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<(), Error> {
    let (kind, common) = match cli.command {
        Command::Run(c) => (None, c),
        Command::Convergence(c) => (Some(ExperimentKind::Convergence), c),
        Command::CflScan(c) => (Some(ExperimentKind::CflScan), c),
        Command::Decay(c) => (Some(ExperimentKind::Decay), c),
        Command::Topology(c) => (Some(ExperimentKind::Topology), c),
    };
    let mut cfg = ExperimentConfig::from_file(&common.config)?;
    if let Some(k) = kind {
        cfg.experiment.kind = k;
    }
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    if let Some(s) = common.seed {
        cfg.mesh.seed = s;
    }
    if let Some(o) = common.out {
        cfg.output.path = Some(o);
    }
    cfg.validate()?;
    let rows = run_experiment(&cfg)?;
    match &cfg.output.path {
        Some(p) => write_csv(&rows, p)?,
        None => write_rows(&rows, stdout)?,
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the exit code.
fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // --help and --version also arrive here
            return if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                2
            } else {
                let _ = write!(stdout, "{}", e.render());
                0
            };
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "wavesplit: {e}");
            exit_code(&e)
        }
    }
}

fn main() -> ExitCode {
    let code = run(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    ExitCode::from(code)
}

#[cfg(test)]
mod tests {
    use std::path::Path;

    use wavesplit::harness::{read_csv, CSV_HEADER};

    use super::*;

    fn call(args: &[&str], extra: &[&Path]) -> (u8, String) {
        let mut all: Vec<OsString> = std::iter::once("wavesplit")
            .chain(args.iter().copied())
            .map(OsString::from)
            .collect();
        all.extend(extra.iter().map(|p| p.as_os_str().to_owned()));
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(all, &mut out, &mut err);
        if code != 0 {
            assert!(!err.is_empty());
        }
        (code, String::from_utf8(out).unwrap())
    }

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    const SMALL_CONVERGENCE: &str = r#"
[experiment]
id = "small"
kind = "convergence"

[problem]
id = "1d"
final_time = 0.5

[mesh]
cells = 60

[time]
schemes = ["CN", "LF", "DS"]
taus = [0.05, 0.01]

[splitting]
ells = [4]
"#;

    #[test]
    fn convergence_writes_csv() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write(dir.path(), "c.toml", SMALL_CONVERGENCE);
        let out = dir.path().join("rows.csv");
        let (code, _) = call(&["run", "--out", out.to_str().unwrap(), "--config"], &[&cfg]);
        assert_eq!(code, 0);
        let rows = read_csv(&out).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.experiment == "small"));
        let lf_big = rows.iter().find(|r| r.scheme == "LF" && r.tau > 0.04).unwrap();
        assert!(!lf_big.stable);
        assert_eq!(lf_big.err_exact, Some(f64::INFINITY));
        for r in rows.iter().filter(|r| r.scheme == "CN") {
            assert!(r.stable && r.err_exact.unwrap() > 0.0);
            assert_eq!(r.err_vs_cn, Some(0.0));
        }
    }

    #[test]
    fn stdout_matches_file_output_across_thread_counts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write(dir.path(), "c.toml", SMALL_CONVERGENCE);
        let out = dir.path().join("rows.csv");
        let (a, text) = call(&["convergence", "--threads", "2", "--config"], &[&cfg]);
        assert_eq!(a, 0);
        let (b, _) = call(
            &[
                "convergence",
                "--threads",
                "1",
                "--out",
                out.to_str().unwrap(),
                "--config",
            ],
            &[&cfg],
        );
        assert_eq!(b, 0);
        assert!(text.starts_with(&CSV_HEADER.join(",")));
        assert_eq!(text, std::fs::read_to_string(&out).unwrap());
    }

    #[test]
    fn subcommand_overrides_kind_and_seed_changes_mesh() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write(
            dir.path(),
            "d.toml",
            "[problem]\nid = \"1d\"\n[mesh]\ncells = 200\n[splitting]\nells = [2, 4]\n[decay]\nlambda_factors = [2.0]\n",
        );
        let (code, a) = call(&["decay", "--seed", "1", "--config"], &[&cfg]);
        assert_eq!(code, 0);
        assert_eq!(a.lines().count(), 3);
        assert!(a.lines().skip(1).all(|l| l.contains(",decay,")));
        let (_, b) = call(&["decay", "--seed", "2", "--config"], &[&cfg]);
        assert_ne!(a, b);
    }

    #[test]
    fn config_errors_give_2() {
        let dir = tempfile::tempdir().unwrap();
        let bad = write(dir.path(), "bad.toml", "[problem]\nid = \"3d\"\n[mesh]\ncells = 10\n");
        let unknown = write(
            dir.path(),
            "unknown.toml",
            "[problem]\nid = \"1d\"\n[mesh]\ncells = 10\nfoo = 1\n",
        );
        let missing = dir.path().join("missing.toml");
        for p in [&bad, &unknown, &missing] {
            assert_eq!(call(&["run", "--config"], &[p]).0, 2, "{}", p.display());
        }
        assert_eq!(call(&["frobnicate"], &[]).0, 2);
        assert_eq!(call(&["run"], &[]).0, 2);
        let (code, help) = call(&["--help"], &[]);
        assert_eq!(code, 0);
        assert!(help.contains("cfl-scan"));
    }

    #[test]
    fn solver_failure_gives_3() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write(
            dir.path(),
            "s.toml",
            "[problem]\nid = \"1d\"\nfinal_time = 0.1\n[mesh]\ncells = 200\n[time]\nschemes = [\"CN\"]\ntaus = [0.05]\n[solver]\nmax_iter = 1\n",
        );
        assert_eq!(call(&["run", "--config"], &[&cfg]).0, 3);
    }

    #[test]
    fn unwritable_output_gives_3() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write(dir.path(), "c.toml", SMALL_CONVERGENCE);
        let out = dir.path().join("no/such/dir/rows.csv");
        assert_eq!(call(&["run", "--out", out.to_str().unwrap(), "--config"], &[&cfg]).0, 3);
    }
}
