mod args;
mod commands;

use std::path::Path;

use clap::Parser;
use stochanneal::io::read_manifest;

use args::{Cli, Command};
use commands::{CliError, Ctx, Params, EXIT_INPUT};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    if let Err(e) = run(argv) {
        eprintln!("error: {}", e.msg);
        std::process::exit(e.code);
    }
}

fn run(argv: Vec<String>) -> Result<(), CliError> {
    let cli = match Cli::try_parse_from(std::iter::once("stochanneal".to_string()).chain(argv.iter().cloned())) {
        Ok(c) => c,
        // help and version exit 0, usage errors 2
        Err(e) => e.exit(),
    };
    if let Command::Replay(r) = &cli.command {
        return replay(&r.manifest, r.out.as_deref());
    }
    if cli.jobs > 0 {
        // only fails when a pool already exists, as on a replay
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global();
    }
    let config_file = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError {
                code: EXIT_INPUT,
                msg: format!("cli: {}: {e}", p.display()),
            })?;
            Some(serde_json::from_str(&text).map_err(|e| CliError {
                code: EXIT_INPUT,
                msg: format!("cli: {}: {e}", p.display()),
            })?)
        }
        None => None,
    };
    let command = match &cli.command {
        Command::Solve(_) => "solve",
        Command::SweepDrift(_) => "sweep-drift",
        Command::SweepD2d(_) => "sweep-d2d",
        Command::Cycling(_) => "cycling",
        Command::Calibrate(_) => "calibrate",
        Command::Fit(_) => "fit",
        Command::Gen(_) => "gen",
        Command::Brute(_) => "brute",
        Command::Replay(_) => unreachable!(),
    };
    let ctx = Ctx {
        params: Params::resolve(cli.params.as_deref())?,
        config_file,
        argv,
        command,
    };
    match &cli.command {
        Command::Solve(a) => commands::solve(&ctx, a),
        Command::SweepDrift(a) => commands::sweep_drift(&ctx, a),
        Command::SweepD2d(a) => commands::sweep_d2d(&ctx, a),
        Command::Cycling(a) => commands::cycling(&ctx, a),
        Command::Calibrate(a) => commands::calibrate(&ctx, a),
        Command::Fit(a) => commands::fit(&ctx, a),
        Command::Gen(a) => commands::gen(&ctx, a),
        Command::Brute(a) => commands::brute(&ctx, a),
        Command::Replay(_) => unreachable!(),
    }
}

/// Swaps the value of `--out` in a recorded argument vector, appending it if absent.
fn with_out(argv: &[String], out: &Path) -> Vec<String> {
    let out = out.display().to_string();
    let mut res = Vec::with_capacity(argv.len() + 2);
    let mut found = false;
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--out" {
            it.next();
            res.extend(["--out".to_string(), out.clone()]);
            found = true;
        } else if a.starts_with("--out=") {
            res.push(format!("--out={out}"));
            found = true;
        } else {
            res.push(a.clone());
        }
    }
    if !found {
        res.extend(["--out".to_string(), out]);
    }
    res
}

fn replay(manifest: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let m = read_manifest(manifest).map_err(|e| CliError {
        code: EXIT_INPUT,
        msg: format!("io_ingest: {}: {e}", manifest.display()),
    })?;
    let argv = match out {
        Some(o) => with_out(&m.argv, o),
        None => m.argv.clone(),
    };
    let cli =
        Cli::try_parse_from(std::iter::once("stochanneal".to_string()).chain(argv.iter().cloned())).map_err(|e| {
            CliError {
                code: EXIT_INPUT,
                msg: format!("cli: manifest argv: {e}"),
            }
        })?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(CliError {
            code: EXIT_INPUT,
            msg: "cli: manifest records a replay".into(),
        });
    }
    let params = Params::resolve(cli.params.as_deref())?;
    if params.sha256 != m.params_sha256 {
        return Err(CliError {
            code: EXIT_INPUT,
            msg: format!(
                "cli: parameter file {} (sha256 {}) differs from the recorded {}",
                params.source, params.sha256, m.params_sha256
            ),
        });
    }
    eprintln!("replaying: {}", argv.join(" "));
    run(argv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn out_is_replaced_or_appended() {
        let a: Vec<String> = ["solve", "--out", "a.csv", "--seed", "3"].map(String::from).to_vec();
        assert_eq!(with_out(&a, Path::new("b.csv"))[2], "b.csv");
        let b: Vec<String> = ["gen", "--nodes=4"].map(String::from).to_vec();
        assert_eq!(with_out(&b, Path::new("g.rudy"))[2..], ["--out", "g.rudy"]);
        let c: Vec<String> = ["gen", "--out=x"].map(String::from).to_vec();
        assert_eq!(with_out(&c, Path::new("y"))[1], "--out=y");
    }

    #[test]
    fn help_defaults_match_sampler_defaults() {
        let d = stochanneal::BoltzmannConfig::default();
        let help = Cli::command()
            .find_subcommand_mut("solve")
            .unwrap()
            .render_long_help()
            .to_string();
        for (flag, value) in [
            ("--v-center", d.v_center.to_string()),
            ("--v-min", d.v_min.to_string()),
            ("--v-max", d.v_max.to_string()),
            ("--gain", format!("{:.1}", d.gain)),
            ("--runs", d.runs.to_string()),
            ("--iters", d.max_iters.to_string()),
            ("--seed", d.seed.to_string()),
            ("--precision", d.calibration_precision.to_string()),
            ("--convergence-fraction", d.convergence_fraction.to_string()),
            ("--mu-target", d.mu_target.to_string()),
        ] {
            let at = help
                .find(&format!("{flag} <"))
                .unwrap_or_else(|| panic!("{flag} missing"));
            let tail = &help[at..];
            let block = &tail[..tail[2..].find("\n  -").map_or(tail.len(), |k| k + 2)];
            assert!(block.contains(&format!("[default: {value}")), "{flag}: {block}");
        }
    }
}
