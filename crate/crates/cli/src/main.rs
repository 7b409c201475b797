//! sobolev-lab: runs the verification suites and writes their reports.
//!
//! Exit status: 0 when every certified claim passes, 2 on usage errors, 1 on
//! runtime failures, and 64 + mask when claims fail, where the mask has bit
//! `i` set for the failing suite at position `i` of
//! constants, square, spectral, flow, onofri, ckn.

mod report;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand};

use report::{collect_summary, render_summary, summary_rows, Format, SuiteReport};
use suites::{FlowInit, Settings};

/// Overrides the default output directory when --output is absent.
pub const OUTPUT_ENV: &str = "SOBOLEV_LAB_OUTPUT_DIR";
pub const DEFAULT_OUTPUT: &str = "sobolev-lab-out";
const SUITES: [&str; 6] = ["constants", "square", "spectral", "flow", "onofri", "ckn"];

#[derive(Parser, Debug)]
#[command(name = "sobolev-lab", version, about = "Verification suites for sharp Sobolev-type inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Dimension d; must exceed 2 except for onofri (always 2) and ckn (d >= 2).
    #[arg(long, global = true, default_value_t = 3.0)]
    dimension: f64,

    /// Number of log-radius grid nodes, a power of two in [256, 8192].
    #[arg(long, global = true, default_value_t = 2048)]
    grid_size: usize,

    /// Replaces the default chain tolerance of each suite; must lie in [1e-12, 1e-4].
    #[arg(long, global = true)]
    tolerance: Option<f64>,

    /// Seed of the ChaCha8 generator behind the random test profiles.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Output directory; defaults to $SOBOLEV_LAB_OUTPUT_DIR, then ./sobolev-lab-out.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sharp constants and their cross-checks.
    Constants,
    /// Completion-of-square chain on seeded random profiles, and the improved φ-inequality.
    Square,
    /// Linearization around the Aubin-Talenti function.
    Spectral,
    /// Fast-diffusion flow diagnostics.
    Flow {
        /// `separation` or the path of a profile CSV (columns t, r, value).
        #[arg(long, default_value = "separation")]
        init: String,
        #[arg(long, default_value_t = 0.1)]
        tau_max: f64,
        /// Chebyshev nodes on the sphere.
        #[arg(long, default_value_t = 256)]
        nodes: usize,
    },
    /// Onofri, logarithmic HLS and μ_α chains in two dimensions.
    Onofri,
    /// Weighted Caffarelli-Kohn-Nirenberg chain and symmetry bounds.
    Ckn,
    /// Every suite at the given dimension.
    All,
    /// Summary table of the artifacts already in the output directory.
    Summary,
}

fn usage(msg: impl std::fmt::Display) -> ! {
    Cli::command().error(ErrorKind::ValueValidation, msg).exit()
}

fn validate(cli: &Cli) {
    let n = cli.grid_size;
    if !(n.is_power_of_two() && (256..=8192).contains(&n)) {
        usage(format!("--grid-size must be a power of two in [256, 8192], got {n}"));
    }
    if let Some(t) = cli.tolerance {
        if !(1e-12..=1e-4).contains(&t) {
            usage(format!("--tolerance must lie in [1e-12, 1e-4], got {t}"));
        }
    }
    let d = cli.dimension;
    match cli.command {
        Command::Onofri | Command::Summary => {}
        Command::Ckn if !(d >= 2.0 && d.is_finite()) => usage(format!("ckn needs --dimension >= 2, got {d}")),
        Command::Ckn => {}
        _ if !(d > 2.0 && d.is_finite()) => usage(format!("--dimension must exceed 2, got {d}")),
        _ => {}
    }
    if let Command::Flow { tau_max, nodes, .. } = cli.command {
        if !(tau_max > 0.0 && tau_max.is_finite()) {
            usage(format!("--tau-max must be positive, got {tau_max}"));
        }
        if nodes < 16 {
            usage(format!("--nodes must be at least 16, got {nodes}"));
        }
    }
}

fn output_dir(cli: &Cli) -> PathBuf {
    cli.output
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_ENV).filter(|s| !s.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let dir = output_dir(cli);
    if let Command::Summary = cli.command {
        let rows = match collect_summary(&dir) {
            Ok(rows) => rows,
            Err(e) => usage(e),
        };
        print!("{}", render_summary(&rows));
        let mask = rows
            .iter()
            .filter(|r| !r.pass)
            .map(|r| 1u8 << SUITES.iter().position(|s| *s == r.suite).unwrap_or(0))
            .fold(0u8, |a, b| a | b);
        return Ok(if mask == 0 { ExitCode::SUCCESS } else { ExitCode::from(64 + mask) });
    }
    let (init, tau_max, sphere_nodes) = match &cli.command {
        Command::Flow { init, tau_max, nodes } => {
            let init = if init == "separation" { FlowInit::Separation } else { FlowInit::Profile(init.into()) };
            (init, *tau_max, *nodes)
        }
        _ => (FlowInit::Separation, 0.1, 256),
    };
    let settings = Settings {
        dimension: cli.dimension,
        grid_size: cli.grid_size,
        tolerance: cli.tolerance,
        seed: cli.seed,
        init,
        tau_max,
        sphere_nodes,
    };
    let selected: Vec<&str> = match cli.command {
        Command::Constants => vec!["constants"],
        Command::Square => vec!["square"],
        Command::Spectral => vec!["spectral"],
        Command::Flow { .. } => vec!["flow"],
        Command::Onofri => vec!["onofri"],
        Command::Ckn => vec!["ckn"],
        Command::All | Command::Summary => SUITES.to_vec(),
    };
    let mut reports: Vec<SuiteReport> = Vec::new();
    for name in selected {
        let rep = match name {
            "constants" => suites::constants(&settings)?,
            "square" => suites::square(&settings)?,
            "spectral" => suites::spectral(&settings)?,
            "flow" => suites::flow(&settings)?,
            "onofri" => suites::onofri(&settings)?,
            _ => suites::ckn_suite(&settings)?,
        };
        for path in rep.write(&dir, cli.format)? {
            eprintln!("wrote {}", path.display());
        }
        reports.push(rep);
    }
    print!("{}", render_summary(&summary_rows(&reports)));
    Ok(exit_code(&reports))
}

/// 0 when every suite passes, otherwise 64 + mask of the failing suites.
fn exit_code(reports: &[SuiteReport]) -> ExitCode {
    let mask = failure_mask(reports);
    if mask == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(64 + mask)
    }
}

fn failure_mask(reports: &[SuiteReport]) -> u8 {
    reports
        .iter()
        .filter(|r| !r.pass())
        .map(|r| 1u8 << SUITES.iter().position(|s| *s == r.suite).unwrap_or(0))
        .fold(0, |a, b| a | b)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    validate(&cli);
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use report::Claim;

    #[test]
    fn mask_enumerates_failing_suites() {
        let mut ok = SuiteReport::new("square", 3.0);
        ok.claims.push(Claim::at_least("x", 1.0, 0.0));
        let mut bad_flow = SuiteReport::new("flow", 3.0);
        bad_flow.claims.push(Claim::at_least("x", -1.0, 1e-8));
        let mut bad_ckn = SuiteReport::new("ckn", 3.0);
        bad_ckn.claims.push(Claim::within("y", 2.0, 1.0));
        assert_eq!(failure_mask(&[ok.clone()]), 0);
        assert_eq!(failure_mask(&[ok, bad_flow, bad_ckn]), 0b101000);
    }
}
