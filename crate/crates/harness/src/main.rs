use std::path::PathBuf;
use std::process::ExitCode;

use adernet::config::{NetworkConfig, SolverKind};
use adernet::reconstruction::ReconstructionMode;
use adernet_harness::cases::{builtin_case, CASES};
use adernet_harness::output::{out_dir, run};
use adernet_harness::study::{convergence, reference_cells, REFERENCE_ORDER};
use adernet_harness::{HarnessError, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "adernet",
    version,
    about = "ADER finite volume simulations on networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a TOML network configuration or a built-in case.
    Run { config: PathBuf },
    /// Grid refinement study of a built-in case.
    Convergence {
        case: String,
        #[arg(long, default_value = "tt")]
        solver: String,
        /// Range `a..b` (inclusive) or comma list.
        #[arg(long, default_value = "2..6")]
        orders: String,
        #[arg(long, default_value = "50,100,200,400")]
        grids: String,
        #[arg(long, default_value_t = REFERENCE_ORDER)]
        reference_order: usize,
        /// Defaults to twice the finest grid.
        #[arg(long)]
        reference_cells: Option<usize>,
        /// `weno` or `linear`.
        #[arg(long, default_value = "weno")]
        reconstruction: String,
    },
    /// List the built-in cases.
    ListCases,
    /// Parse and check a configuration without running it.
    Validate { config: PathBuf },
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    let bad = || HarnessError::Config(format!("cannot parse list {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        return if a <= b {
            Ok((a..=b).collect())
        } else {
            Err(bad())
        };
    }
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect()
}

/// A TOML file, or the name of a built-in case when no such file exists.
fn load(path: &PathBuf) -> Result<NetworkConfig> {
    if !path.exists() {
        if let Some(name) = path.to_str().filter(|n| CASES.iter().any(|c| c.name == *n)) {
            return builtin_case(name);
        }
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    Ok(NetworkConfig::from_toml(&text)?)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config } => {
            let c = load(&config)?;
            for f in run(&c, &out_dir())? {
                println!("{}", f.display());
            }
        }
        Command::Convergence {
            case,
            solver,
            orders,
            grids,
            reference_order,
            reference_cells: rc,
            reconstruction,
        } => {
            let solver: SolverKind = solver.parse()?;
            let orders = parse_list(&orders)?;
            let grids = parse_list(&grids)?;
            let rc = rc.unwrap_or_else(|| reference_cells(&grids));
            let mode = match reconstruction.as_str() {
                "weno" => ReconstructionMode::Weno,
                "linear" => ReconstructionMode::Linear,
                other => {
                    return Err(HarnessError::Config(format!(
                        "unknown reconstruction {other:?}"
                    )))
                }
            };
            let study = convergence(&case, solver, &orders, &grids, reference_order, rc, mode)?;
            let dir = out_dir();
            std::fs::create_dir_all(&dir)?;
            let name = format!(
                "convergence_{case}_{}.csv",
                if solver == SolverKind::Tt {
                    "tt"
                } else {
                    "heoc"
                }
            );
            let path = dir.join(name);
            study.write_csv(&path)?;
            println!(
                "{:>5} {:>5} {:>12} {:>6} {:>12} {:>6} {:>12} {:>6}",
                "k", "N", "L1", "O", "Linf", "O", "ODE L2", "O"
            );
            for r in &study.rows {
                let rate = |v: Option<f64>| {
                    v.map(|x| format!("{x:6.2}"))
                        .unwrap_or_else(|| " ".repeat(6))
                };
                println!(
                    "{:>5} {:>5} {:>12.3e} {} {:>12.3e} {} {:>12.3e} {}",
                    r.order,
                    r.cells,
                    r.norms.l1,
                    rate(r.l1_rate),
                    r.norms.linf,
                    rate(r.linf_rate),
                    r.norms.ode_l2,
                    rate(r.ode_rate)
                );
            }
            println!("{}", path.display());
        }
        Command::ListCases => {
            for c in CASES {
                println!("{:<18} {}", c.name, c.summary);
            }
        }
        Command::Validate { config } => {
            load(&config)?.validate()?;
            println!("ok");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("adernet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
