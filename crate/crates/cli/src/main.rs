use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use bates_cli::config::{Method, Preset, Settings};
use bates_cli::{experiments, output};
use bates_core::Scheme;
use clap::{Args, Parser, Subcommand};

/// European put pricing under the Bates model with compact, second-order
/// and finite-element solvers.
#[derive(Debug, Parser)]
#[command(name = "bates", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve once and write surface.csv and slice.csv.
    Price,
    /// Refine h with k = C h² and write convergence.csv.
    ConvergeSpace,
    /// Refine k at fixed h and write convergence.csv.
    ConvergeTime,
    /// Time the five benchmark rows and write efficiency.csv.
    Bench,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML file overriding the preset values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Starting values before the file and flags apply.
    #[arg(long, global = true, default_value = "paper")]
    preset: Preset,
    /// hocfd, fd2 or fem.
    #[arg(long, global = true)]
    method: Option<Method>,
    /// imex_cn, bdf2 or midpoint.
    #[arg(long, global = true)]
    scheme: Option<Scheme>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Comma-separated sweep levels: spacings for converge-space, step
    /// counts for converge-time.
    #[arg(long, global = true, value_delimiter = ',')]
    levels: Option<Vec<String>>,
    /// Error exponent q of the efficiency ratio.
    #[arg(long, global = true)]
    eta_exponent: Option<u32>,
}

fn settings(cli: &Cli) -> Result<Settings> {
    let c = &cli.common;
    let mut s = Settings::preset(c.preset);
    if let Some(path) = &c.config {
        s.apply_file(path)?;
    }
    if let Some(m) = c.method {
        s.method = m;
    }
    if let Some(sc) = c.scheme {
        s.scheme = sc;
    }
    if let Some(q) = c.eta_exponent {
        s.eta_exponent = q;
    }
    if let Some(levels) = &c.levels {
        match cli.command {
            Command::ConvergeSpace => {
                s.space_levels = levels
                    .iter()
                    .map(|l| l.trim().parse::<f64>().with_context(|| format!("bad spacing '{l}'")))
                    .collect::<Result<_>>()?;
            }
            Command::ConvergeTime => {
                s.time_levels = levels
                    .iter()
                    .map(|l| l.trim().parse::<usize>().with_context(|| format!("bad step count '{l}'")))
                    .collect::<Result<_>>()?;
            }
            _ => bail!("--levels only applies to converge-space and converge-time"),
        }
    }
    s.validate()?;
    Ok(s)
}

fn print_table(table: &bates_core::analysis::ConvergenceTable) {
    let orders = table.l2_orders();
    for (lvl, p) in table.levels.iter().zip(orders) {
        let p = p.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
        println!("h = {:<8} k = {:<12.6e} l2 = {:.3e}  linf = {:.3e}  order = {p}", lvl.h, lvl.k, lvl.errors.l2, lvl.errors.linf);
    }
}

fn run(cli: Cli) -> Result<()> {
    let s = settings(&cli)?;
    let out = &cli.common.out;
    match cli.command {
        Command::Price => {
            let r = experiments::price(&s)?;
            let surface = output::write_surface(out, &s, &r.field)?;
            let slice = output::write_slice_file(out, &r.slice)?;
            println!("slice at y = {} ({} nodes)", r.slice_y, r.slice.len());
            println!("wrote {} and {}", surface.display(), slice.display());
        }
        Command::ConvergeSpace => {
            let table = experiments::converge_space(&s, s.method, s.scheme)?;
            print_table(&table);
            println!("wrote {}", output::write_convergence(out, &table)?.display());
        }
        Command::ConvergeTime => {
            let table = experiments::converge_time(&s, s.method, s.scheme)?;
            print_table(&table);
            println!("wrote {}", output::write_convergence(out, &table)?.display());
        }
        Command::Bench => {
            let outcome = experiments::bench(&s)?;
            for r in &outcome.records {
                println!("{:<16} dof = {:<6} t = {:.4}s l2 = {:.3e} eta = {:.3}", r.method, r.dof, r.time_s, r.l2, r.eta);
            }
            println!("wrote {}", output::write_efficiency(out, &outcome.records)?.display());
            if let Some((row, err)) = outcome.failures.first() {
                bail!("{} benchmark row(s) failed; first: {row}: {err}", outcome.failures.len());
            }
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
