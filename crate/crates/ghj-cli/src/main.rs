//! `ghj`: exact Goodman-de la Harpe-Jones subfactor invariants on ADE
//! diagrams. Subcommands print essential-path tables, principal and dual
//! principal graphs, irreducible connection systems with fusion tables, full
//! per-vertex reports, and run the release verification suite.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage error (bad diagram
//! spec or vertex), 3 decomposition failure.

mod cache;
mod render;

use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};

use ghj_core::checks::run_suite;
use ghj_core::{
    build_diagram, decompose_zsystem, dual_principal_graph, esspath_table, ghj_report,
    principal_graph, zfusion_table, ConnectionSystem, DiagramError, DynkinGraph, GhjError,
    SectorError, ZsystemError,
};

#[derive(Parser)]
#[command(
    name = "ghj",
    version,
    about = "Exact GHJ subfactor invariants on ADE Dynkin diagrams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Table,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    Dot,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Print the essential-path dimension matrices of a diagram.
    Esspath {
        /// Diagram spec such as A4, D6, or E8 (case-insensitive).
        diagram: String,
        #[arg(long, value_enum, default_value_t = TableFormat::Table)]
        format: TableFormat,
    },
    /// Print the principal graph of the subfactor at a marked vertex.
    Graph {
        diagram: String,
        /// Marked vertex label, e.g. e0 or d1.
        vertex: String,
        /// Print the dual principal graph instead.
        #[arg(long)]
        dual: bool,
        #[arg(long, value_enum, default_value_t = GraphFormat::Dot)]
        format: GraphFormat,
    },
    /// Print the irreducible connection system of a diagram.
    Zsystem {
        diagram: String,
        /// Also print the fusion table in product form.
        #[arg(long)]
        table: bool,
    },
    /// Print the full subfactor report at a marked vertex.
    Report { diagram: String, vertex: String },
    /// Run the release verification suite and exit nonzero on any failure.
    Check {
        /// Run every check (the default; accepted for scripting clarity).
        #[arg(long)]
        all: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// Decompose the diagram's connection system, going through the on-disk
/// cache when possible.
fn system(g: &DynkinGraph) -> Result<ConnectionSystem> {
    let store = cache::Cache::from_env();
    let name = g.name();
    if let Some(sys) = store.load(&name) {
        return Ok(sys);
    }
    let sys = decompose_zsystem(g)?;
    store.store(&name, &sys);
    Ok(sys)
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Esspath { diagram, format } => {
            let g = build_diagram(&diagram)?;
            let table = esspath_table(&g);
            emit(&match format {
                TableFormat::Table => render::esspath_text(&g, &table),
                TableFormat::Json => render::esspath_json(&g, &table),
            })?;
        }
        Command::Graph {
            diagram,
            vertex,
            dual,
            format,
        } => {
            let g = build_diagram(&diagram)?;
            let p = if dual {
                dual_principal_graph(&g, &system(&g)?, &vertex)?
            } else {
                principal_graph(&g, &vertex)?
            };
            let name = g.name();
            emit(&match format {
                GraphFormat::Dot => render::graph_dot(&name, &vertex, dual, &p),
                GraphFormat::Json => render::graph_json(&name, &vertex, dual, &p),
            })?;
        }
        Command::Zsystem { diagram, table } => {
            let g = build_diagram(&diagram)?;
            let sys = system(&g)?;
            let mut out = render::zsystem_text(&sys);
            if table {
                let ring = zfusion_table(&sys)?;
                out.push_str(&render::fusion_text(&ring));
            }
            emit(&out)?;
        }
        Command::Report { diagram, vertex } => {
            let g = build_diagram(&diagram)?;
            let sys = system(&g)?;
            let ring = zfusion_table(&sys)?;
            let report = ghj_report(&g, &sys, &ring, &vertex)?;
            emit(&render::report_text(&report))?;
        }
        Command::Check { all: _ } => {
            let outcomes = run_suite();
            let mut failed = 0;
            let mut out = String::new();
            for o in &outcomes {
                let status = if o.passed { "PASS" } else { "FAIL" };
                out.push_str(&format!("{status}  {:<24}  {}\n", o.id, o.detail));
                if !o.passed {
                    failed += 1;
                }
            }
            out.push_str(&format!(
                "{}/{} checks passed\n",
                outcomes.len() - failed,
                outcomes.len()
            ));
            emit(&out)?;
            if failed > 0 {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Write to stdout, treating a closed pipe as a normal early exit.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        Err(e) => Err(e.into()),
    }
}

/// Map an error chain to the documented exit codes: decomposition failures
/// are 3, bad user input (diagram spec, vertex, length) is 2, anything else
/// is a validation failure, 1.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        // GhjError is transparent over its sources, so the wrapped error does
        // not show up as a separate chain element; unwrap it by hand.
        let zsys = cause.downcast_ref::<ZsystemError>().or_else(|| {
            match cause.downcast_ref::<GhjError>() {
                Some(GhjError::Zsystem(z)) => Some(z),
                _ => None,
            }
        });
        if let Some(z) = zsys {
            if matches!(
                z,
                ZsystemError::DecompositionFailed { .. }
                    | ZsystemError::AmbiguousDecomposition { .. }
            ) {
                return 3;
            }
        }
        if cause.downcast_ref::<DiagramError>().is_some()
            || cause.downcast_ref::<SectorError>().is_some()
            || matches!(cause.downcast_ref::<GhjError>(), Some(GhjError::Sector(_)))
        {
            return 2;
        }
    }
    1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kinds() {
        let usage = anyhow::Error::new(DiagramError::UnknownFamily("X9".into()));
        assert_eq!(exit_code_for(&usage), 2);

        let vertex = anyhow::Error::new(ghj_core::GhjError::Sector(SectorError::UnknownVertex {
            diagram: "E6".into(),
            vertex: "e9".into(),
        }));
        assert_eq!(exit_code_for(&vertex), 2);

        let search = anyhow::Error::new(ZsystemError::DecompositionFailed {
            diagram: "E8".into(),
            detail: "node budget exhausted".into(),
        });
        assert_eq!(exit_code_for(&search), 3);

        let other = anyhow::anyhow!("some validation problem");
        assert_eq!(exit_code_for(&other), 1);
    }
}
