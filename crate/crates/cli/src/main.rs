mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nz_core::NzError;

#[derive(Parser, Debug)]
#[command(name = "nz", version, about = "Ideal triangulations, gluing equations, Bloch groups and Nahm sums")]
pub struct Cli {
    /// Working precision in decimal digits (≤ 15 machine floats, ≤ 30 double-double).
    #[arg(long, global = true, default_value_t = 30)]
    pub prec: u32,
    /// Truncation order of q-series.
    #[arg(long, global = true, default_value_t = 50)]
    pub order: usize,
    /// Print the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Combinatorial and symplectic checks of a triangulation file.
    Validate { file: PathBuf },
    /// Gluing matrices, the half-symplectic basis and its completion.
    Matrices { file: PathBuf },
    /// The chain complex of the triangulation.
    Complex { file: PathBuf },
    /// Shapes of the complete structure.
    Solve { file: PathBuf },
    Volume { file: PathBuf },
    /// Dehn filling of the first cusp: one slope "p,q" or a sweep "a..b" over (n, 1).
    Fill {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        slope: Option<String>,
        #[arg(long)]
        sweep: Option<String>,
    },
    /// The potential function on a real grid "a..b/n" per cusp.
    Potential {
        file: PathBuf,
        #[arg(long, default_value = "-0.1..0.1/5", allow_hyphen_values = true)]
        grid: String,
    },
    /// Complex volume mod 4π².
    Cvol { file: PathBuf },
    /// Half-symplectic pairs: a pair file or a triangulation (solved on the fly).
    Bloch {
        #[command(subcommand)]
        action: BlochCmd,
    },
    /// Nahm sum coefficients, one "exponent coefficient" per line.
    Nahm {
        /// Symmetric matrix, rows separated by ';', entries by ',' (rationals allowed).
        #[arg(long = "A", allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<String>,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        c: String,
    },
    /// The solution of the Nahm equation in (0, 1)^N.
    NahmSolve {
        #[arg(long = "A", allow_hyphen_values = true)]
        a: String,
    },
    /// Dedekind zeta value at 2 of an imaginary quadratic field.
    Zeta {
        #[arg(long, allow_hyphen_values = true)]
        disc: i64,
        #[arg(long, default_value_t = 1_000_000)]
        terms: u64,
    },
    /// Li₂, Bloch–Wigner and Lobachevsky values at z = "re,im".
    Dilog {
        #[arg(allow_hyphen_values = true)]
        z: String,
    },
    /// Re-run the command recorded in a JSON report and compare.
    Check { report_file: PathBuf },
}

#[derive(Subcommand, Debug)]
pub enum BlochCmd {
    /// Write the pair (H, z) of a solved triangulation.
    Export { file: PathBuf },
    /// Residuals of the generalized gluing equations.
    Verify { file: PathBuf },
    /// The extended Bloch element and its exact wedge check.
    Element { file: PathBuf },
    /// The extended regulator mod 4π².
    Regulator { file: PathBuf },
    /// Apply a move: stabilize | unstabilize | left:ROWS | renumber:σ | rotate:j,k.
    Move {
        file: PathBuf,
        #[arg(long = "move")]
        mv: String,
    },
}

/// Exit code of an error: 2 for bad input, 1 for a failed computation.
pub fn error_code(e: &NzError) -> u8 {
    match e {
        NzError::Parse(_) | NzError::Shape(_) | NzError::Triangulation(_) | NzError::Precision(_) | NzError::Invalid(_) | NzError::NotHalfSymplectic(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(&cli, &argv) {
        Ok(rep) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&rep).expect("serializable"));
            } else {
                print!("{}", rep.to_text());
            }
            if let Some(path) = &cli.report {
                let text = serde_json::to_string_pretty(&rep).expect("serializable") + "\n";
                if let Err(e) = std::fs::write(path, text) {
                    eprintln!("nz: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            ExitCode::from(if rep.pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("nz: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}
