use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use rpfkit_cli::{parse_t_list, run, Command, Overrides};

/// Transfer-operator toolkit for subshifts with a-priori weights.
#[derive(Debug, Parser)]
#[command(name = "rpfkit", version)]
struct Args {
    command: Command,
    model_file: PathBuf,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Cylinder depth for reported measures.
    #[arg(long)]
    depth: Option<usize>,
    /// Comma-separated increasing temperatures.
    #[arg(long)]
    t_list: Option<String>,
    /// `aggregate` or `truncate` for countable models.
    #[arg(long)]
    method: Option<String>,
    /// Report path; CSV tables are written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let t_list = match args.t_list.as_deref().map(parse_t_list).transpose() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("rpfkit: parse error: --t-list {e}");
            return ExitCode::from(2);
        }
    };
    let overrides = Overrides {
        tol: args.tol,
        max_iter: args.max_iter,
        depth: args.depth,
        t_list,
        method: args.method,
        out: args.out,
    };
    ExitCode::from(run(args.command, &args.model_file, &overrides) as u8)
}
