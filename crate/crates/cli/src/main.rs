//! `expbrush` command-line tool.
//!
//! Exit status: 0 on success, 1 on domain errors (a failed check, no route,
//! a rejected seed), 2 on usage errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error:\n  {}", .0.join("\n  "))]
    Usage(Vec<String>),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(vec![msg.into()])
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "expbrush", version, about = "Brush model of the exponential Julia set")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct BrushArgs {
    /// Inline external address, e.g. "1,0" or "1|2,3" (repeatable)
    #[arg(long, allow_hyphen_values = true)]
    pub address: Vec<String>,
    /// JSON file {"addresses": [...]}
    #[arg(long)]
    pub addresses: Option<PathBuf>,
    /// JSON config file (schema 1); flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Tip depth N [default: 64]
    #[arg(long)]
    pub depth: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CurveArgs {
    /// Number of box levels [default: 3]
    #[arg(long)]
    pub kmax: Option<u32>,
    /// Level offset l [default: 0]
    #[arg(long = "offset", short = 'l')]
    pub offset: Option<u32>,
    /// Seed rectangle a,b,c,d with rational c, d [default: -1,1,-1,1]
    #[arg(long, allow_hyphen_values = true)]
    pub seed: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate F^{-n}(1) < 3/n, or the partial sums of F^{-k²}(1)
    Verify {
        #[arg(long, default_value_t = 10_000)]
        nmax: u64,
        /// Emit the partial-sum table up to this k instead
        #[arg(long)]
        partial_sums: Option<u64>,
        /// CSV output file (stdout if absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tip of a hair with the escape certificate of the tip point
    Tip {
        #[arg(long, allow_hyphen_values = true)]
        address: String,
        #[arg(long, default_value_t = 64)]
        depth: usize,
        #[arg(long, default_value_t = 5)]
        kmax: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CERTIFIED-ESCAPING, LEFT-DOMAIN or UNKNOWN for a model point (t, s)
    Classify {
        #[arg(long, allow_hyphen_values = true)]
        address: String,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, default_value_t = 5)]
        kmax: u32,
        /// Print the certificate as JSON
        #[arg(long)]
        json: bool,
    },
    /// Box families per level with the condition report
    Boxes {
        #[command(flatten)]
        brush: BrushArgs,
        #[command(flatten)]
        curve: CurveArgs,
        /// Validate the families in this JSON file instead of constructing them
        #[arg(long)]
        families: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detour curve, closed curve and Cauchy certificate (SVG plus JSON sidecar)
    Curve {
        #[command(flatten)]
        brush: BrushArgs,
        #[command(flatten)]
        curve: CurveArgs,
        /// Refine along the families in this JSON file instead of constructing them
        #[arg(long)]
        families: Option<PathBuf>,
        /// Build a small curve around the tip of this address instead
        #[arg(long, allow_hyphen_values = true)]
        localize: Option<String>,
        /// Radius for --localize
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value = "curve.svg")]
        out: PathBuf,
        /// JSON sidecar [default: OUT with extension .json]
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Route between two points avoiding all but certified escaping brush points
    Path {
        #[command(flatten)]
        brush: BrushArgs,
        /// Start "x,y" with y rational, or "t,h:ADDRESS" for a hair point
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        /// End, in the same form as --from
        #[arg(long, allow_hyphen_values = true)]
        to: String,
        /// Box levels of the curve followed to a hair [default: 3]
        #[arg(long)]
        kmax: Option<u32>,
        #[arg(long, default_value = "path.svg")]
        out: PathBuf,
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Render orbit verdicts of e^z + a to PNG
    Render {
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        a: f64,
        /// re_min,re_max,im_min,im_max
        #[arg(long, default_value = "-4,4,-4,4", allow_hyphen_values = true)]
        viewport: String,
        /// WxH
        #[arg(long, default_value = "256x256")]
        size: String,
        #[arg(long, default_value_t = 512)]
        max_steps: u32,
        #[arg(long, default_value_t = 50.0)]
        escape_radius: f64,
        #[arg(long, default_value_t = 1e-8)]
        eps_attract: f64,
        #[arg(long, default_value = "render.png")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Verify {
            nmax,
            partial_sums,
            out,
        } => commands::verify(nmax, partial_sums, out.as_deref()),
        Command::Tip {
            address,
            depth,
            kmax,
            out,
        } => commands::tip(&address, depth, kmax, out.as_deref()),
        Command::Classify { address, t, kmax, json } => commands::classify(&address, t, kmax, json),
        Command::Boxes {
            brush,
            curve,
            families,
            out,
        } => commands::boxes(&brush, &curve, families.as_deref(), out.as_deref()),
        Command::Curve {
            brush,
            curve,
            families,
            localize,
            eps,
            out,
            sidecar,
        } => commands::curve(&commands::CurveRequest {
            brush,
            curve,
            families,
            localize,
            eps,
            out,
            sidecar,
        }),
        Command::Path {
            brush,
            from,
            to,
            kmax,
            out,
            sidecar,
        } => commands::path(&brush, &from, &to, kmax, &out, sidecar.as_deref()),
        Command::Render {
            a,
            viewport,
            size,
            max_steps,
            escape_radius,
            eps_attract,
            out,
        } => commands::render(a, &viewport, &size, max_steps, escape_radius, eps_attract, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("expbrush: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
