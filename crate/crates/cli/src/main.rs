//! Single entry point for the toolkit: saving exponents, torsion scans,
//! prime statistics, class groups, field inspection, module verifiers,
//! and a reduced-scale selftest.
//!
//! Exit codes: 0 success, 1 usage error, 2 violated exact identity
//! (always an implementation bug), 3 exceeded resource bound.

mod commands;
mod config;
mod report;

use clap::{Args, Parser, Subcommand};

use config::{GlobalOpts, RunConfig};
use report::CliError;

#[derive(Parser)]
#[command(
    name = "abelia",
    version,
    about = "Desk-scale verification of pointwise class-group torsion bounds \
             for elementary abelian extensions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalOpts,
}

#[derive(Subcommand)]
enum Command {
    /// Saving exponents: final values, grids, GRH crossover ranks
    #[command(subcommand)]
    Bounds(BoundsCmd),
    /// Decomposed class-group torsion of multiquadratic fields
    #[command(subcommand)]
    Torsion(TorsionCmd),
    /// Prime counting, Brun-Titchmarsh checks, splitting statistics
    #[command(subcommand)]
    Primes(PrimesCmd),
    /// Class groups of quadratic fields (narrow ones for D > 0)
    Classgroup(ClassgroupArgs),
    /// One extension and its subfield lattice
    Field(FieldArgs),
    /// Brute-force verifiers for the module decomposition identity
    #[command(subcommand)]
    Algebra(AlgebraCmd),
    /// Every exact-identity suite at reduced scale
    Selftest,
}

#[derive(Subcommand)]
enum BoundsCmd {
    /// The unconditional saving for (ell, p, r), with its GRH counterpart
    Delta {
        /// Torsion modulus
        #[arg(long)]
        ell: u64,
        /// Prime p of the Galois group (Z/p)^r
        #[arg(long)]
        p: u64,
        /// Rank r of the Galois group
        #[arg(long)]
        r: u32,
        /// General-base counting exponent beta (a rational; enables the
        /// general-base formulas)
        #[arg(long)]
        beta: Option<String>,
        /// General-base counting exponent gamma (a rational; enables the
        /// general-base formulas)
        #[arg(long)]
        gamma: Option<String>,
    },
    /// Savings for every ell up to a bound, across the listed primes
    Table {
        /// Largest torsion modulus tabulated (from 2 up)
        #[arg(long)]
        ell_max: u64,
        /// Comma-separated primes p
        #[arg(long, value_delimiter = ',', required = true)]
        p_list: Vec<u64>,
    },
    /// Least rank where the unconditional saving meets the GRH one
    Crossover {
        /// Torsion modulus
        #[arg(long)]
        ell: u64,
        /// Prime p of the Galois group
        #[arg(long)]
        p: u64,
        /// Compare with the sharper genus-theory value instead
        #[arg(long)]
        alternative: bool,
    },
}

#[derive(Subcommand)]
enum TorsionCmd {
    /// Decomposed ell-torsion of one multiquadratic field
    Field {
        /// Fundamental discriminants generating the field, e.g. -23,5
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        discs: Vec<i64>,
        /// Odd torsion modulus
        #[arg(long)]
        ell: u64,
    },
    /// Every rank-r multiquadratic field with conductor up to a bound
    Scan {
        /// Largest conductor scanned
        #[arg(long)]
        cond_max: u64,
        /// Rank of the scanned fields
        #[arg(long)]
        rank: u32,
        /// Odd torsion modulus
        #[arg(long)]
        ell: u64,
    },
}

#[derive(Subcommand)]
enum PrimesCmd {
    /// Count primes up to x, optionally in a progression a mod q
    Pi {
        #[arg(long)]
        x: u64,
        /// Progression modulus (default: count every prime)
        #[arg(long)]
        q: Option<u64>,
        /// Progression residue, coprime to q
        #[arg(long)]
        a: Option<u64>,
    },
    /// Brun-Titchmarsh inequality over every modulus up to the grid bound
    BtCheck {
        /// Largest modulus checked; snapshots in x run up to sieve_limit
        #[arg(long)]
        grid: u64,
    },
    /// Split-prime classification at Y = Disc^theta
    Goodbad {
        /// Extension record f=..;H=..;p=..;r=..
        #[arg(long)]
        ext: String,
        /// Exponent theta defining the counting height Y
        #[arg(long)]
        theta: f64,
        /// Classifier constant (default 0.05)
        #[arg(long)]
        c: Option<f64>,
    },
    /// Pigeonhole splitting tallies over primes up to x
    Pigeonhole {
        /// Extension record f=..;H=..;p=..;r=..
        #[arg(long)]
        ext: String,
        /// Largest prime scanned
        #[arg(long)]
        x: u64,
    },
}

#[derive(Args)]
struct ClassgroupArgs {
    /// One fundamental discriminant
    #[arg(long, allow_hyphen_values = true, conflicts_with = "range")]
    disc: Option<i64>,
    /// Inclusive endpoints A B; reports every fundamental D between them
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true)]
    range: Option<Vec<i64>>,
    /// Also report the ell-torsion order
    #[arg(long)]
    ell: Option<u64>,
}

#[derive(Args)]
struct FieldArgs {
    /// Extension record f=..;H=..;p=..;r=..
    #[arg(long, conflicts_with = "discs")]
    ext: Option<String>,
    /// Fundamental discriminants generating a multiquadratic field
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    discs: Option<Vec<i64>>,
    /// Subfield dimension to list (default 1, the degree-p subfields)
    #[arg(long)]
    dim: Option<u32>,
}

#[derive(Subcommand)]
enum AlgebraCmd {
    /// Check |M| = prod |eps_i M| over enumerated or sampled modules
    Verify {
        /// Coefficient modulus, coprime to p
        #[arg(long)]
        ell: u64,
        /// Prime p of the acting group (Z/p)^r
        #[arg(long)]
        p: u64,
        /// Rank r of the acting group
        #[arg(long)]
        r: u32,
        /// Largest module dimension (1 to 4)
        #[arg(long, default_value_t = 3)]
        max_dim: usize,
        /// Candidate count above which a dimension is sampled instead of
        /// enumerated
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        /// Sampled instances per dimension over the budget
        #[arg(long, default_value_t = 200)]
        samples: u64,
        /// Seed for sampled instances
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = RunConfig::resolve(&cli.global)?;
    // The global pool installs once per process; a later attempt keeps
    // the first configuration, which only happens under `cargo test`.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(config.parallelism).build_global();
    match cli.command {
        Command::Bounds(cmd) => match cmd {
            BoundsCmd::Delta { ell, p, r, beta, gamma } => {
                commands::bounds_delta(&config, ell, p, r, beta, gamma)
            }
            BoundsCmd::Table { ell_max, p_list } => {
                commands::bounds_table(&config, ell_max, p_list)
            }
            BoundsCmd::Crossover { ell, p, alternative } => {
                commands::bounds_crossover(&config, ell, p, alternative)
            }
        },
        Command::Torsion(cmd) => match cmd {
            TorsionCmd::Field { discs, ell } => commands::torsion_field(&config, discs, ell),
            TorsionCmd::Scan { cond_max, rank, ell } => {
                commands::torsion_scan(&config, cond_max, rank, ell)
            }
        },
        Command::Primes(cmd) => match cmd {
            PrimesCmd::Pi { x, q, a } => commands::primes_pi(&config, x, q, a),
            PrimesCmd::BtCheck { grid } => commands::primes_bt_check(&config, grid),
            PrimesCmd::Goodbad { ext, theta, c } => {
                commands::primes_goodbad(&config, &ext, theta, c)
            }
            PrimesCmd::Pigeonhole { ext, x } => commands::primes_pigeonhole(&config, &ext, x),
        },
        Command::Classgroup(args) => {
            commands::classgroup(&config, args.disc, args.range, args.ell)
        }
        Command::Field(args) => commands::field(&config, args.ext, args.discs, args.dim),
        Command::Algebra(AlgebraCmd::Verify { ell, p, r, max_dim, budget, samples, seed }) => {
            commands::algebra_verify(&config, ell, p, r, max_dim, budget, samples, seed)
        }
        Command::Selftest => commands::selftest(&config),
    }
}

fn main() {
    // Die quietly when a downstream pipe closes, as line-oriented tools do.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("{}", e.structured());
            std::process::exit(e.exit_code());
        }
    }
}
