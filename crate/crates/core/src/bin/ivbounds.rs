use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ivbounds::harness::{
    emit_figure_data, run_grid_bench, BenchOptions, FigureKind, FigureParams, GridSpec,
};
use ivbounds::solver::solve_raw;
use ivbounds::{
    all_bounds, solve_log_nr, Error, InitialGuess, OptionKind, RawQuote, SolverConfig,
    SolverResult, StandardizedOption, Vol,
};

#[derive(Parser)]
#[command(
    name = "ivbounds",
    version,
    about = "Black-Scholes implied volatility and its bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Call,
    Put,
}

#[derive(Clone, Copy, ValueEnum)]
enum Seed {
    L3,
    L2,
    Lu23,
    Inflection,
}

#[derive(clap::Args)]
struct SolveArgs {
    /// Initial guess policy.
    #[arg(long, value_enum, default_value = "l3")]
    seed: Seed,
    /// Start from this volatility instead of a seed policy.
    #[arg(long, conflicts_with = "seed")]
    sigma0: Option<f64>,
    #[arg(long, default_value_t = 8)]
    max_iter: u32,
    /// Stop when |log C(σ) - log c| falls to this level.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

impl SolveArgs {
    fn config(&self) -> Result<SolverConfig, Error> {
        let initial_guess = match self.sigma0 {
            Some(s) => InitialGuess::User(Vol::new(s)?),
            None => match self.seed {
                Seed::L3 => InitialGuess::L3,
                Seed::L2 => InitialGuess::L2,
                Seed::Lu23 => InitialGuess::LU23,
                Seed::Inflection => InitialGuess::Inflection,
            },
        };
        let cfg = SolverConfig {
            max_iter: self.max_iter,
            tol_log: self.tol,
            record_trace: true,
            initial_guess,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Implied volatility of a market quote.
    Solve {
        /// Discounted option premium.
        #[arg(long, allow_negative_numbers = true)]
        price: f64,
        #[arg(long)]
        forward: f64,
        #[arg(long)]
        strike: f64,
        /// Time to expiry in years.
        #[arg(long)]
        expiry: f64,
        #[arg(long = "type", value_enum)]
        kind: Kind,
        /// Discount factor applied to the premium.
        #[arg(long, default_value_t = 1.0)]
        df: f64,
        #[command(flatten)]
        solver: SolveArgs,
    },
    /// Implied volatility of a standardized OTM call price.
    SolveStd {
        #[arg(long, allow_negative_numbers = true)]
        c: f64,
        #[arg(long, allow_negative_numbers = true)]
        k: f64,
        #[command(flatten)]
        solver: SolveArgs,
    },
    /// Every closed-form bound for a standardized price.
    Bounds {
        #[arg(long, allow_negative_numbers = true)]
        c: f64,
        #[arg(long, allow_negative_numbers = true)]
        k: f64,
        #[arg(long)]
        json: bool,
    },
    /// Error maxima of log-NR and naive NR over a (k, c) grid.
    GridBench {
        /// JSON file with `k_values` and `c_values`; defaults to the built-in grid.
        #[arg(long)]
        grid_file: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        iters: u32,
        /// Per-point CSV destination, `-` for standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Restrict to 0.01 <= c <= 0.5 and e^k <= 1.25.
        #[arg(long)]
        subset: bool,
        /// Skip the bisection reference volatility.
        #[arg(long)]
        no_oracle: bool,
        /// Skip the bound columns.
        #[arg(long)]
        no_bounds: bool,
    },
    /// CSV data behind the price-shape and bound plots.
    Figures {
        #[arg(long, value_parser = parse_figure)]
        which: FigureKind,
        /// Destination, `-` for standard output.
        #[arg(long, default_value = "-")]
        out: PathBuf,
        #[arg(long, default_value_t = std::f64::consts::LN_2)]
        k: f64,
        #[arg(long, default_value_t = 0.2)]
        sigma: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Right end of the σ axis (price-shapes) or k axis (bounds-vs-k).
        #[arg(long, default_value_t = 3.0)]
        x_max: f64,
        /// Plot bounds-vs-price against L1(c) instead of c.
        #[arg(long)]
        l1_axis: bool,
    },
}

fn parse_figure(s: &str) -> Result<FigureKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn is_stdout(path: &std::path::Path) -> bool {
    path.as_os_str() == "-"
}

fn open_out(path: &std::path::Path) -> Result<Box<dyn Write>, Error> {
    if is_stdout(path) {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    }
    let f = File::create(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(Box::new(BufWriter::new(f)))
}

fn print_result(r: &SolverResult) {
    println!("sigma = {:.17e}", r.sigma.get());
    println!("iterations = {}", r.iterations);
    println!("converged = {}", r.converged);
    println!("log_error = {:.3e}", r.final_log_error);
    println!("trace:");
    for (n, t) in r.trace.iter().enumerate() {
        println!(
            "  {n:2}  sigma = {:.17e}  g = {:+.3e}",
            t.sigma, t.log_residual
        );
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Solve {
            price,
            forward,
            strike,
            expiry,
            kind,
            df,
            solver,
        } => {
            let kind = match kind {
                Kind::Call => OptionKind::Call,
                Kind::Put => OptionKind::Put,
            };
            let quote =
                RawQuote::new(price, forward, strike, expiry, kind).with_discount_factor(df);
            let sol = solve_raw(&quote, &solver.config()?)?;
            println!("implied_vol = {:.17e}", sol.implied_vol);
            println!("c = {:.17e}", sol.c);
            println!("k = {:.17e}", sol.k);
            print_result(&sol.result);
        }
        Command::SolveStd { c, k, solver } => {
            let opt = StandardizedOption::new(c, k)?;
            print_result(&solve_log_nr(opt, &solver.config()?)?);
        }
        Command::Bounds { c, k, json } => {
            let b = all_bounds(StandardizedOption::new(c, k)?);
            if json {
                let text = serde_json::to_string_pretty(&b).expect("bound set serializes");
                println!("{text}");
            } else {
                let show = |name: &str, v: Option<Vol>| match v {
                    Some(v) => println!("{name:9} {:.17e}", v.get()),
                    None => println!("{name:9} undefined"),
                };
                show("l_inv", Some(b.l_inv));
                show("l1", Some(b.l1));
                show("l2", Some(b.l2));
                show("l3", Some(b.l3));
                show("l_u23", Some(b.l_u23));
                show("u23", Some(b.u23));
                show("u2", b.u2);
                show("u3", Some(b.u3));
                show("u3_prime", Some(b.u3_prime));
                show("u1", Some(b.u1));
            }
        }
        Command::GridBench {
            grid_file,
            iters,
            out,
            subset,
            no_oracle,
            no_bounds,
        } => {
            let mut spec = match grid_file {
                Some(path) => GridSpec::from_json_file(&path)?,
                None => GridSpec::default(),
            };
            if subset {
                spec = spec.subset();
            }
            let opts = BenchOptions {
                iters,
                naive: true,
                bounds: !no_bounds,
                oracle_tol: (!no_oracle).then_some(1e-14),
            };
            let (summary, to_stdout) = match &out {
                Some(path) => {
                    let mut w = open_out(path)?;
                    (run_grid_bench(&spec, &opts, &mut w)?, is_stdout(path))
                }
                None => (run_grid_bench(&spec, &opts, &mut io::sink())?, false),
            };
            // keep stdout pure CSV when rows go there
            let report = if to_stdout {
                summary.write_report(&mut io::stderr().lock())
            } else {
                summary.write_report(&mut io::stdout().lock())
            };
            report.map_err(|source| Error::Io {
                path: "<report>".into(),
                source,
            })?;
        }
        Command::Figures {
            which,
            out,
            k,
            sigma,
            points,
            x_max,
            l1_axis,
        } => {
            let params = FigureParams {
                k,
                sigma,
                points,
                x_max,
                l1_axis,
            };
            let mut w = open_out(&out)?;
            emit_figure_data(which, &params, &mut w)?;
            w.flush()
                .map_err(|source| Error::Io { path: out, source })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
