use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use tmlab_core::bounds::kantorovich;
use tmlab_core::harness::report::reports_to_json;
use tmlab_core::harness::{run_suite, EnsembleKind, EnsembleSpec, ExperimentConfig, SuiteId};
use tmlab_core::lie_trotter::{convergence_study, default_q_grid, tensor_log};
use tmlab_core::means::mean_psd;
use tmlab_core::{ConnectionFunction, GaugeNormKind, HermitianTensor, TensorShape};

#[derive(Parser)]
#[command(name = "tmlab", version, about = "Bivariate tensor means, bound factors and Monte Carlo verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites and write a JSON report.
    Verify {
        /// Suite id (full name or short prefix such as L3, T9) or `all`.
        #[arg(long, value_parser = parse_suites)]
        suite: Suites,
        /// Config file, or `default` for the built-in config.
        #[arg(long, default_value = "default")]
        config: String,
        /// Report path; without it the report goes to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Convergence of (e^{qX} #_g e^{qY})^{1/q} over q = 2^-1..2^-8.
    LieTrotter {
        #[arg(long, required = true)]
        study: bool,
        /// Hermitian tensor files; a seeded pair of spectral norm <= 1 otherwise.
        #[arg(long, requires = "y")]
        x: Option<PathBuf>,
        #[arg(long, requires = "x")]
        y: Option<PathBuf>,
        #[arg(long = "fn", default_value = "geometric")]
        function: String,
        #[arg(long, default_value = "frobenius")]
        norm: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Scalar bound factors.
    Bounds {
        /// Kantorovich constant K(m, M, p).
        #[arg(long, num_args = 3, value_names = ["m", "M", "p"], allow_negative_numbers = true, required = true)]
        kantorovich: Vec<f64>,
    },
    /// X #_g Y for PSD X, Y read from tensor JSON files; prints the result as JSON.
    Mean {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long = "fn")]
        function: String,
    },
}

#[derive(Clone, Debug)]
enum Suites {
    All,
    One(SuiteId),
}

fn parse_suites(s: &str) -> Result<Suites, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(Suites::All);
    }
    s.parse::<SuiteId>().map(Suites::One).map_err(|_| {
        let names: Vec<&str> = SuiteId::ALL.iter().map(|id| id.name()).collect();
        format!("unknown suite {s:?}; expected `all` or one of {}", names.join(", "))
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            eprintln!("\n{}", Cli::command().render_usage());
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("tmlab: {e}");
            ExitCode::from(3)
        }
    }
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn read_tensor(path: &PathBuf) -> AnyResult<HermitianTensor> {
    let s = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(HermitianTensor::from_json_str(&s).map_err(|e| format!("{}: {e}", path.display()))?)
}

fn run(cli: Cli) -> AnyResult<ExitCode> {
    match cli.command {
        Command::Verify { suite, config, out, seed, trials } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            cfg.validate()?;
            let ids = match suite {
                Suites::All => cfg.suites.clone(),
                Suites::One(id) => vec![id],
            };
            let mut reports = Vec::with_capacity(ids.len());
            for id in ids {
                let r = run_suite(id, &cfg)?;
                eprintln!("{}", r.summary_line());
                reports.push(r);
            }
            let json = reports_to_json(&reports)?;
            match out {
                Some(p) => std::fs::write(&p, json).map_err(|e| format!("{}: {e}", p.display()))?,
                None => print!("{json}"),
            }
            let violations: usize = reports.iter().map(|r| r.violations).sum();
            Ok(if violations == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::LieTrotter { study: _, x, y, function, norm, seed } => {
            let g = ConnectionFunction::parse(&function)?;
            let norm: GaugeNormKind = norm.parse()?;
            let (x, y) = match (x, y) {
                (Some(xp), Some(yp)) => (read_tensor(&xp)?, read_tensor(&yp)?),
                _ => {
                    // log of a spectrum in [e^-1, e] has spectral norm <= 1.
                    let shape = TensorShape::new(vec![2, 2])?;
                    let kind = EnsembleKind::SpectrumBounded { m: (-1f64).exp(), big_m: 1f64.exp() };
                    let spec = EnsembleSpec::new(shape, kind, seed)?;
                    (tensor_log(&spec.sample(0))?, tensor_log(&spec.sample(1))?)
                }
            };
            let study = convergence_study(&x, &y, &g, &default_q_grid(), norm)?;
            println!("{:>12}  {:>14}", "q", "distance");
            for (q, d) in study.q_grid.iter().zip(&study.distances) {
                println!("{q:>12.8}  {d:>14.6e}");
            }
            println!("monotone: {}", study.monotone);
            println!("final relative error: {:.6e}", study.final_relative_error);
            Ok(ExitCode::SUCCESS)
        }
        Command::Bounds { kantorovich: k } => {
            println!("{}", kantorovich(k[0], k[1], k[2])?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Mean { x, y, function } => {
            let g = ConnectionFunction::parse(&function)?;
            let m = mean_psd(&read_tensor(&x)?, &read_tensor(&y)?, &g)?;
            println!("{}", m.to_json_string()?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
