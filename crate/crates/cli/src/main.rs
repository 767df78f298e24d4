use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use crn_sens::oracle::{self, Partial};
use crn_sens::{
    parse_model, run_estimator, sample_first_order, sample_output, sample_second_order, EstimatorConfig,
    FiniteDifference, Model, RunOptions,
};

mod record;

use record::{OracleRecord, ResultRecord};

#[derive(Parser)]
#[command(name = "crn-sens", version, about = "Monte Carlo sensitivities for stochastic reaction networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expected output E[f(X(t))] by plain simulation
    Mean {
        #[command(flatten)]
        run: RunArgs,
    },
    /// First-order sensitivity in one parameter
    Sens1 {
        #[command(flatten)]
        run: RunArgs,
        /// Zero-based parameter index
        #[arg(long)]
        param: usize,
        /// Auxiliary path density
        #[arg(short, default_value_t = 1.0)]
        c: f64,
    },
    /// Unbiased second-order sensitivity
    Sens2 {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        pi: usize,
        #[arg(long)]
        pj: usize,
        #[arg(short, default_value_t = 1.0)]
        c: f64,
    },
    /// Four-point finite difference with common random numbers
    Fd2 {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        pi: usize,
        #[arg(long)]
        pj: usize,
        #[arg(long)]
        eps: f64,
    },
    /// Closed-form mean and derivatives of the linear birth-death network
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    /// Model file (JSON)
    #[arg(long)]
    model: PathBuf,
    /// Time horizon
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads, 0 for all cores
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct OracleArgs {
    /// mean, d1, d2, d11, d12 or d22 (1 = birth rate, 2 = death rate)
    #[arg(long, default_value = "mean")]
    what: String,
    #[arg(long, default_value_t = 0.0)]
    x0: f64,
    #[arg(long)]
    birth: f64,
    #[arg(long)]
    death: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Evaluate the four-point finite difference of the mean instead
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

fn check_param(model: &Model, q: usize) -> Result<String> {
    match model.parameter_names.get(q) {
        Some(name) => Ok(name.clone()),
        None => bail!(
            "parameter index {q} out of range: the model has {} parameters",
            model.parameter_names.len()
        ),
    }
}

fn estimate(
    name: &'static str,
    run: &RunArgs,
    sampler: impl Fn(&crn_sens::StreamKey) -> crn_sens::Result<f64> + Sync,
) -> Result<ResultRecord> {
    let opts = RunOptions::new(run.samples, run.seed).workers(run.workers);
    let r = run_estimator(sampler, &opts)?;
    Ok(ResultRecord::new(name, &run.model, run.t, run.seed, &r))
}

fn load(run: &RunArgs) -> Result<Model> {
    if run.samples < 2 {
        bail!("--samples must be at least 2 to estimate a variance, got {}", run.samples);
    }
    Ok(parse_model(&run.model)?)
}

fn execute(command: Command) -> Result<String> {
    let (rec, format) = match command {
        Command::Mean { run } => {
            let m = load(&run)?;
            let rec = estimate("mean", &run, |k| sample_output(&m.network, &m.initial_state, &m.output, &m.theta, run.t, k))?;
            (rec, run.format)
        }
        Command::Sens1 { run, param, c } => {
            let m = load(&run)?;
            let name = check_param(&m, param)?;
            let mut rec = estimate("sens1", &run, |k| {
                sample_first_order(&m.network, &m.initial_state, &m.output, &m.theta, param, run.t, c, k)
            })?;
            rec.c = Some(c);
            rec.param_i = Some(param);
            rec.param_i_name = Some(name);
            (rec, run.format)
        }
        Command::Sens2 { run, pi, pj, c } => {
            let m = load(&run)?;
            let names = (check_param(&m, pi)?, check_param(&m, pj)?);
            let cfg = EstimatorConfig { t: run.t, c, i: pi, j: pj, n_samples: run.samples };
            cfg.validate(&m.network)?;
            let mut rec = estimate("sens2", &run, |k| {
                sample_second_order(&m.network, &m.initial_state, &m.output, &m.theta, &cfg, k)
            })?;
            rec.c = Some(c);
            rec.set_pair(pi, pj, names);
            (rec, run.format)
        }
        Command::Fd2 { run, pi, pj, eps } => {
            let m = load(&run)?;
            let names = (check_param(&m, pi)?, check_param(&m, pj)?);
            let fd = FiniteDifference::new(&m.network, &m.theta, pi, pj, eps)?;
            let mut rec = estimate("fd2", &run, |k| fd.sample(&m.initial_state, &m.output, run.t, k))?;
            rec.eps = Some(eps);
            rec.set_pair(pi, pj, names);
            (rec, run.format)
        }
        Command::Oracle(args) => return oracle_record(&args)?.render(args.format),
    };
    rec.render(format)
}

fn oracle_record(args: &OracleArgs) -> Result<OracleRecord> {
    let which: Partial = args.what.parse()?;
    let value = match args.eps {
        None => oracle::linear_bd_sens(args.x0, args.birth, args.death, args.t, which)?,
        Some(eps) => {
            let (i, j) = match which {
                Partial::D11 => (0, 0),
                Partial::D12 => (0, 1),
                Partial::D22 => (1, 1),
                _ => bail!("--eps needs a second-order partial (d11, d12 or d22)"),
            };
            let mean = |th: &[f64]| oracle::linear_bd_mean(args.x0, th[0], th[1], args.t);
            oracle::fd_on_oracle(i, j, eps, mean, &[args.birth, args.death])?
        }
    };
    Ok(OracleRecord {
        command: "oracle",
        what: args.what.clone(),
        x0: args.x0,
        birth: args.birth,
        death: args.death,
        t: args.t,
        eps: args.eps,
        value,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let written = execute(cli.command).and_then(|text| {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())?;
        out.flush()?;
        Ok(())
    });
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
