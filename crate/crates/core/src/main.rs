#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rateless::channel::{capacity, ebn0_db, modulate, sigma_for_rate, transmit, ChannelParams};
use rateless::codec::{
    bp_decode, codeword, read_stream, state_from_stream, write_stream, ReceptionProfile,
    StreamRecord, TransmissionSchedule, DEFAULT_MAX_ITERS,
};
use rateless::construct::{build_graph, CodeSpec, DEFAULT_D_MAX};
use rateless::degdist::DegreeDistribution;
use rateless::error::{Error, Result};
use rateless::exitchart::{cnd_inverted_curve, lambda_for, threshold, vnd_curve, AnalysisSettings};
use rateless::harness::{sweep, write_results, ExperimentConfig};
use rateless::optimizer::{optimize, OptProblem};
use rateless::rng::{derive_seed, from_seed};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rateless", version, about = "Ball-into-bin rateless codes over BPSK/AWGN")]
struct Cli {
    /// Seed for constructions, messages and noise.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print `rate,sigma,ebn0_db` for a rate or a noise level.
    Capacity {
        #[arg(long, conflicts_with = "sigma", required_unless_present = "sigma")]
        rate: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Write a code spec (JSON) and optionally the parity-check dump.
    Construct {
        /// Rebuild from an existing spec file instead of the flags below.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0.3)]
        delta: f64,
        #[arg(long, default_value = "0.475*x^3 + 0.525*x^6")]
        omega: String,
        #[arg(long)]
        l_total: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_D_MAX)]
        d_max: u32,
        /// Parity-check matrix dump destination.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Encode a random message, transmit it, and decode from the stream file.
    Roundtrip {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        sigma: f64,
        /// Number of scheduled symbols to send.
        #[arg(long)]
        symbols: usize,
        /// Stream CSV to write and decode from.
        #[arg(long)]
        stream: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
        max_iters: usize,
    },
    /// EXIT curves as CSV `I_in,vnd,cnd_inverted`.
    Exit {
        #[arg(long)]
        omega: String,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 0.0)]
        rho0: f64,
        #[arg(long, default_value_t = 0.3)]
        delta: f64,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Decoding threshold sigma for a distribution at a given rate.
    Threshold {
        #[arg(long)]
        omega: String,
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 0.3)]
        delta: f64,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Degree-distribution search; prints the result as JSON.
    Optimize {
        #[arg(long)]
        config: PathBuf,
    },
    /// BER-vs-overhead sweep; prints CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Use the two-point regular approximation for the variable degrees.
    #[arg(long)]
    regular: bool,
}

impl ModelArgs {
    fn settings(&self) -> AnalysisSettings {
        if self.regular {
            AnalysisSettings::regular()
        } else {
            AnalysisSettings::default()
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }
    let seed = cli.seed.unwrap_or(1);
    match cli.command {
        Command::Capacity { rate, sigma } => {
            let (rate, sigma) = match (rate, sigma) {
                (Some(r), _) if r > 0.0 && r < 1.0 => (r, sigma_for_rate(r)),
                (None, Some(s)) if s > 0.0 => (capacity(s), s),
                _ => return Err(Error::InvalidConfig("rate must lie in (0, 1) and sigma be positive".into())),
            };
            emit(&cli.out, &format!("{rate},{sigma},{}\n", ebn0_db(rate, sigma)))
        }
        Command::Construct { spec, k, delta, omega, l_total, d_max, dump } => {
            let spec = match spec {
                Some(p) => CodeSpec::from_json(&read(&p)?)?,
                None => {
                    let k = k.ok_or_else(|| Error::InvalidConfig("--k or --spec is required".into()))?;
                    let omega: DegreeDistribution = omega.parse()?;
                    let s = CodeSpec::new(k, delta, omega, seed).with_d_max(d_max);
                    let l = l_total.unwrap_or(s.l_total);
                    s.with_l_total(l)
                }
            };
            let graph = build_graph(&spec)?;
            if let Some(p) = dump {
                fs::write(p, graph.dump())?;
            }
            emit(&cli.out, &(spec.to_json()? + "\n"))
        }
        Command::Roundtrip { spec, sigma, symbols, stream, max_iters } => {
            let spec = CodeSpec::from_json(&read(&spec)?)?;
            let graph = build_graph(&spec)?;
            let channel = ChannelParams::new(sigma);
            let mut rng = from_seed(derive_seed(seed, 1));
            let message: Vec<u8> = (0..spec.k).map(|_| rng.random_range(0..2u8)).collect();
            let word = codeword(&graph, &message);
            let schedule = TransmissionSchedule::new(&spec);
            if symbols > schedule.len() {
                return Err(Error::InvalidConfig(format!("spec holds only {} symbols", schedule.len())));
            }
            let records = stream_records(&schedule, &word, symbols, &channel, &mut rng);
            let state = match &stream {
                Some(p) => {
                    write_stream(fs::File::create(p)?, &records)?;
                    state_from_stream(&graph, &read_stream(fs::File::open(p)?)?, &channel)?
                }
                None => state_from_stream(&graph, &records, &channel)?,
            };
            let out = bp_decode(&graph, &state, max_iters);
            let errors = out.bits.iter().zip(&message).filter(|(a, b)| a != b).count();
            emit(
                &cli.out,
                &format!(
                    "symbols,rho0,converged,iters,bit_errors\n{symbols},{},{},{},{errors}\n",
                    state.rho0(),
                    out.converged,
                    out.iters
                ),
            )
        }
        Command::Exit { omega, sigma, rho0, delta, model } => {
            let omega: DegreeDistribution = omega.parse()?;
            if !(sigma > 0.0) || !(0.0..1.0).contains(&rho0) {
                return Err(Error::InvalidConfig("sigma must be positive and rho0 in [0, 1)".into()));
            }
            let settings = model.settings();
            let lambda = lambda_for(&omega, &ReceptionProfile::from_rho0(rho0, delta), &settings.lambda)?;
            let vnd = vnd_curve(&lambda, 2.0 / sigma, rho0, &settings.grid);
            let cnd = cnd_inverted_curve(&omega, &settings.grid);
            let mut text = String::from("I_in,vnd,cnd_inverted\n");
            for ((i, v), c) in settings.grid.iter().zip(&vnd.values).zip(&cnd.values) {
                text.push_str(&format!("{i},{v},{c}\n"));
            }
            emit(&cli.out, &text)
        }
        Command::Threshold { omega, rate, delta, model } => {
            let omega: DegreeDistribution = omega.parse()?;
            if !(rate > 0.0 && rate < 1.0) {
                return Err(Error::InvalidConfig("rate must lie in (0, 1)".into()));
            }
            let t = threshold(&omega, rate, delta, &model.settings())?;
            emit(&cli.out, &format!("sigma_th,ebn0_db\n{t},{}\n", ebn0_db(rate, t)))
        }
        Command::Optimize { config } => {
            let problem: OptProblem = serde_json::from_str(&read(&config)?)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let result = optimize(&problem)?;
            emit(&cli.out, &(result.to_json()? + "\n"))
        }
        Command::Sweep { config } => {
            let mut cfg = ExperimentConfig::from_json(&read(&config)?)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            if let Some(s) = cli.seed {
                cfg.master_seed = s;
            }
            let rows = sweep(&cfg)?;
            let mut buf = Vec::new();
            write_results(&mut buf, &rows)?;
            emit(&cli.out, &String::from_utf8_lossy(&buf))
        }
    }
}

fn stream_records(
    schedule: &TransmissionSchedule,
    word: &[u8],
    symbols: usize,
    channel: &ChannelParams,
    rng: &mut impl Rng,
) -> Vec<StreamRecord> {
    schedule
        .iter()
        .take(symbols)
        .map(|(index, subcode)| StreamRecord {
            index,
            subcode,
            y_value: transmit(modulate(word[index]), channel, rng),
        })
        .collect()
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_)
        | Error::InvalidDistribution(_)
        | Error::SpecInvalid(_)
        | Error::Parse(_)
        | Error::Json(_) => 2,
        Error::Infeasible(_) | Error::NoFeasible => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
