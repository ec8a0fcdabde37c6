use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use beamsim::harness::{
    parse_config, qe_table, reproduce_table1, run, sweep_snr, to_json, write_output, Format,
    RunConfig, Scheme, SweepSetting,
};
use beamsim::{Error, Result};

#[derive(Parser)]
#[command(name = "beamsim", about = "Beamspace MIMO link-level simulator", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Master RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials per configuration.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format: csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single configuration (optionally from a config file).
    Run(RunArgs),
    /// Reproduce the five-row rate-loss table.
    Table1,
    /// Rate-vs-SNR sweep curves.
    Sweep(SweepArgs),
    /// Quantization-error theory table over an (L, N) grid.
    Qe(QeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value config file (keys: m, k, l, scheme, n_rf, g1, g2, xi,
    /// snr_db, trials, seed, feedback_bits, out, format).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scheme: sbs or hbs.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Channel clusters per user (1..=3).
    #[arg(long)]
    l: Option<usize>,
    /// RF chains for SBS.
    #[arg(long)]
    n_rf: Option<usize>,
    /// Group-1 size for HBS.
    #[arg(long)]
    g1: Option<usize>,
    /// Group-2 size for HBS.
    #[arg(long)]
    g2: Option<usize>,
    /// HBS blend weight in [0, 1].
    #[arg(long)]
    xi: Option<f64>,
    /// Comma-separated SNR points in dB.
    #[arg(long)]
    snr_db: Option<String>,
    /// Fixed feedback-bit budget (default: the bit rule per SNR point).
    #[arg(long)]
    bits: Option<u32>,
}

#[derive(Args)]
struct SweepArgs {
    /// Group sizes: fig2 (32+16) or fig3 (48+32).
    #[arg(long, default_value = "fig2")]
    setting: String,
    /// Comma-separated SNR points in dB (default 0..=20 step 2).
    #[arg(long)]
    snr_db: Option<String>,
    /// Add the indicative full-dimension RVQ baseline ("rvq-full").
    #[arg(long)]
    baseline: Option<String>,
    /// Antenna count for the rvq-full baseline (<= 64).
    #[arg(long, default_value_t = 64)]
    baseline_m: usize,
}

#[derive(Args)]
struct QeArgs {
    /// Comma-separated cluster counts (>= 2).
    #[arg(long, default_value = "2,3")]
    l: String,
    /// Comma-separated bit budgets.
    #[arg(long, default_value = "0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15")]
    n: String,
}

fn parse_list<T: std::str::FromStr>(what: &str, s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("{what}: cannot parse '{v}'")))
        })
        .collect()
}

fn parse_format(s: &str) -> Result<Format> {
    match s {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        other => Err(Error::Parse(format!(
            "format must be 'csv' or 'json', got '{other}'"
        ))),
    }
}

fn build_run_config(args: &RunArgs, global: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(m) = args.m {
        cfg.m = m;
    }
    if let Some(k) = args.k {
        cfg.k = k;
    }
    if let Some(l) = args.l {
        cfg.l = l;
    }
    match args.scheme.as_deref() {
        Some("sbs") => {
            cfg.scheme = Scheme::Sbs {
                n_rf: args.n_rf.ok_or_else(|| {
                    Error::Config("--scheme sbs needs --n-rf".into())
                })?,
            }
        }
        Some("hbs") => {
            cfg.scheme = Scheme::Hbs {
                g1: args
                    .g1
                    .ok_or_else(|| Error::Config("--scheme hbs needs --g1".into()))?,
                g2: args
                    .g2
                    .ok_or_else(|| Error::Config("--scheme hbs needs --g2".into()))?,
                xi: args
                    .xi
                    .ok_or_else(|| Error::Config("--scheme hbs needs --xi".into()))?,
            }
        }
        Some(other) => {
            return Err(Error::Config(format!(
                "scheme must be 'sbs' or 'hbs', got '{other}'"
            )))
        }
        None => {
            // Individual shape flags still apply on top of the config file.
            if let (Scheme::Sbs { .. }, Some(n)) = (cfg.scheme, args.n_rf) {
                cfg.scheme = Scheme::Sbs { n_rf: n };
            }
            if let Scheme::Hbs { g1, g2, xi } = cfg.scheme {
                cfg.scheme = Scheme::Hbs {
                    g1: args.g1.unwrap_or(g1),
                    g2: args.g2.unwrap_or(g2),
                    xi: args.xi.unwrap_or(xi),
                };
            }
        }
    }
    if let Some(list) = &args.snr_db {
        cfg.snr_db = parse_list("snr_db", list)?;
    }
    if let Some(bits) = args.bits {
        cfg.bits_override = Some(bits);
    }
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = global.trials {
        cfg.trials = trials;
    }
    if let Some(out) = &global.out {
        cfg.out = Some(out.display().to_string());
    }
    if let Some(f) = &global.format {
        cfg.format = parse_format(f)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(body: String, out: Option<&PathBuf>) -> Result<()> {
    write_output(&body, out.map(|p| p.as_path()))
}

fn dispatch(cli: &Cli) -> Result<()> {
    let seed = cli.global.seed.unwrap_or(1);
    let trials = cli.global.trials.unwrap_or(10);
    let format = match cli.global.format.as_deref() {
        Some(f) => parse_format(f)?,
        None => Format::Csv,
    };
    match &cli.command {
        Command::Run(args) => {
            let cfg = build_run_config(args, &cli.global)?;
            let report = run(&cfg)?;
            let body = match cfg.format {
                Format::Csv => report.to_csv(),
                Format::Json => to_json(&report)?,
            };
            let out = cfg.out.as_ref().map(PathBuf::from);
            emit(body, out.as_ref())
        }
        Command::Table1 => {
            let report = reproduce_table1(seed, trials)?;
            let body = match format {
                Format::Csv => report.to_csv(),
                Format::Json => to_json(&report)?,
            };
            emit(body, cli.global.out.as_ref())
        }
        Command::Sweep(args) => {
            let setting = match args.setting.as_str() {
                "fig2" => SweepSetting::Fig2,
                "fig3" => SweepSetting::Fig3,
                other => {
                    return Err(Error::Config(format!(
                        "setting must be 'fig2' or 'fig3', got '{other}'"
                    )))
                }
            };
            let snr: Vec<f64> = match &args.snr_db {
                Some(list) => parse_list("snr_db", list)?,
                None => (0..=10).map(|i| 2.0 * i as f64).collect(),
            };
            let baseline = match args.baseline.as_deref() {
                None => None,
                Some("rvq-full") => Some(args.baseline_m),
                Some(other) => {
                    return Err(Error::Config(format!(
                        "unknown baseline '{other}' (only 'rvq-full')"
                    )))
                }
            };
            let report = sweep_snr(setting, &snr, trials, seed, baseline)?;
            let body = match format {
                Format::Csv => report.to_csv(),
                Format::Json => to_json(&report)?,
            };
            emit(body, cli.global.out.as_ref())
        }
        Command::Qe(args) => {
            let ls: Vec<usize> = parse_list("l", &args.l)?;
            let ns: Vec<u32> = parse_list("n", &args.n)?;
            let report = qe_table(&ls, &ns)?;
            let body = match format {
                Format::Csv => report.to_csv(),
                Format::Json => to_json(&report)?,
            };
            emit(body, cli.global.out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
