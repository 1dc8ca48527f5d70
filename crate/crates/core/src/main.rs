use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use uavsem::harness::report::write_sweep_outputs;
use uavsem::harness::trial::{plan_schedule, predict, realize_trial_channel};
use uavsem::harness::{
    run_sweep, run_trial, trial_seed, ExperimentConfig, Method, Prepared, SweepKind, TrialParams,
};
use uavsem::Error;

#[derive(Parser)]
#[command(
    name = "uavsem",
    version,
    about = "Predictive structure/texture image transmission over a slotted UAV downlink"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory (sweeps) or file (channel-trace, schedule).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single trial and print its report as JSON.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        method: Option<String>,
        /// Trial index (selects the image and the channel/noise seeds).
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// PSNR/SSIM versus mean realized SNR.
    SweepSnr {
        #[command(flatten)]
        common: Common,
        /// Also write plot.svg.
        #[arg(long)]
        plot: bool,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// PSNR/SSIM versus prediction error std at fixed mean SNR.
    SweepMismatch {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        plot: bool,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Dump the realized horizon channel of one trial as CSV.
    ChannelTrace {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Print the block-to-slot assignment of one trial as CSV.
    Schedule {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        method: Option<String>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
}

fn load_config(common: &Common) -> uavsem::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
    }
    cfg.finalize()?;
    Ok(cfg)
}

fn output(path: Option<&PathBuf>) -> uavsem::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn run(cli: Cli) -> uavsem::Result<()> {
    match cli.command {
        Command::Simulate {
            common,
            method,
            trial,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(m) = method {
                cfg.method = m.parse()?;
            }
            let prepared = Prepared::load(&cfg)?;
            let out = run_trial(
                &cfg,
                &prepared,
                cfg.method,
                trial,
                TrialParams::from_config(&cfg),
            )?;
            println!("{}", serde_json::to_string_pretty(&out.row)?);
            if let Some(dir) = &common.out {
                std::fs::create_dir_all(dir)?;
                std::fs::write(
                    dir.join("report.json"),
                    serde_json::to_vec_pretty(&out.row)?,
                )?;
                uavsem::codec::save_png(&out.reconstruction, &dir.join("reconstruction.png"))?;
            }
            Ok(())
        }
        Command::SweepSnr {
            common,
            plot,
            threads,
        } => sweep(common, plot, threads, SweepKind::Snr, "sweep-snr"),
        Command::SweepMismatch {
            common,
            plot,
            threads,
        } => sweep(common, plot, threads, SweepKind::Mismatch, "sweep-mismatch"),
        Command::ChannelTrace { common, trial } => {
            let cfg = load_config(&common)?;
            let channel =
                realize_trial_channel(&cfg, trial_seed(cfg.seed, trial), cfg.target_mean_snr_db)?;
            channel.horizon.write_csv(output(common.out.as_ref())?)?;
            Ok(())
        }
        Command::Schedule {
            common,
            method,
            trial,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(m) = method {
                cfg.method = m.parse()?;
            }
            if cfg.method == Method::SingleStream {
                return Err(Error::Config("schedule needs a block-based method".into()));
            }
            let seed = trial_seed(cfg.seed, trial);
            let channel = realize_trial_channel(&cfg, seed, cfg.target_mean_snr_db)?;
            let pred = predict(&cfg, &channel, seed, cfg.sigma_err_db)?;
            match plan_schedule(&cfg, cfg.method, &pred)? {
                Some((_, schedule)) => schedule.write_csv(output(common.out.as_ref())?)?,
                None => return Err(Error::NoUsableSlots),
            }
            Ok(())
        }
    }
}

fn sweep(
    common: Common,
    plot: bool,
    threads: usize,
    kind: SweepKind,
    name: &str,
) -> uavsem::Result<()> {
    let cfg = load_config(&common)?;
    let prepared = Prepared::load(&cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let result = pool.install(|| run_sweep(&cfg, &prepared, kind))?;
    let dir = common.out.unwrap_or_else(|| PathBuf::from("out"));
    write_sweep_outputs(&dir, name, &cfg, &result, plot)?;
    let mut stdout = std::io::stdout().lock();
    uavsem::harness::report::write_results_csv(&result.rows, &mut stdout)?;
    if let Some(f) = result.failures.first() {
        return Err(Error::Calibration(format!(
            "{} grid point(s) failed; first at {}: {}",
            result.failures.len(),
            f.value,
            f.error
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidParameter(_) => ExitCode::from(2),
                Error::Calibration(_) => ExitCode::from(3),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
