use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fossos::channel::LosMode;
use fossos::experiment::{
    read_rows, render_report, run_drop_with, run_sweep, summarize, write_rows, write_summary_csv, Manifest,
    ScenarioConfig, SweepSpec,
};
use fossos::frame::render_frame;
use fossos::{Error, Result};

#[derive(Parser)]
#[command(name = "fossos", version, about = "Frequency-selective SDMA-OFDMA downlink simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one drop and print its metrics as JSON.
    Run(RunArgs),
    /// Run a scenario grid and write rows, manifest and summary.
    Sweep(SweepArgs),
    /// Summarize an existing rows CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML scenario file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the text dump of this frame index to stdout after the metrics.
    #[arg(long)]
    dump_frame: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed range `a..b`, `a..=b`, or a comma list; defaults to the config's seeds.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long, value_delimiter = ',')]
    bandwidths: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    antennas: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    users: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    subbands: Option<Vec<usize>>,
    /// `los`, `nlos` or both.
    #[arg(long, value_delimiter = ',')]
    los: Option<Vec<String>>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Rows CSV written by `sweep`.
    #[arg(long)]
    input: PathBuf,
    /// Also write summary.csv into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig> {
    match path {
        Some(p) => ScenarioConfig::load(p),
        None => {
            let cfg = ScenarioConfig::default();
            cfg.validate()?;
            Ok(cfg)
        }
    }
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let num = |s: &str| {
        s.trim()
            .parse::<u64>()
            .map_err(|_| Error::Config(format!("bad seed `{s}`")))
    };
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = text.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        text.split(',').map(num).collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        return Err(Error::Config(format!("seed range `{text}` is empty")));
    }
    Ok(seeds)
}

fn parse_los(s: &str) -> Result<LosMode> {
    match s.trim().to_ascii_lowercase().as_str() {
        "los" => Ok(LosMode::Los),
        "nlos" => Ok(LosMode::Nlos),
        other => Err(Error::Config(format!("unknown LOS mode `{other}`"))),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let mut dump = None;
    let metrics = run_drop_with(&cfg, args.seed, |i, frame| {
        if Some(i) == args.dump_frame {
            dump = Some(render_frame(frame));
        }
    })?;
    let json = serde_json::to_string_pretty(&metrics).map_err(|e| Error::Config(e.to_string()))?;
    println!("{json}");
    eprintln!("wall time {:.3} s", metrics.wall_time_s);
    if let Some(d) = dump {
        print!("{d}");
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let mut spec = SweepSpec::single(&cfg);
    if let Some(s) = &args.seeds {
        spec.seeds = parse_seeds(s)?;
    }
    if let Some(v) = args.bandwidths {
        spec.bandwidths_mhz = v;
    }
    if let Some(v) = args.antennas {
        spec.antennas = v;
    }
    if let Some(v) = args.users {
        spec.num_ms = v;
    }
    if let Some(v) = args.subbands {
        spec.subbands = v;
    }
    if let Some(v) = &args.los {
        spec.los = v.iter().map(|s| parse_los(s)).collect::<Result<_>>()?;
    }
    if spec.num_runs() == 0 {
        return Err(Error::Config("sweep has no runs".into()));
    }
    create_dir(&args.out)?;
    log::info!("running {} drops", spec.num_runs());
    let out = run_sweep(&cfg, &spec, args.jobs)?;
    write_rows(&args.out.join("rows.csv"), &out.rows)?;
    Manifest::new(&cfg, &spec, &out).write(&args.out.join("manifest.json"))?;
    let report = summarize(&out.rows);
    let text = render_report(&report);
    fs::write(args.out.join("summary.txt"), &text).map_err(|e| Error::Io {
        path: args.out.join("summary.txt"),
        source: e,
    })?;
    write_summary_csv(&args.out.join("summary.csv"), &report)?;
    print!("{text}");
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let rows = read_rows(&args.input)?;
    let report = summarize(&rows);
    print!("{}", render_report(&report));
    if let Some(dir) = args.out {
        create_dir(&dir)?;
        write_summary_csv(&dir.join("summary.csv"), &report)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn,fossos::frame::map=error")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (Error::Config(_) | Error::Parse { .. } | Error::McsTable(_))) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
