//! `cpvsoil` command-line front end.
//!
//! Exit status: 0 on success, 1 for bad or missing input, 2 when a
//! computation on valid input fails. Failures print a JSON object
//! `{"error": {"kind": ..., "message": ...}}` on standard output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cpvsoil::io::{load_campaign_dir, read_spectrum, weekly_csv, write_campaign_dir};
use cpvsoil::reference::provenance_hash;
use cpvsoil::synth::{synth_campaign, CampaignScenario};
use cpvsoil::{index_report, run_campaign, Aggregation, BundledCell, CampaignOptions, CellModel};
use serde_json::json;

const DATA_ENV: &str = "CPVSOIL_DATA";

#[derive(Parser)]
#[command(
    name = "cpvsoil",
    about = "Spectral soiling indexes for multi-junction CPV",
    disable_version_flag = true
)]
struct Cli {
    /// Print the version and the bundled reference-spectrum hash.
    #[arg(long)]
    version: bool,

    /// Progress messages on standard error.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Index report for one spectrum and one transmittance curve.
    Compute {
        /// Irradiance spectrum CSV.
        #[arg(long)]
        spectrum: PathBuf,
        /// Transmittance CSV.
        #[arg(long)]
        tau: PathBuf,
        #[command(flatten)]
        cell: CellArg,
    },
    /// Screen and evaluate a campaign directory.
    Campaign {
        /// Campaign directory.
        #[arg(long, env = DATA_ENV)]
        data: PathBuf,
        /// Output directory for campaign.json, weekly.csv and fits.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "daily", value_parser = ["noon", "daily"])]
        aggregation: String,
        /// Maximum AST_MJ spread within a replicate triplet.
        #[arg(long, default_value_t = cpvsoil::pipeline::DEFAULT_SPREAD_THRESHOLD)]
        spread_threshold: f64,
        #[command(flatten)]
        cell: CellArg,
    },
    /// Generate a synthetic campaign directory from a scenario file.
    Synth {
        /// Scenario TOML.
        #[arg(long)]
        scenario: PathBuf,
        /// Directory to create; an existing one must be empty or a previous
        /// campaign directory.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        cell: CellArg,
    },
}

#[derive(Args)]
struct CellArg {
    /// Cell config TOML, or `builtin:3j`, `builtin:3j-boxcar`, `builtin:2j-toy`.
    #[arg(long, default_value = "builtin:3j")]
    cell: String,
}

impl CellArg {
    fn path(&self) -> Option<&Path> {
        (!self.cell.starts_with("builtin:")).then(|| Path::new(&self.cell))
    }

    fn load(&self) -> Result<CellModel, Failure> {
        match self.cell.strip_prefix("builtin:") {
            Some(name) => {
                let which: BundledCell = name
                    .parse()
                    .map_err(|e: cpvsoil::Error| Failure::usage(e.to_string()))?;
                Ok(CellModel::bundled(which))
            }
            None => Ok(CellModel::load(Path::new(&self.cell))?),
        }
    }
}

/// Errors raised by the front end itself, next to those of the library.
enum Failure {
    Lib(cpvsoil::Error),
    Usage(String),
    OutputNotEmpty(PathBuf),
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure::Usage(message.into())
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Lib(e) => e.kind(),
            Failure::Usage(_) => "Usage",
            Failure::OutputNotEmpty(_) => "OutputNotEmpty",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Lib(e) => e.to_string(),
            Failure::Usage(m) => m.clone(),
            Failure::OutputNotEmpty(p) => {
                format!("{} exists and is not a campaign directory", p.display())
            }
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            Failure::Lib(e) if !e.is_input_error() => 2,
            _ => 1,
        }
    }
}

impl From<cpvsoil::Error> for Failure {
    fn from(e: cpvsoil::Error) -> Self {
        Failure::Lib(e)
    }
}

fn require_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(cpvsoil::Error::FileNotFound(path.to_path_buf()).into())
    }
}

fn log(verbose: bool, msg: impl AsRef<str>) {
    if verbose {
        eprintln!("cpvsoil: {}", msg.as_ref());
    }
}

/// Writes `contents` next to `path` and renames it into place.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let io = |e: std::io::Error| Failure::Lib(cpvsoil::Error::io(path, e));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn to_json(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("results serialize");
    s.push('\n');
    s
}

fn compute(spectrum: &Path, tau: &Path, cell: &CellArg) -> Result<(), Failure> {
    require_file(spectrum)?;
    require_file(tau)?;
    if let Some(p) = cell.path() {
        require_file(p)?;
    }
    let cell = cell.load()?;
    let e = read_spectrum(spectrum)?;
    let t = read_spectrum(tau)?;
    let report = index_report(&e, &cell, &t)?;
    print!("{}", to_json(&report));
    Ok(())
}

fn campaign(
    data: &Path,
    out: &Path,
    aggregation: &str,
    spread_threshold: f64,
    cell: &CellArg,
    verbose: bool,
) -> Result<(), Failure> {
    if !data.is_dir() {
        return Err(cpvsoil::Error::FileNotFound(data.to_path_buf()).into());
    }
    if let Some(p) = cell.path() {
        require_file(p)?;
    }
    if spread_threshold.is_nan() || spread_threshold < 0.0 {
        return Err(Failure::usage("--spread-threshold must be non-negative"));
    }
    let aggregation: Aggregation = aggregation
        .parse()
        .map_err(|e: cpvsoil::Error| Failure::usage(e.to_string()))?;
    let cell = cell.load()?;
    let (weeks, days) = load_campaign_dir(data)?;
    log(
        verbose,
        format!("loaded {} weeks and {} field days", weeks.len(), days.len()),
    );

    let opts = CampaignOptions {
        aggregation,
        spread_threshold,
        ..CampaignOptions::default()
    };
    let result = run_campaign(&weeks, &days, &cell, &opts);
    log(
        verbose,
        format!(
            "{} of {} weeks accepted",
            result.summary.accepted_weeks, result.summary.total_weeks
        ),
    );

    fs::create_dir_all(out).map_err(|e| cpvsoil::Error::io(out, e))?;
    write_atomic(&out.join("campaign.json"), to_json(&result).as_bytes())?;
    write_atomic(&out.join("weekly.csv"), weekly_csv(&result).as_bytes())?;
    let fits = json!({ "fits": result.fits, "fit_errors": result.fit_errors });
    write_atomic(&out.join("fits.json"), to_json(&fits).as_bytes())?;
    Ok(())
}

fn synth(
    scenario: &Path,
    out: &Path,
    seed: Option<u64>,
    cell: &CellArg,
    verbose: bool,
) -> Result<(), Failure> {
    require_file(scenario)?;
    if let Some(p) = cell.path() {
        require_file(p)?;
    }
    let replaceable = match fs::read_dir(out) {
        Ok(mut entries) => entries.next().is_none() || out.join(cpvsoil::io::WEEKS_FILE).is_file(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => true,
        Err(e) => return Err(cpvsoil::Error::io(out, e).into()),
    };
    if !replaceable {
        return Err(Failure::OutputNotEmpty(out.to_path_buf()));
    }

    let text = fs::read_to_string(scenario).map_err(|e| cpvsoil::Error::io(scenario, e))?;
    let mut scenario = CampaignScenario::from_toml_str(&text)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let cell = cell.load()?;
    let generated = synth_campaign(&scenario, &cell)?;
    log(
        verbose,
        format!("generated {} weeks", generated.weeks.len()),
    );

    // Build the directory beside its destination, then swap it in.
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(parent).map_err(|e| cpvsoil::Error::io(parent, e))?;
    let staging = tempfile::Builder::new()
        .prefix(".cpvsoil-synth")
        .tempdir_in(parent)
        .map_err(|e| cpvsoil::Error::io(parent, e))?;
    write_campaign_dir(staging.path(), &generated)?;
    if out.exists() {
        fs::remove_dir_all(out).map_err(|e| cpvsoil::Error::io(out, e))?;
    }
    let staged = staging.keep();
    fs::rename(&staged, out).map_err(|e| cpvsoil::Error::io(out, e))?;
    Ok(())
}

fn fail(f: &Failure) -> ExitCode {
    let obj = json!({ "error": { "kind": f.kind(), "message": f.message() } });
    println!("{obj}");
    ExitCode::from(f.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return fail(&Failure::usage(e.kind().to_string()));
        }
    };
    if cli.version {
        println!("cpvsoil {}", env!("CARGO_PKG_VERSION"));
        println!("reference spectrum sha256 {}", provenance_hash());
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        return fail(&Failure::usage(
            "a subcommand is required (compute, campaign, synth)",
        ));
    };
    let verbose = cli.verbose;
    let outcome = match &command {
        Command::Compute {
            spectrum,
            tau,
            cell,
        } => compute(spectrum, tau, cell),
        Command::Campaign {
            data,
            out,
            aggregation,
            spread_threshold,
            cell,
        } => campaign(data, out, aggregation, *spread_threshold, cell, verbose),
        Command::Synth {
            scenario,
            out,
            seed,
            cell,
        } => synth(scenario, out, *seed, cell, verbose),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(&f),
    }
}
