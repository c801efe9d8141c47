mod commands;
mod config;
mod failure;
mod figures;
mod output;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use config::{apply_override, ConfigError, RunConfig};
use failure::{Failure, Outcome};
use figures::Figure;
use output::Artifacts;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "bilattice", version, about = "Emitters in bilayer square-lattice photonic baths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Both bands on the k-grid
    Bands,
    /// Density of states histogram
    Dos,
    /// Small-atom bound state
    Boundstate,
    /// Giant-atom bound state
    Giant,
    /// Effective spin couplings of an emitter array
    Spinmodel,
    /// Finite spectrum of a spin array with edge and corner labels
    SshSpectrum,
    /// Wilson-loop polarization of the fitted SSH model
    Polarization,
    /// Fidelity dynamics of the star entanglement protocol
    Entangle,
    /// Writes the spin array positions
    Geometry,
    /// Regenerates the data behind a named figure
    ReproduceFigure {
        #[arg(value_enum)]
        figure: Figure,
    },
    /// Validates a config file and prints it in canonical form
    ValidateConfig { path: PathBuf },
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Bands => "bands".into(),
            Command::Dos => "dos".into(),
            Command::Boundstate => "boundstate".into(),
            Command::Giant => "giant".into(),
            Command::Spinmodel => "spinmodel".into(),
            Command::SshSpectrum => "ssh-spectrum".into(),
            Command::Polarization => "polarization".into(),
            Command::Entangle => "entangle".into(),
            Command::Geometry => "geometry".into(),
            Command::ReproduceFigure { figure } => format!("reproduce-figure {}", figure.name()),
            Command::ValidateConfig { .. } => "validate-config".into(),
        }
    }

    /// Blocks a command needs, inserted with defaults when the document
    /// lacks them so that flag overrides have somewhere to land.
    fn required_blocks(&self) -> Vec<(&'static str, Value)> {
        let small = json!({"delta": 0.0, "points": [{"layer": 1, "nx": 0, "ny": 0, "g": 0.1}]});
        let pair = json!({"delta": 0.0, "points": [
            {"layer": 1, "nx": 0, "ny": 0, "g": 0.1},
            {"layer": 1, "nx": 1, "ny": 1, "g": 0.1}
        ]});
        let ssh = json!({"builder": {"kind": "ssh"}});
        match self {
            Command::Boundstate => vec![("emitter", small)],
            Command::Giant => vec![("emitter", pair)],
            Command::Spinmodel | Command::SshSpectrum | Command::Polarization | Command::Geometry => {
                vec![("spins", ssh)]
            }
            Command::Entangle => vec![("entangle", json!({}))],
            _ => vec![],
        }
    }
}

/// Overrides for config keys; values are read as JSON literals, falling
/// back to strings.
#[derive(Args, Debug, Default)]
struct Flags {
    /// Config file (JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long = "Lx", global = true, allow_hyphen_values = true)]
    lx: Option<String>,
    #[arg(long = "Ly", global = true, allow_hyphen_values = true)]
    ly: Option<String>,
    /// Sets both Lx and Ly
    #[arg(long = "L", global = true, allow_hyphen_values = true)]
    l: Option<String>,
    #[arg(long = "J", global = true, allow_hyphen_values = true)]
    j: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    eta: Option<String>,
    #[arg(long = "G", global = true, allow_hyphen_values = true)]
    big_g: Option<String>,
    #[arg(long, global = true)]
    boundary: Option<String>,
    /// Disorder seed (needs a disorder block)
    #[arg(long, global = true, allow_hyphen_values = true)]
    seed: Option<String>,
    #[arg(long, alias = "n_k", global = true, allow_hyphen_values = true)]
    nk: Option<String>,
    #[arg(long, alias = "n_bins", global = true, allow_hyphen_values = true)]
    n_bins: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long, global = true)]
    method: Option<String>,
    #[arg(long, alias = "n_occ", global = true, allow_hyphen_values = true)]
    n_occ: Option<String>,
    #[arg(long, alias = "wilson_n_k", global = true, allow_hyphen_values = true)]
    wilson_n_k: Option<String>,
    /// Emitter-bath coupling of every emitter, spin and spoke present
    #[arg(long, global = true, allow_hyphen_values = true)]
    g: Option<String>,
    /// Emitter detuning
    #[arg(long, global = true, allow_hyphen_values = true)]
    delta: Option<String>,
    #[arg(long, alias = "n_spokes", global = true, allow_hyphen_values = true)]
    n_spokes: Option<String>,
    #[arg(long, alias = "j_eff", global = true, allow_hyphen_values = true)]
    j_eff: Option<String>,
    #[arg(long, alias = "spoke_offset", global = true, allow_hyphen_values = true)]
    spoke_offset: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma: Option<String>,
    #[arg(long, alias = "t_end", global = true, allow_hyphen_values = true)]
    t_end: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    steps: Option<String>,
}

impl Flags {
    fn pointers(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("/out", &self.out),
            ("/lattice/Lx", &self.l),
            ("/lattice/Ly", &self.l),
            ("/lattice/Lx", &self.lx),
            ("/lattice/Ly", &self.ly),
            ("/lattice/J", &self.j),
            ("/lattice/eta", &self.eta),
            ("/lattice/G", &self.big_g),
            ("/lattice/boundary", &self.boundary),
            ("/numerics/n_k", &self.nk),
            ("/numerics/n_bins", &self.n_bins),
            ("/numerics/window", &self.window),
            ("/numerics/method", &self.method),
            ("/numerics/n_occ", &self.n_occ),
            ("/numerics/wilson_n_k", &self.wilson_n_k),
            ("/emitter/delta", &self.delta),
            ("/entangle/n_spokes", &self.n_spokes),
            ("/entangle/j_eff", &self.j_eff),
            ("/entangle/spoke_offset", &self.spoke_offset),
            ("/entangle/gamma", &self.gamma),
            ("/entangle/t_end", &self.t_end),
            ("/entangle/steps", &self.steps),
        ]
    }

    fn apply(&self, doc: &mut Value) -> Result<(), ConfigError> {
        if self.delta.is_some() && doc.get("emitter").is_none_or(Value::is_null) {
            return Err(ConfigError::at("/emitter", "--delta needs an emitter"));
        }
        for (ptr, v) in self.pointers() {
            if let Some(raw) = v {
                apply_override(doc, ptr, raw)?;
            }
        }
        if let Some(raw) = &self.seed {
            if doc.pointer("/lattice/disorder").is_none_or(Value::is_null) {
                return Err(ConfigError::at("/lattice/disorder", "--seed needs a disorder block"));
            }
            apply_override(doc, "/lattice/disorder/seed", raw)?;
        }
        if let Some(raw) = &self.g {
            let n = doc.pointer("/emitter/points").and_then(Value::as_array).map_or(0, Vec::len);
            for i in 0..n {
                apply_override(doc, &format!("/emitter/points/{i}/g"), raw)?;
            }
            for block in ["spins", "entangle"] {
                if doc.get(block).is_some_and(Value::is_object) {
                    apply_override(doc, &format!("/{block}/g"), raw)?;
                }
            }
        }
        Ok(())
    }
}

fn configure_threads() -> Outcome<()> {
    let Ok(raw) = std::env::var("BILATTICE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("BILATTICE_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Config(format!("BILATTICE_THREADS: {e}")))
}

fn resolve(cli: &Cli) -> Outcome<RunConfig> {
    let mut doc = match (&cli.flags.config, &cli.command) {
        (Some(p), _) => config::read_document(p)?,
        (None, Command::ReproduceFigure { figure }) => figure.preset(),
        (None, Command::ValidateConfig { path }) => config::read_document(path)?,
        (None, _) => config::default_document(),
    };
    if let Value::Object(map) = &mut doc {
        for (key, value) in cli.command.required_blocks() {
            if map.get(key).is_none_or(Value::is_null) {
                map.insert(key.to_string(), value);
            }
        }
    }
    cli.flags.apply(&mut doc)?;
    Ok(config::parse(doc)?)
}

fn run(cli: Cli) -> Outcome<()> {
    configure_threads()?;
    let cfg = resolve(&cli)?;
    let canonical = cfg.canonical_json();
    if let Command::ValidateConfig { .. } = cli.command {
        println!("{canonical}");
        return Ok(());
    }
    let name = cli.command.name();
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out").join(name.replace(' ', "_")));
    let mut art = Artifacts::new(&dir)?;
    let start = Instant::now();
    match &cli.command {
        Command::Bands => commands::bands(&cfg, &mut art, "bands.csv")?,
        Command::Dos => commands::dos(&cfg, &mut art, "dos.csv")?,
        Command::Boundstate => commands::boundstate(&cfg, &mut art)?,
        Command::Giant => commands::giant(&cfg, &mut art)?,
        Command::Spinmodel => commands::spinmodel(&cfg, &mut art)?,
        Command::SshSpectrum => commands::ssh_spectrum(&cfg, &mut art)?,
        Command::Polarization => commands::polarization(&cfg, &mut art)?,
        Command::Entangle => commands::entangle(&cfg, &mut art)?,
        Command::Geometry => commands::geometry(&cfg, &mut art)?,
        Command::ReproduceFigure { figure } => figure.run(&cfg, &mut art)?,
        Command::ValidateConfig { .. } => unreachable!(),
    }
    let line = output::summary_line(&art);
    art.finish(&name, &canonical, start.elapsed().as_secs_f64())?;
    println!("{line}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: usage: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
