use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use nail_core::nir::{parse_circuit, parse_int, print_circuit, Circuit, ParseError};
use nail_core::scanchain::{emit_companion, ConfigError, DescriptorError, PackedConfig, ScanChainDescriptor, ScanConfig};
use nail_core::sim::{diff_runs, run_campaign, LoadMode, Schedule, SimError, Stimulus, Trace};
use nail_core::transforms::{instrument, overhead, parse_annotations, AnnotationError, TransformError};

const EXIT_IO: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_VALIDATE: u8 = 4;
const EXIT_CHECKSUM: u8 = 5;

#[derive(Parser)]
#[command(name = "nail", version, about = "Scan-chain fault injection for NIR designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Insert injectors, conditioners and scan chains as annotated.
    Instrument {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        /// Instrumented NIR output.
        #[arg(long)]
        out: PathBuf,
        /// Descriptor output; must contain `{chain}` when there are several chains.
        #[arg(long)]
        descriptor: String,
    },
    /// Pack field settings into a checksummed configuration file.
    Pack {
        #[arg(long)]
        descriptor: PathBuf,
        /// `component.field=value`, decimal or 0x-hex. Unset fields are 0.
        #[arg(long = "set", value_name = "COMPONENT.FIELD=VALUE")]
        sets: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit a C header with field offsets and widths.
    Companion {
        #[arg(long)]
        descriptor: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run golden and faulty simulations and compare their outputs.
    Run {
        #[arg(long)]
        baseline: PathBuf,
        /// Instrumented design.
        #[arg(long)]
        design: PathBuf,
        /// Packed configuration, optionally prefixed with `chain=`.
        #[arg(long = "config", value_name = "[CHAIN=]PATH", required = true)]
        configs: Vec<String>,
        #[arg(long)]
        stimulus: PathBuf,
        #[arg(long, default_value_t = 0)]
        load_at: u64,
        #[arg(long)]
        enable_at: u64,
        #[arg(long)]
        disable_at: Option<u64>,
        #[arg(long, value_enum, default_value_t = Mode::Serial)]
        mode: Mode,
        /// Chain for configs given without a `chain=` prefix.
        #[arg(long)]
        chain: Option<String>,
        /// Fault events, one JSON object per line.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Divergence report JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        golden_trace: Option<PathBuf>,
        #[arg(long)]
        faulty_trace: Option<PathBuf>,
    },
    /// Compare two recorded traces.
    Diff {
        #[arg(long)]
        golden: PathBuf,
        #[arg(long)]
        faulty: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Serial,
    Broadside,
}

impl From<Mode> for LoadMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Serial => LoadMode::Serial,
            Mode::Broadside => LoadMode::Broadside,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, data: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, data).with_context(|| format!("writing {}", path.display()))
}

fn load_circuit(path: &Path) -> Result<Circuit> {
    parse_circuit(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_descriptor(path: &Path) -> Result<ScanChainDescriptor> {
    ScanChainDescriptor::from_json(&read(path)?).with_context(|| format!("loading descriptor {}", path.display()))
}

fn cmd_instrument(design: &Path, annotations: &Path, out: &Path, descriptor: &str) -> Result<()> {
    let c = load_circuit(design)?;
    let anns = parse_annotations(&read(annotations)?).with_context(|| format!("parsing {}", annotations.display()))?;
    let (inst, descs) = instrument(&c, &anns)?;
    if descs.len() > 1 && !descriptor.contains("{chain}") {
        bail!("{} chains produced; the descriptor path needs a `{{chain}}` placeholder", descs.len());
    }
    write(out, print_circuit(&inst))?;
    for d in &descs {
        write(Path::new(&descriptor.replace("{chain}", &d.chain_id)), d.to_json() + "\n")?;
    }
    let report = overhead(&c, &inst, &descs).map_err(|d| anyhow!("{d}"))?;
    println!("{report}");
    Ok(())
}

fn cmd_pack(descriptor: &Path, sets: &[String], out: &Path) -> Result<()> {
    let d = load_descriptor(descriptor)?;
    let mut cfg = ScanConfig::new(Arc::new(d));
    for s in sets {
        let (key, value) = s.split_once('=').ok_or_else(|| anyhow!("`{s}`: expected component.field=value"))?;
        let (comp, field) = key.rsplit_once('.').ok_or_else(|| anyhow!("`{key}`: expected component.field"))?;
        let v = parse_int(value.trim()).ok_or_else(|| anyhow!("`{value}` is not a decimal or 0x-hex number"))?;
        cfg.set(comp.trim(), field.trim(), v)?;
    }
    cfg.check()?;
    write(out, cfg.pack().to_bytes())
}

fn cmd_companion(descriptor: &Path, out: &Path) -> Result<()> {
    write(out, emit_companion(&load_descriptor(descriptor)?)?)
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    baseline: &Path,
    design: &Path,
    configs: &[String],
    stimulus: &Path,
    schedule: Schedule,
    mode: Mode,
    chain: Option<&str>,
    log: Option<&Path>,
    report: Option<&Path>,
    traces: [Option<&Path>; 2],
) -> Result<()> {
    let base = load_circuit(baseline)?;
    let inst = load_circuit(design)?;
    let stim = Stimulus::from_json(&read(stimulus)?).with_context(|| format!("loading {}", stimulus.display()))?;
    let mut packed = Vec::new();
    for arg in configs {
        let (name, path) = match arg.split_once('=') {
            Some((c, p)) => (c.to_string(), p),
            None => (default_chain(&inst, chain)?, arg.as_str()),
        };
        let bytes = fs::read(path).with_context(|| format!("reading {path}"))?;
        let p = PackedConfig::from_bytes(&bytes).with_context(|| format!("loading {path}"))?;
        packed.push((name, p));
    }
    let r = run_campaign(&base, &inst, &packed, &stim, &schedule, mode.into())?;
    if let Some(path) = log {
        let mut text = Vec::new();
        for e in &r.log {
            serde_json::to_writer(&mut text, e)?;
            text.push(b'\n');
        }
        write(path, text)?;
    }
    let report_json = serde_json::to_string_pretty(&r.report)? + "\n";
    match report {
        Some(path) => write(path, &report_json)?,
        None => std::io::stdout().write_all(report_json.as_bytes())?,
    }
    for (path, trace) in traces.into_iter().zip([&r.golden, &r.faulty]) {
        if let Some(path) = path {
            write(path, serde_json::to_string(trace)? + "\n")?;
        }
    }
    eprintln!("{} fault events; diverged: {}", r.log.len(), r.report.diverged);
    Ok(())
}

/// The `--chain` flag, or the design's only chain.
fn default_chain(inst: &Circuit, chain: Option<&str>) -> Result<String> {
    if let Some(c) = chain {
        return Ok(c.to_string());
    }
    let h = nail_core::sim::Harness::new(inst)?;
    match h.chains() {
        [only] => Ok(only.chain_id.clone()),
        chains => bail!("design has {} chains; prefix the config with `chain=` or pass --chain", chains.len()),
    }
}

fn cmd_diff(golden: &Path, faulty: &Path, report: Option<&Path>) -> Result<()> {
    let load = |p: &Path| -> Result<Trace> {
        serde_json::from_str(&read(p)?).with_context(|| format!("parsing trace {}", p.display()))
    };
    let r = diff_runs(&load(golden)?, &load(faulty)?)?;
    let json = serde_json::to_string_pretty(&r)? + "\n";
    match report {
        Some(path) => write(path, json),
        None => Ok(std::io::stdout().write_all(json.as_bytes())?),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<std::io::Error>() {
            return EXIT_IO;
        }
        if cause.is::<ParseError>() || cause.is::<AnnotationError>() || cause.is::<serde_json::Error>() {
            return EXIT_PARSE;
        }
        if let Some(e) = cause.downcast_ref::<DescriptorError>() {
            return if matches!(e, DescriptorError::Json(_)) { EXIT_PARSE } else { EXIT_VALIDATE };
        }
        let config = cause
            .downcast_ref::<ConfigError>()
            .or_else(|| match cause.downcast_ref::<SimError>() {
                Some(SimError::Config(e)) => Some(e),
                _ => None,
            });
        if let Some(e) = config {
            return if matches!(e, ConfigError::Checksum { .. }) { EXIT_CHECKSUM } else { EXIT_VALIDATE };
        }
        if let Some(e) = cause.downcast_ref::<SimError>() {
            return if matches!(e, SimError::Stimulus(_)) { EXIT_PARSE } else { EXIT_VALIDATE };
        }
        if cause.is::<TransformError>() {
            return EXIT_VALIDATE;
        }
    }
    1
}

fn main() -> ExitCode {
    // Usage errors exit 1 so that 2 stays reserved for IO failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Instrument { design, annotations, out, descriptor } => {
            cmd_instrument(design, annotations, out, descriptor)
        }
        Command::Pack { descriptor, sets, out } => cmd_pack(descriptor, sets, out),
        Command::Companion { descriptor, out } => cmd_companion(descriptor, out),
        Command::Run {
            baseline,
            design,
            configs,
            stimulus,
            load_at,
            enable_at,
            disable_at,
            mode,
            chain,
            log,
            report,
            golden_trace,
            faulty_trace,
        } => cmd_run(
            baseline,
            design,
            configs,
            stimulus,
            Schedule { load_cycle: *load_at, enable_cycle: *enable_at, disable_cycle: *disable_at },
            *mode,
            chain.as_deref(),
            log.as_deref(),
            report.as_deref(),
            [golden_trace.as_deref(), faulty_trace.as_deref()],
        ),
        Command::Diff { golden, faulty, report } => cmd_diff(golden, faulty, report.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
