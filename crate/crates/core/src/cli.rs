//! Command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or a run
//! aborts on a numerical guard, 2 on usage or configuration errors.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::hamiltonians::{validate_resonance, IonParams, LaserFrequencies, LevelEnergies, ResonanceVariant, Severity};
use crate::output::{config_from_manifest, format_f64, table_csv, write_atomic, write_report};
use crate::scenarios::{parse_key_values, parse_real, run, sweep, ScenarioConfig, ScenarioName};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable naming the default output root.
pub const OUT_DIR_ENV: &str = "IONTRAP_OUT_DIR";
const DEFAULT_OUT_ROOT: &str = "iontrap-out";

#[derive(Debug, Parser)]
#[command(
    name = "iontrap",
    version,
    about = "Trapped-ion analogues of optical processes on truncated Fock lattices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its artifacts.
    Run(RunArgs),
    /// Run a scenario over several values of one parameter.
    Sweep(SweepArgs),
    /// Report the resonance and detuning conditions for a parameter set.
    Validate(ValidateArgs),
    /// List the scenario catalog.
    List {
        /// Also print every parameter with its default.
        #[arg(long)]
        params: bool,
    },
}

#[derive(Debug, Args)]
pub struct Overrides {
    /// Parameter override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// key=value file applied before `--set`.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario name; optional with `--from-manifest`.
    pub scenario: Option<String>,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Re-run the configuration echoed in a manifest.
    #[arg(long, value_name = "FILE")]
    pub from_manifest: Option<PathBuf>,
    /// Output directory (default `$IONTRAP_OUT_DIR/<scenario>`).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Also write JSON mirrors of every table and grid.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub scenario: String,
    /// Parameter to vary.
    #[arg(long)]
    pub axis: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<String>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Parses `argv` (including the program name) and runs the command.
pub fn main_with_args<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_USAGE;
            }
            let _ = write!(out, "{e}");
            return EXIT_PASS;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Exit code for an error that aborted a command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::UnknownKey(_)
        | Error::InvalidParams(_)
        | Error::InvalidSpace(_)
        | Error::Truncation { .. }
        | Error::ResonanceFailed(_)
        | Error::FockRange { .. }
        | Error::Io { .. } => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Run(args) => cmd_run(args, out),
        Command::Sweep(args) => cmd_sweep(args, out),
        Command::Validate(args) => cmd_validate(args, out),
        Command::List { params } => cmd_list(params, out),
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn split_assignment(s: &str) -> Result<(&str, &str)> {
    s.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| Error::Config(format!("expected key=value, got `{s}`")))
}

/// All `(key, value)` pairs from `--config` then `--set`, in order.
fn collect_overrides(o: &Overrides) -> Result<Vec<(String, String)>> {
    let mut pairs = match &o.config {
        Some(path) => parse_key_values(&read_text(path)?)?,
        None => Vec::new(),
    };
    for s in &o.set {
        let (k, v) = split_assignment(s)?;
        pairs.push((k.to_string(), v.to_string()));
    }
    Ok(pairs)
}

fn scenario_config(name: &str, o: &Overrides) -> Result<ScenarioConfig> {
    let mut config = ScenarioConfig::new(name.parse()?);
    for (k, v) in collect_overrides(o)? {
        config.set(&k, &v)?;
    }
    config.validate()?;
    Ok(config)
}

fn out_root() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn cmd_run(args: RunArgs, out: &mut dyn Write) -> Result<i32> {
    let config = match (&args.from_manifest, &args.scenario) {
        (Some(path), None) => {
            let mut config = config_from_manifest(&read_text(path)?)?;
            for (k, v) in collect_overrides(&args.overrides)? {
                config.set(&k, &v)?;
            }
            config
        }
        (None, Some(name)) => scenario_config(name, &args.overrides)?,
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "give either a scenario or --from-manifest, not both".into(),
            ))
        }
        (None, None) => return Err(Error::Config("missing scenario name".into())),
    };
    let report = run(&config)?;
    let dir = args.out.unwrap_or_else(|| out_root().join(config.name().as_str()));
    ensure_dir(&dir)?;
    let bundle = write_report(&report, &dir, args.json)?;

    writeln!(out, "scenario {}", config.name()).map_err(io_err)?;
    for w in &report.warnings {
        writeln!(out, "warning: {w}").map_err(io_err)?;
    }
    for c in &report.checks {
        writeln!(out, "{c}").map_err(io_err)?;
    }
    writeln!(out, "manifest {}", bundle.manifest_path().display()).map_err(io_err)?;
    Ok(if report.all_pass() { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_sweep(args: SweepArgs, out: &mut dyn Write) -> Result<i32> {
    let template = scenario_config(&args.scenario, &args.overrides)?;
    let report = sweep(&template, &args.axis, &args.values)?;
    let dir = args
        .out
        .unwrap_or_else(|| out_root().join(format!("{}_sweep_{}", template.name(), args.axis)));
    ensure_dir(&dir)?;
    let table = report.collate();
    write_atomic(&dir.join(format!("{}.csv", table.name)), table_csv(&table).as_bytes())?;

    for r in &report.runs {
        match &r.outcome {
            Ok(rep) => {
                let verdict = if rep.all_pass() { "PASS" } else { "FAIL" };
                writeln!(out, "{verdict} {}={}", args.axis, r.value).map_err(io_err)?;
                for c in rep.checks.iter().filter(|c| !c.pass) {
                    writeln!(out, "  {c}").map_err(io_err)?;
                }
            }
            Err(e) => writeln!(out, "ERROR {}={}: {e}", args.axis, r.value).map_err(io_err)?,
        }
    }
    writeln!(out, "table {}", dir.join(format!("{}.csv", table.name)).display()).map_err(io_err)?;
    Ok(if report.all_pass() { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_list(params: bool, out: &mut dyn Write) -> Result<i32> {
    for name in ScenarioName::ALL {
        writeln!(out, "{:<18} {}", name.as_str(), name.description()).map_err(io_err)?;
        if params {
            for p in name.params() {
                writeln!(out, "    {:<20} {:<8} {}", p.key, p.default, p.help).map_err(io_err)?;
            }
        }
    }
    Ok(EXIT_PASS)
}

/// Parameter keys accepted by `validate`, with defaults.
pub const VALIDATE_KEYS: &[(&str, &str)] = &[
    ("nu_x", "10"),
    ("nu_y", "10"),
    ("rabi_x", "20"),
    ("rabi_y", "20"),
    ("epsilon", "0.1"),
    ("delta", "200"),
    ("m", "1"),
    ("n", "1"),
    ("energy_a", "0"),
    ("energy_b", "35"),
    ("energy_c", "1000"),
    ("variant", "normal"),
    ("laser_x", "resonant"),
    ("laser_y", "resonant"),
];

fn cmd_validate(args: ValidateArgs, out: &mut dyn Write) -> Result<i32> {
    let mut values: BTreeMap<&str, String> = VALIDATE_KEYS.iter().map(|&(k, v)| (k, v.to_string())).collect();
    for (k, v) in collect_overrides(&args.overrides)? {
        match values.get_mut(k.as_str()) {
            Some(slot) => *slot = v,
            None => return Err(Error::UnknownKey(k)),
        }
    }
    let real = |k: &str| parse_real(&values[k]).map_err(|e| Error::Config(format!("{k}: {e}")));
    let order = |k: &str| {
        values[k]
            .parse::<u32>()
            .map_err(|_| Error::Config(format!("{k}: expected a non-negative integer, got `{}`", values[k])))
    };
    let params = IonParams {
        nu_x: real("nu_x")?,
        nu_y: real("nu_y")?,
        rabi_x: real("rabi_x")?,
        rabi_y: real("rabi_y")?,
        epsilon: real("epsilon")?,
        delta: real("delta")?,
        m: order("m")?,
        n: order("n")?,
        energies: LevelEnergies {
            a: real("energy_a")?,
            b: real("energy_b")?,
            c: real("energy_c")?,
        },
    };
    params.validate()?;
    let variant = match values["variant"].as_str() {
        "normal" => ResonanceVariant::Normal,
        "counter" => ResonanceVariant::Counter,
        other => {
            return Err(Error::Config(format!(
                "variant: expected normal or counter, got `{other}`"
            )))
        }
    };
    let resonant = LaserFrequencies::resonant(&params, variant);
    let laser = |k: &str, fallback: f64| match values[k].as_str() {
        "resonant" => Ok(fallback),
        _ => real(k),
    };
    let lasers = LaserFrequencies {
        x: laser("laser_x", resonant.x)?,
        y: laser("laser_y", resonant.y)?,
    };
    let report = validate_resonance(&params, &lasers, variant);

    writeln!(out, "laser_x = {}", format_f64(lasers.x)).map_err(io_err)?;
    writeln!(out, "laser_y = {}", format_f64(lasers.y)).map_err(io_err)?;
    for c in &report.checks {
        let verdict = match (c.passed, c.severity) {
            (true, _) => "PASS",
            (false, Severity::Required) => "FAIL",
            (false, Severity::Advisory) => "WARN",
        };
        writeln!(
            out,
            "{verdict} {} residual {:.6e} tolerance {:.6e}",
            c.name, c.residual, c.tolerance
        )
        .map_err(io_err)?;
    }
    Ok(if report.all_pass() { EXIT_PASS } else { EXIT_FAIL })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn invoke(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("iontrap").chain(args.iter().copied());
        let code = main_with_args(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn list_has_eight_scenarios() {
        let (code, out, _) = invoke(&["list"]);
        assert_eq!(code, EXIT_PASS);
        assert_eq!(out.lines().count(), 8);
    }

    #[test]
    fn unknown_scenario_is_usage_error() {
        let (code, _, err) = invoke(&["run", "nope"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("nope"));
    }

    #[test]
    fn unknown_key_names_the_key() {
        let (code, _, err) = invoke(&["run", "ghz", "--set", "bogus_key=1"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("bogus_key"), "{err}");
    }

    #[test]
    fn malformed_override_is_usage_error() {
        let (code, _, _) = invoke(&["run", "ghz", "--set", "t"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn validate_default_parameters_pass() {
        let (code, out, _) = invoke(&["validate"]);
        assert_eq!(code, EXIT_PASS, "{out}");
        assert!(out.contains("PASS raman_resonance"));
    }

    #[test]
    fn validate_detuned_laser_fails() {
        let (code, out, _) = invoke(&["validate", "--set", "laser_x=500"]);
        assert_eq!(code, EXIT_FAIL);
        assert!(out.contains("FAIL raman_resonance"));
    }

    #[test]
    fn validate_unknown_key() {
        let (code, _, err) = invoke(&["validate", "--set", "omega=3"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("omega"));
    }

    #[test]
    fn missing_subcommand_is_usage_error() {
        let (code, _, _) = invoke(&[]);
        assert_eq!(code, EXIT_USAGE);
    }
}
