//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::datamodel::MeasureKind;
use crate::error::{Error, Result};
use crate::evaluation::{
    ablation_study, format_number, parameter_sweep, run_benchmark, Dataset, EvalReport,
};
use crate::evaluation::report::render_table;
use crate::io;
use crate::localization::{localize, LocalizerConfig, RootCauseSet};
use crate::synthgen::{write_dataset, DatasetSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "rootloc", version, about = "Root-cause localization for multi-dimensional measures")]
pub struct Cli {
    /// Log progress and warnings in more detail.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Localize the root causes of one instance file.
    Run(RunArgs),
    /// Generate a synthetic dataset directory.
    Generate(GenerateArgs),
    /// Run and score every instance of a dataset directory.
    Evaluate(EvaluateArgs),
    /// One-at-a-time sweep of the thresholds over a dataset directory.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct LocalizerArgs {
    /// Minimum risk of a root-cause element.
    #[arg(long = "risk-threshold", visible_alias = "t-r", default_value_t = crate::localization::DEFAULT_RISK_THRESHOLD)]
    pub risk_threshold: f64,
    /// Explanatory-power threshold as a fraction of the abnormal leaves' ep.
    #[arg(long = "pep-threshold", visible_alias = "t-pep", default_value_t = crate::localization::DEFAULT_PEP_THRESHOLD)]
    pub pep_threshold: f64,
    /// Prune elements by maximum potential ep in layers up to this one.
    #[arg(long, default_value_t = crate::localization::DEFAULT_PRUNE_LAYERS)]
    pub prune_layers: usize,
    #[arg(long)]
    pub no_outlier_removal: bool,
    #[arg(long)]
    pub no_r1: bool,
    #[arg(long)]
    pub no_r2: bool,
    #[arg(long)]
    pub no_weights: bool,
    /// Unique deviation scores trimmed from each end before partitioning.
    #[arg(long, default_value_t = 5)]
    pub trim_k: usize,
    /// Cap on root-cause iterations (default: number of leaves).
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

impl LocalizerArgs {
    pub fn config(&self) -> LocalizerConfig {
        LocalizerConfig {
            risk_threshold: self.risk_threshold,
            pep_threshold: self.pep_threshold,
            prune_layers: self.prune_layers,
            no_outlier_removal: self.no_outlier_removal,
            no_r1: self.no_r1,
            no_r2: self.no_r2,
            no_weights: self.no_weights,
            trim_k: self.trim_k,
            max_iterations: self.max_iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Measure {
    /// Decide from the header.
    Auto,
    Fundamental,
    Derived,
}

impl Measure {
    fn kind(self) -> Option<MeasureKind> {
        match self {
            Measure::Auto => None,
            Measure::Fundamental => Some(MeasureKind::Fundamental),
            Measure::Derived => Some(MeasureKind::Derived),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Instance CSV.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long, value_enum, default_value_t = Measure::Auto)]
    pub measure: Measure,
    #[command(flatten)]
    pub localizer: LocalizerArgs,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Built-in parameter set: S, L or H.
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    pub preset: Option<String>,
    /// Spec file of `key=value` lines; a `preset` key selects the base.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub instances: Option<usize>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Dataset directory.
    pub dataset: PathBuf,
    /// Directory for report.csv and summary.txt (default: the dataset).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, value_enum, default_value_t = Measure::Auto)]
    pub measure: Measure,
    #[command(flatten)]
    pub localizer: LocalizerArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Dataset directory.
    pub dataset: PathBuf,
    /// Risk thresholds to try.
    #[arg(long, value_delimiter = ',', default_values_t = [0.3, 0.4, 0.5, 0.6, 0.7])]
    pub risk_grid: Vec<f64>,
    /// Proportional ep thresholds to try.
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.02, 0.05, 0.1])]
    pub pep_grid: Vec<f64>,
    /// Also run each single-component ablation at the base setting.
    #[arg(long)]
    pub ablations: bool,
    /// Directory for sweep.csv (default: the dataset).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, value_enum, default_value_t = Measure::Auto)]
    pub measure: Measure,
    #[command(flatten)]
    pub localizer: LocalizerArgs,
}

/// Exit code for a failed command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. }
        | Error::Config(_)
        | Error::Schema(_)
        | Error::UnknownAttribute(_)
        | Error::UnknownValue { .. }
        | Error::DuplicateAttribute(_)
        | Error::MalformedElement(_)
        | Error::DimensionMismatch { .. }
        | Error::DuplicateLeaf(_)
        | Error::NegativeValue { .. } => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let _ = env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Debug
        } else {
            log::LevelFilter::Warn
        })
        .try_init();
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cmd: &Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Run(a) => cmd_run(a, out),
        Command::Generate(a) => cmd_generate(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
    }
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = a.localizer.config();
    cfg.validate()?;
    let table = io::read_instance(&a.input, a.measure.kind())?;
    let rs = localize(&table, &cfg)?;
    let text = format_root_causes(&rs, table.schema(), a.format);
    out.write_all(text.as_bytes()).map_err(stdout_err)?;
    log::info!(
        "{} root cause(s), termination {}",
        rs.len(),
        rs.termination.as_str()
    );
    Ok(EXIT_OK)
}

/// Text: one tab-separated line per root cause. CSV: a header row, then
/// one row per root cause.
pub fn format_root_causes(
    rs: &RootCauseSet,
    schema: &crate::datamodel::AttributeSchema,
    format: Format,
) -> String {
    let mut s = String::new();
    match format {
        Format::Text => {
            for c in &rs.causes {
                s.push_str(&format!(
                    "{}\trisk={}\tep={}\tlayer={}\n",
                    c.element.format(schema),
                    format_number(c.breakdown.risk),
                    format_number(c.ep),
                    c.layer
                ));
            }
        }
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(Vec::new());
            let _ = wtr.write_record(["element", "risk", "ep", "layer", "r1", "r2"]);
            for c in &rs.causes {
                let _ = wtr.write_record([
                    c.element.format(schema),
                    format_number(c.breakdown.risk),
                    format_number(c.ep),
                    c.layer.to_string(),
                    format_number(c.breakdown.r1),
                    format_number(c.breakdown.r2),
                ]);
            }
            s = String::from_utf8(wtr.into_inner().unwrap_or_default()).unwrap_or_default();
        }
    }
    s
}

fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write) -> Result<i32> {
    let mut spec = match (&a.preset, &a.spec) {
        (Some(p), _) => DatasetSpec::preset(p)?,
        (None, Some(path)) => DatasetSpec::from_key_values(&io::read_manifest(path)?)?,
        (None, None) => return Err(Error::Config("either --preset or --spec is required".into())),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    if let Some(n) = a.instances {
        spec.instances = n;
    }
    spec.validate()?;
    let run = || write_dataset(&spec, &a.out);
    let truth = if a.jobs == 0 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(a.jobs)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(run)?
    };
    writeln!(
        out,
        "wrote {} instances of {} leaves to {}",
        truth.instances.len(),
        spec.leaf_count()?,
        a.out.display()
    )
    .map_err(stdout_err)?;
    Ok(EXIT_OK)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn report_csv(report: &EvalReport) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    report
        .write_csv(&mut buf)
        .map_err(|e| Error::io("<report>", e.into()))?;
    Ok(buf)
}

fn cmd_evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = a.localizer.config();
    let report = run_benchmark(&a.dataset, &cfg, a.jobs, a.measure.kind())?;
    let dir = a.out.as_deref().unwrap_or(&a.dataset);
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let summary = report.summary_table();
    write_file(&dir.join("report.csv"), &report_csv(&report)?)?;
    write_file(&dir.join("summary.txt"), summary.as_bytes())?;
    out.write_all(summary.as_bytes()).map_err(stdout_err)?;
    Ok(if report.failures > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<i32> {
    let base = a.localizer.config();
    base.validate()?;
    let ds = Dataset::load(&a.dataset, a.measure.kind())?;
    let sweep = parameter_sweep(&ds, &base, &a.risk_grid, &a.pep_grid, a.jobs)?;
    let dir = a.out.as_deref().unwrap_or(&a.dataset);
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut buf = Vec::new();
    sweep
        .write_csv(&mut buf)
        .map_err(|e| Error::io("<sweep>", e.into()))?;
    write_file(&dir.join("sweep.csv"), &buf)?;
    let mut text = sweep.summary_table();
    let mut failures = sweep.rows.iter().any(|r| r.report.failures > 0);
    if a.ablations {
        let rows = ablation_study(&ds, &base, a.jobs)?;
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|(name, r)| {
                failures |= r.failures > 0;
                vec![
                    name.clone(),
                    format_number(r.f1),
                    format_number(r.runtime_mean),
                    r.failures.to_string(),
                ]
            })
            .collect();
        let rendered = render_table(&["variant", "f1", "runtime_mean_s", "failures"], &table);
        write_file(&dir.join("ablations.txt"), rendered.as_bytes())?;
        text.push('\n');
        text.push_str(&rendered);
    }
    out.write_all(text.as_bytes()).map_err(stdout_err)?;
    Ok(if failures { EXIT_PARTIAL } else { EXIT_OK })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["rootloc"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn defaults_match_reference_settings() {
        let cli = Cli::try_parse_from(["rootloc", "run", "x.csv"]).unwrap();
        let Command::Run(a) = cli.command else {
            panic!()
        };
        assert_eq!(a.localizer.config(), LocalizerConfig::default());
        assert_eq!(a.format, Format::Text);
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(call(&[]).0, EXIT_USAGE);
        assert_eq!(call(&["run"]).0, EXIT_USAGE);
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(call(&["run", "x.csv", "--risk-threshold", "abc"]).0, EXIT_USAGE);
        assert_eq!(call(&["generate", "--out", "/tmp/x"]).0, EXIT_USAGE);
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("evaluate"));
    }

    #[test]
    fn missing_input_is_runtime_failure() {
        let (code, _, err) = call(&["run", "/nonexistent/instance.csv"]);
        assert_eq!(code, EXIT_RUNTIME);
        assert!(err.contains("/nonexistent/instance.csv"));
    }
}
