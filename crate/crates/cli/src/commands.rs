use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nml_pca::baselines::DEFAULT_SENSITIVITY;
use nml_pca::datasets::{
    center_columns, write_matrix_csv, GENERATOR_NAME, NOISE_NOTE, SYNTHETIC_SOURCES_NOTE,
};
use nml_pca::{
    correlation_eigenvalues, generate_lin, kaiser, kneedle, load_matrix_csv, returns_transform,
    scree, select_rank_with_svd, svd, Epsilon, GramMode, Matrix, Prices, SyntheticSpec,
};
use serde::Serialize;

use crate::report::{
    per_k_table_csv, Baselines, EpsilonRecord, GeneratorInfo, InputDescriptor, RunReport,
    Selection, SpecRecord, ToolInfo, SCHEMA_VERSION, TOOL_NAME, TOOL_VERSION,
};

/// Exit statuses.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] nml_pca::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) if e.is_data_error() => EXIT_DATA,
            CliError::Core(_) => EXIT_NUMERIC,
            CliError::Output(_) => EXIT_DATA,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "nml-pca",
    version,
    about = "Choose the number of principal components by NML bounds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every rank and report the minimizers of both bounds.
    Select(SelectArgs),
    /// Emit the scree curve as CSV.
    Scree(ScreeArgs),
    /// Run the selectors on leading-row prefixes of the data.
    Compare(CompareArgs),
    /// Write a synthetic matrix and its metadata sidecar.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SyntheticKind {
    Lin,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum GramModeArg {
    FullGram,
    PerRowSum,
}

impl From<GramModeArg> for GramMode {
    fn from(g: GramModeArg) -> Self {
        match g {
            GramModeArg::FullGram => GramMode::FullGram,
            GramModeArg::PerRowSum => GramMode::PerRowSum,
        }
    }
}

#[derive(Debug, Args, Clone)]
pub struct SpecArgs {
    /// Rows of the synthetic matrix.
    #[arg(long)]
    pub n: Option<usize>,
    /// Columns of the synthetic matrix.
    #[arg(long)]
    pub m: Option<usize>,
    /// Number of independent source columns.
    #[arg(long = "true-k")]
    pub true_k: Option<usize>,
    /// Standard deviation of the additive noise.
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Range of the uniform mixing coefficients.
    #[arg(long = "mix-low", default_value_t = -1.0, allow_hyphen_values = true)]
    pub mix_low: f64,
    #[arg(long = "mix-high", default_value_t = 1.0, allow_hyphen_values = true)]
    pub mix_high: f64,
}

impl SpecArgs {
    fn to_spec(&self) -> CliResult<SyntheticSpec> {
        let need = |v: Option<usize>, flag: &str| {
            v.ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
        };
        let spec = SyntheticSpec {
            n: need(self.n, "n")?,
            m: need(self.m, "m")?,
            true_k: need(self.true_k, "true-k")?,
            noise_sigma: self.noise,
            mix_low: self.mix_low,
            mix_high: self.mix_high,
            seed: self.seed,
        };
        spec.validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Debug, Args, Clone)]
pub struct InputArgs {
    /// CSV file with one observation per row.
    #[arg(long, conflicts_with = "synthetic")]
    pub input: Option<PathBuf>,
    /// The CSV has no header row.
    #[arg(long = "no-header")]
    pub no_header: bool,
    /// Treat the CSV as closing prices and analyze percentage returns.
    #[arg(long)]
    pub prices: bool,
    /// Subtract column means before analysis.
    #[arg(long)]
    pub center: bool,
    /// Generate the input instead of reading it.
    #[arg(long, value_enum)]
    pub synthetic: Option<SyntheticKind>,
    #[command(flatten)]
    pub spec: SpecArgs,
}

#[derive(Debug, Args, Clone)]
pub struct SelectionArgs {
    /// Quantization step: `auto` (1/(2m)), a decimal like 0.05, or a fraction like 1/20.
    #[arg(long, default_value = "auto")]
    pub epsilon: String,
    #[arg(long = "gram-mode", value_enum, default_value = "full-gram")]
    pub gram_mode: GramModeArg,
    /// Report both gram modes.
    #[arg(long = "both-gram-modes")]
    pub both_gram_modes: bool,
    #[arg(long = "kneedle-sensitivity", default_value_t = DEFAULT_SENSITIVITY)]
    pub kneedle_sensitivity: f64,
    /// Omit the timestamp so repeated runs are byte-identical.
    #[arg(long)]
    pub reproducible: bool,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub selection: SelectionArgs,
    /// JSON report destination (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the per-k table as CSV.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScreeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Divide by the total variance.
    #[arg(long)]
    pub normalized: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub selection: SelectionArgs,
    /// Comma-separated row-prefix lengths.
    #[arg(long, value_delimiter = ',', required = true)]
    pub lengths: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "lin")]
    pub kind: SyntheticKind,
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Destination CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Metadata sidecar (defaults to `<out>.meta.json`).
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

/// Analysis matrix plus where it came from.
struct LoadedInput {
    data: Matrix,
    descriptor: InputDescriptor,
    generator: Option<GeneratorInfo>,
}

fn generator_info() -> GeneratorInfo {
    GeneratorInfo {
        name: GENERATOR_NAME.into(),
        notes: vec![NOISE_NOTE.into(), SYNTHETIC_SOURCES_NOTE.into()],
    }
}

fn load_input(args: &InputArgs) -> CliResult<LoadedInput> {
    match (&args.input, args.synthetic) {
        (Some(path), None) => {
            let table = load_matrix_csv::<f64>(path, !args.no_header)?;
            let data = if args.prices {
                returns_transform(&Prices::new(table.column_names, table.values)?)
            } else {
                table.values
            };
            Ok(LoadedInput {
                descriptor: InputDescriptor::Csv {
                    path: path.display().to_string(),
                    prices: args.prices,
                    centered: args.center,
                    rows_used: data.rows(),
                },
                data,
                generator: None,
            })
        }
        (None, Some(SyntheticKind::Lin)) => {
            let spec = args.spec.to_spec()?;
            let data = generate_lin::<f64>(&spec, None)?;
            Ok(LoadedInput {
                descriptor: InputDescriptor::Synthetic {
                    generator: "lin".into(),
                    spec: SpecRecord::from(&spec),
                    centered: args.center,
                    rows_used: data.rows(),
                },
                data,
                generator: Some(generator_info()),
            })
        }
        _ => Err(CliError::Usage(
            "exactly one of --input or --synthetic is required".into(),
        )),
    }
}

fn resolve_epsilon(raw: &str, m: usize) -> CliResult<Epsilon> {
    let eps = if raw.trim().eq_ignore_ascii_case("auto") {
        Epsilon::default_for(m)
    } else {
        raw.parse::<Epsilon>()
            .map_err(|e| CliError::Usage(e.to_string()))?
    };
    eps.validate_for(m)
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn build_report(
    data: &Matrix,
    descriptor: InputDescriptor,
    generator: Option<GeneratorInfo>,
    args: &SelectionArgs,
) -> CliResult<RunReport> {
    let (n, m) = (data.rows(), data.cols());
    let epsilon = resolve_epsilon(&args.epsilon, m)?;
    if args.kneedle_sensitivity.is_nan() || args.kneedle_sensitivity <= 0.0 {
        return Err(CliError::Usage(
            "--kneedle-sensitivity must be positive".into(),
        ));
    }
    let s = svd(data)?;
    let primary: GramMode = args.gram_mode.into();
    let selection = Selection::from(&select_rank_with_svd(data, &s, epsilon, primary)?);
    let mut additional_selections = Vec::new();
    if args.both_gram_modes {
        let other = match primary {
            GramMode::FullGram => GramMode::PerRowSum,
            GramMode::PerRowSum => GramMode::FullGram,
        };
        additional_selections.push(Selection::from(&select_rank_with_svd(
            data, &s, epsilon, other,
        )?));
    }

    let mut notes = Vec::new();
    let kaiser_k = match correlation_eigenvalues(data) {
        Ok(eig) => Some(kaiser(&eig)),
        Err(e) => {
            notes.push(format!("kaiser skipped: {e}"));
            None
        }
    };
    let kneedle_k = if s.rank_capacity() >= 3 {
        match scree(&s, true).and_then(|c| kneedle(&c, args.kneedle_sensitivity)) {
            Ok(k) => k,
            Err(e) => {
                notes.push(format!("kneedle skipped: {e}"));
                None
            }
        }
    } else {
        notes.push("kneedle skipped: fewer than 3 components".into());
        None
    };

    let generated_at_unix = if args.reproducible {
        None
    } else {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs())
    };

    Ok(RunReport {
        schema_version: SCHEMA_VERSION.into(),
        tool: ToolInfo::default(),
        generated_at_unix,
        input: descriptor,
        n,
        m,
        epsilon: EpsilonRecord {
            value: epsilon.value(),
            inverse: epsilon.inverse(),
        },
        selection,
        additional_selections,
        baselines: Baselines {
            kaiser: kaiser_k,
            kneedle: kneedle_k,
            kneedle_sensitivity: args.kneedle_sensitivity,
        },
        generator,
        notes,
    })
}

fn write_output(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => {
            fs::write(p, text).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Output(e.to_string())),
    }
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Output(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn with_centering(data: Matrix, center: bool) -> Matrix {
    if center {
        center_columns(&data)
    } else {
        data
    }
}

pub fn cmd_select(args: &SelectArgs, stdout: &mut dyn Write) -> CliResult<RunReport> {
    let input = load_input(&args.input)?;
    let data = with_centering(input.data, args.input.center);
    let report = build_report(&data, input.descriptor, input.generator, &args.selection)?;
    if let Some(t) = &args.table {
        write_output(Some(t), &per_k_table_csv(&report), stdout)?;
    }
    write_output(args.out.as_deref(), &to_json(&report)?, stdout)?;
    Ok(report)
}

pub fn cmd_scree(args: &ScreeArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let input = load_input(&args.input)?;
    let data = with_centering(input.data, args.input.center);
    let curve = scree(&svd(&data)?, args.normalized)?;
    let mut text = String::from("component,explained_variance\n");
    for (i, v) in curve.variances.iter().enumerate() {
        text.push_str(&format!("{},{}\n", i + 1, v));
    }
    write_output(args.out.as_deref(), &text, stdout)
}

pub fn cmd_compare(args: &CompareArgs, stdout: &mut dyn Write) -> CliResult<Vec<RunReport>> {
    let input = load_input(&args.input)?;
    let total = input.data.rows();
    if let Some(&bad) = args.lengths.iter().find(|&&l| l > total || l < 2) {
        return Err(CliError::Usage(format!(
            "prefix length {bad} must lie in 2..={total}"
        )));
    }
    let mut reports = Vec::with_capacity(args.lengths.len());
    for &len in &args.lengths {
        let prefix = with_centering(input.data.head_rows(len)?, args.input.center);
        let mut descriptor = input.descriptor.clone();
        match &mut descriptor {
            InputDescriptor::Csv { rows_used, .. }
            | InputDescriptor::Synthetic { rows_used, .. } => *rows_used = len,
        }
        reports.push(build_report(
            &prefix,
            descriptor,
            input.generator.clone(),
            &args.selection,
        )?);
    }
    write_output(args.out.as_deref(), &to_json(&reports)?, stdout)?;
    Ok(reports)
}

#[derive(Serialize)]
struct GenerateMeta {
    tool: ToolInfo,
    kind: &'static str,
    spec: SpecRecord,
    generator: GeneratorInfo,
}

pub fn cmd_generate(args: &GenerateArgs) -> CliResult<()> {
    let spec = args.spec.to_spec()?;
    let data = generate_lin::<f64>(&spec, None)?;
    let header: Vec<String> = (1..=spec.m).map(|j| format!("col_{j}")).collect();
    let mut buf = Vec::new();
    write_matrix_csv(&mut buf, &data, Some(&header))?;
    fs::write(&args.out, buf)
        .map_err(|e| CliError::Output(format!("{}: {e}", args.out.display())))?;

    let meta_path = args.meta.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".meta.json");
        PathBuf::from(p)
    });
    let meta = GenerateMeta {
        tool: ToolInfo {
            name: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
        },
        kind: "lin",
        spec: SpecRecord::from(&spec),
        generator: generator_info(),
    };
    fs::write(&meta_path, to_json(&meta)?)
        .map_err(|e| CliError::Output(format!("{}: {e}", meta_path.display())))
}

/// Runs a parsed command, writing reports to `stdout` when no file is given.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Select(a) => cmd_select(a, stdout).map(drop),
        Command::Scree(a) => cmd_scree(a, stdout),
        Command::Compare(a) => cmd_compare(a, stdout).map(drop),
        Command::Generate(a) => cmd_generate(a),
    }
}
