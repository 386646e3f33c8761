//! Machine-readable run reports. The JSON layout is described by
//! `schema/run_report.schema.json`; bump [`SCHEMA_VERSION`] on any change.

use nml_pca::complexity::bound_gap_ratio;
use nml_pca::{Report, SyntheticSpec};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1.0.0";
pub const TOOL_NAME: &str = "nml-pca";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// JSON schema shipped with the tool.
pub const RUN_REPORT_SCHEMA: &str = include_str!("../schema/run_report.schema.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        Self {
            name: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecRecord {
    pub n: usize,
    pub m: usize,
    pub true_k: usize,
    pub noise_sigma: f64,
    pub mix_low: f64,
    pub mix_high: f64,
    pub seed: u64,
}

impl From<&SyntheticSpec> for SpecRecord {
    fn from(s: &SyntheticSpec) -> Self {
        Self {
            n: s.n,
            m: s.m,
            true_k: s.true_k,
            noise_sigma: s.noise_sigma,
            mix_low: s.mix_low,
            mix_high: s.mix_high,
            seed: s.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputDescriptor {
    Csv {
        path: String,
        prices: bool,
        centered: bool,
        rows_used: usize,
    },
    Synthetic {
        generator: String,
        spec: SpecRecord,
        centered: bool,
        rows_used: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub name: String,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRecord {
    pub value: f64,
    pub inverse: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KRow {
    pub k: usize,
    pub tail_term: f64,
    pub gram_term: f64,
    pub ratio_term: f64,
    pub count_term: f64,
    pub lower_total: f64,
    pub upper_total: f64,
    /// `None` when the lower total is zero.
    pub gap_ratio: Option<f64>,
    pub floored: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub gram_mode: String,
    pub per_k: Vec<KRow>,
    pub k_lower_opt: usize,
    pub k_upper_opt: usize,
    pub k_bracket: [usize; 2],
}

impl From<&Report> for Selection {
    fn from(r: &Report) -> Self {
        let gaps = bound_gap_ratio(r);
        let per_k = r
            .per_k
            .iter()
            .zip(gaps)
            .map(|(t, (_, gap))| KRow {
                k: t.k,
                tail_term: t.tail_term,
                gram_term: t.gram_term,
                ratio_term: t.ratio_term,
                count_term: t.count_term,
                lower_total: t.lower_total(),
                upper_total: t.upper_total(),
                gap_ratio: gap,
                floored: t.floored,
            })
            .collect();
        Self {
            gram_mode: r.gram_mode.as_str().into(),
            per_k,
            k_lower_opt: r.k_lower_opt,
            k_upper_opt: r.k_upper_opt,
            k_bracket: [r.k_bracket.0, r.k_bracket.1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub kaiser: Option<usize>,
    pub kneedle: Option<usize>,
    pub kneedle_sensitivity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: String,
    pub tool: ToolInfo,
    /// Seconds since the Unix epoch; omitted under `--reproducible`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at_unix: Option<u64>,
    pub input: InputDescriptor,
    pub n: usize,
    pub m: usize,
    pub epsilon: EpsilonRecord,
    #[serde(flatten)]
    pub selection: Selection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub additional_selections: Vec<Selection>,
    pub baselines: Baselines,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorInfo>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl RunReport {
    pub fn selections(&self) -> impl Iterator<Item = &Selection> {
        std::iter::once(&self.selection).chain(&self.additional_selections)
    }

    pub fn bracket_contains(&self, k: usize) -> bool {
        self.selection.k_bracket[0] <= k && k <= self.selection.k_bracket[1]
    }
}

pub const TABLE_HEADER: [&str; 10] = [
    "gram_mode",
    "k",
    "tail_term",
    "gram_term",
    "ratio_term",
    "count_term",
    "lower_total",
    "upper_total",
    "gap_ratio",
    "floored",
];

/// Per-k table of every selection in the report, as CSV text.
pub fn per_k_table_csv(r: &RunReport) -> String {
    let mut out = TABLE_HEADER.join(",");
    out.push('\n');
    for s in r.selections() {
        for row in &s.per_k {
            let gap = row.gap_ratio.map(|g| g.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                s.gram_mode,
                row.k,
                row.tail_term,
                row.gram_term,
                row.ratio_term,
                row.count_term,
                row.lower_total,
                row.upper_total,
                gap,
                row.floored
            ));
        }
    }
    out
}
