//! The `multiskew` command line.
//!
//! Every subcommand reads one CSV file, writes its results into the output
//! directory (`--out-dir`, or `MULTISKEW_OUT_DIR`, or the working directory)
//! and prints a short summary on stdout. Exit status is 0 on success, 2 on
//! usage errors and 1 on computation or I/O errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde_json::json;

use crate::bootstrap::{self, BootMeasure};
use crate::error::{Result, SkewError};
use crate::format::fmt_num;
use crate::ingest::{self, CsvOptions, DataMatrix, Selection};
use crate::measures::{self, SkewnessReport};
use crate::moments::{self, MomentKind};
use crate::projpursuit;
use crate::symmetrize;

pub const OUT_DIR_ENV: &str = "MULTISKEW_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "multiskew", version, about = "Measure, test and remove multivariate skewness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Input CSV file.
    input: PathBuf,
    /// Columns to use: names, 1-based indices or ranges, e.g. `1-4`.
    #[arg(long)]
    columns: Option<String>,
    /// Rows to use: 1-based indices or ranges, e.g. `1-50`.
    #[arg(long)]
    rows: Option<String>,
    /// The first line is data, not column labels.
    #[arg(long)]
    no_header: bool,
    /// Directory for output files.
    #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Significant digits in text and CSV output.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u8).range(1..=15))]
    precision: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Raw,
    Central,
    Standardized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SkewMeasure {
    Fisher,
    Mardia,
    Partial,
    Directional,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BootArg {
    Directional,
    Partial,
    Mardia,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Third raw, central or standardized moment matrix.
    Third {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[command(flatten)]
        common: Common,
    },
    /// Skewness measures with parametric p-values.
    Skew {
        #[arg(long, value_enum, default_value_t = SkewMeasure::All)]
        measure: SkewMeasure,
        /// Power-iteration budget for the directional measure.
        #[arg(long, default_value_t = 50)]
        iterations: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Orthogonal projections of maximal skewness.
    Maxskew {
        #[arg(long, default_value_t = 50)]
        iterations: usize,
        #[arg(long)]
        components: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Least-skewed linear projections.
    Minskew {
        #[arg(long)]
        dimension: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Bootstrap distribution and p-value of a skewness measure.
    Boot {
        #[arg(long, value_enum)]
        measure: BootArg,
        #[arg(long)]
        replicates: usize,
        #[arg(long)]
        units: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
}

/// What to run, after argument parsing.
#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Third { kind: MomentKind },
    Skew { measure: SkewMeasure, iterations: usize },
    MaxSkew { iterations: usize, components: usize },
    MinSkew { dimension: usize },
    Boot { measure: BootMeasure, replicates: usize, units: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub input: PathBuf,
    pub columns: Option<String>,
    pub rows: Option<String>,
    pub has_header: bool,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub format: Format,
    pub precision: usize,
}

impl RunConfig {
    pub fn try_parse_from<I, T>(argv: I) -> std::result::Result<Self, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let cli = Cli::try_parse_from(argv)?;
        let (task, common, seed) = match cli.command {
            Command::Third { kind, common } => {
                let kind = match kind {
                    KindArg::Raw => MomentKind::Raw,
                    KindArg::Central => MomentKind::Central,
                    KindArg::Standardized => MomentKind::Standardized,
                };
                (Task::Third { kind }, common, None)
            }
            Command::Skew { measure, iterations, common } => (Task::Skew { measure, iterations }, common, None),
            Command::Maxskew { iterations, components, common } => (Task::MaxSkew { iterations, components }, common, None),
            Command::Minskew { dimension, common } => (Task::MinSkew { dimension }, common, None),
            Command::Boot { measure, replicates, units, seed, common } => {
                let measure = match measure {
                    BootArg::Directional => BootMeasure::Directional,
                    BootArg::Partial => BootMeasure::Partial,
                    BootArg::Mardia => BootMeasure::Mardia,
                };
                (Task::Boot { measure, replicates, units }, common, seed)
            }
        };
        Ok(RunConfig {
            task,
            input: common.input,
            columns: common.columns,
            rows: common.rows,
            has_header: !common.no_header,
            seed,
            out_dir: common.out_dir,
            format: common.format,
            precision: common.precision as usize,
        })
    }

    fn load(&self) -> Result<DataMatrix> {
        let opts = CsvOptions {
            has_header: self.has_header,
            columns: self.columns.as_deref().map(Selection::parse).transpose()?,
            rows: self.rows.as_deref().map(Selection::parse).transpose()?,
        };
        ingest::load_csv(&self.input, &opts)
    }
}

/// Parses `argv` (program name first), runs it and returns the exit status.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let first = e.to_string();
                    let line = first.lines().next().unwrap_or("invalid arguments");
                    let _ = writeln!(err, "{line}");
                    2
                }
            };
        }
    };
    match execute(&config, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

/// Runs a parsed configuration.
pub fn execute(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let data = config.load()?;
    let p = config.precision;
    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|source| io_err(dir, source))?;

    match &config.task {
        Task::Third { kind } => {
            let m = moments::third_moment(&data, *kind)?;
            match config.format {
                Format::Csv => {
                    let text = m.to_csv_string(p);
                    write_file(dir, &format!("third_{kind}.csv"), &text)?;
                    emit(out, &text)?;
                }
                Format::Json => {
                    let doc = json!({ "kind": kind, "d": m.d(), "values": rows_of(m.values()) });
                    write_json(dir, &format!("third_{kind}.json"), &doc, out)?;
                }
            }
        }
        Task::Skew { measure, iterations } => {
            let reports = skew_reports(&data, *measure, *iterations)?;
            match config.format {
                Format::Csv => {
                    for r in &reports {
                        let text = r.to_key_value(p);
                        write_file(dir, &format!("skew_{}.txt", r.measure.as_str()), &text)?;
                        emit(out, &text)?;
                    }
                }
                Format::Json => write_json(dir, "skew.json", &json!(reports), out)?,
            }
        }
        Task::MaxSkew { iterations, components } => {
            let b = projpursuit::max_skew(&data, *iterations, *components)?;
            let labels = projection_labels(b.components());
            match config.format {
                Format::Csv => {
                    write_file(dir, "maxskew_directions.csv", &labelled_csv(data.names(), &labels, &b.directions, p))?;
                    let skew: Vec<String> = b
                        .skewness
                        .iter()
                        .enumerate()
                        .map(|(j, &s)| format!("{},{}", labels[j], fmt_num(s, p)))
                        .collect();
                    write_file(dir, "maxskew_skewness.csv", &format!("component,skewness\n{}\n", skew.join("\n")))?;
                    write_file(dir, "maxskew_projected.csv", &matrix_csv(Some(&labels), &b.projected, p))?;
                    write_file(dir, "maxskew_scatter.csv", &scatter_csv(&labels, &b.projected, p))?;
                    emit(out, &format!("skewness={}\n", join_nums(b.skewness.as_slice(), p)))?;
                }
                Format::Json => {
                    let doc = json!({
                        "variables": data.names(),
                        "directions": rows_of(&b.directions),
                        "standardized_directions": rows_of(&b.standardized_directions),
                        "skewness": b.skewness.as_slice(),
                        "projected": rows_of(&b.projected),
                    });
                    write_json(dir, "maxskew.json", &doc, out)?;
                }
            }
        }
        Task::MinSkew { dimension } => {
            let b = symmetrize::min_skew(&data, *dimension)?;
            let labels = projection_labels(b.components());
            let residual = symmetrize::residual_skewness(&b, &data)?;
            match config.format {
                Format::Csv => {
                    write_file(dir, "minskew_linear.csv", &labelled_csv(data.names(), &labels, &b.directions, p))?;
                    write_file(dir, "minskew_projections.csv", &matrix_csv(Some(&labels), &b.projected, p))?;
                    emit(
                        out,
                        &format!(
                            "singular_values={}\nresidual_mardia={}\n",
                            join_nums(b.skewness.as_slice(), p),
                            fmt_num(residual.scalar().unwrap_or(0.0), p)
                        ),
                    )?;
                }
                Format::Json => {
                    let doc = json!({
                        "variables": data.names(),
                        "linear": rows_of(&b.directions),
                        "projections": rows_of(&b.projected),
                        "singular_values": b.skewness.as_slice(),
                        "residual": residual,
                    });
                    write_json(dir, "minskew.json", &doc, out)?;
                }
            }
        }
        Task::Boot { measure, replicates, units } => {
            let seed = config.seed.unwrap_or(0);
            let r = bootstrap::skew_boot(&data, *replicates, *units, *measure, seed)?;
            match config.format {
                Format::Csv => {
                    let reps: Vec<String> = r.replicates.iter().enumerate().map(|(i, &s)| format!("{},{}", i + 1, fmt_num(s, p))).collect();
                    write_file(dir, "boot_replicates.csv", &format!("replicate,statistic\n{}\n", reps.join("\n")))?;
                    let mut hist = String::from("lower,upper,count\n");
                    for bin in &r.histogram {
                        hist.push_str(&format!("{},{},{}\n", fmt_num(bin.lower, p), fmt_num(bin.upper, p), bin.count));
                    }
                    write_file(dir, "boot_histogram.csv", &hist)?;
                    let summary = format!(
                        "measure={}\nseed={}\nreplicates={}\nunits={}\nobserved={}\npvalue={}\n",
                        r.measure,
                        r.seed,
                        replicates,
                        units,
                        fmt_num(r.observed, p),
                        fmt_num(r.pvalue, p)
                    );
                    write_file(dir, "boot_summary.txt", &summary)?;
                    emit(out, &summary)?;
                }
                Format::Json => {
                    let doc = json!({ "units": units, "result": r });
                    write_json(dir, "boot.json", &doc, out)?;
                }
            }
        }
    }
    Ok(())
}

fn skew_reports(data: &DataMatrix, measure: SkewMeasure, iterations: usize) -> Result<Vec<SkewnessReport>> {
    Ok(match measure {
        SkewMeasure::Fisher => vec![measures::fisher_report(data)?],
        SkewMeasure::Mardia => vec![measures::mardia_skewness(data)?],
        SkewMeasure::Partial => vec![measures::partial_skewness(data)?],
        SkewMeasure::Directional => vec![measures::directional_skewness(data, iterations)?],
        SkewMeasure::All => vec![
            measures::fisher_report(data)?,
            measures::mardia_skewness(data)?,
            measures::partial_skewness(data)?,
        ],
    })
}

fn io_err(path: &Path, source: std::io::Error) -> SkewError {
    SkewError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| io_err(&path, source))
}

fn write_json(dir: &Path, name: &str, doc: &serde_json::Value, out: &mut dyn Write) -> Result<()> {
    let text = serde_json::to_string_pretty(doc).expect("JSON values serialize") + "\n";
    write_file(dir, name, &text)?;
    emit(out, &text)
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|source| io_err(Path::new("<stdout>"), source))
}

fn projection_labels(k: usize) -> Vec<String> {
    (1..=k).map(|j| format!("P{j}")).collect()
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn join_nums(v: &[f64], p: usize) -> String {
    v.iter().map(|&x| fmt_num(x, p)).collect::<Vec<_>>().join(",")
}

fn matrix_csv(header: Option<&[String]>, m: &DMatrix<f64>, p: usize) -> String {
    let mut s = String::new();
    if let Some(h) = header {
        s.push_str(&h.join(","));
        s.push('\n');
    }
    for row in m.row_iter() {
        s.push_str(&join_nums(&row.iter().copied().collect::<Vec<_>>(), p));
        s.push('\n');
    }
    s
}

/// One row per variable: `variable,P1,...,Pk`.
fn labelled_csv(rows: &[String], cols: &[String], m: &DMatrix<f64>, p: usize) -> String {
    let mut s = format!("variable,{}\n", cols.join(","));
    for (name, row) in rows.iter().zip(m.row_iter()) {
        s.push_str(&format!("{name},{}\n", join_nums(&row.iter().copied().collect::<Vec<_>>(), p)));
    }
    s
}

/// Projection scores keyed by 1-based unit number, for external scatterplots.
fn scatter_csv(labels: &[String], m: &DMatrix<f64>, p: usize) -> String {
    let mut s = format!("unit,{}\n", labels.join(","));
    for (i, row) in m.row_iter().enumerate() {
        s.push_str(&format!("{},{}\n", i + 1, join_nums(&row.iter().copied().collect::<Vec<_>>(), p)));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_skew_invocation() {
        let c = RunConfig::try_parse_from(["multiskew", "skew", "--measure", "mardia", "--columns", "1-4", "iris.csv"]).unwrap();
        assert_eq!(
            c.task,
            Task::Skew {
                measure: SkewMeasure::Mardia,
                iterations: 50
            }
        );
        assert_eq!(c.columns.as_deref(), Some("1-4"));
        assert!(c.has_header);
        assert_eq!(c.precision, 6);
    }

    #[test]
    fn precision_is_bounded() {
        assert!(RunConfig::try_parse_from(["multiskew", "third", "--kind", "raw", "--precision", "16", "x.csv"]).is_err());
        assert!(RunConfig::try_parse_from(["multiskew", "third", "--kind", "raw", "--precision", "15", "x.csv"]).is_ok());
    }

    #[test]
    fn unknown_subcommand_is_usage_error() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        assert_eq!(run(["multiskew", "frobnicate"], &mut out, &mut err), 2);
        assert_eq!(String::from_utf8(err).unwrap().lines().count(), 1);
    }
}
