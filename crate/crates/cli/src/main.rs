//! `kms`: classify operators, project fields, verify inequalities, search
//! for adversarial ratios, and demonstrate the necessity of the kernel
//! correction.
//!
//! Exit codes: 0 success, 2 input error (unparsable spec, shape mismatch,
//! unknown scenario), 3 when `verify --assert-bound` observes a larger
//! ratio.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use kms_core::classifier::{classify, reduced_classify, DirectionSet, DEFAULT_EXTRA_DIRECTIONS};
use kms_core::error::Error;
use kms_core::lab::{
    adversarial_search_with, estimate_constant, estimate_constant_lemma, null_family_demo,
    EnsembleConfig, FieldKind, Scenario, DEFAULT_RHS_FLOOR,
};
use kms_core::norms::lp_norm;
use kms_core::opspec;
use kms_core::report::to_canonical_json;
use kms_core::spectral::{kms_correction, kmsf, Grid};
use kms_core::symbols::{default_tol, presets, DiffOp, PartMap};

#[derive(Parser)]
#[command(name = "kms", version, about = "Korn-Maxwell-Sobolev inequality laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Generic,
    KernelValued,
    GradientType,
    DivFreeGradient,
}

impl From<KindArg> for FieldKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Generic => FieldKind::Generic,
            KindArg::KernelValued => FieldKind::KernelValued,
            KindArg::GradientType => FieldKind::GradientType,
            KindArg::DivFreeGradient => FieldKind::DivFreeGradient,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classify an operator (and, with a part map, its restriction).
    Classify {
        /// Spec file path, or inline `presets:<partmap>,<operator>`.
        spec: String,
        /// Relative rank tolerance (default 1e-9 * max matrix dimension).
        #[arg(long)]
        tol: Option<f64>,
        /// Seed for the sampled directions.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Extra random unit directions beyond axes and diagonals.
        #[arg(long, default_value_t = DEFAULT_EXTRA_DIRECTIONS)]
        extra: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Write the report here instead of stdout.
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Read a KMSF field, write the corrected field `f - Pi_B Pi_ker f`.
    Project {
        /// Spec file path or inline presets; without a part map the
        /// kernel projection defaults to the identity (A = 0).
        spec: String,
        /// Input field (KMSF v1).
        field: PathBuf,
        /// Output field path.
        #[arg(short = 'o', long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Ensemble ratio summary for one catalog scenario.
    Verify {
        /// Scenario catalog (JSON).
        catalog: PathBuf,
        #[arg(long)]
        scenario: String,
        /// Override the integrability exponent p.
        #[arg(long)]
        p: Option<f64>,
        /// Use the single-exponent sides with the negative norm at `q`.
        #[arg(long)]
        lemma: bool,
        /// Exponent for --lemma (default 2).
        #[arg(long)]
        q: Option<f64>,
        /// Points per axis.
        #[arg(long, default_value_t = 32)]
        grid: usize,
        #[arg(long, default_value_t = 64)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Band limit of generated fields (default grid/4).
        #[arg(long)]
        maxfreq: Option<i64>,
        #[arg(long, value_enum, default_value_t = KindArg::Generic)]
        kind: KindArg,
        /// Exit 3 if the max ratio exceeds this bound.
        #[arg(long)]
        assert_bound: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Stochastic ratio ascent; optionally export the witness field.
    Search {
        catalog: PathBuf,
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        grid: usize,
        #[arg(long)]
        maxfreq: Option<i64>,
        /// Write the best field here (KMSF v1).
        #[arg(long)]
        witness: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Blow-up demonstration: the divergence-free gradient family makes
    /// the uncorrected trace/curl ratio explode.
    Demo {
        #[arg(long, default_value_t = 32)]
        grid: usize,
        /// Index of the family member.
        #[arg(long, default_value_t = 0)]
        j: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn load_problem(spec: &str) -> Result<(DiffOp, Option<PartMap>), Error> {
    let text = if spec.trim_start().starts_with("presets:") {
        spec.to_string()
    } else {
        fs::read_to_string(spec)?
    };
    let problem = opspec::parse_problem(&text)?;
    let op = opspec::resolve_operator(&problem.operator)?;
    let pm = problem
        .partmap
        .as_ref()
        .map(|p| opspec::resolve_partmap(p, op.dim_e()))
        .transpose()?;
    Ok((op, pm))
}

fn load_scenario(catalog: &PathBuf, label: &str, p: Option<f64>) -> Result<Scenario, Error> {
    let text = fs::read_to_string(catalog)?;
    let parsed = opspec::parse_catalog(&text)?;
    let def = parsed
        .scenarios
        .iter()
        .find(|d| d.label == label)
        .ok_or_else(|| {
            Error::Input(format!(
                "scenario '{label}' not in catalog (available: {})",
                parsed
                    .scenarios
                    .iter()
                    .map(|d| d.label.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })?;
    let scenario = opspec::resolve_scenario(def)?;
    match p {
        Some(p) => scenario.with_p(p),
        None => Ok(scenario),
    }
}

fn operator_summary(op: &DiffOp) -> Value {
    json!({
        "name": op.name(),
        "n": op.n(),
        "k": op.order(),
        "dimE": op.dim_e(),
        "dimF": op.dim_f(),
    })
}

fn partmap_summary(pm: &PartMap) -> Value {
    json!({
        "name": pm.name(),
        "dimV": pm.dim_v(),
        "dimVtilde": pm.dim_vtilde(),
        "kernel_dim": pm.kernel_dim(),
        "bound": pm.part_map_bound(),
        "degenerate": pm.is_degenerate(),
    })
}

fn write_report(report: &Value, format: Format, out: Option<&PathBuf>) -> Result<(), Error> {
    let body = match format {
        Format::Json => {
            let mut s = to_canonical_json(report)?;
            s.push('\n');
            s
        }
        Format::Text => {
            let mut s = String::new();
            render_text(report, 0, &mut s);
            s
        }
    };
    match out {
        Some(path) => fs::write(path, body)?,
        None => print!("{body}"),
    }
    Ok(())
}

fn render_text(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, item) in map {
                match item {
                    Value::Object(_) | Value::Array(_) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render_text(item, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}{k}: {item}\n")),
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                match item {
                    Value::Object(_) | Value::Array(_) => {
                        out.push_str(&format!("{pad}-\n"));
                        render_text(item, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}- {item}\n")),
                }
            }
        }
        _ => out.push_str(&format!("{pad}{v}\n")),
    }
}

fn run() -> Result<ExitCode, Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Classify {
            spec,
            tol,
            seed,
            extra,
            format,
            out,
        } => {
            let (op, pm) = load_problem(&spec)?;
            let tol = tol.unwrap_or_else(|| default_tol(op.dim_f(), op.dim_e()));
            let dirs = DirectionSet::new(op.n(), extra, seed);
            let plain = classify(&op, &dirs, tol)?;
            let reduced = pm
                .as_ref()
                .map(|a| reduced_classify(&op, a, &dirs, tol))
                .transpose()?;
            let report = json!({
                "command": "classify",
                "operator": operator_summary(&op),
                "partmap": pm.as_ref().map(partmap_summary),
                "seed": seed,
                "tol": tol,
                "directions": dirs.len(),
                "plain": serde_json::to_value(&plain).map_err(|e| Error::Format(e.to_string()))?,
                "reduced": reduced
                    .as_ref()
                    .map(serde_json::to_value)
                    .transpose()
                    .map_err(|e| Error::Format(e.to_string()))?,
            });
            write_report(&report, format, out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Project {
            spec,
            field,
            out,
            format,
        } => {
            let (op, pm) = load_problem(&spec)?;
            let pm = match pm {
                Some(pm) => pm,
                // Without a part map the kernel is everything: A = 0.
                None => presets::partmap_preset("zero", op.dim_e())?,
            };
            let input = kmsf::load_kmsf(&field)?;
            if input.dim_v() != op.dim_e() || input.grid().n() != op.n() {
                return Err(Error::Shape(format!(
                    "field has {} components in dimension {}, operator wants {} in {}",
                    input.dim_v(),
                    input.grid().n(),
                    op.dim_e(),
                    op.n()
                )));
            }
            let corrected = input.sub(&kms_correction(&op, &pm, &input)?)?;
            kmsf::save_kmsf(&out, &corrected)?;
            let report = json!({
                "command": "project",
                "operator": operator_summary(&op),
                "partmap": partmap_summary(&pm),
                "input_l2": lp_norm(&input, 2.0),
                "output_l2": lp_norm(&corrected, 2.0),
                "output": out.display().to_string(),
            });
            write_report(&report, format, None)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            catalog,
            scenario,
            p,
            lemma,
            q,
            grid,
            count,
            seed,
            maxfreq,
            kind,
            assert_bound,
            format,
            out,
        } => {
            let scenario = load_scenario(&catalog, &scenario, p)?;
            let grid = Grid::standard(scenario.n(), grid)?;
            let maxfreq = maxfreq.unwrap_or((grid.points() as i64 / 4).max(1));
            let cfg = EnsembleConfig::new(count, maxfreq, seed, kind.into());
            let estimate = if lemma {
                estimate_constant_lemma(&scenario, &grid, &cfg, q.unwrap_or(2.0))?
            } else {
                estimate_constant(&scenario, &grid, &cfg)?
            };
            let bound_exceeded = assert_bound.map(|b| estimate.max_ratio > b);
            let report = json!({
                "command": "verify",
                "lemma": lemma,
                "q": if lemma { Some(q.unwrap_or(2.0)) } else { None },
                "assert_bound": assert_bound,
                "bound_exceeded": bound_exceeded,
                "estimate": serde_json::to_value(&estimate)
                    .map_err(|e| Error::Format(e.to_string()))?,
            });
            write_report(&report, format, out.as_ref())?;
            if bound_exceeded == Some(true) {
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Search {
            catalog,
            scenario,
            p,
            iters,
            seed,
            grid,
            maxfreq,
            witness,
            format,
            out,
        } => {
            let scenario = load_scenario(&catalog, &scenario, p)?;
            let grid = Grid::standard(scenario.n(), grid)?;
            let maxfreq = maxfreq.unwrap_or((grid.points() as i64 / 4).max(1));
            let outcome =
                adversarial_search_with(&scenario, &grid, iters, seed, maxfreq, DEFAULT_RHS_FLOOR)?;
            if let Some(path) = &witness {
                kmsf::save_kmsf(path, &outcome.best_field)?;
            }
            let report = json!({
                "command": "search",
                "outcome": serde_json::to_value(&outcome)
                    .map_err(|e| Error::Format(e.to_string()))?,
                "witness": witness.as_ref().map(|p| p.display().to_string()),
            });
            write_report(&report, format, out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Demo {
            grid,
            j,
            format,
            out,
        } => {
            let grid = Grid::standard(3, grid)?;
            let demo = null_family_demo(&grid, j)?;
            let report = json!({
                "command": "demo",
                "report": serde_json::to_value(&demo)
                    .map_err(|e| Error::Format(e.to_string()))?,
            });
            write_report(&report, format, out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

