//! Command-line front end: run scenario files, re-run single verbs
//! against a scenario's declarations, and re-render saved reports.

mod error;
mod explain;
mod report;
mod scenario;
mod tasks;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use error::{CliError, Result};
use report::RunReport;
use scenario::{load_file, ScenarioFile, Store, TaskDecl};

#[derive(Parser)]
#[command(name = "morita", version, about = "Exact Morita equivalence workbench")]
struct Cli {
    /// Seed for every sampled check.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Truncation order for series scalars; overrides the scenario file.
    #[arg(long, global = true)]
    order: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    /// Prose with timings.
    #[default]
    Human,
    /// Canonical JSON, byte-stable across reruns.
    Machine,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every task in a scenario file.
    Run {
        scenario: PathBuf,
        /// Also write the machine report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render a saved machine report as prose.
    Explain { report: PathBuf },
    /// Classify one declared bimodule.
    VerifyEquivalence {
        #[arg(long)]
        scenario: PathBuf,
        bimodule: String,
        #[arg(long)]
        expect: Option<String>,
    },
    /// Balanced or external tensor product with a CP certificate.
    Tensor {
        #[arg(long)]
        scenario: PathBuf,
        /// Module F and equivalence E for F (x)_B E.
        #[arg(long, num_args = 2, value_names = ["F", "E"], conflicts_with = "external")]
        internal: Option<Vec<String>>,
        /// Two equivalences for the external product.
        #[arg(long, num_args = 2, value_names = ["E1", "E2"])]
        external: Option<Vec<String>>,
        #[arg(long)]
        expect: Option<String>,
    },
    /// Induce a module along an equivalence.
    Induce {
        #[arg(long)]
        scenario: PathBuf,
        e: String,
        h: String,
        #[arg(long)]
        expect: Option<String>,
    },
    /// Compose two equivalences through the balanced tensor product.
    Compose {
        #[arg(long)]
        scenario: PathBuf,
        f: String,
        e: String,
        #[arg(long)]
        expect: Option<String>,
    },
    /// Build and classify the conjugate bimodule.
    Conjugate {
        #[arg(long)]
        scenario: PathBuf,
        bimodule: String,
        #[arg(long)]
        expect: Option<String>,
    },
    /// Check that the conjugate inverts the equivalence on both sides.
    Invertibility {
        #[arg(long)]
        scenario: PathBuf,
        bimodule: String,
        #[arg(long)]
        expect: Option<String>,
    },
    /// Decide whether two pairings on the same module are isometric.
    Isometric {
        #[arg(long)]
        scenario: PathBuf,
        module_a: String,
        module_b: String,
        #[arg(long)]
        expect: Option<String>,
    },
    /// Replace an idempotent by a hermitian one.
    Kaplansky {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        algebra: Option<String>,
        #[arg(long)]
        deformation: Option<String>,
        /// Idempotent matrix as inline JSON.
        #[arg(long)]
        element: String,
        #[arg(long)]
        expect: Option<String>,
    },
    /// Factor a positive invertible element as u*u.
    Factor {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        algebra: Option<String>,
        #[arg(long)]
        deformation: Option<String>,
        /// Hermitian matrix as inline JSON.
        #[arg(long)]
        element: String,
        #[arg(long)]
        expect: Option<String>,
    },
    /// Present a strong equivalence as a full corner.
    StructureTheorem {
        #[arg(long)]
        scenario: PathBuf,
        bimodule: String,
        #[arg(long)]
        expect: Option<String>,
    },
    /// Certify an inversion or factorization property over a family.
    CheckProperty {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        which: String,
        #[arg(long)]
        algebra: Option<String>,
        #[arg(long)]
        deformation: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        expect: Option<String>,
    },
    /// Recheck the laws of a declared deformation.
    DeformValidate {
        #[arg(long)]
        scenario: PathBuf,
        deformation: String,
        #[arg(long)]
        expect: Option<String>,
    },
    /// Factor a positive element order by order in the deformation.
    DeformFactor {
        #[arg(long)]
        scenario: PathBuf,
        deformation: String,
        /// Hermitian matrix over the deformed algebra, inline JSON.
        #[arg(long)]
        element: String,
        /// Classical starting factor, inline JSON.
        #[arg(long)]
        witness: Option<String>,
        /// Constant projections to factor blockwise against, inline JSON.
        #[arg(long)]
        projections: Option<String>,
        #[arg(long)]
        expect: Option<String>,
    },
    /// Split a declared automorphism into flow and star parts.
    DecomposeAuto {
        #[arg(long)]
        scenario: PathBuf,
        automorphism: String,
        #[arg(long)]
        expect: Option<String>,
    },
    /// Test every derivation of a deformation for quasi-innerness.
    Derivations {
        #[arg(long)]
        scenario: PathBuf,
        deformation: String,
        #[arg(long)]
        expect: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    let seed = cli.seed;
    let order = cli.order;
    let format = cli.format;
    match dispatch(cli.cmd, seed, order, format) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}

fn dispatch(cmd: Cmd, seed: u64, order: Option<usize>, format: Format) -> Result<i32> {
    match cmd {
        Cmd::Run { scenario, out } => {
            let file = load_file(&scenario)?;
            let store = Store::resolve(&file, order)?;
            let name = scenario_name(&file, Some(&scenario));
            let report = tasks::run_tasks(&store, &file.tasks, seed, name, file.assertions.clone())?;
            finish(&report, format, out.as_deref())
        }
        Cmd::Explain { report } => {
            print!("{}", explain::explain(&report)?);
            Ok(0)
        }
        Cmd::VerifyEquivalence { scenario, bimodule, expect } => one_task(
            &scenario,
            order,
            seed,
            format,
            TaskDecl {
                verb: "verify-equivalence".into(),
                bimodule: Some(bimodule),
                expect,
                ..TaskDecl::default()
            },
        ),
        Cmd::Tensor { scenario, internal, external, expect } => {
            let mut task = TaskDecl {
                verb: "tensor".into(),
                expect,
                ..TaskDecl::default()
            };
            match (internal, external) {
                (Some(fe), None) => {
                    task.f = Some(fe[0].clone());
                    task.e = Some(fe[1].clone());
                }
                (None, Some(ee)) => {
                    task.e1 = Some(ee[0].clone());
                    task.e2 = Some(ee[1].clone());
                }
                _ => {
                    return Err(CliError::SchemaViolation(
                        "tensor needs exactly one of --internal F E or --external E1 E2".into(),
                    ))
                }
            }
            one_task(&scenario, order, seed, format, task)
        }
        Cmd::Induce { scenario, e, h, expect } => one_task(
            &scenario,
            order,
            seed,
            format,
            TaskDecl {
                verb: "induce".into(),
                e: Some(e),
                h: Some(h),
                expect,
                ..TaskDecl::default()
            },
        ),
        Cmd::Compose { scenario, f, e, expect } => one_task(
            &scenario,
            order,
            seed,
            format,
            TaskDecl {
                verb: "compose".into(),
                f: Some(f),
                e: Some(e),
                expect,
                ..TaskDecl::default()
            },
        ),
        Cmd::Conjugate { scenario, bimodule, expect } => one_task(
            &scenario,
            order,
            seed,
            format,
            TaskDecl {
                verb: "conjugate".into(),
                bimodule: Some(bimodule),
                expect,
                ..TaskDecl::default()
            },
        ),
        Cmd::Invertibility { scenario, bimodule, expect } => one_task(
            &scenario,
            order,
            seed,
            format,
            TaskDecl {
                verb: "invertibility".into(),
                bimodule: Some(bimodule),
                expect,
                ..TaskDecl::default()
            },
        ),
        Cmd::Isometric { scenario, module_a, module_b, expect } => one_task(
            &scenario,
            order,
            seed,
            format,
            TaskDecl {
                verb: "isometric".into(),
                module_a: Some(module_a),
                module_b: Some(module_b),
                expect,
                ..TaskDecl::default()
            },
        ),
        Cmd::Kaplansky { scenario, algebra, deformation, element, expect } => maybe_task(
            scenario.as_deref(),
            order,
            seed,
            format,
            TaskDecl {
                verb: "kaplansky".into(),
                algebra,
                deformation,
                element: Some(parse_inline(&element, "element")?),
                expect,
                ..TaskDecl::default()
            },
        ),
        Cmd::Factor { scenario, algebra, deformation, element, expect } => maybe_task(
            scenario.as_deref(),
            order,
            seed,
            format,
            TaskDecl {
                verb: "factor".into(),
                algebra,
                deformation,
                element: Some(parse_inline(&element, "element")?),
                expect,
                ..TaskDecl::default()
            },
        ),
        Cmd::StructureTheorem { scenario, bimodule, expect } => one_task(
            &scenario,
            order,
            seed,
            format,
            TaskDecl {
                verb: "structure-theorem".into(),
                bimodule: Some(bimodule),
                expect,
                ..TaskDecl::default()
            },
        ),
        Cmd::CheckProperty { scenario, which, algebra, deformation, samples, expect } => {
            maybe_task(
                scenario.as_deref(),
                order,
                seed,
                format,
                TaskDecl {
                    verb: "check-property".into(),
                    which: Some(which),
                    algebra,
                    deformation,
                    samples,
                    expect,
                    ..TaskDecl::default()
                },
            )
        }
        Cmd::DeformValidate { scenario, deformation, expect } => one_task(
            &scenario,
            order,
            seed,
            format,
            TaskDecl {
                verb: "deform-validate".into(),
                deformation: Some(deformation),
                expect,
                ..TaskDecl::default()
            },
        ),
        Cmd::DeformFactor { scenario, deformation, element, witness, projections, expect } => {
            one_task(
                &scenario,
                order,
                seed,
                format,
                TaskDecl {
                    verb: "deform-factor".into(),
                    deformation: Some(deformation),
                    element: Some(parse_inline(&element, "element")?),
                    witness: witness.map(|w| parse_inline(&w, "witness")).transpose()?,
                    projections: projections
                        .map(|p| parse_inline_list(&p, "projections"))
                        .transpose()?,
                    expect,
                    ..TaskDecl::default()
                },
            )
        }
        Cmd::DecomposeAuto { scenario, automorphism, expect } => one_task(
            &scenario,
            order,
            seed,
            format,
            TaskDecl {
                verb: "decompose-auto".into(),
                automorphism: Some(automorphism),
                expect,
                ..TaskDecl::default()
            },
        ),
        Cmd::Derivations { scenario, deformation, expect } => one_task(
            &scenario,
            order,
            seed,
            format,
            TaskDecl {
                verb: "derivations".into(),
                deformation: Some(deformation),
                expect,
                ..TaskDecl::default()
            },
        ),
    }
}

fn scenario_name(file: &ScenarioFile, path: Option<&Path>) -> String {
    if let Some(n) = &file.name {
        return n.clone();
    }
    path.and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "inline".into())
}

fn one_task(
    scenario: &Path,
    order: Option<usize>,
    seed: u64,
    format: Format,
    task: TaskDecl,
) -> Result<i32> {
    maybe_task(Some(scenario), order, seed, format, task)
}

/// Run a single verb against a scenario's declarations (or none).
fn maybe_task(
    scenario: Option<&Path>,
    order: Option<usize>,
    seed: u64,
    format: Format,
    task: TaskDecl,
) -> Result<i32> {
    let file = match scenario {
        Some(p) => load_file(p)?,
        None => ScenarioFile::empty(),
    };
    let store = Store::resolve(&file, order)?;
    let name = scenario_name(&file, scenario);
    let report = tasks::run_tasks(&store, &[task], seed, name, file.assertions.clone())?;
    finish(&report, format, None)
}

type AMatJson = Vec<Vec<Vec<String>>>;

fn parse_inline(text: &str, what: &str) -> Result<AMatJson> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: format!("inline {what}"),
        detail: e.to_string(),
    })
}

fn parse_inline_list(text: &str, what: &str) -> Result<Vec<AMatJson>> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: format!("inline {what}"),
        detail: e.to_string(),
    })
}

fn finish(report: &RunReport, format: Format, out: Option<&Path>) -> Result<i32> {
    let machine = report.machine_string();
    if let Some(path) = out {
        std::fs::write(path, &machine)?;
    }
    match format {
        Format::Machine => print!("{machine}"),
        Format::Human => print!("{}", report.human_string()),
    }
    Ok(if report.overall_ok() { 0 } else { 1 })
}
