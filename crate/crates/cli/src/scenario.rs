//! Scenario files: named declarations of algebras, deformations, modules,
//! bimodules, and automorphisms, plus an ordered task list. Declarations
//! are resolved and validated up front; tasks only ever see validated
//! objects.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use morita::algebra::{AlgebraKind, AlgebraRef, StarAlgebra};
use morita::amat::{AElt, AMat};
use morita::deform::DeformedAlgebra;
use morita::linalg::Mat;
use morita::module::{InnerKind, InnerProductModule, MElt};
use morita::morita::{
    column_equivalence, corner_equivalence, identity_bimodule, verify_equivalence,
    EquivalenceBimodule,
};
use morita::scalar::{BaseRing, Scalar};
use morita::structure::validate_automorphism;
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::report::SCHEMA_VERSION;

type AEltJson = Vec<String>;
type MatJson = Vec<Vec<String>>;
type AMatJson = Vec<Vec<AEltJson>>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u64,
    #[serde(default)]
    pub name: Option<String>,
    /// Truncation order for series scalars; absent means classical.
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default)]
    pub algebras: BTreeMap<String, AlgebraDecl>,
    #[serde(default)]
    pub deformations: BTreeMap<String, DeformationDecl>,
    #[serde(default)]
    pub modules: BTreeMap<String, ModuleDecl>,
    #[serde(default)]
    pub bimodules: BTreeMap<String, BimoduleDecl>,
    #[serde(default)]
    pub automorphisms: BTreeMap<String, AutomorphismDecl>,
    #[serde(default)]
    pub assertions: Vec<String>,
    #[serde(default)]
    pub tasks: Vec<TaskDecl>,
}

impl ScenarioFile {
    pub fn empty() -> Self {
        ScenarioFile {
            schema_version: SCHEMA_VERSION,
            name: None,
            order: None,
            algebras: BTreeMap::new(),
            deformations: BTreeMap::new(),
            modules: BTreeMap::new(),
            bimodules: BTreeMap::new(),
            automorphisms: BTreeMap::new(),
            assertions: Vec::new(),
            tasks: Vec::new(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
pub enum AlgebraDecl {
    /// `"base"`, `"matrix(base, n)"`, `"grassmann"`, `"dual_numbers"`,
    /// `"swap_pair"`.
    Builtin(String),
    /// Structure constants, given directly.
    Explicit {
        rank: usize,
        mult: Vec<Vec<AEltJson>>,
        unit: AEltJson,
        invol: MatJson,
        #[serde(default)]
        basis_names: Option<Vec<String>>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformationDecl {
    pub classical: String,
    pub order: usize,
    /// One bilinear correction table per positive order; empty means the
    /// trivial deformation.
    #[serde(default)]
    pub cochains: Vec<Vec<Vec<AEltJson>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleDecl {
    pub algebra: String,
    pub ambient_rank: usize,
    #[serde(default)]
    pub generators: Option<Vec<Vec<AEltJson>>>,
    #[serde(default = "PresentationDecl::free")]
    pub presentation: PresentationDecl,
    pub inner: InnerDecl,
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresentationDecl {
    Free,
    Generated,
    Projective(AMatJson),
}

impl PresentationDecl {
    fn free() -> Self {
        PresentationDecl::Free
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerDecl {
    Canonical,
    Twisted(AMatJson),
    Explicit(AMatJson),
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BimoduleDecl {
    /// The column equivalence between `M_n` of the base and the base.
    Column { n: usize },
    /// An algebra as a bimodule over itself.
    Identity(String),
    /// The equivalence induced by a full hermitian projection.
    Corner { algebra: String, projection: AMatJson },
    /// A module with a declared left action and left-valued pairing table.
    Explicit {
        module: String,
        left: String,
        action: Vec<MatJson>,
        left_table: Vec<Vec<AEltJson>>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomorphismDecl {
    #[serde(default)]
    pub algebra: Option<String>,
    #[serde(default)]
    pub deformation: Option<String>,
    pub matrix: MatJson,
}

#[derive(Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct TaskDecl {
    #[serde(default)]
    pub name: Option<String>,
    pub verb: String,
    /// Expected outcome; defaults to "holds" (class verbs: "strong").
    #[serde(default)]
    pub expect: Option<String>,
    #[serde(default)]
    pub bimodule: Option<String>,
    #[serde(default)]
    pub f: Option<String>,
    #[serde(default)]
    pub e: Option<String>,
    #[serde(default)]
    pub e1: Option<String>,
    #[serde(default)]
    pub e2: Option<String>,
    #[serde(default)]
    pub h: Option<String>,
    #[serde(default)]
    pub module_a: Option<String>,
    #[serde(default)]
    pub module_b: Option<String>,
    #[serde(default)]
    pub algebra: Option<String>,
    #[serde(default)]
    pub deformation: Option<String>,
    #[serde(default)]
    pub automorphism: Option<String>,
    #[serde(default)]
    pub which: Option<String>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub element: Option<AMatJson>,
    #[serde(default)]
    pub witness: Option<AMatJson>,
    #[serde(default)]
    pub projections: Option<Vec<AMatJson>>,
}

pub fn load_file(path: &Path) -> Result<ScenarioFile> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse {
        path: shown.clone(),
        detail: e.to_string(),
    })?;
    let file: ScenarioFile = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: shown.clone(),
        detail: e.to_string(),
    })?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(CliError::SchemaViolation(format!(
            "{shown}: schema_version {} is not supported (expected {})",
            file.schema_version, SCHEMA_VERSION
        )));
    }
    Ok(file)
}

/// A declared automorphism, validated against its host at resolution.
pub struct Automorphism {
    /// Set when the host is a deformation; order-by-order verbs need it.
    pub deformation: Option<String>,
    pub matrix: Mat,
}

pub struct Store {
    pub ring: BaseRing,
    pub order: Option<usize>,
    pub algebras: BTreeMap<String, AlgebraRef>,
    pub deformations: BTreeMap<String, DeformedAlgebra>,
    pub modules: BTreeMap<String, InnerProductModule>,
    pub bimodules: BTreeMap<String, EquivalenceBimodule>,
    pub automorphisms: BTreeMap<String, Automorphism>,
}

impl Store {
    /// Resolve every declaration. `order_flag` (from the command line)
    /// overrides the file's own truncation order.
    pub fn resolve(file: &ScenarioFile, order_flag: Option<usize>) -> Result<Self> {
        let order = order_flag.or(file.order);
        let ring = match order {
            None => BaseRing::Rationals,
            Some(n) => BaseRing::series(n)?,
        };
        let mut store = Store {
            ring,
            order,
            algebras: BTreeMap::new(),
            deformations: BTreeMap::new(),
            modules: BTreeMap::new(),
            bimodules: BTreeMap::new(),
            automorphisms: BTreeMap::new(),
        };

        for (name, decl) in &file.algebras {
            let alg = resolve_algebra_decl(decl, ring, name)?;
            store.algebras.insert(name.clone(), alg);
        }

        for (name, decl) in &file.deformations {
            // The classical side always lives over plain rationals, no
            // matter what the ambient ring of the scenario is.
            let classical = match file.algebras.get(&decl.classical) {
                Some(d) => resolve_algebra_decl(d, BaseRing::Rationals, &decl.classical)?,
                None => builtin_algebra(&decl.classical, BaseRing::Rationals)
                    .ok_or_else(|| CliError::UnresolvedReference(decl.classical.clone()))?,
            };
            let da = if decl.cochains.is_empty() {
                DeformedAlgebra::trivial(&classical, decl.order)?
            } else {
                let d = classical.dim();
                let mut cochains = Vec::with_capacity(decl.cochains.len());
                for (k, table) in decl.cochains.iter().enumerate() {
                    let mut rows = Vec::with_capacity(d);
                    for row in table {
                        let mut out = Vec::with_capacity(d);
                        for entry in row {
                            out.push(parse_aelt(
                                &classical,
                                entry,
                                &format!("deformation {name} cochain {}", k + 1),
                            )?);
                        }
                        rows.push(out);
                    }
                    cochains.push(rows);
                }
                DeformedAlgebra::new(&classical, decl.order, &cochains)?
            };
            store.deformations.insert(name.clone(), da);
        }

        for (name, decl) in &file.modules {
            let alg = store.algebra_like(&decl.algebra)?;
            let inner = match &decl.inner {
                InnerDecl::Canonical => InnerKind::Canonical,
                InnerDecl::Twisted(h) => {
                    InnerKind::Twisted(parse_amat(&alg, h, &format!("module {name} twist"))?)
                }
                InnerDecl::Explicit(g) => {
                    InnerKind::Explicit(parse_amat(&alg, g, &format!("module {name} table"))?)
                }
            };
            let m = match &decl.presentation {
                PresentationDecl::Free => {
                    if decl.generators.is_some() {
                        return Err(CliError::SchemaViolation(format!(
                            "module {name}: a free module lists no generators"
                        )));
                    }
                    InnerProductModule::free(alg, decl.ambient_rank, inner)?
                }
                PresentationDecl::Generated => {
                    let gens = decl.generators.as_ref().ok_or_else(|| {
                        CliError::SchemaViolation(format!(
                            "module {name}: generated modules need generators"
                        ))
                    })?;
                    let gens = gens
                        .iter()
                        .map(|g| parse_melt(&alg, g, &format!("module {name} generator")))
                        .collect::<Result<Vec<MElt>>>()?;
                    InnerProductModule::generated(alg, decl.ambient_rank, gens, inner)?
                }
                PresentationDecl::Projective(p) => {
                    let p = parse_amat(&alg, p, &format!("module {name} projection"))?;
                    if p.rows() != decl.ambient_rank {
                        return Err(CliError::SchemaViolation(format!(
                            "module {name}: projection size differs from ambient_rank"
                        )));
                    }
                    InnerProductModule::projective(alg, p, inner)?
                }
            };
            store.modules.insert(name.clone(), m);
        }

        for (name, decl) in &file.bimodules {
            let e = match decl {
                BimoduleDecl::Column { n } => column_equivalence(store.ring, *n)?,
                BimoduleDecl::Identity(aname) => {
                    identity_bimodule(&store.algebra_like(aname)?)?
                }
                BimoduleDecl::Corner { algebra, projection } => {
                    let alg = store.algebra_like(algebra)?;
                    let p = parse_amat(&alg, projection, &format!("bimodule {name} projection"))?;
                    corner_equivalence(&p)?
                }
                BimoduleDecl::Explicit { module, left, action, left_table } => {
                    let m = store.module(module)?.clone();
                    let left = store.algebra_like(left)?;
                    let ring = m.algebra().ring();
                    let action = action
                        .iter()
                        .map(|a| parse_mat(ring, a, &format!("bimodule {name} action")))
                        .collect::<Result<Vec<Mat>>>()?;
                    let table = left_table
                        .iter()
                        .map(|row| {
                            row.iter()
                                .map(|e| {
                                    parse_aelt(&left, e, &format!("bimodule {name} table"))
                                })
                                .collect::<Result<Vec<AElt>>>()
                        })
                        .collect::<Result<Vec<Vec<AElt>>>>()?;
                    verify_equivalence(&m, &left, &action, &table)
                }
            };
            store.bimodules.insert(name.clone(), e);
        }

        for (name, decl) in &file.automorphisms {
            let (host, deformation) = match (&decl.algebra, &decl.deformation) {
                (Some(a), None) => (store.algebra_like(a)?, None),
                (None, Some(d)) => {
                    let da = store.deformation(d)?;
                    (da.algebra().clone(), Some(d.clone()))
                }
                _ => {
                    return Err(CliError::SchemaViolation(format!(
                        "automorphism {name}: declare exactly one of algebra/deformation"
                    )))
                }
            };
            let matrix = parse_mat(host.ring(), &decl.matrix, &format!("automorphism {name}"))?;
            validate_automorphism(&host, &matrix)?;
            store
                .automorphisms
                .insert(name.clone(), Automorphism { deformation, matrix });
        }

        Ok(store)
    }

    /// An algebra by declared name, by deformation name, or as a builtin
    /// constructor expression.
    pub fn algebra_like(&self, name: &str) -> Result<AlgebraRef> {
        if let Some(a) = self.algebras.get(name) {
            return Ok(a.clone());
        }
        if let Some(d) = self.deformations.get(name) {
            return Ok(d.algebra().clone());
        }
        builtin_algebra(name, self.ring)
            .ok_or_else(|| CliError::UnresolvedReference(name.to_string()))
    }

    pub fn deformation(&self, name: &str) -> Result<&DeformedAlgebra> {
        self.deformations
            .get(name)
            .ok_or_else(|| CliError::UnresolvedReference(name.to_string()))
    }

    pub fn module(&self, name: &str) -> Result<&InnerProductModule> {
        self.modules
            .get(name)
            .ok_or_else(|| CliError::UnresolvedReference(name.to_string()))
    }

    pub fn bimodule(&self, name: &str) -> Result<&EquivalenceBimodule> {
        self.bimodules
            .get(name)
            .ok_or_else(|| CliError::UnresolvedReference(name.to_string()))
    }

    pub fn automorphism(&self, name: &str) -> Result<&Automorphism> {
        self.automorphisms
            .get(name)
            .ok_or_else(|| CliError::UnresolvedReference(name.to_string()))
    }
}

fn resolve_algebra_decl(decl: &AlgebraDecl, ring: BaseRing, name: &str) -> Result<AlgebraRef> {
    match decl {
        AlgebraDecl::Builtin(expr) => builtin_algebra(expr, ring)
            .ok_or_else(|| CliError::SchemaViolation(format!("algebra {name}: unknown builtin {expr:?}"))),
        AlgebraDecl::Explicit { rank, mult, unit, invol, basis_names } => {
            let d = *rank;
            if mult.len() != d || mult.iter().any(|r| r.len() != d) {
                return Err(CliError::SchemaViolation(format!(
                    "algebra {name}: multiplication table must be {d} x {d}"
                )));
            }
            let mut table = Vec::with_capacity(d);
            for row in mult {
                let mut out = Vec::with_capacity(d);
                for entry in row {
                    out.push(parse_scalars(ring, entry, d, &format!("algebra {name} table"))?);
                }
                table.push(out);
            }
            let unit = parse_scalars(ring, unit, d, &format!("algebra {name} unit"))?;
            let invol = parse_mat(ring, invol, &format!("algebra {name} involution"))?;
            let names = basis_names
                .clone()
                .unwrap_or_else(|| (0..d).map(|i| format!("e{i}")).collect());
            let alg = StarAlgebra::new_explicit(
                name.to_string(),
                ring,
                table,
                unit,
                invol,
                names,
                AlgebraKind::Custom,
            )?;
            Ok(Arc::new(alg))
        }
    }
}

/// Builtin constructor expressions accepted wherever an algebra name can
/// appear.
pub fn builtin_algebra(expr: &str, ring: BaseRing) -> Option<AlgebraRef> {
    let t = expr.trim();
    match t {
        "base" => return Some(Arc::new(StarAlgebra::base(ring))),
        "grassmann" | "grassmann(2)" => return Some(Arc::new(StarAlgebra::grassmann(ring))),
        "dual_numbers" | "dual-numbers" => {
            return Some(Arc::new(StarAlgebra::dual_numbers(ring)))
        }
        "swap_pair" | "swap-pair" => return Some(Arc::new(StarAlgebra::swap_pair(ring))),
        _ => {}
    }
    let inner = t.strip_prefix("matrix(")?.strip_suffix(')')?;
    let mut parts = inner.splitn(2, ',');
    let head = parts.next()?.trim();
    let n: usize = parts.next()?.trim().parse().ok()?;
    if head != "base" {
        return None;
    }
    StarAlgebra::matrix(ring, n).ok().map(Arc::new)
}

pub fn parse_scalar(ring: BaseRing, s: &str, at: &str) -> Result<Scalar> {
    Scalar::parse(ring, s)
        .map_err(|e| CliError::SchemaViolation(format!("{at}: bad scalar {s:?}: {e}")))
}

fn parse_scalars(ring: BaseRing, v: &[String], want: usize, at: &str) -> Result<Vec<Scalar>> {
    if v.len() != want {
        return Err(CliError::SchemaViolation(format!(
            "{at}: expected {want} coefficients, got {}",
            v.len()
        )));
    }
    v.iter().map(|s| parse_scalar(ring, s, at)).collect()
}

pub fn parse_aelt(alg: &AlgebraRef, v: &[String], at: &str) -> Result<AElt> {
    parse_scalars(alg.ring(), v, alg.dim(), at)
}

pub fn parse_melt(alg: &AlgebraRef, v: &[AEltJson], at: &str) -> Result<MElt> {
    v.iter().map(|e| parse_aelt(alg, e, at)).collect()
}

pub fn parse_mat(ring: BaseRing, rows: &[Vec<String>], at: &str) -> Result<Mat> {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    if rows.iter().any(|x| x.len() != c) {
        return Err(CliError::SchemaViolation(format!("{at}: ragged matrix")));
    }
    let mut parsed = Vec::with_capacity(r);
    for row in rows {
        let mut out = Vec::with_capacity(c);
        for s in row {
            out.push(parse_scalar(ring, s, at)?);
        }
        parsed.push(out);
    }
    Ok(Mat::from_fn(ring, r, c, |i, j| parsed[i][j].clone()))
}

pub fn parse_amat(alg: &AlgebraRef, rows: &AMatJson, at: &str) -> Result<AMat> {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    if rows.iter().any(|x| x.len() != c) {
        return Err(CliError::SchemaViolation(format!("{at}: ragged matrix")));
    }
    let mut data = Vec::with_capacity(r * c);
    for row in rows {
        for entry in row {
            data.push(parse_aelt(alg, entry, at)?);
        }
    }
    AMat::from_entries(alg.clone(), r, c, data).map_err(CliError::from)
}
