//! Scenario documents: what to solve and with which knobs.
//!
//! Complex entries may be written as a bare number or as `[re, im]`; they are
//! always written back as pairs, so a parsed scenario serializes with every
//! default spelled out.

use num_complex::Complex64;
use parabolic_core::linalg::{CMat, CVec};
use parabolic_core::{
    build_sampled_function, GeneratorModel, LinearSolverKind, MultilinearTerm, PolynomialNonlinearity, SampledFunction,
    TimeGrid,
};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "EntryRepr", into = "[f64; 2]")]
pub struct Entry(pub f64, pub f64);

#[derive(Deserialize)]
#[serde(untagged)]
enum EntryRepr {
    Real(f64),
    Pair([f64; 2]),
}

impl From<EntryRepr> for Entry {
    fn from(r: EntryRepr) -> Self {
        match r {
            EntryRepr::Real(x) => Entry(x, 0.0),
            EntryRepr::Pair([re, im]) => Entry(re, im),
        }
    }
}

impl From<Entry> for [f64; 2] {
    fn from(e: Entry) -> Self {
        [e.0, e.1]
    }
}

impl From<Entry> for Complex64 {
    fn from(e: Entry) -> Self {
        Complex64::new(e.0, e.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_m")]
    pub m: u32,
    #[serde(rename = "N", default = "default_n")]
    pub n: usize,
}

fn default_m() -> u32 {
    16
}

fn default_n() -> usize {
    4096
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            m: default_m(),
            n: default_n(),
        }
    }
}

/// One harmonic `coefficient * exp(i frequency t)` of the right-hand side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RhsRepr")]
pub struct RhsTerm {
    pub frequency: f64,
    pub coefficient: Vec<Entry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RhsObject {
    frequency: f64,
    coefficient: Vec<Entry>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RhsRepr {
    Object(RhsObject),
    Tuple(f64, Vec<Entry>),
}

impl From<RhsRepr> for RhsTerm {
    fn from(r: RhsRepr) -> Self {
        match r {
            RhsRepr::Object(o) => RhsTerm {
                frequency: o.frequency,
                coefficient: o.coefficient,
            },
            RhsRepr::Tuple(frequency, coefficient) => RhsTerm { frequency, coefficient },
        }
    }
}

/// A `k`-linear term; coefficients flat row-major, output index first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub order: usize,
    pub coefficients: Vec<Entry>,
    #[serde(default)]
    pub symmetrize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Green,
    Band,
}

impl From<SolverChoice> for LinearSolverKind {
    fn from(s: SolverChoice) -> Self {
        match s {
            SolverChoice::Green => LinearSolverKind::Green,
            SolverChoice::Band => LinearSolverKind::Band,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardSpec {
    pub beta: f64,
    pub tol: f64,
    pub maxit: usize,
    pub solver: SolverChoice,
}

impl Default for PicardSpec {
    fn default() -> Self {
        PicardSpec {
            beta: 1.0,
            tol: 1e-10,
            maxit: 200,
            solver: SolverChoice::Green,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub eps_tail: f64,
    /// Riesz contour nodes.
    pub contour_nodes: usize,
    pub oversample: usize,
    /// Resolvent scan step on the imaginary axis.
    pub scan_step: f64,
    pub spectrum_threshold: f64,
    /// Shift grid step of the tilde norm.
    pub da: f64,
    pub residual_pairs: usize,
    /// When set, `solve-band` uses the band-limited inverse on this interval.
    pub band_range: Option<[f64; 2]>,
    pub membership_terms: usize,
    pub picard: PicardSpec,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            eps_tail: parabolic_core::dichotomy::DEFAULT_TAIL,
            contour_nodes: parabolic_core::dichotomy::DEFAULT_NODES,
            oversample: parabolic_core::band_solver::DEFAULT_OVERSAMPLE,
            scan_step: parabolic_core::semigroup::DEFAULT_SCAN_STEP,
            spectrum_threshold: parabolic_core::band::DEFAULT_SPECTRUM_THRESHOLD,
            da: parabolic_core::band::DEFAULT_DA,
            residual_pairs: 16,
            band_range: None,
            membership_terms: 16,
            picard: PicardSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(alias = "A")]
    pub generator: Vec<Vec<Entry>>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub rhs: Vec<RhsTerm>,
    #[serde(default)]
    pub nonlinearity: Vec<TermSpec>,
    #[serde(default)]
    pub options: SolverOptions,
    #[serde(default)]
    pub seed: u64,
}

/// Parses and validates a scenario. Schema errors carry the field path.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let sc: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            CliError::Scenario(inner.to_string())
        } else {
            CliError::Scenario(format!("{path}: {inner}"))
        }
    })?;
    sc.validate()?;
    Ok(sc)
}

pub fn read_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Scenario(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text)
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.generator.len()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let d = self.dim();
        if d == 0 {
            return Err(CliError::Scenario("generator: matrix is empty".into()));
        }
        for (i, row) in self.generator.iter().enumerate() {
            if row.len() != d {
                return Err(CliError::Scenario(format!(
                    "generator[{i}]: row has {} entries, expected {d}",
                    row.len()
                )));
            }
        }
        for (i, t) in self.rhs.iter().enumerate() {
            if t.coefficient.len() != d {
                return Err(CliError::Scenario(format!(
                    "rhs[{i}].coefficient: length {}, expected {d}",
                    t.coefficient.len()
                )));
            }
        }
        for (i, t) in self.nonlinearity.iter().enumerate() {
            if t.order == 0 {
                return Err(CliError::Scenario(format!("nonlinearity[{i}].order: must be positive")));
            }
            let want = d.checked_pow(t.order as u32 + 1).unwrap_or(usize::MAX);
            if t.coefficients.len() != want {
                return Err(CliError::Scenario(format!(
                    "nonlinearity[{i}].coefficients: length {}, expected d^(order+1) = {want}",
                    t.coefficients.len()
                )));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid, CliError> {
        Ok(TimeGrid::new(self.grid.m, self.grid.n)?)
    }

    pub fn model(&self) -> Result<GeneratorModel, CliError> {
        let d = self.dim();
        let a = CMat::from_fn(d, d, |i, j| self.generator[i][j].into());
        Ok(GeneratorModel::new(a)?)
    }

    pub fn rhs_function(&self, grid: TimeGrid) -> Result<SampledFunction, CliError> {
        let terms: Vec<(f64, CVec)> = self
            .rhs
            .iter()
            .map(|t| {
                (
                    t.frequency,
                    CVec::from_iterator(t.coefficient.len(), t.coefficient.iter().map(|&e| e.into())),
                )
            })
            .collect();
        Ok(build_sampled_function(grid, self.dim(), &terms)?)
    }

    pub fn nonlinearity(&self) -> Result<PolynomialNonlinearity, CliError> {
        let d = self.dim();
        let mut terms = Vec::with_capacity(self.nonlinearity.len());
        for (i, t) in self.nonlinearity.iter().enumerate() {
            let coeffs: Vec<Complex64> = t.coefficients.iter().map(|&e| e.into()).collect();
            // each term gets its own stream for the norm search
            let seed = self.seed.wrapping_add(i as u64);
            let term = if t.symmetrize {
                MultilinearTerm::symmetrized(d, t.order, coeffs, seed)?
            } else {
                MultilinearTerm::new(d, t.order, coeffs, seed)?
            };
            terms.push(term);
        }
        Ok(PolynomialNonlinearity::new(d, terms)?)
    }
}
