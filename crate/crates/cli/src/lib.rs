//! Batch driver: a JSON scenario goes in, a JSON report (and optionally a CSV
//! trajectory) comes out.
//!
//! Reports have the shape
//! `{schema_version, command, inputs, results, certificates, timing}` where
//! every certificate is a `{name, computed, bound, ok}` record. Only `timing`
//! depends on the wall clock.

use parabolic_core::linalg;
use parabolic_core::{
    apply_nonlinearity, as_membership_criterion, as_norm, as_tilde_norm, band_kernel, band_kernel_bound,
    beurling_spectrum, check_hyperbolic, inverse_norm_certificate, kernel_l1_norm, lipschitz_bound, picard_solve,
    residual_probe, solve_band_limited, verify_window_kernel_bound, BandSolver, GeneratorModel, GreenSolver,
    PicardOptions, SampledFunction, Verdict, WindowSymbol,
};
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

pub mod scenario;

pub use scenario::{parse_scenario, read_scenario, Scenario};

pub const SCHEMA_VERSION: u32 = 1;

/// Slack on the projector identities reported by `check`.
const PROJECTOR_TOL: f64 = 1e-9;
/// Literal band sum against the global multiplier.
const FAST_PATH_TOL: f64 = 1e-9;
/// Mild residual bound is this times `1 + ||y||_sup`.
const RESIDUAL_TOL: f64 = 1e-6;
/// Partition of unity should reassemble to round-off.
const PARTITION_TOL: f64 = 1e-12;

#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent scenario.
    Scenario(String),
    /// A precondition of a numerical routine failed.
    Core(parabolic_core::Error),
    /// Anything else: I/O, serialization.
    Internal(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Scenario(_) => "ScenarioError",
            CliError::Core(e) => e.kind(),
            CliError::Internal(_) => "InternalError",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Scenario(_) | CliError::Core(_) => 2,
            CliError::Internal(_) => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "kind": self.kind(), "message": self.to_string() })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Scenario(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Internal(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<parabolic_core::Error> for CliError {
    fn from(e: parabolic_core::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Check,
    SolveGreen,
    SolveBand,
    AsNorm,
    Spectrum,
    Certify,
    Nonlinear,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Check,
        Command::SolveGreen,
        Command::SolveBand,
        Command::AsNorm,
        Command::Spectrum,
        Command::Certify,
        Command::Nonlinear,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::SolveGreen => "solve-green",
            Command::SolveBand => "solve-band",
            Command::AsNorm => "asnorm",
            Command::Spectrum => "spectrum",
            Command::Certify => "certify",
            Command::Nonlinear => "nonlinear",
        }
    }

    pub fn parse(s: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Certificate {
    pub name: String,
    pub computed: f64,
    pub bound: f64,
    pub ok: bool,
}

impl Certificate {
    /// `computed <= bound`.
    pub fn upper(name: impl Into<String>, computed: f64, bound: f64) -> Self {
        Certificate {
            name: name.into(),
            computed,
            bound,
            ok: computed <= bound,
        }
    }

    fn with_ok(name: impl Into<String>, computed: f64, bound: f64, ok: bool) -> Self {
        Certificate {
            name: name.into(),
            computed,
            bound,
            ok,
        }
    }
}

/// What a command produced: the report plus the trajectory, if any.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Value,
    pub solution: Option<SampledFunction>,
}

impl Outcome {
    pub fn certificates_ok(&self) -> bool {
        self.report["certificates"]
            .as_array()
            .map(|c| c.iter().all(|x| x["ok"] == Value::Bool(true)))
            .unwrap_or(true)
    }
}

struct Partial {
    results: Value,
    certificates: Vec<Certificate>,
    solution: Option<SampledFunction>,
}

pub fn run_command(command: Command, scenario: &Scenario) -> Result<Outcome, CliError> {
    scenario.validate()?;
    let start = Instant::now();
    let part = match command {
        Command::Check => check(scenario)?,
        Command::SolveGreen => solve_green(scenario)?,
        Command::SolveBand => solve_band(scenario)?,
        Command::AsNorm => asnorm(scenario)?,
        Command::Spectrum => spectrum(scenario)?,
        Command::Certify => certify(scenario)?,
        Command::Nonlinear => nonlinear(scenario)?,
    };
    let elapsed = start.elapsed().as_secs_f64();
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command.name(),
        "inputs": scenario,
        "results": part.results,
        "certificates": part.certificates,
        "timing": { "seconds": elapsed },
    });
    Ok(Outcome {
        report,
        solution: part.solution,
    })
}

/// Error document for a failed run.
pub fn error_report(command: Option<Command>, err: &CliError) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command.map(|c| c.name()),
        "error": err.to_json(),
    })
}

/// The report without its `timing` section, as written to disk.
pub fn strip_timing(report: &Value) -> Value {
    let mut r = report.clone();
    if let Some(obj) = r.as_object_mut() {
        obj.remove("timing");
    }
    r
}

fn complex_pair(z: num_complex::Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn check(sc: &Scenario) -> Result<Partial, CliError> {
    let model = sc.model()?;
    let margin = check_hyperbolic(&model);
    let gap = model.check_spectral_gap();
    let m = if model.has_spectral_gap() {
        Some(model.resolvent_bound(sc.options.scan_step)?.m)
    } else {
        None
    };
    let mut certificates = Vec::new();
    let projections = if margin > parabolic_core::dichotomy::HYPERBOLIC_TOL {
        let split = parabolic_core::riesz_projections(&model, sc.options.contour_nodes)?;
        let idem = split.idempotency_error();
        let comm = split.commutation_error(&model, 1.0);
        certificates.push(Certificate::upper("projector_idempotency", idem, PROJECTOR_TOL));
        certificates.push(Certificate::upper("projector_commutation", comm, PROJECTOR_TOL));
        json!({
            "trace_in": split.trace_in(),
            "dim_in": split.sigma_in.len(),
            "dim_out": split.sigma_out.len(),
            "nodes": split.nodes,
            "doubling_delta": split.doubling_delta,
            "idempotency_error": idem,
            "complement_error": split.complement_error(),
            "commutation_error": comm,
        })
    } else {
        Value::Null
    };
    let eig: Vec<[f64; 2]> = model.eigenvalues().iter().map(|&z| complex_pair(z)).collect();
    Ok(Partial {
        results: json!({
            "dim": model.dim(),
            "norm": model.norm(),
            "eigenvalues": eig,
            "gap": gap,
            "M": m,
            "growth_bound": model.growth_bound(),
            "hyperbolic_margin": margin,
            "hyperbolic": margin > parabolic_core::dichotomy::HYPERBOLIC_TOL,
            "projections": projections,
        }),
        certificates,
        solution: None,
    })
}

fn residual_certificate(
    sc: &Scenario,
    model: &GeneratorModel,
    x: &SampledFunction,
    y: &SampledFunction,
) -> Result<(Value, Certificate), CliError> {
    let probe = residual_probe(model, x, y, sc.seed, sc.options.residual_pairs)?;
    let bound = RESIDUAL_TOL * (1.0 + y.sup_norm());
    let pairs: Vec<[f64; 3]> = probe.pairs.iter().map(|&(s, t, r)| [s, t, r]).collect();
    Ok((
        json!({ "max": probe.max_residual, "pairs": pairs }),
        Certificate::upper("mild_residual", probe.max_residual, bound),
    ))
}

fn solve_green(sc: &Scenario) -> Result<Partial, CliError> {
    let model = sc.model()?;
    let grid = sc.grid()?;
    let y = sc.rhs_function(grid)?;
    let solver = GreenSolver::with_options(&model, &grid, sc.options.contour_nodes, sc.options.eps_tail)?;
    let x = solver.solve(&y)?;
    let k = solver.kernel();
    let l1 = kernel_l1_norm(k);
    let (residual, res_cert) = residual_certificate(sc, &model, &x, &y)?;
    let certificates = vec![
        res_cert,
        // ||G * y||_sup <= ||G||_1 ||y||_sup
        Certificate::upper(
            "young_inequality",
            x.sup_norm(),
            l1.upper() * y.sup_norm() * (1.0 + 1e-12),
        ),
    ];
    Ok(Partial {
        results: json!({
            "sup_norm_y": y.sup_norm(),
            "sup_norm_x": x.sup_norm(),
            "as_norm_x": as_norm(&x).0,
            "kernel": {
                "t_cut": k.t_cut(),
                "decay_rate": k.decay_rate(),
                "decay_constant": k.decay_constant(),
                "eps_tail": k.eps_tail(),
                "l1": l1.value,
                "l1_upper": l1.upper(),
                "l1_converged": l1.converged,
            },
            "residual": residual,
        }),
        certificates,
        solution: Some(x),
    })
}

fn solve_band(sc: &Scenario) -> Result<Partial, CliError> {
    let model = sc.model()?;
    let grid = sc.grid()?;
    let y = sc.rhs_function(grid)?;
    if let Some([lo, hi]) = sc.options.band_range {
        let x = solve_band_limited(&model, &y, lo, hi)?;
        let (residual, res_cert) = residual_certificate(sc, &model, &x, &y)?;
        return Ok(Partial {
            results: json!({
                "mode": "band_limited",
                "band_range": [lo, hi],
                "sup_norm_y": y.sup_norm(),
                "sup_norm_x": x.sup_norm(),
                "residual": residual,
            }),
            certificates: vec![res_cert],
            solution: Some(x),
        });
    }
    let solver = BandSolver::with_scan_step(&model, &grid, sc.options.oversample, sc.options.scan_step)?;
    let (x, rep) = solver.solve(&y)?;
    let mut certificates = Vec::new();
    let bands: Vec<Value> = rep
        .entries
        .iter()
        .map(|e| {
            certificates.push(Certificate::with_ok(
                format!("band_kernel_l1[{}]", e.n),
                e.kernel_l1.upper(),
                e.kernel_bound,
                e.kernel_ok,
            ));
            json!({
                "n": e.n,
                "input_norm": e.input_norm,
                "output_norm": e.output_norm,
                "kernel_l1": e.kernel_l1.value,
                "kernel_l1_upper": e.kernel_l1.upper(),
                "kernel_bound": e.kernel_bound,
                "young_ok": e.young_ok,
            })
        })
        .collect();
    certificates.push(Certificate::with_ok(
        "as_norm_ratio",
        rep.ratio(),
        rep.certificate,
        rep.certificate_ok,
    ));
    certificates.push(Certificate::upper(
        "fast_path_difference",
        rep.fast_path_difference,
        FAST_PATH_TOL,
    ));
    let (residual, res_cert) = residual_certificate(sc, &model, &x, &y)?;
    certificates.push(res_cert);
    Ok(Partial {
        results: json!({
            "mode": "band",
            "M": rep.m,
            "kernel_bound": rep.kernel_bound,
            "certificate": rep.certificate,
            "bands": bands,
            "as_norm_y": rep.as_norm_y,
            "as_norm_x": rep.as_norm_x,
            "ratio": rep.ratio(),
            "fast_path_difference": rep.fast_path_difference,
            "sup_norm_y": y.sup_norm(),
            "sup_norm_x": x.sup_norm(),
            "residual": residual,
        }),
        certificates,
        solution: Some(x),
    })
}

fn asnorm(sc: &Scenario) -> Result<Partial, CliError> {
    let grid = sc.grid()?;
    let y = sc.rhs_function(grid)?;
    let (value, dec) = as_norm(&y);
    let tilde = as_tilde_norm(&y, sc.options.da)?;
    let k = sc.options.membership_terms.min(grid.m() as usize);
    let membership = as_membership_criterion(&y, k)?;
    let partition_error = dec.reassemble().sup_distance(&y)?;
    let bands: Vec<[f64; 2]> = dec.active().map(|&(n, v)| [n as f64, v]).collect();
    let certificates = vec![
        Certificate::upper(
            "partition_of_unity",
            partition_error,
            PARTITION_TOL * (1.0 + y.sup_norm()),
        ),
        Certificate::upper("norm_equivalence_lower", tilde, value + 1e-6),
        Certificate::upper("norm_equivalence_upper", value, 20.0 * tilde + 1e-6),
    ];
    Ok(Partial {
        results: json!({
            "as_norm": value,
            "as_tilde_norm": tilde,
            "sup_norm": y.sup_norm(),
            "bands": bands,
            "membership": {
                "terms": membership.terms,
                "partial_sums": membership.partial_sums,
                "tail_slope": membership.tail_slope,
                "verdict": match membership.verdict {
                    Verdict::Bounded => "bounded",
                    Verdict::Growing => "growing",
                },
            },
        }),
        certificates,
        solution: None,
    })
}

fn spectrum(sc: &Scenario) -> Result<Partial, CliError> {
    let grid = sc.grid()?;
    let y = sc.rhs_function(grid)?;
    let threshold = sc.options.spectrum_threshold;
    let est = beurling_spectrum(&y, threshold)?;
    let mut certificates = Vec::new();
    let mut results = json!({
        "threshold": threshold,
        "indices": est.indices,
        "frequencies": est.frequencies,
    });
    if !sc.nonlinearity.is_empty() {
        // F(y) may only carry sums of frequencies of y
        let f = sc.nonlinearity()?;
        let fy = apply_nonlinearity(&f, &y)?;
        let image = beurling_spectrum(&fy, threshold)?;
        let mut sums = std::collections::BTreeSet::new();
        for t in f.terms() {
            let mut level: std::collections::BTreeSet<i64> = [0].into_iter().collect();
            for _ in 0..t.order() {
                level = level
                    .iter()
                    .flat_map(|a| est.indices.iter().map(move |b| a + b))
                    .collect();
            }
            sums.extend(level);
        }
        let outside = image.indices.iter().filter(|k| !sums.contains(k)).count();
        certificates.push(Certificate::upper("nonlinear_spectrum_inclusion", outside as f64, 0.0));
        results["nonlinear_image"] = json!({
            "indices": image.indices,
            "frequencies": image.frequencies,
        });
    }
    Ok(Partial {
        results,
        certificates,
        solution: None,
    })
}

fn certify(sc: &Scenario) -> Result<Partial, CliError> {
    let model = sc.model()?;
    let grid = sc.grid()?;
    let opts = &sc.options;
    let scan = model.resolvent_bound(opts.scan_step)?;
    let m = scan.m;
    let kernel_bound = band_kernel_bound(m)?;
    let inverse_bound = inverse_norm_certificate(m)?;
    let mut certificates = Vec::new();
    let resolvent_symbol = WindowSymbol::resolvent(&model, m)?;
    let identity_symbol = WindowSymbol::constant(linalg::identity(model.dim()));
    let mut windows = Vec::new();
    for (name, symbol) in [("resolvent", &resolvent_symbol), ("identity", &identity_symbol)] {
        let chk = verify_window_kernel_bound(symbol, grid.m(), opts.oversample)?;
        certificates.push(Certificate::with_ok(
            format!("window_kernel_{name}"),
            chk.computed_l1 + chk.uncertainty,
            chk.bound,
            chk.ok,
        ));
        windows.push(json!({
            "symbol": name,
            "computed_l1": chk.computed_l1,
            "uncertainty": chk.uncertainty,
            "bound": chk.bound,
        }));
    }
    let k0 = band_kernel(&model, &grid, 0, opts.oversample)?;
    let l1 = k0.l1();
    certificates.push(Certificate::with_ok(
        "band_kernel_l1[0]",
        l1.upper(),
        k0.bound,
        k0.l1_ok(),
    ));
    let mut results = json!({
        "M": m,
        "scan": {
            "step": scan.step,
            "half_width": scan.half_width,
            "scan_max": scan.scan_max,
            "refined_max": scan.refined_max,
            "tail_bound": scan.tail_bound,
            "evaluations": scan.evaluations,
        },
        "estresn_bound": kernel_bound,
        "invest11_bound": inverse_bound,
        "window_kernels": windows,
        "band_kernel_0": { "l1": l1.value, "l1_upper": l1.upper(), "bound": k0.bound },
    });
    if !sc.nonlinearity.is_empty() {
        let f = sc.nonlinearity()?;
        let beta = opts.picard.beta;
        let lb = lipschitz_bound(&f, m, beta)?;
        certificates.push(Certificate::with_ok("lipschitz_contraction", lb, 1.0, lb < 1.0));
        results["lipschitz_bound"] = json!(lb);
        results["beta"] = json!(beta);
    }
    Ok(Partial {
        results,
        certificates,
        solution: None,
    })
}

fn nonlinear(sc: &Scenario) -> Result<Partial, CliError> {
    let model = sc.model()?;
    let grid = sc.grid()?;
    let y = sc.rhs_function(grid)?;
    let f = sc.nonlinearity()?;
    let p = &sc.options.picard;
    let opts = PicardOptions {
        beta: p.beta,
        tol: p.tol,
        maxit: p.maxit,
        solver: p.solver.into(),
        start: None,
    };
    let rep = picard_solve(&model, &y, &f, &opts)?;
    let forced = y.add(&apply_nonlinearity(&f, &rep.x)?)?;
    let (residual, res_cert) = residual_certificate(sc, &model, &rep.x, &forced)?;
    let certificates = vec![
        Certificate::with_ok("contraction", rep.l_bound, 1.0, rep.contraction_holds),
        Certificate::with_ok(
            "invariance",
            rep.phi_z_norm,
            p.beta * (1.0 - rep.l_bound),
            rep.invariance_holds,
        ),
        Certificate::upper("empirical_lipschitz", rep.l_empirical, rep.l_bound),
        Certificate::upper("ball_radius", rep.distance_from_z, p.beta),
        Certificate::upper("final_residual", rep.final_residual, 100.0 * p.tol),
        res_cert,
    ];
    let norms: Vec<Value> = rep
        .norm_methods
        .iter()
        .map(|(order, norm, method)| json!({ "order": order, "norm": norm, "method": method.tag() }))
        .collect();
    Ok(Partial {
        results: json!({
            "M": rep.m,
            "beta": rep.beta,
            "l_bound": rep.l_bound,
            "l_empirical": rep.l_empirical,
            "phi_z_norm": rep.phi_z_norm,
            "contraction_holds": rep.contraction_holds,
            "invariance_holds": rep.invariance_holds,
            "iterations": rep.iterations,
            "converged": rep.converged,
            "residuals": rep.residuals,
            "sup_residuals": rep.sup_residuals,
            "final_residual": rep.final_residual,
            "distance_from_z": rep.distance_from_z,
            "sup_norm_z": rep.z.sup_norm(),
            "sup_norm_x": rep.x.sup_norm(),
            "term_norms": norms,
            "residual": residual,
        }),
        certificates,
        solution: Some(rep.x),
    })
}

/// Columns `t, re_x1, im_x1, ..., norm`, one row per grid point.
pub fn write_csv<W: Write>(x: &SampledFunction, out: W) -> Result<(), CliError> {
    let internal = |e: csv::Error| CliError::Internal(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let d = x.dim();
    let mut header = vec!["t".to_string()];
    for c in 1..=d {
        header.push(format!("re_x{c}"));
        header.push(format!("im_x{c}"));
    }
    header.push("norm".into());
    w.write_record(&header).map_err(internal)?;
    let grid = x.grid();
    let mut row = Vec::with_capacity(2 * d + 2);
    for j in 0..grid.len() {
        row.clear();
        row.push(grid.time(j).to_string());
        for c in 0..d {
            let v = x.component(c)[j];
            row.push(v.re.to_string());
            row.push(v.im.to_string());
        }
        row.push(x.point_norm(j).to_string());
        w.write_record(&row).map_err(internal)?;
    }
    w.flush().map_err(|e| CliError::Internal(format!("csv: {e}")))?;
    Ok(())
}

/// Writes `report.json` (timing included) and, if requested, `solution.csv`
/// into `dir`.
pub fn write_outputs(outcome: &Outcome, dir: &Path, csv: bool) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Internal(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let text = serde_json::to_string_pretty(&outcome.report).map_err(|e| CliError::Internal(e.to_string()))?;
    std::fs::write(dir.join("report.json"), text + "\n").map_err(io)?;
    if csv {
        if let Some(x) = &outcome.solution {
            let f = std::fs::File::create(dir.join("solution.csv")).map_err(io)?;
            write_csv(x, std::io::BufWriter::new(f))?;
        }
    }
    Ok(())
}
