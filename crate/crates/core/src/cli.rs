//! Command-line front end. Documents go to the output file (or stdout);
//! human-readable tables go to stderr.
//!
//! Exit codes: 0 success, 2 input error, 3 resource guard, 4 verification failure.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::bosonize::{bosonize, quadrature_hamiltonian, to_quadrature, TermShape};
use crate::circuit::{
    count_resources, decompose_four_mode, eight_term_printed_rhs, eight_term_rhs, expand_quartic,
    fifteen_term_rhs, lower, per_quartic_costs, two_mode_printed_rhs, two_mode_rhs, Circuit, Counts, GateKind,
    Identity, Level, StageCounts,
};
use crate::gbs::{
    a_from_covariance, block_valid, estimate_quartic_moment, gbs_probability, patterns, CovarianceMatrix,
    QuadratureMoments,
};
use crate::json::value_to_canonical;
use crate::model::{parse_spin_model, spin_hamiltonian_matrix, SpinModel};
use crate::simulate::{
    column_error, commutator, exact_evolution, ladder_hamiltonian_matrix, max_entry_diff, quadrature_hamiltonian_matrix,
    quartic_decomposition_error, restrict, shift2_decomposition_error, spin_subspace_indices, Backend, FockSpace,
};
use crate::trotter::{build_evolution_circuit, error_bound, groups, plan, step_circuit, trotter_unitary, Grouping};
use crate::{CMat, Error, Result, C64};

#[derive(Debug, Parser)]
#[command(name = "spin2cv", version, about = "Compile spin lattices to continuous-variable circuits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Compile,
    Count,
    Verify,
    Gbs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trotterize and lower a spin model to a universal circuit
    Compile(RunArgs),
    /// Gate counts at every decomposition stage
    Count(RunArgs),
    /// Run the numerical checks on a spin model or a circuit document
    Verify(RunArgs),
    /// Hafnian moment estimate or photon-count probabilities for a Gaussian state
    Gbs(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub time: f64,
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
    #[arg(long, default_value_t = 4)]
    pub cutoff: usize,
    #[arg(long, value_enum, default_value_t = Identity::EightTerm)]
    pub identity: Identity,
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub args: RunArgs,
}

impl From<Command> for RunConfig {
    fn from(c: Command) -> Self {
        match c {
            Command::Compile(args) => RunConfig { command: CommandKind::Compile, args },
            Command::Count(args) => RunConfig { command: CommandKind::Count, args },
            Command::Verify(args) => RunConfig { command: CommandKind::Verify, args },
            Command::Gbs(args) => RunConfig { command: CommandKind::Gbs, args },
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Guard(_) => 3,
        Error::Invariant { .. } => 4,
        _ => 2,
    }
}

/// Runs one command and returns the process exit code.
pub fn run(config: &RunConfig) -> i32 {
    match execute(config) {
        Ok((doc, code)) => match write_output(&config.args, &doc) {
            Ok(()) => code,
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn write_output(args: &RunArgs, doc: &str) -> Result<()> {
    match &args.output {
        Some(p) => std::fs::write(p, doc)?,
        None => print!("{doc}"),
    }
    Ok(())
}

/// Output document and exit code.
pub fn execute(config: &RunConfig) -> Result<(String, i32)> {
    let a = &config.args;
    if a.steps == 0 {
        return Err(Error::invalid("--steps must be at least 1"));
    }
    if a.cutoff < 2 {
        return Err(Error::invalid("--cutoff must be at least 2"));
    }
    if !a.time.is_finite() {
        return Err(Error::invalid("--time must be finite"));
    }
    if a.tolerance.is_nan() || a.tolerance <= 0.0 {
        return Err(Error::invalid("--tolerance must be positive"));
    }
    let text = std::fs::read_to_string(&a.input)?;
    match config.command {
        CommandKind::Compile => Ok((value_to_canonical(&cmd_compile(&text, a)?), 0)),
        CommandKind::Count => Ok((value_to_canonical(&cmd_count(&text, a)?), 0)),
        CommandKind::Verify => {
            let report = cmd_verify(&text, a)?;
            let code = if report["pass"] == Value::Bool(true) { 0 } else { 4 };
            Ok((value_to_canonical(&report), code))
        }
        CommandKind::Gbs => Ok((value_to_canonical(&cmd_gbs(&text)?), 0)),
    }
}

/// Universal circuit: the lowered single step repeated `steps` times.
pub fn compile_model(model: &SpinModel, a: &RunArgs) -> Result<Circuit> {
    let h = quadrature_hamiltonian(model)?;
    let p = plan(&h, a.time, a.steps, a.cutoff)?;
    let step = lower(&step_circuit(&h, a.time / a.steps as f64, a.identity, &p.term_order)?);
    let mut out = Circuit { n_modes: step.n_modes, level: Level::Universal, gates: vec![], trotter: Some(p) };
    for _ in 0..a.steps {
        out.gates.extend(step.gates.iter().cloned());
    }
    out.validate()?;
    Ok(out)
}

pub fn cmd_compile(text: &str, a: &RunArgs) -> Result<Value> {
    let model = parse_spin_model(text)?;
    let c = compile_model(&model, a)?;
    Ok(serde_json::to_value(&c)?)
}

fn counts_value(c: &Counts) -> Value {
    Value::Object(c.iter().map(|(k, v)| (k.name().to_string(), json!(v))).collect())
}

fn stages_value(s: &StageCounts) -> Value {
    json!({
        "raw": counts_value(&s.raw),
        "expanded": counts_value(&s.expanded),
        "universal": counts_value(&s.universal),
    })
}

pub fn cmd_count(text: &str, a: &RunArgs) -> Result<Value> {
    let model = parse_spin_model(text)?;
    let h = quadrature_hamiltonian(&model)?;
    let order: Vec<usize> = groups(&h, Grouping::Blocks).concat();
    let step = step_circuit(&h, a.time / a.steps as f64, a.identity, &order)?;
    let r = count_resources(&step, a.steps);
    let shapes = |s: TermShape| h.terms.iter().filter(|t| t.shape() == s).count();
    let mut doc = match counts_value(&r.counts.raw) {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    doc.insert("steps".into(), json!(r.trotter_steps));
    doc.insert("identity".into(), serde_json::to_value(a.identity)?);
    doc.insert("total".into(), stages_value(&r.counts));
    doc.insert("per_step".into(), stages_value(&r.per_step));
    doc.insert(
        "per_quartic".into(),
        json!({
            "V": r.per_quartic.v,
            "Cz_derived": r.per_quartic.cz_derived,
            "Cz_stated": r.per_quartic.cz_stated,
            "Shift2": r.per_quartic.shift2,
        }),
    );
    doc.insert(
        "terms".into(),
        json!({
            "four_mode": shapes(TermShape::FourMode),
            "two_mode": shapes(TermShape::TwoMode),
            "quadratic": shapes(TermShape::Quadratic),
        }),
    );
    eprintln!("{:<11} {:>10} {:>10} {:>10}", "gate", "raw", "expanded", "universal");
    for k in GateKind::ALL {
        eprintln!(
            "{:<11} {:>10} {:>10} {:>10}",
            k.name(),
            r.counts.raw[&k],
            r.counts.expanded[&k],
            r.counts.universal[&k]
        );
    }
    Ok(Value::Object(doc))
}

struct Check {
    name: &'static str,
    pass: bool,
    data: Value,
}

fn check(name: &'static str, pass: bool, data: Value) -> Check {
    Check { name, pass, data }
}

/// Least-squares slope of log(err) against log(k).
pub fn loglog_slope(ks: &[usize], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = ks.iter().map(|&k| (k as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Trotter errors over `ks` on the embedded spin subspace at cutoff `d`.
pub fn trotter_errors(model: &SpinModel, t: f64, d: usize, ks: &[usize]) -> Result<Vec<f64>> {
    let h = quadrature_hamiltonian(model)?;
    let space = FockSpace::new(model.n_modes(), d)?;
    let exact = exact_evolution(&quadrature_hamiltonian_matrix(&h, &space)?, t);
    let cols = spin_subspace_indices(model.n_sites, &space);
    ks.iter()
        .map(|&k| Ok(column_error(&trotter_unitary(&h, t, k, &space, Grouping::Blocks)?, &exact, &cols)))
        .collect()
}

fn monotone(errs: &[f64], slack: f64) -> bool {
    errs.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack) + 1e-12)
}

fn model_checks(model: &SpinModel, a: &RunArgs) -> Result<Vec<Check>> {
    let d = a.cutoff.max(3);
    let tol = a.tolerance;
    let space = FockSpace::new(model.n_modes(), d)?;
    let ladder_terms = bosonize(model);
    let ladder = ladder_hamiltonian_matrix(&ladder_terms, &space)?;
    let pauli = spin_hamiltonian_matrix(model)?;
    let spin = spin_subspace_indices(model.n_sites, &space);
    let mut out = Vec::new();

    let faith = max_entry_diff(&restrict(ladder.matrix(), &spin, &spin), pauli.matrix());
    out.push(check("spin-faithfulness", faith <= tol, json!({"cutoff": d, "max_deviation": faith})));

    let ops = crate::simulate::mode_operators(d);
    let mut cons: f64 = 0.0;
    for k in 0..model.n_sites {
        let nk = crate::simulate::embed(&space, &[2 * k], &ops.n)? + crate::simulate::embed(&space, &[2 * k + 1], &ops.n)?;
        cons = cons.max(commutator(ladder.matrix(), &nk).iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    out.push(check("number-conservation", cons <= tol, json!({"max_commutator": cons})));

    let h = to_quadrature(&ladder_terms, model)?;
    let (quad_ok, equiv) = match quadrature_hamiltonian_matrix(&h, &space) {
        Ok(q) => {
            let inner = space.interior();
            (true, max_entry_diff(&restrict(q.matrix(), &inner, &inner), &restrict(ladder.matrix(), &inner, &inner)))
        }
        Err(_) => (false, f64::INFINITY),
    };
    out.push(check("hermiticity", quad_ok, json!({})));
    out.push(check(
        "quadrature-equivalence",
        equiv <= tol,
        json!({"max_deviation": if equiv.is_finite() { equiv } else { -1.0 }, "block": "every mode below cutoff - 1"}),
    ));

    let t = a.time;
    let u_bos = exact_evolution(&ladder, t);
    let u_spin = exact_evolution(&pauli, t);
    let evo = max_entry_diff(&restrict(&u_bos, &spin, &spin), &u_spin);
    out.push(check("subspace-evolution", evo <= 1e-8, json!({"t": t, "max_deviation": evo})));

    let ks = [1usize, 2, 4, 8];
    let errs = trotter_errors(model, t, a.cutoff, &ks)?;
    let exact_split = errs.iter().all(|&e| e <= 1e-9);
    let slope = if exact_split { 0.0 } else { loglog_slope(&ks, &errs) };
    let gamma = plan(&h, t, 1, a.cutoff)?.gamma;
    let nb = groups(&h, Grouping::Blocks).len();
    let table: Vec<Value> = ks
        .iter()
        .zip(&errs)
        .map(|(&k, &e)| json!({"steps": k, "error": e, "bound": error_bound(nb, t, k, gamma)}))
        .collect();
    for (k, e) in ks.iter().zip(&errs) {
        eprintln!("trotter K={k:<3} error={e:.3e}");
    }
    let conv_ok = monotone(&errs, 0.0) && (exact_split || (slope + 1.0).abs() <= 0.2);
    out.push(check(
        "trotter-convergence",
        conv_ok,
        json!({"cutoff": a.cutoff, "t": t, "slope": slope, "commuting": exact_split, "table": table}),
    ));

    out.extend(generic_checks(model, a)?);
    Ok(out)
}

/// Checks that do not depend on the lattice beyond the compiled circuit.
fn generic_checks(model: &SpinModel, a: &RunArgs) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let cutoffs = [4usize, 6, 8];
    let mut s2 = Vec::new();
    let mut q = Vec::new();
    for &d in &cutoffs {
        s2.push(shift2_decomposition_error(0.03, d, 0, Backend::Compressed)?);
        q.push(quartic_decomposition_error(0.02, d, 0, false, Backend::Compressed)?);
        eprintln!("cutoff {d}: shift2 error {:.3e}, quartic error {:.3e}", s2.last().unwrap(), q.last().unwrap());
    }
    out.push(check(
        "cutoff-sweep",
        monotone(&s2, 0.1) && monotone(&q, 0.1),
        json!({"cutoffs": cutoffs, "shift2_beta_0.03": s2, "quartic_alpha_0.02": q}),
    ));

    let pts = random_points(100, 7);
    let rel = |lhs: f64, rhs: f64| (lhs - rhs).abs() / lhs.abs().max(1.0);
    let mut e8: f64 = 0.0;
    let mut e8p: f64 = 0.0;
    let mut e15: f64 = 0.0;
    let mut e2: f64 = 0.0;
    let mut e2p: f64 = 0.0;
    for x in &pts {
        let lhs = x[0] * x[1] * x[2] * x[3];
        e8 = e8.max(rel(lhs, eight_term_rhs(*x)));
        e8p = e8p.max(rel(lhs, eight_term_printed_rhs(*x)));
        e15 = e15.max(rel(lhs, fifteen_term_rhs(*x)));
        let lhs2 = x[0] * x[0] * x[1] * x[1];
        e2 = e2.max(rel(lhs2, two_mode_rhs(x[0], x[1])));
        e2p = e2p.max(rel(lhs2, two_mode_printed_rhs(x[0], x[1])));
    }
    out.push(check(
        "polynomial-identities",
        e8 <= 1e-9 && e15 <= 1e-9 && e2 <= 1e-9,
        json!({
            "eight_term": e8,
            "eight_term_printed": e8p,
            "eight_term_printed_holds": e8p <= 1e-9,
            "fifteen_term": e15,
            "two_mode": e2,
            "two_mode_printed": e2p,
            "two_mode_printed_holds": e2p <= 1e-9,
        }),
    ));

    let term = crate::bosonize::QuadratureTerm {
        coefficient: 1.0,
        factors: (0..4)
            .map(|mode| crate::bosonize::QFactor { mode, quad: crate::bosonize::Quad::X, power: 1 })
            .collect(),
    };
    let tally = |id: Identity| -> Result<(usize, usize)> {
        let c = decompose_four_mode(&term, id, 1.0)?;
        let s1 = c.gates.iter().filter(|g| g.kind == GateKind::Shift1).count();
        let s2 = expand_quartic(&c).gates.iter().filter(|g| g.kind == GateKind::Shift2).count();
        Ok((s1, s2))
    };
    let (s1_8, s2_8) = tally(Identity::EightTerm)?;
    let (s1_15, s2_15) = tally(Identity::FifteenTerm)?;
    let pq = per_quartic_costs();
    out.push(check(
        "gate-counts",
        s1_8 == 48 && s2_8 == 24 && s2_15 == 45 && pq.v == 15,
        json!({
            "eight_term": {"Shift1": s1_8, "Shift2": s2_8},
            "fifteen_term": {"Shift1": s1_15, "Shift2": s2_15, "Shift1_stated": 38},
            "per_quartic": {"V": pq.v, "Cz_derived": pq.cz_derived, "Cz_stated": pq.cz_stated},
        }),
    ));

    let c = compile_model(model, a)?;
    let structure = c.validate().map(|_| c.is_universal());
    out.push(check(
        "circuit-structure",
        matches!(structure, Ok(true)),
        json!({"gates": c.gates.len(), "modes": c.n_modes}),
    ));
    Ok(out)
}

/// Deterministic pseudo-random points in [-2, 2]^4.
pub fn random_points(n: usize, seed: u64) -> Vec<[f64; 4]> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| [0; 4].map(|_| rng.random_range(-2.0..2.0))).collect()
}

fn report(kind: &str, checks: Vec<Check>) -> Value {
    for c in &checks {
        eprintln!("{:<24} {}", c.name, if c.pass { "PASS" } else { "FAIL" });
    }
    let pass = checks.iter().all(|c| c.pass);
    let list: Vec<Value> = checks
        .into_iter()
        .map(|c| {
            let mut m = match c.data {
                Value::Object(m) => m,
                _ => Map::new(),
            };
            m.insert("name".into(), json!(c.name));
            m.insert("pass".into(), json!(c.pass));
            Value::Object(m)
        })
        .collect();
    json!({"input": kind, "pass": pass, "checks": list})
}

pub fn cmd_verify(text: &str, a: &RunArgs) -> Result<Value> {
    let v: Value = serde_json::from_str(text)?;
    if v.get("gates").is_some() {
        let c: Circuit = serde_json::from_value(v)?;
        let mut checks = Vec::new();
        match c.validate() {
            Ok(()) => checks.push(check("circuit-structure", true, json!({"gates": c.gates.len()}))),
            Err(Error::Invariant { name, detail }) => {
                checks.push(check("circuit-structure", false, json!({"invariant": name, "detail": detail})))
            }
            Err(e) => return Err(e),
        }
        return Ok(report("circuit", checks));
    }
    let model = parse_spin_model(text)?;
    Ok(report("model", model_checks(&model, a)?))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Basis {
    Quadrature,
    Ladder,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateDoc {
    modes: usize,
    basis: Basis,
    matrix: Vec<Vec<Entry>>,
}

pub fn cmd_gbs(text: &str) -> Result<Value> {
    let doc: StateDoc = serde_json::from_str(text)?;
    let n = doc.matrix.len();
    if doc.matrix.iter().any(|r| r.len() != n) {
        return Err(Error::invalid("matrix must be square"));
    }
    let m = CMat::from_fn(n, n, |i, j| match doc.matrix[i][j] {
        Entry::Real(x) => C64::new(x, 0.0),
        Entry::Complex([re, im]) => C64::new(re, im),
    });
    match doc.basis {
        Basis::Quadrature => {
            if n != doc.modes {
                return Err(Error::invalid("quadrature matrix must be modes x modes"));
            }
            if m.iter().any(|z| z.im != 0.0) {
                return Err(Error::invalid("quadrature moments must be real"));
            }
            let sigma = QuadratureMoments::new(DMatrix::from_fn(n, n, |i, j| m[(i, j)].re))?;
            let est = estimate_quartic_moment(&sigma)?;
            eprintln!("Haf(Sigma) = {:.12e}, sqrt Haf(A) = {:.12e}", est.haf_sigma, est.sqrt_haf_a);
            let label = if est.embedding_physical {
                "post-selected on the all-ones pattern"
            } else {
                "oracle-only, no physical GBS embedding found"
            };
            Ok(json!({
                "haf_sigma": est.haf_sigma,
                "sqrt_haf_A": est.sqrt_haf_a,
                "embedding_physical": est.embedding_physical,
                "postselect_pattern": est.postselect_pattern,
                "postselect_probability": est.probability,
                "label": label,
            }))
        }
        Basis::Ladder => {
            if n != 2 * doc.modes {
                return Err(Error::invalid("ladder covariance must be 2 modes x 2 modes"));
            }
            let cov = CovarianceMatrix::new(m)?;
            let a = a_from_covariance(&cov)?;
            let cap = doc.modes.min(8);
            let mut probs = Vec::new();
            let mut total = 0.0;
            for p in patterns(doc.modes, cap, true) {
                let pr = gbs_probability(&cov, &p)?;
                total += pr;
                probs.push(json!({"pattern": p, "probability": pr}));
            }
            Ok(json!({
                "modes": doc.modes,
                "block_valid": block_valid(&a),
                "collision_free": probs,
                "collision_free_total": total,
            }))
        }
    }
}

/// Spin models used by the acceptance checks and the bundled data file.
pub fn canonical_models() -> Vec<(&'static str, SpinModel)> {
    use crate::model::CouplingEntry;
    let bond = |jx, jy, jz| vec![CouplingEntry { k: 0, l: 1, jx, jy, jz }];
    vec![
        ("zz", SpinModel::new(2, bond(0.0, 0.0, 1.0), 0.0).expect("valid")),
        ("xy", SpinModel::new(2, bond(1.0, 1.0, 0.0), 0.0).expect("valid")),
        ("isotropic", SpinModel::new(2, bond(1.0, 1.0, 1.0), 0.3).expect("valid")),
    ]
}

/// Raw evolution circuit, exposed for inspection.
pub fn raw_circuit(model: &SpinModel, a: &RunArgs) -> Result<Circuit> {
    let h = quadrature_hamiltonian(model)?;
    build_evolution_circuit(&h, a.time, a.steps, a.identity, a.cutoff)
}
