//! Template-based synthesis of reachability certificates for the
//! mass-scheduler/chance-transition semantics.
//!
//! The search space is a linear-fractional scheduler template plus a linear
//! scaled-submartingale template. Universally quantified constraints over
//! the configuration simplex are eliminated into existential multiplier
//! systems (affine rows via nonnegative-combination matching, polynomial
//! rows via bounded products of the region's inequalities), then handed to
//! a solver: either an external SMT-LIB 2 process or the built-in bilinear
//! search that enumerates candidate schedulers and solves the remaining
//! linear system exactly. Any model found is independently re-verified in
//! exact arithmetic before being reported as a certificate.

use std::collections::BTreeMap;
use std::io::Write;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use num::{One, Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lp::{Cmp, LinearProgram, LpError, LpOutcome};
use crate::model::{ActionId, Configuration, MdpModel, StateId};
use crate::poly::{DPoly, Sym, SymPoly, SymbolTable};
use crate::rat::{format_rat, parse_rat, Rat};
use crate::scheduler::{LinearFractional, Scheduler};
use crate::target::TargetSet;

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("complement decomposition needs {tuples} conjuncts (cap {cap})")]
    ConjunctExplosion { tuples: usize, cap: usize },
    #[error("affine elimination applied to a nonlinear right-hand side")]
    NotAffine,
    #[error("product basis has {count} elements (cap {cap})")]
    DegreeTooHigh { count: usize, cap: usize },
    #[error("failed to spawn solver: {0}")]
    SolverSpawnFailure(String),
    #[error("could not parse solver model: {reason}")]
    ModelParseError { reason: String, raw: String },
    #[error("target must be a finitely generated monotone set with at least one generator")]
    InvalidTarget,
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Template symbols: scheduler numerators `theta[a][k]`, denominator
/// `s[k]`, and submartingale coefficients `r[k]`, each with `k = 0` for the
/// constant term and `k = q+1` for the state-`q` coefficient.
#[derive(Clone, Debug)]
pub struct TemplateVars {
    pub theta: Vec<Vec<Sym>>,
    pub s: Vec<Sym>,
    pub r: Vec<Sym>,
}

/// Interns the template symbols in deterministic order.
pub fn template_vars(m: &MdpModel, table: &mut SymbolTable) -> TemplateVars {
    let n = m.n_states();
    let theta = (0..m.n_actions())
        .map(|a| {
            (0..=n)
                .map(|k| table.intern(format!("th_{}_{k}", m.action_names[a]), false))
                .collect()
        })
        .collect();
    let s = (0..=n).map(|k| table.intern(format!("s_{k}"), false)).collect();
    let r = (0..=n).map(|k| table.intern(format!("r_{k}"), false)).collect();
    TemplateVars { theta, s, r }
}

/// `coeffs·d + constant  >= 0` (or strictly, when `strict`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineRow {
    pub coeffs: Vec<Rat>,
    pub constant: Rat,
    pub strict: bool,
}

impl AffineRow {
    /// Value of the row's left-hand side at a configuration point.
    pub fn eval(&self, point: &[Rat]) -> Rat {
        self.constant.clone()
            + self
                .coeffs
                .iter()
                .zip(point)
                .map(|(c, v)| c.clone() * v)
                .sum::<Rat>()
    }

    fn to_dpoly(&self) -> DPoly {
        DPoly::affine_rat(self.constant.clone(), &self.coeffs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Ge0,
    Eq0,
}

/// A universally quantified implication: the affine region on the left
/// entails nonnegativity (or vanishing) of the right-hand polynomial, whose
/// coefficients are polynomials in the template symbols.
#[derive(Clone, Debug)]
pub struct QuantifiedConstraint {
    pub lhs: Vec<AffineRow>,
    pub rhs: DPoly,
    pub sense: Sense,
}

/// Conjunction of existential constraints over symbols (multiplier
/// nonnegativity is carried by the symbol table).
#[derive(Clone, Debug, Default)]
pub struct ConstraintBlock {
    pub constraints: Vec<(SymPoly, Sense)>,
}

/// Default cap on the number of complement conjuncts (`|Q|^n`).
pub const DEFAULT_CONJUNCT_CAP: usize = 100_000;
/// Default cap on the Handelman product basis per conjunct.
pub const DEFAULT_PRODUCT_CAP: usize = 50_000;
/// Default Handelman degree bound.
pub const DEFAULT_DEGREE_BOUND: usize = 4;

fn simplex_rows(n: usize) -> Vec<AffineRow> {
    let mut rows = Vec::with_capacity(n + 2);
    for q in 0..n {
        let mut coeffs = vec![Rat::zero(); n];
        coeffs[q] = Rat::one();
        rows.push(AffineRow {
            coeffs,
            constant: Rat::zero(),
            strict: false,
        });
    }
    rows.push(AffineRow {
        coeffs: vec![Rat::one(); n],
        constant: -Rat::one(),
        strict: false,
    });
    rows.push(AffineRow {
        coeffs: vec![-Rat::one(); n],
        constant: Rat::one(),
        strict: false,
    });
    rows
}

fn theta_numerator(tv: &TemplateVars, a: usize, n: usize) -> DPoly {
    DPoly::affine(
        SymPoly::var(tv.theta[a][0]),
        (0..n).map(|q| SymPoly::var(tv.theta[a][q + 1])).collect(),
    )
}

fn denominator_poly(tv: &TemplateVars, n: usize) -> DPoly {
    DPoly::affine(
        SymPoly::var(tv.s[0]),
        (0..n).map(|q| SymPoly::var(tv.s[q + 1])).collect(),
    )
}

fn submartingale_poly(tv: &TemplateVars, n: usize) -> DPoly {
    DPoly::affine(
        SymPoly::var(tv.r[0]),
        (0..n).map(|q| SymPoly::var(tv.r[q + 1])).collect(),
    )
}

/// `R(M_a^T d)` as a polynomial in `d`: the constant stays `r_0` and the
/// coefficient of `d_p` becomes `Σ_q M_a[p][q]·r_q`.
fn submartingale_after(tv: &TemplateVars, m: &MdpModel, a: ActionId) -> DPoly {
    let n = m.n_states();
    let coeffs = (0..n)
        .map(|p| {
            let mut c = SymPoly::zero();
            for q in 0..n {
                let entry = &m.matrices[a.0][p][q];
                if !entry.is_zero() {
                    c = c.add(&SymPoly::var(tv.r[q + 1]).scale(entry));
                }
            }
            c
        })
        .collect();
    DPoly::affine(SymPoly::var(tv.r[0]), coeffs)
}

/// Exact strict-feasibility test for a conjunct region: maximizes the
/// minimum slack of the strict rows over the closed region and keeps the
/// conjunct only when that optimum is positive (an empty strict region makes
/// the implication vacuous, so dropping it is equivalence-preserving).
fn strict_region_nonempty(rows: &[AffineRow], n: usize) -> Result<bool, SynthesisError> {
    let mut lp = LinearProgram::new(n + 1);
    for q in 0..n {
        lp.lower[q] = Some(Rat::zero());
        lp.upper[q] = Some(Rat::one());
    }
    lp.lower[n] = Some(Rat::zero());
    lp.upper[n] = Some(Rat::one());
    lp.objective = vec![Rat::zero(); n + 1];
    lp.objective[n] = -Rat::one();
    for row in rows {
        let mut coeffs = row.coeffs.clone();
        coeffs.push(if row.strict { -Rat::one() } else { Rat::zero() });
        lp.push(coeffs, Cmp::Ge, -row.constant.clone());
    }
    match crate::lp::solve_min(&lp)? {
        LpOutcome::Optimal { x, .. } => Ok(x[n].is_positive()),
        LpOutcome::Infeasible => Ok(false),
        LpOutcome::Unbounded => Ok(true),
    }
}

/// Collects the full constraint system: scheduler validity, submartingale
/// bounds, the denominator-cleared inductive inequality on each non-vacuous
/// complement conjunct, and the threshold inequality at the initial
/// configuration.
pub fn collect_constraints(
    m: &MdpModel,
    d0: &Configuration,
    target: &TargetSet,
    xi: &Rat,
    gamma: &Rat,
    tv: &TemplateVars,
    conjunct_cap: usize,
) -> Result<Vec<QuantifiedConstraint>, SynthesisError> {
    let n = m.n_states();
    let simplex = simplex_rows(n);
    let mut out = Vec::new();

    // Scheduler numerators are nonnegative on the simplex.
    for a in 0..m.n_actions() {
        out.push(QuantifiedConstraint {
            lhs: simplex.clone(),
            rhs: theta_numerator(tv, a, n),
            sense: Sense::Ge0,
        });
    }
    // Denominator at least one.
    let denom = denominator_poly(tv, n);
    out.push(QuantifiedConstraint {
        lhs: simplex.clone(),
        rhs: denom.sub(&DPoly::affine_rat(Rat::one(), &vec![Rat::zero(); n])),
        sense: Sense::Ge0,
    });
    // Numerators sum to the denominator.
    let mut numerator_sum = DPoly::zero();
    for a in 0..m.n_actions() {
        numerator_sum = numerator_sum.add(&theta_numerator(tv, a, n));
    }
    out.push(QuantifiedConstraint {
        lhs: simplex.clone(),
        rhs: numerator_sum.sub(&denom),
        sense: Sense::Eq0,
    });
    // 0 <= R <= 1.
    let subm = submartingale_poly(tv, n);
    out.push(QuantifiedConstraint {
        lhs: simplex.clone(),
        rhs: subm.clone(),
        sense: Sense::Ge0,
    });
    out.push(QuantifiedConstraint {
        lhs: simplex.clone(),
        rhs: DPoly::affine_rat(Rat::one(), &vec![Rat::zero(); n]).sub(&subm),
        sense: Sense::Ge0,
    });

    // Inductive inequality, denominator-cleared, on each conjunct of the
    // complement decomposition.
    let (generators, upward) = match target {
        TargetSet::UpwardGenerators(g) => (g, true),
        TargetSet::DownwardGenerators(g) => (g, false),
        _ => return Err(SynthesisError::InvalidTarget),
    };
    if generators.is_empty() {
        return Err(SynthesisError::InvalidTarget);
    }
    let n_gens = generators.len();
    let tuples = n.checked_pow(n_gens as u32).unwrap_or(usize::MAX);
    if tuples > conjunct_cap {
        return Err(SynthesisError::ConjunctExplosion {
            tuples,
            cap: conjunct_cap,
        });
    }

    let mut inductive_rhs = DPoly::zero();
    for a in m.actions() {
        inductive_rhs =
            inductive_rhs.add(&theta_numerator(tv, a.0, n).mul(&submartingale_after(tv, m, a)));
    }
    inductive_rhs = inductive_rhs.scale(gamma).sub(&denom.mul(&subm));

    let mut tuple = vec![0usize; n_gens];
    loop {
        let mut rows = simplex.clone();
        for (i, g) in generators.iter().enumerate() {
            let q = tuple[i];
            let mut coeffs = vec![Rat::zero(); n];
            let (c, constant) = if upward {
                // d(q) < x_i(q), i.e. x_i(q) - d(q) > 0.
                (-Rat::one(), g.entry(q).clone())
            } else {
                // d(q) > x_i(q).
                (Rat::one(), -g.entry(q).clone())
            };
            coeffs[q] = c;
            rows.push(AffineRow {
                coeffs,
                constant,
                strict: true,
            });
        }
        rows.dedup();
        if strict_region_nonempty(&rows, n)? {
            out.push(QuantifiedConstraint {
                lhs: rows,
                rhs: inductive_rhs.clone(),
                sense: Sense::Ge0,
            });
        }

        let mut i = 0;
        loop {
            if i == n_gens {
                // Threshold at the initial configuration (no quantifier).
                let r_at_d0 = SymPoly::var(tv.r[0]).add(
                    &d0.weights()
                        .iter()
                        .enumerate()
                        .fold(SymPoly::zero(), |acc, (q, w)| {
                            acc.add(&SymPoly::var(tv.r[q + 1]).scale(w))
                        }),
                );
                out.push(QuantifiedConstraint {
                    lhs: Vec::new(),
                    rhs: DPoly::constant(r_at_d0.sub(&SymPoly::constant(xi.clone()))),
                    sense: Sense::Ge0,
                });
                return Ok(out);
            }
            tuple[i] += 1;
            if tuple[i] < n {
                break;
            }
            tuple[i] = 0;
            i += 1;
        }
    }
}

fn eliminate_direction(
    rows: &[DPoly],
    rhs: &DPoly,
    table: &mut SymbolTable,
) -> ConstraintBlock {
    let multipliers: Vec<Sym> = rows.iter().map(|_| table.fresh_multiplier()).collect();
    let mut monomials: Vec<Vec<usize>> = rhs.monomials().cloned().collect();
    for row in rows {
        for m in row.monomials() {
            if !monomials.contains(m) {
                monomials.push(m.clone());
            }
        }
    }
    monomials.sort();
    let mut block = ConstraintBlock::default();
    for mono in monomials {
        let mut combo = SymPoly::zero();
        for (row, y) in rows.iter().zip(&multipliers) {
            let c = row.coeff(&mono);
            if let Some((constant, linear)) = c.as_affine() {
                debug_assert!(linear.is_empty(), "region rows are concrete");
                combo = combo.add(&SymPoly::var(*y).scale(&constant));
            }
        }
        block
            .constraints
            .push((rhs.coeff(&mono).sub(&combo), Sense::Eq0));
    }
    block
}

/// Affine quantifier elimination: matches the right-hand side against a
/// nonnegative combination of the closed region rows plus the constant row
/// `1 >= 0`, equating coefficients per configuration monomial. Sound, and
/// complete for affine consequences of nonempty regions.
pub fn farkas_eliminate(
    qc: &QuantifiedConstraint,
    table: &mut SymbolTable,
) -> Result<ConstraintBlock, SynthesisError> {
    if qc.rhs.d_degree() > 1 {
        return Err(SynthesisError::NotAffine);
    }
    let n = qc.lhs.first().map(|r| r.coeffs.len()).unwrap_or(0);
    let mut rows: Vec<DPoly> = qc.lhs.iter().map(|r| r.to_dpoly()).collect();
    rows.push(DPoly::affine_rat(Rat::one(), &vec![Rat::zero(); n]));
    let mut block = eliminate_direction(&rows, &qc.rhs, table);
    if qc.sense == Sense::Eq0 {
        let negated = qc.rhs.scale(&-Rat::one());
        block
            .constraints
            .extend(eliminate_direction(&rows, &negated, table).constraints);
    }
    Ok(block)
}

/// Polynomial quantifier elimination: the right-hand side is matched against
/// a nonnegative combination of all products of the closed region rows up to
/// the degree bound (the empty product contributes the constant `1`).
pub fn handelman_eliminate(
    qc: &QuantifiedConstraint,
    degree_bound: usize,
    table: &mut SymbolTable,
    product_cap: usize,
) -> Result<ConstraintBlock, SynthesisError> {
    let base: Vec<DPoly> = qc.lhs.iter().map(|r| r.to_dpoly()).collect();
    // Multisets of rows with nondecreasing indices, sizes 0..=degree_bound;
    // the empty product is the constant 1.
    let mut products: Vec<DPoly> = vec![DPoly::affine_rat(Rat::one(), &[])];
    let mut level: Vec<(usize, DPoly)> = base.iter().cloned().enumerate().collect();
    for depth in 1..=degree_bound {
        if products.len() + level.len() > product_cap {
            return Err(SynthesisError::DegreeTooHigh {
                count: products.len() + level.len(),
                cap: product_cap,
            });
        }
        products.extend(level.iter().map(|(_, p)| p.clone()));
        if depth == degree_bound {
            break;
        }
        let mut next = Vec::new();
        for (min_idx, poly) in &level {
            for (i, row) in base.iter().enumerate().skip(*min_idx) {
                next.push((i, poly.mul(row)));
            }
        }
        level = next;
    }
    let mut block = eliminate_direction(&products, &qc.rhs, table);
    if qc.sense == Sense::Eq0 {
        let negated = qc.rhs.scale(&-Rat::one());
        block
            .constraints
            .extend(eliminate_direction(&products, &negated, table).constraints);
    }
    Ok(block)
}

/// Runs the appropriate elimination on every collected constraint.
pub fn eliminate_all(
    qcs: &[QuantifiedConstraint],
    degree_bound: usize,
    table: &mut SymbolTable,
    product_cap: usize,
) -> Result<Vec<ConstraintBlock>, SynthesisError> {
    qcs.iter()
        .map(|qc| {
            if qc.rhs.d_degree() <= 1 {
                farkas_eliminate(qc, table)
            } else {
                handelman_eliminate(qc, degree_bound, table, product_cap)
            }
        })
        .collect()
}

/// Serializes the existential system as SMT-LIB 2 text (logic `QF_NRA`),
/// byte-stable for a fixed input.
pub fn emit_problem(blocks: &[ConstraintBlock], table: &SymbolTable) -> String {
    let mut out = String::new();
    out.push_str("(set-logic QF_NRA)\n");
    for s in 0..table.len() {
        out.push_str(&format!("(declare-const {} Real)\n", table.name(s)));
    }
    for s in 0..table.len() {
        if table.is_nonneg(s) {
            out.push_str(&format!("(assert (>= {} 0))\n", table.name(s)));
        }
    }
    for block in blocks {
        for (poly, sense) in &block.constraints {
            let rendered = poly.to_smt(table);
            match sense {
                Sense::Ge0 => out.push_str(&format!("(assert (>= {rendered} 0))\n")),
                Sense::Eq0 => out.push_str(&format!("(assert (= {rendered} 0))\n")),
            }
        }
    }
    out.push_str("(check-sat)\n(get-model)\n");
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverResult {
    Sat(BTreeMap<String, Rat>),
    Unsat,
    Unknown(String),
}

#[derive(Clone, Debug, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokenize(input: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in input.chars() {
        match ch {
            '(' | ')' => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
            }
            c => current.push(c),
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn parse_sexps(tokens: &[String]) -> Vec<Sexp> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    for tok in tokens {
        match tok.as_str() {
            "(" => stack.push(Vec::new()),
            ")" => {
                let done = stack.pop().unwrap_or_default();
                match stack.last_mut() {
                    Some(top) => top.push(Sexp::List(done)),
                    None => stack.push(vec![Sexp::List(done)]),
                }
            }
            atom => {
                if let Some(top) = stack.last_mut() {
                    top.push(Sexp::Atom(atom.to_string()));
                }
            }
        }
    }
    stack.pop().unwrap_or_default()
}

fn sexp_to_rat(s: &Sexp) -> Result<Rat, String> {
    match s {
        Sexp::Atom(a) => parse_rat(a).map_err(|e| e.to_string()),
        Sexp::List(items) => {
            let head = items.first().ok_or("empty value expression")?;
            let Sexp::Atom(op) = head else {
                return Err("non-atomic head in value".into());
            };
            let args: Result<Vec<Rat>, String> = items[1..].iter().map(sexp_to_rat).collect();
            let args = args?;
            match op.as_str() {
                "-" => match args.len() {
                    1 => Ok(-args[0].clone()),
                    2 => Ok(args[0].clone() - args[1].clone()),
                    _ => Err("bad arity for -".into()),
                },
                "/" if args.len() == 2 => {
                    if args[1].is_zero() {
                        Err("division by zero in model".into())
                    } else {
                        Ok(args[0].clone() / args[1].clone())
                    }
                }
                "+" => Ok(args.into_iter().sum()),
                "*" => Ok(args.into_iter().product()),
                other => Err(format!("unsupported model value head {other:?}")),
            }
        }
    }
}

fn parse_model(sexps: &[Sexp]) -> Result<BTreeMap<String, Rat>, String> {
    let mut model = BTreeMap::new();
    let walk = |items: &[Sexp], model: &mut BTreeMap<String, Rat>| -> Result<(), String> {
        for item in items {
            if let Sexp::List(entry) = item {
                if let [Sexp::Atom(kw), Sexp::Atom(name), Sexp::List(params), Sexp::Atom(_sort), value] =
                    entry.as_slice()
                {
                    if kw == "define-fun" && params.is_empty() {
                        model.insert(name.clone(), sexp_to_rat(value)?);
                    }
                }
            }
        }
        Ok(())
    };
    for s in sexps {
        if let Sexp::List(items) = s {
            match items.first() {
                Some(Sexp::Atom(a)) if a == "model" => walk(&items[1..], &mut model)?,
                Some(Sexp::Atom(a)) if a == "define-fun" => walk(std::slice::from_ref(s), &mut model)?,
                _ => walk(items, &mut model)?,
            }
        }
    }
    Ok(model)
}

/// Launches the solver command (through the shell), feeds it the payload on
/// standard input, and parses `sat`/`unsat`/`unknown` plus the model block.
/// Timeouts and unparseable output map to `Unknown`; algebraic model values
/// are rejected so certificates stay exactly re-verifiable.
pub fn run_solver(
    payload: &str,
    solver_command: &str,
    timeout: Duration,
) -> Result<SolverResult, SynthesisError> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(solver_command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| SynthesisError::SolverSpawnFailure(e.to_string()))?;
    {
        let mut stdin = child
            .stdin
            .take()
            .ok_or_else(|| SynthesisError::SolverSpawnFailure("no stdin pipe".into()))?;
        let _ = stdin.write_all(payload.as_bytes());
    }
    let start = Instant::now();
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) => {
                if start.elapsed() >= timeout {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Ok(SolverResult::Unknown("solver timeout".into()));
                }
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(SynthesisError::SolverSpawnFailure(e.to_string())),
        }
    }
    let output = child
        .wait_with_output()
        .map_err(|e| SynthesisError::SolverSpawnFailure(e.to_string()))?;
    let raw = String::from_utf8_lossy(&output.stdout).to_string();
    if raw.contains("root-obj") {
        return Err(SynthesisError::ModelParseError {
            reason: "algebraic model value (root-obj) is not exactly representable".into(),
            raw,
        });
    }
    let verdict = raw
        .lines()
        .map(str::trim)
        .find(|l| matches!(*l, "sat" | "unsat" | "unknown"));
    match verdict {
        Some("unsat") => Ok(SolverResult::Unsat),
        Some("unknown") => Ok(SolverResult::Unknown("solver returned unknown".into())),
        Some("sat") => {
            let body: String = raw
                .lines()
                .skip_while(|l| l.trim() != "sat")
                .skip(1)
                .collect::<Vec<_>>()
                .join("\n");
            let sexps = parse_sexps(&tokenize(&body));
            match parse_model(&sexps) {
                Ok(model) => Ok(SolverResult::Sat(model)),
                Err(reason) => Err(SynthesisError::ModelParseError { reason, raw }),
            }
        }
        _ => Ok(SolverResult::Unknown(format!(
            "unrecognized solver output: {}",
            raw.lines().next().unwrap_or("")
        ))),
    }
}

/// A synthesized certificate: concrete template values, the scaling factor
/// and the threshold. Independently checkable via [`verify_certificate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    /// Per action: constant term, then one coefficient per state.
    pub theta: Vec<(Rat, Vec<Rat>)>,
    pub s: (Rat, Vec<Rat>),
    pub r: (Rat, Vec<Rat>),
    pub gamma: Rat,
    pub xi: Rat,
}

impl Certificate {
    pub fn scheduler(&self) -> Scheduler {
        Scheduler::LinearFractional(LinearFractional {
            theta: self.theta.clone(),
            s: self.s.clone(),
        })
    }

    pub fn numerator(&self, a: ActionId, d: &Configuration) -> Rat {
        let (c, coeffs) = &self.theta[a.0];
        affine_eval(c, coeffs, d)
    }

    pub fn denominator(&self, d: &Configuration) -> Rat {
        affine_eval(&self.s.0, &self.s.1, d)
    }

    pub fn value(&self, d: &Configuration) -> Rat {
        affine_eval(&self.r.0, &self.r.1, d)
    }
}

fn affine_eval(constant: &Rat, coeffs: &[Rat], d: &Configuration) -> Rat {
    constant.clone()
        + coeffs
            .iter()
            .zip(d.weights())
            .map(|(c, w)| c.clone() * w)
            .sum::<Rat>()
}

fn extract_certificate(
    values: &BTreeMap<Sym, Rat>,
    tv: &TemplateVars,
    gamma: &Rat,
    xi: &Rat,
) -> Certificate {
    let get = |s: Sym| values.get(&s).cloned().unwrap_or_else(Rat::zero);
    Certificate {
        theta: tv
            .theta
            .iter()
            .map(|syms| (get(syms[0]), syms[1..].iter().map(|&s| get(s)).collect()))
            .collect(),
        s: (get(tv.s[0]), tv.s[1..].iter().map(|&s| get(s)).collect()),
        r: (get(tv.r[0]), tv.r[1..].iter().map(|&s| get(s)).collect()),
        gamma: gamma.clone(),
        xi: xi.clone(),
    }
}

/// Independent exact check of a certificate.
#[derive(Clone, Debug, Default)]
pub struct VerificationReport {
    pub failures: Vec<String>,
    pub vertex_checks: usize,
    pub sampled_points: usize,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Uniform sample from the lattice simplex `{w/N : Σw = N}` (stars and
/// bars), exact by construction.
fn sample_configuration(rng: &mut ChaCha8Rng, n: usize, grain: u64) -> Configuration {
    if n == 1 {
        return Configuration::new(vec![Rat::one()]).expect("point simplex");
    }
    let slots = grain + n as u64 - 1;
    let mut cuts: Vec<u64> = Vec::with_capacity(n - 1);
    while cuts.len() < n - 1 {
        let c = rng.gen_range(1..=slots);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.sort_unstable();
    let mut weights = Vec::with_capacity(n);
    let mut prev = 0u64;
    for (i, &c) in cuts.iter().enumerate() {
        let part = c - prev - 1;
        weights.push(Rat::new(part.into(), grain.into()));
        prev = c;
        let _ = i;
    }
    weights.push(Rat::new((slots - prev).into(), grain.into()));
    Configuration::new(weights).expect("composition sums to the grain")
}

/// Exact verification: affine scheduler/bound families at the simplex
/// vertices (affine functions attain their extrema there), the threshold at
/// `d0`, and the denominator-cleared inductive inequality at every vertex
/// outside the target plus `samples` sampled configurations outside it.
pub fn verify_certificate(
    cert: &Certificate,
    m: &MdpModel,
    d0: &Configuration,
    target: &TargetSet,
    samples: usize,
    rng_seed: u64,
) -> VerificationReport {
    let n = m.n_states();
    let mut report = VerificationReport::default();

    for q in 0..n {
        let vertex = Configuration::dirac(StateId(q), n);
        report.vertex_checks += 1;
        for a in m.actions() {
            if cert.numerator(a, &vertex).is_negative() {
                report.failures.push(format!(
                    "numerator of {} negative at vertex {q}",
                    m.action_names[a.0]
                ));
            }
        }
        if cert.denominator(&vertex) < Rat::one() {
            report
                .failures
                .push(format!("denominator below one at vertex {q}"));
        }
        let numerator_sum: Rat = m.actions().map(|a| cert.numerator(a, &vertex)).sum();
        if numerator_sum != cert.denominator(&vertex) {
            report
                .failures
                .push(format!("numerator sum differs from denominator at vertex {q}"));
        }
        let value = cert.value(&vertex);
        if value.is_negative() || value > Rat::one() {
            report
                .failures
                .push(format!("submartingale out of [0,1] at vertex {q}"));
        }
    }

    if cert.value(d0) < cert.xi {
        report.failures.push(format!(
            "value {} at the initial configuration is below the threshold {}",
            format_rat(&cert.value(d0)),
            format_rat(&cert.xi)
        ));
    }

    let inductive_holds = |d: &Configuration| -> bool {
        let mut lhs = Rat::zero();
        for a in m.actions() {
            let next = m.apply_transposed(a, d);
            lhs += cert.numerator(a, d) * cert.value(&next);
        }
        lhs * cert.gamma.clone() >= cert.denominator(d) * cert.value(d)
    };

    for q in 0..n {
        let vertex = Configuration::dirac(StateId(q), n);
        if !target.contains(&vertex).unwrap_or(false) && !inductive_holds(&vertex) {
            report
                .failures
                .push(format!("inductive inequality fails at vertex {q}"));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut attempts = 0usize;
    while report.sampled_points < samples && attempts < samples.saturating_mul(50).max(100) {
        attempts += 1;
        let d = sample_configuration(&mut rng, n, 997);
        if target.contains(&d).unwrap_or(false) {
            continue;
        }
        report.sampled_points += 1;
        if !inductive_holds(&d) {
            report
                .failures
                .push(format!("inductive inequality fails at sampled point {d:?}"));
            if report.failures.len() > 8 {
                break;
            }
        }
    }
    report
}

/// Which engine discharges the existential system.
#[derive(Clone, Debug)]
pub enum SolverChoice {
    /// Candidate-scheduler enumeration plus the exact LP (in process).
    Builtin,
    /// External SMT-LIB 2 process, e.g. `z3 -in`.
    External { command: String },
}

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub gamma: Rat,
    pub degree_bound: usize,
    pub solver: SolverChoice,
    pub timeout: Duration,
    pub verify_samples: usize,
    pub seed: u64,
    pub conjunct_cap: usize,
    pub product_cap: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            gamma: crate::rat::default_gamma(),
            degree_bound: DEFAULT_DEGREE_BOUND,
            solver: SolverChoice::Builtin,
            timeout: Duration::from_secs(120),
            verify_samples: 1000,
            seed: 0,
            conjunct_cap: DEFAULT_CONJUNCT_CAP,
            product_cap: DEFAULT_PRODUCT_CAP,
        }
    }
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum CheckOutcome {
    Certified(Certificate),
    Unknown(String),
}

/// Candidate scheduler assignments for the built-in solver: every pure
/// action, the uniform mixture, and two-action mixtures. Each candidate
/// fixes the theta/s symbols so the eliminated system becomes linear in the
/// remaining symbols.
fn scheduler_candidates(tv: &TemplateVars, n_actions: usize) -> Vec<BTreeMap<Sym, Rat>> {
    let mut out = Vec::new();
    let base = |weights: Vec<Rat>| {
        let mut values = BTreeMap::new();
        for (a, w) in weights.iter().enumerate() {
            values.insert(tv.theta[a][0], w.clone());
            for k in 1..tv.theta[a].len() {
                values.insert(tv.theta[a][k], Rat::zero());
            }
        }
        values.insert(tv.s[0], Rat::one());
        for k in 1..tv.s.len() {
            values.insert(tv.s[k], Rat::zero());
        }
        values
    };
    for a in 0..n_actions {
        let mut w = vec![Rat::zero(); n_actions];
        w[a] = Rat::one();
        out.push(base(w));
    }
    if n_actions > 1 {
        out.push(base(vec![
            Rat::new(1.into(), (n_actions as i64).into());
            n_actions
        ]));
        for a in 0..n_actions {
            for b in (a + 1)..n_actions {
                {
                    let (wa, wb) = (Rat::new(1.into(), 2.into()), Rat::new(1.into(), 2.into()));
                    let mut w = vec![Rat::zero(); n_actions];
                    w[a] = wa.clone();
                    w[b] = wb.clone();
                    out.push(base(w));
                }
            }
        }
    }
    out
}

/// Feasibility of the eliminated system under a partial symbol assignment,
/// via the exact LP over the remaining symbols.
fn solve_blocks_linear(
    blocks: &[ConstraintBlock],
    table: &SymbolTable,
    fixed: &BTreeMap<Sym, Rat>,
) -> Result<Option<BTreeMap<Sym, Rat>>, SynthesisError> {
    let mut free: Vec<Sym> = Vec::new();
    let mut index: BTreeMap<Sym, usize> = BTreeMap::new();
    for s in 0..table.len() {
        if !fixed.contains_key(&s) {
            index.insert(s, free.len());
            free.push(s);
        }
    }
    let mut lp = LinearProgram::new(free.len());
    for (i, &s) in free.iter().enumerate() {
        if table.is_nonneg(s) {
            lp.lower[i] = Some(Rat::zero());
        }
    }
    for block in blocks {
        for (poly, sense) in &block.constraints {
            let reduced = poly.substitute(fixed);
            let Some((constant, linear)) = reduced.as_affine() else {
                return Ok(None);
            };
            let mut coeffs = vec![Rat::zero(); free.len()];
            for (s, c) in linear {
                coeffs[index[&s]] = c;
            }
            let cmp = match sense {
                Sense::Ge0 => Cmp::Ge,
                Sense::Eq0 => Cmp::Eq,
            };
            lp.push(coeffs, cmp, -constant);
        }
    }
    match crate::lp::solve_min(&lp)? {
        LpOutcome::Optimal { x, .. } => {
            let mut model = fixed.clone();
            for (i, &s) in free.iter().enumerate() {
                model.insert(s, x[i].clone());
            }
            Ok(Some(model))
        }
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Ok(None),
    }
}

/// The full pipeline: collect, eliminate, solve, extract, verify. Sound but
/// incomplete: every non-success maps to `Unknown`.
pub fn check_msct(
    m: &MdpModel,
    d0: &Configuration,
    target: &TargetSet,
    xi: &Rat,
    opts: &CheckOptions,
) -> Result<CheckOutcome, SynthesisError> {
    let deadline = Instant::now() + opts.timeout;
    let mut table = SymbolTable::default();
    let tv = template_vars(m, &mut table);
    let qcs = collect_constraints(m, d0, target, xi, &opts.gamma, &tv, opts.conjunct_cap)?;

    let model: Option<BTreeMap<Sym, Rat>> = match &opts.solver {
        SolverChoice::External { command } => {
            let mut full_table = table.clone();
            let blocks =
                eliminate_all(&qcs, opts.degree_bound, &mut full_table, opts.product_cap)?;
            let payload = emit_problem(&blocks, &full_table);
            match run_solver(&payload, command, opts.timeout)? {
                SolverResult::Sat(by_name) => {
                    let mut by_sym = BTreeMap::new();
                    for (name, value) in by_name {
                        if let Some(sym) = full_table.by_name(&name) {
                            by_sym.insert(sym, value);
                        }
                    }
                    Some(by_sym)
                }
                SolverResult::Unsat => {
                    return Ok(CheckOutcome::Unknown(
                        "constraint system unsatisfiable at this template degree".into(),
                    ))
                }
                SolverResult::Unknown(reason) => return Ok(CheckOutcome::Unknown(reason)),
            }
        }
        SolverChoice::Builtin => {
            // Fixing a candidate scheduler first collapses the bilinear
            // system: constant numerators make the cleared inductive
            // right-hand side affine in the configuration, so the cheap
            // affine elimination applies and the remaining search over
            // (r, multipliers) is one exact LP per candidate.
            let mut found = None;
            for candidate in scheduler_candidates(&tv, m.n_actions()) {
                if Instant::now() >= deadline {
                    return Ok(CheckOutcome::Unknown("builtin search timed out".into()));
                }
                let substituted: Vec<QuantifiedConstraint> = qcs
                    .iter()
                    .map(|qc| QuantifiedConstraint {
                        lhs: qc.lhs.clone(),
                        rhs: qc.rhs.substitute(&candidate),
                        sense: qc.sense,
                    })
                    .collect();
                let mut local = table.clone();
                let blocks = eliminate_all(
                    &substituted,
                    opts.degree_bound,
                    &mut local,
                    opts.product_cap,
                )?;
                if let Some(model) = solve_blocks_linear(&blocks, &local, &candidate)? {
                    found = Some(model);
                    break;
                }
            }
            found
        }
    };

    let Some(model) = model else {
        return Ok(CheckOutcome::Unknown(
            "no feasible template instantiation found".into(),
        ));
    };
    let cert = extract_certificate(&model, &tv, &opts.gamma, xi);
    let report = verify_certificate(&cert, m, d0, target, opts.verify_samples, opts.seed);
    if report.passed() {
        Ok(CheckOutcome::Certified(cert))
    } else {
        Ok(CheckOutcome::Unknown(format!(
            "solver model failed exact verification: {}",
            report.failures.join("; ")
        )))
    }
}
