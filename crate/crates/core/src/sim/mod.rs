//! Statevector simulation of monomorphized, checked programs.
//!
//! A [`Plan`] lowers every definition once: bases become gates, classical
//! embeddings become permutations or sign masks, and expressions become a
//! small tree that each shot interprets against a [`Backend`]. Reversed
//! and predicated functions are first traced into a [`Circuit`] and then
//! replayed (adjointed, or with extra controls).

pub mod circuit;
pub mod gates;
pub mod state;

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::basis::{align, desugar, FactoredBasis, Factor};
use crate::classical::{inplace_embedding, phase_embedding, truth_table, xor_embedding, EmbeddingAction};
use crate::error::{ErrorCode, RuntimeError};
use crate::linalg::{Matrix, C64};
use crate::syntax::*;
use crate::typecheck::check::declared_type;
use crate::typecheck::types::{lower_type, Atom, Ty};
use crate::typecheck::Compiled;

pub use circuit::{Backend, Circuit, Instr, Tracer};
pub use gates::{Control, ControlKind, Gate};
pub use state::{State, DEFAULT_MAX_QUBITS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub max_qubits: usize,
    /// Threshold for `discardz` cleanliness.
    pub tol: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { max_qubits: DEFAULT_MAX_QUBITS, tol: 1e-9 }
    }
}

fn stuck(msg: impl Into<String>) -> RuntimeError {
    RuntimeError::new(ErrorCode::StuckExpression, msg)
}

fn from_type_error(e: crate::error::TypeError) -> RuntimeError {
    RuntimeError::new(e.code, e.message)
}

/// Runtime value atom.
#[derive(Debug, Clone)]
pub enum RVal {
    Qubit(usize),
    Bit(bool),
    Basis,
    Func(Arc<Fun>),
}

#[derive(Debug)]
pub struct Fun {
    kind: FunKind,
    pub n_in: usize,
    pub n_out: usize,
    /// False when the function depends on a parameter value.
    pure: bool,
}

#[derive(Debug)]
enum FunKind {
    Id,
    Discard,
    DiscardZ,
    Circuit(Arc<Circuit>),
    /// Basis change to `std`, then a computational measurement.
    Measure(Arc<Circuit>),
    Predicate { controls: Vec<Control>, m: usize, right: bool, f: Arc<Fun> },
    Reverse(Arc<Fun>),
    Phase(f64, Arc<Fun>),
    Call(usize),
    Param(usize),
    Tensor(Vec<Arc<Fun>>),
    Seq(Vec<Arc<Fun>>),
}

#[derive(Debug)]
enum Node {
    Unit,
    QLit(Vec<char>),
    Bits(Vec<bool>),
    Param(usize),
    Tensor(Vec<Node>),
    Fold(Box<Node>, usize),
    Phase(f64, Box<Node>),
    Apply(Arc<Fun>, Box<Node>),
    Fun(Arc<Fun>),
    Basis(usize),
}

#[derive(Debug)]
struct LDef {
    name: String,
    params: Vec<usize>,
    body: Node,
}

/// A lowered program, shareable across shots and threads.
#[derive(Debug)]
pub struct Plan {
    defs: Vec<LDef>,
    index: HashMap<String, usize>,
    program: Program,
    entry: Option<usize>,
    pub opts: SimOptions,
    preps: Vec<(char, Gate)>,
    /// Keyed by address; the entry keeps the function alive.
    cache: Mutex<HashMap<usize, CacheEntry>>,
}

type CacheEntry = (Arc<Fun>, Arc<Circuit>);

/// Translation `from >> to` as a circuit on `m` wires.
///
/// Factors are aligned into groups covering the same qubits. Identical
/// groups are padding (full span) or controls (partial span); every other
/// group gets its own gate, controlled on the spans of the remaining
/// partial groups. Full-span groups go through `std` factor by factor.
pub fn translation_circuit(from: &BasisExpr, to: &BasisExpr) -> Result<Circuit, RuntimeError> {
    let fa = FactoredBasis::from_expr(from)?;
    let fb = FactoredBasis::from_expr(to)?;
    let m = fa.qubits();
    if fb.qubits() != m {
        return Err(RuntimeError::new(ErrorCode::DimMismatch, "translation between different qubit counts"));
    }
    let mut c = Circuit::identity(m);
    let Some(groups) = align(&fa.factors, &fb.factors) else {
        c.push(Gate::subspace(fa.to_value()?.vectors, fb.to_value()?.vectors), (0..m).collect(), Vec::new());
        return Ok(c);
    };
    struct G {
        off: usize,
        a: Vec<Factor>,
        b: Vec<Factor>,
        full: bool,
    }
    let mut gs = Vec::new();
    let mut off = 0;
    for (a, b) in groups {
        let q: usize = a.iter().map(Factor::qubits).sum();
        let full = a.iter().all(Factor::full_span) && b.iter().all(Factor::full_span);
        gs.push(G { off, a, b, full });
        off += q;
    }
    for (i, g) in gs.iter().enumerate() {
        if g.a == g.b {
            continue;
        }
        let mut controls = Vec::new();
        for (j, h) in gs.iter().enumerate() {
            if j == i || h.full {
                continue;
            }
            let mut w = h.off;
            for f in &h.a {
                if !f.full_span() {
                    controls.push(gates::factor_control(f, (w..w + f.qubits()).collect()));
                }
                w += f.qubits();
            }
        }
        if g.full {
            let mut w = g.off;
            for f in &g.a {
                if let Some(gate) = gates::to_std_gate(f) {
                    c.push(gate, (w..w + f.qubits()).collect(), controls.clone());
                }
                w += f.qubits();
            }
            let mut w = g.off;
            for f in &g.b {
                if let Some(gate) = gates::to_std_gate(f) {
                    c.push(gate.adjoint(), (w..w + f.qubits()).collect(), controls.clone());
                }
                w += f.qubits();
            }
        } else {
            let va = FactoredBasis { factors: g.a.clone() }.to_value()?;
            let vb = FactoredBasis { factors: g.b.clone() }.to_value()?;
            let q = va.qubits;
            c.push(Gate::subspace(va.vectors, vb.vectors), (g.off..g.off + q).collect(), controls);
        }
    }
    Ok(c)
}

/// Basis change that makes a measurement in `b` a computational one.
pub fn measurement_circuit(b: &BasisExpr) -> Result<Circuit, RuntimeError> {
    let fb = FactoredBasis::from_expr(b)?;
    if !fb.full_span() {
        return Err(RuntimeError::new(ErrorCode::IncompleteMeasureBasis, "measurement basis does not span the space"));
    }
    let mut c = Circuit::identity(fb.qubits());
    let mut w = 0;
    for f in &fb.factors {
        if !f.is_computational() {
            if let Some(g) = gates::to_std_gate(f) {
                c.push(g, (w..w + f.qubits()).collect(), Vec::new());
            }
        }
        w += f.qubits();
    }
    Ok(c)
}

/// Controls selecting the span of `b`, on wires `0..m`.
pub fn predicate_controls(b: &BasisExpr) -> Result<(usize, Vec<Control>), RuntimeError> {
    let fb = FactoredBasis::from_expr(b)?;
    let mut controls = Vec::new();
    let mut w = 0;
    for f in &fb.factors {
        if !f.full_span() {
            controls.push(gates::factor_control(f, (w..w + f.qubits()).collect()));
        }
        w += f.qubits();
    }
    Ok((fb.qubits(), controls))
}

/// Gate realizing a classical embedding.
pub fn embedding_gate(a: EmbeddingAction, label: Option<Arc<str>>) -> Gate {
    match a {
        EmbeddingAction::Xor { perm, .. } | EmbeddingAction::InPlace { perm, .. } => Gate::perm(perm, label),
        EmbeddingAction::Phase { signs, .. } => Gate::PhaseMask { mask: Arc::new(signs), label },
    }
}

struct Lowerer<'a> {
    program: &'a Program,
    index: &'a HashMap<String, usize>,
    params: Vec<(String, Ty)>,
    embeds: HashMap<(String, EmbedKind, Option<String>), Arc<Circuit>>,
}

fn arity(t: &[Atom]) -> (usize, usize) {
    t.iter().fold((0, 0), |(i, o), a| match a {
        Atom::Func(f) => (i + f.input.len(), o + f.output.len()),
        _ => (i, o),
    })
}

fn fun(kind: FunKind, n_in: usize, n_out: usize, pure: bool) -> Arc<Fun> {
    Arc::new(Fun { kind, n_in, n_out, pure })
}

fn const_usize(d: &DimExpr) -> Result<usize, RuntimeError> {
    d.as_const()
        .and_then(|x| usize::try_from(x).ok())
        .ok_or_else(|| stuck(format!("dimension `{d}` was not instantiated")))
}

fn const_angle(a: &AngleExpr) -> Result<f64, RuntimeError> {
    crate::basis::angle_value(a)
}

impl Lowerer<'_> {
    fn param(&self, name: &str) -> Option<(usize, &Ty)> {
        self.params.iter().position(|(n, _)| n == name).map(|i| (i, &self.params[i].1))
    }

    fn is_fun(&self, e: &Expr) -> bool {
        match e {
            Expr::BuiltIn(_)
            | Expr::Translate { .. }
            | Expr::Measure(_)
            | Expr::Predicate { .. }
            | Expr::Reverse(_)
            | Expr::Embed { .. }
            | Expr::Unrolled(_) => true,
            Expr::Sugar(s) => !matches!(s, Sugar::Prep(_)) || desugar(s).is_ok(),
            Expr::Variable(x) => match self.param(x) {
                Some((_, t)) => !t.is_empty() && t.iter().all(|a| matches!(a, Atom::Func(_))),
                None => self.index.contains_key(x),
            },
            Expr::Tensor(items) => !items.is_empty() && items.iter().all(|x| self.is_fun(x)),
            Expr::Fold { expr, .. } | Expr::Phase { expr, .. } => self.is_fun(expr),
            _ => false,
        }
    }

    fn embed(&mut self, kind: EmbedKind, f: &Expr, inverse: Option<&Expr>) -> Result<Arc<Fun>, RuntimeError> {
        let name = |e: &Expr| match e {
            Expr::Variable(n) => Ok(n.clone()),
            other => Err(stuck(format!("cannot embed {other:?}"))),
        };
        let fname = name(f)?;
        let iname = inverse.map(name).transpose()?;
        let key = (fname.clone(), kind, iname.clone());
        let circuit = match self.embeds.get(&key) {
            Some(c) => c.clone(),
            None => {
                let def = |n: &str| {
                    self.program.get(n).ok_or_else(|| RuntimeError::new(ErrorCode::UnknownName, format!("unknown `{n}`")))
                };
                let table = truth_table(def(&fname)?)?;
                let action = match kind {
                    EmbedKind::Xor => xor_embedding(&table),
                    EmbedKind::Phase => phase_embedding(&table)?,
                    EmbedKind::InPlace => {
                        let inv = iname.as_deref().ok_or_else(|| stuck("`.inplace` without an inverse"))?;
                        inplace_embedding(&table, &truth_table(def(inv)?)?)?
                    }
                };
                let width = match &action {
                    EmbeddingAction::Xor { width, .. }
                    | EmbeddingAction::Phase { width, .. }
                    | EmbeddingAction::InPlace { width, .. } => *width,
                };
                let mut c = Circuit::identity(width);
                c.push(embedding_gate(action, Some(Arc::from(fname.as_str()))), (0..width).collect(), Vec::new());
                let c = Arc::new(c);
                self.embeds.insert(key, c.clone());
                c
            }
        };
        let w = circuit.inputs.len();
        Ok(fun(FunKind::Circuit(circuit), w, w, true))
    }

    fn fun(&mut self, e: &Expr) -> Result<Arc<Fun>, RuntimeError> {
        Ok(match e {
            Expr::BuiltIn(BuiltIn::Id) => fun(FunKind::Id, 1, 1, true),
            Expr::BuiltIn(BuiltIn::Discard) => fun(FunKind::Discard, 1, 0, true),
            Expr::BuiltIn(BuiltIn::DiscardZ) => fun(FunKind::DiscardZ, 1, 0, true),
            Expr::Translate { from, to } => {
                let c = translation_circuit(from, to)?;
                let m = c.inputs.len();
                fun(FunKind::Circuit(Arc::new(c)), m, m, true)
            }
            Expr::Measure(b) => {
                let c = measurement_circuit(b)?;
                let m = c.inputs.len();
                fun(FunKind::Measure(Arc::new(c)), m, m, true)
            }
            Expr::Predicate { basis, func, basis_right } => {
                let (m, controls) = predicate_controls(basis)?;
                let f = self.fun(func)?;
                let n = f.n_in;
                let pure = f.pure;
                fun(FunKind::Predicate { controls, m, right: *basis_right, f }, m + n, m + n, pure)
            }
            Expr::Reverse(f) => {
                let f = self.fun(f)?;
                let (i, o, p) = (f.n_in, f.n_out, f.pure);
                fun(FunKind::Reverse(f), o, i, p)
            }
            Expr::Sugar(s) => {
                let d = desugar(s).map_err(from_type_error)?;
                self.fun(&d)?
            }
            Expr::Embed { kind, func, inverse } => self.embed(*kind, func, inverse.as_deref())?,
            Expr::Variable(x) => {
                if let Some((slot, t)) = self.param(x) {
                    let (i, o) = arity(t);
                    fun(FunKind::Param(slot), i, o, false)
                } else if let Some(&idx) = self.index.get(x) {
                    let def = self.program.get(x).unwrap();
                    let Atom::Func(f) = declared_type(def).map_err(from_type_error)? else { unreachable!() };
                    fun(FunKind::Call(idx), f.input.len(), f.output.len(), true)
                } else {
                    return Err(RuntimeError::new(ErrorCode::UnknownName, format!("unknown function `{x}`")));
                }
            }
            Expr::Tensor(items) => {
                let fs = items.iter().map(|x| self.fun(x)).collect::<Result<Vec<_>, _>>()?;
                let (i, o) = fs.iter().fold((0, 0), |(i, o), f| (i + f.n_in, o + f.n_out));
                let pure = fs.iter().all(|f| f.pure);
                fun(FunKind::Tensor(fs), i, o, pure)
            }
            Expr::Fold { expr, count } => {
                let f = self.fun(expr)?;
                let n = const_usize(count)?;
                let pure = f.pure;
                let (i, o) = (f.n_in * n, f.n_out * n);
                fun(FunKind::Tensor(vec![f; n]), i, o, pure)
            }
            Expr::Phase { angle, expr } => {
                let f = self.fun(expr)?;
                let (i, o, p) = (f.n_in, f.n_out, f.pure);
                fun(FunKind::Phase(const_angle(angle)?, f), i, o, p)
            }
            Expr::Unrolled(iters) => {
                let fs = iters.iter().flatten().map(|x| self.fun(x)).collect::<Result<Vec<_>, _>>()?;
                let i = fs.first().map_or(0, |f| f.n_in);
                let o = fs.last().map_or(0, |f| f.n_out);
                let pure = fs.iter().all(|f| f.pure);
                fun(FunKind::Seq(fs), i, o, pure)
            }
            other => return Err(stuck(format!("expression is not a function: {other:?}"))),
        })
    }

    fn node(&mut self, e: &Expr) -> Result<Node, RuntimeError> {
        Ok(match e {
            Expr::Unit => Node::Unit,
            Expr::QubitLiteral { symbols, fold } => {
                Node::QLit(symbols.repeat(const_usize(fold)?).chars().collect())
            }
            Expr::BitLiteral(b) => Node::Bits(b.clone()),
            Expr::Variable(x) if self.param(x).is_some() => Node::Param(self.param(x).unwrap().0),
            Expr::Tensor(items) if !self.is_fun(e) => {
                Node::Tensor(items.iter().map(|x| self.node(x)).collect::<Result<_, _>>()?)
            }
            Expr::Fold { expr, count } if !self.is_fun(expr) => Node::Fold(Box::new(self.node(expr)?), const_usize(count)?),
            Expr::Phase { angle, expr } if !self.is_fun(expr) => {
                Node::Phase(const_angle(angle)?, Box::new(self.node(expr)?))
            }
            Expr::Apply { func, arg } => Node::Apply(self.fun(func)?, Box::new(self.node(arg)?)),
            Expr::Basis(b) => Node::Basis(FactoredBasis::from_expr(b)?.qubits()),
            Expr::Sugar(Sugar::Prep(_)) => Node::Fun(self.fun(e)?),
            other => Node::Fun(self.fun(other)?),
        })
    }
}

impl Plan {
    /// Lowers a compiled program; the entry point is the compiled entry.
    pub fn new(c: &Compiled, opts: SimOptions) -> Result<Plan, RuntimeError> {
        Plan::from_program(&c.mono.program, Some(&c.mono.entry), opts)
    }

    /// Lowers every quantum definition of a concrete program.
    pub fn from_program(p: &Program, entry: Option<&str>, opts: SimOptions) -> Result<Plan, RuntimeError> {
        let quantum: Vec<&Definition> = p.defs.iter().filter(|d| d.kind == DefKind::Quantum).collect();
        let index: HashMap<String, usize> = quantum.iter().enumerate().map(|(i, d)| (d.name.clone(), i)).collect();
        let mut embeds = HashMap::new();
        let mut defs = Vec::new();
        for d in &quantum {
            let params = d
                .params
                .iter()
                .map(|x| Ok((x.name.clone(), lower_type(&x.ty).map_err(from_type_error)?)))
                .collect::<Result<Vec<_>, RuntimeError>>()?;
            let widths = params.iter().map(|(_, t)| t.len()).collect();
            let mut l = Lowerer { program: p, index: &index, params, embeds: std::mem::take(&mut embeds) };
            let Body::Quantum(body) = &d.body else { unreachable!() };
            let body = l.node(body).map_err(|e| RuntimeError::new(e.code, format!("in `{}`: {}", d.name, e.message)))?;
            embeds = l.embeds;
            defs.push(LDef { name: d.name.clone(), params: widths, body });
        }
        let entry = match entry {
            Some(e) => Some(*index.get(e).ok_or_else(|| {
                RuntimeError::new(ErrorCode::UnknownName, format!("no quantum definition `{e}`"))
            })?),
            None => None,
        };
        let preps = ['1', '+', '-', 'i', 'j'].into_iter().map(|c| (c, gates::prep_gate(c).unwrap())).collect();
        Ok(Plan { defs, index, program: p.clone(), entry, opts, preps, cache: Mutex::new(HashMap::new()) })
    }

    pub fn entry_name(&self) -> Option<&str> {
        self.entry.map(|i| self.defs[i].name.as_str())
    }

    /// Lowers a closed function expression over this program's definitions.
    pub fn function(&self, e: &Expr) -> Result<Arc<Fun>, RuntimeError> {
        let mut l = Lowerer { program: &self.program, index: &self.index, params: Vec::new(), embeds: HashMap::new() };
        l.fun(e)
    }

    /// Circuit of a reversible function.
    pub fn trace(&self, f: &Arc<Fun>) -> Result<Arc<Circuit>, RuntimeError> {
        trace(self, f, &[])
    }

    /// Dense matrix of a reversible `qubit[m] -> qubit[m]` function.
    pub fn matrix(&self, f: &Arc<Fun>) -> Result<Matrix, RuntimeError> {
        let c = self.trace(f)?;
        circuit_matrix(&c)
    }
}

/// Dense matrix of a circuit without net allocation, column by column.
pub fn circuit_matrix(c: &Circuit) -> Result<Matrix, RuntimeError> {
    let m = c.inputs.len();
    if m != c.outputs.len() {
        return Err(stuck("matrix of a function that changes the qubit count"));
    }
    if m > crate::basis::MAX_DENSE_QUBITS {
        return Err(RuntimeError::new(ErrorCode::MatrixTooLarge, format!("{m} qubits exceed the dense limit")));
    }
    let dim = 1usize << m;
    let mut out = Matrix::zeros(dim);
    for k in 0..dim {
        let mut s = State::basis(m, k);
        s.max_qubits = s.max_qubits.max(m + c.wires);
        let qs: Vec<usize> = (0..m).collect();
        let outs = c.replay(&mut s, &qs, &[])?;
        let col = s.amplitudes_of(&outs)?;
        for (r, x) in col.into_iter().enumerate() {
            out.set(r, k, x);
        }
    }
    Ok(out)
}

fn qubits(v: &[RVal]) -> Result<Vec<usize>, RuntimeError> {
    v.iter()
        .map(|a| match a {
            RVal::Qubit(q) => Ok(*q),
            other => Err(stuck(format!("expected a qubit, found {other:?}"))),
        })
        .collect()
}

fn trace(plan: &Plan, f: &Arc<Fun>, env: &[Vec<RVal>]) -> Result<Arc<Circuit>, RuntimeError> {
    let key = Arc::as_ptr(f) as usize;
    if f.pure {
        if let Some((_, c)) = plan.cache.lock().unwrap().get(&key) {
            return Ok(c.clone());
        }
    }
    let mut t = Tracer::new(f.n_in);
    let args = (0..f.n_in).map(RVal::Qubit).collect();
    let out = exec_fun(plan, &mut t, f, args, env)?;
    let outs = qubits(&out)?;
    let c = t.finish((0..f.n_in).collect(), outs);
    if f.pure {
        plan.cache.lock().unwrap().insert(key, (f.clone(), c.clone()));
    }
    Ok(c)
}

fn exec_fun<B: Backend>(
    plan: &Plan,
    b: &mut B,
    f: &Arc<Fun>,
    args: Vec<RVal>,
    env: &[Vec<RVal>],
) -> Result<Vec<RVal>, RuntimeError> {
    if args.len() != f.n_in && !matches!(f.kind, FunKind::Seq(_)) {
        return Err(stuck(format!("function of {} inputs applied to {} values", f.n_in, args.len())));
    }
    let q = |v: Vec<usize>| v.into_iter().map(RVal::Qubit).collect::<Vec<_>>();
    Ok(match &f.kind {
        FunKind::Id => args,
        FunKind::Discard => {
            b.discard(qubits(&args)?[0])?;
            Vec::new()
        }
        FunKind::DiscardZ => {
            b.free_zero(qubits(&args)?[0])?;
            Vec::new()
        }
        FunKind::Circuit(c) => q(c.replay(b, &qubits(&args)?, &[])?),
        FunKind::Measure(c) => {
            let outs = c.replay(b, &qubits(&args)?, &[])?;
            b.measure(&outs)?.into_iter().map(RVal::Bit).collect()
        }
        FunKind::Predicate { controls, m, right, f: inner } => {
            let qs = qubits(&args)?;
            let n = inner.n_in;
            let (pred, rest) = if *right { (&qs[n..], &qs[..n]) } else { (&qs[..*m], &qs[*m..]) };
            let c = trace(plan, inner, env)?;
            let cs: Vec<Control> = controls.iter().map(|c| c.remap(|w| pred[w])).collect();
            let out = c.replay(b, rest, &cs)?;
            if *right {
                q(out.into_iter().chain(pred.iter().copied()).collect())
            } else {
                q(pred.iter().copied().chain(out).collect())
            }
        }
        FunKind::Reverse(inner) => {
            let c = trace(plan, inner, env)?.adjoint();
            q(c.replay(b, &qubits(&args)?, &[])?)
        }
        FunKind::Phase(theta, inner) => {
            let out = exec_fun(plan, b, inner, args, env)?;
            b.gate(&Gate::GlobalPhase(*theta), &[], &[])?;
            out
        }
        FunKind::Call(idx) => {
            let def = &plan.defs[*idx];
            let mut frame = Vec::with_capacity(def.params.len());
            let mut rest = args.into_iter();
            for w in &def.params {
                frame.push(rest.by_ref().take(*w).collect());
            }
            eval_node(plan, b, &def.body, &frame)?
        }
        FunKind::Param(slot) => {
            let parts = env.get(*slot).ok_or_else(|| stuck("unbound parameter"))?;
            let fs = parts
                .iter()
                .map(|a| match a {
                    RVal::Func(f) => Ok(f.clone()),
                    other => Err(stuck(format!("expected a function, found {other:?}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            apply_tensor(plan, b, &fs, args, env)?
        }
        FunKind::Tensor(fs) => apply_tensor(plan, b, fs, args, env)?,
        FunKind::Seq(fs) => {
            let mut cur = args;
            for g in fs {
                cur = exec_fun(plan, b, g, cur, env)?;
            }
            cur
        }
    })
}

fn apply_tensor<B: Backend>(
    plan: &Plan,
    b: &mut B,
    fs: &[Arc<Fun>],
    args: Vec<RVal>,
    env: &[Vec<RVal>],
) -> Result<Vec<RVal>, RuntimeError> {
    let mut rest = args.into_iter();
    let mut out = Vec::new();
    for g in fs {
        let part: Vec<RVal> = rest.by_ref().take(g.n_in).collect();
        out.extend(exec_fun(plan, b, g, part, env)?);
    }
    if rest.next().is_some() {
        return Err(stuck("tensor of functions applied to too many values"));
    }
    Ok(out)
}

fn eval_node<B: Backend>(plan: &Plan, b: &mut B, n: &Node, env: &[Vec<RVal>]) -> Result<Vec<RVal>, RuntimeError> {
    Ok(match n {
        Node::Unit => Vec::new(),
        Node::QLit(symbols) => {
            let mut out = Vec::with_capacity(symbols.len());
            for s in symbols {
                let q = b.alloc()?;
                if let Some((_, g)) = plan.preps.iter().find(|(c, _)| c == s) {
                    b.gate(g, &[q], &[])?;
                }
                out.push(RVal::Qubit(q));
            }
            out
        }
        Node::Bits(bits) => bits.iter().map(|x| RVal::Bit(*x)).collect(),
        Node::Param(slot) => env.get(*slot).cloned().ok_or_else(|| stuck("unbound parameter"))?,
        Node::Tensor(items) => {
            let mut out = Vec::new();
            for x in items {
                out.extend(eval_node(plan, b, x, env)?);
            }
            out
        }
        Node::Fold(x, k) => {
            let one = eval_node(plan, b, x, env)?;
            let mut out = Vec::with_capacity(one.len() * k);
            for _ in 0..*k {
                out.extend(one.iter().cloned());
            }
            out
        }
        Node::Phase(theta, x) => {
            let out = eval_node(plan, b, x, env)?;
            b.gate(&Gate::GlobalPhase(*theta), &[], &[])?;
            out
        }
        Node::Apply(f, arg) => {
            let a = eval_node(plan, b, arg, env)?;
            exec_fun(plan, b, f, a, env)?
        }
        Node::Fun(f) => match &f.kind {
            FunKind::Tensor(fs) => fs.iter().map(|g| RVal::Func(g.clone())).collect(),
            _ => vec![RVal::Func(f.clone())],
        },
        Node::Basis(m) => vec![RVal::Basis; *m],
    })
}

/// Result of one shot.
#[derive(Debug, Clone, PartialEq)]
pub struct Shot {
    pub bits: Vec<bool>,
    pub calls: BTreeMap<String, u64>,
}

fn shot_rng(seed: u64, shot: u64) -> ChaCha12Rng {
    let mut r = ChaCha12Rng::seed_from_u64(seed);
    r.set_stream(shot);
    r
}

fn entry(plan: &Plan) -> Result<&LDef, RuntimeError> {
    let i = plan.entry.ok_or_else(|| RuntimeError::new(ErrorCode::UnknownName, "no entry kernel"))?;
    let d = &plan.defs[i];
    if d.params.iter().any(|w| *w > 0) {
        return Err(RuntimeError::new(
            ErrorCode::ArityMismatch,
            format!("entry kernel `{}` must take no arguments", d.name),
        ));
    }
    Ok(d)
}

/// Runs shot number `shot` of the entry kernel. Returned qubits are
/// measured in the computational basis.
pub fn run_shot(plan: &Plan, seed: u64, shot: u64) -> Result<Shot, RuntimeError> {
    let d = entry(plan)?;
    let mut s = State::new(plan.opts.max_qubits, plan.opts.tol, Some(shot_rng(seed, shot)));
    let frame: Vec<Vec<RVal>> = d.params.iter().map(|_| Vec::new()).collect();
    let out = eval_node(plan, &mut s, &d.body, &frame)?;
    let mut bits = Vec::with_capacity(out.len());
    for v in out {
        match v {
            RVal::Bit(x) => bits.push(x),
            RVal::Qubit(q) => bits.extend(s.measure(&[q])?),
            other => return Err(stuck(format!("kernel returned {other:?}, not bits"))),
        }
    }
    if let Some(q) = s.live_qubits().first() {
        return Err(RuntimeError::new(ErrorCode::DeadQubit, format!("qubit {q} is live after the kernel returned")));
    }
    Ok(Shot { bits, calls: std::mem::take(&mut s.calls) })
}

/// Runs shots `0..shots` in parallel and returns them in shot order.
pub fn sample(plan: &Plan, shots: u64, seed: u64) -> Result<Vec<Shot>, RuntimeError> {
    (0..shots).into_par_iter().map(|i| run_shot(plan, seed, i)).collect()
}

pub fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|b| if *b { '1' } else { '0' }).collect()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RunResult {
    pub shots: u64,
    pub counts: BTreeMap<String, u64>,
    pub seed: u64,
    #[serde(skip)]
    pub calls: BTreeMap<String, u64>,
}

impl RunResult {
    /// Embedding applications summed over all shots and functions.
    pub fn total_calls(&self) -> u64 {
        self.calls.values().sum()
    }

    pub fn most_common(&self) -> Option<(&str, u64)> {
        let mut best: Option<(&str, u64)> = None;
        for (k, v) in &self.counts {
            if best.is_none_or(|(_, b)| *v > b) {
                best = Some((k, *v));
            }
        }
        best
    }
}

/// Histogram of `shots` shots.
pub fn run(plan: &Plan, shots: u64, seed: u64) -> Result<RunResult, RuntimeError> {
    let all = sample(plan, shots, seed)?;
    let mut counts = BTreeMap::new();
    let mut calls = BTreeMap::new();
    for s in all {
        *counts.entry(bit_string(&s.bits)).or_insert(0) += 1;
        for (k, v) in s.calls {
            *calls.entry(k).or_insert(0) += v;
        }
    }
    Ok(RunResult { shots, counts, seed, calls })
}

/// Amplitudes of the qubits the entry kernel returns, most significant
/// first. Any measurement inside uses stream 0 of `seed`.
pub fn run_to_state(plan: &Plan, seed: u64) -> Result<Vec<C64>, RuntimeError> {
    let d = entry(plan)?;
    let mut s = State::new(plan.opts.max_qubits, plan.opts.tol, Some(shot_rng(seed, 0)));
    let frame: Vec<Vec<RVal>> = d.params.iter().map(|_| Vec::new()).collect();
    let out = eval_node(plan, &mut s, &d.body, &frame)?;
    s.amplitudes_of(&qubits(&out)?)
}
