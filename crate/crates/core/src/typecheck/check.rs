//! Type checking of monomorphized programs: linear qubit usage, basis
//! well-formedness, span and completeness side conditions, reversibility.

use std::collections::{BTreeMap, BTreeSet};

use crate::basis::{desugar, factored_span_equal, family_of, FactoredBasis, TOL};
use crate::classical::check_classical;
use crate::error::{ErrorCode, RuntimeError, TypeError};
use crate::syntax::*;

use super::types::{as_function, bits, carries_qubits, func, is_subtype, lower_type, qubits, Atom, Display, FnTy, Ty};

fn err(code: ErrorCode, msg: impl Into<String>) -> TypeError {
    TypeError::new(code, msg)
}

fn from_runtime(e: RuntimeError) -> TypeError {
    TypeError::new(e.code, e.message)
}

fn const_dim(d: &DimExpr) -> Result<usize, TypeError> {
    match d.as_const() {
        Some(n) if n >= 0 => Ok(n as usize),
        Some(n) => Err(err(ErrorCode::NegativeDim, format!("dimension {n} is negative"))),
        None => Err(err(ErrorCode::UnboundDimVar, format!("dimension `{d}` is not concrete"))),
    }
}

/// Checks a basis and returns its qubit count.
pub fn check_basis(b: &BasisExpr) -> Result<usize, TypeError> {
    match b {
        BasisExpr::Std | BasisExpr::Pm | BasisExpr::Ij => Ok(1),
        BasisExpr::Fourier(n) => const_dim(n),
        BasisExpr::Tensor(items) => items.iter().map(check_basis).sum(),
        BasisExpr::Fold(x, n) => Ok(check_basis(x)? * const_dim(n)?),
        BasisExpr::Literal(vs) => {
            let Some(first) = vs.first() else {
                return Err(err(ErrorCode::NotABasis, "a basis literal needs at least one vector"));
            };
            let width = |v: &BasisVector| -> Result<usize, TypeError> { Ok(v.symbols.chars().count() * const_dim(&v.fold)?) };
            let m = width(first)?;
            for v in vs {
                let w = width(v)?;
                if w != m {
                    return Err(err(ErrorCode::DimMismatch, format!("basis vectors of {m} and {w} qubits")));
                }
                if let Some(p) = &v.phase {
                    crate::basis::angle_value(p).map_err(|e| err(e.code, format!("phase `{p}` is not concrete")))?;
                }
            }
            let families: BTreeSet<_> = vs.iter().flat_map(|v| v.symbols.chars()).filter_map(family_of).collect();
            if families.len() > 1 {
                return Err(err(ErrorCode::MixedEigenbasis, "basis literal mixes symbols of different eigenbases"));
            }
            // Within one family distinct symbol strings are orthogonal product
            // states, so equal strings are exactly the duplicates up to phase.
            let mut seen = BTreeSet::new();
            for v in vs {
                let expanded = v.symbols.repeat(const_dim(&v.fold)?);
                if !seen.insert(expanded.clone()) {
                    return Err(err(ErrorCode::DuplicateBasisVector, format!("vector '{expanded}' appears twice")));
                }
            }
            Ok(m)
        }
    }
}

/// Checks `b1 >> b2` and returns its qubit count.
pub fn check_translation(b1: &BasisExpr, b2: &BasisExpr) -> Result<usize, TypeError> {
    let (m1, m2) = (check_basis(b1)?, check_basis(b2)?);
    if m1 != m2 {
        return Err(err(ErrorCode::DimMismatch, format!("translation from {m1} qubits to {m2} qubits")));
    }
    let f1 = FactoredBasis::from_expr(b1).map_err(from_runtime)?;
    let f2 = FactoredBasis::from_expr(b2).map_err(from_runtime)?;
    if !factored_span_equal(&f1, &f2, TOL).map_err(from_runtime)? {
        return Err(err(ErrorCode::SpanMismatch, "translation between bases that span different subspaces"));
    }
    Ok(m1)
}

/// Checks `b.measure` and returns its qubit count.
pub fn check_measure(b: &BasisExpr) -> Result<usize, TypeError> {
    let m = check_basis(b)?;
    if !FactoredBasis::from_expr(b).map_err(from_runtime)?.full_span() {
        return Err(err(ErrorCode::IncompleteMeasureBasis, "measurement basis does not span the whole space"));
    }
    Ok(m)
}

/// Declared type of a concrete definition as a single function atom.
pub fn declared_type(def: &Definition) -> Result<Atom, TypeError> {
    let mut input = Vec::new();
    for p in &def.params {
        input.extend(lower_type(&p.ty)?);
    }
    Ok(func(input, lower_type(&def.ret)?, def.reversible))
}

/// Checks every definition of a monomorphized program and returns the
/// type of each.
pub fn check_program(p: &Program) -> Result<BTreeMap<String, TypeExpr>, TypeError> {
    let mut globals = Globals::default();
    for def in &p.defs {
        match def.kind {
            DefKind::Classical => {
                let (i, o) = check_classical(def)?;
                globals.classical.insert(def.name.clone(), (i, o));
            }
            DefKind::Quantum => {
                globals.quantum.insert(def.name.clone(), declared_type(def).map_err(|e| e.at(def.span))?);
            }
        }
    }
    let mut out = BTreeMap::new();
    for def in &p.defs {
        let ty = match def.kind {
            DefKind::Classical => {
                let (i, o) = globals.classical[&def.name];
                func(bits(i), bits(o), false)
            }
            DefKind::Quantum => check_definition(def, &globals).map_err(|e| e.at(def.span))?,
        };
        out.insert(def.name.clone(), super::types::to_type_expr(&[ty]));
    }
    Ok(out)
}

#[derive(Debug, Default, Clone)]
pub struct Globals {
    pub quantum: BTreeMap<String, Atom>,
    pub classical: BTreeMap<String, (usize, usize)>,
}

fn check_definition(def: &Definition, globals: &Globals) -> Result<Atom, TypeError> {
    let Body::Quantum(body) = &def.body else { unreachable!("quantum definition") };
    let mut c = Checker { globals, env: BTreeMap::new(), irreversible: false, rev_kernel: def.reversible };
    for p in &def.params {
        let ty = lower_type(&p.ty)?;
        if c.env.insert(p.name.clone(), Binding { linear: carries_qubits(&ty), ty, used: false }).is_some() {
            return Err(err(ErrorCode::LinearityViolation, format!("parameter `{}` is bound twice", p.name)));
        }
    }
    let got = c.ty(body)?;
    let declared = declared_type(def)?;
    let Atom::Func(f) = &declared else { unreachable!() };
    if !is_subtype(&got, &f.output) {
        return Err(mismatch(&got, &f.output, &format!("body of `{}`", def.name)));
    }
    for (name, b) in &c.env {
        if b.linear && !b.used {
            return Err(err(ErrorCode::LinearityViolation, format!("qubit parameter `{name}` is never used")));
        }
    }
    if def.reversible {
        let shaped = f.input.iter().all(|a| *a == Atom::Qubit) && f.input == f.output;
        if !shaped || c.irreversible {
            return Err(err(
                ErrorCode::NotReversible,
                format!("`{}` is declared rev but is not a reversible qubit[m] -> qubit[m] function", def.name),
            ));
        }
    }
    Ok(declared)
}

/// Type of a closed quantum expression with no parameters in scope.
pub fn type_of(e: &Expr, globals: &Globals) -> Result<Ty, TypeError> {
    let mut c = Checker { globals, env: BTreeMap::new(), irreversible: false, rev_kernel: false };
    c.ty(e)
}

struct Binding {
    ty: Ty,
    linear: bool,
    used: bool,
}

struct Checker<'a> {
    globals: &'a Globals,
    env: BTreeMap<String, Binding>,
    irreversible: bool,
    rev_kernel: bool,
}

fn mismatch(got: &[Atom], want: &[Atom], what: &str) -> TypeError {
    let same_kind = got.iter().chain(want).all(|a| *a == Atom::Qubit) || got.iter().chain(want).all(|a| *a == Atom::Bit);
    let code = if same_kind && got.len() != want.len() { ErrorCode::DimMismatch } else { ErrorCode::ArityMismatch };
    err(code, format!("{what}: expected `{}`, found `{}`", Display(want), Display(got)))
}

fn expect_function(t: &[Atom], what: &str) -> Result<FnTy, TypeError> {
    as_function(t).ok_or_else(|| err(ErrorCode::ArityMismatch, format!("{what} is `{}`, not a function", Display(t))))
}

impl Checker<'_> {
    fn ty(&mut self, e: &Expr) -> Result<Ty, TypeError> {
        Ok(match e {
            Expr::Unit => Vec::new(),
            Expr::QubitLiteral { symbols, fold } => qubits(symbols.chars().count() * const_dim(fold)?),
            Expr::BitLiteral(b) => bits(b.len()),
            Expr::Variable(x) => self.variable(x)?,
            Expr::BuiltIn(b) => vec![match b {
                BuiltIn::Id => func(qubits(1), qubits(1), true),
                BuiltIn::Discard => func(qubits(1), Vec::new(), false),
                BuiltIn::DiscardZ => {
                    if !self.rev_kernel {
                        return Err(err(ErrorCode::NotReversible, "`discardz` is only allowed inside rev definitions"));
                    }
                    func(qubits(1), Vec::new(), true)
                }
            }],
            Expr::Tensor(items) => {
                let mut out = Vec::new();
                for x in items {
                    out.extend(self.ty(x)?);
                }
                out
            }
            Expr::Fold { expr, count } => {
                let t = self.ty(expr)?;
                if carries_qubits(&t) {
                    return Err(err(ErrorCode::LinearityViolation, "folding a qubit value would copy it"));
                }
                let n = const_dim(count)?;
                let mut out = Vec::with_capacity(t.len() * n);
                for _ in 0..n {
                    out.extend(t.iter().cloned());
                }
                out
            }
            Expr::Phase { angle, expr } => {
                crate::basis::angle_value(angle)
                    .map_err(|e| err(e.code, format!("phase `{angle}` is not concrete")))?;
                let t = self.ty(expr)?;
                if !t.is_empty() && t.iter().all(|a| *a == Atom::Qubit) {
                    t
                } else {
                    let f = expect_function(&t, "phase operand")?;
                    if !f.rev {
                        return Err(err(ErrorCode::NotReversible, "a phase needs a reversible function"));
                    }
                    t
                }
            }
            Expr::Basis(b) => vec![Atom::Basis; check_basis(b)?],
            Expr::Translate { from, to } => {
                let m = check_translation(from, to)?;
                vec![func(qubits(m), qubits(m), true)]
            }
            Expr::Measure(b) => {
                let m = check_measure(b)?;
                vec![func(qubits(m), bits(m), false)]
            }
            Expr::Predicate { basis, func: f, .. } => {
                let m = check_basis(basis)?;
                let t = self.ty(f)?;
                let f = expect_function(&t, "predicated operand")?;
                if !f.rev {
                    return Err(err(ErrorCode::NotReversible, "only reversible functions can be predicated"));
                }
                if f.input != f.output || f.input.iter().any(|a| *a != Atom::Qubit) {
                    return Err(err(ErrorCode::ArityMismatch, "predicated function must map qubit[n] to qubit[n]"));
                }
                vec![func(qubits(m + f.input.len()), qubits(m + f.input.len()), true)]
            }
            Expr::Reverse(f) => {
                let t = self.ty(f)?;
                let f = expect_function(&t, "reversed operand")?;
                if !f.rev {
                    return Err(err(ErrorCode::NotReversible, "only reversible functions can be reversed"));
                }
                vec![func(f.output, f.input, true)]
            }
            Expr::Sugar(s) => {
                let expanded = desugar(s)?;
                self.ty(&expanded)?
            }
            Expr::Embed { kind, func: f, inverse } => {
                let (n_in, n_out) = self.classical(f)?;
                match kind {
                    EmbedKind::Xor => vec![func(qubits(n_in + n_out), qubits(n_in + n_out), true)],
                    EmbedKind::Phase => {
                        if n_out != 1 {
                            return Err(err(
                                ErrorCode::PhaseNeedsOneOutput,
                                format!("`.phase` needs a one-bit result, found {n_out} bits"),
                            ));
                        }
                        vec![func(qubits(n_in), qubits(n_in), true)]
                    }
                    EmbedKind::InPlace => {
                        let Some(inv) = inverse else {
                            return Err(err(ErrorCode::ArityMismatch, "`.inplace` needs the inverse function"));
                        };
                        let (i2, o2) = self.classical(inv)?;
                        if n_in != n_out || i2 != n_in || o2 != n_in {
                            return Err(err(
                                ErrorCode::WidthMismatch,
                                "`.inplace` needs f, g: bit[n] -> bit[n] of the same width",
                            ));
                        }
                        vec![func(qubits(n_in), qubits(n_in), true)]
                    }
                }
            }
            Expr::Apply { func: f, arg } => {
                let at = self.ty(arg)?;
                if let Expr::Unrolled(iters) = &**f {
                    return self.unrolled(iters, at);
                }
                let ft = self.ty(f)?;
                let fun = expect_function(&ft, "pipe stage")?;
                if !is_subtype(&at, &fun.input) {
                    return Err(mismatch(&at, &fun.input, "pipe input"));
                }
                if !fun.rev {
                    self.irreversible = true;
                }
                fun.output
            }
            Expr::Unrolled(_) => {
                return Err(err(ErrorCode::ArityMismatch, "a repeat block must be used as a pipe stage"));
            }
            Expr::Instantiate { name, .. } => {
                return Err(err(ErrorCode::UnboundDimVar, format!("`{name}[[...]]` was not instantiated")));
            }
            Expr::Repeat { .. } => {
                return Err(err(ErrorCode::UnboundDimVar, "repeat bounds were not instantiated"));
            }
        })
    }

    fn variable(&mut self, x: &str) -> Result<Ty, TypeError> {
        if let Some(b) = self.env.get_mut(x) {
            if b.linear {
                if b.used {
                    return Err(err(ErrorCode::LinearityViolation, format!("`{x}` is used more than once")));
                }
                b.used = true;
            }
            return Ok(b.ty.clone());
        }
        if let Some(t) = self.globals.quantum.get(x) {
            return Ok(vec![t.clone()]);
        }
        if self.globals.classical.contains_key(x) {
            return Err(err(
                ErrorCode::ArityMismatch,
                format!("classical function `{x}` must be embedded with .xor_embed, .phase or .inplace"),
            ));
        }
        Err(err(ErrorCode::UnknownName, format!("unknown name `{x}`")))
    }

    fn classical(&self, f: &Expr) -> Result<(usize, usize), TypeError> {
        let Expr::Variable(name) = f else {
            return Err(err(ErrorCode::ArityMismatch, "only named classical functions can be embedded"));
        };
        if let Some(&sig) = self.globals.classical.get(name) {
            return Ok(sig);
        }
        if self.globals.quantum.contains_key(name) {
            return Err(err(ErrorCode::ArityMismatch, format!("`{name}` is not a classical function")));
        }
        Err(err(ErrorCode::UnknownName, format!("unknown name `{name}`")))
    }

    /// Threads `input` through every stage; each iteration must map the
    /// tuple back to its own type.
    fn unrolled(&mut self, iters: &[Vec<Expr>], input: Ty) -> Result<Ty, TypeError> {
        for stages in iters {
            let mut cur = input.clone();
            for s in stages {
                let ft = self.ty(s)?;
                let f = expect_function(&ft, "repeat stage")?;
                if !is_subtype(&cur, &f.input) {
                    return Err(mismatch(&cur, &f.input, "repeat stage input"));
                }
                if !f.rev {
                    self.irreversible = true;
                }
                cur = f.output;
            }
            if cur != input {
                return Err(mismatch(&cur, &input, "repeat body must return its input type"));
            }
        }
        Ok(input)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_expr, parse_program};
    use crate::typecheck::types::to_type_expr;

    fn ty(src: &str) -> Result<String, ErrorCode> {
        let e = parse_expr(src).unwrap();
        type_of(&e, &Globals::default()).map(|t| to_type_expr(&t).to_string()).map_err(|e| e.code)
    }

    fn program(src: &str) -> Result<BTreeMap<String, TypeExpr>, ErrorCode> {
        check_program(&parse_program(src).unwrap()).map_err(|e| e.code)
    }

    #[test]
    fn value_and_op_types() {
        assert_eq!(ty("std >> {'1','0'}").unwrap(), "rev_qfunc[1,1]");
        assert_eq!(ty("std[3].measure").unwrap(), "mfunc[3,3]");
        assert_eq!(ty("'0'[3] | id + discard + id").unwrap(), "qubit[2]");
        assert_eq!(ty("'0' + '1' | std[2].measure").unwrap(), "bit[2]");
        assert_eq!(ty("'0' | {'1'} & std.flip").unwrap_err(), ErrorCode::DimMismatch);
        assert_eq!(ty("'00' | {'1'} & std.flip").unwrap(), "qubit[2]");
        assert_eq!(ty("fourier[2] >> std[2]").unwrap(), "rev_qfunc[2,2]");
    }

    #[test]
    fn basis_errors() {
        assert_eq!(ty("{'0','1','+'}").unwrap_err(), ErrorCode::MixedEigenbasis);
        assert_eq!(ty("{'0', phase(0.5)*'0'}").unwrap_err(), ErrorCode::DuplicateBasisVector);
        assert_eq!(ty("{'0', phase(0.5)*'1'}").unwrap(), "basis");
        assert_eq!(ty("{'0','11'}").unwrap_err(), ErrorCode::DimMismatch);
        assert_eq!(ty("{'00','11'} >> {'++','--'}").unwrap_err(), ErrorCode::SpanMismatch);
        assert_eq!(ty("{'+'}.measure").unwrap_err(), ErrorCode::IncompleteMeasureBasis);
        assert_eq!(ty("std >> std[2]").unwrap_err(), ErrorCode::DimMismatch);
    }

    #[test]
    fn reversibility() {
        assert_eq!(ty("~(pm.measure)").unwrap_err(), ErrorCode::NotReversible);
        assert_eq!(ty("std & pm.measure").unwrap_err(), ErrorCode::NotReversible);
        assert_eq!(ty("~(std >> pm)").unwrap(), "rev_qfunc[1,1]");
        assert_eq!(ty("discardz").unwrap_err(), ErrorCode::NotReversible);
        assert_eq!(
            program("qpu rev k(q: qubit) -> qubit: q + '0' | id + discard").unwrap_err(),
            ErrorCode::NotReversible
        );
        assert_eq!(program("qpu rev k(q: qubit) -> qubit: q | std.measure").unwrap_err(), ErrorCode::ArityMismatch);
        assert!(program("qpu rev k(q: qubit) -> qubit: q + '0' | std & std.flip | id + discardz").is_ok());
    }

    #[test]
    fn linearity() {
        assert_eq!(program("qpu k(q: qubit) -> qubit[2]: q + q").unwrap_err(), ErrorCode::LinearityViolation);
        assert_eq!(program("qpu k(q: qubit) -> qubit: '0'").unwrap_err(), ErrorCode::LinearityViolation);
        assert_eq!(program("qpu k(q: qubit) -> qubit[2]: q[2]").unwrap_err(), ErrorCode::LinearityViolation);
        assert!(program("qpu k() -> basis[2]: std[2]").is_ok());
    }

    #[test]
    fn embeddings() {
        let src = "classical f(x: bit[2]) -> bit: x.xor_reduce()\n\
                   classical g(x: bit[2]) -> bit[2]: concat(x[1:2], x[0:1])\n\
                   qpu a(q: qubit[3]) -> qubit[3]: q | f.xor_embed\n\
                   qpu b(q: qubit[2]) -> qubit[2]: q | f.phase\n\
                   qpu c(q: qubit[2]) -> qubit[2]: q | g.inplace(g)";
        let t = program(src).unwrap();
        assert_eq!(t["a"].to_string(), "qfunc[3,3]");
        assert_eq!(t["c"].to_string(), "qfunc[2,2]");
        let bad = "classical g(x: bit[2]) -> bit[2]: concat(x[1:2], x[0:1])\n\
                   qpu b(q: qubit[2]) -> qubit[2]: q | g.phase";
        assert_eq!(program(bad).unwrap_err(), ErrorCode::PhaseNeedsOneOutput);
    }
}
