//! Monomorphization: binds dimension variables and captures, unrolls
//! `repeat`, and emits one concrete definition per distinct instantiation.
//!
//! Dimension variables are bound from, in order: explicit `[[...]]`
//! arguments, unification of capture types against the bound values,
//! and `--set` values (an exact-name fallback for non-entry definitions).
//! Captures come from explicit `name=value` arguments, then a same-named
//! capture of the enclosing instantiation, then `--arg`.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{ErrorCode, TypeError};
use crate::parser::parse_expr;
use crate::syntax::*;

use super::types::{func, is_subtype, lower_type, Atom, Ty};

/// Values supplied from the command line or an API caller.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings {
    pub dims: BTreeMap<String, i64>,
    /// Capture values by name: a bit string (`1011`, `0b1011`) or an
    /// expression naming a definition (`balanced`, `mult[[7,13,15,4,...]]`).
    pub args: BTreeMap<String, String>,
    pub phases: Option<Vec<f64>>,
}

impl Bindings {
    pub fn dim(mut self, k: &str, v: i64) -> Self {
        self.dims.insert(k.to_string(), v);
        self
    }

    pub fn arg(mut self, k: &str, v: &str) -> Self {
        self.args.insert(k.to_string(), v.to_string());
        self
    }

    pub fn phases(mut self, p: Vec<f64>) -> Self {
        self.phases = Some(p);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Monomorphized {
    /// Concrete definitions in dependency order, callees first.
    pub program: Program,
    pub entry: String,
}

impl Monomorphized {
    pub fn get(&self, name: &str) -> Option<&Definition> {
        self.program.get(name)
    }

    pub fn entry_def(&self) -> &Definition {
        self.program.get(&self.entry).expect("entry is always emitted")
    }
}

#[derive(Debug, Clone, PartialEq)]
enum CapVal {
    Bits(Vec<bool>),
    Func(FnVal),
}

#[derive(Debug, Clone, PartialEq)]
struct FnVal {
    name: String,
    dims: BTreeMap<String, i64>,
    /// Dimension variables left open with `...`, bound at each use.
    free: Vec<String>,
    captures: BTreeMap<String, CapVal>,
}

#[derive(Debug, Clone, Default)]
struct Ctx {
    dims: BTreeMap<String, i64>,
    captures: BTreeMap<String, CapVal>,
    params: Vec<String>,
}

struct Mono<'a> {
    prog: &'a Program,
    cli: &'a Bindings,
    done: BTreeMap<String, Definition>,
    order: Vec<String>,
    active: BTreeSet<String>,
}

pub fn monomorphize(p: &Program, entry: &str, b: &Bindings) -> Result<Monomorphized, TypeError> {
    let mut m = Mono { prog: p, cli: b, done: BTreeMap::new(), order: Vec::new(), active: BTreeSet::new() };
    let def = m.lookup(entry)?;
    let mut fv = m.build(entry, &[], None).map_err(|e| e.at(def.span))?;
    m.finalize(&mut fv, true).map_err(|e| e.at(def.span))?;
    let name = m.specialize(&fv)?;
    let defs = m.order.iter().map(|k| m.done[k].clone()).collect();
    Ok(Monomorphized { program: Program { defs, pragmas: Pragmas::default() }, entry: name })
}

fn err(code: ErrorCode, msg: impl Into<String>) -> TypeError {
    TypeError::new(code, msg)
}

fn mangle(fv: &FnVal) -> String {
    let mut s = fv.name.clone();
    if !fv.dims.is_empty() {
        let parts: Vec<String> = fv.dims.iter().map(|(k, v)| format!("{k}={v}")).collect();
        s.push_str(&format!("[{}]", parts.join(",")));
    }
    if !fv.captures.is_empty() {
        let parts: Vec<String> = fv
            .captures
            .iter()
            .map(|(k, v)| match v {
                CapVal::Bits(b) => format!("{k}=0b{}", b.iter().map(|x| if *x { '1' } else { '0' }).collect::<String>()),
                CapVal::Func(f) => format!("{k}={}", mangle(f)),
            })
            .collect();
        s.push_str(&format!("{{{}}}", parts.join(",")));
    }
    s
}

/// Width pattern of a homogeneous type: `(atom kind, counts)`.
fn width_pattern(t: &TypeExpr) -> Option<(Option<TypeExpr>, Vec<DimExpr>)> {
    match t {
        TypeExpr::Unit => Some((None, Vec::new())),
        TypeExpr::Qubit | TypeExpr::Bit | TypeExpr::Basis => Some((Some(t.clone()), vec![DimExpr::Const(1)])),
        TypeExpr::Tensor(items) => {
            let mut kind: Option<TypeExpr> = None;
            let mut counts = Vec::new();
            for (t, n) in items {
                let (k, inner) = width_pattern(t)?;
                if let Some(k) = k {
                    if kind.as_ref().is_some_and(|x| *x != k) {
                        return None;
                    }
                    kind = Some(k);
                }
                for c in inner {
                    counts.push(DimExpr::bin(DimOp::Mul, c, n.clone()));
                }
            }
            Some((kind, counts))
        }
        TypeExpr::Func { .. } => None,
    }
}

fn sum(counts: Vec<DimExpr>) -> DimExpr {
    counts.into_iter().reduce(|a, b| DimExpr::bin(DimOp::Add, a, b)).unwrap_or(DimExpr::Const(0))
}

/// Binds the single unknown in `e` so that it equals `value`, for the
/// shapes `x`, `x ± c`, `c + x` and `c * x`.
fn solve(e: &DimExpr, value: i64) -> Option<(String, i64)> {
    match e {
        DimExpr::Var(x) => Some((x.clone(), value)),
        DimExpr::Bin(op, a, b) => match (op, &**a, &**b) {
            (DimOp::Add, x, DimExpr::Const(c)) | (DimOp::Add, DimExpr::Const(c), x) => solve(x, value - c),
            (DimOp::Sub, x, DimExpr::Const(c)) => solve(x, value + c),
            (DimOp::Mul, x, DimExpr::Const(c)) | (DimOp::Mul, DimExpr::Const(c), x) if *c != 0 && value % c == 0 => {
                solve(x, value / c)
            }
            _ => None,
        },
        DimExpr::Const(_) => None,
    }
}

fn unify_dims(
    d1: &DimExpr,
    m1: &mut BTreeMap<String, i64>,
    d2: &DimExpr,
    m2: &mut BTreeMap<String, i64>,
) -> Result<bool, TypeError> {
    let e1 = d1.subst(m1)?;
    let e2 = d2.subst(m2)?;
    match (&e1, &e2) {
        (DimExpr::Const(a), DimExpr::Const(b)) => {
            if a != b {
                return Err(err(ErrorCode::DimMismatch, format!("dimension {a} does not match {b}")));
            }
            Ok(false)
        }
        (x, DimExpr::Const(b)) => match solve(x, *b) {
            Some((k, v)) => {
                m1.insert(k, v);
                Ok(true)
            }
            None => Ok(false),
        },
        (DimExpr::Const(a), y) => match solve(y, *a) {
            Some((k, v)) => {
                m2.insert(k, v);
                Ok(true)
            }
            None => Ok(false),
        },
        _ => Ok(false),
    }
}

fn unify_types(
    p1: &TypeExpr,
    m1: &mut BTreeMap<String, i64>,
    p2: &TypeExpr,
    m2: &mut BTreeMap<String, i64>,
) -> Result<bool, TypeError> {
    if let (TypeExpr::Func { input: i1, output: o1, .. }, TypeExpr::Func { input: i2, output: o2, .. }) = (p1, p2) {
        let a = unify_types(i1, m1, i2, m2)?;
        let b = unify_types(o1, m1, o2, m2)?;
        return Ok(a || b);
    }
    let unwrap = |t: &TypeExpr| match t {
        TypeExpr::Tensor(items) if items.len() == 1 && items[0].1 == DimExpr::Const(1) => items[0].0.clone(),
        other => other.clone(),
    };
    let (u1, u2) = (unwrap(p1), unwrap(p2));
    if matches!(u1, TypeExpr::Func { .. }) && matches!(u2, TypeExpr::Func { .. }) {
        return unify_types(&u1, m1, &u2, m2);
    }
    match (width_pattern(p1), width_pattern(p2)) {
        (Some((k1, c1)), Some((k2, c2))) if k1.is_none() || k2.is_none() || k1 == k2 => {
            unify_dims(&sum(c1), m1, &sum(c2), m2)
        }
        _ => Ok(false),
    }
}

fn flat_params(params: &[Param]) -> TypeExpr {
    let mut items = Vec::new();
    for p in params {
        match &p.ty {
            TypeExpr::Unit => {}
            TypeExpr::Tensor(inner) => items.extend(inner.iter().cloned()),
            other => items.push((other.clone(), DimExpr::Const(1))),
        }
    }
    if items.is_empty() {
        TypeExpr::Unit
    } else {
        TypeExpr::Tensor(items)
    }
}

/// Declared function type of a definition, still symbolic.
fn signature_pattern(def: &Definition) -> TypeExpr {
    TypeExpr::Func { input: Box::new(flat_params(&def.params)), output: Box::new(def.ret.clone()), rev: def.reversible }
}

fn bits_value(s: &str) -> Option<Vec<bool>> {
    let s = s.strip_prefix("0b").unwrap_or(s);
    if !s.is_empty() && s.chars().all(|c| c == '0' || c == '1') {
        Some(s.chars().map(|c| c == '1').collect())
    } else {
        None
    }
}

impl<'a> Mono<'a> {
    fn lookup(&self, name: &str) -> Result<&'a Definition, TypeError> {
        self.prog.get(name).ok_or_else(|| err(ErrorCode::UnknownName, format!("unknown name `{name}`")))
    }

    fn eval_dim(&self, d: &DimExpr, dims: &BTreeMap<String, i64>) -> Result<i64, TypeError> {
        Ok(d.eval_map(dims)?)
    }

    fn build(&mut self, name: &str, args: &[InstArg], ctx: Option<&Ctx>) -> Result<FnVal, TypeError> {
        let def = self.lookup(name)?;
        let empty = Ctx::default();
        let ctx = ctx.unwrap_or(&empty);
        let mut fv = FnVal { name: name.to_string(), dims: BTreeMap::new(), free: Vec::new(), captures: BTreeMap::new() };
        // Positional arguments fill the dimension variables not named anywhere.
        let named: Vec<&String> = args
            .iter()
            .filter_map(|a| match a {
                InstArg::NamedDim(k, _) | InstArg::Named(k, _) if def.dim_vars.contains(k) => Some(k),
                _ => None,
            })
            .collect();
        let positional: Vec<&String> = def.dim_vars.iter().filter(|v| !named.contains(v)).collect();
        let mut pos = 0;
        let next_var = |pos: &mut usize| -> Result<String, TypeError> {
            let v = positional.get(*pos).map(|v| (*v).clone()).ok_or_else(|| {
                err(ErrorCode::ArityMismatch, format!("too many dimension arguments for `{name}`"))
            })?;
            *pos += 1;
            Ok(v)
        };
        for arg in args {
            match arg {
                InstArg::Dim(d) => {
                    let var = next_var(&mut pos)?;
                    fv.dims.insert(var, self.eval_dim(d, &ctx.dims)?);
                }
                InstArg::Free => fv.free.push(next_var(&mut pos)?),
                InstArg::NamedDim(k, d) => {
                    if !def.dim_vars.contains(k) {
                        return Err(err(ErrorCode::UnknownName, format!("`{name}` has no dimension `{k}`")));
                    }
                    fv.dims.insert(k.clone(), self.eval_dim(d, &ctx.dims)?);
                }
                InstArg::Named(k, v) => {
                    if def.dim_vars.contains(k) {
                        let Expr::Variable(x) = v else {
                            return Err(err(ErrorCode::DimMismatch, format!("`{k}` expects a dimension")));
                        };
                        let value = ctx
                            .dims
                            .get(x)
                            .copied()
                            .ok_or_else(|| err(ErrorCode::UnboundDimVar, format!("unbound dimension variable `{x}`")))?;
                        fv.dims.insert(k.clone(), value);
                    } else if def.captures.iter().any(|c| &c.name == k) {
                        let value = self.capture_value(v, ctx)?;
                        fv.captures.insert(k.clone(), value);
                    } else {
                        return Err(err(ErrorCode::UnknownName, format!("`{name}` has no capture or dimension `{k}`")));
                    }
                }
            }
        }
        for c in &def.captures {
            if fv.captures.contains_key(&c.name) {
                continue;
            }
            if let Some(v) = ctx.captures.get(&c.name) {
                fv.captures.insert(c.name.clone(), v.clone());
            } else if let Some(text) = self.cli.args.get(&c.name) {
                let v = self.cli_capture(text)?;
                fv.captures.insert(c.name.clone(), v);
            }
        }
        self.infer(def, &mut fv)?;
        Ok(fv)
    }

    fn cli_capture(&mut self, text: &str) -> Result<CapVal, TypeError> {
        if let Some(b) = bits_value(text) {
            return Ok(CapVal::Bits(b));
        }
        let e = parse_expr(text).map_err(|e| err(e.code, format!("in capture value `{text}`: {}", e.message)))?;
        self.capture_value(&e, &Ctx::default())
    }

    fn capture_value(&mut self, v: &Expr, ctx: &Ctx) -> Result<CapVal, TypeError> {
        match v {
            Expr::BitLiteral(b) => Ok(CapVal::Bits(b.clone())),
            Expr::Variable(x) => {
                if let Some(c) = ctx.captures.get(x) {
                    return Ok(c.clone());
                }
                Ok(CapVal::Func(self.build(x, &[], Some(ctx))?))
            }
            Expr::Instantiate { name, args } => {
                if let Some(CapVal::Func(f)) = ctx.captures.get(name) {
                    return Ok(CapVal::Func(self.bind_free(f.clone(), args, ctx)?));
                }
                Ok(CapVal::Func(self.build(name, args, Some(ctx))?))
            }
            other => Err(err(ErrorCode::ArityMismatch, format!("not a capture value: {other:?}"))),
        }
    }

    /// Binds the `...` dimensions of a captured function at a use site.
    fn bind_free(&mut self, mut f: FnVal, args: &[InstArg], ctx: &Ctx) -> Result<FnVal, TypeError> {
        for arg in args {
            match arg {
                InstArg::Dim(d) => {
                    if f.free.is_empty() {
                        return Err(err(ErrorCode::ArityMismatch, format!("`{}` has no free dimensions left", f.name)));
                    }
                    let var = f.free.remove(0);
                    f.dims.insert(var, self.eval_dim(d, &ctx.dims)?);
                }
                InstArg::NamedDim(k, d) if f.free.contains(k) => {
                    f.free.retain(|x| x != k);
                    f.dims.insert(k.clone(), self.eval_dim(d, &ctx.dims)?);
                }
                InstArg::Free => {}
                _ => {
                    return Err(err(ErrorCode::ArityMismatch, format!("cannot rebind arguments of captured `{}`", f.name)))
                }
            }
        }
        let def = self.lookup(&f.name)?;
        self.infer(def, &mut f)?;
        Ok(f)
    }

    /// Unifies capture types with capture values until nothing changes.
    fn infer(&mut self, def: &Definition, fv: &mut FnVal) -> Result<(), TypeError> {
        loop {
            let mut changed = false;
            for c in &def.captures {
                let Some(mut value) = fv.captures.remove(&c.name) else { continue };
                let result = match &mut value {
                    CapVal::Bits(b) => {
                        let mut scratch = BTreeMap::new();
                        let pattern = TypeExpr::repeated(TypeExpr::Bit, DimExpr::Const(b.len() as i64));
                        unify_types(&c.ty, &mut fv.dims, &pattern, &mut scratch)
                    }
                    CapVal::Func(inner) => {
                        let inner_def = self.lookup(&inner.name)?;
                        let r = unify_types(&c.ty, &mut fv.dims, &signature_pattern(inner_def), &mut inner.dims);
                        if matches!(r, Ok(true)) {
                            self.infer(inner_def, inner)?;
                        }
                        r
                    }
                };
                fv.captures.insert(c.name.clone(), value);
                changed |= result.map_err(|e| {
                    err(e.code, format!("capture `{}` of `{}`: {}", c.name, def.name, e.message))
                })?;
            }
            if !changed {
                return Ok(());
            }
        }
    }

    fn finalize(&mut self, fv: &mut FnVal, is_entry: bool) -> Result<(), TypeError> {
        let def = self.lookup(&fv.name)?;
        for var in &def.dim_vars {
            let Some(&v) = self.cli.dims.get(var) else { continue };
            match fv.dims.get(var) {
                Some(&bound) if is_entry && bound != v => {
                    return Err(err(
                        ErrorCode::DimMismatch,
                        format!("`{var}` of `{}` is {bound} but --set gives {v}", def.name),
                    ))
                }
                None if !fv.free.contains(var) => {
                    fv.dims.insert(var.clone(), v);
                }
                _ => {}
            }
        }
        self.infer(def, fv)?;
        for c in &def.captures {
            match fv.captures.get_mut(&c.name) {
                None => {
                    return Err(err(ErrorCode::UnknownName, format!("capture `{}` of `{}` is not bound", c.name, def.name)))
                }
                Some(CapVal::Func(inner)) => self.finalize(inner, false)?,
                Some(CapVal::Bits(_)) => {}
            }
        }
        self.infer(def, fv)?;
        for var in &def.dim_vars {
            if !fv.dims.contains_key(var) && !fv.free.contains(var) {
                return Err(err(ErrorCode::UnboundDimVar, format!("unbound dimension variable `{var}` of `{}`", def.name)));
            }
        }
        for c in &def.captures {
            let pattern = c.ty.subst(&fv.dims)?;
            let Ok(expected) = lower_type(&pattern) else { continue };
            let actual = match &fv.captures[&c.name] {
                CapVal::Bits(b) => vec![Atom::Bit; b.len()],
                CapVal::Func(inner) => match self.signature(inner) {
                    Some(t) => t,
                    None => continue,
                },
            };
            if !is_subtype(&actual, &expected) {
                let code = match (&actual[..], &expected[..]) {
                    ([Atom::Func(a)], [Atom::Func(b)]) if a.input == b.input && a.output == b.output => {
                        ErrorCode::NotReversible
                    }
                    ([Atom::Func(a)], [Atom::Func(b)])
                        if a.input.len() != b.input.len() || a.output.len() != b.output.len() =>
                    {
                        ErrorCode::DimMismatch
                    }
                    (a, b) if a.len() != b.len() && a.iter().chain(b).all(|x| *x == Atom::Bit) => ErrorCode::DimMismatch,
                    _ => ErrorCode::ArityMismatch,
                };
                return Err(err(
                    code,
                    format!(
                        "capture `{}` of `{}` expects `{}`, got `{}`",
                        c.name,
                        def.name,
                        super::types::Display(&expected),
                        super::types::Display(&actual)
                    ),
                ));
            }
        }
        Ok(())
    }

    fn signature(&self, fv: &FnVal) -> Option<Ty> {
        let def = self.prog.get(&fv.name)?;
        let TypeExpr::Func { input, output, rev } = signature_pattern(def) else { return None };
        let i = lower_type(&input.subst(&fv.dims).ok()?).ok()?;
        let o = lower_type(&output.subst(&fv.dims).ok()?).ok()?;
        Some(vec![func(i, o, rev)])
    }

    fn specialize(&mut self, fv: &FnVal) -> Result<String, TypeError> {
        if let Some(v) = fv.free.first() {
            return Err(err(ErrorCode::UnboundDimVar, format!("`{}` is used with dimension `{v}` still free", fv.name)));
        }
        let key = mangle(fv);
        if self.done.contains_key(&key) {
            return Ok(key);
        }
        if !self.active.insert(key.clone()) {
            return Err(err(ErrorCode::UnknownName, format!("`{}` refers to itself", fv.name)));
        }
        let def = self.lookup(&fv.name)?;
        let ctx = Ctx {
            dims: fv.dims.clone(),
            captures: fv.captures.clone(),
            params: def.params.iter().map(|p| p.name.clone()).collect(),
        };
        let result = (|| -> Result<Definition, TypeError> {
            let params = def
                .params
                .iter()
                .map(|p| Ok(Param { name: p.name.clone(), ty: p.ty.subst(&ctx.dims)? }))
                .collect::<Result<Vec<_>, TypeError>>()?;
            let ret = def.ret.subst(&ctx.dims)?;
            let body = match &def.body {
                Body::Quantum(e) => Body::Quantum(self.expr(e, &ctx)?),
                Body::Classical(c) => Body::Classical(self.classical(c, &ctx)?),
            };
            Ok(Definition {
                name: key.clone(),
                kind: def.kind,
                reversible: def.reversible,
                dim_vars: Vec::new(),
                captures: Vec::new(),
                params,
                ret,
                body,
                span: def.span,
            })
        })()
        .map_err(|e| e.at(def.span));
        self.active.remove(&key);
        let out = result?;
        self.done.insert(key.clone(), out);
        self.order.push(key.clone());
        Ok(key)
    }

    fn classical(&mut self, c: &ClassicalExpr, ctx: &Ctx) -> Result<ClassicalExpr, TypeError> {
        fn replace(c: &ClassicalExpr, caps: &BTreeMap<String, CapVal>) -> Result<ClassicalExpr, TypeError> {
            let r = |x: &ClassicalExpr| replace(x, caps).map(Box::new);
            Ok(match c {
                ClassicalExpr::Input(n) => match caps.get(n) {
                    Some(CapVal::Bits(b)) => ClassicalExpr::Const(b.clone()),
                    Some(CapVal::Func(_)) => {
                        return Err(err(ErrorCode::ArityMismatch, format!("`{n}` is a function, not bits")))
                    }
                    None => c.clone(),
                },
                ClassicalExpr::Const(_) => c.clone(),
                ClassicalExpr::Index(x, i) => ClassicalExpr::Index(r(x)?, i.clone()),
                ClassicalExpr::Slice(x, a, b) => ClassicalExpr::Slice(r(x)?, a.clone(), b.clone()),
                ClassicalExpr::Not(x) => ClassicalExpr::Not(r(x)?),
                ClassicalExpr::Binary(op, a, b) => ClassicalExpr::Binary(*op, r(a)?, r(b)?),
                ClassicalExpr::Concat(xs) => {
                    ClassicalExpr::Concat(xs.iter().map(|x| replace(x, caps)).collect::<Result<_, _>>()?)
                }
                ClassicalExpr::Rotate { left, expr, amount } => ClassicalExpr::Rotate {
                    left: *left,
                    expr: r(expr)?,
                    amount: match amount {
                        RotateAmount::Static(k) => RotateAmount::Static(k.clone()),
                        RotateAmount::Dynamic(k) => RotateAmount::Dynamic(r(k)?),
                    },
                },
                ClassicalExpr::Reduce(op, x) => ClassicalExpr::Reduce(*op, r(x)?),
                ClassicalExpr::ZeroExtend(x, w) => ClassicalExpr::ZeroExtend(r(x)?, w.clone()),
                ClassicalExpr::Repeat(x, n) => ClassicalExpr::Repeat(r(x)?, n.clone()),
                ClassicalExpr::EqConst(x, k) => ClassicalExpr::EqConst(r(x)?, k.clone()),
                ClassicalExpr::MulMod { expr, factor, modulus } => {
                    ClassicalExpr::MulMod { expr: r(expr)?, factor: factor.clone(), modulus: modulus.clone() }
                }
            })
        }
        let replaced = replace(c, &ctx.captures)?;
        Ok(substitute_classical(&replaced, &SubstEnv { dims: &ctx.dims, phases: None })?)
    }

    fn angle(&self, a: &AngleExpr, ctx: &Ctx) -> Result<AngleExpr, TypeError> {
        let env = SubstEnv { dims: &ctx.dims, phases: self.cli.phases.as_deref() };
        Ok(AngleExpr::Const(a.eval(&env)?))
    }

    fn dim(&self, d: &DimExpr, ctx: &Ctx) -> Result<DimExpr, TypeError> {
        Ok(DimExpr::Const(d.eval_map(&ctx.dims)?))
    }

    fn basis(&self, b: &BasisExpr, ctx: &Ctx) -> Result<BasisExpr, TypeError> {
        Ok(match b {
            BasisExpr::Std | BasisExpr::Pm | BasisExpr::Ij => b.clone(),
            BasisExpr::Fourier(n) => BasisExpr::Fourier(self.dim(n, ctx)?),
            BasisExpr::Literal(vs) => BasisExpr::Literal(
                vs.iter()
                    .map(|v| {
                        Ok(BasisVector {
                            phase: v.phase.as_ref().map(|a| self.angle(a, ctx)).transpose()?,
                            symbols: v.symbols.clone(),
                            fold: self.dim(&v.fold, ctx)?,
                        })
                    })
                    .collect::<Result<_, TypeError>>()?,
            ),
            BasisExpr::Tensor(items) => {
                BasisExpr::Tensor(items.iter().map(|x| self.basis(x, ctx)).collect::<Result<_, _>>()?)
            }
            BasisExpr::Fold(x, n) => BasisExpr::Fold(Box::new(self.basis(x, ctx)?), self.dim(n, ctx)?),
        })
    }

    fn reference(&mut self, name: &str, args: Option<&[InstArg]>, ctx: &Ctx) -> Result<Expr, TypeError> {
        if args.is_none() && ctx.params.iter().any(|p| p == name) {
            return Ok(Expr::Variable(name.to_string()));
        }
        match ctx.captures.get(name) {
            Some(CapVal::Bits(b)) => {
                if args.is_some() {
                    return Err(err(ErrorCode::ArityMismatch, format!("`{name}` is bits and takes no arguments")));
                }
                Ok(Expr::BitLiteral(b.clone()))
            }
            Some(CapVal::Func(f)) => {
                let mut f = f.clone();
                if let Some(args) = args {
                    f = self.bind_free(f, args, ctx)?;
                }
                self.finalize(&mut f, false)?;
                Ok(Expr::Variable(self.specialize(&f)?))
            }
            None => {
                let mut f = self.build(name, args.unwrap_or(&[]), Some(ctx))?;
                self.finalize(&mut f, false)?;
                Ok(Expr::Variable(self.specialize(&f)?))
            }
        }
    }

    fn expr(&mut self, e: &Expr, ctx: &Ctx) -> Result<Expr, TypeError> {
        let b = |m: &mut Self, x: &Expr| m.expr(x, ctx).map(Box::new);
        Ok(match e {
            Expr::Variable(name) => self.reference(name, None, ctx)?,
            Expr::Instantiate { name, args } => self.reference(name, Some(args), ctx)?,
            Expr::Repeat { var, lo, hi, body } => {
                let lo = lo.eval_map(&ctx.dims)?;
                let hi = hi.eval_map(&ctx.dims)?;
                let mut iters = Vec::new();
                for v in lo..hi {
                    let mut inner = ctx.clone();
                    inner.dims.insert(var.clone(), v);
                    iters.push(body.iter().map(|s| self.expr(s, &inner)).collect::<Result<Vec<_>, _>>()?);
                }
                Expr::Unrolled(iters)
            }
            Expr::Unrolled(iters) => Expr::Unrolled(
                iters
                    .iter()
                    .map(|st| st.iter().map(|s| self.expr(s, ctx)).collect())
                    .collect::<Result<_, _>>()?,
            ),
            Expr::Apply { func, arg } => Expr::Apply { func: b(self, func)?, arg: b(self, arg)? },
            Expr::BuiltIn(_) | Expr::BitLiteral(_) | Expr::Unit => e.clone(),
            Expr::QubitLiteral { symbols, fold } => {
                Expr::QubitLiteral { symbols: symbols.clone(), fold: self.dim(fold, ctx)? }
            }
            Expr::Tensor(items) => {
                let items = items.iter().map(|x| self.expr(x, ctx)).collect::<Result<Vec<_>, _>>()?;
                normalize_tensors(&Expr::Tensor(items))
            }
            Expr::Fold { expr, count } => Expr::Fold { expr: b(self, expr)?, count: self.dim(count, ctx)? },
            Expr::Phase { angle, expr } => Expr::Phase { angle: self.angle(angle, ctx)?, expr: b(self, expr)? },
            Expr::Basis(x) => Expr::Basis(self.basis(x, ctx)?),
            Expr::Translate { from, to } => Expr::Translate { from: self.basis(from, ctx)?, to: self.basis(to, ctx)? },
            Expr::Measure(x) => Expr::Measure(self.basis(x, ctx)?),
            Expr::Predicate { basis, func, basis_right } => Expr::Predicate {
                basis: self.basis(basis, ctx)?,
                func: b(self, func)?,
                basis_right: *basis_right,
            },
            Expr::Reverse(f) => Expr::Reverse(b(self, f)?),
            Expr::Sugar(s) => Expr::Sugar(match s {
                Sugar::Flip(x) => Sugar::Flip(self.basis(x, ctx)?),
                Sugar::Rotate(x, a) => Sugar::Rotate(self.basis(x, ctx)?, self.angle(a, ctx)?),
                Sugar::Prep(x) => Sugar::Prep(b(self, x)?),
            }),
            Expr::Embed { kind, func, inverse } => Expr::Embed {
                kind: *kind,
                func: b(self, func)?,
                inverse: match inverse {
                    Some(i) => Some(b(self, i)?),
                    None => None,
                },
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    const SRC: &str = "
        classical parity[N](secret: bit[N]; x: bit[N]) -> bit: (x & secret).xor_reduce()
        qpu kernel[N](f: cfunc[N,1]) -> bit[N]: '+'[N] | f.phase | pm[N] >> std[N] | std[N].measure
        qpu rev rot[K](q: qubit) -> qubit: q | std.rotate(pi / 2 ** K)
        qpu user[M](op: rev_qfunc[1,1]) -> qubit[M]: '0'[M] | repeat j in 0..M: (std[j] + op[[j]] + std[M - 1 - j])
    ";

    #[test]
    fn capture_width_infers_dimension() {
        let p = parse_program(SRC).unwrap();
        let b = Bindings::default().arg("f", "parity").arg("secret", "1011");
        let m = monomorphize(&p, "kernel", &b).unwrap();
        assert_eq!(m.entry, "kernel[N=4]{f=parity[N=4]{secret=0b1011}}");
        assert_eq!(m.program.defs.len(), 2);
    }

    #[test]
    fn conflicting_set_is_dim_mismatch() {
        let p = parse_program(SRC).unwrap();
        let b = Bindings::default().arg("f", "parity").arg("secret", "1011").dim("N", 3);
        assert_eq!(monomorphize(&p, "kernel", &b).unwrap_err().code, ErrorCode::DimMismatch);
    }

    #[test]
    fn free_dimension_is_bound_per_iteration() {
        let p = parse_program(SRC).unwrap();
        let b = Bindings::default().arg("op", "rot[[...]]").dim("M", 3);
        let m = monomorphize(&p, "user", &b).unwrap();
        let names: Vec<&str> = m.program.defs.iter().map(|d| d.name.as_str()).collect();
        assert!(names.contains(&"rot[K=0]"));
        assert!(names.contains(&"rot[K=2]"));
        let Body::Quantum(Expr::Apply { func, .. }) = &m.entry_def().body else { panic!() };
        let Expr::Unrolled(iters) = &**func else { panic!() };
        assert_eq!(iters.len(), 3);
    }

    #[test]
    fn missing_values() {
        let p = parse_program(SRC).unwrap();
        assert_eq!(monomorphize(&p, "user", &Bindings::default().arg("op", "rot[[...]]")).unwrap_err().code, ErrorCode::UnboundDimVar);
        assert_eq!(monomorphize(&p, "kernel", &Bindings::default()).unwrap_err().code, ErrorCode::UnknownName);
        assert_eq!(monomorphize(&p, "nope", &Bindings::default()).unwrap_err().code, ErrorCode::UnknownName);
    }
}
