//! Abstract syntax for programs: definitions, quantum expressions, basis
//! expressions, classical bit expressions and dimension arithmetic.
//!
//! Dimension expressions stay symbolic until monomorphization binds every
//! dimension variable; [`substitute_dims`] performs that substitution and
//! [`normalize_tensors`] puts tensor trees into their canonical flat form.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Byte range plus 1-based line/column of the first byte.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DimError {
    #[error("unbound dimension variable `{0}`")]
    Unbound(String),
    #[error("dimension `{expr}` evaluates to {value}")]
    Negative { expr: String, value: i64 },
    #[error("dimension arithmetic overflow in `{0}`")]
    Overflow(String),
    #[error("division by zero in `{0}`")]
    DivByZero(String),
    #[error("no phase schedule entry {0}")]
    MissingPhase(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DimOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Pow,
}

impl DimOp {
    fn symbol(self) -> &'static str {
        match self {
            DimOp::Add => "+",
            DimOp::Sub => "-",
            DimOp::Mul => "*",
            DimOp::Div => "/",
            DimOp::Mod => "%",
            DimOp::Pow => "**",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            DimOp::Add | DimOp::Sub => 1,
            DimOp::Mul | DimOp::Div | DimOp::Mod => 2,
            DimOp::Pow => 3,
        }
    }
}

/// Integer arithmetic over dimension variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DimExpr {
    Const(i64),
    Var(String),
    Bin(DimOp, Box<DimExpr>, Box<DimExpr>),
}

impl DimExpr {
    pub fn var(name: &str) -> Self {
        DimExpr::Var(name.to_string())
    }

    pub fn bin(op: DimOp, a: DimExpr, b: DimExpr) -> Self {
        DimExpr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn as_const(&self) -> Option<i64> {
        match self {
            DimExpr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn free_vars(&self, out: &mut Vec<String>) {
        match self {
            DimExpr::Const(_) => {}
            DimExpr::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            DimExpr::Bin(_, a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
        }
    }

    /// Evaluates to a signed integer without the non-negativity check.
    pub fn eval_signed(&self, env: &dyn Fn(&str) -> Option<i64>) -> Result<i64, DimError> {
        let overflow = || DimError::Overflow(self.to_string());
        match self {
            DimExpr::Const(c) => Ok(*c),
            DimExpr::Var(v) => env(v).ok_or_else(|| DimError::Unbound(v.clone())),
            DimExpr::Bin(DimOp::Mod, base, m) if matches!(**base, DimExpr::Bin(DimOp::Pow, _, _)) => {
                let DimExpr::Bin(_, b, e) = &**base else { unreachable!() };
                let b = b.eval_signed(env)?;
                let e = e.eval_signed(env)?;
                let m = m.eval_signed(env)?;
                if m == 0 {
                    return Err(DimError::DivByZero(self.to_string()));
                }
                if e < 0 {
                    return Err(DimError::Negative { expr: self.to_string(), value: e });
                }
                Ok(mod_pow(b, e as u64, m))
            }
            DimExpr::Bin(op, a, b) => {
                let x = a.eval_signed(env)?;
                let y = b.eval_signed(env)?;
                match op {
                    DimOp::Add => x.checked_add(y).ok_or_else(overflow),
                    DimOp::Sub => x.checked_sub(y).ok_or_else(overflow),
                    DimOp::Mul => x.checked_mul(y).ok_or_else(overflow),
                    DimOp::Div => {
                        if y == 0 {
                            Err(DimError::DivByZero(self.to_string()))
                        } else {
                            Ok(x.div_euclid(y))
                        }
                    }
                    DimOp::Mod => {
                        if y == 0 {
                            Err(DimError::DivByZero(self.to_string()))
                        } else {
                            Ok(x.rem_euclid(y))
                        }
                    }
                    DimOp::Pow => {
                        if y < 0 {
                            return Err(DimError::Negative { expr: self.to_string(), value: y });
                        }
                        let y = u32::try_from(y).map_err(|_| overflow())?;
                        x.checked_pow(y).ok_or_else(overflow)
                    }
                }
            }
        }
    }

    /// Evaluates and rejects negative results.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<i64>) -> Result<i64, DimError> {
        let v = self.eval_signed(env)?;
        if v < 0 {
            return Err(DimError::Negative { expr: self.to_string(), value: v });
        }
        Ok(v)
    }

    pub fn eval_map(&self, map: &BTreeMap<String, i64>) -> Result<i64, DimError> {
        self.eval(&|v| map.get(v).copied())
    }

    /// Replaces bound variables and folds closed subterms.
    pub fn subst(&self, map: &BTreeMap<String, i64>) -> Result<DimExpr, DimError> {
        let out = match self {
            DimExpr::Const(_) => self.clone(),
            DimExpr::Var(v) => match map.get(v) {
                Some(c) => DimExpr::Const(*c),
                None => self.clone(),
            },
            // Keep `a ** b` unfolded under `% m` so it is evaluated modularly.
            DimExpr::Bin(DimOp::Mod, base, m) if matches!(**base, DimExpr::Bin(DimOp::Pow, _, _)) => {
                let DimExpr::Bin(_, b, e) = &**base else { unreachable!() };
                let pow = DimExpr::bin(DimOp::Pow, b.subst(map)?, e.subst(map)?);
                DimExpr::bin(DimOp::Mod, pow, m.subst(map)?)
            }
            DimExpr::Bin(op, a, b) => DimExpr::bin(*op, a.subst(map)?, b.subst(map)?),
        };
        let mut vars = Vec::new();
        out.free_vars(&mut vars);
        if vars.is_empty() {
            Ok(DimExpr::Const(out.eval_signed(&|_| None)?))
        } else {
            Ok(out)
        }
    }
}

pub fn mod_pow(base: i64, mut exp: u64, m: i64) -> i64 {
    let m = m.abs() as i128;
    if m == 1 {
        return 0;
    }
    let mut b = (base as i128).rem_euclid(m);
    let mut acc: i128 = 1;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as i64
}

impl fmt::Display for DimExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(e: &DimExpr, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
            match e {
                DimExpr::Const(c) if *c < 0 => write!(f, "(0 - {})", -(*c as i128)),
                DimExpr::Const(c) => write!(f, "{c}"),
                DimExpr::Var(v) => write!(f, "{v}"),
                DimExpr::Bin(op, a, b) => {
                    let p = op.precedence();
                    let paren = p <= parent;
                    if paren {
                        write!(f, "(")?;
                    }
                    // Left operand may share the level for left-assoc ops, except power.
                    go(a, f, if *op == DimOp::Pow { p } else { p - 1 })?;
                    write!(f, " {} ", op.symbol())?;
                    go(b, f, p)?;
                    if paren {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
            }
        }
        go(self, f, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AngleOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Real-valued angle arithmetic. Folded to [`AngleExpr::Const`] once all
/// dimension variables and schedule lookups are resolved.
#[derive(Debug, Clone, PartialEq)]
pub enum AngleExpr {
    Const(f64),
    Pi,
    Dim(DimExpr),
    /// `phases[k]`: entry `k` of the phase schedule supplied at run time.
    Schedule(DimExpr),
    Neg(Box<AngleExpr>),
    Bin(AngleOp, Box<AngleExpr>, Box<AngleExpr>),
}

impl AngleExpr {
    pub fn as_const(&self) -> Option<f64> {
        match self {
            AngleExpr::Const(c) => Some(*c),
            AngleExpr::Pi => Some(std::f64::consts::PI),
            _ => None,
        }
    }

    pub fn subst(&self, env: &SubstEnv<'_>) -> Result<AngleExpr, DimError> {
        Ok(AngleExpr::Const(self.eval(env)?))
    }

    pub fn eval(&self, env: &SubstEnv<'_>) -> Result<f64, DimError> {
        Ok(match self {
            AngleExpr::Const(c) => *c,
            AngleExpr::Pi => std::f64::consts::PI,
            AngleExpr::Dim(d) => d.eval_signed(&|v| env.dims.get(v).copied())? as f64,
            AngleExpr::Schedule(k) => {
                let k = k.eval_signed(&|v| env.dims.get(v).copied())?;
                env.phases
                    .and_then(|p| usize::try_from(k).ok().and_then(|i| p.get(i)))
                    .copied()
                    .ok_or(DimError::MissingPhase(k))?
            }
            AngleExpr::Neg(a) => -a.eval(env)?,
            AngleExpr::Bin(op, a, b) => {
                let x = a.eval(env)?;
                let y = b.eval(env)?;
                match op {
                    AngleOp::Add => x + y,
                    AngleOp::Sub => x - y,
                    AngleOp::Mul => x * y,
                    AngleOp::Div => x / y,
                    AngleOp::Pow => x.powf(y),
                }
            }
        })
    }
}

impl fmt::Display for AngleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AngleExpr::Const(c) => {
                if c.is_finite() && *c >= 0.0 {
                    write!(f, "{c:?}")
                } else {
                    write!(f, "(0.0 - {:?})", -c)
                }
            }
            AngleExpr::Pi => write!(f, "pi"),
            AngleExpr::Dim(d) => match d {
                DimExpr::Bin(..) => write!(f, "({d})"),
                _ => write!(f, "{d}"),
            },
            AngleExpr::Schedule(k) => write!(f, "phases[{k}]"),
            AngleExpr::Neg(a) => write!(f, "-({a})"),
            AngleExpr::Bin(op, a, b) => {
                let s = match op {
                    AngleOp::Add => "+",
                    AngleOp::Sub => "-",
                    AngleOp::Mul => "*",
                    AngleOp::Div => "/",
                    AngleOp::Pow => "**",
                };
                write!(f, "({a} {s} {b})")
            }
        }
    }
}

/// Source-level types. `Tensor` holds `(element, repeat count)` pairs, so
/// `qubit[N]` is `Tensor([(Qubit, N)])`.
#[derive(Debug, Clone, PartialEq)]
pub enum TypeExpr {
    Qubit,
    Bit,
    Basis,
    Unit,
    Tensor(Vec<(TypeExpr, DimExpr)>),
    Func { input: Box<TypeExpr>, output: Box<TypeExpr>, rev: bool },
}

impl TypeExpr {
    pub fn repeated(t: TypeExpr, n: DimExpr) -> Self {
        TypeExpr::Tensor(vec![(t, n)])
    }

    pub fn subst(&self, map: &BTreeMap<String, i64>) -> Result<TypeExpr, DimError> {
        Ok(match self {
            TypeExpr::Tensor(items) => TypeExpr::Tensor(
                items
                    .iter()
                    .map(|(t, n)| Ok((t.subst(map)?, n.subst(map)?)))
                    .collect::<Result<_, DimError>>()?,
            ),
            TypeExpr::Func { input, output, rev } => TypeExpr::Func {
                input: Box::new(input.subst(map)?),
                output: Box::new(output.subst(map)?),
                rev: *rev,
            },
            other => other.clone(),
        })
    }

    pub fn free_vars(&self, out: &mut Vec<String>) {
        match self {
            TypeExpr::Tensor(items) => {
                for (t, n) in items {
                    t.free_vars(out);
                    n.free_vars(out);
                }
            }
            TypeExpr::Func { input, output, .. } => {
                input.free_vars(out);
                output.free_vars(out);
            }
            _ => {}
        }
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn width_of(t: &TypeExpr, atom: &TypeExpr) -> Option<DimExpr> {
            match t {
                TypeExpr::Unit => Some(DimExpr::Const(0)),
                x if x == atom => Some(DimExpr::Const(1)),
                TypeExpr::Tensor(items) if items.len() == 1 && &items[0].0 == atom => {
                    Some(items[0].1.clone())
                }
                _ => None,
            }
        }
        match self {
            TypeExpr::Qubit => write!(f, "qubit"),
            TypeExpr::Bit => write!(f, "bit"),
            TypeExpr::Basis => write!(f, "basis"),
            TypeExpr::Unit => write!(f, "()"),
            TypeExpr::Tensor(items) => {
                for (i, (t, n)) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    match t {
                        TypeExpr::Func { .. } | TypeExpr::Tensor(_) => write!(f, "({t})")?,
                        _ => write!(f, "{t}")?,
                    }
                    if *n != DimExpr::Const(1) {
                        write!(f, "[{n}]")?;
                    }
                }
                Ok(())
            }
            TypeExpr::Func { input, output, rev } => {
                for (atom, name) in [(TypeExpr::Qubit, "qfunc"), (TypeExpr::Bit, "cfunc")] {
                    if let (Some(a), Some(b)) = (width_of(input, &atom), width_of(output, &atom)) {
                        if atom == TypeExpr::Bit && *rev {
                            break;
                        }
                        let prefix = if *rev { "rev_" } else { "" };
                        return write!(f, "{prefix}{name}[{a},{b}]");
                    }
                }
                // Mixed signatures: qubits in, bits out.
                if let (Some(a), Some(b)) = (width_of(input, &TypeExpr::Qubit), width_of(output, &TypeExpr::Bit)) {
                    if !*rev {
                        return write!(f, "mfunc[{a},{b}]");
                    }
                }
                write!(f, "fn({input}) -> {output}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltIn {
    Id,
    Discard,
    DiscardZ,
}

/// One vector of a basis literal: `phase(θ)*'sym'[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisVector {
    pub phase: Option<AngleExpr>,
    pub symbols: String,
    pub fold: DimExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BasisExpr {
    Std,
    Pm,
    Ij,
    Fourier(DimExpr),
    Literal(Vec<BasisVector>),
    Tensor(Vec<BasisExpr>),
    Fold(Box<BasisExpr>, DimExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sugar {
    Flip(BasisExpr),
    Rotate(BasisExpr, AngleExpr),
    /// `.prep` on a qubit literal or bit literal.
    Prep(Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmbedKind {
    Xor,
    Phase,
    InPlace,
}

/// Positional or named argument inside `name[[...]]`.
#[derive(Debug, Clone, PartialEq)]
pub enum InstArg {
    Dim(DimExpr),
    /// `...`: leaves the next dimension variable free.
    Free,
    Named(String, Expr),
    NamedDim(String, DimExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Apply { func: Box<Expr>, arg: Box<Expr> },
    BuiltIn(BuiltIn),
    QubitLiteral { symbols: String, fold: DimExpr },
    BitLiteral(Vec<bool>),
    Variable(String),
    Tensor(Vec<Expr>),
    Fold { expr: Box<Expr>, count: DimExpr },
    Phase { angle: AngleExpr, expr: Box<Expr> },
    Basis(BasisExpr),
    Translate { from: BasisExpr, to: BasisExpr },
    Measure(BasisExpr),
    /// `basis_right` marks the mirrored form `f & b`.
    Predicate { basis: BasisExpr, func: Box<Expr>, basis_right: bool },
    Reverse(Box<Expr>),
    Sugar(Sugar),
    Embed { kind: EmbedKind, func: Box<Expr>, inverse: Option<Box<Expr>> },
    Instantiate { name: String, args: Vec<InstArg> },
    Repeat { var: String, lo: DimExpr, hi: DimExpr, body: Vec<Expr> },
    /// A repeat after monomorphization: one stage list per iteration,
    /// applied in order.
    Unrolled(Vec<Vec<Expr>>),
    Unit,
}

impl Expr {
    pub fn apply(func: Expr, arg: Expr) -> Self {
        Expr::Apply { func: Box::new(func), arg: Box::new(arg) }
    }

    pub fn var(name: &str) -> Self {
        Expr::Variable(name.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitOp {
    And,
    Or,
    Xor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReduceOp {
    And,
    Or,
    Xor,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RotateAmount {
    Static(DimExpr),
    Dynamic(Box<ClassicalExpr>),
}

/// Bit-vector expressions for classical function bodies. Bit 0 is the
/// leftmost (most significant) bit.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassicalExpr {
    Input(String),
    Const(Vec<bool>),
    Index(Box<ClassicalExpr>, DimExpr),
    Slice(Box<ClassicalExpr>, DimExpr, DimExpr),
    Not(Box<ClassicalExpr>),
    Binary(BitOp, Box<ClassicalExpr>, Box<ClassicalExpr>),
    Concat(Vec<ClassicalExpr>),
    Rotate { left: bool, expr: Box<ClassicalExpr>, amount: RotateAmount },
    Reduce(ReduceOp, Box<ClassicalExpr>),
    ZeroExtend(Box<ClassicalExpr>, DimExpr),
    Repeat(Box<ClassicalExpr>, DimExpr),
    /// Single-bit equality against an unsigned constant.
    EqConst(Box<ClassicalExpr>, DimExpr),
    /// `x * c mod m` on the unsigned value of `x`; identity when `x >= m`.
    MulMod { expr: Box<ClassicalExpr>, factor: DimExpr, modulus: DimExpr },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefKind {
    Quantum,
    Classical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: TypeExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Quantum(Expr),
    Classical(ClassicalExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Definition {
    pub name: String,
    pub kind: DefKind,
    pub reversible: bool,
    pub dim_vars: Vec<String>,
    pub captures: Vec<Param>,
    pub params: Vec<Param>,
    pub ret: TypeExpr,
    pub body: Body,
    pub span: Span,
}

/// Default flag values declared with `#@` lines at the top of a file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pragmas {
    pub entry: Option<String>,
    pub dims: Vec<(String, String)>,
    pub args: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Program {
    pub defs: Vec<Definition>,
    pub pragmas: Pragmas,
}

impl Program {
    pub fn get(&self, name: &str) -> Option<&Definition> {
        self.defs.iter().find(|d| d.name == name)
    }
}

/// Dimension bindings plus the optional phase schedule.
#[derive(Debug, Clone, Copy)]
pub struct SubstEnv<'a> {
    pub dims: &'a BTreeMap<String, i64>,
    pub phases: Option<&'a [f64]>,
}

/// Substitutes every bound dimension variable in `e`, folding closed
/// dimension and angle expressions to constants.
pub fn substitute_dims(e: &Expr, bindings: &BTreeMap<String, i64>) -> Result<Expr, DimError> {
    substitute_with(e, &SubstEnv { dims: bindings, phases: None })
}

pub fn substitute_with(e: &Expr, env: &SubstEnv<'_>) -> Result<Expr, DimError> {
    let s = |x: &Expr| substitute_with(x, env).map(Box::new);
    Ok(match e {
        Expr::Apply { func, arg } => Expr::Apply { func: s(func)?, arg: s(arg)? },
        Expr::BuiltIn(_) | Expr::BitLiteral(_) | Expr::Variable(_) | Expr::Unit => e.clone(),
        Expr::QubitLiteral { symbols, fold } => {
            Expr::QubitLiteral { symbols: symbols.clone(), fold: checked(fold, env)? }
        }
        Expr::Tensor(items) => {
            Expr::Tensor(items.iter().map(|x| substitute_with(x, env)).collect::<Result<_, _>>()?)
        }
        Expr::Fold { expr, count } => Expr::Fold { expr: s(expr)?, count: checked(count, env)? },
        Expr::Phase { angle, expr } => Expr::Phase { angle: angle_subst(angle, env)?, expr: s(expr)? },
        Expr::Basis(b) => Expr::Basis(substitute_basis(b, env)?),
        Expr::Translate { from, to } => {
            Expr::Translate { from: substitute_basis(from, env)?, to: substitute_basis(to, env)? }
        }
        Expr::Measure(b) => Expr::Measure(substitute_basis(b, env)?),
        Expr::Predicate { basis, func, basis_right } => Expr::Predicate {
            basis: substitute_basis(basis, env)?,
            func: s(func)?,
            basis_right: *basis_right,
        },
        Expr::Reverse(f) => Expr::Reverse(s(f)?),
        Expr::Sugar(sugar) => Expr::Sugar(match sugar {
            Sugar::Flip(b) => Sugar::Flip(substitute_basis(b, env)?),
            Sugar::Rotate(b, a) => Sugar::Rotate(substitute_basis(b, env)?, angle_subst(a, env)?),
            Sugar::Prep(x) => Sugar::Prep(s(x)?),
        }),
        Expr::Embed { kind, func, inverse } => Expr::Embed {
            kind: *kind,
            func: s(func)?,
            inverse: inverse.as_deref().map(s).transpose()?,
        },
        Expr::Instantiate { name, args } => Expr::Instantiate {
            name: name.clone(),
            args: args
                .iter()
                .map(|a| {
                    Ok(match a {
                        InstArg::Dim(d) => InstArg::Dim(d.subst(env.dims)?),
                        InstArg::Free => InstArg::Free,
                        InstArg::Named(k, v) => InstArg::Named(k.clone(), substitute_with(v, env)?),
                        InstArg::NamedDim(k, d) => InstArg::NamedDim(k.clone(), d.subst(env.dims)?),
                    })
                })
                .collect::<Result<_, DimError>>()?,
        },
        Expr::Repeat { var, lo, hi, body } => {
            let mut inner = env.dims.clone();
            inner.remove(var);
            let inner_env = SubstEnv { dims: &inner, phases: env.phases };
            Expr::Repeat {
                var: var.clone(),
                lo: lo.subst(env.dims)?,
                hi: hi.subst(env.dims)?,
                body: body
                    .iter()
                    .map(|x| substitute_partial(x, &inner_env))
                    .collect::<Result<_, _>>()?,
            }
        }
        Expr::Unrolled(iters) => Expr::Unrolled(
            iters
                .iter()
                .map(|stages| stages.iter().map(|x| substitute_with(x, env)).collect())
                .collect::<Result<_, _>>()?,
        ),
    })
}

/// Like [`substitute_with`] but tolerates variables that are still free
/// (used for repeat bodies whose loop variable is bound later).
fn substitute_partial(e: &Expr, env: &SubstEnv<'_>) -> Result<Expr, DimError> {
    match substitute_with(e, env) {
        Err(DimError::Unbound(_)) => Ok(e.clone()),
        other => other,
    }
}

fn checked(d: &DimExpr, env: &SubstEnv<'_>) -> Result<DimExpr, DimError> {
    let out = d.subst(env.dims)?;
    if let DimExpr::Const(c) = out {
        if c < 0 {
            return Err(DimError::Negative { expr: d.to_string(), value: c });
        }
    }
    Ok(out)
}

fn angle_subst(a: &AngleExpr, env: &SubstEnv<'_>) -> Result<AngleExpr, DimError> {
    match a.subst(env) {
        Err(DimError::Unbound(_)) => Ok(a.clone()),
        other => other,
    }
}

pub fn substitute_basis(b: &BasisExpr, env: &SubstEnv<'_>) -> Result<BasisExpr, DimError> {
    Ok(match b {
        BasisExpr::Std | BasisExpr::Pm | BasisExpr::Ij => b.clone(),
        BasisExpr::Fourier(n) => BasisExpr::Fourier(checked(n, env)?),
        BasisExpr::Literal(vs) => BasisExpr::Literal(
            vs.iter()
                .map(|v| {
                    Ok(BasisVector {
                        phase: v.phase.as_ref().map(|a| angle_subst(a, env)).transpose()?,
                        symbols: v.symbols.clone(),
                        fold: checked(&v.fold, env)?,
                    })
                })
                .collect::<Result<_, DimError>>()?,
        ),
        BasisExpr::Tensor(items) => {
            BasisExpr::Tensor(items.iter().map(|x| substitute_basis(x, env)).collect::<Result<_, _>>()?)
        }
        BasisExpr::Fold(x, n) => BasisExpr::Fold(Box::new(substitute_basis(x, env)?), checked(n, env)?),
    })
}

pub fn substitute_classical(c: &ClassicalExpr, env: &SubstEnv<'_>) -> Result<ClassicalExpr, DimError> {
    let s = |x: &ClassicalExpr| substitute_classical(x, env).map(Box::new);
    let d = |x: &DimExpr| checked(x, env);
    Ok(match c {
        ClassicalExpr::Input(_) | ClassicalExpr::Const(_) => c.clone(),
        ClassicalExpr::Index(x, i) => ClassicalExpr::Index(s(x)?, d(i)?),
        ClassicalExpr::Slice(x, a, b) => ClassicalExpr::Slice(s(x)?, d(a)?, d(b)?),
        ClassicalExpr::Not(x) => ClassicalExpr::Not(s(x)?),
        ClassicalExpr::Binary(op, a, b) => ClassicalExpr::Binary(*op, s(a)?, s(b)?),
        ClassicalExpr::Concat(xs) => ClassicalExpr::Concat(
            xs.iter().map(|x| substitute_classical(x, env)).collect::<Result<_, _>>()?,
        ),
        ClassicalExpr::Rotate { left, expr, amount } => ClassicalExpr::Rotate {
            left: *left,
            expr: s(expr)?,
            amount: match amount {
                RotateAmount::Static(k) => RotateAmount::Static(d(k)?),
                RotateAmount::Dynamic(k) => RotateAmount::Dynamic(s(k)?),
            },
        },
        ClassicalExpr::Reduce(op, x) => ClassicalExpr::Reduce(*op, s(x)?),
        ClassicalExpr::ZeroExtend(x, w) => ClassicalExpr::ZeroExtend(s(x)?, d(w)?),
        ClassicalExpr::Repeat(x, n) => ClassicalExpr::Repeat(s(x)?, d(n)?),
        ClassicalExpr::EqConst(x, k) => ClassicalExpr::EqConst(s(x)?, d(k)?),
        ClassicalExpr::MulMod { expr, factor, modulus } => {
            ClassicalExpr::MulMod { expr: s(expr)?, factor: d(factor)?, modulus: d(modulus)? }
        }
    })
}

/// Flattens nested tensors, drops unit factors, and collapses singleton
/// and empty tensors. Applied bottom-up.
pub fn normalize_tensors(e: &Expr) -> Expr {
    let n = |x: &Expr| Box::new(normalize_tensors(x));
    match e {
        Expr::Tensor(items) => {
            let mut flat = Vec::new();
            for item in items {
                match normalize_tensors(item) {
                    Expr::Unit => {}
                    Expr::Tensor(inner) => flat.extend(inner),
                    other => flat.push(other),
                }
            }
            match flat.len() {
                0 => Expr::Unit,
                1 => flat.pop().unwrap(),
                _ => Expr::Tensor(flat),
            }
        }
        Expr::Apply { func, arg } => Expr::Apply { func: n(func), arg: n(arg) },
        Expr::Fold { expr, count } => Expr::Fold { expr: n(expr), count: count.clone() },
        Expr::Phase { angle, expr } => Expr::Phase { angle: angle.clone(), expr: n(expr) },
        Expr::Basis(b) => Expr::Basis(normalize_basis(b)),
        Expr::Translate { from, to } => {
            Expr::Translate { from: normalize_basis(from), to: normalize_basis(to) }
        }
        Expr::Measure(b) => Expr::Measure(normalize_basis(b)),
        Expr::Predicate { basis, func, basis_right } => Expr::Predicate {
            basis: normalize_basis(basis),
            func: n(func),
            basis_right: *basis_right,
        },
        Expr::Reverse(f) => Expr::Reverse(n(f)),
        Expr::Sugar(Sugar::Prep(x)) => Expr::Sugar(Sugar::Prep(n(x))),
        Expr::Sugar(Sugar::Flip(b)) => Expr::Sugar(Sugar::Flip(normalize_basis(b))),
        Expr::Sugar(Sugar::Rotate(b, a)) => Expr::Sugar(Sugar::Rotate(normalize_basis(b), a.clone())),
        Expr::Embed { kind, func, inverse } => Expr::Embed {
            kind: *kind,
            func: n(func),
            inverse: inverse.as_deref().map(n),
        },
        Expr::Instantiate { name, args } => Expr::Instantiate {
            name: name.clone(),
            args: args
                .iter()
                .map(|a| match a {
                    InstArg::Named(k, v) => InstArg::Named(k.clone(), normalize_tensors(v)),
                    other => other.clone(),
                })
                .collect(),
        },
        Expr::Repeat { var, lo, hi, body } => Expr::Repeat {
            var: var.clone(),
            lo: lo.clone(),
            hi: hi.clone(),
            body: body.iter().map(normalize_tensors).collect(),
        },
        Expr::Unrolled(iters) => Expr::Unrolled(
            iters.iter().map(|st| st.iter().map(normalize_tensors).collect()).collect(),
        ),
        Expr::BuiltIn(_) | Expr::QubitLiteral { .. } | Expr::BitLiteral(_) | Expr::Variable(_) | Expr::Unit => {
            e.clone()
        }
    }
}

pub fn normalize_basis(b: &BasisExpr) -> BasisExpr {
    match b {
        BasisExpr::Tensor(items) => {
            let mut flat = Vec::new();
            for item in items {
                match normalize_basis(item) {
                    BasisExpr::Tensor(inner) => flat.extend(inner),
                    other => flat.push(other),
                }
            }
            if flat.len() == 1 {
                flat.pop().unwrap()
            } else {
                BasisExpr::Tensor(flat)
            }
        }
        BasisExpr::Fold(x, n) => BasisExpr::Fold(Box::new(normalize_basis(x)), n.clone()),
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, i64)]) -> BTreeMap<String, i64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn dim_arithmetic() {
        let e = DimExpr::bin(DimOp::Sub, DimExpr::var("N"), DimExpr::Const(1));
        assert_eq!(e.eval_map(&env(&[("N", 4)])), Ok(3));
        assert_eq!(
            e.eval_map(&env(&[("N", 0)])),
            Err(DimError::Negative { expr: "N - 1".into(), value: -1 })
        );
        assert_eq!(e.eval_map(&env(&[])), Err(DimError::Unbound("N".into())));
    }

    #[test]
    fn modular_power_does_not_overflow() {
        // 7 ** (2 ** 40) % 15 would overflow without the fused form.
        let pow2 = DimExpr::bin(DimOp::Pow, DimExpr::Const(2), DimExpr::var("J"));
        let e = DimExpr::bin(
            DimOp::Mod,
            DimExpr::bin(DimOp::Pow, DimExpr::Const(7), pow2),
            DimExpr::Const(15),
        );
        assert_eq!(e.eval_map(&env(&[("J", 0)])), Ok(7));
        assert_eq!(e.eval_map(&env(&[("J", 1)])), Ok(4));
        assert_eq!(e.eval_map(&env(&[("J", 40)])), Ok(1));
    }

    #[test]
    fn normalize_flattens_and_drops_unit() {
        let q = |s: &str| Expr::QubitLiteral { symbols: s.into(), fold: DimExpr::Const(1) };
        let e = Expr::Tensor(vec![Expr::Unit, Expr::Tensor(vec![q("0"), Expr::Tensor(vec![q("1")])])]);
        assert_eq!(normalize_tensors(&e), Expr::Tensor(vec![q("0"), q("1")]));
        assert_eq!(normalize_tensors(&Expr::Tensor(vec![Expr::Unit, q("+")])), q("+"));
        assert_eq!(normalize_tensors(&Expr::Tensor(vec![])), Expr::Unit);
    }

    #[test]
    fn substitution_leaves_repeat_variable() {
        let body = vec![Expr::QubitLiteral {
            symbols: "0".into(),
            fold: DimExpr::bin(DimOp::Add, DimExpr::var("j"), DimExpr::var("N")),
        }];
        let e = Expr::Repeat { var: "j".into(), lo: DimExpr::Const(0), hi: DimExpr::var("N"), body };
        let out = substitute_dims(&e, &env(&[("N", 3)])).unwrap();
        let Expr::Repeat { hi, body, .. } = out else { panic!() };
        assert_eq!(hi, DimExpr::Const(3));
        assert_eq!(
            body[0],
            Expr::QubitLiteral {
                symbols: "0".into(),
                fold: DimExpr::bin(DimOp::Add, DimExpr::var("j"), DimExpr::Const(3))
            }
        );
    }
}
