//! Basis engine: vector lists, translation and predication unitaries,
//! measurement specs and sugar expansion.
//!
//! Bases are handled in factored form ([`FactoredBasis`]) so that wide
//! built-in bases such as `pm[16]` never get expanded unless a caller asks
//! for the dense vector list.

use std::f64::consts::PI;

use crate::error::{ErrorCode, RuntimeError, TypeError};
use crate::linalg::{inner, kron_vec, norm, Matrix, C64, ONE, ZERO};
use crate::syntax::{AngleExpr, AngleOp, BasisExpr, BasisVector, BuiltIn, DimExpr, Expr, Sugar};

pub const TOL: f64 = 1e-9;
pub const MAX_DENSE_QUBITS: usize = 14;
/// Upper bound on `vectors * 2^qubits` for an expanded vector list.
pub const MAX_VECLIST_ENTRIES: usize = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Std,
    Pm,
    Ij,
}

pub fn family_of(symbol: char) -> Option<Family> {
    match symbol {
        '0' | '1' => Some(Family::Std),
        '+' | '-' => Some(Family::Pm),
        'i' | 'j' => Some(Family::Ij),
        _ => None,
    }
}

/// Amplitudes of a one-qubit symbol; `j` is the `-i` eigenstate.
pub fn symbol_state(symbol: char) -> [C64; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match symbol {
        '0' => [ONE, ZERO],
        '1' => [ZERO, ONE],
        '+' => [C64::new(s, 0.0), C64::new(s, 0.0)],
        '-' => [C64::new(s, 0.0), C64::new(-s, 0.0)],
        'i' => [C64::new(s, 0.0), C64::new(0.0, s)],
        'j' => [C64::new(s, 0.0), C64::new(0.0, -s)],
        _ => panic!("not a qubit symbol: {symbol}"),
    }
}

pub fn family_symbols(f: Family) -> [char; 2] {
    match f {
        Family::Std => ['0', '1'],
        Family::Pm => ['+', '-'],
        Family::Ij => ['i', 'j'],
    }
}

pub fn product_state(symbols: &str) -> Vec<C64> {
    let mut v = vec![ONE];
    for c in symbols.chars() {
        v = kron_vec(&v, &symbol_state(c));
    }
    v
}

/// A dense ordered list of orthonormal vectors over `qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisValue {
    pub qubits: usize,
    pub vectors: Vec<Vec<C64>>,
    pub full_span: bool,
}

impl BasisValue {
    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn projector(&self) -> Matrix {
        let mut p = Matrix::zeros(self.dim());
        for v in &self.vectors {
            p.add_outer(v, v, ONE);
        }
        p
    }

    pub fn tensor(&self, other: &BasisValue) -> BasisValue {
        let mut vectors = Vec::with_capacity(self.vectors.len() * other.vectors.len());
        for u in &self.vectors {
            for v in &other.vectors {
                vectors.push(kron_vec(u, v));
            }
        }
        BasisValue { qubits: self.qubits + other.qubits, vectors, full_span: self.full_span && other.full_span }
    }

    /// Largest entry of the Gram matrix minus identity.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate() {
                let expect = if i == j { ONE } else { ZERO };
                worst = worst.max((inner(a, b) - expect).norm());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    /// One qubit of `std`, `pm` or `ij`.
    Builtin(Family),
    Fourier(usize),
    Literal { qubits: usize, vectors: Vec<Vec<C64>> },
}

impl Factor {
    pub fn qubits(&self) -> usize {
        match self {
            Factor::Builtin(_) => 1,
            Factor::Fourier(n) => *n,
            Factor::Literal { qubits, .. } => *qubits,
        }
    }

    pub fn count(&self) -> usize {
        match self {
            Factor::Builtin(_) => 2,
            Factor::Fourier(n) => 1 << n,
            Factor::Literal { vectors, .. } => vectors.len(),
        }
    }

    pub fn full_span(&self) -> bool {
        self.count() == 1 << self.qubits()
    }

    /// True when the vectors are computational basis states (up to phase)
    /// in ascending order, so measuring needs no basis change.
    pub fn is_computational(&self) -> bool {
        match self {
            Factor::Builtin(f) => *f == Family::Std,
            Factor::Fourier(n) => *n == 0,
            Factor::Literal { vectors, .. } => {
                self.full_span()
                    && vectors.iter().enumerate().all(|(k, v)| (v[k].norm() - 1.0).abs() < TOL)
            }
        }
    }

    pub fn vectors(&self) -> Vec<Vec<C64>> {
        match self {
            Factor::Builtin(f) => family_symbols(*f).iter().map(|c| symbol_state(*c).to_vec()).collect(),
            Factor::Fourier(n) => fourier_vectors(*n),
            Factor::Literal { vectors, .. } => vectors.clone(),
        }
    }

    pub fn value(&self) -> BasisValue {
        BasisValue { qubits: self.qubits(), vectors: self.vectors(), full_span: self.full_span() }
    }
}

pub fn fourier_vectors(n: usize) -> Vec<Vec<C64>> {
    let dim = 1usize << n;
    let scale = 1.0 / (dim as f64).sqrt();
    (0..dim)
        .map(|j| {
            (0..dim)
                .map(|k| {
                    let angle = 2.0 * PI * ((j * k) % dim) as f64 / dim as f64;
                    C64::from_polar(scale, angle)
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactoredBasis {
    pub factors: Vec<Factor>,
}

fn const_dim(d: &DimExpr) -> Result<usize, RuntimeError> {
    d.as_const()
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| RuntimeError::new(ErrorCode::UnboundDimVar, format!("dimension `{d}` is not concrete")))
}

pub fn angle_value(a: &AngleExpr) -> Result<f64, RuntimeError> {
    match a {
        AngleExpr::Const(c) => Ok(*c),
        AngleExpr::Pi => Ok(PI),
        AngleExpr::Neg(x) => Ok(-angle_value(x)?),
        AngleExpr::Dim(d) => Ok(d.as_const().ok_or_else(|| {
            RuntimeError::new(ErrorCode::UnboundDimVar, format!("angle `{a}` is not concrete"))
        })? as f64),
        AngleExpr::Bin(op, x, y) => {
            let (x, y) = (angle_value(x)?, angle_value(y)?);
            Ok(match op {
                AngleOp::Add => x + y,
                AngleOp::Sub => x - y,
                AngleOp::Mul => x * y,
                AngleOp::Div => x / y,
                AngleOp::Pow => x.powf(y),
            })
        }
        AngleExpr::Schedule(_) => {
            Err(RuntimeError::new(ErrorCode::MissingPhase, format!("angle `{a}` is not resolved")))
        }
    }
}

/// Dense state of one literal vector, including its phase.
pub fn literal_vector(v: &BasisVector) -> Result<Vec<C64>, RuntimeError> {
    let fold = const_dim(&v.fold)?;
    let symbols = v.symbols.repeat(fold);
    let mut state = product_state(&symbols);
    if let Some(a) = &v.phase {
        let p = C64::from_polar(1.0, angle_value(a)?);
        state.iter_mut().for_each(|x| *x *= p);
    }
    Ok(state)
}

pub fn literal_width(v: &BasisVector) -> Result<usize, RuntimeError> {
    Ok(v.symbols.chars().count() * const_dim(&v.fold)?)
}

impl FactoredBasis {
    pub fn from_expr(b: &BasisExpr) -> Result<FactoredBasis, RuntimeError> {
        let mut factors = Vec::new();
        push_factors(b, &mut factors)?;
        Ok(FactoredBasis { factors })
    }

    pub fn qubits(&self) -> usize {
        self.factors.iter().map(Factor::qubits).sum()
    }

    /// Number of vectors, saturating.
    pub fn count(&self) -> u128 {
        self.factors.iter().fold(1u128, |acc, f| acc.saturating_mul(f.count() as u128))
    }

    pub fn full_span(&self) -> bool {
        self.factors.iter().all(Factor::full_span)
    }

    pub fn to_value(&self) -> Result<BasisValue, RuntimeError> {
        let q = self.qubits();
        if q >= usize::BITS as usize - 1
            || self.count().saturating_mul(1u128 << q) > MAX_VECLIST_ENTRIES as u128
        {
            return Err(RuntimeError::new(
                ErrorCode::MatrixTooLarge,
                format!("vector list over {q} qubits is too large to expand"),
            ));
        }
        let mut acc = BasisValue { qubits: 0, vectors: vec![vec![ONE]], full_span: true };
        for f in &self.factors {
            acc = acc.tensor(&f.value());
        }
        Ok(acc)
    }
}

fn push_factors(b: &BasisExpr, out: &mut Vec<Factor>) -> Result<(), RuntimeError> {
    match b {
        BasisExpr::Std => out.push(Factor::Builtin(Family::Std)),
        BasisExpr::Pm => out.push(Factor::Builtin(Family::Pm)),
        BasisExpr::Ij => out.push(Factor::Builtin(Family::Ij)),
        BasisExpr::Fourier(n) => {
            let n = const_dim(n)?;
            if n > 0 {
                out.push(Factor::Fourier(n));
            }
        }
        BasisExpr::Literal(vs) => {
            let qubits = match vs.first() {
                Some(v) => literal_width(v)?,
                None => 0,
            };
            let vectors = vs.iter().map(literal_vector).collect::<Result<Vec<_>, _>>()?;
            if vectors.iter().any(|v| v.len() != 1 << qubits) {
                return Err(RuntimeError::new(ErrorCode::DimMismatch, "basis literal vectors differ in length"));
            }
            out.push(Factor::Literal { qubits, vectors });
        }
        BasisExpr::Tensor(items) => {
            for item in items {
                push_factors(item, out)?;
            }
        }
        BasisExpr::Fold(x, n) => {
            let n = const_dim(n)?;
            let mut inner = Vec::new();
            push_factors(x, &mut inner)?;
            for _ in 0..n {
                out.extend(inner.iter().cloned());
            }
        }
    }
    Ok(())
}

/// Ordered vector list of a concrete basis expression.
pub fn veclist(b: &BasisExpr) -> Result<BasisValue, RuntimeError> {
    FactoredBasis::from_expr(b)?.to_value()
}

/// Whether two vector lists span the same subspace: the Frobenius distance
/// between their projectors is below `tol`.
pub fn span_equal(a: &BasisValue, b: &BasisValue, tol: f64) -> bool {
    if a.qubits != b.qubits {
        return false;
    }
    if a.full_span && b.full_span {
        return true;
    }
    let overlap: f64 = a
        .vectors
        .iter()
        .flat_map(|x| b.vectors.iter().map(move |y| inner(x, y).norm_sqr()))
        .sum();
    let dist2 = a.vectors.len() as f64 + b.vectors.len() as f64 - 2.0 * overlap;
    dist2.max(0.0).sqrt() < tol
}

/// Groups of factors from two bases that cover the same qubit ranges,
/// merged until their boundaries coincide.
pub fn align(a: &[Factor], b: &[Factor]) -> Option<Vec<(Vec<Factor>, Vec<Factor>)>> {
    let mut groups = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let mut ga = Vec::new();
        let mut gb = Vec::new();
        let (mut qa, mut qb) = (0usize, 0usize);
        loop {
            if (ga.is_empty() || qa < qb) && i < a.len() {
                qa += a[i].qubits();
                ga.push(a[i].clone());
                i += 1;
            } else if (gb.is_empty() || qb < qa) && j < b.len() {
                qb += b[j].qubits();
                gb.push(b[j].clone());
                j += 1;
            } else {
                break;
            }
            if qa == qb && !ga.is_empty() && !gb.is_empty() {
                break;
            }
        }
        if qa != qb {
            return None;
        }
        groups.push((ga, gb));
    }
    Some(groups)
}

fn group_value(g: &[Factor]) -> Result<BasisValue, RuntimeError> {
    FactoredBasis { factors: g.to_vec() }.to_value()
}

/// Span equality computed group by group. The tensor decomposition of a
/// nonzero product subspace is unique, so this agrees with the dense test.
pub fn factored_span_equal(a: &FactoredBasis, b: &FactoredBasis, tol: f64) -> Result<bool, RuntimeError> {
    if a.qubits() != b.qubits() {
        return Ok(false);
    }
    let Some(groups) = align(&a.factors, &b.factors) else { return Ok(false) };
    for (ga, gb) in groups {
        let fa = ga.iter().all(Factor::full_span);
        let fb = gb.iter().all(Factor::full_span);
        if fa && fb {
            continue;
        }
        if fa != fb {
            return Ok(false);
        }
        if !span_equal(&group_value(&ga)?, &group_value(&gb)?, tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn too_large(q: usize) -> RuntimeError {
    RuntimeError::new(
        ErrorCode::MatrixTooLarge,
        format!("dense matrix over {q} qubits exceeds the {MAX_DENSE_QUBITS}-qubit limit"),
    )
}

/// Orthonormal completion of `vectors` by Gram-Schmidt over computational
/// basis states in ascending order.
pub fn gram_schmidt_extend(vectors: &[Vec<C64>], dim: usize) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> = vectors.to_vec();
    for k in 0..dim {
        if out.len() == dim {
            break;
        }
        let mut r = vec![ZERO; dim];
        r[k] = ONE;
        // Two passes keep the residual orthogonal to working precision.
        for _ in 0..2 {
            for v in &out {
                let c = inner(v, &r);
                for (x, y) in r.iter_mut().zip(v) {
                    *x -= c * y;
                }
            }
        }
        let n = norm(&r);
        if n > TOL {
            r.iter_mut().for_each(|x| *x /= n);
            out.push(r);
        }
    }
    out
}

/// Dense `U = Σ_k |b2_k⟩⟨b1_k|` after extending both lists identically.
pub fn translation_unitary(b1: &BasisValue, b2: &BasisValue) -> Result<Matrix, RuntimeError> {
    if b1.qubits != b2.qubits || b1.vectors.len() != b2.vectors.len() {
        return Err(RuntimeError::new(ErrorCode::DimMismatch, "translation between bases of different shape"));
    }
    if b1.qubits > MAX_DENSE_QUBITS {
        return Err(too_large(b1.qubits));
    }
    let dim = b1.dim();
    let e1 = gram_schmidt_extend(&b1.vectors, dim);
    let mut e2 = b2.vectors.clone();
    e2.extend(e1[b1.vectors.len()..].iter().cloned());
    if e1.len() != dim || e2.len() != dim {
        return Err(RuntimeError::new(ErrorCode::DegenerateState, "could not complete basis"));
    }
    let mut u = Matrix::zeros(dim);
    for (a, b) in e1.iter().zip(&e2) {
        u.add_outer(b, a, ONE);
    }
    Ok(u)
}

/// Dense `(I - P) ⊗ I + P ⊗ U` with the predicate qubits leftmost.
pub fn predicated_unitary(b: &BasisValue, u: &Matrix) -> Result<Matrix, RuntimeError> {
    let n = u.dim.trailing_zeros() as usize;
    if b.qubits + n > MAX_DENSE_QUBITS {
        return Err(too_large(b.qubits + n));
    }
    let p = b.projector();
    let id_p = Matrix::identity(b.dim());
    let mut not_p = id_p.clone();
    for (x, y) in not_p.data.iter_mut().zip(&p.data) {
        *x -= y;
    }
    let mut out = not_p.kron(&Matrix::identity(u.dim));
    let pu = p.kron(u);
    for (x, y) in out.data.iter_mut().zip(&pu.data) {
        *x += y;
    }
    Ok(out)
}

/// Projective measurement in a full-span basis; outcome `j` is vector `j`.
#[derive(Debug, Clone)]
pub struct MeasurementSpec {
    pub basis: BasisValue,
}

impl MeasurementSpec {
    pub fn outcomes(&self) -> usize {
        self.basis.vectors.len()
    }

    pub fn projector(&self, j: usize) -> Matrix {
        let v = &self.basis.vectors[j];
        let mut p = Matrix::zeros(self.basis.dim());
        p.add_outer(v, v, ONE);
        p
    }

    /// Largest entry of `Σ_j M_j†M_j - I`.
    pub fn completeness_error(&self) -> f64 {
        let mut sum = Matrix::zeros(self.basis.dim());
        for j in 0..self.outcomes() {
            let p = self.projector(j);
            let pp = p.adjoint().mul(&p);
            for (x, y) in sum.data.iter_mut().zip(&pp.data) {
                *x += y;
            }
        }
        sum.max_abs_diff(&Matrix::identity(self.basis.dim()))
    }
}

pub fn measurement_spec(b: &BasisValue) -> Result<MeasurementSpec, RuntimeError> {
    if !b.full_span {
        return Err(RuntimeError::new(ErrorCode::IncompleteMeasureBasis, "measurement basis does not span the space"));
    }
    Ok(MeasurementSpec { basis: b.clone() })
}

/// The two vectors of a one-qubit, two-vector basis as literal vectors.
pub fn one_qubit_vectors(b: &BasisExpr) -> Option<[BasisVector; 2]> {
    let lit = |s: char| BasisVector { phase: None, symbols: s.to_string(), fold: DimExpr::Const(1) };
    match b {
        BasisExpr::Std => Some([lit('0'), lit('1')]),
        BasisExpr::Pm => Some([lit('+'), lit('-')]),
        BasisExpr::Ij => Some([lit('i'), lit('j')]),
        BasisExpr::Fourier(n) if *n == DimExpr::Const(1) => Some([lit('+'), lit('-')]),
        BasisExpr::Literal(vs) if vs.len() == 2 => {
            let one = |v: &BasisVector| v.symbols.chars().count() == 1 && v.fold == DimExpr::Const(1);
            if one(&vs[0]) && one(&vs[1]) {
                Some([vs[0].clone(), vs[1].clone()])
            } else {
                None
            }
        }
        BasisExpr::Tensor(items) if items.len() == 1 => one_qubit_vectors(&items[0]),
        BasisExpr::Fold(x, n) if *n == DimExpr::Const(1) => one_qubit_vectors(x),
        _ => None,
    }
}

fn add_phase(v: &BasisVector, extra: AngleExpr) -> BasisVector {
    let phase = match &v.phase {
        None => extra,
        Some(p) => AngleExpr::Bin(AngleOp::Add, Box::new(p.clone()), Box::new(extra)),
    };
    BasisVector { phase: Some(phase), ..v.clone() }
}

fn flip_arity(what: &str) -> TypeError {
    TypeError::new(ErrorCode::FlipArity, format!("`.{what}` needs a one-qubit basis with two vectors"))
}

fn prep_symbol(c: char) -> Expr {
    let lit = |s: &str| {
        BasisExpr::Literal(
            s.chars()
                .map(|c| BasisVector { phase: None, symbols: c.to_string(), fold: DimExpr::Const(1) })
                .collect(),
        )
    };
    let to = match c {
        '0' => return Expr::BuiltIn(BuiltIn::Id),
        '1' => lit("10"),
        '+' => BasisExpr::Pm,
        '-' => lit("-+"),
        'i' => BasisExpr::Ij,
        'j' => lit("ji"),
        _ => unreachable!("lexer rejects other symbols"),
    };
    Expr::Translate { from: BasisExpr::Std, to }
}

/// Expands `.flip`, `.rotate(θ)` and `.prep` into core constructs.
pub fn desugar(s: &Sugar) -> Result<Expr, TypeError> {
    match s {
        Sugar::Flip(b) => {
            let [v0, v1] = one_qubit_vectors(b).ok_or_else(|| flip_arity("flip"))?;
            Ok(Expr::Translate { from: b.clone(), to: BasisExpr::Literal(vec![v1, v0]) })
        }
        Sugar::Rotate(b, theta) => {
            let [v0, v1] = one_qubit_vectors(b).ok_or_else(|| flip_arity("rotate"))?;
            let half = AngleExpr::Bin(AngleOp::Div, Box::new(theta.clone()), Box::new(AngleExpr::Const(2.0)));
            let neg_half = AngleExpr::Neg(Box::new(half.clone()));
            Ok(Expr::Translate {
                from: b.clone(),
                to: BasisExpr::Literal(vec![add_phase(&v0, neg_half), add_phase(&v1, half)]),
            })
        }
        Sugar::Prep(x) => match &**x {
            Expr::QubitLiteral { symbols, fold } => {
                let parts: Vec<Expr> = symbols.chars().map(prep_symbol).collect();
                let one = if parts.len() == 1 { parts.into_iter().next().unwrap() } else { Expr::Tensor(parts) };
                Ok(if *fold == DimExpr::Const(1) { one } else { Expr::Fold { expr: Box::new(one), count: fold.clone() } })
            }
            Expr::BitLiteral(bits) => {
                let parts: Vec<Expr> = bits.iter().map(|b| prep_symbol(if *b { '1' } else { '0' })).collect();
                Ok(match parts.len() {
                    0 => Expr::Unit,
                    1 => parts.into_iter().next().unwrap(),
                    _ => Expr::Tensor(parts),
                })
            }
            other => Err(TypeError::new(
                ErrorCode::ArityMismatch,
                format!("`.prep` needs a qubit or bit literal, found {other:?}"),
            )),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_expr;

    fn basis(src: &str) -> BasisExpr {
        match parse_expr(src).unwrap() {
            Expr::Measure(b) => b,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pm_tensor_order() {
        let v = veclist(&basis("pm[2].measure")).unwrap();
        let expect = product_state("+-");
        assert!(v.vectors[1].iter().zip(&expect).all(|(a, b)| (a - b).norm() < 1e-15));
        assert_eq!(v.vectors.len(), 4);
        assert!(v.full_span);
    }

    #[test]
    fn fourier_one_qubit_is_pm() {
        let f = veclist(&BasisExpr::Fourier(DimExpr::Const(1))).unwrap();
        let p = veclist(&BasisExpr::Pm).unwrap();
        for (a, b) in f.vectors.iter().zip(&p.vectors) {
            assert!(a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-15));
        }
    }

    #[test]
    fn alignment_merges_until_boundaries_meet() {
        let a = FactoredBasis::from_expr(&basis("(std + fourier[2]).measure")).unwrap();
        let b = FactoredBasis::from_expr(&basis("(fourier[2] + pm).measure")).unwrap();
        let groups = align(&a.factors, &b.factors).unwrap();
        assert_eq!(groups.len(), 1);
        let c = FactoredBasis::from_expr(&basis("(std + pm[2]).measure")).unwrap();
        let groups = align(&a.factors, &c.factors).unwrap();
        assert_eq!(groups.len(), 2);
    }

    #[test]
    fn spans() {
        let a = veclist(&basis("{'00','11'}.measure")).unwrap();
        let b = veclist(&basis("{'++','--'}.measure")).unwrap();
        assert!(!span_equal(&a, &b, TOL));
        let c = veclist(&basis("{'11', phase(0.3)*'00'}.measure")).unwrap();
        assert!(span_equal(&a, &c, TOL));
    }

    #[test]
    fn flip_desugars_to_reversed_literal() {
        let e = desugar(&Sugar::Flip(BasisExpr::Pm)).unwrap();
        let Expr::Translate { to: BasisExpr::Literal(vs), .. } = e else { panic!() };
        assert_eq!(vs[0].symbols, "-");
        assert!(desugar(&Sugar::Flip(BasisExpr::Fold(Box::new(BasisExpr::Std), DimExpr::Const(2)))).is_err());
    }
}
