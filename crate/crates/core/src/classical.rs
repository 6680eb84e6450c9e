//! Classical bit-vector functions: static widths, evaluation, truth tables
//! and the three quantum embeddings (xor, sign, in-place).

use std::collections::BTreeMap;

use crate::error::{ErrorCode, RuntimeError, TypeError};
use crate::syntax::*;

pub const MAX_TABLE_INPUTS: usize = 20;

pub type Bits = Vec<bool>;

pub fn bits_to_u64(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |acc, b| (acc << 1) | u64::from(*b))
}

pub fn u64_to_bits(v: u64, width: usize) -> Bits {
    (0..width).map(|i| (v >> (width - 1 - i)) & 1 == 1).collect()
}

fn dim_of(d: &DimExpr) -> Result<usize, TypeError> {
    d.as_const()
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| TypeError::new(ErrorCode::UnboundDimVar, format!("dimension `{d}` is not concrete")))
}

fn mismatch(msg: impl Into<String>) -> TypeError {
    TypeError::new(ErrorCode::DimMismatch, msg)
}

/// Total width of a `bit[n]`-shaped type.
pub fn bit_width(t: &TypeExpr) -> Result<usize, TypeError> {
    match t {
        TypeExpr::Bit => Ok(1),
        TypeExpr::Unit => Ok(0),
        TypeExpr::Tensor(items) => items.iter().map(|(t, n)| Ok(bit_width(t)? * dim_of(n)?)).sum(),
        other => Err(TypeError::new(
            ErrorCode::ArityMismatch,
            format!("classical functions take and return bits, found `{other}`"),
        )),
    }
}

/// Static width of a classical expression; rejects ill-sized operations.
pub fn width(e: &ClassicalExpr, env: &BTreeMap<String, usize>) -> Result<usize, TypeError> {
    Ok(match e {
        ClassicalExpr::Input(n) => *env
            .get(n)
            .ok_or_else(|| TypeError::new(ErrorCode::UnknownName, format!("unknown input `{n}`")))?,
        ClassicalExpr::Const(b) => b.len(),
        ClassicalExpr::Index(x, i) => {
            let w = width(x, env)?;
            if dim_of(i)? >= w {
                return Err(mismatch(format!("index {i} out of range for width {w}")));
            }
            1
        }
        ClassicalExpr::Slice(x, a, b) => {
            let w = width(x, env)?;
            let (a, b) = (dim_of(a)?, dim_of(b)?);
            if a > b || b > w {
                return Err(mismatch(format!("slice [{a}:{b}] out of range for width {w}")));
            }
            b - a
        }
        ClassicalExpr::Not(x) => width(x, env)?,
        ClassicalExpr::Binary(op, a, b) => {
            let (wa, wb) = (width(a, env)?, width(b, env)?);
            if wa != wb {
                return Err(mismatch(format!("{op:?} of widths {wa} and {wb}")));
            }
            wa
        }
        ClassicalExpr::Concat(xs) => xs.iter().map(|x| width(x, env)).sum::<Result<usize, _>>()?,
        ClassicalExpr::Rotate { expr, amount, .. } => {
            if let RotateAmount::Static(k) = amount {
                dim_of(k)?;
            } else if let RotateAmount::Dynamic(k) = amount {
                width(k, env)?;
            }
            width(expr, env)?
        }
        ClassicalExpr::Reduce(_, x) => {
            width(x, env)?;
            1
        }
        ClassicalExpr::ZeroExtend(x, w) => {
            let (wx, w) = (width(x, env)?, dim_of(w)?);
            if w < wx {
                return Err(mismatch(format!("cannot zero-extend width {wx} to {w}")));
            }
            w
        }
        ClassicalExpr::Repeat(x, n) => width(x, env)? * dim_of(n)?,
        ClassicalExpr::EqConst(x, k) => {
            width(x, env)?;
            dim_of(k)?;
            1
        }
        ClassicalExpr::MulMod { expr, factor, modulus } => {
            let w = width(expr, env)?;
            dim_of(factor)?;
            let m = dim_of(modulus)?;
            if m == 0 || (w < 64 && m as u128 > 1u128 << w) {
                return Err(mismatch(format!("modulus {m} does not fit in {w} bits")));
            }
            w
        }
    })
}

/// Evaluates an already width-checked expression.
pub fn eval(e: &ClassicalExpr, env: &BTreeMap<String, Bits>) -> Bits {
    let d = |x: &DimExpr| x.as_const().unwrap_or(0) as usize;
    match e {
        ClassicalExpr::Input(n) => env[n].clone(),
        ClassicalExpr::Const(b) => b.clone(),
        ClassicalExpr::Index(x, i) => vec![eval(x, env)[d(i)]],
        ClassicalExpr::Slice(x, a, b) => eval(x, env)[d(a)..d(b)].to_vec(),
        ClassicalExpr::Not(x) => eval(x, env).into_iter().map(|b| !b).collect(),
        ClassicalExpr::Binary(op, a, b) => eval(a, env)
            .into_iter()
            .zip(eval(b, env))
            .map(|(x, y)| match op {
                BitOp::And => x & y,
                BitOp::Or => x | y,
                BitOp::Xor => x ^ y,
            })
            .collect(),
        ClassicalExpr::Concat(xs) => xs.iter().flat_map(|x| eval(x, env)).collect(),
        ClassicalExpr::Rotate { left, expr, amount } => {
            let x = eval(expr, env);
            let w = x.len();
            if w == 0 {
                return x;
            }
            let k = match amount {
                RotateAmount::Static(k) => d(k),
                RotateAmount::Dynamic(k) => bits_to_u64(&eval(k, env)) as usize,
            } % w;
            (0..w).map(|i| if *left { x[(i + k) % w] } else { x[(i + w - k) % w] }).collect()
        }
        ClassicalExpr::Reduce(op, x) => {
            let x = eval(x, env);
            vec![match op {
                ReduceOp::And => x.iter().all(|b| *b),
                ReduceOp::Or => x.iter().any(|b| *b),
                ReduceOp::Xor => x.iter().fold(false, |a, b| a ^ b),
            }]
        }
        ClassicalExpr::ZeroExtend(x, w) => {
            let x = eval(x, env);
            let mut out = vec![false; d(w) - x.len()];
            out.extend(x);
            out
        }
        ClassicalExpr::Repeat(x, n) => {
            let x = eval(x, env);
            x.repeat(d(n))
        }
        ClassicalExpr::EqConst(x, k) => {
            let x = eval(x, env);
            vec![x.len() <= 64 && bits_to_u64(&x) == d(k) as u64]
        }
        ClassicalExpr::MulMod { expr, factor, modulus } => {
            let x = eval(expr, env);
            let (c, m) = (d(factor) as u128, d(modulus) as u128);
            let v = bits_to_u64(&x) as u128;
            let out = if v < m { (v * c) % m } else { v };
            u64_to_bits(out as u64, x.len())
        }
    }
}

/// Input and output widths of a concrete classical definition.
pub fn signature(def: &Definition) -> Result<(Vec<(String, usize)>, usize), TypeError> {
    let inputs = def
        .params
        .iter()
        .map(|p| Ok((p.name.clone(), bit_width(&p.ty)?)))
        .collect::<Result<Vec<_>, TypeError>>()?;
    Ok((inputs, bit_width(&def.ret)?))
}

/// Checks a concrete classical definition and returns `(inputs, outputs)`.
pub fn check_classical(def: &Definition) -> Result<(usize, usize), TypeError> {
    let Body::Classical(body) = &def.body else {
        return Err(TypeError::new(ErrorCode::ArityMismatch, format!("`{}` is not classical", def.name)));
    };
    let (inputs, out) = signature(def)?;
    let env: BTreeMap<String, usize> = inputs.iter().cloned().collect();
    let w = width(body, &env).map_err(|e| e.at(def.span))?;
    if w != out {
        return Err(mismatch(format!("`{}` returns {w} bits but declares {out}", def.name)).at(def.span));
    }
    Ok((inputs.iter().map(|(_, w)| w).sum(), out))
}

/// Evaluates a concrete classical definition on the concatenation of its
/// inputs.
pub fn eval_classical(def: &Definition, input: &[bool]) -> Result<Bits, RuntimeError> {
    let to_rt = |e: TypeError| RuntimeError::new(e.code, e.message);
    let (n_in, _) = check_classical(def).map_err(to_rt)?;
    if input.len() != n_in {
        return Err(RuntimeError::new(
            ErrorCode::WidthMismatch,
            format!("`{}` takes {n_in} bits, got {}", def.name, input.len()),
        ));
    }
    let (inputs, _) = signature(def).map_err(to_rt)?;
    let Body::Classical(body) = &def.body else { unreachable!() };
    let mut env = BTreeMap::new();
    let mut at = 0;
    for (name, w) in inputs {
        env.insert(name, input[at..at + w].to_vec());
        at += w;
    }
    Ok(eval(body, &env))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    pub n_in: usize,
    pub n_out: usize,
    /// `outputs[x]` for every input `x`, most significant bit first.
    pub outputs: Vec<u64>,
}

impl TruthTable {
    pub fn is_bijection(&self) -> bool {
        if self.n_in != self.n_out {
            return false;
        }
        let mut seen = vec![false; self.outputs.len()];
        for &y in &self.outputs {
            let y = y as usize;
            if y >= seen.len() || seen[y] {
                return false;
            }
            seen[y] = true;
        }
        true
    }
}

pub fn truth_table(def: &Definition) -> Result<TruthTable, RuntimeError> {
    let to_rt = |e: TypeError| RuntimeError::new(e.code, e.message);
    let (n_in, n_out) = check_classical(def).map_err(to_rt)?;
    if n_in > MAX_TABLE_INPUTS {
        return Err(RuntimeError::new(
            ErrorCode::TableTooLarge,
            format!("`{}` has {n_in} input bits (limit {MAX_TABLE_INPUTS})", def.name),
        ));
    }
    if n_out > 64 {
        return Err(RuntimeError::new(ErrorCode::TableTooLarge, format!("`{}` has {n_out} output bits", def.name)));
    }
    let outputs = (0..1u64 << n_in)
        .map(|x| eval_classical(def, &u64_to_bits(x, n_in)).map(|b| bits_to_u64(&b)))
        .collect::<Result<_, _>>()?;
    Ok(TruthTable { n_in, n_out, outputs })
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmbeddingAction {
    /// `|x⟩|y⟩ ↦ |x⟩|y ⊕ f(x)⟩` as a basis-state permutation.
    Xor { width: usize, perm: Vec<usize> },
    /// `|x⟩ ↦ (-1)^{f(x)}|x⟩`; `true` marks a sign flip.
    Phase { width: usize, signs: Vec<bool> },
    /// `|x⟩ ↦ |f(x)⟩`.
    InPlace { width: usize, perm: Vec<usize> },
}

pub fn xor_embedding(t: &TruthTable) -> EmbeddingAction {
    let width = t.n_in + t.n_out;
    let mask = (1u64 << t.n_out) - 1;
    let perm = (0..1usize << width)
        .map(|z| {
            let x = (z as u64) >> t.n_out;
            let y = (z as u64) & mask;
            ((x << t.n_out) | (y ^ t.outputs[x as usize])) as usize
        })
        .collect();
    EmbeddingAction::Xor { width, perm }
}

pub fn phase_embedding(t: &TruthTable) -> Result<EmbeddingAction, RuntimeError> {
    if t.n_out != 1 {
        return Err(RuntimeError::new(
            ErrorCode::PhaseNeedsOneOutput,
            format!("sign embedding needs one output bit, function has {}", t.n_out),
        ));
    }
    Ok(EmbeddingAction::Phase { width: t.n_in, signs: t.outputs.iter().map(|y| *y == 1).collect() })
}

pub fn inplace_embedding(f: &TruthTable, inverse: &TruthTable) -> Result<EmbeddingAction, RuntimeError> {
    if f.n_in != f.n_out || inverse.n_in != f.n_out || inverse.n_out != f.n_in {
        return Err(RuntimeError::new(
            ErrorCode::WidthMismatch,
            format!("in-place embedding needs equal widths, got {}->{} and {}->{}", f.n_in, f.n_out, inverse.n_in, inverse.n_out),
        ));
    }
    if !f.is_bijection() {
        return Err(RuntimeError::new(ErrorCode::NotABijection, "function is not a bijection"));
    }
    for (x, &y) in f.outputs.iter().enumerate() {
        if inverse.outputs[y as usize] != x as u64 {
            return Err(RuntimeError::new(
                ErrorCode::NotABijection,
                format!("supplied inverse maps f({x}) = {y} to {}", inverse.outputs[y as usize]),
            ));
        }
    }
    Ok(EmbeddingAction::InPlace { width: f.n_in, perm: f.outputs.iter().map(|y| *y as usize).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use crate::syntax::substitute_classical;

    fn concrete(src: &str, dims: &[(&str, i64)]) -> Definition {
        let mut d = parse_program(src).unwrap().defs.remove(0);
        let map: BTreeMap<String, i64> = dims.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let env = SubstEnv { dims: &map, phases: None };
        d.params = d.params.iter().map(|p| Param { name: p.name.clone(), ty: p.ty.subst(&map).unwrap() }).collect();
        d.ret = d.ret.subst(&map).unwrap();
        if let Body::Classical(b) = &d.body {
            d.body = Body::Classical(substitute_classical(b, &env).unwrap());
        }
        d
    }

    #[test]
    fn rotations_and_slices() {
        let d = concrete("classical f(x: bit[4]) -> bit[4]: x.rotl(1)", &[]);
        assert_eq!(eval_classical(&d, &u64_to_bits(0b1000, 4)).unwrap(), u64_to_bits(0b0001, 4));
        let d = concrete("classical f(x: bit[4]) -> bit[2]: x[1:3]", &[]);
        assert_eq!(eval_classical(&d, &u64_to_bits(0b0110, 4)).unwrap(), vec![true, true]);
    }

    #[test]
    fn mul_mod_is_identity_above_modulus() {
        let d = concrete("classical f(y: bit[4]) -> bit[4]: y.mul_mod(7, 15)", &[]);
        let t = truth_table(&d).unwrap();
        assert_eq!(t.outputs[1], 7);
        assert_eq!(t.outputs[15], 15);
        assert!(t.is_bijection());
    }

    #[test]
    fn width_errors() {
        let p = parse_program("classical f(x: bit[3]) -> bit: x & 0b1").unwrap();
        assert_eq!(check_classical(&p.defs[0]).unwrap_err().code, ErrorCode::DimMismatch);
    }

    #[test]
    fn embeddings() {
        let d = concrete("classical f(x: bit[2]) -> bit: x[0] & x[1]", &[]);
        let t = truth_table(&d).unwrap();
        let EmbeddingAction::Xor { perm, .. } = xor_embedding(&t) else { panic!() };
        assert_eq!(perm, vec![0, 1, 2, 3, 4, 5, 7, 6]);
        let EmbeddingAction::Phase { signs, .. } = phase_embedding(&t).unwrap() else { panic!() };
        assert_eq!(signs, vec![false, false, false, true]);
        let wide = concrete("classical g(x: bit[2]) -> bit[2]: x", &[]);
        let tw = truth_table(&wide).unwrap();
        assert_eq!(phase_embedding(&tw).unwrap_err().code, ErrorCode::PhaseNeedsOneOutput);
        assert!(inplace_embedding(&tw, &tw).is_ok());
        assert_eq!(inplace_embedding(&t, &t).unwrap_err().code, ErrorCode::WidthMismatch);
    }
}
