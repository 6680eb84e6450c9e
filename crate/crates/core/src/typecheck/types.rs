//! Concrete types after monomorphization: flat sequences of atoms.

use std::fmt;

use crate::error::{ErrorCode, TypeError};
use crate::syntax::{DimExpr, TypeExpr};

#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    Qubit,
    Bit,
    /// One qubit's worth of basis; `basis[m]` is `m` of these.
    Basis,
    Func(Box<FnTy>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FnTy {
    pub input: Ty,
    pub output: Ty,
    pub rev: bool,
}

pub type Ty = Vec<Atom>;

impl Atom {
    pub fn is_linear(&self) -> bool {
        matches!(self, Atom::Qubit)
    }
}

pub fn qubits(n: usize) -> Ty {
    vec![Atom::Qubit; n]
}

pub fn bits(n: usize) -> Ty {
    vec![Atom::Bit; n]
}

pub fn func(input: Ty, output: Ty, rev: bool) -> Atom {
    Atom::Func(Box::new(FnTy { input, output, rev }))
}

pub fn carries_qubits(t: &[Atom]) -> bool {
    t.iter().any(Atom::is_linear)
}

/// Reads a concrete type expression; every dimension must be constant.
pub fn lower_type(t: &TypeExpr) -> Result<Ty, TypeError> {
    Ok(match t {
        TypeExpr::Qubit => vec![Atom::Qubit],
        TypeExpr::Bit => vec![Atom::Bit],
        TypeExpr::Basis => vec![Atom::Basis],
        TypeExpr::Unit => Vec::new(),
        TypeExpr::Tensor(items) => {
            let mut out = Vec::new();
            for (t, n) in items {
                let n = n.as_const().ok_or_else(|| {
                    TypeError::new(ErrorCode::UnboundDimVar, format!("dimension `{n}` is not concrete"))
                })?;
                let one = lower_type(t)?;
                for _ in 0..n {
                    out.extend(one.iter().cloned());
                }
            }
            out
        }
        TypeExpr::Func { input, output, rev } => vec![func(lower_type(input)?, lower_type(output)?, *rev)],
    })
}

/// `a <: b`: equal shapes, and a reversible function may stand in for an
/// irreversible one.
pub fn is_subtype(a: &[Atom], b: &[Atom]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| match (x, y) {
            (Atom::Func(f), Atom::Func(g)) => {
                f.input == g.input && f.output == g.output && (f.rev || !g.rev)
            }
            _ => x == y,
        })
}

/// Function type of a value in function position. A tensor of functions
/// acts on the concatenation of their inputs.
pub fn as_function(t: &[Atom]) -> Option<FnTy> {
    if t.is_empty() {
        return None;
    }
    let mut out = FnTy { input: Vec::new(), output: Vec::new(), rev: true };
    for a in t {
        let Atom::Func(f) = a else { return None };
        out.input.extend(f.input.iter().cloned());
        out.output.extend(f.output.iter().cloned());
        out.rev &= f.rev;
    }
    Some(out)
}

/// Run-length encodes a flat type back into a type expression.
pub fn to_type_expr(t: &[Atom]) -> TypeExpr {
    if t.is_empty() {
        return TypeExpr::Unit;
    }
    let mut items: Vec<(TypeExpr, i64)> = Vec::new();
    for a in t {
        let te = match a {
            Atom::Qubit => TypeExpr::Qubit,
            Atom::Bit => TypeExpr::Bit,
            Atom::Basis => TypeExpr::Basis,
            Atom::Func(f) => TypeExpr::Func {
                input: Box::new(to_type_expr(&f.input)),
                output: Box::new(to_type_expr(&f.output)),
                rev: f.rev,
            },
        };
        match items.last_mut() {
            Some((last, n)) if *last == te => *n += 1,
            _ => items.push((te, 1)),
        }
    }
    if items.len() == 1 && matches!(items[0].0, TypeExpr::Func { .. }) && items[0].1 == 1 {
        return items.pop().unwrap().0;
    }
    TypeExpr::Tensor(items.into_iter().map(|(t, n)| (t, DimExpr::Const(n))).collect())
}

pub struct Display<'a>(pub &'a [Atom]);

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", to_type_expr(self.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_round_trip() {
        let t = vec![func(qubits(2), qubits(2), true), func(qubits(1), bits(1), false)];
        assert_eq!(Display(&t).to_string(), "(rev_qfunc[2,2]) + (mfunc[1,1])");
        assert_eq!(Display(&qubits(3)).to_string(), "qubit[3]");
        assert_eq!(lower_type(&to_type_expr(&t)).unwrap(), t);
    }

    #[test]
    fn reversible_functions_are_subtypes() {
        let r = vec![func(qubits(1), qubits(1), true)];
        let n = vec![func(qubits(1), qubits(1), false)];
        assert!(is_subtype(&r, &n));
        assert!(!is_subtype(&n, &r));
    }

    #[test]
    fn tensor_of_functions() {
        let t = vec![func(qubits(1), bits(1), false), func(qubits(2), vec![], false)];
        let f = as_function(&t).unwrap();
        assert_eq!(f.input, qubits(3));
        assert_eq!(f.output, bits(1));
        assert!(!f.rev);
    }
}
