//! Host-side entry points shared by the command-line tool and the Python
//! bindings: lowering to matrices and classical evaluation.

use crate::classical::eval_classical;
use crate::error::{Error, ErrorCode, RuntimeError, TypeError};
use crate::linalg::Matrix;
use crate::parser::{parse_expr, parse_program};
use crate::post::BitString;
use crate::sim::{Plan, SimOptions};
use crate::syntax::{DefKind, Expr, Program};
use crate::typecheck::types::Atom;
use crate::typecheck::{compile, type_of, Bindings, Globals};

/// Unitary of a closed reversible expression.
pub fn lower_expression(src: &str, opts: SimOptions) -> Result<Matrix, Error> {
    let e = parse_expr(src)?;
    let ty = type_of(&e, &Globals::default())?;
    if !matches!(ty.as_slice(), [Atom::Func(f)] if f.rev) {
        return Err(TypeError::new(ErrorCode::NotReversible, "only reversible functions lower to a matrix").into());
    }
    let plan = Plan::from_program(&Program::default(), None, opts)?;
    let f = plan.function(&e)?;
    Ok(plan.matrix(&f)?)
}

/// Unitary of the reversible kernel `name` of a program.
pub fn lower_kernel(src: &str, name: &str, b: &Bindings, opts: SimOptions) -> Result<Matrix, Error> {
    let c = compile(src, Some(name), b)?;
    let plan = Plan::new(&c, opts)?;
    let f = plan.function(&Expr::var(&c.mono.entry))?;
    Ok(plan.matrix(&f)?)
}

/// Evaluates the classical function `function` on `input`. A single
/// dimension variable left unbound is inferred from the input width.
pub fn evaluate(src: &str, function: &str, input: &str, b: &Bindings) -> Result<BitString, Error> {
    let x: BitString = input.trim_start_matches("0b").parse()?;
    let program = parse_program(src)?;
    let def = program
        .defs
        .iter()
        .find(|d| d.name == function && d.kind == DefKind::Classical)
        .ok_or_else(|| TypeError::new(ErrorCode::UnknownName, format!("no classical function `{function}`")))?;
    let unbound: Vec<&String> = def.dim_vars.iter().filter(|v| !b.dims.contains_key(*v)).collect();
    let attempts: Vec<Bindings> = match unbound.as_slice() {
        [] => vec![b.clone()],
        [v] => (0..=x.width() as i64).map(|n| b.clone().dim(v, n)).collect(),
        _ => {
            return Err(TypeError::new(
                ErrorCode::UnboundDimVar,
                format!("bind the dimension variables of `{function}` explicitly"),
            )
            .into())
        }
    };
    let mut last = None;
    for b in attempts {
        let c = match compile(src, Some(function), &b) {
            Ok(c) => c,
            Err(e) => {
                last = Some(e);
                continue;
            }
        };
        let d = c.mono.program.defs.iter().find(|d| d.name == c.mono.entry).expect("entry is specialized");
        match eval_classical(d, &x.0) {
            Ok(y) => return Ok(BitString(y)),
            Err(e) if e.code == ErrorCode::WidthMismatch => last = Some(e.into()),
            Err(e) => return Err(e.into()),
        }
    }
    Err(last.unwrap_or_else(|| RuntimeError::new(ErrorCode::WidthMismatch, "no width fits the input").into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_with_inferred_width() {
        let src = "classical all_ones[N](x: bit[N]) -> bit: x.and_reduce()";
        assert_eq!(evaluate(src, "all_ones", "111", &Bindings::default()).unwrap().to_string(), "1");
        assert_eq!(evaluate(src, "all_ones", "0b1011", &Bindings::default()).unwrap().to_string(), "0");
        let err = evaluate(src, "nope", "1", &Bindings::default()).unwrap_err();
        assert_eq!(err.code(), ErrorCode::UnknownName);
    }

    #[test]
    fn lowering_requires_reversibility() {
        let x = lower_expression("std >> {'1','0'}", SimOptions::default()).unwrap();
        assert_eq!(x.dim, 2);
        assert!((x.get(0, 1).re - 1.0).abs() < 1e-12);
        let err = lower_expression("std.measure", SimOptions::default()).unwrap_err();
        assert_eq!(err.code(), ErrorCode::NotReversible);
    }
}
