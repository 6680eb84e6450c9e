//! Pretty printer producing text the parser reads back to the same tree.

use std::fmt::Write;

use crate::syntax::*;

const PIPE: u8 = 0;
const PRED: u8 = 1;
const TRANS: u8 = 2;
const TENSOR: u8 = 3;
const PREFIX: u8 = 4;
const POSTFIX: u8 = 5;

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for d in &p.defs {
        out.push_str(&print_definition(d));
        out.push('\n');
    }
    out
}

pub fn print_definition(d: &Definition) -> String {
    let mut s = String::new();
    s.push_str(match d.kind {
        DefKind::Quantum => "qpu ",
        DefKind::Classical => "classical ",
    });
    if d.reversible {
        s.push_str("rev ");
    }
    s.push_str(&d.name);
    if !d.dim_vars.is_empty() {
        let _ = write!(s, "[{}]", d.dim_vars.join(", "));
    }
    let list = |ps: &[Param]| {
        ps.iter().map(|p| format!("{}: {}", p.name, p.ty)).collect::<Vec<_>>().join(", ")
    };
    if d.captures.is_empty() && d.kind == DefKind::Classical {
        let _ = write!(s, "({})", list(&d.params));
    } else {
        let _ = write!(s, "({}; {})", list(&d.captures), list(&d.params));
    }
    let _ = write!(s, " -> {}: ", d.ret);
    match &d.body {
        Body::Quantum(e) => s.push_str(&print_expr(e)),
        Body::Classical(c) => s.push_str(&print_classical(c)),
    }
    s
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr(&mut s, e, PIPE);
    s
}

pub fn print_basis(b: &BasisExpr) -> String {
    let mut s = String::new();
    basis(&mut s, b, TENSOR);
    s
}

fn paren(s: &mut String, open: bool, f: impl FnOnce(&mut String)) {
    if open {
        s.push('(');
    }
    f(s);
    if open {
        s.push(')');
    }
}

fn fold_suffix(s: &mut String, n: &DimExpr) {
    if *n != DimExpr::Const(1) {
        let _ = write!(s, "[{n}]");
    }
}

fn expr(s: &mut String, e: &Expr, level: u8) {
    match e {
        Expr::Apply { func, arg } => paren(s, level > PIPE, |s| {
            expr(s, arg, PIPE);
            s.push_str(" | ");
            match &**func {
                Expr::Repeat { var, lo, hi, body } => repeat(s, var, lo, hi, body),
                other => expr(s, other, PRED),
            }
        }),
        Expr::Repeat { var, lo, hi, body } => paren(s, true, |s| {
            s.push_str("id | ");
            repeat(s, var, lo, hi, body)
        }),
        Expr::Unrolled(iters) => paren(s, true, |s| {
            s.push_str("id");
            for stage in iters.iter().flatten() {
                s.push_str(" | ");
                expr(s, stage, PRED);
            }
        }),
        Expr::Predicate { basis: b, func, basis_right } => paren(s, level > PRED, |s| {
            if *basis_right {
                expr(s, func, TRANS);
                s.push_str(" & ");
                basis(s, b, PRED);
            } else {
                basis(s, b, TRANS);
                s.push_str(" & ");
                expr(s, func, PRED);
            }
        }),
        Expr::Translate { from, to } => paren(s, level > TRANS, |s| {
            basis(s, from, TENSOR);
            s.push_str(" >> ");
            basis(s, to, TENSOR);
        }),
        Expr::Tensor(items) => paren(s, level > TENSOR, |s| {
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    s.push_str(" + ");
                }
                expr(s, item, PREFIX);
            }
        }),
        Expr::Phase { angle, expr: inner } => paren(s, level > PREFIX, |s| {
            let _ = write!(s, "phase({angle})*");
            expr(s, inner, PREFIX);
        }),
        Expr::Reverse(inner) => paren(s, level > PREFIX, |s| {
            s.push('~');
            expr(s, inner, PREFIX);
        }),
        Expr::Fold { expr: inner, count } => {
            expr(s, inner, POSTFIX + 1);
            let _ = write!(s, "[{count}]");
        }
        Expr::QubitLiteral { symbols, fold } => {
            let _ = write!(s, "'{symbols}'");
            fold_suffix(s, fold);
        }
        Expr::BitLiteral(bits) => {
            s.push_str("0b");
            for b in bits {
                s.push(if *b { '1' } else { '0' });
            }
        }
        Expr::Variable(v) => s.push_str(v),
        Expr::BuiltIn(b) => s.push_str(match b {
            BuiltIn::Id => "id",
            BuiltIn::Discard => "discard",
            BuiltIn::DiscardZ => "discardz",
        }),
        Expr::Unit => s.push_str("()"),
        Expr::Basis(b) => basis(s, b, level.max(TENSOR)),
        Expr::Measure(b) => {
            basis(s, b, POSTFIX);
            s.push_str(".measure");
        }
        Expr::Sugar(Sugar::Flip(b)) => {
            basis(s, b, POSTFIX);
            s.push_str(".flip");
        }
        Expr::Sugar(Sugar::Rotate(b, a)) => {
            basis(s, b, POSTFIX);
            let _ = write!(s, ".rotate({a})");
        }
        Expr::Sugar(Sugar::Prep(x)) => {
            expr(s, x, POSTFIX);
            s.push_str(".prep");
        }
        Expr::Embed { kind, func, inverse } => {
            expr(s, func, POSTFIX);
            match kind {
                EmbedKind::Xor => s.push_str(".xor_embed"),
                EmbedKind::Phase => s.push_str(".phase"),
                EmbedKind::InPlace => {
                    s.push_str(".inplace(");
                    if let Some(inv) = inverse {
                        expr(s, inv, POSTFIX);
                    }
                    s.push(')');
                }
            }
        }
        Expr::Instantiate { name, args } => {
            let _ = write!(s, "{name}[[");
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                match a {
                    InstArg::Dim(d) => {
                        let _ = write!(s, "{d}");
                    }
                    InstArg::Free => s.push_str("..."),
                    InstArg::Named(k, v) => {
                        let _ = write!(s, "{k}=");
                        expr(s, v, POSTFIX);
                    }
                    InstArg::NamedDim(k, d) => {
                        let _ = write!(s, "{k}=({d})");
                    }
                }
            }
            s.push_str("]]");
        }
    }
}

fn repeat(s: &mut String, var: &str, lo: &DimExpr, hi: &DimExpr, body: &[Expr]) {
    let _ = write!(s, "repeat {var} in {lo}..{hi}: (");
    for (i, stage) in body.iter().enumerate() {
        if i > 0 {
            s.push_str(" | ");
        }
        expr(s, stage, PRED);
    }
    s.push(')');
}

fn vector(s: &mut String, v: &BasisVector) {
    if let Some(a) = &v.phase {
        let _ = write!(s, "phase({a})*");
    }
    let _ = write!(s, "'{}'", v.symbols);
    fold_suffix(s, &v.fold);
}

fn basis(s: &mut String, b: &BasisExpr, level: u8) {
    match b {
        BasisExpr::Std => s.push_str("std"),
        BasisExpr::Pm => s.push_str("pm"),
        BasisExpr::Ij => s.push_str("ij"),
        BasisExpr::Fourier(n) => {
            let _ = write!(s, "fourier[{n}]");
        }
        BasisExpr::Literal(vs) => {
            s.push('{');
            for (i, v) in vs.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                vector(s, v);
            }
            s.push('}');
        }
        BasisExpr::Tensor(items) => paren(s, level > TENSOR, |s| {
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    s.push_str(" + ");
                }
                basis(s, item, PREFIX);
            }
        }),
        BasisExpr::Fold(inner, n) => {
            basis(s, inner, POSTFIX + 1);
            let _ = write!(s, "[{n}]");
        }
    }
}

pub fn print_classical(c: &ClassicalExpr) -> String {
    let mut s = String::new();
    classical(&mut s, c);
    s
}

fn classical(s: &mut String, c: &ClassicalExpr) {
    let wrap = |s: &mut String, x: &ClassicalExpr| {
        let atomic = matches!(
            x,
            ClassicalExpr::Input(_) | ClassicalExpr::Const(_) | ClassicalExpr::Concat(_)
        );
        paren(s, !atomic, |s| classical(s, x));
    };
    match c {
        ClassicalExpr::Input(n) => s.push_str(n),
        ClassicalExpr::Const(bits) => {
            s.push_str("0b");
            for b in bits {
                s.push(if *b { '1' } else { '0' });
            }
        }
        ClassicalExpr::Index(x, i) => {
            wrap(s, x);
            let _ = write!(s, "[{i}]");
        }
        ClassicalExpr::Slice(x, a, b) => {
            wrap(s, x);
            let _ = write!(s, "[{a}:{b}]");
        }
        ClassicalExpr::Not(x) => {
            s.push('~');
            wrap(s, x);
        }
        ClassicalExpr::Binary(op, a, b) => {
            wrap(s, a);
            s.push_str(match op {
                BitOp::And => " & ",
                BitOp::Or => " | ",
                BitOp::Xor => " ^ ",
            });
            wrap(s, b);
        }
        ClassicalExpr::Concat(xs) => {
            s.push_str("concat(");
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                classical(s, x);
            }
            s.push(')');
        }
        ClassicalExpr::Rotate { left, expr, amount } => {
            wrap(s, expr);
            s.push_str(if *left { ".rotl(" } else { ".rotr(" });
            match amount {
                RotateAmount::Static(d) => {
                    let _ = write!(s, "{d}");
                }
                RotateAmount::Dynamic(x) => classical(s, x),
            }
            s.push(')');
        }
        ClassicalExpr::Reduce(op, x) => {
            wrap(s, x);
            s.push_str(match op {
                ReduceOp::And => ".and_reduce()",
                ReduceOp::Or => ".or_reduce()",
                ReduceOp::Xor => ".xor_reduce()",
            });
        }
        ClassicalExpr::ZeroExtend(x, w) => {
            wrap(s, x);
            let _ = write!(s, ".zext({w})");
        }
        ClassicalExpr::Repeat(x, n) => {
            wrap(s, x);
            let _ = write!(s, ".repeat({n})");
        }
        ClassicalExpr::EqConst(x, k) => {
            wrap(s, x);
            let _ = write!(s, ".eq({k})");
        }
        ClassicalExpr::MulMod { expr, factor, modulus } => {
            wrap(s, expr);
            let _ = write!(s, ".mul_mod({factor}, {modulus})");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_expr, parse_program};
    use super::*;

    #[test]
    fn round_trips_corpus_style_expressions() {
        for src in [
            "'+'[N] | f.phase | pm[N] >> std[N] | std[N].measure",
            "'+' + '0'[N - 1] | '1' & std.flip[N - 1] | std[N].measure",
            "'+'[M] + (() | prep) | repeat j in 0..M: (std[M - 1 - j] + '1' + std[j] & op[[j]]) | fourier[M].measure + discard[N]",
            "q | ~a | '0'[N] >> phase(phases[2 * K + 1])*'0'[N] | a",
            "{'0', '1'} >> {phase(-(0.5))*'0', phase(0.5)*'1'}",
            "x | f.inplace(g[[A, ...]]) | std.flip & '1'",
        ] {
            let e = parse_expr(src).unwrap();
            let printed = print_expr(&e);
            assert_eq!(parse_expr(&printed).unwrap(), e, "{printed}");
        }
    }

    #[test]
    fn round_trips_definitions() {
        let src = "classical f[N, K](s: bit[N]; x: bit[N]) -> bit: (x & s).xor_reduce() ^ x[0] | concat(x[0:K], 0b10).rotl(1)[0]
                   qpu rev g[N](f: cfunc[N, 1]; q: qubit[N]) -> qubit[N]: q + '0' | f.xor_embed | id[N] + discardz";
        let p = parse_program(src).unwrap();
        let again = parse_program(&print_program(&p)).unwrap();
        for (a, b) in p.defs.iter().zip(&again.defs) {
            assert_eq!(a.body, b.body);
            assert_eq!(a.params, b.params);
            assert_eq!(a.captures, b.captures);
            assert_eq!(a.ret, b.ret);
        }
    }
}
