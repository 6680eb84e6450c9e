//! Recursive-descent parser.
//!
//! Quantum expression precedence, loosest first: `|` (left), `&` (right),
//! `>>` (non-associative), `+` (left), prefix `~ - phase(θ)*`, then postfix
//! `[n]`, `[[...]]` and `.method`.

pub mod lexer;
mod printer;

use crate::error::ErrorCode;
pub use crate::error::ParseError;
use crate::syntax::*;
use lexer::{lex, Tok, Token};

pub use printer::{print_basis, print_classical, print_definition, print_expr, print_program};

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser { toks: tokens, pos: 0, classical_names: Vec::new() };
    let mut defs = Vec::new();
    while p.peek() != &Tok::Eof {
        defs.push(p.definition()?);
    }
    Ok(Program { defs, pragmas: scan_pragmas(src) })
}

/// Parses a standalone quantum expression.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0, classical_names: Vec::new() };
    let e = p.pipe()?;
    p.expect(Tok::Eof, "end of input")?;
    Ok(e)
}

pub fn parse_dim(src: &str) -> Result<DimExpr, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0, classical_names: Vec::new() };
    let e = p.dim()?;
    p.expect(Tok::Eof, "end of input")?;
    Ok(e)
}

fn scan_pragmas(src: &str) -> Pragmas {
    let mut out = Pragmas::default();
    for line in src.lines() {
        let Some(rest) = line.trim_start().strip_prefix("#@") else { continue };
        let mut words = rest.split_whitespace();
        let (Some(kind), Some(value)) = (words.next(), words.next()) else { continue };
        let pair = value.split_once('=').map(|(k, v)| (k.to_string(), v.to_string()));
        match (kind, pair) {
            ("entry", _) => out.entry = Some(value.to_string()),
            ("set", Some(kv)) => out.dims.push(kv),
            ("arg", Some(kv)) => out.args.push(kv),
            _ => {}
        }
    }
    out
}

const KEYWORDS: &[&str] = &[
    "qpu", "classical", "rev", "repeat", "in", "phase", "id", "discard", "discardz", "fourier",
    "std", "pm", "ij",
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Names of inputs in scope of the classical body being parsed.
    classical_names: Vec<String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let found = &self.toks[self.pos];
        ParseError {
            code: ErrorCode::ParseError,
            message: format!("expected {}, found {}", expected.join(" or "), found.tok),
            span: found.span,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn error_msg(&self, message: impl Into<String>, span: Span) -> ParseError {
        ParseError { code: ErrorCode::ParseError, message: message.into(), span, expected: Vec::new() }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.error(&[what]))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{kw}`")]))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    // ---- definitions ----

    fn definition(&mut self) -> Result<Definition, ParseError> {
        let start = self.span();
        let kind = if self.eat_kw("qpu") {
            DefKind::Quantum
        } else if self.eat_kw("classical") {
            DefKind::Classical
        } else {
            return Err(self.error(&["`qpu`", "`classical`"]));
        };
        let reversible = self.eat_kw("rev");
        let name = self.ident()?;
        let mut dim_vars = Vec::new();
        if self.eat(&Tok::LBracket) {
            loop {
                dim_vars.push(self.ident()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBracket, "`]`")?;
        }
        self.expect(Tok::LParen, "`(`")?;
        let mut first = Vec::new();
        let mut second = None;
        if !matches!(self.peek(), Tok::RParen | Tok::Semi) {
            first = self.param_list()?;
        }
        if self.eat(&Tok::Semi) {
            second = Some(if self.peek() == &Tok::RParen { Vec::new() } else { self.param_list()? });
        }
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::Arrow, "`->`")?;
        let ret = self.ty()?;
        self.expect(Tok::Colon, "`:`")?;
        let (captures, params) = match (second, kind) {
            (Some(params), _) => (first, params),
            (None, DefKind::Classical) => (Vec::new(), first),
            (None, DefKind::Quantum) => first.into_iter().partition(|p| !carries_qubits(&p.ty)),
        };
        let body = match kind {
            DefKind::Quantum => Body::Quantum(self.pipe()?),
            DefKind::Classical => {
                self.classical_names =
                    captures.iter().chain(params.iter()).map(|p| p.name.clone()).collect();
                let b = self.cexpr()?;
                self.classical_names.clear();
                Body::Classical(b)
            }
        };
        if !matches!(self.peek(), Tok::Eof) && !self.is_kw("qpu") && !self.is_kw("classical") {
            return Err(self.error(&["`qpu`", "`classical`", "end of input"]));
        }
        let end = self.toks[self.pos.saturating_sub(1)].span;
        let span = Span { start: start.start, end: end.end, line: start.line, col: start.col };
        Ok(Definition { name, kind, reversible, dim_vars, captures, params, ret, body, span })
    }

    fn param_list(&mut self) -> Result<Vec<Param>, ParseError> {
        let mut out = Vec::new();
        loop {
            let name = self.ident()?;
            self.expect(Tok::Colon, "`:`")?;
            let ty = self.ty()?;
            out.push(Param { name, ty });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(out)
    }

    fn ty(&mut self) -> Result<TypeExpr, ParseError> {
        let mut items = vec![self.ty_term()?];
        while self.eat(&Tok::Plus) {
            items.push(self.ty_term()?);
        }
        if items.len() == 1 {
            let (t, n) = items.pop().unwrap();
            if n == DimExpr::Const(1) && !matches!(t, TypeExpr::Qubit | TypeExpr::Bit | TypeExpr::Basis) {
                return Ok(t);
            }
            return Ok(TypeExpr::Tensor(vec![(t, n)]));
        }
        Ok(TypeExpr::Tensor(items))
    }

    fn ty_term(&mut self) -> Result<(TypeExpr, DimExpr), ParseError> {
        let atom = match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                if self.eat(&Tok::RParen) {
                    TypeExpr::Unit
                } else {
                    let t = self.ty()?;
                    self.expect(Tok::RParen, "`)`")?;
                    t
                }
            }
            Tok::Ident(s) => {
                self.bump();
                match s.as_str() {
                    "qubit" => TypeExpr::Qubit,
                    "bit" => TypeExpr::Bit,
                    "basis" => TypeExpr::Basis,
                    "qfunc" | "rev_qfunc" | "cfunc" => {
                        let (a, b) = if self.peek() == &Tok::LBracket {
                            self.bump();
                            let a = self.dim()?;
                            let b = if self.eat(&Tok::Comma) { self.dim()? } else { a.clone() };
                            self.expect(Tok::RBracket, "`]`")?;
                            (a, b)
                        } else {
                            (DimExpr::Const(1), DimExpr::Const(1))
                        };
                        let atom = if s == "cfunc" { TypeExpr::Bit } else { TypeExpr::Qubit };
                        let func = TypeExpr::Func {
                            input: Box::new(TypeExpr::repeated(atom.clone(), a)),
                            output: Box::new(TypeExpr::repeated(atom, b)),
                            rev: s == "rev_qfunc",
                        };
                        return Ok((func, self.ty_repeat()?));
                    }
                    _ => {
                        self.pos -= 1;
                        return Err(self.error(&["type"]));
                    }
                }
            }
            _ => return Err(self.error(&["type"])),
        };
        Ok((atom, self.ty_repeat()?))
    }

    fn ty_repeat(&mut self) -> Result<DimExpr, ParseError> {
        if self.eat(&Tok::LBracket) {
            let n = self.dim()?;
            self.expect(Tok::RBracket, "`]`")?;
            Ok(n)
        } else {
            Ok(DimExpr::Const(1))
        }
    }

    // ---- dimensions and angles ----

    fn dim(&mut self) -> Result<DimExpr, ParseError> {
        let mut lhs = self.dim_term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => DimOp::Add,
                Tok::Minus => DimOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = DimExpr::bin(op, lhs, self.dim_term()?);
        }
    }

    fn dim_term(&mut self) -> Result<DimExpr, ParseError> {
        let mut lhs = self.dim_pow()?;
        loop {
            let op = match self.peek() {
                Tok::Star => DimOp::Mul,
                Tok::Slash => DimOp::Div,
                Tok::Percent => DimOp::Mod,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = DimExpr::bin(op, lhs, self.dim_pow()?);
        }
    }

    fn dim_pow(&mut self) -> Result<DimExpr, ParseError> {
        let base = self.dim_atom()?;
        if self.eat(&Tok::StarStar) {
            return Ok(DimExpr::bin(DimOp::Pow, base, self.dim_pow()?));
        }
        Ok(base)
    }

    fn dim_atom(&mut self) -> Result<DimExpr, ParseError> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(DimExpr::Const(i))
            }
            Tok::Ident(_) => Ok(DimExpr::Var(self.ident()?)),
            Tok::LParen => {
                self.bump();
                let e = self.dim()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => Err(self.error(&["dimension"])),
        }
    }

    fn angle(&mut self) -> Result<AngleExpr, ParseError> {
        let mut lhs = self.angle_term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => AngleOp::Add,
                Tok::Minus => AngleOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = AngleExpr::Bin(op, Box::new(lhs), Box::new(self.angle_term()?));
        }
    }

    fn angle_term(&mut self) -> Result<AngleExpr, ParseError> {
        let mut lhs = self.angle_pow()?;
        loop {
            let op = match self.peek() {
                Tok::Star => AngleOp::Mul,
                Tok::Slash => AngleOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = AngleExpr::Bin(op, Box::new(lhs), Box::new(self.angle_pow()?));
        }
    }

    fn angle_pow(&mut self) -> Result<AngleExpr, ParseError> {
        let base = self.angle_unary()?;
        if self.eat(&Tok::StarStar) {
            return Ok(AngleExpr::Bin(AngleOp::Pow, Box::new(base), Box::new(self.angle_pow()?)));
        }
        Ok(base)
    }

    fn angle_unary(&mut self) -> Result<AngleExpr, ParseError> {
        match self.peek().clone() {
            Tok::Minus => {
                self.bump();
                Ok(AngleExpr::Neg(Box::new(self.angle_unary()?)))
            }
            Tok::Float(x) => {
                self.bump();
                Ok(AngleExpr::Const(x))
            }
            Tok::Int(i) => {
                self.bump();
                Ok(AngleExpr::Dim(DimExpr::Const(i)))
            }
            Tok::Ident(s) if s == "pi" => {
                self.bump();
                Ok(AngleExpr::Pi)
            }
            Tok::Ident(s) if s == "phases" && self.peek_at(1) == &Tok::LBracket => {
                self.bump();
                self.bump();
                let k = self.dim()?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(AngleExpr::Schedule(k))
            }
            Tok::Ident(_) => Ok(AngleExpr::Dim(DimExpr::Var(self.ident()?))),
            Tok::LParen => {
                self.bump();
                let a = self.angle()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(a)
            }
            _ => Err(self.error(&["angle"])),
        }
    }

    // ---- quantum expressions ----

    fn pipe(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.pred()?;
        while self.eat(&Tok::Pipe) {
            let stage = if self.is_kw("repeat") { self.repeat()? } else { self.pred()? };
            lhs = Expr::apply(stage, lhs);
        }
        Ok(lhs)
    }

    fn repeat(&mut self) -> Result<Expr, ParseError> {
        self.expect_kw("repeat")?;
        let var = self.ident()?;
        self.expect_kw("in")?;
        let lo = self.dim()?;
        self.expect(Tok::DotDot, "`..`")?;
        let hi = self.dim()?;
        self.expect(Tok::Colon, "`:`")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut body = vec![if self.is_kw("repeat") { self.repeat()? } else { self.pred()? }];
        while self.eat(&Tok::Pipe) {
            body.push(if self.is_kw("repeat") { self.repeat()? } else { self.pred()? });
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(Expr::Repeat { var, lo, hi, body })
    }

    fn pred(&mut self) -> Result<Expr, ParseError> {
        let start = self.span();
        let lhs = self.trans()?;
        if !self.eat(&Tok::Amp) {
            return Ok(lhs);
        }
        let rhs = self.pred()?;
        if let Some(basis) = to_basis(&lhs) {
            return Ok(Expr::Predicate { basis, func: Box::new(rhs), basis_right: false });
        }
        if let Some(basis) = to_basis(&rhs) {
            return Ok(Expr::Predicate { basis, func: Box::new(lhs), basis_right: true });
        }
        Err(self.error_msg("one side of `&` must be a basis", start))
    }

    fn trans(&mut self) -> Result<Expr, ParseError> {
        let start = self.span();
        let lhs = self.tensor()?;
        if !self.eat(&Tok::Shr) {
            return Ok(lhs);
        }
        let rhs_start = self.span();
        let rhs = self.tensor()?;
        let from = to_basis(&lhs).ok_or_else(|| self.error_msg("left side of `>>` is not a basis", start))?;
        let to = to_basis(&rhs).ok_or_else(|| self.error_msg("right side of `>>` is not a basis", rhs_start))?;
        if self.peek() == &Tok::Shr {
            return Err(self.error_msg("`>>` does not chain", self.span()));
        }
        Ok(Expr::Translate { from, to })
    }

    fn tensor(&mut self) -> Result<Expr, ParseError> {
        let first = self.prefix()?;
        if self.peek() != &Tok::Plus {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat(&Tok::Plus) {
            items.push(self.prefix()?);
        }
        Ok(normalize_tensors(&Expr::Tensor(items)))
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Tilde => {
                self.bump();
                Ok(Expr::Reverse(Box::new(self.prefix()?)))
            }
            Tok::Minus => {
                self.bump();
                Ok(Expr::Phase { angle: AngleExpr::Pi, expr: Box::new(self.prefix()?) })
            }
            Tok::Ident(s) if s == "phase" => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let angle = self.angle()?;
                self.expect(Tok::RParen, "`)`")?;
                self.expect(Tok::Star, "`*`")?;
                Ok(Expr::Phase { angle, expr: Box::new(self.prefix()?) })
            }
            _ => self.postfix(),
        }
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary()?;
        loop {
            match self.peek() {
                Tok::LBracket if self.peek_at(1) == &Tok::LBracket => {
                    let span = self.span();
                    let Expr::Variable(name) = e else {
                        return Err(self.error_msg("only names can be instantiated", span));
                    };
                    self.bump();
                    self.bump();
                    let args = self.inst_args()?;
                    self.expect(Tok::RBracket, "`]]`")?;
                    self.expect(Tok::RBracket, "`]]`")?;
                    e = Expr::Instantiate { name, args };
                }
                Tok::LBracket => {
                    self.bump();
                    let n = self.dim()?;
                    self.expect(Tok::RBracket, "`]`")?;
                    e = match e {
                        Expr::QubitLiteral { symbols, fold: DimExpr::Const(1) } => {
                            Expr::QubitLiteral { symbols, fold: n }
                        }
                        other => Expr::Fold { expr: Box::new(other), count: n },
                    };
                }
                Tok::Dot => {
                    self.bump();
                    e = self.method(e)?;
                }
                _ => return Ok(e),
            }
        }
    }

    fn method(&mut self, recv: Expr) -> Result<Expr, ParseError> {
        let span = self.span();
        let Tok::Ident(name) = self.peek().clone() else {
            return Err(self.error(&["method name"]));
        };
        self.bump();
        let basis = |p: &Parser| {
            to_basis(&recv).ok_or_else(|| p.error_msg(format!("`.{name}` needs a basis"), span))
        };
        Ok(match name.as_str() {
            "measure" => Expr::Measure(basis(self)?),
            "flip" => Expr::Sugar(Sugar::Flip(basis(self)?)),
            "rotate" => {
                let b = basis(self)?;
                self.expect(Tok::LParen, "`(`")?;
                let a = self.angle()?;
                self.expect(Tok::RParen, "`)`")?;
                Expr::Sugar(Sugar::Rotate(b, a))
            }
            "prep" => Expr::Sugar(Sugar::Prep(Box::new(recv))),
            "xor_embed" => Expr::Embed { kind: EmbedKind::Xor, func: Box::new(recv), inverse: None },
            "phase" => Expr::Embed { kind: EmbedKind::Phase, func: Box::new(recv), inverse: None },
            "inplace" => {
                self.expect(Tok::LParen, "`(`")?;
                let inv = self.postfix()?;
                self.expect(Tok::RParen, "`)`")?;
                Expr::Embed { kind: EmbedKind::InPlace, func: Box::new(recv), inverse: Some(Box::new(inv)) }
            }
            _ => {
                return Err(ParseError {
                    code: ErrorCode::ParseError,
                    message: format!("unknown method `.{name}`"),
                    span,
                    expected: ["measure", "flip", "rotate", "prep", "xor_embed", "phase", "inplace"]
                        .iter()
                        .map(|s| s.to_string())
                        .collect(),
                })
            }
        })
    }

    fn inst_args(&mut self) -> Result<Vec<InstArg>, ParseError> {
        let mut args = Vec::new();
        loop {
            if self.eat(&Tok::Ellipsis) {
                args.push(InstArg::Free);
            } else if matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::Eq {
                let key = self.ident()?;
                self.bump();
                if matches!(self.peek(), Tok::Int(_) | Tok::LParen) {
                    args.push(InstArg::NamedDim(key, self.dim()?));
                } else {
                    args.push(InstArg::Named(key, self.postfix()?));
                }
            } else {
                args.push(InstArg::Dim(self.dim()?));
            }
            if !self.eat(&Tok::Comma) {
                return Ok(args);
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let tok = self.peek().clone();
        match tok {
            Tok::Qubits(s) => {
                self.bump();
                Ok(Expr::QubitLiteral { symbols: s, fold: DimExpr::Const(1) })
            }
            Tok::Bits(b) => {
                self.bump();
                Ok(Expr::BitLiteral(b))
            }
            Tok::LParen => {
                self.bump();
                if self.eat(&Tok::RParen) {
                    return Ok(Expr::Unit);
                }
                let e = self.pipe()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::LBrace => {
                self.bump();
                let mut vectors = Vec::new();
                loop {
                    let span = self.span();
                    let v = self.prefix()?;
                    vectors.push(to_vector(&v).ok_or_else(|| self.error_msg("expected a basis vector", span))?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBrace, "`}`")?;
                Ok(Expr::Basis(BasisExpr::Literal(vectors)))
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(match s.as_str() {
                    "id" => Expr::BuiltIn(BuiltIn::Id),
                    "discard" => Expr::BuiltIn(BuiltIn::Discard),
                    "discardz" => Expr::BuiltIn(BuiltIn::DiscardZ),
                    "std" => Expr::Basis(BasisExpr::Std),
                    "pm" => Expr::Basis(BasisExpr::Pm),
                    "ij" => Expr::Basis(BasisExpr::Ij),
                    "fourier" => {
                        self.expect(Tok::LBracket, "`[`")?;
                        let n = self.dim()?;
                        self.expect(Tok::RBracket, "`]`")?;
                        Expr::Basis(BasisExpr::Fourier(n))
                    }
                    _ if KEYWORDS.contains(&s.as_str()) => {
                        self.pos -= 1;
                        return Err(self.error(&["expression"]));
                    }
                    _ => Expr::Variable(s),
                })
            }
            _ => Err(self.error(&["expression"])),
        }
    }

    // ---- classical expressions ----

    fn cexpr(&mut self) -> Result<ClassicalExpr, ParseError> {
        let mut lhs = self.cxor()?;
        while self.eat(&Tok::Pipe) {
            lhs = ClassicalExpr::Binary(BitOp::Or, Box::new(lhs), Box::new(self.cxor()?));
        }
        Ok(lhs)
    }

    fn cxor(&mut self) -> Result<ClassicalExpr, ParseError> {
        let mut lhs = self.cand()?;
        while self.eat(&Tok::Caret) {
            lhs = ClassicalExpr::Binary(BitOp::Xor, Box::new(lhs), Box::new(self.cand()?));
        }
        Ok(lhs)
    }

    fn cand(&mut self) -> Result<ClassicalExpr, ParseError> {
        let mut lhs = self.cunary()?;
        while self.eat(&Tok::Amp) {
            lhs = ClassicalExpr::Binary(BitOp::And, Box::new(lhs), Box::new(self.cunary()?));
        }
        Ok(lhs)
    }

    fn cunary(&mut self) -> Result<ClassicalExpr, ParseError> {
        if self.eat(&Tok::Tilde) {
            return Ok(ClassicalExpr::Not(Box::new(self.cunary()?)));
        }
        self.cpostfix()
    }

    fn cpostfix(&mut self) -> Result<ClassicalExpr, ParseError> {
        let mut e = self.cprimary()?;
        loop {
            if self.eat(&Tok::LBracket) {
                let a = self.dim()?;
                if self.eat(&Tok::Colon) {
                    let b = self.dim()?;
                    self.expect(Tok::RBracket, "`]`")?;
                    e = ClassicalExpr::Slice(Box::new(e), a, b);
                } else {
                    self.expect(Tok::RBracket, "`]`")?;
                    e = ClassicalExpr::Index(Box::new(e), a);
                }
            } else if self.eat(&Tok::Dot) {
                let span = self.span();
                let name = match self.bump() {
                    Tok::Ident(s) => s,
                    _ => return Err(self.error_msg("expected method name", span)),
                };
                self.expect(Tok::LParen, "`(`")?;
                let b = Box::new(e);
                e = match name.as_str() {
                    "xor_reduce" => ClassicalExpr::Reduce(ReduceOp::Xor, b),
                    "and_reduce" => ClassicalExpr::Reduce(ReduceOp::And, b),
                    "or_reduce" => ClassicalExpr::Reduce(ReduceOp::Or, b),
                    "rotl" | "rotr" => {
                        let dynamic = match self.peek() {
                            Tok::Ident(s) => self.classical_names.contains(s),
                            Tok::Bits(_) | Tok::Tilde => true,
                            _ => false,
                        };
                        let amount = if dynamic {
                            RotateAmount::Dynamic(Box::new(self.cexpr()?))
                        } else {
                            RotateAmount::Static(self.dim()?)
                        };
                        ClassicalExpr::Rotate { left: name == "rotl", expr: b, amount }
                    }
                    "zext" => ClassicalExpr::ZeroExtend(b, self.dim()?),
                    "repeat" => ClassicalExpr::Repeat(b, self.dim()?),
                    "eq" => ClassicalExpr::EqConst(b, self.dim()?),
                    "mul_mod" => {
                        let factor = self.dim()?;
                        self.expect(Tok::Comma, "`,`")?;
                        let modulus = self.dim()?;
                        ClassicalExpr::MulMod { expr: b, factor, modulus }
                    }
                    _ => return Err(self.error_msg(format!("unknown bit method `.{name}`"), span)),
                };
                self.expect(Tok::RParen, "`)`")?;
            } else {
                return Ok(e);
            }
        }
    }

    fn cprimary(&mut self) -> Result<ClassicalExpr, ParseError> {
        match self.peek().clone() {
            Tok::Bits(b) => {
                self.bump();
                Ok(ClassicalExpr::Const(b))
            }
            Tok::LParen => {
                self.bump();
                let e = self.cexpr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "concat" => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let mut parts = vec![self.cexpr()?];
                while self.eat(&Tok::Comma) {
                    parts.push(self.cexpr()?);
                }
                self.expect(Tok::RParen, "`)`")?;
                Ok(ClassicalExpr::Concat(parts))
            }
            Tok::Ident(_) => Ok(ClassicalExpr::Input(self.ident()?)),
            _ => Err(self.error(&["bit expression"])),
        }
    }
}

fn carries_qubits(t: &TypeExpr) -> bool {
    match t {
        TypeExpr::Qubit => true,
        TypeExpr::Tensor(items) => items.iter().any(|(t, _)| carries_qubits(t)),
        _ => false,
    }
}

fn to_vector(e: &Expr) -> Option<BasisVector> {
    match e {
        Expr::QubitLiteral { symbols, fold } => {
            Some(BasisVector { phase: None, symbols: symbols.clone(), fold: fold.clone() })
        }
        Expr::Phase { angle, expr } => {
            let mut v = to_vector(expr)?;
            v.phase = Some(match v.phase {
                None => angle.clone(),
                Some(inner) => AngleExpr::Bin(AngleOp::Add, Box::new(angle.clone()), Box::new(inner)),
            });
            Some(v)
        }
        _ => None,
    }
}

/// Reads an expression in basis position. Qubit literals become singleton
/// bases.
pub fn to_basis(e: &Expr) -> Option<BasisExpr> {
    match e {
        Expr::Basis(b) => Some(b.clone()),
        Expr::QubitLiteral { .. } | Expr::Phase { .. } => Some(BasisExpr::Literal(vec![to_vector(e)?])),
        Expr::Tensor(items) => {
            Some(BasisExpr::Tensor(items.iter().map(to_basis).collect::<Option<Vec<_>>>()?))
        }
        Expr::Fold { expr, count } => Some(BasisExpr::Fold(Box::new(to_basis(expr)?), count.clone())),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(s: &str) -> Expr {
        Expr::QubitLiteral { symbols: s.into(), fold: DimExpr::Const(1) }
    }

    #[test]
    fn pipe_is_left_associative_application() {
        let e = parse_expr("'0' | id | discard").unwrap();
        assert_eq!(
            e,
            Expr::apply(Expr::BuiltIn(BuiltIn::Discard), Expr::apply(Expr::BuiltIn(BuiltIn::Id), lit("0")))
        );
    }

    #[test]
    fn tensor_binds_tighter_than_translation_and_predication() {
        let e = parse_expr("'1' + std & std.flip").unwrap();
        let Expr::Predicate { basis, func, basis_right } = e else { panic!("{e:?}") };
        assert!(!basis_right);
        assert_eq!(
            basis,
            BasisExpr::Tensor(vec![
                BasisExpr::Literal(vec![BasisVector { phase: None, symbols: "1".into(), fold: DimExpr::Const(1) }]),
                BasisExpr::Std
            ])
        );
        assert_eq!(*func, Expr::Sugar(Sugar::Flip(BasisExpr::Std)));
    }

    #[test]
    fn mirrored_predicate() {
        let e = parse_expr("std.flip & '1'").unwrap();
        assert!(matches!(e, Expr::Predicate { basis_right: true, .. }));
    }

    #[test]
    fn negation_is_phase_pi() {
        let e = parse_expr("'+'[3] >> -'+'[3]").unwrap();
        let Expr::Translate { to, .. } = e else { panic!() };
        assert_eq!(
            to,
            BasisExpr::Literal(vec![BasisVector {
                phase: Some(AngleExpr::Pi),
                symbols: "+".into(),
                fold: DimExpr::Const(3)
            }])
        );
    }

    #[test]
    fn instantiation_arguments() {
        let e = parse_expr("mult[[X, 4, ..., f=g[[2]], s=0b10]]").unwrap();
        let Expr::Instantiate { name, args } = e else { panic!() };
        assert_eq!(name, "mult");
        assert_eq!(args.len(), 5);
        assert_eq!(args[2], InstArg::Free);
        assert!(matches!(&args[3], InstArg::Named(k, Expr::Instantiate { .. }) if k == "f"));
        assert_eq!(args[4], InstArg::Named("s".into(), Expr::BitLiteral(vec![true, false])));
    }

    #[test]
    fn repeat_stage() {
        let e = parse_expr("'0' | repeat j in 0..N: (id | std.flip)").unwrap();
        let Expr::Apply { func, .. } = e else { panic!() };
        let Expr::Repeat { var, body, .. } = *func else { panic!() };
        assert_eq!(var, "j");
        assert_eq!(body.len(), 2);
    }

    #[test]
    fn definitions_and_captures() {
        let src = "
            classical f[N](secret: bit[N]; x: bit[N]) -> bit: (x & secret).xor_reduce()
            qpu kernel[N](f: cfunc[N,1]) -> bit[N]: '+'[N] | f.phase | pm[N] >> std[N] | std[N].measure
        ";
        let p = parse_program(src).unwrap();
        assert_eq!(p.defs.len(), 2);
        assert_eq!(p.defs[0].captures.len(), 1);
        assert_eq!(p.defs[0].params.len(), 1);
        assert_eq!(p.defs[1].captures[0].name, "f");
        assert!(p.defs[1].params.is_empty());
        assert_eq!(p.defs[1].span.line, 3);
    }

    #[test]
    fn dynamic_rotation_amount() {
        let src = "classical s[K,N](k: bit[K], h: bit[N]) -> bit[N]: h.rotl(k)";
        let p = parse_program(src).unwrap();
        let Body::Classical(ClassicalExpr::Rotate { amount, .. }) = &p.defs[0].body else { panic!() };
        assert!(matches!(amount, RotateAmount::Dynamic(_)));
        let src = "classical s[K,N](h: bit[N]) -> bit[N]: h.rotl(K)";
        let p = parse_program(src).unwrap();
        let Body::Classical(ClassicalExpr::Rotate { amount, .. }) = &p.defs[0].body else { panic!() };
        assert!(matches!(amount, RotateAmount::Static(DimExpr::Var(_))));
    }

    #[test]
    fn parse_error_carries_expected_set() {
        let err = parse_program("qpu k() -> qubit '0'").unwrap_err();
        assert_eq!(err.code, ErrorCode::ParseError);
        assert_eq!(err.expected, vec!["`:`".to_string()]);
        assert_eq!(err.span.col, 18);
    }

    #[test]
    fn pragmas() {
        let p = parse_program("#@ entry kernel\n#@ set N=4\n#@ arg f=g\nqpu kernel() -> qubit: '0'").unwrap();
        assert_eq!(p.pragmas.entry.as_deref(), Some("kernel"));
        assert_eq!(p.pragmas.dims, vec![("N".into(), "4".into())]);
        assert_eq!(p.pragmas.args, vec![("f".into(), "g".into())]);
    }
}
