use std::fmt;

use crate::syntax::Span;

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    /// Contents of a single-quoted qubit literal.
    Qubits(String),
    /// `0b...` literal, most significant bit first.
    Bits(Vec<bool>),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Semi,
    Dot,
    DotDot,
    Ellipsis,
    Plus,
    Minus,
    Star,
    StarStar,
    Slash,
    Percent,
    Pipe,
    Amp,
    Caret,
    Tilde,
    Shr,
    Arrow,
    Eq,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Float(x) => write!(f, "`{x}`"),
            Tok::Qubits(s) => write!(f, "`'{s}'`"),
            Tok::Bits(b) => {
                write!(f, "`0b")?;
                for bit in b {
                    write!(f, "{}", u8::from(*bit))?;
                }
                write!(f, "`")
            }
            Tok::Eof => write!(f, "end of input"),
            other => write!(f, "`{}`", punct(other)),
        }
    }
}

pub fn punct(t: &Tok) -> &'static str {
    match t {
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBracket => "[",
        Tok::RBracket => "]",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::Comma => ",",
        Tok::Colon => ":",
        Tok::Semi => ";",
        Tok::Dot => ".",
        Tok::DotDot => "..",
        Tok::Ellipsis => "...",
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Star => "*",
        Tok::StarStar => "**",
        Tok::Slash => "/",
        Tok::Percent => "%",
        Tok::Pipe => "|",
        Tok::Amp => "&",
        Tok::Caret => "^",
        Tok::Tilde => "~",
        Tok::Shr => ">>",
        Tok::Arrow => "->",
        Tok::Eq => "=",
        _ => "?",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub const QUBIT_SYMBOLS: &str = "01+-ij";

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut line_start = 0;
    let span_at = |start: usize, end: usize, line: usize, line_start: usize| Span {
        start,
        end,
        line,
        col: start - line_start + 1,
    };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c == b'\n' {
            i += 1;
            line += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(src[start..i].to_string())
        } else if c == b'0' && bytes.get(i + 1) == Some(&b'b') {
            i += 2;
            let digits = i;
            while i < bytes.len() && (bytes[i] == b'0' || bytes[i] == b'1') {
                i += 1;
            }
            if i == digits || bytes.get(i).is_some_and(|b| b.is_ascii_alphanumeric()) {
                return Err(ParseError::lex(
                    "malformed bit literal",
                    span_at(start, i.max(start + 2), line, line_start),
                ));
            }
            Tok::Bits(bytes[digits..i].iter().map(|b| *b == b'1').collect())
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let mut float = false;
            if bytes.get(i) == Some(&b'.') && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit()) {
                float = true;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if matches!(bytes.get(i), Some(b'e' | b'E')) {
                let mut j = i + 1;
                if matches!(bytes.get(j), Some(b'+' | b'-')) {
                    j += 1;
                }
                if bytes.get(j).is_some_and(|b| b.is_ascii_digit()) {
                    float = true;
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let sp = span_at(start, i, line, line_start);
            if float {
                Tok::Float(text.parse().map_err(|_| ParseError::lex("malformed number", sp))?)
            } else {
                Tok::Int(text.parse().map_err(|_| ParseError::lex("integer out of range", sp))?)
            }
        } else if c == b'\'' {
            i += 1;
            let body = i;
            while i < bytes.len() && bytes[i] != b'\'' && bytes[i] != b'\n' {
                i += 1;
            }
            if bytes.get(i) != Some(&b'\'') {
                return Err(ParseError::lex(
                    "unterminated qubit literal",
                    span_at(start, i, line, line_start),
                ));
            }
            let text = &src[body..i];
            i += 1;
            if text.is_empty() {
                return Err(ParseError::lex("empty qubit literal", span_at(start, i, line, line_start)));
            }
            if let Some(bad) = text.chars().find(|ch| !QUBIT_SYMBOLS.contains(*ch)) {
                return Err(ParseError::lex(
                    format!("invalid qubit symbol `{bad}` (expected one of 0 1 + - i j)"),
                    span_at(start, i, line, line_start),
                ));
            }
            Tok::Qubits(text.to_string())
        } else {
            let two = bytes.get(i + 1).copied();
            let three = bytes.get(i + 2).copied();
            let (tok, len) = match (c, two, three) {
                (b'.', Some(b'.'), Some(b'.')) => (Tok::Ellipsis, 3),
                (b'.', Some(b'.'), _) => (Tok::DotDot, 2),
                (b'*', Some(b'*'), _) => (Tok::StarStar, 2),
                (b'>', Some(b'>'), _) => (Tok::Shr, 2),
                (b'-', Some(b'>'), _) => (Tok::Arrow, 2),
                (b'(', ..) => (Tok::LParen, 1),
                (b')', ..) => (Tok::RParen, 1),
                (b'[', ..) => (Tok::LBracket, 1),
                (b']', ..) => (Tok::RBracket, 1),
                (b'{', ..) => (Tok::LBrace, 1),
                (b'}', ..) => (Tok::RBrace, 1),
                (b',', ..) => (Tok::Comma, 1),
                (b':', ..) => (Tok::Colon, 1),
                (b';', ..) => (Tok::Semi, 1),
                (b'.', ..) => (Tok::Dot, 1),
                (b'+', ..) => (Tok::Plus, 1),
                (b'-', ..) => (Tok::Minus, 1),
                (b'*', ..) => (Tok::Star, 1),
                (b'/', ..) => (Tok::Slash, 1),
                (b'%', ..) => (Tok::Percent, 1),
                (b'|', ..) => (Tok::Pipe, 1),
                (b'&', ..) => (Tok::Amp, 1),
                (b'^', ..) => (Tok::Caret, 1),
                (b'~', ..) => (Tok::Tilde, 1),
                (b'=', ..) => (Tok::Eq, 1),
                _ => {
                    let ch = src[i..].chars().next().unwrap();
                    return Err(ParseError::lex(
                        format!("unexpected character `{ch}`"),
                        span_at(start, i + ch.len_utf8(), line, line_start),
                    ));
                }
            };
            i += len;
            tok
        };
        out.push(Token { tok, span: span_at(start, i, line, line_start) });
    }
    out.push(Token { tok: Tok::Eof, span: span_at(i, i, line, line_start) });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn ranges_and_floats() {
        assert_eq!(
            toks("0..M 1.5 2e3 ..."),
            vec![
                Tok::Int(0),
                Tok::DotDot,
                Tok::Ident("M".into()),
                Tok::Float(1.5),
                Tok::Float(2000.0),
                Tok::Ellipsis,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn qubit_and_bit_literals() {
        assert_eq!(toks("'0+j' 0b101"), vec![
            Tok::Qubits("0+j".into()),
            Tok::Bits(vec![true, false, true]),
            Tok::Eof
        ]);
    }

    #[test]
    fn bad_qubit_symbol_is_lex_error() {
        let err = lex("x | '0q'").unwrap_err();
        assert_eq!(err.code, crate::error::ErrorCode::LexError);
        assert_eq!(err.span.col, 5);
    }

    #[test]
    fn comments_are_skipped_and_lines_tracked() {
        let t = lex("# hi\n  id").unwrap();
        assert_eq!(t[0].tok, Tok::Ident("id".into()));
        assert_eq!((t[0].span.line, t[0].span.col), (2, 3));
    }
}
