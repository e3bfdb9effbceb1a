//! Tokenizer shared by the RTL and SVA parsers.

use super::ast::{mask, Base, Literal, SourceSpan};
use super::RtlError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    /// `$name`
    SysIdent(String),
    /// `` `name ``
    Macro(String),
    Number(Literal),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

impl Token {
    pub fn describe(&self) -> String {
        match &self.tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::SysIdent(s) => format!("`${s}`"),
            Tok::Macro(s) => format!("`` `{s} ``"),
            Tok::Number(_) => "number".to_string(),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

// Longest first.
const SYMBOLS: &[&str] = &[
    "|->", "|=>", "===", "!==", "==?", "!=?", "<<<", ">>>", "##", "==", "!=", "<=", ">=", "&&",
    "||", "<<", ">>", "~&", "~|", "~^", "^~", "**", "(", ")", "[", "]", "{", "}", ";", ":", ",",
    ".", "#", "@", "=", "<", ">", "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "?", "'",
];

struct Cursor<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<u8> {
        self.src.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn here(&self) -> (u32, u32) {
        (self.line, self.col)
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s.as_bytes())
    }
}

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'$'
}

/// Tokenize `text`. `origin` is only used in error messages.
pub fn lex(text: &str, origin: &str) -> Result<Vec<Token>, RtlError> {
    let mut cur = Cursor {
        src: text.as_bytes(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        skip_trivia(&mut cur, origin)?;
        let start = cur.here();
        let Some(c) = cur.peek() else {
            out.push(Token {
                tok: Tok::Eof,
                span: SourceSpan::new(start, start),
            });
            return Ok(out);
        };
        let tok = if is_ident_start(c) {
            Tok::Ident(take_while(&mut cur, is_ident_char))
        } else if c == b'$' && cur.peek_at(1).is_some_and(is_ident_start) {
            cur.bump();
            Tok::SysIdent(take_while(&mut cur, is_ident_char))
        } else if c == b'`' {
            cur.bump();
            let name = take_while(&mut cur, is_ident_char);
            if name.is_empty() {
                return Err(syntax(origin, start, cur.here(), "macro name"));
            }
            Tok::Macro(name)
        } else if c.is_ascii_digit() {
            lex_number(&mut cur, origin, start)?
        } else if c == b'\''
            && cur
                .peek_at(1)
                .is_some_and(|b| b"bodhBODHsS".contains(&b))
        {
            lex_based(&mut cur, origin, start, None)?
        } else if c == b'"' {
            return Err(RtlError::UnsupportedConstruct {
                origin: origin.to_string(),
                span: SourceSpan::new(start, start),
                construct: "string literal".into(),
            });
        } else if let Some(sym) = SYMBOLS.iter().find(|s| cur.starts_with(s)) {
            for _ in 0..sym.len() {
                cur.bump();
            }
            Tok::Sym(sym)
        } else {
            cur.bump();
            return Err(syntax(origin, start, cur.here(), "a token"));
        };
        out.push(Token {
            tok,
            span: SourceSpan::new(start, cur.here()),
        });
    }
}

fn syntax(origin: &str, start: (u32, u32), end: (u32, u32), expected: &str) -> RtlError {
    RtlError::Syntax {
        origin: origin.to_string(),
        span: SourceSpan::new(start, end),
        expected: vec![expected.to_string()],
        found: "unexpected character".to_string(),
    }
}

fn take_while(cur: &mut Cursor<'_>, pred: impl Fn(u8) -> bool) -> String {
    let start = cur.pos;
    while cur.peek().is_some_and(&pred) {
        cur.bump();
    }
    String::from_utf8_lossy(&cur.src[start..cur.pos]).into_owned()
}

fn skip_trivia(cur: &mut Cursor<'_>, origin: &str) -> Result<(), RtlError> {
    loop {
        match cur.peek() {
            Some(c) if c.is_ascii_whitespace() => {
                cur.bump();
            }
            Some(b'/') if cur.peek_at(1) == Some(b'/') => {
                while cur.peek().is_some_and(|c| c != b'\n') {
                    cur.bump();
                }
            }
            Some(b'/') if cur.peek_at(1) == Some(b'*') => {
                let start = cur.here();
                cur.bump();
                cur.bump();
                loop {
                    if cur.starts_with("*/") {
                        cur.bump();
                        cur.bump();
                        break;
                    }
                    if cur.bump().is_none() {
                        return Err(syntax(origin, start, cur.here(), "`*/`"));
                    }
                }
            }
            Some(b'`') if cur.starts_with("`timescale") => {
                while cur.peek().is_some_and(|c| c != b'\n') {
                    cur.bump();
                }
            }
            _ => return Ok(()),
        }
    }
}

fn lex_number(cur: &mut Cursor<'_>, origin: &str, start: (u32, u32)) -> Result<Tok, RtlError> {
    let digits = take_while(cur, |c| c.is_ascii_digit() || c == b'_');
    let clean: String = digits.chars().filter(|c| *c != '_').collect();
    // Size prefix of a based literal, allowing whitespace before the tick.
    let save = (cur.pos, cur.line, cur.col);
    while cur.peek().is_some_and(|c| c == b' ' || c == b'\t') {
        cur.bump();
    }
    if cur.peek() == Some(b'\'')
        && cur
            .peek_at(1)
            .is_some_and(|b| b"bodhBODHsS".contains(&b))
    {
        let width: u32 = clean
            .parse()
            .ok()
            .filter(|w| (1..=64).contains(w))
            .ok_or_else(|| RtlError::UnsupportedConstruct {
                origin: origin.to_string(),
                span: SourceSpan::new(start, cur.here()),
                construct: format!("literal width {clean}"),
            })?;
        return lex_based(cur, origin, start, Some(width));
    }
    (cur.pos, cur.line, cur.col) = save;
    let value: u64 = clean.parse().map_err(|_| RtlError::UnsupportedConstruct {
        origin: origin.to_string(),
        span: SourceSpan::new(start, cur.here()),
        construct: "integer literal wider than 64 bits".into(),
    })?;
    Ok(Tok::Number(Literal {
        width: None,
        base: Base::Dec,
        value,
        wildcard: 0,
    }))
}

fn lex_based(
    cur: &mut Cursor<'_>,
    origin: &str,
    start: (u32, u32),
    width: Option<u32>,
) -> Result<Tok, RtlError> {
    cur.bump(); // tick
    if matches!(cur.peek(), Some(b's' | b'S')) {
        return Err(RtlError::UnsupportedConstruct {
            origin: origin.to_string(),
            span: SourceSpan::new(start, cur.here()),
            construct: "signed literal".into(),
        });
    }
    let base = match cur.bump().map(|c| c.to_ascii_lowercase()) {
        Some(b'b') => Base::Bin,
        Some(b'o') => Base::Oct,
        Some(b'd') => Base::Dec,
        Some(b'h') => Base::Hex,
        _ => unreachable!("caller checked base character"),
    };
    while cur.peek().is_some_and(|c| c == b' ' || c == b'\t') {
        cur.bump();
    }
    let digits = take_while(cur, |c| c.is_ascii_hexdigit() || b"_?zZxX".contains(&c));
    if digits.is_empty() {
        return Err(syntax(origin, start, cur.here(), "literal digits"));
    }
    let bits_per = match base {
        Base::Bin => 1,
        Base::Oct => 3,
        Base::Hex => 4,
        Base::Dec => 0,
    };
    let unsupported = |what: &str, cur: &Cursor<'_>| RtlError::UnsupportedConstruct {
        origin: origin.to_string(),
        span: SourceSpan::new(start, cur.here()),
        construct: what.to_string(),
    };
    let mut value: u128 = 0;
    let mut wildcard: u128 = 0;
    for ch in digits.chars().filter(|c| *c != '_') {
        let ch = ch.to_ascii_lowercase();
        if ch == 'x' {
            return Err(unsupported("x literal bits", cur));
        }
        if base == Base::Dec {
            let d = ch.to_digit(10).ok_or_else(|| unsupported("wildcard in decimal literal", cur))?;
            value = value * 10 + d as u128;
        } else if ch == '?' || ch == 'z' {
            value <<= bits_per;
            wildcard = (wildcard << bits_per) | ((1u128 << bits_per) - 1);
        } else {
            let d = ch
                .to_digit(1 << bits_per)
                .ok_or_else(|| syntax(origin, start, cur.here(), "valid literal digit"))?;
            value = (value << bits_per) | d as u128;
            wildcard <<= bits_per;
        }
        if value > u64::MAX as u128 || wildcard > u64::MAX as u128 {
            return Err(unsupported("literal wider than 64 bits", cur));
        }
    }
    let m = mask(width.unwrap_or(64));
    Ok(Tok::Number(Literal {
        width,
        base,
        value: value as u64 & m,
        wildcard: wildcard as u64 & m,
    }))
}
