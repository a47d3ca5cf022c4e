//! Tokenizer for the surface language. Unicode operators and their ASCII
//! spellings produce the same tokens.

use super::error::FrontendError;
use super::ast::Span;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Num(f64, bool),
    Str(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Semi,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Bar,
    Hash,
    Nabla,
    NablaCross,
    NablaDot,
    NablaOuter,
    Dot,
    Outer,
    Cross,
    Conv,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(v, _) => format!("number {v}"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.symbol()),
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrack => "[",
            Tok::RBrack => "]",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Assign => "=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Bar => "|",
            Tok::Hash => "#",
            Tok::Nabla => "∇",
            Tok::NablaCross => "∇×",
            Tok::NablaDot => "∇•",
            Tok::NablaOuter => "∇⊗",
            Tok::Dot => "•",
            Tok::Outer => "⊗",
            Tok::Cross => "×",
            Tok::Conv => "⊛",
            _ => "",
        }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<(Tok, Span)>, FrontendError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        let adv = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            adv(1, &mut i, &mut col);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            let mut real = false;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                real = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    real = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<f64>().map_err(|_| FrontendError::syntax(span, format!("bad number `{text}`")))?;
            col += i - start;
            out.push((Tok::Num(v, real), span));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            out.push((Tok::Ident(text), span));
            continue;
        }
        if c == '"' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && chars[i] != '"' && chars[i] != '\n' {
                i += 1;
            }
            if i >= chars.len() || chars[i] != '"' {
                return Err(FrontendError::syntax(span, "unterminated string"));
            }
            let text: String = chars[start..i].iter().collect();
            i += 1;
            col += text.chars().count() + 2;
            out.push((Tok::Str(text), span));
            continue;
        }
        let (tok, n) = match c {
            '∇' => match chars.get(i + 1) {
                Some('×') => (Tok::NablaCross, 2),
                Some('•') => (Tok::NablaDot, 2),
                Some('⊗') => (Tok::NablaOuter, 2),
                _ => (Tok::Nabla, 1),
            },
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '[' => (Tok::LBrack, 1),
            ']' => (Tok::RBrack, 1),
            ',' => (Tok::Comma, 1),
            ';' => (Tok::Semi, 1),
            '=' => (Tok::Assign, 1),
            '+' => (Tok::Plus, 1),
            '-' | '−' => (Tok::Minus, 1),
            '*' => (Tok::Star, 1),
            '/' => (Tok::Slash, 1),
            '|' => (Tok::Bar, 1),
            '#' => (Tok::Hash, 1),
            '•' => (Tok::Dot, 1),
            '⊗' => (Tok::Outer, 1),
            '×' => (Tok::Cross, 1),
            '⊛' => (Tok::Conv, 1),
            other => return Err(FrontendError::syntax(span, format!("unexpected character `{other}`"))),
        };
        adv(n, &mut i, &mut col);
        out.push((tok, span));
    }
    out.push((Tok::Eof, Span { line, col }));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unicode_and_positions() {
        let toks = tokenize("a ∇×b\n  1.5e2").unwrap();
        assert_eq!(toks[1].0, Tok::NablaCross);
        assert_eq!(toks[3], (Tok::Num(150.0, true), Span { line: 2, col: 3 }));
    }

    #[test]
    fn bad_character() {
        assert!(matches!(tokenize("a $ b"), Err(FrontendError::Syntax { line: 1, col: 3, .. })));
    }
}
