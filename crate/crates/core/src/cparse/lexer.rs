use super::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    Punct(&'static str),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Real(v) => format!("`{v:?}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: u32,
    pub column: u32,
}

// Longest first so that `<=` wins over `<`.
const PUNCTS: &[&str] = &[
    "&&", "||", "<=", ">=", "==", "!=", "(", ")", "{", "}", ",", ";", "=", "+", "-", "*", "/", "<",
    ">", "!", "?", ":",
];

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut line_start = 0usize;

    while i < bytes.len() {
        let c = bytes[i];
        let column = (i - line_start + 1) as u32;
        if c == b'\n' {
            line += 1;
            i += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if src[i..].starts_with("/*") {
            let Some(end) = src[i + 2..].find("*/") else {
                return Err(ParseError::new(line, column, ["`*/`"], "end of input"));
            };
            for (k, b) in bytes[i..i + 2 + end + 2].iter().enumerate() {
                if *b == b'\n' {
                    line += 1;
                    line_start = i + k + 1;
                }
            }
            i += end + 4;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            toks.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                line,
                column,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let (tok, len) = lex_number(&src[i..]).ok_or_else(|| {
                ParseError::new(
                    line,
                    column,
                    ["number"],
                    &format!("`{}`", &src[i..(i + 1).min(src.len())]),
                )
            })?;
            toks.push(Token { tok, line, column });
            i += len;
            continue;
        }
        match PUNCTS.iter().find(|p| src[i..].starts_with(**p)) {
            Some(p) => {
                toks.push(Token {
                    tok: Tok::Punct(p),
                    line,
                    column,
                });
                i += p.len();
            }
            None => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError::new(line, column, ["token"], &format!("`{ch}`")));
            }
        }
    }
    let column = (bytes.len() - line_start + 1) as u32;
    toks.push(Token {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(toks)
}

fn lex_number(s: &str) -> Option<(Tok, usize)> {
    let b = s.as_bytes();
    if s.starts_with("0x") || s.starts_with("0X") {
        let mut end = 2;
        while end < b.len() && b[end].is_ascii_hexdigit() {
            end += 1;
        }
        let value = i64::from_str_radix(&s[2..end], 16).ok()?;
        if end < b.len() && (b[end].is_ascii_alphanumeric() || b[end] == b'_') {
            return None;
        }
        return Some((Tok::Int(value), end));
    }
    let mut end = 0;
    let mut is_real = false;
    while end < b.len() && b[end].is_ascii_digit() {
        end += 1;
    }
    if end < b.len() && b[end] == b'.' {
        is_real = true;
        end += 1;
        while end < b.len() && b[end].is_ascii_digit() {
            end += 1;
        }
    }
    if end < b.len() && (b[end] == b'e' || b[end] == b'E') {
        let mut k = end + 1;
        if k < b.len() && (b[k] == b'+' || b[k] == b'-') {
            k += 1;
        }
        if k < b.len() && b[k].is_ascii_digit() {
            while k < b.len() && b[k].is_ascii_digit() {
                k += 1;
            }
            is_real = true;
            end = k;
        }
    }
    let text = &s[..end];
    let mut len = end;
    if end < b.len() && (b[end] == b'f' || b[end] == b'F') {
        is_real = true;
        len += 1;
    }
    if len < b.len() && (b[len].is_ascii_alphanumeric() || b[len] == b'_') {
        return None;
    }
    let tok = if is_real {
        Tok::Real(text.parse().ok()?)
    } else {
        Tok::Int(text.parse().ok()?)
    };
    Some((tok, len))
}
