use std::fmt;

use num_bigint::BigInt;

use super::SyntaxError;

/// 1-based source position.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(BigInt),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "integer {i}"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let mut line = 1;
    let mut col = 1;

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        match c {
            c if c.is_whitespace() => {
                bump!();
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
            }
            '{' | '}' | '(' | ')' | ';' => {
                bump!();
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    _ => Tok::Semi,
                };
                out.push(Token { tok, pos });
            }
            '"' => {
                bump!();
                let mut s = String::new();
                loop {
                    match bump!() {
                        None => {
                            return Err(SyntaxError::new(pos, "closing `\"`", "end of input"));
                        }
                        Some('"') => break,
                        Some('\\') => match bump!() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some('r') => s.push('\r'),
                            other => {
                                let found = other.map_or("end of input".to_string(), |c| format!("`\\{c}`"));
                                return Err(SyntaxError::new(Pos { line, col }, "escape sequence", found));
                            }
                        },
                        Some('\n') => {
                            return Err(SyntaxError::new(pos, "closing `\"`", "newline"));
                        }
                        Some(c) => s.push(c),
                    }
                }
                out.push(Token { tok: Tok::Str(s), pos });
            }
            '-' | '0'..='9' => {
                let mut s = String::new();
                if c == '-' {
                    s.push('-');
                    bump!();
                }
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() {
                        s.push(d);
                        bump!();
                    } else {
                        break;
                    }
                }
                if s == "-" {
                    return Err(SyntaxError::new(pos, "digit", "`-`"));
                }
                if let Some(&d) = chars.peek() {
                    if d.is_ascii_alphabetic() || d == '_' {
                        return Err(SyntaxError::new(Pos { line, col }, "separator after number", format!("`{d}`")));
                    }
                }
                let n: BigInt = s.parse().expect("digits");
                out.push(Token { tok: Tok::Int(n), pos });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' || d == '.' {
                        s.push(d);
                        bump!();
                    } else {
                        break;
                    }
                }
                out.push(Token { tok: Tok::Ident(s), pos });
            }
            other => {
                return Err(SyntaxError::new(pos, "token", format!("`{other}`")));
            }
        }
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(out)
}
