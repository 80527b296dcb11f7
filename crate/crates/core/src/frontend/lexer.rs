//! Hand-rolled lexer. Recognizes the C subset's tokens and rejects tokens
//! that belong to constructs outside the language (floats, arrays, member
//! access) with a positioned error.

use super::error::FrontendError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i32),
    KwInt,
    KwVoid,
    KwIf,
    KwElse,
    KwWhile,
    KwGoto,
    KwReturn,
    KwAssert,
    KwAssume,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Shl,
    Shr,
    Lt,
    Gt,
    Le,
    Ge,
    EqEq,
    Ne,
    Amp,
    Caret,
    Pipe,
    Tilde,
    Bang,
    AndAnd,
    OrOr,
    Assign,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Comma,
    Colon,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

/// Keywords for constructs the language deliberately leaves out. Seeing one
/// is an `Unsupported` error rather than a generic syntax error.
const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "struct", "union", "enum", "float", "double", "char", "long", "short",
    "unsigned", "signed", "for", "do", "switch", "case", "break", "continue",
    "sizeof", "static", "extern", "const", "typedef",
];

pub fn lex(src: &str) -> Result<Vec<Token>, FrontendError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! push {
        ($tok:expr, $len:expr, $l:expr, $c:expr) => {{
            out.push(Token { tok: $tok, line: $l, col: $c });
            i += $len;
            col += $len as u32;
        }};
    }

    while i < bytes.len() {
        let b = bytes[i];
        let (l, c) = (line, col);
        match b {
            b'\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            b' ' | b'\t' | b'\r' => {
                i += 1;
                col += 1;
            }
            b'/' if i + 1 < bytes.len() && bytes[i + 1] == b'/' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'/' if i + 1 < bytes.len() && bytes[i + 1] == b'*' => {
                i += 2;
                col += 2;
                loop {
                    if i + 1 >= bytes.len() {
                        return Err(FrontendError::syntax(l, c, "unterminated block comment"));
                    }
                    if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                        i += 2;
                        col += 2;
                        break;
                    }
                    if bytes[i] == b'\n' {
                        line += 1;
                        col = 1;
                    } else {
                        col += 1;
                    }
                    i += 1;
                }
            }
            b'0'..=b'9' => {
                // Wrapping accumulation: literals take their two's-complement
                // 32-bit value, so 2147483648 reads as -2147483648.
                let mut v: u32 = 0;
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    v = v.wrapping_mul(10).wrapping_add((bytes[i] - b'0') as u32);
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    return Err(FrontendError::unsupported(l, c, "floating-point literal"));
                }
                col += (i - start) as u32;
                out.push(Token { tok: Tok::Int(v as i32), line: l, col: c });
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                let word = &src[start..i];
                col += (i - start) as u32;
                let tok = match word {
                    "int" => Tok::KwInt,
                    "void" => Tok::KwVoid,
                    "if" => Tok::KwIf,
                    "else" => Tok::KwElse,
                    "while" => Tok::KwWhile,
                    "goto" => Tok::KwGoto,
                    "return" => Tok::KwReturn,
                    "assert" => Tok::KwAssert,
                    "assume" => Tok::KwAssume,
                    w if UNSUPPORTED_KEYWORDS.contains(&w) => {
                        return Err(FrontendError::unsupported(l, c, format!("'{w}'")));
                    }
                    _ => Tok::Ident(word.to_string()),
                };
                out.push(Token { tok, line: l, col: c });
            }
            b'+' => push!(Tok::Plus, 1, l, c),
            b'-' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'>' {
                    return Err(FrontendError::unsupported(l, c, "'->' member access"));
                }
                push!(Tok::Minus, 1, l, c)
            }
            b'*' => push!(Tok::Star, 1, l, c),
            b'/' => push!(Tok::Slash, 1, l, c),
            b'%' => push!(Tok::Percent, 1, l, c),
            b'<' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'<' {
                    push!(Tok::Shl, 2, l, c)
                } else if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    push!(Tok::Le, 2, l, c)
                } else {
                    push!(Tok::Lt, 1, l, c)
                }
            }
            b'>' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'>' {
                    push!(Tok::Shr, 2, l, c)
                } else if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    push!(Tok::Ge, 2, l, c)
                } else {
                    push!(Tok::Gt, 1, l, c)
                }
            }
            b'=' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    push!(Tok::EqEq, 2, l, c)
                } else {
                    push!(Tok::Assign, 1, l, c)
                }
            }
            b'!' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    push!(Tok::Ne, 2, l, c)
                } else {
                    push!(Tok::Bang, 1, l, c)
                }
            }
            b'&' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'&' {
                    push!(Tok::AndAnd, 2, l, c)
                } else {
                    push!(Tok::Amp, 1, l, c)
                }
            }
            b'|' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'|' {
                    push!(Tok::OrOr, 2, l, c)
                } else {
                    push!(Tok::Pipe, 1, l, c)
                }
            }
            b'^' => push!(Tok::Caret, 1, l, c),
            b'~' => push!(Tok::Tilde, 1, l, c),
            b'(' => push!(Tok::LParen, 1, l, c),
            b')' => push!(Tok::RParen, 1, l, c),
            b'{' => push!(Tok::LBrace, 1, l, c),
            b'}' => push!(Tok::RBrace, 1, l, c),
            b';' => push!(Tok::Semi, 1, l, c),
            b',' => push!(Tok::Comma, 1, l, c),
            b':' => push!(Tok::Colon, 1, l, c),
            b'[' | b']' => {
                return Err(FrontendError::unsupported(l, c, "array subscript"));
            }
            b'.' => {
                return Err(FrontendError::unsupported(l, c, "member access or float literal"));
            }
            b'"' | b'\'' => {
                return Err(FrontendError::unsupported(l, c, "string or character literal"));
            }
            other => {
                return Err(FrontendError::syntax(
                    l,
                    c,
                    format!("unexpected character '{}'", other as char),
                ));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_operators_and_idents() {
        let toks = lex("x1 = a + 2; // comment\ny = x1 << 3;").unwrap();
        assert_eq!(toks[0].tok, Tok::Ident("x1".into()));
        assert_eq!(toks[1].tok, Tok::Assign);
        assert_eq!(toks[4].tok, Tok::Int(2));
        assert!(toks.iter().any(|t| t.tok == Tok::Shl));
        let y = toks.iter().find(|t| t.tok == Tok::Ident("y".into())).unwrap();
        assert_eq!((y.line, y.col), (2, 1));
    }

    #[test]
    fn literal_wraps_to_two_complement() {
        let toks = lex("2147483648").unwrap();
        assert_eq!(toks[0].tok, Tok::Int(i32::MIN));
    }

    #[test]
    fn block_comments_and_newlines() {
        let toks = lex("/* a\n b */ if").unwrap();
        assert_eq!(toks[0].tok, Tok::KwIf);
        assert_eq!(toks[0].line, 2);
    }

    #[test]
    fn rejects_floats_and_arrays() {
        assert!(matches!(lex("1.5"), Err(FrontendError::Unsupported { .. })));
        assert!(matches!(lex("a[3]"), Err(FrontendError::Unsupported { .. })));
        assert!(matches!(lex("struct s"), Err(FrontendError::Unsupported { .. })));
    }
}
