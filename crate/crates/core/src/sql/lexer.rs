use super::SqlError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    /// Bare word; keywords are recognized by the parser.
    Word(String),
    /// `"quoted"`, `` `quoted` `` or `[bracketed]` identifier.
    Quoted(String),
    Str(String),
    Num(String),
    Comma,
    LParen,
    RParen,
    Star,
    Minus,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Semi,
    /// Anything else we recognize only to reject it (`+`, `/`, `.`, `%`).
    Other(char),
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: usize,
}

const RESERVED: &[&str] = &[
    "SELECT",
    "FROM",
    "WHERE",
    "GROUP",
    "BY",
    "HAVING",
    "AND",
    "OR",
    "NOT",
    "IN",
    "AS",
    "DISTINCT",
    "NULL",
    "JOIN",
    "INNER",
    "LEFT",
    "RIGHT",
    "FULL",
    "OUTER",
    "CROSS",
    "NATURAL",
    "ON",
    "USING",
    "ORDER",
    "LIMIT",
    "OFFSET",
    "UNION",
    "INTERSECT",
    "EXCEPT",
    "LIKE",
    "BETWEEN",
    "IS",
    "EXISTS",
    "CASE",
    "WITH",
    "COUNT",
    "SUM",
    "AVG",
    "MIN",
    "MAX",
];

pub(crate) fn is_reserved(word: &str) -> bool {
    RESERVED.iter().any(|r| r.eq_ignore_ascii_case(word))
}

pub(crate) fn lex(src: &str) -> Result<Vec<Token>, SqlError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let syntax = |pos: usize, message: &str| SqlError::Syntax { position: pos, message: message.to_string() };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            b',' => {
                i += 1;
                Tok::Comma
            }
            b'(' => {
                i += 1;
                Tok::LParen
            }
            b')' => {
                i += 1;
                Tok::RParen
            }
            b'*' => {
                i += 1;
                Tok::Star
            }
            b'-' => {
                i += 1;
                Tok::Minus
            }
            b';' => {
                i += 1;
                Tok::Semi
            }
            b'=' => {
                i += if bytes.get(i + 1) == Some(&b'=') { 2 } else { 1 };
                Tok::Eq
            }
            b'!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 2;
                    Tok::Ne
                } else {
                    return Err(syntax(i, "expected `!=`"));
                }
            }
            b'<' => match bytes.get(i + 1) {
                Some(b'=') => {
                    i += 2;
                    Tok::Le
                }
                Some(b'>') => {
                    i += 2;
                    Tok::Ne
                }
                _ => {
                    i += 1;
                    Tok::Lt
                }
            },
            b'>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 2;
                    Tok::Ge
                } else {
                    i += 1;
                    Tok::Gt
                }
            }
            b'\'' => {
                let (s, next) = quoted(src, i, '\'').ok_or_else(|| syntax(start, "unterminated string literal"))?;
                i = next;
                Tok::Str(s)
            }
            b'"' | b'`' => {
                let (s, next) = quoted(src, i, c as char).ok_or_else(|| syntax(start, "unterminated quoted identifier"))?;
                i = next;
                Tok::Quoted(s)
            }
            b'[' => {
                let end = src[i + 1..].find(']').ok_or_else(|| syntax(start, "unterminated `[` identifier"))?;
                let s = src[i + 1..i + 1 + end].to_string();
                i += end + 2;
                Tok::Quoted(s)
            }
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i].is_ascii_alphabetic() || bytes[i] == b'_') {
                    return Err(syntax(start, "malformed number"));
                }
                Tok::Num(src[start..i].to_string())
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                Tok::Word(src[start..i].to_string())
            }
            b'+' | b'/' | b'.' | b'%' => {
                i += 1;
                Tok::Other(c as char)
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(syntax(i, &format!("unexpected character `{ch}`")));
            }
        };
        out.push(Token { tok, pos: start });
    }
    Ok(out)
}

/// Reads a literal delimited by `q`, where a doubled `q` escapes itself.
fn quoted(src: &str, open: usize, q: char) -> Option<(String, usize)> {
    let mut s = String::new();
    let mut chars = src[open + 1..].char_indices().peekable();
    while let Some((off, ch)) = chars.next() {
        if ch == q {
            if chars.peek().map(|&(_, c)| c) == Some(q) {
                s.push(q);
                chars.next();
            } else {
                return Some((s, open + 1 + off + ch.len_utf8()));
            }
        } else {
            s.push(ch);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn basic_tokens() {
        assert_eq!(
            toks("SELECT \"Hire Year\" FROM t WHERE a <> 'it''s' AND b >= -2.5"),
            vec![
                Tok::Word("SELECT".into()),
                Tok::Quoted("Hire Year".into()),
                Tok::Word("FROM".into()),
                Tok::Word("t".into()),
                Tok::Word("WHERE".into()),
                Tok::Word("a".into()),
                Tok::Ne,
                Tok::Str("it's".into()),
                Tok::Word("AND".into()),
                Tok::Word("b".into()),
                Tok::Ge,
                Tok::Minus,
                Tok::Num("2.5".into()),
            ]
        );
        assert_eq!(toks("[x y] `z`"), vec![Tok::Quoted("x y".into()), Tok::Quoted("z".into())]);
    }

    #[test]
    fn positions_and_errors() {
        let t = lex("a  = 1").unwrap();
        assert_eq!(t[1].pos, 3);
        assert!(matches!(lex("a = 'open"), Err(SqlError::Syntax { position: 4, .. })));
        assert!(matches!(lex("a ! b"), Err(SqlError::Syntax { position: 2, .. })));
        assert!(matches!(lex("12ab"), Err(SqlError::Syntax { position: 0, .. })));
    }
}
