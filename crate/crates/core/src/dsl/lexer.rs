use super::{ParseError, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(f64),
    Bang,
    Amp,
    Pipe,
    Arrow,
    Iff,
    Entails,
    LParen,
    RParen,
    Comma,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Bang => "`!`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Iff => "`<->`".into(),
            Tok::Entails => "`=>`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Tokens of one line; `#` starts a comment.
pub(crate) fn lex_line(line: &str, line_no: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let span = |start: usize, end: usize| SourceSpan {
        line: line_no,
        column: start + 1,
        length: end - start,
    };

    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let symbol = |tok, len| (tok, len);
        let fixed = match (c, next, chars.get(i + 2).copied()) {
            ('<', Some('-'), Some('>')) => Some(symbol(Tok::Iff, 3)),
            ('-', Some('>'), _) => Some(symbol(Tok::Arrow, 2)),
            ('=', Some('>'), _) => Some(symbol(Tok::Entails, 2)),
            ('!', _, _) => Some(symbol(Tok::Bang, 1)),
            ('&', _, _) => Some(symbol(Tok::Amp, 1)),
            ('|', _, _) => Some(symbol(Tok::Pipe, 1)),
            ('(', _, _) => Some(symbol(Tok::LParen, 1)),
            (')', _, _) => Some(symbol(Tok::RParen, 1)),
            (',', _, _) => Some(symbol(Tok::Comma, 1)),
            _ => None,
        };
        if let Some((tok, len)) = fixed {
            i += len;
            out.push(Token {
                tok,
                span: span(start, i),
            });
            continue;
        }

        if ident_start(c) {
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let hyphen = d == '-' && chars.get(i + 1).is_some_and(|&n| ident_char(n));
                if ident_char(d) || hyphen {
                    i += 1;
                } else {
                    break;
                }
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Token {
                tok: Tok::Ident(text),
                span: span(start, i),
            });
            continue;
        }

        let starts_number = c.is_ascii_digit()
            || (c == '.' && next.is_some_and(|n| n.is_ascii_digit()))
            || ((c == '-' || c == '+') && next.is_some_and(|n| n.is_ascii_digit() || n == '.'));
        if starts_number {
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let exponent_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exponent_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            let text: String = chars[start..i].iter().collect();
            push_number(&text, span(start, i), &mut out)?;
            continue;
        }

        return Err(ParseError {
            span: span(start, start + 1),
            message: format!("unexpected character `{c}`"),
            expected: vec!["identifier".into(), "number".into(), "operator".into()],
        });
    }
    Ok(out)
}

fn push_number(text: &str, span: SourceSpan, out: &mut Vec<Token>) -> Result<(), ParseError> {
    match text.parse::<f64>() {
        Ok(n) if n.is_finite() => {
            out.push(Token {
                tok: Tok::Number(n),
                span,
            });
            Ok(())
        }
        _ => Err(ParseError {
            span,
            message: format!("malformed number `{text}`"),
            expected: vec!["decimal number".into()],
        }),
    }
}
