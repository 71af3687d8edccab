use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{AssertionAst, Literal, MatcherTable, Suite, TestCase};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: unterminated {what}")]
    Unterminated { what: &'static str, line: usize },
    #[error("line {line}: unbalanced `{found}`")]
    Unbalanced { found: char, line: usize },
    #[error("line {line}: `{open}` is never closed")]
    Unclosed { open: char, line: usize },
    #[error("line {line}: unknown matcher `{matcher}` (known: {known})")]
    UnknownMatcher {
        matcher: String,
        line: usize,
        known: String,
    },
    #[error("line {line}: `{matcher}` takes {min}..={max} arguments, got {got}")]
    Arity {
        matcher: String,
        line: usize,
        min: usize,
        max: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Ident,
    Number,
    Str,
    Template,
    Regex,
    Punct(char),
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    kind: Kind,
    raw: &'a str,
    line: usize,
}

impl Token<'_> {
    fn is(&self, c: char) -> bool {
        self.kind == Kind::Punct(c)
    }

    fn is_ident(&self, name: &str) -> bool {
        self.kind == Kind::Ident && self.raw == name
    }
}

fn regex_may_follow(prev: Option<&Token<'_>>) -> bool {
    match prev {
        None => true,
        Some(t) => match t.kind {
            Kind::Punct(c) => "(,=:[!&|?{};+-*%<>~^".contains(c),
            Kind::Ident => matches!(t.raw, "return" | "typeof" | "case" | "in" | "of"),
            _ => false,
        },
    }
}

fn tokenize(src: &str) -> Result<Vec<Token<'_>>, ParseError> {
    let bytes = src.as_bytes();
    let mut tokens: Vec<Token<'_>> = Vec::new();
    let mut i = 0;
    let mut line = 1;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let start_line = line;
        match c {
            b'\n' => {
                line += 1;
                i += 1;
            }
            _ if c.is_ascii_whitespace() => i += 1,
            b'/' if bytes.get(i + 1) == Some(&b'/') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                i += 2;
                loop {
                    match bytes.get(i) {
                        None => {
                            return Err(ParseError::Unterminated { what: "comment", line: start_line })
                        }
                        Some(b'*') if bytes.get(i + 1) == Some(&b'/') => {
                            i += 2;
                            break;
                        }
                        Some(b'\n') => line += 1,
                        _ => {}
                    }
                    i += 1;
                }
            }
            b'\'' | b'"' => {
                i += 1;
                loop {
                    match bytes.get(i) {
                        None | Some(b'\n') => {
                            return Err(ParseError::Unterminated { what: "string", line: start_line })
                        }
                        Some(b'\\') => i += 2,
                        Some(&q) if q == c => {
                            i += 1;
                            break;
                        }
                        _ => i += 1,
                    }
                }
                tokens.push(Token { kind: Kind::Str, raw: &src[start..i], line: start_line });
            }
            b'`' => {
                i += 1;
                let mut depth = 0usize;
                loop {
                    match bytes.get(i) {
                        None => {
                            return Err(ParseError::Unterminated { what: "template literal", line: start_line })
                        }
                        Some(b'\\') => i += 1,
                        Some(b'\n') => line += 1,
                        Some(b'$') if depth == 0 && bytes.get(i + 1) == Some(&b'{') => {
                            depth = 1;
                            i += 1;
                        }
                        Some(b'{') if depth > 0 => depth += 1,
                        Some(b'}') if depth > 0 => depth -= 1,
                        Some(b'`') if depth == 0 => {
                            i += 1;
                            break;
                        }
                        _ => {}
                    }
                    i += 1;
                }
                tokens.push(Token { kind: Kind::Template, raw: &src[start..i], line: start_line });
            }
            b'/' if regex_may_follow(tokens.last()) => {
                i += 1;
                let mut in_class = false;
                loop {
                    match bytes.get(i) {
                        None | Some(b'\n') => {
                            return Err(ParseError::Unterminated { what: "regular expression", line: start_line })
                        }
                        Some(b'\\') => i += 1,
                        Some(b'[') => in_class = true,
                        Some(b']') => in_class = false,
                        Some(b'/') if !in_class => {
                            i += 1;
                            break;
                        }
                        _ => {}
                    }
                    i += 1;
                }
                while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
                    i += 1;
                }
                tokens.push(Token { kind: Kind::Regex, raw: &src[start..i], line: start_line });
            }
            b'0'..=b'9' => {
                i += 1;
                while i < bytes.len() {
                    let d = bytes[i];
                    if d.is_ascii_alphanumeric() || d == b'_' || d == b'.' {
                        i += 1;
                    } else if (d == b'+' || d == b'-') && matches!(bytes[i - 1], b'e' | b'E') {
                        i += 1;
                    } else {
                        break;
                    }
                }
                tokens.push(Token { kind: Kind::Number, raw: &src[start..i], line: start_line });
            }
            _ if c.is_ascii_alphabetic() || c == b'_' || c == b'$' || c >= 0x80 => {
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || matches!(bytes[i], b'_' | b'$') || bytes[i] >= 0x80)
                {
                    i += 1;
                }
                tokens.push(Token { kind: Kind::Ident, raw: &src[start..i], line: start_line });
            }
            _ => {
                i += 1;
                tokens.push(Token { kind: Kind::Punct(c as char), raw: &src[start..i], line: start_line });
            }
        }
    }
    Ok(tokens)
}

/// For every opening delimiter, the index of its closing partner.
fn match_delimiters(tokens: &[Token<'_>]) -> Result<Vec<Option<usize>>, ParseError> {
    let mut partner = alloc::vec![None; tokens.len()];
    let mut stack: Vec<usize> = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        let Kind::Punct(c) = t.kind else { continue };
        match c {
            '(' | '[' | '{' => stack.push(i),
            ')' | ']' | '}' => {
                let want = match c {
                    ')' => '(',
                    ']' => '[',
                    _ => '{',
                };
                match stack.pop() {
                    Some(open) if tokens[open].is(want) => partner[open] = Some(i),
                    _ => return Err(ParseError::Unbalanced { found: c, line: t.line }),
                }
            }
            _ => {}
        }
    }
    if let Some(open) = stack.pop() {
        let Kind::Punct(c) = tokens[open].kind else { unreachable!() };
        return Err(ParseError::Unclosed { open: c, line: tokens[open].line });
    }
    Ok(partner)
}

fn unquote(raw: &str) -> String {
    let inner = &raw[1..raw.len() - 1];
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some('0') => out.push('\0'),
            Some(other) => out.push(other),
            None => {}
        }
    }
    out
}

fn string_value(t: &Token<'_>) -> Option<String> {
    match t.kind {
        Kind::Str => Some(unquote(t.raw)),
        Kind::Template if !t.raw.contains("${") => Some(unquote(t.raw)),
        _ => None,
    }
}

/// Joins tokens without whitespace, keeping a space between word-like tokens.
fn render(tokens: &[Token<'_>]) -> String {
    let mut out = String::new();
    let mut prev_word = false;
    for t in tokens {
        let word = matches!(t.kind, Kind::Ident | Kind::Number);
        if word && prev_word {
            out.push(' ');
        }
        out.push_str(t.raw);
        prev_word = word;
    }
    out
}

fn literal(tokens: &[Token<'_>]) -> Literal {
    match tokens {
        [t] => match t.kind {
            Kind::Number => Literal::Number(t.raw.to_string()),
            Kind::Str => Literal::Str(unquote(t.raw)),
            Kind::Template => match string_value(t) {
                Some(s) => Literal::Str(s),
                None => Literal::Expr(t.raw.to_string()),
            },
            Kind::Regex => {
                let close = t.raw.rfind('/').unwrap_or(0);
                Literal::Regex {
                    pattern: t.raw[1..close].to_string(),
                    flags: t.raw[close + 1..].to_string(),
                }
            }
            Kind::Ident => match t.raw {
                "true" => Literal::Bool(true),
                "false" => Literal::Bool(false),
                "null" => Literal::Null,
                "undefined" => Literal::Undefined,
                _ => Literal::Expr(t.raw.to_string()),
            },
            Kind::Punct(_) => Literal::Expr(t.raw.to_string()),
        },
        [sign, n] if sign.is('-') && n.kind == Kind::Number => {
            Literal::Number(alloc::format!("-{}", n.raw))
        }
        _ => Literal::Expr(render(tokens)),
    }
}

/// Splits the tokens strictly between `open` and its partner on top-level commas.
fn split_args<'t, 'a>(
    tokens: &'t [Token<'a>],
    partner: &[Option<usize>],
    open: usize,
) -> Vec<&'t [Token<'a>]> {
    let close = partner[open].expect("matched");
    let mut args = Vec::new();
    let mut start = open + 1;
    let mut i = open + 1;
    while i < close {
        if let Some(p) = partner[i] {
            i = p + 1;
            continue;
        }
        if tokens[i].is(',') {
            args.push(&tokens[start..i]);
            start = i + 1;
        }
        i += 1;
    }
    if start < close {
        args.push(&tokens[start..close]);
    }
    args
}

fn preceded_by_dot(tokens: &[Token<'_>], i: usize) -> bool {
    i > 0 && tokens[i - 1].is('.')
}

/// `test("name", ...)`, `test.only(...)` or `it(...)`: returns the name and the
/// call's parenthesis span.
fn test_call(
    tokens: &[Token<'_>],
    partner: &[Option<usize>],
    i: usize,
) -> Option<(String, usize, usize)> {
    let t = &tokens[i];
    if !(t.is_ident("test") || t.is_ident("it")) || preceded_by_dot(tokens, i) {
        return None;
    }
    let mut open = i + 1;
    if tokens.get(open)?.is('.') {
        let modifier = tokens.get(open + 1)?;
        if !(modifier.is_ident("only") || modifier.is_ident("fixme") || modifier.is_ident("skip")) {
            return None;
        }
        open += 2;
    }
    if !tokens.get(open)?.is('(') {
        return None;
    }
    let name = string_value(tokens.get(open + 1)?)?;
    let after_name = tokens.get(open + 2)?;
    if !(after_name.is(',') || after_name.is(')')) {
        return None;
    }
    Some((name, open, partner[open]?))
}

/// Parses a script in the restricted grammar into its test cases and their
/// assertions, in source order. Assertions outside any test are ignored.
pub fn parse_test_script(src: &str, table: &MatcherTable) -> Result<Suite, ParseError> {
    let tokens = tokenize(src)?;
    let partner = match_delimiters(&tokens)?;

    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut cases: Vec<TestCase> = Vec::new();
    for i in 0..tokens.len() {
        if let Some((name, open, close)) = test_call(&tokens, &partner, i) {
            spans.push((open, close));
            cases.push(TestCase { name, line: tokens[i].line, assertions: Vec::new() });
        }
    }

    let mut i = 0;
    while i < tokens.len() {
        let Some((ast, next)) = expect_statement(&tokens, &partner, i, table)? else {
            i += 1;
            continue;
        };
        // Innermost enclosing test wins.
        if let Some(owner) = spans.iter().rposition(|&(open, close)| open < i && i < close) {
            cases[owner].assertions.push(ast);
        }
        i = next;
    }
    Ok(Suite { cases })
}

fn expect_statement(
    tokens: &[Token<'_>],
    partner: &[Option<usize>],
    i: usize,
    table: &MatcherTable,
) -> Result<Option<(AssertionAst, usize)>, ParseError> {
    if !tokens[i].is_ident("expect") || preceded_by_dot(tokens, i) {
        return Ok(None);
    }
    let Some(open) = tokens.get(i + 1).filter(|t| t.is('(')).map(|_| i + 1) else {
        return Ok(None);
    };
    let close = partner[open].expect("matched");
    let subject = render(&tokens[open + 1..close]);
    let mut j = close + 1;
    let mut negated = false;
    if tokens.get(j).is_some_and(|t| t.is('.')) && tokens.get(j + 1).is_some_and(|t| t.is_ident("not")) {
        negated = true;
        j += 2;
    }
    let (Some(dot), Some(name), Some(paren)) = (tokens.get(j), tokens.get(j + 1), tokens.get(j + 2)) else {
        return Ok(None);
    };
    if !dot.is('.') || name.kind != Kind::Ident || !paren.is('(') {
        return Ok(None);
    }
    let Some(spec) = table.get(name.raw) else {
        let mut known: Vec<&str> = table.names().collect();
        known.sort_unstable();
        return Err(ParseError::UnknownMatcher {
            matcher: name.raw.to_string(),
            line: name.line,
            known: known.join(", "),
        });
    };
    let args: Vec<Literal> = split_args(tokens, partner, j + 2)
        .into_iter()
        .map(literal)
        .collect();
    if args.len() < spec.min_args || args.len() > spec.max_args {
        return Err(ParseError::Arity {
            matcher: spec.name.clone(),
            line: name.line,
            min: spec.min_args,
            max: spec.max_args,
            got: args.len(),
        });
    }
    let ast = AssertionAst {
        subject,
        matcher: spec.name.clone(),
        arguments: args,
        negated,
        line: tokens[i].line,
    };
    Ok(Some((ast, partner[j + 2].expect("matched") + 1)))
}
