use super::lexer::{lex_line, Tok, Token};
use super::{Located, ParseError, SourceSpan, Statement};
use crate::formula::Formula;
use crate::model::{AdditiveUtility, JointUtility, Literal};

const RESERVED: &[&str] = &[
    "hypothesis",
    "prior",
    "observable",
    "free",
    "rule",
    "fact",
    "observe",
    "treatment",
    "targets",
    "utility",
    "joint",
    "when",
    "given",
    "value",
    "treat-faulty",
    "treat-ok",
    "skip-faulty",
    "skip-ok",
    "true",
    "false",
];

const STATEMENTS: &[&str] = &[
    "hypothesis",
    "observable",
    "rule",
    "fact",
    "observe",
    "treatment",
    "utility",
];

pub(crate) fn parse_lines(text: &str) -> Result<Vec<Located<Statement>>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let tokens = lex_line(line, i + 1)?;
        if tokens.is_empty() {
            continue;
        }
        let span = tokens[0].span;
        let statement = LineParser {
            tokens: &tokens,
            pos: 0,
        }
        .statement()?;
        out.push(Located { statement, span });
    }
    Ok(out)
}

struct LineParser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

fn error(span: SourceSpan, message: impl Into<String>, expected: &[&str]) -> ParseError {
    ParseError {
        span,
        message: message.into(),
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

impl<'a> LineParser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    fn last_span(&self) -> SourceSpan {
        self.tokens[self.tokens.len() - 1].span
    }

    /// Error for a missing token: at the offending token, or at the last
    /// token of the line when the line ran out.
    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let wanted = expected.join(" or ");
        match self.peek() {
            Some(t) => error(
                t.span,
                format!("expected {wanted}, found {}", t.tok.describe()),
                expected,
            ),
            None => error(
                self.last_span(),
                format!("expected {wanted} after this"),
                expected,
            ),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Ident(s), .. }) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.at_keyword(kw) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("`{kw}`")]))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, SourceSpan), ParseError> {
        match self.peek() {
            Some(Token {
                tok: Tok::Ident(s),
                span,
            }) => {
                if RESERVED.contains(&s.as_str()) {
                    return Err(error(*span, format!("`{s}` is a reserved word"), &[what]));
                }
                self.pos += 1;
                Ok((s.clone(), *span))
            }
            _ => Err(self.unexpected(&[what])),
        }
    }

    fn number(&mut self, what: &str) -> Result<f64, ParseError> {
        match self.peek() {
            Some(Token {
                tok: Tok::Number(n),
                ..
            }) => {
                self.pos += 1;
                Ok(*n)
            }
            _ => Err(self.unexpected(&[what])),
        }
    }

    fn eat(&mut self, tok: &Tok) -> Option<&'a Token> {
        match self.peek() {
            Some(t) if &t.tok == tok => {
                self.pos += 1;
                Some(t)
            }
            _ => None,
        }
    }

    fn end(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(error(
                t.span,
                format!("unexpected {} at end of statement", t.tok.describe()),
                &["end of line"],
            )),
        }
    }

    fn statement(mut self) -> Result<Statement, ParseError> {
        let head = match self.bump() {
            Some(Token {
                tok: Tok::Ident(s), ..
            }) if STATEMENTS.contains(&s.as_str()) => s.as_str(),
            Some(t) => {
                return Err(error(
                    t.span,
                    format!("unknown statement {}", t.tok.describe()),
                    STATEMENTS,
                ))
            }
            None => unreachable!("blank lines are skipped"),
        };
        let statement = match head {
            "hypothesis" => {
                let (id, _) = self.ident("hypothesis id")?;
                self.keyword("prior")?;
                let prior = self.number("prior probability")?;
                Statement::Hypothesis { id, prior }
            }
            "observable" => {
                let (id, _) = self.ident("observable id")?;
                let free = self.at_keyword("free");
                if free {
                    self.pos += 1;
                }
                Statement::Observable { id, free }
            }
            "rule" => self.rule()?,
            "fact" => Statement::Fact(self.formula()?),
            "observe" => {
                let positive = self.eat(&Tok::Bang).is_none();
                let (id, _) = self.ident("observable id")?;
                Statement::Observe(Literal { id, positive })
            }
            "treatment" => {
                let (id, _) = self.ident("treatment id")?;
                self.keyword("targets")?;
                let (target, _) = self.ident("hypothesis id")?;
                Statement::Treatment { id, target }
            }
            "utility" if self.at_keyword("joint") => {
                self.pos += 1;
                self.keyword("when")?;
                let when = self.literal_list("hypothesis literal")?;
                self.keyword("given")?;
                let given = self.literal_list("treatment literal")?;
                self.keyword("value")?;
                let value = self.number("utility value")?;
                Statement::JointUtility(JointUtility { when, given, value })
            }
            "utility" => {
                let (treatment, _) = self.ident("treatment id or `joint`")?;
                let mut values = [0.0; 4];
                for (slot, kw) in
                    values
                        .iter_mut()
                        .zip(["treat-faulty", "treat-ok", "skip-faulty", "skip-ok"])
                {
                    self.keyword(kw)?;
                    *slot = self.number("utility value")?;
                }
                Statement::Utility(AdditiveUtility::new(treatment, values))
            }
            _ => unreachable!(),
        };
        self.end()?;
        Ok(statement)
    }

    fn rule(&mut self) -> Result<Statement, ParseError> {
        let mut body = Vec::new();
        if self.at_keyword("true") {
            self.pos += 1;
        } else {
            body.push(self.ident("hypothesis id or `true`")?.0);
            while let Some(amp) = self.eat(&Tok::Amp) {
                match self.ident("hypothesis id") {
                    Ok((id, _)) => body.push(id),
                    Err(_) => {
                        return Err(error(
                            amp.span,
                            "dangling `&` in rule body",
                            &["hypothesis id"],
                        ))
                    }
                }
            }
        }
        if self.eat(&Tok::Entails).is_none() {
            return Err(self.unexpected(&["`&`", "`=>`"]));
        }
        let (head, _) = self.ident("observable id")?;
        Ok(Statement::Rule { body, head })
    }

    fn literal_list(&mut self, what: &str) -> Result<Vec<Literal>, ParseError> {
        if self.at_keyword("true") {
            self.pos += 1;
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        loop {
            let positive = self.eat(&Tok::Bang).is_none();
            let (id, _) = self.ident(what)?;
            out.push(Literal { id, positive });
            if self.eat(&Tok::Comma).is_none() {
                return Ok(out);
            }
        }
    }

    // formula := imp ('<->' imp)*
    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.implication()?;
        while let Some(op) = self.eat(&Tok::Iff) {
            lhs = lhs.iff(self.operand(op, Self::implication)?);
        }
        Ok(lhs)
    }

    // imp := or ('->' imp)?
    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        match self.eat(&Tok::Arrow) {
            Some(op) => Ok(lhs.implies(self.operand(op, Self::implication)?)),
            None => Ok(lhs),
        }
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conjunction()?;
        while let Some(op) = self.eat(&Tok::Pipe) {
            lhs = lhs.or(self.operand(op, Self::conjunction)?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat(&Tok::Amp) {
            lhs = lhs.and(self.operand(op, Self::unary)?);
        }
        Ok(lhs)
    }

    /// Right operand of `op`; a missing one is reported at the operator.
    fn operand(
        &mut self,
        op: &Token,
        parse: fn(&mut Self) -> Result<Formula, ParseError>,
    ) -> Result<Formula, ParseError> {
        if self.peek().is_none() {
            return Err(error(
                op.span,
                format!("dangling {} in formula", op.tok.describe()),
                &["formula"],
            ));
        }
        parse(self)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if let Some(op) = self.eat(&Tok::Bang) {
            return Ok(self.operand(op, Self::unary)?.not());
        }
        if let Some(open) = self.eat(&Tok::LParen) {
            let inner = self.formula()?;
            if self.eat(&Tok::RParen).is_none() {
                return Err(match self.peek() {
                    Some(_) => self.unexpected(&["`)`"]),
                    None => error(open.span, "unclosed `(`", &["`)`"]),
                });
            }
            return Ok(inner);
        }
        if self.at_keyword("true") {
            self.pos += 1;
            return Ok(Formula::True);
        }
        if self.at_keyword("false") {
            self.pos += 1;
            return Ok(Formula::False);
        }
        Ok(Formula::Atom(self.ident("atom")?.0))
    }
}
