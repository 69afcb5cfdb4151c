use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ids::Attribute;

/// A monotone AND/OR formula over attributes.
///
/// Text syntax: attributes joined by `AND` / `OR` (case-insensitive) with
/// parentheses; `AND` binds tighter than `OR`. A chain of the same operator
/// becomes one n-ary gate.
///
/// ```text
/// (aa1:doctor AND aa2:cardiology) OR aa1:admin
/// ```
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolicyNode {
    And(Vec<PolicyNode>),
    Or(Vec<PolicyNode>),
    Leaf(Attribute),
}

impl PolicyNode {
    pub fn leaf(name: &str) -> Result<PolicyNode> {
        Ok(PolicyNode::Leaf(Attribute::new(name)?))
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&Attribute> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Attribute>) {
        match self {
            PolicyNode::Leaf(a) => out.push(a),
            PolicyNode::And(c) | PolicyNode::Or(c) => c.iter().for_each(|n| n.collect_leaves(out)),
        }
    }

    /// Gates need at least two children and each attribute may appear once.
    pub fn validate(&self) -> Result<()> {
        self.validate_gates()?;
        let mut seen = BTreeSet::new();
        for leaf in self.leaves() {
            if !seen.insert(leaf) {
                return Err(Error::DuplicateAttribute(leaf.to_string()));
            }
        }
        Ok(())
    }

    fn validate_gates(&self) -> Result<()> {
        match self {
            PolicyNode::Leaf(_) => Ok(()),
            PolicyNode::And(c) | PolicyNode::Or(c) => {
                if c.len() < 2 {
                    return Err(Error::InvalidPolicy(format!("gate with {} children", c.len())));
                }
                c.iter().try_for_each(PolicyNode::validate_gates)
            }
        }
    }

    /// Direct boolean evaluation.
    pub fn evaluate(&self, held: &BTreeSet<&Attribute>) -> bool {
        match self {
            PolicyNode::Leaf(a) => held.contains(a),
            PolicyNode::And(c) => c.iter().all(|n| n.evaluate(held)),
            PolicyNode::Or(c) => c.iter().any(|n| n.evaluate(held)),
        }
    }

    /// Number of two-input AND gates once n-ary ANDs are split; the matrix
    /// has one column more than this.
    pub fn and_splits(&self) -> usize {
        match self {
            PolicyNode::Leaf(_) => 0,
            PolicyNode::And(c) => c.len() - 1 + c.iter().map(PolicyNode::and_splits).sum::<usize>(),
            PolicyNode::Or(c) => c.iter().map(PolicyNode::and_splits).sum(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            PolicyNode::Leaf(_) => 0,
            PolicyNode::And(c) | PolicyNode::Or(c) => 1 + c.iter().map(PolicyNode::depth).max().unwrap_or(0),
        }
    }
}

impl fmt::Display for PolicyNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_child(f: &mut fmt::Formatter<'_>, n: &PolicyNode) -> fmt::Result {
            match n {
                PolicyNode::Leaf(_) => write!(f, "{n}"),
                _ => write!(f, "({n})"),
            }
        }
        match self {
            PolicyNode::Leaf(a) => write!(f, "{a}"),
            PolicyNode::And(c) | PolicyNode::Or(c) => {
                let op = if matches!(self, PolicyNode::And(_)) { " AND " } else { " OR " };
                for (i, n) in c.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    write_child(f, n)?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    And,
    Or,
    Word(&'a str),
}

fn tokenize(input: &str) -> Result<Vec<Token<'_>>> {
    let mut out = Vec::new();
    let mut rest = input;
    loop {
        rest = rest.trim_start();
        let Some(c) = rest.chars().next() else { break };
        match c {
            '(' => {
                out.push(Token::Open);
                rest = &rest[1..];
            }
            ')' => {
                out.push(Token::Close);
                rest = &rest[1..];
            }
            _ => {
                let end = rest
                    .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
                    .unwrap_or(rest.len());
                let word = &rest[..end];
                out.push(if word.eq_ignore_ascii_case("and") {
                    Token::And
                } else if word.eq_ignore_ascii_case("or") {
                    Token::Or
                } else {
                    Token::Word(word)
                });
                rest = &rest[end..];
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn expr(&mut self) -> Result<PolicyNode> {
        let mut terms = vec![self.term()?];
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            terms.push(self.term()?);
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { PolicyNode::Or(terms) })
    }

    fn term(&mut self) -> Result<PolicyNode> {
        let mut factors = vec![self.factor()?];
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            factors.push(self.factor()?);
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { PolicyNode::And(factors) })
    }

    fn factor(&mut self) -> Result<PolicyNode> {
        match self.tokens.get(self.pos) {
            Some(Token::Open) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Token::Close) {
                    return Err(Error::InvalidPolicy("missing ')'".into()));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(Token::Word(w)) => {
                let leaf = Attribute::new(w).map_err(|e| Error::InvalidPolicy(e.to_string()))?;
                self.pos += 1;
                Ok(PolicyNode::Leaf(leaf))
            }
            Some(t) => Err(Error::InvalidPolicy(format!("unexpected {t:?}"))),
            None => Err(Error::InvalidPolicy("unexpected end of policy".into())),
        }
    }
}

impl FromStr for PolicyNode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { tokens: tokenize(s)?, pos: 0 };
        let node = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::InvalidPolicy(format!("unexpected {:?}", p.tokens[p.pos])));
        }
        node.validate()?;
        Ok(node)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(s: &str) -> PolicyNode {
        PolicyNode::leaf(s).unwrap()
    }

    #[test]
    fn parses_precedence_and_chains() {
        let p: PolicyNode = "aa1:a AND aa1:b OR aa2:c and aa2:d and aa3:e".parse().unwrap();
        assert_eq!(
            p,
            PolicyNode::Or(vec![
                PolicyNode::And(vec![leaf("aa1:a"), leaf("aa1:b")]),
                PolicyNode::And(vec![leaf("aa2:c"), leaf("aa2:d"), leaf("aa3:e")]),
            ])
        );
    }

    #[test]
    fn parentheses_and_display_round_trip() {
        let text = "(aa1:doctor AND aa2:cardiology) OR aa1:admin";
        let p: PolicyNode = text.parse().unwrap();
        assert_eq!(p.to_string(), text);
        assert_eq!(p.to_string().parse::<PolicyNode>().unwrap(), p);
        assert_eq!("((aa1:x))".parse::<PolicyNode>().unwrap(), leaf("aa1:x"));
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "aa1:a AND", "(aa1:a OR aa1:b", "aa1:a aa1:b", "AND aa1:a", "aa1:a OR )", "doctor"] {
            assert!(bad.parse::<PolicyNode>().is_err(), "{bad:?}");
        }
        assert!(matches!(
            "aa1:a AND aa1:a".parse::<PolicyNode>(),
            Err(Error::DuplicateAttribute(_))
        ));
        assert!(matches!(PolicyNode::And(vec![leaf("aa1:a")]).validate(), Err(Error::InvalidPolicy(_))));
        assert!(matches!(PolicyNode::Or(vec![]).validate(), Err(Error::InvalidPolicy(_))));
    }

    #[test]
    fn evaluation() {
        let p: PolicyNode = "(aa1:a AND aa1:b) OR aa2:c".parse().unwrap();
        let a = Attribute::new("aa1:a").unwrap();
        let b = Attribute::new("aa1:b").unwrap();
        let c = Attribute::new("aa2:c").unwrap();
        assert!(p.evaluate(&[&a, &b].into()));
        assert!(p.evaluate(&[&c].into()));
        assert!(!p.evaluate(&[&a].into()));
        assert!(!p.evaluate(&BTreeSet::new()));
        assert_eq!(p.and_splits(), 1);
        assert_eq!(p.depth(), 2);
    }
}
