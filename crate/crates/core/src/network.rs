//! Reaction-network data model and the line-oriented text format.
//!
//! A network file holds one reaction per line:
//!
//! ```text
//! # comment
//! A + B -> 2C @ 0.5
//! 0 <-> A @ 1.0, 2.0
//! ```
//!
//! Species are indexed in order of first textual appearance. `<->` expands
//! to a forward and a reverse reaction; omitted rates default to `1.0`.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Species {
    pub name: String,
    pub index: usize,
}

/// Stoichiometric vector of a complex. The all-zero vector is the zero complex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Complex(Vec<u32>);

impl Complex {
    pub fn new(coefficients: Vec<u32>) -> Self {
        Complex(coefficients)
    }

    pub fn zero(dim: usize) -> Self {
        Complex(vec![0; dim])
    }

    /// The unary complex `S_i`.
    pub fn unary(dim: usize, species: usize) -> Self {
        let mut c = vec![0; dim];
        c[species] = 1;
        Complex(c)
    }

    /// The double complex `2S_i`.
    pub fn double(dim: usize, species: usize) -> Self {
        let mut c = vec![0; dim];
        c[species] = 2;
        Complex(c)
    }

    pub fn coefficients(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// The l1 norm of the stoichiometric vector.
    pub fn order(&self) -> u64 {
        self.0.iter().map(|&c| u64::from(c)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// Species index if this complex is `S_i`.
    pub fn as_unary(&self) -> Option<usize> {
        self.single_species_with(1)
    }

    /// Species index if this complex is `2S_i`.
    pub fn as_double(&self) -> Option<usize> {
        self.single_species_with(2)
    }

    fn single_species_with(&self, coefficient: u32) -> Option<usize> {
        let mut found = None;
        for (i, &c) in self.0.iter().enumerate() {
            match c {
                0 => {}
                c if c == coefficient && found.is_none() => found = Some(i),
                _ => return None,
            }
        }
        found
    }

    /// Human-readable name such as `2A`, `A + B` or `0`.
    pub fn display_with<'a>(&'a self, species: &'a [Species]) -> ComplexDisplay<'a> {
        ComplexDisplay { complex: self, species }
    }
}

pub struct ComplexDisplay<'a> {
    complex: &'a Complex,
    species: &'a [Species],
}

impl fmt::Display for ComplexDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &c) in self.complex.0.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if c != 1 {
                write!(f, "{c}")?;
            }
            f.write_str(&self.species[i].name)?;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reaction {
    pub source: Complex,
    pub product: Complex,
    pub rate: f64,
}

impl Reaction {
    /// Net change `y' - y`.
    pub fn net_change(&self) -> Vec<i64> {
        self.source
            .0
            .iter()
            .zip(&self.product.0)
            .map(|(&s, &p)| i64::from(p) - i64::from(s))
            .collect()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("species name {0:?} declared twice")]
    DuplicateSpecies(String),
    #[error("reaction {index} has {found} coefficients, expected {expected}")]
    DimensionMismatch {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("reaction {0} has identical source and product")]
    TrivialReaction(usize),
    #[error("reaction {0} duplicates an earlier reaction")]
    DuplicateReaction(usize),
    #[error("reaction {0} has a non-positive or non-finite rate constant")]
    NonPositiveRate(usize),
}

/// An immutable mass-action reaction network `(S, C, R, K)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionNetwork {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
    complexes: Vec<Complex>,
}

impl ReactionNetwork {
    pub fn new<S: Into<String>>(
        species_names: impl IntoIterator<Item = S>,
        reactions: Vec<Reaction>,
    ) -> Result<Self, NetworkError> {
        let mut species = Vec::new();
        let mut seen = HashSet::new();
        for (index, name) in species_names.into_iter().enumerate() {
            let name = name.into();
            if !seen.insert(name.clone()) {
                return Err(NetworkError::DuplicateSpecies(name));
            }
            species.push(Species { name, index });
        }
        let dim = species.len();
        let mut pairs = HashSet::new();
        let mut complexes = Vec::new();
        let mut complex_set = HashSet::new();
        for (index, r) in reactions.iter().enumerate() {
            for c in [&r.source, &r.product] {
                if c.dim() != dim {
                    return Err(NetworkError::DimensionMismatch {
                        index,
                        found: c.dim(),
                        expected: dim,
                    });
                }
            }
            if r.source == r.product {
                return Err(NetworkError::TrivialReaction(index));
            }
            if !(r.rate.is_finite() && r.rate > 0.0) {
                return Err(NetworkError::NonPositiveRate(index));
            }
            if !pairs.insert((r.source.clone(), r.product.clone())) {
                return Err(NetworkError::DuplicateReaction(index));
            }
            for c in [&r.source, &r.product] {
                if complex_set.insert(c.clone()) {
                    complexes.push(c.clone());
                }
            }
        }
        Ok(ReactionNetwork {
            species,
            reactions,
            complexes,
        })
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn dim(&self) -> usize {
        self.species.len()
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    /// Complexes in first-appearance order (source before product).
    pub fn complexes(&self) -> &[Complex] {
        &self.complexes
    }

    pub fn complex_index(&self, complex: &Complex) -> Option<usize> {
        self.complexes.iter().position(|c| c == complex)
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn complex_name(&self, complex: &Complex) -> String {
        complex.display_with(&self.species).to_string()
    }

    /// Every complex has order at most two.
    pub fn is_binary(&self) -> bool {
        self.complexes.iter().all(|c| c.order() <= 2)
    }

    /// Same species, restricted to the reactions selected by `keep`.
    pub fn subnetwork(&self, mut keep: impl FnMut(&Reaction) -> bool) -> ReactionNetwork {
        let reactions = self.reactions.iter().filter(|r| keep(r)).cloned().collect();
        ReactionNetwork::new(self.species.iter().map(|s| s.name.clone()), reactions)
            .expect("subset of a valid network is valid")
    }

    /// Same species with extra reactions appended.
    pub fn with_reactions(&self, extra: Vec<Reaction>) -> Result<ReactionNetwork, NetworkError> {
        let mut reactions = self.reactions.clone();
        reactions.extend(extra);
        ReactionNetwork::new(self.species.iter().map(|s| s.name.clone()), reactions)
    }

    /// Parse a complex written in the text format, e.g. `"A + B"` or `"0"`,
    /// against this network's species.
    pub fn parse_complex(&self, text: &str) -> Option<Complex> {
        let mut coefficients = vec![0u32; self.dim()];
        let text = text.trim();
        if text == "0" {
            return Some(Complex(coefficients));
        }
        for term in text.split('+') {
            let term = term.trim();
            let split = term.find(|c: char| !c.is_ascii_digit()).unwrap_or(term.len());
            let (digits, name) = term.split_at(split);
            let coef: u32 = if digits.is_empty() { 1 } else { digits.parse().ok()? };
            let idx = self.species_index(name.trim())?;
            coefficients[idx] = coefficients[idx].checked_add(coef)?;
        }
        Some(Complex(coefficients))
    }

    /// Render back to the text format, one `->` line per reaction. Parsing
    /// the result reproduces the same species order, reactions and rates.
    pub fn to_text(&self) -> String {
        let dim = self.dim();
        let mut out = String::new();
        let mut introduced = 0usize;
        let n = self.reactions.len();
        for (ri, r) in self.reactions.iter().enumerate() {
            let highest_new = r
                .source
                .0
                .iter()
                .zip(&r.product.0)
                .enumerate()
                .filter(|(_, (&s, &p))| s != 0 || p != 0)
                .map(|(i, _)| i)
                .filter(|&i| i >= introduced)
                .max();
            let pad_until = if ri + 1 == n {
                dim
            } else {
                highest_new.map_or(introduced, |h| h + 1)
            };
            let padding: Vec<usize> = (introduced..pad_until)
                .filter(|&i| r.source.0[i] == 0 && r.product.0[i] == 0)
                .collect();
            out.push_str(&self.render_side(&r.source, &padding));
            out.push_str(" -> ");
            out.push_str(&self.render_side(&r.product, &[]));
            out.push_str(&format!(" @ {:?}\n", r.rate));
            introduced = introduced.max(pad_until);
        }
        out
    }

    fn render_side(&self, complex: &Complex, zero_terms: &[usize]) -> String {
        let mut terms = Vec::new();
        for (i, &c) in complex.0.iter().enumerate() {
            let name = &self.species[i].name;
            if c != 0 {
                terms.push(if c == 1 { name.clone() } else { format!("{c}{name}") });
            } else if zero_terms.contains(&i) {
                terms.push(format!("0{name}"));
            }
        }
        if terms.is_empty() {
            "0".to_string()
        } else {
            terms.join(" + ")
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: duplicate reaction {reaction}")]
    DuplicateReaction { line: usize, reaction: String },
    #[error("line {line}, column {column}: rate constant must be positive and finite")]
    NonPositiveRate { line: usize, column: usize },
    #[error("line {line}, column {column}: coefficient must be a non-negative integer")]
    InvalidCoefficient { line: usize, column: usize },
    #[error("line {line}: source and product are identical")]
    TrivialReaction { line: usize },
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Cursor {
            chars: src.chars().collect(),
            pos: 0,
            line,
            _src: src,
        }
    }

    fn column(&self) -> usize {
        self.pos + 1
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn at_end(&self) -> bool {
        self.peek().is_none_or(|c| c == '#')
    }

    fn eat(&mut self, s: &str) -> bool {
        let n = s.chars().count();
        if self.chars.len() >= self.pos + n
            && self.chars[self.pos..self.pos + n].iter().copied().eq(s.chars())
        {
            self.pos += n;
            true
        } else {
            false
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            column: self.column(),
            message: message.into(),
        }
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> String {
        let start = self.pos;
        while self.peek().is_some_and(&f) {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }
}

type Terms = Vec<(String, u32)>;

struct ParsedLine {
    source: Terms,
    product: Terms,
    reversible: bool,
    rates: Vec<f64>,
}

fn parse_complex_terms(cur: &mut Cursor) -> Result<Terms, ParseError> {
    cur.skip_ws();
    let mut terms = Vec::new();
    loop {
        cur.skip_ws();
        let col = cur.column();
        let digits = cur.take_while(|c| c.is_ascii_digit());
        cur.skip_ws();
        let has_ident = cur.peek().is_some_and(|c| c.is_ascii_alphabetic());
        if !has_ident {
            if digits == "0" && terms.is_empty() {
                return Ok(terms);
            }
            if cur.peek() == Some('-') && cur.chars.get(cur.pos + 1).is_some_and(char::is_ascii_digit) {
                return Err(ParseError::InvalidCoefficient {
                    line: cur.line,
                    column: cur.column(),
                });
            }
            if cur.peek() == Some('.') && !digits.is_empty() {
                return Err(ParseError::InvalidCoefficient {
                    line: cur.line,
                    column: col,
                });
            }
            return Err(cur.error("expected species name"));
        }
        let coef = if digits.is_empty() {
            1
        } else {
            digits.parse::<u32>().map_err(|_| ParseError::InvalidCoefficient {
                line: cur.line,
                column: col,
            })?
        };
        let name = cur.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
        terms.push((name, coef));
        cur.skip_ws();
        if !cur.eat("+") {
            return Ok(terms);
        }
    }
}

fn parse_rate(cur: &mut Cursor) -> Result<f64, ParseError> {
    cur.skip_ws();
    let col = cur.column();
    let token = cur.take_while(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'));
    if token.is_empty() {
        return Err(cur.error("expected rate constant"));
    }
    let value: f64 = token.parse().map_err(|_| ParseError::Syntax {
        line: cur.line,
        column: col,
        message: format!("invalid number {token:?}"),
    })?;
    if !(value.is_finite() && value > 0.0) {
        return Err(ParseError::NonPositiveRate {
            line: cur.line,
            column: col,
        });
    }
    Ok(value)
}

fn parse_line(cur: &mut Cursor) -> Result<Option<ParsedLine>, ParseError> {
    cur.skip_ws();
    if cur.at_end() {
        return Ok(None);
    }
    let source = parse_complex_terms(cur)?;
    cur.skip_ws();
    let reversible = if cur.eat("<->") {
        true
    } else if cur.eat("->") {
        false
    } else {
        return Err(cur.error("expected '->' or '<->'"));
    };
    let product = parse_complex_terms(cur)?;
    cur.skip_ws();
    let mut rates = Vec::new();
    if cur.eat("@") {
        rates.push(parse_rate(cur)?);
        cur.skip_ws();
        if cur.eat(",") {
            rates.push(parse_rate(cur)?);
            cur.skip_ws();
        }
    }
    if !cur.at_end() {
        return Err(cur.error("unexpected trailing input"));
    }
    match (reversible, rates.len()) {
        (false, 2) => Err(cur.error("'->' takes at most one rate")),
        (true, 1) => Err(cur.error("'<->' takes either no rates or two rates")),
        _ => Ok(Some(ParsedLine {
            source,
            product,
            reversible,
            rates,
        })),
    }
}

/// Parse the text format into a network.
pub fn parse_network(text: &str) -> Result<ReactionNetwork, ParseError> {
    let mut names: Vec<String> = Vec::new();
    let mut index_of: HashMap<String, usize> = HashMap::new();
    let mut lines = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let mut cur = Cursor::new(raw, lineno + 1);
        if let Some(parsed) = parse_line(&mut cur)? {
            for (name, _) in parsed.source.iter().chain(&parsed.product) {
                if !index_of.contains_key(name) {
                    index_of.insert(name.clone(), names.len());
                    names.push(name.clone());
                }
            }
            lines.push((lineno + 1, parsed));
        }
    }
    let dim = names.len();
    let build = |terms: &Terms, line: usize| -> Result<Complex, ParseError> {
        let mut v = vec![0u32; dim];
        for (name, coef) in terms {
            let slot = &mut v[index_of[name]];
            *slot = slot
                .checked_add(*coef)
                .ok_or(ParseError::InvalidCoefficient { line, column: 1 })?;
        }
        Ok(Complex(v))
    };
    let mut reactions: Vec<Reaction> = Vec::new();
    let mut seen = HashSet::new();
    let species_list: Vec<Species> = names
        .iter()
        .enumerate()
        .map(|(index, name)| Species {
            name: name.clone(),
            index,
        })
        .collect();
    for (line, parsed) in lines {
        let source = build(&parsed.source, line)?;
        let product = build(&parsed.product, line)?;
        if source == product {
            return Err(ParseError::TrivialReaction { line });
        }
        let forward = parsed.rates.first().copied().unwrap_or(1.0);
        let mut new = vec![Reaction {
            source: source.clone(),
            product: product.clone(),
            rate: forward,
        }];
        if parsed.reversible {
            new.push(Reaction {
                source: product,
                product: source,
                rate: parsed.rates.get(1).copied().unwrap_or(1.0),
            });
        }
        for r in new {
            if !seen.insert((r.source.clone(), r.product.clone())) {
                return Err(ParseError::DuplicateReaction {
                    line,
                    reaction: format!(
                        "{} -> {}",
                        r.source.display_with(&species_list),
                        r.product.display_with(&species_list)
                    ),
                });
            }
            reactions.push(r);
        }
    }
    Ok(ReactionNetwork::new(names, reactions).expect("parser enforces network invariants"))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const NETWORK5: &str = "\
# open triangle
A -> B
B -> 2C
2C -> A
0 <-> A
0 <-> B
0 <-> C
";

    #[test]
    fn single_reaction() {
        let net = parse_network("A -> B @ 1.0").unwrap();
        assert_eq!(net.dim(), 2);
        assert_eq!(net.reactions().len(), 1);
        let r = &net.reactions()[0];
        assert_eq!(r.source.coefficients(), &[1, 0]);
        assert_eq!(r.product.coefficients(), &[0, 1]);
        assert_eq!(r.rate, 1.0);
    }

    #[test]
    fn bidirectional_defaults() {
        let net = parse_network("0 <-> A").unwrap();
        assert_eq!(net.reactions().len(), 2);
        assert!(net.reactions()[0].source.is_zero());
        assert_eq!(net.reactions()[0].product.as_unary(), Some(0));
        assert_eq!(net.reactions()[1].source.as_unary(), Some(0));
        assert!(net.reactions()[1].product.is_zero());
        assert!(net.reactions().iter().all(|r| r.rate == 1.0));
    }

    #[test]
    fn network5_shape() {
        let net = parse_network(NETWORK5).unwrap();
        assert_eq!(net.reactions().len(), 9);
        let names: Vec<_> = net.complexes().iter().map(|c| net.complex_name(c)).collect();
        assert_eq!(names, vec!["A", "B", "2C", "0", "C"]);
        assert!(net.is_binary());
    }

    #[test]
    fn reverse_rate() {
        let net = parse_network("A <-> B @ 1, 2.5").unwrap();
        assert_eq!(net.reactions()[1].rate, 2.5);
    }

    #[test]
    fn binary_query() {
        assert!(!parse_network("3A -> B").unwrap().is_binary());
        assert!(parse_network("0 -> A").unwrap().is_binary());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_network("A => B"),
            Err(ParseError::Syntax { line: 1, column: 3, .. })
        ));
        assert!(matches!(
            parse_network("A -> B\nA -> B"),
            Err(ParseError::DuplicateReaction { line: 2, .. })
        ));
        assert!(matches!(
            parse_network("A <-> B\nB -> A"),
            Err(ParseError::DuplicateReaction { line: 2, .. })
        ));
        assert!(matches!(
            parse_network("A -> B @ 0"),
            Err(ParseError::NonPositiveRate { line: 1, column: 10 })
        ));
        assert!(matches!(
            parse_network("A -> B @ -2"),
            Err(ParseError::NonPositiveRate { .. })
        ));
        assert!(matches!(
            parse_network("1.5A -> B"),
            Err(ParseError::InvalidCoefficient { line: 1, column: 1 })
        ));
        assert!(matches!(
            parse_network("99999999999A -> B"),
            Err(ParseError::InvalidCoefficient { .. })
        ));
        assert!(matches!(
            parse_network("A -> A"),
            Err(ParseError::TrivialReaction { line: 1 })
        ));
        assert!(parse_network("A <-> B @ 1").is_err());
        assert!(parse_network("A -> B @ 1, 2").is_err());
        assert!(parse_network("A + -> B").is_err());
    }

    #[test]
    fn comments_and_blanks() {
        let net = parse_network("\n# hi\n  A -> B  # trailing\n\n").unwrap();
        assert_eq!(net.reactions().len(), 1);
    }

    #[test]
    fn repeated_terms_accumulate() {
        let net = parse_network("A + A -> B").unwrap();
        assert_eq!(net.reactions()[0].source.as_double(), Some(0));
    }

    #[test]
    fn render_round_trip() {
        let text = "B + 3A -> 0 @ 0.1\n0X + C <-> D @ 2, 3\n";
        let net = parse_network(text).unwrap();
        let again = parse_network(&net.to_text()).unwrap();
        assert_eq!(net, again);
    }

    #[test]
    fn complex_lookup() {
        let net = parse_network(NETWORK5).unwrap();
        let c = net.parse_complex("2C").unwrap();
        assert_eq!(c.as_double(), Some(2));
        assert_eq!(net.parse_complex("0").unwrap(), Complex::zero(3));
        assert!(net.parse_complex("Q").is_none());
    }
}
