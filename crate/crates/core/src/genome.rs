//! Plushy genomes: the gene alphabet, random generation from a genetic
//! source, translation into nested push sequences, and a text format.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution as _, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::ast::{sym, Symbol};
use crate::reader::{datum_to_value, Reader};
use crate::runtime::Value;
use crate::types::{Scheme, Type};

/// Upper bound (exclusive) on randomly drawn local-variable indices.
pub const LOCAL_INDEX_BOUND: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub enum Gene {
    Lit(Value, Type),
    Var(Symbol),
    Local(usize),
    App,
    Abs(Vec<Type>),
    Let,
    Open,
    Close,
}

impl fmt::Display for Gene {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gene::Lit(v, t) => write!(f, "Lit({v}:{t})"),
            Gene::Var(n) => write!(f, "Var({n})"),
            Gene::Local(i) => write!(f, "Local({i})"),
            Gene::App => f.write_str("APP"),
            Gene::Abs(ts) => {
                f.write_str("ABS[")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str("]")
            }
            Gene::Let => f.write_str("LET"),
            Gene::Open => f.write_str("OPEN"),
            Gene::Close => f.write_str("CLOSE"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad gene {token:?}: {message}")]
pub struct GeneParseError {
    pub token: String,
    pub message: String,
}

impl FromStr for Gene {
    type Err = GeneParseError;

    /// Accepts the printed form plus the long aliases `LocalVar(i)` and
    /// `Literal(v)`; an untyped literal takes the type of its value.
    fn from_str(tok: &str) -> Result<Self, Self::Err> {
        let err = |m: &str| GeneParseError { token: tok.to_string(), message: m.to_string() };
        match tok {
            "APP" => return Ok(Gene::App),
            "LET" => return Ok(Gene::Let),
            "OPEN" => return Ok(Gene::Open),
            "CLOSE" => return Ok(Gene::Close),
            _ => {}
        }
        if let Some(body) = tok.strip_prefix("ABS[").and_then(|r| r.strip_suffix(']')) {
            let types = split_top_level(body)
                .into_iter()
                .map(|t| t.parse::<Type>().map_err(|e| err(&e.to_string())))
                .collect::<Result<_, _>>()?;
            return Ok(Gene::Abs(types));
        }
        let (head, body) = tok
            .split_once('(')
            .and_then(|(h, r)| Some((h, r.strip_suffix(')')?)))
            .ok_or_else(|| err("unknown gene"))?;
        match head {
            "Var" if !body.is_empty() => Ok(Gene::Var(sym(body))),
            "Local" | "LocalVar" => body.parse().map(Gene::Local).map_err(|_| err("bad index")),
            "Lit" | "Literal" => {
                let mut r = Reader::new(body);
                let d = r.read().map_err(|e| err(&e.to_string()))?;
                let v = datum_to_value(&d).ok_or_else(|| err("not a literal"))?;
                let rest = r.rest().trim();
                let ty = match rest.strip_prefix(':') {
                    Some(t) => t.trim().parse::<Type>().map_err(|e| err(&e.to_string()))?,
                    None if rest.is_empty() => v.literal_type().ok_or_else(|| err("untyped literal"))?,
                    None => return Err(err("trailing text in literal")),
                };
                if !v.conforms(&ty) {
                    return Err(err("literal does not have its declared type"));
                }
                Ok(Gene::Lit(v, ty))
            }
            _ => Err(err("unknown gene")),
        }
    }
}

/// A linear plushy genome.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Genome(pub Vec<Gene>);

impl Genome {
    pub fn genes(&self) -> &[Gene] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<Gene>> for Genome {
    fn from(genes: Vec<Gene>) -> Self {
        Genome(genes)
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, g) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

impl FromStr for Genome {
    type Err = GeneParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let s = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')).unwrap_or(s);
        tokenize(s).into_iter().map(|t| t.parse()).collect::<Result<Vec<_>, _>>().map(Genome)
    }
}

/// Splits genome text on whitespace and commas that sit outside brackets,
/// parentheses and string literals.
fn tokenize(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut in_str = false;
    let mut start = None;
    let mut chars = s.char_indices();
    while let Some((i, c)) = chars.next() {
        let boundary = !in_str && depth == 0 && (c.is_whitespace() || c == ',');
        if boundary {
            if let Some(st) = start.take() {
                out.push(&s[st..i]);
            }
            continue;
        }
        start.get_or_insert(i);
        match c {
            '\\' => {
                chars.next();
            }
            '"' => in_str = !in_str,
            '(' | '[' if !in_str => depth += 1,
            ')' | ']' if !in_str => depth = depth.saturating_sub(1),
            _ => {}
        }
    }
    if let Some(st) = start {
        out.push(&s[st..]);
    }
    out
}

/// Comma-separated items of a type list, ignoring commas inside nesting.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = s[start..].trim();
    if !last.is_empty() || !out.is_empty() {
        out.push(last);
    }
    out
}

/// A nested push sequence: structure tokens have become nesting.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PushSeq(pub Vec<PushItem>);

#[derive(Clone, Debug, PartialEq)]
pub enum PushItem {
    Gene(Gene),
    Chunk(PushSeq),
}

impl PushSeq {
    pub fn items(&self) -> &[PushItem] {
        &self.0
    }

    /// The genes in order, nesting dropped.
    pub fn flatten(&self) -> Vec<Gene> {
        let mut out = Vec::new();
        self.flatten_into(&mut out);
        out
    }

    fn flatten_into(&self, out: &mut Vec<Gene>) {
        for item in &self.0 {
            match item {
                PushItem::Gene(g) => out.push(g.clone()),
                PushItem::Chunk(c) => c.flatten_into(out),
            }
        }
    }
}

impl fmt::Display for PushSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, item) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            match item {
                PushItem::Gene(g) => write!(f, "{g}")?,
                PushItem::Chunk(c) => write!(f, "{c}")?,
            }
        }
        f.write_str("]")
    }
}

/// Translates a plushy genome into a push sequence. Genes between an OPEN
/// and its matching CLOSE form one nested chunk; unmatched CLOSE genes are
/// dropped and unmatched OPEN genes are closed at the end.
pub fn translate_plushy(genes: &[Gene]) -> PushSeq {
    let mut stack: Vec<Vec<PushItem>> = vec![Vec::new()];
    for g in genes {
        match g {
            Gene::Open => stack.push(Vec::new()),
            Gene::Close => {
                if stack.len() > 1 {
                    let chunk = stack.pop().expect("nested level");
                    stack.last_mut().expect("root level").push(PushItem::Chunk(PushSeq(chunk)));
                }
            }
            g => stack.last_mut().expect("root level").push(PushItem::Gene(g.clone())),
        }
    }
    while stack.len() > 1 {
        let chunk = stack.pop().expect("nested level");
        stack.last_mut().expect("root level").push(PushItem::Chunk(PushSeq(chunk)));
    }
    PushSeq(stack.pop().expect("root level"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Variable,
    LocalVariable,
    Literal,
    ErcLiteral,
    Abstraction,
    Application,
    Open,
    Close,
}

impl Category {
    pub const ALL: [Category; 8] = [
        Category::Variable,
        Category::LocalVariable,
        Category::Literal,
        Category::ErcLiteral,
        Category::Abstraction,
        Category::Application,
        Category::Open,
        Category::Close,
    ];

    pub fn of(gene: &Gene) -> Category {
        match gene {
            Gene::Var(_) => Category::Variable,
            Gene::Local(_) => Category::LocalVariable,
            // Literal genes carry no provenance; ERC output is counted as Literal.
            Gene::Lit(..) => Category::Literal,
            Gene::Abs(_) | Gene::Let => Category::Abstraction,
            Gene::App => Category::Application,
            Gene::Open => Category::Open,
            Gene::Close => Category::Close,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SourceError {
    #[error("category weights sum to {0}, not 1")]
    WeightSum(f64),
    #[error("negative weight for {0:?}")]
    Negative(Category),
    #[error("no category with positive weight has any genes")]
    Empty,
    #[error("bad ERC range {0}")]
    Range(String),
}

/// Probability of each gene category.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    weights: [f64; 8],
}

impl Distribution {
    /// Variable .2, local variable .15, literal .15, ERC .1, abstraction .15,
    /// application .15, and .05 each for OPEN and CLOSE.
    pub fn standard() -> Self {
        Self { weights: [0.2, 0.15, 0.15, 0.1, 0.15, 0.15, 0.05, 0.05] }
    }

    pub fn new(weights: impl IntoIterator<Item = (Category, f64)>) -> Result<Self, SourceError> {
        let mut w = [0.0; 8];
        for (c, p) in weights {
            if p < 0.0 || p.is_nan() {
                return Err(SourceError::Negative(c));
            }
            w[c as usize] += p;
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(SourceError::WeightSum(total));
        }
        Ok(Self { weights: w })
    }

    pub fn weight(&self, c: Category) -> f64 {
        self.weights[c as usize]
    }
}

impl Default for Distribution {
    fn default() -> Self {
        Self::standard()
    }
}

/// Ephemeral random constant generators.
#[derive(Clone, Debug, PartialEq)]
pub enum Erc {
    Int { lo: i64, hi: i64 },
    Double { lo: f64, hi: f64 },
    Bool,
    /// Printable ASCII plus newline and tab.
    Char,
    /// Strings of printable characters with length in `0..=max_len`.
    Str { max_len: usize },
}

impl Erc {
    fn validate(&self) -> Result<(), SourceError> {
        match *self {
            Erc::Int { lo, hi } if lo > hi => Err(SourceError::Range(format!("{lo}..={hi}"))),
            Erc::Double { lo, hi } if lo.partial_cmp(&hi) != Some(Ordering::Less) => {
                Err(SourceError::Range(format!("{lo}..{hi}")))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Gene {
        match *self {
            Erc::Int { lo, hi } => Gene::Lit(Value::Int(rng.gen_range(lo..=hi)), Type::INT),
            Erc::Double { lo, hi } => {
                let d = (rng.gen_range(lo..hi) * 1e4).round() / 1e4;
                Gene::Lit(Value::Double(d), Type::DOUBLE)
            }
            Erc::Bool => Gene::Lit(Value::Bool(rng.gen()), Type::BOOLEAN),
            Erc::Char => Gene::Lit(Value::Char(random_char(rng)), Type::CHAR),
            Erc::Str { max_len } => {
                let n = rng.gen_range(0..=max_len);
                let s: String = (0..n).map(|_| random_char(rng)).collect();
                Gene::Lit(Value::str(&s), Type::STRING)
            }
        }
    }
}

/// A printable ASCII character, or occasionally newline or tab.
pub fn random_char<R: Rng + ?Sized>(rng: &mut R) -> char {
    match rng.gen_range(0..100) {
        0 => '\n',
        1 => '\t',
        _ => char::from(rng.gen_range(32u8..127)),
    }
}

/// The genes available to random generation and mutation.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneticSource {
    pub vars: Vec<(Symbol, Scheme)>,
    pub literals: Vec<(Value, Type)>,
    pub ercs: Vec<Erc>,
    pub abs_arities: Vec<Vec<Type>>,
    pub distribution: Distribution,
    weights: WeightedIndex<f64>,
}

impl GeneticSource {
    pub fn new(
        vars: Vec<(Symbol, Scheme)>,
        literals: Vec<(Value, Type)>,
        ercs: Vec<Erc>,
        abs_arities: Vec<Vec<Type>>,
        distribution: Distribution,
    ) -> Result<Self, SourceError> {
        ercs.iter().try_for_each(Erc::validate)?;
        let available = |c: Category| match c {
            Category::Variable => !vars.is_empty(),
            Category::Literal => !literals.is_empty(),
            Category::ErcLiteral => !ercs.is_empty(),
            _ => true,
        };
        let w: Vec<f64> = Category::ALL
            .iter()
            .map(|&c| if available(c) { distribution.weight(c) } else { 0.0 })
            .collect();
        let weights = WeightedIndex::new(&w).map_err(|_| SourceError::Empty)?;
        Ok(Self { vars, literals, ercs, abs_arities, distribution, weights })
    }

    /// Samples a category; unavailable categories have their mass spread
    /// proportionally over the rest.
    pub fn sample_category<R: Rng + ?Sized>(&self, rng: &mut R) -> Category {
        Category::ALL[self.weights.sample(rng)]
    }
}

pub fn random_gene<R: Rng + ?Sized>(src: &GeneticSource, rng: &mut R) -> Gene {
    match src.sample_category(rng) {
        Category::Variable => Gene::Var(src.vars.choose(rng).expect("nonempty").0.clone()),
        Category::LocalVariable => Gene::Local(rng.gen_range(0..LOCAL_INDEX_BOUND)),
        Category::Literal => {
            let (v, t) = src.literals.choose(rng).expect("nonempty");
            Gene::Lit(v.clone(), t.clone())
        }
        Category::ErcLiteral => src.ercs.choose(rng).expect("nonempty").sample(rng),
        Category::Abstraction => {
            let k = rng.gen_range(0..=src.abs_arities.len());
            match src.abs_arities.get(k) {
                Some(ts) => Gene::Abs(ts.clone()),
                None => Gene::Let,
            }
        }
        Category::Application => Gene::App,
        Category::Open => Gene::Open,
        Category::Close => Gene::Close,
    }
}

/// A genome whose length is uniform on `size_range` (inclusive).
pub fn random_genome<R: Rng + ?Sized>(
    src: &GeneticSource,
    size_range: (usize, usize),
    rng: &mut R,
) -> Genome {
    let (lo, hi) = size_range;
    assert!(lo <= hi, "empty genome size range");
    let n = rng.gen_range(lo..=hi);
    Genome((0..n).map(|_| random_gene(src, rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g(s: &str) -> Genome {
        s.parse().unwrap()
    }

    pub(crate) const FIG3: &str = "[OPEN, LocalVar(1), Literal(0), Var(max), APP, CLOSE, ABS[Int], \
        OPEN, Var(input), LocalVar(1), Var(map), APP, CLOSE, LET]";

    #[test]
    fn one_balanced_pair() {
        let seq = translate_plushy(g("Lit(0:Int) OPEN Var(max) CLOSE APP").genes());
        assert_eq!(seq.to_string(), "[Lit(0:Int) [Var(max)] APP]");
    }

    #[test]
    fn worked_genome_has_two_chunks() {
        let genome = g(FIG3);
        assert_eq!(genome.len(), 14);
        let seq = translate_plushy(genome.genes());
        assert_eq!(
            seq.to_string(),
            "[[Local(1) Lit(0:Int) Var(max) APP] ABS[Int] [Var(input) Local(1) Var(map) APP] LET]"
        );
    }

    #[test]
    fn unbalanced_structure() {
        let seq = translate_plushy(g("CLOSE Var(x) OPEN Var(y)").genes());
        let expected = PushSeq(vec![
            PushItem::Gene(Gene::Var(sym("x"))),
            PushItem::Chunk(PushSeq(vec![PushItem::Gene(Gene::Var(sym("y")))])),
        ]);
        assert_eq!(seq, expected);
        assert_eq!(translate_plushy(&vec![Gene::Close; 5]), PushSeq::default());
        let opens = translate_plushy(&vec![Gene::Open; 3]);
        assert_eq!(opens.to_string(), "[[[[]]]]");
    }

    #[test]
    fn text_round_trips() {
        let text = "OPEN Local(1) Lit(0:Int) Var(max) APP CLOSE ABS[Int] ABS[] ABS[Int, Sequence[Int]] \
            LET Lit(\"a b)\":String) Lit(\\space:Char) Lit(\\):Char) Lit([1 2]:Sequence[Int]) \
            Lit(-2.5:Double) Var(double-<) Lit([]:Sequence[Int])";
        let genome = g(text);
        assert_eq!(genome.len(), 17);
        assert_eq!(genome.to_string(), text);
        assert_eq!(g(&genome.to_string()), genome);
    }

    #[test]
    fn bad_genes_are_rejected() {
        for bad in ["FOO", "Var()", "Local(x)", "Lit(1:Boolean)", "ABS[Foo]", "Lit(1 2)"] {
            assert!(bad.parse::<Gene>().is_err(), "{bad}");
        }
    }

    fn source() -> GeneticSource {
        GeneticSource::new(
            vec![(sym("max"), "(Int, Int) -> Int".parse().unwrap())],
            vec![(Value::Int(0), Type::INT)],
            vec![Erc::Int { lo: -10, hi: 10 }],
            vec![vec![Type::INT], vec![]],
            Distribution::standard(),
        )
        .unwrap()
    }

    #[test]
    fn degenerate_distribution() {
        let dist = Distribution::new([(Category::Variable, 1.0)]).unwrap();
        let src = GeneticSource::new(
            vec![(sym("x"), Scheme::mono(Type::INT))],
            vec![],
            vec![],
            vec![],
            dist,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            assert_eq!(random_gene(&src, &mut rng), Gene::Var(sym("x")));
        }
    }

    #[test]
    fn distribution_validation() {
        assert!(matches!(
            Distribution::new([(Category::Variable, 0.5)]),
            Err(SourceError::WeightSum(_))
        ));
        let dist = Distribution::new([(Category::Literal, 1.0)]).unwrap();
        assert!(matches!(
            GeneticSource::new(vec![], vec![], vec![], vec![], dist),
            Err(SourceError::Empty)
        ));
        let total: f64 = Category::ALL.iter().map(|&c| Distribution::standard().weight(c)).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fixed_size_and_replay() {
        let src = source();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            assert_eq!(random_genome(&src, (3, 3), &mut rng).len(), 3);
        }
        let a = random_genome(&src, (50, 250), &mut ChaCha8Rng::seed_from_u64(9));
        let b = random_genome(&src, (50, 250), &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn erc_samples_respect_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let Gene::Lit(Value::Int(i), _) = (Erc::Int { lo: -3, hi: 3 }).sample(&mut rng) else {
                panic!("int erc")
            };
            assert!((-3..=3).contains(&i));
            let Gene::Lit(Value::Str(s), _) = (Erc::Str { max_len: 4 }).sample(&mut rng) else {
                panic!("string erc")
            };
            assert!(s.chars().count() <= 4);
        }
    }
}
