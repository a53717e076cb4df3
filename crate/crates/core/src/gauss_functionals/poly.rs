use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest total degree whose Gaussian mean is taken from the moment formula.
pub const MAX_EXACT_DEGREE: u32 = 12;

/// Sparse polynomial on R^n; keys are exponent vectors of length n.
#[derive(Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PolyFunctional {
    n: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

/// (k - 1)!! for even k, 0 for odd k: E[Z^k] for a standard normal Z.
pub fn gaussian_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    (1..k).step_by(2).map(f64::from).product()
}

impl PolyFunctional {
    pub fn zero(n: usize) -> Self {
        PolyFunctional { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::monomial(n, vec![0; n], c)
    }

    /// The coordinate x_{i+1}.
    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Self::monomial(n, e, 1.0)
    }

    pub fn monomial(n: usize, exps: Vec<u32>, c: f64) -> Self {
        assert_eq!(exps.len(), n, "exponent vector of the wrong length");
        let mut p = Self::zero(n);
        p.push(exps, c);
        p
    }

    fn push(&mut self, exps: Vec<u32>, c: f64) {
        if c == 0.0 {
            return;
        }
        let slot = self.terms.entry(exps.clone()).or_insert(0.0);
        *slot += c;
        if *slot == 0.0 {
            self.terms.remove(&exps);
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn coeff(&self, exps: &[u32]) -> f64 {
        self.terms.get(exps).copied().unwrap_or(0.0)
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// The same polynomial on R^m, m ≥ n.
    pub fn lift(&self, m: usize) -> Self {
        assert!(m >= self.n);
        let terms = self
            .terms
            .iter()
            .map(|(e, &c)| {
                let mut e = e.clone();
                e.resize(m, 0);
                (e, c)
            })
            .collect();
        PolyFunctional { n: m, terms }
    }

    fn same_dim(&self, o: &Self) -> (Self, Self) {
        let m = self.n.max(o.n);
        (self.lift(m), o.lift(m))
    }

    pub fn add(&self, o: &Self) -> Self {
        let (mut a, b) = self.same_dim(o);
        for (e, c) in b.terms {
            a.push(e, c);
        }
        a
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero(self.n);
        }
        PolyFunctional { n: self.n, terms: self.terms.iter().map(|(e, &c)| (e.clone(), c * s)).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let (a, b) = self.same_dim(o);
        let mut out = Self::zero(a.n);
        for (ea, &ca) in &a.terms {
            for (eb, &cb) in &b.terms {
                let e = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.push(e, ca * cb);
            }
        }
        out
    }

    pub fn powi(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(self.n, 1.0), |acc, _| acc.mul(self))
    }

    /// ∂/∂x_{i+1}.
    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.n);
        if i >= self.n {
            return out;
        }
        for (e, &c) in &self.terms {
            if e[i] > 0 {
                let mut d = e.clone();
                d[i] -= 1;
                out.push(d, c * f64::from(e[i]));
            }
        }
        out
    }

    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.n);
        for (e, &c) in &self.terms {
            for i in 0..self.n {
                if e[i] > 1 {
                    let mut d = e.clone();
                    d[i] -= 2;
                    out.push(d, c * f64::from(e[i] * (e[i] - 1)));
                }
            }
        }
        out
    }

    /// x·∇F: every monomial is scaled by its total degree.
    pub fn euler(&self) -> Self {
        let mut out = Self::zero(self.n);
        for (e, &c) in &self.terms {
            out.push(e.clone(), c * f64::from(e.iter().sum::<u32>()));
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert!(x.len() >= self.n);
        let mut s = 0.0;
        for (e, &c) in &self.terms {
            let mut t = c;
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    t *= xi.powi(k as i32);
                }
            }
            s += t;
        }
        s
    }

    /// ∫F dγ_n from the moment formula, when the degree allows it.
    pub fn gaussian_mean(&self) -> Option<f64> {
        (self.degree() <= MAX_EXACT_DEGREE).then(|| self.gaussian_mean_unchecked())
    }

    fn gaussian_mean_unchecked(&self) -> f64 {
        self.terms.iter().map(|(e, &c)| c * e.iter().map(|&k| gaussian_moment(k)).product::<f64>()).sum()
    }

    /// Coefficient-wise zero up to `rel` times `scale`.
    pub fn is_negligible(&self, scale: f64, rel: f64) -> bool {
        self.max_abs() <= rel * scale
    }
}

/// Lf = Δf - x·∇f.
pub fn ou_apply(f: &PolyFunctional) -> PolyFunctional {
    f.laplacian().sub(&f.euler())
}

/// Γ(F, G) = ∇F·∇G.
pub fn carre_du_champ(f: &PolyFunctional, g: &PolyFunctional) -> PolyFunctional {
    let n = f.dim().max(g.dim());
    (0..n).fold(PolyFunctional::zero(n), |acc, i| acc.add(&f.partial(i).mul(&g.partial(i))))
}

/// Relative tolerance of the eigenfunction test on f64 coefficients.
pub const EIGEN_REL_TOL: f64 = 1e-12;

/// λ > 0 with LF = -λF, if there is one.
pub fn eigen_check(f: &PolyFunctional) -> Option<f64> {
    let lf = ou_apply(f);
    let (e, c) = f.terms.iter().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?;
    let lambda = -lf.coeff(e) / c;
    if !(lambda > 0.0) {
        return None;
    }
    let resid = lf.add(&f.scale(lambda));
    resid.is_negligible(f.max_abs() * lambda.max(1.0), EIGEN_REL_TOL).then_some(lambda)
}

fn fmt_num(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        write!(f, "{}", c as i64)
    } else {
        write!(f, "{c}")
    }
}

impl fmt::Display for PolyFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        // highest degree first, then by exponent order
        let mut ts: Vec<_> = self.terms.iter().collect();
        ts.sort_by(|a, b| b.0.iter().sum::<u32>().cmp(&a.0.iter().sum::<u32>()).then_with(|| b.0.cmp(a.0)));
        for (k, (e, &c)) in ts.into_iter().enumerate() {
            let a = c.abs();
            match (k, c < 0.0) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let vars: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0)
                .map(|(i, &p)| if p == 1 { format!("x{}", i + 1) } else { format!("x{}^{p}", i + 1) })
                .collect();
            if vars.is_empty() || a != 1.0 {
                fmt_num(f, a)?;
                if !vars.is_empty() {
                    f.write_str("*")?;
                }
            }
            f.write_str(&vars.join("*"))?;
        }
        Ok(())
    }
}

impl fmt::Debug for PolyFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolyFunctional[n={}]({self})", self.n)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Var(usize),
    Sqrt,
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let err = |m: String| Error::Parse(format!("polynomial '{s}': {m}"));
    let b: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_digit() || c == '.' {
            let st = i;
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == '.') {
                i += 1;
            }
            if i < b.len() && (b[i] == 'e' || b[i] == 'E') {
                i += 1;
                if i < b.len() && (b[i] == '+' || b[i] == '-') {
                    i += 1;
                }
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let txt: String = b[st..i].iter().collect();
            out.push(Tok::Num(txt.parse().map_err(|_| err(format!("bad number '{txt}'")))?));
        } else if c == 'x' {
            i += 1;
            let st = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            let txt: String = b[st..i].iter().collect();
            let k: usize = txt.parse().map_err(|_| err("variables are x1, x2, ...".into()))?;
            if k == 0 {
                return Err(err("variables are numbered from 1".into()));
            }
            out.push(Tok::Var(k - 1));
        } else if b[i..].starts_with(&['s', 'q', 'r', 't']) {
            i += 4;
            out.push(Tok::Sqrt);
        } else if "+-*/^()".contains(c) {
            i += 1;
            out.push(Tok::Op(c));
        } else {
            return Err(err(format!("unexpected '{c}'")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [Tok],
    pos: usize,
    n: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn err(&self, m: &str) -> Error {
        Error::Parse(format!("polynomial '{}': {m}", self.src))
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<PolyFunctional> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc.add(&self.term()?);
            } else if self.eat('-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<PolyFunctional> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = acc.mul(&self.unary()?);
            } else if self.eat('/') {
                let d = self.unary()?;
                let c = self.as_constant(&d).ok_or_else(|| self.err("division by a non-constant"))?;
                if c == 0.0 {
                    return Err(self.err("division by zero"));
                }
                acc = acc.scale(1.0 / c);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<PolyFunctional> {
        if self.eat('-') {
            return Ok(self.unary()?.scale(-1.0));
        }
        if self.eat('+') {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat('^') {
            match self.peek() {
                Some(&Tok::Num(k)) if k >= 0.0 && k.fract() == 0.0 && k <= 64.0 => {
                    self.pos += 1;
                    return Ok(base.powi(k as u32));
                }
                _ => return Err(self.err("exponents are nonnegative integers")),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<PolyFunctional> {
        match self.peek().cloned() {
            Some(Tok::Num(c)) => {
                self.pos += 1;
                Ok(PolyFunctional::constant(self.n, c))
            }
            Some(Tok::Var(i)) => {
                self.pos += 1;
                Ok(PolyFunctional::var(self.n, i))
            }
            Some(Tok::Sqrt) => {
                self.pos += 1;
                if !self.eat('(') {
                    return Err(self.err("expected '(' after sqrt"));
                }
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("unbalanced parentheses"));
                }
                match self.as_constant(&inner) {
                    Some(c) if c >= 0.0 => Ok(PolyFunctional::constant(self.n, c.sqrt())),
                    _ => Err(self.err("sqrt takes a nonnegative constant")),
                }
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("unbalanced parentheses"));
                }
                Ok(e)
            }
            _ => Err(self.err("expected a number, a variable or '('")),
        }
    }

    fn as_constant(&self, p: &PolyFunctional) -> Option<f64> {
        (p.degree() == 0).then(|| p.coeff(&vec![0; self.n]))
    }
}

impl PolyFunctional {
    /// Parses e.g. `3*x1^2*x4 - 1.5*x2`, `(x1^2 - 1)/sqrt(2)`. The dimension is
    /// the largest index used, raised to `min_dim`.
    pub fn parse_in(s: &str, min_dim: usize) -> Result<Self> {
        let toks = tokenize(s)?;
        if toks.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        let n = toks.iter().filter_map(|t| if let Tok::Var(i) = t { Some(i + 1) } else { None }).max().unwrap_or(1).max(min_dim);
        let mut p = Parser { toks: &toks, pos: 0, n, src: s };
        let out = p.expr()?;
        if p.pos != toks.len() {
            return Err(p.err("trailing input"));
        }
        Ok(out)
    }
}

impl FromStr for PolyFunctional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_in(s, 1)
    }
}

/// Parses a `;`-separated vector of polynomials on a common R^n.
pub fn parse_vector(s: &str) -> Result<Vec<PolyFunctional>> {
    let parts: Vec<PolyFunctional> = s.split(';').filter(|p| !p.trim().is_empty()).map(str::parse).collect::<Result<_>>()?;
    if parts.is_empty() {
        return Err(Error::Parse("empty functional vector".into()));
    }
    Ok(common_dim(&parts))
}

/// Lifts every component to the largest dimension among them.
pub fn common_dim(fs: &[PolyFunctional]) -> Vec<PolyFunctional> {
    let n = fs.iter().map(PolyFunctional::dim).max().unwrap_or(1);
    fs.iter().map(|f| f.lift(n)).collect()
}

/// Σ_{i=1}^{pairs} x_{2i-1} x_{2i} on R^{2·pairs}.
pub fn sum_of_pairs(pairs: usize) -> PolyFunctional {
    let n = 2 * pairs;
    (0..pairs).fold(PolyFunctional::zero(n), |acc, i| acc.add(&PolyFunctional::var(n, 2 * i).mul(&PolyFunctional::var(n, 2 * i + 1))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PolyFunctional {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_print() {
        let f = p("3*x1^2*x4 - 1.5*x2");
        assert_eq!(f.dim(), 4);
        assert_eq!(f.coeff(&[2, 0, 0, 1]), 3.0);
        assert_eq!(f.coeff(&[0, 1, 0, 0]), -1.5);
        assert_eq!(format!("{f}"), "3*x1^2*x4 - 1.5*x2");
        assert_eq!(p(" 3 * x1 ^ 2 * x4-1.5*x2 "), f);
        assert_eq!(p("(x1^2 - 1)/sqrt(4)"), p("0.5*x1^2 - 0.5"));
        assert_eq!(p("-(x1 + x2)^2"), p("-x1^2 - 2*x1*x2 - x2^2"));
        assert_eq!(p("2e-1*x1"), p("0.2*x1"));
        for bad in ["", "x0", "x1^-1", "x1/x2", "(x1", "x1 x2", "y1", "sqrt(x1)"] {
            assert!(bad.parse::<PolyFunctional>().is_err(), "{bad}");
        }
        assert_eq!(parse_vector("x1; x2*x3").unwrap()[0].dim(), 3);
    }

    #[test]
    fn generator_examples() {
        assert_eq!(ou_apply(&p("x1")), p("-x1"));
        assert_eq!(ou_apply(&p("x1^2")), p("2 - 2*x1^2"));
        let f = sum_of_pairs(3);
        assert_eq!(ou_apply(&f), f.scale(-2.0));
        let r2 = (0..6).fold(PolyFunctional::zero(6), |a, i| a.add(&PolyFunctional::var(6, i).powi(2)));
        assert_eq!(carre_du_champ(&f, &f), r2);
        assert!(carre_du_champ(&p("x1"), &p("x2")).is_empty());
        let h2 = p("(x1^2 - 1)/sqrt(2)");
        let g = carre_du_champ(&h2, &h2);
        assert!((g.coeff(&[2]) - 2.0).abs() < 1e-15 && g.len() == 1);
    }

    #[test]
    fn eigenvalues() {
        assert_eq!(eigen_check(&p("x1")), Some(1.0));
        assert_eq!(eigen_check(&sum_of_pairs(5)), Some(2.0));
        assert_eq!(eigen_check(&p("x1^2")), None);
        assert_eq!(eigen_check(&p("x1^3 - 3*x1")), Some(3.0));
        assert_eq!(eigen_check(&p("4")), None);
        assert_eq!(eigen_check(&PolyFunctional::zero(2)), None);
    }

    #[test]
    fn moments() {
        assert_eq!(gaussian_moment(8), 105.0);
        assert_eq!(gaussian_moment(7), 0.0);
        assert_eq!(gaussian_moment(0), 1.0);
        assert_eq!(p("x1^4*x2^2 + x3").gaussian_mean(), Some(3.0));
        assert_eq!(p("x1^14").gaussian_mean(), None);
    }
}
