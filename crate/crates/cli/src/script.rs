//! Session scripts: a ring header, named pairs and boundaries, and a list
//! of commands.
//!
//! ```text
//! ring Fp(3) [u1, u2 ; y];      # optional `; y-vars` split
//! pair E = (y^3 + u1^4 : 3) & (u1*u2, y : 3/2) standard;
//! boundary B = u1, new u2;
//! ridge E;
//! blowup E center u1, y chart u1 boundary B;
//! ```

use std::fmt;

use idexp::field::Field;
use idexp::pair::{Component, Pair};
use idexp::poly::{rat, Poly, Ring};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingDecl {
    pub field: Field,
    pub u: Vec<String>,
    /// Variables of the `y` part; empty for an unsplit ring.
    pub y: Vec<String>,
}

impl RingDecl {
    pub fn ring(&self) -> Result<Ring, String> {
        let names: Vec<&String> = self.u.iter().chain(&self.y).collect();
        let ring = Ring::new(self.field, &names).map_err(|e| e.to_string())?;
        if self.y.is_empty() {
            Ok(ring)
        } else {
            ring.with_split(&self.y).map_err(|e| e.to_string())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryItem {
    pub poly: Poly,
    /// Created by an earlier blowup rather than given as old boundary.
    pub new: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Order { pair: String, at: Option<Vec<String>> },
    Sing { pair: String },
    Tangent { pair: String },
    Directrix { pair: String },
    Ridge { pair: String },
    Reduce { pair: String, chain: bool },
    Decompose { pair: String },
    Blowup { pair: String, center: Vec<String>, chart: String, boundary: Option<String> },
    Invariant { pair: String, depth: usize, boundary: Option<String> },
    Gb { pair: String },
    ResolveDet { m: usize, n: usize, r: usize },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Order { .. } => "order",
            Command::Sing { .. } => "sing",
            Command::Tangent { .. } => "tangent",
            Command::Directrix { .. } => "directrix",
            Command::Ridge { .. } => "ridge",
            Command::Reduce { .. } => "reduce",
            Command::Decompose { .. } => "decompose",
            Command::Blowup { .. } => "blowup",
            Command::Invariant { .. } => "invariant",
            Command::Gb { .. } => "gb",
            Command::ResolveDet { .. } => "resolve-det",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Statement {
    Pair { name: String, pair: Pair },
    Boundary { name: String, items: Vec<BoundaryItem> },
    Command(Command),
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Script {
    pub ring: Option<RingDecl>,
    pub statements: Vec<Statement>,
}

impl Script {
    pub fn pair(&self, name: &str) -> Option<&Pair> {
        self.statements.iter().find_map(|s| match s {
            Statement::Pair { name: n, pair } if n == name => Some(pair),
            _ => None,
        })
    }

    pub fn boundary(&self, name: &str) -> Option<&[BoundaryItem]> {
        self.statements.iter().find_map(|s| match s {
            Statement::Boundary { name: n, items } if n == name => Some(items.as_slice()),
            _ => None,
        })
    }

    pub fn pair_names(&self) -> Vec<&str> {
        self.statements
            .iter()
            .filter_map(|s| match s {
                Statement::Pair { name, .. } => Some(name.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn commands(&self) -> Vec<&Command> {
        self.statements
            .iter()
            .filter_map(|s| match s {
                Statement::Command(c) => Some(c),
                _ => None,
            })
            .collect()
    }

    pub fn field(&self) -> Field {
        self.ring.as_ref().map_or(Field::Rational, |r| r.field)
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        match self {
            Command::Order { pair, at } => {
                write!(f, " {}", pair)?;
                if let Some(at) = at {
                    write!(f, " at {}", join(at))?;
                }
            }
            Command::Sing { pair }
            | Command::Tangent { pair }
            | Command::Directrix { pair }
            | Command::Ridge { pair }
            | Command::Decompose { pair }
            | Command::Gb { pair } => write!(f, " {}", pair)?,
            Command::Reduce { pair, chain } => {
                write!(f, " {}", pair)?;
                if *chain {
                    write!(f, " chain")?;
                }
            }
            Command::Blowup { pair, center, chart, boundary } => {
                write!(f, " {} center {} chart {}", pair, join(center), chart)?;
                if let Some(b) = boundary {
                    write!(f, " boundary {}", b)?;
                }
            }
            Command::Invariant { pair, depth, boundary } => {
                write!(f, " {} depth {}", pair, depth)?;
                if let Some(b) = boundary {
                    write!(f, " boundary {}", b)?;
                }
            }
            Command::ResolveDet { m, n, r } => write!(f, " {} {} {}", m, n, r)?,
        }
        Ok(())
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = &self.ring {
            write!(f, "ring {} [{}", r.field.descriptor(), join(&r.u))?;
            if !r.y.is_empty() {
                write!(f, " ; {}", join(&r.y))?;
            }
            writeln!(f, "];")?;
        }
        for s in &self.statements {
            match s {
                Statement::Pair { name, pair } => {
                    let comps: Vec<String> = pair
                        .components()
                        .iter()
                        .map(|c| format!("({} : {})", join(&c.gens), c.weight))
                        .collect();
                    write!(f, "pair {} = {}", name, comps.join(" & "))?;
                    if pair.standard_basis {
                        write!(f, " standard")?;
                    }
                    writeln!(f, ";")?;
                }
                Statement::Boundary { name, items } => {
                    let parts: Vec<String> =
                        items.iter().map(|b| if b.new { format!("new {}", b.poly) } else { b.poly.to_string() }).collect();
                    writeln!(f, "boundary {} = {};", name, parts.join(", "))?;
                }
                Statement::Command(c) => writeln!(f, "{};", c)?,
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
    script: Script,
    ring: Option<Ring>,
}

pub fn parse(text: &str) -> Result<Script, ScriptError> {
    let mut p = Parser { src: text, chars: text.char_indices().collect(), pos: 0, script: Script::default(), ring: None };
    p.run()?;
    Ok(p.script)
}

impl<'a> Parser<'a> {
    fn location(&self, pos: usize) -> (usize, usize) {
        let byte = self.chars.get(pos).map_or(self.src.len(), |c| c.0);
        let before = &self.src[..byte];
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        (line, col)
    }

    fn err_at<T>(&self, pos: usize, message: impl Into<String>) -> Result<T, ScriptError> {
        let (line, col) = self.location(pos);
        Err(ScriptError { line, col, message: message.into() })
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ScriptError> {
        self.err_at(self.pos, message)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|c| c.1)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.pos += 1;
                }
            } else if c.is_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.chars.len()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ScriptError> {
        if self.eat(c) {
            Ok(())
        } else {
            let found = self.peek().map_or("end of input".to_string(), |x| format!("`{}`", x));
            self.err(format!("expected `{}`, found {}", c, found))
        }
    }

    fn word(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' || c == '-' {
                self.pos += 1;
            } else {
                break;
            }
        }
        (self.pos > start).then(|| self.chars[start..self.pos].iter().map(|c| c.1).collect())
    }

    fn ident(&mut self, what: &str) -> Result<String, ScriptError> {
        let start = self.pos;
        match self.word() {
            Some(w) => Ok(w),
            None => self.err_at(start.max(self.pos), format!("expected {}", what)),
        }
    }

    /// Next word if it equals `kw`; otherwise nothing is consumed.
    fn keyword(&mut self, kw: &str) -> bool {
        let save = self.pos;
        if self.word().as_deref() == Some(kw) {
            true
        } else {
            self.pos = save;
            false
        }
    }

    fn number(&mut self) -> Result<i64, ScriptError> {
        self.skip_ws();
        let start = self.pos;
        if self.peek() == Some('-') {
            self.pos += 1;
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let s: String = self.chars[start..self.pos].iter().map(|c| c.1).collect();
        match s.parse::<i64>() {
            Ok(n) => Ok(n),
            Err(_) => {
                self.pos = start;
                self.err("expected a number")
            }
        }
    }

    /// Raw text up to a depth-zero character in `stops`.
    fn raw_until(&mut self, stops: &[char]) -> (usize, String) {
        self.skip_ws();
        let start = self.pos;
        let mut depth = 0i32;
        while let Some(c) = self.peek() {
            if depth == 0 && (stops.contains(&c) || (c == ')' && stops.contains(&')'))) {
                break;
            }
            match c {
                '(' => depth += 1,
                ')' => depth -= 1,
                _ => {}
            }
            self.pos += 1;
        }
        (start, self.chars[start..self.pos].iter().map(|c| c.1).collect::<String>().trim().to_string())
    }

    fn poly(&mut self, stops: &[char]) -> Result<Poly, ScriptError> {
        let (start, text) = self.raw_until(stops);
        let Some(ring) = &self.ring else {
            return self.err_at(start, "polynomial before the ring declaration");
        };
        if text.is_empty() {
            return self.err_at(start, "expected a polynomial");
        }
        ring.parse(&text).or_else(|e| self.err_at(start, e.to_string()))
    }

    fn var_list(&mut self) -> Result<Vec<String>, ScriptError> {
        let mut out = Vec::new();
        loop {
            let start = self.pos;
            let v = self.ident("a variable name")?;
            if let Some(r) = &self.ring {
                if r.index(&v).is_err() {
                    return self.err_at(start, format!("unknown variable `{}`", v));
                }
            }
            out.push(v);
            if !self.eat(',') {
                return Ok(out);
            }
        }
    }

    fn defined(&self, name: &str) -> bool {
        self.script.pair(name).is_some() || self.script.boundary(name).is_some()
    }

    fn pair_ref(&mut self) -> Result<String, ScriptError> {
        self.skip_ws();
        let start = self.pos;
        let name = self.ident("a pair name")?;
        if self.script.pair(&name).is_none() {
            return self.err_at(start, format!("undefined pair `{}`", name));
        }
        Ok(name)
    }

    fn boundary_ref(&mut self) -> Result<Option<String>, ScriptError> {
        if !self.keyword("boundary") {
            return Ok(None);
        }
        self.skip_ws();
        let start = self.pos;
        let name = self.ident("a boundary name")?;
        if self.script.boundary(&name).is_none() {
            return self.err_at(start, format!("undefined boundary `{}`", name));
        }
        Ok(Some(name))
    }

    fn new_name(&mut self) -> Result<String, ScriptError> {
        self.skip_ws();
        let start = self.pos;
        let name = self.ident("a name")?;
        if self.defined(&name) {
            return self.err_at(start, format!("duplicate name `{}`", name));
        }
        Ok(name)
    }

    fn run(&mut self) -> Result<(), ScriptError> {
        while !self.at_end() {
            let start = self.pos;
            let kw = self.ident("a statement")?;
            match kw.as_str() {
                "ring" => self.ring_decl(start)?,
                "pair" => self.pair_decl()?,
                "boundary" => self.boundary_decl()?,
                _ => {
                    let c = self.command(&kw, start)?;
                    self.script.statements.push(Statement::Command(c));
                }
            }
            self.expect(';')?;
        }
        Ok(())
    }

    fn field(&mut self) -> Result<Field, ScriptError> {
        self.skip_ws();
        let start = self.pos;
        let name = self.ident("a field descriptor")?;
        match name.as_str() {
            "Q" => Ok(Field::Rational),
            "Fp" => {
                self.expect('(')?;
                let pstart = self.pos;
                let p = self.number()?;
                let lam = if self.eat(',') {
                    let ls = self.pos;
                    let l = self.ident("`lam`")?;
                    if l != "lam" {
                        return self.err_at(ls, format!("unknown field parameter `{}`", l));
                    }
                    true
                } else {
                    false
                };
                self.expect(')')?;
                let p = u64::try_from(p).unwrap_or(0);
                let f = if lam { Field::rational_function(p) } else { Field::prime(p) };
                f.or_else(|e| self.err_at(pstart, e.to_string()))
            }
            _ => self.err_at(start, format!("unknown field descriptor `{}`", name)),
        }
    }

    fn ring_decl(&mut self, start: usize) -> Result<(), ScriptError> {
        if self.script.ring.is_some() {
            return self.err_at(start, "second ring declaration");
        }
        let field = self.field()?;
        self.expect('[')?;
        let mut u = Vec::new();
        let mut y = Vec::new();
        let mut in_y = false;
        self.skip_ws();
        if self.peek() != Some(']') {
            loop {
                let vs = self.pos;
                let v = self.ident("a variable name")?;
                if u.contains(&v) || y.contains(&v) {
                    return self.err_at(vs, format!("duplicate variable `{}`", v));
                }
                if in_y { y.push(v) } else { u.push(v) }
                if self.eat(',') {
                    continue;
                }
                if !in_y && self.eat(';') {
                    in_y = true;
                    continue;
                }
                break;
            }
        }
        self.expect(']')?;
        let decl = RingDecl { field, u, y };
        let ring = decl.ring().or_else(|e| self.err_at(start, e))?;
        self.ring = Some(ring);
        self.script.ring = Some(decl);
        Ok(())
    }

    fn weight(&mut self) -> Result<idexp::BigRational, ScriptError> {
        self.skip_ws();
        let start = self.pos;
        let n = self.number()?;
        let d = if self.eat('/') { self.number()? } else { 1 };
        if d == 0 {
            return self.err_at(start, "zero denominator in weight");
        }
        let w = rat(n, d);
        if w <= rat(0, 1) {
            return self.err_at(start, "weight must be positive");
        }
        Ok(w)
    }

    fn pair_decl(&mut self) -> Result<(), ScriptError> {
        let name = self.new_name()?;
        self.expect('=')?;
        let mut comps = Vec::new();
        loop {
            self.expect('(')?;
            let mut gens = vec![self.poly(&[',', ':', ')'])?];
            while self.eat(',') {
                gens.push(self.poly(&[',', ':', ')'])?);
            }
            self.expect(':')?;
            let weight = self.weight()?;
            self.expect(')')?;
            comps.push(Component { gens, weight });
            if !self.eat('&') {
                break;
            }
        }
        let standard = self.keyword("standard");
        let ring = self.ring.clone().expect("ring checked by poly");
        let pair = Pair::new(&ring, comps).or_else(|e| self.err(e.to_string()))?.with_standard_basis(standard);
        self.script.statements.push(Statement::Pair { name, pair });
        Ok(())
    }

    fn boundary_decl(&mut self) -> Result<(), ScriptError> {
        let name = self.new_name()?;
        self.expect('=')?;
        let mut items = Vec::new();
        loop {
            let new = self.keyword("new");
            let poly = self.poly(&[',', ';'])?;
            items.push(BoundaryItem { poly, new });
            if !self.eat(',') {
                break;
            }
        }
        self.script.statements.push(Statement::Boundary { name, items });
        Ok(())
    }

    fn command(&mut self, kw: &str, start: usize) -> Result<Command, ScriptError> {
        let c = match kw {
            "order" => {
                let pair = self.pair_ref()?;
                let at = if self.keyword("at") { Some(self.var_list()?) } else { None };
                Command::Order { pair, at }
            }
            "sing" => Command::Sing { pair: self.pair_ref()? },
            "tangent" => Command::Tangent { pair: self.pair_ref()? },
            "directrix" => Command::Directrix { pair: self.pair_ref()? },
            "ridge" => Command::Ridge { pair: self.pair_ref()? },
            "decompose" => Command::Decompose { pair: self.pair_ref()? },
            "gb" => Command::Gb { pair: self.pair_ref()? },
            "reduce" => {
                let pair = self.pair_ref()?;
                Command::Reduce { pair, chain: self.keyword("chain") }
            }
            "blowup" => {
                let pair = self.pair_ref()?;
                if !self.keyword("center") {
                    return self.err("expected `center`");
                }
                let center = self.var_list()?;
                if !self.keyword("chart") {
                    return self.err("expected `chart`");
                }
                self.skip_ws();
                let cs = self.pos;
                let chart = self.ident("a chart variable")?;
                if !center.contains(&chart) {
                    return self.err_at(cs, format!("chart variable `{}` is not in the center", chart));
                }
                let boundary = self.boundary_ref()?;
                Command::Blowup { pair, center, chart, boundary }
            }
            "invariant" => {
                let pair = self.pair_ref()?;
                let mut depth = 2;
                let mut boundary = None;
                loop {
                    if self.keyword("depth") {
                        let ds = self.pos;
                        let d = self.number()?;
                        depth = usize::try_from(d).or_else(|_| self.err_at(ds, "depth must be nonnegative"))?;
                    } else if let Some(b) = self.boundary_ref()? {
                        boundary = Some(b);
                    } else {
                        break;
                    }
                }
                Command::Invariant { pair, depth, boundary }
            }
            "resolve-det" => {
                let mut dims = [0usize; 3];
                for d in dims.iter_mut() {
                    let s = self.pos;
                    let v = self.number()?;
                    *d = usize::try_from(v).ok().filter(|&x| x > 0).map_or_else(|| self.err_at(s, "size must be positive"), Ok)?;
                }
                let [m, n, r] = dims;
                if !(r <= m && m <= n) {
                    return self.err_at(start, format!("need r <= m <= n, got ({},{},{})", m, n, r));
                }
                Command::ResolveDet { m, n, r }
            }
            other => return self.err_at(start, format!("unknown statement `{}`", other)),
        };
        Ok(c)
    }
}
