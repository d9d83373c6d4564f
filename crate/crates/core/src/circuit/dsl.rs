//! Line-oriented circuit language.
//!
//! ```text
//! circuit bell                      # optional name
//! closed                            # optional: forbid dangling ports
//! sys Q : q2                        # quantum qubit; c3 = classical trit; trivial
//! node p : -> Q = prep(+)
//! node u : Q -> Q = kraus([[0, 1], [1, 0]])
//! node m : Q -> Q = kraus(up: [[1,0],[0,0]] ; down: [[0,0],[0,1]])
//! node f : Q -> = effect(z)
//! wire p.0 -> u.0
//! cond f on m : up -> 0 ; down -> 1
//! ```
//!
//! A declaration may span several lines while brackets are open. Scalars
//! accept `+ - * /`, parentheses, `i`, `pi`, `sqrt`, `exp`, `cos` and `sin`.
//! Builtin bodies: `gate(i|x|y|z|h|s|t|cnot|cz|swap)`, `measure(z|x)`,
//! `effect(z|x)`, `prep(k|+|-|[vector])`.
//!
//! `cond T on S` without a map selects event `k` of `T` when `S` produced
//! its `k`-th outcome. The source `$x` is the step's classical input and
//! always needs an explicit map.

use std::collections::HashMap;

use indexmap::IndexMap;

use super::doc::{CircuitDoc, Condition, Event, System, Test, Theory, Wire, CLASSICAL_INPUT};
use super::CircuitError;
use crate::linalg::{ComplexMatrix, C64};

const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub fn parse(text: &str) -> Result<CircuitDoc, CircuitError> {
    let mut b = Builder::default();
    for (line, content) in logical_lines(text)? {
        b.statement(line, &content)?;
    }
    b.finish()
}

/// Joins physical lines while brackets are open and strips `#` comments.
fn logical_lines(text: &str) -> Result<Vec<(usize, String)>, CircuitError> {
    let mut out = Vec::new();
    let mut buf = String::new();
    let mut start = 0;
    let mut depth: i64 = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        if buf.is_empty() {
            start = i + 1;
        } else {
            buf.push(' ');
        }
        buf.push_str(line);
        depth += line.chars().map(|c| match c {
            '(' | '[' => 1,
            ')' | ']' => -1,
            _ => 0,
        }).sum::<i64>();
        if depth < 0 {
            return Err(syntax(i + 1, 1, "unbalanced closing bracket"));
        }
        if depth == 0 {
            if !buf.trim().is_empty() {
                out.push((start, std::mem::take(&mut buf)));
            }
            buf.clear();
        }
    }
    if depth != 0 {
        return Err(syntax(start, 1, "unclosed bracket at end of input"));
    }
    Ok(out)
}

fn syntax(line: usize, col: usize, message: impl Into<String>) -> CircuitError {
    CircuitError::Syntax {
        line,
        col,
        message: message.into(),
    }
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn new(s: &'a str, line: usize) -> Self {
        Self { s, pos: 0, line }
    }

    fn err(&self, message: impl Into<String>) -> CircuitError {
        let col = self.s[..self.pos].chars().count() + 1;
        syntax(self.line, col, message)
    }

    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.s.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), CircuitError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{token}`")))
        }
    }

    fn ident(&mut self) -> Result<String, CircuitError> {
        self.skip_ws();
        let len: usize = self
            .rest()
            .chars()
            .take_while(|&c| c.is_alphanumeric() || c == '_' || c == '\'' || c == '$')
            .map(char::len_utf8)
            .sum();
        if len == 0 {
            return Err(self.err("expected an identifier"));
        }
        let id = self.rest()[..len].to_string();
        self.pos += len;
        Ok(id)
    }

    /// A bare word: anything up to whitespace or one of `;:,()[]`.
    fn word(&mut self) -> Result<String, CircuitError> {
        self.skip_ws();
        let len: usize = self
            .rest()
            .chars()
            .take_while(|&c| !c.is_whitespace() && !";:,()[]".contains(c))
            .map(char::len_utf8)
            .sum();
        if len == 0 {
            return Err(self.err("expected a label"));
        }
        let w = self.rest()[..len].to_string();
        self.pos += len;
        if w.starts_with("->") {
            return Err(self.err("expected a label, found `->`"));
        }
        Ok(w)
    }

    fn uint(&mut self) -> Result<usize, CircuitError> {
        self.skip_ws();
        let len = self.rest().chars().take_while(char::is_ascii_digit).count();
        if len == 0 {
            return Err(self.err("expected an integer"));
        }
        let v = self.rest()[..len].parse().map_err(|_| self.err("integer out of range"))?;
        self.pos += len;
        Ok(v)
    }

    fn number(&mut self) -> Result<f64, CircuitError> {
        self.skip_ws();
        let bytes = self.rest().as_bytes();
        let mut len = 0;
        while len < bytes.len() && (bytes[len].is_ascii_digit() || bytes[len] == b'.') {
            len += 1;
        }
        if len < bytes.len() && (bytes[len] == b'e' || bytes[len] == b'E') {
            let mut j = len + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                len = j;
            }
        }
        let v: f64 = self.rest()[..len].parse().map_err(|_| self.err("malformed number"))?;
        self.pos += len;
        Ok(v)
    }

    // scalar := term (('+'|'-') term)*
    fn scalar(&mut self) -> Result<C64, CircuitError> {
        let mut acc = if self.eat("-") {
            -self.term()?
        } else {
            self.eat("+");
            self.term()?
        };
        loop {
            if self.eat("+") {
                acc += self.term()?;
            } else if self.rest().trim_start().starts_with("->") {
                return Ok(acc);
            } else if self.eat("-") {
                acc -= self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    // term := unary (('*'|'/') unary)*
    fn term(&mut self) -> Result<C64, CircuitError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat("*") {
                acc *= self.unary()?;
            } else if self.eat("/") {
                let d = self.unary()?;
                if d.norm() == 0.0 {
                    return Err(self.err("division by zero"));
                }
                acc /= d;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<C64, CircuitError> {
        if self.eat("-") {
            return Ok(-self.atom()?);
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<C64, CircuitError> {
        match self.peek() {
            Some('(') => {
                self.expect("(")?;
                let v = self.scalar()?;
                self.expect(")")?;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let v = self.number()?;
                // `0.5i` is imaginary; `i` must not start a longer word.
                if self.rest().starts_with('i')
                    && !self.rest()[1..].starts_with(|c: char| c.is_alphanumeric())
                {
                    self.pos += 1;
                    Ok(C64::new(0.0, v))
                } else {
                    Ok(C64::new(v, 0.0))
                }
            }
            Some(c) if c.is_alphabetic() => {
                let name = self.ident()?;
                match name.as_str() {
                    "i" => Ok(C64::new(0.0, 1.0)),
                    "pi" => Ok(C64::new(std::f64::consts::PI, 0.0)),
                    "sqrt" => {
                        self.expect("(")?;
                        let v = self.scalar()?;
                        self.expect(")")?;
                        Ok(v.sqrt())
                    }
                    f @ ("exp" | "cos" | "sin") => {
                        self.expect("(")?;
                        let v = self.scalar()?;
                        self.expect(")")?;
                        Ok(match f {
                            "exp" => v.exp(),
                            "cos" => v.cos(),
                            _ => v.sin(),
                        })
                    }
                    other => Err(self.err(format!("unknown symbol `{other}` in scalar"))),
                }
            }
            _ => Err(self.err("expected a scalar")),
        }
    }

    fn vector(&mut self) -> Result<Vec<C64>, CircuitError> {
        self.expect("[")?;
        let mut out = vec![self.scalar()?];
        while self.eat(",") {
            out.push(self.scalar()?);
        }
        self.expect("]")?;
        Ok(out)
    }

    fn matrix(&mut self) -> Result<ComplexMatrix, CircuitError> {
        self.expect("[")?;
        let mut rows = vec![self.vector()?];
        while self.eat(",") {
            rows.push(self.vector()?);
        }
        self.expect("]")?;
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(self.err("ragged matrix"));
        }
        let nrows = rows.len();
        ComplexMatrix::new(nrows, cols, rows.into_iter().flatten().collect())
            .map_err(|e| self.err(e.to_string()))
    }
}

#[derive(Default)]
struct Builder {
    name: Option<String>,
    closed: bool,
    systems: Vec<System>,
    sys_dims: HashMap<String, usize>,
    nodes: Vec<Test>,
    node_pos: HashMap<String, usize>,
    wires: Vec<Wire>,
    conds: Vec<(usize, String, Option<IndexMap<String, Vec<usize>>>, usize)>,
}

impl Builder {
    fn statement(&mut self, line: usize, text: &str) -> Result<(), CircuitError> {
        let mut c = Cursor::new(text, line);
        let kw = c.ident()?;
        match kw.as_str() {
            "circuit" => self.name = Some(c.word()?),
            "closed" => self.closed = true,
            "open" => self.closed = false,
            "sys" => self.system(&mut c)?,
            "node" => self.node(&mut c)?,
            "wire" => self.wire(&mut c)?,
            "cond" => self.cond(&mut c)?,
            other => return Err(syntax(line, 1, format!("unknown declaration `{other}`"))),
        }
        if !c.at_end() {
            return Err(c.err("unexpected trailing input"));
        }
        Ok(())
    }

    fn system(&mut self, c: &mut Cursor) -> Result<(), CircuitError> {
        let label = c.ident()?;
        c.expect(":")?;
        let ty = c.ident()?;
        let (theory, dim) = if ty == "trivial" {
            (Theory::Trivial, 1)
        } else {
            let (head, digits) = ty.split_at(1);
            let dim: usize = digits.parse().map_err(|_| c.err(format!("bad system type `{ty}`")))?;
            match head {
                "q" => (Theory::Quantum, dim),
                "c" => (Theory::Classical, dim),
                _ => return Err(c.err(format!("bad system type `{ty}` (use qN, cN or trivial)"))),
            }
        };
        if dim == 0 {
            return Err(c.err("system dimension must be positive"));
        }
        self.sys_dims.insert(label.clone(), dim);
        self.systems.push(System { label, dim, theory });
        Ok(())
    }

    fn port_list(&self, c: &mut Cursor, stop: &str) -> Result<Vec<String>, CircuitError> {
        let mut out = Vec::new();
        loop {
            c.skip_ws();
            if c.rest().starts_with(stop) || c.at_end() {
                return Ok(out);
            }
            let id = c.ident()?;
            if id != "I" || self.sys_dims.contains_key("I") {
                out.push(id);
            }
        }
    }

    fn node(&mut self, c: &mut Cursor) -> Result<(), CircuitError> {
        let label = c.ident()?;
        c.expect(":")?;
        let inputs = self.port_list(c, "->")?;
        c.expect("->")?;
        let outputs = self.port_list(c, "=")?;
        c.expect("=")?;
        let dims = |ports: &[String], c: &Cursor| -> Result<Vec<usize>, CircuitError> {
            ports
                .iter()
                .map(|p| {
                    self.sys_dims
                        .get(p)
                        .copied()
                        .ok_or_else(|| c.err(format!("unknown system `{p}` (declare systems before nodes)")))
                })
                .collect()
        };
        let in_dims = dims(&inputs, c)?;
        let out_dims = dims(&outputs, c)?;
        let events = body(c, &in_dims, &out_dims)?;
        if self.node_pos.insert(label.clone(), self.nodes.len()).is_some() {
            return Err(c.err(format!("node `{label}` declared twice")));
        }
        self.nodes.push(Test {
            label,
            inputs,
            outputs,
            events,
            condition: None,
        });
        Ok(())
    }

    fn wire(&mut self, c: &mut Cursor) -> Result<(), CircuitError> {
        let endpoint = |c: &mut Cursor| -> Result<(String, usize), CircuitError> {
            let n = c.ident()?;
            c.expect(".")?;
            Ok((n, c.uint()?))
        };
        let from = endpoint(c)?;
        c.expect("->")?;
        let to = endpoint(c)?;
        self.wires.push(Wire { from, to });
        Ok(())
    }

    fn cond(&mut self, c: &mut Cursor) -> Result<(), CircuitError> {
        let target = c.ident()?;
        let kw = c.ident()?;
        if kw != "on" {
            return Err(c.err("expected `on`"));
        }
        let source = c.ident()?;
        let map = if c.eat(":") {
            let mut map = IndexMap::new();
            loop {
                let key = c.word()?;
                c.expect("->")?;
                let mut idx = vec![c.uint()?];
                while matches!(c.peek(), Some(ch) if ch.is_ascii_digit()) {
                    idx.push(c.uint()?);
                }
                if map.insert(key.clone(), idx).is_some() {
                    return Err(c.err(format!("branch `{key}` repeated")));
                }
                if !c.eat(";") {
                    break;
                }
            }
            Some(map)
        } else {
            None
        };
        if map.is_none() && source == CLASSICAL_INPUT {
            return Err(c.err("conditioning on `$x` needs an explicit map"));
        }
        let line = c.line;
        self.conds.push((self.node_pos.get(&target).copied().unwrap_or(usize::MAX), source, map, line));
        if self.node_pos.get(&target).is_none() {
            return Err(syntax(line, 1, format!("cond on undeclared node `{target}`")));
        }
        Ok(())
    }

    fn finish(mut self) -> Result<CircuitDoc, CircuitError> {
        for (target, source, map, line) in std::mem::take(&mut self.conds) {
            let map = match map {
                Some(m) => m,
                None => {
                    let Some(&s) = self.node_pos.get(&source) else {
                        return Err(syntax(line, 1, format!("cond on unknown source `{source}`")));
                    };
                    self.nodes[s]
                        .events
                        .iter()
                        .enumerate()
                        .map(|(k, e)| (e.outcome.clone(), vec![k]))
                        .collect()
                }
            };
            if self.nodes[target].condition.is_some() {
                return Err(syntax(line, 1, format!("node `{}` conditioned twice", self.nodes[target].label)));
            }
            self.nodes[target].condition = Some(Condition { source, map });
        }
        Ok(CircuitDoc {
            name: self.name.unwrap_or_else(|| "circuit".into()),
            systems: self.systems,
            nodes: self.nodes,
            wires: self.wires,
            closed: self.closed,
        })
    }
}

fn real(rows: usize, cols: usize, data: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_real(rows, cols, data).expect("builtin matrices are well formed")
}

fn named_gate(name: &str) -> Option<ComplexMatrix> {
    let i = C64::new(0.0, 1.0);
    Some(match name {
        "x" => real(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        "y" => ComplexMatrix::new(2, 2, vec![0.0.into(), -i, i, 0.0.into()]).ok()?,
        "z" => real(2, 2, &[1.0, 0.0, 0.0, -1.0]),
        "h" => real(2, 2, &[S, S, S, -S]),
        "s" => ComplexMatrix::new(2, 2, vec![1.0.into(), 0.0.into(), 0.0.into(), i]).ok()?,
        "t" => ComplexMatrix::new(
            2,
            2,
            vec![1.0.into(), 0.0.into(), 0.0.into(), C64::from_polar(1.0, std::f64::consts::FRAC_PI_4)],
        )
        .ok()?,
        "cnot" | "cx" => real(
            4,
            4,
            &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
        ),
        "cz" => ComplexMatrix::diagonal(&[1.0, 1.0, 1.0, -1.0]),
        "swap" => real(
            4,
            4,
            &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        ),
        _ => return None,
    })
}

/// Basis for `measure`/`effect`: computational for any dim, `x` for qubits.
fn basis(c: &Cursor, kind: &str, d: usize) -> Result<Vec<Vec<f64>>, CircuitError> {
    match kind {
        "z" => Ok((0..d).map(|k| (0..d).map(|j| if j == k { 1.0 } else { 0.0 }).collect()).collect()),
        "x" if d == 2 => Ok(vec![vec![S, S], vec![S, -S]]),
        "x" => Err(c.err("x basis is defined for qubits only")),
        other => Err(c.err(format!("unknown basis `{other}`"))),
    }
}

fn body(c: &mut Cursor, in_dims: &[usize], out_dims: &[usize]) -> Result<Vec<Event>, CircuitError> {
    let din: usize = in_dims.iter().product();
    let dout: usize = out_dims.iter().product();
    let kind = c.ident()?;
    c.expect("(")?;
    let events = match kind.as_str() {
        "kraus" => {
            let mut events = Vec::new();
            loop {
                let label = if c.peek() == Some('[') {
                    events.len().to_string()
                } else {
                    let w = c.word()?;
                    c.expect(":")?;
                    w
                };
                let mut kraus = vec![c.matrix()?];
                while c.eat(",") {
                    kraus.push(c.matrix()?);
                }
                events.push(Event { outcome: label, kraus });
                if !c.eat(";") {
                    break;
                }
            }
            events
        }
        "gate" => {
            let name = c.ident()?.to_lowercase();
            let op = if name == "i" || name == "id" {
                if din != dout {
                    return Err(c.err("identity needs equal input and output dimension"));
                }
                ComplexMatrix::identity(din)
            } else {
                named_gate(&name).ok_or_else(|| c.err(format!("unknown gate `{name}`")))?
            };
            if op.shape() != (dout, din) {
                return Err(c.err(format!("gate `{name}` does not fit signature {din} -> {dout}")));
            }
            vec![Event::atomic("0", op)]
        }
        "measure" | "effect" => {
            if in_dims.len() != 1 {
                return Err(c.err(format!("{kind} acts on exactly one input system")));
            }
            let keep = kind == "measure";
            if keep && out_dims != in_dims {
                return Err(c.err("measure must output the measured system"));
            }
            if !keep && !out_dims.is_empty() {
                return Err(c.err("effect has no outputs"));
            }
            let b = c.ident()?.to_lowercase();
            basis(c, &b, din)?
                .into_iter()
                .enumerate()
                .map(|(k, v)| {
                    let bra = real(1, din, &v);
                    let op = if keep { &bra.adjoint() * &bra } else { bra };
                    Event::atomic(k.to_string(), op)
                })
                .collect()
        }
        "prep" => {
            if !in_dims.is_empty() {
                return Err(c.err("prep has no inputs"));
            }
            let amps: Vec<C64> = match c.peek() {
                Some('[') => c.vector()?,
                Some('+') | Some('-') => {
                    let sign = if c.eat("+") { 1.0 } else { c.expect("-").map(|_| -1.0)? };
                    if dout != 2 {
                        return Err(c.err("prep(+/-) needs a qubit"));
                    }
                    vec![C64::new(S, 0.0), C64::new(sign * S, 0.0)]
                }
                _ => {
                    let k = c.uint()?;
                    if k >= dout {
                        return Err(c.err(format!("basis index {k} out of range for dimension {dout}")));
                    }
                    (0..dout).map(|j| C64::new(if j == k { 1.0 } else { 0.0 }, 0.0)).collect()
                }
            };
            let n = amps.len();
            let ket = ComplexMatrix::new(n, 1, amps).map_err(|e| c.err(e.to_string()))?;
            vec![Event::atomic("0", ket)]
        }
        other => return Err(c.err(format!("unknown node body `{other}`"))),
    };
    c.expect(")")?;
    Ok(events)
}
