//! S-expression syntax for circuits.
//!
//! Grammar: atoms are `x<k>` (publisher bit), `b<k>` (subscriber bit), `0`,
//! `1`, and let-bound names; forms are `(not e)`, `(and e e)`, `(or e e)`
//! and `(let ((name e) ...) e)`. Bindings are sequential — each binding sees
//! the ones before it — which is what lets a shared subcircuit round-trip
//! through text as a DAG.

use std::collections::HashMap;

use super::{Circuit, CircuitBuilder, CircuitError, Gate, InputBit, NodeId};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    LParen,
    RParen,
    Atom(String),
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: u32,
    col: u32,
}

fn tokenize(text: &str) -> Vec<(Token, Pos)> {
    let mut out = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut atom = String::new();
    let mut atom_pos = Pos { line: 1, col: 1 };

    let flush = |atom: &mut String, pos: Pos, out: &mut Vec<(Token, Pos)>| {
        if !atom.is_empty() {
            out.push((Token::Atom(std::mem::take(atom)), pos));
        }
    };

    for ch in text.chars() {
        match ch {
            '(' | ')' => {
                flush(&mut atom, atom_pos, &mut out);
                let tok = if ch == '(' { Token::LParen } else { Token::RParen };
                out.push((tok, Pos { line, col }));
                col += 1;
            }
            '\n' => {
                flush(&mut atom, atom_pos, &mut out);
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                flush(&mut atom, atom_pos, &mut out);
                col += 1;
            }
            c => {
                if atom.is_empty() {
                    atom_pos = Pos { line, col };
                }
                atom.push(c);
                col += 1;
            }
        }
    }
    flush(&mut atom, atom_pos, &mut out);
    out
}

struct Parser<'a> {
    tokens: &'a [(Token, Pos)],
    pos: usize,
    builder: CircuitBuilder,
    scopes: Vec<HashMap<String, NodeId>>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&(Token, Pos)> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<(Token, Pos)> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn end_pos(&self) -> Pos {
        self.tokens.last().map(|&(_, p)| p).unwrap_or(Pos { line: 1, col: 1 })
    }

    fn err(pos: Pos, msg: impl Into<String>) -> CircuitError {
        CircuitError::Parse { line: pos.line, col: pos.col, msg: msg.into() }
    }

    fn lookup(&self, name: &str) -> Option<NodeId> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn atom_expr(&mut self, name: &str, pos: Pos) -> Result<NodeId, CircuitError> {
        if let Some(id) = self.lookup(name) {
            return Ok(id);
        }
        match name {
            "0" => return Ok(self.builder.constant(false)),
            "1" => return Ok(self.builder.constant(true)),
            _ => {}
        }
        if let Some(rest) = name.strip_prefix('x').or_else(|| name.strip_prefix('b')) {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                let k: u32 = rest.parse().map_err(|_| {
                    Self::err(pos, format!("input ordinal in {name:?} is out of range"))
                })?;
                let bit = if name.starts_with('x') {
                    InputBit::Publisher(k)
                } else {
                    InputBit::Subscriber(k)
                };
                return Ok(self.builder.input(bit));
            }
        }
        Err(CircuitError::UnknownSymbol { name: name.into(), line: pos.line, col: pos.col })
    }

    fn expr(&mut self) -> Result<NodeId, CircuitError> {
        match self.next() {
            None => Err(Self::err(self.end_pos(), "unexpected end of input")),
            Some((Token::RParen, pos)) => Err(Self::err(pos, "unexpected ')'")),
            Some((Token::Atom(name), pos)) => self.atom_expr(&name, pos),
            Some((Token::LParen, lpos)) => {
                let (op, op_pos) = match self.next() {
                    Some((Token::Atom(op), p)) => (op, p),
                    Some((Token::LParen, p)) => {
                        return Err(Self::err(p, "operator must be a symbol"))
                    }
                    Some((Token::RParen, p)) => return Err(Self::err(p, "empty form")),
                    None => return Err(Self::err(lpos, "unclosed '('")),
                };
                match op.as_str() {
                    "not" | "and" | "or" => self.operator_form(&op, op_pos),
                    "let" => self.let_form(op_pos),
                    _ => Err(CircuitError::UnknownSymbol {
                        name: op,
                        line: op_pos.line,
                        col: op_pos.col,
                    }),
                }
            }
        }
    }

    fn operator_form(&mut self, op: &str, op_pos: Pos) -> Result<NodeId, CircuitError> {
        let expected = if op == "not" { 1 } else { 2 };
        let mut operands = Vec::new();
        loop {
            match self.peek() {
                Some((Token::RParen, _)) => {
                    self.pos += 1;
                    break;
                }
                None => return Err(Self::err(self.end_pos(), "unclosed '('")),
                _ => operands.push(self.expr()?),
            }
        }
        if operands.len() != expected {
            return Err(CircuitError::Arity {
                op: op.into(),
                line: op_pos.line,
                col: op_pos.col,
                expected,
                got: operands.len(),
            });
        }
        Ok(match op {
            "not" => self.builder.not(operands[0]),
            "and" => self.builder.and(operands[0], operands[1]),
            _ => self.builder.or(operands[0], operands[1]),
        })
    }

    fn let_form(&mut self, op_pos: Pos) -> Result<NodeId, CircuitError> {
        match self.next() {
            Some((Token::LParen, _)) => {}
            Some((_, p)) => return Err(Self::err(p, "let expects a binding list")),
            None => return Err(Self::err(self.end_pos(), "let expects a binding list")),
        }
        self.scopes.push(HashMap::new());
        let result = self.let_bindings_and_body(op_pos);
        self.scopes.pop();
        result
    }

    fn let_bindings_and_body(&mut self, op_pos: Pos) -> Result<NodeId, CircuitError> {
        loop {
            match self.next() {
                Some((Token::RParen, _)) => break,
                Some((Token::LParen, _)) => {
                    let (name, name_pos) = match self.next() {
                        Some((Token::Atom(n), p)) => (n, p),
                        Some((_, p)) => return Err(Self::err(p, "binding name must be a symbol")),
                        None => return Err(Self::err(self.end_pos(), "unclosed binding")),
                    };
                    if is_reserved_name(&name) {
                        return Err(Self::err(
                            name_pos,
                            format!("binding name {name:?} collides with a reserved atom"),
                        ));
                    }
                    let value = self.expr()?;
                    match self.next() {
                        Some((Token::RParen, _)) => {}
                        Some((_, p)) => return Err(Self::err(p, "binding takes one expression")),
                        None => return Err(Self::err(self.end_pos(), "unclosed binding")),
                    }
                    self.scopes.last_mut().unwrap().insert(name, value);
                }
                Some((_, p)) => return Err(Self::err(p, "expected a (name expr) binding")),
                None => return Err(Self::err(self.end_pos(), "unclosed binding list")),
            }
        }
        let body = self.expr()?;
        match self.next() {
            Some((Token::RParen, _)) => Ok(body),
            Some((_, p)) => Err(Self::err(p, "let takes a single body expression")),
            None => Err(Self::err(op_pos, "unclosed let")),
        }
    }
}

fn is_reserved_name(name: &str) -> bool {
    if matches!(name, "0" | "1" | "not" | "and" | "or" | "let") {
        return true;
    }
    if let Some(rest) = name.strip_prefix('x').or_else(|| name.strip_prefix('b')) {
        if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
            return true;
        }
    }
    false
}

/// Parses circuit text; see the module docs for the grammar.
pub fn parse_sexp(text: &str) -> Result<Circuit, CircuitError> {
    let tokens = tokenize(text);
    let mut parser = Parser { tokens: &tokens, pos: 0, builder: CircuitBuilder::new(), scopes: Vec::new() };
    let output = parser.expr()?;
    if let Some((_, pos)) = parser.peek() {
        return Err(Parser::err(*pos, "trailing tokens after expression"));
    }
    Ok(parser.builder.finish(output))
}

/// Prints a circuit in canonical form: minimal whitespace, and interior
/// nodes referenced more than once become sequential let bindings so the
/// DAG survives a round-trip. `print_sexp ∘ parse_sexp` is the identity on
/// its own output.
pub fn print_sexp(c: &Circuit) -> String {
    // Reference counts within the output cone.
    let mut refs = vec![0u32; c.gates().len()];
    let mut stack = vec![c.output()];
    let mut visited = vec![false; c.gates().len()];
    refs[c.output() as usize] = 1;
    while let Some(id) = stack.pop() {
        if visited[id as usize] {
            continue;
        }
        visited[id as usize] = true;
        let visit = |child: NodeId, refs: &mut Vec<u32>, stack: &mut Vec<NodeId>| {
            refs[child as usize] += 1;
            stack.push(child);
        };
        match c.gate(id) {
            Gate::Input(_) | Gate::Const(_) => {}
            Gate::Not(a) => visit(a, &mut refs, &mut stack),
            Gate::And(a, b) | Gate::Or(a, b) => {
                visit(a, &mut refs, &mut stack);
                visit(b, &mut refs, &mut stack);
            }
        }
    }

    // Interior nodes referenced at least twice get a name; leaves are cheap
    // enough to repeat inline.
    let mut names: HashMap<NodeId, String> = HashMap::new();
    let mut bindings: Vec<NodeId> = Vec::new();
    for id in 0..c.gates().len() as NodeId {
        let shared = visited[id as usize]
            && refs[id as usize] > 1
            && !matches!(c.gate(id), Gate::Input(_) | Gate::Const(_));
        if shared {
            names.insert(id, format!("t{}", bindings.len()));
            bindings.push(id);
        }
    }

    fn render(c: &Circuit, id: NodeId, names: &HashMap<NodeId, String>, defining: Option<NodeId>) -> String {
        if defining != Some(id) {
            if let Some(name) = names.get(&id) {
                return name.clone();
            }
        }
        match c.gate(id) {
            Gate::Input(bit) => match bit {
                InputBit::Dummy => "0".to_string(),
                other => other.to_string(),
            },
            Gate::Const(v) => if v { "1" } else { "0" }.to_string(),
            Gate::Not(a) => format!("(not {})", render(c, a, names, None)),
            Gate::And(a, b) => {
                format!("(and {} {})", render(c, a, names, None), render(c, b, names, None))
            }
            Gate::Or(a, b) => {
                format!("(or {} {})", render(c, a, names, None), render(c, b, names, None))
            }
        }
    }

    if bindings.is_empty() {
        render(c, c.output(), &names, None)
    } else {
        let bound: Vec<String> = bindings
            .iter()
            .map(|&id| format!("({} {})", names[&id], render(c, id, &names, Some(id))))
            .collect();
        format!("(let ({}) {})", bound.join(" "), render(c, c.output(), &names, None))
    }
}
