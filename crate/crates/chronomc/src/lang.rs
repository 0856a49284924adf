//! Program representation and the litmus text format.
//!
//! A program is a set of named threads, each a straight-line or branching
//! sequence of instructions over thread-local registers and shared memory
//! locations, plus an optional final-state condition. Only `store`, `load`
//! and `fence` touch shared memory; everything else is thread local.
//!
//! The concrete syntax is line based, `#` starts a comment:
//!
//! ```text
//! locations x y
//! thread p:
//!   store x 1
//!   load $r y
//! thread q:
//!   store y 1
//!   load $s x
//! final exists (p:$r == 0 and q:$s == 0)
//! ```
//!
//! Threads and locations are kept sorted by name, so a parsed program is
//! canonical and `parse_program(pretty_print(p)) == p` holds structurally.

use std::fmt::Write as _;

use thiserror::Error;

/// Values are signed 64-bit integers; registers and memory start at 0.
pub type Value = i64;

/// Index into [`Program::locations`].
pub type LocId = usize;

/// Index into the owning thread's register table.
pub type RegId = usize;

/// Comparison operator used by `assume`, `assert` and final-condition atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cmp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    pub fn eval(self, lhs: Value, rhs: Value) -> bool {
        match self {
            Cmp::Eq => lhs == rhs,
            Cmp::Ne => lhs != rhs,
            Cmp::Lt => lhs < rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Gt => lhs > rhs,
            Cmp::Ge => lhs >= rhs,
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            Cmp::Eq => "==",
            Cmp::Ne => "!=",
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        }
    }

    fn from_token(tok: &str) -> Option<Cmp> {
        match tok {
            "==" => Some(Cmp::Eq),
            "!=" => Some(Cmp::Ne),
            "<" => Some(Cmp::Lt),
            "<=" => Some(Cmp::Le),
            ">" => Some(Cmp::Gt),
            ">=" => Some(Cmp::Ge),
            _ => None,
        }
    }
}

/// Instruction operand: a register or a signed integer constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operand {
    Reg(RegId),
    Const(Value),
}

/// One instruction. `store`, `load` and `fence` are the only
/// memory-model-relevant instructions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Instr {
    Store { loc: LocId, src: Operand },
    Load { dst: RegId, loc: LocId },
    Fence,
    Mov { dst: RegId, src: Operand },
    Add { dst: RegId, a: Operand, b: Operand },
    /// Branch to `target` (an instruction index) when `cond` is nonzero.
    Bnz { cond: RegId, target: usize, label: String },
    Label { name: String },
    Assume { reg: RegId, cmp: Cmp, rhs: Operand },
    Assert { reg: RegId, cmp: Cmp, rhs: Operand },
}

impl Instr {
    /// True for the pseudo-instruction introduced by a `name:` line.
    pub fn is_label(&self) -> bool {
        matches!(self, Instr::Label { .. })
    }
}

/// A thread: name, instruction sequence, and the thread-local register
/// table (registers are interned in first-occurrence order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thread {
    pub name: String,
    pub instrs: Vec<Instr>,
    pub regs: Vec<String>,
}

impl Thread {
    pub fn reg_name(&self, r: RegId) -> &str {
        &self.regs[r]
    }
}

/// Quantifier of the final condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    Exists,
    Forall,
}

/// Boolean formula over `thread:$reg cmp constant` atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Atom { thread: usize, reg: RegId, cmp: Cmp, rhs: Value },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

/// The optional `final` clause of a program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinalCondition {
    pub quantifier: Quantifier,
    pub formula: Formula,
}

/// A parsed program. Threads and locations are sorted by name; all ids
/// appearing in instructions index into these tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub threads: Vec<Thread>,
    pub locations: Vec<String>,
    pub final_condition: Option<FinalCondition>,
}

impl Program {
    pub fn thread_index(&self, name: &str) -> Option<usize> {
        self.threads.iter().position(|t| t.name == name)
    }

    pub fn location_index(&self, name: &str) -> Option<LocId> {
        self.locations.iter().position(|l| l == name)
    }

    pub fn loc_name(&self, l: LocId) -> &str {
        &self.locations[l]
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}, col {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: duplicate thread name `{name}`")]
    DuplicateThread { line: usize, name: String },
    #[error("line {line}: thread name `{name}` collides with the reserved auxiliary form upd(..)")]
    ReservedName { line: usize, name: String },
    #[error("line {line}: undefined label `{label}` in thread `{thread}`")]
    UndefinedLabel { line: usize, thread: String, label: String },
    #[error("line {line}: duplicate label `{label}` in thread `{thread}`")]
    DuplicateLabel { line: usize, thread: String, label: String },
    #[error("line {line}: location `{name}` is not declared")]
    UnknownLocation { line: usize, name: String },
    #[error("line {line}: unknown thread `{name}` in final condition")]
    UnknownThread { line: usize, name: String },
    #[error("line {line}: duplicate location `{name}`")]
    DuplicateLocation { line: usize, name: String },
    #[error("program must start with a `locations` line")]
    MissingLocations,
}

fn is_ident(tok: &str) -> bool {
    let mut chars = tok.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A token with its 1-based column.
#[derive(Debug, Clone)]
struct Tok<'a> {
    col: usize,
    text: &'a str,
}

fn tokenize(line: &str) -> Vec<Tok<'_>> {
    let mut toks = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                toks.push(Tok { col: s + 1, text: &line[s..i] });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        toks.push(Tok { col: s + 1, text: &line[s..] });
    }
    toks
}

struct ThreadBuilder {
    name: String,
    header_line: usize,
    instrs: Vec<Instr>,
    regs: Vec<String>,
    // label name -> (instr index, defining line)
    labels: Vec<(String, usize, usize)>,
    // (instr index of the bnz, label name, line)
    pending_branches: Vec<(usize, String, usize)>,
}

impl ThreadBuilder {
    fn reg(&mut self, name: &str) -> RegId {
        match self.regs.iter().position(|r| r == name) {
            Some(i) => i,
            None => {
                self.regs.push(name.to_string());
                self.regs.len() - 1
            }
        }
    }
}

struct Parser<'a> {
    locations: Vec<String>,
    threads: Vec<ThreadBuilder>,
    final_line: Option<(usize, Vec<Tok<'a>>)>,
}

impl<'a> Parser<'a> {
    fn err(line: usize, col: usize, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { line, col, msg: msg.into() }
    }

    fn parse_reg<'t>(line: usize, tok: &Tok<'t>) -> Result<&'t str, ParseError> {
        match tok.text.strip_prefix('$') {
            Some(name) if is_ident(name) => Ok(name),
            _ => Err(Self::err(line, tok.col, format!("expected register `$ident`, got `{}`", tok.text))),
        }
    }

    fn parse_operand(
        tb: &mut ThreadBuilder,
        line: usize,
        tok: &Tok,
    ) -> Result<Operand, ParseError> {
        if let Some(name) = tok.text.strip_prefix('$') {
            if is_ident(name) {
                return Ok(Operand::Reg(tb.reg(name)));
            }
        }
        tok.text
            .parse::<Value>()
            .map(Operand::Const)
            .map_err(|_| Self::err(line, tok.col, format!("expected register or integer, got `{}`", tok.text)))
    }

    fn parse_cmp(line: usize, tok: &Tok) -> Result<Cmp, ParseError> {
        Cmp::from_token(tok.text)
            .ok_or_else(|| Self::err(line, tok.col, format!("expected comparison operator, got `{}`", tok.text)))
    }

    fn expect_arity(line: usize, toks: &[Tok], n: usize) -> Result<(), ParseError> {
        if toks.len() == n + 1 {
            Ok(())
        } else {
            Err(Self::err(
                line,
                toks[0].col,
                format!("`{}` takes {} operand(s), got {}", toks[0].text, n, toks.len() - 1),
            ))
        }
    }

    fn parse_instr(&mut self, line: usize, toks: &[Tok]) -> Result<(), ParseError> {
        let tb = self.threads.last_mut().expect("instruction outside thread");
        let head = &toks[0];

        // Label line: `ident:`
        if toks.len() == 1 {
            if let Some(name) = head.text.strip_suffix(':') {
                if is_ident(name) {
                    if tb.labels.iter().any(|(l, _, _)| l == name) {
                        return Err(ParseError::DuplicateLabel {
                            line,
                            thread: tb.name.clone(),
                            label: name.to_string(),
                        });
                    }
                    tb.labels.push((name.to_string(), tb.instrs.len(), line));
                    tb.instrs.push(Instr::Label { name: name.to_string() });
                    return Ok(());
                }
            }
        }

        let instr = match head.text {
            "store" => {
                Self::expect_arity(line, toks, 2)?;
                let loc = {
                    let t = &toks[1];
                    if !is_ident(t.text) {
                        return Err(Self::err(line, t.col, format!("expected location, got `{}`", t.text)));
                    }
                    // borrow dance: resolve against self.locations below
                    t.clone()
                };
                let src = Self::parse_operand(tb, line, &toks[2])?;
                let loc = self
                    .locations
                    .iter()
                    .position(|l| l == loc.text)
                    .ok_or_else(|| ParseError::UnknownLocation { line, name: loc.text.to_string() })?;
                Instr::Store { loc, src }
            }
            "load" => {
                Self::expect_arity(line, toks, 2)?;
                let dst = Self::parse_reg(line, &toks[1])?.to_string();
                let dst = tb.reg(&dst);
                let loc_tok = toks[2].clone();
                let loc = self
                    .locations
                    .iter()
                    .position(|l| l == loc_tok.text)
                    .ok_or_else(|| ParseError::UnknownLocation { line, name: loc_tok.text.to_string() })?;
                Instr::Load { dst, loc }
            }
            "fence" => {
                Self::expect_arity(line, toks, 0)?;
                Instr::Fence
            }
            "mov" => {
                Self::expect_arity(line, toks, 2)?;
                let dst = Self::parse_reg(line, &toks[1])?.to_string();
                let dst = tb.reg(&dst);
                let src = Self::parse_operand(tb, line, &toks[2])?;
                Instr::Mov { dst, src }
            }
            "add" => {
                Self::expect_arity(line, toks, 3)?;
                let dst = Self::parse_reg(line, &toks[1])?.to_string();
                let dst = tb.reg(&dst);
                let a = Self::parse_operand(tb, line, &toks[2])?;
                let b = Self::parse_operand(tb, line, &toks[3])?;
                Instr::Add { dst, a, b }
            }
            "bnz" => {
                Self::expect_arity(line, toks, 2)?;
                let cond = Self::parse_reg(line, &toks[1])?.to_string();
                let cond = tb.reg(&cond);
                let label = &toks[2];
                if !is_ident(label.text) {
                    return Err(Self::err(line, label.col, format!("expected label name, got `{}`", label.text)));
                }
                tb.pending_branches.push((tb.instrs.len(), label.text.to_string(), line));
                Instr::Bnz { cond, target: usize::MAX, label: label.text.to_string() }
            }
            "assume" | "assert" => {
                Self::expect_arity(line, toks, 3)?;
                let reg = Self::parse_reg(line, &toks[1])?.to_string();
                let reg = tb.reg(&reg);
                let cmp = Self::parse_cmp(line, &toks[2])?;
                let rhs = Self::parse_operand(tb, line, &toks[3])?;
                if head.text == "assume" {
                    Instr::Assume { reg, cmp, rhs }
                } else {
                    Instr::Assert { reg, cmp, rhs }
                }
            }
            other => {
                return Err(Self::err(line, head.col, format!("unknown instruction `{other}`")));
            }
        };
        let tb = self.threads.last_mut().unwrap();
        tb.instrs.push(instr);
        Ok(())
    }
}

/// Parse litmus source text into a [`Program`].
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut parser = Parser { locations: Vec::new(), threads: Vec::new(), final_line: None };
    let mut seen_locations = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let toks = tokenize(content);
        if toks.is_empty() {
            continue;
        }
        if parser.final_line.is_some() {
            return Err(Parser::err(line, toks[0].col, "no statements may follow the final condition"));
        }
        match toks[0].text {
            "locations" => {
                if seen_locations {
                    return Err(Parser::err(line, toks[0].col, "duplicate `locations` line"));
                }
                seen_locations = true;
                for t in &toks[1..] {
                    if !is_ident(t.text) {
                        return Err(Parser::err(line, t.col, format!("invalid location name `{}`", t.text)));
                    }
                    if parser.locations.iter().any(|l| l == t.text) {
                        return Err(ParseError::DuplicateLocation { line, name: t.text.to_string() });
                    }
                    parser.locations.push(t.text.to_string());
                }
                parser.locations.sort();
            }
            "thread" => {
                if !seen_locations {
                    return Err(ParseError::MissingLocations);
                }
                // Accept `thread p:` and `thread p :`.
                let name = match toks.len() {
                    2 => toks[1].text.strip_suffix(':').map(|n| (n, toks[1].col)),
                    3 if toks[2].text == ":" => Some((toks[1].text, toks[1].col)),
                    _ => None,
                };
                let (name, col) = name
                    .ok_or_else(|| Parser::err(line, toks[0].col, "expected `thread NAME:`"))?;
                if !is_ident(name) {
                    return Err(Parser::err(line, col, format!("invalid thread name `{name}`")));
                }
                if name == "upd" {
                    return Err(ParseError::ReservedName { line, name: name.to_string() });
                }
                if parser.threads.iter().any(|t| t.name == name) {
                    return Err(ParseError::DuplicateThread { line, name: name.to_string() });
                }
                parser.threads.push(ThreadBuilder {
                    name: name.to_string(),
                    header_line: line,
                    instrs: Vec::new(),
                    regs: Vec::new(),
                    labels: Vec::new(),
                    pending_branches: Vec::new(),
                });
            }
            "final" => {
                if !seen_locations {
                    return Err(ParseError::MissingLocations);
                }
                parser.final_line = Some((line, toks.into_iter().collect()));
            }
            _ => {
                if parser.threads.is_empty() {
                    if !seen_locations {
                        return Err(ParseError::MissingLocations);
                    }
                    return Err(Parser::err(line, toks[0].col, "instruction outside a thread block"));
                }
                parser.parse_instr(line, &toks)?;
            }
        }
    }

    if !seen_locations {
        return Err(ParseError::MissingLocations);
    }

    // Resolve branch targets.
    for tb in &mut parser.threads {
        let _ = tb.header_line;
        for (idx, label, line) in std::mem::take(&mut tb.pending_branches) {
            let target = tb
                .labels
                .iter()
                .find(|(l, _, _)| *l == label)
                .map(|(_, i, _)| *i)
                .ok_or_else(|| ParseError::UndefinedLabel {
                    line,
                    thread: tb.name.clone(),
                    label: label.clone(),
                })?;
            if let Instr::Bnz { target: t, .. } = &mut tb.instrs[idx] {
                *t = target;
            }
        }
    }

    let mut threads: Vec<Thread> = parser
        .threads
        .into_iter()
        .map(|tb| Thread { name: tb.name, instrs: tb.instrs, regs: tb.regs })
        .collect();
    threads.sort_by(|a, b| a.name.cmp(&b.name));

    let locations = parser.locations;
    let final_condition = match parser.final_line {
        None => None,
        Some((line, toks)) => Some(parse_final(line, &toks, &mut threads)?),
    };

    Ok(Program { threads, locations, final_condition })
}

/// Split parentheses glued to whitespace-separated tokens, so that
/// `(p:$r == 0)` and `( p:$r == 0 )` tokenize identically.
fn split_parens<'a>(toks: &[Tok<'a>]) -> Vec<Tok<'a>> {
    let mut out = Vec::new();
    for t in toks {
        let mut text = t.text;
        let mut col = t.col;
        while let Some(rest) = text.strip_prefix('(') {
            out.push(Tok { col, text: "(" });
            col += 1;
            text = rest;
        }
        let mut trailing = 0;
        while trailing < text.len() && text.ends_with(&")".repeat(trailing + 1)) {
            trailing += 1;
        }
        let body = &text[..text.len() - trailing];
        if !body.is_empty() {
            out.push(Tok { col, text: body });
        }
        for i in 0..trailing {
            out.push(Tok { col: col + body.len() + i, text: ")" });
        }
    }
    out
}

fn parse_final(
    line: usize,
    toks: &[Tok],
    threads: &mut [Thread],
) -> Result<FinalCondition, ParseError> {
    let quantifier = match toks.get(1).map(|t| t.text) {
        Some("exists") => Quantifier::Exists,
        Some("forall") => Quantifier::Forall,
        _ => {
            return Err(Parser::err(line, toks[0].col, "expected `final exists ...` or `final forall ...`"));
        }
    };
    let toks = split_parens(&toks[2..]);
    if toks.is_empty() {
        return Err(Parser::err(line, 0, "empty final condition"));
    }
    let mut pos = 0;
    let formula = parse_or(line, &toks, &mut pos, threads)?;
    if pos != toks.len() {
        return Err(Parser::err(line, toks[pos].col, format!("unexpected token `{}`", toks[pos].text)));
    }
    Ok(FinalCondition { quantifier, formula })
}

fn parse_or(
    line: usize,
    toks: &[Tok],
    pos: &mut usize,
    threads: &mut [Thread],
) -> Result<Formula, ParseError> {
    let mut lhs = parse_and(line, toks, pos, threads)?;
    while toks.get(*pos).map(|t| t.text) == Some("or") {
        *pos += 1;
        let rhs = parse_and(line, toks, pos, threads)?;
        lhs = Formula::Or(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_and(
    line: usize,
    toks: &[Tok],
    pos: &mut usize,
    threads: &mut [Thread],
) -> Result<Formula, ParseError> {
    let mut lhs = parse_not(line, toks, pos, threads)?;
    while toks.get(*pos).map(|t| t.text) == Some("and") {
        *pos += 1;
        let rhs = parse_not(line, toks, pos, threads)?;
        lhs = Formula::And(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_not(
    line: usize,
    toks: &[Tok],
    pos: &mut usize,
    threads: &mut [Thread],
) -> Result<Formula, ParseError> {
    match toks.get(*pos) {
        Some(t) if t.text == "not" => {
            *pos += 1;
            Ok(Formula::Not(Box::new(parse_not(line, toks, pos, threads)?)))
        }
        _ => parse_formula_atom(line, toks, pos, threads),
    }
}

fn parse_formula_atom(
    line: usize,
    toks: &[Tok],
    pos: &mut usize,
    threads: &mut [Thread],
) -> Result<Formula, ParseError> {
    let t = toks
        .get(*pos)
        .ok_or_else(|| Parser::err(line, 0, "unexpected end of final condition"))?;
    if t.text == "(" {
        *pos += 1;
        let inner = parse_or(line, toks, pos, threads)?;
        match toks.get(*pos) {
            Some(t) if t.text == ")" => {
                *pos += 1;
                Ok(inner)
            }
            _ => Err(Parser::err(line, t.col, "missing `)`")),
        }
    } else {
        // thread:$reg cmp int -- the atom may arrive as one token
        // (`p:$r`) plus cmp plus int, or with `(`/`)` glued on. Split
        // leading parens already handled by the tokenizer contract below.
        let (tname, rname) = t
            .text
            .split_once(":$")
            .ok_or_else(|| Parser::err(line, t.col, format!("expected `thread:$reg`, got `{}`", t.text)))?;
        if !is_ident(tname) || !is_ident(rname) {
            return Err(Parser::err(line, t.col, format!("expected `thread:$reg`, got `{}`", t.text)));
        }
        let ti = threads
            .iter()
            .position(|th| th.name == tname)
            .ok_or_else(|| ParseError::UnknownThread { line, name: tname.to_string() })?;
        let reg = match threads[ti].regs.iter().position(|r| r == rname) {
            Some(r) => r,
            None => {
                threads[ti].regs.push(rname.to_string());
                threads[ti].regs.len() - 1
            }
        };
        *pos += 1;
        let cmp_tok = toks
            .get(*pos)
            .ok_or_else(|| Parser::err(line, 0, "expected comparison operator"))?;
        let cmp = Parser::parse_cmp(line, cmp_tok)?;
        *pos += 1;
        let rhs_tok = toks
            .get(*pos)
            .ok_or_else(|| Parser::err(line, 0, "expected integer"))?;
        let rhs = rhs_tok
            .text
            .parse::<Value>()
            .map_err(|_| Parser::err(line, rhs_tok.col, format!("expected integer, got `{}`", rhs_tok.text)))?;
        *pos += 1;
        Ok(Formula::Atom { thread: ti, reg, cmp, rhs })
    }
}

/// Render one instruction in source syntax.
pub fn instr_text(program: &Program, thread: usize, instr: &Instr) -> String {
    let t = &program.threads[thread];
    let op = |o: &Operand| match o {
        Operand::Reg(r) => format!("${}", t.reg_name(*r)),
        Operand::Const(v) => v.to_string(),
    };
    match instr {
        Instr::Store { loc, src } => format!("store {} {}", program.loc_name(*loc), op(src)),
        Instr::Load { dst, loc } => format!("load ${} {}", t.reg_name(*dst), program.loc_name(*loc)),
        Instr::Fence => "fence".to_string(),
        Instr::Mov { dst, src } => format!("mov ${} {}", t.reg_name(*dst), op(src)),
        Instr::Add { dst, a, b } => format!("add ${} {} {}", t.reg_name(*dst), op(a), op(b)),
        Instr::Bnz { cond, label, .. } => format!("bnz ${} {}", t.reg_name(*cond), label),
        Instr::Label { name } => format!("{name}:"),
        Instr::Assume { reg, cmp, rhs } => {
            format!("assume ${} {} {}", t.reg_name(*reg), cmp.text(), op(rhs))
        }
        Instr::Assert { reg, cmp, rhs } => {
            format!("assert ${} {} {}", t.reg_name(*reg), cmp.text(), op(rhs))
        }
    }
}

fn formula_text(program: &Program, f: &Formula) -> String {
    match f {
        Formula::Atom { thread, reg, cmp, rhs } => {
            let t = &program.threads[*thread];
            format!("{}:${} {} {}", t.name, t.reg_name(*reg), cmp.text(), rhs)
        }
        Formula::Not(inner) => format!("not {}", formula_text(program, inner)),
        Formula::And(a, b) => {
            format!("( {} and {} )", formula_text(program, a), formula_text(program, b))
        }
        Formula::Or(a, b) => {
            format!("( {} or {} )", formula_text(program, a), formula_text(program, b))
        }
    }
}

/// Render the final condition in source syntax (without the `final` keyword).
pub fn final_condition_text(program: &Program, fc: &FinalCondition) -> String {
    let q = match fc.quantifier {
        Quantifier::Exists => "exists",
        Quantifier::Forall => "forall",
    };
    format!("{q} {}", formula_text(program, &fc.formula))
}

/// Emit canonical litmus text such that `parse_program(pretty_print(p)) == p`.
pub fn pretty_print(program: &Program) -> String {
    let mut out = String::new();
    out.push_str("locations");
    for l in &program.locations {
        let _ = write!(out, " {l}");
    }
    out.push('\n');
    for (ti, t) in program.threads.iter().enumerate() {
        let _ = writeln!(out, "thread {}:", t.name);
        for i in &t.instrs {
            let _ = writeln!(out, "  {}", instr_text(program, ti, i));
        }
    }
    if let Some(fc) = &program.final_condition {
        let _ = writeln!(out, "final {}", final_condition_text(program, fc));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SB: &str = "\
locations x y
thread p:
  store x 1
  load $r y
thread q:
  store y 1
  load $s x
final exists (p:$r == 0 and q:$s == 0)
";

    #[test]
    fn parses_store_buffer_idiom() {
        let p = parse_program(SB).unwrap();
        assert_eq!(p.threads.len(), 2);
        assert_eq!(p.threads[0].name, "p");
        assert_eq!(p.threads[1].name, "q");
        assert_eq!(p.threads[0].instrs.len(), 2);
        assert_eq!(p.threads[1].instrs.len(), 2);
        assert_eq!(p.locations, vec!["x".to_string(), "y".to_string()]);
        assert!(p.final_condition.is_some());
    }

    #[test]
    fn empty_thread_body_is_allowed() {
        let p = parse_program("locations x\nthread p:\nthread q:\n  store x 1\n").unwrap();
        assert_eq!(p.threads[0].instrs.len(), 0);
        assert_eq!(p.threads[1].instrs.len(), 1);
    }

    #[test]
    fn header_only_program() {
        let p = parse_program("locations\n").unwrap();
        assert!(p.threads.is_empty());
        assert_eq!(pretty_print(&p), "locations\n");
    }

    #[test]
    fn labels_resolve_to_their_index() {
        let src = "\
locations x
thread p:
  mov $i 2
L:
  store x 1
  add $i $i -1
  bnz $i L
";
        let p = parse_program(src).unwrap();
        let t = &p.threads[0];
        assert_eq!(t.instrs[1], Instr::Label { name: "L".to_string() });
        match &t.instrs[4] {
            Instr::Bnz { target, label, .. } => {
                assert_eq!(*target, 1);
                assert_eq!(label, "L");
            }
            other => panic!("expected bnz, got {other:?}"),
        }
        // round trip through the pretty printer
        assert_eq!(parse_program(&pretty_print(&p)).unwrap(), p);
    }

    #[test]
    fn duplicate_thread_name_rejected() {
        let err = parse_program("locations x\nthread p:\nthread p:\n").unwrap_err();
        assert!(matches!(err, ParseError::DuplicateThread { .. }));
    }

    #[test]
    fn reserved_thread_name_rejected() {
        let err = parse_program("locations x\nthread upd:\n").unwrap_err();
        assert!(matches!(err, ParseError::ReservedName { .. }));
    }

    #[test]
    fn undefined_label_rejected() {
        let err = parse_program("locations x\nthread p:\n  bnz $r L\n").unwrap_err();
        assert!(matches!(err, ParseError::UndefinedLabel { .. }));
    }

    #[test]
    fn undeclared_location_rejected() {
        let err = parse_program("locations x\nthread p:\n  store z 1\n").unwrap_err();
        assert_eq!(err, ParseError::UnknownLocation { line: 3, name: "z".to_string() });
    }

    #[test]
    fn syntax_error_carries_line_and_column() {
        let err = parse_program("locations x\nthread p:\n  frob x 1\n").unwrap_err();
        match err {
            ParseError::Syntax { line, col, .. } => {
                assert_eq!(line, 3);
                assert_eq!(col, 3);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn final_formula_precedence_and_parens() {
        let src = "locations x\nthread p:\n  load $r x\nfinal forall p:$r == 0 or not p:$r == 1 and p:$r < 5\n";
        let p = parse_program(src).unwrap();
        // or is outermost, and binds tighter, not tightest
        match &p.final_condition.as_ref().unwrap().formula {
            Formula::Or(_, rhs) => match rhs.as_ref() {
                Formula::And(l, _) => assert!(matches!(l.as_ref(), Formula::Not(_))),
                other => panic!("expected and, got {other:?}"),
            },
            other => panic!("expected or, got {other:?}"),
        }
        assert_eq!(parse_program(&pretty_print(&p)).unwrap(), p);
    }

    #[test]
    fn sb_round_trips() {
        let p = parse_program(SB).unwrap();
        assert_eq!(parse_program(&pretty_print(&p)).unwrap(), p);
    }

    #[test]
    fn threads_are_sorted_by_name() {
        let p = parse_program("locations x\nthread z:\n  store x 1\nthread a:\n  load $r x\n").unwrap();
        assert_eq!(p.threads[0].name, "a");
        assert_eq!(p.threads[1].name, "z");
    }
}
