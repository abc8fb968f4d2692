//! The bit-tape language: syntax, bit encoding, the program order, a
//! step-counted interpreter, library-call unfolding and canonical enumeration.
//!
//! Machine model: a read cursor over the framed input, an unbounded bit work
//! tape initialised to zero and an append-only output. The input `i` is read
//! through its framing: every bit `b` of `i` is presented as the pair `1 b`,
//! and once the input is exhausted every read yields `0`. This keeps every
//! binary string distinguishable, including trailing zeros and the empty
//! string.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::bits::BitString;
use crate::conditional::Library;

/// Bits per opcode; the alphabet has eight symbols.
pub const OPCODE_BITS: usize = 3;
/// Alphabet size |Υ|.
pub const ALPHABET: u64 = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LangError {
    #[error("unbalanced brackets")]
    UnbalancedBrackets,
    #[error("library index {index} out of range for a library of {size}")]
    IndexOutOfRange { index: u32, size: usize },
    #[error("program context has {program} primitives but the library has {library}")]
    ContextMismatch { program: usize, library: usize },
    #[error("unexpected character {ch:?} at position {pos}")]
    Parse { ch: char, pos: usize },
    #[error("`@` needs an explicit index when the library has {0} primitives")]
    MissingIndex(usize),
    #[error("bit string is not a whole program")]
    TrailingBits,
    #[error("library primitives must be call-free base programs")]
    PrimitiveNotBase,
}

/// One instruction. The derived order is the lexicographic symbol order:
/// opcodes by position, calls last and compared by index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Instruction {
    Right,
    Left,
    Flip,
    Out,
    In,
    Open,
    Close,
    /// `@`: with an empty library this is the divergence instruction.
    Call(u32),
}

impl Instruction {
    pub const BASE: [Instruction; 7] = [
        Instruction::Right,
        Instruction::Left,
        Instruction::Flip,
        Instruction::Out,
        Instruction::In,
        Instruction::Open,
        Instruction::Close,
    ];

    pub fn opcode(self) -> u8 {
        match self {
            Instruction::Right => 0,
            Instruction::Left => 1,
            Instruction::Flip => 2,
            Instruction::Out => 3,
            Instruction::In => 4,
            Instruction::Open => 5,
            Instruction::Close => 6,
            Instruction::Call(_) => 7,
        }
    }

    fn from_opcode(op: u8) -> Instruction {
        match op {
            0 => Instruction::Right,
            1 => Instruction::Left,
            2 => Instruction::Flip,
            3 => Instruction::Out,
            4 => Instruction::In,
            5 => Instruction::Open,
            6 => Instruction::Close,
            _ => Instruction::Call(0),
        }
    }

    fn symbol(self) -> char {
        match self {
            Instruction::Right => '>',
            Instruction::Left => '<',
            Instruction::Flip => '+',
            Instruction::Out => '.',
            Instruction::In => ',',
            Instruction::Open => '[',
            Instruction::Close => ']',
            Instruction::Call(_) => '@',
        }
    }

    pub fn is_call(self) -> bool {
        matches!(self, Instruction::Call(_))
    }
}

/// The language a program lives in: base L (no library) or L_B.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct LanguageContext {
    pub library_size: usize,
}

impl LanguageContext {
    pub const BASE: LanguageContext = LanguageContext { library_size: 0 };

    pub fn with_library(library_size: usize) -> Self {
        LanguageContext { library_size }
    }

    /// ⌈log2 |B|⌉, zero when the library has at most one primitive.
    pub fn index_bits(&self) -> usize {
        if self.library_size <= 1 {
            0
        } else {
            (usize::BITS - (self.library_size - 1).leading_zeros()) as usize
        }
    }

    pub fn call_bits(&self) -> usize {
        OPCODE_BITS + self.index_bits()
    }

    pub fn instruction_bits(&self, ins: Instruction) -> usize {
        if ins.is_call() {
            self.call_bits()
        } else {
            OPCODE_BITS
        }
    }

    /// Instructions in symbol order, calls expanded per index.
    pub fn alphabet(&self) -> Vec<Instruction> {
        let calls = self.library_size.max(1) as u32;
        let mut out = Instruction::BASE.to_vec();
        out.extend((0..calls).map(Instruction::Call));
        out
    }

    fn check_index(&self, index: u32) -> Result<(), LangError> {
        if (index as usize) < self.library_size.max(1) {
            Ok(())
        } else {
            Err(LangError::IndexOutOfRange {
                index,
                size: self.library_size,
            })
        }
    }
}

/// A syntactically valid program with its cached bit length.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Program {
    instrs: Vec<Instruction>,
    ctx: LanguageContext,
    bits: usize,
}

impl Program {
    pub fn new(instrs: Vec<Instruction>, ctx: LanguageContext) -> Result<Program, LangError> {
        let mut depth = 0usize;
        for &ins in &instrs {
            match ins {
                Instruction::Open => depth += 1,
                Instruction::Close => {
                    depth = depth.checked_sub(1).ok_or(LangError::UnbalancedBrackets)?
                }
                Instruction::Call(i) => ctx.check_index(i)?,
                _ => {}
            }
        }
        if depth != 0 {
            return Err(LangError::UnbalancedBrackets);
        }
        let bits = instrs.iter().map(|&i| ctx.instruction_bits(i)).sum();
        Ok(Program { instrs, ctx, bits })
    }

    pub fn empty(ctx: LanguageContext) -> Program {
        Program {
            instrs: Vec::new(),
            ctx,
            bits: 0,
        }
    }

    /// Parses the text form; `@` may omit its index when the library has at
    /// most one primitive. Whitespace is ignored.
    pub fn parse(text: &str, ctx: LanguageContext) -> Result<Program, LangError> {
        let mut instrs = Vec::new();
        let chars: Vec<char> = text.chars().collect();
        let mut pos = 0;
        while pos < chars.len() {
            let ch = chars[pos];
            pos += 1;
            let ins = match ch {
                '>' => Instruction::Right,
                '<' => Instruction::Left,
                '+' => Instruction::Flip,
                '.' => Instruction::Out,
                ',' => Instruction::In,
                '[' => Instruction::Open,
                ']' => Instruction::Close,
                '@' => {
                    let start = pos;
                    while pos < chars.len() && chars[pos].is_ascii_digit() {
                        pos += 1;
                    }
                    if start == pos {
                        if ctx.library_size > 1 {
                            return Err(LangError::MissingIndex(ctx.library_size));
                        }
                        Instruction::Call(0)
                    } else {
                        let digits: String = chars[start..pos].iter().collect();
                        let index = digits.parse::<u32>().map_err(|_| LangError::Parse {
                            ch: chars[start],
                            pos: start,
                        })?;
                        Instruction::Call(index)
                    }
                }
                c if c.is_whitespace() => continue,
                c => return Err(LangError::Parse { ch: c, pos: pos - 1 }),
            };
            instrs.push(ins);
        }
        Program::new(instrs, ctx)
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instrs
    }

    pub fn context(&self) -> LanguageContext {
        self.ctx
    }

    /// ℓ(p) in bits.
    pub fn bit_len(&self) -> usize {
        self.bits
    }

    /// ninst(p); a call counts as one instruction.
    pub fn ninst(&self) -> usize {
        self.instrs.len()
    }

    pub fn call_count(&self) -> usize {
        self.instrs.iter().filter(|i| i.is_call()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    /// Concatenated 3-bit opcodes, each call followed by its big-endian index.
    pub fn to_bitstring(&self) -> BitString {
        let mut out = BitString::new();
        let index_bits = self.ctx.index_bits() as u32;
        for &ins in &self.instrs {
            out.push_uint(ins.opcode() as u64, OPCODE_BITS as u32);
            if let Instruction::Call(i) = ins {
                out.push_uint(i as u64, index_bits);
            }
        }
        out
    }

    pub fn from_bitstring(bits: &BitString, ctx: LanguageContext) -> Result<Program, LangError> {
        let raw = bits.bits();
        let read = |from: usize, width: usize| -> Option<u64> {
            raw.get(from..from + width)
                .map(|s| s.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64))
        };
        let mut pos = 0;
        let mut instrs = Vec::new();
        while pos < raw.len() {
            let op = read(pos, OPCODE_BITS).ok_or(LangError::TrailingBits)? as u8;
            pos += OPCODE_BITS;
            let mut ins = Instruction::from_opcode(op);
            if ins.is_call() {
                let width = ctx.index_bits();
                let index = read(pos, width).ok_or(LangError::TrailingBits)?;
                pos += width;
                ins = Instruction::Call(index as u32);
            }
            instrs.push(ins);
        }
        Program::new(instrs, ctx)
    }

    /// Same instruction sequence in another language, if still valid there.
    pub fn in_context(&self, ctx: LanguageContext) -> Result<Program, LangError> {
        Program::new(self.instrs.clone(), ctx)
    }
}

impl Ord for Program {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bits
            .cmp(&other.bits)
            .then_with(|| self.instrs.cmp(&other.instrs))
    }
}

impl PartialOrd for Program {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &ins in &self.instrs {
            match ins {
                Instruction::Call(i) if self.ctx.library_size > 1 => write!(f, "@{i}")?,
                other => write!(f, "{}", other.symbol())?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{self}`")
    }
}

/// The order ≺: shorter bit length first, then lexicographic.
pub fn precedes(p: &Program, q: &Program) -> Result<bool, LangError> {
    if p.ctx != q.ctx {
        return Err(LangError::ContextMismatch {
            program: p.ctx.library_size,
            library: q.ctx.library_size,
        });
    }
    Ok(p < q)
}

/// All valid programs with ℓ ≤ `max_bits`, in ≺ order, starting with ε.
pub fn enumerate_programs(ctx: LanguageContext, max_bits: usize) -> Vec<Program> {
    let alphabet = ctx.alphabet();
    // feasible[r]: r bits can be filled exactly by some instruction multiset.
    let mut feasible = vec![false; max_bits + 1];
    feasible[0] = true;
    for r in 1..=max_bits {
        feasible[r] = (r >= OPCODE_BITS && feasible[r - OPCODE_BITS])
            || (r >= ctx.call_bits() && feasible[r - ctx.call_bits()]);
    }
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    for len in 0..=max_bits {
        if feasible[len] {
            fill(&alphabet, ctx, &feasible, len, 0, &mut prefix, &mut out);
        }
    }
    out
}

fn fill(
    alphabet: &[Instruction],
    ctx: LanguageContext,
    feasible: &[bool],
    remaining: usize,
    depth: usize,
    prefix: &mut Vec<Instruction>,
    out: &mut Vec<Program>,
) {
    if remaining == 0 {
        if depth == 0 {
            out.push(Program {
                instrs: prefix.clone(),
                ctx,
                bits: prefix.iter().map(|&i| ctx.instruction_bits(i)).sum(),
            });
        }
        return;
    }
    for &ins in alphabet {
        let cost = ctx.instruction_bits(ins);
        if cost > remaining || !feasible[remaining - cost] {
            continue;
        }
        let next_depth = match ins {
            Instruction::Open => depth + 1,
            Instruction::Close if depth == 0 => continue,
            Instruction::Close => depth - 1,
            _ => depth,
        };
        if next_depth * OPCODE_BITS > remaining - cost {
            continue;
        }
        prefix.push(ins);
        fill(alphabet, ctx, feasible, remaining - cost, next_depth, prefix, out);
        prefix.pop();
    }
}

/// ∘(p): replaces every call by the called primitive's instructions.
pub fn unfold(p: &Program, lib: &Library) -> Result<Program, LangError> {
    check_library(p, lib)?;
    if lib.is_empty() {
        return Ok(p.clone());
    }
    let mut instrs = Vec::with_capacity(p.ninst());
    for &ins in &p.instrs {
        match ins {
            Instruction::Call(i) => {
                let prim = lib.get(i as usize).ok_or(LangError::IndexOutOfRange {
                    index: i,
                    size: lib.len(),
                })?;
                instrs.extend_from_slice(prim.instructions());
            }
            other => instrs.push(other),
        }
    }
    Program::new(instrs, LanguageContext::BASE)
}

/// ninst(∘(p)) without materialising the unfolded program.
pub fn unfolded_ninst(p: &Program, lib: &Library) -> usize {
    p.instrs
        .iter()
        .map(|ins| match ins {
            Instruction::Call(i) if !lib.is_empty() => lib.get(*i as usize).map_or(1, |q| q.ninst()),
            _ => 1,
        })
        .sum()
}

fn check_library(p: &Program, lib: &Library) -> Result<(), LangError> {
    if p.ctx.library_size != lib.len() {
        return Err(LangError::ContextMismatch {
            program: p.ctx.library_size,
            library: lib.len(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Execution

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Halted(BitString),
    /// Budget exhausted: the program is taken to be ⊥ at this bound.
    StillRunning,
}

impl Outcome {
    pub fn output(&self) -> Option<&BitString> {
        match self {
            Outcome::Halted(o) => Some(o),
            Outcome::StillRunning => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecOutcome {
    pub outcome: Outcome,
    pub steps_used: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    Right,
    Left,
    Flip,
    Out,
    In,
    /// Jump to the given index (one past the matching close) when the cell is 0.
    Open(u32),
    /// Jump to the given index (one past the matching open) when the cell is 1.
    Close(u32),
    Diverge,
}

/// A flat, bracket-matched program ready to run.
#[derive(Clone, Debug)]
pub struct Compiled {
    ops: Vec<Op>,
}

impl Compiled {
    pub fn new(p: &Program, lib: &Library) -> Result<Compiled, LangError> {
        let flat = unfold(p, lib)?;
        Ok(Compiled::from_base(&flat))
    }

    fn from_base(p: &Program) -> Compiled {
        let mut ops: Vec<Op> = Vec::with_capacity(p.ninst());
        let mut stack = Vec::new();
        for (k, &ins) in p.instrs.iter().enumerate() {
            let op = match ins {
                Instruction::Right => Op::Right,
                Instruction::Left => Op::Left,
                Instruction::Flip => Op::Flip,
                Instruction::Out => Op::Out,
                Instruction::In => Op::In,
                Instruction::Open => {
                    stack.push(k);
                    Op::Open(0)
                }
                Instruction::Close => {
                    let open = stack.pop().expect("validated brackets");
                    ops[open] = Op::Open(k as u32 + 1);
                    Op::Close(open as u32 + 1)
                }
                Instruction::Call(_) => Op::Diverge,
            };
            ops.push(op);
        }
        Compiled { ops }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// Bi-infinite bit tape.
#[derive(Default)]
struct Tape {
    right: Vec<bool>,
    left: Vec<bool>,
    head: i64,
}

impl Tape {
    fn reset(&mut self) {
        self.right.clear();
        self.left.clear();
        self.head = 0;
    }

    fn read(&self) -> bool {
        if self.head >= 0 {
            self.right.get(self.head as usize).copied().unwrap_or(false)
        } else {
            self.left.get((-self.head - 1) as usize).copied().unwrap_or(false)
        }
    }

    fn write(&mut self, v: bool) {
        let (cells, idx) = if self.head >= 0 {
            (&mut self.right, self.head as usize)
        } else {
            (&mut self.left, (-self.head - 1) as usize)
        };
        if idx >= cells.len() {
            if !v {
                return;
            }
            cells.resize(idx + 1, false);
        }
        cells[idx] = v;
    }
}

/// The framed input stream: `1 b` per input bit, then zeros forever.
struct FramedInput<'a> {
    input: &'a [bool],
    cursor: usize,
}

impl FramedInput<'_> {
    fn next(&mut self) -> bool {
        let r = self.cursor;
        self.cursor = self.cursor.saturating_add(1);
        match self.input.get(r / 2) {
            Some(&b) => r.is_multiple_of(2) || b,
            None => false,
        }
    }
}

/// Reusable scratch state for running many programs.
#[derive(Default)]
pub struct Machine {
    tape: Tape,
    out: Vec<bool>,
}

impl Machine {
    pub fn new() -> Machine {
        Machine::default()
    }

    pub fn run(&mut self, code: &Compiled, input: &BitString, budget: u64) -> ExecOutcome {
        match self.run_raw(code, input, budget) {
            Some(steps) => ExecOutcome {
                outcome: Outcome::Halted(BitString::from_bits(self.out.clone())),
                steps_used: steps,
            },
            None => ExecOutcome {
                outcome: Outcome::StillRunning,
                steps_used: budget,
            },
        }
    }

    /// Runs without materialising the output; `Some(steps)` on halt, the
    /// output is then available through [`Machine::last_output`].
    pub fn run_raw(&mut self, code: &Compiled, input: &BitString, budget: u64) -> Option<u64> {
        self.tape.reset();
        self.out.clear();
        let mut reader = FramedInput {
            input: input.bits(),
            cursor: 0,
        };
        let ops = &code.ops;
        let mut pc = 0usize;
        let mut steps = 0u64;
        loop {
            if pc >= ops.len() {
                return Some(steps);
            }
            if steps >= budget {
                return None;
            }
            steps += 1;
            match ops[pc] {
                Op::Right => self.tape.head += 1,
                Op::Left => self.tape.head -= 1,
                Op::Flip => {
                    let v = self.tape.read();
                    self.tape.write(!v);
                }
                Op::Out => self.out.push(self.tape.read()),
                Op::In => {
                    let v = reader.next();
                    self.tape.write(v);
                }
                Op::Open(target) => {
                    if !self.tape.read() {
                        pc = target as usize;
                        continue;
                    }
                }
                Op::Close(target) => {
                    if self.tape.read() {
                        pc = target as usize;
                        continue;
                    }
                }
                Op::Diverge => return None,
            }
            pc += 1;
        }
    }

    pub fn last_output(&self) -> &[bool] {
        &self.out
    }
}

/// Runs `p` (a program of L_B, with `lib` its library) for at most `budget` steps.
pub fn execute(
    p: &Program,
    input: &BitString,
    budget: u64,
    lib: &Library,
) -> Result<ExecOutcome, LangError> {
    let code = Compiled::new(p, lib)?;
    Ok(Machine::new().run(&code, input, budget))
}

/// Execution result with call instrumentation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TracedOutcome {
    pub exec: ExecOutcome,
    /// Number of library calls reached during the run.
    pub calls_executed: u64,
}

/// Interprets `p` directly, entering primitive bodies through a call stack
/// instead of unfolding them first. Calls cost no step of their own.
pub fn execute_traced(
    p: &Program,
    input: &BitString,
    budget: u64,
    lib: &Library,
) -> Result<TracedOutcome, LangError> {
    check_library(p, lib)?;
    let main = Compiled::from_base_with_calls(p);
    let bodies: Vec<Compiled> = lib.primitives().iter().map(Compiled::from_base).collect();
    let mut tape = Tape::default();
    let mut out = Vec::new();
    let mut reader = FramedInput {
        input: input.bits(),
        cursor: 0,
    };
    // Frames hold (code, pc); code index usize::MAX means the main program.
    let mut frames: Vec<(usize, usize)> = vec![(usize::MAX, 0)];
    let mut steps = 0u64;
    let mut calls = 0u64;
    let running = |calls| TracedOutcome {
        exec: ExecOutcome {
            outcome: Outcome::StillRunning,
            steps_used: budget,
        },
        calls_executed: calls,
    };
    while let Some(&mut (code_id, ref mut pc)) = frames.last_mut() {
        let (ops, call_map): (&[Op], Option<&[Option<u32>]>) = if code_id == usize::MAX {
            (&main.0.ops, Some(&main.1))
        } else {
            (&bodies[code_id].ops, None)
        };
        if *pc >= ops.len() {
            frames.pop();
            if let Some(parent) = frames.last_mut() {
                parent.1 += 1;
            }
            continue;
        }
        if let Some(Some(idx)) = call_map.map(|m| m[*pc]) {
            calls += 1;
            if lib.is_empty() {
                return Ok(running(calls));
            }
            frames.push((idx as usize, 0));
            continue;
        }
        if steps >= budget {
            return Ok(running(calls));
        }
        steps += 1;
        match ops[*pc] {
            Op::Right => tape.head += 1,
            Op::Left => tape.head -= 1,
            Op::Flip => {
                let v = tape.read();
                tape.write(!v);
            }
            Op::Out => out.push(tape.read()),
            Op::In => {
                let v = reader.next();
                tape.write(v);
            }
            Op::Open(target) => {
                if !tape.read() {
                    *pc = target as usize;
                    continue;
                }
            }
            Op::Close(target) => {
                if tape.read() {
                    *pc = target as usize;
                    continue;
                }
            }
            Op::Diverge => return Ok(running(calls)),
        }
        *pc += 1;
    }
    Ok(TracedOutcome {
        exec: ExecOutcome {
            outcome: Outcome::Halted(BitString::from_bits(out)),
            steps_used: steps,
        },
        calls_executed: calls,
    })
}

impl Compiled {
    /// Bracket-matches a program keeping calls as markers (no step cost).
    fn from_base_with_calls(p: &Program) -> (Compiled, Vec<Option<u32>>) {
        let base = Program {
            instrs: p.instrs.clone(),
            ctx: LanguageContext::BASE,
            bits: 0,
        };
        let compiled = Compiled::from_base(&base);
        let calls = p
            .instrs
            .iter()
            .map(|ins| match ins {
                Instruction::Call(i) => Some(*i),
                _ => None,
            })
            .collect();
        (compiled, calls)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;

    fn base(s: &str) -> Program {
        Program::parse(s, LanguageContext::BASE).unwrap()
    }

    fn run(s: &str, input: &str, budget: u64) -> ExecOutcome {
        execute(&base(s), &bits(input), budget, &Library::empty()).unwrap()
    }

    #[test]
    fn read_then_print() {
        assert_eq!(run(",.", "1", 1000).outcome, Outcome::Halted(bits("1")));
        assert_eq!(run("", "101", 1000), ExecOutcome { outcome: Outcome::Halted(bits("")), steps_used: 0 });
        assert_eq!(run("+[]", "", 100).outcome, Outcome::StillRunning);
        assert_eq!(run("+[]", "", 100).steps_used, 100);
    }

    #[test]
    fn framed_input_distinguishes_trailing_zeros() {
        // Copy: read flag; while flag { read bit; print; read flag }.
        let copy = ",[,.,]";
        for s in ["", "0", "00", "1", "10", "0110"] {
            assert_eq!(run(copy, s, 1000).outcome, Outcome::Halted(bits(s)));
        }
    }

    #[test]
    fn bare_call_diverges_in_base() {
        let r = run("@", "", 77);
        assert_eq!(r.outcome, Outcome::StillRunning);
        assert_eq!(r.steps_used, 77);
    }

    #[test]
    fn halting_exactly_at_budget_counts_as_halted() {
        assert_eq!(run("+.", "", 2).outcome, Outcome::Halted(bits("1")));
        assert_eq!(run("+.", "", 1).outcome, Outcome::StillRunning);
    }

    #[test]
    fn order_examples() {
        assert!(precedes(&base(">"), &base("@")).unwrap());
        assert!(precedes(&base("."), &base(">><")).unwrap());
        let two = LanguageContext::with_library(2);
        let call = Program::parse("@0", two).unwrap();
        let pair = Program::parse("><", two).unwrap();
        assert_eq!(call.bit_len(), 4);
        assert!(precedes(&call, &pair).unwrap());
        assert!(precedes(&base(">"), &call).is_err());
    }

    #[test]
    fn bit_lengths_follow_index_width() {
        assert_eq!(LanguageContext::with_library(0).call_bits(), 3);
        assert_eq!(LanguageContext::with_library(1).call_bits(), 3);
        assert_eq!(LanguageContext::with_library(2).call_bits(), 4);
        assert_eq!(LanguageContext::with_library(3).call_bits(), 5);
        assert_eq!(LanguageContext::with_library(4).call_bits(), 5);
        assert_eq!(LanguageContext::with_library(5).call_bits(), 6);
        let p = Program::parse("@1+@0", LanguageContext::with_library(3)).unwrap();
        assert_eq!(p.bit_len(), 13);
        assert_eq!(p.ninst(), 3);
    }

    #[test]
    fn invalid_programs_rejected() {
        assert_eq!(Program::parse("[", LanguageContext::BASE), Err(LangError::UnbalancedBrackets));
        assert_eq!(Program::parse("][", LanguageContext::BASE), Err(LangError::UnbalancedBrackets));
        assert!(matches!(
            Program::parse("@2", LanguageContext::with_library(2)),
            Err(LangError::IndexOutOfRange { index: 2, .. })
        ));
        assert_eq!(
            Program::parse("@", LanguageContext::with_library(3)),
            Err(LangError::MissingIndex(3))
        );
        assert!(matches!(Program::parse("x", LanguageContext::BASE), Err(LangError::Parse { .. })));
    }

    #[test]
    fn enumeration_of_three_bits() {
        let progs = enumerate_programs(LanguageContext::BASE, 3);
        let text: Vec<String> = progs.iter().map(|p| p.to_string()).collect();
        assert_eq!(text, ["", ">", "<", "+", ".", ",", "@"]);
        assert_eq!(enumerate_programs(LanguageContext::BASE, 0).len(), 1);
    }

    #[test]
    fn enumeration_places_double_call_after_base_pairs() {
        let ctx = LanguageContext::with_library(1);
        let progs = enumerate_programs(ctx, 6);
        let pos = |s: &str| {
            let p = Program::parse(s, ctx).unwrap();
            progs.iter().position(|q| *q == p).unwrap()
        };
        assert_eq!(progs.last().unwrap().to_string(), "@@");
        assert!(progs.iter().all(|p| p.to_string() != "]["));
        assert!(pos("[]") < pos("@@"));
        assert!(pos(",@") < pos("@>"));
    }

    #[test]
    fn bitstring_round_trip() {
        let ctx = LanguageContext::with_library(3);
        let p = Program::parse("@2[>@0]", ctx).unwrap();
        let b = p.to_bitstring();
        assert_eq!(b.len(), p.bit_len());
        assert_eq!(Program::from_bitstring(&b, ctx).unwrap(), p);
    }

    #[test]
    fn unfold_examples() {
        let lib = Library::new(vec![base(">>")]).unwrap();
        let p = Program::parse("@,", LanguageContext::with_library(1)).unwrap();
        assert_eq!(unfold(&p, &lib).unwrap().to_string(), ">>,");
        let lib2 = Library::new(vec![base("+"), base("><")]).unwrap();
        let q = Program::parse("@1@0", LanguageContext::with_library(2)).unwrap();
        assert_eq!(unfold(&q, &lib2).unwrap().to_string(), "><+");
        assert_eq!(unfolded_ninst(&q, &lib2), 3);
        let e = Program::empty(LanguageContext::with_library(2));
        assert!(unfold(&e, &lib2).unwrap().is_empty());
    }

    #[test]
    fn traced_run_counts_calls() {
        let lib = Library::new(vec![base("+.")]).unwrap();
        let p = Program::parse(",[@]", LanguageContext::with_library(1)).unwrap();
        let t = execute_traced(&p, &bits("1"), 100, &lib).unwrap();
        assert_eq!(t.calls_executed, 1);
        let t0 = execute_traced(&p, &bits(""), 100, &lib).unwrap();
        assert_eq!(t0.calls_executed, 0);
        assert_eq!(t.exec, execute(&p, &bits("1"), 100, &lib).unwrap());
    }
}
