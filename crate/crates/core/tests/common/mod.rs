//! Reference implementations used as test oracles. They share no code with
//! the crate beyond its plain data types.
#![allow(dead_code)]

use std::collections::HashMap;

use teachsize::{BitString, ExampleSet, Params};

/// One instruction: base opcodes 0..=6 in `> < + . , [ ]` order, then
/// calls by library index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tok {
    Op(u8),
    Call(usize),
}

const SYMBOLS: [char; 7] = ['>', '<', '+', '.', ',', '[', ']'];
const OPEN: u8 = 5;
const CLOSE: u8 = 6;

pub fn index_bits(lib_size: usize) -> usize {
    let mut bits = 0;
    while (1usize << bits) < lib_size {
        bits += 1;
    }
    bits
}

pub fn bit_len(prog: &[Tok], lib_size: usize) -> usize {
    prog.iter()
        .map(|t| match t {
            Tok::Op(_) => 3,
            Tok::Call(_) => 3 + index_bits(lib_size),
        })
        .sum()
}

pub fn text(prog: &[Tok], lib_size: usize) -> String {
    prog.iter()
        .map(|t| match *t {
            Tok::Op(o) => SYMBOLS[o as usize].to_string(),
            Tok::Call(k) if lib_size > 1 => format!("@{k}"),
            Tok::Call(_) => "@".to_string(),
        })
        .collect()
}

pub fn parse(src: &str) -> Vec<Tok> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        k += 1;
        if c == '@' {
            let start = k;
            while k < chars.len() && chars[k].is_ascii_digit() {
                k += 1;
            }
            let idx = if start == k {
                0
            } else {
                chars[start..k].iter().collect::<String>().parse().unwrap()
            };
            out.push(Tok::Call(idx));
        } else {
            let op = SYMBOLS.iter().position(|&s| s == c).expect("known symbol");
            out.push(Tok::Op(op as u8));
        }
    }
    out
}

fn balanced(prog: &[Tok]) -> bool {
    let mut depth = 0i32;
    for t in prog {
        match t {
            Tok::Op(OPEN) => depth += 1,
            Tok::Op(CLOSE) => {
                depth -= 1;
                if depth < 0 {
                    return false;
                }
            }
            _ => {}
        }
    }
    depth == 0
}

/// Every balanced program of the language with `lib_size` primitives (base
/// language: `lib_size == 0`, with `@` as `Call(0)`) of at most `max_bits`
/// bits, sorted by (bits, instruction sequence).
pub fn enumerate(lib_size: usize, max_bits: usize) -> Vec<Vec<Tok>> {
    let mut alphabet: Vec<Tok> = (0..7).map(Tok::Op).collect();
    for k in 0..lib_size.max(1) {
        alphabet.push(Tok::Call(k));
    }
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Vec<Tok>> = vec![Vec::new()];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for p in &frontier {
            for &t in &alphabet {
                let mut q = p.clone();
                q.push(t);
                if bit_len(&q, lib_size) <= max_bits {
                    next.push(q);
                }
            }
        }
        out.extend(next.iter().filter(|q| balanced(q)).cloned());
        frontier = next;
    }
    out.sort_by(|a, b| (bit_len(a, lib_size), a).cmp(&(bit_len(b, lib_size), b)));
    out
}

/// Inlines library calls. Calls without a library stay as diverging `@`.
pub fn unfold(prog: &[Tok], lib: &[Vec<Tok>]) -> Vec<Tok> {
    let mut out = Vec::new();
    for &t in prog {
        match t {
            Tok::Call(k) if k < lib.len() => out.extend_from_slice(&lib[k]),
            other => out.push(other),
        }
    }
    out
}

pub fn ninst_unfolded(prog: &[Tok], lib: &[Vec<Tok>]) -> usize {
    unfold(prog, lib).len()
}

pub fn calls(prog: &[Tok]) -> usize {
    prog.iter().filter(|t| matches!(t, Tok::Call(_))).count()
}

/// Runs a call-free program (a remaining `@` diverges). `Some((output,
/// steps))` if it halts within `budget` steps.
pub fn run(prog: &[Tok], input: &[bool], budget: u64) -> Option<(Vec<bool>, u64)> {
    let mut tape: HashMap<i64, bool> = HashMap::new();
    let mut head = 0i64;
    let mut reads = 0usize;
    let mut out = Vec::new();
    let mut pc = 0usize;
    let mut steps = 0u64;
    while pc < prog.len() {
        if steps == budget {
            return None;
        }
        steps += 1;
        let cell = *tape.get(&head).unwrap_or(&false);
        match prog[pc] {
            Tok::Call(_) => return None,
            Tok::Op(0) => head += 1,
            Tok::Op(1) => head -= 1,
            Tok::Op(2) => {
                tape.insert(head, !cell);
            }
            Tok::Op(3) => out.push(cell),
            Tok::Op(4) => {
                // Each input bit arrives as a marker 1 followed by the bit.
                let v = match input.get(reads / 2) {
                    Some(&b) => reads.is_multiple_of(2) || b,
                    None => false,
                };
                reads += 1;
                tape.insert(head, v);
            }
            Tok::Op(OPEN) if !cell => {
                let mut depth = 0;
                loop {
                    match prog[pc] {
                        Tok::Op(OPEN) => depth += 1,
                        Tok::Op(CLOSE) => {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        }
                        _ => {}
                    }
                    pc += 1;
                }
            }
            Tok::Op(CLOSE) if cell => {
                let mut depth = 0;
                loop {
                    match prog[pc] {
                        Tok::Op(CLOSE) => depth += 1,
                        Tok::Op(OPEN) => {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        }
                        _ => {}
                    }
                    pc -= 1;
                }
            }
            _ => {}
        }
        pc += 1;
    }
    Some((out, steps))
}

pub type Pair = (Vec<bool>, Option<Vec<bool>>);

pub fn pairs(set: &ExampleSet) -> Vec<Pair> {
    set.examples()
        .iter()
        .map(|e| {
            (
                e.input.bits().to_vec(),
                e.output.as_ref().map(|o| o.bits().to_vec()),
            )
        })
        .collect()
}

/// max{f(ℓ(i)), ρ·min(ℓ(i), longest input) + longest output + κ}.
pub fn budget(params: &Params, input_len: usize, set: &[Pair]) -> u64 {
    let longest_in = set.iter().map(|p| p.0.len()).max().unwrap_or(0);
    let longest_out = set
        .iter()
        .map(|p| p.1.as_ref().map_or(0, |o| o.len()))
        .max()
        .unwrap_or(0);
    let f = params.f.a * input_len as u64 + params.f.b;
    let lambda = params.trie.rho * input_len.min(longest_in) as u64
        + longest_out as u64
        + params.trie.kappa;
    f.max(lambda)
}

pub fn compatible(params: &Params, prog: &[Tok], lib: &[Vec<Tok>], set: &[Pair]) -> bool {
    let flat = unfold(prog, lib);
    set.iter().all(|(i, o)| {
        let r = run(&flat, i, budget(params, i.len(), set));
        match (r, o) {
            (Some((out, _)), Some(o)) => &out == o,
            (None, None) => true,
            _ => false,
        }
    })
}

pub fn all_strings(max_len: usize) -> Vec<Vec<bool>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &layer {
            for b in [false, true] {
                let mut t: Vec<bool> = s.clone();
                t.push(b);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Outcomes on every input up to h_in under max{f(ℓ(i)), κ}.
pub fn behaviour(params: &Params, prog: &[Tok], lib: &[Vec<Tok>]) -> Vec<Option<Vec<bool>>> {
    let flat = unfold(prog, lib);
    all_strings(params.h_in)
        .iter()
        .map(|i| {
            let b = (params.f.a * i.len() as u64 + params.f.b).max(params.trie.kappa);
            run(&flat, i, b).map(|(o, _)| o)
        })
        .collect()
}

fn index_of(s: &[bool]) -> u64 {
    s.iter().fold(1u64, |acc, &b| acc * 2 + b as u64) - 1
}

fn gamma(n: u64, out: &mut Vec<bool>) {
    let width = 64 - n.leading_zeros();
    out.extend(std::iter::repeat_n(false, width as usize - 1));
    for k in (0..width).rev() {
        out.push((n >> k) & 1 == 1);
    }
}

/// enc(|S|) then enc(N(i)) and enc(outcode) per example, inputs ascending,
/// where enc(n) is the gamma code of n + 1.
pub fn encode(set: &[Pair]) -> Vec<bool> {
    let mut sorted: Vec<&Pair> = set.iter().collect();
    sorted.sort_by_key(|p| index_of(&p.0));
    let mut out = Vec::new();
    gamma(sorted.len() as u64 + 1, &mut out);
    for (i, o) in sorted {
        gamma(index_of(i) + 1, &mut out);
        let code = o.as_ref().map_or(0, |o| index_of(o) + 1);
        gamma(code + 1, &mut out);
    }
    out
}

pub fn to_bitstring(v: &[bool]) -> BitString {
    BitString::from_bits(v.to_vec())
}

/// Behaviour table of base programs on the witness inputs: outcome and
/// steps under `cap` steps.
pub struct Table {
    pub programs: Vec<Vec<Tok>>,
    inputs: Vec<Vec<bool>>,
    cap: u64,
    cells: Vec<Vec<Option<(Vec<bool>, u64)>>>,
}

impl Table {
    pub fn new(params: &Params, max_bits: usize) -> Table {
        let programs = enumerate(0, max_bits);
        let inputs = all_strings(params.input_len_cap);
        let cap = (params.f.a * params.input_len_cap as u64 + params.f.b).max(256) + 1;
        let cells = programs
            .iter()
            .map(|p| inputs.iter().map(|i| run(p, i, cap)).collect())
            .collect();
        Table {
            programs,
            inputs,
            cap,
            cells,
        }
    }

    fn cell(&self, prog: usize, input: &[bool]) -> &Option<(Vec<bool>, u64)> {
        let k = self.inputs.iter().position(|i| i == input).expect("input in table");
        &self.cells[prog][k]
    }

    pub fn compatible(&self, params: &Params, prog: usize, set: &[Pair]) -> bool {
        set.iter().all(|(i, o)| {
            let b = budget(params, i.len(), set);
            assert!(b < self.cap, "table cap too small");
            match (self.cell(prog, i), o) {
                (Some((out, steps)), Some(o)) => *steps <= b && out == o,
                (Some((_, steps)), None) => *steps > b,
                (None, None) => true,
                (None, Some(_)) => false,
            }
        })
    }

    /// First compatible program, by brute force.
    pub fn learner(&self, params: &Params, set: &[Pair]) -> Option<usize> {
        (0..self.programs.len()).find(|&k| self.compatible(params, k, set))
    }
}
