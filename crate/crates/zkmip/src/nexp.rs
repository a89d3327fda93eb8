//! Perfect zero-knowledge low-degree IPCP for oracle 3-satisfiability.
//!
//! An instance is `(r, s, B)` with `B` a formula over `r + 3s + 3` bits; a witness is a table
//! `A: {0,1}^s -> {0,1}` such that `B(z, b1, b2, b3, A(b1), A(b2), A(b3))` holds everywhere.
//! The prover commits to a random low-degree extension of `A` (indexed through `H^m2`), proves
//! with strong-ZK sumcheck that the random combination `F(x, y)` of all constraints is zero,
//! sends the three values of the extension the final claim needs, and opens each of them with
//! weak-ZK sumcheck against the commitment.
//!
//! All oracles travel as one bundle `O(W, .)` with `O(s_j, .) = P_j` for the parts
//! `[Z, pi_0, pi_1, pi_2, pi_3]`. The verifier is public-coin and non-adaptive: every oracle
//! query is issued in one batch after the interaction.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::commit::{CommitError, Commitment};
use crate::field::{Fe, Field, Subset};
use crate::ipcp::{self, check_queries, Abort, LinearCheck, Msg, Outcome, ProtocolError, Prover, Run, VIn, VOut, Verifier};
use crate::poly::{lagrange_at, uni, Evaluator, MultiPoly, Oracle, OracleError, PolyOracle, Query};
use crate::rng::{Coins, SharedCoins};
use crate::sampler::{self, PolySampler};
use crate::sumcheck::{ByEvaluation, ProverMode, SumClaim};
use crate::zksumcheck::{
    committed_mask, strong_oracle, SliceOracle, StrongMode, StrongZkParams, StrongZkProver, StrongZkSimulator,
    StrongZkVerifier, WeakSimCore, WeakZkProver, WeakZkVerifier, ZkError,
};

pub const XY: &str = "nexp.xy";
pub const OPENED_VALUES: &str = "nexp.h";

/// Number of bundled oracle parts.
pub const PARTS: usize = 5;
/// Distinct bundle queries the honest verifier makes: two for the strong sumcheck check and
/// two per opening.
pub const VERIFIER_QUERIES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NexpError {
    #[error("formula parse error: {0}")]
    Parse(String),
    #[error("malformed instance: {0}")]
    Instance(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("witness does not satisfy the instance")]
    Unsatisfied,
    #[error(transparent)]
    Zk(#[from] ZkError),
    #[error(transparent)]
    Commit(#[from] CommitError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("simulator failure: {0}")]
    Simulator(String),
}

// ---------------------------------------------------------------------------------------
// formulas

/// AND/NOT formula over numbered input bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    Const(bool),
    Var(usize),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
}

impl Formula {
    /// Parses prefix notation: `and`, `not`, `var_<i>`, `true`, `false`, whitespace separated.
    /// Parentheses are ignored.
    pub fn parse(text: &str) -> Result<Formula, NexpError> {
        let spaced = text.replace(['(', ')'], " ");
        let mut tokens = spaced.split_whitespace();
        let f = Formula::parse_tokens(&mut tokens)?;
        if let Some(t) = tokens.next() {
            return Err(NexpError::Parse(format!("trailing token {t:?}")));
        }
        Ok(f)
    }

    fn parse_tokens<'a>(tokens: &mut impl Iterator<Item = &'a str>) -> Result<Formula, NexpError> {
        let t = tokens.next().ok_or_else(|| NexpError::Parse("unexpected end of formula".into()))?;
        Ok(match t {
            "and" => {
                let a = Formula::parse_tokens(tokens)?;
                let b = Formula::parse_tokens(tokens)?;
                Formula::And(Box::new(a), Box::new(b))
            }
            "not" => Formula::Not(Box::new(Formula::parse_tokens(tokens)?)),
            "true" => Formula::Const(true),
            "false" => Formula::Const(false),
            v => {
                let idx = v.strip_prefix("var_").ok_or_else(|| NexpError::Parse(format!("unknown token {v:?}")))?;
                Formula::Var(idx.parse().map_err(|_| NexpError::Parse(format!("bad variable {v:?}")))?)
            }
        })
    }

    pub fn to_text(&self) -> String {
        match self {
            Formula::Const(b) => b.to_string(),
            Formula::Var(i) => format!("var_{i}"),
            Formula::Not(a) => format!("not {}", a.to_text()),
            Formula::And(a, b) => format!("and {} {}", a.to_text(), b.to_text()),
        }
    }

    pub fn var(i: usize) -> Formula {
        Formula::Var(i)
    }

    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    /// Largest variable index, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Formula::Const(_) => None,
            Formula::Var(i) => Some(*i),
            Formula::Not(a) => a.max_var(),
            Formula::And(a, b) => a.max_var().max(b.max_var()),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::Const(_) | Formula::Var(_) => 1,
            Formula::Not(a) => 1 + a.size(),
            Formula::And(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn eval(&self, x: &[bool]) -> bool {
        match self {
            Formula::Const(b) => *b,
            Formula::Var(i) => x[*i],
            Formula::Not(a) => !a.eval(x),
            Formula::And(a, b) => a.eval(x) && b.eval(x),
        }
    }

    /// `AND -> a b`, `NOT -> 1 - a`.
    pub fn eval_arith(&self, f: &Field, x: &[Fe]) -> Fe {
        match self {
            Formula::Const(b) => {
                if *b {
                    f.one()
                } else {
                    f.zero()
                }
            }
            Formula::Var(i) => x[*i],
            Formula::Not(a) => f.sub(f.one(), a.eval_arith(f, x)),
            Formula::And(a, b) => f.mul(a.eval_arith(f, x), b.eval_arith(f, x)),
        }
    }

    /// Individual degree of the arithmetization in each of `n` inputs.
    pub fn degrees(&self, n: usize) -> Vec<usize> {
        match self {
            Formula::Const(_) => vec![0; n],
            Formula::Var(i) => {
                let mut d = vec![0; n];
                d[*i] = 1;
                d
            }
            Formula::Not(a) => a.degrees(n),
            Formula::And(a, b) => a.degrees(n).iter().zip(b.degrees(n)).map(|(x, y)| x + y).collect(),
        }
    }
}

impl Serialize for Formula {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_text())
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Formula, D::Error> {
        let text = String::deserialize(d)?;
        Formula::parse(&text).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------------------
// instances

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct O3SatInstance {
    pub r: usize,
    pub s: usize,
    pub formula: Formula,
}

/// `A: {0,1}^s -> {0,1}`, indexed by the bits read as a binary number, first bit most
/// significant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct O3SatWitness {
    pub bits: Vec<bool>,
}

impl O3SatWitness {
    pub fn from_index(s: usize, idx: u64) -> O3SatWitness {
        O3SatWitness { bits: (0..1usize << s).map(|j| (idx >> j) & 1 == 1).collect() }
    }

    pub fn parse(text: &str) -> Result<O3SatWitness, NexpError> {
        let bits = text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(NexpError::Parse(format!("witness character {c:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(O3SatWitness { bits })
    }

    pub fn to_text(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

fn bits_of(v: usize, n: usize) -> impl Iterator<Item = bool> {
    (0..n).rev().map(move |j| (v >> j) & 1 == 1)
}

impl O3SatInstance {
    pub fn new(r: usize, s: usize, formula: Formula) -> Result<O3SatInstance, NexpError> {
        let inst = O3SatInstance { r, s, formula };
        inst.validate()?;
        Ok(inst)
    }

    pub fn num_inputs(&self) -> usize {
        self.r + 3 * self.s + 3
    }

    pub fn validate(&self) -> Result<(), NexpError> {
        if self.r == 0 || self.s == 0 {
            return Err(NexpError::Instance("r and s must be positive".into()));
        }
        if self.r + 3 * self.s > 24 {
            return Err(NexpError::Instance(format!("r + 3s = {} is beyond enumeration", self.r + 3 * self.s)));
        }
        if let Some(v) = self.formula.max_var() {
            if v >= self.num_inputs() {
                return Err(NexpError::Instance(format!("variable {v} out of range for {} inputs", self.num_inputs())));
            }
        }
        Ok(())
    }

    /// Assignments `(z, b1, b2, b3)` violating the formula under `w`.
    pub fn violations(&self, w: &O3SatWitness) -> usize {
        let (r, s) = (self.r, self.s);
        let n = r + 3 * s;
        let mut x = vec![false; n + 3];
        (0..1usize << n)
            .filter(|&v| {
                for (slot, bit) in x.iter_mut().zip(bits_of(v, n)) {
                    *slot = bit;
                }
                for i in 0..3 {
                    let b = (v >> (s * (2 - i))) & ((1 << s) - 1);
                    x[n + i] = w.bits[b];
                }
                !self.formula.eval(&x)
            })
            .count()
    }

    pub fn is_satisfied_by(&self, w: &O3SatWitness) -> bool {
        w.bits.len() == 1 << self.s && self.violations(w) == 0
    }

    /// Witness with the fewest violations, searched exhaustively (ties: smallest index).
    pub fn best_witness(&self) -> Result<(O3SatWitness, usize), NexpError> {
        if self.s > 4 {
            return Err(NexpError::Instance("exhaustive witness search needs s <= 4".into()));
        }
        Ok((0..1u64 << (1 << self.s))
            .map(|i| {
                let w = O3SatWitness::from_index(self.s, i);
                let v = self.violations(&w);
                (w, v)
            })
            .min_by_key(|(_, v)| *v)
            .expect("nonempty search space"))
    }
}

// ---------------------------------------------------------------------------------------
// arithmetization

/// The arithmetized instance over `F` with summation subfield `H`.
#[derive(Clone, Debug)]
pub struct ArithInstance {
    pub field: Field,
    pub h: Subset,
    /// `log |H|`.
    pub digit_bits: usize,
    pub inst: O3SatInstance,
    pub m1: usize,
    pub m2: usize,
    /// Individual degrees of the negated formula's arithmetization per input.
    pub formula_degs: Vec<usize>,
    /// Univariate extensions over `H` of the digit bits, most significant first.
    bit_polys: Vec<Vec<Fe>>,
}

impl ArithInstance {
    pub fn new(inst: &O3SatInstance, field: &Field, h: &Subset) -> Result<ArithInstance, NexpError> {
        inst.validate()?;
        if !field.is_binary() {
            return Err(NexpError::Params("the field must be a binary extension field".into()));
        }
        let hs = h.len();
        if hs < 2 || !hs.is_power_of_two() || !h.check_closure(field) {
            return Err(NexpError::Params("H must be a subfield".into()));
        }
        let digit_bits = hs.trailing_zeros() as usize;
        if inst.r % digit_bits != 0 || inst.s % digit_bits != 0 {
            return Err(NexpError::Params(format!("log|H| = {digit_bits} must divide r = {} and s = {}", inst.r, inst.s)));
        }
        let bit_polys = (0..digit_bits)
            .map(|j| {
                let ys: Vec<Fe> = (0..hs)
                    .map(|idx| if (idx >> (digit_bits - 1 - j)) & 1 == 1 { field.one() } else { field.zero() })
                    .collect();
                uni::interpolate(field, h.elems(), &ys).expect("distinct points")
            })
            .collect();
        let a = ArithInstance {
            field: field.clone(),
            h: h.clone(),
            digit_bits,
            inst: inst.clone(),
            m1: inst.r / digit_bits,
            m2: inst.s / digit_bits,
            formula_degs: inst.formula.degrees(inst.num_inputs()),
            bit_polys,
        };
        let dmax = a.summand_degs().into_iter().max().unwrap_or(0);
        if dmax as u64 >= field.order() {
            return Err(NexpError::Params(format!("summand degree {dmax} is not below |F| = {}", field.order())));
        }
        Ok(a)
    }

    /// Summation variables `m1 + 3 m2`.
    pub fn num_vars(&self) -> usize {
        self.m1 + 3 * self.m2
    }

    /// Length of each of `x` and `y`.
    pub fn xy_len(&self) -> usize {
        self.inst.r + 3 * self.inst.s
    }

    /// Individual degree of the committed extension of `A`.
    pub fn ext_degree(&self) -> usize {
        self.h.len() + 2
    }

    /// `gamma-hat`: the bits of the lexicographic index, extended to `F^(m1 + 3 m2)`.
    pub fn index_bits(&self, v: &[Fe]) -> Vec<Fe> {
        let f = &self.field;
        v.iter().flat_map(|&t| self.bit_polys.iter().map(move |p| uni::eval(f, p, t))).collect()
    }

    /// Splits a summation point into `(alpha, beta_1, beta_2, beta_3)`.
    pub fn split<'a>(&self, v: &'a [Fe]) -> (&'a [Fe], [&'a [Fe]; 3]) {
        let (m1, m2) = (self.m1, self.m2);
        (&v[..m1], [&v[m1..m1 + m2], &v[m1 + m2..m1 + 2 * m2], &v[m1 + 2 * m2..m1 + 3 * m2]])
    }

    /// Negated formula, arithmetized.
    pub fn negated(&self, inputs: &[Fe]) -> Fe {
        let f = &self.field;
        f.sub(f.one(), self.inst.formula.eval_arith(f, inputs))
    }

    /// `f(x, y, v)` with the three extension values `a_i = A(beta_i)` supplied.
    pub fn summand(&self, x: &[Fe], y: &[Fe], v: &[Fe], a: [Fe; 3]) -> Fe {
        let f = &self.field;
        let u = self.index_bits(v);
        let mut inputs = u.clone();
        inputs.extend(a);
        let g1 = self.negated(&inputs);
        let g2 = f.mul(a[0], f.sub(f.one(), a[0]));
        let selector = |w: &[Fe]| {
            u.iter().zip(w).fold(f.one(), |acc, (&ui, &wi)| f.mul(acc, f.add(f.one(), f.mul(f.sub(wi, f.one()), ui))))
        };
        f.add(f.mul(g1, selector(x)), f.mul(g2, selector(y)))
    }

    /// Individual degree bounds of `f` in the summation variables.
    pub fn summand_degs(&self) -> Vec<usize> {
        let hb = self.digit_bits;
        let bit_deg = self.h.len() - 1;
        let (r, s) = (self.inst.r, self.inst.s);
        let product = hb * bit_deg;
        let mut out = Vec::with_capacity(self.num_vars());
        for t in 0..self.m1 {
            let x_part: usize = (t * hb..(t + 1) * hb).map(|j| self.formula_degs[j] * bit_deg).sum::<usize>() + product;
            out.push(x_part.max(product));
        }
        for i in 0..3 {
            let a_in = self.formula_degs[r + 3 * s + i] * self.ext_degree();
            for p in 0..self.m2 {
                let start = r + i * s + p * hb;
                let x_part: usize = (start..start + hb).map(|j| self.formula_degs[j] * bit_deg).sum::<usize>() + a_in + product;
                let y_part = product + if i == 0 { 2 * self.ext_degree() } else { 0 };
                out.push(x_part.max(y_part));
            }
        }
        out
    }

    /// `A` as a table over `H^m2` in lexicographic order.
    pub fn witness_table(&self, w: &O3SatWitness) -> Vec<Fe> {
        w.bits.iter().map(|&b| if b { self.field.one() } else { self.field.zero() }).collect()
    }

    /// `F(x, y)` by its definition as a sum over bit strings, given `A` on bit strings.
    pub fn constraint_poly_at(&self, table: &[Fe], x: &[Fe], y: &[Fe]) -> Fe {
        let f = &self.field;
        let (r, s) = (self.inst.r, self.inst.s);
        let n = r + 3 * s;
        let mut acc = f.zero();
        for v in 0..1usize << n {
            let bits: Vec<bool> = bits_of(v, n).collect();
            let mut inputs: Vec<Fe> = bits.iter().map(|&b| if b { f.one() } else { f.zero() }).collect();
            let a: Vec<Fe> = (0..3).map(|i| table[(v >> (s * (2 - i))) & ((1 << s) - 1)]).collect();
            inputs.extend(&a);
            let g1 = self.negated(&inputs);
            let g2 = f.mul(a[0], f.sub(f.one(), a[0]));
            let mono = |w: &[Fe]| bits.iter().zip(w).fold(f.one(), |acc, (&b, &wi)| if b { f.mul(acc, wi) } else { acc });
            acc = f.add(acc, f.add(f.mul(g1, mono(x)), f.mul(g2, mono(y))));
        }
        acc
    }

    /// Whether every constraint holds for a field-valued `A` on bit strings.
    pub fn constraints_hold(&self, table: &[Fe]) -> bool {
        let f = &self.field;
        let (r, s) = (self.inst.r, self.inst.s);
        let n = r + 3 * s;
        let boolean = table.iter().all(|&a| f.mul(a, f.sub(f.one(), a)) == f.zero());
        boolean
            && (0..1usize << n).all(|v| {
                let mut inputs: Vec<Fe> = bits_of(v, n).map(|b| if b { f.one() } else { f.zero() }).collect();
                inputs.extend((0..3).map(|i| table[(v >> (s * (2 - i))) & ((1 << s) - 1)]));
                self.negated(&inputs) == f.zero()
            })
    }

    /// Uniformly random extension of `table` over `H^m2` with individual degree `|H| + 2`.
    pub fn random_extension(&self, table: &[Fe], coins: &mut dyn Coins) -> Result<MultiPoly, NexpError> {
        let degs = vec![self.ext_degree(); self.m2];
        let q0 = MultiPoly::random(&self.field, &degs, coins);
        let grid = grid_points(&self.h, self.m2);
        let diff: Vec<Fe> = grid.iter().zip(table).map(|(p, &t)| self.field.sub(t, q0.eval(p))).collect();
        let fix = MultiPoly::lde(&self.field, &self.h, self.m2, &diff).map_err(|e| NexpError::Params(e.to_string()))?;
        Ok(q0.add(&fix.pad_to(&degs)))
    }
}

/// `H^m` in lexicographic order.
pub fn grid_points(h: &Subset, m: usize) -> Vec<Vec<Fe>> {
    let n = h.len().pow(m as u32);
    (0..n)
        .map(|mut i| {
            let mut p = vec![Fe(0); m];
            for slot in p.iter_mut().rev() {
                *slot = h.elems()[i % h.len()];
                i /= h.len();
            }
            p
        })
        .collect()
}

/// `f(x, y, .)` with `A` read from the committed extension.
#[derive(Clone)]
struct Summand {
    arith: ArithInstance,
    x: Vec<Fe>,
    y: Vec<Fe>,
    ext: MultiPoly,
}

impl Evaluator for Summand {
    fn num_vars(&self) -> usize {
        self.arith.num_vars()
    }

    fn deg_bounds(&self) -> Vec<usize> {
        self.arith.summand_degs()
    }

    fn eval_at(&self, v: &[Fe]) -> Fe {
        let (_, betas) = self.arith.split(v);
        let a = betas.map(|b| self.ext.eval(b));
        self.arith.summand(&self.x, &self.y, v, a)
    }
}

// ---------------------------------------------------------------------------------------
// parameters

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NexpParams {
    /// Zero-knowledge query bound on the bundled oracle.
    pub b: usize,
    /// `k` is the least integer with `|H|^k >= slack * b`.
    pub slack: usize,
    /// Strong-ZK parameters for `pi_0`.
    pub lambda0: usize,
    pub k0: usize,
}

impl NexpParams {
    /// Commitment arity `k = ceil(log(slack b) / log |H|)`.
    pub fn k(&self, h: &Subset) -> usize {
        let target = (self.slack * self.b) as u128;
        let mut k = 0;
        let mut pow = 1u128;
        while pow < target {
            pow *= h.len() as u128;
            k += 1;
        }
        k.max(1)
    }
}

/// Everything both parties derive from the instance and parameters.
#[derive(Clone, Debug)]
pub struct NexpSetup {
    pub arith: ArithInstance,
    pub params: NexpParams,
    pub k: usize,
    pub strong: StrongZkParams,
    /// Selector points of the bundle.
    pub selectors: Vec<Fe>,
}

impl NexpSetup {
    pub fn new(inst: &O3SatInstance, field: &Field, h: &Subset, params: &NexpParams) -> Result<NexpSetup, NexpError> {
        let arith = ArithInstance::new(inst, field, h)?;
        let k = params.k(h);
        if params.b == 0 {
            return Err(NexpError::Params("query bound must be positive".into()));
        }
        let strong = StrongZkParams::new(field, h, &arith.summand_degs(), params.k0, params.lambda0)?;
        if field.order() <= PARTS as u64 {
            return Err(NexpError::Params("field too small to bundle".into()));
        }
        let setup = NexpSetup { arith, params: params.clone(), k, strong, selectors: field.first_elements(PARTS) };
        let cap = crate::poly::DENSE_CAP;
        let dims = [dense(&setup.z_degs()), dense(&setup.strong.oracle_degs()), dense(&setup.mask_degs())];
        if dims.iter().any(|&d| d > cap) {
            return Err(NexpError::Params(format!("oracle dimensions {dims:?} exceed the dense cap {cap}")));
        }
        Ok(setup)
    }

    pub fn field(&self) -> &Field {
        &self.arith.field
    }

    pub fn h(&self) -> &Subset {
        &self.arith.h
    }

    /// Degree bounds of the commitment `Z(X, Y)`.
    pub fn z_degs(&self) -> Vec<usize> {
        let mut d = vec![self.arith.ext_degree(); self.arith.m2];
        d.extend(self.mask_degs());
        d
    }

    /// Degree bounds of the opening masks `pi_1..pi_3`.
    pub fn mask_degs(&self) -> Vec<usize> {
        vec![2 * self.h().len(); self.k]
    }

    pub fn part_arity(&self, j: usize) -> usize {
        match j {
            0 => self.arith.m2 + self.k,
            1 => self.strong.oracle_vars(),
            _ => self.k,
        }
    }

    /// Arity of the bundle (selector included).
    pub fn bundle_arity(&self) -> usize {
        1 + (0..PARTS).map(|j| self.part_arity(j)).max().unwrap()
    }

    /// Individual degree bounds of the bundle: the selector variable, then per position the
    /// largest bound among the parts that read it.
    pub fn bundle_degs(&self) -> Vec<usize> {
        let mut degs = vec![0; self.bundle_arity()];
        degs[0] = PARTS - 1;
        let parts = [self.z_degs(), self.strong.oracle_degs(), self.mask_degs(), self.mask_degs(), self.mask_degs()];
        for part in &parts {
            for (i, &d) in part.iter().enumerate() {
                degs[1 + i] = degs[1 + i].max(d);
            }
        }
        degs
    }

    /// Bundle query addressing part `j` at `point`.
    pub fn part_query(&self, j: usize, point: &[Fe]) -> Query {
        let mut p = vec![self.selectors[j]];
        p.extend(point);
        p.resize(self.bundle_arity(), self.field().zero());
        Query::Point(p)
    }

    /// Messages the prover receives during the strong-ZK phase.
    fn strong_receives(&self) -> usize {
        self.strong.m() + self.strong.k + 2
    }

    fn weak_claim(&self, target: Fe) -> SumClaim {
        SumClaim { h: self.h().clone(), degs: self.mask_degs(), target }
    }

    /// Acceptance bound for a prover that follows the protocol structure with some table `A'`
    /// and cheats only inside the strong sumcheck: `F(x, y)` has total degree `r + 3s`, so it
    /// vanishes at random `(x, y)` with probability at most `(r + 3s)/|F|`, after which the
    /// strong sumcheck bound applies.
    pub fn structured_soundness_bound(&self) -> f64 {
        let q = self.field().order() as f64;
        self.arith.xy_len() as f64 / q + self.strong.soundness_bound(self.field())
    }

    /// Union bound over every cheating route, including false opened values.
    pub fn soundness_bound(&self) -> f64 {
        let q = self.field().order() as f64;
        let kd = (self.k * 2 * self.h().len()) as f64;
        self.structured_soundness_bound() + 3.0 * ((kd + 1.0) / (q - 1.0) + kd / q)
    }
}

fn dense(degs: &[usize]) -> usize {
    degs.iter().try_fold(1usize, |acc, d| acc.checked_mul(d + 1)).unwrap_or(usize::MAX)
}

// ---------------------------------------------------------------------------------------
// bundle

/// Oracle `O(W, p) = sum_j L_j(W) P_j(p)`, each part reading the leading coordinates it needs.
pub struct Bundle {
    field: Field,
    selectors: Vec<Fe>,
    arity: usize,
    parts: Vec<Box<dyn Oracle>>,
}

impl Bundle {
    pub fn new(field: &Field, selectors: &[Fe], arity: usize, parts: Vec<Box<dyn Oracle>>) -> Bundle {
        assert_eq!(selectors.len(), parts.len());
        Bundle { field: field.clone(), selectors: selectors.to_vec(), arity, parts }
    }
}

/// Lagrange weights of `w` over the selectors; exactly one is nonzero when `w` is a selector.
fn selector_weights(field: &Field, selectors: &[Fe], w: Fe) -> Vec<Fe> {
    lagrange_at(field, selectors, w).expect("distinct selectors")
}

impl Oracle for Bundle {
    fn num_vars(&self) -> usize {
        self.arity
    }

    fn answer(&mut self, q: &Query) -> Result<Fe, OracleError> {
        let x = match q {
            Query::Point(x) if x.len() == self.arity => x,
            Query::Point(x) => return Err(OracleError::Dimension { expected: self.arity, got: x.len() }),
            Query::Prefix(_) => return Err(OracleError::PrefixUnsupported),
        };
        let f = self.field.clone();
        let weights = selector_weights(&f, &self.selectors, x[0]);
        let mut acc = f.zero();
        for (wj, part) in weights.into_iter().zip(self.parts.iter_mut()) {
            if wj != f.zero() {
                let n = part.num_vars();
                let v = part.answer(&Query::Point(x[1..1 + n].to_vec()))?;
                acc = f.add(acc, f.mul(wj, v));
            }
        }
        Ok(acc)
    }
}

// ---------------------------------------------------------------------------------------
// prover

enum ProverStage {
    AwaitXy,
    Strong { prover: Box<StrongZkProver>, received: usize, point: Vec<Fe> },
    SendValues { c: Vec<Fe> },
    ValuesSent,
    Opening { i: usize, prover: WeakZkProver, received: usize },
    Finished,
}

/// Honest-structure prover. With a satisfying witness and [`StrongMode::Honest`] it is the
/// honest prover; with other modes it cheats in the strong sumcheck.
pub struct NexpProver {
    setup: NexpSetup,
    mode: StrongMode,
    commitment: Commitment,
    z0: MultiPoly,
    a0: MultiPoly,
    masks: Vec<MultiPoly>,
    oracle: Bundle,
    opened: Vec<Vec<Fe>>,
    stage: ProverStage,
}

impl NexpProver {
    /// `table` is `A` on `H^m2` (lexicographic), any field values allowed.
    pub fn new(setup: &NexpSetup, table: &[Fe], mode: StrongMode, coins: &mut dyn Coins) -> Result<NexpProver, NexpError> {
        let f = setup.field().clone();
        let ar = &setup.arith;
        if table.len() != ar.h.len().pow(ar.m2 as u32) {
            return Err(NexpError::Instance(format!("witness table has {} entries", table.len())));
        }
        let ext = ar.random_extension(table, coins)?;
        let commitment = Commitment::commit(&f, &ext, setup.k, &ar.h, 2 * ar.h.len(), coins, false)?;
        let z0 = MultiPoly::random(&f, &setup.strong.z_degs(), coins);
        let a0 = MultiPoly::random(&f, &setup.strong.a_degs(), coins);
        let masks: Vec<MultiPoly> = (0..3).map(|_| MultiPoly::random(&f, &setup.mask_degs(), coins)).collect();
        let pi0 = strong_oracle(&f, &z0, &a0, setup.strong.m());
        // low-degree completeness: every part within its declared bounds
        let checks = [
            (commitment.randomizer(), setup.z_degs()),
            (&pi0, setup.strong.oracle_degs()),
            (&masks[0], setup.mask_degs()),
            (&masks[1], setup.mask_degs()),
            (&masks[2], setup.mask_degs()),
        ];
        for (j, (p, degs)) in checks.iter().enumerate() {
            if !p.within_bounds(degs) {
                return Err(NexpError::Params(format!("oracle part {j} exceeds its degree bounds")));
            }
        }
        let mut parts: Vec<Box<dyn Oracle>> = vec![
            Box::new(PolyOracle::points_only(commitment.randomizer().clone())),
            Box::new(PolyOracle::points_only(pi0)),
        ];
        parts.extend(masks.iter().map(|m| Box::new(PolyOracle::points_only(m.clone())) as Box<dyn Oracle>));
        let oracle = Bundle::new(&f, &setup.selectors, setup.bundle_arity(), parts);
        Ok(NexpProver {
            setup: setup.clone(),
            mode,
            commitment,
            z0,
            a0,
            masks,
            oracle,
            opened: vec![],
            stage: ProverStage::AwaitXy,
        })
    }

    pub fn commitment(&self) -> &Commitment {
        &self.commitment
    }

    /// The parts `[Z, pi_0, pi_1, pi_2, pi_3]` as explicit polynomials.
    pub fn parts(&self) -> Vec<MultiPoly> {
        let mut v = vec![
            self.commitment.randomizer().clone(),
            strong_oracle(self.setup.field(), &self.z0, &self.a0, self.setup.strong.m()),
        ];
        v.extend(self.masks.iter().cloned());
        v
    }

    fn start_opening(&mut self, i: usize) -> Result<Msg, Abort> {
        let f = self.setup.field().clone();
        let point = &self.opened[i];
        let slice = self.commitment.randomizer().partial_eval(point);
        let value = self.commitment.committed().eval(point);
        let mut prover =
            WeakZkProver::new(&f, Box::new(slice), self.setup.h(), value, self.masks[i].clone(), ProverMode::Honest);
        let out = prover.send();
        self.stage = ProverStage::Opening { i, prover, received: 0 };
        out
    }
}

impl Prover for NexpProver {
    fn oracle(&mut self) -> &mut dyn Oracle {
        &mut self.oracle
    }

    fn receive(&mut self, m: &Msg) -> Result<(), Abort> {
        let setup = &self.setup;
        match &mut self.stage {
            ProverStage::AwaitXy => {
                let n = setup.arith.xy_len();
                if m.kind != XY || m.body.len() != 2 * n {
                    return Err(Abort);
                }
                let summand = Summand {
                    arith: setup.arith.clone(),
                    x: m.body[..n].to_vec(),
                    y: m.body[n..].to_vec(),
                    ext: self.commitment.committed().clone(),
                };
                let src = ByEvaluation { field: setup.field().clone(), inner: summand };
                let prover = StrongZkProver::new(
                    setup.field(),
                    &setup.strong,
                    Box::new(src),
                    setup.field().zero(),
                    self.z0.clone(),
                    self.a0.clone(),
                    self.mode,
                );
                self.stage = ProverStage::Strong { prover: Box::new(prover), received: 0, point: vec![] };
                Ok(())
            }
            ProverStage::Strong { prover, received, point } => {
                prover.receive(m)?;
                // the challenges after rho are the strong sumcheck point
                if (1..=setup.strong.m()).contains(received) {
                    point.push(m.as_scalar().ok_or(Abort)?);
                }
                *received += 1;
                if *received == setup.strong_receives() {
                    let c = std::mem::take(point);
                    self.stage = ProverStage::SendValues { c };
                }
                Ok(())
            }
            ProverStage::Opening { prover, received, .. } if *received < 1 + setup.k => {
                *received += 1;
                prover.receive(m)
            }
            _ => Err(Abort),
        }
    }

    fn send(&mut self) -> Result<Msg, Abort> {
        match std::mem::replace(&mut self.stage, ProverStage::Finished) {
            ProverStage::Strong { mut prover, received, point } => {
                let out = prover.send();
                self.stage = ProverStage::Strong { prover, received, point };
                out
            }
            ProverStage::SendValues { c } => {
                let (_, betas) = self.setup.arith.split(&c);
                self.opened = betas.iter().map(|b| b.to_vec()).collect();
                let h: Vec<Fe> = self.opened.iter().map(|b| self.commitment.committed().eval(b)).collect();
                self.stage = ProverStage::ValuesSent;
                Ok(Msg::new(OPENED_VALUES, h))
            }
            ProverStage::ValuesSent => self.start_opening(0),
            ProverStage::Opening { i, prover, received } if received == 1 + self.setup.k && i < 2 => {
                drop(prover);
                self.start_opening(i + 1)
            }
            ProverStage::Opening { i, mut prover, received } => {
                let out = prover.send();
                self.stage = ProverStage::Opening { i, prover, received };
                out
            }
            other => {
                self.stage = other;
                Err(Abort)
            }
        }
    }
}

// ---------------------------------------------------------------------------------------
// verifier

enum VerifierStage {
    Start,
    Strong { verifier: Box<StrongZkVerifier>, started: bool },
    AwaitValues { c: Vec<Fe>, a: Fe },
    Opening { i: usize, h: Vec<Fe>, c: Vec<Fe>, weak: WeakZkVerifier },
    AwaitAnswers { queries: Vec<Query> },
    Finished,
}

/// Public-coin verifier; all oracle queries are made in one batch at the end.
pub struct NexpVerifier {
    setup: NexpSetup,
    coins: SharedCoins,
    x: Vec<Fe>,
    y: Vec<Fe>,
    checks: Vec<LinearCheck>,
    stage: VerifierStage,
}

impl NexpVerifier {
    pub fn new(setup: &NexpSetup, coins: Box<dyn Coins>) -> NexpVerifier {
        NexpVerifier {
            setup: setup.clone(),
            coins: SharedCoins::new(coins),
            x: vec![],
            y: vec![],
            checks: vec![],
            stage: VerifierStage::Start,
        }
    }

    /// Checks collected so far, on bundle queries.
    pub fn checks(&self) -> &[LinearCheck] {
        &self.checks
    }

    fn start_opening(&mut self, i: usize, h: Vec<Fe>, c: Vec<Fe>) -> Result<VOut, ProtocolError> {
        let claim = self.setup.weak_claim(h[i]);
        let mut weak = WeakZkVerifier::new(self.setup.field(), claim, Box::new(self.coins.clone())).deferred();
        let out = weak.step(VIn::Start)?;
        self.after_opening(i, h, c, weak, out)
    }

    fn after_opening(&mut self, i: usize, h: Vec<Fe>, c: Vec<Fe>, weak: WeakZkVerifier, out: VOut) -> Result<VOut, ProtocolError> {
        match out {
            VOut::Done(Outcome::Claim { claim }) => {
                // rho Z(c'_i, c'') + pi_i(c'') = b
                let f = self.setup.field().clone();
                let (_, betas) = self.setup.arith.split(&c);
                let mut zpt = betas[i].to_vec();
                zpt.extend(&claim.point);
                let rho = weak.rho().expect("challenge sent");
                self.checks.push(LinearCheck {
                    terms: vec![(rho, self.setup.part_query(0, &zpt)), (f.one(), self.setup.part_query(2 + i, &claim.point))],
                    rhs: claim.value,
                });
                if i < 2 {
                    return self.start_opening(i + 1, h, c);
                }
                let queries = check_queries(&self.checks);
                self.stage = VerifierStage::AwaitAnswers { queries: queries.clone() };
                Ok(VOut::Query(queries))
            }
            VOut::Done(o) => Ok(VOut::Done(o)),
            VOut::Query(_) => Err(ProtocolError::Misuse("deferred weak verifier queried".into())),
            other => {
                self.stage = VerifierStage::Opening { i, h, c, weak };
                Ok(other)
            }
        }
    }
}

impl Verifier for NexpVerifier {
    fn step(&mut self, input: VIn) -> Result<VOut, ProtocolError> {
        let f = self.setup.field().clone();
        match (std::mem::replace(&mut self.stage, VerifierStage::Finished), input) {
            (VerifierStage::Start, VIn::Start) => {
                let n = self.setup.arith.xy_len();
                self.x = f.random_vec(n, &mut self.coins);
                self.y = f.random_vec(n, &mut self.coins);
                let mut body = self.x.clone();
                body.extend(&self.y);
                let strong = StrongZkVerifier::new(&f, &self.setup.strong, f.zero(), Box::new(self.coins.clone())).deferred();
                self.stage = VerifierStage::Strong { verifier: Box::new(strong), started: false };
                Ok(VOut::Send(Msg::new(XY, body)))
            }
            (VerifierStage::Strong { verifier: mut strong, started }, input) => {
                let input = match input {
                    VIn::Sent if !started => VIn::Start,
                    other => other,
                };
                match strong.step(input)? {
                    VOut::Done(Outcome::Claim { claim }) => {
                        let map = |q: &Query| self.setup.part_query(1, q.coords());
                        self.checks.extend(strong.checks().iter().cloned().map(|c| c.map_queries(map)));
                        self.stage = VerifierStage::AwaitValues { c: claim.point, a: claim.value };
                        Ok(VOut::Receive)
                    }
                    VOut::Done(o) => Ok(VOut::Done(o)),
                    VOut::Query(_) => Err(ProtocolError::Misuse("deferred strong verifier queried".into())),
                    other => {
                        self.stage = VerifierStage::Strong { verifier: strong, started: true };
                        Ok(other)
                    }
                }
            }
            (VerifierStage::AwaitValues { c, a }, VIn::Message(m)) => {
                if m.kind != OPENED_VALUES || m.body.len() != 3 {
                    return Ok(VOut::Done(Outcome::reject(format!("expected {OPENED_VALUES} with 3 values"))));
                }
                let h = m.body.clone();
                let expect = self.setup.arith.summand(&self.x, &self.y, &c, [h[0], h[1], h[2]]);
                if expect != a {
                    return Ok(VOut::Done(Outcome::reject("summand with the opened values does not match the claim")));
                }
                self.start_opening(0, h, c)
            }
            (VerifierStage::Opening { i, h, c, mut weak }, input) => {
                let out = weak.step(input)?;
                self.after_opening(i, h, c, weak, out)
            }
            (VerifierStage::AwaitAnswers { queries }, VIn::Answers(ans)) if ans.len() == queries.len() => {
                let table: HashMap<&Query, Fe> = queries.iter().zip(ans).collect();
                let ok = self.checks.iter().all(|chk| chk.holds(&f, |q| table[q]));
                Ok(VOut::Done(if ok { Outcome::Accept } else { Outcome::reject("oracle check failed") }))
            }
            (_, input) => Err(ProtocolError::Misuse(format!("NEXP verifier got unexpected input {input:?}"))),
        }
    }
}

/// Runs `prover` against the honest verifier.
pub fn nexp_run(
    setup: &NexpSetup,
    table: &[Fe],
    mode: StrongMode,
    prover_coins: &mut dyn Coins,
    verifier_coins: Box<dyn Coins>,
) -> Result<Run, NexpError> {
    if setup.k != setup.params.k(setup.h()) {
        return Err(NexpError::Params(format!("commitment arity {} does not match the query bound", setup.k)));
    }
    let mut p = NexpProver::new(setup, table, mode, prover_coins)?;
    let mut v = NexpVerifier::new(setup, verifier_coins);
    Ok(ipcp::run(&mut p, &mut v, None)?)
}

// ---------------------------------------------------------------------------------------
// simulator

/// What the summand oracle of the strong-ZK subsimulator needs and produces.
struct SimShared {
    arith: ArithInstance,
    coins: SharedCoins,
    xy: Option<(Vec<Fe>, Vec<Fe>)>,
    /// Simulated `A(c'_i)`, drawn at the single summand query.
    values: Option<Vec<Fe>>,
    point: Option<Vec<Fe>>,
}

struct SimSummand(Rc<RefCell<SimShared>>);

impl Oracle for SimSummand {
    fn num_vars(&self) -> usize {
        self.0.borrow().arith.num_vars()
    }

    fn answer(&mut self, q: &Query) -> Result<Fe, OracleError> {
        let mut st = self.0.borrow_mut();
        let st = &mut *st;
        let c = match q {
            Query::Point(c) if c.len() == st.arith.num_vars() => c.clone(),
            _ => return Err(OracleError::Simulator("summand takes point queries only".into())),
        };
        let (x, y) = st.xy.clone().ok_or_else(|| OracleError::Simulator("summand queried before x, y".into()))?;
        if st.values.is_some() {
            return Err(OracleError::Simulator("summand queried twice".into()));
        }
        let f = st.arith.field.clone();
        let (_, betas) = st.arith.split(&c);
        // uniform values, equal where the points coincide
        let mut h: Vec<Fe> = Vec::with_capacity(3);
        for i in 0..3 {
            let v = match (0..i).find(|&j| betas[j] == betas[i]) {
                Some(j) => h[j],
                None => f.random(&mut st.coins),
            };
            h.push(v);
        }
        let ans = st.arith.summand(&x, &y, &c, [h[0], h[1], h[2]]);
        st.values = Some(h);
        st.point = Some(c);
        Ok(ans)
    }
}

enum SimStage {
    AwaitXy,
    Strong { received: usize },
    SendValues,
    Opening { i: usize, received: usize },
    Finished,
}

/// Straightline simulator for the NEXP protocol. It never sees a witness.
pub struct NexpSimulator {
    setup: NexpSetup,
    coins: SharedCoins,
    /// The commitment, sampled lazily and unconstrained.
    zs: PolySampler,
    strong: StrongZkSimulator,
    weak: Vec<WeakSimCore>,
    shared: Rc<RefCell<SimShared>>,
    stage: SimStage,
    failure: Option<String>,
}

impl NexpSimulator {
    pub fn new(setup: &NexpSetup, coins: Box<dyn Coins>) -> Result<NexpSimulator, NexpError> {
        let f = setup.field();
        let coins = SharedCoins::new(coins);
        let shared = Rc::new(RefCell::new(SimShared {
            arith: setup.arith.clone(),
            coins: coins.clone(),
            xy: None,
            values: None,
            point: None,
        }));
        let strong = StrongZkSimulator::new(
            f,
            &setup.strong,
            f.zero(),
            Box::new(SimSummand(shared.clone())),
            Box::new(coins.clone()),
        )?;
        let weak = (0..3)
            .map(|_| WeakSimCore::new(f, setup.h(), &setup.mask_degs(), f.zero(), Box::new(coins.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(NexpSimulator {
            setup: setup.clone(),
            zs: PolySampler::new(f, &setup.z_degs()).map_err(ZkError::from)?,
            coins,
            strong,
            weak,
            shared,
            stage: SimStage::AwaitXy,
            failure: None,
        })
    }

    pub fn failure(&self) -> Option<&str> {
        self.failure.as_deref().or(self.strong.failure()).or(self.weak.iter().find_map(|w| w.failure()))
    }

    /// Summand queries made by the strong-ZK subsimulator.
    pub fn summand_queries(&self) -> usize {
        self.strong.f_log().len()
    }

    /// Simulated opened values, once drawn.
    pub fn simulated_values(&self) -> Option<Vec<Fe>> {
        self.shared.borrow().values.clone()
    }

    /// Answers drawn from the lazily sampled commitment.
    pub fn commitment_queries(&self) -> usize {
        self.zs.answered().len()
    }

    fn opening_point(&self, i: usize) -> Option<Vec<Fe>> {
        let st = self.shared.borrow();
        st.point.as_ref().map(|c| st.arith.split(c).1[i].to_vec())
    }

    fn fail(&mut self, e: impl std::fmt::Display) -> Abort {
        self.failure.get_or_insert_with(|| e.to_string());
        self.stage = SimStage::Finished;
        Abort
    }

    fn answer_part(&mut self, j: usize, p: &[Fe]) -> Result<Fe, OracleError> {
        match j {
            0 => self.zs.answer(&sampler::point(p), &mut self.coins).map_err(|e| OracleError::Simulator(e.to_string())),
            1 => self.strong.answer(&Query::Point(p.to_vec())),
            _ => {
                let i = j - 2;
                let c = self.opening_point(i);
                let mut slice = SliceOracle { zs: &mut self.zs, coins: &mut self.coins, c: c.as_deref(), g: &self.setup.arith.h };
                self.weak[i].answer_mask(&Query::Point(p.to_vec()), &mut slice)
            }
        }
    }
}

impl Prover for NexpSimulator {
    fn oracle(&mut self) -> &mut dyn Oracle {
        self
    }

    fn receive(&mut self, m: &Msg) -> Result<(), Abort> {
        match std::mem::replace(&mut self.stage, SimStage::Finished) {
            SimStage::AwaitXy => {
                let n = self.setup.arith.xy_len();
                if m.kind != XY || m.body.len() != 2 * n {
                    return Err(Abort);
                }
                self.shared.borrow_mut().xy = Some((m.body[..n].to_vec(), m.body[n..].to_vec()));
                self.stage = SimStage::Strong { received: 0 };
                Ok(())
            }
            SimStage::Strong { received } => {
                self.strong.receive(m)?;
                self.stage = if received + 1 == self.setup.strong_receives() {
                    SimStage::SendValues
                } else {
                    SimStage::Strong { received: received + 1 }
                };
                Ok(())
            }
            SimStage::Opening { i, received } if received < 1 + self.setup.k => {
                let c = self.opening_point(i);
                let mut slice = SliceOracle { zs: &mut self.zs, coins: &mut self.coins, c: c.as_deref(), g: &self.setup.arith.h };
                let res = self.weak[i].receive(m, &mut slice);
                self.stage = SimStage::Opening { i, received: received + 1 };
                res
            }
            _ => Err(Abort),
        }
    }

    fn send(&mut self) -> Result<Msg, Abort> {
        match std::mem::replace(&mut self.stage, SimStage::Finished) {
            SimStage::Strong { received } => {
                let out = self.strong.send();
                self.stage = SimStage::Strong { received };
                out
            }
            SimStage::SendValues => {
                let Some(h) = self.simulated_values() else {
                    return Err(self.fail("values requested before the summand query"));
                };
                for (w, &v) in self.weak.iter_mut().zip(&h) {
                    w.set_claimed(v);
                }
                self.stage = SimStage::Opening { i: usize::MAX, received: 0 };
                Ok(Msg::new(OPENED_VALUES, h))
            }
            SimStage::Opening { i, received } if i == usize::MAX || (received == 1 + self.setup.k && i < 2) => {
                let next = if i == usize::MAX { 0 } else { i + 1 };
                let out = self.weak[next].send();
                self.stage = SimStage::Opening { i: next, received: 0 };
                out
            }
            SimStage::Opening { i, received } => {
                let out = self.weak[i].send();
                self.stage = SimStage::Opening { i, received };
                out
            }
            other => {
                self.stage = other;
                Err(Abort)
            }
        }
    }
}

impl Oracle for NexpSimulator {
    fn num_vars(&self) -> usize {
        self.setup.bundle_arity()
    }

    fn answer(&mut self, q: &Query) -> Result<Fe, OracleError> {
        let n = self.setup.bundle_arity();
        let x = match q {
            Query::Point(x) if x.len() == n => x.clone(),
            Query::Point(x) => return Err(OracleError::Dimension { expected: n, got: x.len() }),
            Query::Prefix(_) => return Err(OracleError::PrefixUnsupported),
        };
        let f = self.setup.field().clone();
        let weights = selector_weights(&f, &self.setup.selectors, x[0]);
        let mut acc = f.zero();
        for (j, wj) in weights.into_iter().enumerate() {
            if wj != f.zero() {
                let arity = self.setup.part_arity(j);
                let v = self.answer_part(j, &x[1..1 + arity])?;
                acc = f.add(acc, f.mul(wj, v));
            }
        }
        Ok(acc)
    }
}

/// A simulated view with the simulator's accounting.
#[derive(Clone, Debug)]
pub struct NexpSimRun {
    pub run: Run,
    pub summand_queries: usize,
    pub commitment_queries: usize,
    pub values: Option<Vec<Fe>>,
}

/// Simulates `verifier`'s view. The verifier may make at most `b` distinct oracle queries.
pub fn nexp_simulate(setup: &NexpSetup, verifier: &mut dyn Verifier, coins: Box<dyn Coins>) -> Result<NexpSimRun, NexpError> {
    let mut sim = NexpSimulator::new(setup, coins)?;
    let run = ipcp::run(&mut sim, verifier, Some(setup.params.b))?;
    if let Some(e) = sim.failure() {
        return Err(NexpError::Simulator(e.to_string()));
    }
    let summand_queries = sim.summand_queries();
    if summand_queries > 1 {
        return Err(NexpError::Simulator(format!("summand queried {summand_queries} times")));
    }
    let values = sim.simulated_values();
    let used = sim.commitment_queries() + values.as_ref().map_or(0, |v| v.len());
    let hiding = (setup.h().len() as u128).saturating_pow(setup.k as u32);
    if used as u128 >= hiding {
        return Err(NexpError::Simulator(format!("{used} commitment answers reach the hiding bound {hiding}")));
    }
    Ok(NexpSimRun { run, summand_queries, commitment_queries: sim.commitment_queries(), values })
}

/// Committed randomizer's recovered polynomial; exposed for hiding checks.
pub fn recovered_extension(setup: &NexpSetup, z: &MultiPoly) -> MultiPoly {
    committed_mask(z, setup.arith.m2, setup.h())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn tiny() -> NexpSetup {
        let f = Field::gf2(4).unwrap();
        let h = f.subfield_of_degree(1).unwrap();
        // z -> A(b1)
        let inst = O3SatInstance::new(1, 1, Formula::parse("not and var_0 not var_4").unwrap()).unwrap();
        let params = NexpParams { b: 8, slack: 2, lambda0: 3, k0: 2 };
        NexpSetup::new(&inst, &f, &h, &params).unwrap()
    }

    fn desk(formula: &str) -> NexpSetup {
        let f = Field::gf2(8).unwrap();
        let h = f.subfield_of_degree(2).unwrap();
        let inst = O3SatInstance::new(2, 2, Formula::parse(formula).unwrap()).unwrap();
        let params = NexpParams { b: 4, slack: 100, lambda0: 2, k0: 2 };
        NexpSetup::new(&inst, &f, &h, &params).unwrap()
    }

    // A(b1) equals the first bit of b1
    const DESK_SAT: &str = "and not and var_8 not var_2 not and var_2 not var_8";
    // A(b1) != A(b2) everywhere, violated whenever b1 = b2
    const DESK_UNSAT: &str = "and not and var_8 var_9 not and not var_8 not var_9";

    #[test]
    fn formula_round_trip_and_gate() {
        let f = Field::gf2(4).unwrap();
        let g = Formula::parse("and var_0 var_1").unwrap();
        assert_eq!(Formula::parse(&g.to_text()).unwrap(), g);
        for a in [false, true] {
            for b in [false, true] {
                let bits = [a, b];
                let fe = bits.map(|t| if t { f.one() } else { f.zero() });
                let want = if a && b { f.one() } else { f.zero() };
                assert_eq!(g.eval(&bits), a && b);
                assert_eq!(g.eval_arith(&f, &fe), want);
            }
        }
        assert_eq!(g.degrees(3), vec![1, 1, 0]);
        assert!(Formula::parse("and var_0").is_err());
        assert!(Formula::parse("var_0 var_1").is_err());
    }

    #[test]
    fn index_bits_on_h_points() {
        let s = desk(DESK_SAT);
        let h = s.h().elems().to_vec();
        for (j, &e) in h.iter().enumerate() {
            let want: Vec<Fe> = bits_of(j, 2).map(|b| if b { s.field().one() } else { s.field().zero() }).collect();
            assert_eq!(s.arith.index_bits(&[e]), want);
        }
    }

    #[test]
    fn witness_search() {
        let sat = desk(DESK_SAT);
        let (w, v) = sat.arith.inst.best_witness().unwrap();
        assert_eq!(v, 0);
        assert_eq!(w.to_text(), "0011");
        let unsat = desk(DESK_UNSAT);
        let (_, v) = unsat.arith.inst.best_witness().unwrap();
        // balanced A: 4 choices of z, 4 of b3, 8 pairs (b1, b2) with A(b1) = A(b2)
        assert_eq!(v, 4 * 4 * 8);
    }

    #[test]
    fn summed_summand_equals_monomial_form() {
        let s = desk(DESK_SAT);
        let f = s.field().clone();
        let mut coins = RngStream::from_seed(12);
        let table = s.arith.witness_table(&O3SatWitness::parse("0110").unwrap());
        let ext = s.arith.random_extension(&table, &mut coins).unwrap();
        let n = s.arith.xy_len();
        let x = f.random_vec(n, &mut coins);
        let y = f.random_vec(n, &mut coins);
        let summand = Summand { arith: s.arith.clone(), x: x.clone(), y: y.clone(), ext };
        let mut total = f.zero();
        for v in grid_points(s.h(), s.arith.num_vars()) {
            total = f.add(total, summand.eval_at(&v));
        }
        assert_eq!(total, s.arith.constraint_poly_at(&table, &x, &y));
        assert_ne!(total, f.zero());
        let good = s.arith.witness_table(&O3SatWitness::parse("0011").unwrap());
        assert_eq!(s.arith.constraint_poly_at(&good, &x, &y), f.zero());
    }

    #[test]
    fn summand_within_declared_degrees() {
        let s = tiny();
        let f = s.field().clone();
        let mut coins = RngStream::from_seed(3);
        let table = s.arith.witness_table(&O3SatWitness::parse("11").unwrap());
        let ext = s.arith.random_extension(&table, &mut coins).unwrap();
        let n = s.arith.xy_len();
        let summand = Summand { arith: s.arith.clone(), x: f.random_vec(n, &mut coins), y: f.random_vec(n, &mut coins), ext };
        let degs = summand.deg_bounds();
        assert_eq!(degs, vec![2, 9, 1, 1]);
        // interpolating on the degree grid reproduces values elsewhere
        let grid = Subset::first(&f, 10);
        let pts = grid_points(&grid, 4);
        let mut table = Vec::new();
        for p in &pts {
            table.push(summand.eval_at(p));
        }
        let axes = vec![grid.elems().to_vec(); 4];
        let p = MultiPoly::interpolate_grid(&f, &axes, &table).unwrap();
        assert!(p.within_bounds(&degs));
    }

    #[test]
    fn extension_agrees_with_witness_on_h() {
        let s = desk(DESK_SAT);
        let mut coins = RngStream::from_seed(5);
        let table = s.arith.witness_table(&O3SatWitness::parse("0011").unwrap());
        let ext = s.arith.random_extension(&table, &mut coins).unwrap();
        for (p, &t) in grid_points(s.h(), 1).iter().zip(&table) {
            assert_eq!(ext.eval(p), t);
        }
        assert!(ext.within_bounds(&[6]));
    }

    #[test]
    fn tiny_completeness() {
        let s = tiny();
        let table = s.arith.witness_table(&O3SatWitness::parse("11").unwrap());
        for seed in 0..5 {
            let mut pc = RngStream::from_seed(100 + seed);
            let run = nexp_run(&s, &table, StrongMode::Honest, &mut pc, Box::new(RngStream::from_seed(seed))).unwrap();
            assert_eq!(run.outcome, Outcome::Accept, "seed {seed}");
            assert_eq!(run.events.iter().filter(|e| matches!(e, crate::ipcp::Event::Query { .. })).count(), VERIFIER_QUERIES);
        }
    }

    #[test]
    fn desk_completeness() {
        let s = desk(DESK_SAT);
        let table = s.arith.witness_table(&O3SatWitness::parse("0011").unwrap());
        let mut pc = RngStream::from_seed(1);
        let run = nexp_run(&s, &table, StrongMode::Honest, &mut pc, Box::new(RngStream::from_seed(2))).unwrap();
        assert_eq!(run.outcome, Outcome::Accept);
    }

    #[test]
    fn unsatisfiable_instance_rarely_accepted() {
        let s = desk(DESK_UNSAT);
        let (w, _) = s.arith.inst.best_witness().unwrap();
        let table = s.arith.witness_table(&w);
        let n = 100;
        let bound = s.structured_soundness_bound();
        assert!(bound < 0.5, "bound {bound}");
        for mode in [StrongMode::Honest, StrongMode::CheatSum, StrongMode::CheatSumAndOpening] {
            let mut accepted = 0;
            for seed in 0..n {
                let mut pc = RngStream::from_seed(1000 + seed);
                let run = nexp_run(&s, &table, mode, &mut pc, Box::new(RngStream::from_seed(seed))).unwrap();
                accepted += usize::from(run.outcome == Outcome::Accept);
            }
            let mean = bound * n as f64;
            let limit = mean + 5.0 * (mean * (1.0 - bound)).sqrt();
            assert!((accepted as f64) <= limit, "{mode:?}: {accepted} accepted, limit {limit}");
        }
    }

    #[test]
    fn non_boolean_table_is_caught() {
        // every constraint of the formula holds, only booleanity fails
        let f = Field::gf2(8).unwrap();
        let h = f.subfield_of_degree(2).unwrap();
        let inst = O3SatInstance::new(2, 2, Formula::Const(true)).unwrap();
        let params = NexpParams { b: 4, slack: 100, lambda0: 2, k0: 2 };
        let s = NexpSetup::new(&inst, &f, &h, &params).unwrap();
        let mut table = vec![f.zero(); 4];
        table[2] = h.elems()[2];
        assert!(!s.arith.constraints_hold(&table));
        let mut rejected = 0;
        for seed in 0..4 {
            let mut pc = RngStream::from_seed(200 + seed);
            let run = nexp_run(&s, &table, StrongMode::Honest, &mut pc, Box::new(RngStream::from_seed(seed))).unwrap();
            rejected += usize::from(run.outcome != Outcome::Accept);
        }
        assert_eq!(rejected, 4);
    }

    #[test]
    fn simulator_serves_honest_verifier() {
        let s = tiny();
        for seed in 0..5 {
            let mut v = NexpVerifier::new(&s, Box::new(RngStream::from_seed(seed)));
            let sim = nexp_simulate(&s, &mut v, Box::new(RngStream::from_seed(50 + seed))).unwrap();
            assert_eq!(sim.run.outcome, Outcome::Accept, "seed {seed}");
            assert_eq!(sim.summand_queries, 1);
        }
    }

    #[test]
    fn collision_gives_equal_values() {
        let s = tiny();
        let f = s.field().clone();
        let shared = Rc::new(RefCell::new(SimShared {
            arith: s.arith.clone(),
            coins: SharedCoins::new(Box::new(RngStream::from_seed(9))),
            xy: Some((vec![f.one(); 4], vec![f.one(); 4])),
            values: None,
            point: None,
        }));
        let mut o = SimSummand(shared.clone());
        let a = f.from_int(7);
        o.answer(&Query::Point(vec![f.one(), a, a, f.from_int(3)])).unwrap();
        let h = shared.borrow().values.clone().unwrap();
        assert_eq!(h[0], h[1]);
        assert!(o.answer(&Query::Point(vec![f.one(); 4])).is_err());
    }

    #[test]
    fn bundle_addresses_parts() {
        let s = tiny();
        let table = s.arith.witness_table(&O3SatWitness::parse("11").unwrap());
        let mut coins = RngStream::from_seed(4);
        let mut p = NexpProver::new(&s, &table, StrongMode::Honest, &mut coins).unwrap();
        let parts = p.parts();
        let f = s.field().clone();
        for (j, part) in parts.iter().enumerate() {
            let pt = f.random_vec(s.part_arity(j), &mut coins);
            assert_eq!(p.oracle().answer(&s.part_query(j, &pt)).unwrap(), part.eval(&pt));
        }
        // dense bundle of the padded parts agrees off the selectors too
        let arity = s.bundle_arity() - 1;
        let padded: Vec<MultiPoly> = parts
            .iter()
            .map(|q| {
                let n = q.num_vars();
                q.insert_vars(n, arity - n)
            })
            .collect();
        let dense = crate::poly::bundle(&padded, &s.selectors).unwrap();
        let w = f.random_vec(s.bundle_arity(), &mut coins);
        assert_eq!(p.oracle().answer(&Query::Point(w.clone())).unwrap(), dense.eval(&w));
    }
}
