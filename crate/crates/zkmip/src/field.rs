//! Finite fields: prime fields F_p (p < 2^32) and binary extension fields GF(2^e) (e <= 32).
//!
//! Elements are plain canonical integers ([`Fe`]); every operation goes through a [`Field`]
//! handle. Binary fields use the numerically smallest irreducible modulus of their degree
//! unless one is given explicitly, so serialized elements are stable across runs.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::Coins;

/// Canonical representation of a field element, an integer in `[0, order)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fe(pub u32);

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    Composite(u64),
    #[error("prime {0} is outside the supported range [2, 2^32)")]
    PrimeOutOfRange(u64),
    #[error("extension degree {0} is outside the supported range [1, 32]")]
    DegreeOutOfRange(u32),
    #[error("modulus {modulus:#x} is not an irreducible polynomial of degree {e}")]
    Reducible { e: u32, modulus: u64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("no subgroup of order {n} ({kind})")]
    NoSubgroup { n: u64, kind: &'static str },
    #[error("field of order {0} is too large to enumerate")]
    TooLargeToEnumerate(u64),
    #[error("element {0} is not a canonical representative")]
    NotCanonical(u64),
    #[error("subset: {0}")]
    BadSubset(String),
    #[error("operation requires {0}")]
    Unsupported(&'static str),
    #[error("bad field descriptor: {0}")]
    BadDescriptor(String),
}

/// Largest field order for which element enumeration is allowed.
pub const ENUMERATION_CAP: u64 = 1 << 20;
/// Binary fields up to this degree get log/antilog tables.
const TABLE_DEGREE_CAP: u32 = 20;

/// Serialized field description: `{"kind":"prime","p":17}` or `{"kind":"gf2","e":4,"mod":19}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldDescriptor {
    Prime { p: u64 },
    Gf2 {
        e: u32,
        #[serde(rename = "mod")]
        modulus: u64,
    },
}

#[derive(Debug)]
enum Kind {
    Prime { p: u64 },
    Gf2 { e: u32, modulus: u64 },
}

#[derive(Debug)]
struct Inner {
    kind: Kind,
    order: u64,
    // exp table is doubled so exp[log a + log b] needs no reduction
    log: Vec<u32>,
    exp: Vec<u32>,
}

/// A finite field handle. Cheap to clone; immutable.
#[derive(Clone)]
pub struct Field(Arc<Inner>);

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.descriptor() == other.descriptor()
    }
}
impl Eq for Field {}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut i = 3u64;
    while i * i <= n {
        if n % i == 0 {
            return false;
        }
        i += 2;
    }
    true
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

// Polynomials over GF(2) packed into integers, bit i = coefficient of x^i.
fn clmul(a: u64, b: u64) -> u128 {
    let mut acc = 0u128;
    let mut b = b;
    let mut shift = 0;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= (a as u128) << shift;
        }
        b >>= 1;
        shift += 1;
    }
    acc
}

fn degree(p: u128) -> i32 {
    127 - p.leading_zeros() as i32
}

fn poly_rem(mut a: u128, m: u128) -> u128 {
    let dm = degree(m);
    while a != 0 && degree(a) >= dm {
        a ^= m << (degree(a) - dm);
    }
    a
}

fn poly_mulmod(a: u64, b: u64, m: u64) -> u64 {
    poly_rem(clmul(a, b), m as u128) as u64
}

fn poly_gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = poly_rem(a, b);
        a = b;
        b = r;
    }
    a
}

/// Rabin-style test: f of degree e is irreducible iff gcd(x^(2^i) - x, f) = 1 for all i <= e/2.
fn is_irreducible(modulus: u64, e: u32) -> bool {
    if degree(modulus as u128) != e as i32 {
        return false;
    }
    if e == 1 {
        return true;
    }
    if modulus & 1 == 0 {
        return false;
    }
    let mut x_pow = 2u64; // x
    for _ in 0..e / 2 {
        x_pow = poly_mulmod(x_pow, x_pow, modulus);
        let g = poly_gcd(modulus as u128, (x_pow ^ 2) as u128);
        if g != 1 {
            return false;
        }
    }
    true
}

/// Numerically smallest irreducible polynomial of degree `e` over GF(2).
pub fn least_irreducible(e: u32) -> u64 {
    let start = 1u64 << e;
    (start..start << 1)
        .find(|&m| is_irreducible(m, e))
        .expect("irreducible polynomials exist in every degree")
}

impl Field {
    /// The prime field F_p.
    pub fn prime(p: u64) -> Result<Field, FieldError> {
        if !(2..(1u64 << 32)).contains(&p) {
            return Err(FieldError::PrimeOutOfRange(p));
        }
        if !is_prime(p) {
            return Err(FieldError::Composite(p));
        }
        Ok(Field(Arc::new(Inner { kind: Kind::Prime { p }, order: p, log: vec![], exp: vec![] })))
    }

    /// GF(2^e) with the smallest irreducible modulus of degree `e`.
    pub fn gf2(e: u32) -> Result<Field, FieldError> {
        if !(1..=32).contains(&e) {
            return Err(FieldError::DegreeOutOfRange(e));
        }
        Field::gf2_with_modulus(e, least_irreducible(e))
    }

    /// GF(2^e) with an explicit modulus given as a bit-encoded polynomial.
    pub fn gf2_with_modulus(e: u32, modulus: u64) -> Result<Field, FieldError> {
        if !(1..=32).contains(&e) {
            return Err(FieldError::DegreeOutOfRange(e));
        }
        if !is_irreducible(modulus, e) {
            return Err(FieldError::Reducible { e, modulus });
        }
        let order = 1u64 << e;
        let mut inner = Inner { kind: Kind::Gf2 { e, modulus }, order, log: vec![], exp: vec![] };
        if e <= TABLE_DEGREE_CAP {
            let g = Field::find_generator_slow(e, modulus);
            let n = (order - 1) as usize;
            let mut exp = vec![0u32; 2 * n];
            let mut log = vec![0u32; order as usize];
            let mut x = 1u64;
            for i in 0..n {
                exp[i] = x as u32;
                exp[i + n] = x as u32;
                log[x as usize] = i as u32;
                x = poly_mulmod(x, g, modulus);
            }
            inner.exp = exp;
            inner.log = log;
        }
        Ok(Field(Arc::new(inner)))
    }

    fn find_generator_slow(e: u32, modulus: u64) -> u64 {
        let n = (1u64 << e) - 1;
        if n == 1 {
            return 1;
        }
        let factors = prime_factors(n);
        let pow = |mut b: u64, mut k: u64| {
            let mut acc = 1u64;
            while k > 0 {
                if k & 1 == 1 {
                    acc = poly_mulmod(acc, b, modulus);
                }
                b = poly_mulmod(b, b, modulus);
                k >>= 1;
            }
            acc
        };
        (2..=n).find(|&g| factors.iter().all(|&q| pow(g, n / q) != 1)).expect("cyclic group")
    }

    /// Builds a field from its serialized descriptor.
    pub fn from_descriptor(d: &FieldDescriptor) -> Result<Field, FieldError> {
        match *d {
            FieldDescriptor::Prime { p } => Field::prime(p),
            FieldDescriptor::Gf2 { e, modulus } => Field::gf2_with_modulus(e, modulus),
        }
    }

    /// Parses either a JSON descriptor or the short forms `F17`, `p17`, `GF2^8`, `gf2:8`.
    pub fn parse(s: &str) -> Result<Field, FieldError> {
        let t = s.trim();
        if t.starts_with('{') {
            let d: FieldDescriptor =
                serde_json::from_str(t).map_err(|e| FieldError::BadDescriptor(e.to_string()))?;
            return Field::from_descriptor(&d);
        }
        let lower = t.to_ascii_lowercase();
        let bad = || FieldError::BadDescriptor(s.to_string());
        if let Some(rest) = lower.strip_prefix("gf2^").or_else(|| lower.strip_prefix("gf2:")) {
            return Field::gf2(rest.parse().map_err(|_| bad())?);
        }
        if let Some(rest) = lower.strip_prefix("gf(2^") {
            return Field::gf2(rest.trim_end_matches(')').parse().map_err(|_| bad())?);
        }
        let digits = lower.trim_start_matches(|c| c == 'f' || c == 'p' || c == '_');
        Field::prime(digits.parse().map_err(|_| bad())?)
    }

    pub fn descriptor(&self) -> FieldDescriptor {
        match self.0.kind {
            Kind::Prime { p } => FieldDescriptor::Prime { p },
            Kind::Gf2 { e, modulus } => FieldDescriptor::Gf2 { e, modulus },
        }
    }

    pub fn name(&self) -> String {
        match self.0.kind {
            Kind::Prime { p } => format!("F_{p}"),
            Kind::Gf2 { e, .. } => format!("GF(2^{e})"),
        }
    }

    pub fn order(&self) -> u64 {
        self.0.order
    }

    pub fn characteristic(&self) -> u64 {
        match self.0.kind {
            Kind::Prime { p } => p,
            Kind::Gf2 { .. } => 2,
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self.0.kind, Kind::Gf2 { .. })
    }

    /// Extension degree over the prime subfield.
    pub fn degree(&self) -> u32 {
        match self.0.kind {
            Kind::Prime { .. } => 1,
            Kind::Gf2 { e, .. } => e,
        }
    }

    #[inline]
    pub fn zero(&self) -> Fe {
        Fe(0)
    }

    #[inline]
    pub fn one(&self) -> Fe {
        Fe(1)
    }

    /// Element with canonical representative `v`.
    pub fn elem(&self, v: u64) -> Result<Fe, FieldError> {
        if v >= self.0.order {
            return Err(FieldError::NotCanonical(v));
        }
        Ok(Fe(v as u32))
    }

    /// The integer `n` mapped into the field (n times the unit).
    pub fn from_int(&self, n: i64) -> Fe {
        let c = self.characteristic() as i64;
        let r = n.rem_euclid(c) as u64;
        match self.0.kind {
            Kind::Prime { .. } => Fe(r as u32),
            Kind::Gf2 { .. } => Fe((r & 1) as u32),
        }
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        match self.0.kind {
            Kind::Prime { p } => {
                let s = a.0 as u64 + b.0 as u64;
                Fe(if s >= p { s - p } else { s } as u32)
            }
            Kind::Gf2 { .. } => Fe(a.0 ^ b.0),
        }
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        match self.0.kind {
            Kind::Prime { p } => Fe(if a.0 == 0 { 0 } else { (p - a.0 as u64) as u32 }),
            Kind::Gf2 { .. } => a,
        }
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        match self.0.kind {
            Kind::Prime { p } => Fe(((a.0 as u64 * b.0 as u64) % p) as u32),
            Kind::Gf2 { modulus, .. } => {
                if a.0 == 0 || b.0 == 0 {
                    return Fe(0);
                }
                let inner = &*self.0;
                if inner.log.is_empty() {
                    Fe(poly_mulmod(a.0 as u64, b.0 as u64, modulus) as u32)
                } else {
                    let i = inner.log[a.0 as usize] as usize + inner.log[b.0 as usize] as usize;
                    Fe(inner.exp[i])
                }
            }
        }
    }

    pub fn square(&self, a: Fe) -> Fe {
        self.mul(a, a)
    }

    pub fn pow(&self, a: Fe, mut k: u64) -> Fe {
        let mut base = a;
        let mut acc = self.one();
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            k >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; zero is a hard error.
    pub fn inv(&self, a: Fe) -> Result<Fe, FieldError> {
        if a.0 == 0 {
            return Err(FieldError::DivisionByZero);
        }
        let inner = &*self.0;
        if !inner.log.is_empty() {
            let n = inner.order - 1;
            let l = inner.log[a.0 as usize] as u64;
            return Ok(Fe(inner.exp[((n - l) % n) as usize]));
        }
        Ok(self.pow(a, self.0.order - 2))
    }

    pub fn div(&self, a: Fe, b: Fe) -> Result<Fe, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn sum<I: IntoIterator<Item = Fe>>(&self, it: I) -> Fe {
        it.into_iter().fold(self.zero(), |acc, x| self.add(acc, x))
    }

    /// Inner product of two equal-length slices.
    pub fn dot(&self, a: &[Fe], b: &[Fe]) -> Fe {
        debug_assert_eq!(a.len(), b.len());
        match self.0.kind {
            Kind::Prime { p } => {
                // accumulate in u128 to reduce once at the end
                let mut acc: u128 = 0;
                for (x, y) in a.iter().zip(b) {
                    acc += x.0 as u128 * y.0 as u128;
                }
                Fe((acc % p as u128) as u32)
            }
            Kind::Gf2 { .. } => {
                let mut acc = 0u32;
                for (x, y) in a.iter().zip(b) {
                    acc ^= self.mul(*x, *y).0;
                }
                Fe(acc)
            }
        }
    }

    /// `acc[i] += c * x[i]`.
    pub fn axpy(&self, acc: &mut [Fe], c: Fe, x: &[Fe]) {
        if c.0 == 0 {
            return;
        }
        for (a, v) in acc.iter_mut().zip(x) {
            *a = self.add(*a, self.mul(c, *v));
        }
    }

    /// `[1, x, x^2, ..., x^n]`.
    pub fn powers(&self, x: Fe, n: usize) -> Vec<Fe> {
        let mut out = Vec::with_capacity(n + 1);
        let mut cur = self.one();
        for _ in 0..=n {
            out.push(cur);
            cur = self.mul(cur, x);
        }
        out
    }

    /// Uniform element.
    pub fn random(&self, coins: &mut dyn Coins) -> Fe {
        Fe(coins.below(self.0.order) as u32)
    }

    /// Uniform nonzero element.
    pub fn random_nonzero(&self, coins: &mut dyn Coins) -> Fe {
        Fe(coins.below(self.0.order - 1) as u32 + 1)
    }

    pub fn random_vec(&self, n: usize, coins: &mut dyn Coins) -> Vec<Fe> {
        (0..n).map(|_| self.random(coins)).collect()
    }

    /// All elements in canonical order.
    pub fn elements(&self) -> Result<Vec<Fe>, FieldError> {
        if self.0.order > ENUMERATION_CAP {
            return Err(FieldError::TooLargeToEnumerate(self.0.order));
        }
        Ok((0..self.0.order as u32).map(Fe).collect())
    }

    /// The first `n` elements in canonical order.
    pub fn first_elements(&self, n: usize) -> Vec<Fe> {
        assert!(n as u64 <= self.0.order, "field has fewer than {n} elements");
        (0..n as u32).map(Fe).collect()
    }

    /// A generator of the multiplicative group (smallest canonical one).
    pub fn generator(&self) -> Fe {
        let n = self.0.order - 1;
        if n == 1 {
            return self.one();
        }
        let factors = prime_factors(n);
        (1..=n)
            .map(|g| Fe(g as u32))
            .find(|&g| factors.iter().all(|&q| self.pow(g, n / q) != self.one()))
            .expect("multiplicative group of a finite field is cyclic")
    }

    /// One proper-subfield-or-whole-field per divisor `d` of the extension degree, ascending.
    pub fn subfields(&self) -> Vec<Subset> {
        let e = self.degree();
        (1..=e)
            .filter(|d| e % d == 0)
            .map(|d| self.subfield_of_degree(d).expect("divisor degree"))
            .collect()
    }

    /// The unique subfield with `char^d` elements.
    pub fn subfield_of_degree(&self, d: u32) -> Result<Subset, FieldError> {
        let e = self.degree();
        if d == 0 || e % d != 0 {
            return Err(FieldError::NoSubgroup { n: d as u64, kind: "subfield degree must divide the extension degree" });
        }
        if d == e {
            if self.0.order > ENUMERATION_CAP {
                return Err(FieldError::TooLargeToEnumerate(self.0.order));
            }
            return Ok(Subset { kind: SubsetKind::Subfield, elems: self.elements()? });
        }
        let size = 1u64 << d;
        let mult = self.subgroup_of_order(size - 1, GroupKind::Multiplicative)?;
        let mut elems = vec![self.zero()];
        elems.extend(mult.elems);
        elems.sort();
        Ok(Subset { kind: SubsetKind::Subfield, elems })
    }

    /// The subgroup of exactly `n` elements of the given kind.
    pub fn subgroup_of_order(&self, n: u64, kind: GroupKind) -> Result<Subset, FieldError> {
        match kind {
            GroupKind::Multiplicative => {
                let q1 = self.0.order - 1;
                if n == 0 || q1 % n != 0 {
                    return Err(FieldError::NoSubgroup { n, kind: "multiplicative" });
                }
                if n > ENUMERATION_CAP {
                    return Err(FieldError::TooLargeToEnumerate(n));
                }
                let g = self.pow(self.generator(), q1 / n);
                let mut elems = Vec::with_capacity(n as usize);
                let mut x = self.one();
                for _ in 0..n {
                    elems.push(x);
                    x = self.mul(x, g);
                }
                elems.sort();
                Ok(Subset { kind: SubsetKind::MultiplicativeSubgroup, elems })
            }
            GroupKind::Additive => {
                if n > ENUMERATION_CAP {
                    return Err(FieldError::TooLargeToEnumerate(n));
                }
                match self.0.kind {
                    Kind::Prime { p } => {
                        if n == 1 {
                            Ok(Subset { kind: SubsetKind::AdditiveSubgroup, elems: vec![self.zero()] })
                        } else if n == p {
                            Ok(Subset { kind: SubsetKind::AdditiveSubgroup, elems: self.elements()? })
                        } else {
                            Err(FieldError::NoSubgroup { n, kind: "additive" })
                        }
                    }
                    Kind::Gf2 { e, .. } => {
                        if !n.is_power_of_two() || n > (1u64 << e) {
                            return Err(FieldError::NoSubgroup { n, kind: "additive" });
                        }
                        // span of 1, x, ..., x^(j-1): the integers below n
                        let elems = (0..n as u32).map(Fe).collect();
                        Ok(Subset { kind: SubsetKind::AdditiveSubgroup, elems })
                    }
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    Multiplicative,
    Additive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetKind {
    Subfield,
    MultiplicativeSubgroup,
    AdditiveSubgroup,
    ExplicitList,
}

/// A subset of a field with distinct elements in ascending canonical order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subset {
    pub kind: SubsetKind,
    elems: Vec<Fe>,
}

impl Subset {
    /// An explicit subset; elements are sorted, duplicates rejected.
    pub fn explicit(field: &Field, elems: &[Fe]) -> Result<Subset, FieldError> {
        let mut v = elems.to_vec();
        for x in &v {
            if x.0 as u64 >= field.order() {
                return Err(FieldError::NotCanonical(x.0 as u64));
            }
        }
        v.sort();
        if v.windows(2).any(|w| w[0] == w[1]) {
            return Err(FieldError::BadSubset("repeated element".into()));
        }
        Ok(Subset { kind: SubsetKind::ExplicitList, elems: v })
    }

    /// The first `n` canonical elements `{0, 1, ..., n-1}`.
    pub fn first(field: &Field, n: usize) -> Subset {
        Subset { kind: SubsetKind::ExplicitList, elems: field.first_elements(n) }
    }

    pub fn elems(&self) -> &[Fe] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn contains(&self, x: Fe) -> bool {
        self.elems.binary_search(&x).is_ok()
    }

    pub fn index_of(&self, x: Fe) -> Option<usize> {
        self.elems.binary_search(&x).ok()
    }

    /// Power sums `[sum h^0, sum h^1, ..., sum h^n]` over the subset.
    pub fn power_sums(&self, field: &Field, n: usize) -> Vec<Fe> {
        let mut out = vec![field.zero(); n + 1];
        for &h in &self.elems {
            let mut cur = field.one();
            for o in out.iter_mut() {
                *o = field.add(*o, cur);
                cur = field.mul(cur, h);
            }
        }
        out
    }

    /// Checks the closure property that the subset kind promises.
    pub fn check_closure(&self, field: &Field) -> bool {
        let e = &self.elems;
        match self.kind {
            SubsetKind::ExplicitList => true,
            SubsetKind::AdditiveSubgroup => {
                self.contains(field.zero())
                    && e.iter().all(|&a| e.iter().all(|&b| self.contains(field.add(a, b))))
            }
            SubsetKind::MultiplicativeSubgroup => {
                self.contains(field.one())
                    && !self.contains(field.zero())
                    && e.iter().all(|&a| e.iter().all(|&b| self.contains(field.mul(a, b))))
            }
            SubsetKind::Subfield => {
                self.contains(field.zero())
                    && self.contains(field.one())
                    && e.iter().all(|&a| {
                        e.iter().all(|&b| self.contains(field.add(a, b)) && self.contains(field.mul(a, b)))
                    })
            }
        }
    }
}

/// Set from which verifier challenges are drawn: all of F, or F minus a subset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Full,
    Excluding(Subset),
}

impl Domain {
    pub fn size(&self, field: &Field) -> u64 {
        match self {
            Domain::Full => field.order(),
            Domain::Excluding(h) => field.order() - h.len() as u64,
        }
    }

    pub fn contains(&self, x: Fe) -> bool {
        match self {
            Domain::Full => true,
            Domain::Excluding(h) => !h.contains(x),
        }
    }

    /// Uniform element, one draw of radix `size`.
    pub fn sample(&self, field: &Field, coins: &mut dyn Coins) -> Fe {
        let idx = coins.below(self.size(field));
        self.nth(idx)
    }

    /// The `idx`-th element of the domain in canonical order.
    pub fn nth(&self, idx: u64) -> Fe {
        match self {
            Domain::Full => Fe(idx as u32),
            Domain::Excluding(h) => {
                let mut v = idx;
                for x in h.elems() {
                    if (x.0 as u64) <= v {
                        v += 1;
                    } else {
                        break;
                    }
                }
                Fe(v as u32)
            }
        }
    }
}
