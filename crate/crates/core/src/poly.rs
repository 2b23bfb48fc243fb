//! Sparse multivariate polynomials over exact rationals, generic in the variable type.
//!
//! Jet-coordinate polynomials and x-coordinate polynomials share this representation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_traits::{One, Zero};

use crate::rational::{fmt_rational, Q};

pub trait Var: Clone + Ord + Debug {}
impl<T: Clone + Ord + Debug> Var for T {}

/// A product of variables with positive exponents, stored sorted by variable.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial<V> {
    factors: Vec<(V, u32)>,
}

impl<V: Var> Monomial<V> {
    pub fn one() -> Self {
        Monomial { factors: Vec::new() }
    }

    pub fn var(v: V) -> Self {
        Monomial { factors: vec![(v, 1)] }
    }

    /// Builds a monomial from arbitrary (variable, exponent) pairs.
    pub fn from_factors(it: impl IntoIterator<Item = (V, u32)>) -> Self {
        let mut m = Monomial::one();
        for (v, e) in it {
            m = m.mul(&Monomial { factors: if e == 0 { vec![] } else { vec![(v, e)] } });
        }
        m
    }

    pub fn factors(&self) -> &[(V, u32)] {
        &self.factors
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|(_, e)| e).sum()
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn exponent(&self, v: &V) -> u32 {
        match self.factors.binary_search_by(|(w, _)| w.cmp(v)) {
            Ok(i) => self.factors[i].1,
            Err(_) => 0,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = (&self.factors, &other.factors);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0.clone(), a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial { factors: out }
    }

    /// Lowers the exponent of the factor at `idx` by one.
    fn lower(&self, idx: usize) -> Self {
        let mut f = self.factors.clone();
        if f[idx].1 == 1 {
            f.remove(idx);
        } else {
            f[idx].1 -= 1;
        }
        Monomial { factors: f }
    }
}

impl<V: Var> PartialOrd for Monomial<V> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Graded lexicographic.
impl<V: Var> Ord for Monomial<V> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.factors.cmp(&other.factors))
    }
}

/// Finite map from monomials to nonzero coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Polynomial<V: Var> {
    terms: BTreeMap<Monomial<V>, Q>,
}

impl<V: Var> Default for Polynomial<V> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<V: Var> Polynomial<V> {
    pub fn zero() -> Self {
        Polynomial { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn var(v: V) -> Self {
        Self::term(Monomial::var(v), Q::one())
    }

    pub fn term(m: Monomial<V>, c: Q) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial<V>, &Q)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial<V>) -> Q {
        self.terms.get(m).cloned().unwrap_or_else(Q::zero)
    }

    pub fn constant_term(&self) -> Q {
        self.coefficient(&Monomial::one())
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, m: Monomial<V>, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Polynomial { terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect() }
    }

    pub fn mul_monomial(&self, m: &Monomial<V>, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Polynomial { terms: self.terms.iter().map(|(n, a)| (n.mul(m), a * c)).collect() }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn variables(&self) -> BTreeSet<V> {
        self.terms.keys().flat_map(|m| m.factors.iter().map(|(v, _)| v.clone())).collect()
    }

    /// Applies the derivation determined by its values on variables (Leibniz rule).
    /// `d(v) = None` means the derivative of `v` is zero.
    pub fn derivation<F>(&self, d: F) -> Self
    where
        F: Fn(&V) -> Option<Polynomial<V>>,
    {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            for (idx, (v, e)) in m.factors.iter().enumerate() {
                if let Some(dv) = d(v) {
                    let rest = m.lower(idx);
                    let coeff = c * Q::from_integer((*e).into());
                    for (n, a) in dv.terms {
                        out.add_term(n.mul(&rest), &coeff * a);
                    }
                }
            }
        }
        out
    }

    /// Derivation sending each variable to a single variable (or zero).
    pub fn derivation_var<F>(&self, d: F) -> Self
    where
        F: Fn(&V) -> Option<V>,
    {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            for (idx, (v, e)) in m.factors.iter().enumerate() {
                if let Some(w) = d(v) {
                    let n = m.lower(idx).mul(&Monomial::var(w));
                    out.add_term(n, c * Q::from_integer((*e).into()));
                }
            }
        }
        out
    }

    /// Partial derivative with respect to one variable.
    pub fn partial(&self, v: &V) -> Self {
        self.derivation(|w| if w == v { Some(Self::one()) } else { None })
    }

    /// Exact evaluation. Returns the first variable lacking a value as the error.
    pub fn evaluate<F>(&self, val: F) -> Result<Q, V>
    where
        F: Fn(&V) -> Option<Q>,
    {
        let mut acc = Q::zero();
        'terms: for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in &m.factors {
                let x = val(v).ok_or_else(|| v.clone())?;
                if x.is_zero() {
                    // remaining factors still need values for completeness checking
                    for (w, _) in &m.factors {
                        val(w).ok_or_else(|| w.clone())?;
                    }
                    continue 'terms;
                }
                for _ in 0..*e {
                    t *= &x;
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Replaces assigned variables by polynomials; unassigned variables are untouched.
    pub fn substitute<F>(&self, sub: F) -> Self
    where
        F: Fn(&V) -> Option<Polynomial<V>>,
    {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut acc = Polynomial::constant(c.clone());
            let mut kept = Monomial::one();
            for (v, e) in &m.factors {
                match sub(v) {
                    Some(p) => {
                        acc = &acc * &p.pow(*e);
                        if acc.is_zero() {
                            break;
                        }
                    }
                    None => kept = kept.mul(&Monomial { factors: vec![(v.clone(), *e)] }),
                }
            }
            for (n, a) in acc.terms {
                out.add_term(n.mul(&kept), a);
            }
        }
        out
    }

    /// Renames variables through an injective-or-not map, collecting terms.
    pub fn map_vars<W: Var, F: Fn(&V) -> W>(&self, f: F) -> Polynomial<W> {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            out.add_term(Monomial::from_factors(m.factors.iter().map(|(v, e)| (f(v), *e))), c.clone());
        }
        out
    }

    /// Human-readable form using `name` for variables, e.g. `1/2*x1^2 - x2`.
    pub fn fmt_with<F: Fn(&V) -> String>(&self, name: F) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c < &Q::zero();
            let a = if neg { -c.clone() } else { c.clone() };
            if i == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let mut parts = Vec::new();
            if !a.is_one() || m.is_one() {
                parts.push(fmt_rational(&a));
            }
            for (v, e) in &m.factors {
                if *e == 1 {
                    parts.push(name(v));
                } else {
                    parts.push(format!("{}^{}", name(v), e));
                }
            }
            s.push_str(&parts.join("*"));
        }
        s
    }
}

impl<V: Var> AddAssign<&Polynomial<V>> for Polynomial<V> {
    fn add_assign(&mut self, rhs: &Polynomial<V>) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl<V: Var> SubAssign<&Polynomial<V>> for Polynomial<V> {
    fn sub_assign(&mut self, rhs: &Polynomial<V>) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c.clone());
        }
    }
}

impl<V: Var> Add for &Polynomial<V> {
    type Output = Polynomial<V>;
    fn add(self, rhs: &Polynomial<V>) -> Polynomial<V> {
        let (mut big, small) = if self.len() >= rhs.len() { (self.clone(), rhs) } else { (rhs.clone(), self) };
        big += small;
        big
    }
}

impl<V: Var> Sub for &Polynomial<V> {
    type Output = Polynomial<V>;
    fn sub(self, rhs: &Polynomial<V>) -> Polynomial<V> {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl<V: Var> Neg for &Polynomial<V> {
    type Output = Polynomial<V>;
    fn neg(self) -> Polynomial<V> {
        Polynomial { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }
}

impl<V: Var> Mul for &Polynomial<V> {
    type Output = Polynomial<V>;
    fn mul(self, rhs: &Polynomial<V>) -> Polynomial<V> {
        let mut out = Polynomial::zero();
        for (m, a) in &self.terms {
            for (n, b) in &rhs.terms {
                out.add_term(m.mul(n), a * b);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    type P = Polynomial<usize>;

    fn x(i: usize) -> P {
        P::var(i)
    }

    #[test]
    fn ring_ops() {
        let a = &x(0) + &x(1);
        let sq = &a * &a;
        let expect = &(&(&x(0) * &x(0)) + &(&x(1) * &x(1))) + &(&x(0) * &x(1)).scale(&qi(2));
        assert_eq!(sq, expect);
        assert!((&sq - &sq).is_zero());
        assert_eq!(sq.total_degree(), 2);
        assert_eq!(a.pow(3).len(), 4);
    }

    #[test]
    fn partial_and_leibniz() {
        // d/dx0 of x0^3 x1 = 3 x0^2 x1
        let p = &x(0).pow(3) * &x(1);
        let d = p.partial(&0);
        assert_eq!(d, (&x(0).pow(2) * &x(1)).scale(&qi(3)));
        assert!(p.partial(&2).is_zero());
    }

    #[test]
    fn evaluate_and_substitute() {
        let p = &(&x(0) * &x(1)).scale(&q(1, 2)) - &x(2);
        let v = p.evaluate(|i| Some(qi(*i as i64 + 1))).unwrap();
        assert_eq!(v, q(1, 1) - qi(3));
        assert_eq!(p.evaluate(|i| if *i < 2 { Some(qi(1)) } else { None }), Err(2));
        let s = p.substitute(|i| if *i == 2 { Some(P::constant(qi(7))) } else { None });
        assert_eq!(s, &(&x(0) * &x(1)).scale(&q(1, 2)) - &P::constant(qi(7)));
        assert_eq!(p.substitute(|_| None), p);
    }

    #[test]
    fn formatting() {
        let p = &(&x(0).pow(2)).scale(&q(1, 2)) - &x(1);
        assert_eq!(p.fmt_with(|i| format!("x{}", i + 1)), "1/2*x1^2 - x2");
        assert_eq!(P::zero().fmt_with(|i| i.to_string()), "0");
    }
}
