//! Differential polynomials in jet coordinates u^j_{i,I} and formal Lie brackets.
//!
//! Indices are 0-based internally. `bracket(&[b1, …, bl])` is
//! [F_{b1},[F_{b2},…[F_{b(l-1)},F_{bl}]…]], leftmost outermost.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::flags::Frame;
use crate::freelie::BracketExpr;
use crate::poly::{Monomial, Polynomial};
use crate::rational::Q;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JetError {
    #[error("DomainError: {0}")]
    Domain(String),
    #[error("OrderOverflow: {0}")]
    OrderOverflow(String),
    #[error("IncompleteJet: no value for {0}")]
    IncompleteJet(JetVar),
}

/// Ambient parameters: k fields on ℝⁿ, jets of order r−1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JetParams {
    pub k: usize,
    pub n: usize,
    pub r: usize,
}

impl JetParams {
    pub fn new(k: usize, n: usize, r: usize) -> Result<Self, JetError> {
        if k == 0 || n == 0 || r == 0 {
            return Err(JetError::Domain(format!("jet parameters must be positive, got k={k}, n={n}, r={r}")));
        }
        if n > u8::MAX as usize {
            return Err(JetError::Domain(format!("dimension {n} too large")));
        }
        Ok(JetParams { k, n, r })
    }

    pub fn max_jet_order(&self) -> usize {
        self.r - 1
    }
}

/// Ordered multi-index of field indices.
pub type MultiIndexOrd = Vec<usize>;

/// Multiset of direction indices, stored sorted.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiIndexUnord(SmallVec<[u8; 6]>);

impl MultiIndexUnord {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_dirs(dirs: &[usize]) -> Self {
        let mut v: SmallVec<[u8; 6]> = dirs.iter().map(|&d| d as u8).collect();
        v.sort_unstable();
        MultiIndexUnord(v)
    }

    /// m copies of t.
    pub fn pure(t: usize, m: usize) -> Self {
        MultiIndexUnord(std::iter::repeat(t as u8).take(m).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dirs(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&d| d as usize)
    }

    pub fn with(&self, t: usize) -> Self {
        let mut v = self.0.clone();
        let pos = v.partition_point(|&d| d <= t as u8);
        v.insert(pos, t as u8);
        MultiIndexUnord(v)
    }

    pub fn is_pure(&self, t: usize) -> bool {
        self.0.iter().all(|&d| d as usize == t)
    }
}

impl Ord for MultiIndexUnord {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndexUnord {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndexUnord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.dirs().map(|d| (d + 1).to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// The coordinate u^comp_{field,deriv}.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JetVar {
    pub field: usize,
    pub comp: usize,
    pub deriv: MultiIndexUnord,
}

impl JetVar {
    pub fn new(field: usize, comp: usize, deriv: MultiIndexUnord) -> Self {
        JetVar { field, comp, deriv }
    }

    /// 0-jet coordinate u^comp_field.
    pub fn base(field: usize, comp: usize) -> Self {
        JetVar { field, comp, deriv: MultiIndexUnord::empty() }
    }

    pub fn order(&self) -> usize {
        self.deriv.len()
    }
}

impl fmt::Display for JetVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u^{}_{{{},{:?}}}", self.comp + 1, self.field + 1, self.deriv)
    }
}

impl fmt::Debug for JetVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub type JetPolynomial = Polynomial<JetVar>;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DiffPoly {
    pub params: JetParams,
    pub poly: JetPolynomial,
}

impl DiffPoly {
    pub fn zero(params: JetParams) -> Self {
        DiffPoly { params, poly: Polynomial::zero() }
    }

    pub fn constant(params: JetParams, c: Q) -> Self {
        DiffPoly { params, poly: Polynomial::constant(c) }
    }

    pub fn var(params: JetParams, v: JetVar) -> Result<Self, JetError> {
        check_var(params, &v)?;
        Ok(DiffPoly { params, poly: Polynomial::var(v) })
    }

    pub fn from_poly(params: JetParams, poly: JetPolynomial) -> Result<Self, JetError> {
        for v in poly.variables() {
            check_var(params, &v)?;
        }
        Ok(DiffPoly { params, poly })
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    pub fn order(&self) -> usize {
        max_order(self)
    }

    pub fn variables(&self) -> BTreeSet<JetVar> {
        self.poly.variables()
    }

    pub fn add(&self, o: &DiffPoly) -> DiffPoly {
        DiffPoly { params: self.params, poly: &self.poly + &o.poly }
    }

    pub fn sub(&self, o: &DiffPoly) -> DiffPoly {
        DiffPoly { params: self.params, poly: &self.poly - &o.poly }
    }

    pub fn mul(&self, o: &DiffPoly) -> DiffPoly {
        DiffPoly { params: self.params, poly: &self.poly * &o.poly }
    }

    pub fn scale(&self, c: &Q) -> DiffPoly {
        DiffPoly { params: self.params, poly: self.poly.scale(c) }
    }
}

impl fmt::Display for DiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.poly.fmt_with(|v| v.to_string()))
    }
}

fn check_var(p: JetParams, v: &JetVar) -> Result<(), JetError> {
    if v.field >= p.k || v.comp >= p.n || v.deriv.dirs().any(|d| d >= p.n) {
        return Err(JetError::Domain(format!("{v} outside index range k={}, n={}", p.k, p.n)));
    }
    if v.order() > p.max_jet_order() {
        return Err(JetError::OrderOverflow(format!("{v} exceeds jet order {}", p.max_jet_order())));
    }
    Ok(())
}

/// Σ P_i ∂_i.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DiffVec {
    pub params: JetParams,
    pub comps: Vec<DiffPoly>,
}

impl DiffVec {
    pub fn zero(params: JetParams) -> Self {
        DiffVec { params, comps: vec![DiffPoly::zero(params); params.n] }
    }

    pub fn from_polys(params: JetParams, polys: Vec<JetPolynomial>) -> Self {
        assert_eq!(polys.len(), params.n);
        DiffVec { params, comps: polys.into_iter().map(|poly| DiffPoly { params, poly }).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(DiffPoly::is_zero)
    }

    pub fn add(&self, o: &DiffVec) -> DiffVec {
        DiffVec { params: self.params, comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn sub(&self, o: &DiffVec) -> DiffVec {
        DiffVec { params: self.params, comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a.sub(b)).collect() }
    }

    pub fn neg(&self) -> DiffVec {
        self.scale(&-Q::one())
    }

    pub fn scale(&self, c: &Q) -> DiffVec {
        DiffVec { params: self.params, comps: self.comps.iter().map(|a| a.scale(c)).collect() }
    }

    pub fn order(&self) -> usize {
        self.comps.iter().map(max_order).max().unwrap_or(0)
    }

    pub fn variables(&self) -> BTreeSet<JetVar> {
        self.comps.iter().flat_map(DiffPoly::variables).collect()
    }

    pub fn substitute(&self, assign: &BTreeMap<JetVar, JetPolynomial>) -> DiffVec {
        DiffVec { params: self.params, comps: self.comps.iter().map(|c| substitute(c, assign)).collect() }
    }

    /// Total number of stored terms.
    pub fn term_count(&self) -> usize {
        self.comps.iter().map(|c| c.poly.len()).sum()
    }
}

pub fn max_order(p: &DiffPoly) -> usize {
    p.poly.terms().flat_map(|(m, _)| m.factors().iter().map(|(v, _)| v.order())).max().unwrap_or(0)
}

/// Formal directional derivation D_t.
pub fn derive(p: &DiffPoly, t: usize) -> Result<DiffPoly, JetError> {
    let params = p.params;
    if t >= params.n {
        return Err(JetError::Domain(format!("direction {} outside 1..{}", t + 1, params.n)));
    }
    if !p.poly.is_zero() && p.poly.total_degree() > 0 && max_order(p) + 1 > params.max_jet_order() {
        return Err(JetError::OrderOverflow(format!(
            "D_{} of an order-{} polynomial exceeds jet order {}",
            t + 1,
            max_order(p),
            params.max_jet_order()
        )));
    }
    Ok(DiffPoly { params, poly: p.poly.derivation_var(|v| Some(JetVar::new(v.field, v.comp, v.deriv.with(t)))) })
}

/// Unchecked D_t used inside bracket construction, where budgets are checked up front.
fn derive_raw(p: &JetPolynomial, t: usize) -> JetPolynomial {
    p.derivation_var(|v| Some(JetVar::new(v.field, v.comp, v.deriv.with(t))))
}

/// [A, B]^i = Σ_j (A^j D_j B^i − B^j D_j A^i).
pub fn bracket_vec(a: &DiffVec, b: &DiffVec) -> Result<DiffVec, JetError> {
    let params = a.params;
    if a.params != b.params {
        return Err(JetError::Domain("bracket of DiffVecs with different parameters".into()));
    }
    let budget = params.max_jet_order();
    if (!a.is_zero() && a.order() + 1 > budget) || (!b.is_zero() && b.order() + 1 > budget) {
        return Err(JetError::OrderOverflow(format!("bracket needs jets beyond order {budget}")));
    }
    Ok(bracket_vec_raw(a, b))
}

fn bracket_vec_raw(a: &DiffVec, b: &DiffVec) -> DiffVec {
    let n = a.params.n;
    let da: Vec<Vec<JetPolynomial>> = (0..n).map(|j| a.comps.iter().map(|c| derive_raw(&c.poly, j)).collect()).collect();
    let db: Vec<Vec<JetPolynomial>> = (0..n).map(|j| b.comps.iter().map(|c| derive_raw(&c.poly, j)).collect()).collect();
    let comps = (0..n)
        .map(|i| {
            let mut acc = Polynomial::zero();
            for j in 0..n {
                if !a.comps[j].is_zero() && !db[j][i].is_zero() {
                    acc += &(&a.comps[j].poly * &db[j][i]);
                }
                if !b.comps[j].is_zero() && !da[j][i].is_zero() {
                    acc -= &(&b.comps[j].poly * &da[j][i]);
                }
            }
            acc
        })
        .collect();
    DiffVec::from_polys(a.params, comps)
}

/// Σ_i u^i_{a} ∂_i.
pub fn field_symbol(params: JetParams, a: usize) -> DiffVec {
    DiffVec::from_polys(params, (0..params.n).map(|i| Polynomial::var(JetVar::base(a, i))).collect())
}

/// [F_a, P] using that F_a is a 0-jet field.
fn bracket_with_field(params: JetParams, a: usize, p: &DiffVec) -> DiffVec {
    let n = params.n;
    let dp: Vec<Vec<JetPolynomial>> = (0..n).map(|j| p.comps.iter().map(|c| derive_raw(&c.poly, j)).collect()).collect();
    let comps = (0..n)
        .map(|i| {
            let mut acc = Polynomial::zero();
            for j in 0..n {
                acc += &dp[j][i].mul_monomial(&Monomial::var(JetVar::base(a, j)), &Q::one());
                let uij = Monomial::var(JetVar::new(a, i, MultiIndexUnord::from_dirs(&[j])));
                acc -= &p.comps[j].poly.mul_monomial(&uij, &Q::one());
            }
            acc
        })
        .collect();
    DiffVec::from_polys(params, comps)
}

fn check_index(idx: &[usize], params: JetParams) -> Result<(), JetError> {
    if idx.is_empty() {
        return Err(JetError::Domain("empty multi-index".into()));
    }
    if idx.len() > params.r {
        return Err(JetError::OrderOverflow(format!(
            "bracket of length {} needs jets of order {} but r = {}",
            idx.len(),
            idx.len() - 1,
            params.r
        )));
    }
    if let Some(&b) = idx.iter().find(|&&b| b >= params.k) {
        return Err(JetError::Domain(format!("field index {} outside 1..{}", b + 1, params.k)));
    }
    Ok(())
}

pub fn bracket(idx: &[usize], params: JetParams) -> Result<DiffVec, JetError> {
    check_index(idx, params)?;
    let mut acc = field_symbol(params, idx[idx.len() - 1]);
    for &a in idx[..idx.len() - 1].iter().rev() {
        acc = bracket_with_field(params, a, &acc);
    }
    Ok(acc)
}

/// All brackets of length ≤ max_len, sharing inner suffixes. Keys are multi-indices.
pub fn bracket_table(params: JetParams, max_len: usize) -> Result<BTreeMap<MultiIndexOrd, DiffVec>, JetError> {
    if max_len > params.r {
        return Err(JetError::OrderOverflow(format!("length {max_len} exceeds r = {}", params.r)));
    }
    let mut table: BTreeMap<MultiIndexOrd, DiffVec> = BTreeMap::new();
    for a in 0..params.k {
        table.insert(vec![a], field_symbol(params, a));
    }
    let mut prev: Vec<MultiIndexOrd> = (0..params.k).map(|a| vec![a]).collect();
    for _ in 2..=max_len {
        let jobs: Vec<(usize, &MultiIndexOrd)> = (0..params.k).flat_map(|a| prev.iter().map(move |s| (a, s))).collect();
        let new: Vec<(MultiIndexOrd, DiffVec)> = jobs
            .par_iter()
            .map(|(a, s)| {
                let mut key = vec![*a];
                key.extend_from_slice(s);
                (key, bracket_with_field(params, *a, &table[*s]))
            })
            .collect();
        prev = new.iter().map(|(k, _)| k.clone()).collect();
        table.extend(new);
    }
    Ok(table)
}

/// Formal bracket of a general tree expression.
pub fn bracket_tree(e: &BracketExpr, params: JetParams) -> Result<DiffVec, JetError> {
    if e.len() > params.r {
        return Err(JetError::OrderOverflow(format!("tree of length {} exceeds r = {}", e.len(), params.r)));
    }
    if e.max_generator() >= params.k {
        return Err(JetError::Domain(format!("generator outside 1..{}", params.k)));
    }
    fn go(e: &BracketExpr, params: JetParams) -> DiffVec {
        match e {
            BracketExpr::Leaf(g) => field_symbol(params, *g),
            BracketExpr::Node(a, b, _) => match &**a {
                BracketExpr::Leaf(g) => bracket_with_field(params, *g, &go(b, params)),
                _ => bracket_vec_raw(&go(a, params), &go(b, params)),
            },
        }
    }
    Ok(go(e, params))
}

/// Formal brackets of tree expressions, memoized on subtrees.
pub fn bracket_tree_cached(
    e: &BracketExpr,
    params: JetParams,
    memo: &mut BTreeMap<BracketExpr, DiffVec>,
) -> Result<DiffVec, JetError> {
    if let Some(v) = memo.get(e) {
        return Ok(v.clone());
    }
    if e.len() > params.r {
        return Err(JetError::OrderOverflow(format!("tree of length {} exceeds r = {}", e.len(), params.r)));
    }
    let v = match e {
        BracketExpr::Leaf(g) => {
            if *g >= params.k {
                return Err(JetError::Domain(format!("generator outside 1..{}", params.k)));
            }
            field_symbol(params, *g)
        }
        BracketExpr::Node(a, b, _) => {
            let vb = bracket_tree_cached(b, params, memo)?;
            match &**a {
                BracketExpr::Leaf(g) if *g < params.k => bracket_with_field(params, *g, &vb),
                _ => {
                    let va = bracket_tree_cached(a, params, memo)?;
                    bracket_vec_raw(&va, &vb)
                }
            }
        }
    };
    memo.insert(e.clone(), v.clone());
    Ok(v)
}

/// JetVars in `v` whose multi-index is exactly m copies of t.
pub fn pure_t_vars(v: &DiffVec, t: usize, m: usize) -> BTreeSet<JetVar> {
    v.variables().into_iter().filter(|x| x.order() == m && x.deriv.is_pure(t)).collect()
}

pub fn substitute(p: &DiffPoly, assign: &BTreeMap<JetVar, JetPolynomial>) -> DiffPoly {
    if assign.is_empty() {
        return p.clone();
    }
    DiffPoly { params: p.params, poly: p.poly.substitute(|v| assign.get(v).cloned()) }
}

/// Assignment u^t_{field} := value for the given 0-jet coordinates.
pub fn zero_jet_assignment(entries: &[(usize, usize, Q)]) -> BTreeMap<JetVar, JetPolynomial> {
    entries.iter().map(|(f, c, x)| (JetVar::base(*f, *c), Polynomial::constant(x.clone()))).collect()
}

/// u^t_1 := 1 and u^t_m := 0 for the other fields.
pub fn adapted_assignment(params: JetParams, t: usize) -> BTreeMap<JetVar, JetPolynomial> {
    let e: Vec<(usize, usize, Q)> = (0..params.k).map(|m| (m, t, if m == 0 { Q::one() } else { Q::zero() })).collect();
    zero_jet_assignment(&e)
}

/// The vector (u^1_{j,(t^m)}, …, u^n_{j,(t^m)}).
pub fn pure_derivative_symbol(params: JetParams, j: usize, t: usize, m: usize) -> DiffVec {
    DiffVec::from_polys(
        params,
        (0..params.n).map(|i| Polynomial::var(JetVar::new(j, i, MultiIndexUnord::pure(t, m)))).collect(),
    )
}

/// A point of the jet space over a base point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetPoint {
    pub params: JetParams,
    pub base: Vec<Q>,
    pub values: BTreeMap<JetVar, Q>,
}

/// Every multiset of size ≤ max over 0..n, ordered by size.
pub fn unordered_multi_indices(n: usize, max: usize) -> Vec<MultiIndexUnord> {
    let mut out = vec![MultiIndexUnord::empty()];
    let mut layer = vec![MultiIndexUnord::empty()];
    for _ in 0..max {
        let mut next = Vec::new();
        for m in &layer {
            let lo = m.dirs().last().unwrap_or(0);
            for t in lo..n {
                next.push(m.with(t));
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

pub fn all_jet_vars(params: JetParams) -> Vec<JetVar> {
    let mis = unordered_multi_indices(params.n, params.max_jet_order());
    let mut out = Vec::new();
    for f in 0..params.k {
        for c in 0..params.n {
            for m in &mis {
                out.push(JetVar::new(f, c, m.clone()));
            }
        }
    }
    out
}

impl JetPoint {
    /// Validates completeness over the index range.
    pub fn new(params: JetParams, base: Vec<Q>, values: BTreeMap<JetVar, Q>) -> Result<Self, JetError> {
        if base.len() != params.n {
            return Err(JetError::Domain(format!("base point has {} coordinates, expected {}", base.len(), params.n)));
        }
        for v in all_jet_vars(params) {
            if !values.contains_key(&v) {
                return Err(JetError::IncompleteJet(v));
            }
        }
        Ok(JetPoint { params, base, values })
    }

    pub fn from_fn(params: JetParams, base: Vec<Q>, f: impl Fn(&JetVar) -> Q) -> Self {
        let values = all_jet_vars(params).into_iter().map(|v| {
            let x = f(&v);
            (v, x)
        });
        JetPoint { params, base, values: values.collect() }
    }

    pub fn get(&self, v: &JetVar) -> Option<&Q> {
        self.values.get(v)
    }

    /// The 0-jet vector of field i.
    pub fn field_value(&self, i: usize) -> Vec<Q> {
        (0..self.params.n).map(|c| self.values[&JetVar::base(i, c)].clone()).collect()
    }
}

pub fn evaluate_poly(p: &DiffPoly, f: &JetPoint) -> Result<Q, JetError> {
    p.poly.evaluate(|v| f.values.get(v).cloned()).map_err(JetError::IncompleteJet)
}

pub fn evaluate(v: &DiffVec, f: &JetPoint) -> Result<Vec<Q>, JetError> {
    v.comps.iter().map(|c| evaluate_poly(c, f)).collect()
}

/// P^m_t(F_i): the order-m pure t-derivative of field i.
pub fn pure_derivative_extract(f: &JetPoint, i: usize, t: usize, m: usize) -> Result<Vec<Q>, JetError> {
    if i >= f.params.k || t >= f.params.n {
        return Err(JetError::Domain(format!("field {} / direction {} out of range", i + 1, t + 1)));
    }
    if m > f.params.max_jet_order() {
        return Err(JetError::OrderOverflow(format!("order {m} exceeds jet order {}", f.params.max_jet_order())));
    }
    (0..f.params.n)
        .map(|c| {
            let v = JetVar::new(i, c, MultiIndexUnord::pure(t, m));
            f.values.get(&v).cloned().ok_or(JetError::IncompleteJet(v))
        })
        .collect()
}

/// Exact (order)-jet of a polynomial frame at p.
pub fn jet_of_frame(frame: &Frame, p: &[Q], order: usize) -> Result<JetPoint, JetError> {
    let n = frame.n;
    if p.len() != n {
        return Err(JetError::Domain(format!("point has {} coordinates, expected {n}", p.len())));
    }
    if frame.fields.is_empty() {
        return Err(JetError::Domain("empty frame".into()));
    }
    let params = JetParams::new(frame.fields.len(), n, order + 1)?;
    let mis = unordered_multi_indices(n, order);
    let mut values = BTreeMap::new();
    for (fi, field) in frame.fields.iter().enumerate() {
        for (c, comp) in field.comps.iter().enumerate() {
            let mut derivs: BTreeMap<MultiIndexUnord, Polynomial<usize>> = BTreeMap::new();
            derivs.insert(MultiIndexUnord::empty(), comp.clone());
            for m in &mis {
                if m.is_empty() {
                    continue;
                }
                let dirs: Vec<usize> = m.dirs().collect();
                let last = dirs[dirs.len() - 1];
                let parent = MultiIndexUnord::from_dirs(&dirs[..dirs.len() - 1]);
                let d = derivs[&parent].partial(&last);
                derivs.insert(m.clone(), d);
            }
            for (m, d) in derivs {
                let x = d.evaluate(|j| p.get(*j).cloned()).map_err(|j| JetError::Domain(format!("variable x{} out of range", j + 1)))?;
                values.insert(JetVar::new(fi, c, m), x);
            }
        }
    }
    Ok(JetPoint { params, base: p.to_vec(), values })
}

/// Whether each monomial carries exactly the slot multiset of `idx` in its field indices.
pub fn is_multilinear_in_slots(v: &DiffVec, idx: &[usize]) -> bool {
    let mut want = vec![0u32; v.params.k];
    for &a in idx {
        want[a] += 1;
    }
    v.comps.iter().all(|c| {
        c.poly.terms().all(|(m, _)| {
            let mut got = vec![0u32; v.params.k];
            for (x, e) in m.factors() {
                got[x.field] += e;
            }
            got == want
        })
    })
}

impl fmt::Display for DiffVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .comps
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| format!("({c})·∂{}", i + 1))
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{qi, random_rational};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn u(f: usize, c: usize, d: &[usize]) -> JetVar {
        JetVar::new(f, c, MultiIndexUnord::from_dirs(d))
    }

    fn pv(params: JetParams, v: JetVar) -> DiffPoly {
        DiffPoly::var(params, v).unwrap()
    }

    #[test]
    fn derive_examples() {
        let p = JetParams::new(3, 3, 3).unwrap();
        let d = derive(&pv(p, u(1, 2, &[])), 0).unwrap();
        assert_eq!(d, pv(p, u(1, 2, &[0])));
        assert!(derive(&DiffPoly::constant(p, qi(5)), 1).unwrap().is_zero());
        let prod = pv(p, u(0, 0, &[])).mul(&pv(p, u(1, 1, &[])));
        let d = derive(&prod, 0).unwrap();
        let expect = pv(p, u(0, 0, &[0])).mul(&pv(p, u(1, 1, &[]))).add(&pv(p, u(0, 0, &[])).mul(&pv(p, u(1, 1, &[0]))));
        assert_eq!(d, expect);
        let top = pv(p, u(0, 0, &[0, 1]));
        assert!(matches!(derive(&top, 0), Err(JetError::OrderOverflow(_))));
    }

    #[test]
    fn leibniz_by_evaluation() {
        // D_1(u^1_1 u^2_2) evaluated on the jet of a polynomial frame equals the classical derivative.
        use crate::flags::{Frame, PolyField};
        let x = |i: usize| Polynomial::<usize>::var(i);
        let f1 = PolyField::new(vec![&x(0) * &x(1), x(1)]);
        let f2 = PolyField::new(vec![Polynomial::one(), &x(0) * &x(0)]);
        let fr = Frame::new(2, vec![f1.clone(), f2.clone()]).unwrap();
        let pt = vec![qi(2), qi(3)];
        let jet = jet_of_frame(&fr, &pt, 2).unwrap();
        let p = jet.params;
        let prod = pv(p, u(0, 0, &[])).mul(&pv(p, u(1, 1, &[])));
        let lhs = evaluate_poly(&derive(&prod, 0).unwrap(), &jet).unwrap();
        let classical = (&f1.comps[0] * &f2.comps[1]).partial(&0);
        let rhs = classical.evaluate(|j| Some(pt[*j].clone())).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn bracket_examples() {
        let p = JetParams::new(2, 3, 3).unwrap();
        let b = bracket(&[1], p).unwrap();
        for i in 0..3 {
            assert_eq!(b.comps[i], pv(p, u(1, i, &[])));
        }
        assert!(bracket(&[0, 0], p).unwrap().is_zero());
        assert!(bracket(&[1, 1], p).unwrap().is_zero());
        let p1 = JetParams::new(2, 1, 2).unwrap();
        let b = bracket(&[1, 0], p1).unwrap();
        let expect = pv(p1, u(1, 0, &[])).mul(&pv(p1, u(0, 0, &[0]))).sub(&pv(p1, u(0, 0, &[])).mul(&pv(p1, u(1, 0, &[0]))));
        assert_eq!(b.comps[0], expect);
        assert!(matches!(bracket(&[], p), Err(JetError::Domain(_))));
        assert!(matches!(bracket(&[0, 1, 0, 1], p), Err(JetError::OrderOverflow(_))));
    }

    #[test]
    fn orders() {
        let p = JetParams::new(3, 3, 3).unwrap();
        assert_eq!(max_order(&pv(p, u(0, 0, &[0, 1]))), 2);
        assert_eq!(bracket(&[1, 0], p).unwrap().order(), 1);
        assert_eq!(bracket(&[2, 1, 0], p).unwrap().order(), 2);
    }

    #[test]
    fn pure_t_scan() {
        let p = JetParams::new(3, 3, 3).unwrap();
        let b = bracket(&[1, 0], p).unwrap();
        let got = pure_t_vars(&b, 0, 1);
        let expect: BTreeSet<JetVar> = (0..3).flat_map(|j| [u(0, j, &[0]), u(1, j, &[0])]).collect();
        assert_eq!(got, expect);
        let zero = pure_t_vars(&b, 0, 0);
        assert!(zero.iter().all(|v| v.order() == 0) && !zero.is_empty());
        for t in 0..3 {
            let b = bracket(&[2, 1, 0], p).unwrap();
            let s = b.substitute(&zero_jet_assignment(&[(1, t, qi(0)), (2, t, qi(0))]));
            assert!(pure_t_vars(&s, t, 2).is_empty());
        }
    }

    #[test]
    fn substitute_examples() {
        let p = JetParams::new(2, 2, 2).unwrap();
        let a = pv(p, u(0, 0, &[]));
        let s = substitute(&a, &zero_jet_assignment(&[(0, 0, qi(7))]));
        assert_eq!(s, DiffPoly::constant(p, qi(7)));
        let b = bracket(&[1, 0], p).unwrap();
        assert_eq!(b.substitute(&BTreeMap::new()), b);
        // adapted values u^1_1 = 1, u^1_2 = 0 in direction t = 1:
        // [F2,F1]^i = Σ_j u^j_2 D_j u^i_1 − u^j_1 D_j u^i_2 → u^2_2 u^i_{1,(2)} − u^i_{2,(1)} − u^2_1 u^i_{2,(2)}
        let s = b.substitute(&adapted_assignment(p, 0));
        for i in 0..2 {
            let expect = pv(p, u(1, 1, &[])).mul(&pv(p, u(0, i, &[1])))
                .sub(&pv(p, u(1, i, &[0])))
                .sub(&pv(p, u(0, 1, &[])).mul(&pv(p, u(1, i, &[1]))));
            assert_eq!(s.comps[i], expect, "component {i}");
        }
    }

    #[test]
    fn jet_of_frame_examples() {
        use crate::frontend::catalog_frame;
        let h = catalog_frame("heisenberg").unwrap();
        let jet = jet_of_frame(&h, &[qi(0), qi(0), qi(0)], 1).unwrap();
        for v in all_jet_vars(jet.params) {
            let expect = if v == u(1, 2, &[0]) || (v.order() == 0 && v.field == v.comp) { qi(1) } else { qi(0) };
            assert_eq!(jet.values[&v], expect, "{v}");
        }
        assert_eq!(pure_derivative_extract(&jet, 1, 0, 1).unwrap(), vec![qi(0), qi(0), qi(1)]);
        assert_eq!(pure_derivative_extract(&jet, 1, 0, 0).unwrap(), jet.field_value(1));
        let v = evaluate(&bracket(&[0, 1], jet.params).unwrap(), &jet).unwrap();
        assert_eq!(v, vec![qi(0), qi(0), qi(1)]);
        assert!(evaluate(&DiffVec::zero(jet.params), &jet).unwrap().iter().all(Zero::is_zero));
        let missing = pv(JetParams::new(2, 3, 3).unwrap(), u(0, 0, &[0, 0]));
        assert!(matches!(evaluate_poly(&missing, &jet), Err(JetError::IncompleteJet(_))));
    }

    #[test]
    fn jet_translation() {
        use crate::frontend::catalog_frame;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for name in ["martinet", "engel", "cartan"] {
            let fr = catalog_frame(name).unwrap();
            let p: Vec<Q> = (0..fr.n).map(|_| random_rational(&mut rng, 4, 3)).collect();
            let shifted = fr.translate(&p);
            let a = jet_of_frame(&fr, &p, 2).unwrap();
            let b = jet_of_frame(&shifted, &vec![Q::zero(); fr.n], 2).unwrap();
            assert_eq!(a.values, b.values);
        }
    }

    #[test]
    fn jet_point_completeness() {
        let p = JetParams::new(1, 2, 2).unwrap();
        let full = JetPoint::from_fn(p, vec![qi(0), qi(0)], |_| qi(1));
        assert_eq!(full.values.len(), 2 * 3);
        let mut partial = full.values.clone();
        partial.remove(&u(0, 1, &[1]));
        assert!(matches!(JetPoint::new(p, vec![qi(0), qi(0)], partial), Err(JetError::IncompleteJet(_))));
        assert!(JetPoint::new(p, vec![qi(0), qi(0)], full.values).is_ok());
    }

    #[test]
    fn table_matches_direct() {
        let p = JetParams::new(2, 2, 3).unwrap();
        let t = bracket_table(p, 3).unwrap();
        assert_eq!(t.len(), 2 + 4 + 8);
        for (idx, v) in &t {
            assert_eq!(*v, bracket(idx, p).unwrap());
            assert_eq!(*v, bracket_tree(&BracketExpr::right_nested(idx), p).unwrap());
        }
    }
}
