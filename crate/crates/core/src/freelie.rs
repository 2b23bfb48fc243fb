//! Hall bases of free Lie algebras, Witt dimensions and maximal growth vectors.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FreeLieError {
    #[error("DomainError: {0}")]
    Domain(String),
    #[error("Overflow: {0}")]
    Overflow(String),
    #[error("CapExceeded: more than {cap} Hall elements requested")]
    CapExceeded { cap: usize },
}

pub fn mobius(m: u64) -> i8 {
    assert!(m >= 1, "mobius of zero");
    let mut m = m;
    let mut sign = 1i8;
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if m > 1 {
        sign = -sign;
    }
    sign
}

/// Exact Witt dimension as a big integer.
pub fn witt_dimension_big(k: u64, len: u32) -> Result<BigInt, FreeLieError> {
    if k == 0 || len == 0 {
        return Err(FreeLieError::Domain(format!("witt_dimension needs k >= 1 and length >= 1, got ({k}, {len})")));
    }
    let kb = BigInt::from(k);
    let mut sum = BigInt::zero();
    for d in 1..=len {
        if len % d == 0 {
            let t = num_traits::pow(kb.clone(), (len / d) as usize);
            match mobius(d as u64) {
                1 => sum += t,
                -1 => sum -= t,
                _ => {}
            }
        }
    }
    let (quo, rem) = sum.div_rem(&BigInt::from(len));
    assert!(rem.is_zero(), "necklace sum not divisible by length");
    Ok(quo)
}

pub fn witt_dimension(k: u64, len: u32) -> Result<u64, FreeLieError> {
    witt_dimension_big(k, len)?
        .to_u64()
        .ok_or_else(|| FreeLieError::Overflow(format!("witt_dimension({k}, {len}) exceeds u64")))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GrowthVector {
    pub entries: Vec<u64>,
    pub step: usize,
}

impl GrowthVector {
    pub fn new(entries: Vec<u64>) -> Self {
        let step = entries.len();
        GrowthVector { entries, step }
    }
}

impl fmt::Display for GrowthVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(u64::to_string).collect();
        write!(f, "({})", parts.join(", "))
    }
}

pub fn maximal_growth_vector(k: u64, n: u64) -> Result<GrowthVector, FreeLieError> {
    if k < 2 || k >= n {
        return Err(FreeLieError::Domain(format!("maximal_growth_vector needs 2 <= k < n, got k={k}, n={n}")));
    }
    let mut entries = Vec::new();
    let mut total: u64 = 0;
    let mut len = 1u32;
    loop {
        let d = witt_dimension(k, len)?;
        total = total
            .checked_add(d)
            .ok_or_else(|| FreeLieError::Overflow("cumulative Witt sum exceeds u64".into()))?;
        if total >= n {
            entries.push(n);
            break;
        }
        entries.push(total);
        len += 1;
    }
    Ok(GrowthVector::new(entries))
}

pub fn is_free_type(gv: &GrowthVector, k: u64) -> bool {
    let mut total = 0u64;
    for len in 1..=gv.entries.len() as u32 {
        match witt_dimension(k, len) {
            Ok(d) => total = total.saturating_add(d),
            Err(_) => return false,
        }
    }
    gv.entries.last() == Some(&total)
}

/// Binary tree over generators. Generator indices are 0-based; display is 1-based.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum BracketExpr {
    Leaf(usize),
    Node(Arc<BracketExpr>, Arc<BracketExpr>, usize),
}

impl BracketExpr {
    pub fn leaf(g: usize) -> Self {
        BracketExpr::Leaf(g)
    }

    pub fn node(a: BracketExpr, b: BracketExpr) -> Self {
        let len = a.len() + b.len();
        BracketExpr::Node(Arc::new(a), Arc::new(b), len)
    }

    /// Leaf count.
    pub fn len(&self) -> usize {
        match self {
            BracketExpr::Leaf(_) => 1,
            BracketExpr::Node(_, _, l) => *l,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Right-nested expression [X_{b1},[X_{b2},…[X_{b(l-1)},X_{bl}]…]].
    pub fn right_nested(idx: &[usize]) -> Self {
        assert!(!idx.is_empty(), "empty multi-index");
        let mut e = BracketExpr::leaf(idx[idx.len() - 1]);
        for &g in idx[..idx.len() - 1].iter().rev() {
            e = BracketExpr::node(BracketExpr::leaf(g), e);
        }
        e
    }

    /// Generator indices in left-to-right leaf order.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        fn walk(e: &BracketExpr, out: &mut Vec<usize>) {
            match e {
                BracketExpr::Leaf(g) => out.push(*g),
                BracketExpr::Node(a, b, _) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        walk(self, &mut out);
        out
    }

    /// Number of occurrences of each generator, indexed by generator.
    pub fn multidegree(&self, k: usize) -> Vec<usize> {
        let mut d = vec![0; k];
        for g in self.leaves() {
            if g < k {
                d[g] += 1;
            }
        }
        d
    }

    pub fn max_generator(&self) -> usize {
        self.leaves().into_iter().max().unwrap_or(0)
    }
}

impl Ord for BracketExpr {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| match (self, other) {
            (BracketExpr::Leaf(a), BracketExpr::Leaf(b)) => a.cmp(b),
            (BracketExpr::Node(a, b, _), BracketExpr::Node(c, d, _)) => a.cmp(c).then_with(|| b.cmp(d)),
            (BracketExpr::Leaf(_), BracketExpr::Node(..)) => Ordering::Less,
            (BracketExpr::Node(..), BracketExpr::Leaf(_)) => Ordering::Greater,
        })
    }
}

impl PartialOrd for BracketExpr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BracketExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BracketExpr::Leaf(g) => write!(f, "X{}", g + 1),
            BracketExpr::Node(a, b, _) => write!(f, "[{a},{b}]"),
        }
    }
}

impl fmt::Debug for BracketExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Hall condition iii for a pair of Hall elements.
fn hall_pair(a: &BracketExpr, b: &BracketExpr) -> bool {
    a < b
        && match b {
            BracketExpr::Leaf(_) => true,
            BracketExpr::Node(c, _, _) => **c <= *a,
        }
}

#[derive(Debug, Clone)]
pub struct HallBasis {
    pub k: usize,
    pub layers: Vec<Vec<BracketExpr>>,
}

pub const DEFAULT_HALL_CAP: usize = 2_000_000;

impl HallBasis {
    pub fn max_len(&self) -> usize {
        self.layers.len()
    }

    /// Layer of length `len` (1-based), empty beyond the generated range.
    pub fn layer(&self, len: usize) -> &[BracketExpr] {
        if len == 0 || len > self.layers.len() {
            &[]
        } else {
            &self.layers[len - 1]
        }
    }

    /// All elements in the total order.
    pub fn iter(&self) -> impl Iterator<Item = &BracketExpr> {
        self.layers.iter().flatten()
    }

    pub fn size(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn contains(&self, e: &BracketExpr) -> bool {
        self.layer(e.len()).binary_search(e).is_ok()
    }
}

pub fn hall_basis(k: usize, max_len: usize) -> Result<HallBasis, FreeLieError> {
    hall_basis_capped(k, max_len, DEFAULT_HALL_CAP)
}

pub fn hall_basis_capped(k: usize, max_len: usize, cap: usize) -> Result<HallBasis, FreeLieError> {
    if k == 0 || max_len == 0 {
        return Err(FreeLieError::Domain(format!("hall_basis needs k >= 1 and max_len >= 1, got ({k}, {max_len})")));
    }
    if k > cap {
        return Err(FreeLieError::CapExceeded { cap });
    }
    let mut h = HallBasis { k, layers: vec![(0..k).map(BracketExpr::leaf).collect()] };
    while h.layers.len() < max_len {
        h.extend(cap)?;
    }
    Ok(h)
}

impl HallBasis {
    /// Generates the next layer; `cap` bounds the total element count.
    pub fn extend(&mut self, cap: usize) -> Result<(), FreeLieError> {
        let len = self.layers.len() + 1;
        let mut total = self.size();
        let mut layer = Vec::new();
        for la in 1..=len / 2 {
            let lb = len - la;
            for a in &self.layers[la - 1] {
                for b in &self.layers[lb - 1] {
                    if hall_pair(a, b) {
                        layer.push(BracketExpr::node(a.clone(), b.clone()));
                        total += 1;
                        if total > cap {
                            return Err(FreeLieError::CapExceeded { cap });
                        }
                    }
                }
            }
        }
        layer.sort();
        self.layers.push(layer);
        Ok(())
    }
}

/// Checks Hall conditions i-iii recursively under the crate's total order.
pub fn is_hall_element(e: &BracketExpr, h: &HallBasis) -> bool {
    match e {
        BracketExpr::Leaf(g) => *g < h.k,
        BracketExpr::Node(a, b, _) => is_hall_element(a, h) && is_hall_element(b, h) && hall_pair(a, b),
    }
}

/// Position of each element in the total order of a Hall basis.
pub fn hall_index(h: &HallBasis) -> BTreeMap<BracketExpr, usize> {
    h.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect()
}
