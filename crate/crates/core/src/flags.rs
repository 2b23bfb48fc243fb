//! Lie flags of polynomial frames, stratified algebras and left-invariant frames.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::freelie::{self, BracketExpr, HallBasis, DEFAULT_HALL_CAP};
use crate::jetalg::{self, JetPoint};
use crate::linalg::{self, EchelonBasis, Matrix};
use crate::poly::Polynomial;
use crate::rational::{q, serde_q, Q};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlagError {
    #[error("DomainError: {0}")]
    Domain(String),
    #[error("DegenerateFrame: frame values at the base point have rank {rank} < {k}")]
    DegenerateFrame { rank: usize, k: usize },
    #[error("SpanningSetMismatch: Hall-indexed rank {hall} differs from full bracket rank {full} at length {len}")]
    SpanningSetMismatch { len: usize, hall: usize, full: usize },
    #[error("InvalidAlgebra: {0}")]
    InvalidAlgebra(ValidationReport),
    #[error("CertificationFailed: {0}")]
    CertificationFailed(String),
    #[error(transparent)]
    FreeLie(#[from] freelie::FreeLieError),
    #[error(transparent)]
    Jet(#[from] jetalg::JetError),
}

/// Polynomial in x_1..x_n (0-based variable indices).
pub type XPoly = Polynomial<usize>;

pub fn x_var(j: usize) -> XPoly {
    Polynomial::var(j)
}

pub fn fmt_xpoly(p: &XPoly) -> String {
    p.fmt_with(|j| format!("x{}", j + 1))
}

/// Σ comps[j] ∂_j.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PolyField {
    pub comps: Vec<XPoly>,
}

impl PolyField {
    pub fn new(comps: Vec<XPoly>) -> Self {
        PolyField { comps }
    }

    pub fn zero(n: usize) -> Self {
        PolyField { comps: vec![XPoly::zero(); n] }
    }

    /// The coordinate field ∂_j.
    pub fn coordinate(n: usize, j: usize) -> Self {
        let mut f = Self::zero(n);
        f.comps[j] = XPoly::one();
        f
    }

    pub fn n(&self) -> usize {
        self.comps.len()
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(XPoly::is_zero)
    }

    /// X(f) = Σ X^j ∂_j f.
    pub fn apply(&self, f: &XPoly) -> XPoly {
        let mut acc = XPoly::zero();
        for (j, c) in self.comps.iter().enumerate() {
            if !c.is_zero() {
                let d = f.partial(&j);
                if !d.is_zero() {
                    acc += &(c * &d);
                }
            }
        }
        acc
    }

    pub fn eval(&self, p: &[Q]) -> Vec<Q> {
        self.comps
            .iter()
            .map(|c| c.evaluate(|j| p.get(*j).cloned()).expect("point dimension checked by caller"))
            .collect()
    }

    pub fn add(&self, o: &PolyField) -> PolyField {
        PolyField { comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &PolyField) -> PolyField {
        PolyField { comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, c: &Q) -> PolyField {
        PolyField { comps: self.comps.iter().map(|a| a.scale(c)).collect() }
    }

    /// Multiplies every component by a polynomial.
    pub fn mul_poly(&self, f: &XPoly) -> PolyField {
        PolyField { comps: self.comps.iter().map(|a| a * f).collect() }
    }

    pub fn substitute(&self, sub: &[XPoly]) -> PolyField {
        PolyField { comps: self.comps.iter().map(|a| a.substitute(|j| sub.get(*j).cloned())).collect() }
    }

    /// Frame-file expression, e.g. `d2 + x1*d3`.
    pub fn to_expr(&self) -> String {
        let mut terms: Vec<(bool, String)> = Vec::new();
        for (j, c) in self.comps.iter().enumerate() {
            for (m, a) in c.terms().collect::<Vec<_>>().into_iter().rev() {
                let neg = a < &Q::zero();
                let abs = if neg { -a.clone() } else { a.clone() };
                let mut parts = Vec::new();
                if !abs.is_one() {
                    parts.push(crate::rational::fmt_rational(&abs));
                }
                for (v, e) in m.factors() {
                    parts.push(if *e == 1 { format!("x{}", v + 1) } else { format!("x{}^{}", v + 1, e) });
                }
                parts.push(format!("d{}", j + 1));
                terms.push((neg, parts.join("*")));
            }
        }
        if terms.is_empty() {
            return "0*d1".into();
        }
        if let Some(pos) = terms.iter().position(|(neg, _)| !neg) {
            let t = terms.remove(pos);
            terms.insert(0, t);
        }
        let mut s = String::new();
        for (i, (neg, t)) in terms.iter().enumerate() {
            if i == 0 {
                if *neg {
                    s.push_str("0 - ");
                }
            } else {
                s.push_str(if *neg { " - " } else { " + " });
            }
            s.push_str(t);
        }
        s
    }
}

impl fmt::Display for PolyField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

pub fn poly_lie_bracket(x: &PolyField, y: &PolyField) -> PolyField {
    PolyField { comps: (0..x.n()).map(|i| &x.apply(&y.comps[i]) - &y.apply(&x.comps[i])).collect() }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Frame {
    pub n: usize,
    pub fields: Vec<PolyField>,
}

impl Frame {
    pub fn new(n: usize, fields: Vec<PolyField>) -> Result<Self, FlagError> {
        if n == 0 {
            return Err(FlagError::Domain("ambient dimension must be positive".into()));
        }
        for f in &fields {
            if f.n() != n {
                return Err(FlagError::Domain(format!("field with {} components in dimension {n}", f.n())));
            }
            for c in &f.comps {
                if let Some(j) = c.variables().into_iter().find(|&j| j >= n) {
                    return Err(FlagError::Domain(format!("variable x{} outside dimension {n}", j + 1)));
                }
            }
        }
        Ok(Frame { n, fields })
    }

    pub fn k(&self) -> usize {
        self.fields.len()
    }

    pub fn values_at(&self, p: &[Q]) -> Vec<Vec<Q>> {
        self.fields.iter().map(|f| f.eval(p)).collect()
    }

    fn check_point(&self, p: &[Q]) -> Result<(), FlagError> {
        if p.len() != self.n {
            return Err(FlagError::Domain(format!("point has {} coordinates, expected {}", p.len(), self.n)));
        }
        Ok(())
    }

    /// The frame x ↦ X(x + p).
    pub fn translate(&self, p: &[Q]) -> Frame {
        let sub: Vec<XPoly> = (0..self.n).map(|j| &x_var(j) + &XPoly::constant(p[j].clone())).collect();
        Frame { n: self.n, fields: self.fields.iter().map(|f| f.substitute(&sub)).collect() }
    }

    /// fr·G: field j becomes Σ_i G[i][j] X_i.
    pub fn change(&self, g: &[Vec<Q>]) -> Result<Frame, FlagError> {
        let k = self.k();
        if g.len() != k || g.iter().any(|r| r.len() != k) {
            return Err(FlagError::Domain(format!("frame change must be {k}x{k}")));
        }
        if linalg::determinant(g).is_zero() {
            return Err(FlagError::Domain("frame change matrix is singular".into()));
        }
        Ok(Frame { n: self.n, fields: self.change_unchecked(g) })
    }

    /// fr·G for any k×m matrix G, without invertibility requirements.
    pub fn change_unchecked(&self, g: &[Vec<Q>]) -> Vec<PolyField> {
        let m = if g.is_empty() { 0 } else { g[0].len() };
        (0..m)
            .map(|j| {
                self.fields
                    .iter()
                    .enumerate()
                    .fold(PolyField::zero(self.n), |acc, (i, f)| if g[i][j].is_zero() { acc } else { acc.add(&f.scale(&g[i][j])) })
            })
            .collect()
    }

    /// Right-nested classical bracket [X_{b1},[…,X_{bl}]].
    pub fn bracket_field(&self, idx: &[usize]) -> PolyField {
        let mut acc = self.fields[idx[idx.len() - 1]].clone();
        for &a in idx[..idx.len() - 1].iter().rev() {
            acc = poly_lie_bracket(&self.fields[a], &acc);
        }
        acc
    }

    /// Classical bracket of a tree expression, memoized on subtrees.
    pub fn tree_field(&self, e: &BracketExpr, memo: &mut BTreeMap<BracketExpr, PolyField>) -> PolyField {
        if let Some(f) = memo.get(e) {
            return f.clone();
        }
        let f = match e {
            BracketExpr::Leaf(g) => self.fields[*g].clone(),
            BracketExpr::Node(a, b, _) => {
                let fa = self.tree_field(a, memo);
                let fb = self.tree_field(b, memo);
                poly_lie_bracket(&fa, &fb)
            }
        };
        memo.insert(e.clone(), f.clone());
        f
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("dim {}\n", self.n);
        for (i, f) in self.fields.iter().enumerate() {
            s.push_str(&format!("X{} = {}\n", i + 1, f.to_expr()));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagReport {
    #[serde(with = "serde_q::vec")]
    pub base_point: Vec<Q>,
    pub dims: Vec<usize>,
    /// First index (1-based) at which dims attains its final value.
    pub step: usize,
    pub maximal: bool,
    pub free_type: bool,
    /// Dims stopped growing below n.
    pub stabilized: bool,
    /// False when a plateau is followed by growth (a non-regular point).
    pub regular: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct FlagOptions {
    /// Also evaluate every right-nested bracket (k ≤ 3, length ≤ 4) and compare ranks.
    pub cross_check: bool,
    pub hall_cap: usize,
}

impl Default for FlagOptions {
    fn default() -> Self {
        FlagOptions { cross_check: false, hall_cap: DEFAULT_HALL_CAP }
    }
}

fn finish_report(base_point: Vec<Q>, dims: Vec<usize>, k: usize, n: usize) -> FlagReport {
    let last = *dims.last().unwrap_or(&0);
    let step = dims.iter().position(|&d| d == last).map_or(0, |i| i + 1);
    let reached = last == n;
    let stabilized = !reached && dims.len() >= 2 && dims[dims.len() - 1] == dims[dims.len() - 2];
    let regular = (0..dims.len().saturating_sub(1)).all(|i| dims[i] != dims[i + 1] || dims[i + 1..].iter().all(|&d| d == dims[i]));
    let mgv = freelie::maximal_growth_vector(k as u64, n as u64).ok();
    let maximal = match &mgv {
        Some(g) => reached && g.entries.iter().map(|&e| e as usize).eq(dims.iter().copied()),
        None => false,
    };
    let free_type = maximal && mgv.as_ref().is_some_and(|g| freelie::is_free_type(g, k as u64));
    FlagReport { base_point, dims, step, maximal, free_type, stabilized, regular }
}

/// Core loop: adds Hall layers until rank n or max_step.
fn flag_dims<F>(k: usize, n: usize, max_step: usize, cap: usize, mut value: F) -> Result<Vec<usize>, FlagError>
where
    F: FnMut(&BracketExpr) -> Result<Vec<Q>, FlagError>,
{
    let mut h = freelie::hall_basis_capped(k, 1, cap)?;
    let mut basis = EchelonBasis::new();
    let mut dims = Vec::new();
    for len in 1..=max_step {
        if len > 1 {
            h.extend(cap)?;
        }
        for e in h.layer(len).to_vec() {
            if basis.rank() == n {
                break;
            }
            let v = value(&e)?;
            basis.insert(&v);
        }
        dims.push(basis.rank());
        if basis.rank() == n {
            break;
        }
    }
    Ok(dims)
}

fn check_independent(values: &[Vec<Q>]) -> Result<(), FlagError> {
    let rank = linalg::rank(values);
    if rank < values.len() {
        return Err(FlagError::DegenerateFrame { rank, k: values.len() });
    }
    Ok(())
}

pub fn lie_flag(fr: &Frame, p: &[Q], max_step: Option<usize>) -> Result<FlagReport, FlagError> {
    lie_flag_with(fr, p, max_step, FlagOptions::default())
}

pub fn lie_flag_with(fr: &Frame, p: &[Q], max_step: Option<usize>, opts: FlagOptions) -> Result<FlagReport, FlagError> {
    fr.check_point(p)?;
    if fr.k() == 0 {
        return Err(FlagError::Domain("empty frame".into()));
    }
    check_independent(&fr.values_at(p))?;
    let max_step = max_step.unwrap_or(fr.n).max(1);
    let mut memo = BTreeMap::new();
    let dims = flag_dims(fr.k(), fr.n, max_step, opts.hall_cap, |e| Ok(fr.tree_field(e, &mut memo).eval(p)))?;
    if opts.cross_check && fr.k() <= 3 {
        cross_check_full(fr, p, &dims)?;
    }
    Ok(finish_report(p.to_vec(), dims, fr.k(), fr.n))
}

/// Every right-nested bracket of length ≤ min(len, 4): ranks must match the Hall-indexed ones.
fn cross_check_full(fr: &Frame, p: &[Q], dims: &[usize]) -> Result<(), FlagError> {
    let k = fr.k();
    let mut basis = EchelonBasis::new();
    let mut layer: Vec<(Vec<usize>, PolyField)> = (0..k).map(|a| (vec![a], fr.fields[a].clone())).collect();
    for (len, &d) in dims.iter().enumerate().take(4).map(|(i, d)| (i + 1, d)) {
        if len > 1 {
            layer = layer
                .iter()
                .flat_map(|(idx, f)| {
                    (0..k).map(move |a| {
                        let mut i2 = vec![a];
                        i2.extend_from_slice(idx);
                        (i2, poly_lie_bracket(&fr.fields[a], f))
                    })
                })
                .collect();
        }
        for (_, f) in &layer {
            basis.insert(&f.eval(p));
        }
        if basis.rank() != d {
            return Err(FlagError::SpanningSetMismatch { len, hall: d, full: basis.rank() });
        }
    }
    Ok(())
}

/// Lie flag of a jet, through formal brackets only.
pub fn formal_flag(f: &JetPoint, max_step: Option<usize>) -> Result<FlagReport, FlagError> {
    let params = f.params;
    let vals: Vec<Vec<Q>> = (0..params.k).map(|i| f.field_value(i)).collect();
    check_independent(&vals)?;
    let max_step = max_step.unwrap_or(params.r).max(1);
    if max_step > params.r {
        return Err(FlagError::Jet(jetalg::JetError::OrderOverflow(format!(
            "flag step {max_step} needs jets of order {} but the jet has order {}",
            max_step - 1,
            params.r - 1
        ))));
    }
    let mut memo = BTreeMap::new();
    let dims = flag_dims(params.k, params.n, max_step, DEFAULT_HALL_CAP, |e| {
        let v = jetalg::bracket_tree_cached(e, params, &mut memo)?;
        Ok(jetalg::evaluate(&v, f)?)
    })?;
    Ok(finish_report(f.base.clone(), dims, params.k, params.n))
}

/// Invertible affine map y = L x + s.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMap {
    pub linear: Matrix,
    pub shift: Vec<Q>,
}

impl AffineMap {
    pub fn apply(&self, x: &[Q]) -> Vec<Q> {
        linalg::mat_vec(&self.linear, x).into_iter().zip(&self.shift).map(|(a, b)| a + b).collect()
    }
}

/// (A_* X)(y) = L · X(A⁻¹ y).
pub fn pushforward(fr: &Frame, a: &AffineMap) -> Result<Frame, FlagError> {
    let n = fr.n;
    if a.linear.len() != n || a.linear.iter().any(|r| r.len() != n) || a.shift.len() != n {
        return Err(FlagError::Domain(format!("affine map must act on dimension {n}")));
    }
    let inv = linalg::inverse(&a.linear).ok_or_else(|| FlagError::Domain("singular linear part".into()))?;
    // x_j = Σ_m inv[j][m] (y_m − s_m)
    let sub: Vec<XPoly> = (0..n)
        .map(|j| {
            let mut acc = XPoly::zero();
            for m in 0..n {
                if !inv[j][m].is_zero() {
                    acc += &(&x_var(m) - &XPoly::constant(a.shift[m].clone())).scale(&inv[j][m]);
                }
            }
            acc
        })
        .collect();
    let fields = fr
        .fields
        .iter()
        .map(|f| {
            let pulled = f.substitute(&sub);
            PolyField {
                comps: (0..n)
                    .map(|i| {
                        let mut acc = XPoly::zero();
                        for j in 0..n {
                            if !a.linear[i][j].is_zero() {
                                acc += &pulled.comps[j].scale(&a.linear[i][j]);
                            }
                        }
                        acc
                    })
                    .collect(),
            }
        })
        .collect();
    Frame::new(n, fields)
}

/// Graded nilpotent Lie algebra given by structure constants c[i][j][m].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StratifiedAlgebra {
    pub dims: Vec<usize>,
    /// c[i][j][m]: coefficient of e_m in [e_i, e_j], for all i, j.
    pub c: Vec<Vec<Vec<Q>>>,
}

impl StratifiedAlgebra {
    /// Builds from brackets listed for i < j; the rest follows by antisymmetry.
    pub fn from_brackets(dims: Vec<usize>, brackets: &[(usize, usize, Vec<(usize, Q)>)]) -> Result<Self, FlagError> {
        let n: usize = dims.iter().sum();
        if dims.is_empty() || dims.contains(&0) {
            return Err(FlagError::Domain("layer dimensions must be positive".into()));
        }
        let mut c = vec![vec![vec![Q::zero(); n]; n]; n];
        for (i, j, terms) in brackets {
            if *i >= n || *j >= n {
                return Err(FlagError::Domain(format!("basis index outside 1..{n}")));
            }
            for (m, x) in terms {
                if *m >= n {
                    return Err(FlagError::Domain(format!("basis index outside 1..{n}")));
                }
                c[*i][*j][*m] += x;
                c[*j][*i][*m] -= x;
            }
        }
        Ok(StratifiedAlgebra { dims, c })
    }

    pub fn total(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn step(&self) -> usize {
        self.dims.len()
    }

    /// Layer (1-based) of basis element e.
    pub fn layer_of(&self, e: usize) -> usize {
        let mut acc = 0;
        for (i, d) in self.dims.iter().enumerate() {
            acc += d;
            if e < acc {
                return i + 1;
            }
        }
        usize::MAX
    }

    pub fn layer_range(&self, layer: usize) -> std::ops::Range<usize> {
        let start: usize = self.dims[..layer - 1].iter().sum();
        start..start + self.dims[layer - 1]
    }

    pub fn bracket(&self, u: &[Q], v: &[Q]) -> Vec<Q> {
        let n = self.total();
        let mut out = vec![Q::zero(); n];
        for i in 0..n {
            if u[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if v[j].is_zero() {
                    continue;
                }
                let w = &u[i] * &v[j];
                for m in 0..n {
                    if !self.c[i][j][m].is_zero() {
                        out[m] += &w * &self.c[i][j][m];
                    }
                }
            }
        }
        out
    }

    pub fn basis_vector(&self, i: usize) -> Vec<Q> {
        let mut v = vec![Q::zero(); self.total()];
        v[i] = Q::one();
        v
    }

    /// Cumulative layer dimensions.
    pub fn cumulative_dims(&self) -> Vec<usize> {
        self.dims.iter().scan(0, |acc, d| {
            *acc += d;
            Some(*acc)
        }).collect()
    }

    /// Text in the algebra file format.
    pub fn to_text(&self) -> String {
        let mut s = String::from("layers");
        for d in &self.dims {
            s.push_str(&format!(" {d}"));
        }
        s.push('\n');
        let n = self.total();
        for i in 0..n {
            for j in i + 1..n {
                let terms: Vec<(usize, &Q)> = (0..n).filter(|&m| !self.c[i][j][m].is_zero()).map(|m| (m, &self.c[i][j][m])).collect();
                if terms.is_empty() {
                    continue;
                }
                let mut rhs = String::new();
                for (t, (m, x)) in terms.iter().enumerate() {
                    let neg = *x < &Q::zero();
                    let a = if neg { -(*x).clone() } else { (*x).clone() };
                    if t == 0 {
                        if neg {
                            rhs.push('-');
                        }
                    } else {
                        rhs.push_str(if neg { " - " } else { " + " });
                    }
                    if !a.is_one() {
                        rhs.push_str(&format!("{}*", crate::rational::fmt_rational(&a)));
                    }
                    rhs.push_str(&format!("e{}", m + 1));
                }
                s.push_str(&format!("bracket e{} e{} = {rhs}\n", i + 1, j + 1));
            }
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Violation {
    Antisymmetry { i: usize, j: usize },
    Grading { i: usize, j: usize, m: usize },
    Jacobi { i: usize, j: usize, l: usize, component: usize },
    Generation { layer: usize, rank: usize, expected: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Antisymmetry { i, j } => write!(f, "antisymmetry fails for (e{}, e{})", i + 1, j + 1),
            Violation::Grading { i, j, m } => write!(f, "grading: [e{}, e{}] has a component along e{} in the wrong layer", i + 1, j + 1, m + 1),
            Violation::Jacobi { i, j, l, component } => {
                write!(f, "Jacobi identity fails for (e{}, e{}, e{}) in component e{}", i + 1, j + 1, l + 1, component + 1)
            }
            Violation::Generation { layer, rank, expected } => {
                write!(f, "generation: [g_1, g_{}] spans dimension {rank} of layer {layer}, expected {expected}", layer - 1)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn first_violation(&self) -> Option<&Violation> {
        self.violations.first()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.first_violation() {
            None => write!(f, "valid"),
            Some(v) => write!(f, "invalid ({} violation(s)); first: {v}", self.violations.len()),
        }
    }
}

pub fn validate_algebra(alg: &StratifiedAlgebra) -> ValidationReport {
    let n = alg.total();
    let r = alg.step();
    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let bad = (0..n).any(|m| &alg.c[i][j][m] + &alg.c[j][i][m] != Q::zero());
            if bad && i <= j {
                violations.push(Violation::Antisymmetry { i, j });
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let target = alg.layer_of(i) + alg.layer_of(j);
            for m in 0..n {
                if !alg.c[i][j][m].is_zero() && (target > r || alg.layer_of(m) != target) {
                    violations.push(Violation::Grading { i, j, m });
                }
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for l in j + 1..n {
                let (ei, ej, el) = (alg.basis_vector(i), alg.basis_vector(j), alg.basis_vector(l));
                let a = alg.bracket(&ei, &alg.bracket(&ej, &el));
                let b = alg.bracket(&ej, &alg.bracket(&el, &ei));
                let c = alg.bracket(&el, &alg.bracket(&ei, &ej));
                if let Some(component) = (0..n).find(|&m| !(&a[m] + &b[m] + &c[m]).is_zero()) {
                    violations.push(Violation::Jacobi { i, j, l, component });
                }
            }
        }
    }
    for layer in 2..=r {
        let range = alg.layer_range(layer);
        let mut vecs = Vec::new();
        for i in alg.layer_range(1) {
            for j in alg.layer_range(layer - 1) {
                let b = alg.bracket(&alg.basis_vector(i), &alg.basis_vector(j));
                vecs.push(b[range.clone()].to_vec());
            }
        }
        let rank = linalg::rank(&vecs);
        if rank != alg.dims[layer - 1] {
            violations.push(Violation::Generation { layer, rank, expected: alg.dims[layer - 1] });
        }
    }
    ValidationReport { valid: violations.is_empty(), violations }
}

/// Coefficients c_m of d/dt log(e^X e^{tY}) = Σ c_m ad_X^m(Y) at t = 0, for m ≤ 5.
/// Locked values; the unit tests re-derive them from a matrix model.
pub fn left_invariant_coefficients() -> Vec<Q> {
    vec![q(1, 1), q(1, 2), q(1, 12), q(0, 1), q(-1, 720), q(0, 1)]
}

pub const MAX_NILPOTENT_STEP: usize = 6;

/// Left-invariant extensions of every basis vector, in exponential coordinates.
pub fn left_invariant_fields(alg: &StratifiedAlgebra) -> Result<Vec<PolyField>, FlagError> {
    let r = alg.step();
    if r > MAX_NILPOTENT_STEP {
        return Err(FlagError::Domain(format!("step {r} exceeds the supported maximum {MAX_NILPOTENT_STEP}")));
    }
    let n = alg.total();
    let coef = left_invariant_coefficients();
    // ad_X(v) with X = Σ x_a e_a and v a polynomial vector
    let ad = |v: &[XPoly]| -> Vec<XPoly> {
        let mut out = vec![XPoly::zero(); n];
        for a in 0..n {
            for (b, vb) in v.iter().enumerate() {
                if vb.is_zero() {
                    continue;
                }
                let xv = &x_var(a) * vb;
                for (m, o) in out.iter_mut().enumerate() {
                    if !alg.c[a][b][m].is_zero() {
                        *o += &xv.scale(&alg.c[a][b][m]);
                    }
                }
            }
        }
        out
    };
    Ok((0..n)
        .map(|e| {
            let mut term: Vec<XPoly> = (0..n).map(|m| if m == e { XPoly::one() } else { XPoly::zero() }).collect();
            let mut acc = term.clone();
            for c in coef.iter().take(r).skip(1) {
                term = ad(&term);
                if !c.is_zero() {
                    for (a, t) in acc.iter_mut().zip(&term) {
                        *a += &t.scale(c);
                    }
                }
            }
            PolyField::new(acc)
        })
        .collect())
}

/// Checks [X̃_i, X̃_j] = Σ_m c^m_ij X̃_m and X̃_i(0) = e_i.
pub fn certify_structure_identity(alg: &StratifiedAlgebra, fields: &[PolyField]) -> Result<(), FlagError> {
    let n = alg.total();
    let zero = vec![Q::zero(); n];
    for (i, f) in fields.iter().enumerate() {
        if f.eval(&zero) != alg.basis_vector(i) {
            return Err(FlagError::CertificationFailed(format!("field {} does not equal e{} at the origin", i + 1, i + 1)));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let lhs = poly_lie_bracket(&fields[i], &fields[j]);
            let mut rhs = PolyField::zero(n);
            for m in 0..n {
                if !alg.c[i][j][m].is_zero() {
                    rhs = rhs.add(&fields[m].scale(&alg.c[i][j][m]));
                }
            }
            if lhs != rhs {
                return Err(FlagError::CertificationFailed(format!("[X{}, X{}] differs from its structure-constant expansion", i + 1, j + 1)));
            }
        }
    }
    Ok(())
}

/// Frame of left-invariant extensions of the layer-1 basis, certified.
pub fn nilpotent_frame(alg: &StratifiedAlgebra) -> Result<Frame, FlagError> {
    let report = validate_algebra(alg);
    if !report.valid {
        return Err(FlagError::InvalidAlgebra(report));
    }
    let all = left_invariant_fields(alg)?;
    certify_structure_identity(alg, &all)?;
    Frame::new(alg.total(), all.into_iter().take(alg.dims[0]).collect())
}

/// Noncommutative polynomial: word → coefficient.
type Assoc = BTreeMap<Vec<usize>, Q>;

fn assoc_commutator(a: &Assoc, b: &Assoc) -> Assoc {
    let mut out = Assoc::new();
    for (u, x) in a {
        for (v, y) in b {
            let p = x * y;
            let mut uv = u.clone();
            uv.extend_from_slice(v);
            *out.entry(uv).or_insert_with(Q::zero) += &p;
            let mut vu = v.clone();
            vu.extend_from_slice(u);
            *out.entry(vu).or_insert_with(Q::zero) -= &p;
        }
    }
    out.retain(|_, x| !x.is_zero());
    out
}

/// Free nilpotent algebra of rank k and step s, with its Hall basis as basis.
pub fn free_nilpotent_algebra(k: usize, s: usize) -> Result<StratifiedAlgebra, FlagError> {
    if k < 1 || s < 1 {
        return Err(FlagError::Domain("rank and step must be positive".into()));
    }
    let h: HallBasis = freelie::hall_basis(k, s)?;
    let elems: Vec<BracketExpr> = h.iter().cloned().collect();
    let mut lie: BTreeMap<BracketExpr, Assoc> = BTreeMap::new();
    for e in &elems {
        let p = match e {
            BracketExpr::Leaf(g) => Assoc::from([(vec![*g], Q::one())]),
            BracketExpr::Node(a, b, _) => assoc_commutator(&lie[&**a], &lie[&**b]),
        };
        lie.insert(e.clone(), p);
    }
    let n = elems.len();
    let dims: Vec<usize> = (1..=s).map(|l| h.layer(l).len()).collect();
    let offset = |l: usize| -> usize { dims[..l - 1].iter().sum() };
    let mut brackets = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let len = elems[i].len() + elems[j].len();
            if len > s {
                continue;
            }
            let target = assoc_commutator(&lie[&elems[i]], &lie[&elems[j]]);
            if target.is_empty() {
                continue;
            }
            let layer = h.layer(len);
            // express target in the Hall polynomials of this length
            let words: Vec<Vec<usize>> = {
                let mut w: Vec<Vec<usize>> = layer.iter().flat_map(|e| lie[e].keys().cloned()).chain(target.keys().cloned()).collect();
                w.sort();
                w.dedup();
                w
            };
            let rows: Matrix = words
                .iter()
                .map(|w| {
                    layer.iter().map(|e| lie[e].get(w).cloned().unwrap_or_else(Q::zero)).chain(std::iter::once(target.get(w).cloned().unwrap_or_else(Q::zero))).collect()
                })
                .collect();
            let (red, piv) = linalg::rref(&rows);
            if piv.contains(&layer.len()) {
                return Err(FlagError::CertificationFailed("commutator outside the Hall span".into()));
            }
            let terms: Vec<(usize, Q)> = piv
                .iter()
                .enumerate()
                .filter(|(r, _)| !red[*r][layer.len()].is_zero())
                .map(|(r, &c)| (offset(len) + c, red[r][layer.len()].clone()))
                .collect();
            brackets.push((i, j, terms));
        }
    }
    StratifiedAlgebra::from_brackets(dims, &brackets)
}

/// Quotient keeping only the first `keep` top-layer basis elements (the top layer is central).
pub fn truncate_top_layer(alg: &StratifiedAlgebra, keep: usize) -> Result<StratifiedAlgebra, FlagError> {
    let r = alg.step();
    let top = alg.layer_range(r);
    if keep == 0 || keep > top.len() {
        return Err(FlagError::Domain(format!("keep must lie in 1..={}", top.len())));
    }
    let n = top.start + keep;
    let mut dims = alg.dims.clone();
    dims[r - 1] = keep;
    let c = (0..n).map(|i| (0..n).map(|j| alg.c[i][j][..n].to_vec()).collect()).collect();
    Ok(StratifiedAlgebra { dims, c })
}
