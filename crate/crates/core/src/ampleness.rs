//! Ampleness classification of principal-subspace slices, GL convex decompositions
//! and exact hull-membership search.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flags::{self, FlagError, Frame};
use crate::freelie::{self, BracketExpr};
use crate::linalg::{self, EchelonBasis, Matrix};
use crate::rational::{dot, q, qi, serde_q, sign, Q};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AmplenessError {
    #[error("DomainError: {0}")]
    Domain(String),
    #[error("NotAmple: {0}")]
    NotAmple(String),
    #[error("Unclassified: {0}")]
    Unclassified(String),
    #[error("NormalDirection: the direction is orthogonal to the distribution")]
    NormalDirection,
    #[error("NotFormalSolution: {0}")]
    NotFormalSolution(String),
    #[error("InconsistentFormalSolution: at order {order}, n = {n} exceeds m + k - 1 = {m} + {k} - 1")]
    InconsistentFormalSolution { order: usize, m: usize, k: usize, n: usize },
    #[error("DecompositionFailed: {0}")]
    DecompositionFailed(String),
    #[error(transparent)]
    Flag(#[from] FlagError),
    #[error(transparent)]
    FreeLie(#[from] freelie::FreeLieError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    EmptyTriviallyAmple,
    TriviallyAmpleFull,
    AmpleThinComplement,
    AmpleNonThin,
    NotAmpleHyperplane,
}

impl Verdict {
    pub fn is_ample(self) -> bool {
        self != Verdict::NotAmpleHyperplane
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// ℓ×q matrices whose first k columns are fixed, constrained to rank ρ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixSpaceSpec {
    pub rows: usize,
    pub cols: usize,
    pub fixed_count: usize,
    #[serde(with = "serde_q::matrix")]
    pub fixed: Matrix,
    pub rank: usize,
}

impl MatrixSpaceSpec {
    /// Maximal-rank spec from fixed columns given as vectors.
    pub fn from_columns(rows: usize, cols: usize, fixed_cols: &[Vec<Q>]) -> Self {
        let fixed = (0..rows).map(|i| fixed_cols.iter().map(|c| c[i].clone()).collect()).collect();
        MatrixSpaceSpec { rows, cols, fixed_count: fixed_cols.len(), fixed, rank: rows.min(cols) }
    }

    fn check(&self) -> Result<(), AmplenessError> {
        if self.fixed_count > self.cols {
            return Err(AmplenessError::Domain(format!("{} fixed columns exceed {} columns", self.fixed_count, self.cols)));
        }
        if self.fixed.len() != self.rows || self.fixed.iter().any(|r| r.len() != self.fixed_count) {
            return Err(AmplenessError::Domain("fixed block must be rows x fixed_count".into()));
        }
        if self.rank > self.rows.min(self.cols) {
            return Err(AmplenessError::Domain(format!("rank {} exceeds min({}, {})", self.rank, self.rows, self.cols)));
        }
        Ok(())
    }

    fn fixed_rank(&self) -> usize {
        linalg::rank(&linalg::transpose(&self.fixed))
    }
}

pub fn classify_matrix_space(spec: &MatrixSpaceSpec) -> Result<Verdict, AmplenessError> {
    spec.check()?;
    let (l, q, k) = (spec.rows, spec.cols, spec.fixed_count);
    if spec.rank != l.min(q) {
        return Err(AmplenessError::Unclassified(format!("required rank {} is not maximal for {l}x{q}", spec.rank)));
    }
    if q == 0 || l == 0 {
        return Err(AmplenessError::Unclassified("empty matrix space".into()));
    }
    let fr = spec.fixed_rank();
    if fr < k {
        // with dependent fixed columns, maximal rank is reachable only if the free columns make up the deficit
        if fr + (q - k) < spec.rank || q <= l {
            return Ok(Verdict::EmptyTriviallyAmple);
        }
        return Err(AmplenessError::Unclassified(format!(
            "wide {l}x{q} space with dependent fixed columns (rank {fr} of {k}) is nonempty"
        )));
    }
    use std::cmp::Ordering::*;
    Ok(match l.cmp(&q) {
        Less if k == l => Verdict::TriviallyAmpleFull,
        Less => Verdict::AmpleThinComplement,
        Greater if k == q => Verdict::TriviallyAmpleFull,
        Greater => Verdict::AmpleThinComplement,
        Equal if k == q => Verdict::TriviallyAmpleFull,
        Equal if q - k >= 2 => Verdict::AmpleNonThin,
        Equal => Verdict::NotAmpleHyperplane,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessMember {
    #[serde(with = "serde_q")]
    pub weight: Q,
    #[serde(with = "serde_q::matrix")]
    pub matrix: Matrix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvexWitness {
    pub members: Vec<WitnessMember>,
}

impl ConvexWitness {
    fn from_pairs(pairs: Vec<(Q, Matrix)>) -> Self {
        ConvexWitness { members: pairs.into_iter().map(|(weight, matrix)| WitnessMember { weight, matrix }).collect() }
    }

    pub fn average(&self) -> Matrix {
        let first = &self.members[0].matrix;
        let mut acc = vec![vec![Q::zero(); first[0].len()]; first.len()];
        for m in &self.members {
            for (ra, rm) in acc.iter_mut().zip(&m.matrix) {
                for (a, x) in ra.iter_mut().zip(rm) {
                    *a += &m.weight * x;
                }
            }
        }
        acc
    }

    /// Positive weights summing to 1, exact average, and `member_ok` on every member.
    pub fn verify(&self, target: &[Vec<Q>], member_ok: impl Fn(&Matrix) -> bool) -> bool {
        !self.members.is_empty()
            && self.members.iter().all(|m| m.weight.is_positive() && member_ok(&m.matrix))
            && self.members.iter().fold(Q::zero(), |acc, m| acc + &m.weight) == Q::one()
            && self.average() == target
    }
}

fn check_square(m: &[Vec<Q>]) -> Result<usize, AmplenessError> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return Err(AmplenessError::Domain("matrix must be square".into()));
    }
    Ok(n)
}

/// ½M₁ + ½M₂ with det(M_i) of sign opposite to det(M) ≠ 0.
fn two_column_split(m: &[Vec<Q>]) -> Result<(Matrix, Matrix), AmplenessError> {
    let n = m.len();
    let d = linalg::determinant(m);
    for e in 1..=8i64 {
        let eps = qi(e);
        let two_eps = qi(2) + &eps;
        let mut m1 = m.to_vec();
        let mut m2 = m.to_vec();
        for row in 0..n {
            m1[row][0] = &m[row][0] * &two_eps;
            m1[row][1] = -(&m[row][1] * &eps);
            m2[row][0] = -(&m[row][0] * &eps);
            m2[row][1] = &m[row][1] * &two_eps;
        }
        let (d1, d2) = (linalg::determinant(&m1), linalg::determinant(&m2));
        if sign(&d1) == -sign(&d) && sign(&d2) == -sign(&d) {
            return Ok((m1, m2));
        }
    }
    Err(AmplenessError::DecompositionFailed("no epsilon produced opposite-sign members".into()))
}

/// Smallest μ ∈ {1, 2, …} with det(M − μI) ≠ 0.
pub fn shift_parameter(m: &[Vec<Q>]) -> Q {
    let n = m.len();
    let mut mu = 1i64;
    loop {
        let shifted: Matrix = (0..n).map(|i| (0..n).map(|j| if i == j { &m[i][j] - qi(mu) } else { m[i][j].clone() }).collect()).collect();
        if !linalg::determinant(&shifted).is_zero() {
            return qi(mu);
        }
        mu += 1;
    }
}

/// Constructive convex decomposition. For nonsingular M the two members have determinant
/// sign opposite to M; for singular M the two members are the nonsingular matrices 2(M − μI), 2μI.
pub fn gl_convex_decomposition(m: &[Vec<Q>]) -> Result<ConvexWitness, AmplenessError> {
    let n = check_square(m)?;
    if n < 2 {
        return Err(AmplenessError::NotAmple("1x1 matrices: each component of GL(1) is a half-line".into()));
    }
    let half = q(1, 2);
    let w = if linalg::determinant(m).is_zero() {
        let mu = shift_parameter(m);
        let a: Matrix = (0..n).map(|i| (0..n).map(|j| qi(2) * (&m[i][j] - if i == j { mu.clone() } else { Q::zero() })).collect()).collect();
        let b: Matrix = (0..n).map(|i| (0..n).map(|j| if i == j { qi(2) * &mu } else { Q::zero() }).collect()).collect();
        ConvexWitness::from_pairs(vec![(half.clone(), a), (half, b)])
    } else {
        let (m1, m2) = two_column_split(m)?;
        ConvexWitness::from_pairs(vec![(half.clone(), m1), (half, m2)])
    };
    if !w.verify(m, |x| !linalg::determinant(x).is_zero()) {
        return Err(AmplenessError::DecompositionFailed("witness failed exact verification".into()));
    }
    Ok(w)
}

/// Witness that M lies in the convex hull of {det > 0} (sign = 1) or {det < 0} (sign = −1).
pub fn decompose_into_component(m: &[Vec<Q>], target_sign: i8) -> Result<ConvexWitness, AmplenessError> {
    let n = check_square(m)?;
    if target_sign != 1 && target_sign != -1 {
        return Err(AmplenessError::Domain("sign must be +1 or -1".into()));
    }
    if n < 2 {
        return Err(AmplenessError::NotAmple("1x1 matrices: each component of GL(1) is a half-line".into()));
    }
    let d = sign(&linalg::determinant(m));
    let pairs: Vec<(Q, Matrix)> = if d == target_sign {
        vec![(Q::one(), m.to_vec())]
    } else if d != 0 {
        let w = gl_convex_decomposition(m)?;
        w.members.into_iter().map(|x| (x.weight, x.matrix)).collect()
    } else {
        let split = gl_convex_decomposition(m)?;
        let mut out = Vec::new();
        for part in split.members {
            let sub = decompose_into_component(&part.matrix, target_sign)?;
            out.extend(sub.members.into_iter().map(|x| (&part.weight * &x.weight, x.matrix)));
        }
        out
    };
    let w = ConvexWitness::from_pairs(pairs);
    if !w.verify(m, |x| sign(&linalg::determinant(x)) == target_sign) {
        return Err(AmplenessError::DecompositionFailed("component witness failed exact verification".into()));
    }
    Ok(w)
}

/// Cofactor vector c with det(fixed | w) = c·w.
pub fn det_affine_in_free_column(fixed: &[Vec<Q>]) -> Result<Vec<Q>, AmplenessError> {
    let n = fixed.len();
    if n == 0 || fixed.iter().any(|r| r.len() + 1 != n) {
        return Err(AmplenessError::Domain("fixed block must be n x (n-1)".into()));
    }
    Ok((0..n)
        .map(|i| {
            let minor: Matrix = fixed.iter().enumerate().filter(|(r, _)| *r != i).map(|(_, row)| row.clone()).collect();
            let c = linalg::determinant(&minor);
            if (i + n - 1) % 2 == 0 {
                c
            } else {
                -c
            }
        })
        .collect())
}

/// Adapted frame values at p for a probing direction v.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdaptedFrame {
    /// X_1, …, X_k at p.
    pub values: Vec<Vec<Q>>,
    /// Constant k×k change of frame: X_j = Σ_i g[i][j] F_i.
    pub g: Matrix,
    /// Rows: v, then a basis of v^⊥. Sends v to a multiple of the first axis.
    pub chart: Matrix,
}

pub fn adapted_frame(fr: &Frame, p: &[Q], v: &[Q]) -> Result<AdaptedFrame, AmplenessError> {
    let n = fr.n;
    let k = fr.k();
    if p.len() != n || v.len() != n {
        return Err(AmplenessError::Domain(format!("point and direction must have {n} coordinates")));
    }
    if v.iter().all(Zero::is_zero) {
        return Err(AmplenessError::Domain("zero direction".into()));
    }
    let f = fr.values_at(p);
    let rank = linalg::rank(&f);
    if rank < k {
        return Err(FlagError::DegenerateFrame { rank, k }.into());
    }
    let gram: Matrix = f.iter().map(|a| f.iter().map(|b| dot(a, b)).collect()).collect();
    let rhs: Vec<Q> = f.iter().map(|a| dot(a, v)).collect();
    if rhs.iter().all(Zero::is_zero) {
        return Err(AmplenessError::NormalDirection);
    }
    let a = linalg::solve(&gram, &rhs).expect("Gram matrix of an independent family is invertible");
    let combo = |c: &[Q]| -> Vec<Q> { (0..n).map(|j| (0..k).fold(Q::zero(), |acc, i| acc + &c[i] * &f[i][j])).collect() };
    let proj = combo(&a);
    let pv = dot(&proj, v);
    let g1: Vec<Q> = a.iter().map(|x| x / &pv).collect();
    let x1 = combo(&g1);
    let x1n = dot(&x1, &x1);
    let mut cols = vec![g1];
    let mut values = vec![x1.clone()];
    let mut basis = EchelonBasis::new();
    basis.insert(&x1);
    for i in 0..k {
        let c = dot(&f[i], &x1) / &x1n;
        let gi: Vec<Q> = (0..k).map(|j| (if i == j { Q::one() } else { Q::zero() }) - &c * &cols[0][j]).collect();
        let xi = combo(&gi);
        if basis.insert(&xi) {
            cols.push(gi);
            values.push(xi);
        }
        if cols.len() == k {
            break;
        }
    }
    let g: Matrix = (0..k).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect();
    let mut chart = vec![v.to_vec()];
    chart.extend(linalg::nullspace(&[v.to_vec()], n));
    Ok(AdaptedFrame { values, g, chart })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceReport {
    pub order: usize,
    pub m_i: usize,
    pub n_i: usize,
    pub verdict: Verdict,
    pub normal: bool,
}

/// Rank data of the D_⊥ / D_t splitting at one order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceRanks {
    pub order: usize,
    /// rank of D^i_⊥
    pub perp: usize,
    /// rank of the t-type brackets alone
    pub t_alone: usize,
    /// rank of everything of length ≤ i
    pub total: usize,
    /// Basis of D^i_⊥ (values at p)
    pub perp_basis: Vec<Vec<Q>>,
}

/// Length exactly `order`, with order−1 copies of the adapted first field and one other.
pub fn is_t_type(e: &BracketExpr, k: usize, order: usize) -> bool {
    if e.len() != order {
        return false;
    }
    let d = e.multidegree(k);
    d[0] + 1 == order && d[1..].iter().sum::<usize>() == 1
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SliceOptions {
    /// Cross-check D_⊥ ranks against all right-nested brackets (k ≤ 3, order ≤ 4).
    pub cross_check: bool,
}

/// Ranks of the splitting at orders 1..=r for the adapted frame.
pub fn slice_ranks(fr: &Frame, p: &[Q], v: &[Q], r: usize, opts: SliceOptions) -> Result<Vec<SliceRanks>, AmplenessError> {
    let ad = adapted_frame(fr, p, v)?;
    let y = fr.change(&ad.g)?;
    let k = fr.k();
    let h = freelie::hall_basis(k, r)?;
    let mut memo = BTreeMap::new();
    let mut out = Vec::new();
    for i in 1..=r {
        let mut perp = EchelonBasis::new();
        let mut perp_basis = Vec::new();
        let mut t_only = EchelonBasis::new();
        let mut total = EchelonBasis::new();
        for len in 1..=i {
            for e in h.layer(len) {
                let val = y.tree_field(e, &mut memo).eval(p);
                total.insert(&val);
                if is_t_type(e, k, i) {
                    t_only.insert(&val);
                } else if perp.insert(&val) {
                    perp_basis.push(val);
                }
            }
        }
        if opts.cross_check && k <= 3 && i <= 4 {
            let full = full_perp_rank(&y, p, i);
            if full != perp.rank() {
                return Err(FlagError::SpanningSetMismatch { len: i, hall: perp.rank(), full }.into());
            }
        }
        out.push(SliceRanks { order: i, perp: perp.rank(), t_alone: t_only.rank(), total: total.rank(), perp_basis });
    }
    Ok(out)
}

/// Rank of all right-nested brackets of length ≤ i that are not of t-type.
fn full_perp_rank(y: &Frame, p: &[Q], i: usize) -> usize {
    let k = y.k();
    let mut basis = EchelonBasis::new();
    let mut idx: Vec<Vec<usize>> = (0..k).map(|a| vec![a]).collect();
    for len in 1..=i {
        if len > 1 {
            idx = idx.iter().flat_map(|s| (0..k).map(move |a| std::iter::once(a).chain(s.iter().copied()).collect())).collect();
        }
        for s in &idx {
            let ones = s.iter().filter(|&&a| a == 0).count();
            let t_type = len == i && ones + 1 == i;
            if !t_type {
                basis.insert(&y.bracket_field(s).eval(p));
            }
        }
    }
    basis.rank()
}

pub fn slice_report(fr: &Frame, p: &[Q], v: &[Q], r: usize) -> Result<Vec<SliceReport>, AmplenessError> {
    slice_report_with(fr, p, v, r, SliceOptions::default())
}

pub fn slice_report_with(fr: &Frame, p: &[Q], v: &[Q], r: usize, opts: SliceOptions) -> Result<Vec<SliceReport>, AmplenessError> {
    let (n, k) = (fr.n, fr.k());
    if v.len() != n || p.len() != n {
        return Err(AmplenessError::Domain(format!("point and direction must have {n} coordinates")));
    }
    if v.iter().all(Zero::is_zero) {
        return Err(AmplenessError::Domain("zero direction".into()));
    }
    let flag = flags::lie_flag(fr, p, Some(r.max(1)))?;
    if !flag.maximal {
        return Err(AmplenessError::NotFormalSolution(format!("growth vector {:?} at the base point is not maximal", flag.dims)));
    }
    let mgv = freelie::maximal_growth_vector(k as u64, n as u64)?;
    if r != mgv.step {
        return Err(AmplenessError::Domain(format!("step {r} differs from the growth step {}", mgv.step)));
    }
    let target: Vec<usize> = mgv.entries.iter().map(|&e| e as usize).collect();
    let ranks = match slice_ranks(fr, p, v, r, opts) {
        Err(AmplenessError::NormalDirection) => {
            return Ok((1..=r)
                .map(|i| SliceReport { order: i, m_i: target[i - 1], n_i: target[i - 1], verdict: Verdict::TriviallyAmpleFull, normal: true })
                .collect())
        }
        other => other?,
    };
    let mut out = Vec::new();
    for sr in ranks {
        let i = sr.order;
        let (m, ni) = (sr.perp, target[i - 1]);
        let verdict = if i < r {
            if m + k - 1 != ni {
                return Err(AmplenessError::NotFormalSolution(format!("at order {i}: m_i + k - 1 = {} but the growth entry is {ni}", m + k - 1)));
            }
            let spec = MatrixSpaceSpec::from_columns(n, m + k - 1, &sr.perp_basis);
            let v = classify_matrix_space(&spec)?;
            debug_assert!(k == 1 || v == Verdict::AmpleThinComplement);
            v
        } else if m == n {
            Verdict::TriviallyAmpleFull
        } else if n > m + k - 1 {
            return Err(AmplenessError::InconsistentFormalSolution { order: i, m, k, n });
        } else {
            classify_matrix_space(&MatrixSpaceSpec::from_columns(n, m + k - 1, &sr.perp_basis))?
        };
        out.push(SliceReport { order: i, m_i: m, n_i: ni, verdict, normal: false });
    }
    Ok(out)
}

/// Frame-independent table: rows for i < r, and one row per admissible m_r at i = r.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenericRow {
    pub order: usize,
    pub m_i: usize,
    pub n_i: usize,
    pub verdict: Verdict,
}

pub fn generic_verdict_table(k: usize, n: usize) -> Result<Vec<GenericRow>, AmplenessError> {
    let mgv = freelie::maximal_growth_vector(k as u64, n as u64)?;
    let r = mgv.step;
    let e: Vec<usize> = mgv.entries.iter().map(|&x| x as usize).collect();
    let mut rows: Vec<GenericRow> = (1..r)
        .map(|i| GenericRow { order: i, m_i: e[i - 1] + 1 - k, n_i: e[i - 1], verdict: Verdict::AmpleThinComplement })
        .collect();
    let lo = if freelie::is_free_type(&mgv, k as u64) {
        n + 1 - k
    } else {
        let prev = if r >= 2 { e[r - 2] } else { 0 };
        prev.max(n + 1 - k)
    };
    let hi = if freelie::is_free_type(&mgv, k as u64) { n + 1 - k } else { n };
    for m in lo..=hi {
        let verdict = if m == n {
            Verdict::TriviallyAmpleFull
        } else if n < m + k - 1 {
            Verdict::AmpleThinComplement
        } else if k >= 3 {
            Verdict::AmpleNonThin
        } else {
            Verdict::NotAmpleHyperplane
        };
        rows.push(GenericRow { order: r, m_i: m, n_i: n, verdict });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum HullOutcome {
    Witness(ConvexWitness),
    /// Inconclusive: no witness found within the budget.
    NotFound,
}

const HULL_BATCH: usize = 200;

/// Seeded search for a convex combination of same-sign, maximal-rank matrices
/// (sharing the fixed columns) that averages exactly to `target`.
pub fn hull_membership_witness(
    spec: &MatrixSpaceSpec,
    target: &[Vec<Q>],
    component_sign: i8,
    budget: usize,
    seed: u64,
) -> Result<HullOutcome, AmplenessError> {
    spec.check()?;
    let (l, qc, k) = (spec.rows, spec.cols, spec.fixed_count);
    if l != qc {
        return Err(AmplenessError::Domain("hull search needs the square case".into()));
    }
    if component_sign != 1 && component_sign != -1 {
        return Err(AmplenessError::Domain("sign must be +1 or -1".into()));
    }
    if target.len() != l || target.iter().any(|r| r.len() != qc) {
        return Err(AmplenessError::Domain("target shape mismatch".into()));
    }
    if (0..l).any(|i| (0..k).any(|j| target[i][j] != spec.fixed[i][j])) {
        return Err(AmplenessError::Domain("target does not share the fixed columns".into()));
    }
    let in_component = |m: &Matrix| sign(&linalg::determinant(m)) == component_sign;
    if in_component(&target.to_vec()) {
        return Ok(HullOutcome::Witness(ConvexWitness::from_pairs(vec![(Q::one(), target.to_vec())])));
    }
    if k == qc {
        return Ok(HullOutcome::NotFound);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free: Vec<(usize, usize)> = (0..l).flat_map(|i| (k..qc).map(move |j| (i, j))).collect();
    let target_free: Vec<Q> = free.iter().map(|&(i, j)| target[i][j].clone()).collect();
    let mut drawn = 0;
    let mut round = 0usize;
    while drawn < budget {
        let scale = 1i64 << (round % 4);
        round += 1;
        let mut batch: Vec<Matrix> = Vec::new();
        let take = HULL_BATCH.min(budget - drawn);
        for _ in 0..take {
            drawn += 1;
            let mut m = target.to_vec();
            for &(i, j) in &free {
                let noise = q(rng.gen_range(-4 * scale..=4 * scale), rng.gen_range(1..=4));
                m[i][j] = &m[i][j] + noise;
            }
            if in_component(&m) {
                batch.push(m);
            }
        }
        if batch.is_empty() {
            continue;
        }
        let cols: Vec<Vec<Q>> = batch.iter().map(|m| free.iter().map(|&(i, j)| m[i][j].clone()).collect()).collect();
        if let Some(lambda) = convex_feasibility(&cols, &target_free) {
            let pairs: Vec<(Q, Matrix)> = lambda.into_iter().zip(batch).filter(|(w, _)| !w.is_zero()).collect();
            let w = ConvexWitness::from_pairs(pairs);
            if w.verify(target, in_component) {
                return Ok(HullOutcome::Witness(w));
            }
            return Err(AmplenessError::DecompositionFailed("LP solution failed exact verification".into()));
        }
    }
    Ok(HullOutcome::NotFound)
}

/// Exact phase-1 simplex for λ ≥ 0, Σλ = 1, Σ λ_s points[s] = target. Bland's rule.
pub fn convex_feasibility(points: &[Vec<Q>], target: &[Q]) -> Option<Vec<Q>> {
    let ns = points.len();
    if ns == 0 {
        return None;
    }
    let d = target.len();
    let m = d + 1;
    // rows: coordinates, then the weight-sum row
    let mut a: Matrix = (0..d).map(|r| points.iter().map(|p| p[r].clone()).collect()).collect();
    a.push(vec![Q::one(); ns]);
    let mut b: Vec<Q> = target.to_vec();
    b.push(Q::one());
    for r in 0..m {
        if b[r].is_negative() {
            b[r] = -b[r].clone();
            for x in a[r].iter_mut() {
                *x = -x.clone();
            }
        }
    }
    // tableau columns: ns originals, m artificials, rhs
    let width = ns + m + 1;
    let mut t: Matrix = (0..m)
        .map(|r| {
            let mut row = a[r].clone();
            row.extend((0..m).map(|c| if c == r { Q::one() } else { Q::zero() }));
            row.push(b[r].clone());
            row
        })
        .collect();
    let mut basis: Vec<usize> = (ns..ns + m).collect();
    // objective: minimize sum of artificials → reduced costs
    let mut cost: Vec<Q> = vec![Q::zero(); width];
    for row in &t {
        for c in 0..ns {
            cost[c] -= &row[c];
        }
        cost[width - 1] -= &row[width - 1];
    }
    loop {
        let Some(enter) = (0..ns + m).find(|&c| cost[c].is_negative()) else { break };
        let mut leave: Option<(usize, Q)> = None;
        for r in 0..m {
            if t[r][enter].is_positive() {
                let ratio = &t[r][width - 1] / &t[r][enter];
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => ratio < *best || (ratio == *best && basis[r] < basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((lr, _)) = leave else { break };
        let piv = t[lr][enter].clone();
        for x in t[lr].iter_mut() {
            *x /= &piv;
        }
        let prow = t[lr].clone();
        for (r, row) in t.iter_mut().enumerate() {
            if r != lr && !row[enter].is_zero() {
                let f = row[enter].clone();
                for (x, y) in row.iter_mut().zip(&prow) {
                    *x -= &f * y;
                }
            }
        }
        if !cost[enter].is_zero() {
            let f = cost[enter].clone();
            for (x, y) in cost.iter_mut().zip(&prow) {
                *x -= &f * y;
            }
        }
        basis[lr] = enter;
    }
    if !cost[width - 1].is_zero() {
        return None;
    }
    let mut lambda = vec![Q::zero(); ns];
    for (r, &bv) in basis.iter().enumerate() {
        if bv < ns {
            lambda[bv] = t[r][width - 1].clone();
        }
    }
    let ok = lambda.iter().fold(Q::zero(), |acc, x| acc + x) == Q::one()
        && (0..d).all(|r| points.iter().zip(&lambda).fold(Q::zero(), |acc, (p, l)| acc + &p[r] * l) == target[r]);
    ok.then_some(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::catalog_frame;
    use crate::rational::random_vector;

    fn m(rows: &[&[i64]]) -> Matrix {
        rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect()
    }

    fn spec(l: usize, qc: usize, fixed_cols: &[Vec<Q>]) -> MatrixSpaceSpec {
        MatrixSpaceSpec::from_columns(l, qc, fixed_cols)
    }

    fn e(n: usize, i: usize) -> Vec<Q> {
        (0..n).map(|j| if i == j { qi(1) } else { qi(0) }).collect()
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_matrix_space(&spec(3, 3, &[e(3, 0)])).unwrap(), Verdict::AmpleNonThin);
        assert_eq!(classify_matrix_space(&spec(3, 3, &[e(3, 0), e(3, 1)])).unwrap(), Verdict::NotAmpleHyperplane);
        assert_eq!(classify_matrix_space(&spec(2, 4, &[e(2, 0), e(2, 1)])).unwrap(), Verdict::TriviallyAmpleFull);
        assert_eq!(classify_matrix_space(&spec(3, 4, &[e(3, 0)])).unwrap(), Verdict::AmpleThinComplement);
        assert_eq!(classify_matrix_space(&spec(3, 3, &[e(3, 0), e(3, 0)])).unwrap(), Verdict::EmptyTriviallyAmple);
        assert_eq!(classify_matrix_space(&spec(5, 3, &[e(5, 0)])).unwrap(), Verdict::AmpleThinComplement);
        assert_eq!(classify_matrix_space(&spec(5, 3, &[e(5, 0), e(5, 1), e(5, 2)])).unwrap(), Verdict::TriviallyAmpleFull);
        assert_eq!(classify_matrix_space(&spec(2, 2, &[])).unwrap(), Verdict::AmpleNonThin);
        assert_eq!(classify_matrix_space(&spec(1, 1, &[])).unwrap(), Verdict::NotAmpleHyperplane);
        assert!(matches!(classify_matrix_space(&spec(2, 4, &[e(2, 0), e(2, 0)])), Err(AmplenessError::Unclassified(_))));
        let mut low = spec(3, 3, &[e(3, 0)]);
        low.rank = 2;
        assert!(matches!(classify_matrix_space(&low), Err(AmplenessError::Unclassified(_))));
    }

    #[test]
    fn gl_examples() {
        let w = gl_convex_decomposition(&m(&[&[1, 0], &[0, 1]])).unwrap();
        assert_eq!(w.members[0].matrix, m(&[&[3, 0], &[0, -1]]));
        assert_eq!(w.members[1].matrix, m(&[&[-1, 0], &[0, 3]]));
        assert!(w.members.iter().all(|x| x.weight == q(1, 2) && linalg::determinant(&x.matrix) == qi(-3)));
        let sing = m(&[&[1, 0], &[0, 0]]);
        assert_eq!(shift_parameter(&sing), qi(2));
        let w = gl_convex_decomposition(&sing).unwrap();
        assert_eq!(w.members[0].matrix, m(&[&[-2, 0], &[0, -4]]));
        assert_eq!(w.members[1].matrix, m(&[&[4, 0], &[0, 4]]));
        assert_eq!(w.average(), sing);
        assert!(matches!(gl_convex_decomposition(&m(&[&[2]])), Err(AmplenessError::NotAmple(_))));
        for s in [1, -1] {
            let w = decompose_into_component(&sing, s).unwrap();
            assert!(w.verify(&sing, |x| sign(&linalg::determinant(x)) == s));
        }
    }

    #[test]
    fn det_functional() {
        let c = det_affine_in_free_column(&[vec![qi(1), qi(0)], vec![qi(0), qi(1)], vec![qi(0), qi(0)]]).unwrap();
        assert_eq!(c, vec![qi(0), qi(0), qi(1)]);
        let dep = det_affine_in_free_column(&[vec![qi(1), qi(2)], vec![qi(1), qi(2)], vec![qi(3), qi(6)]]).unwrap();
        assert!(dep.iter().all(Zero::is_zero));
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let fixed: Matrix = (0..3).map(|_| random_vector(&mut rng, 2, 5, 3)).collect();
            let c = det_affine_in_free_column(&fixed).unwrap();
            for j in 0..3 {
                let full: Matrix = (0..3).map(|i| fixed[i].iter().cloned().chain(std::iter::once(e(3, j)[i].clone())).collect()).collect();
                assert_eq!(c[j], linalg::determinant(&full));
            }
        }
    }

    #[test]
    fn adapted_examples() {
        let fr = Frame::new(3, vec![crate::flags::PolyField::coordinate(3, 0), crate::flags::PolyField::coordinate(3, 1)]).unwrap();
        let o = vec![qi(0); 3];
        let a = adapted_frame(&fr, &o, &e(3, 0)).unwrap();
        assert_eq!(a.values, vec![e(3, 0), e(3, 1)]);
        assert_eq!(adapted_frame(&fr, &o, &e(3, 2)), Err(AmplenessError::NormalDirection));
        let a = adapted_frame(&fr, &o, &[qi(1), qi(0), qi(1)]).unwrap();
        assert_eq!(a.values[0], e(3, 0));
        assert_eq!(a.values[1], e(3, 1));
        assert_eq!(linalg::mat_vec(&a.chart, &[qi(1), qi(0), qi(1)])[1..], [qi(0), qi(0)]);
        assert!(adapted_frame(&fr, &o, &vec![qi(0); 3]).is_err());
    }

    #[test]
    fn heisenberg_slices() {
        let h = catalog_frame("heisenberg").unwrap();
        let o = vec![qi(0); 3];
        let rep = slice_report_with(&h, &o, &e(3, 0), 2, SliceOptions { cross_check: true }).unwrap();
        assert_eq!(rep[0], SliceReport { order: 1, m_i: 1, n_i: 2, verdict: Verdict::AmpleThinComplement, normal: false });
        assert_eq!(rep[1], SliceReport { order: 2, m_i: 2, n_i: 3, verdict: Verdict::NotAmpleHyperplane, normal: false });
        let rep = slice_report(&h, &o, &e(3, 2), 2).unwrap();
        assert!(rep.iter().all(|s| s.normal && s.verdict == Verdict::TriviallyAmpleFull));
        assert!(matches!(slice_report(&h, &o, &e(3, 0), 3), Err(AmplenessError::Domain(_))));
        let mart = catalog_frame("martinet").unwrap();
        assert!(matches!(slice_report(&mart, &o, &e(3, 0), 2), Err(AmplenessError::NotFormalSolution(_))));
    }

    #[test]
    fn generic_tables() {
        let t = generic_verdict_table(2, 4).unwrap();
        assert_eq!(t.last().unwrap().order, 3);
        assert!(t.iter().any(|r| r.order == 3 && r.verdict == Verdict::NotAmpleHyperplane));
        assert!(t.iter().filter(|r| r.order == 3).all(|r| matches!(r.verdict, Verdict::NotAmpleHyperplane | Verdict::TriviallyAmpleFull)));
        let t = generic_verdict_table(3, 14).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t[2], GenericRow { order: 3, m_i: 12, n_i: 14, verdict: Verdict::AmpleNonThin });
        assert!(generic_verdict_table(3, 8).unwrap().iter().all(|r| r.verdict != Verdict::NotAmpleHyperplane));
    }

    #[test]
    fn hull_examples() {
        let id = m(&[&[1, 0], &[0, 1]]);
        let s = spec(2, 2, &[]);
        match hull_membership_witness(&s, &id, -1, 2000, 7).unwrap() {
            HullOutcome::Witness(w) => assert!(w.verify(&id, |x| linalg::determinant(x).is_negative())),
            HullOutcome::NotFound => panic!("expected a witness"),
        }
        let s = spec(2, 2, &[e(2, 0)]);
        let t = m(&[&[1, 0], &[0, 1]]);
        assert_eq!(
            hull_membership_witness(&s, &t, 1, 10, 1).unwrap(),
            HullOutcome::Witness(ConvexWitness::from_pairs(vec![(qi(1), t.clone())]))
        );
        let kernel = m(&[&[1, 5], &[0, 0]]);
        for sg in [1, -1] {
            assert_eq!(hull_membership_witness(&s, &kernel, sg, 1000, 3).unwrap(), HullOutcome::NotFound);
        }
    }

    #[test]
    fn feasibility_solver() {
        let pts = vec![vec![qi(0), qi(0)], vec![qi(2), qi(0)], vec![qi(0), qi(2)]];
        let l = convex_feasibility(&pts, &[q(1, 2), q(1, 2)]).unwrap();
        assert_eq!(l.iter().fold(Q::zero(), |a, x| a + x), Q::one());
        assert!(convex_feasibility(&pts, &[qi(2), qi(2)]).is_none());
        assert!(convex_feasibility(&pts, &[qi(-1), qi(0)]).is_none());
    }
}
