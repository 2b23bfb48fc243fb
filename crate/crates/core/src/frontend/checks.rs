//! Invariant suites behind `check --suite`.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ampleness::{self, HullOutcome, MatrixSpaceSpec, Verdict};
use crate::flags::{self, AffineMap, Frame};
use crate::freelie::{self, BracketExpr};
use crate::jetalg::{self, JetParams};
use crate::linalg::{self, Matrix};
use crate::rational::{dot, random_rational, random_vector, sign, Q};

use super::catalog::{catalog_algebra, catalog_frame, FRAME_NAMES};
use super::parser::parse_frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Hall,
    Jet,
    Flags,
    Ampleness,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Hall, Suite::Jet, Suite::Flags, Suite::Ampleness];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Hall => "hall",
            Suite::Jet => "jet",
            Suite::Flags => "flags",
            Suite::Ampleness => "ampleness",
        })
    }
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL.into_iter().find(|x| x.to_string() == s).ok_or_else(|| format!("unknown suite {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub suite: Suite,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type CheckFn = fn(&mut ChaCha8Rng) -> Result<String, String>;

fn registry() -> Vec<(Suite, &'static str, CheckFn)> {
    vec![
        (Suite::Hall, "witt_matches_hall_layers", witt_matches_hall_layers),
        (Suite::Hall, "hall_membership_exact", hall_membership_exact),
        (Suite::Hall, "ad_chains_are_hall", ad_chains_are_hall),
        (Suite::Hall, "mgv_prefix_of_witt_sums", mgv_prefix_of_witt_sums),
        (Suite::Jet, "antisymmetry", jet_antisymmetry),
        (Suite::Jet, "jacobi", jet_jacobi),
        (Suite::Jet, "order_bound_and_multilinearity", jet_order_bound),
        (Suite::Jet, "symbol_matches_classical_bracket", jet_oracle),
        (Suite::Flags, "frame_change_invariance", flags_frame_change),
        (Suite::Flags, "affine_invariance", flags_affine),
        (Suite::Flags, "nilpotent_frames", flags_nilpotent),
        (Suite::Flags, "nilpotentize_round_trip", flags_round_trip),
        (Suite::Ampleness, "gl_decomposition", ample_gl),
        (Suite::Ampleness, "hyperplane_obstruction", ample_hyperplane),
        (Suite::Ampleness, "rank2_dichotomy", ample_rank2),
        (Suite::Ampleness, "rank3_no_hyperplane", ample_rank3),
    ]
}

/// Runs the selected suites; checks run in parallel, output order is fixed.
pub fn run_suites(suites: &[Suite], seed: u64) -> Vec<CheckOutcome> {
    let reg: Vec<_> = registry().into_iter().filter(|(s, _, _)| suites.contains(s)).collect();
    reg.par_iter()
        .enumerate()
        .map(|(i, (suite, name, f))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let res = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| f(&mut rng)))
                .unwrap_or_else(|_| Err("panicked".to_string()));
            let (passed, detail) = match res {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckOutcome { suite: *suite, name, passed, detail }
        })
        .collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn witt_matches_hall_layers(_: &mut ChaCha8Rng) -> Result<String, String> {
    for k in 2..=4usize {
        let h = freelie::hall_basis(k, 6).map_err(|e| e.to_string())?;
        for l in 1..=6 {
            let w = freelie::witt_dimension(k as u64, l as u32).map_err(|e| e.to_string())?;
            ensure(h.layer(l).len() as u64 == w, || format!("k={k} l={l}: {} Hall elements, Witt {w}", h.layer(l).len()))?;
        }
    }
    Ok("k in 2..=4, lengths 1..=6".into())
}

/// Every bracket tree over k generators with the given length.
pub fn all_trees(k: usize, len: usize) -> Vec<BracketExpr> {
    if len == 1 {
        return (0..k).map(BracketExpr::leaf).collect();
    }
    let mut out = Vec::new();
    for a in 1..len {
        let left = all_trees(k, a);
        let right = all_trees(k, len - a);
        for x in &left {
            for y in &right {
                out.push(BracketExpr::node(x.clone(), y.clone()));
            }
        }
    }
    out
}

fn hall_membership_exact(_: &mut ChaCha8Rng) -> Result<String, String> {
    let h = freelie::hall_basis(3, 4).map_err(|e| e.to_string())?;
    let mut tested = 0;
    for len in 1..=4 {
        for e in all_trees(3, len) {
            tested += 1;
            ensure(freelie::is_hall_element(&e, &h) == h.contains(&e), || format!("membership disagrees on {e}"))?;
        }
    }
    ensure(h.iter().all(|e| freelie::is_hall_element(e, &h)), || "generated element rejected".into())?;
    Ok(format!("{tested} trees"))
}

fn ad_chains_are_hall(_: &mut ChaCha8Rng) -> Result<String, String> {
    let (k, lmax) = (3, 5);
    let h = freelie::hall_basis(k, lmax).map_err(|e| e.to_string())?;
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let mut e = BracketExpr::node(BracketExpr::leaf(i.min(j)), BracketExpr::leaf(i.max(j)));
            for _ in 2..lmax {
                ensure(h.contains(&e), || format!("{e} missing"))?;
                e = BracketExpr::node(BracketExpr::leaf(i), e);
            }
            ensure(h.contains(&e), || format!("{e} missing"))?;
        }
    }
    Ok(format!("k={k}, lengths 2..={lmax}"))
}

fn mgv_prefix_of_witt_sums(_: &mut ChaCha8Rng) -> Result<String, String> {
    for k in 2..=5u64 {
        for n in k + 1..=60 {
            let gv = freelie::maximal_growth_vector(k, n).map_err(|e| e.to_string())?;
            let mut cum = 0u64;
            for (i, &x) in gv.entries.iter().enumerate() {
                cum += freelie::witt_dimension(k, i as u32 + 1).map_err(|e| e.to_string())?;
                let ok = if i + 1 < gv.entries.len() { x == cum } else { x == cum.min(n) && x == n };
                ensure(ok, || format!("mgv({k},{n}) = {gv}"))?;
                ensure(i == 0 || gv.entries[i - 1] < x, || format!("mgv({k},{n}) not increasing"))?;
            }
        }
    }
    Ok("k in 2..=5, n up to 60".into())
}

fn jet_antisymmetry(_: &mut ChaCha8Rng) -> Result<String, String> {
    let p = JetParams::new(2, 2, 4).map_err(|e| e.to_string())?;
    let t = jetalg::bracket_table(p, 4).map_err(|e| e.to_string())?;
    for (idx, v) in &t {
        if idx.len() < 2 {
            continue;
        }
        let mut sw = idx.clone();
        let l = sw.len();
        sw.swap(l - 2, l - 1);
        ensure(v.add(&t[&sw]).is_zero(), || format!("antisymmetry fails for {idx:?}"))?;
    }
    Ok("k=2, n=2, lengths <= 4".into())
}

fn jet_jacobi(_: &mut ChaCha8Rng) -> Result<String, String> {
    let p = JetParams::new(3, 2, 3).map_err(|e| e.to_string())?;
    let t = jetalg::bracket_table(p, 3).map_err(|e| e.to_string())?;
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                let s = t[&vec![a, b, c]].add(&t[&vec![b, c, a]]).add(&t[&vec![c, a, b]]);
                ensure(s.is_zero(), || format!("Jacobi fails for ({a},{b},{c})"))?;
            }
        }
    }
    Ok("k=3, n=2".into())
}

fn jet_order_bound(_: &mut ChaCha8Rng) -> Result<String, String> {
    let p = JetParams::new(2, 2, 4).map_err(|e| e.to_string())?;
    let t = jetalg::bracket_table(p, 4).map_err(|e| e.to_string())?;
    for (idx, v) in &t {
        ensure(v.order() < idx.len(), || format!("order of {idx:?} is {}", v.order()))?;
        ensure(jetalg::is_multilinear_in_slots(v, idx), || format!("{idx:?} is not multilinear"))?;
    }
    Ok(format!("{} brackets", t.len()))
}

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<Q> {
    random_vector(rng, n, 5, 4)
}

/// Symbol evaluated on the jet of `fr` equals the classical bracket, for all |I| ≤ max_len.
pub fn oracle_agreement(fr: &Frame, p: &[Q], max_len: usize) -> Result<usize, String> {
    let jet = jetalg::jet_of_frame(fr, p, max_len - 1).map_err(|e| e.to_string())?;
    let table = jetalg::bracket_table(jet.params, max_len).map_err(|e| e.to_string())?;
    for (idx, sym) in &table {
        let a = jetalg::evaluate(sym, &jet).map_err(|e| e.to_string())?;
        let b = fr.bracket_field(idx).eval(p);
        ensure(a == b, || format!("{idx:?} at {p:?}: symbol {a:?} vs classical {b:?}"))?;
    }
    Ok(table.len())
}

fn jet_oracle(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut count = 0;
    for name in FRAME_NAMES {
        let fr = catalog_frame(name).expect("catalog");
        let p = random_point(rng, fr.n);
        count += oracle_agreement(&fr, &p, 3)?;
    }
    Ok(format!("{count} brackets over {} frames", FRAME_NAMES.len()))
}

fn dims_at(fr: &Frame, p: &[Q]) -> Result<Vec<usize>, String> {
    flags::lie_flag(fr, p, None).map(|r| r.dims).map_err(|e| e.to_string())
}

pub fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    loop {
        let m: Matrix = (0..n).map(|_| random_vector(rng, n, 3, 2)).collect();
        if !linalg::determinant(&m).is_zero() {
            return m;
        }
    }
}

fn flags_frame_change(rng: &mut ChaCha8Rng) -> Result<String, String> {
    for name in FRAME_NAMES {
        let fr = catalog_frame(name).expect("catalog");
        let p = random_point(rng, fr.n);
        let base = dims_at(&fr, &p)?;
        for _ in 0..2 {
            let g = random_invertible(rng, fr.k());
            let changed = fr.change(&g).map_err(|e| e.to_string())?;
            ensure(dims_at(&changed, &p)? == base, || format!("{name}: dims changed under G = {g:?}"))?;
        }
    }
    Ok("2 changes per catalog frame".into())
}

pub fn random_affine(rng: &mut ChaCha8Rng, n: usize) -> AffineMap {
    AffineMap { linear: random_invertible(rng, n), shift: random_point(rng, n) }
}

fn flags_affine(rng: &mut ChaCha8Rng) -> Result<String, String> {
    for name in FRAME_NAMES {
        let fr = catalog_frame(name).expect("catalog");
        let p = random_point(rng, fr.n);
        let base = dims_at(&fr, &p)?;
        for _ in 0..2 {
            let a = random_affine(rng, fr.n);
            let pushed = flags::pushforward(&fr, &a).map_err(|e| e.to_string())?;
            ensure(dims_at(&pushed, &a.apply(&p))? == base, || format!("{name}: dims changed under an affine map"))?;
        }
    }
    Ok("2 maps per catalog frame".into())
}

fn flags_nilpotent(rng: &mut ChaCha8Rng) -> Result<String, String> {
    for name in ["heisenberg", "engel", "free-2-3", "free-3-2"] {
        let alg = catalog_algebra(name).expect("catalog");
        let fields = flags::left_invariant_fields(&alg).map_err(|e| e.to_string())?;
        flags::certify_structure_identity(&alg, &fields).map_err(|e| format!("{name}: {e}"))?;
        let fr = flags::nilpotent_frame(&alg).map_err(|e| e.to_string())?;
        let expect = alg.cumulative_dims();
        for p in [vec![Q::zero(); fr.n], random_point(rng, fr.n)] {
            ensure(dims_at(&fr, &p)? == expect, || format!("{name}: growth differs from {expect:?}"))?;
        }
    }
    Ok("4 algebras".into())
}

fn flags_round_trip(_: &mut ChaCha8Rng) -> Result<String, String> {
    for name in ["heisenberg", "engel", "free-2-3"] {
        let alg = catalog_algebra(name).expect("catalog");
        let fr = flags::nilpotent_frame(&alg).map_err(|e| e.to_string())?;
        let back = parse_frame(&fr.to_text()).map_err(|e| format!("{name}: {e}"))?;
        ensure(back == fr, || format!("{name}: re-parsed frame differs"))?;
        ensure(dims_at(&back, &vec![Q::zero(); fr.n])? == alg.cumulative_dims(), || format!("{name}: growth differs"))?;
    }
    Ok("3 algebras".into())
}

fn ample_gl(rng: &mut ChaCha8Rng) -> Result<String, String> {
    for n in 2..=4 {
        for _ in 0..5 {
            let m: Matrix = (0..n).map(|_| random_vector(rng, n, 4, 3)).collect();
            let w = ampleness::gl_convex_decomposition(&m).map_err(|e| e.to_string())?;
            let d = sign(&linalg::determinant(&m));
            let ok = w.verify(&m, |x| {
                let s = sign(&linalg::determinant(x));
                s != 0 && (d == 0 || s == -d)
            });
            ensure(ok, || format!("witness invalid for {m:?}"))?;
        }
    }
    Ok("15 matrices".into())
}

fn ample_hyperplane(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let fixed: Matrix = (0..3).map(|_| random_vector(rng, 2, 5, 3)).collect();
    let c = ampleness::det_affine_in_free_column(&fixed).map_err(|e| e.to_string())?;
    if c.iter().all(Zero::is_zero) {
        return Ok("degenerate fixed block drawn; skipped".into());
    }
    // a kernel target: free column w with c·w = 0
    let w: Vec<Q> = linalg::nullspace(&[c.clone()], 3).remove(0);
    ensure(dot(&c, &w).is_zero(), || "nullspace vector not in the kernel".into())?;
    let target: Matrix = (0..3).map(|i| vec![fixed[i][0].clone(), fixed[i][1].clone(), w[i].clone()]).collect();
    let cols: Vec<Vec<Q>> = (0..2).map(|j| (0..3).map(|i| fixed[i][j].clone()).collect()).collect();
    let spec = MatrixSpaceSpec::from_columns(3, 3, &cols);
    for s in [1, -1] {
        let out = ampleness::hull_membership_witness(&spec, &target, s, 400, rng.gen()).map_err(|e| e.to_string())?;
        ensure(out == HullOutcome::NotFound, || "hull witness found on the hyperplane".into())?;
    }
    Ok("NotFound for both components".into())
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<Q> {
    loop {
        let v: Vec<Q> = (0..n).map(|_| random_rational(rng, 3, 2)).collect();
        if v.iter().any(|x| !x.is_zero()) {
            return v;
        }
    }
}

fn ample_rank2(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let fr = catalog_frame("heisenberg").expect("catalog");
    let p = vec![Q::zero(); 3];
    for _ in 0..5 {
        let v = random_direction(rng, 3);
        let rep = ampleness::slice_report(&fr, &p, &v, 2).map_err(|e| e.to_string())?;
        let last = rep.last().expect("nonempty").verdict;
        ensure(matches!(last, Verdict::NotAmpleHyperplane | Verdict::TriviallyAmpleFull), || format!("direction {v:?}: {last}"))?;
    }
    Ok("Heisenberg, 5 directions".into())
}

fn ample_rank3(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let fr = catalog_frame("free32").expect("catalog");
    let p = random_point(rng, 6);
    for _ in 0..5 {
        let v = random_direction(rng, 6);
        let rep = ampleness::slice_report(&fr, &p, &v, 2).map_err(|e| e.to_string())?;
        ensure(rep.iter().all(|s| s.verdict != Verdict::NotAmpleHyperplane), || format!("direction {v:?} gave a hyperplane verdict"))?;
    }
    Ok("free rank-3 step-2 frame, 5 directions".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        assert_eq!("jet".parse::<Suite>().unwrap(), Suite::Jet);
        assert!("all".parse::<Suite>().is_err());
    }

    #[test]
    fn hall_suite_passes() {
        let out = run_suites(&[Suite::Hall], 1);
        assert_eq!(out.len(), 4);
        assert!(out.iter().all(|o| o.passed), "{out:?}");
    }

    #[test]
    fn tree_counts() {
        // k^len leaf labelings times Catalan(len-1) shapes
        assert_eq!(all_trees(2, 3).len(), 8 * 2);
        assert_eq!(all_trees(3, 4).len(), 81 * 5);
    }
}
