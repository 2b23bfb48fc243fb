//! Named example frames and algebras.

use crate::flags::{free_nilpotent_algebra, truncate_top_layer, Frame, StratifiedAlgebra};

use super::parser::{parse_algebra, parse_frame};

pub const FRAME_NAMES: &[&str] = &["heisenberg", "martinet", "engel", "cartan", "free32"];

pub const ALGEBRA_NAMES: &[&str] = &["heisenberg", "engel", "free-2-3", "free-3-2", "free-3-3", "free-4-2", "trunc-3-6-8", "trunc-4-10-11"];

pub fn catalog_frame_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "heisenberg" => "dim 3\nX1 = d1\nX2 = d2 + x1*d3\n",
        "martinet" => "dim 3\nX1 = d1\nX2 = d2 + x1^2*d3\n",
        "engel" => "dim 4\nX1 = d1\nX2 = d2 + x1*d3 + 1/2*x1^2*d4\n",
        "cartan" => "dim 5\nX1 = d1\nX2 = d2 + x1*d3 + 1/2*x1^2*d4 + x1*x2*d5\n",
        "free32" => "dim 6\nX1 = d1\nX2 = d2 + x1*d4\nX3 = d3 + x1*d5 + x2*d6\n",
        _ => return None,
    })
}

pub fn catalog_frame(name: &str) -> Option<Frame> {
    catalog_frame_text(name).map(|t| parse_frame(t).expect("catalog frame parses"))
}

pub fn catalog_algebra(name: &str) -> Option<StratifiedAlgebra> {
    let text = match name {
        "heisenberg" => "layers 2 1\nbracket e1 e2 = e3\n",
        "engel" => "layers 2 1 1\nbracket e1 e2 = e3\nbracket e1 e3 = e4\n",
        "free-2-3" => return free_nilpotent_algebra(2, 3).ok(),
        "free-3-2" => return free_nilpotent_algebra(3, 2).ok(),
        "free-3-3" => return free_nilpotent_algebra(3, 3).ok(),
        "free-4-2" => return free_nilpotent_algebra(4, 2).ok(),
        "trunc-3-6-8" => return truncate_top_layer(&free_nilpotent_algebra(3, 3).ok()?, 2).ok(),
        "trunc-4-10-11" => return truncate_top_layer(&free_nilpotent_algebra(4, 3).ok()?, 1).ok(),
        _ => return None,
    };
    Some(parse_algebra(text).expect("catalog algebra parses"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flags::{lie_flag, validate_algebra};
    use crate::rational::Q;
    use num_traits::Zero;

    #[test]
    fn catalog_growth_at_origin() {
        let expect: &[(&str, &[usize])] = &[
            ("heisenberg", &[2, 3]),
            ("martinet", &[2, 2, 3]),
            ("engel", &[2, 3, 4]),
            ("cartan", &[2, 3, 5]),
            ("free32", &[3, 6]),
        ];
        for (name, dims) in expect {
            let fr = catalog_frame(name).unwrap();
            let rep = lie_flag(&fr, &vec![Q::zero(); fr.n], None).unwrap();
            assert_eq!(rep.dims, *dims, "{name}");
        }
    }

    #[test]
    fn catalog_algebras_validate() {
        for name in ALGEBRA_NAMES {
            let alg = catalog_algebra(name).unwrap();
            assert!(validate_algebra(&alg).valid, "{name}");
        }
        assert_eq!(catalog_algebra("trunc-3-6-8").unwrap().cumulative_dims(), vec![3, 6, 8]);
        assert_eq!(catalog_algebra("trunc-4-10-11").unwrap().cumulative_dims(), vec![4, 10, 11]);
        assert!(catalog_algebra("nope").is_none());
    }
}
