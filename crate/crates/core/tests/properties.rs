//! Property tests for the symbol algebra and the norm evaluators.

use kms_core::norms::{hom_sobolev_norm, lp_norm};
use kms_core::spectral::{Field, Grid};
use kms_core::symbols::{
    default_tol, image_basis, kernel_projector, presets, subspace_intersect, DiffOp, MultiIndex,
    PartMap,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn catalog_op(which: u8) -> DiffOp {
    let names = ["grad", "curl3", "matrix_curl3", "matrix_div", "sym_curl3"];
    presets::operator_preset(names[which as usize % names.len()]).unwrap()
}

fn unit_xi() -> impl Strategy<Value = [f64; 3]> {
    ([-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0]).prop_filter_map("nonzero direction", |v| {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm < 1e-3 {
            None
        } else {
            Some([v[0] / norm, v[1] / norm, v[2] / norm])
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symbol_is_homogeneous_of_order_k(which in 0u8..5, xi in unit_xi(), t in -4.0f64..4.0) {
        prop_assume!(t.abs() > 1e-3);
        let op = catalog_op(which);
        let scaled_xi: Vec<f64> = xi.iter().map(|x| t * x).collect();
        let lhs = op.eval_symbol(&scaled_xi).unwrap();
        let rhs = op.eval_symbol(&xi).unwrap() * t.powi(op.order() as i32);
        let scale = rhs.norm().max(1e-12);
        prop_assert!((lhs - rhs).norm() <= 1e-10 * scale);
    }

    #[test]
    fn kernel_projector_laws_hold_on_the_sphere(which in 0u8..5, xi in unit_xi()) {
        let op = catalog_op(which);
        let m = op.eval_symbol(&xi).unwrap();
        let tol = default_tol(op.dim_f(), op.dim_e());
        let p = kernel_projector(&m, tol);
        let scale = m.norm().max(1.0);
        prop_assert!((&p * &p - &p).norm() <= 1e-10);
        prop_assert!((p.transpose() - &p).norm() <= 1e-10);
        prop_assert!((m * &p).norm() <= 1e-10 * scale);
    }

    #[test]
    fn restriction_symbol_factors_through_kernel_basis(xi in unit_xi(), pm in 0u8..3) {
        let names = ["tr", "dev", "sym"];
        let op = presets::operator_preset("matrix_curl3").unwrap();
        let a = presets::partmap_preset(names[pm as usize % 3], 9).unwrap();
        let restricted = op.restrict_to_kernel(&a).unwrap();
        let lhs = restricted.eval_symbol(&xi).unwrap();
        let rhs = op.eval_symbol(&xi).unwrap() * a.kernel_basis();
        let scale = rhs.norm().max(1.0);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * scale);
    }

    #[test]
    fn intersection_dimension_is_monotone(
        entries1 in proptest::collection::vec(-1.0f64..1.0, 20),
        entries2 in proptest::collection::vec(-1.0f64..1.0, 15),
    ) {
        let m1 = DMatrix::from_vec(5, 4, entries1);
        let m2 = DMatrix::from_vec(5, 3, entries2);
        let s1 = image_basis(&m1, default_tol(5, 4));
        let s2 = image_basis(&m2, default_tol(5, 3));
        let meet = subspace_intersect(&s1, &s2, 1e-8).unwrap();
        prop_assert!(meet.dim() <= s1.dim().min(s2.dim()));
    }

    #[test]
    fn part_map_bound_dominates_random_vectors(entries in proptest::collection::vec(-1.0f64..1.0, 9)) {
        let a = presets::partmap_preset("tr", 9).unwrap();
        let v = nalgebra::DVector::from_vec(entries);
        let perp = a.complement_projector() * &v;
        let av = a.matrix() * &v;
        prop_assert!(perp.norm() <= a.part_map_bound() * av.norm() * (1.0 + 1e-10) + 1e-12);
    }
}

proptest! {
    // Field-level checks run a few FFTs each, keep the case count small.
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn norms_are_homogeneous_and_subadditive(
        seed in 0u64..1000,
        q_idx in 0usize..3,
        scale in -3.0f64..3.0,
    ) {
        prop_assume!(scale.abs() > 1e-3);
        let q = [1.0, 1.5, 2.0][q_idx];
        let grid = Grid::standard(2, 8).unwrap();
        let f = kms_core::lab::random_band_limited(&grid, 2, 3, seed, 0).unwrap();
        let g = kms_core::lab::random_band_limited(&grid, 2, 3, seed, 1).unwrap();

        let nf = lp_norm(&f, q);
        prop_assert!((lp_norm(&f.scaled(scale), q) - scale.abs() * nf).abs() <= 1e-10 * nf.max(1.0));

        let mut sum = f.clone();
        for (a, b) in sum.values_mut().iter_mut().zip(g.values()) {
            *a += b;
        }
        prop_assert!(lp_norm(&sum, q) <= (nf + lp_norm(&g, q)) * (1.0 + 1e-10));

        let sob = hom_sobolev_norm(&f, 1, q).unwrap();
        let sob2 = hom_sobolev_norm(&f.scaled(scale), 1, q).unwrap();
        prop_assert!((sob2 - scale.abs() * sob).abs() <= 1e-10 * sob.max(1.0));
    }

    #[test]
    fn zero_map_restriction_preserves_symbol_ranks(xi in unit_xi()) {
        let op = presets::operator_preset("curl3").unwrap();
        let zero = PartMap::new(DMatrix::zeros(1, 3)).unwrap();
        let restricted = op.restrict_to_kernel(&zero).unwrap();
        let tol = default_tol(3, 3);
        let r1 = image_basis(&op.eval_symbol(&xi).unwrap(), tol).dim();
        let r2 = image_basis(&restricted.eval_symbol(&xi).unwrap(), tol).dim();
        prop_assert_eq!(r1, r2);
    }
}

#[test]
fn part_map_bound_is_attained_by_minimal_singular_vector() {
    for name in ["tr", "dev", "sym", "id"] {
        let a = presets::partmap_preset(name, 9).unwrap();
        let c = a.part_map_bound();
        // Scan the complement for the worst direction via SVD of A.
        let svd = a.matrix().clone().svd(false, true);
        let vt = svd.v_t.unwrap();
        let sv = svd.singular_values;
        let mut worst = f64::NEG_INFINITY;
        for i in 0..sv.len() {
            if sv[i] > 1e-9 {
                let v = vt.row(i).transpose();
                let perp = a.complement_projector() * &v;
                let av = a.matrix() * &v;
                worst = worst.max(perp.norm() / av.norm());
            }
        }
        assert!(worst >= (1.0 - 1e-8) * c, "{name}: worst {worst} vs bound {c}");
    }
}

#[test]
fn multi_index_monomial_matches_directly() {
    let alpha = MultiIndex::new(vec![2, 0, 1]);
    let xi = [1.5, -0.3, 2.0];
    assert_eq!(alpha.monomial(&xi), 1.5f64.powi(2) * 2.0);
    assert_eq!(alpha.order(), 3);
    let grid_independent = Field::from_fn(Grid::standard(3, 8).unwrap(), 1, |_, _| 1.0);
    assert_eq!(grid_independent.dim_v(), 1);
}
