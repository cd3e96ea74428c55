use num_traits::ToPrimitive;
use proptest::prelude::*;
use superconv::fem2d_tri::{build_symmetric_mesh, MeshParams, TriMesh2D};
use superconv::polyalg::series::rat;
use superconv::polyalg::{f_apply, LegendreCoeffs, Parity};
use superconv::quadrature::{GaussRule, TriangleRule};
use superconv::spline1d::{Partition1D, SplineSpace1D};

/// Legendre series with small rational coefficients and no constant term.
fn mean_free_series() -> impl Strategy<Value = LegendreCoeffs> {
    prop::collection::vec((-20i64..=20, 1i64..=12), 1..9).prop_map(|c| {
        let mut coeffs = vec![rat(0, 1)];
        coeffs.extend(c.into_iter().map(|(n, d)| rat(n, d)));
        LegendreCoeffs::new(coeffs)
    })
}

fn pure_parity_series() -> impl Strategy<Value = (LegendreCoeffs, bool)> {
    (mean_free_series(), any::<bool>()).prop_map(|(p, even)| {
        let coeffs = p
            .coeffs()
            .iter()
            .enumerate()
            .map(|(j, c)| if (j % 2 == 0) == even { c.clone() } else { rat(0, 1) })
            .collect();
        (LegendreCoeffs::new(coeffs), even)
    })
}

proptest! {
    #[test]
    fn transform_is_a_mean_free_antiderivative(p in mean_free_series()) {
        let q = f_apply(&p).unwrap();
        prop_assert_eq!(q.derivative(), p);
        prop_assert_eq!(q.mean(), rat(0, 1));
    }

    #[test]
    fn transform_flips_parity((p, even) in pure_parity_series()) {
        prop_assume!(!p.is_zero());
        let q = f_apply(&p).unwrap();
        let want = if even { Parity::Odd } else { Parity::Even };
        prop_assert_eq!(p.parity(), if even { Parity::Even } else { Parity::Odd });
        prop_assert_eq!(q.parity(), want);
    }

    #[test]
    fn monomial_round_trip(p in mean_free_series()) {
        prop_assert_eq!(LegendreCoeffs::from_monomial(&p.to_monomial()), p);
    }

    #[test]
    fn float_and_exact_evaluation_agree(p in mean_free_series(), x in -1.0f64..1.0) {
        let num = (x * 1024.0).round() as i64;
        let exact = p.eval_exact(&rat(num, 1024));
        let approx = p.eval(num as f64 / 1024.0);
        let exact_f = exact.to_f64().unwrap();
        prop_assert!((exact_f - approx).abs() <= 1e-10 * (1.0 + exact_f.abs()));
    }

    #[test]
    fn perturbed_partitions_stay_ordered(n in 2usize..60, rho in 0.0f64..0.49, seed in any::<u64>()) {
        let part = Partition1D::uniform(0.0, 1.0, n).unwrap().perturbed(rho, seed).unwrap();
        let bp = part.breakpoints();
        prop_assert_eq!(bp.len(), n + 1);
        prop_assert!(bp.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!((bp[0], bp[n]), (0.0, 1.0));
        let fine = part.refine();
        prop_assert_eq!(fine.n_elements(), 2 * n);
        prop_assert_eq!(Partition1D::from_text(&part.to_text()).unwrap(), part);
    }

    #[test]
    fn bsplines_partition_unity(
        n in 2usize..20,
        (k, mu) in (2usize..6).prop_flat_map(|k| (Just(k), 0..k)),
        seed in any::<u64>(),
        x in 0.0f64..=1.0,
    ) {
        let part = Partition1D::uniform(0.0, 1.0, n).unwrap().perturbed(0.3, seed).unwrap();
        let space = SplineSpace1D::new(part, k, mu).unwrap();
        prop_assert_eq!(space.dim(), (k + 1) + (n - 1) * (k - mu));
        let e = space.partition().element_of(x).unwrap();
        let values = space.basis_eval_on_element(e, x, 0);
        prop_assert!(values.iter().all(|&v| v >= -1e-14));
        prop_assert!((values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let slopes = space.basis_eval_on_element(e, x, 1);
        let scale = n as f64 * k as f64;
        prop_assert!(slopes.iter().sum::<f64>().abs() < 1e-10 * scale);
    }

    #[test]
    fn gauss_rules_are_exact(n in 1usize..12, p in 0usize..23) {
        prop_assume!(p < 2 * n);
        let rule = GaussRule::new(n);
        let got: f64 = rule.mapped(0.0, 2.0).map(|(x, w)| w * x.powi(p as i32)).sum();
        let want = 2f64.powi(p as i32 + 1) / (p as f64 + 1.0);
        prop_assert!((got - want).abs() < 1e-12 * want);
    }
}

fn reference_moment(a: i32, b: i32) -> f64 {
    // Integral of x^a y^b over the unit reference triangle.
    let fact = |n: i32| (1..=n).map(f64::from).product::<f64>();
    fact(a) * fact(b) / fact(a + b + 2)
}

#[test]
fn triangle_rules_reach_their_degree() {
    for degree in 1..=8 {
        let rule = TriangleRule::symmetric(degree);
        let total: f64 = rule.weights.iter().sum();
        for a in 0..=degree as i32 {
            for b in 0..=(degree as i32 - a) {
                // Weights are normalized to the triangle area.
                let got: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w / total * 0.5 * p[1].powi(a) * p[2].powi(b))
                    .sum();
                let want = reference_moment(a, b);
                assert!((got - want).abs() < 1e-12, "degree {degree}, x^{a} y^{b}: {got} vs {want}");
            }
        }
    }
}

fn check_mesh(mesh: &TriMesh2D) -> Result<(), TestCaseError> {
    prop_assert!(mesh.is_valid());
    let total: f64 = (0..mesh.n_triangles()).map(|t| mesh.area(t)).sum();
    prop_assert!((total - 1.0).abs() < 1e-12);
    prop_assert!(mesh.patch_symmetry_defect() < 1e-13);
    prop_assert_eq!(mesh.vertices[mesh.patch.center_vertex], mesh.patch.center);
    for (v, p) in mesh.vertices.iter().enumerate() {
        let on_edge = p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0;
        prop_assert_eq!(mesh.boundary[v], on_edge);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn perturbed_meshes_are_valid(n in 20usize..48, rho in 0.0f64..0.3, seed in any::<u64>()) {
        let mut params = MeshParams::new(n);
        params.rho = rho;
        params.seed = seed;
        let mesh = build_symmetric_mesh(&params).unwrap();
        check_mesh(&mesh)?;
        prop_assert_eq!(mesh.n_vertices(), (n + 1) * (n + 1));
        prop_assert_eq!(mesh.n_triangles(), 2 * n * n);
        let again = TriMesh2D::from_text(&mesh.to_text()).unwrap();
        prop_assert_eq!(again.vertices, mesh.vertices);
        prop_assert_eq!(again.triangles, mesh.triangles);
    }
}
