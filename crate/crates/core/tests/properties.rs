use proptest::prelude::*;

use steinlab::gamma_calculus::{Diffusion1D, RPoly};
use steinlab::gauss_functionals::{carre_du_champ, eigen_check, fourth_moment_bound, ou_apply, PolyFunctional};
use steinlab::inequalities::{hsi_rhs, hwsi_phi, wsh_rhs, HwsiInputs};

const DIM: usize = 3;

fn monomial(exps: &[u32], c: f64) -> PolyFunctional {
    PolyFunctional::monomial(DIM, exps.to_vec(), c)
}

/// Polynomials of degree ≤ 4 in R³ with small integer coefficients.
fn poly() -> impl Strategy<Value = PolyFunctional> {
    prop::collection::vec((prop::array::uniform3(0u32..=2), -3i32..=3), 1..5).prop_map(|terms| {
        terms
            .into_iter()
            .filter(|(e, _)| e.iter().sum::<u32>() <= 4)
            .fold(PolyFunctional::zero(DIM), |acc, (e, c)| acc.add(&monomial(&e, c as f64)))
    })
}

/// A basis of the k-th Wiener chaos on R³ built from Hermite products.
fn chaos_basis(k: usize) -> Vec<PolyFunctional> {
    let x = |i: usize| PolyFunctional::var(DIM, i);
    let h2 = |i: usize| x(i).mul(&x(i)).sub(&PolyFunctional::constant(DIM, 1.0));
    let mut out = Vec::new();
    match k {
        1 => out.extend((0..DIM).map(x)),
        2 => {
            for i in 0..DIM {
                out.push(h2(i));
                for j in i + 1..DIM {
                    out.push(x(i).mul(&x(j)));
                }
            }
        }
        3 => {
            out.push(x(0).mul(&x(1)).mul(&x(2)));
            for i in 0..DIM {
                out.push(x(i).powi(3).sub(&x(i).scale(3.0)));
                for j in 0..DIM {
                    if i != j {
                        out.push(x(i).mul(&h2(j)));
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    out
}

fn chaos(k: usize) -> impl Strategy<Value = PolyFunctional> {
    let basis = chaos_basis(k);
    prop::collection::vec(-3i32..=3, basis.len())
        .prop_filter("nonzero", |c| c.iter().any(|&v| v != 0))
        .prop_map(move |c| basis.iter().zip(&c).fold(PolyFunctional::zero(DIM), |acc, (b, &w)| acc.add(&b.scale(w as f64))))
}

fn rpoly() -> impl Strategy<Value = RPoly> {
    prop::collection::vec(-4i64..=4, 1..5).prop_map(|c| RPoly::from_ints(&c))
}

fn diffusion() -> impl Strategy<Value = Diffusion1D> {
    prop_oneof![
        Just(Diffusion1D::ornstein_uhlenbeck()),
        Just(Diffusion1D::jacobi()),
        Just(Diffusion1D::laguerre(2.5).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integration_by_parts(f in poly(), g in poly()) {
        let lhs = f.mul(&ou_apply(&g)).gaussian_mean().unwrap();
        let rhs = -carre_du_champ(&f, &g).gaussian_mean().unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn carre_du_champ_is_symmetric(f in poly(), g in poly()) {
        prop_assert!(carre_du_champ(&f, &g).sub(&carre_du_champ(&g, &f)).is_empty());
    }

    #[test]
    fn chaos_elements_are_eigenfunctions((k, f) in (1usize..=3).prop_flat_map(|k| chaos(k).prop_map(move |f| (k, f)))) {
        let lambda = eigen_check(&f);
        prop_assert_eq!(lambda, Some(k as f64));
        prop_assert!(ou_apply(&f).add(&f.scale(k as f64)).is_negligible(f.max_abs(), 1e-12));
    }

    #[test]
    fn eigen_check_implies_eigen_equation(f in poly()) {
        if let Some(k) = eigen_check(&f) {
            prop_assert!(ou_apply(&f).add(&f.scale(k)).is_negligible(f.max_abs(), 1e-12));
        }
    }

    #[test]
    fn fourth_moment_bound_holds_on_second_chaos(f in chaos(2)) {
        let r = fourth_moment_bound(&f, 2.0, 1000, 1).unwrap();
        prop_assert!(r.v2.value <= r.bound.value * (1.0 + 1e-12) + 1e-12, "{r:?}");
    }

    #[test]
    fn iterated_gammas_are_symmetric_and_bilinear(d in diffusion(), n in 1usize..=3, f in rpoly(), g in rpoly(), h in rpoly(), a in -3i64..=3) {
        let s = RPoly::from_ints(&[a]);
        prop_assert_eq!(d.gamma_bilinear(n, &f, &g), d.gamma_bilinear(n, &g, &f));
        let left = d.gamma_bilinear(n, &f.mul(&s).add(&h), &g);
        let right = d.gamma_bilinear(n, &f, &g).mul(&s).add(&d.gamma_bilinear(n, &h, &g));
        prop_assert_eq!(left, right);
    }

    #[test]
    fn hsi_and_wsh_dominate(s in 1e-3f64..10.0, i in 1e-3f64..100.0, h in 1e-4f64..5.0) {
        let mut fired = Vec::new();
        prop_assert!(hsi_rhs(s * s, i, &mut fired) <= 0.5 * i + 1e-9);
        prop_assert!(wsh_rhs(s, h, &mut fired) <= (2.0 * h).sqrt() + 1e-9);
    }

    #[test]
    fn hwsi_endpoints(i in 0.01f64..50.0, s in 0.05f64..5.0, w_frac in 0.01f64..0.99) {
        // W₂ ≤ √I keeps the diagonal minimizer inside (0, 1]
        let w2 = w_frac * i.sqrt().min(1.0);
        let v = HwsiInputs { h: 0.0, i, s, w2 };
        let a = w2 / i.sqrt();
        let hwi = w2 * i.sqrt() - 0.5 * w2 * w2;
        prop_assert!((0.5 * hwsi_phi(&v, a, a).unwrap() - hwi).abs() <= 1e-10 * (1.0 + hwi));
        let b = s * s / (i + s * s);
        let hsi = hsi_rhs(s * s, i, &mut Vec::new());
        prop_assert!((0.5 * hwsi_phi(&v, b, 1.0).unwrap() - hsi).abs() <= 1e-10 * (1.0 + hsi));
    }
}
