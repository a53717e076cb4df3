use steinlab::gamma_calculus::{check_criteria, iterated_gamma, point_grid, random_test_set, rat, Diffusion1D, RPoly};
use steinlab::measures::Poly1;

#[test]
fn carre_du_champ_is_a_times_square_derivative() {
    let f = RPoly::from_ints(&[2, -1, 0, 3]);
    let d = f.derivative();
    for diff in [Diffusion1D::ornstein_uhlenbeck(), Diffusion1D::jacobi(), Diffusion1D::laguerre(0.5).unwrap()] {
        assert_eq!(iterated_gamma(&diff, 1, &f).unwrap(), diff.a.mul(&d).mul(&d), "{}", diff.name);
    }
}

#[test]
fn laguerre_gamma2_on_basis() {
    // Γ₂(f) = x² f''² + x f' f'' + ½(p + x) f'² for a = x, b = p - x
    let p = 3;
    let l = Diffusion1D::laguerre(p as f64).unwrap();
    let x = RPoly::x();
    for deg in 1..=5 {
        let mut c = vec![0; deg + 1];
        c[deg] = 1;
        let f = RPoly::from_ints(&c);
        let (d1, d2) = (f.derivative(), f.nth_derivative(2));
        let want = x
            .mul(&x)
            .mul(&d2)
            .mul(&d2)
            .add(&x.mul(&d1).mul(&d2))
            .add(&RPoly::from_ints(&[p, 1]).mul(&d1).mul(&d1).scale(&rat(1, 2)));
        assert_eq!(iterated_gamma(&l, 2, &f).unwrap(), want, "x^{deg}");
    }
}

#[test]
fn log_concave_operator_matches_ou_for_quadratic_potential() {
    let lc = Diffusion1D::log_concave(&Poly1::new(vec![0.0, 0.0, 0.5])).unwrap();
    let ou = Diffusion1D::ornstein_uhlenbeck();
    let f = RPoly::from_ints(&[1, 4, -2, 0, 1]);
    for n in 1..=3 {
        assert_eq!(iterated_gamma(&lc, n, &f).unwrap(), iterated_gamma(&ou, n, &f).unwrap());
    }
}

#[test]
fn criteria_detect_too_much_curvature() {
    let ou = Diffusion1D::ornstein_uhlenbeck();
    let tests = random_test_set(50, 4, 2);
    assert!(check_criteria(&ou, 1.0, 1.0, 1.0, &tests, &point_grid(&ou)).unwrap().pass);
    assert!(!check_criteria(&ou, 1.5, 1.0, 1.0, &tests, &point_grid(&ou)).unwrap().pass);
    assert_eq!(random_test_set(50, 4, 2), tests);
}
