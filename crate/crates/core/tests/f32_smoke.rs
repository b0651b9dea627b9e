use aip_core::aip::{encode_nevanlinna_pick, lft_solve, random_instance, ResolventMatrix};
use aip_core::colligation::random_colligation;
use aip_core::pontryagin::inertia;
use aip_core::rational::RationalMatrixFunction;
use aip_core::scalar::{cplx, unimodular};
use aip_core::CMatrix;
use num_complex::Complex32;

#[test]
fn colligation_in_single_precision() {
    let c = random_colligation::<f32>(3, 2, 1, 11).unwrap();
    assert!(c.unitarity_residual() < 1e-4, "{}", c.unitarity_residual());
    assert_eq!(c.kappa_state(), 1);
    let s = c.characteristic_function();
    let v = s.evaluate(cplx::<f32>(0.2, -0.1)).unwrap();
    assert_eq!(v.shape(), (2, 2));
}

#[test]
fn resolvent_identity_in_single_precision() {
    let d = random_instance::<f32>(3, 1, 1, 1, false, 5).unwrap();
    let w = ResolventMatrix::new(&d).unwrap();
    let r = w.identity_residual(cplx(0.3, 0.2), cplx(-0.1, 0.5)).unwrap();
    assert!(r < 1e-3, "{r}");
}

#[test]
fn pick_solution_in_single_precision() {
    let nodes: Vec<Complex32> = vec![cplx(0.1, 0.2), cplx(-0.4, 0.1)];
    let values: Vec<Complex32> = vec![cplx(0.3, 0.0), cplx(0.1, 0.2)];
    let d = encode_nevanlinna_pick(&nodes, &values).unwrap();
    assert_eq!(inertia(&d.p, 1e-5).unwrap().n_minus, 0);
    let w = ResolventMatrix::new(&d).unwrap();
    let eps = RationalMatrixFunction::constant(CMatrix::from_element(1, 1, cplx::<f32>(0.25, 0.1)));
    let sol = lft_solve(&w, &eps).unwrap();
    assert!(sol.admissible);
    for (z, w) in nodes.iter().zip(&values) {
        let got = sol.evaluate(*z).unwrap()[(0, 0)];
        assert!((got - w).norm() < 1e-3, "{got} vs {w}");
    }
    assert!(sol.evaluate(unimodular(0.7f32)).unwrap()[(0, 0)].norm() <= 1.0 + 1e-4);
}
