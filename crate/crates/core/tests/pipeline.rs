use aip_core::aip::{lft_solve, validate, verify_solution, ResolventMatrix, VerifyOptions};
use aip_core::io::{FunctionFile, InstanceFile};
use aip_core::rational::{krein_langer_left, RationalMatrixFunction};
use aip_core::scalar::unimodular;
use aip_core::{Mat64, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn solve_and_check(file: &InstanceFile, eps: C64) -> RationalMatrixFunction<f64> {
    let text = serde_json::to_string_pretty(file).unwrap();
    let file: InstanceFile = serde_json::from_str(&text).unwrap();
    let data = file.to_data().unwrap();
    let v = validate(&data);
    assert!(v.ok(), "{:?}", v.failed_codes());

    let w = ResolventMatrix::new(&data).unwrap();
    let sol = lft_solve(&w, &RationalMatrixFunction::constant(Mat64::from_element(1, 1, eps))).unwrap();
    assert!(sol.admissible);
    let s = sol.realization().expect("realization").clone();

    let res = file.interpolation.as_ref().unwrap().residuals(&s).unwrap();
    assert!(res.iter().all(|r| r.is_some_and(|r| r < 1e-9)), "{res:?}");

    let report = verify_solution(&data, &s, &VerifyOptions::default()).unwrap();
    assert!(report.accepted, "{report:?}");
    assert_eq!(report.kappa_target, v.kappa.unwrap());

    // through the function file format and back
    let ff = FunctionFile::from_function(&s);
    let back = serde_json::from_str::<FunctionFile>(&serde_json::to_string(&ff).unwrap()).unwrap().to_function().unwrap();
    for k in 0..16 {
        let z = unimodular(0.4 * k as f64) * 0.7;
        assert!((back.evaluate(z).unwrap() - s.evaluate(z).unwrap()).norm() < 1e-12);
    }
    s
}

#[test]
fn nevanlinna_pick_end_to_end() {
    let nodes = [c(0.0, 0.0), c(0.5, 0.1), c(-0.3, -0.4)];
    let values = [c(0.2, 0.1), c(-0.1, 0.3), c(0.4, -0.2)];
    let file = InstanceFile::nevanlinna_pick(&nodes, &values).unwrap();
    let s = solve_and_check(&file, c(0.3, -0.2));
    for k in 0..64 {
        let t = unimodular(k as f64 * std::f64::consts::TAU / 64.0);
        assert!(s.evaluate(t).unwrap()[(0, 0)].norm() <= 1.0 + 1e-9);
    }
}

#[test]
fn indefinite_pick_end_to_end() {
    let nodes = [c(0.2, 0.0), c(-0.1, 0.5), c(0.0, -0.3)];
    let values = [c(0.3, 0.1), c(1.6, 0.4), c(0.1, -0.5)];
    let file = InstanceFile::nevanlinna_pick(&nodes, &values).unwrap();
    let kappa = validate(&file.to_data().unwrap()).kappa.unwrap();
    assert!(kappa >= 1);
    let s = solve_and_check(&file, c(0.0, -0.4));
    let kl = krein_langer_left(&s).unwrap();
    assert_eq!(kl.blaschke_part.degree(), kappa);
    let pts: Vec<C64> = (0..20).map(|k| unimodular(0.3 * k as f64) * 0.6).collect();
    assert!(kl.reconstruction_residual(&s, &pts).unwrap() < 1e-9);
}
