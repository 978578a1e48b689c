use num_complex::Complex64;
use proptest::prelude::*;
use qlatent::encoding::{Encoding, Family};
use qlatent::functions::FunctionSpec;
use qlatent::lse::{assemble_lse, assemble_operator, solve_lse, solve_problem};
use qlatent::model::{Solution, TermSpec};
use qlatent::problem::{preset, Condition, DimensionSpec, TrainConfig};
use qlatent::training::Objective;

fn problem(terms: Vec<TermSpec>, f0: f64, qubits: usize) -> qlatent::problem::ProblemSpec {
    let mut p = preset("linear_damped").unwrap();
    p.dimensions = vec![DimensionSpec { family: Family::Chebyshev, qubits }];
    p.ansatz.rotation_layers = 1;
    p.terms = terms;
    p.initial = vec![Condition { point: vec![0.0], value: f0 }];
    p.analytic = None;
    p
}

fn exp_problem() -> qlatent::problem::ProblemSpec {
    problem(vec![TermSpec::model(1.0, vec![1], 1), TermSpec::model(-1.0, vec![], 1)], 1.0, 4)
}

#[test]
fn linear_solution_is_exact() {
    let p = problem(vec![TermSpec::model(1.0, vec![1], 1), TermSpec::source(-2.0, FunctionSpec::Const { value: 1.0 })], 0.0, 3);
    let (s, sol) = solve_problem(&p).unwrap();
    assert!(s.residual < 1e-10);
    for i in 0..=40 {
        let x = -1.0 + 0.05 * i as f64;
        assert!((sol.eval(&[x]).unwrap() - Complex64::new(2.0 * x, 0.0)).norm() < 1e-10);
    }
}

/// Degree-15 interpolant of e^x on the 16 Chebyshev-Gauss nodes, evaluated
/// by barycentric interpolation.
fn exp_interpolant(x: f64) -> f64 {
    let n = 16;
    let nodes: Vec<f64> = (0..n).map(|k| ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos()).collect();
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, xk) in nodes.iter().enumerate() {
        if (x - xk).abs() < 1e-15 {
            return xk.exp();
        }
        let w = (if k % 2 == 0 { 1.0 } else { -1.0 }) * ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).sin();
        num += w / (x - xk) * xk.exp();
        den += w / (x - xk);
    }
    num / den
}

#[test]
fn exponential_matches_spectral_interpolant() {
    let (_, sol) = solve_problem(&exp_problem()).unwrap();
    let mut sup_truth = 0.0f64;
    let mut sup_interp = 0.0f64;
    for i in 0..=200 {
        let x = -1.0 + 0.01 * i as f64;
        let v = sol.eval(&[x]).unwrap().re;
        sup_truth = sup_truth.max((v - x.exp()).abs());
        sup_interp = sup_interp.max((v - exp_interpolant(x)).abs());
    }
    assert!(sup_truth < 1e-10, "{sup_truth}");
    assert!(sup_interp < 1e-8, "{sup_interp}");
}

#[test]
fn lse_solution_has_small_variational_loss() {
    let p = exp_problem();
    let (s, _) = solve_problem(&p).unwrap();
    let cfg = TrainConfig { p: 1.0, eta: 1.0, ..TrainConfig::default() };
    let obj = Objective::new(&p, &cfg).unwrap();
    let mixture = Solution::from_coefficients(p.encodings().unwrap(), s.coefficients).unwrap().state;
    let l = obj.evaluate_mixture(&mixture, 0).unwrap();
    assert!(l.l_de + l.l_init <= 1e-6, "{l:?}");
}

#[test]
fn damped_source_right_hand_side() {
    let p = preset("linear_damped").unwrap();
    let sys = assemble_operator(&p).unwrap();
    let enc = Encoding::chebyshev(4).unwrap();
    let f = FunctionSpec::DampedSource { kappa: 1.0, lambda: 2.0 * std::f64::consts::PI };
    let loaded = qlatent::arith::load_function(&enc, |x| f.eval(&[x])).unwrap().coefficients();
    for (a, b) in sys.g.iter().zip(&loaded) {
        assert!((a + b).norm() < 1e-10);
    }
    let (s, sol) = solve_problem(&p).unwrap();
    assert!(!s.rank_deficient);
    let truth = FunctionSpec::DampedOscillator { kappa: 1.0, lambda: 2.0 * std::f64::consts::PI };
    for x in [-0.7, 0.0, 0.3, 0.9] {
        assert!((sol.eval(&[x]).unwrap().re - truth.eval(&[x])).abs() < 1e-2);
    }
}

#[test]
fn rank_deficient_flagged() {
    let mut p = problem(vec![TermSpec::model(1.0, vec![1], 1)], 0.0, 3);
    p.initial.clear();
    let sys = assemble_lse(&p).unwrap();
    let s = solve_lse(&sys).unwrap();
    assert!(s.rank_deficient);
    assert!(s.coefficients.iter().all(|c| c.norm() < 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn operator_commutes_with_evaluation(
        coeffs in prop::collection::vec(-1.0f64..1.0, 8),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        xs in prop::collection::vec(-0.95f64..0.95, 20),
    ) {
        let g = FunctionSpec::Series { coefficients: vec![0.5, 1.0] };
        let terms = vec![
            TermSpec::model(a, vec![1], 1),
            TermSpec::model(b, vec![], 1),
            TermSpec::model(1.0, vec![], 1).with_function(g.clone()),
        ];
        let p = problem(terms, 0.0, 3);
        let sys = assemble_operator(&p).unwrap();
        let v = nalgebra::DVector::from_iterator(8, coeffs.iter().map(|&c| Complex64::new(c, 0.0)));
        let dv = &sys.d * &v;
        let ctx = qlatent::model::TermContext::new(&sys.encodings, &p.terms, Default::default()).unwrap();
        let work = Solution::from_coefficients(ctx.working_encodings().to_vec(), dv.iter().cloned().collect()).unwrap();
        let f = Solution::from_coefficients(sys.encodings.clone(), v.iter().cloned().collect()).unwrap();
        for x in xs {
            let fx = f.eval(&[x]).unwrap().re;
            let dfx = f.derivative(&[x], 0).unwrap().re;
            let want = a * dfx + b * fx + g.eval(&[x]) * fx;
            let got = work.eval(&[x]).unwrap().re;
            prop_assert!((got - want).abs() <= 1e-6 * want.abs().max(1.0), "{got} vs {want}");
        }
    }
}
