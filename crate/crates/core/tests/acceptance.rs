//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line.

use std::io::Write;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use qlatent::arith::{apply_multiplier, build_adder, build_mod, build_subtractor, multiply_oracle};
use qlatent::encoding::{Encoding, Family};
use qlatent::functions::FunctionSpec;
use qlatent::lse::solve_problem;
use qlatent::model::{Solution, TermSpec};
use qlatent::problem::{preset, preset_names, Condition, DimensionSpec, ProblemSpec, TrainConfig};
use qlatent::sim::{qft_circuit, Circuit, Gate, Statevector};
use qlatent::training::{grid, hadamard_test, train_seeds, Objective, OverlapPart, TrainingReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> Statevector {
    let amps = (0..1usize << n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    Statevector::from_amplitudes(amps).unwrap().normalize().unwrap().0
}

fn vnorm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn best_by_rmse(reports: &[TrainingReport]) -> &TrainingReport {
    reports
        .iter()
        .min_by(|a, b| a.metrics.unwrap().rmse.total_cmp(&b.metrics.unwrap().rmse))
        .unwrap()
}

fn median(mut v: Vec<usize>) -> usize {
    v.sort_unstable();
    v[v.len() / 2]
}

fn linear_damped() -> Verdict {
    let p = preset("linear_damped").unwrap();
    let start = Instant::now();
    let (_, reports) = train_seeds(&p, &p.train, &SEEDS).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let best = best_by_rmse(&reports).metrics.unwrap();
    verdict(
        best.rmse <= 5e-2 && best.derivative_rmse <= 2e-1 && secs <= 600.0,
        format!("rmse {:.3e} (<= 5e-2), derivative rmse {:.3e} (<= 2e-1), {secs:.1}s for 5 seeds", best.rmse, best.derivative_rmse),
    )
}

fn shifted_vs_regular() -> Verdict {
    let threshold = 0.1;
    let shifted = preset("shifted_linear").unwrap();
    let mut regular = shifted.clone();
    regular.model.shifted = false;
    let cap = 60_000;
    let cfg = TrainConfig { epochs: cap, early_stop: Some(threshold), ..shifted.train.clone() };
    let (_, runs) = train_seeds(&shifted, &cfg, &SEEDS).unwrap();
    // unreached runs count as cap + 1 (a lower bound)
    let s: Vec<usize> = runs.iter().map(|r| r.epochs_to_reach(threshold).unwrap_or(cap + 1)).collect();
    let s_med = median(s.clone());
    if s_med > cap {
        return verdict(false, format!("shifted model did not reach {threshold} within {cap} epochs: {s:?}"));
    }
    // the regular model only has to be followed until it is provably 3x slower
    let reg_cap = 3 * s_med;
    let cfg = TrainConfig { epochs: reg_cap, ..cfg };
    let (_, runs) = train_seeds(&regular, &cfg, &SEEDS).unwrap();
    let reached: Vec<Option<usize>> = runs.iter().map(|r| r.epochs_to_reach(threshold)).collect();
    let r_med = median(reached.iter().map(|r| r.unwrap_or(reg_cap + 1)).collect());
    let shown: Vec<String> = reached.iter().map(|r| r.map_or(format!(">{reg_cap}"), |e| e.to_string())).collect();
    verdict(
        3 * s_med <= r_med,
        format!("epochs to loss < {threshold}: shifted {s:?} (median {s_med}), regular [{}] (median >= {r_med})", shown.join(", ")),
    )
}

fn riccati() -> Verdict {
    let p = preset("nonlinear_riccati").unwrap();
    let (_, reports) = train_seeds(&p, &p.train, &SEEDS).unwrap();
    let best = best_by_rmse(&reports);
    let min_loss = best.history.iter().map(|l| l.total).fold(f64::INFINITY, f64::min);
    let rmse = best.metrics.unwrap().rmse;
    verdict(rmse <= 5e-2 && min_loss < 1.0, format!("rmse {rmse:.3e} (<= 5e-2), lowest total loss {min_loss:.3e} (< 1)"))
}

fn multidim() -> Verdict {
    let p = preset("multidim_2d").unwrap();
    let truth = p.analytic.clone().unwrap();
    let (_, reports) = train_seeds(&p, &p.train, &SEEDS).unwrap();
    let pts = grid(&[(-1.0, 1.0), (-1.0, 1.0)], 21);
    let mut best = f64::INFINITY;
    for r in &reports {
        let sol = Solution::from_model(&r.model).unwrap();
        let mean = pts.iter().map(|x| (sol.eval(x).unwrap().re - truth.eval(x)).abs()).sum::<f64>() / pts.len() as f64;
        best = best.min(mean);
    }
    verdict(best <= 1e-2, format!("mean abs deviation on 21x21 grid {best:.3e} (<= 1e-2, stretch 1e-3)"))
}

fn basis_image(c: &Circuit, index: usize) -> Option<usize> {
    let out = c.run(&Statevector::basis_state(c.num_qubits(), index).unwrap()).unwrap().state;
    let (i, a) = out.amplitudes().iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap();
    ((a.norm() - 1.0).abs() < 1e-10).then_some(i)
}

fn multiplier() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst = 0.0f64;
    for family in [Family::Chebyshev, Family::Fourier] {
        for n in 1..=3 {
            let enc = Encoding::new(family, n).unwrap();
            for _ in 0..100 {
                let g = random_state(&mut rng, n);
                let h = random_state(&mut rng, n);
                let gate = apply_multiplier(&enc, &g, &h).unwrap().coefficients();
                let oracle = multiply_oracle(family, n, g.amplitudes(), h.amplitudes()).unwrap();
                for (a, b) in gate.iter().zip(&oracle) {
                    worst = worst.max((a - b).norm());
                }
            }
        }
    }
    let mut arithmetic_ok = true;
    for n in 1..=3usize {
        let pack = |j: usize, k: usize, r: usize| (j << (2 * n + 1)) | (k << (n + 1)) | r;
        let modulus = 1usize << (n + 1);
        let (add, sub, m) = (build_adder(n), build_subtractor(n), build_mod(n));
        for j in 0..1usize << n {
            for k in 0..1usize << n {
                let diff = (j + modulus - k) % modulus;
                arithmetic_ok &= basis_image(&add, pack(j, k, 0)) == Some(pack(j, k, j + k));
                arithmetic_ok &= basis_image(&sub, pack(j, k, 0)) == Some(pack(j, k, diff));
                arithmetic_ok &= basis_image(&m, diff) == Some((usize::from(j < k) << n) | j.abs_diff(k));
            }
        }
    }
    verdict(
        worst <= 1e-10 && arithmetic_ok,
        format!("max |gate - oracle| {worst:.2e} (<= 1e-10) over 600 pairs; adder/subtractor/mod exhaustive n <= 3: {arithmetic_ok}"),
    )
}

fn generators() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let (mut first, mut second) = (0.0f64, 0.0f64);
    for n in 2..=4 {
        for enc in [Encoding::chebyshev(n).unwrap(), Encoding::fourier(n).unwrap()] {
            let g = enc.generator();
            let gd = g.adjoint();
            let gd2 = &gd * &gd;
            let (lo, hi) = enc.domain();
            for _ in 0..50 {
                let x = rng.random_range(lo..hi);
                let h = 1e-5;
                let gv = &g * DVector::from_vec(enc.amplitudes(x));
                let fd: Vec<Complex64> =
                    enc.amplitudes(x + h).iter().zip(enc.amplitudes(x - h)).map(|(a, b)| (a - b) / (2.0 * h)).collect();
                let err: Vec<Complex64> = gv.iter().zip(&fd).map(|(a, b)| a - b).collect();
                first = first.max(vnorm(&err) / vnorm(gv.as_slice()));

                let c = DVector::from_fn(enc.dim(), |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
                let f = |y: f64| enc.decode(c.as_slice(), y);
                let h = 1e-4;
                let fd2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
                let an = enc.decode((&gd2 * &c).as_slice(), x);
                second = second.max((an - fd2).norm() / an.norm().max(1.0));
            }
        }
    }
    verdict(
        first <= 1e-5 && second <= 1e-4,
        format!("generator relative error {first:.2e} (<= 1e-5); second derivative error {second:.2e} (<= 1e-4)"),
    )
}

fn transforms() -> Verdict {
    let (mut unitary, mut gram) = (0.0f64, 0.0f64);
    for n in 1..=4 {
        let qft = qft_circuit(n).matrix().unwrap();
        for enc in [Encoding::chebyshev(n).unwrap(), Encoding::fourier(n).unwrap()] {
            for u in [enc.transform(), qft.clone()] {
                let r = u.adjoint() * &u - DMatrix::identity(u.nrows(), u.ncols());
                unitary = unitary.max(r.iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
            let cols: Vec<Vec<Complex64>> = enc.nodes().iter().map(|&x| enc.amplitudes(x)).collect();
            for (i, a) in cols.iter().enumerate() {
                for (j, b) in cols.iter().enumerate() {
                    let ip: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    gram = gram.max((ip - want).norm());
                }
            }
        }
    }
    verdict(unitary <= 1e-12 && gram <= 1e-10, format!("unitarity residual {unitary:.2e} (<= 1e-12); Gram residual {gram:.2e} (<= 1e-10)"))
}

fn hadamard() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let circuit = |rng: &mut ChaCha8Rng| {
        let mut c = Circuit::new(3);
        for _ in 0..3 {
            for q in 0..3 {
                c.gate(Gate::ry(q, rng.random_range(-3.0..3.0))).gate(Gate::rz(q, rng.random_range(-3.0..3.0)));
            }
            c.gate(Gate::cnot(0, 1)).gate(Gate::cnot(1, 2));
        }
        c
    };
    let shots = 100_000u64;
    let (mut exact_err, mut worst_sigma) = (0.0f64, 0.0f64);
    for k in 0..20 {
        let (u, v) = (circuit(&mut rng), circuit(&mut rng));
        let ip = u.prepare().unwrap().inner(&v.prepare().unwrap()).unwrap();
        for (part, want) in [(OverlapPart::Real, ip.re), (OverlapPart::Imaginary, ip.im)] {
            exact_err = exact_err.max((hadamard_test(&u, &v, part, None, 0).unwrap() - want).abs());
            let est = hadamard_test(&u, &v, part, Some(shots), 1000 + k).unwrap();
            let sigma = ((1.0 - want * want) / shots as f64).sqrt();
            worst_sigma = worst_sigma.max((est - want).abs() / sigma);
        }
    }
    verdict(
        exact_err <= 1e-12 && worst_sigma <= 5.0,
        format!("exact mode error {exact_err:.2e} (<= 1e-12); worst shot deviation {worst_sigma:.2}σ (<= 5σ) at 1e5 shots"),
    )
}

fn single_problem(terms: Vec<TermSpec>, f0: f64, qubits: usize) -> ProblemSpec {
    let mut p = preset("linear_damped").unwrap();
    p.name = "lse_check".into();
    p.dimensions = vec![DimensionSpec { family: Family::Chebyshev, qubits }];
    p.ansatz.rotation_layers = 1;
    p.terms = terms;
    p.initial = vec![Condition { point: vec![0.0], value: f0 }];
    p.analytic = None;
    p
}

fn lse() -> Verdict {
    let linear = single_problem(vec![TermSpec::model(1.0, vec![1], 1), TermSpec::source(-2.0, FunctionSpec::Const { value: 1.0 })], 0.0, 3);
    let (_, sol) = solve_problem(&linear).unwrap();
    let pts: Vec<f64> = (0..=200).map(|i| -1.0 + 0.01 * i as f64).collect();
    let lin_err = pts.iter().map(|&x| (sol.eval(&[x]).unwrap() - Complex64::new(2.0 * x, 0.0)).norm()).fold(0.0, f64::max);

    let exp = single_problem(vec![TermSpec::model(1.0, vec![1], 1), TermSpec::model(-1.0, vec![], 1)], 1.0, 4);
    let (s, sol) = solve_problem(&exp).unwrap();
    let exp_err = pts.iter().map(|&x| (sol.eval(&[x]).unwrap().re - x.exp()).abs()).fold(0.0, f64::max);
    let cfg = TrainConfig { p: 1.0, eta: 1.0, ..TrainConfig::default() };
    let mixture = Solution::from_coefficients(exp.encodings().unwrap(), s.coefficients).unwrap().state;
    let l = Objective::new(&exp, &cfg).unwrap().evaluate_mixture(&mixture, 0).unwrap();
    let loss = l.l_de + l.l_init;
    verdict(
        lin_err <= 1e-10 && exp_err <= 1e-8 && loss <= 1e-6,
        format!("2x error {lin_err:.2e} (<= 1e-10); e^x sup error {exp_err:.2e} (<= 1e-8); l_de + l_init {loss:.2e} (<= 1e-6)"),
    )
}

fn gradients() -> Verdict {
    let mut worst = 0.0f64;
    for name in preset_names() {
        let p = preset(name).unwrap();
        let obj = Objective::new(&p, &p.train).unwrap();
        for draw in 0..10 {
            let model = p.initial_model(500 + draw).unwrap();
            let (_, g) = obj.gradient(&model, 0).unwrap();
            let fd = obj.finite_difference_gradient(&model, 1e-6).unwrap();
            for (a, b) in g.iter().zip(&fd) {
                worst = worst.max((a - b).abs() / b.abs().max(1.0));
            }
        }
    }
    verdict(worst <= 1e-4, format!("max relative deviation {worst:.2e} (<= 1e-4), 4 presets x 10 draws"))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("linear damped oscillator", linear_damped),
        ("shifted vs regular model", shifted_vs_regular),
        ("nonlinear Riccati", riccati),
        ("multidimensional", multidim),
        ("multiplier oracle equivalence", multiplier),
        ("generator correctness", generators),
        ("transforms", transforms),
        ("Hadamard test", hadamard),
        ("LSE path", lse),
        ("gradient integrity", gradients),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        let line = format!("criterion {:>2} {}: {} ({})\n", i + 1, if v.pass { "PASS" } else { "FAIL" }, name, v.detail);
        // written past the test harness capture so the lines always show
        std::io::stderr().write_all(line.as_bytes()).unwrap();
        if !v.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
