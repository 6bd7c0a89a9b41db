use bmos::linalg::SymMatrix;
use bmos::tvdenoise::{
    build_psi, make_difference_operator, solve_tv, GroundTruth, PsiDesign, Stencil, TvMethod,
    TvProblem,
};
use nalgebra::{DMatrix, DVector};

fn problem(s: Vec<f64>, stencil: Stencil) -> TvProblem {
    let phi = make_difference_operator(s.len(), stencil).unwrap();
    TvProblem::new(s, phi, 2.0, 1.0).unwrap()
}

fn dense_phi(p: &TvProblem) -> DMatrix<f64> {
    let rows = p.phi().to_dense();
    DMatrix::from_fn(p.len(), p.len(), |i, j| rows[i][j])
}

fn soft(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

/// Reference primal solution via gradient descent on the smooth dual
/// `½‖s − Φᵀp‖² + Σ (|p_i| − μ)₊² / (2μθ)`, with `u = s − Φᵀp`.
fn reference_solution(p: &TvProblem) -> Vec<f64> {
    let phi = dense_phi(p);
    let s = DVector::from_column_slice(p.signal());
    let mt = p.mu() * p.theta();
    let lip = (&phi * phi.transpose()).symmetric_eigen().eigenvalues.max() + 1.0 / mt;
    let mut dual = DVector::zeros(p.len());
    for _ in 0..200_000 {
        let u = &s - phi.transpose() * &dual;
        let grad = -(&phi * &u) + dual.map(|q| soft(q, p.mu()) / mt);
        dual -= grad / lip;
    }
    (&s - phi.transpose() * &dual).as_slice().to_vec()
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn all_variants_reach_the_reference_solution() {
    let gt = GroundTruth::generate(20, 3, (-2.0, 2.0), 0.3, 11).unwrap();
    for stencil in [Stencil::Forward, Stencil::Central] {
        let p = problem(gt.observe().unwrap(), stencil);
        let reference = reference_solution(&p);
        for design in [PsiDesign::Agd, PsiDesign::Gd { kappa: 0.5 }] {
            let metric = build_psi(&p, design).unwrap();
            for method in [TvMethod::Bpr, TvMethod::Bdr { alpha: 0.5 }, TvMethod::Bfb] {
                let out = solve_tv(&p, &metric, method, 20_000, None).unwrap();
                let gap = max_abs(&out.u, &reference);
                assert!(gap < 1e-6, "{stencil:?} {design:?} {method:?}: {gap}");
            }
        }
    }
}

#[test]
fn noiseless_constant_signal() {
    let p = problem(vec![1.5; 20], Stencil::Forward);
    let reference = reference_solution(&p);
    let metric = build_psi(&p, PsiDesign::Agd).unwrap();
    let out = solve_tv(&p, &metric, TvMethod::Bpr, 20_000, None).unwrap();
    assert!(max_abs(&out.u, &reference) < 1e-6);
    // interior stays flat, only the zero-padded boundary pulls
    let interior = &out.u[..10];
    assert!(interior.iter().all(|&x| (x - interior[0]).abs() < 1e-6));
}

#[test]
fn splitting_pair_agrees_at_convergence() {
    let gt = GroundTruth::generate(200, 5, (-3.0, 3.0), 0.5, 3).unwrap();
    let p = problem(gt.observe().unwrap(), Stencil::Central);
    for design in [PsiDesign::Agd, PsiDesign::Gd { kappa: 0.1 }] {
        let metric = build_psi(&p, design).unwrap();
        let out = solve_tv(&p, &metric, TvMethod::Bpr, 20_000, None).unwrap();
        let pu = p.phi().apply(&out.u).unwrap();
        let gap = max_abs(&pu, &out.v);
        assert!(gap < 1e-6, "{design:?}: ‖Φu − v‖∞ = {gap}");
    }
}

/// Plain Euclidean dual P-R / D-R with step κ, built from raw stencil sums.
/// All sums have at most two nonzero ±κ-weighted terms, so the arithmetic is
/// order independent and the trajectories must agree bitwise.
#[test]
fn scalar_metric_is_bitwise_euclidean() {
    let gt = GroundTruth::generate(60, 4, (-2.0, 2.0), 0.4, 5).unwrap();
    let p = problem(gt.observe().unwrap(), Stencil::Central);
    let m = p.len();
    let kappa = 0.01;
    let (mu, mt) = (p.mu(), p.mu() * p.theta());
    let metric = build_psi(&p, PsiDesign::Gd { kappa }).unwrap();
    let rows = p.phi().to_dense();
    let phi = |x: &[f64]| -> Vec<f64> {
        (0..m).map(|i| (0..m).filter(|&j| rows[i][j] != 0.0).map(|j| rows[i][j] * x[j]).sum()).collect()
    };
    let phi_t = |x: &[f64]| -> Vec<f64> {
        (0..m).map(|j| (0..m).filter(|&i| rows[i][j] != 0.0).map(|i| rows[i][j] * x[i]).sum()).collect()
    };
    let sys = SymMatrix::from_fn(m, 2, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        let g: f64 = (0..m)
            .filter(|&k| rows[k][i] != 0.0 && rows[k][j] != 0.0)
            .map(|k| rows[k][i] * kappa * rows[k][j])
            .sum();
        d + g
    })
    .factorize()
    .unwrap();

    for method in [TvMethod::Bpr, TvMethod::Bdr { alpha: 0.5 }] {
        let mut z = vec![0.0; m];
        for t in 1..=10 {
            let lib = solve_tv(&p, &metric, method, t, None).unwrap();
            let scaled: Vec<f64> = z.iter().map(|zi| kappa * zi).collect();
            let rhs: Vec<f64> = phi_t(&scaled).iter().zip(p.signal()).map(|(a, s)| a + s).collect();
            let u = sys.solve(&rhs).unwrap();
            let pu = phi(&u);
            let x: Vec<f64> = z.iter().zip(&pu).map(|(zi, q)| zi - 2.0 * q).collect();
            let v: Vec<f64> = x.iter().map(|xi| -soft(kappa * xi, mu) / (kappa + mt)).collect();
            z = match method {
                TvMethod::Bdr { alpha } => (0..m).map(|i| z[i] - 2.0 * alpha * (pu[i] - v[i])).collect(),
                _ => (0..m).map(|i| x[i] + 2.0 * v[i]).collect(),
            };
            assert_eq!(lib.u, u, "{method:?} u at t={t}");
            assert_eq!(lib.z_tilde, z, "{method:?} z at t={t}");
        }
    }
}

/// Scalar metric `Ψ = I/κ` against a dense-algebra dual P-R / D-R.
#[test]
fn scalar_metric_matches_plain_iteration() {
    let gt = GroundTruth::generate(40, 4, (-2.0, 2.0), 0.4, 9).unwrap();
    let p = problem(gt.observe().unwrap(), Stencil::Central);
    let kappa = 0.05;
    let (mu, mt) = (p.mu(), p.mu() * p.theta());
    let metric = build_psi(&p, PsiDesign::Gd { kappa }).unwrap();
    let phi = dense_phi(&p);
    let s = DVector::from_column_slice(p.signal());
    let m = p.len();
    let u_sys = (DMatrix::identity(m, m) + kappa * phi.transpose() * &phi).lu();

    for alpha in [None, Some(0.5)] {
        let method = alpha.map_or(TvMethod::Bpr, |a| TvMethod::Bdr { alpha: a });
        let lib = solve_tv(&p, &metric, method, 10, None).unwrap();
        let mut z = DVector::zeros(m);
        let mut u = s.clone();
        for _ in 0..10 {
            u = u_sys.solve(&(&s + kappa * phi.transpose() * &z)).unwrap();
            let pu = &phi * &u;
            let x = &z - 2.0 * &pu;
            let v = x.map(|xi| -soft(kappa * xi, mu) / (kappa + mt));
            z = match alpha {
                None => x + 2.0 * &v,
                Some(a) => &z - 2.0 * a * (pu - &v),
            };
        }
        assert!(max_abs(&lib.u, u.as_slice()) < 1e-10);
        assert!(max_abs(&lib.z_tilde, z.as_slice()) < 1e-10);
    }
}

#[test]
fn newton_error_is_monotone_after_burn_in() {
    let gt = GroundTruth::generate(2000, 10, (-3.0, 3.0), 0.5, 42).unwrap();
    let p = problem(gt.observe().unwrap(), Stencil::Central);
    let metric = build_psi(&p, PsiDesign::Newton).unwrap();
    for method in [TvMethod::Bpr, TvMethod::Bdr { alpha: 0.5 }] {
        let out = solve_tv(&p, &metric, method, 1000, Some(&gt.u_gt)).unwrap();
        let e: Vec<f64> = out.trace.iter().map(|r| r.error.unwrap()).collect();
        for t in 751..e.len() {
            assert!(e[t] <= e[t - 1] + 1e-9, "{method:?} t={t}");
        }
    }
}

#[test]
fn trace_has_initial_row() {
    let p = problem(vec![0.0, 1.0, 0.0, 1.0], Stencil::Forward);
    let metric = build_psi(&p, PsiDesign::Agd).unwrap();
    let out = solve_tv(&p, &metric, TvMethod::Bfb, 7, Some(&[0.5; 4])).unwrap();
    assert_eq!(out.trace.len(), 8);
    assert_eq!(out.trace[0].t, 0);
    assert_eq!(out.trace[0].error, Some(0.5));
}
