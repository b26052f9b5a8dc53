use chenlee::estimates::{RandomFieldSpec, SpectralProfile};
use chenlee::fourier::l2_norm;
use chenlee::illposed::{oracle_check, OracleOptions};
use chenlee::io::{read_trajectory, write_trajectory};
use chenlee::*;

fn unit() -> ModelParams {
    ModelParams::new(1.0, 1.0).unwrap()
}

fn small_data(max_mode: usize, norm: f64, index: u64) -> FourierField {
    let s = SobolevIndex::new(0.0).unwrap();
    let phi = RandomFieldSpec::new(max_mode, SpectralProfile::Sobolev { s: 1.0 }, 17).sample(index);
    phi.scaled(norm / sobolev_norm(&phi, s))
}

#[test]
fn picard_converges_to_the_etd_solution_at_second_order() {
    let s = SobolevIndex::new(0.0).unwrap();
    for (i, p) in [unit(), ModelParams::new(0.0, 0.5).unwrap(), ModelParams::new(4.0, 2.0).unwrap()]
        .into_iter()
        .enumerate()
    {
        let phi = small_data(16, 0.05, i as u64);
        let etd = etd_march(&phi, &SolverConfig::new(p, s, 16, 1.0, 800)).unwrap();
        let gap = |n| {
            let (picard, report) = picard_solve(&phi, &SolverConfig::new(p, s, 16, 1.0, n)).unwrap();
            assert!(report.converged);
            picard.last().max_abs_diff(etd.last()).unwrap()
        };
        let (coarse, fine) = (gap(32), gap(64));
        assert!(fine < 1e-9, "params {i}: {fine:e}");
        assert!((coarse / fine).log2() > 1.8, "params {i}: {coarse:e} -> {fine:e}");
    }
}

#[test]
fn linear_march_is_the_exact_semigroup() {
    let p = ModelParams::new(2.0, 0.7).unwrap();
    let phi = RandomFieldSpec::new(32, SpectralProfile::Sobolev { s: -0.25 }, 3).sample(0);
    let mut cfg = SolverConfig::new(p, SobolevIndex::new(-0.25).unwrap(), 32, 0.8, 40);
    cfg.nonlinear = false;
    let traj = etd_march(&phi, &cfg).unwrap();
    for (t, u) in traj.times().iter().zip(traj.states()) {
        let exact = apply_semigroup(&phi, *t, p).unwrap();
        assert!(u.max_abs_diff(&exact).unwrap() < 1e-13, "t = {t}");
    }
}

#[test]
fn solutions_depend_continuously_on_data() {
    let s = SobolevIndex::new(0.0).unwrap();
    let phi = small_data(32, 0.5, 0);
    let bump = small_data(32, 1.0, 1);
    let cfg = SolverConfig::new(unit(), s, 32, 1.0, 200);
    let base = etd_march(&phi, &cfg).unwrap();
    let mut previous = f64::INFINITY;
    for eps in [1e-2, 1e-4, 1e-6] {
        let moved = etd_march(&phi.axpy(eps, &bump).unwrap(), &cfg).unwrap();
        let gap = solution_norm(&moved.sub(&base).unwrap(), s);
        assert!(gap < 2.0 * eps, "eps = {eps}: {gap:e}");
        assert!(gap < previous);
        previous = gap;
    }
}

#[test]
fn march_time_step_convergence_is_fourth_order() {
    let s = SobolevIndex::new(0.0).unwrap();
    let phi = small_data(4, 2.0, 4);
    let run = |n| etd_march(&phi, &SolverConfig::new(unit(), s, 4, 0.5, n)).unwrap().last().clone();
    let reference = run(3200);
    let e1 = run(50).max_abs_diff(&reference).unwrap();
    let e2 = run(100).max_abs_diff(&reference).unwrap();
    let order = (e1 / e2).log2();
    assert!(order > 3.8, "observed order {order}");
}

#[test]
fn closed_form_oracle_off_the_acceptance_grid() {
    for (beta, eta, t) in [(0.0, 1.0, 0.5), (3.0, 0.5, 0.75), (10.0, 2.0, 1.0)] {
        let p = ModelParams::new(beta, eta).unwrap();
        let r = oracle_check(5, SobolevIndex::new(-1.0).unwrap(), p, t, &OracleOptions::default()).unwrap();
        assert!(r.pass && r.max_abs_err <= 1e-8, "beta={beta} eta={eta}: {:e}", r.max_abs_err);
    }
}

#[test]
fn trajectories_survive_a_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = SobolevIndex::new(0.0).unwrap();
    let traj = etd_march(&small_data(8, 0.3, 2), &SolverConfig::new(unit(), s, 8, 0.2, 10)).unwrap();
    write_trajectory(dir.path(), &traj, &["beta = 1".into(), "eta = 1".into()]).unwrap();
    let back = read_trajectory(dir.path()).unwrap();
    assert_eq!(back, traj);
    assert!(l2_norm(back.last()) < l2_norm(&back.states()[0]));
}
