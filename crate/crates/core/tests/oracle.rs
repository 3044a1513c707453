use ddqmc::lattice::build_lattice;
use ddqmc::oracle::{
    assemble_from_elements, build_dense, exact_expectation, exact_susceptibility, integrate, steady_state, GoldenRecord,
    Method,
};
use ddqmc::{Axis, ModelParams, Observable, XyzModel};
use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

const PLAQUETTE: &str = include_str!("golden/plaquette.json");
const SUSCEPTIBILITY: &str = include_str!("golden/susceptibility.json");

#[derive(Deserialize)]
struct ChiGolden {
    jy: f64,
    fields: Vec<f64>,
    chi: [[f64; 2]; 2],
    chi_av: f64,
}

fn model_of(g: &GoldenRecord) -> XyzModel<f64> {
    XyzModel::new(build_lattice(g.rows, g.cols, g.periodic).unwrap(), g.params)
}

fn plaquette(jy: f64) -> XyzModel<f64> {
    XyzModel::new(build_lattice(2, 2, true).unwrap(), ModelParams::xyz(0.225, jy, 0.25))
}

#[test]
fn golden_magnetizations() {
    let golden: Vec<GoldenRecord> = serde_json::from_str(PLAQUETTE).unwrap();
    assert_eq!(golden.len(), 22);
    for g in &golden {
        let ours = GoldenRecord::compute(&model_of(g)).unwrap();
        assert!((ours.mz - g.mz).abs() < 1e-10, "jy {} mz {} vs {}", g.params.jy, ours.mz, g.mz);
        assert!((ours.sx - g.sx).abs() < 1e-10);
        assert!((ours.sy - g.sy).abs() < 1e-10);
        assert!(ours.residual < 1e-9);
    }
}

#[test]
fn golden_record_round_trips() {
    let g = GoldenRecord::compute(&plaquette(0.335)).unwrap();
    let back: GoldenRecord = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
    assert_eq!(g, back);
}

#[test]
fn golden_susceptibility() {
    let golden: Vec<ChiGolden> = serde_json::from_str(SUSCEPTIBILITY).unwrap();
    for g in &golden {
        let r = exact_susceptibility(&plaquette(g.jy), &g.fields).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert!((r.chi[a][b] - g.chi[a][b]).abs() < 1e-8, "jy {} chi[{a}][{b}]", g.jy);
            }
        }
        assert!((r.chi_av - g.chi_av).abs() < 1e-6, "jy {}: {} vs {}", g.jy, r.chi_av, g.chi_av);
        assert_eq!(r.chi_av_err, 0.0);
    }
}

fn random_model(rng: &mut ChaCha8Rng, rows: usize, cols: usize, theta: f64) -> XyzModel<f64> {
    let periodic = rows * cols > 1;
    let mut p = ModelParams::xyz(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    p.gamma = rng.random_range(0.2..2.0);
    p.h = rng.random_range(0.0..0.5);
    p.theta = theta;
    XyzModel::new(build_lattice(rows, cols, periodic).unwrap(), p)
}

#[test]
fn element_rules_match_kronecker_assembly() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let shapes = [(1, 1), (1, 2), (2, 2)];
    let thetas = [0.0, std::f64::consts::FRAC_PI_2, 1.0];
    for k in 0..10 {
        let (r, c) = shapes[k % 3];
        let m = random_model(&mut rng, r, c, thetas[k % 3]);
        let dense = build_dense(&m).unwrap().matrix;
        let sparse = assemble_from_elements(&m).unwrap();
        let worst = (&dense - &sparse).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(worst < 1e-14, "model {k}: max deviation {worst}");
    }
}

#[test]
fn trace_annihilated_for_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = random_model(&mut rng, 2, 2, 1.0);
    let l = build_dense(&m).unwrap();
    for _ in 0..100 {
        let rho = DMatrix::from_fn(l.dim, l.dim, |_, _| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let lr = l.apply(&rho);
        let tr: Complex<f64> = (0..l.dim).map(|i| lr[(i, i)]).sum();
        assert!(tr.norm() < 1e-12);
    }
}

#[test]
fn physical_steady_states_across_sweep() {
    for k in 0..20 {
        let jy = 0.2 + 0.8 * k as f64 / 19.0;
        let ss = steady_state(&build_dense(&plaquette(jy)).unwrap()).unwrap();
        assert!(ss.residual < 1e-9);
        assert!((ss.trace() - Complex::new(1.0, 0.0)).norm() < 1e-12);
        assert!(ss.eigenvalues()[0] > -1e-8);
        assert!(ss.hermiticity_error() < 1e-10);
    }
}

#[test]
fn long_time_rk4_reaches_null_space() {
    let m = plaquette(0.5);
    let l = build_dense(&m).unwrap();
    let ss = steady_state(&l).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // random density matrix A A^dag / Tr
    let a = DMatrix::from_fn(l.dim, l.dim, |_, _| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let mut rho0 = &a * a.adjoint();
    let tr: Complex<f64> = (0..l.dim).map(|i| rho0[(i, i)]).sum();
    rho0 /= tr;
    let out = integrate(&l, &rho0, 0.05, 2000, Method::Rk4).unwrap();
    let diff = (&out.rho - &ss.rho).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(diff < 1e-8, "{diff}");
    assert!(out.trace_drift < 1e-12);
}

#[test]
fn euler_gap_is_first_order() {
    let m = plaquette(0.335);
    let l = build_dense(&m).unwrap();
    let mut rho0 = DMatrix::from_element(l.dim, l.dim, Complex::new(0.0, 0.0));
    rho0[(l.dim - 1, l.dim - 1)] = Complex::new(1.0, 0.0);
    let t = 1.0;
    let gap = |dt: f64| {
        let steps = (t / dt).round() as usize;
        let e = integrate(&l, &rho0, dt, steps, Method::Euler).unwrap();
        let r = integrate(&l, &rho0, dt, steps, Method::Rk4).unwrap();
        (&e.rho - &r.rho).iter().map(|z| z.norm()).fold(0.0, f64::max)
    };
    let ratio = gap(0.01) / gap(0.005);
    assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
}

#[test]
fn unstable_euler_aborts() {
    let mut m = plaquette(0.335);
    m.params.gamma = 50.0;
    let l = build_dense(&m).unwrap();
    let mut rho0 = DMatrix::from_element(l.dim, l.dim, Complex::new(0.0, 0.0));
    rho0[(l.dim - 1, l.dim - 1)] = Complex::new(1.0, 0.0);
    assert!(integrate(&l, &rho0, 0.2, 500, Method::Euler).is_err());
}

#[test]
fn zero_liouvillian_leaves_state() {
    let mut m = plaquette(0.0);
    m.params = ModelParams::xyz(0.0, 0.0, 0.0);
    m.params.gamma = 0.0;
    let l = build_dense(&m).unwrap();
    let rho0 = DMatrix::from_fn(l.dim, l.dim, |i, j| Complex::new((i + 2 * j) as f64, 0.0));
    let out = integrate(&l, &rho0, 0.1, 10, Method::Rk4).unwrap();
    assert_eq!(out.rho, rho0);
}

#[test]
fn site_and_average_magnetization_agree() {
    let ss = steady_state(&build_dense(&plaquette(0.7)).unwrap()).unwrap();
    let avg = exact_expectation(&ss.rho, Observable::Magnetization(Axis::Z)).unwrap();
    for k in 0..4 {
        let site = exact_expectation(&ss.rho, Observable::Site(Axis::Z, k)).unwrap();
        assert!((site - avg).abs() < 1e-12);
    }
}
