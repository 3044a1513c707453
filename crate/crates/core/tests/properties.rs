use ddqmc::engine::{init_population, step};
use ddqmc::estimators::{angular_average, ratio_blocking_error};
use ddqmc::lattice::build_lattice;
use ddqmc::liouvillian::{connections, diagonal_element};
use ddqmc::samplers::{multinomial, stochastic_round, RngStream};
use ddqmc::{Axis, ConfigPair, EngineParams, ImportanceScheme, ModelParams, Observable, SpinConfig, XyzModel};
use num_complex::Complex;
use proptest::prelude::*;

fn model_strategy() -> impl Strategy<Value = XyzModel<f64>> {
    (
        prop_oneof![Just((1, 2)), Just((2, 2)), Just((1, 3)), Just((2, 3)), Just((3, 3))],
        any::<bool>(),
        -1.0..1.0f64,
        -1.0..1.0f64,
        -1.0..1.0f64,
        0.1..2.0f64,
        0.0..0.5f64,
        0.0..std::f64::consts::TAU,
    )
        .prop_map(|((r, c), periodic, jx, jy, jz, gamma, h, theta)| {
            let mut p = ModelParams::xyz(jx, jy, jz).with_field(h, theta);
            p.gamma = gamma;
            XyzModel::new(build_lattice(r, c, periodic).unwrap(), p)
        })
}

fn pair_for(model: &XyzModel<f64>, row: u32, col: u32) -> ConfigPair {
    let mask = (1u32 << model.n_sites()) - 1;
    ConfigPair::new(SpinConfig(row & mask), SpinConfig(col & mask))
}

proptest! {
    #[test]
    fn hamiltonian_is_hermitian(model in model_strategy(), bits in any::<u32>()) {
        let c = pair_for(&model, bits, 0).row;
        for (t, a) in model.hamiltonian_offdiagonal(c) {
            prop_assert!(t != c);
            let back = model.hamiltonian_offdiagonal(t);
            let (_, b) = back.iter().find(|(s, _)| *s == c).expect("reverse element");
            prop_assert!((a - b.conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn trace_functional_is_annihilated(model in model_strategy(), row in any::<u32>(), col in any::<u32>()) {
        let pair = pair_for(&model, row, col);
        let mut sum = if pair.is_diagonal() {
            diagonal_element(&model, pair, 0.0)
        } else {
            Complex::new(0.0, 0.0)
        };
        for c in connections(&model, pair, &ImportanceScheme::none()) {
            if c.target.is_diagonal() {
                sum += c.amplitude;
            }
        }
        prop_assert!(sum.norm() < 1e-14);
    }

    #[test]
    fn hermiticity_is_preserved(model in model_strategy(), row in any::<u32>(), col in any::<u32>(), p in 0.0..3.0f64) {
        let imp = ImportanceScheme::new(p);
        let pair = pair_for(&model, row, col);
        let fwd = connections(&model, pair, &imp);
        let rev = connections(&model, pair.transpose(), &imp);
        prop_assert_eq!(fwd.len(), rev.len());
        for c in &fwd {
            let m = rev.iter().find(|r| r.target == c.target.transpose()).expect("transposed target");
            prop_assert!((c.amplitude - m.amplitude.conj()).norm() < 1e-14);
        }
        let d = diagonal_element(&model, pair, 0.3);
        let dt = diagonal_element(&model, pair.transpose(), 0.3);
        prop_assert!((d - dt.conj()).norm() < 1e-14);
    }

    #[test]
    fn importance_scales_connections(model in model_strategy(), row in any::<u32>(), col in any::<u32>(), p in 0.0..3.0f64) {
        let pair = pair_for(&model, row, col);
        let imp = ImportanceScheme::new(p);
        let plain = connections(&model, pair, &ImportanceScheme::none());
        let weighted = connections(&model, pair, &imp);
        prop_assert_eq!(plain.len(), weighted.len());
        for (a, b) in plain.iter().zip(&weighted) {
            prop_assert_eq!(a.target, b.target);
            prop_assert!(a.target != pair);
            let ratio = imp.weight(b.target) / imp.weight(pair);
            prop_assert!((a.amplitude * ratio - b.amplitude).norm() < 1e-14);
        }
    }

    #[test]
    fn pair_key_round_trips(row in any::<u32>(), col in any::<u32>()) {
        let p = ConfigPair::new(SpinConfig(row), SpinConfig(col));
        prop_assert_eq!(ConfigPair::from_key(p.key()), p);
    }

    #[test]
    fn observables_are_hermitian(row in 0u32..512, col in 0u32..512, axis in 0usize..3) {
        let axis = [Axis::X, Axis::Y, Axis::Z][axis];
        let obs = Observable::Magnetization(axis);
        let p = ConfigPair::new(SpinConfig(row), SpinConfig(col));
        let a = obs.element(p, 9);
        let b = obs.element(p.transpose(), 9);
        prop_assert_eq!(a, b.conj());
    }

    #[test]
    fn multinomial_conserves_count(n in 0u64..10_000, w in prop::collection::vec(0.01..1.0f64, 1..12), seed in any::<u64>()) {
        let total: f64 = w.iter().sum();
        let mut probs: Vec<f64> = w.iter().map(|x| x / total).collect();
        let head: f64 = probs[..probs.len() - 1].iter().sum();
        *probs.last_mut().unwrap() = 1.0 - head;
        let counts = multinomial(n, &probs, &mut RngStream::new(seed, 0)).unwrap();
        prop_assert_eq!(counts.iter().sum::<u64>(), n);
    }

    #[test]
    fn stochastic_round_brackets(x in 0.0..1e6f64, seed in any::<u64>()) {
        let r = stochastic_round(x, &mut RngStream::new(seed, 1)).unwrap();
        prop_assert!(r == x.floor() as u64 || r == x.floor() as u64 + 1);
    }

    #[test]
    fn angular_average_is_homogeneous_and_rotation_invariant(
        m in prop::array::uniform4(-5.0..5.0f64),
        scale in -3.0..3.0f64,
        phi in 0.0..std::f64::consts::TAU,
    ) {
        let chi = [[m[0], m[1]], [m[2], m[3]]];
        let base = angular_average(&chi, 720);
        let scaled = chi.map(|r| r.map(|x| x * scale));
        prop_assert!((angular_average(&scaled, 720) - scale.abs() * base).abs() < 1e-10 * (1.0 + base));
        let (s, c) = phi.sin_cos();
        let rot = [
            [c * chi[0][0] - s * chi[1][0], c * chi[0][1] - s * chi[1][1]],
            [s * chi[0][0] + c * chi[1][0], s * chi[0][1] + c * chi[1][1]],
        ];
        prop_assert!((angular_average(&rot, 720) - base).abs() < 1e-10 * (1.0 + base));
    }

    #[test]
    fn blocking_mean_is_ratio_of_sums(xs in prop::collection::vec((-10.0..10.0f64, 0.5..5.0f64), 2..300)) {
        let r = ratio_blocking_error(&xs);
        let (a, b) = xs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        prop_assert!((r.mean - a / b).abs() < 1e-12 * (1.0 + (a / b).abs()));
        prop_assert!(r.error >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn steps_leave_no_empty_cells_and_ignore_sharding(seed in any::<u64>(), shards in 2usize..6, limit in 0.0..10.0f64) {
        let model = XyzModel::new(
            build_lattice(2, 2, true).unwrap(),
            ModelParams::xyz(0.225, 0.335, 0.25).with_field(0.1, 1.0),
        );
        let params = EngineParams::<f64> { seed, initiator_limit: limit, ..Default::default() };
        let mut a = init_population(200, &model, &params).unwrap();
        let mut b = a.reshard(shards);
        for _ in 0..40 {
            a = step(&a, &model, &params).unwrap();
            b = step(&b, &model, &params).unwrap();
            prop_assert!(a.iter().all(|(_, c)| !c.is_empty()));
        }
        prop_assert_eq!(a.sorted_cells(), b.sorted_cells());
        prop_assert_eq!(a.shift, b.shift);
    }
}
