use proptest::prelude::*;
use pvtune_core::baselines::{run_ste_training, ste_step, BaselineConfig, STEState};
use pvtune_core::linearized::{linearized_v_step, subspace_linearized_v_step, Subspace};
use pvtune_core::pv::p_step;
use pvtune_core::pvplus::{clip_init, run_pv_plus, PVPlusConfig};
use pvtune_core::quant::{partition_of, refines};
use pvtune_core::smoothness::{schema2_hessian_norm, schema_estimate_subspace, PowerIterConfig, Schema};
use pvtune_core::vq::{vq_delta_loss, vq_local_search, VQCodebook, VQLocalSearchState};
use pvtune_core::{run_pv, Objective, Partition, PvConfig, QuantizedVector, VStepMode, WeightedQuadratic};

fn quadratic(max_d: usize) -> impl Strategy<Value = WeightedQuadratic> {
    (1..=max_d).prop_flat_map(|d| {
        (prop::collection::vec(0.05f64..2.0, d), prop::collection::vec(-3.0f64..3.0, d))
            .prop_map(|(w, t)| WeightedQuadratic::new(w, t).unwrap())
    })
}

/// A quadratic with a quantized point of the same dimension and at most `max_u` values.
fn instance(max_d: usize, max_u: usize) -> impl Strategy<Value = (WeightedQuadratic, QuantizedVector)> {
    quadratic(max_d).prop_flat_map(move |q| {
        let d = q.dim();
        let u = max_u.min(d);
        (Just(q), prop::collection::vec(-3.0f64..3.0, u), prop::collection::vec(0..u, d)).prop_map(
            move |(q, values, labels)| {
                let x = QuantizedVector::from_labels(&labels, &values, u).unwrap();
                (q, x)
            },
        )
    })
}

/// Weights on a geometric ladder with ratio 1.06, so the largest two distinct
/// weights of any subset are at least 6% apart and power iteration converges.
fn separated_quadratic(max_d: usize) -> impl Strategy<Value = WeightedQuadratic> {
    (1..=max_d).prop_flat_map(|d| {
        (Just(0..40u32).prop_map(|r| r.collect::<Vec<_>>()).prop_shuffle(), prop::collection::vec(-3.0f64..3.0, d))
            .prop_map(move |(rungs, t)| {
                let w = rungs[..d].iter().map(|&k| 0.1 * 1.06f64.powi(k as i32)).collect();
                WeightedQuadratic::new(w, t).unwrap()
            })
    })
}

fn labels(max_d: usize) -> impl Strategy<Value = Vec<usize>> {
    (1..=max_d).prop_flat_map(|d| prop::collection::vec(0..3usize, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dense_round_trip(x in prop::collection::vec(prop::sample::select(vec![-1.5, 0.0, 2.0, 7.25]), 1..20)) {
        let q = QuantizedVector::from_dense(&x, 4).unwrap();
        prop_assert_eq!(q.dequantize(), x.clone());
        prop_assert_eq!(QuantizedVector::from_dense(&q.dequantize(), 4).unwrap(), q);
    }

    #[test]
    fn refinement_is_a_partial_order(a in labels(8), b in labels(8), c in labels(8)) {
        let n = a.len().min(b.len()).min(c.len());
        let (pa, pb, pc) = (
            Partition::from_labels(&a[..n]),
            Partition::from_labels(&b[..n]),
            Partition::from_labels(&c[..n]),
        );
        prop_assert!(refines(&pa, &pa).unwrap());
        if refines(&pa, &pb).unwrap() && refines(&pb, &pa).unwrap() {
            prop_assert_eq!(&pa, &pb);
        }
        if refines(&pa, &pb).unwrap() && refines(&pb, &pc).unwrap() {
            prop_assert!(refines(&pa, &pc).unwrap());
        }
    }

    #[test]
    fn p_step_coarsens_and_never_hurts((q, x) in instance(8, 4)) {
        let y = p_step(&q, &x).unwrap();
        prop_assert!(refines(&partition_of(&y), &partition_of(&x)).unwrap());
        prop_assert!(q.value(&y.dequantize()) <= q.value(&x.dequantize()) + 1e-12);
    }

    #[test]
    fn pv_half_steps_are_monotone((q, x) in instance(7, 3), brute in any::<bool>()) {
        let mode = if brute { VStepMode::BruteForce } else { VStepMode::Separable };
        let cfg = PvConfig { max_iterations: 20, v_step_mode: mode, ..PvConfig::default() };
        let run = run_pv(&q, &x, &cfg, 0).unwrap();
        for w in run.trace.windows(2) {
            prop_assert!(w[1].loss <= w[0].loss + 1e-12);
        }
        for r in &run.trace {
            prop_assert!(r.num_unique <= 3);
        }
        prop_assert!(run.solution.num_unique() <= 3);
    }

    #[test]
    fn pv_plus_is_monotone_and_no_worse_than_pv((q, x) in instance(7, 3)) {
        let cfg = PvConfig { max_iterations: 50, ..PvConfig::default() };
        let pv = run_pv(&q, &x, &cfg, 0).unwrap();
        let plus_cfg = PVPlusConfig { pv: cfg, max_unique: 3, pool: q.target().to_vec() };
        let plus = run_pv_plus(&q, &x, &plus_cfg, 0).unwrap();
        for w in plus.trace.windows(2) {
            prop_assert!(w[1].loss <= w[0].loss + 1e-12);
        }
        for r in &plus.trace {
            prop_assert!(r.num_unique <= 3);
        }
        prop_assert!(plus.final_loss() <= pv.final_loss() + 1e-12, "{} > {}", plus.final_loss(), pv.final_loss());
    }

    #[test]
    fn linearized_step_descends((q, y) in instance(10, 4), scale in 1.0f64..4.0) {
        let l = q.smoothness().unwrap() * scale;
        let x = linearized_v_step(&q, &y, l).unwrap();
        prop_assert!(q.value(&x.dequantize()) <= q.value(&y.dequantize()) + 1e-12);
        for v in x.values() {
            prop_assert!(y.values().contains(v));
        }
    }

    #[test]
    fn huge_constant_stalls((q, y) in instance(10, 4)) {
        let dense = y.dequantize();
        let g = q.gradient(&dense);
        let gap = y.values().windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assume!(gap.is_finite() && gap > 1e-9 && gmax > 0.0);
        let l = 4.0 * gmax / gap;
        let x = linearized_v_step(&q, &y, l).unwrap();
        prop_assert_eq!(x.dequantize(), dense);
    }

    #[test]
    fn subspace_step_leaves_other_coordinates((q, y) in instance(12, 4), seed in any::<u64>()) {
        let d = y.dim();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let tau = rand::Rng::gen_range(&mut rng, 1..=d);
        let indices = rand::seq::index::sample(&mut rng, d, tau).into_vec();
        let s = Subspace::new(indices.clone(), q.subspace_smoothness(&indices).unwrap(), d).unwrap();
        let before = y.dequantize();
        let after = subspace_linearized_v_step(&q, &y, &s).unwrap().dequantize();
        for i in 0..d {
            if !indices.contains(&i) {
                prop_assert_eq!(before[i].to_bits(), after[i].to_bits());
            }
        }
    }

    #[test]
    fn ste_stays_in_the_value_set((q, y) in instance(10, 3), lr in 0.001f64..1.0, steps in 1usize..20) {
        let mut state = STEState::new(&y, lr);
        for _ in 0..steps {
            let x = ste_step(&q, &mut state, &y).unwrap();
            for v in x.values() {
                prop_assert!(y.values().contains(v));
            }
        }
        let cfg = BaselineConfig { learning_rate: lr, ..BaselineConfig::new(10, 2.0) };
        let run = run_ste_training(&q, &y, &cfg, 0).unwrap();
        for r in &run.trace {
            prop_assert!(r.num_unique <= 3);
        }
    }

    #[test]
    fn clip_is_idempotent(x in prop::collection::vec(-5i32..5, 1..30), c in 1usize..6) {
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        let once = clip_init(&x, c).unwrap();
        let twice = clip_init(&once.dequantize(), c).unwrap();
        prop_assert_eq!(once.dequantize(), twice.dequantize());
        prop_assert!(once.num_unique() <= c);
    }

    #[test]
    fn vq_incremental_loss_tracks_recomputation(
        codes in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 2..5),
        target in prop::collection::vec(-2.0f64..2.0, 12),
        moves in prop::collection::vec((0usize..6, 0usize..5), 1..20),
    ) {
        let mut codes = codes;
        codes.dedup();
        prop_assume!(codes.iter().enumerate().all(|(k, c)| !codes[..k].contains(c)));
        let u = codes.len();
        let book = VQCodebook::new(2, codes).unwrap();
        let mut st = VQLocalSearchState::new(book, target, vec![0; 6]).unwrap();
        for (j, k) in moves {
            let k = k % u;
            let before = st.recompute_loss();
            let delta = vq_delta_loss(&st, j, k);
            st.apply(j, k);
            prop_assert!((st.recompute_loss() - before - delta).abs() < 1e-9);
            prop_assert!((st.current_loss() - st.recompute_loss()).abs() <= 1e-9 * st.recompute_loss().max(1.0));
        }
        let before = st.current_loss();
        vq_local_search(&mut st, 1000);
        prop_assert!(st.current_loss() <= before);
        prop_assert!((st.current_loss() - st.recompute_loss()).abs() <= 1e-9 * st.recompute_loss().max(1.0));
    }

    #[test]
    fn restricted_estimates_grow_along_nested_chains(q in separated_quadratic(12), seed in any::<u64>()) {
        let d = q.dim();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let order = rand::seq::index::sample(&mut rng, d, d).into_vec();
        let cfg = PowerIterConfig { num_iters: 300, ..PowerIterConfig::default() };
        let x = vec![0.5; d];
        let bound = q.smoothness().unwrap();
        let mut prev = 0.0;
        for k in 1..=d {
            let est = schema_estimate_subspace(&q, &x, &order[..k], &Schema::PowerIteration, &cfg).unwrap();
            let exact = q.subspace_smoothness(&order[..k]).unwrap();
            prop_assert!(est <= bound + 1e-9);
            prop_assert!((est - exact).abs() < 1e-6, "{} vs {}", est, exact);
            prop_assert!(est >= prev - 1e-9);
            prev = est;
        }
    }

    #[test]
    fn power_iteration_ignores_the_evaluation_point(q in separated_quadratic(6), shift in -3.0f64..3.0) {
        let d = q.dim();
        let cfg = PowerIterConfig { num_iters: 200, ..PowerIterConfig::default() };
        let a = schema2_hessian_norm(&q, &vec![1.0; d], &cfg).unwrap();
        let b = schema2_hessian_norm(&q, &vec![1.0 + shift; d], &cfg).unwrap();
        prop_assert!((a - b).abs() < 1e-5 * a.max(1.0));
    }
}
