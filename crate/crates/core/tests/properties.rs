use evonf::datasets::WindowedDataset;
use evonf::evolution::{crossover, mutate};
use evonf::fuzzy::{tconorm, tnorm, PARAM_FLOOR, P_MAX, P_MIN};
use evonf::genome::EncodingSpec;
use evonf::{gd_finetune, EaConfig, MembershipFunction, OperatorParams, TrainSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spec(n: usize, masks: bool) -> EncodingSpec {
    EncodingSpec {
        evolve_label_masks: masks,
        ..EncodingSpec::unit(n)
    }
}

fn data(n: usize, rng: &mut ChaCha8Rng) -> WindowedDataset {
    let rows: Vec<Vec<f64>> = (0..30)
        .map(|_| (0..n).map(|_| rng.random::<f64>()).collect())
        .collect();
    let targets = rows.iter().map(|r| (3.0 * r[0]).sin() + r[n - 1] * r[n - 1]).collect();
    WindowedDataset::new(rows, targets).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tnorm_axioms(a in 0.0f64..=1.0, b in 0.0f64..=1.0, p in P_MIN..P_MAX) {
        let ops = OperatorParams::new(p, p).unwrap();
        prop_assert!((tnorm(a, 1.0, &ops) - a).abs() < 1e-12);
        prop_assert!((tconorm(a, 0.0, &ops) - a).abs() < 1e-12);
        prop_assert!((tnorm(a, b, &ops) - tnorm(b, a, &ops)).abs() < 1e-12);
        prop_assert!(tnorm(a, b, &ops) <= a.min(b) + 1e-12);
        prop_assert!(tconorm(a, b, &ops) >= a.max(b) - 1e-12);
    }

    #[test]
    fn decode_is_total(seed in any::<u64>(), n in 1usize..=4, masks in any::<bool>()) {
        let spec = spec(n, masks);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fis = spec.decode(&spec.random_genome(&mut rng)).unwrap();
        prop_assert!(fis.active_rule_count() >= 1);
        for var in &fis.inputs {
            for mf in &var.partitions {
                let params = mf.params();
                match mf {
                    MembershipFunction::Bell { .. } => {
                        prop_assert!(params[0] >= PARAM_FLOOR && params[1] >= PARAM_FLOOR);
                    }
                    MembershipFunction::Gaussian { .. } => prop_assert!(params[1] >= PARAM_FLOOR),
                }
                prop_assert!(var.universe.contains(mf.center()));
            }
        }
        let x = vec![0.5; n];
        prop_assert!(fis.evaluate(&x).unwrap().is_finite());
    }

    #[test]
    fn output_is_a_convex_combination(seed in any::<u64>(), n in 1usize..=3) {
        let spec = spec(n, true);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fis = spec.decode(&spec.random_genome(&mut rng)).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let outputs: Vec<f64> =
            fis.rules.iter().filter(|r| r.active).map(|r| r.consequent.eval(&x)).collect();
        let lo = outputs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = outputs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let y = fis.evaluate(&x).unwrap();
        let slack = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
        prop_assert!(y >= lo - slack && y <= hi + slack);
    }

    #[test]
    fn encode_decode_round_trip(seed in any::<u64>(), n in 1usize..=3) {
        let spec = spec(n, true);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fis = spec.decode(&spec.random_genome(&mut rng)).unwrap();
        let again = spec.decode(&spec.encode(&fis).unwrap()).unwrap();
        prop_assert_eq!(fis.mf_counts(), again.mf_counts());
        prop_assert_eq!(fis.active_rule_count(), again.active_rule_count());
        for k in 0..20 {
            let x: Vec<f64> = (0..n).map(|v| ((k * 7 + v * 3) % 11) as f64 / 10.0).collect();
            let (a, b) = (fis.evaluate(&x).unwrap(), again.evaluate(&x).unwrap());
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn genetic_operators_stay_in_bounds(seed in any::<u64>(), t in 0usize..=60) {
        let spec = spec(3, true);
        let space = spec.gene_space();
        let cfg = EaConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (spec.random_genome(&mut rng), spec.random_genome(&mut rng));
        let (mut c, mut d) = crossover(&a, &b, &space, &mut rng).unwrap();
        mutate(&mut c, &space, t, &cfg, &mut rng);
        mutate(&mut d, &space, t, &cfg, &mut rng);
        prop_assert!(space.contains(&c) && space.contains(&d));
        prop_assert!(spec.decode(&c).is_ok() && spec.decode(&d).is_ok());
    }
}

/// Near-zero degrees with a large T-norm parameter once overflowed the
/// `dT/dp` term to NaN.
#[test]
fn finetune_survives_vanishing_degrees() {
    let spec = spec(2, true);
    let mut rng = ChaCha8Rng::seed_from_u64(14153760834431128872);
    let fis = spec.decode(&spec.random_genome(&mut rng)).unwrap();
    let train = data(2, &mut rng);
    let train_spec = TrainSpec { tune_operators: true, ..TrainSpec::new(1.8826381095565452, 15) };
    let (tuned, trace) = gd_finetune(&fis, &train, &train_spec).unwrap();
    assert!(trace.train_rmse.iter().all(|e| e.is_finite()));
    assert!(tuned.operators.tnorm_p.is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Gradient descent only moves MF parameters (and operators when asked),
    /// never below the floors and never outside the operator range.
    #[test]
    fn finetune_touches_only_tunable_parameters(
        seed in any::<u64>(),
        lr in 0.05f64..2.0,
        tune_operators in any::<bool>(),
    ) {
        let spec = spec(2, true);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fis = spec.decode(&spec.random_genome(&mut rng)).unwrap();
        let train = data(2, &mut rng);
        let train_spec = TrainSpec { tune_operators, ..TrainSpec::new(lr, 15) };
        let (tuned, trace) = gd_finetune(&fis, &train, &train_spec).unwrap();
        prop_assert_eq!(trace.train_rmse.len(), 16);
        prop_assert!(trace.train_rmse.iter().all(|e| e.is_finite()));
        prop_assert_eq!(&tuned.rules, &fis.rules);
        prop_assert_eq!(tuned.mf_counts(), fis.mf_counts());
        if !tune_operators {
            prop_assert_eq!(tuned.operators, fis.operators);
        }
        for p in [tuned.operators.tnorm_p, tuned.operators.tconorm_p] {
            prop_assert!((P_MIN..=P_MAX).contains(&p));
        }
        for (var, orig) in tuned.inputs.iter().zip(&fis.inputs) {
            for (mf, before) in var.partitions.iter().zip(&orig.partitions) {
                prop_assert_eq!(mf.shape(), before.shape());
                prop_assert!(var.universe.contains(mf.center()));
                let params = mf.params();
                let widths: &[f64] = match mf {
                    MembershipFunction::Bell { .. } => &params[..2],
                    MembershipFunction::Gaussian { .. } => &params[1..],
                };
                prop_assert!(widths.iter().all(|&w| w >= PARAM_FLOOR));
            }
        }
    }
}
