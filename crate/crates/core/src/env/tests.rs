use super::*;
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

fn seed(root: u64) -> TrialSeed {
    TrialSeed::new(root, 0)
}

fn arm(spec: ArmSpec, root: u64) -> ArmProcess {
    ArmProcess::new(spec, seed(root).stream(0, Lane::Rewards)).unwrap()
}

fn rotting(theta: f64) -> ArmSpec {
    ArmSpec::Rotting {
        theta,
        baseline: 0.0,
        noise: Noise::Bernoulli,
    }
}

#[test]
fn degenerate_bernoulli_always_pays() {
    let mut a = arm(
        ArmSpec::Iid {
            mean: 1.0,
            noise: Noise::Bernoulli,
        },
        1,
    );
    assert!((0..100).all(|_| a.pull() == 1.0));
}

#[test]
fn complete_dependence_repeats_first_draw() {
    let mut a = arm(
        ArmSpec::CompleteDependence {
            mean: 0.4,
            noise: Noise::Gaussian { sigma: 1.0 },
        },
        2,
    );
    assert_eq!(a.next_mean(), 0.4);
    let first = a.pull();
    assert!((0..50).all(|_| a.pull() == first));
    assert_eq!(a.next_mean(), first);
}

#[test]
fn rotting_second_pull_mean_monte_carlo() {
    let n = 100_000u64;
    let mut total = 0.0;
    for r in 0..n {
        let mut a =
            ArmProcess::new(rotting(1.0), TrialSeed::new(5, r).stream(0, Lane::Rewards)).unwrap();
        a.pull();
        total += a.pull();
    }
    let mean = total / n as f64;
    assert!(
        (mean - 0.5).abs() < 0.01,
        "empirical second-pull mean {mean}"
    );
}

#[test]
fn next_mean_examples() {
    let env = Environment::new(
        [0.1, 0.5, 0.9]
            .iter()
            .map(|&mean| ArmSpec::Iid {
                mean,
                noise: Noise::Bernoulli,
            })
            .collect(),
        seed(3),
    )
    .unwrap();
    assert_eq!(env.next_means(), vec![0.1, 0.5, 0.9]);

    let mut a = arm(rotting(1.0), 4);
    assert_eq!(a.next_mean(), 1.0);
    for _ in 0..3 {
        a.pull();
    }
    assert_eq!(a.next_mean(), 0.25);
    a.pull();
    assert_eq!(a.next_mean(), 0.2);

    // Chain sitting in the reward-1 state.
    let chain = ArmSpec::Markov {
        transitions: vec![vec![0.9, 0.1], vec![0.2, 0.8]],
        state_rewards: vec![0.0, 1.0],
        initial_state: 1,
    };
    assert_abs_diff_eq!(arm(chain, 5).next_mean(), 0.8, epsilon = 1e-15);
}

#[test]
fn markov_emits_state_rewards() {
    let identity = ArmSpec::Markov {
        transitions: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        state_rewards: vec![0.25, 0.75],
        initial_state: 0,
    };
    let mut a = arm(identity, 6);
    assert!((0..20).all(|_| a.pull() == 0.25));

    let fair = ArmSpec::Markov {
        transitions: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        state_rewards: vec![0.0, 1.0],
        initial_state: 0,
    };
    let mut a = arm(fair, 7);
    for _ in 0..20 {
        assert_eq!(a.next_mean(), 0.5);
        a.pull();
    }
}

/// Stationary distribution by power iteration on the transition matrix.
fn stationary(p: &[Vec<f64>]) -> Vec<f64> {
    let n = p.len();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..10_000 {
        let mut next = vec![0.0; n];
        for (i, row) in p.iter().enumerate() {
            for (j, pij) in row.iter().enumerate() {
                next[j] += pi[i] * pij;
            }
        }
        pi = next;
    }
    pi
}

#[test]
fn markov_visits_match_stationary_distribution() {
    let p = vec![
        vec![0.5, 0.3, 0.2],
        vec![0.1, 0.6, 0.3],
        vec![0.4, 0.1, 0.5],
    ];
    let pi = stationary(&p);
    let rewards = [0.0, 0.5, 1.0];
    let mut a = arm(
        ArmSpec::Markov {
            transitions: p,
            state_rewards: rewards.to_vec(),
            initial_state: 0,
        },
        8,
    );
    let n = 100_000;
    let mut counts = [0usize; 3];
    for _ in 0..n {
        let r = a.pull();
        counts[rewards.iter().position(|x| *x == r).unwrap()] += 1;
    }
    for (c, p) in counts.iter().zip(&pi) {
        assert!(
            (*c as f64 / n as f64 - p).abs() < 0.01,
            "{counts:?} vs {pi:?}"
        );
    }
}

#[test]
fn markov_rejects_bad_rows() {
    let bad = ArmSpec::Markov {
        transitions: vec![vec![0.5, 0.4], vec![0.5, 0.5]],
        state_rewards: vec![0.0, 1.0],
        initial_state: 0,
    };
    assert!(matches!(bad.validate(), Err(BanditError::Config(_))));
    let dup = ArmSpec::Markov {
        transitions: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        state_rewards: vec![1.0, 1.0],
        initial_state: 0,
    };
    assert!(dup.validate().is_err());
}

#[test]
fn discrepancy_examples() {
    let mut iid = arm(
        ArmSpec::Iid {
            mean: 0.3,
            noise: Noise::Bernoulli,
        },
        9,
    );
    for _ in 0..5 {
        iid.pull();
    }
    let q = WeightVector::new(vec![0.1, 0.4, 0.0, 0.3, 0.2]).unwrap();
    assert_abs_diff_eq!(iid.discrepancy(&q).unwrap(), 0.0, epsilon = 1e-12);

    let mut rot = arm(rotting(1.0), 10);
    rot.pull();
    rot.pull();
    let d = rot.discrepancy(&WeightVector::uniform(2).unwrap()).unwrap();
    assert_abs_diff_eq!(d, -5.0 / 12.0, epsilon = 1e-15);

    let env = make_iid(2, seed(1)).unwrap();
    assert_eq!(
        env.discrepancy(0, &WeightVector::uniform(1).unwrap()),
        Err(BanditError::EmptyHistory { arm: 0 })
    );
}

#[test]
fn iid_generator_grid() {
    assert_eq!(
        make_iid(4, seed(0)).unwrap().next_means(),
        vec![0.25, 0.5, 0.75, 1.0]
    );
    assert_eq!(make_iid(1, seed(0)).unwrap().next_means(), vec![1.0]);
    let env = make_iid(150, seed(0)).unwrap();
    for (i, m) in env.next_means().iter().enumerate() {
        assert_eq!(*m, (i + 1) as f64 / 150.0);
    }
    assert!(matches!(make_iid(0, seed(0)), Err(BanditError::Config(_))));
}

#[test]
fn rarely_changing_spacing() {
    let segs = rarely_changing_segments(100, &[0.2, 0.7]);
    assert_eq!(
        segs.iter().map(|s| s.start).collect::<Vec<_>>(),
        vec![1, 51]
    );
    let segs = rarely_changing_segments(5000, &[0.1; 3]);
    assert_eq!(
        segs.iter().map(|s| s.start).collect::<Vec<_>>(),
        vec![1, 1 + 5000 / 3, 1 + 10000 / 3]
    );
    assert_eq!(rarely_changing_segments(100, &[0.4]).len(), 1);

    let a = make_rarely_changing(20, 5000, seed(4)).unwrap();
    let b = make_rarely_changing(20, 5000, seed(4)).unwrap();
    for (x, y) in a.arms().iter().zip(b.arms()) {
        assert_eq!(x.spec(), y.spec());
        match x.spec() {
            ArmSpec::RarelyChanging { segments, .. } => {
                assert!((1..=10).contains(&segments.len()));
                assert!(segments.iter().all(|s| s.mean > 0.0 && s.mean < 1.0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}

#[test]
fn rotting_generator_grid() {
    let env = make_rotting(150, seed(0)).unwrap();
    for (i, a) in env.arms().iter().enumerate() {
        match a.spec() {
            ArmSpec::Rotting { theta, .. } => {
                assert_abs_diff_eq!(*theta, 0.1 + i as f64 / 15.0, epsilon = 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(a.next_mean(), 1.0);
    }
}

#[test]
fn rotting_jumps_restart() {
    let mut env = make_rotting_jumps(
        1,
        &[0.0, 0.3],
        &[1, 4],
        1.0,
        Noise::Gaussian { sigma: 0.1 },
        seed(2),
    )
    .unwrap();
    let mut means = Vec::new();
    for _ in 0..5 {
        means.push(env.arm(0).next_mean());
        env.pull(0).unwrap();
    }
    assert_eq!(&means[..3], &[1.0, 0.5, 1.0 / 3.0]);
    assert_abs_diff_eq!(means[3], 1.3, epsilon = 1e-15);
    assert_abs_diff_eq!(means[4], 0.8, epsilon = 1e-15);

    assert!(make_rotting_jumps(1, &[0.0, 0.3], &[1, 1], 1.0, Noise::Bernoulli, seed(2)).is_err());
    assert!(make_rotting_jumps(1, &[0.0, 0.3], &[4, 1], 1.0, Noise::Bernoulli, seed(2)).is_err());
}

#[test]
fn rotting_jumps_within_segment_matches_rotting() {
    let mut jumps = make_rotting_jumps(
        1,
        &[0.0, 0.0],
        &[1, 11],
        1.0,
        Noise::Gaussian { sigma: 0.1 },
        seed(3),
    )
    .unwrap();
    for _ in 0..16 {
        jumps.pull(0).unwrap();
    }
    // Six pulls into the second segment, uniform over them.
    let q = WeightVector::uniform_over(16, 11..=16).unwrap();
    let d = jumps.discrepancy(0, &q).unwrap();
    let closed = 7f64.powf(-1.0) - (1..=6).map(|s| 1.0 / s as f64).sum::<f64>() / 6.0;
    assert_abs_diff_eq!(d, closed, epsilon = 1e-12);
}

#[test]
fn periodic_blocks() {
    let mut env = make_periodic(50, vec![vec![10.0, 5.0, 1.0]], 0.3, seed(1)).unwrap();
    let mut seen = Vec::new();
    for _ in 0..300 {
        seen.push(env.arm(0).next_mean());
        env.pull(0).unwrap();
    }
    for (n, m) in seen.iter().enumerate() {
        let expected = [10.0, 5.0, 1.0][(n / 50) % 3];
        assert_eq!(*m, expected, "pull {}", n + 1);
    }
    assert_eq!(seen[50], 5.0);

    let panel = make_periodic_panel(150, 50, seed(1)).unwrap();
    match panel.arm(149).spec() {
        ArmSpec::Periodic { means, .. } => assert_eq!(means, &vec![20.0, 9.0, 4.0]),
        other => panic!("unexpected {other:?}"),
    }
    assert!(make_periodic(50, vec![vec![]], 0.3, seed(1)).is_err());
}

#[test]
fn known_trend_means() {
    let mut env = make_known_trend(&[2.0], &TREND_PANEL_TABLE, 0.3, seed(3)).unwrap();
    // Next pull is #1, and 1 mod 3 = 1.
    assert_eq!(env.arm(0).next_mean(), 2.0);
    env.pull(0).unwrap();
    assert_eq!(env.arm(0).next_mean(), 6.0);
    env.pull(0).unwrap();
    assert_abs_diff_eq!(env.arm(0).next_mean(), 0.2, epsilon = 1e-15);

    let mut flat = make_known_trend(&[0.7], &[1.0], 0.3, seed(3)).unwrap();
    for _ in 0..10 {
        assert_eq!(flat.arm(0).next_mean(), 0.7);
        flat.pull(0).unwrap();
    }
}

#[test]
fn drifting_steps() {
    let step = 5000f64.powf(-2.0 / 3.0);
    assert_abs_diff_eq!(step, 3.42e-3, epsilon = 5e-6);
    let mut env = make_drifting(5, 5000, seed(6)).unwrap();
    for a in env.arms() {
        let m = a.next_mean();
        assert!(m >= 1.0 - 1.0 / 5000f64.sqrt() && m <= 1.0);
    }
    let mut a = arm(
        ArmSpec::Drifting {
            initial_mean: 0.5,
            step,
        },
        1,
    );
    let before = a.next_mean();
    a.pull();
    assert_abs_diff_eq!((a.next_mean() - before).abs(), step, epsilon = 1e-15);
    for _ in 0..2000 {
        let before = env.arm(2).next_mean();
        env.pull(2).unwrap();
        let after = env.arm(2).next_mean();
        assert!((after - before).abs() <= step + 1e-15);
        assert!((0.0..=1.0).contains(&after));
    }
}

#[test]
fn mixed_dispatch() {
    let env = make_mixed(
        vec![
            ArmSpec::Iid {
                mean: 0.5,
                noise: Noise::Bernoulli,
            },
            rotting(1.0),
        ],
        seed(0),
    )
    .unwrap();
    assert_eq!(env.next_means(), vec![0.5, 1.0]);

    let all_iid = EnvSpec::new(Family::Mixed(vec![Family::Iid]), 6, 10)
        .arm_specs(seed(0))
        .unwrap();
    let plain = EnvSpec::new(Family::Iid, 6, 10).arm_specs(seed(0)).unwrap();
    assert_eq!(all_iid, plain);
}

#[test]
fn mixed_oracle_agrees_with_pure_families() {
    let spec = EnvSpec::new(
        Family::Mixed(vec![
            Family::Markov { states: 3 },
            Family::default_rotting(),
        ]),
        4,
        100,
    );
    let s = seed(12);
    let mut mixed = spec.build(s).unwrap();
    let mut pure: Vec<ArmProcess> = (0..4).map(|i| spec.build_arm(i, s).unwrap()).collect();
    for t in 0..400 {
        let i = (t * 7 + t / 3) % 4;
        assert_eq!(mixed.pull(i).unwrap(), pure[i].pull());
    }
    for (i, p) in pure.iter().enumerate() {
        let q = WeightVector::uniform(p.pull_count() as usize).unwrap();
        assert_eq!(
            mixed.discrepancy(i, &q).unwrap(),
            p.discrepancy(&q).unwrap()
        );
    }
}

#[test]
fn reward_ranges() {
    assert_eq!(make_iid(3, seed(0)).unwrap().reward_range(), (0.0, 1.0));
    let (lo, hi) = make_periodic_panel(10, 50, seed(0)).unwrap().reward_range();
    assert_abs_diff_eq!(lo, 1.0 - 0.9, epsilon = 1e-12);
    assert_abs_diff_eq!(hi, 20.9, epsilon = 1e-12);
}

fn family_strategy() -> impl Strategy<Value = Family> {
    prop_oneof![
        Just(Family::Iid),
        Just(Family::default_rarely_changing()),
        Just(Family::default_rotting()),
        Just(Family::Drifting),
        Just(Family::default_trend()),
        Just(Family::default_periodic()),
        (1usize..4).prop_map(|states| Family::Markov { states }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pulling_one_arm_freezes_the_rest(
        family in family_strategy(),
        root in 0u64..1000,
        picks in prop::collection::vec(0usize..4, 1..60),
    ) {
        let mut env = EnvSpec::new(family, 4, 500).build(TrialSeed::new(root, 0)).unwrap();
        for arm in picks {
            let before = env.next_means();
            let snapshot: Vec<_> = env.arms().iter().map(|a| (a.pull_count(), a.recorded_means().to_vec())).collect();
            prop_assert_eq!(env.next_means(), before.clone());
            env.pull(arm).unwrap();
            let after = env.next_means();
            for j in (0..4).filter(|&j| j != arm) {
                prop_assert_eq!(after[j].to_bits(), before[j].to_bits());
                prop_assert_eq!(env.arm(j).pull_count(), snapshot[j].0);
                prop_assert_eq!(env.arm(j).recorded_means(), snapshot[j].1.as_slice());
            }
        }
    }

    #[test]
    fn identical_seeds_identical_streams(family in family_strategy(), root in 0u64..1000) {
        let spec = EnvSpec::new(family, 3, 300);
        let mut a = spec.build(TrialSeed::new(root, 2)).unwrap();
        let mut b = spec.build(TrialSeed::new(root, 2)).unwrap();
        for t in 0..90 {
            prop_assert_eq!(a.pull(t % 3).unwrap().to_bits(), b.pull(t % 3).unwrap().to_bits());
        }
    }

    #[test]
    fn rotting_uniform_closed_form(theta in 0.05f64..5.0, k in 1usize..300) {
        let mut a = arm(rotting(theta), 0);
        for _ in 0..k { a.pull(); }
        let d = a.discrepancy(&WeightVector::uniform(k).unwrap()).unwrap();
        let closed = (k as f64 + 1.0).powf(-theta)
            - (1..=k).map(|s| (s as f64).powf(-theta)).sum::<f64>() / k as f64;
        prop_assert!((d - closed).abs() < 1e-10);
    }
}
