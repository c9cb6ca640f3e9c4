use chanalloc::channel::{ChannelRealization, OrderedChannels, PowerProfile};
use chanalloc::dynamics::{mfp_init, mfp_step, run_dynamics, DynamicsConfig};
use chanalloc::equilibrium::is_pne;
use chanalloc::game::{interference, weighted_sum_rate, GameConfig};
use chanalloc::{Allocation, GameKind};
use proptest::prelude::*;

fn powers(n: usize) -> PowerProfile<f64> {
    PowerProfile::from_snr_db(n, 20.0, 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn realizations_depend_only_on_the_seed(n in 1usize..6, k in 1usize..6, seed: u64) {
        let a = ChannelRealization::<f64>::generate(n, k, seed).unwrap();
        let b = ChannelRealization::<f64>::generate(n, k, seed).unwrap();
        prop_assert_eq!(a.as_slice(), b.as_slice());
        prop_assert!(a.as_slice().iter().all(|g| g.is_finite() && *g >= 0.0));
    }

    #[test]
    fn ordered_channels_are_consistent(n in 1usize..5, k in 1usize..10, seed: u64) {
        let r = ChannelRealization::<f64>::generate(n, k, seed).unwrap();
        let o = OrderedChannels::new(&r);
        for u in 0..n {
            let order = o.order(u);
            prop_assert!(order.windows(2).all(|w| r.h2(u, w[0]) >= r.h2(u, w[1])));
            for m in 1..=k {
                prop_assert_eq!(o.mth_best_gain(u, m), r.h2(u, order[m - 1]));
                let set = o.best_m_set(u, m).unwrap();
                prop_assert_eq!(set.len(), m);
                prop_assert!(set.iter().all(|&c| r.h2(u, c) >= o.mth_best_gain(u, m)));
                if m > 1 {
                    let smaller = o.best_m_set(u, m - 1).unwrap();
                    prop_assert!(smaller.iter().all(|c| set.contains(c)));
                }
            }
        }
    }

    #[test]
    fn a_user_never_interferes_with_itself(
        seed: u64,
        alloc in proptest::collection::vec(0usize..3, 4),
    ) {
        let r = ChannelRealization::<f64>::generate(4, 3, seed).unwrap();
        let p = powers(4);
        let a = Allocation::new(alloc.clone(), 3).unwrap();
        for n in 0..4 {
            let mut others_only = alloc.clone();
            others_only[n] = (alloc[n] + 1) % 3;
            let moved = Allocation::new(others_only, 3).unwrap();
            prop_assert_eq!(interference(&r, &p, &a, n, alloc[n]), interference(&r, &p, &moved, n, alloc[n]));
        }
    }

    #[test]
    fn sum_rate_is_invariant_under_relabeling_users(seed: u64, perm in Just((0..4).collect::<Vec<usize>>()).prop_shuffle()) {
        let r = ChannelRealization::<f64>::generate(4, 4, seed).unwrap();
        let p = powers(4);
        let a = Allocation::new(vec![0, 1, 1, 3], 4).unwrap();
        // relabeled user u is original user perm_inv(u)
        let relabeled = ChannelRealization::from_fn(4, 4, |tx, rx, k| r.gain(perm_inv(&perm, tx), perm_inv(&perm, rx), k)).unwrap();
        let b = Allocation::new((0..4).map(|u| a[perm_inv(&perm, u)]).collect(), 4).unwrap();
        let (w1, w2) = (weighted_sum_rate(&r, &p, &a), weighted_sum_rate(&relabeled, &p, &b));
        prop_assert!((w1 - w2).abs() < 1e-9 * w1.abs().max(1.0));
    }

    #[test]
    fn dynamics_stay_in_the_best_m_sets(n in 2usize..8, m in 1usize..4, alpha in 0.05f64..=1.0, seed: u64) {
        let m = m.min(n);
        let r = ChannelRealization::<f64>::generate(n, n, seed).unwrap();
        let p = powers(n);
        let g = GameConfig::new(GameKind::MFsig { m }, &r, &p).unwrap();
        let traj = run_dynamics(&g, &DynamicsConfig::constant(alpha, 7, 60), seed).unwrap();
        for rec in &traj.records {
            prop_assert!((0..n).all(|u| g.is_tracked(u, rec.alloc[u])));
        }
    }

    #[test]
    fn equilibria_are_absorbing_without_resets(n in 2usize..10, alpha in 0.05f64..=1.0, seed: u64) {
        let m = n.min(3);
        let r = ChannelRealization::<f64>::generate(n, n, seed).unwrap();
        let p = powers(n);
        let g = GameConfig::new(GameKind::MFsig { m }, &r, &p).unwrap();
        let traj = run_dynamics(&g, &DynamicsConfig::constant(alpha, 0, 120), seed).unwrap();
        prop_assert_ne!(traj.held_after_first_pne(), Some(false));
    }

    #[test]
    fn settled_fictitious_utilities_mean_an_equilibrium(n in 2usize..8, seed: u64) {
        let m = n.min(3);
        let r = ChannelRealization::<f64>::generate(n, n, seed).unwrap();
        let p = powers(n);
        let g = GameConfig::new(GameKind::MFsig { m }, &r, &p).unwrap();
        let dynamics = DynamicsConfig::constant(0.5, 0, 400);
        let mut state = mfp_init(&g, &dynamics, seed).unwrap();
        let mut history: Vec<Vec<Vec<f64>>> = Vec::new();
        for _ in 0..400 {
            mfp_step(&mut state, &g, &dynamics);
            history.push((0..n).map(|u| state.u_bar(u).to_vec()).collect());
        }
        let window = &history[history.len() - 50..];
        let settled = window.iter().all(|snap| {
            snap.iter().zip(&window[0]).all(|(a, b)| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12))
        });
        if settled {
            prop_assert!(is_pne(&g, state.last_alloc().unwrap()));
        }
    }

    #[test]
    fn runs_are_deterministic(n in 2usize..8, seed: u64) {
        let r = ChannelRealization::<f64>::generate(n, n, seed).unwrap();
        let p = powers(n);
        let g = GameConfig::new(GameKind::MFsig { m: n.min(3) }, &r, &p).unwrap();
        let dynamics = DynamicsConfig::constant(0.5, 10, 40);
        let (a, b) = (run_dynamics(&g, &dynamics, seed).unwrap(), run_dynamics(&g, &dynamics, seed).unwrap());
        let (mut ja, mut jb) = (Vec::new(), Vec::new());
        a.write_jsonl(&mut ja).unwrap();
        b.write_jsonl(&mut jb).unwrap();
        prop_assert_eq!(ja, jb);
    }
}

fn perm_inv(perm: &[usize], i: usize) -> usize {
    perm.iter().position(|&p| p == i).unwrap()
}

#[test]
fn single_precision_games_agree_with_double() {
    let r64 = ChannelRealization::<f64>::generate(5, 5, 3).unwrap();
    let r32 = ChannelRealization::<f32>::from_fn(5, 5, |tx, rx, k| r64.gain(tx, rx, k) as f32).unwrap();
    let p32 = PowerProfile::<f32>::from_snr_db(5, 20.0, 1.0).unwrap();
    let a = Allocation::new(vec![0, 1, 2, 3, 3], 5).unwrap();
    let w32 = weighted_sum_rate(&r32, &p32, &a) as f64;
    let w64 = weighted_sum_rate(&r64, &powers(5), &a);
    assert!((w32 - w64).abs() < 1e-4 * w64);
}
