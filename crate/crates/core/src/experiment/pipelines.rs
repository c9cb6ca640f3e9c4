use std::fs::File;
use std::io::BufWriter;

use rand::seq::SliceRandom;

use super::{ratio_to_optimal, ExperimentKind, ExperimentSpec, GridPoint, Metrics};
use crate::assignment::{count_perfect_matchings, maximum_matching, PreferenceGraph, PERMANENT_MAX_N};
use crate::channel::{ChannelRealization, OrderedChannels, PowerProfile};
use crate::dynamics::{run_dynamics, run_joint_fp_reference, DynamicsConfig, DEFAULT_RIVAL_TABLE_BUDGET};
use crate::equilibrium::{compute_ppoa, enumerate_pne, SearchSpace};
use crate::error::{Error, Result};
use crate::game::{rates, strong_interference_holds, Allocation, GameConfig, GameKind};
use crate::rng::{self, streams};

/// Cross-gain scaling escalates by 10x at most this many times while looking
/// for a strong-interference realization.
const MAX_SCALE_DECADES: u32 = 24;

pub(super) fn run(spec: &ExperimentSpec, point: &GridPoint, index: usize, seed: u64) -> Result<Metrics> {
    match spec.experiment {
        ExperimentKind::Convergence | ExperimentKind::RatesVsN | ExperimentKind::SnrSweep => {
            dynamics_run(spec, point, index, seed)
        }
        ExperimentKind::Lemma1Check => lemma1(spec, point, seed),
        ExperimentKind::MatchingCheck => matching(point, seed),
        ExperimentKind::PpoaSmall => ppoa(spec, point, seed),
        ExperimentKind::FpEquivalence => fp_equivalence(spec, point, seed),
    }
}

fn realization(spec: &ExperimentSpec, point: &GridPoint, seed: u64) -> Result<ChannelRealization<f64>> {
    let r = ChannelRealization::generate(point.n, point.k, seed)?;
    Ok(if spec.cross_gain_scale == 1.0 {
        r
    } else {
        r.with_cross_gains_scaled(spec.cross_gain_scale)
    })
}

fn powers(spec: &ExperimentSpec, point: &GridPoint, seed: u64) -> Result<PowerProfile<f64>> {
    let p = PowerProfile::from_snr_db(point.n, point.snr_db, spec.n0)?;
    match spec.weights {
        Some(w) => p.with_random_weights(w.min, w.max, seed),
        None => Ok(p),
    }
}

fn mean_min(values: &[f64]) -> (f64, f64) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (mean, values.iter().copied().fold(f64::INFINITY, f64::min))
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn opt_time(t: Option<usize>) -> f64 {
    t.map_or(f64::NAN, |t| t as f64)
}

fn dynamics_run(spec: &ExperimentSpec, point: &GridPoint, index: usize, seed: u64) -> Result<Metrics> {
    let real = realization(spec, point, seed)?;
    let powers = powers(spec, point, seed)?;
    let game = GameConfig::new(spec.game.game_kind(point.m), &real, &powers)?;
    let dynamics = DynamicsConfig {
        schedule: spec.reset_schedule,
        ..DynamicsConfig::constant(point.alpha, point.tau, point.t_max)
    };
    let traj = run_dynamics(&game, &dynamics, rng::dynamics_seed(seed))?;

    if spec.save_trajectories {
        if let Some(dir) = &spec.out {
            let path = dir.join(format!(
                "trajectory_{}_n{}_m{}_snr{}_a{}_r{}.jsonl",
                spec.experiment, point.n, point.m, point.snr_db, point.alpha, index
            ));
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            traj.write_jsonl(BufWriter::new(file))
                .map_err(|e| Error::io(&path, e))?;
        }
    }

    let last = traj.final_alloc().expect("t_max >= 1");
    let ratios = ratio_to_optimal(&real, &powers, last)?;
    let (mean_rate, min_rate) = mean_min(&rates(&real, &powers, last));
    let (opt_mean, opt_min) = mean_min(&rates(&real, &powers, &ratios.optimum.allocation()));

    // random permutation baseline drawn from the realization's own stream
    let mut perm: Vec<usize> = (0..point.n).collect();
    perm.shuffle(&mut rng::stream(seed, streams::BASELINE));
    let baseline = Allocation::new(perm, point.k)?;
    let (rand_mean, rand_min) = mean_min(&rates(&real, &powers, &baseline));

    let final_record = traj.records.last().expect("t_max >= 1");
    Ok(vec![
        ("converged", flag(final_record.is_pne)),
        ("first_pne_time", opt_time(traj.first_pne())),
        ("convergence_time", opt_time(traj.convergence_time())),
        ("resets", traj.resets as f64),
        ("n_sharing", final_record.n_sharing as f64),
        ("sum_rate_ratio", ratios.to_hungarian),
        ("min_rate_ratio", ratios.min_rate_ratio),
        ("best_channel_ratio", ratios.to_best_channels),
        ("mean_rate", mean_rate),
        ("min_rate", min_rate),
        ("opt_mean_rate", opt_mean),
        ("opt_min_rate", opt_min),
        ("random_mean_rate", rand_mean),
        ("random_min_rate", rand_min),
    ])
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn lemma1(spec: &ExperimentSpec, point: &GridPoint, seed: u64) -> Result<Metrics> {
    let base = ChannelRealization::generate(point.n, point.k, seed)?;
    let powers = powers(spec, point, seed)?;
    let mut scale = spec.cross_gain_scale;
    let mut real = base.with_cross_gains_scaled(scale);
    let mut holds = strong_interference_holds(&real, &powers)?;
    for _ in 0..MAX_SCALE_DECADES {
        if holds {
            break;
        }
        scale *= 10.0;
        real = base.with_cross_gains_scaled(scale);
        holds = strong_interference_holds(&real, &powers)?;
    }
    let game = GameConfig::new(GameKind::Naive, &real, &powers)?;
    let pne = enumerate_pne(&game, spec.enumeration_budget)?;
    let all_perms = pne.iter().all(Allocation::is_collision_free);
    Ok(vec![
        ("condition_holds", flag(holds)),
        ("log10_cross_scale", scale.log10()),
        ("n_pne", pne.len() as f64),
        ("n_factorial", factorial(point.n)),
        ("all_permutations", flag(all_perms)),
        ("exactly_permutations", flag(all_perms && pne.len() as f64 == factorial(point.n))),
    ])
}

fn matching(point: &GridPoint, seed: u64) -> Result<Metrics> {
    let real = ChannelRealization::<f64>::generate(point.n, point.k, seed)?;
    let graph = PreferenceGraph::from_best_sets(&OrderedChannels::new(&real), point.m)?;
    let m = maximum_matching(&graph);
    let perfect = m.is_perfect(&graph);
    let (count, bound) = if point.n <= PERMANENT_MAX_N {
        let c = count_perfect_matchings(&graph)?;
        let bound = if perfect { flag(c as f64 >= factorial(point.m)) } else { f64::NAN };
        (c as f64, bound)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(vec![
        ("perfect_matching", flag(perfect)),
        ("matching_size", m.size as f64),
        ("min_channel_degree", graph.right_degrees().into_iter().min().unwrap_or(0) as f64),
        ("perfect_matchings", count),
        ("hall_bound_holds", bound),
    ])
}

fn ppoa(spec: &ExperimentSpec, point: &GridPoint, seed: u64) -> Result<Metrics> {
    let real = realization(spec, point, seed)?;
    let powers = powers(spec, point, seed)?;
    let mut out = Metrics::new();
    for (kind, ppoa_key, count_key) in [
        (GameKind::Naive, "naive_ppoa", "naive_n_pne"),
        (GameKind::MFsig { m: point.m }, "mfsig_ppoa", "mfsig_n_pne"),
    ] {
        let game = GameConfig::new(kind, &real, &powers)?;
        match compute_ppoa(&game, SearchSpace::AllProfiles, spec.enumeration_budget) {
            Ok(res) => {
                out.push((ppoa_key, res.ppoa));
                out.push((count_key, res.n_pne as f64));
            }
            Err(Error::NoEquilibrium) => {
                out.push((ppoa_key, f64::NAN));
                out.push((count_key, 0.0));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn fp_equivalence(spec: &ExperimentSpec, point: &GridPoint, seed: u64) -> Result<Metrics> {
    let real = realization(spec, point, seed)?;
    let powers = powers(spec, point, seed)?;
    let game = GameConfig::new(spec.game.game_kind(point.m), &real, &powers)?;
    let dseed = rng::dynamics_seed(seed);
    let mfp = run_dynamics(&game, &DynamicsConfig::harmonic(point.t_max), dseed)?;
    let jfp = run_joint_fp_reference(&game, point.t_max, dseed, DEFAULT_RIVAL_TABLE_BUDGET)?;
    let divergence = mfp
        .records
        .iter()
        .zip(&jfp.records)
        .find(|(a, b)| a.alloc != b.alloc)
        .map(|(a, _)| a.t);
    Ok(vec![
        ("traces_equal", flag(divergence.is_none())),
        ("first_divergence", opt_time(divergence)),
    ])
}
