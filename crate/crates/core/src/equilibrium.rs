//! Omniscient equilibrium analysis: best responses, pure Nash equilibrium
//! checks, exhaustive equilibrium enumeration and the pure price of anarchy.

use rayon::prelude::*;
use serde::Serialize;

use crate::assignment;
use crate::error::{Error, Result};
use crate::game::{weighted_sum_rate, Allocation, GameConfig, Occupancy};
use crate::scalar::{rate, Scalar};

/// Default cap on the number of profiles an exhaustive scan may visit.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 10_000_000;

/// A profitable unilateral deviation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation<T> {
    pub user: usize,
    pub better_channel: usize,
    pub utility_gain: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PneReport<T> {
    pub is_pne: bool,
    /// Every strictly improving `(user, channel)` deviation, ordered by user then channel.
    pub violators: Vec<Violation<T>>,
}

impl<T> PneReport<T> {
    /// Number of distinct users with a profitable deviation.
    pub fn violating_users(&self) -> usize {
        let mut users: Vec<usize> = self.violators.iter().map(|v| v.user).collect();
        users.dedup();
        users.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchSpace {
    /// Numerator maximizes `W` over every profile in `{0..K}^N`.
    AllProfiles,
    /// Numerator maximizes `W` over collision-free assignments only, computed
    /// with the Hungarian algorithm on interference-free rates.
    PermutationsOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PpoaResult<T> {
    pub max_w: T,
    pub min_pne_w: T,
    pub ppoa: T,
    pub search_space: SearchSpace,
    pub n_pne: usize,
}

/// Utility-maximizing channel for user `n` with everyone else fixed. Ties go
/// to the incumbent channel if it is maximal, otherwise to the lowest index.
pub fn best_response<T: Scalar>(config: &GameConfig<'_, T>, alloc: &Allocation, n: usize) -> usize {
    let occ = Occupancy::new(alloc, config.n_channels());
    best_response_with(config, &occ, alloc[n], n)
}

pub(crate) fn best_response_with<T: Scalar>(
    config: &GameConfig<'_, T>,
    occ: &Occupancy,
    incumbent: usize,
    n: usize,
) -> usize {
    let mut best = incumbent;
    let mut best_u = config.deviation_utility(occ, n, incumbent);
    // strict improvement only, so the first (lowest) index reaching the max wins
    for k in (0..config.n_channels()).filter(|&k| k != incumbent) {
        let u = config.deviation_utility(occ, n, k);
        if u > best_u {
            best = k;
            best_u = u;
        }
    }
    best
}

/// Check every user against every alternative channel.
///
/// An alternative counts as a violation only when it strictly improves the
/// user's utility.
pub fn verify_pne<T: Scalar>(config: &GameConfig<'_, T>, alloc: &Allocation) -> PneReport<T> {
    let occ = Occupancy::new(alloc, config.n_channels());
    let mut violators = Vec::new();
    for n in 0..config.n_users() {
        let current = config.deviation_utility(&occ, n, alloc[n]);
        // Off-set channels are worth zero in the M-best game and can never beat
        // a non-negative current utility, so only tracked channels are tried.
        for &k in config.tracked(n) {
            if k == alloc[n] {
                continue;
            }
            let u = config.deviation_utility(&occ, n, k);
            if u > current {
                violators.push(Violation {
                    user: n,
                    better_channel: k,
                    utility_gain: u - current,
                });
            }
        }
    }
    PneReport {
        is_pne: violators.is_empty(),
        violators,
    }
}

/// Fast yes/no form of [`verify_pne`].
pub fn is_pne<T: Scalar>(config: &GameConfig<'_, T>, alloc: &Allocation) -> bool {
    let occ = Occupancy::new(alloc, config.n_channels());
    is_pne_with(config, &occ, alloc)
}

pub(crate) fn is_pne_with<T: Scalar>(
    config: &GameConfig<'_, T>,
    occ: &Occupancy,
    alloc: &Allocation,
) -> bool {
    (0..config.n_users()).all(|n| {
        let current = config.deviation_utility(occ, n, alloc[n]);
        config
            .tracked(n)
            .iter()
            .all(|&k| k == alloc[n] || config.deviation_utility(occ, n, k) <= current)
    })
}

/// Number of users whose channel hosts at least one other user.
pub fn count_sharing_users(alloc: &Allocation) -> usize {
    let n_channels = alloc.as_slice().iter().max().map_or(0, |k| k + 1);
    let mut load = vec![0usize; n_channels];
    alloc.as_slice().iter().for_each(|&k| load[k] += 1);
    alloc.as_slice().iter().filter(|&&k| load[k] >= 2).count()
}

fn profile_count(n_users: usize, n_channels: usize) -> Option<u128> {
    (n_channels as u128).checked_pow(u32::try_from(n_users).ok()?)
}

fn check_budget(n_users: usize, n_channels: usize, budget: u128) -> Result<u128> {
    match profile_count(n_users, n_channels) {
        Some(c) if c <= budget => Ok(c),
        c => Err(Error::BudgetExceeded {
            what: "profile enumeration",
            needed: c.unwrap_or(u128::MAX),
            budget,
        }),
    }
}

struct ShardScan<T> {
    pne: Vec<Allocation>,
    max_w: T,
}

/// Visit every profile whose first user is on `first`, lexicographically.
fn scan_shard<T: Scalar>(config: &GameConfig<'_, T>, first: usize, track_max: bool) -> ShardScan<T> {
    let (n, k) = (config.n_users(), config.n_channels());
    let mut profile = vec![0usize; n];
    profile[0] = first;
    let mut out = ShardScan {
        pne: Vec::new(),
        max_w: T::neg_infinity(),
    };
    loop {
        let alloc = Allocation::from_vec_unchecked(profile.clone());
        let occ = Occupancy::new(&alloc, k);
        if is_pne_with(config, &occ, &alloc) {
            out.pne.push(alloc.clone());
        }
        if track_max {
            let w = weighted_sum_rate(config.realization(), config.powers(), &alloc);
            if w > out.max_w {
                out.max_w = w;
            }
        }
        // odometer over users 1..n, last user fastest
        let mut i = n;
        loop {
            if i == 1 {
                return out;
            }
            i -= 1;
            profile[i] += 1;
            if profile[i] < k {
                break;
            }
            profile[i] = 0;
        }
    }
}

fn scan<T: Scalar>(config: &GameConfig<'_, T>, budget: u128, track_max: bool) -> Result<ShardScan<T>> {
    check_budget(config.n_users(), config.n_channels(), budget)?;
    let shards: Vec<ShardScan<T>> = (0..config.n_channels())
        .into_par_iter()
        .map(|first| scan_shard(config, first, track_max))
        .collect();
    let mut merged = ShardScan {
        pne: Vec::new(),
        max_w: T::neg_infinity(),
    };
    for s in shards {
        merged.pne.extend(s.pne);
        if s.max_w > merged.max_w {
            merged.max_w = s.max_w;
        }
    }
    Ok(merged)
}

/// Every pure Nash equilibrium, by exhaustive scan in lexicographic profile order.
///
/// Refuses with [`Error::BudgetExceeded`] when `K^N > budget`.
pub fn enumerate_pne<T: Scalar>(config: &GameConfig<'_, T>, budget: u128) -> Result<Vec<Allocation>> {
    Ok(scan(config, budget, false)?.pne)
}

/// Interference-free weighted rate matrix `w_n log2(1 + P_n h2(n,k) / N0)`.
pub fn interference_free_rates<T: Scalar>(config: &GameConfig<'_, T>) -> Vec<Vec<T>> {
    let (real, powers) = (config.realization(), config.powers());
    (0..config.n_users())
        .map(|n| {
            (0..config.n_channels())
                .map(|k| powers.weight(n) * rate(powers.power(n), real.h2(n, k), powers.n0(), T::zero()))
                .collect()
        })
        .collect()
}

/// Pure price of anarchy: best `W` over the search space divided by the worst
/// `W` among enumerated equilibria.
pub fn compute_ppoa<T: Scalar>(
    config: &GameConfig<'_, T>,
    search_space: SearchSpace,
    budget: u128,
) -> Result<PpoaResult<T>> {
    let track_max = search_space == SearchSpace::AllProfiles;
    let scanned = scan(config, budget, track_max)?;
    let max_w = match search_space {
        SearchSpace::AllProfiles => scanned.max_w,
        SearchSpace::PermutationsOnly => {
            assignment::optimal_permutation(&interference_free_rates(config))?.value
        }
    };
    ppoa_from(config, &scanned.pne, max_w, search_space)
}

/// PPoA from a known equilibrium set and numerator.
pub fn ppoa_from<T: Scalar>(
    config: &GameConfig<'_, T>,
    pne: &[Allocation],
    max_w: T,
    search_space: SearchSpace,
) -> Result<PpoaResult<T>> {
    let min_pne_w = pne
        .iter()
        .map(|a| weighted_sum_rate(config.realization(), config.powers(), a))
        .fold(None, |acc: Option<T>, w| Some(acc.map_or(w, |m| m.min(w))))
        .ok_or(Error::NoEquilibrium)?;
    Ok(PpoaResult {
        max_w,
        min_pne_w,
        ppoa: max_w / min_pne_w,
        search_space,
        n_pne: pne.len(),
    })
}
