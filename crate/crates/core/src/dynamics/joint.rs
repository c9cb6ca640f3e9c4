//! Joint-strategy fictitious play with perfect information, used as a
//! reference for the harmonic-step modified fictitious play.
//!
//! Each user counts how often every rival profile `a_{-n}` has been played
//! and best-responds to the empirical mixture. The table has `K^(N-1)`
//! entries per user, so this is only usable on tiny games.

use crate::error::{Error, Result};
use crate::game::{Allocation, GameConfig};
use crate::scalar::Scalar;

use super::{argmax_with_incumbent, initial_draws, record, Trajectory};

/// Cap on the total number of rival-profile counters across all users.
pub const DEFAULT_RIVAL_TABLE_BUDGET: u128 = 1_000_000;

/// Index of the rival profile of user `n`: the channels of every other user,
/// in ascending user order, read as a base-`K` number.
fn rival_index(alloc: &[usize], n: usize, k: usize) -> usize {
    alloc
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != n)
        .fold(0, |acc, (_, &c)| acc * k + c)
}

fn decode_rivals(mut index: usize, n: usize, n_users: usize, k: usize, out: &mut [usize]) {
    for m in (0..n_users).rev().filter(|&m| m != n) {
        out[m] = index % k;
        index /= k;
    }
    out[n] = usize::MAX;
}

/// Utility of user `n` on channel `k` against a fixed rival profile. The
/// interference is summed in ascending transmitter order, like the sensed
/// interference of the modified fictitious play.
fn utility_against<T: Scalar>(game: &GameConfig<'_, T>, rivals: &[usize], n: usize, k: usize) -> T {
    let (real, powers) = (game.realization(), game.powers());
    let interference = rivals
        .iter()
        .enumerate()
        .filter(|&(m, &c)| m != n && c == k)
        .fold(T::zero(), |acc, (m, _)| acc + real.gain(m, n, k) * powers.power(m));
    game.utility_at(n, k, interference)
}

/// Run joint-strategy fictitious play for `t_max` rounds.
///
/// Round 1 plays the same uniform draws as [`super::mfp_init`] with the same
/// `seed`. Afterwards each user plays the tracked channel maximizing
/// `sum_i p_i u_n(k, a_{i,-n})`, where `p_i` is the empirical frequency of
/// rival profile `i`, with the same tie rule as the modified fictitious play.
pub fn run_joint_fp_reference<T: Scalar>(
    game: &GameConfig<'_, T>,
    t_max: usize,
    seed: u64,
    budget: u128,
) -> Result<Trajectory<T>> {
    if t_max == 0 {
        return Err(Error::config("t_max must be at least 1"));
    }
    let (n_users, n_channels) = (game.n_users(), game.n_channels());
    let table = (n_channels as u128)
        .checked_pow((n_users - 1) as u32)
        .and_then(|per_user| per_user.checked_mul(n_users as u128));
    let table_len = match table {
        Some(t) if t <= budget => (t / n_users as u128) as usize,
        t => {
            return Err(Error::BudgetExceeded {
                what: "rival-profile table",
                needed: t.unwrap_or(u128::MAX),
                budget,
            })
        }
    };

    let (_, mut current) = initial_draws(game, seed);
    let mut counts = vec![vec![0u64; table_len]; n_users];
    let mut records = Vec::with_capacity(t_max);
    let mut rivals = vec![0usize; n_users];
    let mut scores = Vec::new();

    for t in 1..=t_max {
        if t > 1 {
            let observed = (t - 1) as f64;
            let next: Vec<usize> = (0..n_users)
                .map(|n| {
                    let set = game.tracked(n);
                    scores.clear();
                    scores.resize(set.len(), T::zero());
                    for (i, &c) in counts[n].iter().enumerate().filter(|(_, &c)| c > 0) {
                        decode_rivals(i, n, n_users, n_channels, &mut rivals);
                        let p = T::of(c as f64 / observed);
                        for (s, &k) in scores.iter_mut().zip(set) {
                            *s = *s + p * utility_against(game, &rivals, n, k);
                        }
                    }
                    argmax_with_incumbent(set, &scores, current[n])
                })
                .collect();
            current = next;
        }
        for (n, c) in counts.iter_mut().enumerate() {
            c[rival_index(&current, n, n_channels)] += 1;
        }
        let alloc = Allocation::from_vec_unchecked(current.clone());
        records.push(record(game, t, &alloc, 0));
    }
    Ok(Trajectory::from_records(records, 0))
}
