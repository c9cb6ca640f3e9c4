//! Interference model, utilities of both games and the global weighted
//! sum-rate.

use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::channel::{check_m, ChannelRealization, OrderedChannels, PowerProfile};
use crate::error::{Error, Result};
use crate::scalar::{rate, Scalar};

/// Strategy profile: `alloc[n]` is the channel user `n` transmits on.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation(Vec<usize>);

impl Allocation {
    pub fn new(channels: Vec<usize>, n_channels: usize) -> Result<Self> {
        if let Some((n, &k)) = channels.iter().enumerate().find(|(_, &k)| k >= n_channels) {
            return Err(Error::InvalidInput(format!(
                "user {n} assigned channel {k}, but only {n_channels} channels exist"
            )));
        }
        Ok(Self(channels))
    }

    /// Wrap without range checking. Callers guarantee every entry is a valid channel.
    pub(crate) fn from_vec_unchecked(channels: Vec<usize>) -> Self {
        Self(channels)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    /// True when no two users share a channel.
    pub fn is_collision_free(&self) -> bool {
        let mut seen = std::collections::HashSet::with_capacity(self.0.len());
        self.0.iter().all(|k| seen.insert(*k))
    }
}

impl Index<usize> for Allocation {
    type Output = usize;

    fn index(&self, n: usize) -> &usize {
        &self.0[n]
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, "]")
    }
}

/// Users on each channel, in ascending user order.
#[derive(Clone, Debug)]
pub struct Occupancy {
    users: Vec<Vec<usize>>,
}

impl Occupancy {
    pub fn new(alloc: &Allocation, n_channels: usize) -> Self {
        let mut users = vec![Vec::new(); n_channels];
        for (n, &k) in alloc.as_slice().iter().enumerate() {
            users[k].push(n);
        }
        Self { users }
    }

    pub fn occupants(&self, k: usize) -> &[usize] {
        &self.users[k]
    }

    /// `I_{n,k}`: interference user `n` would see on channel `k`. Sums over
    /// the other occupants of `k` in ascending transmitter order.
    pub fn interference<T: Scalar>(
        &self,
        realization: &ChannelRealization<T>,
        powers: &PowerProfile<T>,
        n: usize,
        k: usize,
    ) -> T {
        self.users[k]
            .iter()
            .filter(|&&m| m != n)
            .fold(T::zero(), |acc, &m| acc + realization.gain(m, n, k) * powers.power(m))
    }
}

/// `I_{n,k}(a_{-n}) = sum_{m != n, a_m = k} |h_{m,n,k}|^2 P_m`.
pub fn interference<T: Scalar>(
    realization: &ChannelRealization<T>,
    powers: &PowerProfile<T>,
    alloc: &Allocation,
    n: usize,
    k: usize,
) -> T {
    alloc
        .as_slice()
        .iter()
        .enumerate()
        .filter(|&(m, &km)| m != n && km == k)
        .fold(T::zero(), |acc, (m, _)| acc + realization.gain(m, n, k) * powers.power(m))
}

/// Achievable rate of user `n` treating interference as noise.
pub fn naive_utility<T: Scalar>(
    realization: &ChannelRealization<T>,
    powers: &PowerProfile<T>,
    alloc: &Allocation,
    n: usize,
) -> T {
    let k = alloc[n];
    rate(
        powers.power(n),
        realization.h2(n, k),
        powers.n0(),
        interference(realization, powers, alloc, n, k),
    )
}

/// True achievable rate of every user.
pub fn rates<T: Scalar>(
    realization: &ChannelRealization<T>,
    powers: &PowerProfile<T>,
    alloc: &Allocation,
) -> Vec<T> {
    let occ = Occupancy::new(alloc, realization.n_channels());
    (0..alloc.len())
        .map(|n| {
            let k = alloc[n];
            rate(
                powers.power(n),
                realization.h2(n, k),
                powers.n0(),
                occ.interference(realization, powers, n, k),
            )
        })
        .collect()
}

/// `W(a) = sum_n w_n * rate_n(a)`, always measured with true achievable rates.
pub fn weighted_sum_rate<T: Scalar>(
    realization: &ChannelRealization<T>,
    powers: &PowerProfile<T>,
    alloc: &Allocation,
) -> T {
    rates(realization, powers, alloc)
        .into_iter()
        .enumerate()
        .map(|(n, r)| powers.weight(n) * r)
        .sum()
}

/// Check the strong-interference condition under which every Naive-game
/// equilibrium is a permutation:
///
/// `min_k h2(n,k) / N0 > max_l h2(n,l) / (N0 + min_{m != n} gain(m,n,l) P_m)` for every `n`.
pub fn strong_interference_holds<T: Scalar>(
    realization: &ChannelRealization<T>,
    powers: &PowerProfile<T>,
) -> Result<bool> {
    let n_users = realization.n_users();
    if n_users < 2 {
        return Err(Error::config(
            "strong-interference condition needs at least two users",
        ));
    }
    let n0 = powers.n0();
    for n in 0..n_users {
        let lhs = realization
            .direct_gains(n)
            .iter()
            .copied()
            .fold(T::infinity(), T::min)
            / n0;
        let rhs = (0..realization.n_channels())
            .map(|l| {
                let weakest = (0..n_users)
                    .filter(|&m| m != n)
                    .map(|m| realization.gain(m, n, l) * powers.power(m))
                    .fold(T::infinity(), T::min);
                realization.h2(n, l) / (n0 + weakest)
            })
            .fold(T::neg_infinity(), T::max);
        if lhs.is_nan() || lhs <= rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Which utility the players maximize.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameKind {
    /// Utility is the true achievable rate.
    Naive,
    /// Utility is positive only on the user's `m` best channels, and there
    /// depends on interference alone.
    #[serde(rename = "mfsig")]
    MFsig { m: usize },
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameKind::Naive => write!(f, "naive"),
            GameKind::MFsig { m } => write!(f, "{m}-fsig"),
        }
    }
}

/// A game instance: realization, powers and utility rule, with each user's
/// tracked channel set precomputed.
#[derive(Clone, Debug)]
pub struct GameConfig<'a, T> {
    kind: GameKind,
    realization: &'a ChannelRealization<T>,
    powers: &'a PowerProfile<T>,
    ordered: OrderedChannels<T>,
    tracked: Vec<Vec<usize>>,
    in_set: Vec<Vec<bool>>,
    // numerator gain of each user's utility in the M-best game
    mth_gain: Vec<T>,
}

impl<'a, T: Scalar> GameConfig<'a, T> {
    pub fn new(
        kind: GameKind,
        realization: &'a ChannelRealization<T>,
        powers: &'a PowerProfile<T>,
    ) -> Result<Self> {
        let (n_users, n_channels) = (realization.n_users(), realization.n_channels());
        if powers.n_users() != n_users {
            return Err(Error::config(format!(
                "power profile has {} users, realization has {n_users}",
                powers.n_users()
            )));
        }
        let ordered = OrderedChannels::new(realization);
        let (tracked, mth_gain) = match kind {
            GameKind::Naive => (vec![(0..n_channels).collect(); n_users], vec![T::zero(); n_users]),
            GameKind::MFsig { m } => {
                check_m(m, n_channels)?;
                let sets = (0..n_users)
                    .map(|n| ordered.best_m_set(n, m))
                    .collect::<Result<Vec<_>>>()?;
                let gains = (0..n_users).map(|n| ordered.mth_best_gain(n, m)).collect();
                (sets, gains)
            }
        };
        let in_set = tracked
            .iter()
            .map(|set| {
                let mut mask = vec![false; n_channels];
                set.iter().for_each(|&k| mask[k] = true);
                mask
            })
            .collect();
        Ok(Self {
            kind,
            realization,
            powers,
            ordered,
            tracked,
            in_set,
            mth_gain,
        })
    }

    pub fn kind(&self) -> GameKind {
        self.kind
    }

    pub fn realization(&self) -> &'a ChannelRealization<T> {
        self.realization
    }

    pub fn powers(&self) -> &'a PowerProfile<T> {
        self.powers
    }

    pub fn ordered(&self) -> &OrderedChannels<T> {
        &self.ordered
    }

    pub fn n_users(&self) -> usize {
        self.realization.n_users()
    }

    pub fn n_channels(&self) -> usize {
        self.realization.n_channels()
    }

    /// Channels user `n` tracks, ascending: the M best for the M-best game,
    /// every channel for the naive game.
    pub fn tracked(&self, n: usize) -> &[usize] {
        &self.tracked[n]
    }

    pub fn is_tracked(&self, n: usize, k: usize) -> bool {
        self.in_set[n][k]
    }

    /// Utility user `n` gets on channel `k` under interference `interference`.
    #[inline]
    pub fn utility_at(&self, n: usize, k: usize, interference: T) -> T {
        let p = self.powers.power(n);
        let n0 = self.powers.n0();
        match self.kind {
            GameKind::Naive => rate(p, self.realization.h2(n, k), n0, interference),
            GameKind::MFsig { .. } if self.in_set[n][k] => {
                rate(p, self.mth_gain[n], n0, interference)
            }
            GameKind::MFsig { .. } => T::zero(),
        }
    }

    /// Utility of user `n` if they moved to `k` with everyone else fixed.
    #[inline]
    pub fn deviation_utility(&self, occ: &Occupancy, n: usize, k: usize) -> T {
        self.utility_at(n, k, occ.interference(self.realization, self.powers, n, k))
    }

    /// `u_n(a)` under this game's utility rule.
    pub fn utility(&self, alloc: &Allocation, n: usize) -> T {
        let k = alloc[n];
        self.utility_at(n, k, interference(self.realization, self.powers, alloc, n, k))
    }

    pub fn check_allocation(&self, alloc: &Allocation) -> Result<()> {
        if alloc.len() != self.n_users() {
            return Err(Error::InvalidInput(format!(
                "allocation has {} entries for {} users",
                alloc.len(),
                self.n_users()
            )));
        }
        if let Some(&k) = alloc.as_slice().iter().find(|&&k| k >= self.n_channels()) {
            return Err(Error::InvalidInput(format!("channel {k} out of range")));
        }
        Ok(())
    }
}

/// M-best game utility of user `n`. Zero off the user's M best channels;
/// otherwise the rate the user's M-th best gain would reach under the
/// interference on the occupied channel.
pub fn mfsig_utility<T: Scalar>(config: &GameConfig<'_, T>, alloc: &Allocation, n: usize) -> T {
    debug_assert!(matches!(config.kind(), GameKind::MFsig { .. }));
    config.utility(alloc, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alloc(v: &[usize], k: usize) -> Allocation {
        Allocation::new(v.to_vec(), k).unwrap()
    }

    #[test]
    fn allocation_range_checked() {
        assert!(Allocation::new(vec![0, 2], 2).is_err());
        assert!(alloc(&[0, 1], 2).is_collision_free());
        assert!(!alloc(&[1, 1], 2).is_collision_free());
    }

    #[test]
    fn empty_channel_has_no_interference() {
        let r = ChannelRealization::<f64>::generate(3, 3, 1).unwrap();
        let p = PowerProfile::uniform(3, 1.0, 1.0).unwrap();
        let a = alloc(&[0, 1, 1], 3);
        assert_eq!(interference(&r, &p, &a, 0, 2), 0.0);
        assert_eq!(interference(&r, &p, &a, 0, 0), 0.0);
    }

    #[test]
    fn single_interferer_arithmetic() {
        let r = ChannelRealization::<f64>::from_fn(2, 1, |tx, rx, _| if tx == rx { 1.0 } else { 0.5 })
            .unwrap();
        let p = PowerProfile::uniform(2, 2.0, 1.0).unwrap();
        let a = alloc(&[0, 0], 1);
        assert_eq!(interference(&r, &p, &a, 1, 0), 1.0);
    }

    #[test]
    fn naive_utility_closed_form() {
        let r = ChannelRealization::<f64>::from_fn(1, 1, |_, _, _| 1.0).unwrap();
        let p = PowerProfile::uniform(1, 100.0, 1.0).unwrap();
        let u = naive_utility(&r, &p, &alloc(&[0], 1), 0);
        assert!((u - 6.658211482751795).abs() < 1e-12);
    }

    #[test]
    fn naive_utility_vanishes_under_huge_interference() {
        let r = ChannelRealization::<f64>::from_fn(2, 1, |tx, rx, _| if tx == rx { 1.0 } else { 1e6 })
            .unwrap();
        let p = PowerProfile::uniform(2, 1.0, 1.0).unwrap();
        let u = naive_utility(&r, &p, &alloc(&[0, 0], 1), 0);
        assert!(u > 0.0 && u < 2e-6);
    }

    #[test]
    fn mfsig_utility_cases() {
        // one user, gains [0.3, 1.2, 0.7], M = 2: set {1, 2}, numerator gain 0.7
        let gains = [0.3, 1.2, 0.7];
        let r = ChannelRealization::<f64>::from_fn(1, 3, |_, _, k| gains[k]).unwrap();
        let p = PowerProfile::uniform(1, 100.0, 1.0).unwrap();
        let g = GameConfig::new(GameKind::MFsig { m: 2 }, &r, &p).unwrap();
        assert_eq!(mfsig_utility(&g, &alloc(&[0], 3), 0), 0.0);
        let expect = (1.0 + 100.0 * 0.7_f64).log2();
        assert_eq!(mfsig_utility(&g, &alloc(&[1], 3), 0), expect);
        assert_eq!(mfsig_utility(&g, &alloc(&[2], 3), 0), expect);
        assert_eq!(g.ordered().ranked(0, 3 - 2 + 1), 0.7);
        assert!(g.utility_at(0, 1, 0.5) > g.utility_at(0, 2, 1.5));
    }

    #[test]
    fn mfsig_rejects_bad_m() {
        let r = ChannelRealization::<f64>::generate(2, 3, 1).unwrap();
        let p = PowerProfile::uniform(2, 1.0, 1.0).unwrap();
        assert!(GameConfig::new(GameKind::MFsig { m: 4 }, &r, &p).is_err());
        assert!(GameConfig::new(GameKind::MFsig { m: 0 }, &r, &p).is_err());
    }

    #[test]
    fn single_user_sum_rate() {
        let r = ChannelRealization::<f64>::generate(1, 4, 3).unwrap();
        let p = PowerProfile::new(vec![10.0], 1.0, vec![2.5]).unwrap();
        let a = alloc(&[2], 4);
        assert_eq!(weighted_sum_rate(&r, &p, &a), 2.5 * naive_utility(&r, &p, &a, 0));
    }

    #[test]
    fn strong_interference_uniform_example() {
        // direct gains 1, P_m * cross = 9, N0 = 1: LHS 1 > RHS 0.1
        let r = ChannelRealization::<f64>::from_fn(3, 3, |tx, rx, _| if tx == rx { 1.0 } else { 9.0 })
            .unwrap();
        let p = PowerProfile::uniform(3, 1.0, 1.0).unwrap();
        assert!(strong_interference_holds(&r, &p).unwrap());
    }

    #[test]
    fn strong_interference_fails_without_cross_gains() {
        let r = ChannelRealization::<f64>::from_fn(3, 3, |tx, rx, k| {
            if tx == rx {
                1.0 + k as f64
            } else {
                0.0
            }
        })
        .unwrap();
        let p = PowerProfile::uniform(3, 1.0, 1.0).unwrap();
        assert!(!strong_interference_holds(&r, &p).unwrap());
        // equal direct gains: RHS == LHS, strict inequality still fails
        let flat = ChannelRealization::<f64>::from_fn(2, 2, |tx, rx, _| if tx == rx { 1.0 } else { 0.0 })
            .unwrap();
        let p2 = PowerProfile::uniform(2, 1.0, 1.0).unwrap();
        assert!(!strong_interference_holds(&flat, &p2).unwrap());
    }

    #[test]
    fn strong_interference_needs_two_users() {
        let r = ChannelRealization::<f64>::generate(1, 3, 1).unwrap();
        let p = PowerProfile::uniform(1, 1.0, 1.0).unwrap();
        assert!(matches!(
            strong_interference_holds(&r, &p),
            Err(Error::InvalidConfig(_))
        ));
    }
}
