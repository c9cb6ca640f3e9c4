//! Rayleigh-fading network realizations, per-user channel rankings and
//! transmit power profiles.
//!
//! Only squared magnitudes enter any rate formula, so the realization stores
//! `|h|^2` directly. Under unit-parameter Rayleigh fading these are i.i.d.
//! Exponential(1) draws.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::rng::{self, streams};
use crate::scalar::Scalar;

/// Full gain tensor of one network: `N * N * K` squared magnitudes.
///
/// `gain(tx, rx, k)` is the power gain from user `tx`'s transmitter to user
/// `rx`'s receiver on channel `k`. The direct link of user `n` is
/// `gain(n, n, k)`, also available as [`h2`](Self::h2).
///
/// Users and channels are 0-based throughout the crate.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization<T> {
    n_users: usize,
    n_channels: usize,
    gain: Vec<T>,
    seed: Option<u64>,
}

impl<T: Scalar> ChannelRealization<T> {
    /// Draw every squared gain i.i.d. Exponential(1), deterministically from `seed`.
    pub fn generate(n_users: usize, n_channels: usize, seed: u64) -> Result<Self> {
        check_dims(n_users, n_channels)?;
        let mut rng = rng::stream(seed, streams::CHANNEL);
        let len = n_users * n_users * n_channels;
        let gain = (0..len)
            .map(|_| {
                let x: f64 = Exp1.sample(&mut rng);
                T::of(x)
            })
            .collect();
        Ok(Self {
            n_users,
            n_channels,
            gain,
            seed: Some(seed),
        })
    }

    /// Build a realization from an explicit gain function `f(tx, rx, k)`.
    ///
    /// Entries must be finite and non-negative. Zero cross gains are allowed
    /// so that interference-free scenarios can be constructed by hand.
    pub fn from_fn(
        n_users: usize,
        n_channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> T,
    ) -> Result<Self> {
        check_dims(n_users, n_channels)?;
        let mut gain = Vec::with_capacity(n_users * n_users * n_channels);
        for tx in 0..n_users {
            for rx in 0..n_users {
                for k in 0..n_channels {
                    let g = f(tx, rx, k);
                    if !g.is_finite() || g < T::zero() {
                        return Err(Error::InvalidInput(format!(
                            "gain({tx}, {rx}, {k}) = {g} is not a finite non-negative value"
                        )));
                    }
                    gain.push(g);
                }
            }
        }
        Ok(Self {
            n_users,
            n_channels,
            gain,
            seed: None,
        })
    }

    /// Copy of this realization with every cross (interference) gain multiplied by `factor`.
    pub fn with_cross_gains_scaled(&self, factor: T) -> Self {
        let mut out = self.clone();
        let (n, k) = (self.n_users, self.n_channels);
        for tx in 0..n {
            for rx in (0..n).filter(|&rx| rx != tx) {
                let base = (tx * n + rx) * k;
                for g in &mut out.gain[base..base + k] {
                    *g = *g * factor;
                }
            }
        }
        out
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    /// Seed this realization was drawn from, if it was generated.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    #[inline]
    pub fn gain(&self, tx: usize, rx: usize, k: usize) -> T {
        self.gain[(tx * self.n_users + rx) * self.n_channels + k]
    }

    /// Direct-link gain `|h_{n,k}|^2`.
    #[inline]
    pub fn h2(&self, n: usize, k: usize) -> T {
        self.gain(n, n, k)
    }

    /// All `K` direct-link gains of user `n`.
    pub fn direct_gains(&self, n: usize) -> &[T] {
        let base = (n * self.n_users + n) * self.n_channels;
        &self.gain[base..base + self.n_channels]
    }

    /// The raw tensor in `(tx, rx, k)` row-major order.
    pub fn as_slice(&self) -> &[T] {
        &self.gain
    }
}

fn check_dims(n_users: usize, n_channels: usize) -> Result<()> {
    if n_users == 0 || n_channels == 0 {
        return Err(Error::config(format!(
            "network dimensions must be positive, got N={n_users}, K={n_channels}"
        )));
    }
    Ok(())
}

/// Per-user channel indices sorted by descending direct gain.
///
/// Ties (probability zero, but possible with floats) go to the lower channel index.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderedChannels<T> {
    n_channels: usize,
    // order[n][0] is user n's best channel
    order: Vec<Vec<usize>>,
    sorted_gain: Vec<Vec<T>>,
}

impl<T: Scalar> OrderedChannels<T> {
    pub fn new(realization: &ChannelRealization<T>) -> Self {
        let k = realization.n_channels();
        let mut order = Vec::with_capacity(realization.n_users());
        let mut sorted_gain = Vec::with_capacity(realization.n_users());
        for n in 0..realization.n_users() {
            let gains = realization.direct_gains(n);
            let mut idx: Vec<usize> = (0..k).collect();
            idx.sort_by(|&a, &b| gains[b].partial_cmp(&gains[a]).unwrap().then(a.cmp(&b)));
            sorted_gain.push(idx.iter().map(|&c| gains[c]).collect());
            order.push(idx);
        }
        Self {
            n_channels: k,
            order,
            sorted_gain,
        }
    }

    pub fn n_users(&self) -> usize {
        self.order.len()
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    /// Channels of user `n`, best first.
    pub fn order(&self, n: usize) -> &[usize] {
        &self.order[n]
    }

    /// Order statistic `|h_{n,(i)}|^2` for `i` in `1..=K`: `i = K` is the best
    /// channel's gain and `i = 1` the worst.
    pub fn ranked(&self, n: usize, i: usize) -> T {
        assert!(
            (1..=self.n_channels).contains(&i),
            "rank {i} outside 1..={}",
            self.n_channels
        );
        self.sorted_gain[n][self.n_channels - i]
    }

    /// Gain of user `n`'s `m`-th best channel, `|h_{n,(K-M+1)}|^2`.
    pub fn mth_best_gain(&self, n: usize, m: usize) -> T {
        self.sorted_gain[n][m - 1]
    }

    /// Indices of user `n`'s `m` best channels, in ascending channel order.
    pub fn best_m_set(&self, n: usize, m: usize) -> Result<Vec<usize>> {
        check_m(m, self.n_channels)?;
        let mut set = self.order[n][..m].to_vec();
        set.sort_unstable();
        Ok(set)
    }
}

pub(crate) fn check_m(m: usize, n_channels: usize) -> Result<()> {
    if m == 0 || m > n_channels {
        return Err(Error::config(format!(
            "M must lie in 1..=K (K = {n_channels}), got M = {m}"
        )));
    }
    Ok(())
}

/// Transmit power giving a mean interference-free SNR of `mean_snr_db` under
/// unit-mean fading: `n0 * 10^(snr/10)`.
pub fn snr_to_power<T: Scalar>(mean_snr_db: T, n0: T) -> T {
    n0 * T::of(10.0).powf(mean_snr_db / T::of(10.0))
}

/// Transmit powers, noise level and rate weights of a network.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerProfile<T> {
    power: Vec<T>,
    n0: T,
    weights: Vec<T>,
}

impl<T: Scalar> PowerProfile<T> {
    pub fn new(power: Vec<T>, n0: T, weights: Vec<T>) -> Result<Self> {
        if power.len() != weights.len() {
            return Err(Error::config(format!(
                "{} powers but {} weights",
                power.len(),
                weights.len()
            )));
        }
        if !(n0 > T::zero() && n0.is_finite()) {
            return Err(Error::config(format!("noise variance must be positive, got {n0}")));
        }
        if let Some(p) = power.iter().find(|p| !(**p > T::zero() && p.is_finite())) {
            return Err(Error::config(format!("transmit power must be positive, got {p}")));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > T::zero() && w.is_finite())) {
            return Err(Error::config(format!("weight must be positive, got {w}")));
        }
        Ok(Self { power, n0, weights })
    }

    /// Common power for all `n_users`, unit weights.
    pub fn uniform(n_users: usize, power: T, n0: T) -> Result<Self> {
        Self::new(vec![power; n_users], n0, vec![T::one(); n_users])
    }

    /// Common power chosen for a mean interference-free SNR, unit weights.
    pub fn from_snr_db(n_users: usize, mean_snr_db: T, n0: T) -> Result<Self> {
        Self::uniform(n_users, snr_to_power(mean_snr_db, n0), n0)
    }

    /// Replace the weights with i.i.d. uniform draws from `[w_min, w_max]`.
    pub fn with_random_weights(self, w_min: T, w_max: T, seed: u64) -> Result<Self> {
        if !(w_min > T::zero() && w_min <= w_max) {
            return Err(Error::config(format!(
                "weight bounds must satisfy 0 < w_min <= w_max, got [{w_min}, {w_max}]"
            )));
        }
        let mut rng = rng::stream(seed, streams::WEIGHTS);
        let (lo, hi) = (w_min.as_f64(), w_max.as_f64());
        let weights = (0..self.power.len())
            .map(|_| T::of(lo + (hi - lo) * rng.random::<f64>()))
            .collect();
        Self::new(self.power, self.n0, weights)
    }

    pub fn n_users(&self) -> usize {
        self.power.len()
    }

    #[inline]
    pub fn power(&self, n: usize) -> T {
        self.power[n]
    }

    #[inline]
    pub fn n0(&self) -> T {
        self.n0
    }

    #[inline]
    pub fn weight(&self, n: usize) -> T {
        self.weights[n]
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn w_min(&self) -> T {
        self.weights.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn w_max(&self) -> T {
        self.weights.iter().copied().fold(T::neg_infinity(), T::max)
    }
}
