//! Modified fictitious play.
//!
//! Every user keeps a fictitious utility `U[n][k]` for each channel it
//! tracks, plays the channel with the largest fictitious utility, senses the
//! interference on every tracked channel and folds the resulting utilities in
//! with step size `alpha`:
//!
//! ```text
//! U[n][k](t) = (1 - alpha) * U[n][k](t-1) + alpha * u[n][k](t)
//! ```
//!
//! A constant `alpha` keeps the dynamics away from mixed equilibria;
//! `alpha = 1` is the simultaneous best-response dynamics, and the harmonic
//! step `1/(t+1)` reproduces joint-strategy fictitious play (see
//! [`run_joint_fp_reference`]).
//!
//! The optional reset rule compares each user's sensed interference vector
//! with the previous round at every multiple of `tau`. A user whose vector
//! changed has not settled; it zeroes its fictitious utilities and restarts
//! from a random tracked channel.

mod joint;

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{count_sharing_users, is_pne};
use crate::error::{Error, Result};
use crate::game::{rates, Allocation, GameConfig, Occupancy};
use crate::rng;
use crate::scalar::Scalar;

pub use joint::{run_joint_fp_reference, DEFAULT_RIVAL_TABLE_BUDGET};

/// Step size of the fictitious-utility update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSize<T> {
    Constant(T),
    /// `1 / (s + 1)` where `s` counts the user's updates since its last (re)start.
    Harmonic,
}

impl<T: Scalar> StepSize<T> {
    fn at(self, s: usize) -> T {
        match self {
            StepSize::Constant(a) => a,
            StepSize::Harmonic => T::one() / T::of_usize(s + 1),
        }
    }
}

/// When the interference-change check runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetSchedule {
    /// At every multiple of `tau`.
    #[default]
    Recurring,
    /// Only at `t = tau`.
    OneShot,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig<T> {
    pub step: StepSize<T>,
    /// Reset check period; 0 disables the check.
    pub tau: usize,
    pub t_max: usize,
    #[serde(default)]
    pub schedule: ResetSchedule,
}

impl<T: Scalar> DynamicsConfig<T> {
    pub fn constant(alpha: T, tau: usize, t_max: usize) -> Self {
        Self {
            step: StepSize::Constant(alpha),
            tau,
            t_max,
            schedule: ResetSchedule::Recurring,
        }
    }

    pub fn harmonic(t_max: usize) -> Self {
        Self {
            step: StepSize::Harmonic,
            tau: 0,
            t_max,
            schedule: ResetSchedule::Recurring,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let StepSize::Constant(a) = self.step {
            if !(a > T::zero() && a <= T::one()) {
                return Err(Error::config(format!("step size must lie in (0, 1], got {a}")));
            }
        }
        if self.t_max == 0 {
            return Err(Error::config("t_max must be at least 1"));
        }
        Ok(())
    }

    fn is_check_time(&self, t: usize) -> bool {
        self.tau > 0
            && match self.schedule {
                ResetSchedule::Recurring => t.is_multiple_of(self.tau),
                ResetSchedule::OneShot => t == self.tau,
            }
    }
}

/// Per-user learning state of the modified fictitious play.
///
/// Vectors indexed by channel position follow the order of
/// [`GameConfig::tracked`].
#[derive(Clone, Debug)]
pub struct FpState<T> {
    t: usize,
    u_bar: Vec<Vec<T>>,
    age: Vec<usize>,
    incumbent: Vec<usize>,
    last_alloc: Option<Allocation>,
    interference: Vec<Vec<T>>,
    prev_interference: Vec<Vec<T>>,
    rngs: Vec<ChaCha8Rng>,
    last_resets: Vec<usize>,
    total_resets: usize,
}

impl<T: Scalar> FpState<T> {
    pub fn t(&self) -> usize {
        self.t
    }

    /// Fictitious utilities of user `n` over its tracked channels.
    pub fn u_bar(&self, n: usize) -> &[T] {
        &self.u_bar[n]
    }

    /// Allocation played at the latest step, `None` before the first step.
    pub fn last_alloc(&self) -> Option<&Allocation> {
        self.last_alloc.as_ref()
    }

    /// The channels users fall back to on a tie at the next step: the random
    /// draws after initialization or reset, otherwise the last action.
    pub fn incumbent(&self) -> &[usize] {
        &self.incumbent
    }

    /// Interference sensed by user `n` on its tracked channels at the latest step.
    pub fn interference(&self, n: usize) -> &[T] {
        &self.interference[n]
    }

    /// Users reset by the latest check.
    pub fn last_resets(&self) -> &[usize] {
        &self.last_resets
    }

    pub fn total_resets(&self) -> usize {
        self.total_resets
    }
}

/// Per-user random streams and the uniform first draws from each tracked set.
pub(crate) fn initial_draws<T: Scalar>(
    game: &GameConfig<'_, T>,
    seed: u64,
) -> (Vec<ChaCha8Rng>, Vec<usize>) {
    let mut rngs: Vec<ChaCha8Rng> = (0..game.n_users())
        .map(|n| rng::stream(seed, n as u64))
        .collect();
    let draws = rngs
        .iter_mut()
        .enumerate()
        .map(|(n, r)| draw(game.tracked(n), r))
        .collect();
    (rngs, draws)
}

fn draw(set: &[usize], rng: &mut ChaCha8Rng) -> usize {
    set[rng.random_range(0..set.len())]
}

/// Zero fictitious utilities; the first action of every user is drawn
/// uniformly from its tracked set.
pub fn mfp_init<T: Scalar>(
    game: &GameConfig<'_, T>,
    dynamics: &DynamicsConfig<T>,
    seed: u64,
) -> Result<FpState<T>> {
    dynamics.validate()?;
    let (rngs, incumbent) = initial_draws(game, seed);
    let zeros: Vec<Vec<T>> = (0..game.n_users())
        .map(|n| vec![T::zero(); game.tracked(n).len()])
        .collect();
    Ok(FpState {
        t: 0,
        u_bar: zeros.clone(),
        age: vec![0; game.n_users()],
        incumbent,
        last_alloc: None,
        interference: zeros.clone(),
        prev_interference: zeros,
        rngs,
        last_resets: Vec::new(),
        total_resets: 0,
    })
}

/// Argmax over `values` (aligned with `set`); ties go to `incumbent` if it
/// is maximal, otherwise to the lowest channel index.
pub(crate) fn argmax_with_incumbent<T: Scalar>(set: &[usize], values: &[T], incumbent: usize) -> usize {
    let inc_pos = set.iter().position(|&k| k == incumbent);
    let (mut best, mut best_v) = match inc_pos {
        Some(i) => (incumbent, values[i]),
        None => (set[0], values[0]),
    };
    for (&k, &v) in set.iter().zip(values) {
        if v > best_v || (v == best_v && inc_pos.is_none() && k < best) {
            best = k;
            best_v = v;
        }
    }
    best
}

/// One synchronous round: choose, sense, update.
pub fn mfp_step<T: Scalar>(
    state: &mut FpState<T>,
    game: &GameConfig<'_, T>,
    dynamics: &DynamicsConfig<T>,
) {
    state.t += 1;
    let n_users = game.n_users();

    // (a) choose
    let chosen: Vec<usize> = (0..n_users)
        .map(|n| argmax_with_incumbent(game.tracked(n), &state.u_bar[n], state.incumbent[n]))
        .collect();
    let alloc = Allocation::from_vec_unchecked(chosen);
    let occ = Occupancy::new(&alloc, game.n_channels());

    // (b) sense every tracked channel, (c) update
    std::mem::swap(&mut state.interference, &mut state.prev_interference);
    for n in 0..n_users {
        state.age[n] += 1;
        let alpha = dynamics.step.at(state.age[n]);
        let keep = T::one() - alpha;
        for (i, &k) in game.tracked(n).iter().enumerate() {
            let interference = occ.interference(game.realization(), game.powers(), n, k);
            state.interference[n][i] = interference;
            let u = game.utility_at(n, k, interference);
            state.u_bar[n][i] = keep * state.u_bar[n][i] + alpha * u;
        }
        state.incumbent[n] = alloc[n];
    }
    state.last_alloc = Some(alloc);
    state.last_resets.clear();
}

/// Convergence check: at check times, users whose interference vector
/// changed since the previous round zero their fictitious utilities and
/// redraw their next action uniformly from their tracked set.
pub fn mfp_reset_check<T: Scalar>(
    state: &mut FpState<T>,
    game: &GameConfig<'_, T>,
    dynamics: &DynamicsConfig<T>,
) {
    state.last_resets.clear();
    if state.t < 2 || !dynamics.is_check_time(state.t) {
        return;
    }
    for n in 0..game.n_users() {
        if state.interference[n] != state.prev_interference[n] {
            state.u_bar[n].iter_mut().for_each(|u| *u = T::zero());
            state.age[n] = 0;
            state.incumbent[n] = draw(game.tracked(n), &mut state.rngs[n]);
            state.last_resets.push(n);
        }
    }
    state.total_resets += state.last_resets.len();
}

/// Metrics of one iteration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRecord<T> {
    pub t: usize,
    pub alloc: Allocation,
    pub sum_rate: T,
    pub min_rate: T,
    pub n_sharing: usize,
    /// Computed omnisciently from the full game, not from what users observe.
    pub is_pne: bool,
    /// Users reset at this iteration.
    pub resets: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatus {
    ConvergedToPne,
    IterationCapReached,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory<T> {
    pub records: Vec<TrajectoryRecord<T>>,
    pub status: TerminalStatus,
    /// Total number of user resets.
    pub resets: usize,
}

impl<T: Scalar> Trajectory<T> {
    pub(crate) fn from_records(records: Vec<TrajectoryRecord<T>>, resets: usize) -> Self {
        let status = match records.last() {
            Some(r) if r.is_pne => TerminalStatus::ConvergedToPne,
            _ => TerminalStatus::IterationCapReached,
        };
        Self {
            records,
            status,
            resets,
        }
    }

    /// First iteration whose allocation is an equilibrium.
    pub fn first_pne(&self) -> Option<usize> {
        self.records.iter().find(|r| r.is_pne).map(|r| r.t)
    }

    /// Whether the first equilibrium is played unchanged until the end.
    pub fn held_after_first_pne(&self) -> Option<bool> {
        let i = self.records.iter().position(|r| r.is_pne)?;
        let a = &self.records[i].alloc;
        Some(self.records[i..].iter().all(|r| &r.alloc == a))
    }

    /// Start of the final run of identical allocations, if that allocation is an equilibrium.
    pub fn convergence_time(&self) -> Option<usize> {
        let last = self.records.last().filter(|r| r.is_pne)?;
        let start = self
            .records
            .iter()
            .rposition(|r| r.alloc != last.alloc)
            .map_or(0, |i| i + 1);
        Some(self.records[start].t)
    }

    pub fn final_alloc(&self) -> Option<&Allocation> {
        self.records.last().map(|r| &r.alloc)
    }

    pub fn actions(&self) -> Vec<Allocation> {
        self.records.iter().map(|r| r.alloc.clone()).collect()
    }

    /// One JSON object per iteration.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()>
    where
        T: Serialize,
    {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub(crate) fn record<T: Scalar>(
    game: &GameConfig<'_, T>,
    t: usize,
    alloc: &Allocation,
    resets: usize,
) -> TrajectoryRecord<T> {
    let r = rates(game.realization(), game.powers(), alloc);
    let sum_rate = r
        .iter()
        .enumerate()
        .map(|(n, &x)| game.powers().weight(n) * x)
        .sum();
    let min_rate = r.iter().copied().fold(T::infinity(), T::min);
    TrajectoryRecord {
        t,
        alloc: alloc.clone(),
        sum_rate,
        min_rate,
        n_sharing: count_sharing_users(alloc),
        is_pne: is_pne(game, alloc),
        resets,
    }
}

/// Run the modified fictitious play for `t_max` rounds, with reset checks,
/// recording metrics at every round.
pub fn run_dynamics<T: Scalar>(
    game: &GameConfig<'_, T>,
    dynamics: &DynamicsConfig<T>,
    seed: u64,
) -> Result<Trajectory<T>> {
    let mut state = mfp_init(game, dynamics, seed)?;
    let mut records = Vec::with_capacity(dynamics.t_max);
    for _ in 0..dynamics.t_max {
        mfp_step(&mut state, game, dynamics);
        mfp_reset_check(&mut state, game, dynamics);
        let alloc = state.last_alloc.as_ref().expect("allocation after a step");
        records.push(record(game, state.t, alloc, state.last_resets.len()));
    }
    Ok(Trajectory::from_records(records, state.total_resets))
}
