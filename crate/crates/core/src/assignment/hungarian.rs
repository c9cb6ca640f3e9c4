use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::Allocation;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssignmentResult<T> {
    /// `permutation[n]` is the column (channel) assigned to row (user) `n`.
    pub permutation: Vec<usize>,
    /// `sum_n rates[n][permutation[n]]`, accumulated in row order.
    pub value: T,
}

impl<T> AssignmentResult<T> {
    pub fn allocation(&self) -> Allocation {
        Allocation::from_vec_unchecked(self.permutation.clone())
    }
}

/// Maximum-weight injective assignment of rows to columns (Hungarian
/// algorithm with potentials, O(N^2 K)).
///
/// The maximization is run as a minimization of `offset - r[n][k]` with
/// `offset = max r`, which keeps every reduced cost non-negative.
pub fn optimal_permutation<T: Scalar>(rates: &[Vec<T>]) -> Result<AssignmentResult<T>> {
    let n = rates.len();
    if n == 0 {
        return Ok(AssignmentResult {
            permutation: Vec::new(),
            value: T::zero(),
        });
    }
    let m = rates[0].len();
    if rates.iter().any(|row| row.len() != m) {
        return Err(Error::InvalidInput("rate matrix rows differ in length".into()));
    }
    if n > m {
        return Err(Error::InvalidInput(format!(
            "cannot assign {n} rows injectively to {m} columns"
        )));
    }
    if let Some(x) = rates.iter().flatten().find(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite rate entry {x}")));
    }
    let offset = rates
        .iter()
        .flatten()
        .copied()
        .fold(T::neg_infinity(), T::max);
    let cost = |i: usize, j: usize| offset - rates[i - 1][j - 1];

    // 1-based rows/columns; index 0 is the virtual root of each augmentation
    let inf = T::infinity();
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] = u[owner[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut permutation = vec![usize::MAX; n];
    for j in 1..=m {
        if owner[j] != 0 {
            permutation[owner[j] - 1] = j - 1;
        }
    }
    let value = permutation
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (i, &j)| acc + rates[i][j]);
    Ok(AssignmentResult { permutation, value })
}
