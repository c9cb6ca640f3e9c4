use crate::error::{Error, Result};

use super::PreferenceGraph;

/// Largest side for which perfect matchings are counted exactly.
pub const PERMANENT_MAX_N: usize = 12;

/// Exact number of perfect matchings, i.e. the permanent of the 0/1
/// biadjacency matrix, via Ryser's inclusion-exclusion formula walked in
/// Gray-code order (O(2^N N)).
pub fn count_perfect_matchings(graph: &PreferenceGraph) -> Result<u64> {
    let n = graph.n_left();
    if n != graph.n_right() {
        return Err(Error::InvalidInput(format!(
            "perfect matchings need a square graph, got {n}x{}",
            graph.n_right()
        )));
    }
    if n > PERMANENT_MAX_N {
        return Err(Error::BudgetExceeded {
            what: "permanent",
            needed: 1u128 << n,
            budget: 1u128 << PERMANENT_MAX_N,
        });
    }
    if n == 0 {
        return Ok(1);
    }

    // perm(A) = (-1)^n sum_{S subset of columns} (-1)^{|S|} prod_i sum_{j in S} a_ij
    // Products stay below 12^12 and the 4096-term sum below 2^63.
    let rows: Vec<u32> = (0..n)
        .map(|u| graph.neighbors(u).iter().fold(0u32, |acc, &k| acc | (1 << k)))
        .collect();
    let mut row_sums = vec![0i64; n];
    let mut total: i64 = 0;
    let mut subset: u32 = 0;
    for g in 1u32..(1 << n) {
        let col = g.trailing_zeros();
        let bit = 1u32 << col;
        let delta = if subset & bit == 0 { 1 } else { -1 };
        subset ^= bit;
        for (sum, &row) in row_sums.iter_mut().zip(&rows) {
            if row & bit != 0 {
                *sum += delta;
            }
        }
        let prod: i64 = row_sums.iter().product();
        if subset.count_ones().is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n % 2 == 1 {
        total = -total;
    }
    Ok(u64::try_from(total).expect("permanent of a 0/1 matrix is non-negative"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_graph_counts_factorial() {
        assert_eq!(count_perfect_matchings(&PreferenceGraph::complete(4, 4)).unwrap(), 24);
        assert_eq!(
            count_perfect_matchings(&PreferenceGraph::complete(10, 10)).unwrap(),
            3_628_800
        );
    }

    #[test]
    fn identity_graph_has_one() {
        let g = PreferenceGraph::new(5, (0..5).map(|k| vec![k]).collect()).unwrap();
        assert_eq!(count_perfect_matchings(&g).unwrap(), 1);
    }

    #[test]
    fn empty_row_gives_zero() {
        let g = PreferenceGraph::new(3, vec![vec![0, 1], vec![], vec![2]]).unwrap();
        assert_eq!(count_perfect_matchings(&g).unwrap(), 0);
    }

    #[test]
    fn refuses_large_or_rectangular() {
        assert!(matches!(
            count_perfect_matchings(&PreferenceGraph::complete(13, 13)),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(matches!(
            count_perfect_matchings(&PreferenceGraph::complete(3, 4)),
            Err(Error::InvalidInput(_))
        ));
        assert_eq!(
            count_perfect_matchings(&PreferenceGraph::complete(12, 12)).unwrap(),
            479_001_600
        );
    }
}
