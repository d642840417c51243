use crate::error::WorkloadError;

/// Largest supported board.
pub const MAX_N: u32 = 16;

/// Search-tree size of [`nqueens_count`] for each board size, index = `n`.
/// Feeds the compute-cost model without re-running the search.
pub const NODE_COUNTS: [u64; 17] = [
    0, 2, 3, 6, 17, 54, 153, 552, 2057, 8394, 35539, 166926, 856189, 4674890, 27358553, 171129072, 1141190303,
];

fn check(n: u32) -> Result<u32, WorkloadError> {
    match n {
        0 => Err(WorkloadError::SizeTooSmall),
        n if n > MAX_N => Err(WorkloadError::SizeTooLarge(n)),
        n => Ok(n),
    }
}

fn solve(all: u32, cols: u32, d1: u32, d2: u32, nodes: &mut u64) -> u64 {
    *nodes += 1;
    if cols == all {
        return 1;
    }
    let mut free = all & !(cols | d1 | d2);
    let mut count = 0;
    while free != 0 {
        let bit = free & free.wrapping_neg();
        free ^= bit;
        count += solve(all, cols | bit, ((d1 | bit) << 1) & all, (d2 | bit) >> 1, nodes);
    }
    count
}

/// Number of ways to place `n` non-attacking queens on an `n`x`n` board,
/// together with the number of search nodes visited.
pub fn nqueens_search(n: u32) -> Result<(u64, u64), WorkloadError> {
    let n = check(n)?;
    let all = (1u32 << n) - 1;
    let mut nodes = 0;
    let count = solve(all, 0, 0, 0, &mut nodes);
    Ok((count, nodes))
}

pub fn nqueens_count(n: u32) -> Result<u64, WorkloadError> {
    nqueens_search(n).map(|(c, _)| c)
}

pub fn nqueens_nodes(n: u32) -> Result<u64, WorkloadError> {
    Ok(NODE_COUNTS[check(n)? as usize])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_boards() {
        assert_eq!(nqueens_count(1).unwrap(), 1);
        assert_eq!(nqueens_count(2).unwrap(), 0);
        assert_eq!(nqueens_count(3).unwrap(), 0);
        assert_eq!(nqueens_count(4).unwrap(), 2);
        assert_eq!(nqueens_count(8).unwrap(), 92);
    }

    #[test]
    fn limits() {
        assert_eq!(nqueens_count(0), Err(WorkloadError::SizeTooSmall));
        assert_eq!(nqueens_count(17), Err(WorkloadError::SizeTooLarge(17)));
    }

    #[test]
    fn node_table_matches_search() {
        for n in 1..=12 {
            assert_eq!(nqueens_search(n).unwrap().1, NODE_COUNTS[n as usize], "n={n}");
        }
    }
}
