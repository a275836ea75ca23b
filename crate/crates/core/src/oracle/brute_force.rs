use crate::geometry::{cycle_length_unchecked, Tour, TspInstance};
use crate::oracle::{OracleMethod, OracleResult};
use crate::{Error, Result};

pub const BRUTE_FORCE_MAX_N: usize = 10;

/// Enumerates every distinct cycle with node 0 first and the second node
/// smaller than the last, in lexicographic order; the first strictly best
/// cycle wins, which makes ties resolve to the lexicographically smallest.
pub fn brute_force(instance: &TspInstance) -> Result<OracleResult> {
    let n = instance.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::SizeLimit {
            method: "brute_force",
            limit: BRUTE_FORCE_MAX_N,
            n,
        });
    }
    let points = instance.points();
    let mut order: Vec<usize> = (0..n).collect();
    let mut best = order.clone();
    let mut best_len = cycle_length_unchecked(points, &order);
    if n > 3 {
        while next_permutation(&mut order[1..]) {
            if order[1] > order[n - 1] {
                continue;
            }
            let len = cycle_length_unchecked(points, &order);
            if len < best_len {
                best_len = len;
                best.copy_from_slice(&order);
            }
        }
    }
    Ok(OracleResult::new(
        Tour::new(instance, best)?,
        OracleMethod::BruteForce,
    ))
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
