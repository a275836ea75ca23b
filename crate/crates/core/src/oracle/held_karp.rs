use crate::geometry::{distance_matrix, Tour, TspInstance};
use crate::oracle::{OracleMethod, OracleResult};
use crate::{Error, Result};

/// Default cap; memory is O(n 2^n).
pub const HELD_KARP_MAX_N: usize = 18;

pub fn held_karp(instance: &TspInstance) -> Result<OracleResult> {
    held_karp_with_limit(instance, HELD_KARP_MAX_N)
}

/// Subset dynamic program rooted at node 0. `cost[mask][j]` is the
/// shortest path from 0 through exactly the nodes in `mask` (bit `j - 1`
/// for node `j`), ending at `j`.
pub fn held_karp_with_limit(instance: &TspInstance, limit: usize) -> Result<OracleResult> {
    let n = instance.n();
    if n > limit || n > 26 {
        return Err(Error::SizeLimit {
            method: "held_karp",
            limit: limit.min(26),
            n,
        });
    }
    if n <= 3 {
        let order: Vec<usize> = (0..n).collect();
        return Ok(OracleResult::new(
            Tour::new(instance, order)?.canonical(),
            OracleMethod::HeldKarp,
        ));
    }
    let d = distance_matrix(instance);
    let m = n - 1;
    let full = (1usize << m) - 1;
    let mut cost = vec![f64::INFINITY; (full + 1) * m];
    let mut parent = vec![u8::MAX; (full + 1) * m];
    for j in 0..m {
        cost[(1 << j) * m + j] = d[0][j + 1];
    }
    for mask in 1..=full {
        for j in 0..m {
            if mask & (1 << j) == 0 {
                continue;
            }
            let here = cost[mask * m + j];
            if !here.is_finite() {
                continue;
            }
            let mut rest = full & !mask;
            while rest != 0 {
                let k = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let next = mask | (1 << k);
                let cand = here + d[j + 1][k + 1];
                let slot = next * m + k;
                if cand < cost[slot] {
                    cost[slot] = cand;
                    parent[slot] = j as u8;
                }
            }
        }
    }
    let (mut last, mut best) = (0usize, f64::INFINITY);
    for j in 0..m {
        let c = cost[full * m + j] + d[j + 1][0];
        if c < best {
            best = c;
            last = j;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut mask = full;
    let mut j = last;
    loop {
        order.push(j + 1);
        let p = parent[mask * m + j];
        mask &= !(1 << j);
        if p == u8::MAX {
            break;
        }
        j = p as usize;
    }
    order.push(0);
    order.reverse();
    Ok(OracleResult::new(
        Tour::new(instance, order)?.canonical(),
        OracleMethod::HeldKarp,
    ))
}
