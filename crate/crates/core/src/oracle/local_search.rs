use rand::Rng;

use crate::geometry::{Tour, TspInstance};
use crate::oracle::{OracleMethod, OracleResult};
use crate::seed::{derive_seed, rng_from_seed};
use crate::Result;

const EPS: f64 = 1e-12;

struct Dist {
    n: usize,
    d: Vec<f64>,
}

impl Dist {
    fn new(instance: &TspInstance) -> Self {
        let n = instance.n();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = instance.dist(i, j);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Dist { n, d }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }
}

/// Best of `restarts` runs of nearest-neighbour construction from a random
/// start followed by alternating 2-opt and Or-opt descent. Restart `r`
/// draws its start from `derive_seed(seed, "restart", [r])`, so a run with
/// more restarts sees a superset of the starts of a run with fewer.
pub fn local_search_oracle(instance: &TspInstance, restarts: usize, seed: u64) -> Result<OracleResult> {
    let n = instance.n();
    let dist = Dist::new(instance);
    let mut best: Option<Tour> = None;
    for r in 0..restarts.max(1) as u64 {
        let mut rng = rng_from_seed(derive_seed(seed, "restart", &[r]));
        let start = rng.random_range(0..n);
        let mut order = nearest_neighbour(&dist, start);
        descend(&dist, &mut order);
        // compare the lengths that get reported, not the descent's running sums
        let tour = Tour::new(instance, order)?.canonical();
        if best.as_ref().is_none_or(|b| tour.length() < b.length()) {
            best = Some(tour);
        }
    }
    Ok(OracleResult::new(
        best.expect("at least one restart"),
        OracleMethod::LocalSearch,
    ))
}

/// Runs the 2-opt/Or-opt descent from an existing tour.
pub fn improve_tour(instance: &TspInstance, order: &[usize]) -> Result<Tour> {
    let dist = Dist::new(instance);
    let mut order = Tour::new(instance, order.to_vec())?.into_order();
    descend(&dist, &mut order);
    Ok(Tour::new(instance, order)?.canonical())
}

fn nearest_neighbour(dist: &Dist, start: usize) -> Vec<usize> {
    let n = dist.n;
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut cur = start;
    visited[cur] = true;
    order.push(cur);
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut best = f64::INFINITY;
        for j in 0..n {
            if !visited[j] && dist.at(cur, j) < best {
                best = dist.at(cur, j);
                next = j;
            }
        }
        visited[next] = true;
        order.push(next);
        cur = next;
    }
    order
}

fn descend(dist: &Dist, order: &mut Vec<usize>) {
    if order.len() < 4 {
        return;
    }
    loop {
        let a = two_opt(dist, order);
        let b = or_opt(dist, order);
        if !a && !b {
            break;
        }
    }
}

fn two_opt(dist: &Dist, t: &mut [usize]) -> bool {
    let n = t.len();
    let mut any = false;
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n - 1 {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b, c, d) = (t[i], t[i + 1], t[j], t[(j + 1) % n]);
                let delta = dist.at(a, c) + dist.at(b, d) - dist.at(a, b) - dist.at(c, d);
                if delta < -EPS {
                    t[i + 1..=j].reverse();
                    improved = true;
                    any = true;
                }
            }
        }
    }
    any
}

fn or_opt(dist: &Dist, t: &mut Vec<usize>) -> bool {
    let n = t.len();
    let mut any = false;
    let mut improved = true;
    while improved {
        improved = false;
        'search: for len in 1..=3usize {
            if len + 2 > n {
                break;
            }
            for i in 0..=(n - len) {
                let p = t[(i + n - 1) % n];
                let (s0, sl) = (t[i], t[i + len - 1]);
                let q = t[(i + len) % n];
                if p == sl || q == s0 {
                    continue;
                }
                let gain = dist.at(p, s0) + dist.at(sl, q) - dist.at(p, q);
                for j in 0..n {
                    // edge (t[j], t[j+1]) must not touch the segment
                    let jn = (j + 1) % n;
                    let inside = |k: usize| k >= i && k < i + len;
                    if inside(j) || inside(jn) || jn == i || j == (i + n - 1) % n {
                        continue;
                    }
                    let (u, v) = (t[j], t[jn]);
                    let fwd = dist.at(u, s0) + dist.at(sl, v);
                    let rev = dist.at(u, sl) + dist.at(s0, v);
                    let add = fwd.min(rev) - dist.at(u, v);
                    if add - gain < -EPS {
                        let mut seg: Vec<usize> = t[i..i + len].to_vec();
                        if rev < fwd {
                            seg.reverse();
                        }
                        let mut rest: Vec<usize> = Vec::with_capacity(n);
                        rest.extend_from_slice(&t[..i]);
                        rest.extend_from_slice(&t[i + len..]);
                        let pos = rest.iter().position(|&x| x == u).expect("u kept") + 1;
                        rest.splice(pos..pos, seg);
                        *t = rest;
                        improved = true;
                        any = true;
                        continue 'search;
                    }
                }
            }
        }
    }
    any
}
