//! Exact discrete optimal transport: a Hungarian assignment for uniform
//! measures of equal size and successive shortest paths for general weights.
//! Both return an optimal plan and dual potentials on the target atoms.

/// Optimal plan as (source, target, mass) triples plus the target potentials
/// `b` of a dual pair `a_i + b_j ≤ c_ij` attaining the optimum.
#[derive(Debug, Clone)]
pub(crate) struct TransportSolution {
    pub cost: f64,
    pub plan: Vec<(usize, usize, f64)>,
    pub b: Vec<f64>,
}

/// Assignment between two uniform measures with `n` atoms each; `cost` is
/// row-major `n × n`. `warm` are column potentials from a nearby problem:
/// rows whose cheapest reduced column is still free start out matched, and
/// only the rest are augmented.
pub(crate) fn solve_uniform_assignment(
    n: usize,
    cost: &[f64],
    warm: Option<&[f64]>,
) -> TransportSolution {
    debug_assert_eq!(cost.len(), n * n);
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![inf; n + 1];
    let mut used = vec![false; n + 1];
    let mut free: Vec<usize> = Vec::with_capacity(n);
    // without a warm start, column minima give a feasible start (column reduction)
    let reduced: Vec<f64>;
    let warm = match warm {
        Some(w) if w.len() == n => w,
        _ => {
            let mut m = vec![inf; n];
            for row in cost.chunks_exact(n) {
                for (mj, &c) in m.iter_mut().zip(row) {
                    *mj = mj.min(c);
                }
            }
            reduced = m;
            &reduced
        }
    };
    {
        {
            v[1..].copy_from_slice(warm);
            for i in 1..=n {
                let row = &cost[(i - 1) * n..i * n];
                let (mut best, mut arg) = (inf, 0);
                for j in 1..=n {
                    let r = row[j - 1] - v[j];
                    if r < best {
                        best = r;
                        arg = j;
                    }
                }
                // reduced costs stay ≥ 0 and the row minimum is tight
                u[i] = best;
                if p[arg] == 0 {
                    p[arg] = i;
                } else {
                    free.push(i);
                }
            }
        }
    }
    for i in free {
        p[0] = i;
        let mut j0 = 0;
        minv.iter_mut().for_each(|m| *m = inf);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let row = &cost[(i0 - 1) * n..i0 * n];
            let ui0 = u[i0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = row[j - 1] - ui0 - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let w = 1.0 / n as f64;
    let mut plan = Vec::with_capacity(n);
    let mut total = 0.0;
    for j in 1..=n {
        let i = p[j] - 1;
        total += cost[i * n + j - 1];
        plan.push((i, j - 1, w));
    }
    TransportSolution {
        cost: total * w,
        plan,
        b: v[1..].to_vec(),
    }
}

/// Transport between weights `mu` (sources) and `nu` (targets) with
/// non-negative row-major `cost` of shape `mu.len() × nu.len()`.
pub(crate) fn solve_transport(mu: &[f64], nu: &[f64], cost: &[f64]) -> TransportSolution {
    let (na, nb) = (mu.len(), nu.len());
    debug_assert_eq!(cost.len(), na * nb);
    let nv = na + nb;
    let total: f64 = mu.iter().sum();
    let eps = 1e-15 * total.max(1.0);
    let mut supply = mu.to_vec();
    let mut demand = nu.to_vec();
    let mut flow = vec![0.0; na * nb];
    let mut pi = vec![0.0; nv];
    let mut dist = vec![0.0; nv];
    let mut prev = vec![usize::MAX; nv];
    let mut done = vec![false; nv];
    loop {
        let remaining: f64 = supply.iter().filter(|&&s| s > eps).sum();
        if remaining <= eps * na as f64 || demand.iter().all(|&d| d <= eps) {
            break;
        }
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        prev.iter_mut().for_each(|p| *p = usize::MAX);
        done.iter_mut().for_each(|d| *d = false);
        for i in 0..na {
            if supply[i] > eps {
                dist[i] = 0.0;
            }
        }
        // dense Dijkstra on reduced costs
        loop {
            let mut x = usize::MAX;
            let mut best = f64::INFINITY;
            for k in 0..nv {
                if !done[k] && dist[k] < best {
                    best = dist[k];
                    x = k;
                }
            }
            if x == usize::MAX {
                break;
            }
            done[x] = true;
            if x < na {
                let row = &cost[x * nb..(x + 1) * nb];
                for j in 0..nb {
                    let y = na + j;
                    if done[y] {
                        continue;
                    }
                    let nd = best + (row[j] + pi[x] - pi[y]).max(0.0);
                    if nd < dist[y] {
                        dist[y] = nd;
                        prev[y] = x;
                    }
                }
            } else {
                let j = x - na;
                for i in 0..na {
                    if done[i] || flow[i * nb + j] <= eps {
                        continue;
                    }
                    let nd = best + (-cost[i * nb + j] + pi[x] - pi[i]).max(0.0);
                    if nd < dist[i] {
                        dist[i] = nd;
                        prev[i] = x;
                    }
                }
            }
        }
        let target = (0..nb)
            .filter(|&j| demand[j] > eps && dist[na + j].is_finite())
            .min_by(|&a, &b| dist[na + a].total_cmp(&dist[na + b]));
        let Some(tj) = target else { break };
        let t = na + tj;
        // bottleneck along the path
        let mut amount = demand[tj];
        let mut y = t;
        loop {
            let x = prev[y];
            if y >= na {
                if x == usize::MAX {
                    break;
                }
                y = x;
            } else {
                if x == usize::MAX {
                    amount = amount.min(supply[y]);
                    break;
                }
                amount = amount.min(flow[y * nb + (x - na)]);
                y = x;
            }
        }
        let mut y = t;
        loop {
            let x = prev[y];
            if y >= na {
                flow[x * nb + (y - na)] += amount;
                y = x;
            } else {
                if x == usize::MAX {
                    supply[y] -= amount;
                    break;
                }
                flow[y * nb + (x - na)] -= amount;
                y = x;
            }
        }
        demand[tj] -= amount;
        let dt = dist[t];
        for k in 0..nv {
            pi[k] += dist[k].min(dt);
        }
    }
    let mut plan = Vec::new();
    let mut total_cost = 0.0;
    for i in 0..na {
        for j in 0..nb {
            let f = flow[i * nb + j];
            if f > eps {
                plan.push((i, j, f));
                total_cost += f * cost[i * nb + j];
            }
        }
    }
    TransportSolution {
        cost: total_cost,
        plan,
        b: pi[na..].to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn brute_assignment(n: usize, cost: &[f64]) -> f64 {
        fn rec(i: usize, n: usize, cost: &[f64], used: &mut Vec<bool>) -> f64 {
            if i == n {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[i * n + j] + rec(i + 1, n, cost, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(0, n, cost, &mut vec![false; n]) / n as f64
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut rng = CounterRng::new(4, 0);
        for n in 1..=6 {
            let cost: Vec<f64> = (0..n * n).map(|_| rng.uniform()).collect();
            let sol = solve_uniform_assignment(n, &cost, None);
            assert!((sol.cost - brute_assignment(n, &cost)).abs() < 1e-12);
        }
    }

    #[test]
    fn warm_start_reaches_the_same_optimum() {
        let mut rng = CounterRng::new(7, 0);
        for n in [1, 2, 6, 40] {
            let cost: Vec<f64> = (0..n * n).map(|_| rng.uniform()).collect();
            let cold = solve_uniform_assignment(n, &cost, None);
            if n <= 6 {
                assert!((cold.cost - brute_assignment(n, &cost)).abs() < 1e-12);
            }
            // potentials of a perturbed problem, and arbitrary ones
            let other: Vec<f64> = cost.iter().map(|c| c * (1.0 + 0.3 * rng.uniform())).collect();
            let near = solve_uniform_assignment(n, &other, None).b;
            let junk: Vec<f64> = (0..n).map(|_| 5.0 * rng.uniform() - 2.5).collect();
            for warm in [near, junk] {
                let sol = solve_uniform_assignment(n, &cost, Some(&warm));
                assert!((sol.cost - cold.cost).abs() < 1e-12, "{} {}", sol.cost, cold.cost);
            }
        }
    }

    #[test]
    fn ssp_matches_hungarian_on_uniform_input() {
        let mut rng = CounterRng::new(5, 0);
        for n in [1, 3, 8, 20] {
            let cost: Vec<f64> = (0..n * n).map(|_| rng.uniform() * 3.0).collect();
            let w = vec![1.0 / n as f64; n];
            let a = solve_uniform_assignment(n, &cost, None);
            let b = solve_transport(&w, &w, &cost);
            assert!((a.cost - b.cost).abs() < 1e-12, "{} {}", a.cost, b.cost);
        }
    }

    #[test]
    fn duals_attain_the_primal() {
        let mut rng = CounterRng::new(6, 0);
        let (na, nb) = (5, 7);
        let mut mu: Vec<f64> = (0..na).map(|_| rng.uniform()).collect();
        let mut nu: Vec<f64> = (0..nb).map(|_| rng.uniform()).collect();
        let sa: f64 = mu.iter().sum();
        let sb: f64 = nu.iter().sum();
        mu.iter_mut().for_each(|x| *x /= sa);
        nu.iter_mut().for_each(|x| *x /= sb);
        let cost: Vec<f64> = (0..na * nb).map(|_| rng.uniform()).collect();
        let sol = solve_transport(&mu, &nu, &cost);
        // a_i from the c-transform of b
        let a: Vec<f64> = (0..na)
            .map(|i| (0..nb).map(|j| cost[i * nb + j] - sol.b[j]).fold(f64::INFINITY, f64::min))
            .collect();
        let dual: f64 = a.iter().zip(&mu).map(|(x, w)| x * w).sum::<f64>()
            + sol.b.iter().zip(&nu).map(|(x, w)| x * w).sum::<f64>();
        assert!((dual - sol.cost).abs() < 1e-12, "{dual} {}", sol.cost);
        let shipped: f64 = sol.plan.iter().map(|p| p.2).sum();
        assert!((shipped - 1.0).abs() < 1e-12);
    }
}
