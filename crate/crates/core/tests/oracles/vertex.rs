//! Brute-force optimum of a transportation problem.

#![allow(dead_code)]

use nalgebra::DMatrix;

/// Minimum of `Σ γ d²` over the vertices of the transportation polytope.
///
/// Vertices are exactly the feasible flows carried by spanning trees of the
/// bipartite support graph, found here by enumerating acyclic edge sets of
/// size `rows + cols − 1`.
pub fn vertex_oracle(cost: &DMatrix<f64>, supply: &[f64], demand: &[f64]) -> f64 {
    let rows: Vec<usize> = (0..supply.len()).filter(|&i| supply[i] > 0.0).collect();
    let cols: Vec<usize> = (0..demand.len()).filter(|&j| demand[j] > 0.0).collect();
    let (r, c) = (rows.len(), cols.len());
    let edges: Vec<(usize, usize)> = (0..r).flat_map(|a| (0..c).map(move |b| (a, b))).collect();
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(r + c - 1);
    let parent: Vec<usize> = (0..r + c).collect();

    fn find(p: &[usize], mut x: usize) -> usize {
        while p[x] != x {
            x = p[x];
        }
        x
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        start: usize,
        edges: &[(usize, usize)],
        parent: &[usize],
        chosen: &mut Vec<usize>,
        need: usize,
        r: usize,
        eval: &mut dyn FnMut(&[usize]),
    ) {
        if chosen.len() == need {
            eval(chosen);
            return;
        }
        if edges.len() - start < need - chosen.len() {
            return;
        }
        for e in start..edges.len() {
            let (a, b) = edges[e];
            let (ra, rb) = (find(parent, a), find(parent, r + b));
            if ra == rb {
                continue;
            }
            let mut p = parent.to_vec();
            p[ra] = rb;
            chosen.push(e);
            recurse(e + 1, edges, &p, chosen, need, r, eval);
            chosen.pop();
        }
    }

    let mut eval = |tree: &[usize]| {
        let mut s: Vec<f64> = rows.iter().map(|&i| supply[i]).collect();
        let mut t: Vec<f64> = cols.iter().map(|&j| demand[j]).collect();
        let mut live: Vec<usize> = tree.to_vec();
        let mut total = 0.0;
        while !live.is_empty() {
            let degree = |node: usize| live.iter().filter(|&&e| edges[e].0 == node || r + edges[e].1 == node).count();
            let leaf = (0..r + c).find(|&v| degree(v) == 1).expect("a forest has a leaf");
            let pos = live.iter().position(|&e| edges[e].0 == leaf || r + edges[e].1 == leaf).expect("leaf edge");
            let (a, b) = edges[live.swap_remove(pos)];
            let flow = if leaf < r { s[a] } else { t[b] };
            if flow < -1e-12 {
                return;
            }
            s[a] -= flow;
            t[b] -= flow;
            total += flow * cost[(rows[a], cols[b])];
        }
        if s.iter().chain(&t).all(|v| v.abs() < 1e-12) && total < best {
            best = total;
        }
    };
    recurse(0, &edges, &parent, &mut chosen, r + c - 1, r, &mut eval);
    best
}
