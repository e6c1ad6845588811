//! Exact Prokhorov distance between equal-mass measures on a shared finite
//! space.
//!
//! Feasibility of a candidate eta -- nu1(A) <= nu2(A^eta) + eta for every
//! set A -- reduces to max-flow on the bipartite support graph whose edges
//! connect points at distance <= eta: by min-cut, the worst A is realized by
//! a cut, and feasibility is flow >= mass - eta. Enlargements use closed
//! balls (d <= eta), which keeps the bisection stable on finite spaces.

use crate::error::{Error, Result};
use crate::measure::{same_space, FiniteMeasure, MASS_TOLERANCE};

/// Bisection resolution; finer than the 1e-6 the callers rely on.
pub const ETA_TOLERANCE: f64 = 1e-8;
/// Slack for closed-ball membership and flow comparisons.
const FEASIBILITY_SLACK: f64 = 1e-12;

#[derive(Clone, Copy)]
struct Edge {
    to: usize,
    cap: f64,
    rev: usize,
}

struct Dinic {
    graph: Vec<Vec<Edge>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    fn new(n: usize) -> Self {
        Dinic {
            graph: vec![Vec::new(); n],
            level: vec![0; n],
            iter: vec![0; n],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: f64) {
        let rev_from = self.graph[to].len();
        let rev_to = self.graph[from].len();
        self.graph[from].push(Edge { to, cap, rev: rev_from });
        self.graph[to].push(Edge { to: from, cap: 0.0, rev: rev_to });
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.fill(-1);
        let mut queue = std::collections::VecDeque::new();
        self.level[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for e in &self.graph[v] {
                if e.cap > FEASIBILITY_SLACK && self.level[e.to] < 0 {
                    self.level[e.to] = self.level[v] + 1;
                    queue.push_back(e.to);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, v: usize, t: usize, f: f64) -> f64 {
        if v == t {
            return f;
        }
        while self.iter[v] < self.graph[v].len() {
            let e = self.graph[v][self.iter[v]];
            if e.cap > FEASIBILITY_SLACK && self.level[v] < self.level[e.to] {
                let d = self.dfs(e.to, t, f.min(e.cap));
                if d > 0.0 {
                    self.graph[v][self.iter[v]].cap -= d;
                    let rev = e.rev;
                    self.graph[e.to][rev].cap += d;
                    return d;
                }
            }
            self.iter[v] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = 0.0;
        while self.bfs(s, t) {
            self.iter.fill(0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= 0.0 {
                    break;
                }
                flow += f;
            }
        }
        flow
    }
}

/// Can every nu1-set be covered by its eta-enlargement under nu2 plus eta?
fn feasible(nu1: &FiniteMeasure, nu2: &FiniteMeasure, eta: f64, mass: f64) -> bool {
    let support1: Vec<usize> = (0..nu1.weights.len()).filter(|&i| nu1.weights[i] > 0.0).collect();
    let support2: Vec<usize> = (0..nu2.weights.len()).filter(|&j| nu2.weights[j] > 0.0).collect();
    let n1 = support1.len();
    let n2 = support2.len();
    let source = n1 + n2;
    let sink = n1 + n2 + 1;
    let mut dinic = Dinic::new(n1 + n2 + 2);
    for (a, &i) in support1.iter().enumerate() {
        dinic.add_edge(source, a, nu1.weights[i]);
    }
    for (b, &j) in support2.iter().enumerate() {
        dinic.add_edge(n1 + b, sink, nu2.weights[j]);
    }
    for (a, &i) in support1.iter().enumerate() {
        for (b, &j) in support2.iter().enumerate() {
            if nu1.space.dist(i, j) <= eta + FEASIBILITY_SLACK {
                dinic.add_edge(a, n1 + b, f64::INFINITY);
            }
        }
    }
    dinic.max_flow(source, sink) >= mass - eta - FEASIBILITY_SLACK
}

/// The Prokhorov distance, exact up to the bisection resolution.
pub fn prokhorov_distance(nu1: &FiniteMeasure, nu2: &FiniteMeasure) -> Result<f64> {
    if !same_space(&nu1.space, &nu2.space) {
        return Err(Error::invalid("measures live on different spaces"));
    }
    let mass = nu1.total_mass();
    if (mass - nu2.total_mass()).abs() > MASS_TOLERANCE {
        return Err(Error::invalid(format!(
            "mass mismatch: {} vs {}",
            mass,
            nu2.total_mass()
        )));
    }
    if nu1.weights == nu2.weights {
        return Ok(0.0);
    }
    // Both mass and diameter are feasible on their own, so their minimum is
    // a valid upper end for the bisection.
    let mut hi = mass.min(nu1.space.diameter());
    let mut lo = 0.0;
    if feasible(nu1, nu2, lo, mass) {
        return Ok(0.0);
    }
    while hi - lo > ETA_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if feasible(nu1, nu2, mid, mass) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
