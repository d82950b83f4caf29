//! f-factors of bipartite graphs: the Ore–Ryser subset condition and an
//! independent max-flow construction.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::BipartiteGraph;

/// Left-side size limit of the exhaustive subset check.
pub const ORE_RYSER_MAX_LEFT: usize = 22;

/// Degree demands for a spanning subgraph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub fa: Vec<usize>,
    pub fb: Vec<usize>,
}

impl FactorSpec {
    pub fn new(fa: Vec<usize>, fb: Vec<usize>) -> Self {
        FactorSpec { fa, fb }
    }

    /// Every left vertex demands `x`, every right vertex `y`.
    pub fn constant(m: usize, n: usize, x: usize, y: usize) -> Self {
        FactorSpec {
            fa: vec![x; m],
            fb: vec![y; n],
        }
    }

    pub fn is_balanced(&self) -> bool {
        self.fa.iter().sum::<usize>() == self.fb.iter().sum::<usize>()
    }

    fn check_shape(&self, g: &BipartiteGraph) -> Result<()> {
        if self.fa.len() != g.m() || self.fb.len() != g.n() {
            return Err(Error::domain(format!(
                "demands for {}+{} vertices given to a {}x{} graph",
                self.fa.len(),
                self.fb.len(),
                g.m(),
                g.n()
            )));
        }
        Ok(())
    }
}

/// Parses a demand list such as `2,2,1` or `2 2 1`.
pub fn parse_demands(text: &str) -> Result<Vec<usize>> {
    text.split(|c: char| c == ',' || c.is_ascii_whitespace())
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(k, tok)| {
            if !tok.bytes().all(|b| b.is_ascii_digit()) {
                return Err(Error::domain(format!(
                    "demand {} is not a decimal integer: {tok:?}",
                    k + 1
                )));
            }
            tok.parse::<usize>()
                .map_err(|e| Error::domain(format!("demand {}: {e}", k + 1)))
        })
        .collect()
}

/// Why no factor was returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Absence {
    Unbalanced,
    DemandExceedsDegree,
    FlowDeficit { flow: usize, demand: usize },
}

impl Absence {
    pub fn code(&self) -> &'static str {
        match self {
            Absence::Unbalanced => "unbalanced",
            Absence::DemandExceedsDegree => "demand-exceeds-degree",
            Absence::FlowDeficit { .. } => "flow-deficit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FactorSearch {
    Found(BipartiteGraph),
    Absent(Absence),
}

impl FactorSearch {
    pub fn exists(&self) -> bool {
        matches!(self, FactorSearch::Found(_))
    }

    pub fn factor(&self) -> Option<&BipartiteGraph> {
        match self {
            FactorSearch::Found(g) => Some(g),
            FactorSearch::Absent(_) => None,
        }
    }
}

/// The subset condition exactly as stated: for every `S ⊆ A`,
/// `Σ_{v∈B} min(fB(v), d_S(v)) >= Σ_{u∈S} fA(u)`. Balance is not checked.
pub fn ore_ryser_condition(g: &BipartiteGraph, spec: &FactorSpec) -> Result<bool> {
    spec.check_shape(g)?;
    let (m, n) = (g.m(), g.n());
    if m > ORE_RYSER_MAX_LEFT {
        return Err(Error::Capacity {
            limit: ORE_RYSER_MAX_LEFT,
            got: m,
        });
    }
    // Walk subsets in Gray-code order, toggling one left vertex at a time.
    let mut d_s = vec![0usize; n];
    let mut in_s = vec![false; m];
    let mut demand = 0usize;
    for step in 1u64..(1u64 << m) {
        let u = step.trailing_zeros() as usize;
        in_s[u] = !in_s[u];
        for v in g.left_neighbors(u) {
            if in_s[u] {
                d_s[v] += 1;
            } else {
                d_s[v] -= 1;
            }
        }
        if in_s[u] {
            demand += spec.fa[u];
        } else {
            demand -= spec.fa[u];
        }
        let supply: usize = d_s.iter().zip(&spec.fb).map(|(&d, &f)| d.min(f)).sum();
        if supply < demand {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Balance plus [`ore_ryser_condition`]; equivalent to factor existence.
pub fn ore_ryser_check(g: &BipartiteGraph, spec: &FactorSpec) -> Result<bool> {
    spec.check_shape(g)?;
    if !spec.is_balanced() {
        return Ok(false);
    }
    ore_ryser_condition(g, spec)
}

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: usize,
    rev: usize,
}

/// Dinic max-flow. Arcs are scanned in insertion order, so with vertices
/// inserted by index the resulting flow is deterministic.
#[derive(Debug, Clone)]
struct Dinic {
    adj: Vec<Vec<Arc>>,
    level: Vec<usize>,
    next: Vec<usize>,
}

impl Dinic {
    fn new(nodes: usize) -> Self {
        Dinic {
            adj: vec![Vec::new(); nodes],
            level: vec![0; nodes],
            next: vec![0; nodes],
        }
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: usize) -> (usize, usize) {
        let fwd = self.adj[from].len();
        let back = self.adj[to].len() + usize::from(from == to);
        self.adj[from].push(Arc { to, cap, rev: back });
        self.adj[to].push(Arc {
            to: from,
            cap: 0,
            rev: fwd,
        });
        (from, fwd)
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.fill(usize::MAX);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for arc in &self.adj[u] {
                if arc.cap > 0 && self.level[arc.to] == usize::MAX {
                    self.level[arc.to] = self.level[u] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        self.level[t] != usize::MAX
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: usize) -> usize {
        if u == t {
            return pushed;
        }
        while self.next[u] < self.adj[u].len() {
            let k = self.next[u];
            let Arc { to, cap, rev } = self.adj[u][k];
            if cap > 0 && self.level[to] == self.level[u] + 1 {
                let got = self.dfs(to, t, pushed.min(cap));
                if got > 0 {
                    self.adj[u][k].cap -= got;
                    self.adj[to][rev].cap += got;
                    return got;
                }
            }
            self.next[u] += 1;
        }
        0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> usize {
        let mut flow = 0;
        while self.bfs(s, t) {
            self.next.fill(0);
            loop {
                let f = self.dfs(s, t, usize::MAX);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
        flow
    }
}

/// Subgraph with degree sequence `(fa, fb)`, found by max flow on
/// source → A (cap fA) → B (cap 1 per edge) → sink (cap fB).
pub fn find_f_factor(g: &BipartiteGraph, spec: &FactorSpec) -> Result<FactorSearch> {
    spec.check_shape(g)?;
    if !spec.is_balanced() {
        return Ok(FactorSearch::Absent(Absence::Unbalanced));
    }
    let (m, n) = (g.m(), g.n());
    let ldeg = g.left_degrees();
    let rdeg = g.right_degrees();
    if spec.fa.iter().zip(&ldeg).any(|(f, d)| f > d) || spec.fb.iter().zip(&rdeg).any(|(f, d)| f > d) {
        return Ok(FactorSearch::Absent(Absence::DemandExceedsDegree));
    }
    let (source, sink) = (0, m + n + 1);
    let mut net = Dinic::new(m + n + 2);
    for (u, &f) in spec.fa.iter().enumerate() {
        net.add_arc(source, 1 + u, f);
    }
    let mut edge_arcs = Vec::with_capacity(g.edge_count());
    for (u, v) in g.edges() {
        edge_arcs.push(((u, v), net.add_arc(1 + u, 1 + m + v, 1)));
    }
    for (v, &f) in spec.fb.iter().enumerate() {
        net.add_arc(1 + m + v, sink, f);
    }
    let demand: usize = spec.fa.iter().sum();
    let flow = net.max_flow(source, sink);
    if flow < demand {
        return Ok(FactorSearch::Absent(Absence::FlowDeficit { flow, demand }));
    }
    let chosen = edge_arcs
        .into_iter()
        .filter(|&(_, (node, k))| net.adj[node][k].cap == 0)
        .map(|(e, _)| e);
    Ok(FactorSearch::Found(BipartiteGraph::from_edges(m, n, chosen)?))
}

/// Existence of the `(x, y)`-regular factor. Requires `m·x = n·y`.
pub fn regular_factor_check(g: &BipartiteGraph, x: usize, y: usize) -> Result<bool> {
    Ok(regular_factor(g, x, y)?.is_some())
}

pub fn regular_factor(g: &BipartiteGraph, x: usize, y: usize) -> Result<Option<BipartiteGraph>> {
    if g.m() * x != g.n() * y {
        return Err(Error::infeasible(format!("unbalanced: {}·{x} != {}·{y}", g.m(), g.n())));
    }
    let spec = FactorSpec::constant(g.m(), g.n(), x, y);
    Ok(match find_f_factor(g, &spec)? {
        FactorSearch::Found(f) => Some(f),
        FactorSearch::Absent(_) => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demand_lists() {
        assert_eq!(parse_demands("2,2, 1").unwrap(), vec![2, 2, 1]);
        assert_eq!(parse_demands("3 0").unwrap(), vec![3, 0]);
        assert_eq!(parse_demands("").unwrap(), Vec::<usize>::new());
        assert!(parse_demands("1,-1").is_err());
        assert!(parse_demands("1,x").is_err());
        assert!(parse_demands("99999999999999999999999").is_err());
    }
    use crate::graphs::{circulant_regular, is_regular, DegreeSpec};

    fn cycle4() -> BipartiteGraph {
        // 0-0, 0-1, 1-0, 1-1 is K_{2,2} = C_4.
        BipartiteGraph::complete(2, 2).unwrap()
    }

    fn assert_valid(g: &BipartiteGraph, spec: &FactorSpec, f: &BipartiteGraph) {
        assert_eq!(f.left_degrees(), spec.fa);
        assert_eq!(f.right_degrees(), spec.fb);
        for (u, v) in f.edges() {
            assert!(g.has_edge(u, v));
        }
    }

    #[test]
    fn perfect_matching_in_c4() {
        let g = cycle4();
        let spec = FactorSpec::constant(2, 2, 1, 1);
        assert!(ore_ryser_check(&g, &spec).unwrap());
        let found = find_f_factor(&g, &spec).unwrap();
        assert_valid(&g, &spec, found.factor().unwrap());
    }

    #[test]
    fn whole_graph_is_two_factor() {
        let g = cycle4();
        let spec = FactorSpec::constant(2, 2, 2, 2);
        assert!(ore_ryser_check(&g, &spec).unwrap());
        assert_eq!(find_f_factor(&g, &spec).unwrap().factor().unwrap(), &g);
    }

    #[test]
    fn perfect_matching_in_complete_graph() {
        let g = BipartiteGraph::complete(7, 7).unwrap();
        let spec = FactorSpec::constant(7, 7, 1, 1);
        let f = find_f_factor(&g, &spec).unwrap();
        assert_valid(&g, &spec, f.factor().unwrap());
    }

    #[test]
    fn star_is_unbalanced() {
        let g = BipartiteGraph::complete(1, 3).unwrap();
        let spec = FactorSpec::new(vec![1], vec![1, 1, 1]);
        // The subset condition alone passes; balance is what rules it out.
        assert!(ore_ryser_condition(&g, &spec).unwrap());
        assert!(!ore_ryser_check(&g, &spec).unwrap());
        let res = find_f_factor(&g, &spec).unwrap();
        assert_eq!(res, FactorSearch::Absent(Absence::Unbalanced));
        assert_eq!(Absence::Unbalanced.code(), "unbalanced");
    }

    #[test]
    fn identity_factor() {
        let spec = DegreeSpec::from_left(6, 4, 2).unwrap();
        let g = circulant_regular(6, 4, spec).unwrap();
        assert!(is_regular(&g, spec));
        assert_eq!(regular_factor(&g, 2, 3).unwrap().unwrap(), g);
        assert!(regular_factor_check(&g, 0, 0).unwrap());
        // (1, 1.5) has no integral demand; the nearest integral pairs are unbalanced.
        assert!(regular_factor_check(&g, 1, 1).is_err());
        assert!(regular_factor_check(&g, 1, 2).is_err());
    }

    #[test]
    fn demand_above_degree() {
        let g = BipartiteGraph::from_edges(2, 2, [(0, 0), (1, 1)]).unwrap();
        let spec = FactorSpec::new(vec![2, 0], vec![1, 1]);
        assert_eq!(
            find_f_factor(&g, &spec).unwrap(),
            FactorSearch::Absent(Absence::DemandExceedsDegree)
        );
        assert!(!ore_ryser_check(&g, &spec).unwrap());
    }

    #[test]
    fn flow_deficit() {
        // Two left vertices share a single right neighbour.
        let g = BipartiteGraph::from_edges(2, 2, [(0, 0), (1, 0), (1, 1)]).unwrap();
        let spec = FactorSpec::new(vec![1, 1], vec![2, 0]);
        assert!(find_f_factor(&g, &spec).unwrap().exists());
        let spec = FactorSpec::new(vec![1, 1], vec![1, 1]);
        assert!(find_f_factor(&g, &spec).unwrap().exists());
        let g = BipartiteGraph::from_edges(3, 3, [(0, 0), (1, 0), (2, 1), (2, 2)]).unwrap();
        let spec = FactorSpec::constant(3, 3, 1, 1);
        assert!(matches!(
            find_f_factor(&g, &spec).unwrap(),
            FactorSearch::Absent(Absence::FlowDeficit { flow: 2, demand: 3 })
        ));
        assert!(!ore_ryser_check(&g, &spec).unwrap());
    }

    #[test]
    fn capacity_guard() {
        let g = BipartiteGraph::empty(23, 1).unwrap();
        let spec = FactorSpec::constant(23, 1, 0, 0);
        assert!(matches!(
            ore_ryser_check(&g, &spec),
            Err(Error::Capacity { limit: 22, got: 23 })
        ));
        assert!(find_f_factor(&g, &spec).unwrap().exists());
    }

    #[test]
    fn shape_mismatch() {
        let g = cycle4();
        assert!(find_f_factor(&g, &FactorSpec::new(vec![1], vec![1, 1])).is_err());
    }

    #[test]
    fn deterministic_factor() {
        let g = crate::graphs::sample_er(12, 12, 0.6, 4).unwrap();
        let spec = FactorSpec::constant(12, 12, 3, 3);
        assert_eq!(find_f_factor(&g, &spec).unwrap(), find_f_factor(&g, &spec).unwrap());
    }
}
