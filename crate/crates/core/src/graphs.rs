//! Bipartite graphs for the Erdős–Rényi ensemble `G(m, n, p)` and the
//! biregular ensemble, plus their normalized block matrices.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Largest biadjacency (in cells) accepted from an edge-list file.
pub const MAX_CELLS: usize = 1 << 26;

/// 0/1 biadjacency structure between `m` left and `n` right vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    m: usize,
    n: usize,
    cells: Vec<bool>,
}

impl BipartiteGraph {
    pub fn empty(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::domain(format!("both sides need a vertex, got {m}x{n}")));
        }
        let size = m
            .checked_mul(n)
            .ok_or_else(|| Error::domain("graph dimensions overflow"))?;
        Ok(BipartiteGraph {
            m,
            n,
            cells: vec![false; size],
        })
    }

    pub fn complete(m: usize, n: usize) -> Result<Self> {
        let mut g = Self::empty(m, n)?;
        g.cells.fill(true);
        Ok(g)
    }

    pub fn from_edges(m: usize, n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::empty(m, n)?;
        for (i, j) in edges {
            if i >= m || j >= n {
                return Err(Error::domain(format!("edge ({i}, {j}) outside {m}x{n}")));
            }
            g.cells[i * n + j] = true;
        }
        Ok(g)
    }

    /// Left side size.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Right side size.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.n + j]
    }

    pub(crate) fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        self.cells[i * self.n + j] = present;
    }

    /// Edges in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(move |(k, _)| (k / n, k % n))
    }

    pub fn edge_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.cells[i * self.n..(i + 1) * self.n]
    }

    pub fn left_degrees(&self) -> Vec<usize> {
        (0..self.m)
            .map(|i| self.row(i).iter().filter(|&&c| c).count())
            .collect()
    }

    pub fn right_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for (_, j) in self.edges() {
            deg[j] += 1;
        }
        deg
    }

    /// Right neighbours of left vertex `i`, ascending.
    pub fn left_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i).iter().enumerate().filter(|(_, &c)| c).map(|(j, _)| j)
    }

    pub fn transposed(&self) -> BipartiteGraph {
        let mut t = BipartiteGraph {
            m: self.n,
            n: self.m,
            cells: vec![false; self.cells.len()],
        };
        for (i, j) in self.edges() {
            t.cells[j * self.m + i] = true;
        }
        t
    }

    /// Biadjacency as a real matrix.
    pub fn biadjacency(&self) -> Matrix {
        Matrix::from_fn(self.m, self.n, |i, j| if self.has_edge(i, j) { 1.0 } else { 0.0 })
    }
}

/// Left and right degrees of a biregular graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeSpec {
    pub dl: usize,
    pub dr: usize,
}

impl DegreeSpec {
    /// Checks the handshake `m·dl = n·dr` and the degree bounds.
    pub fn new(m: usize, n: usize, dl: usize, dr: usize) -> Result<Self> {
        if dl > n || dr > m {
            return Err(Error::infeasible(format!(
                "degrees ({dl}, {dr}) exceed side sizes ({n}, {m})"
            )));
        }
        if m * dl != n * dr {
            return Err(Error::infeasible(format!("handshake fails: {m}·{dl} != {n}·{dr}")));
        }
        Ok(DegreeSpec { dl, dr })
    }

    /// Derives `dr = m·dl/n`, rejecting a non-integral result.
    pub fn from_left(m: usize, n: usize, dl: usize) -> Result<Self> {
        if n == 0 || !(m * dl).is_multiple_of(n) {
            return Err(Error::infeasible(format!(
                "m·dl = {} is not divisible by n = {n}",
                m * dl
            )));
        }
        Self::new(m, n, dl, m * dl / n)
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("edge probability must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// Samples `G(m, n, p)`: each of the `m·n` edges independently with probability `p`.
pub fn sample_er(m: usize, n: usize, p: f64, seed: u64) -> Result<BipartiteGraph> {
    check_probability(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_er_with(m, n, p, &mut rng)
}

pub(crate) fn sample_er_with<R: Rng>(m: usize, n: usize, p: f64, rng: &mut R) -> Result<BipartiteGraph> {
    let mut g = BipartiteGraph::empty(m, n)?;
    for c in g.cells.iter_mut() {
        *c = rng.gen::<f64>() < p;
    }
    Ok(g)
}

/// Deterministic biregular graph: left vertex `i` takes the `dl` consecutive
/// right vertices starting at `i·dl mod n`. The blocks tile `m·dl = n·dr`
/// positions around the cycle, so every column is hit exactly `dr` times.
pub fn circulant_regular(m: usize, n: usize, spec: DegreeSpec) -> Result<BipartiteGraph> {
    let spec = DegreeSpec::new(m, n, spec.dl, spec.dr)?;
    let mut g = BipartiteGraph::empty(m, n)?;
    for i in 0..m {
        for k in 0..spec.dl {
            g.set_edge(i, (i * spec.dl + k) % n, true);
        }
    }
    Ok(g)
}

/// Default switch-chain length `10·E·ln E` with `E = m·dl` edges.
pub fn default_mixing_steps(m: usize, spec: DegreeSpec) -> usize {
    let e = (m * spec.dl) as f64;
    if e <= 1.0 {
        return 0;
    }
    (10.0 * e * e.ln()).ceil() as usize
}

/// Markov chain on graphs with a fixed degree sequence.
///
/// A step picks two edges `(i, j)`, `(k, l)` uniformly and, when `(i, l)`
/// and `(k, j)` are both absent, swaps them in. Rejected proposals leave the
/// graph unchanged, so the chain is symmetric and its stationary law is
/// uniform. Uniformity of the output is only approximate for finite runs.
#[derive(Debug, Clone)]
pub struct SwitchChain {
    graph: BipartiteGraph,
    edges: Vec<(usize, usize)>,
}

impl SwitchChain {
    pub fn new(graph: BipartiteGraph) -> Self {
        let edges = graph.edges().collect();
        SwitchChain { graph, edges }
    }

    /// One proposal; returns whether it was accepted.
    pub fn step<R: Rng>(&mut self, rng: &mut R) -> bool {
        let count = self.edges.len();
        if count < 2 {
            return false;
        }
        let e1 = rng.gen_range(0..count);
        let e2 = rng.gen_range(0..count);
        let (i, j) = self.edges[e1];
        let (k, l) = self.edges[e2];
        if i == k || j == l || self.graph.has_edge(i, l) || self.graph.has_edge(k, j) {
            return false;
        }
        self.graph.set_edge(i, j, false);
        self.graph.set_edge(k, l, false);
        self.graph.set_edge(i, l, true);
        self.graph.set_edge(k, j, true);
        self.edges[e1] = (i, l);
        self.edges[e2] = (k, j);
        debug_assert!(!self.graph.has_edge(i, j) && !self.graph.has_edge(k, l));
        true
    }

    pub fn graph(&self) -> &BipartiteGraph {
        &self.graph
    }

    pub fn into_graph(self) -> BipartiteGraph {
        self.graph
    }
}

/// Approximately uniform `(dl, dr)`-biregular graph: circulant start, then
/// `mixing_steps` switch proposals (default [`default_mixing_steps`]).
pub fn sample_regular(
    m: usize,
    n: usize,
    spec: DegreeSpec,
    seed: u64,
    mixing_steps: Option<usize>,
) -> Result<BipartiteGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_regular_with(m, n, spec, mixing_steps, &mut rng)
}

pub(crate) fn sample_regular_with<R: Rng>(
    m: usize,
    n: usize,
    spec: DegreeSpec,
    mixing_steps: Option<usize>,
    rng: &mut R,
) -> Result<BipartiteGraph> {
    let start = circulant_regular(m, n, spec)?;
    let steps = mixing_steps.unwrap_or_else(|| default_mixing_steps(m, spec));
    let mut chain = SwitchChain::new(start);
    for _ in 0..steps {
        chain.step(rng);
    }
    let g = chain.into_graph();
    debug_assert!(is_regular(&g, spec));
    Ok(g)
}

/// Every left degree equals `dl` and every right degree equals `dr`.
pub fn is_regular(g: &BipartiteGraph, spec: DegreeSpec) -> bool {
    g.left_degrees().iter().all(|&d| d == spec.dl) && g.right_degrees().iter().all(|&d| d == spec.dr)
}

/// Real symmetric `(m+n)×(m+n)` matrix `[[0, B], [Bᵀ, 0]]`, stored as its block `B`.
/// Symmetry and the zero diagonal blocks hold by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric {
    block: Matrix,
}

impl DenseSymmetric {
    pub fn from_block(block: Matrix) -> Self {
        DenseSymmetric { block }
    }

    pub fn size(&self) -> usize {
        self.block.rows() + self.block.cols()
    }

    pub fn block(&self) -> &Matrix {
        &self.block
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let m = self.block.rows();
        match (r < m, c < m) {
            (true, false) => self.block.get(r, c - m),
            (false, true) => self.block.get(c, r - m),
            _ => 0.0,
        }
    }

    /// Full matrix, row-major.
    pub fn to_dense(&self) -> Vec<f64> {
        let s = self.size();
        let mut out = Vec::with_capacity(s * s);
        for r in 0..s {
            for c in 0..s {
                out.push(self.get(r, c));
            }
        }
        out
    }
}

/// `R = [A - (dl/n)(0 J; Jᵀ 0)] / sqrt((dl/n)(1 - dl/n))` for a biregular graph.
pub fn normalized_regular(g: &BipartiteGraph, spec: DegreeSpec) -> Result<DenseSymmetric> {
    if spec.dl == 0 || spec.dl >= g.n() {
        return Err(Error::domain(format!(
            "normalization undefined for dl = {} with n = {}",
            spec.dl,
            g.n()
        )));
    }
    if !is_regular(g, spec) {
        return Err(Error::infeasible(format!(
            "graph is not ({}, {})-regular",
            spec.dl, spec.dr
        )));
    }
    let density = spec.dl as f64 / g.n() as f64;
    Ok(standardized(g, density))
}

/// `M = [B - p(0 J; Jᵀ 0)] / sqrt(p(1 - p))`; entries are bounded by
/// `max(p, 1-p)/sqrt(p(1-p))`, at most `1/sqrt(p)` when `p <= 1/2`.
pub fn normalized_er(g: &BipartiteGraph, p: f64) -> Result<DenseSymmetric> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("normalization needs 0 < p < 1, got {p}")));
    }
    Ok(standardized(g, p))
}

fn standardized(g: &BipartiteGraph, p: f64) -> DenseSymmetric {
    let sd = (p * (1.0 - p)).sqrt();
    let one = (1.0 - p) / sd;
    let zero = -p / sd;
    DenseSymmetric::from_block(Matrix::from_fn(
        g.m(),
        g.n(),
        |i, j| {
            if g.has_edge(i, j) {
                one
            } else {
                zero
            }
        },
    ))
}

/// Largest absolute entry of the standardized ER matrix.
pub fn er_entry_bound(p: f64) -> f64 {
    p.max(1.0 - p) / (p * (1.0 - p)).sqrt()
}

/// Writes the edge-list format: `m n` header, then one `i j` line per edge.
pub fn write_edge_list<W: Write>(g: &BipartiteGraph, mut out: W) -> Result<()> {
    let mut buf = String::with_capacity(16 * (g.edge_count() + 1));
    writeln!(buf, "{} {}", g.m(), g.n()).expect("write to String");
    for (i, j) in g.edges() {
        writeln!(buf, "{i} {j}").expect("write to String");
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

fn parse_pair(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let mut fields = line.split_ascii_whitespace();
    let mut next = |what: &str| -> Result<usize> {
        let tok = fields
            .next()
            .ok_or_else(|| Error::parse(lineno, format!("missing {what}")))?;
        if !tok.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::parse(
                lineno,
                format!("{what} is not a decimal integer: {tok:?}"),
            ));
        }
        tok.parse::<usize>()
            .map_err(|e| Error::parse(lineno, format!("{what}: {e}")))
    };
    let first = next("first field")?;
    let second = next("second field")?;
    if fields.next().is_some() {
        return Err(Error::parse(lineno, "expected exactly two fields"));
    }
    Ok((first, second))
}

/// Parses the edge-list format. Blank lines are ignored; duplicate or
/// out-of-range edges are errors.
pub fn parse_edge_list(text: &str) -> Result<BipartiteGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, "missing `m n` header"))?;
    let (m, n) = parse_pair(header, hline)?;
    if m == 0 || n == 0 {
        return Err(Error::parse(hline, "both sides need at least one vertex"));
    }
    match m.checked_mul(n) {
        Some(c) if c <= MAX_CELLS => {}
        _ => return Err(Error::parse(hline, format!("graph {m}x{n} exceeds {MAX_CELLS} cells"))),
    }
    let mut g = BipartiteGraph::empty(m, n)?;
    for (lineno, line) in lines {
        let (i, j) = parse_pair(line, lineno)?;
        if i >= m || j >= n {
            return Err(Error::parse(lineno, format!("edge ({i}, {j}) outside {m}x{n}")));
        }
        if g.has_edge(i, j) {
            return Err(Error::parse(lineno, format!("duplicate edge ({i}, {j})")));
        }
        g.set_edge(i, j, true);
    }
    Ok(g)
}

pub fn read_edge_list<R: BufRead>(mut input: R) -> Result<BipartiteGraph> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    parse_edge_list(&text)
}

pub fn save_edge_list(g: &BipartiteGraph, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_edge_list(g, std::io::BufWriter::new(file))
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<BipartiteGraph> {
    let file = std::fs::File::open(path)?;
    read_edge_list(std::io::BufReader::new(file))
}
