//! The directed weighted multigraph associated with a substitution scheme:
//! one vertex per prototile, one edge per rule child, edge length ln(1/α).
//!
//! Tiles of the semi-flow patch F_t(T_i) correspond to metric paths of length
//! t from vertex i, which turns every statistic of this crate into a counting
//! problem on the graph. This module provides the structural analysis:
//! strong connectivity, simple-cycle enumeration, the commensurability
//! verdict, the graph matrix function M(s) and the rank-one matrix Q that
//! drives all asymptotic densities.

use crate::exact::Rational;
use crate::loglin::LogLinear;
use crate::scheme::Scheme;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct GraphEdge {
    /// 1-based initial vertex (the parent prototile).
    pub from: usize,
    /// 1-based terminal vertex (the child's type). Edges contain their
    /// terminal vertex by convention.
    pub to: usize,
    pub scale: Rational,
    /// Edge length ln(1/scale), kept symbolic.
    pub length: LogLinear,
    /// Index of the originating child within rule(from).
    pub rule_child_index: usize,
}

#[derive(Debug, Clone)]
pub struct SubstGraph {
    pub vertex_count: usize,
    pub edges: Vec<GraphEdge>,
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("enumeration budget of {budget} exceeded while {what}")]
    BudgetExceeded { what: &'static str, budget: u64 },
    #[error("graph is not strongly connected")]
    NotIrreducible,
    #[error("scheme is commensurable (generator {generator}); formula requires incommensurability")]
    Commensurable { generator: LogLinear },
    #[error("adjugate of I - M(d) is not positive rank one; input is not irreducible")]
    SingularStructure,
}

/// A simple cycle reported as a commensurability witness.
#[derive(Debug, Clone)]
pub struct CycleWitness {
    /// Edge indices into `SubstGraph::edges`, in walk order.
    pub edges: Vec<usize>,
    pub length: LogLinear,
}

/// Outcome of the commensurability classification.
///
/// Rational scales always yield one of the two exact verdicts; the heuristic
/// variants exist for float-length graphs (see [`classify_float_lengths`])
/// and never feed the exact pipelines.
#[derive(Debug, Clone)]
pub enum CommensurabilityVerdict {
    Incommensurable { witness: Box<(CycleWitness, CycleWitness)> },
    Commensurable { generator: LogLinear },
    HeuristicIncommensurable { note: String },
    HeuristicCommensurable { note: String },
}

impl CommensurabilityVerdict {
    pub fn is_incommensurable(&self) -> bool {
        matches!(self, CommensurabilityVerdict::Incommensurable { .. })
    }
}

/// Builds the associated graph; one edge per rule child, in rule order.
pub fn build_graph(scheme: &Scheme) -> SubstGraph {
    let mut edges = Vec::new();
    for (i, rule) in scheme.rules.iter().enumerate() {
        for (k, child) in rule.iter().enumerate() {
            edges.push(GraphEdge {
                from: i + 1,
                to: child.child_type,
                scale: child.scale.clone(),
                length: LogLinear::ln_inverse_of(&child.scale),
                rule_child_index: k,
            });
        }
    }
    SubstGraph {
        vertex_count: scheme.prototile_count(),
        edges,
    }
}

impl SubstGraph {
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertex_count + 1];
        for (idx, e) in self.edges.iter().enumerate() {
            adj[e.from].push((idx, e.to));
        }
        adj
    }

    pub fn outgoing(&self, v: usize) -> impl Iterator<Item = (usize, &GraphEdge)> {
        self.edges
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.from == v)
    }
}

/// Strong connectivity of the underlying digraph.
pub fn is_irreducible(graph: &SubstGraph) -> bool {
    let n = graph.vertex_count;
    if n == 0 {
        return false;
    }
    let reach = |forward: bool| -> usize {
        let mut seen = vec![false; n + 1];
        let mut stack = vec![1usize];
        seen[1] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for e in &graph.edges {
                let (a, b) = if forward { (e.from, e.to) } else { (e.to, e.from) };
                if a == v && !seen[b] {
                    seen[b] = true;
                    count += 1;
                    stack.push(b);
                }
            }
        }
        count
    };
    reach(true) == n && reach(false) == n
}

/// Johnson-style enumeration of all simple cycles, as edge index sequences.
/// Parallel edges yield distinct cycles. Aborts with an error once `budget`
/// cycles have been produced.
pub fn simple_cycles(graph: &SubstGraph, budget: u64) -> Result<Vec<Vec<usize>>, GraphError> {
    let n = graph.vertex_count;
    let adj = graph.adjacency();
    let mut cycles: Vec<Vec<usize>> = Vec::new();

    for start in 1..=n {
        let mut blocked = vec![false; n + 1];
        let mut blocked_by: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
        let mut path: Vec<usize> = Vec::new();

        fn unblock(v: usize, blocked: &mut [bool], blocked_by: &mut [Vec<usize>]) {
            blocked[v] = false;
            let waiters = std::mem::take(&mut blocked_by[v]);
            for w in waiters {
                if blocked[w] {
                    unblock(w, blocked, blocked_by);
                }
            }
        }

        #[allow(clippy::too_many_arguments)]
        fn circuit(
            v: usize,
            start: usize,
            graph: &SubstGraph,
            adj: &[Vec<(usize, usize)>],
            blocked: &mut Vec<bool>,
            blocked_by: &mut Vec<Vec<usize>>,
            path: &mut Vec<usize>,
            cycles: &mut Vec<Vec<usize>>,
            budget: u64,
        ) -> Result<bool, GraphError> {
            let mut found = false;
            blocked[v] = true;
            for &(edge_idx, w) in &adj[v] {
                if w < start {
                    continue;
                }
                if w == start {
                    path.push(edge_idx);
                    cycles.push(path.clone());
                    path.pop();
                    found = true;
                    if cycles.len() as u64 > budget {
                        return Err(GraphError::BudgetExceeded {
                            what: "enumerating simple cycles",
                            budget,
                        });
                    }
                } else if !blocked[w] {
                    path.push(edge_idx);
                    let sub = circuit(
                        w, start, graph, adj, blocked, blocked_by, path, cycles, budget,
                    )?;
                    path.pop();
                    found |= sub;
                }
            }
            if found {
                unblock(v, blocked, blocked_by);
            } else {
                for &(_, w) in &adj[v] {
                    if w >= start && !blocked_by[w].contains(&v) {
                        blocked_by[w].push(v);
                    }
                }
            }
            Ok(found)
        }

        circuit(
            start,
            start,
            graph,
            &adj,
            &mut blocked,
            &mut blocked_by,
            &mut path,
            &mut cycles,
            budget,
        )?;
    }
    Ok(cycles)
}

fn cycle_length(graph: &SubstGraph, cycle: &[usize]) -> LogLinear {
    let mut acc = LogLinear::zero();
    for &e in cycle {
        acc = &acc + &graph.edges[e].length;
    }
    acc
}

/// Exact commensurability classification for rational-scale graphs.
///
/// Each simple cycle's length is a vector of prime exponents over the basis
/// {ln p}; the scheme is incommensurable iff these vectors span a space of
/// rational dimension at least two. Every closed path decomposes into simple
/// cycles, so simple cycles suffice.
pub fn classify_commensurability(
    graph: &SubstGraph,
    budget: u64,
) -> Result<CommensurabilityVerdict, GraphError> {
    let cycles = simple_cycles(graph, budget)?;
    assert!(!cycles.is_empty(), "an irreducible graph has cycles");

    // Gather the primes that appear, then row-reduce cycle vectors over Q.
    let lengths: Vec<LogLinear> = cycles.iter().map(|c| cycle_length(graph, c)).collect();
    let mut primes: Vec<_> = Vec::new();
    for l in &lengths {
        for (p, _) in l.terms() {
            if !primes.contains(p) {
                primes.push(p.clone());
            }
        }
    }
    primes.sort();
    let as_vec = |l: &LogLinear| -> Vec<Rational> {
        let map: HashMap<_, _> = l.terms().map(|(p, c)| (p.clone(), c.clone())).collect();
        primes
            .iter()
            .map(|p| map.get(p).cloned().unwrap_or_else(Rational::zero))
            .collect()
    };

    let mut basis: Vec<(usize, Vec<Rational>)> = Vec::new();
    for (idx, l) in lengths.iter().enumerate() {
        let mut v = as_vec(l);
        for (_, b) in &basis {
            if let Some(pivot) = b.iter().position(|x| !x.is_zero()) {
                if !v[pivot].is_zero() {
                    let factor = &v[pivot] / &b[pivot];
                    for k in 0..v.len() {
                        let delta = &factor * &b[k];
                        v[k] -= delta;
                    }
                }
            }
        }
        if v.iter().any(|x| !x.is_zero()) {
            basis.push((idx, v));
            if basis.len() == 2 {
                let (i1, i2) = (basis[0].0, basis[1].0);
                let w1 = CycleWitness {
                    edges: cycles[i1].clone(),
                    length: lengths[i1].clone(),
                };
                let w2 = CycleWitness {
                    edges: cycles[i2].clone(),
                    length: lengths[i2].clone(),
                };
                return Ok(CommensurabilityVerdict::Incommensurable {
                    witness: Box::new((w1, w2)),
                });
            }
        }
    }

    // Rank one: all lengths are rational multiples of the first; the
    // generator is their rational gcd times the base length.
    let base = &lengths[basis[0].0];
    let base_vec = as_vec(base);
    let pivot = base_vec.iter().position(|x| !x.is_zero()).unwrap();
    let mut ratios: Vec<Rational> = Vec::new();
    for l in &lengths {
        let v = as_vec(l);
        ratios.push(&v[pivot] / &base_vec[pivot]);
    }
    let mut gcd_num = BigInt::zero();
    let mut lcm_den = BigInt::one();
    for r in &ratios {
        gcd_num = gcd_num.gcd(r.numer());
        lcm_den = lcm_den.lcm(r.denom());
    }
    let g = Rational::new(gcd_num, lcm_den);
    Ok(CommensurabilityVerdict::Commensurable {
        generator: base.scale(&g),
    })
}

/// Continued-fraction heuristic for graphs with irrational edge lengths,
/// supplied as floats. Ratios approximated by a fraction with denominator
/// below the cutoff count as rationally dependent. The verdict is labeled
/// heuristic and must not feed the exact pipelines.
pub fn classify_float_lengths(lengths: &[f64], denominator_cutoff: u64) -> CommensurabilityVerdict {
    assert!(!lengths.is_empty());
    // A rational ratio reveals itself by a huge partial quotient at the point
    // where its true continued fraction terminates; generic irrationals keep
    // producing modest quotients until the convergent denominators blow past
    // the cutoff.
    let rationally_dependent = |a: f64, b: f64| -> Option<(i128, i128)> {
        let x = a / b;
        let huge = 1e8;
        let (mut p0, mut q0, mut p1, mut q1) = (1i128, 0i128, 0i128, 1i128);
        let mut v = x;
        for _ in 0..64 {
            let a_k = v.floor();
            if a_k >= huge {
                return if q0 <= denominator_cutoff as i128 && q0 > 0 {
                    Some((p0, q0))
                } else {
                    None
                };
            }
            let ak = a_k as i128;
            let (p2, q2) = (ak * p0 + p1, ak * q0 + q1);
            p1 = p0;
            q1 = q0;
            p0 = p2;
            q0 = q2;
            if q0 > denominator_cutoff as i128 {
                return None;
            }
            let frac = v - a_k;
            if frac.abs() < 1e-15 {
                return Some((p0, q0));
            }
            v = 1.0 / frac;
        }
        None
    };
    for (i, &a) in lengths.iter().enumerate() {
        for &b in &lengths[i + 1..] {
            if rationally_dependent(a, b).is_none() {
                return CommensurabilityVerdict::HeuristicIncommensurable {
                    note: format!(
                        "ratio {a}/{b} has no rational approximation with denominator <= {denominator_cutoff}"
                    ),
                };
            }
        }
    }
    CommensurabilityVerdict::HeuristicCommensurable {
        note: format!(
            "all pairwise length ratios admit rational approximations with denominator <= {denominator_cutoff}"
        ),
    }
}

/// M(s) and M'(s) for integer s: exact rational entries Σ α^s and symbolic
/// derivative entries -Σ α^s ln(1/α).
#[derive(Debug, Clone)]
pub struct GraphMatrixEval {
    pub s: u32,
    pub m: Vec<Vec<Rational>>,
    pub m_prime: Vec<Vec<LogLinear>>,
}

pub fn eval_matrix(scheme: &Scheme, s: u32) -> GraphMatrixEval {
    let n = scheme.prototile_count();
    let mut m = vec![vec![Rational::zero(); n]; n];
    let mut m_prime = vec![vec![LogLinear::zero(); n]; n];
    for (i, rule) in scheme.rules.iter().enumerate() {
        for child in rule {
            let j = child.child_type - 1;
            let alpha_s = child.scale.pow(s as i32);
            m[i][j] += &alpha_s;
            // -α^s · ln(1/α) = α^s · ln α
            let contrib = LogLinear::ln_of(&child.scale).scale(&alpha_s);
            m_prime[i][j] = &m_prime[i][j] + &contrib;
        }
    }
    GraphMatrixEval { s, m, m_prime }
}

fn determinant(m: &[Vec<Rational>]) -> Rational {
    let n = m.len();
    match n {
        0 => Rational::one(),
        1 => m[0][0].clone(),
        _ => {
            let mut acc = Rational::zero();
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Rational>> = (1..n)
                    .map(|r| {
                        (0..n)
                            .filter(|&c| c != j)
                            .map(|c| m[r][c].clone())
                            .collect()
                    })
                    .collect();
                let term = &m[0][j] * determinant(&minor);
                if j % 2 == 0 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            acc
        }
    }
}

/// adj(A) by exact cofactor expansion; adj(A)·A = det(A)·I. For 1×1 input
/// the adjugate is [1].
pub fn adjugate(a: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let n = a.len();
    if n == 1 {
        return vec![vec![Rational::one()]];
    }
    let mut adj = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<Rational>> = (0..n)
                .filter(|&r| r != j)
                .map(|r| {
                    (0..n)
                        .filter(|&c| c != i)
                        .map(|c| a[r][c].clone())
                        .collect()
                })
                .collect();
            let det = determinant(&minor);
            adj[i][j] = if (i + j) % 2 == 0 { det } else { -det };
        }
    }
    adj
}

/// The rank-one matrix adj(I - M(d)) over its trace normalization. Columns
/// of the numerator are constant, so `q(h)` is row-independent.
#[derive(Debug, Clone)]
pub struct QMatrix {
    /// adj(I - M(d)); all rows are identical and strictly positive.
    pub numerator: Vec<Vec<Rational>>,
    /// -tr(adj(I - M(d)) · M'(d)), a positive log-linear value.
    pub denominator: LogLinear,
}

impl QMatrix {
    /// Exact numerator of q_h (1-based vertex h).
    pub fn q_numerator(&self, h: usize) -> &Rational {
        &self.numerator[0][h - 1]
    }

    /// Decimal evaluation of q_h.
    pub fn q_decimal(&self, h: usize, digits: u32) -> String {
        let prec = crate::loglin::decimal_digits_to_bits(digits);
        let den = self.denominator.eval_fixed(prec);
        crate::bigfloat::div_rational_by_fixed(self.q_numerator(h), &den).decimal(digits)
    }

    pub fn q_f64(&self, h: usize) -> f64 {
        crate::exact::rational_to_f64(self.q_numerator(h)) / self.denominator.to_f64()
    }
}

/// Computes Q for a normalized, irreducible, incommensurable scheme.
pub fn compute_q(scheme: &Scheme) -> Result<QMatrix, GraphError> {
    let graph = build_graph(scheme);
    if !is_irreducible(&graph) {
        return Err(GraphError::NotIrreducible);
    }
    match classify_commensurability(&graph, DEFAULT_CYCLE_BUDGET)? {
        CommensurabilityVerdict::Commensurable { generator } => {
            return Err(GraphError::Commensurable { generator })
        }
        CommensurabilityVerdict::Incommensurable { .. } => {}
        _ => unreachable!("rational scales classify exactly"),
    }
    compute_q_unchecked(scheme)
}

/// Q without the incommensurability guard; the matrix algebra itself only
/// needs a normalized irreducible scheme.
pub fn compute_q_unchecked(scheme: &Scheme) -> Result<QMatrix, GraphError> {
    let n = scheme.prototile_count();
    let d = scheme.dim as u32;
    let eval = eval_matrix(scheme, d);
    let mut i_minus_m = vec![vec![Rational::zero(); n]; n];
    for r in 0..n {
        for c in 0..n {
            i_minus_m[r][c] = -eval.m[r][c].clone();
        }
        i_minus_m[r][r] += Rational::one();
    }
    let numerator = adjugate(&i_minus_m);
    for r in 1..n {
        if numerator[r] != numerator[0] {
            return Err(GraphError::SingularStructure);
        }
    }
    if numerator[0].iter().any(|x| !x.is_positive()) {
        return Err(GraphError::SingularStructure);
    }
    // denominator = -tr(adj · M') = -Σ_{r,c} adj[r][c]·M'[c][r]
    let mut denominator = LogLinear::zero();
    for r in 0..n {
        for c in 0..n {
            let term = eval.m_prime[c][r].scale(&numerator[r][c]);
            denominator = &denominator - &term;
        }
    }
    if denominator.sign() <= 0 {
        return Err(GraphError::SingularStructure);
    }
    Ok(QMatrix {
        numerator,
        denominator,
    })
}

pub const DEFAULT_CYCLE_BUDGET: u64 = 1_000_000;
pub const DEFAULT_PATH_BUDGET: u64 = 100_000_000;

/// All times in 𝒮_{i→j} up to ln(horizon_u), as (time, multiplicity) pairs
/// sorted increasingly. A time is the length of a path from i that terminates
/// exactly at vertex j; the zero-length path contributes {0} when i = j.
pub fn enumerate_path_times(
    graph: &SubstGraph,
    i: usize,
    j: usize,
    horizon_u: &Rational,
    budget: u64,
) -> Result<Vec<(LogLinear, u64)>, GraphError> {
    let mut by_value: HashMap<Rational, u64> = HashMap::new();
    let adj = graph.adjacency();
    // DFS over partial paths with product Πα ≥ 1/u, i.e. inv = 1/Πα ≤ u.
    let mut steps: u64 = 0;
    let mut stack: Vec<(usize, Rational)> = vec![(i, Rational::one())];
    if horizon_u < &Rational::one() {
        return Ok(Vec::new());
    }
    while let Some((v, inv)) = stack.pop() {
        steps += 1;
        if steps > budget {
            return Err(GraphError::BudgetExceeded {
                what: "enumerating path times",
                budget,
            });
        }
        if v == j {
            *by_value.entry(inv.clone()).or_insert(0) += 1;
        }
        for &(edge_idx, w) in &adj[v] {
            let next_inv = &inv / &graph.edges[edge_idx].scale;
            if next_inv <= *horizon_u {
                stack.push((w, next_inv));
            }
        }
    }
    let mut out: Vec<(Rational, u64)> = by_value.into_iter().collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out
        .into_iter()
        .map(|(val, count)| (LogLinear::ln_of(&val), count))
        .collect())
}

/// Number of metric paths of length exactly ln(u) originating at vertex i:
/// pure graph traversal, no geometry. A path is counted once its accumulated
/// length first reaches or passes ln(u) along an edge.
pub fn path_count_oracle(
    graph: &SubstGraph,
    i: usize,
    u: &Rational,
    budget: u64,
) -> Result<u64, GraphError> {
    let adj = graph.adjacency();
    let one = Rational::one();
    let mut count: u64 = 0;
    let mut steps: u64 = 0;
    // stack holds (vertex, w = u·Πα): w > 1 means the walk continues
    let mut stack: Vec<(usize, Rational)> = vec![(i, u.clone())];
    while let Some((v, w)) = stack.pop() {
        steps += 1;
        if steps > budget {
            return Err(GraphError::BudgetExceeded {
                what: "counting metric paths",
                budget,
            });
        }
        if w <= one {
            count += 1;
            continue;
        }
        for &(edge_idx, to) in &adj[v] {
            stack.push((to, &w * &graph.edges[edge_idx].scale));
        }
    }
    Ok(count)
}

/// Closed paths from `i` back to `i` of length at most ln(max_u), reported
/// as edge sequences and restricted to prime orbits (paths that are not a
/// repetition of a shorter closed path).
pub fn closed_paths_up_to(
    graph: &SubstGraph,
    i: usize,
    max_u: &Rational,
    budget: u64,
) -> Result<Vec<Vec<usize>>, GraphError> {
    let adj = graph.adjacency();
    let mut out = Vec::new();
    let mut steps = 0u64;
    let mut path: Vec<usize> = Vec::new();

    fn is_prime_orbit(path: &[usize]) -> bool {
        let n = path.len();
        for p in 1..n {
            if n.is_multiple_of(p) && path.chunks(p).all(|c| c == &path[..p]) {
                return false;
            }
        }
        true
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        v: usize,
        start: usize,
        inv: Rational,
        max_u: &Rational,
        adj: &[Vec<(usize, usize)>],
        graph: &SubstGraph,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        steps: &mut u64,
        budget: u64,
    ) -> Result<(), GraphError> {
        *steps += 1;
        if *steps > budget {
            return Err(GraphError::BudgetExceeded {
                what: "enumerating closed paths",
                budget,
            });
        }
        if v == start && !path.is_empty() && is_prime_orbit(path) {
            out.push(path.clone());
        }
        for &(edge_idx, w) in &adj[v] {
            let next_inv = &inv / &graph.edges[edge_idx].scale;
            if next_inv <= *max_u {
                path.push(edge_idx);
                dfs(w, start, next_inv, max_u, adj, graph, path, out, steps, budget)?;
                path.pop();
            }
        }
        Ok(())
    }

    dfs(
        i,
        i,
        Rational::one(),
        max_u,
        &adj,
        graph,
        &mut path,
        &mut out,
        &mut steps,
        budget,
    )?;
    Ok(out)
}
