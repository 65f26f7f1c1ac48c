//! Exact spectra of `H[G]` on small graphs: regular and irreducible builds,
//! counting functions, the Plancherel decomposition, and `K_N` moments.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirichlet::box_sites;
use crate::error::{Error, Result};
use crate::ids::ids_one_dim;
use crate::lehmer::{factorial, LehmerCode};
use crate::scalar::Scalar;
use crate::walk::{binomial, with_pool};
use crate::young::{enumerate_diagrams_dims, IrrepMatrices, YoungDiagram};

/// Largest `v · v!` accepted by [`RegularOperator::new`].
pub const REGULAR_SIZE_LIMIT: usize = 5040 * 7;
/// Largest vertex count with a dense regular spectrum.
pub const DENSE_VERTEX_LIMIT: usize = 5;
pub const PAIRING_TOLERANCE: f64 = 1e-8;
/// Slack when counting eigenvalues `≤ λ`, so that exact eigenvalues on the grid count consistently.
const COUNT_SLACK: f64 = 1e-9;
pub const MAX_KN_VERTICES: usize = 8;
pub const MAX_KN_LENGTH: usize = 8;

/// A finite connected simple graph on `0..v`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteGraph {
    pub label: String,
    neighbors: Vec<Vec<usize>>,
}

impl FiniteGraph {
    pub fn new(
        label: impl Into<String>,
        vertices: usize,
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        if vertices == 0 {
            return Err(Error::InvalidArgument(
                "graph needs at least one vertex".into(),
            ));
        }
        let mut neighbors = vec![Vec::new(); vertices];
        for &(a, b) in edges {
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop at {a}")));
            }
            if a >= vertices || b >= vertices {
                return Err(Error::IndexOutOfRange {
                    index: a.max(b),
                    lo: 0,
                    hi: vertices - 1,
                });
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        let graph = FiniteGraph {
            label: label.into(),
            neighbors,
        };
        if graph.distances_from(0).iter().any(Option::is_none) {
            return Err(Error::InvalidArgument(format!(
                "graph {} is not connected",
                graph.label
            )));
        }
        Ok(graph)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect();
        Self::new(format!("K{n}"), n, &edges)
    }

    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|a| (a - 1, a)).collect();
        Self::new(format!("P{n}"), n, &edges)
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!(
                "cycle needs 3 vertices, got {n}"
            )));
        }
        let edges: Vec<_> = (0..n).map(|a| (a, (a + 1) % n)).collect();
        Self::new(format!("C{n}"), n, &edges)
    }

    /// The box `B_L ⊂ Z^d` with nearest-neighbour edges, vertices in lexicographic order.
    pub fn lattice_box(d: usize, l: usize) -> Result<Self> {
        crate::perm::check_dim(d)?;
        let sites = box_sites(d, l);
        let mut edges = Vec::new();
        for (a, x) in sites.iter().enumerate() {
            for (b, y) in sites.iter().enumerate().skip(a + 1) {
                if x.is_adjacent(y) {
                    edges.push((a, b));
                }
            }
        }
        Self::new(format!("B{d},{l}"), sites.len(), &edges)
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.neighbors[x]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_bipartite(&self) -> bool {
        let mut color = vec![None; self.len()];
        color[0] = Some(false);
        let mut queue = VecDeque::from([0]);
        while let Some(x) = queue.pop_front() {
            let c = color[x].unwrap();
            for &y in &self.neighbors[x] {
                match color[y] {
                    None => {
                        color[y] = Some(!c);
                        queue.push_back(y);
                    }
                    Some(cy) if cy == c => return false,
                    _ => {}
                }
            }
        }
        true
    }

    /// Graph distances from `x`; `None` for unreachable vertices.
    pub fn distances_from(&self, x: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        dist[x] = Some(0);
        let mut queue = VecDeque::from([x]);
        while let Some(a) = queue.pop_front() {
            let da = dist[a].unwrap();
            for &b in &self.neighbors[a] {
                if dist[b].is_none() {
                    dist[b] = Some(da + 1);
                    queue.push_back(b);
                }
            }
        }
        dist
    }
}

/// `H[G]` on `ℓ₂(V → ℓ₂(S_V))`, indexed by `x · v! + rank(π)`.
///
/// Block `(x, y)` maps `π` to `(x y) ∘ π` for `x ∼ y`.
#[derive(Clone, Debug)]
pub struct RegularOperator {
    graph: FiniteGraph,
    code: LehmerCode,
    perms: usize,
}

impl RegularOperator {
    pub fn new(graph: &FiniteGraph) -> Result<Self> {
        let v = graph.len();
        let size = (v as u64).saturating_mul(if v <= 20 { factorial(v) } else { u64::MAX });
        if size > REGULAR_SIZE_LIMIT as u64 {
            return Err(Error::budget(
                "regular representation size",
                size,
                REGULAR_SIZE_LIMIT as u64,
            ));
        }
        let code = LehmerCode::new(v)?;
        Ok(RegularOperator {
            graph: graph.clone(),
            perms: code.count() as usize,
            code,
        })
    }

    pub fn size(&self) -> usize {
        self.graph.len() * self.perms
    }

    pub fn graph(&self) -> &FiniteGraph {
        &self.graph
    }

    /// Nonzero entries `(row, col)` of the matrix; all entries are 1.
    pub fn entries(&self) -> Vec<(usize, usize)> {
        let v = self.graph.len();
        let mut perm = vec![0u8; v];
        let mut out = Vec::with_capacity(self.size() * self.graph.max_degree());
        for r in 0..self.perms {
            self.code.unrank(r as u64, &mut perm);
            for (x, y) in self.graph.edges() {
                let image = left_transposed(&perm, x as u8, y as u8);
                let s = self.code.rank(&image) as usize;
                out.push((x * self.perms + s, y * self.perms + r));
                out.push((y * self.perms + s, x * self.perms + r));
            }
        }
        out.sort_unstable();
        out
    }

    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size()];
        for (row, col) in self.entries() {
            out[row] += input[col];
        }
        out
    }

    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        if self.graph.len() > DENSE_VERTEX_LIMIT {
            return Err(Error::budget(
                "dense regular build vertices",
                self.graph.len(),
                DENSE_VERTEX_LIMIT,
            ));
        }
        let n = self.size();
        let mut m = DMatrix::zeros(n, n);
        for (row, col) in self.entries() {
            m[(row, col)] = 1.0;
        }
        Ok(m)
    }
}

fn left_transposed(perm: &[u8], a: u8, b: u8) -> Vec<u8> {
    perm.iter()
        .map(|&p| {
            if p == a {
                b
            } else if p == b {
                a
            } else {
                p
            }
        })
        .collect()
}

pub fn build_regular(graph: &FiniteGraph) -> Result<DMatrix<f64>> {
    RegularOperator::new(graph)?.to_dense()
}

/// `H[G; λ]` on `ℓ₂(V → E_λ)`; vertex `x` acts as the label `x + 1`.
pub fn build_irrep(graph: &FiniteGraph, lambda: &YoungDiagram) -> Result<DMatrix<f64>> {
    let v = graph.len();
    if lambda.size() != v {
        return Err(Error::InvalidArgument(format!(
            "diagram {lambda} has {} boxes, graph has {v} vertices",
            lambda.size()
        )));
    }
    let rep = IrrepMatrices::<f64>::new(lambda)?;
    let k = rep.dim();
    let mut m = DMatrix::zeros(v * k, v * k);
    for (x, y) in graph.edges() {
        let block = rep.transposition(x + 1, y + 1)?;
        m.view_mut((x * k, y * k), (k, k)).copy_from(&block);
        m.view_mut((y * k, x * k), (k, k)).copy_from(&block);
    }
    Ok(m)
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_spectrum(m: DMatrix<f64>) -> Vec<f64> {
    let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub label: String,
    pub eigenvalues: Vec<f64>,
    pub normalization: usize,
}

impl SpectrumRecord {
    /// Normalized count of eigenvalues `≤ λ`.
    pub fn counting(&self, lambda: f64) -> f64 {
        let count = self
            .eigenvalues
            .partition_point(|&e| e <= lambda + COUNT_SLACK);
        count as f64 / self.normalization as f64
    }

    /// Normalized count of eigenvalues `< λ`.
    pub fn counting_below(&self, lambda: f64) -> f64 {
        let count = self
            .eigenvalues
            .partition_point(|&e| e < lambda - COUNT_SLACK);
        count as f64 / self.normalization as f64
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |acc, e| acc.max(e.abs()))
    }
}

pub fn regular_spectrum(graph: &FiniteGraph) -> Result<SpectrumRecord> {
    let op = RegularOperator::new(graph)?;
    Ok(SpectrumRecord {
        label: format!("{}:regular", graph.label),
        eigenvalues: symmetric_spectrum(op.to_dense()?),
        normalization: op.size(),
    })
}

pub fn irrep_spectrum(graph: &FiniteGraph, lambda: &YoungDiagram) -> Result<SpectrumRecord> {
    let m = build_irrep(graph, lambda)?;
    let normalization = m.nrows();
    Ok(SpectrumRecord {
        label: format!("{}:{lambda}", graph.label),
        eigenvalues: symmetric_spectrum(m),
        normalization,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub graph: String,
    pub regular_count: usize,
    /// `Σ_λ dim λ · v · dim λ`.
    pub assembled_count: usize,
    /// Largest gap after sorted pairing of the two multisets.
    pub max_deviation: f64,
    /// Largest gap between `𝒩_G` and `Σ_λ Pl(λ) 𝒩_{G;λ}` on the grid.
    pub counting_deviation: f64,
    pub regular: SpectrumRecord,
    pub irreps: Vec<(YoungDiagram, u64, SpectrumRecord)>,
}

impl DecompositionReport {
    pub fn passed(&self) -> bool {
        self.regular_count == self.assembled_count
            && self.max_deviation <= PAIRING_TOLERANCE
            && self.counting_deviation <= 1e-12
    }
}

/// Points between and on the eigenvalues, covering `[-deg, deg]`.
fn counting_grid(spectrum: &[f64], bound: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=200)
        .map(|k| -bound - 0.5 + (2.0 * bound + 1.0) * k as f64 / 200.0)
        .collect();
    grid.extend_from_slice(spectrum);
    grid.extend(spectrum.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    grid
}

pub fn verify_decomposition(graph: &FiniteGraph) -> Result<DecompositionReport> {
    let regular = regular_spectrum(graph)?;
    let v = graph.len();
    let vf = factorial(v) as f64;
    let irreps: Vec<(YoungDiagram, u64, SpectrumRecord)> = enumerate_diagrams_dims(v)?
        .into_iter()
        .map(|(lambda, dim)| {
            let spectrum = irrep_spectrum(graph, &lambda)?;
            Ok((lambda, dim, spectrum))
        })
        .collect::<Result<_>>()?;

    let mut assembled: Vec<f64> = irreps
        .iter()
        .flat_map(|(_, dim, spectrum)| {
            std::iter::repeat_n(&spectrum.eigenvalues, *dim as usize)
                .flatten()
                .copied()
        })
        .collect();
    assembled.sort_by(f64::total_cmp);
    let assembled_count = assembled.len();
    let max_deviation = if assembled_count == regular.eigenvalues.len() {
        regular
            .eigenvalues
            .iter()
            .zip(&assembled)
            .fold(0.0, |acc: f64, (a, b)| acc.max((a - b).abs()))
    } else {
        f64::INFINITY
    };

    let grid = counting_grid(&regular.eigenvalues, graph.max_degree() as f64);
    let counting_deviation = grid.iter().fold(0.0f64, |acc, &t| {
        let mixed: f64 = irreps
            .iter()
            .map(|(_, dim, spectrum)| (dim * dim) as f64 / vf * spectrum.counting(t))
            .sum();
        acc.max((regular.counting(t) - mixed).abs())
    });

    Ok(DecompositionReport {
        graph: graph.label.clone(),
        regular_count: regular.eigenvalues.len(),
        assembled_count,
        max_deviation,
        counting_deviation,
        regular,
        irreps,
    })
}

/// Number of closed walks of length `n` from `start` whose transposition product is the identity.
pub fn closed_identity_walks(graph: &FiniteGraph, start: usize, n: usize) -> u64 {
    let dist: Vec<usize> = graph
        .distances_from(start)
        .into_iter()
        .map(|d| d.unwrap())
        .collect();
    let mut perm: Vec<usize> = (0..graph.len()).collect();
    walk_dfs(graph, &dist, start, n, &mut perm, 0)
}

fn walk_dfs(
    graph: &FiniteGraph,
    dist: &[usize],
    x: usize,
    remaining: usize,
    perm: &mut [usize],
    moved: usize,
) -> u64 {
    if remaining == 0 {
        return u64::from(moved == 0);
    }
    let mut total = 0;
    for &y in graph.neighbors(x) {
        if dist[y] > remaining - 1 {
            continue;
        }
        let before = usize::from(perm[x] != x) + usize::from(perm[y] != y);
        perm.swap(x, y);
        let after = usize::from(perm[x] != x) + usize::from(perm[y] != y);
        let moved_next = moved + after - before;
        // each further transposition restores at most two points
        if moved_next <= 2 * (remaining - 1) {
            total += walk_dfs(graph, dist, y, remaining - 1, perm, moved_next);
        }
        perm.swap(x, y);
    }
    total
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KnMoment {
    pub vertices: usize,
    pub n: usize,
    /// `τ(H[K_N]^n(j, j))`, the same for every `j`.
    pub identity_walks: BigUint,
    /// `(1 / (N · N!)) tr H^n`.
    pub moment: BigRational,
    /// Moment of `H / √N`; `None` for odd `n`, where it vanishes.
    pub scaled: Option<BigRational>,
}

impl KnMoment {
    pub fn scaled_f64(&self) -> f64 {
        self.scaled.as_ref().map_or(0.0, Scalar::to_f64)
    }
}

pub fn kn_moment(vertices: usize, n: usize) -> Result<KnMoment> {
    if !(2..=MAX_KN_VERTICES).contains(&vertices) {
        return Err(Error::IndexOutOfRange {
            index: vertices,
            lo: 2,
            hi: MAX_KN_VERTICES,
        });
    }
    if n > MAX_KN_LENGTH {
        return Err(Error::IndexOutOfRange {
            index: n,
            lo: 0,
            hi: MAX_KN_LENGTH,
        });
    }
    let graph = FiniteGraph::complete(vertices)?;
    let count = BigUint::from(closed_identity_walks(&graph, 0, n));
    let moment = BigRational::from_integer(count.clone().into());
    let scaled = n.is_multiple_of(2).then(|| {
        let denom = num_bigint::BigInt::from(vertices).pow(n as u32 / 2);
        BigRational::new(count.clone().into(), denom)
    });
    Ok(KnMoment {
        vertices,
        n,
        identity_walks: count,
        moment,
        scaled,
    })
}

/// `(N - 1)(2N - 3) / N²`, the scaled fourth moment of `K_N`.
pub fn kn_fourth_moment_formula(vertices: usize) -> BigRational {
    let n = num_bigint::BigInt::from(vertices);
    let one = num_bigint::BigInt::one();
    BigRational::new((&n - &one) * (&n * 2 - 3), &n * &n)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InteriorMoment {
    pub vertex: usize,
    pub n: usize,
    pub box_count: u64,
    pub lattice_count: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoxIdsReport {
    pub l: usize,
    pub grid: Vec<f64>,
    pub counting: Vec<f64>,
    pub limit: Vec<f64>,
    pub sup_distance: f64,
    pub spectral_radius: f64,
    /// Interior vertices whose distance to the complement exceeds `n / 2`.
    pub interior: Vec<InteriorMoment>,
    /// Largest `|Σ e^n - v! Σ_x τ(H^n(x, x))|` over the checked `n`.
    pub trace_deviation: f64,
    pub spectrum: SpectrumRecord,
}

impl BoxIdsReport {
    pub fn interior_exact(&self) -> bool {
        self.interior.iter().all(|m| m.box_count == m.lattice_count)
    }
}

pub const BOX_IDS_MAX_L: usize = 2;
pub const BOX_IDS_MAX_MOMENT: usize = 8;

pub fn default_ids_grid() -> Vec<f64> {
    (0..=40).map(|k| -2.0 + 0.1 * k as f64).collect()
}

/// Compares the counting function of `H[B_L]` in `d = 1` with the arcsine law.
pub fn box_ids_check(l: usize, grid: &[f64]) -> Result<BoxIdsReport> {
    if !(1..=BOX_IDS_MAX_L).contains(&l) {
        return Err(Error::IndexOutOfRange {
            index: l,
            lo: 1,
            hi: BOX_IDS_MAX_L,
        });
    }
    let graph = FiniteGraph::lattice_box(1, l)?;
    let spectrum = regular_spectrum(&graph)?;
    let counting: Vec<f64> = grid.iter().map(|&t| spectrum.counting(t)).collect();
    let limit: Vec<f64> = grid.iter().map(|&t| ids_one_dim(t)).collect();
    let sup_distance = counting
        .iter()
        .zip(&limit)
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));

    let v = graph.len();
    let mut interior = Vec::new();
    let mut trace_deviation = 0.0f64;
    for n in 1..=BOX_IDS_MAX_MOMENT {
        let counts: Vec<u64> = (0..v)
            .map(|x| closed_identity_walks(&graph, x, n))
            .collect();
        let combinatorial = factorial(v) as f64 * counts.iter().sum::<u64>() as f64;
        let spectral: f64 = spectrum.eigenvalues.iter().map(|e| e.powi(n as i32)).sum();
        trace_deviation =
            trace_deviation.max((spectral - combinatorial).abs() / combinatorial.max(1.0));
        for (x, &count) in counts.iter().enumerate() {
            // vertex x sits at coordinate x - l; the complement starts at distance l + 1 - |x - l|
            let to_complement = l + 1 - x.abs_diff(l);
            if 2 * to_complement > n {
                let lattice_count = if n % 2 == 0 {
                    u64::try_from(binomial(n as u64, n as u64 / 2)).expect("small binomial")
                } else {
                    0
                };
                interior.push(InteriorMoment {
                    vertex: x,
                    n,
                    box_count: count,
                    lattice_count,
                });
            }
        }
    }
    Ok(BoxIdsReport {
        l,
        grid: grid.to_vec(),
        counting,
        limit,
        sup_distance,
        spectral_radius: spectrum.spectral_radius(),
        interior,
        trace_deviation,
        spectrum,
    })
}

/// Decomposition reports for several graphs on a pool of `workers` threads.
pub fn verify_decompositions(
    graphs: &[FiniteGraph],
    workers: usize,
) -> Result<Vec<DecompositionReport>> {
    with_pool(workers, || {
        graphs.par_iter().map(verify_decomposition).collect()
    })?
}

pub fn standard_test_graphs() -> Result<Vec<FiniteGraph>> {
    Ok(vec![
        FiniteGraph::complete(2)?,
        FiniteGraph::complete(3)?,
        FiniteGraph::complete(4)?,
        FiniteGraph::path(3)?,
        FiniteGraph::path(4)?,
        FiniteGraph::cycle(4)?,
        FiniteGraph::lattice_box(1, 1)?,
    ])
}

/// `Σ_x τ(H^n(x, x)) / v`, the exact normalized moment of `H[G]`.
pub fn graph_moment(graph: &FiniteGraph, n: usize) -> BigRational {
    let total: u64 = (0..graph.len())
        .map(|x| closed_identity_walks(graph, x, n))
        .sum();
    if total == 0 {
        return BigRational::zero();
    }
    BigRational::new(total.into(), graph.len().into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn assert_spectrum(actual: &[f64], expected: &[f64]) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.iter().zip(expected) {
            assert_abs_diff_eq!(a, e, epsilon = 1e-10);
        }
    }

    fn diagram(rows: &[usize]) -> YoungDiagram {
        YoungDiagram::new(rows.to_vec()).unwrap()
    }

    /// Brute-force regular build straight from the definition, with explicit permutation arrays.
    fn brute_regular(graph: &FiniteGraph) -> DMatrix<f64> {
        let v = graph.len();
        let mut perms: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..v {
            perms = perms
                .into_iter()
                .flat_map(|p| {
                    let free: Vec<usize> = (0..v).filter(|k| !p.contains(k)).collect();
                    free.into_iter().map(move |k| {
                        let mut q = p.clone();
                        q.push(k);
                        q
                    })
                })
                .collect();
        }
        let find = |p: &Vec<usize>| perms.iter().position(|q| q == p).unwrap();
        let size = v * perms.len();
        let mut m = DMatrix::zeros(size, size);
        for x in 0..v {
            for &y in graph.neighbors(x) {
                for (r, p) in perms.iter().enumerate() {
                    let q: Vec<usize> = p
                        .iter()
                        .map(|&a| {
                            if a == x {
                                y
                            } else if a == y {
                                x
                            } else {
                                a
                            }
                        })
                        .collect();
                    m[(x * perms.len() + find(&q), y * perms.len() + r)] += 1.0;
                }
            }
        }
        m
    }

    #[test]
    fn graph_constructors() {
        assert_eq!(FiniteGraph::complete(4).unwrap().edges().count(), 6);
        assert_eq!(FiniteGraph::path(4).unwrap().max_degree(), 2);
        assert!(FiniteGraph::cycle(4).unwrap().is_bipartite());
        assert!(!FiniteGraph::complete(3).unwrap().is_bipartite());
        assert!(FiniteGraph::new("x", 3, &[(0, 1)]).is_err());
        assert!(FiniteGraph::new("x", 2, &[(0, 0)]).is_err());
        assert!(FiniteGraph::cycle(2).is_err());
        let b = FiniteGraph::lattice_box(1, 1).unwrap();
        assert_eq!(
            b,
            FiniteGraph {
                label: "B1,1".into(),
                ..FiniteGraph::path(3).unwrap()
            }
        );
        assert_eq!(FiniteGraph::lattice_box(2, 1).unwrap().edges().count(), 12);
    }

    #[test]
    fn k2_regular_spectrum() {
        let g = FiniteGraph::complete(2).unwrap();
        assert_eq!(build_regular(&g).unwrap().nrows(), 4);
        assert_spectrum(
            &regular_spectrum(&g).unwrap().eigenvalues,
            &[-1.0, -1.0, 1.0, 1.0],
        );
    }

    #[test]
    fn regular_build_matches_brute_force() {
        for g in standard_test_graphs().unwrap() {
            let m = build_regular(&g).unwrap();
            assert_eq!(m, brute_regular(&g), "{}", g.label);
            assert_eq!(m, m.transpose());
            let v = factorial(g.len()) as usize;
            for row in 0..m.nrows() {
                let sum: f64 = m.row(row).iter().map(|e| e.abs()).sum();
                assert_eq!(sum as usize, g.neighbors(row / v).len());
            }
        }
    }

    #[test]
    fn regular_size_guard() {
        let k8 = FiniteGraph::complete(8).unwrap();
        assert!(RegularOperator::new(&k8).unwrap_err().is_budget());
        let k6 = FiniteGraph::complete(6).unwrap();
        let op = RegularOperator::new(&k6).unwrap();
        assert_eq!(op.size(), 4320);
        assert!(op.to_dense().unwrap_err().is_budget());
        // the sparse build still applies: H maps the all-ones vector to degree times itself
        let out = op.apply(&vec![1.0; op.size()]);
        assert!(out.iter().all(|&x| x == 5.0));
    }

    #[test]
    fn path3_spectrum_is_symmetric() {
        let g = FiniteGraph::path(3).unwrap();
        let spectrum = regular_spectrum(&g).unwrap();
        assert_eq!(spectrum.eigenvalues.len(), 18);
        let reversed: Vec<f64> = spectrum.eigenvalues.iter().rev().map(|e| -e).collect();
        assert_spectrum(&spectrum.eigenvalues, &reversed);
        for t in [-1.7, -1.0, -0.3, 0.0, 0.4, 1.0, 1.5] {
            assert_abs_diff_eq!(
                spectrum.counting(-t),
                1.0 - spectrum.counting_below(t),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn k2_irreps() {
        let g = FiniteGraph::complete(2).unwrap();
        let triv = build_irrep(&g, &diagram(&[2])).unwrap();
        assert_eq!(triv, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let sign = build_irrep(&g, &diagram(&[1, 1])).unwrap();
        assert_eq!(sign, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]));
        assert_spectrum(
            &irrep_spectrum(&g, &diagram(&[1, 1])).unwrap().eigenvalues,
            &[-1.0, 1.0],
        );
        assert!(build_irrep(&g, &diagram(&[2, 1])).is_err());
    }

    #[test]
    fn k3_standard_irrep_against_direct_eigensolve() {
        let g = FiniteGraph::complete(3).unwrap();
        let m = build_irrep(&g, &diagram(&[2, 1])).unwrap();
        assert_eq!(m.nrows(), 6);
        assert!((&m - m.transpose()).amax() < 1e-15);
        // power sums of the eigenvalues against traces of matrix powers
        let sq = &m * &m;
        let trace2: f64 = sq.trace();
        let eig = symmetric_spectrum(m);
        assert_abs_diff_eq!(
            eig.iter().map(|e| e * e).sum::<f64>(),
            trace2,
            epsilon = 1e-10
        );
        // each vertex has two orthogonal 2x2 blocks
        assert_abs_diff_eq!(trace2, 12.0, epsilon = 1e-12);
        let trace3 = (&sq * build_irrep(&g, &diagram(&[2, 1])).unwrap()).trace();
        assert_abs_diff_eq!(
            eig.iter().map(|e| e.powi(3)).sum::<f64>(),
            trace3,
            epsilon = 1e-10
        );
    }

    #[test]
    fn decomposition_holds_on_test_graphs() {
        for report in verify_decompositions(&standard_test_graphs().unwrap(), 2).unwrap() {
            assert!(report.passed(), "{}: {report:?}", report.graph);
            let v = report.irreps[0].2.normalization;
            let vf = factorial(v) as usize;
            assert_eq!(report.regular_count, v * vf);
        }
    }

    #[test]
    fn k3_decomposition_multiplicities() {
        let report = verify_decomposition(&FiniteGraph::complete(3).unwrap()).unwrap();
        let dims: Vec<u64> = report.irreps.iter().map(|(_, d, _)| *d).collect();
        assert_eq!(dims, vec![1, 2, 1]);
        assert_eq!(report.regular_count, 18);
        // trivial representation of K_3 is the adjacency matrix: {2, -1, -1}
        assert_spectrum(&report.irreps[0].2.eigenvalues, &[-1.0, -1.0, 2.0]);
    }

    #[test]
    fn kn_small_moments() {
        for n in 2..=MAX_KN_VERTICES {
            let m2 = kn_moment(n, 2).unwrap();
            assert_eq!(
                m2.scaled.unwrap(),
                BigRational::new((n as i64 - 1).into(), (n as i64).into())
            );
            assert!(kn_moment(n, 3).unwrap().identity_walks.is_zero());
        }
        for n in 2..=6 {
            assert_eq!(
                kn_moment(n, 4).unwrap().scaled.unwrap(),
                kn_fourth_moment_formula(n)
            );
        }
        assert!(kn_moment(9, 2).is_err());
        assert!(kn_moment(4, 9).is_err());
    }

    #[test]
    fn kn_fourth_moments_increase() {
        let values: Vec<BigRational> = (4..=8)
            .map(|n| kn_moment(n, 4).unwrap().scaled.unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[0] < w[1]));
        assert!(values
            .iter()
            .all(|v| *v < BigRational::from_integer(2.into())));
    }

    #[test]
    fn identity_walks_match_matrix_power() {
        for g in [
            FiniteGraph::complete(3).unwrap(),
            FiniteGraph::cycle(4).unwrap(),
        ] {
            let op = RegularOperator::new(&g).unwrap();
            let dense = op.to_dense().unwrap();
            let perms = factorial(g.len()) as usize;
            let mut power = DMatrix::<f64>::identity(dense.nrows(), dense.nrows());
            for n in 1..=6 {
                power = &power * &dense;
                for x in 0..g.len() {
                    let diag = power[(x * perms, x * perms)];
                    assert_eq!(
                        diag as u64,
                        closed_identity_walks(&g, x, n),
                        "{} n={n} x={x}",
                        g.label
                    );
                }
            }
        }
    }

    #[test]
    fn box_ids_small() {
        let r1 = box_ids_check(1, &default_ids_grid()).unwrap();
        assert_eq!(r1.spectrum.eigenvalues.len(), 18);
        assert!(r1.spectral_radius <= 2.0 + 1e-12);
        assert!(r1.interior_exact());
        assert!(r1.trace_deviation < 1e-10);
        let centre = r1
            .interior
            .iter()
            .find(|m| m.vertex == 1 && m.n == 2)
            .unwrap();
        assert_eq!(centre.box_count, 2);

        let r2 = box_ids_check(2, &default_ids_grid()).unwrap();
        assert_eq!(r2.spectrum.eigenvalues.len(), 600);
        assert!(r2.spectral_radius <= 2.0 + 1e-12);
        assert!(r2.interior_exact());
        assert!(r2.interior.iter().any(|m| m.n == 4 && m.box_count == 6));
        assert!(r2.trace_deviation < 1e-10);
        assert!((r2.spectrum.counting(0.0) - 0.5).abs() < 0.1);
        assert!(box_ids_check(3, &[0.0]).is_err());
    }

    #[test]
    fn graph_moment_second() {
        // second moment is the mean degree
        let g = FiniteGraph::path(4).unwrap();
        assert_eq!(graph_moment(&g, 2), BigRational::new(6.into(), 4.into()));
        assert!(graph_moment(&g, 3).is_zero());
    }
}
