//! Simple random walk on `Z^d`, its accumulated transposition product, path
//! statistics, and return probabilities of the infinite-board puzzle.
//!
//! The product of a path `x_0, ..., x_n` is `(x_0 x_1)(x_1 x_2)...(x_{n-1} x_n)`,
//! accumulated by right multiplication. It always maps `x_n` to `x_0`, so an
//! identity product forces a closed walk.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::{check_dim, Site, SparsePermutation};

/// Default cap on the number of step sequences an exhaustive count may visit.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1 << 28;

/// Samples per RNG stream. Fixed so results do not depend on the worker count.
pub const SAMPLES_PER_BLOCK: u64 = 4096;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Generator for `(seed, stream)`.
///
/// ChaCha with 8 rounds; the 64-bit seed is expanded to the 256-bit key by
/// `SeedableRng::seed_from_u64` (a PCG32 stream) and `stream` selects the
/// 64-bit ChaCha nonce. Both steps are fixed by `rand_chacha`, so a run
/// replays bit-for-bit on any platform.
pub fn walk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A nearest-neighbour path `x_0 = 0, x_1, ..., x_n` in `Z^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WalkPath {
    sites: Vec<Site>,
}

impl WalkPath {
    /// Validates that the path starts at the origin and moves by unit steps.
    pub fn from_sites(sites: Vec<Site>) -> Result<Self> {
        let first = sites
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty path".into()))?;
        check_dim(first.dim())?;
        if *first != Site::origin(first.dim()) {
            return Err(Error::InvalidArgument(format!(
                "path starts at {first}, not the origin"
            )));
        }
        for (j, w) in sites.windows(2).enumerate() {
            if !w[0].is_adjacent(&w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "step {j}: {} -> {} is not a unit step",
                    w[0], w[1]
                )));
            }
        }
        Ok(WalkPath { sites })
    }

    /// Path from the origin following step directions in `0..2d` (see [`Site::step`]).
    pub fn from_steps(d: usize, dirs: &[usize]) -> Result<Self> {
        check_dim(d)?;
        let mut sites = Vec::with_capacity(dirs.len() + 1);
        let mut x = Site::origin(d);
        sites.push(x);
        for &dir in dirs {
            if dir >= 2 * d {
                return Err(Error::InvalidArgument(format!(
                    "step direction {dir} >= 2d"
                )));
            }
            x = x.step(dir);
            sites.push(x);
        }
        Ok(WalkPath { sites })
    }

    pub(crate) fn from_sites_unchecked(sites: Vec<Site>) -> Self {
        WalkPath { sites }
    }

    pub fn dim(&self) -> usize {
        self.sites[0].dim()
    }

    /// Number of steps `n`.
    pub fn steps(&self) -> usize {
        self.sites.len() - 1
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, j: usize) -> Site {
        self.sites[j]
    }

    pub fn end(&self) -> Site {
        *self.sites.last().unwrap()
    }

    /// Displacement `x_{j+1} - x_j`.
    pub fn increment(&self, j: usize) -> Site {
        self.sites[j + 1] - self.sites[j]
    }

    /// The first `steps + 1` sites.
    pub fn head(&self, steps: usize) -> WalkPath {
        WalkPath {
            sites: self.sites[..=steps].to_vec(),
        }
    }
}

pub fn sample_walk(d: usize, n_steps: usize, seed: u64) -> Result<WalkPath> {
    check_dim(d)?;
    let mut rng = walk_rng(seed, 0);
    Ok(sample_with(&mut rng, d, n_steps))
}

fn sample_with<R: Rng>(rng: &mut R, d: usize, n_steps: usize) -> WalkPath {
    let mut sites = Vec::with_capacity(n_steps + 1);
    let mut x = Site::origin(d);
    sites.push(x);
    for _ in 0..n_steps {
        x = x.step(rng.random_range(0..2 * d));
        sites.push(x);
    }
    WalkPath { sites }
}

/// `(x_0 x_1)(x_1 x_2)...(x_{n-1} x_n)`.
pub fn transposition_product(path: &WalkPath) -> SparsePermutation {
    let mut p = SparsePermutation::identity();
    for w in path.sites.windows(2) {
        p.right_multiply_in_place(w[0], w[1])
            .expect("path steps join distinct sites");
    }
    p
}

/// First-visit times, ranges and flexible vertices of a finite path.
///
/// A site `y` is flexible when the two steps following its first visit are not
/// collinear. Sites first visited less than two steps before the end of the
/// path cannot be decided and are never flexible.
#[derive(Clone, Debug)]
pub struct PathStatistics {
    pub first_visit: HashMap<Site, usize>,
    /// Distinct sites in order of first visit.
    pub range: Vec<Site>,
    /// Distinct even sites in order of first visit; entry `j` is the `j`-th visited even vertex.
    pub range_even: Vec<Site>,
    pub flexible: BTreeSet<Site>,
    pub flexible_even: BTreeSet<Site>,
    /// Number of even sites whose first visit is followed by two steps of the path.
    pub decidable_even: usize,
}

impl PathStatistics {
    /// `R_n`: sites first visited strictly before time `n`.
    pub fn range_before(&self, n: usize) -> impl Iterator<Item = &Site> {
        self.range.iter().filter(move |y| self.first_visit[*y] < n)
    }

    /// `|R_n^even ∩ F^even|`.
    pub fn flexible_even_before(&self, n: usize) -> usize {
        self.flexible_even
            .iter()
            .filter(|y| self.first_visit[*y] < n)
            .count()
    }

    pub fn is_flexible(&self, y: &Site) -> bool {
        self.flexible.contains(y)
    }
}

pub fn path_statistics(path: &WalkPath) -> PathStatistics {
    let sites = path.sites();
    let last = sites.len() - 1;
    let mut first_visit = HashMap::with_capacity(sites.len());
    let mut range = Vec::new();
    let mut range_even = Vec::new();
    let mut flexible = BTreeSet::new();
    let mut flexible_even = BTreeSet::new();
    let mut decidable_even = 0;
    for (j, &y) in sites.iter().enumerate() {
        if first_visit.contains_key(&y) {
            continue;
        }
        first_visit.insert(y, j);
        range.push(y);
        let even = y.is_even();
        if even {
            range_even.push(y);
        }
        if j + 2 <= last {
            if even {
                decidable_even += 1;
            }
            let first = path.increment(j);
            let second = path.increment(j + 1);
            if second != first && second != -first {
                flexible.insert(y);
                if even {
                    flexible_even.insert(y);
                }
            }
        }
    }
    PathStatistics {
        first_visit,
        range,
        range_even,
        flexible,
        flexible_even,
        decidable_even,
    }
}

/// Outcome of an exhaustive count over all `(2d)^{2n}` step sequences.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactReturnCount {
    pub d: usize,
    pub two_n: usize,
    /// Sequences whose transposition product is the identity.
    pub identity_count: BigUint,
    /// `(2d)^{2n}`.
    pub total: BigUint,
}

impl ExactReturnCount {
    pub fn probability(&self) -> f64 {
        ratio_f64(&self.identity_count, &self.total)
    }
}

pub(crate) fn ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    match (num.to_f64(), den.to_f64()) {
        (Some(a), Some(b)) if b.is_finite() => a / b,
        _ => {
            let r = num_rational::BigRational::new(num.clone().into(), den.clone().into());
            r.to_f64().unwrap_or(f64::NAN)
        }
    }
}

/// Permutation of the sites of a box of radius `r`, stored densely, with
/// an incrementally maintained count of moved sites.
struct GridTracker {
    d: usize,
    r: i32,
    strides: [usize; 4],
    perm: Vec<u32>,
    moved: usize,
    pos: usize,
    coords: [i32; 4],
}

impl GridTracker {
    fn new(d: usize, r: usize) -> Self {
        let side = 2 * r + 1;
        let mut strides = [0; 4];
        let mut s = 1;
        for stride in strides.iter_mut().take(d) {
            *stride = s;
            s *= side;
        }
        let r = r as i32;
        let pos = (0..d).map(|i| r as usize * strides[i]).sum();
        GridTracker {
            d,
            r,
            strides,
            perm: (0..s as u32).collect(),
            moved: 0,
            pos,
            coords: [0; 4],
        }
    }

    fn l1(&self) -> usize {
        self.coords[..self.d]
            .iter()
            .map(|c| c.unsigned_abs() as usize)
            .sum()
    }

    /// Move the walker by `dir` and right-multiply by the traversed transposition.
    /// Returns false (and does nothing) if the step would leave the grid.
    #[inline]
    fn step(&mut self, dir: usize) -> bool {
        let axis = dir / 2;
        let up = dir.is_multiple_of(2);
        let c = self.coords[axis] + if up { 1 } else { -1 };
        if c.abs() > self.r {
            return false;
        }
        self.coords[axis] = c;
        let next = if up {
            self.pos + self.strides[axis]
        } else {
            self.pos - self.strides[axis]
        };
        self.swap(self.pos, next);
        self.pos = next;
        true
    }

    #[inline]
    fn unstep(&mut self, dir: usize) {
        let back = dir ^ 1;
        let ok = self.step(back);
        debug_assert!(ok);
    }

    #[inline]
    fn swap(&mut self, a: usize, b: usize) {
        let before = (self.perm[a] != a as u32) as usize + (self.perm[b] != b as u32) as usize;
        self.perm.swap(a, b);
        let after = (self.perm[a] != a as u32) as usize + (self.perm[b] != b as u32) as usize;
        self.moved = self.moved + after - before;
    }
}

fn dfs_count(t: &mut GridTracker, remaining: usize) -> u64 {
    if remaining == 0 {
        return (t.moved == 0) as u64;
    }
    // Identity forces a return to the origin, and each step restores at most two sites.
    if t.l1() > remaining || t.moved > 2 * remaining {
        return 0;
    }
    let mut count = 0;
    for dir in 0..2 * t.d {
        if t.step(dir) {
            count += dfs_count(t, remaining - 1);
            t.unstep(dir);
        }
    }
    count
}

/// Counts step sequences of length `two_n` in `Z^d` whose product is the identity.
pub fn exact_return_count(
    d: usize,
    two_n: usize,
    budget: u64,
    workers: usize,
) -> Result<ExactReturnCount> {
    check_dim(d)?;
    if !two_n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "walk length {two_n} must be even"
        )));
    }
    let total = sequence_count(d, two_n);
    if total > BigUint::from(budget) {
        return Err(Error::budget("exhaustive enumeration", total, budget));
    }
    let radius = two_n / 2;

    // Split the tree at a fixed prefix depth; each prefix is an independent job.
    let branching = 2 * d;
    let mut depth = 0;
    let mut jobs = 1usize;
    while depth < two_n && jobs < 256 {
        depth += 1;
        jobs *= branching;
    }
    let prefixes: Vec<Vec<usize>> = (0..jobs)
        .map(|mut code| {
            let mut dirs = vec![0; depth];
            for slot in dirs.iter_mut().rev() {
                *slot = code % branching;
                code /= branching;
            }
            dirs
        })
        .collect();

    let count_prefix = |dirs: &Vec<usize>| -> u64 {
        let mut t = GridTracker::new(d, radius.max(1));
        for (i, &dir) in dirs.iter().enumerate() {
            if !t.step(dir) {
                return 0;
            }
            let remaining = two_n - i - 1;
            if t.l1() > remaining {
                return 0;
            }
        }
        dfs_count(&mut t, two_n - depth)
    };

    let identity: u64 = with_pool(workers, || prefixes.par_iter().map(count_prefix).sum())?;
    Ok(ExactReturnCount {
        d,
        two_n,
        identity_count: BigUint::from(identity),
        total,
    })
}

pub(crate) fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Wilson score interval for `hits` successes out of `samples` trials.
pub fn wilson_interval(hits: u64, samples: u64, z: f64) -> (f64, f64) {
    if samples == 0 {
        return (0.0, 1.0);
    }
    let n = samples as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let rad = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = ((center - rad) / denom).max(0.0);
    let hi = ((center + rad) / denom).min(1.0);
    // Rounding can push an endpoint past p at the extremes.
    (lo.min(p), hi.max(p))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub d: usize,
    pub two_n: usize,
    pub samples: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

impl MonteCarloEstimate {
    fn new(d: usize, two_n: usize, samples: u64, hits: u64, seed: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(hits, samples, Z_95);
        MonteCarloEstimate {
            d,
            two_n,
            samples,
            hits,
            p_hat: hits as f64 / samples as f64,
            ci_low,
            ci_high,
            seed,
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

/// Permutation of the sites visited by one walk, labelled on first sight.
struct VisitTracker {
    labels: HashMap<Site, u32>,
    perm: Vec<u32>,
    moved: usize,
}

impl VisitTracker {
    fn new() -> Self {
        VisitTracker {
            labels: HashMap::new(),
            perm: Vec::new(),
            moved: 0,
        }
    }

    fn reset(&mut self) {
        self.labels.clear();
        self.perm.clear();
        self.moved = 0;
    }

    fn label(&mut self, x: Site) -> usize {
        let next = self.perm.len() as u32;
        let l = *self.labels.entry(x).or_insert(next);
        if l == next {
            self.perm.push(next);
        }
        l as usize
    }

    fn swap(&mut self, a: usize, b: usize) {
        let before = (self.perm[a] != a as u32) as usize + (self.perm[b] != b as u32) as usize;
        self.perm.swap(a, b);
        let after = (self.perm[a] != a as u32) as usize + (self.perm[b] != b as u32) as usize;
        self.moved = self.moved + after - before;
    }

    /// Runs the walk given by `dirs` and reports whether its product is the identity.
    fn is_identity_walk(&mut self, d: usize, dirs: &[u8]) -> bool {
        self.reset();
        let mut x = Site::origin(d);
        let mut lx = self.label(x);
        for &dir in dirs {
            let y = x.step(dir as usize);
            let ly = self.label(y);
            self.swap(lx, ly);
            x = y;
            lx = ly;
        }
        self.moved == 0
    }
}

fn block_ranges(samples: u64) -> Vec<(u64, u64)> {
    let blocks = samples.div_ceil(SAMPLES_PER_BLOCK);
    (0..blocks)
        .map(|b| {
            let start = b * SAMPLES_PER_BLOCK;
            (b, (samples - start).min(SAMPLES_PER_BLOCK))
        })
        .collect()
}

/// Monte Carlo estimate of `p_{2n}(Z^d)`.
///
/// Samples are split into fixed blocks of [`SAMPLES_PER_BLOCK`], block `b`
/// drawing from stream `b` of the master seed, so the estimate does not depend
/// on `workers`.
pub fn mc_return_probability(
    d: usize,
    two_n: usize,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<MonteCarloEstimate> {
    check_dim(d)?;
    if !two_n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "walk length {two_n} must be even"
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let blocks = block_ranges(samples);
    let hits: u64 = with_pool(workers, || {
        blocks
            .par_iter()
            .map(|&(block, len)| {
                let mut rng = walk_rng(seed, block);
                let mut tracker = VisitTracker::new();
                let mut dirs = vec![0u8; two_n];
                let mut hits = 0;
                for _ in 0..len {
                    for dir in dirs.iter_mut() {
                        *dir = rng.random_range(0..2 * d) as u8;
                    }
                    if tracker.is_identity_walk(d, &dirs) {
                        hits += 1;
                    }
                }
                hits
            })
            .sum()
    })?;
    Ok(MonteCarloEstimate::new(d, two_n, samples, hits, seed))
}

/// Aggregate flexibility statistics over sampled walks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlexSummary {
    pub d: usize,
    pub n_steps: usize,
    pub samples: u64,
    pub seed: u64,
    /// Mean of `|R_n^even ∩ F^even|`.
    pub mean_flexible_even: f64,
    /// Minimum, quartiles and maximum of `|R_n^even ∩ F^even|`.
    pub quantiles: [usize; 5],
    /// Pooled fraction of decidable first-visited even sites that are flexible.
    pub flexible_fraction: f64,
    /// Binomial standard error of the pooled fraction.
    pub fraction_stderr: f64,
    pub decidable_total: u64,
    pub flexible_total: u64,
}

pub fn flex_statistics(
    d: usize,
    n_steps: usize,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<FlexSummary> {
    check_dim(d)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let blocks = block_ranges(samples);
    let per_block: Vec<Vec<(usize, usize)>> = with_pool(workers, || {
        blocks
            .par_iter()
            .map(|&(block, len)| {
                let mut rng = walk_rng(seed, block);
                (0..len)
                    .map(|_| {
                        let path = sample_with(&mut rng, d, n_steps);
                        let stats = path_statistics(&path);
                        (stats.flexible_even_before(n_steps), stats.decidable_even)
                    })
                    .collect()
            })
            .collect()
    })?;
    let mut counts: Vec<usize> = Vec::with_capacity(samples as usize);
    let mut decidable_total = 0u64;
    for (flex, decidable) in per_block.into_iter().flatten() {
        counts.push(flex);
        decidable_total += decidable as u64;
    }
    let flexible_total: u64 = counts.iter().map(|&c| c as u64).sum();
    let mean = flexible_total as f64 / samples as f64;
    counts.sort_unstable();
    let q = |f: f64| counts[((counts.len() - 1) as f64 * f).round() as usize];
    let fraction = if decidable_total == 0 {
        0.0
    } else {
        flexible_total as f64 / decidable_total as f64
    };
    let stderr = if decidable_total == 0 {
        0.0
    } else {
        (fraction * (1.0 - fraction) / decidable_total as f64).sqrt()
    };
    Ok(FlexSummary {
        d,
        n_steps,
        samples,
        seed,
        mean_flexible_even: mean,
        quantiles: [q(0.0), q(0.25), q(0.5), q(0.75), q(1.0)],
        flexible_fraction: fraction,
        fraction_stderr: stderr,
        decidable_total,
        flexible_total,
    })
}

/// `C(n, k)` as a big integer.
pub fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Total number of step sequences, `(2d)^{steps}`.
pub fn sequence_count(d: usize, steps: usize) -> BigUint {
    BigUint::from(2 * d as u64).pow(steps as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o2() -> Site {
        Site::origin(2)
    }

    fn e(i: usize) -> Site {
        Site::unit(2, i)
    }

    /// Closed walks of length `steps` in `Z^d`, by dynamic programming over positions.
    fn closed_walks(d: usize, steps: usize) -> u64 {
        let mut dist: HashMap<Site, u64> = HashMap::from([(Site::origin(d), 1)]);
        for _ in 0..steps {
            let mut next = HashMap::new();
            for (x, w) in &dist {
                for y in x.neighbors() {
                    *next.entry(y).or_insert(0) += w;
                }
            }
            dist = next;
        }
        dist.get(&Site::origin(d)).copied().unwrap_or(0)
    }

    /// Brute force: every sequence, product via `SparsePermutation`.
    fn brute_identity_count(d: usize, steps: usize) -> u64 {
        let total = (2 * d).pow(steps as u32);
        (0..total)
            .filter(|&code| {
                let mut c = code;
                let dirs: Vec<usize> = (0..steps)
                    .map(|_| {
                        let dir = c % (2 * d);
                        c /= 2 * d;
                        dir
                    })
                    .collect();
                transposition_product(&WalkPath::from_steps(d, &dirs).unwrap()).is_identity()
            })
            .count() as u64
    }

    #[test]
    fn zero_step_walk() {
        let p = sample_walk(3, 0, 9).unwrap();
        assert_eq!(p.sites(), &[Site::origin(3)]);
        assert!(transposition_product(&p).is_identity());
    }

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(
            sample_walk(2, 50, 11).unwrap(),
            sample_walk(2, 50, 11).unwrap()
        );
        assert_ne!(
            sample_walk(2, 50, 11).unwrap(),
            sample_walk(2, 50, 12).unwrap()
        );
        assert!(sample_walk(5, 3, 1).is_err());
        assert!(sample_walk(0, 3, 1).is_err());
    }

    #[test]
    fn step_frequencies_are_uniform() {
        let n = 100_000;
        let path = sample_walk(2, n, 2024).unwrap();
        let mut freq = [0u64; 4];
        for j in 0..n {
            let inc = path.increment(j);
            let dir = (0..4).find(|&k| o2().step(k) == inc).unwrap();
            freq[dir] += 1;
        }
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for f in freq {
            assert!((f as f64 - n as f64 / 4.0).abs() < 3.0 * sigma, "{freq:?}");
        }
    }

    #[test]
    fn products_of_small_paths() {
        let back = WalkPath::from_sites(vec![o2(), e(0), o2()]).unwrap();
        assert!(transposition_product(&back).is_identity());

        let corner = WalkPath::from_sites(vec![o2(), e(0), e(0) + e(1)]).unwrap();
        let p = transposition_product(&corner);
        assert_eq!(p.apply(e(0) + e(1)), o2());
        assert_eq!(p.support_len(), 3);

        // (0 e1)(e1 e1+e2)(e1+e2 e2)(e2 0), evaluated site by site.
        let square = WalkPath::from_sites(vec![o2(), e(0), e(0) + e(1), e(1), o2()]).unwrap();
        let p = transposition_product(&square);
        assert!(!p.is_identity());
        assert_eq!(p.apply(o2()), o2());
        assert_ne!(p.apply(e(0)), e(0));
    }

    #[test]
    fn invalid_paths_rejected() {
        assert!(WalkPath::from_sites(vec![]).is_err());
        assert!(WalkPath::from_sites(vec![e(0)]).is_err());
        assert!(WalkPath::from_sites(vec![o2(), e(0) + e(1)]).is_err());
        assert!(WalkPath::from_steps(2, &[4]).is_err());
    }

    #[test]
    fn product_maps_end_to_start() {
        for seed in 0..10_000u64 {
            let path = sample_walk(1 + (seed % 4) as usize, (seed % 40) as usize, seed).unwrap();
            let p = transposition_product(&path);
            assert_eq!(p.apply(path.end()), path.site(0));
            if path.steps() % 2 == 1 {
                assert!(!p.is_identity());
            }
        }
    }

    #[test]
    fn flexibility_by_definition() {
        let turn = WalkPath::from_sites(vec![o2(), e(0), e(0) + e(1)]).unwrap();
        let s = path_statistics(&turn);
        assert!(s.is_flexible(&o2()));
        assert_eq!(s.flexible_even.len(), 1);

        let straight = WalkPath::from_sites(vec![o2(), e(0), e(0) + e(0)]).unwrap();
        assert!(!path_statistics(&straight).is_flexible(&o2()));

        let line = WalkPath::from_steps(2, &[0; 21]).unwrap();
        assert!(path_statistics(&line).flexible.is_empty());

        // Staircase right, up, right, up, ...: every site before the last two turns.
        let stairs = WalkPath::from_steps(2, &[0, 2, 0, 2, 0, 2, 0, 2]).unwrap();
        let s = path_statistics(&stairs);
        assert_eq!(s.flexible.len(), 7);
        assert_eq!(s.flexible_even.len(), 4);
    }

    #[test]
    fn statistics_are_consistent() {
        let path = sample_walk(2, 200, 5).unwrap();
        let s = path_statistics(&path);
        assert_eq!(s.first_visit[&Site::origin(2)], 0);
        for (j, y) in path.sites().iter().enumerate() {
            assert!(s.first_visit[y] <= j);
            assert_eq!(path.site(s.first_visit[y]), *y);
        }
        let times: Vec<usize> = s.range_even.iter().map(|y| s.first_visit[y]).collect();
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        assert!(s.flexible.iter().all(|y| s.first_visit.contains_key(y)));
        assert!(s
            .flexible_even
            .iter()
            .all(|y| y.is_even() && s.flexible.contains(y)));
        assert_eq!(s.range_before(1).count(), 1);
    }

    #[test]
    fn two_step_flexible_even_is_a_fair_coin() {
        // All 16 two-step sequences in d = 2.
        let mut flexible = 0;
        for a in 0..4 {
            for b in 0..4 {
                let s = path_statistics(&WalkPath::from_steps(2, &[a, b]).unwrap());
                assert!(s.flexible_even.len() <= 1);
                flexible += s.flexible_even.len();
            }
        }
        assert_eq!(flexible, 8);
    }

    #[test]
    fn exact_counts_small() {
        let c = exact_return_count(1, 4, DEFAULT_ENUMERATION_BUDGET, 1).unwrap();
        assert_eq!(c.identity_count, BigUint::from(6u32));
        let c = exact_return_count(2, 2, DEFAULT_ENUMERATION_BUDGET, 1).unwrap();
        assert_eq!(c.identity_count, BigUint::from(4u32));
        assert_eq!(c.total, BigUint::from(16u32));
        let c = exact_return_count(2, 4, DEFAULT_ENUMERATION_BUDGET, 2).unwrap();
        assert_eq!(c.identity_count, BigUint::from(28u32));
        assert_eq!(c.probability(), 7.0 / 64.0);
        assert!(28 <= closed_walks(2, 4));
        assert_eq!(closed_walks(2, 4), 36);
        let zero = exact_return_count(3, 0, DEFAULT_ENUMERATION_BUDGET, 1).unwrap();
        assert_eq!(zero.identity_count, BigUint::one());
    }

    #[test]
    fn exact_counts_match_brute_force() {
        for (d, steps) in [(1, 8), (2, 6), (3, 4), (4, 4)] {
            let fast = exact_return_count(d, steps, DEFAULT_ENUMERATION_BUDGET, 1).unwrap();
            assert_eq!(
                fast.identity_count,
                BigUint::from(brute_identity_count(d, steps)),
                "d={d} 2n={steps}"
            );
            assert!(fast.identity_count <= BigUint::from(closed_walks(d, steps)));
        }
    }

    #[test]
    fn one_dimensional_counts_are_central_binomials() {
        for two_n in (0..=14).step_by(2) {
            let c = exact_return_count(1, two_n, DEFAULT_ENUMERATION_BUDGET, 1).unwrap();
            assert_eq!(c.identity_count, binomial(two_n as u64, two_n as u64 / 2));
        }
    }

    #[test]
    fn budget_and_parity_refusals() {
        let err = exact_return_count(2, 16, 1 << 20, 1).unwrap_err();
        assert!(err.is_budget());
        assert!(exact_return_count(2, 3, DEFAULT_ENUMERATION_BUDGET, 1).is_err());
        assert!(mc_return_probability(2, 3, 10, 1, 1).is_err());
        assert!(mc_return_probability(2, 2, 0, 1, 1).is_err());
    }

    #[test]
    fn worker_count_does_not_change_counts() {
        let a = exact_return_count(2, 8, DEFAULT_ENUMERATION_BUDGET, 1).unwrap();
        let b = exact_return_count(2, 8, DEFAULT_ENUMERATION_BUDGET, 3).unwrap();
        assert_eq!(a, b);
        let a = mc_return_probability(2, 6, 10_000, 3, 1).unwrap();
        let b = mc_return_probability(2, 6, 10_000, 3, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mc_matches_exact_small() {
        let p2 = mc_return_probability(2, 2, 1_000_000, 77, 1).unwrap();
        let sigma = (0.25f64 * 0.75 / 1e6).sqrt();
        assert!((p2.p_hat - 0.25).abs() < 3.0 * sigma, "{p2:?}");
        let p4 = mc_return_probability(2, 4, 1_000_000, 78, 1).unwrap();
        let p: f64 = 7.0 / 64.0;
        let sigma = (p * (1.0 - p) / 1e6_f64).sqrt();
        assert!((p4.p_hat - p).abs() < 3.0 * sigma, "{p4:?}");
    }

    #[test]
    fn single_sample_extremes() {
        // Zero steps always returns.
        let est = mc_return_probability(2, 0, 1, 0, 1).unwrap();
        assert_eq!(est.p_hat, 1.0);
        assert!(est.ci_low <= est.p_hat && est.p_hat <= est.ci_high);
        let (lo, hi) = wilson_interval(0, 10, Z_95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 1.0);
    }

    #[test]
    fn flexible_fraction_matches_independent_steps() {
        for (d, expected) in [(2usize, 0.5f64), (3, 2.0 / 3.0)] {
            let s = flex_statistics(d, 200, 2_000, 31 + d as u64, 1).unwrap();
            assert!(
                (s.flexible_fraction - expected).abs() < 3.0 * s.fraction_stderr,
                "d={d}: {s:?}"
            );
        }
        let s = flex_statistics(2, 2, 20_000, 8, 1).unwrap();
        assert!(s.quantiles[4] <= 1);
        let sigma = (0.25f64 / 20_000.0).sqrt();
        assert!((s.mean_flexible_even - 0.5).abs() < 3.0 * sigma, "{s:?}");
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(14, 7), BigUint::from(3432u32));
        assert_eq!(sequence_count(2, 4), BigUint::from(256u32));
    }
}
