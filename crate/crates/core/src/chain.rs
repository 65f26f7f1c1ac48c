//! The fifteen puzzle on the box `B_L = [-L, L]^d`, killed when the marked
//! site leaves the box.
//!
//! A state is `(x, σ)`: the walker position `x` and the accumulated
//! permutation `σ` of the box sites. A move to a neighbour `y` produces
//! `(y, σ ∘ (y x))`. States are encoded densely as
//! `site_index · m! + lehmer_rank(σ)` with `m = |B_L|`.

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirichlet::box_sites;
use crate::error::{Error, Result};
use crate::lehmer::{LehmerCode, MAX_LABELS};
use crate::perm::{check_dim, Site};
use crate::scalar::Scalar;
use crate::walk::with_pool;

/// Default cap on the number of encoded states, `m · m!`.
pub const DEFAULT_STATE_BUDGET: u64 = 1 << 23;

/// Dense encoding of puzzle states on a box.
#[derive(Clone, Debug)]
pub struct BoxIndexer {
    d: usize,
    l: usize,
    sites: Vec<Site>,
    origin: usize,
    code: LehmerCode,
    /// In-box neighbours of each site, by index.
    neighbors: Vec<Vec<u8>>,
    perms: u64,
}

impl BoxIndexer {
    pub fn new(d: usize, l: usize, budget: u64) -> Result<Self> {
        check_dim(d)?;
        if l == 0 {
            return Err(Error::InvalidArgument(
                "box half-side must be at least 1".into(),
            ));
        }
        let m = (2 * l + 1).pow(d as u32);
        let states = if m <= MAX_LABELS {
            BigUint::from(m as u64) * BigUint::from(crate::lehmer::factorial(m))
        } else {
            // m! alone already overflows u64
            (1..=m as u64).fold(BigUint::from(m as u64), |acc, k| acc * k)
        };
        if m > MAX_LABELS || states > BigUint::from(budget) {
            return Err(Error::budget("decorated chain state space", states, budget));
        }
        let sites = box_sites(d, l);
        let origin = sites
            .iter()
            .position(|s| *s == Site::origin(d))
            .expect("box contains origin");
        let neighbors = sites
            .iter()
            .map(|s| {
                s.neighbors()
                    .filter_map(|y| sites.iter().position(|t| *t == y).map(|i| i as u8))
                    .collect()
            })
            .collect();
        let code = LehmerCode::new(m)?;
        let perms = code.count();
        Ok(BoxIndexer {
            d,
            l,
            sites,
            origin,
            code,
            neighbors,
            perms,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn half_side(&self) -> usize {
        self.l
    }

    /// `m = |B_L|`.
    pub fn box_size(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    /// `m · m!`.
    pub fn state_count(&self) -> u64 {
        self.perms * self.sites.len() as u64
    }

    pub fn perm_count(&self) -> u64 {
        self.perms
    }

    pub fn identity(&self) -> Vec<u8> {
        self.code.identity()
    }

    pub fn encode(&self, site: usize, perm: &[u8]) -> u64 {
        site as u64 * self.perms + self.code.rank(perm)
    }

    pub fn decode(&self, index: u64) -> (usize, Vec<u8>) {
        let mut perm = vec![0; self.box_size()];
        self.code.unrank(index % self.perms, &mut perm);
        ((index / self.perms) as usize, perm)
    }
}

/// Probability mass over encoded states.
///
/// Stored densely over the indexer's range; zero entries are skipped by the
/// iterators. Total mass is at most one, the deficit being killed mass.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseDistribution<S: Scalar> {
    weights: Vec<S>,
    perms: u64,
}

impl<S: Scalar> SparseDistribution<S> {
    pub fn zero(indexer: &BoxIndexer) -> Self {
        SparseDistribution {
            weights: vec![S::zero(); indexer.state_count() as usize],
            perms: indexer.perm_count(),
        }
    }

    /// Unit mass at `(site, perm)`.
    pub fn point(indexer: &BoxIndexer, site: usize, perm: &[u8]) -> Self {
        let mut dist = Self::zero(indexer);
        dist.weights[indexer.encode(site, perm) as usize] = S::one();
        dist
    }

    /// Unit mass at the origin with the identity permutation.
    pub fn start(indexer: &BoxIndexer) -> Self {
        Self::point(indexer, indexer.origin(), &indexer.identity())
    }

    pub fn get(&self, index: u64) -> &S {
        &self.weights[index as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &S)> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(i, w)| (i as u64, w))
    }

    pub fn nnz(&self) -> usize {
        self.iter().count()
    }

    pub fn total(&self) -> S {
        let mut acc = S::zero();
        for w in &self.weights {
            acc += w;
        }
        acc
    }

    /// Mass with the walker at `site`, summed over permutations.
    pub fn site_mass(&self, site: usize) -> S {
        let start = site * self.perms as usize;
        let mut acc = S::zero();
        for w in &self.weights[start..start + self.perms as usize] {
            acc += w;
        }
        acc
    }

    fn active_sites(&self) -> Vec<bool> {
        self.weights
            .chunks(self.perms as usize)
            .map(|block| block.iter().any(|w| !w.is_zero()))
            .collect()
    }
}

/// Applies `steps` transitions of the killed puzzle walk.
///
/// Each target state gathers from its in-box predecessors
/// `(x, τ ∘ (y x))`, so the result does not depend on `workers`.
pub fn evolve<S: Scalar>(
    dist: &SparseDistribution<S>,
    steps: usize,
    indexer: &BoxIndexer,
    workers: usize,
) -> Result<SparseDistribution<S>> {
    let mut current = dist.clone();
    with_pool(workers, || {
        for _ in 0..steps {
            current = step_once(&current, indexer);
        }
    })?;
    Ok(current)
}

fn step_once<S: Scalar>(
    dist: &SparseDistribution<S>,
    indexer: &BoxIndexer,
) -> SparseDistribution<S> {
    let perms = indexer.perm_count() as usize;
    let m = indexer.box_size();
    let weight = S::ratio(1, 2 * indexer.dim() as u64);
    let active = dist.active_sites();
    let mut next = vec![S::zero(); dist.weights.len()];
    next.par_chunks_mut(perms)
        .enumerate()
        .for_each(|(y, block)| {
            let preds = &indexer.neighbors[y];
            if !preds.iter().any(|&x| active[x as usize]) {
                return;
            }
            let mut tau = vec![0u8; m];
            // blocks are large; split further for load balance
            block.par_chunks_mut(4096).enumerate().for_each_init(
                || vec![0u8; m],
                |tau, (chunk, out)| {
                    let base = chunk * 4096;
                    for (offset, slot) in out.iter_mut().enumerate() {
                        indexer.code.unrank((base + offset) as u64, tau);
                        let mut acc = S::zero();
                        let mut any = false;
                        for &x in preds {
                            let x = x as usize;
                            if !active[x] {
                                continue;
                            }
                            tau.swap(x, y);
                            let src = x * perms + indexer.code.rank(tau) as usize;
                            tau.swap(x, y);
                            let w = &dist.weights[src];
                            if !w.is_zero() {
                                acc += w;
                                any = true;
                            }
                        }
                        if any {
                            *slot = acc * weight.clone();
                        }
                    }
                },
            );
            tau.clear();
        });
    SparseDistribution {
        weights: next,
        perms: dist.perms,
    }
}

/// Per-time return quantities from one sweep of the chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSweep<S: Scalar> {
    pub d: usize,
    pub l: usize,
    /// `𝔓_t((0, 1) → (0, 1))`, `t = 0..=steps`.
    pub chain_return: Vec<S>,
    /// `P{X stays in B_L up to t, X_t = 0}`.
    pub stay_return: Vec<S>,
    /// Surviving mass after `t` steps.
    pub survival: Vec<S>,
}

pub fn chain_sweep<S: Scalar>(
    d: usize,
    l: usize,
    steps: usize,
    budget: u64,
    workers: usize,
) -> Result<ChainSweep<S>> {
    let indexer = BoxIndexer::new(d, l, budget)?;
    let start_index = indexer.encode(indexer.origin(), &indexer.identity());
    let mut dist = SparseDistribution::<S>::start(&indexer);
    let mut chain_return = vec![dist.get(start_index).clone()];
    let mut stay_return = vec![dist.site_mass(indexer.origin())];
    let mut survival = vec![dist.total()];
    with_pool(workers, || {
        for _ in 0..steps {
            dist = step_once(&dist, &indexer);
            chain_return.push(dist.get(start_index).clone());
            stay_return.push(dist.site_mass(indexer.origin()));
            survival.push(dist.total());
        }
    })?;
    Ok(ChainSweep {
        d,
        l,
        chain_return,
        stay_return,
        survival,
    })
}

/// `𝔓_{2n}((0,1) → (0,1))` together with the stay-and-return probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReturn<S> {
    pub d: usize,
    pub l: usize,
    pub two_n: usize,
    pub chain_return: S,
    pub stay_return: S,
}

pub fn chain_return<S: Scalar>(
    d: usize,
    l: usize,
    two_n: usize,
    budget: u64,
    workers: usize,
) -> Result<ChainReturn<S>> {
    let mut sweep = chain_sweep::<S>(d, l, two_n, budget, workers)?;
    Ok(ChainReturn {
        d,
        l,
        two_n,
        chain_return: sweep.chain_return.pop().expect("nonempty"),
        stay_return: sweep.stay_return.pop().expect("nonempty"),
    })
}

/// Lower bound on `p_{2n}(Z^d)`: a walk whose puzzle returns inside the box
/// also returns on the infinite board.
pub fn lower_bound_p2n<S: Scalar>(
    d: usize,
    l: usize,
    two_n: usize,
    budget: u64,
    workers: usize,
) -> Result<S> {
    Ok(chain_return::<S>(d, l, two_n, budget, workers)?.chain_return)
}

/// One row of the decorated-chain report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub d: usize,
    pub l: usize,
    pub two_n: usize,
    pub chain_return: f64,
    pub stay_return: f64,
    pub lower_bound: f64,
}

impl<S: Scalar> ChainSweep<S> {
    /// Rows for the even times `2, 4, ..., ≤ steps`.
    pub fn records(&self) -> Vec<ChainRecord> {
        (0..self.chain_return.len())
            .step_by(2)
            .map(|t| ChainRecord {
                d: self.d,
                l: self.l,
                two_n: t,
                chain_return: self.chain_return[t].to_f64(),
                stay_return: self.stay_return[t].to_f64(),
                lower_bound: self.chain_return[t].to_f64(),
            })
            .collect()
    }
}
