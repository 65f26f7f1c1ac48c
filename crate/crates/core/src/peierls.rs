//! Flip equivalence of walk heads and the uniqueness of identity-product
//! representatives within a class.
//!
//! Position `j` (odd) of a path is flippable when `x_{j-1}` is first visited at
//! time `j - 1` and the two following steps are not collinear. Flipping replaces
//! `x_j` by `x_{j-1} - x_j + x_{j+1}`, i.e. it swaps the order of steps `j` and
//! `j + 1`. Even positions never move, so neither do first visits of even sites
//! or the set of flippable positions.

use std::collections::{BTreeSet, HashSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::{check_dim, Site};
use crate::walk::{sample_walk, transposition_product, walk_rng, with_pool, WalkPath};

pub const DEFAULT_CLASS_BUDGET: usize = 1 << 20;

fn check_position(path: &WalkPath, j: usize) -> Result<()> {
    let hi = path.steps().saturating_sub(1);
    if j < 1 || j > hi {
        return Err(Error::IndexOutOfRange {
            index: j,
            lo: 1,
            hi,
        });
    }
    Ok(())
}

pub fn is_flippable(path: &WalkPath, j: usize) -> Result<bool> {
    check_position(path, j)?;
    Ok(flippable_unchecked(path, j))
}

fn flippable_unchecked(path: &WalkPath, j: usize) -> bool {
    if j.is_multiple_of(2) {
        return false;
    }
    let sites = path.sites();
    let anchor = sites[j - 1];
    if sites[..j - 1].contains(&anchor) {
        return false;
    }
    let first = path.increment(j - 1);
    let second = path.increment(j);
    second != first && second != -first
}

/// All flippable positions of `path`, ascending.
pub fn flippable_positions(path: &WalkPath) -> Vec<usize> {
    let sites = path.sites();
    let mut seen: HashSet<Site> = HashSet::with_capacity(sites.len());
    let mut out = Vec::new();
    for j in 1..path.steps() {
        // first visit of x_{j-1} is decided by sites[..j-1]
        let fresh = seen.insert(sites[j - 1]);
        if j % 2 == 1 && fresh {
            let first = path.increment(j - 1);
            let second = path.increment(j);
            if second != first && second != -first {
                out.push(j);
            }
        }
    }
    out
}

pub fn flip(path: &WalkPath, j: usize) -> Result<WalkPath> {
    if !is_flippable(path, j)? {
        return Err(Error::NotFlippable { index: j });
    }
    Ok(flip_unchecked(path, j))
}

fn flip_unchecked(path: &WalkPath, j: usize) -> WalkPath {
    let mut sites = path.sites().to_vec();
    sites[j] = sites[j - 1] - sites[j] + sites[j + 1];
    WalkPath::from_sites_unchecked(sites)
}

/// A flip-equivalence class of walk heads.
#[derive(Clone, Debug)]
pub struct PathClass {
    /// Members in lexicographic order; the first is the canonical key.
    pub members: BTreeSet<WalkPath>,
    pub base: WalkPath,
    pub flip_positions: Vec<usize>,
}

impl PathClass {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn canonical(&self) -> &WalkPath {
        self.members.first().expect("class contains its base")
    }

    pub fn contains(&self, path: &WalkPath) -> bool {
        self.members.contains(path)
    }
}

/// Breadth-first closure of the `two_n`-step head of `path` under flips,
/// re-deciding flippability in every member.
pub fn equivalence_class(path: &WalkPath, two_n: usize, budget: usize) -> Result<PathClass> {
    if path.steps() < two_n {
        return Err(Error::InvalidArgument(format!(
            "path has {} steps, head of {two_n} requested",
            path.steps()
        )));
    }
    let base = path.head(two_n);
    let mut members = HashSet::new();
    let mut queue = VecDeque::new();
    members.insert(base.clone());
    queue.push_back(base.clone());
    while let Some(p) = queue.pop_front() {
        for j in flippable_positions(&p) {
            let q = flip_unchecked(&p, j);
            if members.insert(q.clone()) {
                if members.len() > budget {
                    return Err(Error::budget(
                        "flip class size",
                        members.len() as u64,
                        budget as u64,
                    ));
                }
                queue.push_back(q);
            }
        }
    }
    Ok(PathClass {
        flip_positions: flippable_positions(&base),
        members: members.into_iter().collect(),
        base,
    })
}

/// Members of the class whose transposition product is the identity.
pub fn verify_unique_identity(class: &PathClass) -> usize {
    class
        .members
        .iter()
        .filter(|p| transposition_product(p).is_identity())
        .count()
}

/// One row of the class report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRecord {
    pub path_id: u64,
    pub two_n: usize,
    pub class_size: usize,
    pub flexible_even_count: usize,
    pub identity_members: usize,
}

/// Classes of `samples` random `two_n`-step walks; path `i` uses stream `i` of `seed`.
pub fn sample_classes(
    d: usize,
    two_n: usize,
    samples: u64,
    seed: u64,
    budget: usize,
    workers: usize,
) -> Result<Vec<ClassRecord>> {
    check_dim(d)?;
    with_pool(workers, || {
        (0..samples)
            .into_par_iter()
            .map(|id| {
                let path = sample_path(d, two_n, seed, id);
                let class = equivalence_class(&path, two_n, budget)?;
                Ok(ClassRecord {
                    path_id: id,
                    two_n,
                    class_size: class.len(),
                    flexible_even_count: class.flip_positions.len(),
                    identity_members: verify_unique_identity(&class),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?
}

fn sample_path(d: usize, steps: usize, seed: u64, id: u64) -> WalkPath {
    use rand::Rng;
    let mut rng = walk_rng(seed, id);
    let dirs: Vec<usize> = (0..steps).map(|_| rng.random_range(0..2 * d)).collect();
    WalkPath::from_steps(d, &dirs).expect("valid directions")
}

/// Flip classes over every step sequence of a given length.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub d: usize,
    pub two_n: usize,
    pub sequences: u64,
    pub classes: u64,
    pub identity_paths: u64,
    pub classes_with_identity: u64,
    pub max_identity_per_class: u64,
}

/// Partitions all `(2d)^{two_n}` sequences into connected components of the
/// flip graph and counts identity products per component.
pub fn partition_all(d: usize, two_n: usize, budget: u64) -> Result<PartitionReport> {
    check_dim(d)?;
    let branching = 2 * d as u64;
    let total = crate::walk::sequence_count(d, two_n);
    if total > budget.into() {
        return Err(Error::budget("flip partition", total, budget));
    }
    let total = branching.pow(two_n as u32);
    let decode = |mut code: u64| -> Vec<usize> {
        let mut dirs = vec![0; two_n];
        for slot in dirs.iter_mut().rev() {
            *slot = (code % branching) as usize;
            code /= branching;
        }
        dirs
    };
    let encode = |dirs: &[usize]| dirs.iter().fold(0u64, |acc, &s| acc * branching + s as u64);

    let mut parent: Vec<u64> = (0..total).collect();
    fn find(parent: &mut [u64], mut x: u64) -> u64 {
        while parent[x as usize] != x {
            let next = parent[x as usize];
            parent[x as usize] = parent[next as usize];
            x = next;
        }
        x
    }
    let mut identity = vec![false; total as usize];
    for code in 0..total {
        let mut dirs = decode(code);
        let path = WalkPath::from_steps(d, &dirs)?;
        identity[code as usize] = transposition_product(&path).is_identity();
        for j in flippable_positions(&path) {
            // flipping x_j swaps steps j-1 and j (0-based)
            dirs.swap(j - 1, j);
            let other = encode(&dirs);
            dirs.swap(j - 1, j);
            let (a, b) = (find(&mut parent, code), find(&mut parent, other));
            if a != b {
                parent[a.max(b) as usize] = a.min(b);
            }
        }
    }
    let mut per_root = std::collections::HashMap::<u64, u64>::new();
    let mut classes = 0;
    for code in 0..total {
        let root = find(&mut parent, code);
        if root == code {
            classes += 1;
        }
        if identity[code as usize] {
            *per_root.entry(root).or_insert(0) += 1;
        }
    }
    Ok(PartitionReport {
        d,
        two_n,
        sequences: total,
        classes,
        identity_paths: identity.iter().filter(|&&b| b).count() as u64,
        classes_with_identity: per_root.len() as u64,
        max_identity_per_class: per_root.values().copied().max().unwrap_or(0),
    })
}

/// Convenience for tests and reports: a sampled walk with the given seed.
pub fn random_head(d: usize, two_n: usize, seed: u64) -> Result<WalkPath> {
    sample_walk(d, two_n, seed)
}
