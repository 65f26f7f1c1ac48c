//! The killed walk generator `1_R P 1_R` on finite subsets of `Z^d`.

use std::collections::{BTreeSet, HashMap};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::{check_dim, Site};
use crate::scalar::{Real, Scalar};

/// Subsets up to this size use a dense symmetric eigensolver.
pub const DENSE_LIMIT: usize = 2000;

pub const POWER_TOLERANCE: f64 = 1e-12;

/// A nonempty finite set of sites with a fixed lexicographic indexing.
#[derive(Clone, Debug)]
pub struct FiniteSubset {
    sites: Vec<Site>,
    index: HashMap<Site, usize>,
}

impl FiniteSubset {
    pub fn new(sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        let set: BTreeSet<Site> = sites.into_iter().collect();
        let sites: Vec<Site> = set.into_iter().collect();
        let first = sites
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty subset".into()))?;
        let d = first.dim();
        check_dim(d)?;
        if sites.iter().any(|s| s.dim() != d) {
            return Err(Error::InvalidArgument("mixed dimensions in subset".into()));
        }
        let index = sites.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Ok(FiniteSubset { sites, index })
    }

    /// The box `[-L, L]^d`.
    pub fn cube(d: usize, l: usize) -> Result<Self> {
        check_dim(d)?;
        Self::new(box_sites(d, l))
    }

    pub fn dim(&self) -> usize {
        self.sites[0].dim()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn index_of(&self, x: &Site) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn contains(&self, x: &Site) -> bool {
        self.index.contains_key(x)
    }

    /// Largest Euclidean distance between two sites.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.sites.iter().enumerate() {
            for b in &self.sites[i + 1..] {
                let diff = *a - *b;
                let sq: f64 = diff.coords().iter().map(|c| (*c as f64).powi(2)).sum();
                best = best.max(sq.sqrt());
            }
        }
        best
    }

    /// Smallest `L` such that a translate of `[-L, L]^d` contains the set.
    pub fn enclosing_half_side(&self) -> usize {
        (0..self.dim())
            .map(|axis| {
                let lo = self.sites.iter().map(|s| s.coord(axis)).min().unwrap();
                let hi = self.sites.iter().map(|s| s.coord(axis)).max().unwrap();
                ((hi - lo) as usize).div_ceil(2)
            })
            .max()
            .unwrap_or(0)
    }

    /// Adjacency lists in index space.
    pub fn neighbor_lists(&self) -> Vec<Vec<usize>> {
        self.sites
            .iter()
            .map(|s| s.neighbors().filter_map(|y| self.index_of(&y)).collect())
            .collect()
    }
}

/// Sites of `[-L, L]^d` in lexicographic order.
pub fn box_sites(d: usize, l: usize) -> Vec<Site> {
    let l = l as i32;
    let side = (2 * l + 1) as usize;
    let count = side.pow(d as u32);
    (0..count)
        .map(|mut code| {
            let mut c = [0i32; 4];
            for slot in c[..d].iter_mut().rev() {
                *slot = (code % side) as i32 - l;
                code /= side;
            }
            Site::new(&c[..d]).expect("dimension checked")
        })
        .collect()
}

/// `1_R P 1_R` as a dense symmetric matrix over the subset's indexing.
#[derive(Clone, Debug)]
pub struct DirichletOperator<T: Real> {
    pub subset: FiniteSubset,
    pub matrix: DMatrix<T>,
}

impl<T: Real> DirichletOperator<T> {
    pub fn new(subset: FiniteSubset) -> Self {
        let n = subset.len();
        let w = <T as Scalar>::ratio(1, 2 * subset.dim() as u64);
        let mut matrix = DMatrix::zeros(n, n);
        for (i, nbrs) in subset.neighbor_lists().into_iter().enumerate() {
            for j in nbrs {
                matrix[(i, j)] = w;
            }
        }
        DirichletOperator { subset, matrix }
    }

    pub fn eigen(&self) -> SymmetricEigen<T, nalgebra::Dyn> {
        SymmetricEigen::new(self.matrix.clone())
    }
}

/// `‖1_R P 1_R‖`, the largest absolute eigenvalue.
pub fn operator_norm<T: Real>(subset: &FiniteSubset) -> T {
    if subset.len() <= DENSE_LIMIT {
        let op = DirichletOperator::<T>::new(subset.clone());
        op.eigen().eigenvalues.iter().fold(T::zero(), |acc, v| {
            num_traits::Float::max(acc, num_traits::Float::abs(*v))
        })
    } else {
        power_norm(subset)
    }
}

/// Norm by power iteration on the (nonnegative, symmetric) operator.
///
/// The Perron eigenvalue dominates; the spectrum is symmetric on bipartite
/// sets, so iterate `A^2` and take a square root.
fn power_norm<T: Real>(subset: &FiniteSubset) -> T {
    let nbrs = subset.neighbor_lists();
    let w = <T as Scalar>::ratio(1, 2 * subset.dim() as u64);
    let apply = |v: &[T]| -> Vec<T> {
        nbrs.iter()
            .map(|ns| ns.iter().fold(T::zero(), |acc, &j| acc + v[j]) * w)
            .collect()
    };
    let n = subset.len();
    let mut v = vec![T::one() / num_traits::Float::sqrt(T::from_f64_lossy(n as f64)); n];
    let tol = T::from_f64_lossy(POWER_TOLERANCE);
    let mut estimate = T::zero();
    for _ in 0..1_000_000 {
        let av = apply(&v);
        let a2v = apply(&av);
        let norm = num_traits::Float::sqrt(a2v.iter().fold(T::zero(), |acc, x| acc + *x * *x));
        if norm == T::zero() {
            return T::zero();
        }
        let next = num_traits::Float::sqrt(norm);
        v = a2v.into_iter().map(|x| x / norm).collect();
        if num_traits::Float::abs(next - estimate) < tol {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// The product-cosine eigenfunction of `1_{B_L} P 1_{B_L}`.
#[derive(Clone, Debug)]
pub struct CosineEigenpair<T: Real> {
    pub d: usize,
    pub l: usize,
    /// `cos(π / (2(L+1)))`.
    pub eigenvalue: T,
    /// Normalized, indexed like [`FiniteSubset::cube`].
    pub eigenvector: Vec<T>,
    /// `|u(0)| = c_L`.
    pub value_at_origin: T,
    /// `‖(1P1)u − λu‖`.
    pub residual: T,
    /// `|u(0)| · L^{d/2}`.
    pub origin_constant: T,
}

pub fn cosine_eigenpair<T: Real>(d: usize, l: usize) -> Result<CosineEigenpair<T>> {
    check_dim(d)?;
    if l == 0 {
        return Err(Error::InvalidArgument(
            "box half-side must be at least 1".into(),
        ));
    }
    let subset = FiniteSubset::cube(d, l)?;
    let angle = T::PI() / T::from_f64_lossy(2.0 * (l as f64 + 1.0));
    let raw: Vec<T> = subset
        .sites()
        .iter()
        .map(|s| {
            s.coords().iter().fold(T::one(), |acc, c| {
                acc * num_traits::Float::cos(angle * T::from_f64_lossy(*c as f64))
            })
        })
        .collect();
    let norm = num_traits::Float::sqrt(raw.iter().fold(T::zero(), |acc, x| acc + *x * *x));
    let u: Vec<T> = raw.into_iter().map(|x| x / norm).collect();
    let eigenvalue = num_traits::Float::cos(angle);

    let op = DirichletOperator::<T>::new(subset.clone());
    let uvec = nalgebra::DVector::from_vec(u.clone());
    let residual = (&op.matrix * &uvec - &uvec * eigenvalue).norm();

    let origin = subset
        .index_of(&Site::origin(d))
        .expect("box contains origin");
    let value_at_origin = num_traits::Float::abs(u[origin]);
    let origin_constant = value_at_origin
        * num_traits::Float::powf(
            T::from_f64_lossy(l as f64),
            T::from_f64_lossy(d as f64 / 2.0),
        );
    Ok(CosineEigenpair {
        d,
        l,
        eigenvalue,
        eigenvector: u,
        value_at_origin,
        residual,
        origin_constant,
    })
}

/// `(1_{B_L} P 1_{B_L})^t(0, 0)` for `t = 0..=n`: the probability of staying in
/// the box up to time `t` and sitting at the origin at time `t`.
pub fn box_return_probabilities<S: Scalar>(d: usize, l: usize, n: usize) -> Result<Vec<S>> {
    check_dim(d)?;
    let subset = FiniteSubset::cube(d, l)?;
    let nbrs = subset.neighbor_lists();
    let w = S::ratio(1, 2 * d as u64);
    let origin = subset
        .index_of(&Site::origin(d))
        .expect("box contains origin");
    let mut v = vec![S::zero(); subset.len()];
    v[origin] = S::one();
    let mut out = Vec::with_capacity(n + 1);
    out.push(v[origin].clone());
    for _ in 0..n {
        v = nbrs
            .iter()
            .map(|ns| {
                let mut acc = S::zero();
                for &j in ns {
                    acc += &v[j];
                }
                acc * w.clone()
            })
            .collect();
        out.push(v[origin].clone());
    }
    Ok(out)
}

pub fn box_return_probability<S: Scalar>(d: usize, l: usize, n: usize) -> Result<S> {
    Ok(box_return_probabilities::<S>(d, l, n)?
        .pop()
        .expect("nonempty"))
}

/// One row of the Dirichlet report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplacianRecord {
    pub label: String,
    pub d: usize,
    pub l_or_size: usize,
    pub norm_or_eigenvalue: f64,
    pub bound: f64,
    pub residual: f64,
}

/// Grows a random connected set of `size` sites from the origin, keeping every
/// intermediate set; `nested[k]` has `k + 1` sites.
pub fn random_connected_chain<R: rand::Rng>(rng: &mut R, d: usize, size: usize) -> Vec<Vec<Site>> {
    let mut current = vec![Site::origin(d)];
    let mut members: BTreeSet<Site> = current.iter().copied().collect();
    let mut chain = vec![current.clone()];
    while current.len() < size {
        let base = current[rng.random_range(0..current.len())];
        let next = base.step(rng.random_range(0..2 * d));
        if members.insert(next) {
            current.push(next);
            chain.push(current.clone());
        }
    }
    chain
}
