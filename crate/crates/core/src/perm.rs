//! Lattice sites and finitely supported permutations of them.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 4;

pub fn check_dim(d: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&d) {
        Ok(())
    } else {
        Err(Error::DimensionOutOfRange(d))
    }
}

/// A vertex of `Z^d`, `1 <= d <= 4`. Unused trailing coordinates are zero.
///
/// Ordering is lexicographic on the coordinates.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Site {
    coords: [i32; MAX_DIM],
    dim: u8,
}

impl Site {
    pub fn origin(d: usize) -> Self {
        debug_assert!((1..=MAX_DIM).contains(&d));
        Site {
            coords: [0; MAX_DIM],
            dim: d as u8,
        }
    }

    pub fn new(coords: &[i32]) -> Result<Self> {
        check_dim(coords.len())?;
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Site {
            coords: c,
            dim: coords.len() as u8,
        })
    }

    /// The unit vector `e_{axis+1}` in dimension `d`.
    pub fn unit(d: usize, axis: usize) -> Self {
        Self::origin(d).shifted(axis, 1)
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim()]
    }

    pub fn coord(&self, axis: usize) -> i32 {
        self.coords[axis]
    }

    pub fn shifted(mut self, axis: usize, delta: i32) -> Self {
        self.coords[axis] += delta;
        self
    }

    /// Neighbor reached by step `dir` in `0..2d`: axis `dir / 2`, sign `+` for even `dir`.
    pub fn step(self, dir: usize) -> Self {
        let delta = if dir.is_multiple_of(2) { 1 } else { -1 };
        self.shifted(dir / 2, delta)
    }

    pub fn neighbors(self) -> impl Iterator<Item = Site> {
        (0..2 * self.dim()).map(move |dir| self.step(dir))
    }

    pub fn l1_norm(&self) -> u32 {
        self.coords().iter().map(|c| c.unsigned_abs()).sum()
    }

    pub fn sup_norm(&self) -> u32 {
        self.coords()
            .iter()
            .map(|c| c.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    /// Even sublattice: even coordinate sum.
    pub fn is_even(&self) -> bool {
        self.coords().iter().sum::<i32>().rem_euclid(2) == 0
    }

    pub fn is_adjacent(&self, other: &Site) -> bool {
        self.dim == other.dim && (*self - *other).l1_norm() == 1
    }
}

impl std::ops::Add for Site {
    type Output = Site;

    fn add(mut self, rhs: Site) -> Site {
        for (a, b) in self.coords.iter_mut().zip(rhs.coords) {
            *a += b;
        }
        self
    }
}

impl std::ops::Sub for Site {
    type Output = Site;

    fn sub(mut self, rhs: Site) -> Site {
        for (a, b) in self.coords.iter_mut().zip(rhs.coords) {
            *a -= b;
        }
        self
    }
}

impl std::ops::Neg for Site {
    type Output = Site;

    fn neg(mut self) -> Site {
        for a in self.coords.iter_mut() {
            *a = -*a;
        }
        self
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", c)?;
        }
        write!(f, ")")
    }
}

/// A finitely supported bijection of lattice sites.
///
/// Only non-fixed points are stored. Products follow `(στ)(x) = σ(τ(x))`.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct SparsePermutation {
    moved: BTreeMap<Site, Site>,
}

impl SparsePermutation {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn transposition(a: Site, b: Site) -> Result<Self> {
        Self::identity().right_multiply_transposition(a, b)
    }

    pub fn apply(&self, x: Site) -> Site {
        self.moved.get(&x).copied().unwrap_or(x)
    }

    pub fn is_identity(&self) -> bool {
        self.moved.is_empty()
    }

    /// Sites not fixed by the permutation, in lexicographic order.
    pub fn support(&self) -> impl Iterator<Item = &Site> {
        self.moved.keys()
    }

    pub fn support_len(&self) -> usize {
        self.moved.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Site, &Site)> {
        self.moved.iter()
    }

    /// Returns `self ∘ (a b)`.
    pub fn right_multiply_transposition(mut self, a: Site, b: Site) -> Result<Self> {
        self.right_multiply_in_place(a, b)?;
        Ok(self)
    }

    /// In-place `self ← self ∘ (a b)`: the images of `a` and `b` swap.
    pub fn right_multiply_in_place(&mut self, a: Site, b: Site) -> Result<()> {
        if a == b {
            return Err(Error::InvalidTransposition(a.to_string()));
        }
        if a.dim() != b.dim() {
            return Err(Error::InvalidArgument(format!(
                "transposition endpoints {a} and {b} differ in dimension"
            )));
        }
        let image_a = self.apply(a);
        let image_b = self.apply(b);
        self.set(a, image_b);
        self.set(b, image_a);
        Ok(())
    }

    /// Returns `self ∘ other`.
    pub fn compose(&self, other: &SparsePermutation) -> SparsePermutation {
        let mut out = SparsePermutation::identity();
        for x in self.moved.keys().chain(other.moved.keys()) {
            let y = self.apply(other.apply(*x));
            out.set(*x, y);
        }
        out
    }

    pub fn inverse(&self) -> SparsePermutation {
        SparsePermutation {
            moved: self.moved.iter().map(|(k, v)| (*v, *k)).collect(),
        }
    }

    fn set(&mut self, x: Site, image: Site) {
        if x == image {
            self.moved.remove(&x);
        } else {
            self.moved.insert(x, image);
        }
    }
}

impl fmt::Debug for SparsePermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.moved.iter()).finish()
    }
}
