//! Young diagrams, standard tableaux, Plancherel measure, and Young's
//! orthogonal form for the irreducible representations of `S_N`.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lehmer::factorial;
use crate::scalar::Real;

pub const MAX_BOXES: usize = 10;

fn check_boxes(n: usize) -> Result<()> {
    if (1..=MAX_BOXES).contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "diagram size {n} outside 1..={MAX_BOXES}"
        )))
    }
}

/// A partition of `N`: weakly decreasing positive row lengths.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct YoungDiagram(Vec<usize>);

impl YoungDiagram {
    pub fn new(rows: Vec<usize>) -> Result<Self> {
        if rows.is_empty() || rows.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "{rows:?}: rows must be positive"
            )));
        }
        if rows.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(format!(
                "{rows:?}: rows must be weakly decreasing"
            )));
        }
        Ok(YoungDiagram(rows))
    }

    pub fn single_box() -> Self {
        YoungDiagram(vec![1])
    }

    pub fn rows(&self) -> &[usize] {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.iter().sum()
    }

    /// Length of the column `col`.
    fn column(&self, col: usize) -> usize {
        self.0.iter().take_while(|&&r| r > col).count()
    }

    /// Diagrams obtained by adding one box, in row order.
    pub fn successors(&self) -> Vec<YoungDiagram> {
        (0..=self.0.len())
            .filter(|&r| self.can_add(r))
            .map(|r| self.with_box(r))
            .collect()
    }

    fn can_add(&self, row: usize) -> bool {
        match row {
            0 => true,
            r if r < self.0.len() => self.0[r] < self.0[r - 1],
            r => r == self.0.len(),
        }
    }

    fn with_box(&self, row: usize) -> YoungDiagram {
        let mut rows = self.0.clone();
        if row == rows.len() {
            rows.push(1);
        } else {
            rows[row] += 1;
        }
        YoungDiagram(rows)
    }

    /// `dim λ = N! / ∏ hooks`.
    pub fn hook_dimension(&self) -> u64 {
        let mut hooks = 1u64;
        for (r, &len) in self.0.iter().enumerate() {
            for c in 0..len {
                let arm = len - c - 1;
                let leg = self.column(c) - r - 1;
                hooks *= (arm + leg + 1) as u64;
            }
        }
        factorial(self.size()) / hooks
    }
}

impl fmt::Debug for YoungDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for YoungDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|r| r.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// Partitions of `n`, largest first in lexicographic order: `[n], [n-1,1], ...`.
pub fn partitions(n: usize) -> Vec<YoungDiagram> {
    fn rec(remaining: usize, cap: usize, prefix: &mut Vec<usize>, out: &mut Vec<YoungDiagram>) {
        if remaining == 0 {
            out.push(YoungDiagram(prefix.clone()));
            return;
        }
        for part in (1..=remaining.min(cap)).rev() {
            prefix.push(part);
            rec(remaining - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// A standard tableau as its growth sequence: `rows[k]` is the row receiving box `k + 1`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StandardTableau {
    rows: Vec<u8>,
}

impl StandardTableau {
    pub fn rows(&self) -> &[u8] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Contents `col - row` of the boxes holding `1, ..., N`.
    pub fn contents(&self) -> Vec<i64> {
        let mut lengths = Vec::<usize>::new();
        self.rows
            .iter()
            .map(|&r| {
                let r = r as usize;
                if r == lengths.len() {
                    lengths.push(0);
                }
                let col = lengths[r];
                lengths[r] += 1;
                col as i64 - r as i64
            })
            .collect()
    }

    /// The shapes `t_1 ⊂ ... ⊂ t_N`.
    pub fn growth(&self) -> Vec<YoungDiagram> {
        let mut shape = YoungDiagram(Vec::new());
        self.rows
            .iter()
            .map(|&r| {
                shape = shape.with_box(r as usize);
                shape.clone()
            })
            .collect()
    }

    pub fn shape(&self) -> YoungDiagram {
        self.growth().pop().expect("nonempty tableau")
    }

    /// Tableau with the entries `i` and `i + 1` exchanged (1-based `i`).
    fn swapped(&self, i: usize) -> StandardTableau {
        let mut rows = self.rows.clone();
        rows.swap(i - 1, i);
        StandardTableau { rows }
    }
}

/// Standard tableaux of shape `shape`, ordered lexicographically by growth sequence.
pub fn tableaux(shape: &YoungDiagram) -> Vec<StandardTableau> {
    fn rec(
        target: &[usize],
        current: &mut Vec<usize>,
        rows: &mut Vec<u8>,
        out: &mut Vec<StandardTableau>,
    ) {
        if rows.len() == target.iter().sum::<usize>() {
            out.push(StandardTableau { rows: rows.clone() });
            return;
        }
        for r in 0..target.len() {
            let fits = current[r] < target[r] && (r == 0 || current[r] < current[r - 1]);
            if fits {
                current[r] += 1;
                rows.push(r as u8);
                rec(target, current, rows, out);
                rows.pop();
                current[r] -= 1;
            }
        }
    }
    let mut out = Vec::new();
    rec(
        shape.rows(),
        &mut vec![0; shape.rows().len()],
        &mut Vec::new(),
        &mut out,
    );
    out
}

/// Diagrams of size `n` with their dimensions, counted by tableau enumeration
/// and checked against the hook length formula.
pub fn enumerate_diagrams_dims(n: usize) -> Result<Vec<(YoungDiagram, u64)>> {
    check_boxes(n)?;
    partitions(n)
        .into_iter()
        .map(|lambda| {
            let counted = tableaux(&lambda).len() as u64;
            let hook = lambda.hook_dimension();
            if counted != hook {
                return Err(Error::Degenerate(format!(
                    "{lambda}: {counted} tableaux but hook formula gives {hook}"
                )));
            }
            Ok((lambda, counted))
        })
        .collect()
}

/// `Pl_N(λ) = dim² λ / N!`.
pub fn plancherel_distribution(n: usize) -> Result<Vec<(YoungDiagram, f64)>> {
    let nf = factorial(n) as f64;
    Ok(enumerate_diagrams_dims(n)?
        .into_iter()
        .map(|(lambda, dim)| (lambda, (dim * dim) as f64 / nf))
        .collect())
}

/// `p(λ → λ') = dim λ' / ((N + 1) dim λ)` over the diagrams covering `λ`.
pub fn plancherel_step(lambda: &YoungDiagram) -> Result<Vec<(YoungDiagram, f64)>> {
    let n = lambda.size();
    check_boxes(n + 1)?;
    let dim = lambda.hook_dimension() as f64;
    Ok(lambda
        .successors()
        .into_iter()
        .map(|next| {
            let p = next.hook_dimension() as f64 / ((n + 1) as f64 * dim);
            (next, p)
        })
        .collect())
}

/// Young's orthogonal form of `λ` on the tableau basis.
#[derive(Clone, Debug)]
pub struct IrrepMatrices<T: Real> {
    pub diagram: YoungDiagram,
    pub basis: Vec<StandardTableau>,
    /// `adjacent[i - 1]` represents `(i, i + 1)`.
    pub adjacent: Vec<DMatrix<T>>,
}

impl<T: Real> IrrepMatrices<T> {
    pub fn new(diagram: &YoungDiagram) -> Result<Self> {
        let n = diagram.size();
        check_boxes(n)?;
        let basis = tableaux(diagram);
        let position: std::collections::HashMap<&StandardTableau, usize> =
            basis.iter().enumerate().map(|(k, t)| (t, k)).collect();
        let contents: Vec<Vec<i64>> = basis.iter().map(|t| t.contents()).collect();
        let dim = basis.len();
        let adjacent = (1..n)
            .map(|i| {
                let mut m = DMatrix::<T>::zeros(dim, dim);
                for (k, t) in basis.iter().enumerate() {
                    // axial distance from i to i+1
                    let r = (contents[k][i] - contents[k][i - 1]) as f64;
                    m[(k, k)] = T::from_f64_lossy(1.0 / r);
                    if r.abs() > 1.0 {
                        let other = position[&t.swapped(i)];
                        m[(other, k)] = T::from_f64_lossy((1.0 - 1.0 / (r * r)).sqrt());
                    }
                }
                m
            })
            .collect();
        Ok(IrrepMatrices {
            diagram: diagram.clone(),
            basis,
            adjacent,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn size(&self) -> usize {
        self.diagram.size()
    }

    /// Matrix of the transposition `(a b)`, 1-based positions.
    ///
    /// `(a b) = s_a s_{a+1} ... s_{b-2} s_{b-1} s_{b-2} ... s_a` for `a < b`.
    pub fn transposition(&self, a: usize, b: usize) -> Result<DMatrix<T>> {
        let n = self.size();
        if a == b {
            return Err(Error::InvalidTransposition(a.to_string()));
        }
        let (a, b) = (a.min(b), a.max(b));
        if a < 1 || b > n {
            return Err(Error::IndexOutOfRange {
                index: b,
                lo: 1,
                hi: n,
            });
        }
        let mut m = self.adjacent[b - 2].clone();
        for i in (a..b - 1).rev() {
            let s = &self.adjacent[i - 1];
            m = s * m * s;
        }
        Ok(m)
    }
}

pub fn transposition_matrix<T: Real>(
    lambda: &YoungDiagram,
    a: usize,
    b: usize,
) -> Result<DMatrix<T>> {
    IrrepMatrices::<T>::new(lambda)?.transposition(a, b)
}
