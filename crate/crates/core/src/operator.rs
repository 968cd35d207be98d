//! Sparse complex operators on a declared Hilbert-space dimension.
//!
//! Every Hamiltonian in this crate is very sparse (ladder operators only
//! connect neighbouring Fock levels), so operators are stored row-wise as
//! sorted `(column, value)` lists. Dense `nalgebra` matrices are produced on
//! demand for eigendecomposition and matrix exponentials.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    rows: Vec<Vec<(usize, C64)>>,
}

impl OperatorMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            rows: vec![Vec::new(); dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![C64::new(1.0, 0.0); dim])
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let rows = diag
            .iter()
            .enumerate()
            .map(|(i, &v)| if v == ZERO { Vec::new() } else { vec![(i, v)] })
            .collect();
        Self { dim: diag.len(), rows }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&v| C64::new(v, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside dim {dim}");
            rows[r].push((c, v));
        }
        for row in rows.iter_mut() {
            row.sort_by_key(|&(c, _)| c);
            let mut merged: Vec<(usize, C64)> = Vec::with_capacity(row.len());
            for &(c, v) in row.iter() {
                match merged.last_mut() {
                    Some((lc, lv)) if *lc == c => *lv += v,
                    _ => merged.push((c, v)),
                }
            }
            merged.retain(|&(_, v)| v != ZERO);
            *row = merged;
        }
        Self { dim, rows }
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "operator must be square");
        let dim = m.nrows();
        let triplets = (0..dim)
            .flat_map(|r| (0..dim).map(move |c| (r, c)))
            .map(|(r, c)| (r, c, m[(r, c)]));
        Self::from_triplets(dim, triplets)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, r: usize) -> &[(usize, C64)] {
        &self.rows[r]
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.rows[r]
            .binary_search_by_key(&c, |&(col, _)| col)
            .map(|i| self.rows[r][i].1)
            .unwrap_or(ZERO)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (r, c, v * s)))
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "operator dimension mismatch");
        let mut triplets = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            for &(k, a) in row {
                for &(c, b) in &other.rows[k] {
                    triplets.push((r, c, a * b));
                }
            }
        }
        Self::from_triplets(self.dim, triplets)
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::identity(self.dim), |acc, _| acc.matmul(self))
    }

    /// Kronecker product `self ⊗ other`; `self` indexes the slow factor.
    pub fn kron(&self, other: &Self) -> Self {
        let d = other.dim;
        let triplets = self.triplets().flat_map(|(r1, c1, a)| {
            other
                .triplets()
                .map(move |(r2, c2, b)| (r1 * d + r2, c1 * d + c2, a * b))
        });
        Self::from_triplets(self.dim * d, triplets.collect::<Vec<_>>())
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.triplets().map(|(_, _, v)| v.norm()).fold(0.0, f64::max)
    }

    /// Max absolute row sum, an upper bound on the spectral norm.
    pub fn norm_inf(&self) -> f64 {
        self.rows
            .iter()
            .map(|row| row.iter().map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (self - &self.adjoint()).max_abs()
    }

    pub fn ensure_hermitian(&self, tol: f64) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect > tol {
            Err(Error::NotHermitian { defect })
        } else {
            Ok(())
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(self.dim);
        self.apply_add(v, C64::new(1.0, 0.0), &mut out);
        out
    }

    /// `out += s * self * v`
    pub fn apply_add(&self, v: &DVector<C64>, s: C64, out: &mut DVector<C64>) {
        debug_assert_eq!(v.len(), self.dim);
        for (r, row) in self.rows.iter().enumerate() {
            let acc: C64 = row.iter().map(|&(c, a)| a * v[c]).sum();
            out[r] += s * acc;
        }
    }

    /// `<v|self|v>`
    pub fn expectation(&self, v: &DVector<C64>) -> C64 {
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| v[r].conj() * row.iter().map(|&(c, a)| a * v[c]).sum::<C64>())
            .sum()
    }

    /// Partition of the basis into connected components of the coupling
    /// graph. The operator is block diagonal over these index sets.
    pub fn connected_blocks(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.dim).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for (r, c, _) in self.triplets() {
            let (a, b) = (find(&mut parent, r), find(&mut parent, c));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; self.dim];
        for i in 0..self.dim {
            let root = find(&mut parent, i);
            if slot[root] == usize::MAX {
                slot[root] = blocks.len();
                blocks.push(Vec::new());
            }
            blocks[slot[root]].push(i);
        }
        blocks
    }

    pub fn submatrix(&self, indices: &[usize]) -> DMatrix<C64> {
        let mut local = vec![usize::MAX; self.dim];
        for (k, &i) in indices.iter().enumerate() {
            local[i] = k;
        }
        let mut m = DMatrix::zeros(indices.len(), indices.len());
        for (k, &i) in indices.iter().enumerate() {
            for &(c, v) in &self.rows[i] {
                let lc = local[c];
                if lc != usize::MAX {
                    m[(k, lc)] = v;
                }
            }
        }
        m
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        OperatorMatrix::from_triplets(self.dim, self.triplets().chain(rhs.triplets()).collect::<Vec<_>>())
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self + &(-rhs)
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        self.scale_real(-1.0)
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.matmul(rhs)
    }
}

/// Spectral decomposition of a Hermitian operator, computed block by block
/// over the connected components of its sparsity graph.
#[derive(Clone, Debug)]
pub struct BlockEigen {
    dim: usize,
    blocks: Vec<EigenBlock>,
}

#[derive(Clone, Debug)]
struct EigenBlock {
    indices: Vec<usize>,
    values: DVector<f64>,
    vectors: DMatrix<C64>,
}

impl BlockEigen {
    pub fn new(h: &OperatorMatrix) -> Self {
        let blocks = h
            .connected_blocks()
            .into_iter()
            .map(|indices| {
                let sub = h.submatrix(&indices);
                let eig = sub.symmetric_eigen();
                EigenBlock {
                    indices,
                    values: eig.eigenvalues,
                    vectors: eig.eigenvectors,
                }
            })
            .collect();
        Self { dim: h.dim(), blocks }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn largest_block(&self) -> usize {
        self.blocks.iter().map(|b| b.indices.len()).max().unwrap_or(0)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.blocks.iter().flat_map(|b| b.values.iter().copied()).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Applies `f(H)` to `psi` for a scalar function of the eigenvalues.
    pub fn apply_fn(&self, psi: &DVector<C64>, f: impl Fn(f64) -> C64) -> DVector<C64> {
        let mut out = DVector::zeros(self.dim);
        for b in &self.blocks {
            let local = DVector::from_iterator(b.indices.len(), b.indices.iter().map(|&i| psi[i]));
            let mut coeffs = b.vectors.ad_mul(&local);
            for (c, &e) in coeffs.iter_mut().zip(b.values.iter()) {
                *c *= f(e);
            }
            let back = &b.vectors * coeffs;
            for (k, &i) in b.indices.iter().enumerate() {
                out[i] = back[k];
            }
        }
        out
    }

    /// Dense `f(H)`.
    pub fn dense_fn(&self, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for b in &self.blocks {
            let mut scaled = b.vectors.clone();
            for (j, &e) in b.values.iter().enumerate() {
                let s = f(e);
                scaled.column_mut(j).iter_mut().for_each(|x| *x *= s);
            }
            let block = scaled * b.vectors.adjoint();
            for (r, &i) in b.indices.iter().enumerate() {
                for (c, &j) in b.indices.iter().enumerate() {
                    out[(i, j)] = block[(r, c)];
                }
            }
        }
        out
    }
}

pub(crate) fn dense_max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub(crate) fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    dense_max_abs(&(u.adjoint() * u - DMatrix::<C64>::identity(n, n)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn triplets_merge_and_drop_zeros() {
        let m = OperatorMatrix::from_triplets(
            3,
            [
                (0, 1, c(1.0, 0.0)),
                (0, 1, c(2.0, 0.0)),
                (2, 2, c(1.0, 0.0)),
                (2, 2, c(-1.0, 0.0)),
            ],
        );
        assert_eq!(m.get(0, 1), c(3.0, 0.0));
        assert_eq!(m.nnz(), 1);
    }

    #[test]
    fn dense_round_trip_and_products() {
        let a = OperatorMatrix::from_triplets(3, [(0, 1, c(1.0, 2.0)), (1, 2, c(0.5, 0.0)), (2, 0, c(0.0, -1.0))]);
        let b = OperatorMatrix::from_triplets(3, [(1, 1, c(2.0, 0.0)), (2, 1, c(1.0, 1.0))]);
        assert_eq!(OperatorMatrix::from_dense(&a.to_dense()), a);
        let prod = a.matmul(&b).to_dense();
        let expect = a.to_dense() * b.to_dense();
        assert!(dense_max_abs(&(prod - expect)) < 1e-15);
        let kron = a.kron(&b).to_dense();
        assert_eq!(kron.nrows(), 9);
        assert_eq!(kron[(1 * 3 + 2, 2 * 3 + 1)], a.get(1, 2) * b.get(2, 1));
    }

    #[test]
    fn blocks_follow_couplings() {
        let m = OperatorMatrix::from_triplets(5, [(0, 3, c(1.0, 0.0)), (3, 0, c(1.0, 0.0)), (1, 1, c(2.0, 0.0))]);
        let blocks = m.connected_blocks();
        assert_eq!(blocks, vec![vec![0, 3], vec![1], vec![2], vec![4]]);
    }

    #[test]
    fn block_eigen_reconstructs_operator() {
        let m = OperatorMatrix::from_triplets(
            4,
            [
                (0, 2, c(0.3, 0.4)),
                (2, 0, c(0.3, -0.4)),
                (0, 0, c(1.0, 0.0)),
                (1, 1, c(-2.0, 0.0)),
                (3, 3, c(0.5, 0.0)),
            ],
        );
        let eig = BlockEigen::new(&m);
        let rebuilt = eig.dense_fn(|e| c(e, 0.0));
        assert!(dense_max_abs(&(rebuilt - m.to_dense())) < 1e-14);
    }
}
