//! Prime-field arithmetic and exact dense linear algebra over GF(q).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// The prime field GF(q).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeField {
    q: u32,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl PrimeField {
    /// Moduli are capped at 2^16 so every element fits the two-byte wire encoding.
    pub const MAX_MODULUS: u32 = 65_521;

    pub fn new(q: u32) -> Result<Self> {
        if !is_prime(q as u64) || q > Self::MAX_MODULUS {
            return Err(Error::NotPrime(q as u64));
        }
        Ok(Self { q })
    }

    /// Smallest prime field with at least `n` elements.
    pub fn smallest_at_least(n: usize) -> Self {
        let mut q = n.max(2) as u64;
        while !is_prime(q) {
            q += 1;
        }
        Self { q: q as u32 }
    }

    pub fn modulus(&self) -> u32 {
        self.q
    }

    pub fn elem(&self, v: u64) -> Fe {
        Fe {
            value: (v % self.q as u64) as u32,
            q: self.q,
        }
    }

    /// Reduces a signed integer into the field.
    pub fn elem_i64(&self, v: i64) -> Fe {
        self.elem(v.rem_euclid(self.q as i64) as u64)
    }

    pub fn zero(&self) -> Fe {
        self.elem(0)
    }

    pub fn one(&self) -> Fe {
        self.elem(1)
    }

    pub fn elements(&self) -> impl Iterator<Item = Fe> + '_ {
        (0..self.q as u64).map(move |v| self.elem(v))
    }
}

impl fmt::Display for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.q)
    }
}

/// An element of a prime field. The value is always reduced mod q.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fe {
    value: u32,
    q: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl Fe {
    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn field(&self) -> PrimeField {
        PrimeField { q: self.q }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn same_field(&self, other: &Fe) -> Result<()> {
        if self.q != other.q {
            return Err(Error::FieldMismatch {
                left: self.q,
                right: other.q,
            });
        }
        Ok(())
    }

    pub fn try_add(self, rhs: Fe) -> Result<Fe> {
        self.same_field(&rhs)?;
        Ok(Fe {
            value: ((self.value as u64 + rhs.value as u64) % self.q as u64) as u32,
            q: self.q,
        })
    }

    pub fn try_sub(self, rhs: Fe) -> Result<Fe> {
        self.same_field(&rhs)?;
        Ok(Fe {
            value: ((self.value as u64 + self.q as u64 - rhs.value as u64) % self.q as u64) as u32,
            q: self.q,
        })
    }

    pub fn try_mul(self, rhs: Fe) -> Result<Fe> {
        self.same_field(&rhs)?;
        Ok(Fe {
            value: ((self.value as u64 * rhs.value as u64) % self.q as u64) as u32,
            q: self.q,
        })
    }

    pub fn try_div(self, rhs: Fe) -> Result<Fe> {
        self.same_field(&rhs)?;
        self.try_mul(rhs.inv()?)
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(self) -> Result<Fe> {
        if self.value == 0 {
            return Err(Error::DivisionByZero(self.q));
        }
        Ok(self.pow(self.q as u64 - 2))
    }

    pub fn pow(self, mut e: u64) -> Fe {
        let q = self.q as u64;
        let mut base = self.value as u64;
        let mut acc = 1u64 % q;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % q;
            }
            base = base * base % q;
            e >>= 1;
        }
        Fe {
            value: acc as u32,
            q: self.q,
        }
    }
}

/// Checked binary field operation.
pub fn ff_arith(a: Fe, b: Fe, op: FieldOp) -> Result<Fe> {
    match op {
        FieldOp::Add => a.try_add(b),
        FieldOp::Sub => a.try_sub(b),
        FieldOp::Mul => a.try_mul(b),
        FieldOp::Div => a.try_div(b),
    }
}

// Operator forms panic on a field mismatch; use the `try_*` methods at API boundaries.
impl Add for Fe {
    type Output = Fe;
    fn add(self, rhs: Fe) -> Fe {
        self.try_add(rhs).expect("field mismatch")
    }
}

impl Sub for Fe {
    type Output = Fe;
    fn sub(self, rhs: Fe) -> Fe {
        self.try_sub(rhs).expect("field mismatch")
    }
}

impl Mul for Fe {
    type Output = Fe;
    fn mul(self, rhs: Fe) -> Fe {
        self.try_mul(rhs).expect("field mismatch")
    }
}

impl Neg for Fe {
    type Output = Fe;
    fn neg(self) -> Fe {
        Fe {
            value: (self.q - self.value) % self.q,
            q: self.q,
        }
    }
}

impl fmt::Debug for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Dense row-major matrix over a single prime field.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl FieldMatrix {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        Self {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % field.q;
        }
        m
    }

    /// Builds a matrix from integer rows, reducing every entry mod q.
    pub fn from_rows(field: PrimeField, rows: &[Vec<u64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let data = rows
            .iter()
            .flatten()
            .map(|&v| (v % field.q as u64) as u32)
            .collect();
        Ok(Self {
            field,
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_elems(rows: usize, cols: usize, elems: &[Fe]) -> Result<Self> {
        if elems.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} elements for a {rows}x{cols} matrix",
                elems.len()
            )));
        }
        let field = elems
            .first()
            .map(Fe::field)
            .ok_or_else(|| Error::Dimension("empty matrix needs an explicit field".into()))?;
        if let Some(bad) = elems.iter().find(|e| e.q != field.q) {
            return Err(Error::FieldMismatch {
                left: field.q,
                right: bad.q,
            });
        }
        Ok(Self {
            field,
            rows,
            cols,
            data: elems.iter().map(Fe::value).collect(),
        })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Fe {
        Fe {
            value: self.data[r * self.cols + c],
            q: self.field.q,
        }
    }

    pub fn set(&mut self, r: usize, c: usize, v: Fe) {
        assert_eq!(v.q, self.field.q, "field mismatch");
        self.data[r * self.cols + c] = v.value;
    }

    pub fn row(&self, r: usize) -> Vec<Fe> {
        (0..self.cols).map(|c| self.get(r, c)).collect()
    }

    pub fn column(&self, c: usize) -> Vec<Fe> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Submatrix made of the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> FieldMatrix {
        let mut out = FieldMatrix::zeros(self.field, self.rows, cols.len());
        for r in 0..self.rows {
            for (k, &c) in cols.iter().enumerate() {
                out.data[r * cols.len() + k] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn transpose(&self) -> FieldMatrix {
        let mut out = FieldMatrix::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn mul_matrix(&self, rhs: &FieldMatrix) -> Result<FieldMatrix> {
        if self.field != rhs.field {
            return Err(Error::FieldMismatch {
                left: self.field.q,
                right: rhs.field.q,
            });
        }
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let q = self.field.q as u64;
        let mut out = FieldMatrix::zeros(self.field, self.rows, rhs.cols);
        for r in 0..self.rows {
            for c in 0..rhs.cols {
                let mut acc = 0u64;
                for i in 0..self.cols {
                    acc = (acc
                        + self.data[r * self.cols + i] as u64 * rhs.data[i * rhs.cols + c] as u64)
                        % q;
                }
                out.data[r * rhs.cols + c] = acc as u32;
            }
        }
        Ok(out)
    }

    /// Row vector times matrix: `v · self`.
    pub fn vec_mul(&self, v: &[Fe]) -> Result<Vec<Fe>> {
        if v.len() != self.rows {
            return Err(Error::Dimension(format!(
                "vector of length {} times {}x{} matrix",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        let row = FieldMatrix::from_elems(1, v.len(), v)?;
        Ok(row.mul_matrix(self)?.row(0))
    }

    /// Matrix times column vector: `self · x`.
    pub fn mul_vec(&self, x: &[Fe]) -> Result<Vec<Fe>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let col = FieldMatrix::from_elems(x.len(), 1, x)?;
        Ok(self.mul_matrix(&col)?.column(0))
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.row_reduce(self.cols).len()
    }

    /// In-place reduced row echelon form over the first `ncols` columns.
    /// Returns the pivot column of each leading row.
    pub(crate) fn row_reduce(&mut self, ncols: usize) -> Vec<usize> {
        let q = self.field.q as u64;
        let cols = self.cols;
        let mut pivots = Vec::new();
        let mut prow = 0;
        for c in 0..ncols {
            if prow == self.rows {
                break;
            }
            let Some(sel) = (prow..self.rows).find(|&r| self.data[r * cols + c] != 0) else {
                continue;
            };
            if sel != prow {
                for k in 0..cols {
                    self.data.swap(sel * cols + k, prow * cols + k);
                }
            }
            let inv = self.get(prow, c).inv().expect("pivot is nonzero").value as u64;
            for k in 0..cols {
                let v = self.data[prow * cols + k] as u64;
                self.data[prow * cols + k] = (v * inv % q) as u32;
            }
            for r in 0..self.rows {
                if r == prow {
                    continue;
                }
                let f = self.data[r * cols + c] as u64;
                if f == 0 {
                    continue;
                }
                for k in 0..cols {
                    let a = self.data[r * cols + k] as u64;
                    let b = self.data[prow * cols + k] as u64;
                    self.data[r * cols + k] = ((a + q * q - f * b) % q) as u32;
                }
            }
            pivots.push(c);
            prow += 1;
        }
        pivots
    }
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}x{} over {}", self.rows, self.cols, self.field)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|e| e.to_string()).collect();
            writeln!(f, "  [{}]", row.join(" "))?;
        }
        Ok(())
    }
}

/// Description of the solution set of a consistent linear system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearSolution {
    /// One solution, with every free variable set to zero.
    pub particular: Vec<Fe>,
    /// `determined[v]` is true iff unknown `v` takes the same value in every solution.
    pub determined: Vec<bool>,
    /// Unknowns that are not pivots of the echelon form.
    pub free: Vec<usize>,
    pub rank: usize,
}

impl LinearSolution {
    pub fn is_unique(&self) -> bool {
        self.free.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    Consistent(LinearSolution),
    Inconsistent,
}

/// Solves `A x = b` by Gauss-Jordan elimination over GF(q).
pub fn solve_linear(a: &FieldMatrix, b: &[Fe]) -> Result<SolveOutcome> {
    if a.rows != b.len() {
        return Err(Error::Dimension(format!(
            "{} equations but {} right-hand sides",
            a.rows,
            b.len()
        )));
    }
    if let Some(bad) = b.iter().find(|e| e.q != a.field.q) {
        return Err(Error::FieldMismatch {
            left: a.field.q,
            right: bad.q,
        });
    }
    let n = a.cols;
    let mut aug = FieldMatrix::zeros(a.field, a.rows, n + 1);
    for r in 0..a.rows {
        aug.data[r * (n + 1)..r * (n + 1) + n].copy_from_slice(&a.data[r * n..(r + 1) * n]);
        aug.data[r * (n + 1) + n] = b[r].value;
    }
    let pivots = aug.row_reduce(n);
    let rank = pivots.len();
    if (rank..aug.rows).any(|r| aug.data[r * (n + 1) + n] != 0) {
        return Ok(SolveOutcome::Inconsistent);
    }

    let mut is_pivot = vec![false; n];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
    let mut particular = vec![a.field.zero(); n];
    let mut determined = vec![false; n];
    for (r, &c) in pivots.iter().enumerate() {
        particular[c] = aug.get(r, n);
        determined[c] = free.iter().all(|&f| aug.data[r * (n + 1) + f] == 0);
    }
    Ok(SolveOutcome::Consistent(LinearSolution {
        particular,
        determined,
        free,
        rank,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_arithmetic() {
        let f = PrimeField::new(5).unwrap();
        assert_eq!(ff_arith(f.elem(3), f.elem(4), FieldOp::Mul).unwrap(), f.elem(2));
        assert_eq!(ff_arith(f.one(), f.elem(2), FieldOp::Div).unwrap(), f.elem(3));
        let g = PrimeField::new(7).unwrap();
        for a in g.elements() {
            assert_eq!(a + g.zero(), a);
        }
    }

    #[test]
    fn errors_are_explicit() {
        let f = PrimeField::new(5).unwrap();
        let g = PrimeField::new(7).unwrap();
        assert_eq!(
            ff_arith(f.one(), f.zero(), FieldOp::Div),
            Err(Error::DivisionByZero(5))
        );
        assert!(matches!(
            ff_arith(f.one(), g.one(), FieldOp::Add),
            Err(Error::FieldMismatch { .. })
        ));
        assert!(PrimeField::new(9).is_err());
        assert!(PrimeField::new(1).is_err());
    }

    #[test]
    fn inverses_exhaustive_small_primes() {
        for q in (2..=101u32).filter(|&q| is_prime(q as u64)) {
            let f = PrimeField::new(q).unwrap();
            for a in f.elements().filter(|a| !a.is_zero()) {
                assert_eq!(a * a.inv().unwrap(), f.one(), "q={q} a={a}");
            }
        }
    }

    #[test]
    fn smallest_prime_at_least() {
        assert_eq!(PrimeField::smallest_at_least(3).modulus(), 3);
        assert_eq!(PrimeField::smallest_at_least(4).modulus(), 5);
        assert_eq!(PrimeField::smallest_at_least(8).modulus(), 11);
        assert_eq!(PrimeField::smallest_at_least(1).modulus(), 2);
    }

    #[test]
    fn identity_system() {
        let f = PrimeField::new(7).unwrap();
        let a = FieldMatrix::identity(f, 3);
        let b = vec![f.elem(4), f.elem(0), f.elem(6)];
        let SolveOutcome::Consistent(sol) = solve_linear(&a, &b).unwrap() else {
            panic!("identity system must be consistent");
        };
        assert_eq!(sol.particular, b);
        assert!(sol.is_unique());
        assert!(sol.determined.iter().all(|&d| d));
    }

    #[test]
    fn zero_row_nonzero_rhs_is_inconsistent() {
        let f = PrimeField::new(5).unwrap();
        let a = FieldMatrix::from_rows(f, &[vec![1, 0], vec![0, 0]]).unwrap();
        let b = vec![f.elem(1), f.elem(3)];
        assert_eq!(solve_linear(&a, &b).unwrap(), SolveOutcome::Inconsistent);
    }

    #[test]
    fn invertible_4x4_over_gf5() {
        let f = PrimeField::new(5).unwrap();
        // Upper-triangular times lower-triangular with unit diagonals, hence invertible.
        let u = FieldMatrix::from_rows(
            f,
            &[
                vec![1, 2, 3, 4],
                vec![0, 1, 4, 2],
                vec![0, 0, 1, 3],
                vec![0, 0, 0, 1],
            ],
        )
        .unwrap();
        let l = u.transpose();
        let a = u.mul_matrix(&l).unwrap();
        assert_eq!(a.rank(), 4);
        let x = vec![f.elem(3), f.elem(1), f.elem(4), f.elem(2)];
        let b = a.mul_vec(&x).unwrap();
        let SolveOutcome::Consistent(sol) = solve_linear(&a, &b).unwrap() else {
            panic!("consistent by construction");
        };
        assert_eq!(sol.particular, x);
    }

    #[test]
    fn partially_determined_system() {
        // x0 = 2; x1 + x2 = 1 -> x0 determined, x1 and x2 not.
        let f = PrimeField::new(3).unwrap();
        let a = FieldMatrix::from_rows(f, &[vec![1, 0, 0], vec![0, 1, 1]]).unwrap();
        let b = vec![f.elem(2), f.elem(1)];
        let SolveOutcome::Consistent(sol) = solve_linear(&a, &b).unwrap() else {
            panic!()
        };
        assert_eq!(sol.determined, vec![true, false, false]);
        assert_eq!(sol.free, vec![2]);
        assert_eq!(sol.rank, 2);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let f = PrimeField::new(3).unwrap();
        let a = FieldMatrix::identity(f, 2);
        assert!(matches!(
            solve_linear(&a, &[f.one()]),
            Err(Error::Dimension(_))
        ));
    }
}
