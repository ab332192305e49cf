//! [N, K] MDS storage codes.
//!
//! The library standardizes on systematic Reed-Solomon codes: a Vandermonde
//! generator on the evaluation points `0, 1, ..., N-1`, row-reduced to
//! `[I_K | P]`. Every generator is checked for the K-out-of-N property at
//! construction time.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::field::{solve_linear, Fe, FieldMatrix, PrimeField, SolveOutcome};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MdsCode {
    length: usize,
    dimension: usize,
    generator: FieldMatrix,
}

impl MdsCode {
    /// Wraps an explicit K x N generator after checking that it is MDS.
    pub fn from_generator(generator: FieldMatrix) -> Result<Self> {
        let (k, n) = (generator.rows(), generator.cols());
        if k == 0 || n <= k {
            return Err(Error::InvalidParams(format!(
                "need N > K >= 1, got N={n} K={k}"
            )));
        }
        if (generator.field().modulus() as usize) < n {
            return Err(Error::FieldTooSmall {
                q: generator.field().modulus(),
                n,
            });
        }
        if let Some(columns) = first_singular_subset(&generator) {
            return Err(Error::NotMds { columns });
        }
        Ok(Self {
            length: n,
            dimension: k,
            generator,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn field(&self) -> PrimeField {
        self.generator.field()
    }

    pub fn generator(&self) -> &FieldMatrix {
        &self.generator
    }

    /// `w · G` for a length-K message row.
    pub fn encode_row(&self, w: &[Fe]) -> Result<Vec<Fe>> {
        if w.len() != self.dimension {
            return Err(Error::Dimension(format!(
                "message of length {} for a code of dimension {}",
                w.len(),
                self.dimension
            )));
        }
        self.generator.vec_mul(w)
    }

    /// Recovers the message from any K (or more) codeword positions.
    /// `positions` are 0-based column indices of the generator.
    pub fn decode_erasures(&self, positions: &[usize], symbols: &[Fe]) -> Result<Vec<Fe>> {
        if positions.len() != symbols.len() {
            return Err(Error::Dimension("positions and symbols differ in length".into()));
        }
        if let Some(&bad) = positions.iter().find(|&&p| p >= self.length) {
            return Err(Error::OutOfRange {
                what: "codeword position",
                value: bad,
                lo: 0,
                hi: self.length - 1,
            });
        }
        // Unknowns are the message symbols: G_S^T w^T = y^T.
        let system = self.generator.select_columns(positions).transpose();
        match solve_linear(&system, symbols)? {
            SolveOutcome::Consistent(sol) if sol.is_unique() => Ok(sol.particular),
            SolveOutcome::Consistent(sol) => Err(Error::Unrecoverable {
                undetermined: sol.free.len(),
            }),
            SolveOutcome::Inconsistent => Err(Error::InconsistentAnswers),
        }
    }
}

/// Systematic Reed-Solomon code over evaluation points `0..N-1`.
pub fn make_rs_code(length: usize, dimension: usize, field: PrimeField) -> Result<MdsCode> {
    if dimension == 0 || length <= dimension {
        return Err(Error::InvalidParams(format!(
            "need N > K >= 1, got N={length} K={dimension}"
        )));
    }
    if (field.modulus() as usize) < length {
        return Err(Error::FieldTooSmall {
            q: field.modulus(),
            n: length,
        });
    }
    let mut vandermonde = FieldMatrix::zeros(field, dimension, length);
    for j in 0..length {
        let point = field.elem(j as u64);
        for i in 0..dimension {
            vandermonde.set(i, j, point.pow(i as u64));
        }
    }
    // The leading K columns use distinct points, so reduction yields [I | P].
    let pivots = vandermonde.row_reduce(length);
    debug_assert_eq!(pivots, (0..dimension).collect::<Vec<_>>());
    MdsCode::from_generator(vandermonde)
}

/// True iff every K x K column submatrix of the generator is invertible.
pub fn check_mds(code: &MdsCode) -> bool {
    first_singular_subset(code.generator()).is_none()
}

fn first_singular_subset(generator: &FieldMatrix) -> Option<Vec<usize>> {
    let k = generator.rows();
    (0..generator.cols())
        .combinations(k)
        .find(|cols| generator.select_columns(cols).rank() < k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(q: u32) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    #[test]
    fn rs_3_2_over_gf3_is_systematic() {
        let code = make_rs_code(3, 2, gf(3)).unwrap();
        let g = code.generator();
        assert_eq!(g.select_columns(&[0, 1]), FieldMatrix::identity(gf(3), 2));
        assert!(!g.get(0, 2).is_zero() && !g.get(1, 2).is_zero());
        assert!(check_mds(&code));
    }

    #[test]
    fn rs_5_3_over_gf5_is_mds() {
        let code = make_rs_code(5, 3, gf(5)).unwrap();
        assert!(check_mds(&code));
        assert_eq!((0..5).combinations(3).count(), 10);
    }

    #[test]
    fn no_redundancy_is_rejected() {
        assert!(matches!(
            make_rs_code(2, 2, gf(3)),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn field_smaller_than_length_is_rejected() {
        assert_eq!(
            make_rs_code(5, 3, gf(3)),
            Err(Error::FieldTooSmall { q: 3, n: 5 })
        );
    }

    #[test]
    fn repeated_column_is_not_mds() {
        let g = FieldMatrix::from_rows(gf(5), &[vec![1, 0, 1, 1], vec![0, 1, 2, 2]]).unwrap();
        assert_eq!(
            MdsCode::from_generator(g),
            Err(Error::NotMds {
                columns: vec![2, 3]
            })
        );
    }

    #[test]
    fn encode_basics() {
        let f = gf(5);
        let code = make_rs_code(5, 3, f).unwrap();
        assert!(code
            .encode_row(&[f.zero(); 3])
            .unwrap()
            .iter()
            .all(Fe::is_zero));
        for i in 0..3 {
            let mut e = vec![f.zero(); 3];
            e[i] = f.one();
            assert_eq!(code.encode_row(&e).unwrap(), code.generator().row(i));
        }
        let w = vec![f.elem(4), f.elem(1), f.elem(3)];
        assert_eq!(&code.encode_row(&w).unwrap()[..3], &w[..]);
        assert!(code.encode_row(&w[..2]).is_err());
    }

    #[test]
    fn erasure_decoding_from_every_k_subset() {
        let f = gf(7);
        let code = make_rs_code(6, 3, f).unwrap();
        let w = vec![f.elem(6), f.elem(2), f.elem(5)];
        let cw = code.encode_row(&w).unwrap();
        for subset in (0..6).combinations(3) {
            let symbols: Vec<Fe> = subset.iter().map(|&p| cw[p]).collect();
            assert_eq!(code.decode_erasures(&subset, &symbols).unwrap(), w);
        }
        assert!(matches!(
            code.decode_erasures(&[0, 1], &cw[..2]),
            Err(Error::Unrecoverable { .. })
        ));
    }
}
