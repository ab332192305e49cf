//! File model and the per-server encoded storage layout.
//!
//! Indexing convention: code-symbol rows are 0-based (`i` in `[0, n-1]`),
//! servers and files are 1-based (`j` in `[1, N]`, `m` in `[1, M]`).
//! Rows `[n-k, n-1]` of every file block are the appended all-zero dummy rows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Fe, FieldMatrix, PrimeField};
use crate::mds::MdsCode;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Effective code parameters of an [N, K] storage code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct EffectiveParams {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    /// Subpacketization: data rows per file.
    pub lambda: usize,
}

impl EffectiveParams {
    /// Rows `0..lambda` hold data; the rest are dummy rows.
    pub fn is_data_row(&self, row: usize) -> bool {
        row < self.lambda
    }
}

pub fn effective_params(servers: usize, dimension: usize) -> Result<EffectiveParams> {
    if dimension == 0 || servers <= dimension {
        return Err(Error::InvalidParams(format!(
            "need N > K >= 1, got N={servers} K={dimension}"
        )));
    }
    let g = gcd(servers, dimension);
    let (n, k) = (servers / g, dimension / g);
    Ok(EffectiveParams {
        n,
        k,
        r: n - k,
        lambda: n - k,
    })
}

/// `M` independent files, each a `lambda x K` matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileSet {
    files: Vec<FieldMatrix>,
}

impl FileSet {
    pub fn new(files: Vec<FieldMatrix>) -> Result<Self> {
        let first = files
            .first()
            .ok_or_else(|| Error::InvalidParams("a file set needs at least one file".into()))?;
        let shape = (first.rows(), first.cols(), first.field());
        for f in &files {
            if (f.rows(), f.cols(), f.field()) != shape {
                return Err(Error::Dimension(
                    "all files must share shape and field".into(),
                ));
            }
        }
        Ok(Self { files })
    }

    pub fn zeros(field: PrimeField, count: usize, rows: usize, cols: usize) -> Result<Self> {
        Self::new(vec![FieldMatrix::zeros(field, rows, cols); count])
    }

    /// Uniformly random files from a seeded generator.
    pub fn random(field: PrimeField, count: usize, rows: usize, cols: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let files = (0..count)
            .map(|_| {
                let elems: Vec<Fe> = (0..rows * cols)
                    .map(|_| field.elem(rng.random_range(0..field.modulus()) as u64))
                    .collect();
                FieldMatrix::from_elems(rows, cols, &elems)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(files)
    }

    /// Parses files from plain text: one matrix row per line, space-separated
    /// residues, blank lines between files. `#` starts a comment line.
    pub fn from_text(text: &str, field: PrimeField) -> Result<Self> {
        let mut files = Vec::new();
        let mut current: Vec<Vec<u64>> = Vec::new();
        let flush = |current: &mut Vec<Vec<u64>>, files: &mut Vec<FieldMatrix>| -> Result<()> {
            if !current.is_empty() {
                files.push(FieldMatrix::from_rows(field, current)?);
                current.clear();
            }
            Ok(())
        };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.starts_with('#') {
                continue;
            }
            if line.is_empty() {
                flush(&mut current, &mut files)?;
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| {
                    let v: u64 = tok
                        .parse()
                        .map_err(|_| Error::Parse(format!("line {}: bad entry {tok:?}", lineno + 1)))?;
                    if v >= field.modulus() as u64 {
                        return Err(Error::Parse(format!(
                            "line {}: {v} is not a residue mod {}",
                            lineno + 1,
                            field.modulus()
                        )));
                    }
                    Ok(v)
                })
                .collect::<Result<Vec<_>>>()?;
            current.push(row);
        }
        flush(&mut current, &mut files)?;
        Self::new(files)
    }

    pub fn to_text(&self) -> String {
        self.files
            .iter()
            .map(|f| {
                (0..f.rows())
                    .map(|r| {
                        f.row(r)
                            .iter()
                            .map(|e| e.to_string())
                            .collect::<Vec<_>>()
                            .join(" ")
                    })
                    .collect::<Vec<_>>()
                    .join("\n")
            })
            .collect::<Vec<_>>()
            .join("\n\n")
            + "\n"
    }

    pub fn count(&self) -> usize {
        self.files.len()
    }

    /// File `m`, 1-based.
    pub fn file(&self, m: usize) -> Result<&FieldMatrix> {
        if m == 0 || m > self.files.len() {
            return Err(Error::OutOfRange {
                what: "file index",
                value: m,
                lo: 1,
                hi: self.files.len(),
            });
        }
        Ok(&self.files[m - 1])
    }

    pub fn files(&self) -> &[FieldMatrix] {
        &self.files
    }
}

/// The stacked column `X_j` held by one server: `M` blocks of `n` symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ServerColumn {
    server: usize,
    block: usize,
    symbols: Vec<Fe>,
}

impl ServerColumn {
    pub fn server(&self) -> usize {
        self.server
    }

    pub fn height(&self) -> usize {
        self.symbols.len()
    }

    pub fn files(&self) -> usize {
        self.symbols.len() / self.block
    }

    /// `X^(m)_{row, j}` with `m` 1-based and `row` 0-based.
    pub fn symbol(&self, m: usize, row: usize) -> Fe {
        self.symbols[(m - 1) * self.block + row]
    }

    pub fn symbols(&self) -> &[Fe] {
        &self.symbols
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedStorage {
    code: MdsCode,
    params: EffectiveParams,
    columns: Vec<ServerColumn>,
}

pub fn encode_storage(files: &FileSet, code: &MdsCode) -> Result<EncodedStorage> {
    let params = effective_params(code.length(), code.dimension())?;
    let first = &files.files()[0];
    if first.rows() != params.lambda || first.cols() != code.dimension() {
        return Err(Error::Dimension(format!(
            "files are {}x{}, the code needs {}x{}",
            first.rows(),
            first.cols(),
            params.lambda,
            code.dimension()
        )));
    }
    if first.field() != code.field() {
        return Err(Error::FieldMismatch {
            left: code.field().modulus(),
            right: first.field().modulus(),
        });
    }
    let field = code.field();
    let block = params.n;
    let mut columns: Vec<ServerColumn> = (1..=code.length())
        .map(|j| ServerColumn {
            server: j,
            block,
            symbols: vec![field.zero(); files.count() * block],
        })
        .collect();
    for (mi, file) in files.files().iter().enumerate() {
        for i in 0..params.lambda {
            let codeword = code.encode_row(&file.row(i))?;
            for (col, sym) in columns.iter_mut().zip(codeword) {
                col.symbols[mi * block + i] = sym;
            }
        }
    }
    Ok(EncodedStorage {
        code: code.clone(),
        params,
        columns,
    })
}

impl EncodedStorage {
    pub fn code(&self) -> &MdsCode {
        &self.code
    }

    pub fn params(&self) -> EffectiveParams {
        self.params
    }

    pub fn servers(&self) -> usize {
        self.columns.len()
    }

    pub fn files(&self) -> usize {
        self.columns[0].files()
    }

    /// Column `X_j` of server `j`, 1-based.
    pub fn server_column(&self, j: usize) -> Result<&ServerColumn> {
        if j == 0 || j > self.columns.len() {
            return Err(Error::OutOfRange {
                what: "server index",
                value: j,
                lo: 1,
                hi: self.columns.len(),
            });
        }
        Ok(&self.columns[j - 1])
    }

    pub fn columns(&self) -> &[ServerColumn] {
        &self.columns
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mds::make_rs_code;
    use itertools::Itertools;

    #[test]
    fn effective_parameter_examples() {
        let p = effective_params(3, 2).unwrap();
        assert_eq!((p.n, p.k, p.r, p.lambda), (3, 2, 1, 1));
        let p = effective_params(4, 2).unwrap();
        assert_eq!((p.n, p.k, p.r, p.lambda), (2, 1, 1, 1));
        let p = effective_params(5, 3).unwrap();
        assert_eq!((p.n, p.k, p.r, p.lambda), (5, 3, 2, 2));
        assert!(effective_params(2, 2).is_err());
        assert!(effective_params(2, 3).is_err());
    }

    #[test]
    fn zero_files_give_zero_columns() {
        let f = PrimeField::new(3).unwrap();
        let code = make_rs_code(3, 2, f).unwrap();
        let files = FileSet::zeros(f, 2, 1, 2).unwrap();
        let st = encode_storage(&files, &code).unwrap();
        let col = st.server_column(1).unwrap();
        assert!(col.symbols().iter().all(Fe::is_zero));
        assert!(st.server_column(4).is_err());
        assert!(st.server_column(0).is_err());
    }

    #[test]
    fn block_layout_for_2_3_2() {
        let f = PrimeField::new(3).unwrap();
        let code = make_rs_code(3, 2, f).unwrap();
        let files = FileSet::random(f, 2, 1, 2, 7).unwrap();
        let st = encode_storage(&files, &code).unwrap();
        for col in st.columns() {
            // 1 data row + 2 dummy rows per file.
            assert_eq!(col.height(), 2 * 3);
            for m in 1..=2 {
                assert!(col.symbol(m, 1).is_zero());
                assert!(col.symbol(m, 2).is_zero());
            }
        }
    }

    #[test]
    fn any_k_servers_recover_every_file() {
        let f = PrimeField::new(5).unwrap();
        let code = make_rs_code(5, 3, f).unwrap();
        let p = effective_params(5, 3).unwrap();
        let files = FileSet::random(f, 3, p.lambda, 3, 11).unwrap();
        let st = encode_storage(&files, &code).unwrap();
        for servers in (1..=5).combinations(3) {
            for m in 1..=3 {
                for i in 0..p.lambda {
                    let positions: Vec<usize> = servers.iter().map(|j| j - 1).collect();
                    let symbols: Vec<Fe> = servers
                        .iter()
                        .map(|&j| st.server_column(j).unwrap().symbol(m, i))
                        .collect();
                    let w = code.decode_erasures(&positions, &symbols).unwrap();
                    assert_eq!(w, files.file(m).unwrap().row(i));
                }
            }
        }
    }

    #[test]
    fn wrong_file_shape_is_rejected() {
        let f = PrimeField::new(5).unwrap();
        let code = make_rs_code(5, 3, f).unwrap();
        let files = FileSet::zeros(f, 2, 1, 3).unwrap();
        assert!(matches!(encode_storage(&files, &code), Err(Error::Dimension(_))));
    }

    #[test]
    fn text_round_trip() {
        let f = PrimeField::new(5).unwrap();
        let files = FileSet::random(f, 3, 2, 3, 1).unwrap();
        let text = files.to_text();
        assert_eq!(FileSet::from_text(&text, f).unwrap(), files);
        assert!(FileSet::from_text("1 2\n7 1\n", f).is_err());
        assert!(FileSet::from_text("1 2\n1\n", f).is_err());
        assert!(FileSet::from_text("# only a comment\n", f).is_err());
    }
}
