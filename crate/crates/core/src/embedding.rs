//! Dense row-major embedding matrix and its on-disk formats.
//!
//! Text: a `"<n> <d>"` header, then `"<node-id> <f1> ... <fd>"` per node, with
//! values printed in shortest round-trip form. Binary: little-endian `u32` n,
//! `u32` d, then `n * d` little-endian `f32` values row by row.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::seed::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmbeddingFormat {
    #[default]
    Text,
    Binary,
}

impl EmbeddingMatrix {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        EmbeddingMatrix {
            rows,
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    pub fn from_vec(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::DimensionMismatch {
                expected: rows * dim,
                actual: data.len(),
            });
        }
        Ok(EmbeddingMatrix { rows, dim, data })
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(EmbeddingMatrix {
            rows: rows.len(),
            dim,
            data,
        })
    }

    /// Entries drawn uniformly from `[-scale, scale)`.
    pub fn random_uniform(rows: usize, dim: usize, scale: f32, rng: &mut Rng) -> Self {
        let data = (0..rows * dim)
            .map(|_| (rng.random::<f32>() * 2.0 - 1.0) * scale)
            .collect();
        EmbeddingMatrix { rows, dim, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn write(&self, path: impl AsRef<Path>, format: EmbeddingFormat) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let res = match format {
            EmbeddingFormat::Text => self.write_text_to(&mut out),
            EmbeddingFormat::Binary => self.write_binary_to(&mut out),
        };
        res.and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
    }

    pub fn write_text_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.rows, self.dim)?;
        for i in 0..self.rows {
            write!(out, "{i}")?;
            for x in self.row(i) {
                write!(out, " {x}")?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_binary_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let too_big = |what| std::io::Error::new(std::io::ErrorKind::InvalidInput, format!("{what} exceeds u32"));
        let rows = u32::try_from(self.rows).map_err(|_| too_big("row count"))?;
        let dim = u32::try_from(self.dim).map_err(|_| too_big("dimension"))?;
        out.write_all(&rows.to_le_bytes())?;
        out.write_all(&dim.to_le_bytes())?;
        for x in &self.data {
            out.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>, format: EmbeddingFormat) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        match format {
            EmbeddingFormat::Text => Self::read_text_from(reader, path),
            EmbeddingFormat::Binary => Self::read_binary_from(reader, path),
        }
    }

    /// Rows may appear in any order but every id in `0..n` must appear once.
    pub fn read_text_from<R: BufRead>(reader: R, path: &Path) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let (rows, dim) = loop {
            let Some((idx, line)) = lines.next() else {
                return Err(Error::parse(path, 1, "missing \"<n> <d>\" header"));
            };
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(n)), Some(Ok(d)), None) => break (n, d),
                _ => return Err(Error::parse(path, idx + 1, "expected header \"<n> <d>\"")),
            }
        };
        let mut data = vec![0f32; rows * dim];
        let mut seen = vec![false; rows];
        for (idx, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let mut toks = line.split_whitespace();
            let id: usize = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(path, lineno, "invalid node id"))?;
            if id >= rows {
                return Err(Error::parse(path, lineno, format!("node id {id} >= declared row count {rows}")));
            }
            if std::mem::replace(&mut seen[id], true) {
                return Err(Error::parse(path, lineno, format!("duplicate row for node {id}")));
            }
            let row = &mut data[id * dim..(id + 1) * dim];
            let mut count = 0;
            for tok in toks {
                if count == dim {
                    return Err(Error::parse(path, lineno, format!("more than {dim} values")));
                }
                row[count] = tok
                    .parse()
                    .map_err(|_| Error::parse(path, lineno, format!("invalid value {tok:?}")))?;
                count += 1;
            }
            if count != dim {
                return Err(Error::parse(path, lineno, format!("expected {dim} values, found {count}")));
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::parse(path, 0, format!("no row for node {missing}")));
        }
        Ok(EmbeddingMatrix { rows, dim, data })
    }

    pub fn read_binary_from<R: Read>(mut reader: R, path: &Path) -> Result<Self> {
        let mut header = [0u8; 8];
        reader.read_exact(&mut header).map_err(|e| Error::io(path, e))?;
        let rows = u32::from_le_bytes(header[..4].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(header[4..].try_into().unwrap()) as usize;
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
        if bytes.len() != rows * dim * 4 {
            return Err(Error::parse(
                path,
                0,
                format!("expected {} payload bytes, found {}", rows * dim * 4, bytes.len()),
            ));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(EmbeddingMatrix { rows, dim, data })
    }
}

#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0f64, 0f64, 0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        ab / (aa.sqrt() * bb.sqrt())
    }
}
