//! On-disk formats: chunked binary arrays with JSON sidecars, and CSV.
//!
//! A history file holds `n_steps` rows of `n_dofs` little-endian `f64`,
//! written in chunks of at most [`CHUNK_ROWS`] rows, each chunk prefixed by
//! its row count. A decomposition file holds, per mode, `ζ`, the `N_τ × N_d`
//! small-time functions and every large-time function.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::pgd::{Decomposition, Mode};
use crate::time::TimeGrid;

pub const HISTORY_MAGIC: &[u8; 8] = b"MTPGDH\x00\x01";
pub const DECOMP_MAGIC: &[u8; 8] = b"MTPGDD\x00\x01";
pub const CHUNK_ROWS: usize = 1024;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}: not a {kind} file")]
    Magic { path: String, kind: &'static str },
    #[error("{path}: truncated or inconsistent contents")]
    Corrupt { path: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn put_u64(w: &mut impl Write, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_f64s(w: &mut impl Write, v: &[f64]) -> std::io::Result<()> {
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
    path: String,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N], IoError> {
        let mut b = [0u8; N];
        self.inner.read_exact(&mut b).map_err(|_| IoError::Corrupt { path: self.path.clone() })?;
        Ok(b)
    }

    fn u64(&mut self) -> Result<u64, IoError> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn count(&mut self, limit: u64) -> Result<usize, IoError> {
        let v = self.u64()?;
        if v > limit {
            return Err(IoError::Corrupt { path: self.path.clone() });
        }
        Ok(v as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, IoError> {
        (0..n).map(|_| Ok(f64::from_le_bytes(self.bytes()?))).collect()
    }

    fn end(&mut self) -> Result<(), IoError> {
        let mut b = [0u8; 1];
        match self.inner.read(&mut b)? {
            0 => Ok(()),
            _ => Err(IoError::Corrupt { path: self.path.clone() }),
        }
    }
}

fn open(path: &Path, magic: &[u8; 8], kind: &'static str) -> Result<Reader<BufReader<File>>, IoError> {
    let mut r = Reader { inner: BufReader::new(File::open(path)?), path: path.display().to_string() };
    let m: [u8; 8] = r.bytes().map_err(|_| IoError::Magic { path: r.path.clone(), kind })?;
    if &m != magic {
        return Err(IoError::Magic { path: r.path.clone(), kind });
    }
    Ok(r)
}

const LIMIT: u64 = 1 << 32;

pub fn write_history(path: &Path, rows: &[Vec<f64>]) -> Result<(), IoError> {
    let n_dofs = rows.first().map_or(0, Vec::len);
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(HISTORY_MAGIC)?;
    put_u64(&mut w, n_dofs as u64)?;
    put_u64(&mut w, rows.len() as u64)?;
    for chunk in rows.chunks(CHUNK_ROWS) {
        put_u64(&mut w, chunk.len() as u64)?;
        for r in chunk {
            assert_eq!(r.len(), n_dofs, "history rows must share one length");
            put_f64s(&mut w, r)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_history(path: &Path) -> Result<Vec<Vec<f64>>, IoError> {
    let mut r = open(path, HISTORY_MAGIC, "history")?;
    let n_dofs = r.count(LIMIT)?;
    let n_steps = r.count(LIMIT)?;
    let mut rows = Vec::with_capacity(n_steps.min(1 << 20));
    while rows.len() < n_steps {
        let k = r.count(CHUNK_ROWS as u64)?;
        if k == 0 || rows.len() + k > n_steps {
            return Err(IoError::Corrupt { path: r.path.clone() });
        }
        for _ in 0..k {
            rows.push(r.f64s(n_dofs)?);
        }
    }
    r.end()?;
    Ok(rows)
}

pub fn write_decomposition(path: &Path, d: &Decomposition<f64>) -> Result<(), IoError> {
    let g = &d.grid;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(DECOMP_MAGIC)?;
    put_u64(&mut w, g.n_tau as u64)?;
    put_f64s(&mut w, &[g.period])?;
    put_u64(&mut w, g.scales.len() as u64)?;
    for &s in &g.scales {
        put_u64(&mut w, s as u64)?;
    }
    put_u64(&mut w, d.n_dofs as u64)?;
    put_u64(&mut w, d.modes.len() as u64)?;
    for m in &d.modes {
        put_f64s(&mut w, &[m.zeta])?;
        for p in &m.phi {
            put_f64s(&mut w, p)?;
        }
        for t in &m.theta {
            put_f64s(&mut w, t)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_decomposition(path: &Path) -> Result<Decomposition<f64>, IoError> {
    let mut r = open(path, DECOMP_MAGIC, "decomposition")?;
    let n_tau = r.count(LIMIT)?;
    let period = r.f64s(1)?[0];
    let n_scales = r.count(64)?;
    let scales = (0..n_scales).map(|_| r.count(LIMIT)).collect::<Result<Vec<_>, _>>()?;
    let grid = TimeGrid::new(n_tau, scales.clone(), period).map_err(|_| IoError::Corrupt { path: r.path.clone() })?;
    let n_dofs = r.count(LIMIT)?;
    let n_modes = r.count(1 << 16)?;
    let mut d = Decomposition::new(grid, n_dofs);
    for _ in 0..n_modes {
        let zeta = r.f64s(1)?[0];
        let phi = (0..n_tau).map(|_| r.f64s(n_dofs)).collect::<Result<Vec<_>, _>>()?;
        let theta = scales.iter().map(|&s| r.f64s(s)).collect::<Result<Vec<_>, _>>()?;
        d.modes.push(Mode { phi, theta, zeta });
    }
    r.end()?;
    Ok(d)
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// RFC 4180 CSV with a header row.
pub fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|&v| if v.fract() == 0.0 && v.abs() < 1e15 { format!("{v}") } else { format!("{v:e}") }))?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `ζ` and every large-time function, one row per mode and index.
pub fn write_decomposition_csv(dir: &Path, d: &Decomposition<f64>) -> Result<(), IoError> {
    let header = vec!["mode".to_string(), "zeta".to_string()];
    write_csv(&dir.join("zeta.csv"), &header, d.modes.iter().enumerate().map(|(i, m)| vec![(i + 1) as f64, m.zeta]))?;
    let header: Vec<String> = ["mode", "scale", "index", "theta"].iter().map(|s| s.to_string()).collect();
    let rows = d.modes.iter().enumerate().flat_map(|(i, m)| {
        m.theta.iter().enumerate().flat_map(move |(j, t)| {
            t.iter().enumerate().map(move |(n, &v)| vec![(i + 1) as f64, (j + 1) as f64, (n + 1) as f64, v])
        })
    });
    write_csv(&dir.join("theta.csv"), &header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_round_trip_across_chunks() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.bin");
        let rows: Vec<Vec<f64>> = (0..2500).map(|n| vec![n as f64, -0.5 * n as f64, 1e-300]).collect();
        write_history(&p, &rows).unwrap();
        assert_eq!(read_history(&p).unwrap(), rows);
    }

    #[test]
    fn decomposition_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.bin");
        let mut d = Decomposition::new(TimeGrid::new(3, vec![2, 3], 0.5).unwrap(), 2);
        d.modes.push(Mode { phi: vec![vec![1.0, 2.0]; 3], theta: vec![vec![0.1, 0.2], vec![0.3, 0.4, 0.5]], zeta: 7.0 });
        write_decomposition(&p, &d).unwrap();
        assert_eq!(read_decomposition(&p).unwrap(), d);
        assert!(matches!(read_history(&p), Err(IoError::Magic { .. })));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.bin");
        write_history(&p, &[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_history(&p), Err(IoError::Corrupt { .. })));
    }
}
