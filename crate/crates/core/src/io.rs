//! Snapshot, diagnostics and manifest files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evolve::{DiagnosticsRow, RunOutput, Termination};
use crate::spectral::{Field, Grid};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"MSKT";
pub const SNAPSHOT_VERSION: u32 = 1;

pub const DIAGNOSTICS_HEADER: [&str; 10] = [
    "t",
    "hs_norm",
    "l2_norm",
    "hs32_norm",
    "zs_norm",
    "dist_vertical",
    "dist_euclidean",
    "energy",
    "dt",
    "rhs_norm",
];

/// Layout: magic, u32 version, u32 d, u32 n per axis, f64 period per axis,
/// f64 t, then the samples in row-major order. All little-endian.
pub fn encode_snapshot(t: f64, eta: &Field) -> Vec<u8> {
    let g = eta.grid();
    let mut out = Vec::with_capacity(32 + 8 * g.len());
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    for &n in &g.n()[..g.dim()] {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for &p in &g.periods()[..g.dim()] {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out.extend_from_slice(&t.to_le_bytes());
    for v in eta.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let buf = self.buf;
        if buf.len() - self.pos < n {
            return Err(Error::Format(format!("truncated while reading {what}")));
        }
        let s = &buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4, what)?.try_into().expect("4 bytes"),
        ))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8, what)?.try_into().expect("8 bytes"),
        ))
    }
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<(f64, Field)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "magic")? != SNAPSHOT_MAGIC {
        return Err(Error::Format("bad magic, not a snapshot file".into()));
    }
    let version = r.u32("version")?;
    if version > SNAPSHOT_VERSION {
        return Err(Error::Format(format!(
            "format version {version} is newer than supported version {SNAPSHOT_VERSION}; upgrade muskat to read it"
        )));
    }
    if version == 0 {
        return Err(Error::Format("format version 0 is invalid".into()));
    }
    let d = r.u32("dimension")? as usize;
    if !(1..=2).contains(&d) {
        return Err(Error::Format(format!("dimension {d} is not 1 or 2")));
    }
    let mut n = Vec::with_capacity(d);
    for _ in 0..d {
        n.push(r.u32("shape")? as usize);
    }
    let mut periods = Vec::with_capacity(d);
    for _ in 0..d {
        periods.push(r.f64("periods")?);
    }
    let t = r.f64("time")?;
    let grid =
        Grid::new(&periods, &n).map_err(|e| Error::Format(format!("invalid header: {e}")))?;
    let len = grid.len();
    let payload = r.take(8 * len, "samples")?;
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let eta = Field::new(&grid, values).map_err(|e| Error::Format(e.to_string()))?;
    if !t.is_finite() {
        return Err(Error::Format("non-finite time".into()));
    }
    Ok((t, eta))
}

pub fn emit_snapshot(t: f64, eta: &Field, path: &Path) -> Result<()> {
    fs::write(path, encode_snapshot(t, eta))?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<(f64, Field)> {
    decode_snapshot(&fs::read(path)?)
}

pub fn emit_diagnostics(rows: &[DiagnosticsRow], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(DIAGNOSTICS_HEADER).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

pub fn load_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRow>> {
    #[derive(Deserialize)]
    struct Row {
        t: f64,
        hs_norm: f64,
        l2_norm: f64,
        hs32_norm: f64,
        zs_norm: f64,
        dist_vertical: f64,
        dist_euclidean: f64,
        energy: f64,
        dt: f64,
        rhs_norm: f64,
    }
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize::<Row>()
        .map(|row| {
            let x = row.map_err(csv_err)?;
            Ok(DiagnosticsRow {
                t: x.t,
                hs_norm: x.hs_norm,
                l2_norm: x.l2_norm,
                hs32_norm: x.hs32_norm,
                zs_norm: x.zs_norm,
                dist_vertical: x.dist_vertical,
                dist_euclidean: x.dist_euclidean,
                energy: x.energy,
                dt: x.dt,
                rhs_norm: x.rhs_norm,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the run directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub code_version: String,
    pub config: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub termination: serde_json::Value,
    pub steps: usize,
    pub rejected_steps: usize,
    pub files: Vec<FileEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn file_entry(dir: &Path, rel: &str) -> Result<FileEntry> {
    let bytes = fs::read(dir.join(rel))?;
    Ok(FileEntry {
        path: rel.to_string(),
        bytes: bytes.len() as u64,
        sha256: sha256_hex(&bytes),
    })
}

impl RunManifest {
    pub fn new(
        config: String,
        termination: &Termination,
        steps: usize,
        rejected_steps: usize,
        started_unix: f64,
    ) -> RunManifest {
        RunManifest {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            started_unix,
            finished_unix: unix_now(),
            termination: serde_json::to_value(termination).expect("termination serializes"),
            steps,
            rejected_steps,
            files: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_NAME);
        let mut f = fs::File::create(&path)?;
        f.write_all(
            serde_json::to_string_pretty(self)
                .expect("manifest serializes")
                .as_bytes(),
        )?;
        f.write_all(b"\n")?;
        Ok(path)
    }

    pub fn load(dir: &Path) -> Result<RunManifest> {
        let text = fs::read_to_string(dir.join(MANIFEST_NAME))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("manifest: {e}")))
    }

    /// Paths whose size or checksum no longer match the index.
    pub fn stale_files(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for e in &self.files {
            match file_entry(dir, &e.path) {
                Ok(now) if now == *e => {}
                _ => bad.push(e.path.clone()),
            }
        }
        Ok(bad)
    }
}

pub const CONFIG_NAME: &str = "config.toml";
pub const DIAGNOSTICS_NAME: &str = "diagnostics.csv";

pub fn snapshot_name(index: usize) -> String {
    format!("snapshot_{index:06}.bin")
}

/// Writes the config echo, snapshots and diagnostics of a finished run into
/// `dir` (created if needed) and indexes them in the manifest.
pub fn write_run(
    dir: &Path,
    config_toml: &str,
    out: &RunOutput,
    started_unix: f64,
) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    let mut names = vec![CONFIG_NAME.to_string()];
    fs::write(dir.join(CONFIG_NAME), config_toml)?;
    for (i, (t, eta)) in out.snapshots.iter().enumerate() {
        let name = snapshot_name(i);
        emit_snapshot(*t, eta, &dir.join(&name))?;
        names.push(name);
    }
    emit_diagnostics(&out.diagnostics, &dir.join(DIAGNOSTICS_NAME))?;
    names.push(DIAGNOSTICS_NAME.to_string());
    let mut m = RunManifest::new(
        config_toml.to_string(),
        &out.termination,
        out.steps,
        out.rejected_steps,
        started_unix,
    );
    for n in &names {
        m.files.push(file_entry(dir, n)?);
    }
    m.write(dir)?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Field {
        let g = Grid::new(&[2.0, 3.0], &[8, 16]).unwrap();
        Field::from_fn(&g, |x| (x[0] * 3.1).sin() * x[1]).unwrap()
    }

    #[test]
    fn snapshot_roundtrip_is_exact() {
        let eta = sample();
        let (t, back) = decode_snapshot(&encode_snapshot(0.125, &eta)).unwrap();
        assert_eq!(t, 0.125);
        assert_eq!(back.values(), eta.values());
        assert_eq!(back.grid().periods(), eta.grid().periods());
    }

    #[test]
    fn snapshot_header_checks() {
        let good = encode_snapshot(0.0, &sample());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_snapshot(&bad), Err(Error::Format(m)) if m.contains("magic")));
        let mut future = good.clone();
        future[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(decode_snapshot(&future), Err(Error::Format(m)) if m.contains("upgrade")));
        assert!(
            matches!(decode_snapshot(&good[..good.len() - 3]), Err(Error::Format(m)) if m.contains("truncated"))
        );
        assert!(decode_snapshot(&good[..10]).is_err());
    }

    #[test]
    fn empty_diagnostics_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        emit_diagnostics(&[], &p).unwrap();
        assert_eq!(
            fs::read_to_string(&p).unwrap().trim(),
            DIAGNOSTICS_HEADER.join(",")
        );
        assert!(load_diagnostics(&p).unwrap().is_empty());
    }

    #[test]
    fn manifest_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.bin"), b"abc").unwrap();
        let mut m = RunManifest::new(String::new(), &Termination::Completed, 0, 0, 0.0);
        m.files.push(file_entry(dir.path(), "a.bin").unwrap());
        assert_eq!(
            m.files[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        m.write(dir.path()).unwrap();
        let back = RunManifest::load(dir.path()).unwrap();
        assert!(back.stale_files(dir.path()).unwrap().is_empty());
        fs::write(dir.path().join("a.bin"), b"abd").unwrap();
        assert_eq!(
            back.stale_files(dir.path()).unwrap(),
            vec!["a.bin".to_string()]
        );
    }
}
