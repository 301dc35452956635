//! Field files, trajectory and enhanced-noise bundles, and CSV/JSON emitters.
//!
//! Field files (`.pcf`): the 4-byte magic `PCF1`, the grid size `n` as a
//! little-endian u32 and 8 reserved zero bytes, then the `n^2` point values as
//! little-endian f64 in row-major order (`x1` fastest).

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpam::LedgerRow;
use crate::heat::Trajectory;
use crate::noise::EnhancedNoise;
use crate::spectral::{Grid, RealField};

const MAGIC: &[u8; 4] = b"PCF1";
const HEADER: usize = 16;

pub fn encode_field(f: &RealField) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + 8 * f.values().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(f.grid().n() as u32).to_le_bytes());
    out.extend_from_slice(&[0u8; 8]);
    for v in f.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<RealField> {
    if bytes.len() < HEADER || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing PCF1 header".into()));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let grid = Grid::new(n)?;
    let body = &bytes[HEADER..];
    if body.len() != 8 * grid.len() {
        return Err(Error::Format(format!("expected {} values for n = {n}, found {} bytes", grid.len(), body.len())));
    }
    let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    RealField::from_values(&grid, values)
}

pub fn write_field(path: &Path, f: &RealField) -> Result<()> {
    Ok(fs::write(path, encode_field(f))?)
}

pub fn read_field(path: &Path) -> Result<RealField> {
    decode_field(&fs::read(path)?)
}

/// CSV with columns `x_index,y_index,value`; values in shortest round-trip form.
pub fn write_field_csv(path: &Path, f: &RealField) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x_index", "y_index", "value"])?;
    let n = f.grid().n();
    for (idx, v) in f.values().iter().enumerate() {
        w.write_record([(idx % n).to_string(), (idx / n).to_string(), format!("{v:?}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(fs::write(path, s)?)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Serialize rows with a header; an empty slice yields the header alone.
pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    Ok(fs::create_dir_all(dir)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub n: usize,
    pub dt: Option<f64>,
    pub gamma: Option<f64>,
    pub times: Vec<f64>,
    pub files: Vec<String>,
}

/// Directory of `field_XXXXX.pcf` files plus `manifest.json`.
pub fn write_trajectory(dir: &Path, traj: &Trajectory, dt: Option<f64>, gamma: Option<f64>) -> Result<TrajectoryManifest> {
    ensure_dir(dir)?;
    let mut files = Vec::with_capacity(traj.len());
    for (i, f) in traj.fields().iter().enumerate() {
        let name = format!("field_{i:05}.pcf");
        write_field(&dir.join(&name), f)?;
        files.push(name);
    }
    let m = TrajectoryManifest { n: traj.grid().n(), dt, gamma, times: traj.times().to_vec(), files };
    write_json(&dir.join("manifest.json"), &m)?;
    Ok(m)
}

pub fn read_trajectory(dir: &Path) -> Result<(Trajectory, TrajectoryManifest)> {
    let m: TrajectoryManifest = read_json(&dir.join("manifest.json"))?;
    if m.files.len() != m.times.len() {
        return Err(Error::Format("manifest lists different numbers of times and files".into()));
    }
    let fields = m.files.iter().map(|f| read_field(&dir.join(f))).collect::<Result<Vec<_>>>()?;
    if let Some(f) = fields.iter().find(|f| f.grid().n() != m.n) {
        return Err(Error::GridMismatch(m.n, f.grid().n()));
    }
    Ok((Trajectory::new(m.times.clone(), fields)?, m))
}

/// Convention of the stored noise, recorded in every bundle.
pub const NORMALIZATION: &str = "eta_hat(k) = FFT(eta)(k) / n^2 on x in [0, 2pi)^2; white noise has \
E|eta_hat(k)|^2 = 1 / (2 pi)^2 for k != 0 and no mean or Nyquist modes; c_n(t) = E[I(eta_n)(t) o eta_n]";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnhancedManifest {
    pub seed: u64,
    pub n: usize,
    pub level: String,
    pub kappa: f64,
    pub eta_file: String,
    pub times: Vec<f64>,
    pub c_n: Vec<f64>,
    pub resonant_files: Vec<String>,
    pub normalization: String,
}

/// `eta.pcf`, one `resonant_XXXXX.pcf` holding `I(eta_n)(t) o eta_n - c_n(t)`
/// per time, and `manifest.json`.
pub fn write_enhanced(dir: &Path, enh: &EnhancedNoise, times: &[f64]) -> Result<EnhancedManifest> {
    ensure_dir(dir)?;
    write_field(&dir.join("eta.pcf"), &enh.eta)?;
    let mut files = Vec::with_capacity(times.len());
    let mut c_n = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        let name = format!("resonant_{i:05}.pcf");
        write_field(&dir.join(&name), &enh.resonant_at(t)?)?;
        files.push(name);
        c_n.push(enh.c(t));
    }
    let m = EnhancedManifest {
        seed: enh.seed,
        n: enh.eta.grid().n(),
        level: enh.level.to_string(),
        kappa: enh.kappa,
        eta_file: "eta.pcf".into(),
        times: times.to_vec(),
        c_n,
        resonant_files: files,
        normalization: NORMALIZATION.into(),
    };
    write_json(&dir.join("manifest.json"), &m)?;
    Ok(m)
}

/// Row of a norm report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub quantity: String,
    pub alpha: f64,
    pub gamma: f64,
    pub value: f64,
    pub grid_n: usize,
    pub seed: u64,
}

pub fn write_norm_report(path: &Path, rows: &[NormRow]) -> Result<()> {
    write_csv(path, &["quantity", "alpha", "gamma", "value", "grid_n", "seed"], rows)
}

/// Ledger CSV `time,norm,value,margin`; rows without a margin leave it empty.
pub fn write_ledger(path: &Path, rows: &[LedgerRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time", "norm", "value", "margin"])?;
    for r in rows {
        let margin = r.margin.map(|m| format!("{m:?}")).unwrap_or_default();
        w.write_record([format!("{:?}", r.time), r.norm.clone(), format!("{:?}", r.value), margin])?;
    }
    w.flush()?;
    Ok(())
}

/// Write raw text, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::littlewood_paley::DyadicPartition;
    use crate::noise::{enhance, sample_white_noise, NoiseLevel};

    fn field(n: usize) -> RealField {
        let g = Grid::new(n).unwrap();
        RealField::from_fn(&g, |x, y| (x + 2.0 * y).sin() + 0.25 * (3.0 * x).cos())
    }

    #[test]
    fn field_roundtrip_is_bit_exact() {
        let f = field(16);
        let bytes = encode_field(&f);
        assert_eq!(bytes.len(), 16 + 8 * 256);
        assert_eq!(&bytes[..4], b"PCF1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 16);
        assert!(bytes[8..16].iter().all(|&b| b == 0));
        let g = decode_field(&bytes).unwrap();
        assert!(f.values().iter().zip(g.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn rejects_bad_files() {
        let mut bytes = encode_field(&field(8));
        assert!(decode_field(&bytes[..10]).is_err());
        bytes.pop();
        assert!(decode_field(&bytes).is_err());
        bytes[0] = b'X';
        assert!(matches!(decode_field(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn csv_export_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let f = field(8);
        write_field_csv(&path, &f).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x_index,y_index,value");
        assert_eq!(lines.len(), 65);
        assert_eq!(lines[2], format!("1,0,{:?}", f.values()[1]));
    }

    #[test]
    fn trajectory_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let f = field(8);
        let traj = Trajectory::from_fn(vec![0.0, 0.5, 1.0], |t| f.scale(1.0 + t)).unwrap();
        write_trajectory(dir.path(), &traj, Some(0.5), Some(0.2)).unwrap();
        let (back, m) = read_trajectory(dir.path()).unwrap();
        assert_eq!(m.dt, Some(0.5));
        assert_eq!(back.times(), traj.times());
        assert_eq!(back.sup_distance(&traj).unwrap(), 0.0);
    }

    #[test]
    fn enhanced_bundle_lists_counterterms() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(32).unwrap();
        let p = DyadicPartition::sharp(&g);
        let enh = enhance(&p, &sample_white_noise(&g, 5), NoiseLevel::Level(1), 0.1).unwrap();
        let m = write_enhanced(dir.path(), &enh, &[0.5, 1.0]).unwrap();
        assert_eq!(m.c_n, vec![enh.c(0.5), enh.c(1.0)]);
        let r = read_field(&dir.path().join(&m.resonant_files[1])).unwrap();
        assert_eq!(r.max_diff(&enh.resonant_at(1.0).unwrap()).unwrap(), 0.0);
        let back: EnhancedManifest = read_json(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn empty_rows_give_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("n.csv");
        write_norm_report(&path, &[]).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "quantity,alpha,gamma,value,grid_n,seed\n");
    }
}
