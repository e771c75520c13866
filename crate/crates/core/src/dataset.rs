//! Latent point sets and the plain-text CSV formats used to exchange them.
//!
//! Latent CSV:
//!
//! ```text
//! # pfbi-latents v1 dim=<d>
//! x_1,...,x_d
//! ...
//! ```
//!
//! Path CSV has the same header with `pfbi-paths`, a leading `t` column and
//! one `# path <i>` comment line before each path block.
//!
//! Numbers are written with Rust's shortest round-trip `f64` formatting, so
//! parse -> write -> parse is the identity.

use std::fmt::Write as _;
use std::path::Path as FsPath;

use crate::bridge::{LatentPoint, Path};
use crate::error::{Error, Result};
use crate::kernel::TimeGrid;

const LATENT_MAGIC: &str = "# pfbi-latents v1";
const PATH_MAGIC: &str = "# pfbi-paths v1";

/// Empirical set of encoded data points.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentDataset {
    dim: usize,
    points: Vec<LatentPoint>,
}

impl LatentDataset {
    pub fn new(points: Vec<LatentPoint>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyDataset)?;
        let dim = first.dim();
        if dim == 0 {
            return Err(Error::invalid("latent dimension must be at least 1"));
        }
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("dataset contains non-finite coordinates"));
        }
        Ok(LatentDataset { dim, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[LatentPoint] {
        &self.points
    }

    pub fn get(&self, i: usize) -> Option<&LatentPoint> {
        self.points.get(i)
    }

    /// Euclidean distance from `z` to the closest dataset point, by exhaustive scan.
    pub fn nearest_distance(&self, z: &[f64]) -> f64 {
        self.points
            .iter()
            .map(|p| p.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    /// Index of the dataset point farthest from point `i`.
    pub fn farthest_from(&self, i: usize) -> usize {
        let z = &self.points[i];
        let mut best = (i, -1.0);
        for (j, p) in self.points.iter().enumerate() {
            let d = z.distance(p);
            if d > best.1 {
                best = (j, d);
            }
        }
        best.0
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{LATENT_MAGIC} dim={}\n", self.dim);
        for p in &self.points {
            write_row(&mut out, None, p);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
        let dim = parse_header(header, LATENT_MAGIC, 1)?;
        let mut points = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = parse_row(line, i + 1)?;
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
            }
            points.push(LatentPoint::new(row));
        }
        LatentDataset::new(points)
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<()> {
        write_file(path.as_ref(), &self.to_csv())
    }
}

pub(crate) fn write_file(path: &FsPath, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Shortest round-trip text for `v`; exponent form outside `[1e-5, 1e16)`.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !v.is_finite() || (1e-5..1e16).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn write_row(out: &mut String, t: Option<f64>, p: &[f64]) {
    let mut first = true;
    for v in t.iter().chain(p.iter()) {
        if !first {
            out.push(',');
        }
        first = false;
        out.push_str(&fmt_num(*v));
    }
    out.push('\n');
}

fn parse_header(line: &str, magic: &str, lineno: usize) -> Result<usize> {
    let rest = line
        .trim()
        .strip_prefix(magic)
        .ok_or_else(|| Error::parse(lineno, format!("expected header `{magic} dim=<d>`")))?;
    let dim = rest
        .trim()
        .strip_prefix("dim=")
        .and_then(|d| d.parse::<usize>().ok())
        .ok_or_else(|| Error::parse(lineno, "malformed dim= field"))?;
    if dim == 0 {
        return Err(Error::parse(lineno, "dim must be at least 1"));
    }
    Ok(dim)
}

fn parse_row(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|f| f.trim().parse::<f64>().map_err(|e| Error::parse(lineno, format!("`{f}`: {e}"))))
        .collect()
}

pub fn paths_to_csv(paths: &[Path]) -> Result<String> {
    let dim = paths.first().ok_or(Error::InsufficientSamples { needed: 1, found: 0 })?.dim();
    let mut out = format!("{PATH_MAGIC} dim={dim}\n");
    for (i, path) in paths.iter().enumerate() {
        if path.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: path.dim() });
        }
        writeln!(out, "# path {i}").unwrap();
        for (t, p) in path.grid().times().iter().zip(path.points()) {
            write_row(&mut out, Some(*t), p);
        }
    }
    Ok(out)
}

pub fn paths_from_csv(text: &str) -> Result<Vec<Path>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
    let dim = parse_header(header, PATH_MAGIC, 1)?;
    let mut paths = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    let mut points: Vec<LatentPoint> = Vec::new();
    let mut flush = |times: &mut Vec<f64>, points: &mut Vec<LatentPoint>, lineno: usize| -> Result<()> {
        if times.is_empty() {
            return Ok(());
        }
        let grid = TimeGrid::from_times(std::mem::take(times)).map_err(|e| Error::parse(lineno, e.to_string()))?;
        paths.push(Path::new(grid, std::mem::take(points))?);
        Ok(())
    };
    let mut last_line = 1;
    for (i, line) in lines {
        last_line = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with("# path") {
            flush(&mut times, &mut points, i + 1)?;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let row = parse_row(line, i + 1)?;
        if row.len() != dim + 1 {
            return Err(Error::DimensionMismatch { expected: dim + 1, found: row.len() });
        }
        times.push(row[0]);
        points.push(LatentPoint::new(row[1..].to_vec()));
    }
    flush(&mut times, &mut points, last_line)?;
    if paths.is_empty() {
        return Err(Error::parse(last_line, "no paths in file"));
    }
    Ok(paths)
}

pub fn load_paths(path: impl AsRef<FsPath>) -> Result<Vec<Path>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    paths_from_csv(&text)
}

pub fn save_paths(paths: &[Path], path: impl AsRef<FsPath>) -> Result<()> {
    write_file(path.as_ref(), &paths_to_csv(paths)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge::linear_path;
    use proptest::prelude::*;

    #[test]
    fn empty_and_ragged_rejected() {
        assert!(matches!(LatentDataset::new(vec![]), Err(Error::EmptyDataset)));
        let r = LatentDataset::new(vec![vec![0.0, 1.0].into(), vec![1.0].into()]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn csv_header_and_rows() {
        let ds = LatentDataset::new(vec![vec![0.5, -1.0].into(), vec![1e-300, 3.0].into()]).unwrap();
        let text = ds.to_csv();
        assert_eq!(text, "# pfbi-latents v1 dim=2\n0.5,-1\n1e-300,3\n");
        assert_eq!(LatentDataset::from_csv(&text).unwrap(), ds);
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(LatentDataset::from_csv(""), Err(Error::Parse { .. })));
        assert!(matches!(LatentDataset::from_csv("x,y\n1,2\n"), Err(Error::Parse { .. })));
        assert!(matches!(
            LatentDataset::from_csv("# pfbi-latents v1 dim=2\n1,2,3\n"),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            LatentDataset::from_csv("# pfbi-latents v1 dim=2\n1,abc\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(LatentDataset::from_csv("# pfbi-latents v1 dim=2\n"), Err(Error::EmptyDataset)));
    }

    #[test]
    fn nearest_and_farthest() {
        let ds = LatentDataset::new(vec![vec![1.0, 2.0].into(), vec![5.0, 5.0].into(), vec![-3.0, 0.0].into()]).unwrap();
        assert_eq!(ds.nearest_distance(&[1.0, 1.0]), 1.0);
        assert_eq!(ds.farthest_from(1), 2);
    }

    #[test]
    fn paths_round_trip() {
        let grid = TimeGrid::from_times(vec![0.0, 0.1, 0.7, 1.3]).unwrap();
        let a = linear_path(&vec![0.0, 1.0].into(), &vec![2.0, -1.0 / 3.0].into(), &grid).unwrap();
        let b = linear_path(&vec![0.25, 0.0].into(), &vec![1.0, 1.0].into(), &grid).unwrap();
        let text = paths_to_csv(&[a.clone(), b.clone()]).unwrap();
        assert!(text.starts_with("# pfbi-paths v1 dim=2\n# path 0\n0,0,1\n"));
        assert_eq!(paths_from_csv(&text).unwrap(), vec![a, b]);
    }

    proptest! {
        #[test]
        fn latent_csv_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e12f64..1e12, 3), 1..40)) {
            let ds = LatentDataset::new(rows.into_iter().map(LatentPoint::new).collect()).unwrap();
            let text = ds.to_csv();
            let back = LatentDataset::from_csv(&text).unwrap();
            prop_assert_eq!(&back, &ds);
            prop_assert_eq!(back.to_csv(), text);
        }
    }
}
