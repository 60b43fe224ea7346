//! Datasets: synthetic generators, CSV ingestion, and stratified splitting.
//!
//! Every dataset lives in the unit box: all coordinates are in [0,1]. The
//! generators enforce this by clipping (blobs) or per-dimension min-max
//! rescaling (moons, spirals); the CSV loader rescales on request.

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, stream};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Labeled points in the unit box; `d` features, `c >= 2` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub d: usize,
    pub c: usize,
}

impl Dataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<usize>, c: usize) -> Result<Dataset> {
        if points.is_empty() {
            return Err(Error::Input("dataset must contain at least one point".into()));
        }
        if points.len() != labels.len() {
            return Err(Error::Input(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        if c < 2 {
            return Err(Error::Input("dataset needs at least 2 classes".into()));
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::Input("points must have at least one feature".into()));
        }
        for (idx, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::Input(format!(
                    "point {idx} has {} features, expected {d}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
                return Err(Error::Input(format!(
                    "point {idx} has a coordinate outside [0,1]"
                )));
            }
        }
        if let Some((idx, _)) = labels.iter().enumerate().find(|(_, &l)| l >= c) {
            return Err(Error::Input(format!("label at index {idx} is >= {c}")));
        }
        Ok(Dataset { points, labels, d, c })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Blobs,
    Moons,
    Spirals,
}

impl FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Kind> {
        match s {
            "blobs" => Ok(Kind::Blobs),
            "moons" => Ok(Kind::Moons),
            "spirals" => Ok(Kind::Spirals),
            other => Err(Error::Input(format!("unknown dataset kind '{other}'"))),
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Blobs => "blobs",
            Kind::Moons => "moons",
            Kind::Spirals => "spirals",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: Kind,
    pub n_per_class: usize,
    pub classes: usize,
    pub dim: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Per-dimension affine rescale parameters: v' = (v - min) / (max - min).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rescale {
    pub min: f64,
    pub max: f64,
}

/// A generated dataset plus how (if at all) it was rescaled into the unit box.
#[derive(Debug, Clone)]
pub struct Generated {
    pub dataset: Dataset,
    pub rescale: Option<Vec<Rescale>>,
}

/// Manifest written beside generated data so a dataset is reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub spec: SyntheticSpec,
    pub rescale: Option<Vec<Rescale>>,
}

pub const MANIFEST_VERSION: u32 = 1;

pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    Ok(generate_full(spec)?.dataset)
}

pub fn generate_full(spec: &SyntheticSpec) -> Result<Generated> {
    if spec.classes < 2 {
        return Err(Error::Input("need at least 2 classes".into()));
    }
    if spec.n_per_class == 0 {
        return Err(Error::Input("n_per_class must be positive".into()));
    }
    if !spec.noise_sigma.is_finite() || spec.noise_sigma < 0.0 {
        return Err(Error::Input("noise_sigma must be finite and >= 0".into()));
    }
    match spec.kind {
        Kind::Blobs => {
            if spec.dim == 0 {
                return Err(Error::Input("blobs need dim >= 1".into()));
            }
        }
        Kind::Moons | Kind::Spirals => {
            if spec.dim != 2 {
                return Err(Error::Input(format!("{} datasets are 2-dimensional", spec.kind)));
            }
            if spec.kind == Kind::Moons && spec.classes != 2 {
                return Err(Error::Input("moons datasets have exactly 2 classes".into()));
            }
        }
    }

    let mut rng = rng_from_seed(spec.seed);
    let n = spec.n_per_class;
    let c = spec.classes;
    let d = spec.dim;
    let sigma = spec.noise_sigma;
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n * c);
    let mut labels: Vec<usize> = Vec::with_capacity(n * c);

    match spec.kind {
        Kind::Blobs => {
            // Maximin center placement: from 64 uniform candidates per class,
            // keep the one farthest from the centers chosen so far. Gives
            // well-separated clusters without a feasibility cliff.
            let mut centers: Vec<Vec<f64>> = Vec::with_capacity(c);
            for _ in 0..c {
                let mut best: Option<(f64, Vec<f64>)> = None;
                for _ in 0..64 {
                    let cand: Vec<f64> = (0..d).map(|_| rng.gen_range(0.2..0.8)).collect();
                    let score = centers
                        .iter()
                        .map(|prev| dist(prev, &cand))
                        .fold(f64::INFINITY, f64::min);
                    if best.as_ref().map(|(s, _)| score > *s).unwrap_or(true) {
                        best = Some((score, cand));
                    }
                }
                centers.push(best.unwrap().1);
            }
            for (m, center) in centers.iter().enumerate() {
                for _ in 0..n {
                    let p: Vec<f64> = center
                        .iter()
                        .map(|ctr| {
                            let noise: f64 = rng.sample(StandardNormal);
                            (ctr + sigma * noise).clamp(0.0, 1.0)
                        })
                        .collect();
                    points.push(p);
                    labels.push(m);
                }
            }
            let dataset = Dataset::new(points, labels, c)?;
            Ok(Generated { dataset, rescale: None })
        }
        Kind::Moons => {
            for m in 0..2usize {
                for idx in 0..n {
                    let t = if n == 1 {
                        std::f64::consts::FRAC_PI_2
                    } else {
                        idx as f64 * std::f64::consts::PI / (n - 1) as f64
                    };
                    let (mut x, mut y) = if m == 0 {
                        (t.cos(), t.sin())
                    } else {
                        (1.0 - t.cos(), 0.5 - t.sin())
                    };
                    x += sigma * rng.sample::<f64, _>(StandardNormal);
                    y += sigma * rng.sample::<f64, _>(StandardNormal);
                    points.push(vec![x, y]);
                    labels.push(m);
                }
            }
            finish_rescaled(points, labels, c)
        }
        Kind::Spirals => {
            for m in 0..c {
                for idx in 0..n {
                    let t = if n == 1 { 0.5 } else { idx as f64 / (n - 1) as f64 };
                    let r = 0.1 + 0.9 * t;
                    let phi = 2.0 * std::f64::consts::PI * (1.5 * t + m as f64 / c as f64);
                    let mut x = 0.5 + 0.5 * r * phi.cos();
                    let mut y = 0.5 + 0.5 * r * phi.sin();
                    x += sigma * rng.sample::<f64, _>(StandardNormal);
                    y += sigma * rng.sample::<f64, _>(StandardNormal);
                    points.push(vec![x, y]);
                    labels.push(m);
                }
            }
            finish_rescaled(points, labels, c)
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Min-max rescale every dimension into [0,1]; a zero-range dimension maps
/// to 0.0 everywhere.
fn rescale_unit(points: &mut [Vec<f64>]) -> Vec<Rescale> {
    let d = points[0].len();
    let mut params = Vec::with_capacity(d);
    for dim in 0..d {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in points.iter() {
            lo = lo.min(p[dim]);
            hi = hi.max(p[dim]);
        }
        params.push(Rescale { min: lo, max: hi });
        for p in points.iter_mut() {
            p[dim] = if hi > lo { ((p[dim] - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 };
        }
    }
    params
}

fn finish_rescaled(mut points: Vec<Vec<f64>>, labels: Vec<usize>, c: usize) -> Result<Generated> {
    let params = rescale_unit(&mut points);
    let dataset = Dataset::new(points, labels, c)?;
    Ok(Generated { dataset, rescale: Some(params) })
}

// ===== CSV =====

#[derive(Debug, Clone, Copy)]
pub struct CsvOptions {
    pub has_header: bool,
    /// Min-max rescale each feature column into [0,1]. Without it, the file
    /// must already be in the unit box.
    pub rescale: bool,
    /// Expected class count; labels must lie in [0, classes). When `None`
    /// the count is inferred as max label + 1.
    pub classes: Option<usize>,
}

impl Default for CsvOptions {
    fn default() -> CsvOptions {
        CsvOptions { has_header: true, rescale: true, classes: None }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedCsv {
    pub dataset: Dataset,
    pub rescale: Option<Vec<Rescale>>,
}

/// Load `d` feature columns followed by one integer label column.
pub fn load_csv(path: &Path, opts: &CsvOptions) -> Result<LoadedCsv> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut raw: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut width: Option<usize> = None;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Format(format!("csv: {e}")))?;
        let row = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(raw.len() + 1);
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Parse {
                row,
                msg: format!("expected {w} fields, found {}", record.len()),
            });
        }
        if w < 2 {
            return Err(Error::Parse {
                row,
                msg: "need at least one feature column and a label".into(),
            });
        }
        let mut p = Vec::with_capacity(w - 1);
        for cell in record.iter().take(w - 1) {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                msg: format!("'{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { row, msg: format!("'{cell}' is not finite") });
            }
            p.push(v);
        }
        let label_cell = record.get(w - 1).unwrap();
        let label: i64 = label_cell.parse().map_err(|_| Error::Parse {
            row,
            msg: format!("label '{label_cell}' is not an integer"),
        })?;
        if label < 0 {
            return Err(Error::Parse { row, msg: format!("label {label} is negative") });
        }
        let label = label as usize;
        if let Some(c) = opts.classes {
            if label >= c {
                return Err(Error::Parse {
                    row,
                    msg: format!("label {label} outside 0..{c}"),
                });
            }
        }
        raw.push(p);
        labels.push(label);
    }
    if raw.is_empty() {
        return Err(Error::Format("csv contains no data rows".into()));
    }
    let c = opts
        .classes
        .unwrap_or_else(|| labels.iter().max().map(|m| m + 1).unwrap_or(0));
    let rescale = if opts.rescale {
        Some(rescale_unit(&mut raw))
    } else {
        None
    };
    Ok(LoadedCsv { dataset: Dataset::new(raw, labels, c)?, rescale })
}

/// Write a dataset as CSV (features then label). Floats are written with
/// shortest round-trip formatting, so load -> emit -> load is lossless.
pub fn emit_csv(data: &Dataset, path: &Path, header: bool) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    if header {
        let mut names: Vec<String> = (0..data.d).map(|i| format!("x{i}")).collect();
        names.push("label".into());
        writer.write_record(&names)?;
    }
    for (p, label) in data.points.iter().zip(data.labels.iter()) {
        let mut row: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
        row.push(label.to_string());
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Error {
        match e.kind() {
            csv::ErrorKind::Io(_) => Error::Format(format!("csv io: {e}")),
            _ => Error::Format(format!("csv: {e}")),
        }
    }
}

// ===== split =====

/// Stratified split into (train, test); `fraction` is the train share.
/// Within each class the split is shuffled deterministically by `seed`.
pub fn split(data: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(0.0..1.0).contains(&fraction) || fraction == 0.0 {
        return Err(Error::Input("split fraction must be in (0,1)".into()));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); data.c];
    for (idx, &label) in data.labels.iter().enumerate() {
        by_class[label].push(idx);
    }
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (label, mut members) in by_class.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let mut rng = stream(seed, "split", label as u64);
        members.shuffle(&mut rng);
        // Round half up so per-class counts stay within one point of the
        // requested fraction.
        let k = ((fraction * members.len() as f64) + 0.5).floor() as usize;
        let k = k.min(members.len());
        train_idx.extend_from_slice(&members[..k]);
        test_idx.extend_from_slice(&members[k..]);
    }
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::Input("split produced an empty side".into()));
    }
    let take = |idx: &[usize]| -> Result<Dataset> {
        Dataset::new(
            idx.iter().map(|&i| data.points[i].clone()).collect(),
            idx.iter().map(|&i| data.labels[i]).collect(),
            data.c,
        )
    };
    Ok((take(&train_idx)?, take(&test_idx)?))
}

// ===== manifests =====

pub fn write_manifest(manifest: &DatasetManifest, path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(manifest)?)?;
    Ok(())
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let manifest: DatasetManifest = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if manifest.version != MANIFEST_VERSION {
        return Err(Error::Format(format!(
            "unsupported dataset manifest version {}",
            manifest.version
        )));
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(kind: Kind, n: usize, c: usize, d: usize, sigma: f64, seed: u64) -> SyntheticSpec {
        SyntheticSpec { kind, n_per_class: n, classes: c, dim: d, noise_sigma: sigma, seed }
    }

    // ===== generators =====

    #[test]
    fn blobs_have_exact_class_counts() {
        let data = generate(&spec(Kind::Blobs, 100, 4, 8, 0.05, 7)).unwrap();
        assert_eq!(data.len(), 400);
        for m in 0..4 {
            assert_eq!(data.labels.iter().filter(|&&l| l == m).count(), 100);
        }
    }

    #[test]
    fn zero_noise_blobs_collapse_each_class_to_a_point() {
        let data = generate(&spec(Kind::Blobs, 10, 3, 5, 0.0, 3)).unwrap();
        for m in 0..3 {
            let pts: Vec<&Vec<f64>> = data
                .points
                .iter()
                .zip(data.labels.iter())
                .filter(|(_, &l)| l == m)
                .map(|(p, _)| p)
                .collect();
            for p in &pts {
                assert_eq!(*p, pts[0]);
            }
        }
    }

    #[test]
    fn blob_centers_are_separated() {
        // Class means of a low-noise blob set stay well apart relative to
        // sigma (the generator targets at least several sigma of separation).
        let sigma = 0.03;
        let data = generate(&spec(Kind::Blobs, 50, 2, 4, sigma, 5)).unwrap();
        let mut means = vec![vec![0.0; 4]; 2];
        let mut counts = vec![0usize; 2];
        for (p, &l) in data.points.iter().zip(data.labels.iter()) {
            counts[l] += 1;
            for (m, v) in means[l].iter_mut().zip(p.iter()) {
                *m += v;
            }
        }
        for (mean, count) in means.iter_mut().zip(counts.iter()) {
            mean.iter_mut().for_each(|v| *v /= *count as f64);
        }
        assert!(dist(&means[0], &means[1]) >= 6.0 * sigma);
    }

    #[test]
    fn moons_require_two_classes_and_two_dims() {
        assert!(generate(&spec(Kind::Moons, 10, 3, 2, 0.0, 1)).is_err());
        assert!(generate(&spec(Kind::Moons, 10, 2, 3, 0.0, 1)).is_err());
        assert!(generate(&spec(Kind::Moons, 10, 2, 2, 0.05, 1)).is_ok());
    }

    #[test]
    fn spirals_fill_the_unit_box_after_rescale() {
        let g = generate_full(&spec(Kind::Spirals, 40, 3, 2, 0.01, 9)).unwrap();
        let params = g.rescale.unwrap();
        assert_eq!(params.len(), 2);
        for dim in 0..2 {
            let lo = g.dataset.points.iter().map(|p| p[dim]).fold(f64::INFINITY, f64::min);
            let hi = g.dataset.points.iter().map(|p| p[dim]).fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(lo, 0.0);
            assert_eq!(hi, 1.0);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&spec(Kind::Spirals, 25, 3, 2, 0.02, 11)).unwrap();
        let b = generate(&spec(Kind::Spirals, 25, 3, 2, 0.02, 11)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate(&spec(Kind::Spirals, 25, 3, 2, 0.02, 12)).unwrap());
    }

    proptest! {
        #[test]
        fn every_generated_point_is_in_the_unit_box(
            kind_idx in 0usize..3,
            n in 1usize..40,
            c in 2usize..5,
            d in 1usize..6,
            sigma in 0.0f64..0.3,
            seed in 0u64..1000,
        ) {
            let kind = [Kind::Blobs, Kind::Moons, Kind::Spirals][kind_idx];
            let (c, d) = match kind {
                Kind::Blobs => (c, d),
                Kind::Moons => (2, 2),
                Kind::Spirals => (c, 2),
            };
            let data = generate(&spec(kind, n, c, d, sigma, seed)).unwrap();
            prop_assert_eq!(data.len(), n * c);
            for p in &data.points {
                for v in p {
                    prop_assert!((0.0..=1.0).contains(v));
                }
            }
        }
    }

    // ===== csv =====

    #[test]
    fn load_csv_parses_rows_and_counts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "x0,x1,label\n0.0,1.0,0\n0.5,0.5,1\n1.0,0.0,1\n").unwrap();
        let loaded = load_csv(&path, &CsvOptions { rescale: false, ..Default::default() }).unwrap();
        assert_eq!(loaded.dataset.len(), 3);
        assert_eq!(loaded.dataset.d, 2);
        assert_eq!(loaded.dataset.c, 2);
        assert_eq!(loaded.dataset.labels, vec![0, 1, 1]);
    }

    #[test]
    fn constant_column_rescales_to_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "7.5,1.0,0\n7.5,3.0,1\n").unwrap();
        let loaded = load_csv(
            &path,
            &CsvOptions { has_header: false, rescale: true, classes: None },
        )
        .unwrap();
        assert_eq!(loaded.dataset.points[0][0], 0.0);
        assert_eq!(loaded.dataset.points[1][0], 0.0);
        assert_eq!(loaded.dataset.points[1][1], 1.0);
    }

    #[test]
    fn ragged_row_reports_its_row_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "x0,x1,label\n0.1,0.2,0\n0.3,1\n").unwrap();
        let err = load_csv(&path, &CsvOptions::default()).unwrap_err();
        match err {
            Error::Parse { row, .. } => assert_eq!(row, 3),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn non_numeric_cell_reports_its_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "0.1,0.2,0\nzap,0.4,1\n").unwrap();
        let err = load_csv(
            &path,
            &CsvOptions { has_header: false, ..Default::default() },
        )
        .unwrap_err();
        match err {
            Error::Parse { row, msg } => {
                assert_eq!(row, 2);
                assert!(msg.contains("zap"));
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn label_outside_declared_range_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "0.1,0.2,0\n0.3,0.4,5\n").unwrap();
        let err = load_csv(
            &path,
            &CsvOptions { has_header: false, rescale: false, classes: Some(2) },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }));
    }

    #[test]
    fn emit_then_load_round_trips_exactly() {
        let data = generate(&spec(Kind::Moons, 30, 2, 2, 0.05, 4)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.csv");
        emit_csv(&data, &path, true).unwrap();
        let loaded = load_csv(&path, &CsvOptions { rescale: false, ..Default::default() }).unwrap();
        assert_eq!(loaded.dataset.labels, data.labels);
        for (a, b) in loaded.dataset.points.iter().zip(data.points.iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    // ===== split =====

    #[test]
    fn split_is_stratified_and_exhaustive() {
        let data = generate(&spec(Kind::Blobs, 25, 4, 3, 0.05, 2)).unwrap();
        let (train, test) = split(&data, 0.8, 7).unwrap();
        assert_eq!(train.len(), 80);
        assert_eq!(test.len(), 20);
        for m in 0..4 {
            let tr = train.labels.iter().filter(|&&l| l == m).count();
            assert_eq!(tr, 20);
        }
        // Union equals input: every original point appears exactly once.
        let mut seen: Vec<Vec<f64>> = train.points.clone();
        seen.extend(test.points.clone());
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut orig = data.points.clone();
        orig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(seen, orig);
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let data = generate(&spec(Kind::Blobs, 20, 2, 3, 0.05, 2)).unwrap();
        let (a1, b1) = split(&data, 0.75, 5).unwrap();
        let (a2, b2) = split(&data, 0.75, 5).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
        let (a3, _) = split(&data, 0.75, 6).unwrap();
        assert_ne!(a1, a3);
    }

    #[test]
    fn degenerate_fractions_are_rejected() {
        let data = generate(&spec(Kind::Blobs, 10, 2, 2, 0.05, 2)).unwrap();
        assert!(split(&data, 0.0, 1).is_err());
        assert!(split(&data, 1.0, 1).is_err());
    }

    // ===== manifests =====

    #[test]
    fn manifest_round_trips_and_checks_version() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let g = generate_full(&spec(Kind::Moons, 5, 2, 2, 0.1, 3)).unwrap();
        let manifest = DatasetManifest {
            version: MANIFEST_VERSION,
            spec: spec(Kind::Moons, 5, 2, 2, 0.1, 3),
            rescale: g.rescale,
        };
        write_manifest(&manifest, &path).unwrap();
        let back = load_manifest(&path).unwrap();
        assert_eq!(back.spec, manifest.spec);

        let mut bad = manifest.clone();
        bad.version = 99;
        write_manifest(&bad, &path).unwrap();
        assert!(matches!(load_manifest(&path), Err(Error::Format(_))));
    }
}
