use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// `n` labelled examples with `d` features each, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<f64>,
    labels: Vec<usize>,
    dim: usize,
    classes: usize,
}

impl Dataset {
    pub fn new(inputs: Vec<f64>, labels: Vec<usize>, dim: usize, classes: usize) -> Result<Self> {
        if labels.is_empty() || dim == 0 || classes == 0 {
            return Err(Error::param("dataset needs n ≥ 1, d ≥ 1, C ≥ 1"));
        }
        if inputs.len() != labels.len() * dim {
            return Err(Error::Shape(format!("{} inputs for {} examples of dimension {dim}", inputs.len(), labels.len())));
        }
        if inputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("non-finite input feature"));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::param(format!("label {y} out of range for {classes} classes")));
        }
        Ok(Self { inputs, labels, dim, classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// The first `n` examples (all of them when `n ≥ len`).
    pub fn truncate(mut self, n: usize) -> Self {
        if n < self.len() {
            self.labels.truncate(n);
            self.inputs.truncate(n * self.dim);
        }
        self
    }
}

fn be_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::format(format!("{what}: truncated header")))
}

/// Returns the dimension list and the unsigned-byte payload of an IDX file.
fn parse_idx<'a>(bytes: &'a [u8], magic: u32, what: &str) -> Result<(Vec<usize>, &'a [u8])> {
    let found = be_u32(bytes, 0, what)?;
    if found != magic {
        return Err(Error::format(format!("{what}: bad magic 0x{found:08x}, expected 0x{magic:08x}")));
    }
    let ndims = (magic & 0xff) as usize;
    let dims = (0..ndims).map(|i| be_u32(bytes, 4 + 4 * i, what).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    let header = 4 + 4 * ndims;
    let len = dims.iter().product::<usize>();
    let payload = &bytes[header..];
    if payload.len() < len {
        return Err(Error::format(format!("{what}: truncated data ({} of {len} bytes)", payload.len())));
    }
    Ok((dims, &payload[..len]))
}

/// IDX image file: returns (count, rows·cols, pixels scaled to [0, 1]).
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let (dims, data) = parse_idx(bytes, IDX_IMAGES_MAGIC, "images")?;
    let (n, pixels) = (dims[0], dims[1] * dims[2]);
    Ok((n, pixels, data.iter().map(|&b| f64::from(b) / 255.0).collect()))
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    let (_, data) = parse_idx(bytes, IDX_LABELS_MAGIC, "labels")?;
    Ok(data.iter().map(|&b| usize::from(b)).collect())
}

/// Loads an IDX image/label pair (MNIST layout). The class count is the
/// largest label plus one.
pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<Dataset> {
    let (n, pixels, inputs) = parse_idx_images(&fs::read(images)?)?;
    let labels = parse_idx_labels(&fs::read(labels)?)?;
    if labels.len() != n {
        return Err(Error::format(format!("{} labels for {n} images", labels.len())));
    }
    if n == 0 || pixels == 0 {
        return Err(Error::format("IDX files contain no examples"));
    }
    let classes = labels.iter().max().map_or(1, |m| m + 1);
    Dataset::new(inputs, labels, pixels, classes)
}

/// Gaussian blobs: class `c` is centered at a random point with standard-normal
/// coordinates and examples scatter around it with standard deviation `spread`.
/// Labels cycle through the classes.
pub fn synth_blobs(n: usize, d: usize, classes: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if classes < 2 || n == 0 || d == 0 {
        return Err(Error::param(format!("blobs need n ≥ 1, d ≥ 1, C ≥ 2; got n={n}, d={d}, C={classes}")));
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::param(format!("spread must be finite and non-negative, got {spread}")));
    }
    let mut center_rng = rng::stream(seed, 0);
    let centers: Vec<f64> = (0..classes * d).map(|_| center_rng.sample(StandardNormal)).collect();
    let mut rng = rng::stream(seed, 1);
    let mut inputs = Vec::with_capacity(n * d);
    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    for &c in &labels {
        for j in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            inputs.push(centers[c * d + j] + spread * z);
        }
    }
    Dataset::new(inputs, labels, d, classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(magic: u32, dims: &[u32], payload: &[u8]) -> Vec<u8> {
        let mut out = magic.to_be_bytes().to_vec();
        for d in dims {
            out.extend_from_slice(&d.to_be_bytes());
        }
        out.extend_from_slice(payload);
        out
    }

    #[test]
    fn parses_big_endian_header() {
        let bytes = [
            0x00, 0x00, 0x08, 0x03, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x02, 0, 255, 51, 102,
            10, 20, 30, 40,
        ];
        let (n, pixels, data) = parse_idx_images(&bytes).unwrap();
        assert_eq!((n, pixels), (2, 4));
        assert_eq!(&data[..4], &[0.0, 1.0, 0.2, 0.4]);
    }

    #[test]
    fn bad_magic_and_truncation() {
        let labels = idx(0x0000_0801, &[3], &[1, 2]);
        assert!(matches!(parse_idx_labels(&labels), Err(Error::Format(_))));
        let wrong = idx(0x0000_0803, &[1], &[1]);
        assert!(matches!(parse_idx_labels(&wrong), Err(Error::Format(_))));
        assert!(matches!(parse_idx_images(&[0, 0, 8]), Err(Error::Format(_))));
    }

    #[test]
    fn count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let img = dir.path().join("img");
        let lab = dir.path().join("lab");
        fs::write(&img, idx(0x0000_0803, &[12, 1, 1], &[0; 12])).unwrap();
        fs::write(&lab, idx(0x0000_0801, &[10], &[0; 10])).unwrap();
        assert!(matches!(load_idx(&img, &lab), Err(Error::Format(_))));
        fs::write(&lab, idx(0x0000_0801, &[12], &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 0, 1])).unwrap();
        let data = load_idx(&img, &lab).unwrap();
        assert_eq!((data.len(), data.dim(), data.classes()), (12, 1, 10));
    }

    #[test]
    fn blobs_shape_and_labels() {
        let d = synth_blobs(10, 3, 4, 0.5, 1).unwrap();
        assert_eq!((d.len(), d.dim(), d.classes()), (10, 3, 4));
        assert_eq!(d.labels(), &[0, 1, 2, 3, 0, 1, 2, 3, 0, 1]);
        assert!(synth_blobs(10, 3, 1, 0.5, 1).is_err());
        assert_eq!(synth_blobs(10, 3, 4, 0.5, 1).unwrap(), d);
    }

    #[test]
    fn zero_spread_collapses_to_centers() {
        let d = synth_blobs(6, 2, 2, 0.0, 4).unwrap();
        assert_eq!(d.input(0), d.input(2));
        assert_ne!(d.input(0), d.input(1));
    }

    #[test]
    fn invalid_dataset() {
        assert!(Dataset::new(vec![1.0, 2.0], vec![0, 3], 1, 3).is_err());
        assert!(Dataset::new(vec![1.0], vec![0, 1], 1, 3).is_err());
    }
}
