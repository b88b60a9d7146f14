use rand::Rng;
use rand_distr::StandardNormal;

use super::ExperimentError;

pub const DATASET_MAGIC: &[u8; 4] = b"NGLD";

static DIGITS: &[u8] = include_bytes!("../../data/digits.ngld");

/// Row-major features with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub dims: usize,
    pub classes: usize,
}

impl LabeledData {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.features[i * self.dims..(i + 1) * self.dims]
    }
}

/// Parses the binary layout: magic `NGLD`, `count: u32 LE`, `dims: u32 LE`,
/// `count × dims` little-endian `f32` features row by row, then `count`
/// `u8` labels.
pub fn parse_labeled_dataset(bytes: &[u8]) -> Result<LabeledData, ExperimentError> {
    let err = |m: String| ExperimentError::Dataset(m);
    if bytes.len() < 12 || &bytes[..4] != DATASET_MAGIC {
        return Err(err("missing NGLD header".into()));
    }
    let word = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    let (count, dims) = (word(4), word(8));
    if count == 0 || dims == 0 {
        return Err(err(format!("empty dataset: count = {count}, dims = {dims}")));
    }
    let expected = count
        .checked_mul(dims)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(12 + count))
        .ok_or_else(|| err("header sizes overflow".into()))?;
    if bytes.len() != expected {
        return Err(err(format!(
            "expected {expected} bytes for {count}×{dims}, found {}",
            bytes.len()
        )));
    }
    let feat_end = 12 + count * dims * 4;
    let features: Vec<f64> = bytes[12..feat_end]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    if let Some(i) = features.iter().position(|v| !v.is_finite()) {
        return Err(err(format!(
            "non-finite feature at sample {}, dim {}",
            i / dims,
            i % dims
        )));
    }
    let labels: Vec<usize> = bytes[feat_end..].iter().map(|&b| b as usize).collect();
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    Ok(LabeledData {
        features,
        labels,
        dims,
        classes,
    })
}

/// 500 digits at 8×8 resolution, features scaled to `[0, 1]`.
pub fn embedded_digits() -> LabeledData {
    parse_labeled_dataset(DIGITS).expect("bundled dataset is well formed")
}

/// Gaussian clusters: class centers drawn standard normal, samples at
/// `center + spread · N(0, I)`, interleaved by class.
pub fn synthetic_clusters(
    rng: &mut impl Rng,
    classes: usize,
    samples_per_class: usize,
    dims: usize,
    spread: f64,
) -> Result<LabeledData, ExperimentError> {
    if classes == 0 || samples_per_class == 0 || dims == 0 {
        return Err(ExperimentError::Config(
            "synthetic dataset sizes must be positive".into(),
        ));
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(ExperimentError::Config(format!(
            "cluster spread must be non-negative, got {spread}"
        )));
    }
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..dims).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let mut features = Vec::with_capacity(classes * samples_per_class * dims);
    let mut labels = Vec::with_capacity(classes * samples_per_class);
    for _ in 0..samples_per_class {
        for (c, center) in centers.iter().enumerate() {
            features.extend(center.iter().map(|m| m + spread * rng.sample::<f64, _>(StandardNormal)));
            labels.push(c);
        }
    }
    Ok(LabeledData {
        features,
        labels,
        dims,
        classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::seeded_rng;

    #[test]
    fn bundled_digits_load() {
        let d = embedded_digits();
        assert_eq!(d.len(), 500);
        assert_eq!(d.dims, 64);
        assert_eq!(d.classes, 10);
        assert!(d.features.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn round_trip_and_corruption() {
        let mut bytes = DATASET_MAGIC.to_vec();
        bytes.extend(2u32.to_le_bytes());
        bytes.extend(3u32.to_le_bytes());
        for v in [0.5f32, -1.0, 2.0, 0.25, 0.0, 1.5] {
            bytes.extend(v.to_le_bytes());
        }
        bytes.extend([1u8, 0]);
        let d = parse_labeled_dataset(&bytes).unwrap();
        assert_eq!(d.sample(1), &[0.25, 0.0, 1.5]);
        assert_eq!(d.labels, vec![1, 0]);
        assert_eq!(d.classes, 2);

        assert!(parse_labeled_dataset(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(parse_labeled_dataset(&bad).is_err());
    }

    #[test]
    fn clusters_are_interleaved() {
        let d = synthetic_clusters(&mut seeded_rng(1), 3, 4, 5, 0.1).unwrap();
        assert_eq!(d.len(), 12);
        assert_eq!(&d.labels[..4], &[0, 1, 2, 0]);
    }
}
