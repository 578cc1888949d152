use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::LabelTable;
use crate::radiometry::PixelSpectrum;

/// Labelled pixel spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDataset {
    pub samples: Vec<(PixelSpectrum, usize)>,
    pub labels: LabelTable,
}

impl SpectralDataset {
    pub fn new(samples: Vec<(PixelSpectrum, usize)>, labels: LabelTable) -> Result<Self> {
        let ds = Self { samples, labels };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::DegenerateDataset("dataset is empty".into()));
        }
        let dim = self.samples[0].0.values().len();
        for (i, (x, y)) in self.samples.iter().enumerate() {
            if *y >= self.labels.len() {
                return Err(Error::DegenerateDataset(format!(
                    "sample {i} has label {y} but only {} classes",
                    self.labels.len()
                )));
            }
            if x.values().len() != dim || x.values().iter().any(|v| !v.is_finite()) {
                return Err(Error::DegenerateDataset(format!("sample {i} has a malformed spectrum")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn is_clothing(&self, index: usize) -> bool {
        self.labels.is_clothing()[self.samples[index].1]
    }
}

#[derive(Serialize, Deserialize)]
struct Row {
    b0: f64,
    b1: f64,
    b2: f64,
    b3: f64,
    label: usize,
}

const LABELS_FILE: &str = "labels.json";
const SAMPLES_FILE: &str = "samples.csv";

/// Writes `labels.json` and `samples.csv` (`b0,b1,b2,b3,label`) into `dir`.
pub fn save_dataset(ds: &SpectralDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let labels_path = dir.join(LABELS_FILE);
    fs::write(&labels_path, serde_json::to_string(&ds.labels).expect("labels serialize"))
        .map_err(|e| Error::io(&labels_path, e))?;
    let path = dir.join(SAMPLES_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Format(e.to_string()))?;
    for (x, label) in &ds.samples {
        let v = x.values();
        if v.len() != 4 {
            return Err(Error::Shape("dataset files hold 4-band spectra".into()));
        }
        w.serialize(Row {
            b0: v[0],
            b1: v[1],
            b2: v[2],
            b3: v[3],
            label: *label,
        })
        .map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

pub fn load_dataset(dir: impl AsRef<Path>) -> Result<SpectralDataset> {
    let dir = dir.as_ref();
    let labels_path = dir.join(LABELS_FILE);
    let text = fs::read_to_string(&labels_path).map_err(|e| Error::io(&labels_path, e))?;
    let raw: LabelTable =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", labels_path.display())))?;
    let labels = LabelTable::new(raw.names().to_vec(), raw.is_clothing().to_vec())?;
    let path = dir.join(SAMPLES_FILE);
    let mut r = csv::Reader::from_path(&path).map_err(|e| Error::Format(e.to_string()))?;
    let mut samples = Vec::new();
    for (i, row) in r.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::FormatLine {
            path: path.clone(),
            line: i + 2,
            message: e.to_string(),
        })?;
        samples.push((PixelSpectrum(vec![row.b0, row.b1, row.b2, row.b3]), row.label));
    }
    SpectralDataset::new(samples, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_round_trip() {
        let labels = LabelTable::new(vec!["c".into(), "b".into()], vec![true, false]).unwrap();
        let ds = SpectralDataset::new(
            vec![
                (PixelSpectrum(vec![0.1, 0.2, 0.3, 0.4]), 0),
                (PixelSpectrum(vec![1.0 / 3.0, 0.5, 0.25, 0.125]), 1),
            ],
            labels,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        assert_eq!(load_dataset(dir.path()).unwrap(), ds);
    }

    #[test]
    fn label_out_of_range() {
        let labels = LabelTable::new(vec!["c".into(), "b".into()], vec![true, false]).unwrap();
        let r = SpectralDataset::new(vec![(PixelSpectrum(vec![0.0; 4]), 2)], labels);
        assert!(matches!(r, Err(Error::DegenerateDataset(_))));
    }
}
