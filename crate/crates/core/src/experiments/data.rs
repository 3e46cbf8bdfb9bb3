use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel_density::SampleSet;
use crate::points::PointSet;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    None,
    /// Center each axis and divide by its sample standard deviation.
    Standardize,
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::None => "none",
            Scale::Standardize => "standardize",
        })
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "raw" => Ok(Scale::None),
            "standardize" => Ok(Scale::Standardize),
            other => Err(Error::invalid(format!("unknown scale {other:?}; expected none or standardize"))),
        }
    }
}

/// Data read from a delimited file, with the transform that was applied.
#[derive(Clone, Debug)]
pub struct LoadedData {
    pub samples: SampleSet,
    pub header: Option<Vec<String>>,
    pub scale: Scale,
    /// Per-axis center and spread removed by standardization.
    pub center: Option<Vec<f64>>,
    pub spread: Option<Vec<f64>>,
}

/// Reads numeric rows from a delimited file.
///
/// A first row with no numeric field is taken as a header. Errors name the
/// 1-based line of the offending row.
pub fn load_csv(path: &Path, delimiter: u8, scale: Scale) -> Result<LoadedData> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Csv { row: 0, message: format!("{other:?}") },
        })?;
    let mut header = None;
    let mut coords = Vec::new();
    let mut dim = None;
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv { row: k + 1, message: e.to_string() })?;
        let row = record.position().map_or(k + 1, |p| p.line() as usize);
        let fields: Vec<&str> = record.iter().collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        if header.is_none() && dim.is_none() && fields.iter().all(|f| f.parse::<f64>().is_err()) {
            header = Some(fields.iter().map(|f| f.to_string()).collect());
            continue;
        }
        let expected = *dim.get_or_insert(header.as_ref().map_or(fields.len(), Vec::len));
        if fields.len() != expected {
            return Err(Error::Csv { row, message: format!("expected {expected} fields, found {}", fields.len()) });
        }
        for f in fields {
            let v: f64 = f.parse().map_err(|_| Error::Csv { row, message: format!("not a number: {f:?}") })?;
            if !v.is_finite() {
                return Err(Error::Csv { row, message: format!("non-finite value {f:?}") });
            }
            coords.push(v);
        }
    }
    let Some(dim) = dim else {
        return Err(Error::InsufficientData(format!("{} has no numeric rows", path.display())));
    };
    let mut samples = SampleSet::new(PointSet::new(dim, coords)?)?;
    let (mut center, mut spread) = (None, None);
    if scale == Scale::Standardize {
        let (mean, sd) = samples.axis_moments();
        if samples.len() < 2 || sd.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Degenerate("cannot standardize an axis with zero spread".into()));
        }
        let scaled: Vec<f64> = samples
            .coords()
            .chunks_exact(dim)
            .flat_map(|p| (0..dim).map(|i| (p[i] - mean[i]) / sd[i]).collect::<Vec<_>>())
            .collect();
        samples = SampleSet::new(PointSet::new(dim, scaled)?)?;
        center = Some(mean);
        spread = Some(sd);
    }
    Ok(LoadedData { samples, header, scale, center, spread })
}
