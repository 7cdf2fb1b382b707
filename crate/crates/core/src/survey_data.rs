//! Observed survey sample, its sampling weights, and CSV ingestion.
//!
//! Sampling weights are only meaningful up to a positive constant, so every
//! estimator consumes [`ScaledWeights`]: the raw weights rescaled to sum to
//! the sample size.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Compensated (Neumaier) summation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Sampling weights rescaled so that they sum to the sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledWeights {
    values: Vec<f64>,
}

impl ScaledWeights {
    /// Unit weights, i.e. the scaling of any constant weight vector.
    pub fn ones(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewObservations { n });
        }
        Ok(Self { values: vec![1.0; n] })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for ScaledWeights {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

fn check_weights(raw: &[f64]) -> Result<()> {
    if raw.len() < 2 {
        return Err(Error::TooFewObservations { n: raw.len() });
    }
    if let Some(i) = raw.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::NonPositiveWeight { row: i + 1 });
    }
    Ok(())
}

/// Rescale raw weights to `n * w_i / sum_j w_j`.
pub fn scale_weights(raw: &[f64]) -> Result<ScaledWeights> {
    check_weights(raw)?;
    let n = raw.len() as f64;
    let total = compensated_sum(raw.iter().copied());
    if !total.is_finite() {
        // Rescale first so the sum itself cannot overflow.
        let max = raw.iter().copied().fold(0.0_f64, f64::max);
        let shrunk: Vec<f64> = raw.iter().map(|w| w / max).collect();
        return scale_weights(&shrunk);
    }
    let values = raw.iter().map(|w| n * (w / total)).collect();
    Ok(ScaledWeights { values })
}

/// A complete observed sample: covariates (row-major), an optional response
/// and strictly positive raw sampling weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SurveyDataset {
    covariate_names: Vec<String>,
    covariates: Vec<f64>,
    p: usize,
    response_name: Option<String>,
    response: Option<Vec<f64>>,
    raw_weights: Vec<f64>,
}

impl SurveyDataset {
    /// `covariates` is row-major with `p` columns.
    pub fn new(covariates: Vec<f64>, p: usize, response: Option<Vec<f64>>, raw_weights: Vec<f64>) -> Result<Self> {
        check_weights(&raw_weights)?;
        let n = raw_weights.len();
        if covariates.len() != n * p {
            return Err(Error::DimensionMismatch {
                what: "covariate matrix",
                expected: n * p,
                found: covariates.len(),
            });
        }
        if let Some(y) = &response {
            if y.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "response",
                    expected: n,
                    found: y.len(),
                });
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidResponse("non-finite response value".into()));
            }
        }
        if covariates.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite covariate value".into()));
        }
        Ok(Self {
            covariate_names: (1..=p).map(|j| format!("x{j}")).collect(),
            covariates,
            p,
            response_name: response.as_ref().map(|_| "y".to_string()),
            response,
            raw_weights,
        })
    }

    /// A sample with a single scalar variable stored as the response.
    pub fn univariate(values: Vec<f64>, raw_weights: Vec<f64>) -> Result<Self> {
        Self::new(Vec::new(), 0, Some(values), raw_weights)
    }

    pub fn with_names(mut self, covariate_names: Vec<String>, response_name: Option<String>) -> Self {
        assert_eq!(covariate_names.len(), self.p, "one name per covariate column");
        self.covariate_names = covariate_names;
        if self.response.is_some() {
            self.response_name = response_name.or(self.response_name);
        }
        self
    }

    pub fn n(&self) -> usize {
        self.raw_weights.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.covariates[i * self.p..(i + 1) * self.p]
    }

    pub fn covariates(&self) -> &[f64] {
        &self.covariates
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn response(&self) -> Option<&[f64]> {
        self.response.as_deref()
    }

    pub fn response_name(&self) -> Option<&str> {
        self.response_name.as_deref()
    }

    pub fn raw_weights(&self) -> &[f64] {
        &self.raw_weights
    }

    pub fn scaled_weights(&self) -> ScaledWeights {
        scale_weights(&self.raw_weights).expect("weights validated at construction")
    }
}

/// Which CSV columns hold the weight, the response and the covariates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSchema {
    pub weight: String,
    pub response: Option<String>,
    pub covariates: Vec<String>,
}

impl ColumnSchema {
    pub fn new(weight: impl Into<String>) -> Self {
        Self {
            weight: weight.into(),
            response: None,
            covariates: Vec::new(),
        }
    }

    pub fn response(mut self, name: impl Into<String>) -> Self {
        self.response = Some(name.into());
        self
    }

    pub fn covariates<S: Into<String>>(mut self, names: impl IntoIterator<Item = S>) -> Self {
        self.covariates = names.into_iter().map(Into::into).collect();
        self
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &ColumnSchema) -> Result<SurveyDataset> {
    let file = std::fs::File::open(path)?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &ColumnSchema) -> Result<SurveyDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: HashMap<String, usize> = rdr
        .headers()?
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim().to_string(), i))
        .collect();
    let index_of = |name: &str| {
        header
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let weight_idx = index_of(&schema.weight)?;
    let response_idx = schema.response.as_deref().map(index_of).transpose()?;
    let covariate_idx = schema
        .covariates
        .iter()
        .map(|c| index_of(c))
        .collect::<Result<Vec<_>>>()?;

    let mut covariates = Vec::new();
    let mut response = response_idx.map(|_| Vec::new());
    let mut weights = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let cell = |idx: usize, column: &str| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("").trim();
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse {
                    row,
                    column: column.to_string(),
                    value: raw.to_string(),
                }),
            }
        };
        let w = cell(weight_idx, &schema.weight)?;
        if w <= 0.0 {
            return Err(Error::NonPositiveWeight { row });
        }
        weights.push(w);
        if let (Some(idx), Some(ys)) = (response_idx, response.as_mut()) {
            ys.push(cell(idx, schema.response.as_deref().unwrap_or_default())?);
        }
        for (&idx, name) in covariate_idx.iter().zip(&schema.covariates) {
            covariates.push(cell(idx, name)?);
        }
    }
    Ok(
        SurveyDataset::new(covariates, schema.covariates.len(), response, weights)?
            .with_names(schema.covariates.clone(), schema.response.clone()),
    )
}

/// Write the dataset as CSV: covariates, then the response, then the weight
/// column. Values use the shortest representation that parses back to the
/// identical `f64`.
pub fn write_csv<W: Write>(data: &SurveyDataset, weight_column: &str, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = data.covariate_names.iter().map(String::as_str).collect();
    if let Some(name) = data.response_name() {
        header.push(name);
    }
    header.push(weight_column);
    wtr.write_record(&header)?;
    for i in 0..data.n() {
        let mut fields: Vec<String> = data.row(i).iter().map(|v| v.to_string()).collect();
        if let Some(y) = data.response() {
            fields.push(y[i].to_string());
        }
        fields.push(data.raw_weights[i].to_string());
        wtr.write_record(&fields)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scaling_examples() {
        assert_eq!(scale_weights(&[1.0, 1.0, 1.0]).unwrap().as_slice(), &[1.0, 1.0, 1.0]);
        assert_eq!(scale_weights(&[2.0, 2.0]).unwrap().as_slice(), &[1.0, 1.0]);
        let w = scale_weights(&[1.0, 2.0, 3.0]).unwrap();
        for (got, want) in w.as_slice().iter().zip([0.5, 1.0, 1.5]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn scaling_errors() {
        assert!(matches!(
            scale_weights(&[1.0, -2.0, 3.0]),
            Err(Error::NonPositiveWeight { row: 2 })
        ));
        assert!(matches!(
            scale_weights(&[1.0, f64::NAN]),
            Err(Error::NonPositiveWeight { row: 2 })
        ));
        assert!(matches!(
            scale_weights(&[0.0, 1.0]),
            Err(Error::NonPositiveWeight { row: 1 })
        ));
        assert!(matches!(scale_weights(&[1.0]), Err(Error::TooFewObservations { n: 1 })));
    }

    #[test]
    fn scaling_sums_to_n_for_large_samples() {
        let raw: Vec<f64> = (0..1_000_000).map(|i| 1.0 + (i % 977) as f64 * 13.7).collect();
        let w = scale_weights(&raw).unwrap();
        let total = compensated_sum(w.as_slice().iter().copied());
        assert!((total - 1e6).abs() / 1e6 < 1e-12);
    }

    #[test]
    fn huge_weights_do_not_overflow() {
        let w = scale_weights(&[f64::MAX, f64::MAX, f64::MAX / 2.0]).unwrap();
        assert!((w.as_slice()[2] - 0.6).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn scaling_is_scale_invariant(
            raw in prop::collection::vec(1e-3f64..1e3, 2..50),
            c in 1e-4f64..1e4,
        ) {
            let a = scale_weights(&raw).unwrap();
            let scaled: Vec<f64> = raw.iter().map(|w| c * w).collect();
            let b = scale_weights(&scaled).unwrap();
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
            let total = compensated_sum(a.as_slice().iter().copied());
            prop_assert!((total - raw.len() as f64).abs() <= 1e-12 * raw.len() as f64);
        }

        #[test]
        fn scaling_is_idempotent(raw in prop::collection::vec(1e-3f64..1e3, 2..50)) {
            let a = scale_weights(&raw).unwrap();
            let b = scale_weights(a.as_slice()).unwrap();
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }

        #[test]
        fn csv_round_trip_is_bit_exact(
            rows in prop::collection::vec((any::<f64>(), -1e300f64..1e300, 1e-300f64..1e300), 2..20)
        ) {
            let rows: Vec<_> = rows.into_iter().filter(|r| r.0.is_finite()).collect();
            prop_assume!(rows.len() >= 2);
            let x: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let y: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let w: Vec<f64> = rows.iter().map(|r| r.2).collect();
            let data = SurveyDataset::new(x, 1, Some(y), w)
                .unwrap()
                .with_names(vec!["x".into()], Some("y".into()));
            let mut buf = Vec::new();
            write_csv(&data, "w", &mut buf).unwrap();
            let schema = ColumnSchema::new("w").response("y").covariates(["x"]);
            let back = read_csv(buf.as_slice(), &schema).unwrap();
            prop_assert_eq!(back, data);
        }
    }

    #[test]
    fn reads_literal_file() {
        let text = "id,w,y\n1,1,0\n2,2,1\n3,3,1\n";
        let schema = ColumnSchema::new("w").response("y");
        let data = read_csv(text.as_bytes(), &schema).unwrap();
        assert_eq!(data.n(), 3);
        assert_eq!(data.p(), 0);
        assert_eq!(data.raw_weights(), &[1.0, 2.0, 3.0]);
        assert_eq!(data.response().unwrap(), &[0.0, 1.0, 1.0]);
    }

    #[test]
    fn accepts_scientific_notation() {
        let text = "w,x\n1e0,2.5E-1\n2,-3e2\n";
        let data = read_csv(text.as_bytes(), &ColumnSchema::new("w").covariates(["x"])).unwrap();
        assert_eq!(data.covariates(), &[0.25, -300.0]);
    }

    #[test]
    fn rejects_negative_weight_with_row() {
        let text = "w,y\n1,0\n-1,1\n3,1\n";
        let err = read_csv(text.as_bytes(), &ColumnSchema::new("w").response("y")).unwrap_err();
        assert!(matches!(err, Error::NonPositiveWeight { row: 2 }), "{err}");
    }

    #[test]
    fn rejects_missing_weight_column() {
        let text = "weight,y\n1,0\n2,1\n";
        let err = read_csv(text.as_bytes(), &ColumnSchema::new("w").response("y")).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(ref c) if c == "w"));
    }

    #[test]
    fn rejects_missing_and_non_numeric_cells() {
        let text = "w,y\n1,0\n2,\n";
        let err = read_csv(text.as_bytes(), &ColumnSchema::new("w").response("y")).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, ref column, .. } if column == "y"));
        let text = "w,y\n1,abc\n2,1\n";
        let err = read_csv(text.as_bytes(), &ColumnSchema::new("w").response("y")).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }));
        let text = "w,y\n1,NaN\n2,1\n";
        assert!(read_csv(text.as_bytes(), &ColumnSchema::new("w").response("y")).is_err());
    }

    #[test]
    fn dataset_rejects_single_row_and_shape_errors() {
        assert!(matches!(
            SurveyDataset::univariate(vec![1.0], vec![1.0]),
            Err(Error::TooFewObservations { n: 1 })
        ));
        assert!(matches!(
            SurveyDataset::new(vec![1.0, 2.0, 3.0], 2, None, vec![1.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
