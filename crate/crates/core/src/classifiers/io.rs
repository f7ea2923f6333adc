//! Linear models persist as keyed weight rows plus a bias row; KNN models as
//! one `label nnz i:v ...` line per stored example.

use std::collections::BTreeMap;
use std::io::Write;

use crate::features::SparseVector;
use crate::linalg::Matrix;
use crate::store::{fmt_real, write_keyed_reals, Artifact, ArtifactHeader, ArtifactKind, BodyLines, StoreError};

use super::knn::NeighborIndex;
use super::{FeatureMatrix, KnnModel, LinearModel, LossKind, Metric};

impl Artifact for LinearModel {
    const KIND: ArtifactKind = ArtifactKind::Linear;

    fn params(&self) -> BTreeMap<String, String> {
        BTreeMap::from([
            ("C".into(), self.weights.rows().to_string()),
            ("F".into(), self.weights.cols().to_string()),
            ("loss".into(), self.loss.as_str().to_string()),
            ("l2".into(), self.l2.to_string()),
        ])
    }

    fn write_body(&self, out: &mut dyn Write) -> std::io::Result<()> {
        for c in 0..self.weights.rows() {
            write_keyed_reals(out, &format!("w{c}"), self.weights.row(c))?;
        }
        write_keyed_reals(out, "bias", &self.bias)
    }

    fn read_body(header: &ArtifactHeader, body: &mut BodyLines<'_>) -> Result<Self, StoreError> {
        let c: usize = header.param_as("C")?;
        let f: usize = header.param_as("F")?;
        let loss: LossKind = header.param_as("loss")?;
        let mut data = Vec::with_capacity(c * f);
        for r in 0..c {
            let (key, row) = body.keyed_reals(f)?;
            if key != format!("w{r}") {
                return Err(StoreError::parse(body.line_no(), format!("expected row w{r}, found {key:?}")));
            }
            data.extend(row);
        }
        let (key, bias) = body.keyed_reals(c)?;
        if key != "bias" {
            return Err(StoreError::parse(body.line_no(), "expected bias row"));
        }
        Ok(LinearModel { weights: Matrix::from_vec(c, f, data), bias, loss, l2: header.param_as("l2")? })
    }
}

impl Artifact for KnnModel {
    const KIND: ArtifactKind = ArtifactKind::Knn;

    fn params(&self) -> BTreeMap<String, String> {
        BTreeMap::from([
            ("N".into(), self.len().to_string()),
            ("dim".into(), self.dim().to_string()),
            ("k".into(), self.k.to_string()),
            ("metric".into(), self.metric().as_str().to_string()),
            ("classes".into(), self.num_classes.to_string()),
        ])
    }

    fn write_body(&self, out: &mut dyn Write) -> std::io::Result<()> {
        for (row, label) in self.index.x.rows().iter().zip(&self.labels) {
            write!(out, "{label} {}", row.len())?;
            for (i, v) in row.indices.iter().zip(&row.values) {
                write!(out, " {i}:{}", fmt_real(*v))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    fn read_body(header: &ArtifactHeader, body: &mut BodyLines<'_>) -> Result<Self, StoreError> {
        let n: usize = header.param_as("N")?;
        let dim: usize = header.param_as("dim")?;
        let metric: Metric = header.param_as("metric")?;
        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let fields = body.fields()?;
            if fields.len() < 2 {
                return Err(StoreError::parse(body.line_no(), "expected label and entry count"));
            }
            labels.push(body.parse::<usize>(fields[0], "label")?);
            let nnz: usize = body.parse(fields[1], "entry count")?;
            if fields.len() != nnz + 2 {
                return Err(StoreError::parse(body.line_no(), format!("expected {nnz} entries")));
            }
            let mut row = SparseVector::default();
            for f in &fields[2..] {
                let (i, v) = f.split_once(':').ok_or_else(|| StoreError::parse(body.line_no(), format!("bad entry {f:?}")))?;
                row.indices.push(body.parse(i, "index")?);
                row.values.push(body.parse(v, "real")?);
            }
            rows.push(row);
        }
        let x = FeatureMatrix::new(dim, rows).map_err(|e| StoreError::parse(body.line_no(), e.to_string()))?;
        Ok(KnnModel { index: NeighborIndex::new(x, metric), labels, num_classes: header.param_as("classes")?, k: header.param_as("k")? })
    }
}
