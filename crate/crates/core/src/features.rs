//! Per-step feature matrices: mean pooling of message vectors,
//! train-fitted z-scoring and Tukey capping.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::sentiment::SentimentScore;
use crate::timegrid::{Partition, StepDataset};

pub fn topic_column(k: usize) -> String {
    format!("lda_topic__{k}")
}

pub fn sentiment_column(component: &str) -> String {
    format!("sentiment_{component}")
}

/// `K` topic columns followed by the four sentiment columns.
pub fn feature_columns(k: usize) -> Vec<String> {
    (0..k)
        .map(topic_column)
        .chain(SentimentScore::COMPONENTS.iter().map(|c| sentiment_column(c)))
        .collect()
}

pub fn message_vector(theta: &[f64], sentiment: SentimentScore) -> Vec<f64> {
    theta.iter().copied().chain(sentiment.to_array()).collect()
}

/// Column-wise arithmetic mean.
pub fn pool_timestep<V: AsRef<[f64]>>(vectors: &[V]) -> Result<Vec<f64>> {
    let first = vectors.first().ok_or(Error::Empty("time step without messages"))?;
    let mut acc = vec![0.0; first.as_ref().len()];
    for v in vectors {
        let v = v.as_ref();
        if v.len() != acc.len() {
            return Err(Error::InvalidArgument("message vectors differ in length".into()));
        }
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
    }
    let n = vectors.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub step_ids: Vec<String>,
    pub columns: Vec<String>,
    pub x: Matrix,
    pub labels: Vec<bool>,
    pub partitions: Vec<Partition>,
}

impl FeatureMatrix {
    pub fn new(step_ids: Vec<String>, columns: Vec<String>, x: Matrix, labels: Vec<bool>, partitions: Vec<Partition>) -> Result<Self> {
        let n = x.nrows();
        if step_ids.len() != n || labels.len() != n || partitions.len() != n || columns.len() != x.ncols() {
            return Err(Error::InvalidArgument("feature matrix parts disagree in shape".into()));
        }
        if !x.is_finite() {
            return Err(Error::InvalidArgument("feature matrix holds non-finite values".into()));
        }
        Ok(Self { step_ids, columns, x, labels, partitions })
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn indices(&self, p: Partition) -> Vec<usize> {
        (0..self.nrows()).filter(|&i| self.partitions[i] == p).collect()
    }

    pub fn subset(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            step_ids: rows.iter().map(|&i| self.step_ids[i].clone()).collect(),
            columns: self.columns.clone(),
            x: self.x.select_rows(rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            partitions: rows.iter().map(|&i| self.partitions[i]).collect(),
        }
    }

    pub fn partition(&self, p: Partition) -> FeatureMatrix {
        self.subset(&self.indices(p))
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn select_columns(&self, names: &[String]) -> Result<FeatureMatrix> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n).ok_or_else(|| Error::InvalidArgument(format!("unknown column `{n}`"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureMatrix { columns: names.to_vec(), x: self.x.select_columns(&idx), ..self.clone() })
    }

    pub fn y(&self) -> Vec<f64> {
        self.labels.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["step_id".to_string(), "label".into(), "partition".into()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.nrows() {
            let mut rec = vec![
                self.step_ids[i].clone(),
                u8::from(self.labels[i]).to_string(),
                self.partitions[i].as_str().to_string(),
            ];
            rec.extend(self.x.row(i).iter().map(|v| format!("{v:.17e}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.len() < 3 || &header[0] != "step_id" || &header[1] != "label" || &header[2] != "partition" {
            return Err(Error::Malformed("feature CSV must start with step_id,label,partition".into()));
        }
        let columns: Vec<String> = header.iter().skip(3).map(String::from).collect();
        let (mut ids, mut labels, mut parts, mut data) = (vec![], vec![], vec![], vec![]);
        for rec in r.records() {
            let rec = rec?;
            ids.push(rec[0].to_string());
            labels.push(match &rec[1] {
                "1" => true,
                "0" => false,
                other => return Err(Error::Malformed(format!("label `{other}`"))),
            });
            parts.push(match &rec[2] {
                "train" => Partition::Train,
                "test" => Partition::Test,
                other => return Err(Error::Malformed(format!("partition `{other}`"))),
            });
            for cell in rec.iter().skip(3) {
                data.push(cell.parse::<f64>().map_err(|_| Error::Malformed(format!("feature value `{cell}`")))?);
            }
        }
        let x = Matrix::from_vec(ids.len(), columns.len(), data)?;
        Self::new(ids, columns, x, labels, parts)
    }
}

/// Pools message vectors per step, train steps first then test steps.
pub fn build_feature_matrix(
    dataset: &StepDataset,
    message_vectors: &HashMap<String, Vec<f64>>,
    columns: Vec<String>,
) -> Result<FeatureMatrix> {
    let (mut ids, mut rows, mut labels, mut parts) = (vec![], vec![], vec![], vec![]);
    for (p, step) in dataset.steps() {
        let vecs = step
            .message_ids
            .iter()
            .map(|id| {
                message_vectors
                    .get(id)
                    .map(Vec::as_slice)
                    .ok_or_else(|| Error::MissingInput(format!("features for message {id}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(pool_timestep(&vecs)?);
        ids.push(step.step_id());
        labels.push(step.label.is_event());
        parts.push(p);
    }
    FeatureMatrix::new(ids, columns, Matrix::from_rows(&rows)?, labels, parts)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample (n - 1) standard deviation.
pub fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub columns: Vec<String>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// Zero-variance columns removed at fit time.
    pub dropped: Vec<String>,
}

impl Standardizer {
    pub fn fit(train: &FeatureMatrix) -> Result<Self> {
        if train.nrows() < 2 {
            return Err(Error::InvalidArgument("standardizer needs >= 2 training rows".into()));
        }
        let mut s = Standardizer { columns: vec![], mean: vec![], sd: vec![], dropped: vec![] };
        for (c, name) in train.columns.iter().enumerate() {
            let col = train.x.column(c);
            let sd = sample_sd(&col);
            let m = mean(&col);
            if sd <= 1e-12 * m.abs().max(1.0) {
                s.dropped.push(name.clone());
            } else {
                s.columns.push(name.clone());
                s.mean.push(m);
                s.sd.push(sd);
            }
        }
        if s.columns.is_empty() {
            return Err(Error::Empty("every feature column is constant on train"));
        }
        Ok(s)
    }

    pub fn apply(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        let mut out = m.select_columns(&self.columns)?;
        for r in 0..out.nrows() {
            for (c, v) in out.x.row_mut(r).iter_mut().enumerate() {
                *v = (*v - self.mean[c]) / self.sd[c];
            }
        }
        Ok(out)
    }
}

/// Tukey's five-number summary (min, lower hinge, median, upper hinge,
/// max) of unsorted data.
pub fn fivenum(values: &[f64]) -> [f64; 5] {
    let mut x = values.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let n4 = ((n + 3.0) / 2.0).floor() / 2.0;
    let d = [1.0, n4, (n + 1.0) / 2.0, n + 1.0 - n4, n];
    d.map(|di| 0.5 * (x[di.floor() as usize - 1] + x[di.ceil() as usize - 1]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyCapper {
    pub columns: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl TukeyCapper {
    pub fn fit(train: &FeatureMatrix) -> Result<Self> {
        if train.nrows() == 0 {
            return Err(Error::Empty("no training rows for capping"));
        }
        let (mut lower, mut upper) = (vec![], vec![]);
        for c in 0..train.columns.len() {
            let [_, q1, _, q3, _] = fivenum(&train.x.column(c));
            let iqr = q3 - q1;
            lower.push(q1 - 1.5 * iqr);
            upper.push(q3 + 1.5 * iqr);
        }
        Ok(Self { columns: train.columns.clone(), lower, upper })
    }

    pub fn apply(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        let mut out = m.select_columns(&self.columns)?;
        for r in 0..out.nrows() {
            for (c, v) in out.x.row_mut(r).iter_mut().enumerate() {
                *v = v.clamp(self.lower[c], self.upper[c]);
            }
        }
        Ok(out)
    }
}
