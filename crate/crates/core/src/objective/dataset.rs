use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Input/output sample pairs. Inputs are stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    input_names: Vec<String>,
    output_name: String,
    input_dim: usize,
    inputs: Vec<f64>,
    outputs: Vec<f64>,
}

/// What [`load_csv`] skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadStats {
    pub rows_read: usize,
    pub rows_rejected: usize,
}

impl Dataset {
    /// Builds a dataset from row-major inputs.
    pub fn new(name: impl Into<String>, input_dim: usize, inputs: Vec<f64>, outputs: Vec<f64>) -> Result<Self> {
        let input_names = (0..input_dim).map(|i| format!("x{i}")).collect();
        Self::with_names(name, input_names, "y", inputs, outputs)
    }

    pub fn with_names(
        name: impl Into<String>,
        input_names: Vec<String>,
        output_name: impl Into<String>,
        inputs: Vec<f64>,
        outputs: Vec<f64>,
    ) -> Result<Self> {
        let name = name.into();
        let input_dim = input_names.len();
        if input_dim == 0 {
            return Err(Error::data(format!("dataset `{name}` has no input columns")));
        }
        if outputs.is_empty() {
            return Err(Error::data(format!("dataset `{name}` is empty")));
        }
        if inputs.len() != outputs.len() * input_dim {
            return Err(Error::data(format!(
                "dataset `{name}`: {} input values for {} rows of dimension {input_dim}",
                inputs.len(),
                outputs.len()
            )));
        }
        if inputs.iter().chain(&outputs).any(|v| !v.is_finite()) {
            return Err(Error::data(format!("dataset `{name}` contains non-finite values")));
        }
        Ok(Dataset {
            name,
            input_names,
            output_name: output_name.into(),
            input_dim,
            inputs,
            outputs,
        })
    }

    /// Builds a dataset from one vector per input column.
    pub fn from_columns(name: impl Into<String>, columns: Vec<Vec<f64>>, outputs: Vec<f64>) -> Result<Self> {
        let dim = columns.len();
        if columns.iter().any(|c| c.len() != outputs.len()) {
            return Err(Error::data("column lengths differ"));
        }
        let mut inputs = Vec::with_capacity(dim * outputs.len());
        for row in 0..outputs.len() {
            for col in &columns {
                inputs.push(col[row]);
            }
        }
        Self::new(name, dim, inputs, outputs)
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub fn output_name(&self) -> &str {
        &self.output_name
    }

    pub fn input(&self, row: usize) -> &[f64] {
        &self.inputs[row * self.input_dim..(row + 1) * self.input_dim]
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    /// Values of one input column.
    pub fn column(&self, col: usize) -> Vec<f64> {
        self.inputs.iter().skip(col).step_by(self.input_dim).copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.inputs
            .chunks_exact(self.input_dim)
            .zip(self.outputs.iter().copied())
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut inputs = Vec::with_capacity(indices.len() * self.input_dim);
        let mut outputs = Vec::with_capacity(indices.len());
        for &i in indices {
            inputs.extend_from_slice(self.input(i));
            outputs.push(self.outputs[i]);
        }
        Dataset {
            name: self.name.clone(),
            input_names: self.input_names.clone(),
            output_name: self.output_name.clone(),
            input_dim: self.input_dim,
            inputs,
            outputs,
        }
    }

    pub fn with_column_names(mut self, input_names: &[&str], output_name: &str) -> Result<Self> {
        if input_names.len() != self.input_dim {
            return Err(Error::invalid("column name count does not match input dimension"));
        }
        self.input_names = input_names.iter().map(|s| s.to_string()).collect();
        self.output_name = output_name.to_string();
        Ok(self)
    }

    /// Writes a header row of column names followed by one row per sample.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut header: Vec<&str> = self.input_names.iter().map(String::as_str).collect();
        header.push(&self.output_name);
        w.write_record(&header).map_err(|e| Error::csv(path, e))?;
        for (x, y) in self.iter() {
            let mut rec: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            rec.push(y.to_string());
            w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Reads a comma-separated file with a header row.
///
/// Rows whose selected fields are missing, unparsable or non-finite are skipped and
/// counted; a warning is logged when any are dropped.
pub fn load_csv(path: &Path, input_columns: &[&str], output_column: &str) -> Result<(Dataset, LoadStats)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                _ => unreachable!(),
            },
            _ => Error::csv(path, e),
        })?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::data(format!("{}: missing column `{name}`", path.display())))
    };
    let in_idx: Vec<usize> = input_columns.iter().map(|c| find(c)).collect::<Result<_>>()?;
    let out_idx = find(output_column)?;

    let mut stats = LoadStats::default();
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut row_buf = Vec::with_capacity(in_idx.len());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        stats.rows_read += 1;
        let parse = |i: usize| -> Option<f64> {
            rec.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite())
        };
        row_buf.clear();
        row_buf.extend(in_idx.iter().map(|&i| parse(i)));
        match (row_buf.iter().copied().collect::<Option<Vec<f64>>>(), parse(out_idx)) {
            (Some(x), Some(y)) => {
                inputs.extend(x);
                outputs.push(y);
            }
            _ => stats.rows_rejected += 1,
        }
    }
    if stats.rows_rejected > 0 {
        log::warn!(
            "{}: rejected {} of {} rows with missing or non-finite fields",
            path.display(),
            stats.rows_rejected,
            stats.rows_read
        );
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ds = Dataset::with_names(
        name,
        input_columns.iter().map(|s| s.to_string()).collect(),
        output_column,
        inputs,
        outputs,
    )?;
    Ok((ds, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn loads_well_formed_file_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "t.csv", "alpha_rad,fy_n\n-0.1,-500\n0,10\n0.1,480\n");
        let (d, stats) = load_csv(&p, &["alpha_rad"], "fy_n").unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(stats.rows_rejected, 0);
        assert_eq!(d.outputs(), &[-500.0, 10.0, 480.0]);
        assert_eq!(d.input(2), &[0.1]);
    }

    #[test]
    fn rejects_nan_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "t.csv", "alpha_rad,fy_n\n-0.1,-500\n0,NaN\n0.1,480\n0.2,\n");
        let (d, stats) = load_csv(&p, &["alpha_rad"], "fy_n").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(stats, LoadStats { rows_read: 4, rows_rejected: 2 });
    }

    #[test]
    fn header_only_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "t.csv", "alpha_rad,fy_n\n");
        assert!(matches!(load_csv(&p, &["alpha_rad"], "fy_n"), Err(Error::Data(_))));
    }

    #[test]
    fn missing_file_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.csv");
        assert!(matches!(load_csv(&missing, &["a"], "b"), Err(Error::Io { .. })));
        let p = write(&dir, "t.csv", "alpha_rad,fy_n\n0,1\n");
        assert!(matches!(load_csv(&p, &["alpha"], "fy_n"), Err(Error::Data(_))));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = Dataset::from_columns("x", vec![vec![0.25, -1.5e-3]], vec![1.0 / 3.0, 1e9])
            .unwrap()
            .with_column_names(&["alpha_rad"], "fy_n")
            .unwrap();
        let p = dir.path().join("out.csv");
        d.write_csv(&p).unwrap();
        let (back, _) = load_csv(&p, &["alpha_rad"], "fy_n").unwrap();
        assert_eq!(back.outputs(), d.outputs());
        assert_eq!(back.column(0), d.column(0));
    }

    #[test]
    fn construction_invariants() {
        assert!(Dataset::new("e", 1, vec![], vec![]).is_err());
        assert!(Dataset::new("e", 2, vec![1.0], vec![1.0]).is_err());
        assert!(Dataset::new("e", 1, vec![f64::INFINITY], vec![1.0]).is_err());
    }
}
