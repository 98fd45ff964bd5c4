use std::io::Write;

use super::ScreeningError;
use crate::dataset::{format_number, Dataset};

/// Symmetric Pearson correlation matrix with a fixed variable order.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    names: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    /// Takes a full square matrix as given (no checks beyond shape). Used for
    /// published matrices and fixtures.
    pub fn from_values(names: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self, ScreeningError> {
        let k = names.len();
        if values.len() != k || values.iter().any(|r| r.len() != k) {
            return Err(ScreeningError::Shape(format!("{k} names but matrix is not {k}x{k}")));
        }
        Ok(Self { names, values })
    }

    /// Correlations of equally long columns. Only the upper triangle is
    /// computed; the lower one is mirrored and the diagonal set to 1.
    pub fn from_columns(names: Vec<String>, columns: &[Vec<f64>]) -> Result<Self, ScreeningError> {
        let k = names.len();
        let centered: Vec<(Vec<f64>, f64)> = names
            .iter()
            .zip(columns)
            .map(|(name, col)| {
                let n = col.len() as f64;
                let mean = col.iter().sum::<f64>() / n;
                let c: Vec<f64> = col.iter().map(|v| v - mean).collect();
                let ss = c.iter().map(|v| v * v).sum::<f64>();
                if !(ss > 0.0) {
                    return Err(ScreeningError::ZeroVariance(name.clone()));
                }
                Ok((c, ss.sqrt()))
            })
            .collect::<Result<_, _>>()?;
        let mut values = vec![vec![0.0; k]; k];
        for i in 0..k {
            values[i][i] = 1.0;
            for j in (i + 1)..k {
                let (ci, si) = &centered[i];
                let (cj, sj) = &centered[j];
                let cov: f64 = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
                let r = (cov / (si * sj)).clamp(-1.0, 1.0);
                values[i][j] = r;
                values[j][i] = r;
            }
        }
        Ok(Self { names, values })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.values[self.index_of(a)?][self.index_of(b)?])
    }

    /// Square CSV with variable names along the first row and column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ScreeningError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["variable".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in self.names.iter().zip(&self.values) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|&v| format_number(v)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Pearson r of two columns (population moments; the n's cancel).
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, ScreeningError> {
    let m = CorrelationMatrix::from_columns(vec!["a".into(), "b".into()], &[a.to_vec(), b.to_vec()])?;
    Ok(m.values[0][1])
}

/// Correlation matrix of dataset columns. Categorical codes are used as
/// plain numbers.
pub fn pearson_matrix(data: &Dataset, variables: &[String]) -> Result<CorrelationMatrix, ScreeningError> {
    let columns = variables
        .iter()
        .map(|v| data.column(v))
        .collect::<Result<Vec<_>, _>>()?;
    CorrelationMatrix::from_columns(variables.to_vec(), &columns)
}
