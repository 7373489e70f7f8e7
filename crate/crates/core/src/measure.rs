//! Finite measure spaces and grid functions.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// A finite family of cells with positive weights `mu_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MeasureSpace {
    weights: Vec<f64>,
}

impl TryFrom<Vec<f64>> for MeasureSpace {
    type Error = Error;

    fn try_from(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights)
    }
}

impl From<MeasureSpace> for Vec<f64> {
    fn from(space: MeasureSpace) -> Self {
        space.weights
    }
}

impl MeasureSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("measure space needs at least one cell".into()));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidInput(format!("cell {i} has non-positive or non-finite weight {w}")));
        }
        Ok(Self { weights })
    }

    /// `n` cells of weight `total / n`.
    pub fn uniform(n: usize, total: f64) -> Result<Self> {
        Self::new(vec![total / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Splits every cell into `factor` cells of weight `mu_i / factor`.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor < 2 {
            return Err(Error::Precondition(format!("refine factor must be >= 2, got {factor}")));
        }
        let weights = self
            .weights
            .iter()
            .flat_map(|&w| std::iter::repeat_n(w / factor as f64, factor))
            .collect();
        Ok(Self { weights })
    }

    /// Splits only cell `index` into `factor` equal cells, which stay
    /// contiguous starting at `index`.
    pub fn split_cell(&self, index: usize, factor: usize) -> Result<Self> {
        if factor < 2 {
            return Err(Error::Precondition(format!("split factor must be >= 2, got {factor}")));
        }
        if index >= self.len() {
            return Err(Error::InvalidInput(format!("cell {index} out of range")));
        }
        let mut weights = Vec::with_capacity(self.len() + factor - 1);
        weights.extend_from_slice(&self.weights[..index]);
        weights.extend(std::iter::repeat_n(self.weights[index] / factor as f64, factor));
        weights.extend_from_slice(&self.weights[index + 1..]);
        Ok(Self { weights })
    }

    /// `<y, x> = sum y_i x_i mu_i`.
    pub fn coupling(&self, y: &GridFunction, x: &GridFunction) -> Result<f64> {
        check_len(self.len(), y.len())?;
        check_len(self.len(), x.len())?;
        Ok(self.coupling_unchecked(y.values(), x.values()))
    }

    pub(crate) fn coupling_unchecked(&self, y: &[f64], x: &[f64]) -> f64 {
        self.weights.iter().zip(y).zip(x).map(|((w, a), b)| a * b * w).sum()
    }

    /// `||x||_2 = sqrt(sum x_i^2 mu_i)`.
    pub fn l2_norm(&self, x: &GridFunction) -> Result<f64> {
        check_len(self.len(), x.len())?;
        Ok(self.coupling_unchecked(x.values(), x.values()).sqrt())
    }

    /// `sum |x_i| mu_i`.
    pub fn l1_norm(&self, x: &GridFunction) -> Result<f64> {
        check_len(self.len(), x.len())?;
        Ok(self.weights.iter().zip(x.values()).map(|(w, v)| v.abs() * w).sum())
    }

    /// The indicator of `cells` and its measure `mu(D)`.
    pub fn indicator(&self, cells: &[usize]) -> Result<(GridFunction, f64)> {
        if cells.is_empty() {
            return Err(Error::InvalidInput("indicator needs a nonempty cell set".into()));
        }
        let mut values = vec![0.0; self.len()];
        for &c in cells {
            if c >= self.len() {
                return Err(Error::InvalidInput(format!("cell {c} out of range 0..{}", self.len())));
            }
            values[c] = 1.0;
        }
        let measure = values.iter().zip(&self.weights).map(|(v, w)| v * w).sum();
        Ok((GridFunction { values }, measure))
    }

    /// The function identically equal to one.
    pub fn ones(&self) -> GridFunction {
        GridFunction { values: vec![1.0; self.len()] }
    }
}

/// One real value per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct GridFunction {
    values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for GridFunction {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<GridFunction> for Vec<f64> {
    fn from(f: GridFunction) -> Self {
        f.values
    }
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("value {i} is not finite: {v}")));
        }
        Ok(Self { values })
    }

    /// Builds a grid function on `space`, checking the length.
    pub fn on(space: &MeasureSpace, values: Vec<f64>) -> Result<Self> {
        check_len(space.len(), values.len())?;
        Self::new(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * s).collect() }
    }

    /// Keeps `x_i` where `|x_i| >= threshold`, zeroes the rest.
    pub fn truncate_below(&self, threshold: f64) -> Result<Self> {
        if !(threshold >= 0.0) {
            return Err(Error::Precondition(format!("threshold must be >= 0, got {threshold}")));
        }
        let values = self
            .values
            .iter()
            .map(|&v| if v.abs() >= threshold { v } else { 0.0 })
            .collect();
        Ok(Self { values })
    }

    /// Lifts to a space refined by `factor` by repeating each value.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor < 2 {
            return Err(Error::Precondition(format!("refine factor must be >= 2, got {factor}")));
        }
        let values = self.values.iter().flat_map(|&v| std::iter::repeat_n(v, factor)).collect();
        Ok(Self { values })
    }
}
