use crate::error::{Error, Result};

/// Binary activation codes, one packed row per sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeMatrix {
    units: usize,
    rows: Vec<Vec<u64>>,
}

impl CodeMatrix {
    pub fn from_rows(rows: Vec<Vec<bool>>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InvalidModel("code matrix needs at least one row".into()));
        };
        let units = first.len();
        if rows.iter().any(|r| r.len() != units) {
            return Err(Error::InvalidModel("code rows have different lengths".into()));
        }
        let packed = rows
            .iter()
            .map(|row| {
                row.chunks(64)
                    .map(|chunk| {
                        chunk
                            .iter()
                            .enumerate()
                            .fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i))
                    })
                    .collect()
            })
            .collect();
        Ok(Self { units, rows: packed })
    }

    /// Number of samples.
    pub fn samples(&self) -> usize {
        self.rows.len()
    }

    /// Number of activation units per sample.
    pub fn units(&self) -> usize {
        self.units
    }

    pub fn bit(&self, sample: usize, unit: usize) -> bool {
        self.rows[sample][unit / 64] >> (unit % 64) & 1 == 1
    }

    pub fn row_bits(&self, sample: usize) -> Vec<bool> {
        (0..self.units).map(|u| self.bit(sample, u)).collect()
    }

    pub fn hamming(&self, a: usize, b: usize) -> usize {
        self.rows[a]
            .iter()
            .zip(&self.rows[b])
            .map(|(x, y)| (x ^ y).count_ones() as usize)
            .sum()
    }

    /// Similarity kernel `K[i][j] = units - hamming(i, j)`.
    pub fn kernel(&self) -> Vec<Vec<usize>> {
        let n = self.samples();
        let mut k = vec![vec![0; n]; n];
        for i in 0..n {
            k[i][i] = self.units;
            for j in i + 1..n {
                let v = self.units - self.hamming(i, j);
                k[i][j] = v;
                k[j][i] = v;
            }
        }
        k
    }

    pub fn permute_samples(&self, order: &[usize]) -> Self {
        Self {
            units: self.units,
            rows: order.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}
