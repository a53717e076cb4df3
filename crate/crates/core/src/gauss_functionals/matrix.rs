use serde::{Deserialize, Serialize};

use super::poly::{carre_du_champ, common_dim, PolyFunctional};
use crate::error::{Error, Result};

/// Γ(F_i, F_j) for a vector F; row-major, symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaMatrix {
    d: usize,
    entries: Vec<PolyFunctional>,
}

const MAX_DIM: usize = 6;

impl GammaMatrix {
    pub fn of(fs: &[PolyFunctional]) -> Result<Self> {
        let d = fs.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::Dimension(format!("functional vectors of length 1..={MAX_DIM}, got {d}")));
        }
        let fs = common_dim(fs);
        let mut entries = vec![PolyFunctional::zero(fs[0].dim()); d * d];
        for i in 0..d {
            for j in i..d {
                let g = carre_du_champ(&fs[i], &fs[j]);
                entries[j * d + i] = g.clone();
                entries[i * d + j] = g;
            }
        }
        Ok(GammaMatrix { d, entries })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> &PolyFunctional {
        &self.entries[i * self.d + j]
    }

    pub fn det(&self) -> PolyFunctional {
        let idx: Vec<usize> = (0..self.d).collect();
        self.minor_det(&idx, &idx)
    }

    /// Laplace expansion along the first listed row.
    fn minor_det(&self, rows: &[usize], cols: &[usize]) -> PolyFunctional {
        if rows.len() == 1 {
            return self.get(rows[0], cols[0]).clone();
        }
        let n = self.entries[0].dim();
        let mut acc = PolyFunctional::zero(n);
        for (k, &c) in cols.iter().enumerate() {
            let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
            let m = self.minor_det(&rows[1..], &sub_cols);
            let t = self.get(rows[0], c).mul(&m);
            acc = if k % 2 == 0 { acc.add(&t) } else { acc.sub(&t) };
        }
        acc
    }

    /// adj with adj·Γ̃ = det·Id, row-major.
    pub fn adjugate(&self) -> Vec<PolyFunctional> {
        let d = self.d;
        if d == 1 {
            return vec![PolyFunctional::constant(self.entries[0].dim(), 1.0)];
        }
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                // cofactor of entry (j, i)
                let rows: Vec<usize> = (0..d).filter(|&r| r != j).collect();
                let cols: Vec<usize> = (0..d).filter(|&c| c != i).collect();
                let m = self.minor_det(&rows, &cols);
                out.push(if (i + j) % 2 == 0 { m } else { m.scale(-1.0) });
            }
        }
        out
    }
}
