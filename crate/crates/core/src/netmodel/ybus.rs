use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::Stamp;
use super::{Network, Terminal, TerminalIndex};
use crate::{CMat, Error, Result, C64};

/// Complex-symmetric bus admittance matrix over an ordered terminal set.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmittanceMatrix {
    index: TerminalIndex,
    y: CMat,
}

impl AdmittanceMatrix {
    /// Wraps a dense matrix, rejecting anything that is not exactly symmetric
    /// (up to `1e-12` relative) and symmetrizing the stored values.
    pub fn new(index: TerminalIndex, y: CMat) -> Result<Self> {
        if y.nrows() != index.len() || y.ncols() != index.len() {
            return Err(Error::Shape(format!(
                "matrix is {}x{} but the terminal index has {} entries",
                y.nrows(),
                y.ncols(),
                index.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        let scale = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let n = y.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                if (y[(i, j)] - y[(j, i)]).norm() > 1e-12 * scale.max(1.0) {
                    return Err(Error::InvalidMatrix(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(AdmittanceMatrix {
            index,
            y: symmetrize(y),
        })
    }

    pub fn zeros(index: TerminalIndex) -> Self {
        let n = index.len();
        AdmittanceMatrix {
            index,
            y: CMat::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.y.nrows()
    }

    pub fn index(&self) -> &TerminalIndex {
        &self.index
    }

    pub fn matrix(&self) -> &CMat {
        &self.y
    }

    pub fn into_matrix(self) -> CMat {
        self.y
    }

    pub fn get(&self, a: Terminal, b: Terminal) -> Option<C64> {
        Some(self.y[(self.index.position(a)?, self.index.position(b)?)])
    }

    /// `self − other`; both must share the terminal index.
    pub fn difference(&self, other: &AdmittanceMatrix) -> Result<AdmittanceMatrix> {
        self.check_same_index(other)?;
        Ok(AdmittanceMatrix {
            index: self.index.clone(),
            y: &self.y - &other.y,
        })
    }

    pub fn sum(&self, other: &AdmittanceMatrix) -> Result<AdmittanceMatrix> {
        self.check_same_index(other)?;
        Ok(AdmittanceMatrix {
            index: self.index.clone(),
            y: &self.y + &other.y,
        })
    }

    fn check_same_index(&self, other: &AdmittanceMatrix) -> Result<()> {
        if self.index != other.index {
            return Err(Error::Shape("admittance matrices use different terminal sets".into()));
        }
        Ok(())
    }

    /// `‖Y·1‖_∞`.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.y.row(i).iter().sum::<C64>().norm())
            .fold(0.0, f64::max)
    }

    /// Principal submatrix on the given terminals (in sorted order).
    pub fn restrict(&self, terminals: &[Terminal]) -> Result<AdmittanceMatrix> {
        let index = TerminalIndex::new(terminals.iter().copied());
        let rows = index
            .terminals()
            .iter()
            .map(|t| {
                self.index
                    .position(*t)
                    .ok_or_else(|| Error::Shape(format!("terminal {t} not in matrix")))
            })
            .collect::<Result<Vec<_>>>()?;
        let y = CMat::from_fn(rows.len(), rows.len(), |i, j| self.y[(rows[i], rows[j])]);
        Ok(AdmittanceMatrix { index, y })
    }

    /// Lower-triangular nonzero triplets `(row, col, value)` with `row ≥ col`.
    pub fn lower_triplets(&self) -> Vec<(usize, usize, C64)> {
        let n = self.dim();
        let mut out = Vec::new();
        for j in 0..n {
            for i in j..n {
                let v = self.y[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    /// Number of nonzero entries of the full matrix.
    pub fn nnz(&self) -> usize {
        self.y.iter().filter(|v| **v != C64::new(0.0, 0.0)).count()
    }

    /// Fraction of exactly-zero entries.
    pub fn sparsity(&self) -> f64 {
        let total = self.dim() * self.dim();
        if total == 0 {
            return 1.0;
        }
        1.0 - self.nnz() as f64 / total as f64
    }
}

pub(crate) fn symmetrize(y: CMat) -> CMat {
    let n = y.nrows();
    let mut out = y;
    for j in 0..n {
        for i in (j + 1)..n {
            let v = (out[(i, j)] + out[(j, i)]) * 0.5;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

pub(crate) fn stamp_into(y: &mut CMat, index: &TerminalIndex, stamp: &Stamp, sign: f64) -> Result<()> {
    let pos = |t: &Terminal| {
        index
            .position(*t)
            .ok_or_else(|| Error::InvalidNetwork(format!("terminal {t} not in network")))
    };
    let from = stamp.from.iter().map(pos).collect::<Result<Vec<_>>>()?;
    let to = stamp.to.iter().map(pos).collect::<Result<Vec<_>>>()?;
    let n = from.len();
    for p in 0..n {
        for q in 0..n {
            let series = stamp.series[(p, q)] * sign;
            let diag = series + stamp.half_shunt[(p, q)] * sign;
            y[(from[p], from[q])] += diag;
            y[(to[p], to[q])] += diag;
            y[(from[p], to[q])] -= series;
            y[(to[q], from[p])] -= series;
        }
    }
    Ok(())
}

/// Assembles the bus admittance matrix of a network.
///
/// Diagonal block of node `n` is the sum over incident energized components of
/// `½·Yˢ + Z⁻¹`; the off-diagonal block of a component is `−Z⁻¹`.
pub fn assemble_ybus(net: &Network) -> Result<AdmittanceMatrix> {
    let index = TerminalIndex::new(net.terminals());
    let n = index.len();
    let mut y = CMat::zeros(n, n);
    for stamp in net.stamps()? {
        stamp_into(&mut y, &index, &stamp, 1.0)?;
    }
    Ok(AdmittanceMatrix { index, y })
}

/// On-disk Y-bus representation: lower-triangular sparse triplets plus the
/// terminal index, with complex values split into real and imaginary parts.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YbusFile {
    pub dim: usize,
    pub terminals: TerminalIndex,
    /// `[row, col, re, im]`.
    pub entries: Vec<(usize, usize, f64, f64)>,
    /// Terminals whose block is considered reliable, when produced by a partial identification.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trusted: Option<Vec<Terminal>>,
}

impl YbusFile {
    pub fn from_matrix(y: &AdmittanceMatrix) -> Self {
        YbusFile {
            dim: y.dim(),
            terminals: y.index.clone(),
            entries: y
                .lower_triplets()
                .into_iter()
                .map(|(i, j, v)| (i, j, v.re, v.im))
                .collect(),
            trusted: None,
        }
    }

    /// Rebuilds the matrix, mirroring lower entries. Upper entries are accepted
    /// only if their mirror is present with the same value.
    pub fn to_matrix(&self) -> Result<AdmittanceMatrix> {
        let n = self.dim;
        if self.terminals.len() != n {
            return Err(Error::InvalidMatrix(format!(
                "dim {n} does not match {} terminals",
                self.terminals.len()
            )));
        }
        let mut seen = HashSet::new();
        let mut lower = CMat::zeros(n, n);
        let mut upper = Vec::new();
        for &(i, j, re, im) in &self.entries {
            if i >= n || j >= n {
                return Err(Error::InvalidMatrix(format!("entry ({i}, {j}) out of range for dim {n}")));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidMatrix(format!("duplicate entry ({i}, {j})")));
            }
            let v = C64::new(re, im);
            if !v.is_finite() {
                return Err(Error::InvalidMatrix(format!("non-finite entry ({i}, {j})")));
            }
            if i >= j {
                lower[(i, j)] = v;
            } else {
                upper.push((i, j, v));
            }
        }
        for (i, j, v) in upper {
            if !seen.contains(&(j, i)) || lower[(j, i)] != v {
                return Err(Error::InvalidMatrix(format!(
                    "asymmetric entry ({i}, {j}) without matching ({j}, {i})"
                )));
            }
        }
        for j in 0..n {
            for i in (j + 1)..n {
                lower[(j, i)] = lower[(i, j)];
            }
        }
        Ok(AdmittanceMatrix {
            index: self.terminals.clone(),
            y: lower,
        })
    }
}

pub fn write_ybus(path: impl AsRef<Path>, y: &AdmittanceMatrix, trusted: Option<&[Terminal]>) -> Result<()> {
    let path = path.as_ref();
    let mut file = YbusFile::from_matrix(y);
    file.trusted = trusted.map(|t| t.to_vec());
    let text = serde_json::to_string_pretty(&file).expect("ybus serializes");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_ybus(path: impl AsRef<Path>) -> Result<(AdmittanceMatrix, Option<Vec<Terminal>>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: YbusFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let y = file.to_matrix()?;
    Ok((y, file.trusted))
}
