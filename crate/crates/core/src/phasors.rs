//! Synchronized phasor measurement datasets.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::netmodel::{NodeId, Phase, Terminal, TerminalIndex};
use crate::{CMat, Error, Result, C64};

/// Default relative tolerance for [`PhasorDataset::numerical_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Voltages `V` and injected currents `I` (terminals × slots), both per-unit.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasorDataset {
    index: TerminalIndex,
    v: CMat,
    i: CMat,
    slot_seconds: f64,
}

impl PhasorDataset {
    pub fn new(index: TerminalIndex, v: CMat, i: CMat, slot_seconds: f64) -> Result<Self> {
        if v.shape() != i.shape() {
            return Err(Error::Shape(format!(
                "V is {:?} but I is {:?}",
                v.shape(),
                i.shape()
            )));
        }
        if v.nrows() != index.len() {
            return Err(Error::Shape(format!(
                "{} data rows for {} terminals",
                v.nrows(),
                index.len()
            )));
        }
        if v.ncols() == 0 {
            return Err(Error::InvalidData("dataset has no time slots".into()));
        }
        if v.iter().chain(i.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidData("dataset contains non-finite values".into()));
        }
        if !(slot_seconds > 0.0 && slot_seconds.is_finite()) {
            return Err(Error::InvalidParameter(format!("slot period must be positive, got {slot_seconds}")));
        }
        Ok(PhasorDataset { index, v, i, slot_seconds })
    }

    pub fn index(&self) -> &TerminalIndex {
        &self.index
    }

    pub fn v(&self) -> &CMat {
        &self.v
    }

    pub fn i(&self) -> &CMat {
        &self.i
    }

    pub fn dim(&self) -> usize {
        self.v.nrows()
    }

    pub fn slots(&self) -> usize {
        self.v.ncols()
    }

    pub fn slot_seconds(&self) -> f64 {
        self.slot_seconds
    }

    /// Voltage and current columns of slot `k`.
    pub fn slot(&self, k: usize) -> (DVector<C64>, DVector<C64>) {
        (self.v.column(k).into_owned(), self.i.column(k).into_owned())
    }

    /// Dataset restricted to the given slots, in the given order.
    pub fn select_slots(&self, slots: &[usize]) -> Result<PhasorDataset> {
        if let Some(&bad) = slots.iter().find(|&&k| k >= self.slots()) {
            return Err(Error::InvalidParameter(format!("slot {bad} out of range 0..{}", self.slots())));
        }
        PhasorDataset::new(
            self.index.clone(),
            self.v.select_columns(slots),
            self.i.select_columns(slots),
            self.slot_seconds,
        )
    }

    /// Contiguous slot range `start..end`.
    pub fn window(&self, start: usize, end: usize) -> Result<PhasorDataset> {
        let slots: Vec<usize> = (start..end).collect();
        self.select_slots(&slots)
    }

    /// Row rank of `V`: singular values above `tol · σ_max`.
    pub fn numerical_rank(&self, tol: f64) -> usize {
        linalg::numerical_rank(&self.v, tol)
    }

    /// Adds i.i.d. complex Gaussian noise (real and imaginary parts each
    /// `N(0, σ²)`) to the voltages, and to the currents when `currents` is set.
    pub fn add_noise(&self, sigma: f64, seed: u64, currents: bool) -> Result<PhasorDataset> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise σ must be ≥ 0, got {sigma}")));
        }
        let mut out = self.clone();
        if sigma == 0.0 {
            return Ok(out);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        for z in out.v.iter_mut() {
            *z += C64::new(normal.sample(&mut rng), normal.sample(&mut rng));
        }
        if currents {
            for z in out.i.iter_mut() {
                *z += C64::new(normal.sample(&mut rng), normal.sample(&mut rng));
            }
        }
        Ok(out)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<PhasorDataset> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(f).map_err(|e| match e {
            Error::InvalidData(m) => Error::Parse {
                path: path.display().to_string(),
                message: m,
            },
            other => other,
        })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_csv_writer(f).map_err(|e| match e {
            Error::InvalidData(m) => Error::io(path, std::io::Error::other(m)),
            other => other,
        })
    }

    /// Parses `k,node,phase,v_re,v_im,i_re,i_im` rows; slots are 0-based.
    pub fn from_csv_reader(r: impl Read) -> Result<PhasorDataset> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rdr.headers().map_err(|e| Error::InvalidData(e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(Error::InvalidData(format!(
                "expected header {}, found {}",
                CSV_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut values: HashMap<(Terminal, usize), (C64, C64)> = HashMap::new();
        let mut max_k = 0usize;
        for (line, rec) in rdr.deserialize::<CsvRow>().enumerate() {
            let row = rec.map_err(|e| Error::InvalidData(format!("row {}: {e}", line + 2)))?;
            let t = row
                .terminal()
                .map_err(|m| Error::InvalidData(format!("row {}: {m}", line + 2)))?;
            let val = row.values(t)?;
            if values.insert((t, row.k), val).is_some() {
                return Err(Error::InvalidData(format!(
                    "duplicate row for (node {}, phase {}, k {})",
                    t.node, t.phase, row.k
                )));
            }
            max_k = max_k.max(row.k);
        }
        if values.is_empty() {
            return Err(Error::InvalidData("no data rows".into()));
        }
        let index = TerminalIndex::new(values.keys().map(|(t, _)| *t));
        let k_count = max_k + 1;
        let mut v = CMat::zeros(index.len(), k_count);
        let mut i = CMat::zeros(index.len(), k_count);
        for k in 0..k_count {
            for (row, &t) in index.terminals().iter().enumerate() {
                let (vv, ii) = values.get(&(t, k)).ok_or_else(|| {
                    Error::InvalidData(format!(
                        "missing sample for (node {}, phase {}, k {k})",
                        t.node, t.phase
                    ))
                })?;
                v[(row, k)] = *vv;
                i[(row, k)] = *ii;
            }
        }
        PhasorDataset::new(index, v, i, 1.0)
    }

    /// Writes slot-major rows with 17 significant digits.
    pub fn to_csv_writer(&self, w: impl Write) -> Result<()> {
        let mut wtr = std::io::BufWriter::new(w);
        let io = |e: std::io::Error| Error::InvalidData(e.to_string());
        writeln!(wtr, "k,node,phase,v_re,v_im,i_re,i_im").map_err(io)?;
        for k in 0..self.slots() {
            for (row, t) in self.index.terminals().iter().enumerate() {
                let (v, i) = (self.v[(row, k)], self.i[(row, k)]);
                writeln!(
                    wtr,
                    "{k},{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                    t.node, t.phase, v.re, v.im, i.re, i.im
                )
                .map_err(io)?;
            }
        }
        wtr.flush().map_err(io)?;
        Ok(())
    }
}

/// Incremental reader over a slot-major phasor CSV: yields `(k, v, i)` for
/// slots `0, 1, 2, …` as soon as each slot's rows have been read.
pub struct SlotStream<R: Read> {
    rows: csv::DeserializeRecordsIntoIter<R, CsvRow>,
    index: TerminalIndex,
    line: usize,
    next_k: usize,
    pending: Option<CsvRow>,
    done: bool,
}

impl<R: Read> SlotStream<R> {
    /// Every slot must carry exactly the terminals of `index`.
    pub fn new(r: R, index: TerminalIndex) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rdr.headers().map_err(|e| Error::InvalidData(e.to_string()))?;
        if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(Error::InvalidData(format!("expected header {}", CSV_HEADER.join(","))));
        }
        Ok(SlotStream {
            rows: rdr.into_deserialize(),
            index,
            line: 1,
            next_k: 0,
            pending: None,
            done: false,
        })
    }

    pub fn index(&self) -> &TerminalIndex {
        &self.index
    }

    fn next_row(&mut self) -> Option<Result<CsvRow>> {
        if let Some(r) = self.pending.take() {
            return Some(Ok(r));
        }
        let rec = self.rows.next()?;
        self.line += 1;
        Some(rec.map_err(|e| Error::InvalidData(format!("row {}: {e}", self.line))))
    }

    fn read_slot(&mut self) -> Result<Option<(usize, DVector<C64>, DVector<C64>)>> {
        let n = self.index.len();
        let k = self.next_k;
        let mut v = DVector::zeros(n);
        let mut i = DVector::zeros(n);
        let mut seen = vec![false; n];
        let mut count = 0;
        while let Some(row) = self.next_row() {
            let row = row?;
            if row.k != k {
                if count == 0 || row.k != k + 1 {
                    return Err(Error::InvalidData(format!(
                        "row {}: slot {} out of order (expected {k}{})",
                        self.line,
                        row.k,
                        if count == 0 { String::new() } else { format!(" or {}", k + 1) }
                    )));
                }
                self.pending = Some(row);
                break;
            }
            let t = row.terminal().map_err(|m| Error::InvalidData(format!("row {}: {m}", self.line)))?;
            let r = self.index.position(t).ok_or_else(|| {
                Error::Shape(format!("(node {}, phase {}, k {k}) is not a terminal of the model", t.node, t.phase))
            })?;
            if seen[r] {
                return Err(Error::InvalidData(format!(
                    "duplicate row for (node {}, phase {}, k {k})",
                    t.node, t.phase
                )));
            }
            seen[r] = true;
            count += 1;
            (v[r], i[r]) = row.values(t)?;
        }
        if count == 0 {
            return Ok(None);
        }
        if let Some(r) = seen.iter().position(|s| !s) {
            let t = self.index.terminal(r);
            if k == 0 {
                return Err(Error::Shape(format!(
                    "stream carries {count} terminals per slot, the model has {n} (missing node {}, phase {})",
                    t.node, t.phase
                )));
            }
            return Err(Error::InvalidData(format!(
                "missing sample for (node {}, phase {}, k {k})",
                t.node, t.phase
            )));
        }
        self.next_k += 1;
        Ok(Some((k, v, i)))
    }
}

impl<R: Read> Iterator for SlotStream<R> {
    type Item = Result<(usize, DVector<C64>, DVector<C64>)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let out = self.read_slot().transpose();
        if !matches!(out, Some(Ok(_))) {
            self.done = true;
        }
        out
    }
}

const CSV_HEADER: [&str; 7] = ["k", "node", "phase", "v_re", "v_im", "i_re", "i_im"];

#[derive(Deserialize, Serialize)]
struct CsvRow {
    k: usize,
    node: NodeId,
    phase: String,
    v_re: f64,
    v_im: f64,
    i_re: f64,
    i_im: f64,
}

impl CsvRow {
    fn terminal(&self) -> std::result::Result<Terminal, String> {
        let phase = Phase::parse(&self.phase).ok_or_else(|| format!("unknown phase {:?}", self.phase))?;
        Ok(Terminal::new(self.node, phase))
    }

    fn values(&self, t: Terminal) -> Result<(C64, C64)> {
        let nums = [self.v_re, self.v_im, self.i_re, self.i_im];
        if nums.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite value at (node {}, phase {}, k {})",
                t.node, t.phase, self.k
            )));
        }
        Ok((C64::new(self.v_re, self.v_im), C64::new(self.i_re, self.i_im)))
    }
}
