//! Bit-parallel batched membership checks and the assignment file format.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sdd::{Circuit, CircuitNode};

/// A row-major matrix of bits, each row padded to whole 64-bit words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix {
            rows,
            cols,
            words: vec![0; rows * cols.div_ceil(64)],
        }
    }

    pub fn from_rows(cols: usize, rows: &[Vec<bool>]) -> Result<Self> {
        let mut m = BitMatrix::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::LengthMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            for (c, &b) in row.iter().enumerate() {
                m.set(r, c, b);
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn stride(&self) -> usize {
        self.cols.div_ceil(64)
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.words[r * self.stride() + c / 64] >> (c % 64) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, b: bool) {
        let i = r * self.stride() + c / 64;
        if b {
            self.words[i] |= 1 << (c % 64);
        } else {
            self.words[i] &= !(1 << (c % 64));
        }
    }

    pub fn row(&self, r: usize) -> Vec<bool> {
        (0..self.cols).map(|c| self.get(r, c)).collect()
    }

    /// Raw words of row `r`.
    pub fn row_words(&self, r: usize) -> &[u64] {
        let s = self.stride();
        &self.words[r * s..(r + 1) * s]
    }

    /// Mutable raw words of row `r`; bits past `cols` must stay zero.
    pub fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        let s = self.stride();
        &mut self.words[r * s..(r + 1) * s]
    }
}

/// Evaluates up to 64 rows starting at `start`, one bit lane per row.
fn eval_block(c: &Circuit, xs: &BitMatrix, start: usize, vars: &mut [u64], val: &mut [u64]) -> u64 {
    let n = (xs.rows - start).min(64);
    vars.iter_mut().for_each(|w| *w = 0);
    for lane in 0..n {
        for (wi, &w) in xs.row_words(start + lane).iter().enumerate() {
            let mut bits = w;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                vars[wi * 64 + b] |= 1 << lane;
                bits &= bits - 1;
            }
        }
    }
    for (i, node) in c.nodes().iter().enumerate() {
        val[i] = match node {
            CircuitNode::False => 0,
            CircuitNode::True => !0,
            CircuitNode::Literal { var, positive } => {
                if *positive {
                    vars[*var]
                } else {
                    !vars[*var]
                }
            }
            CircuitNode::Decision { elements, .. } => {
                elements.iter().fold(0, |acc, &(p, s)| acc | (val[p] & val[s]))
            }
        };
    }
    let mask = if n == 64 { !0 } else { (1u64 << n) - 1 };
    val[c.root()] & mask
}

fn eval_range(c: &Circuit, xs: &BitMatrix, blocks: std::ops::Range<usize>) -> Vec<u64> {
    let mut vars = vec![0u64; xs.stride() * 64];
    let mut val = vec![0u64; c.node_count()];
    blocks.map(|b| eval_block(c, xs, b * 64, &mut vars, &mut val)).collect()
}

fn check_shape(c: &Circuit, xs: &BitMatrix) -> Result<()> {
    if xs.cols != c.num_vars() {
        return Err(Error::LengthMismatch {
            expected: c.num_vars(),
            found: xs.cols,
        });
    }
    Ok(())
}

fn unpack(rows: usize, lanes: Vec<u64>) -> Vec<bool> {
    (0..rows).map(|r| lanes[r / 64] >> (r % 64) & 1 == 1).collect()
}

/// Membership of every row, computed 64 rows at a time on one thread.
pub fn evaluate_batch(c: &Circuit, xs: &BitMatrix) -> Result<Vec<bool>> {
    check_shape(c, xs)?;
    Ok(unpack(xs.rows, eval_range(c, xs, 0..xs.rows.div_ceil(64))))
}

/// [`evaluate_batch`] with rows partitioned over `threads` workers. The
/// result does not depend on the partitioning.
pub fn evaluate_batch_threads(c: &Circuit, xs: &BitMatrix, threads: usize) -> Result<Vec<bool>> {
    check_shape(c, xs)?;
    let blocks = xs.rows.div_ceil(64);
    if threads <= 1 || blocks < 2 {
        return evaluate_batch(c, xs);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let chunk = blocks.div_ceil(threads * 4).max(1);
    let parts: Vec<Vec<u64>> = pool.install(|| {
        (0..blocks.div_ceil(chunk))
            .into_par_iter()
            .map(|k| eval_range(c, xs, k * chunk..((k + 1) * chunk).min(blocks)))
            .collect()
    });
    Ok(unpack(xs.rows, parts.concat()))
}

/// Parses an assignment file: a tab-separated header naming exactly
/// `columns` in order, then one row of `0`/`1` cells per assignment.
pub fn read_assignments(text: &str, columns: &[String]) -> Result<BitMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let Some(header) = lines.next() else {
        return Ok(BitMatrix::zeros(0, columns.len()));
    };
    let names: Vec<&str> = header.split('\t').map(str::trim).collect();
    if names.len() != columns.len() || names.iter().zip(columns).any(|(a, b)| a != b) {
        return Err(Error::Schema(format!(
            "assignment header does not match the variable map: expected `{}`",
            columns.join("\t")
        )));
    }
    let rows: Vec<&str> = lines.collect();
    let mut m = BitMatrix::zeros(rows.len(), columns.len());
    for (r, line) in rows.iter().enumerate() {
        let cells: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cells.len() != columns.len() {
            return Err(Error::Schema(format!(
                "row {} has {} cells, expected {}",
                r + 2,
                cells.len(),
                columns.len()
            )));
        }
        for (c, cell) in cells.iter().enumerate() {
            match *cell {
                "0" => {}
                "1" => m.set(r, c, true),
                other => {
                    return Err(Error::Schema(format!(
                        "row {}, column {}: expected 0 or 1, found `{other}`",
                        r + 2,
                        c + 1
                    )))
                }
            }
        }
    }
    Ok(m)
}

/// Renders assignments with a result column named `result_name` appended.
pub fn write_results(columns: &[String], xs: &BitMatrix, results: &[bool], result_name: &str) -> String {
    let mut out = String::with_capacity((xs.rows() + 1) * (2 * columns.len() + 2));
    out.push_str(&columns.join("\t"));
    out.push('\t');
    out.push_str(result_name);
    out.push('\n');
    for (r, &ok) in results.iter().enumerate() {
        for c in 0..xs.cols() {
            out.push(if xs.get(r, c) { '1' } else { '0' });
            out.push('\t');
        }
        out.push(if ok { '1' } else { '0' });
        out.push('\n');
    }
    out
}
