//! Banded LU factorization with partial pivoting.
//!
//! Row `r` stores columns `r − kl ..= r + kl + ku`; the extra `kl`
//! super-diagonals hold the fill-in created by row interchanges.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BandError {
    #[error("entry ({row}, {col}) lies outside the band (kl={kl}, ku={ku})")]
    OutsideBand { row: usize, col: usize, kl: usize, ku: usize },
    #[error("matrix is singular at pivot {0}")]
    Singular(usize),
    #[error("right-hand side has length {got}, expected {expected}")]
    Length { expected: usize, got: usize },
}

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        r * self.width + (c + self.kl - r)
    }

    pub fn add(&mut self, r: usize, c: usize, v: f64) -> Result<(), BandError> {
        if c + self.kl < r || c > r + self.ku || r >= self.n || c >= self.n {
            return Err(BandError::OutsideBand { row: r, col: c, kl: self.kl, ku: self.ku });
        }
        let i = self.idx(r, c);
        self.data[i] += v;
        Ok(())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        if c + self.kl < r || c > r + self.kl + self.ku || r >= self.n || c >= self.n {
            0.0
        } else {
            self.data[self.idx(r, c)]
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                let lo = r.saturating_sub(self.kl);
                let hi = (r + self.ku).min(self.n - 1);
                (lo..=hi).map(|c| self.get(r, c) * x[c]).sum()
            })
            .collect()
    }

    pub fn factor(mut self) -> Result<BandLu, BandError> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut piv = vec![0usize; n];
        for i in 0..n {
            let last_row = (i + kl).min(n - 1);
            let last_col = (i + kl + ku).min(n - 1);
            let mut p = i;
            let mut best = self.data[self.idx(i, i)].abs();
            for r in i + 1..=last_row {
                let v = self.data[self.idx(r, i)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(BandError::Singular(i));
            }
            piv[i] = p;
            if p != i {
                for c in i..=last_col {
                    let (a, b) = (self.idx(i, c), self.idx(p, c));
                    self.data.swap(a, b);
                }
            }
            let d = self.data[self.idx(i, i)];
            for r in i + 1..=last_row {
                let ri = self.idx(r, i);
                let l = self.data[ri] / d;
                self.data[ri] = l;
                if l == 0.0 {
                    continue;
                }
                let (row_i, row_r) = (self.idx(i, i + 1), self.idx(r, i + 1));
                let len = last_col - i;
                for t in 0..len {
                    self.data[row_r + t] -= l * self.data[row_i + t];
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &mut [f64]) -> Result<(), BandError> {
        let m = &self.m;
        let n = m.n;
        if b.len() != n {
            return Err(BandError::Length { expected: n, got: b.len() });
        }
        for i in 0..n {
            b.swap(i, self.piv[i]);
            let bi = b[i];
            for r in i + 1..=(i + m.kl).min(n - 1) {
                b[r] -= m.data[m.idx(r, i)] * bi;
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for c in i + 1..=(i + m.kl + m.ku).min(n - 1) {
                acc -= m.data[m.idx(i, c)] * b[c];
            }
            b[i] = acc / m.data[m.idx(i, i)];
        }
        Ok(())
    }
}
