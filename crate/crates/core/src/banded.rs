//! Banded complex LU factorization with partial pivoting.
//!
//! Storage follows the LAPACK `gbtrf` layout: column-major with leading
//! dimension `2*kl + ku + 1`, so that fill-in from row interchanges fits in
//! the extra `kl` superdiagonals.

use num_complex::Complex64;

/// Square band matrix with `kl` sub- and `ku` superdiagonals, ready to be factorized.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    ab: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ld,
            ab: vec![Complex64::new(0.0, 0.0); ld * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn pos(&self, row: usize, col: usize) -> usize {
        debug_assert!(row + self.kl + self.ku >= col && row <= col + self.kl);
        self.kl + self.ku + row - col + col * self.ld
    }

    pub fn in_band(&self, row: usize, col: usize) -> bool {
        row < self.n && col < self.n && col <= row + self.ku && row <= col + self.kl
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        if self.in_band(row, col) {
            self.ab[self.pos(row, col)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Adds `value` at `(row, col)`. Panics outside the declared band.
    pub fn add(&mut self, row: usize, col: usize, value: Complex64) {
        assert!(self.in_band(row, col), "({row}, {col}) outside band");
        let p = self.pos(row, col);
        self.ab[p] += value;
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        assert!(self.in_band(row, col), "({row}, {col}) outside band");
        let p = self.pos(row, col);
        self.ab[p] = value;
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.n];
        for (row, yr) in y.iter_mut().enumerate() {
            let lo = row.saturating_sub(self.kl);
            let hi = (row + self.ku).min(self.n - 1);
            for col in lo..=hi {
                *yr += self.ab[self.pos(row, col)] * x[col];
            }
        }
        y
    }

    /// Factorizes in place. On a zero pivot returns its 0-based column.
    pub fn factorize(mut self) -> Result<BandLu, usize> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let kv = kl + ku;
        let mut pivots = vec![0usize; n];
        // Last column touched by U so far.
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = -1.0;
            for r in 0..=km {
                let v = self.ab[self.pos(j + r, j)].norm_sqr();
                if v > best {
                    best = v;
                    jp = r;
                }
            }
            pivots[j] = j + jp;
            if best == 0.0 {
                return Err(j);
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = self.pos(j, c);
                    let b = self.pos(j + jp, c);
                    self.ab.swap(a, b);
                }
            }
            let inv = Complex64::new(1.0, 0.0) / self.ab[self.pos(j, j)];
            for r in 1..=km {
                let p = self.pos(j + r, j);
                self.ab[p] *= inv;
            }
            for c in j + 1..=ju {
                let u = self.ab[self.pos(j, c)];
                if u == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for r in 1..=km {
                    let l = self.ab[self.pos(j + r, j)];
                    let p = self.pos(j + r, c);
                    self.ab[p] -= l * u;
                }
            }
        }
        debug_assert!(kv >= ku);
        Ok(BandLu {
            n,
            kl,
            kv,
            ld: self.ld,
            ab: self.ab,
            pivots,
        })
    }
}

/// LU factors of a [`BandMatrix`]. Immutable, so it can be shared across
/// threads and solved against concurrently.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    kv: usize,
    ld: usize,
    ab: Vec<Complex64>,
    pivots: Vec<usize>,
}

impl BandLu {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn at(&self, row: usize, col: usize) -> Complex64 {
        self.ab[self.kv + row - col + col * self.ld]
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            let km = self.kl.min(n - 1 - j);
            for r in 1..=km {
                b[j + r] -= self.at(j + r, j) * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.at(j, j);
            let bj = b[j];
            let lo = j.saturating_sub(self.kv);
            for i in lo..j {
                b[i] -= self.at(i, j) * bj;
            }
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
