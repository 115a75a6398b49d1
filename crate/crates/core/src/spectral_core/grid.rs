use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};

/// Periodic box `[0, 2π)³` sampled with `n` points per axis.
///
/// The frequency lattice is `{-n/2, …, n/2-1}³`, stored in FFT order along
/// each axis. Products are dealiased by keeping modes with `|k_i| <= cutoff`
/// where `cutoff = floor((n-1)/3)`.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    n: usize,
    cutoff: i64,
    freq: Vec<i64>,
    k2: Vec<u32>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    product: OnceLock<Grid>,
}

pub const MIN_POINTS: usize = 8;
pub const MAX_POINTS: usize = 512;

static GRID_CACHE: OnceLock<Mutex<HashMap<usize, Grid>>> = OnceLock::new();

impl Grid {
    /// Builds (or fetches from the process-wide cache) the grid with `n`
    /// points per axis. `n` must be even.
    pub fn new(n: usize) -> Result<Grid> {
        if n % 2 != 0 || !(MIN_POINTS..=MAX_POINTS).contains(&n) {
            return Err(invalid(format!(
                "grid size must be even and within {MIN_POINTS}..={MAX_POINTS}, got {n}"
            )));
        }
        let cache = GRID_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(g) = guard.get(&n) {
            return Ok(g.clone());
        }
        let grid = Grid::build(n);
        guard.insert(n, grid.clone());
        Ok(grid)
    }

    fn build(n: usize) -> Grid {
        let freq: Vec<i64> = (0..n)
            .map(|i| if i < n / 2 { i as i64 } else { i as i64 - n as i64 })
            .collect();
        let mut k2 = Vec::with_capacity(n * n * n);
        for &a in &freq {
            for &b in &freq {
                for &c in &freq {
                    k2.push((a * a + b * b + c * c) as u32);
                }
            }
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Grid {
            inner: Arc::new(GridInner {
                n,
                cutoff: ((n as i64) - 1) / 3,
                freq,
                k2,
                forward,
                inverse,
                product: OnceLock::new(),
            }),
        }
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Number of lattice points, `n³`.
    pub fn len(&self) -> usize {
        self.inner.n * self.inner.n * self.inner.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest retained wavenumber per axis under the 2/3 rule.
    pub fn cutoff(&self) -> i64 {
        self.inner.cutoff
    }

    /// Side length of the box.
    pub fn length(&self) -> f64 {
        2.0 * std::f64::consts::PI
    }

    /// Volume element of the Riemann sum, `(2π/n)³`.
    pub fn cell_volume(&self) -> f64 {
        let h = self.length() / self.inner.n as f64;
        h * h * h
    }

    /// Total volume `(2π)³`.
    pub fn volume(&self) -> f64 {
        self.length().powi(3)
    }

    /// Signed wavenumber for FFT index `i` along one axis.
    pub fn freq(&self, i: usize) -> i64 {
        self.inner.freq[i]
    }

    pub fn freqs(&self) -> &[i64] {
        &self.inner.freq
    }

    /// `|k|²` for every flat index.
    pub fn k2(&self) -> &[u32] {
        &self.inner.k2
    }

    /// Largest `|k|²` on the lattice, `3(n/2)²`.
    pub fn max_k2(&self) -> u32 {
        let h = (self.inner.n / 2) as u32;
        3 * h * h
    }

    pub fn wavevector(&self, idx: usize) -> [i64; 3] {
        let n = self.inner.n;
        let f = &self.inner.freq;
        [f[idx / (n * n)], f[(idx / n) % n], f[idx % n]]
    }

    /// Flat index of lattice vector `k`, each component in `[-n/2, n/2)`.
    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        let n = self.inner.n as i64;
        let mut idx = 0usize;
        for &c in &k {
            if c < -n / 2 || c >= n / 2 {
                return None;
            }
            idx = idx * n as usize + c.rem_euclid(n) as usize;
        }
        Some(idx)
    }

    /// Flat index of `-k` (with the Nyquist row mapping onto itself).
    pub fn neg_index(&self, idx: usize) -> usize {
        let n = self.inner.n;
        let i0 = idx / (n * n);
        let i1 = (idx / n) % n;
        let i2 = idx % n;
        let neg = |i: usize| if i == 0 { 0 } else { n - i };
        (neg(i0) * n + neg(i1)) * n + neg(i2)
    }

    pub fn is_retained(&self, idx: usize) -> bool {
        let k = self.wavevector(idx);
        let c = self.inner.cutoff;
        k.iter().all(|x| x.abs() <= c)
    }

    /// Grid on which products of dealiased fields are represented without
    /// aliasing or truncation.
    pub fn product_grid(&self) -> Grid {
        self.inner
            .product
            .get_or_init(|| {
                Grid::new(product_size(self.inner.cutoff)).expect("product grid within limits")
            })
            .clone()
    }

    pub(crate) fn fft3(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.inner.n;
        debug_assert_eq!(data.len(), n * n * n);
        let plan = if inverse {
            &self.inner.inverse
        } else {
            &self.inner.forward
        };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);

        let mut line = vec![Complex64::new(0.0, 0.0); n * n];
        for i0 in 0..n {
            let plane = &mut data[i0 * n * n..(i0 + 1) * n * n];
            for i1 in 0..n {
                for i2 in 0..n {
                    line[i2 * n + i1] = plane[i1 * n + i2];
                }
            }
            plan.process_with_scratch(&mut line, &mut scratch);
            for i1 in 0..n {
                for i2 in 0..n {
                    plane[i1 * n + i2] = line[i2 * n + i1];
                }
            }
        }
        for i1 in 0..n {
            for i0 in 0..n {
                let base = i0 * n * n + i1 * n;
                for i2 in 0..n {
                    line[i2 * n + i0] = data[base + i2];
                }
            }
            plan.process_with_scratch(&mut line, &mut scratch);
            for i0 in 0..n {
                let base = i0 * n * n + i1 * n;
                for i2 in 0..n {
                    data[base + i2] = line[i2 * n + i0];
                }
            }
        }
    }
}

/// Smallest even size of the form `2^a 3^b` strictly above `4·cutoff`.
pub fn product_size(cutoff: i64) -> usize {
    let need = (4 * cutoff + 2).max(MIN_POINTS as i64) as usize;
    let mut m = need + (need % 2);
    loop {
        let mut r = m;
        while r % 2 == 0 {
            r /= 2;
        }
        while r % 3 == 0 {
            r /= 3;
        }
        if r == 1 {
            return m;
        }
        m += 2;
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.n == other.inner.n
    }
}

impl Eq for Grid {}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.inner.n)
            .field("cutoff", &self.inner.cutoff)
            .finish()
    }
}
