use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use rustfft::num_complex::Complex64;

use super::grid::Grid;
use crate::error::{invalid, Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Fourier coefficients of a real field on the periodic box.
///
/// The field is `f(x) = Σ_k f̂(k) e^{ik·x}`, so `f̂ = FFT(f)/n³`. Components are
/// stored one after another; vector fields have 3, tensor fields 9 (row-major
/// `F_{il}` at `3i+l`).
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    components: usize,
    coeffs: Vec<Complex64>,
}

/// Point values of a real field on the physical grid, component-major.
#[derive(Clone, Debug)]
pub struct PhysicalField {
    grid: Grid,
    components: usize,
    values: Vec<f64>,
}

/// Exact equality of grid size, shape and every coefficient.
impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.grid.n() == other.grid.n() && self.components == other.components && self.coeffs == other.coeffs
    }
}

impl SpectralField {
    pub fn zeros(grid: &Grid, components: usize) -> SpectralField {
        SpectralField {
            grid: grid.clone(),
            components,
            coeffs: vec![ZERO; components * grid.len()],
        }
    }

    pub fn from_coeffs(grid: &Grid, components: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if components == 0 || coeffs.len() != components * grid.len() {
            return Err(invalid(format!(
                "coefficient array of length {} does not match {} components on n={}",
                coeffs.len(),
                components,
                grid.n()
            )));
        }
        Ok(SpectralField {
            grid: grid.clone(),
            components,
            coeffs,
        })
    }

    /// Field with a single Fourier pair `a e^{ik·x} + conj(a) e^{-ik·x}` in
    /// component `component`.
    pub fn single_mode(
        grid: &Grid,
        components: usize,
        component: usize,
        k: [i64; 3],
        amplitude: Complex64,
    ) -> Result<Self> {
        let mut f = SpectralField::zeros(grid, components);
        let idx = grid
            .index_of(k)
            .ok_or_else(|| invalid(format!("wavevector {k:?} outside the lattice")))?;
        if component >= components {
            return Err(invalid("component index out of range"));
        }
        let nidx = grid.neg_index(idx);
        let len = grid.len();
        f.coeffs[component * len + idx] += amplitude;
        f.coeffs[component * len + nidx] += amplitude.conj();
        Ok(f)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let len = self.grid.len();
        &self.coeffs[c * len..(c + 1) * len]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let len = self.grid.len();
        &mut self.coeffs[c * len..(c + 1) * len]
    }

    /// Extracts one component as a scalar field.
    pub fn scalar(&self, c: usize) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            components: 1,
            coeffs: self.component(c).to_vec(),
        }
    }

    /// Stacks scalar fields into one multi-component field.
    pub fn stack(parts: &[SpectralField]) -> Result<SpectralField> {
        let first = parts.first().ok_or_else(|| invalid("nothing to stack"))?;
        let mut coeffs = Vec::with_capacity(parts.len() * first.grid.len());
        let mut components = 0;
        for p in parts {
            p.expect_grid(&first.grid)?;
            coeffs.extend_from_slice(&p.coeffs);
            components += p.components;
        }
        SpectralField::from_coeffs(&first.grid, components, coeffs)
    }

    pub fn expect_grid(&self, grid: &Grid) -> Result<()> {
        if &self.grid != grid {
            return Err(Error::GridMismatch {
                expected: grid.n(),
                found: self.grid.n(),
            });
        }
        Ok(())
    }

    pub fn expect_components(&self, components: usize) -> Result<()> {
        if self.components != components {
            return Err(Error::ComponentMismatch {
                expected: components,
                found: self.components,
            });
        }
        Ok(())
    }

    pub fn expect_same_shape(&self, other: &SpectralField) -> Result<()> {
        other.expect_grid(&self.grid)?;
        other.expect_components(self.components)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what.to_string()))
        }
    }

    /// `‖f‖_{L²}` over the box.
    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.volume() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// `∫ f·g` over the box.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        self.grid.volume()
            * self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.re * b.re + a.im * b.im)
                .sum::<f64>()
    }

    /// `‖∇f‖²_{L²}`.
    pub fn gradient_norm_sq(&self) -> f64 {
        let k2 = self.grid.k2();
        let len = self.grid.len();
        let mut s = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            s += k2[i % len] as f64 * c.norm_sqr();
        }
        self.grid.volume() * s
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `max_k |k·f̂(k)|` for a vector field.
    pub fn divergence_max(&self) -> f64 {
        if self.components != 3 {
            return 0.0;
        }
        let len = self.grid.len();
        (0..len)
            .map(|idx| {
                let k = self.grid.wavevector(idx);
                let mut d = ZERO;
                for (a, &ka) in k.iter().enumerate() {
                    d += self.coeffs[a * len + idx] * ka as f64;
                }
                d.norm()
            })
            .fold(0.0, f64::max)
    }

    /// Enforces `f̂(-k) = conj f̂(k)` by averaging each pair.
    pub fn symmetrize(&mut self) {
        let len = self.grid.len();
        for c in 0..self.components {
            let part = &mut self.coeffs[c * len..(c + 1) * len];
            for idx in 0..len {
                let nidx = self.grid.neg_index(idx);
                if nidx < idx {
                    continue;
                }
                let avg = (part[idx] + part[nidx].conj()) * 0.5;
                part[idx] = avg;
                part[nidx] = avg.conj();
            }
        }
    }

    /// Largest deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let len = self.grid.len();
        let mut worst: f64 = 0.0;
        for c in 0..self.components {
            let part = self.component(c);
            for idx in 0..len {
                let nidx = self.grid.neg_index(idx);
                worst = worst.max((part[idx] - part[nidx].conj()).norm());
            }
        }
        worst
    }

    /// Multiplies every component by the real radial weight `w[|k|²]`.
    pub fn apply_radial(&mut self, weights: &[f64]) {
        let k2 = self.grid.k2();
        let len = self.grid.len();
        for c in 0..self.components {
            let part = &mut self.coeffs[c * len..(c + 1) * len];
            for (v, &kk) in part.iter_mut().zip(k2) {
                *v *= weights[kk as usize];
            }
        }
    }

    pub fn radial_filtered(&self, weights: &[f64]) -> SpectralField {
        let mut out = self.clone();
        out.apply_radial(weights);
        out
    }

    /// Zeroes every mode outside the 2/3-rule cube.
    pub fn dealias(&mut self) {
        let len = self.grid.len();
        let n = self.grid.n();
        let cut = self.grid.cutoff();
        let freqs = self.grid.freqs().to_vec();
        for c in 0..self.components {
            let part = &mut self.coeffs[c * len..(c + 1) * len];
            for i0 in 0..n {
                let o0 = freqs[i0].abs() > cut;
                for i1 in 0..n {
                    let o1 = o0 || freqs[i1].abs() > cut;
                    let base = (i0 * n + i1) * n;
                    for i2 in 0..n {
                        if o1 || freqs[i2].abs() > cut {
                            part[base + i2] = ZERO;
                        }
                    }
                }
            }
        }
    }

    pub fn dealiased(&self) -> SpectralField {
        let mut out = self.clone();
        out.dealias();
        out
    }

    /// Largest `|k_i|` carrying a nonzero coefficient.
    pub fn max_mode(&self) -> i64 {
        let len = self.grid.len();
        let mut m = 0;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.re != 0.0 || c.im != 0.0 {
                let k = self.grid.wavevector(i % len);
                m = m.max(k[0].abs()).max(k[1].abs()).max(k[2].abs());
            }
        }
        m
    }

    /// Copies coefficients onto another grid. Modes absent from the target
    /// lattice, and Nyquist modes of the source, are dropped.
    pub fn resample(&self, target: &Grid) -> SpectralField {
        if target == &self.grid {
            return self.clone();
        }
        let mut out = SpectralField::zeros(target, self.components);
        let src_len = self.grid.len();
        let dst_len = target.len();
        let half = (self.grid.n() / 2) as i64;
        for idx in 0..src_len {
            let k = self.grid.wavevector(idx);
            if k.iter().any(|&x| x == -half) {
                continue;
            }
            if let Some(t) = target.index_of(k) {
                for c in 0..self.components {
                    out.coeffs[c * dst_len + t] = self.coeffs[c * src_len + idx];
                }
            }
        }
        out
    }

    pub fn scale(&mut self, a: f64) {
        for v in &mut self.coeffs {
            *v *= a;
        }
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a·other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        assert_eq!(self.coeffs.len(), other.coeffs.len(), "shape mismatch in axpy");
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * a;
        }
    }

    /// Inverse transform to point values.
    pub fn to_physical(&self) -> PhysicalField {
        let len = self.grid.len();
        let mut values = vec![0.0; self.components * len];
        let mut c = 0;
        while c < self.components {
            if c + 1 < self.components {
                let (a, b) = self.grid_pair_inverse(self.component(c), self.component(c + 1));
                values[c * len..(c + 1) * len].copy_from_slice(&a);
                values[(c + 1) * len..(c + 2) * len].copy_from_slice(&b);
                c += 2;
            } else {
                let mut buf = self.component(c).to_vec();
                self.grid.fft3(&mut buf, true);
                for (v, z) in values[c * len..(c + 1) * len].iter_mut().zip(&buf) {
                    *v = z.re;
                }
                c += 1;
            }
        }
        PhysicalField {
            grid: self.grid.clone(),
            components: self.components,
            values,
        }
    }

    fn grid_pair_inverse(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let mut buf: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(x, y)| x + Complex64::new(-y.im, y.re))
            .collect();
        self.grid.fft3(&mut buf, true);
        (
            buf.iter().map(|z| z.re).collect(),
            buf.iter().map(|z| z.im).collect(),
        )
    }

    pub fn from_physical(phys: &PhysicalField) -> SpectralField {
        let grid = phys.grid.clone();
        let len = grid.len();
        let scale = 1.0 / len as f64;
        let mut coeffs = vec![ZERO; phys.components * len];
        let mut c = 0;
        while c < phys.components {
            if c + 1 < phys.components {
                let a = phys.component(c);
                let b = phys.component(c + 1);
                let mut buf: Vec<Complex64> =
                    a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
                grid.fft3(&mut buf, false);
                for idx in 0..len {
                    let z = buf[idx] * scale;
                    let zn = buf[grid.neg_index(idx)].conj() * scale;
                    coeffs[c * len + idx] = (z + zn) * 0.5;
                    let d = (z - zn) * 0.5;
                    coeffs[(c + 1) * len + idx] = Complex64::new(d.im, -d.re);
                }
                c += 2;
            } else {
                let mut buf: Vec<Complex64> = phys
                    .component(c)
                    .iter()
                    .map(|&x| Complex64::new(x, 0.0))
                    .collect();
                grid.fft3(&mut buf, false);
                for (dst, z) in coeffs[c * len..(c + 1) * len].iter_mut().zip(&buf) {
                    *dst = z * scale;
                }
                c += 1;
            }
        }
        SpectralField {
            grid,
            components: phys.components,
            coeffs,
        }
    }
}

impl PhysicalField {
    pub fn zeros(grid: &Grid, components: usize) -> PhysicalField {
        PhysicalField {
            grid: grid.clone(),
            components,
            values: vec![0.0; components * grid.len()],
        }
    }

    pub fn from_values(grid: &Grid, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 || values.len() != components * grid.len() {
            return Err(invalid("value array does not match grid and components"));
        }
        Ok(PhysicalField {
            grid: grid.clone(),
            components,
            values,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let len = self.grid.len();
        &self.values[c * len..(c + 1) * len]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let len = self.grid.len();
        &mut self.values[c * len..(c + 1) * len]
    }

    /// Pointwise Euclidean magnitude across components.
    pub fn magnitude(&self) -> Vec<f64> {
        let len = self.grid.len();
        let mut out = vec![0.0; len];
        for c in 0..self.components {
            for (o, v) in out.iter_mut().zip(self.component(c)) {
                *o += v * v;
            }
        }
        for o in &mut out {
            *o = o.sqrt();
        }
        out
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitude().into_iter().fold(0.0, f64::max)
    }

    pub fn to_spectral(&self) -> SpectralField {
        SpectralField::from_physical(self)
    }
}

impl Add<&SpectralField> for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&SpectralField> for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&SpectralField> for SpectralField {
    fn add_assign(&mut self, rhs: &SpectralField) {
        assert_eq!(self.coeffs.len(), rhs.coeffs.len(), "shape mismatch in add");
        for (x, y) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *x += y;
        }
    }
}

impl SubAssign<&SpectralField> for SpectralField {
    fn sub_assign(&mut self, rhs: &SpectralField) {
        assert_eq!(self.coeffs.len(), rhs.coeffs.len(), "shape mismatch in sub");
        for (x, y) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *x -= y;
        }
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_mode_has_expected_values() {
        let g = Grid::new(16).unwrap();
        // sin(x1) = (e^{ix} - e^{-ix})/(2i)
        let f = SpectralField::single_mode(&g, 1, 0, [1, 0, 0], Complex64::new(0.0, -0.5)).unwrap();
        let p = f.to_physical();
        let h = g.length() / 16.0;
        for i0 in 0..16 {
            let x = i0 as f64 * h;
            let v = p.values()[i0 * 256 + 3 * 16 + 5];
            assert!((v - x.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn paired_transform_round_trip() {
        let g = Grid::new(16).unwrap();
        let vals: Vec<f64> = (0..3 * g.len()).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let p = PhysicalField::from_values(&g, 3, vals.clone()).unwrap();
        let s = p.to_spectral();
        assert!(s.hermitian_defect() < 1e-15);
        let back = s.to_physical();
        for (a, b) in back.values().iter().zip(&vals) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
