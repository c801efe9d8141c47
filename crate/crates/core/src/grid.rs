//! Uniform Brillouin-zone grids and the lattice Fourier transform.
//!
//! Grid points are `k_m = -π + 2πm/N`, `m = 0..N`, identical along both axes.
//! When `N` is divisible by four the cosine table is built so that
//! `cos(k_{m+N/2}) = -cos(k_m)` and `cos(k_{N-m}) = cos(k_m)` hold bit for bit.
//! The shift by Π = (π, π) then flips `f(k)` exactly, which keeps the
//! chiral cancellations in the quadratures exact instead of round-off small.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct KGrid {
    n: usize,
    cos: Vec<f64>,
    roots: Vec<Complex64>,
}

impl KGrid {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "k-grid needs at least two points per axis");
        let k = |m: usize| -PI + 2.0 * PI * m as f64 / n as f64;
        let mut cos: Vec<f64> = (0..n).map(|m| k(m).cos()).collect();
        if n.is_multiple_of(4) {
            let half = n / 2;
            let quarter = n / 4;
            for m in 0..quarter {
                cos[half - m] = -cos[m];
            }
            cos[quarter] = 0.0;
            for m in 0..half {
                cos[m + half] = -cos[m];
            }
        }
        let mut roots: Vec<Complex64> = (0..n)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64))
            .collect();
        if n.is_multiple_of(2) {
            for j in 0..n / 2 {
                roots[j + n / 2] = -roots[j];
            }
        }
        KGrid { n, cos, roots }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn points(&self) -> usize {
        self.n * self.n
    }

    pub fn k(&self, m: usize) -> f64 {
        -PI + 2.0 * PI * m as f64 / self.n as f64
    }

    pub fn cos(&self, m: usize) -> f64 {
        self.cos[m]
    }

    /// Monolayer dispersion `2J(cos k_x + cos k_y)` at grid point `(mx, my)`.
    pub fn f(&self, mx: usize, my: usize, hopping: f64) -> f64 {
        2.0 * hopping * (self.cos[mx] + self.cos[my])
    }

    /// Index of `k_m + π`.
    pub fn partner(&self, m: usize) -> usize {
        (m + self.n / 2) % self.n
    }

    /// `exp(i k_m x)` for integer `x`, from an exactly antisymmetric root table.
    pub fn plane_wave(&self, m: usize, x: i64) -> Complex64 {
        let n = self.n as i64;
        let j = ((m as i64 * x) % n + n) % n;
        let w = self.roots[j as usize];
        if x.rem_euclid(2) == 1 {
            -w
        } else {
            w
        }
    }
}

/// Real-space samples on the `N × N` torus, stored row-major with
/// coordinates `x, y ∈ [-N/2, N/2)`.
#[derive(Clone, Debug)]
pub struct TorusField {
    pub n: usize,
    pub values: Vec<Complex64>,
}

impl TorusField {
    pub fn zeros(n: usize) -> Self {
        TorusField { n, values: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn min_coord(&self) -> i64 {
        -((self.n / 2) as i64)
    }

    fn index(&self, x: i64, y: i64) -> usize {
        let n = self.n as i64;
        let h = n / 2;
        let xi = (x + h).rem_euclid(n);
        let yi = (y + h).rem_euclid(n);
        (yi * n + xi) as usize
    }

    /// Value at `(x, y)`, wrapping periodically.
    pub fn get(&self, x: i64, y: i64) -> Complex64 {
        self.values[self.index(x, y)]
    }

    pub fn set(&mut self, x: i64, y: i64, v: Complex64) {
        let i = self.index(x, y);
        self.values[i] = v;
    }
}

fn inverse_fft_2d(data: &mut [Complex64], n: usize) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(n);
    for row in data.chunks_mut(n) {
        fft.process(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for x in 0..n {
        for y in 0..n {
            column[y] = data[y * n + x];
        }
        fft.process(&mut column);
        for y in 0..n {
            data[y * n + x] = column[y];
        }
    }
}

/// `C(x, y) = N⁻² Σ_k exp(i k·(x, y)) V(k)` for `V` given row-major as
/// `values[my * N + mx]`.
pub fn to_real_space(grid: &KGrid, values: &[Complex64]) -> TorusField {
    let n = grid.len();
    assert_eq!(values.len(), n * n);
    let mut data = values.to_vec();
    inverse_fft_2d(&mut data, n);
    let scale = 1.0 / (n * n) as f64;
    let mut out = TorusField::zeros(n);
    let h = (n / 2) as i64;
    for py in 0..n {
        for px in 0..n {
            let x = if (px as i64) < n as i64 - h { px as i64 } else { px as i64 - n as i64 };
            let y = if (py as i64) < n as i64 - h { py as i64 } else { py as i64 - n as i64 };
            let sign = if (x + y).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            out.set(x, y, data[py * n + px] * (sign * scale));
        }
    }
    out
}

/// Same transform, evaluated through the split `V = P + Q` with
/// `P(k) = ½[V(k) + V(k+Π)]` and `Q(k) = ½[V(k) − V(k+Π)]`.
///
/// `P` only reaches sites with even `x + y` and `Q` only odd ones, so each
/// parity class is taken from its own transform. When `V` is exactly odd or
/// even under the Π shift the other class comes out as exact zeros.
pub fn to_real_space_parity(grid: &KGrid, values: &[Complex64]) -> TorusField {
    let n = grid.len();
    assert!(n.is_multiple_of(2), "parity split needs an even grid");
    let mut even = vec![Complex64::new(0.0, 0.0); n * n];
    let mut odd = vec![Complex64::new(0.0, 0.0); n * n];
    for my in 0..n {
        for mx in 0..n {
            let a = values[my * n + mx];
            let b = values[grid.partner(my) * n + grid.partner(mx)];
            even[my * n + mx] = (a + b) * 0.5;
            odd[my * n + mx] = (a - b) * 0.5;
        }
    }
    let e = to_real_space(grid, &even);
    let o = to_real_space(grid, &odd);
    let mut out = TorusField::zeros(n);
    let lo = out.min_coord();
    for y in lo..lo + n as i64 {
        for x in lo..lo + n as i64 {
            let v = if (x + y).rem_euclid(2) == 0 { e.get(x, y) } else { o.get(x, y) };
            out.set(x, y, v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_table_symmetries_are_exact() {
        let g = KGrid::new(64);
        for m in 0..64 {
            assert_eq!(g.cos(g.partner(m)), -g.cos(m));
            if m > 0 {
                assert_eq!(g.cos(64 - m), g.cos(m));
            }
            assert!((g.cos(m) - g.k(m).cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn plane_wave_matches_exponential() {
        let g = KGrid::new(32);
        for m in [0, 3, 17, 31] {
            for x in [-5i64, -1, 0, 2, 9] {
                let exact = Complex64::from_polar(1.0, g.k(m) * x as f64);
                assert!((g.plane_wave(m, x) - exact).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn transform_matches_direct_sum() {
        let n = 8;
        let g = KGrid::new(n);
        let values: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let fast = to_real_space(&g, &values);
        let split = to_real_space_parity(&g, &values);
        for (x, y) in [(0i64, 0i64), (1, -2), (-4, 3), (2, 2)] {
            let mut direct = Complex64::new(0.0, 0.0);
            for my in 0..n {
                for mx in 0..n {
                    let phase = g.k(mx) * x as f64 + g.k(my) * y as f64;
                    direct += Complex64::from_polar(1.0, phase) * values[my * n + mx];
                }
            }
            direct /= (n * n) as f64;
            assert!((fast.get(x, y) - direct).norm() < 1e-13);
            assert!((split.get(x, y) - direct).norm() < 1e-13);
        }
    }
}
