//! Effective spin models mediated by bound states: couplings, bipartite
//! and SSH Bloch matrices, finite spectra with edge/corner detection and
//! Wilson-loop polarization.

use crate::bound_state::resolvent_fields;
use crate::error::{Error, Result};
use crate::grid::TorusField;
use crate::lattice::{chiral_sign, inner_gap_edge, BilayerLattice, KPoint, Layer};
use crate::linalg::{dense_eigh, hermitian_eigh};
use crate::par;
use faer::{c64, Mat};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Couplings are kept up to this separation `|n|_∞` and dropped beyond.
pub const COUPLING_RANGE: i64 = 10;

/// Fractions of eigenstate weight that define edge and corner modes.
pub const BOUNDARY_THRESHOLD: f64 = 0.6;
pub const CORNER_THRESHOLD: f64 = 0.6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinSite {
    pub layer: Layer,
    pub nx: i64,
    pub ny: i64,
}

impl SpinSite {
    pub fn new(layer: Layer, nx: i64, ny: i64) -> Self {
        SpinSite { layer, nx, ny }
    }
}

/// Resonant emitters placed on the bath.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinArray {
    pub tag: String,
    pub sites: Vec<SpinSite>,
}

impl SpinArray {
    pub fn new(tag: impl Into<String>, sites: Vec<SpinSite>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for s in &sites {
            if !seen.insert(*s) {
                return Err(Error::config(format!(
                    "duplicate emitter at layer {} ({}, {})",
                    u8::from(s.layer),
                    s.nx,
                    s.ny
                )));
            }
        }
        Ok(SpinArray { tag: tag.into(), sites })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

/// Axis positions of the dimerized chain: `n` sites with alternating gaps,
/// starting with `first`.
fn dimer_positions(n: usize, first: i64, second: i64, offset: i64) -> Vec<i64> {
    let mut p = vec![offset];
    for i in 1..n {
        let gap = if i % 2 == 1 { first } else { second };
        p.push(p[i - 1] + gap);
    }
    p
}

/// Dimerized `n × n` array with checkerboard layers: spin `(i, j)` sits on
/// layer 1 when `i + j` is even. Along each axis the spacings alternate
/// between 4 and 2 (topological) or 2 and 4 (trivial), so the intra-cell
/// bond is the weak one in the topological phase.
pub fn ssh_geometry(n: usize, topological: bool) -> SpinArray {
    let pos = if topological { dimer_positions(n, 4, 2, 0) } else { dimer_positions(n, 2, 4, 1) };
    checkerboard("ssh-dimerized", &pos)
}

/// Undimerized array with uniform spacing 2.
pub fn uniform_geometry(n: usize) -> SpinArray {
    let pos: Vec<i64> = (0..n as i64).map(|i| 2 * i).collect();
    checkerboard("uniform", &pos)
}

fn checkerboard(tag: &str, pos: &[i64]) -> SpinArray {
    let mut sites = Vec::new();
    for (j, &y) in pos.iter().enumerate() {
        for (i, &x) in pos.iter().enumerate() {
            let layer = if (i + j) % 2 == 0 { Layer::One } else { Layer::Two };
            sites.push(SpinSite::new(layer, x, y));
        }
    }
    SpinArray { tag: tag.into(), sites }
}

/// Translation-invariant spin couplings `g²·G_{l,l'}(n; 0)` for `|n|_∞ ≤ range`.
#[derive(Clone, Debug)]
pub struct CouplingKernel {
    g: f64,
    range: i64,
    /// `fields[source][target]`.
    fields: [[TorusField; 2]; 2],
}

impl CouplingKernel {
    pub fn new(lat: &BilayerLattice, g: f64, n_k: usize) -> Result<Self> {
        let edge = inner_gap_edge(lat)?;
        if n_k < 8 || !n_k.is_multiple_of(4) {
            return Err(Error::config(format!("n_k must be a multiple of 4 and at least 8, got {n_k}")));
        }
        if (n_k / 2) as i64 <= COUPLING_RANGE {
            return Err(Error::Resolution(format!(
                "n_k = {n_k} cannot resolve separations up to {COUPLING_RANGE}"
            )));
        }
        if g > 0.2 * edge {
            log::warn!("g = {g} is not small against the gap edge {edge}; couplings leave the Markovian regime");
        }
        let (a, b) = resolvent_fields(0.0, lat, Layer::One, n_k);
        let (c, d) = resolvent_fields(0.0, lat, Layer::Two, n_k);
        Ok(CouplingKernel { g, range: COUPLING_RANGE, fields: [[a, b], [c, d]] })
    }

    /// Coupling felt by a spin on `to` at relative position `n` from a spin on `from`.
    pub fn coupling(&self, from: Layer, to: Layer, nx: i64, ny: i64) -> f64 {
        if nx.abs().max(ny.abs()) > self.range {
            return 0.0;
        }
        self.g * self.g * self.fields[from.index()][to.index()].get(nx, ny).re
    }

    /// Cross-layer table `J_12^n` for the bipartite Bloch form.
    pub fn cross_table(&self, range: i64) -> Vec<(i64, i64, f64)> {
        let r = range.min(self.range);
        let mut t = Vec::new();
        for ny in -r..=r {
            for nx in -r..=r {
                let v = self.coupling(Layer::Two, Layer::One, nx, ny);
                if v != 0.0 {
                    t.push((nx, ny, v));
                }
            }
        }
        t
    }
}

/// Dense symmetric coupling matrix `g_ij`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinCouplingMatrix {
    pub n: usize,
    pub values: Vec<f64>,
}

impl SpinCouplingMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn to_mat(&self) -> Mat<f64> {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

/// Effective couplings of resonant emitters; spins must share no site.
pub fn effective_couplings(
    array: &SpinArray,
    lat: &BilayerLattice,
    g: f64,
    n_k: usize,
) -> Result<SpinCouplingMatrix> {
    let kernel = CouplingKernel::new(lat, g, n_k)?;
    Ok(couplings_from_kernel(array, &kernel))
}

pub fn couplings_from_kernel(array: &SpinArray, kernel: &CouplingKernel) -> SpinCouplingMatrix {
    let n = array.len();
    let rows = par::map_indexed(n, |i| {
        let a = array.sites[i];
        (0..n)
            .map(|j| {
                if i == j {
                    return 0.0;
                }
                let b = array.sites[j];
                // symmetrize so the matrix is exactly Hermitian
                let x = kernel.coupling(a.layer, b.layer, b.nx - a.nx, b.ny - a.ny);
                let y = kernel.coupling(b.layer, a.layer, a.nx - b.nx, a.ny - b.ny);
                0.5 * (x + y)
            })
            .collect::<Vec<_>>()
    });
    SpinCouplingMatrix { n, values: rows.into_iter().flatten().collect() }
}

/// Whether a pair must be uncoupled: same layer with even `n_x + n_y`, or
/// different layers with odd `n_x + n_y`.
pub fn pair_forbidden(a: SpinSite, b: SpinSite) -> bool {
    chiral_sign(a.layer, a.nx, a.ny) == chiral_sign(b.layer, b.nx, b.ny)
}

/// `f_S(k) = Σ_n J_12^n exp(−i k·n)`.
pub fn bloch_f_s(table: &[(i64, i64, f64)], k: KPoint) -> Complex64 {
    table
        .iter()
        .map(|&(nx, ny, j)| Complex64::from_polar(j, -(k.kx * nx as f64 + k.ky * ny as f64)))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SSHParams {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
}

impl SSHParams {
    pub fn new(t1: f64, t2: f64, t3: f64, t4: f64) -> Self {
        SSHParams { t1, t2, t3, t4 }
    }

    /// `|t2| > |t1| > |t4| > |t3|`.
    pub fn topological_ordering(&self) -> bool {
        self.t2.abs() > self.t1.abs() && self.t1.abs() > self.t4.abs() && self.t4.abs() > self.t3.abs()
    }

    fn f0(&self, k: f64) -> Complex64 {
        let e = |m: f64| Complex64::from_polar(1.0, m * k);
        e(0.0) * self.t1 + e(1.0) * self.t2 + e(-1.0) * self.t3 + e(2.0) * self.t4
    }
}

/// 4×4 Bloch matrix in the basis `(A₀₀, A₁₁, B₁₀, B₀₁)`.
pub fn ssh_bloch(p: &SSHParams, kx: f64, ky: f64) -> [[Complex64; 4]; 4] {
    let (a, b) = (p.f0(kx), p.f0(ky));
    let f = [[a, b], [b.conj(), a.conj()]];
    let z = Complex64::new(0.0, 0.0);
    let mut h = [[z; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            h[i][2 + j] = f[i][j];
            h[2 + j][i] = f[i][j].conj();
        }
    }
    h
}

pub fn ssh_bands(p: &SSHParams, kx: f64, ky: f64) -> Result<Vec<f64>> {
    let h = ssh_bloch(p, kx, ky);
    let m = Mat::<c64>::from_fn(4, 4, |i, j| h[i][j]);
    Ok(hermitian_eigh(&m)?.0)
}

/// Axis index of each spin, from the ranks of its distinct coordinates.
pub fn grid_indices(array: &SpinArray) -> (Vec<(usize, usize)>, usize, usize) {
    let mut xs: Vec<i64> = array.sites.iter().map(|s| s.nx).collect();
    let mut ys: Vec<i64> = array.sites.iter().map(|s| s.ny).collect();
    xs.sort_unstable();
    xs.dedup();
    ys.sort_unstable();
    ys.dedup();
    let idx = array
        .sites
        .iter()
        .map(|s| (xs.binary_search(&s.nx).unwrap(), ys.binary_search(&s.ny).unwrap()))
        .collect();
    (idx, xs.len(), ys.len())
}

/// Reads `t1..t4` off the bonds along both axes: one- and three-step bonds
/// starting from an even index give `t1` and `t3`, from an odd index `t2`
/// and `t4`.
pub fn fit_ssh_params(couplings: &SpinCouplingMatrix, array: &SpinArray) -> Result<SSHParams> {
    if couplings.n != array.len() {
        return Err(Error::GeometryMismatch("coupling matrix does not match the array".into()));
    }
    let (idx, nx, ny) = grid_indices(array);
    if nx * ny != array.len() || nx < 5 || ny < 5 {
        return Err(Error::GeometryMismatch(format!(
            "{} spins do not fill a rectangular grid of at least 5x5 ({}x{})",
            array.len(),
            nx,
            ny
        )));
    }
    let mut at = vec![usize::MAX; nx * ny];
    for (s, &(i, j)) in idx.iter().enumerate() {
        if at[j * nx + i] != usize::MAX {
            return Err(Error::GeometryMismatch(format!("two spins share grid cell ({i}, {j})")));
        }
        at[j * nx + i] = s;
    }
    let mut classes: [Vec<f64>; 4] = Default::default();
    for j in 0..ny {
        for i in 0..nx {
            let s = at[j * nx + i];
            for (d, slot) in [(1usize, 0usize), (3, 2)] {
                let class = slot + i % 2;
                if i + d < nx {
                    classes[class].push(couplings.get(s, at[j * nx + i + d]));
                }
                let class_y = slot + j % 2;
                if j + d < ny {
                    classes[class_y].push(couplings.get(s, at[(j + d) * nx + i]));
                }
            }
        }
    }
    let mut t = [0.0; 4];
    for (c, vals) in classes.iter().enumerate() {
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > 0.1 * mean.abs() {
            return Err(Error::GeometryMismatch(format!(
                "bond class t{} spreads over [{lo:e}, {hi:e}] around {mean:e}",
                [1, 2, 3, 4][c]
            )));
        }
        t[c] = mean;
    }
    // classes are (d=1 even, d=1 odd, d=3 even, d=3 odd)
    let p = SSHParams::new(t[0], t[1], t[2], t[3]);
    if (p.t1.abs() - p.t2.abs()).abs() <= 1e-6 * p.t1.abs().max(p.t2.abs()) {
        log::warn!("t1 and t2 coincide ({:e}); the array is undimerized and gapless", p.t1);
    }
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeLabel {
    Bulk,
    Edge,
    Corner,
}

impl ModeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeLabel::Bulk => "bulk",
            ModeLabel::Edge => "edge",
            ModeLabel::Corner => "corner",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModeClassification {
    pub labels: Vec<ModeLabel>,
    pub ipr: Vec<f64>,
    pub boundary_fraction: Vec<f64>,
    pub corner_fraction: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SpinSpectrum {
    pub energies: Vec<f64>,
    /// Eigenvectors as columns.
    pub vectors: Mat<f64>,
    pub classification: ModeClassification,
}

impl SpinSpectrum {
    pub fn count(&self, label: ModeLabel) -> usize {
        self.classification.labels.iter().filter(|&&l| l == label).count()
    }

    /// `max |E_i + E_{n−1−i}|` over the sorted spectrum.
    pub fn chiral_asymmetry(&self) -> f64 {
        let n = self.energies.len();
        (0..n).map(|i| (self.energies[i] + self.energies[n - 1 - i]).abs()).fold(0.0, f64::max)
    }
}

/// Rotates eigenvectors inside near-degenerate clusters so that each one
/// has a definite weight on the `mask` sites.
fn align_clusters(energies: &[f64], vecs: &mut Mat<f64>, mask: &[bool], tol: f64) -> Result<()> {
    let n = energies.len();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && energies[j] - energies[j - 1] < tol {
            j += 1;
        }
        let m = j - i;
        if m > 1 {
            let p = Mat::<f64>::from_fn(m, m, |a, b| {
                (0..vecs.nrows()).filter(|&r| mask[r]).map(|r| vecs[(r, i + a)] * vecs[(r, i + b)]).sum()
            });
            let (_, w) = dense_eigh(&p)?;
            let old: Vec<Vec<f64>> = (0..m).map(|a| (0..vecs.nrows()).map(|r| vecs[(r, i + a)]).collect()).collect();
            for c in 0..m {
                for r in 0..vecs.nrows() {
                    vecs[(r, i + c)] = (0..m).map(|a| w[(a, c)] * old[a][r]).sum();
                }
            }
        }
        i = j;
    }
    Ok(())
}

/// Diagonalizes `g_ij` and labels each state.
///
/// Corner modes carry at least 60% of their weight on the four corner 2×2
/// plaquettes and sit among the four smallest `|E|`; edge modes carry at
/// least 60% on the outer two rows and columns outside the corners.
pub fn finite_spectrum(array: &SpinArray, couplings: &SpinCouplingMatrix) -> Result<SpinSpectrum> {
    let (idx, nx, ny) = grid_indices(array);
    let (energies, mut vecs) = dense_eigh(&couplings.to_mat())?;
    let near = |i: usize, n: usize| i < 2 || i + 2 >= n;
    let corner: Vec<bool> = idx.iter().map(|&(i, j)| near(i, nx) && near(j, ny)).collect();
    let boundary: Vec<bool> = idx.iter().map(|&(i, j)| near(i, nx) || near(j, ny)).collect();
    let scale = energies.iter().fold(0.0f64, |m, e| m.max(e.abs())).max(f64::MIN_POSITIVE);
    let tol = 1e-8 * scale;
    align_clusters(&energies, &mut vecs, &corner, tol)?;
    let n = energies.len();
    let mut abs: Vec<f64> = energies.iter().map(|e| e.abs()).collect();
    abs.sort_by(f64::total_cmp);
    // ties with the fourth smallest |E| count as among the smallest
    let cutoff = abs[3.min(n - 1)] + tol;
    let mut cls = ModeClassification {
        labels: Vec::with_capacity(n),
        ipr: Vec::with_capacity(n),
        boundary_fraction: Vec::with_capacity(n),
        corner_fraction: Vec::with_capacity(n),
    };
    for c in 0..n {
        let w: Vec<f64> = (0..n).map(|r| vecs[(r, c)].powi(2)).collect();
        let ipr = w.iter().map(|x| x * x).sum::<f64>();
        let cf: f64 = w.iter().zip(&corner).filter(|(_, &m)| m).map(|(x, _)| x).sum();
        let bf: f64 = w.iter().zip(boundary.iter().zip(&corner)).filter(|(_, (&b, &c))| b && !c).map(|(x, _)| x).sum();
        let label = if cf >= CORNER_THRESHOLD && energies[c].abs() <= cutoff {
            ModeLabel::Corner
        } else if bf >= BOUNDARY_THRESHOLD {
            ModeLabel::Edge
        } else {
            ModeLabel::Bulk
        };
        cls.labels.push(label);
        cls.ipr.push(ipr);
        cls.boundary_fraction.push(bf);
        cls.corner_fraction.push(cf);
    }
    Ok(SpinSpectrum { energies, vectors: vecs, classification: cls })
}

/// Occupied-band eigenvectors of a Bloch sampler at one k.
fn occupied(h: &Mat<c64>, n_occ: usize) -> Result<(Mat<c64>, f64)> {
    let (vals, vecs) = hermitian_eigh(h)?;
    let gap = vals[n_occ] - vals[n_occ - 1];
    Ok((vecs.subcols(0, n_occ).to_owned(), gap))
}

fn overlap_det(a: &Mat<c64>, b: &Mat<c64>) -> Complex64 {
    let m = a.adjoint() * b;
    match m.nrows() {
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => m.determinant(),
    }
}

/// Polarization snapped to `{0, 1/2}` when within this distance.
pub const SNAP_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Polarization {
    pub px: f64,
    pub py: f64,
    /// Both components were within [`SNAP_TOL`] of 0 or 1/2.
    pub quantized: bool,
}

fn snap(p: f64) -> (f64, bool) {
    let p = p.rem_euclid(1.0);
    for target in [0.0, 0.5, 1.0] {
        if (p - target).abs() < SNAP_TOL {
            return (target % 1.0, true);
        }
    }
    (p, false)
}

/// Wilson-loop polarization of the `n_occ` lowest bands of a periodic
/// Bloch Hamiltonian sampled on an `n_k × n_k` grid.
///
/// The loop phase along `k_x` is averaged over `k_y` (and vice versa) after
/// unwrapping. Fails with [`Error::Gapless`] when the occupied bands touch
/// the next band anywhere on the grid.
pub fn wilson_polarization_with<F>(bloch: F, dim: usize, n_occ: usize, n_k: usize) -> Result<Polarization>
where
    F: Fn(f64, f64) -> Mat<c64> + Sync + Send,
{
    if n_occ == 0 || n_occ >= dim {
        return Err(Error::config(format!("n_occ must lie in 1..{dim}, got {n_occ}")));
    }
    if n_k < 4 {
        return Err(Error::config("n_k must be at least 4"));
    }
    let k = |m: usize| 2.0 * PI * m as f64 / n_k as f64;
    let states = par::map_indexed(n_k * n_k, |i| occupied(&bloch(k(i % n_k), k(i / n_k)), n_occ));
    let mut frames = Vec::with_capacity(states.len());
    let mut min_gap = f64::INFINITY;
    for s in states {
        let (v, gap) = s?;
        min_gap = min_gap.min(gap);
        frames.push(v);
    }
    if min_gap < 1e-6 {
        return Err(Error::Gapless { min_gap });
    }
    let at = |mx: usize, my: usize| &frames[(my % n_k) * n_k + (mx % n_k)];
    let loop_phase = |along_x: bool, t: usize| {
        let mut prod = Complex64::new(1.0, 0.0);
        for m in 0..n_k {
            let (a, b) = if along_x { (at(m, t), at(m + 1, t)) } else { (at(t, m), at(t, m + 1)) };
            let d = overlap_det(a, b);
            prod *= d / d.norm();
        }
        -prod.arg() / (2.0 * PI)
    };
    let mean_unwrapped = |phases: Vec<f64>| {
        let mut acc = 0.0;
        let mut prev = phases[0];
        for &p in &phases {
            let q = p - (p - prev).round();
            acc += q;
            prev = q;
        }
        acc / phases.len() as f64
    };
    let px = mean_unwrapped(par::map_indexed(n_k, |t| loop_phase(true, t)));
    let py = mean_unwrapped(par::map_indexed(n_k, |t| loop_phase(false, t)));
    let (px, qx) = snap(px);
    let (py, qy) = snap(py);
    if !(qx && qy) {
        log::warn!("polarization ({px}, {py}) is not quantized; a protecting symmetry may be broken");
    }
    Ok(Polarization { px, py, quantized: qx && qy })
}

/// Wilson-loop polarization of the SSH Bloch model.
///
/// The four bands are `±(|f0(k_x)| + |f0(k_y)|)` and `±||f0(k_x)| − |f0(k_y)||`;
/// the inner pair touches zero on `k_x = k_y`, so the lowest band alone
/// (`n_occ = 1`) is the gapped choice.
pub fn wilson_polarization(params: &SSHParams, n_k: usize, n_occ: usize) -> Result<Polarization> {
    let p = *params;
    wilson_polarization_with(
        move |kx, ky| {
            let h = ssh_bloch(&p, kx, ky);
            Mat::<c64>::from_fn(4, 4, |i, j| h[i][j])
        },
        4,
        n_occ,
        n_k,
    )
}

/// Real-space SSH array of `2·cells × 2·cells` spins built from `t1..t4`,
/// periodic or open.
pub fn ssh_realspace(p: &SSHParams, cells: usize, periodic: bool) -> SpinCouplingMatrix {
    let n = 2 * cells;
    let idx = |i: usize, j: usize| j * n + i;
    let mut v = vec![0.0; n * n * n * n];
    let mut add = |a: usize, b: usize, t: f64| {
        v[a * n * n + b] += t;
        v[b * n * n + a] += t;
    };
    for j in 0..n {
        for i in 0..n {
            for (d, t_even, t_odd) in [(1usize, p.t1, p.t2), (3, p.t3, p.t4)] {
                let tx = if i % 2 == 0 { t_even } else { t_odd };
                if i + d < n || periodic {
                    add(idx(i, j), idx((i + d) % n, j), tx);
                }
                let ty = if j % 2 == 0 { t_even } else { t_odd };
                if j + d < n || periodic {
                    add(idx(i, j), idx(i, (j + d) % n), ty);
                }
            }
        }
    }
    SpinCouplingMatrix { n: n * n, values: v }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eig4(p: &SSHParams, kx: f64, ky: f64) -> Vec<f64> {
        ssh_bands(p, kx, ky).unwrap()
    }

    #[test]
    fn ssh_bloch_examples() {
        let e = eig4(&SSHParams::new(0.0, 1.0, 0.0, 0.0), 0.0, 0.0);
        for (a, b) in e.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let p = SSHParams::new(0.3, 1.0, 0.05, 0.1);
        let e = eig4(&p, 0.4, -1.3);
        let f = eig4(&p, -1.3, 0.4);
        for i in 0..4 {
            assert!((e[i] + e[3 - i]).abs() < 1e-12);
            assert!((e[i] - f[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn f_s_examples() {
        let k = KPoint::new(0.3, -0.8);
        assert!((bloch_f_s(&[(0, 0, 0.7)], k) - Complex64::new(0.7, 0.0)).norm() < 1e-15);
        let v = bloch_f_s(&[(1, 1, 0.5), (-1, -1, 0.5)], k);
        assert!((v.re - (k.kx + k.ky).cos()).abs() < 1e-14 && v.im.abs() < 1e-14);
    }

    #[test]
    fn atomic_limit_has_zero_polarization() {
        let p = wilson_polarization(&SSHParams::new(1.0, 0.0, 0.0, 0.0), 16, 1).unwrap();
        assert_eq!((p.px, p.py), (0.0, 0.0));
        let q = wilson_polarization(&SSHParams::new(0.2, 1.0, 0.0, 0.0), 16, 1).unwrap();
        assert_eq!((q.px, q.py), (0.5, 0.5));
    }

    #[test]
    fn half_filling_is_gapless() {
        let r = wilson_polarization(&SSHParams::new(0.2, 1.0, 0.0, 0.0), 16, 2);
        assert!(matches!(r, Err(Error::Gapless { .. })));
    }

    #[test]
    fn geometry_extents() {
        let t = ssh_geometry(12, true);
        let xs: Vec<i64> = t.sites.iter().map(|s| s.nx).collect();
        assert_eq!(*xs.iter().min().unwrap(), 0);
        assert_eq!(*xs.iter().max().unwrap(), 34);
        let tr = ssh_geometry(12, false);
        assert_eq!(tr.sites.iter().map(|s| s.nx).max().unwrap(), 33);
        assert_eq!(t.len(), 144);
    }

    #[test]
    fn duplicate_sites_rejected() {
        let s = SpinSite::new(Layer::One, 0, 0);
        assert!(SpinArray::new("x", vec![s, s]).unwrap_err().is_config());
    }
}
