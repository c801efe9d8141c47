//! Single-excitation bound states of an emitter in the middle gap.
//!
//! Two independent routes are provided. The quadrature route solves the
//! pole equation on a k-grid and transforms the lattice resolvent back to
//! real space; the exact route diagonalizes the finite bath plus emitter.

use crate::error::{Error, Result};
use crate::grid::{to_real_space_parity, KGrid, TorusField};
use crate::lattice::{
    build_realspace_hamiltonian, chiral_sign, inner_gap_edge, BilayerLattice, DisorderRealization, Layer,
};
use crate::linalg::{dense_eigh, shift_invert_lanczos, SparseSym};
use crate::par;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Matrices up to this size are diagonalized densely.
pub const DENSE_LIMIT: usize = 2200;

/// Eigenvalues closer than this are treated as one degenerate cluster.
const CLUSTER_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingPoint {
    pub layer: Layer,
    pub nx: i64,
    pub ny: i64,
    pub g: f64,
}

impl CouplingPoint {
    pub fn new(layer: Layer, nx: i64, ny: i64, g: f64) -> Self {
        CouplingPoint { layer, nx, ny, g }
    }
}

/// An emitter with detuning `delta` coupled to one (small atom) or several
/// (giant atom) lattice sites.
///
/// Coordinates are relative to a frame origin: the k-space routes treat the
/// lattice as infinite, the finite-lattice routes put the origin at
/// [`BilayerLattice::center`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterConfig {
    pub delta: f64,
    pub points: Vec<CouplingPoint>,
}

impl EmitterConfig {
    pub fn small(delta: f64, layer: Layer, g: f64) -> Self {
        EmitterConfig { delta, points: vec![CouplingPoint::new(layer, 0, 0, g)] }
    }

    fn single_point(&self) -> Result<CouplingPoint> {
        match self.points.as_slice() {
            [p] => Ok(*p),
            [] => Err(Error::config("emitter has no coupling points")),
            _ => Err(Error::config("a small atom needs exactly one coupling point")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    ExactDiag,
}

/// Complex amplitudes on a rectangle of sites; `values[(y − y0)·width + (x − x0)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteField {
    pub width: usize,
    pub height: usize,
    pub x0: i64,
    pub y0: i64,
    pub values: Vec<Complex64>,
}

impl SiteField {
    pub fn zeros(width: usize, height: usize, x0: i64, y0: i64) -> Self {
        SiteField { width, height, x0, y0, values: vec![Complex64::new(0.0, 0.0); width * height] }
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= self.x0 && y >= self.y0 && x < self.x0 + self.width as i64 && y < self.y0 + self.height as i64
    }

    /// Amplitude at `(x, y)`; zero outside the rectangle.
    pub fn get(&self, x: i64, y: i64) -> Complex64 {
        if self.contains(x, y) {
            self.values[((y - self.y0) as usize) * self.width + (x - self.x0) as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn set(&mut self, x: i64, y: i64, v: Complex64) {
        assert!(self.contains(x, y));
        let i = ((y - self.y0) as usize) * self.width + (x - self.x0) as usize;
        self.values[i] = v;
    }

    /// Iterates `(x, y, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, i64, Complex64)> + '_ {
        self.values.iter().enumerate().map(move |(i, v)| {
            (self.x0 + (i % self.width) as i64, self.y0 + (i / self.width) as i64, *v)
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    fn from_torus(t: &TorusField) -> Self {
        let n = t.n;
        let lo = t.min_coord();
        let mut f = SiteField::zeros(n, n, lo, lo);
        for y in lo..lo + n as i64 {
            for x in lo..lo + n as i64 {
                f.set(x, y, t.get(x, y));
            }
        }
        f
    }
}

#[derive(Clone, Debug)]
pub struct BoundStateSolution {
    pub energy: f64,
    pub c_e: f64,
    pub field_a1: SiteField,
    pub field_a2: SiteField,
    pub method: Method,
    /// Site the Λ-parity of the field is measured against.
    pub anchor: (Layer, i64, i64),
    /// Set when the field has not decayed below 1e−8 of its peak at the
    /// edge of the computational box.
    pub under_resolved: bool,
}

impl BoundStateSolution {
    pub fn field(&self, layer: Layer) -> &SiteField {
        match layer {
            Layer::One => &self.field_a1,
            Layer::Two => &self.field_a2,
        }
    }

    /// Total norm `c_e² + Σ|C|²`.
    pub fn total_norm(&self) -> f64 {
        self.c_e * self.c_e + self.field_a1.norm_sqr() + self.field_a2.norm_sqr()
    }
}

/// Denominator `D = (z − f)(z − ηf) − G²` of the 2×2 lattice resolvent.
fn resolvent_det(z: f64, f: f64, eta: f64, g: f64) -> f64 {
    (z - f) * (z - eta * f) - g * g
}

/// Matrix elements `⟨a1|(z − H(k))⁻¹|a_s⟩, ⟨a2|(z − H(k))⁻¹|a_s⟩` for a
/// source in `layer`, as functions of the monolayer dispersion `f`.
pub fn resolvent_column(z: f64, f: f64, eta: f64, g: f64, layer: Layer) -> (f64, f64) {
    let d = resolvent_det(z, f, eta, g);
    match layer {
        Layer::One => ((z - eta * f) / d, g / d),
        Layer::Two => (g / d, (z - f) / d),
    }
}

fn check_in_gap(z: f64, lat: &BilayerLattice) -> Result<f64> {
    let edge = inner_gap_edge(lat)?;
    if !(z.abs() < edge) {
        return Err(Error::PrincipalValue { z, edge });
    }
    Ok(edge)
}

fn check_grid(n_k: usize) -> Result<()> {
    if n_k < 8 || !n_k.is_multiple_of(4) {
        return Err(Error::config(format!("n_k must be a multiple of 4 and at least 8, got {n_k}")));
    }
    Ok(())
}

/// Σ_e(z) for an emitter coupled with strength `g` to one site of `layer`.
///
/// Each term is paired with its Π-shifted partner and the pairs are summed
/// in a fixed order, so odd integrands cancel exactly and the result does
/// not depend on the thread count.
pub fn self_energy(z: f64, lat: &BilayerLattice, layer: Layer, g: f64, n_k: usize) -> Result<f64> {
    check_in_gap(z, lat)?;
    check_grid(n_k)?;
    let grid = KGrid::new(n_k);
    let half = n_k / 2;
    let own = |f: f64| {
        let (a1, a2) = resolvent_column(z, f, lat.eta, lat.g, layer);
        match layer {
            Layer::One => a1,
            Layer::Two => a2,
        }
    };
    let rows = par::map_indexed(half, |my| {
        let py = grid.partner(my);
        let mut acc = 0.0;
        for mx in 0..n_k {
            let px = grid.partner(mx);
            acc += own(grid.f(mx, my, lat.j)) + own(grid.f(px, py, lat.j));
        }
        acc
    });
    Ok(g * g * par::ordered_sum(&rows) / (n_k * n_k) as f64)
}

/// Root of `z − Δ − Σ_e(z)` inside the middle gap.
pub fn solve_pole(emitter: &EmitterConfig, lat: &BilayerLattice, n_k: usize) -> Result<f64> {
    let p = emitter.single_point()?;
    let delta = emitter.delta;
    let edge = inner_gap_edge(lat)?;
    if !(delta.abs() < edge) {
        return Err(Error::config(format!("detuning {delta} lies outside the middle gap (±{edge})")));
    }
    let pole = |z: f64| -> Result<f64> { Ok(z - delta - self_energy(z, lat, p.layer, p.g, n_k)?) };
    if pole(delta)? == 0.0 {
        return Ok(delta);
    }
    // Σ_e is decreasing inside the gap, so the pole function is increasing.
    let mut lo = -edge * (1.0 - 1e-9);
    let mut hi = edge * (1.0 - 1e-9);
    let (flo, fhi) = (pole(lo)?, pole(hi)?);
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::NoBoundState { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = pole(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (flo, fhi) = (pole(lo)?, pole(hi)?);
    Ok(if flo.abs() <= fhi.abs() { lo } else { hi })
}

/// Momentum amplitudes `(C_{k,a1}, C_{k,a2})` of a bound state at energy
/// `e_bs` for an emitter on layer 1.
pub fn bs_momentum_amplitudes(
    kx: f64,
    ky: f64,
    e_bs: f64,
    lat: &BilayerLattice,
) -> Result<(f64, f64)> {
    check_in_gap(e_bs, lat)?;
    let f = 2.0 * lat.j * (kx.cos() + ky.cos());
    Ok(resolvent_column(e_bs, f, lat.eta, lat.g, Layer::One))
}

/// Unnormalized photon fields `g·G(n, n_s; E)` of a unit emitter amplitude
/// coupled to `(layer, 0, 0)`, on the `n_k × n_k` torus.
pub(crate) fn resolvent_fields(
    e: f64,
    lat: &BilayerLattice,
    layer: Layer,
    n_k: usize,
) -> (TorusField, TorusField) {
    let grid = KGrid::new(n_k);
    let rows = par::map_indexed(n_k, |my| {
        (0..n_k)
            .map(|mx| resolvent_column(e, grid.f(mx, my, lat.j), lat.eta, lat.g, layer))
            .collect::<Vec<_>>()
    });
    let (v1, v2): (Vec<Complex64>, Vec<Complex64>) = rows
        .into_iter()
        .flatten()
        .map(|(a, b)| (Complex64::new(a, 0.0), Complex64::new(b, 0.0)))
        .unzip();
    (to_real_space_parity(&grid, &v1), to_real_space_parity(&grid, &v2))
}

fn peak_and_rim(fields: [&SiteField; 2]) -> (f64, f64) {
    let mut peak = 0.0f64;
    let mut rim = 0.0f64;
    for f in fields {
        let (xl, yl) = (f.x0, f.y0);
        let (xh, yh) = (f.x0 + f.width as i64 - 1, f.y0 + f.height as i64 - 1);
        for (x, y, v) in f.iter() {
            let a = v.norm();
            peak = peak.max(a);
            if x == xl || x == xh || y == yl || y == yh {
                rim = rim.max(a);
            }
        }
    }
    (peak, rim)
}

/// Bound state of a small atom from the k-space resolvent.
///
/// The field shape is evaluated with `C_e = 1` and the whole state is
/// normalized afterwards. Coordinates are relative to the frame of the
/// emitter's coupling point.
pub fn bs_realspace_profile(
    emitter: &EmitterConfig,
    lat: &BilayerLattice,
    n_k: usize,
) -> Result<BoundStateSolution> {
    let p = emitter.single_point()?;
    let e = solve_pole(emitter, lat, n_k)?;
    let (t1, t2) = resolvent_fields(e, lat, p.layer, n_k);
    let mut a1 = SiteField::from_torus(&t1);
    let mut a2 = SiteField::from_torus(&t2);
    for f in [&mut a1, &mut a2] {
        f.scale(p.g);
        f.x0 += p.nx;
        f.y0 += p.ny;
    }
    Ok(normalized(e, 1.0, a1, a2, Method::Quadrature, (p.layer, p.nx, p.ny)))
}

pub(crate) fn normalized(
    energy: f64,
    c_e: f64,
    mut a1: SiteField,
    mut a2: SiteField,
    method: Method,
    anchor: (Layer, i64, i64),
) -> BoundStateSolution {
    let total = c_e * c_e + a1.norm_sqr() + a2.norm_sqr();
    let s = 1.0 / total.sqrt();
    a1.scale(s);
    a2.scale(s);
    let (peak, rim) = peak_and_rim([&a1, &a2]);
    // a finite lattice ends at its boundary; only a truncated torus is under-resolved
    let under_resolved = method == Method::Quadrature && rim > 1e-8 * peak;
    if under_resolved {
        log::warn!("bound-state field at the box edge is {:.1e} of its peak", rim / peak.max(f64::MIN_POSITIVE));
    }
    BoundStateSolution { energy, c_e: c_e * s, field_a1: a1, field_a2: a2, method, anchor, under_resolved }
}

/// Bath plus emitter Hamiltonian; the emitter is the last basis state.
pub fn emitter_hamiltonian(
    emitter: &EmitterConfig,
    lat: &BilayerLattice,
    dis: Option<&DisorderRealization>,
) -> Result<SparseSym> {
    if emitter.points.is_empty() {
        return Err(Error::config("emitter has no coupling points"));
    }
    let mut h = build_realspace_hamiltonian(lat, dis)?;
    let e = h.dim();
    h.grow(1);
    if emitter.delta != 0.0 {
        h.push(e, e, emitter.delta);
    }
    let (cx, cy) = lat.center();
    for p in &emitter.points {
        let x = cx as i64 + p.nx;
        let y = cy as i64 + p.ny;
        if x < 0 || y < 0 || x >= lat.lx as i64 || y >= lat.ly as i64 {
            return Err(Error::config(format!("coupling point ({}, {}) lies outside the lattice", p.nx, p.ny)));
        }
        h.push(lat.site_index(p.layer, x as usize, y as usize), e, p.g);
    }
    Ok(h)
}

/// In-gap eigenstate candidates: energy, emitter weight and the normalized
/// projection of the emitter state onto the (possibly degenerate) cluster.
struct Candidate {
    energy: f64,
    weight: f64,
    vector: Vec<f64>,
}

fn clusters_from_pairs(mut pairs: Vec<(f64, Vec<f64>)>, emitter: usize) -> Vec<Candidate> {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i + 1;
        while j < pairs.len() && (pairs[j].0 - pairs[j - 1].0).abs() < CLUSTER_TOL {
            j += 1;
        }
        let n = pairs[i].1.len();
        let mut v = vec![0.0; n];
        let mut weight = 0.0;
        let mut energy = 0.0;
        for (e, x) in &pairs[i..j] {
            let c = x[emitter];
            weight += c * c;
            energy += e * c * c;
            for (vi, xi) in v.iter_mut().zip(x) {
                *vi += c * xi;
            }
        }
        if weight > 0.0 {
            energy /= weight;
            let s = weight.sqrt();
            v.iter_mut().for_each(|x| *x /= s);
        } else {
            energy = pairs[i].0;
            v.clone_from(&pairs[i].1);
        }
        out.push(Candidate { energy, weight, vector: v });
        i = j;
    }
    out
}

fn in_gap_candidates(h: &SparseSym, delta: f64, edge: f64) -> Result<Vec<Candidate>> {
    let n = h.dim();
    let emitter = n - 1;
    if n <= DENSE_LIMIT {
        let (vals, vecs) = dense_eigh(&h.to_dense())?;
        let pairs: Vec<(f64, Vec<f64>)> = vals
            .iter()
            .enumerate()
            .filter(|(_, e)| e.abs() < edge)
            .map(|(c, &e)| (e, (0..n).map(|r| vecs[(r, c)]).collect()))
            .collect();
        return Ok(clusters_from_pairs(pairs, emitter));
    }
    let mut start = vec![0.0; n];
    start[emitter] = 1.0;
    // small irrational offset keeps the shift off any exact eigenvalue
    let sigma = delta + 0.0031830988618379067 * edge;
    let ritz = shift_invert_lanczos(h, sigma, &start, 60, 8)?;
    let pairs: Vec<(f64, Vec<f64>)> = ritz
        .into_iter()
        .filter(|r| r.value.abs() < edge && r.residual < 1e-8)
        .map(|r| (r.value, r.vector))
        .collect();
    Ok(clusters_from_pairs(pairs, emitter))
}

/// Bound state from diagonalizing the finite lattice with the emitter.
///
/// Among the states inside the middle gap the one with the largest emitter
/// weight is returned; degenerate clusters contribute the projection of the
/// emitter state onto the cluster. Coordinates are relative to the lattice
/// center.
pub fn bs_exact_diagonalization(
    emitter: &EmitterConfig,
    lat: &BilayerLattice,
    dis: Option<&DisorderRealization>,
) -> Result<BoundStateSolution> {
    let h = emitter_hamiltonian(emitter, lat, dis)?;
    let edge = inner_gap_edge(lat)?;
    let mut cands = in_gap_candidates(&h, emitter.delta, edge)?;
    cands.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    match cands.first() {
        Some(c) if c.weight > 0.5 => {}
        _ => {
            return Err(Error::HybridizationFailure {
                candidates: cands.iter().take(2).map(|c| (c.energy, c.weight)).collect(),
            })
        }
    }
    let best = cands.swap_remove(0);
    let n = h.dim();
    let sign = if best.vector[n - 1] < 0.0 { -1.0 } else { 1.0 };
    let (cx, cy) = lat.center();
    let (x0, y0) = (-(cx as i64), -(cy as i64));
    let mut a1 = SiteField::zeros(lat.lx, lat.ly, x0, y0);
    let mut a2 = SiteField::zeros(lat.lx, lat.ly, x0, y0);
    for idx in 0..n - 1 {
        let (layer, x, y) = lat.site_of(idx);
        let v = Complex64::new(sign * best.vector[idx], 0.0);
        let f = if layer == Layer::One { &mut a1 } else { &mut a2 };
        f.set(x as i64 + x0, y as i64 + y0, v);
    }
    let p = emitter.points[0];
    let c_e = sign * best.vector[n - 1];
    Ok(normalized(best.energy, c_e, a1, a2, Method::ExactDiag, (p.layer, p.nx, p.ny)))
}

/// Squared photon norms `(odd, even)` on the two Λ-sublattices.
///
/// "Odd" collects the sites whose Λ sign is opposite to the anchor site
/// (odd `n_x + n_y` in the anchor's layer, even in the other layer); the
/// bound state of a resonant emitter lives there.
pub fn parity_norms(sol: &BoundStateSolution) -> (f64, f64) {
    let (al, ax, ay) = sol.anchor;
    let ref_sign = chiral_sign(al, ax, ay);
    let mut odd = 0.0;
    let mut even = 0.0;
    for layer in [Layer::One, Layer::Two] {
        for (x, y, v) in sol.field(layer).iter() {
            if chiral_sign(layer, x, y) == ref_sign {
                even += v.norm_sqr();
            } else {
                odd += v.norm_sqr();
            }
        }
    }
    (odd, even)
}

/// Outcome of one disorder realization for the zero-mode statistics.
#[derive(Clone, Copy, Debug)]
pub struct ZeroModeTrial {
    pub seed: u64,
    /// Smallest |E| over the full spectrum.
    pub min_abs_energy: f64,
    /// Weight of that eigenstate on the anchor's own Λ-sublattice, where a
    /// protected zero mode has no amplitude.
    pub forbidden_norm: f64,
}

/// Shift used by the sparse zero-mode search.
pub const ZERO_MODE_SHIFT: f64 = 1e-9;

/// Smallest-|E| eigenstate of the emitter plus disordered bath; dense up to
/// [`DENSE_LIMIT`], shift-invert Lanczos beyond.
pub fn zero_mode_trial(
    emitter: &EmitterConfig,
    lat: &BilayerLattice,
    dis: &DisorderRealization,
) -> Result<ZeroModeTrial> {
    let h = emitter_hamiltonian(emitter, lat, Some(dis))?;
    let n = h.dim();
    let (e, vec) = if n <= DENSE_LIMIT {
        let (vals, vecs) = dense_eigh(&h.to_dense())?;
        let c = (0..vals.len())
            .min_by(|&a, &b| vals[a].abs().total_cmp(&vals[b].abs()))
            .ok_or_else(|| Error::LinearAlgebra("empty spectrum".into()))?;
        (vals[c], (0..n).map(|i| vecs[(i, c)]).collect::<Vec<_>>())
    } else {
        // a protected zero mode makes H singular, so shift just off zero;
        // a quasi-random start reaches states the emitter does not touch
        let start: Vec<f64> = (0..n).map(|i| (i as f64 * 0.754_877_666_246_692_8).fract() - 0.5).collect();
        let pairs = shift_invert_lanczos(&h, ZERO_MODE_SHIFT, &start, 80, 4)?;
        let best = pairs
            .into_iter()
            .min_by(|a, b| a.value.abs().total_cmp(&b.value.abs()))
            .ok_or_else(|| Error::LinearAlgebra("empty Krylov space".into()))?;
        (best.value, best.vector)
    };
    let p = emitter.points[0];
    let (cx, cy) = lat.center();
    let ref_sign = chiral_sign(p.layer, cx as i64 + p.nx, cy as i64 + p.ny);
    let mut forbidden = 0.0;
    for (idx, v) in vec.iter().enumerate().take(n - 1) {
        let (layer, x, y) = lat.site_of(idx);
        if chiral_sign(layer, x as i64, y as i64) == ref_sign {
            forbidden += v * v;
        }
    }
    Ok(ZeroModeTrial { seed: dis.seed, min_abs_energy: e.abs(), forbidden_norm: forbidden })
}
