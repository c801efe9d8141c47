//! Bilayer square-lattice bath: geometry, Bloch kernel, bands, disorder and
//! the real-space hopping matrix.
//!
//! Site indexing is row-major `(layer, n_y, n_x)` with the layer slowest.

use crate::error::{Error, Result};
use crate::grid::KGrid;
use crate::linalg::SparseSym;
use crate::par;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Layer {
    One,
    Two,
}

impl Layer {
    pub fn index(self) -> usize {
        match self {
            Layer::One => 0,
            Layer::Two => 1,
        }
    }

    pub fn other(self) -> Layer {
        match self {
            Layer::One => Layer::Two,
            Layer::Two => Layer::One,
        }
    }
}

impl TryFrom<u8> for Layer {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Layer::One),
            2 => Ok(Layer::Two),
            _ => Err(format!("layer must be 1 or 2, got {v}")),
        }
    }
}

impl From<Layer> for u8 {
    fn from(l: Layer) -> u8 {
        l.index() as u8 + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KPoint {
    pub kx: f64,
    pub ky: f64,
}

impl KPoint {
    pub fn new(kx: f64, ky: f64) -> Self {
        KPoint { kx, ky }
    }

    /// Shift by Π = (π, π).
    pub fn shifted(self) -> Self {
        KPoint::new(self.kx + std::f64::consts::PI, self.ky + std::f64::consts::PI)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BilayerLattice {
    pub lx: usize,
    pub ly: usize,
    pub j: f64,
    pub eta: f64,
    pub g: f64,
    pub boundary: Boundary,
}

impl BilayerLattice {
    pub fn new(lx: usize, ly: usize, j: f64, eta: f64, g: f64, boundary: Boundary) -> Result<Self> {
        if lx < 3 || ly < 3 {
            return Err(Error::config(format!("lattice must be at least 3x3, got {lx}x{ly}")));
        }
        if !(j.is_finite() && eta.is_finite() && g.is_finite()) {
            return Err(Error::config("J, eta and G must be finite"));
        }
        if g < 0.0 {
            return Err(Error::config(format!("G must be non-negative, got {g}")));
        }
        Ok(BilayerLattice { lx, ly, j, eta, g, boundary })
    }

    /// Square lattice with `J = 1`.
    pub fn square(l: usize, eta: f64, g: f64, boundary: Boundary) -> Result<Self> {
        Self::new(l, l, 1.0, eta, g, boundary)
    }

    pub fn sites_per_layer(&self) -> usize {
        self.lx * self.ly
    }

    pub fn dim(&self) -> usize {
        2 * self.lx * self.ly
    }

    pub fn site_index(&self, layer: Layer, nx: usize, ny: usize) -> usize {
        layer.index() * self.lx * self.ly + ny * self.lx + nx
    }

    /// Inverse of [`site_index`](Self::site_index).
    pub fn site_of(&self, idx: usize) -> (Layer, usize, usize) {
        let per = self.lx * self.ly;
        let layer = if idx < per { Layer::One } else { Layer::Two };
        let r = idx % per;
        (layer, r % self.lx, r / self.lx)
    }

    pub fn center(&self) -> (usize, usize) {
        (self.lx / 2, self.ly / 2)
    }

    /// Whether the Λ operator is well defined (the lattice is bipartite).
    pub fn is_bipartite(&self) -> bool {
        match self.boundary {
            Boundary::Open => true,
            Boundary::Periodic => self.lx.is_multiple_of(2) && self.ly.is_multiple_of(2),
        }
    }
}

/// Chiral sign `Λ = ±(−1)^{n_x+n_y}`, plus on layer 1 and minus on layer 2.
pub fn chiral_sign(layer: Layer, nx: i64, ny: i64) -> f64 {
    let s = if (nx + ny).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    match layer {
        Layer::One => s,
        Layer::Two => -s,
    }
}

/// Diagonal of Λ in site order.
pub fn chiral_signs(lat: &BilayerLattice) -> Vec<f64> {
    (0..lat.dim())
        .map(|i| {
            let (l, x, y) = lat.site_of(i);
            chiral_sign(l, x as i64, y as i64)
        })
        .collect()
}

pub fn dispersion_f(k: KPoint, j: f64) -> f64 {
    2.0 * j * (k.kx.cos() + k.ky.cos())
}

/// 2×2 Bloch Hamiltonian `[[f, G], [G, ηf]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochKernel {
    pub m: [[Complex64; 2]; 2],
}

impl BlochKernel {
    pub fn at(k: KPoint, lat: &BilayerLattice) -> Self {
        let f = dispersion_f(k, lat.j);
        let c = |x: f64| Complex64::new(x, 0.0);
        BlochKernel { m: [[c(f), c(lat.g)], [c(lat.g), c(lat.eta * f)]] }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self.m[0][1] - self.m[1][0].conj()).norm() <= tol
            && self.m[0][0].im.abs() <= tol
            && self.m[1][1].im.abs() <= tol
    }

    /// `‖σ_y H σ_y + H‖_max`, zero when η = −1.
    pub fn sigma_y_anticommutator(&self) -> f64 {
        // σ_y H σ_y = [[H11, −H10], [−H01, H00]]
        let m = &self.m;
        let a = [[m[1][1] + m[0][0], m[0][1] - m[1][0]], [m[1][0] - m[0][1], m[0][0] + m[1][1]]];
        a.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Band pair `(ω_u, ω_l)` for a given value of the monolayer dispersion.
pub fn bands_from_f(f: f64, eta: f64, g: f64) -> (f64, f64) {
    let a = 0.5 * (1.0 + eta) * f;
    let r = (0.5 * (1.0 - eta) * f).hypot(g);
    (a + r, a - r)
}

pub fn band_energies(k: KPoint, lat: &BilayerLattice) -> (f64, f64) {
    bands_from_f(dispersion_f(k, lat.j), lat.eta, lat.g)
}

/// Mixing amplitudes `(sin θ, cos θ)`; `sin²θ` is the layer-1 weight of the
/// upper polariton and `cos²θ` its layer-2 weight.
pub fn angles_from_f(f: f64, eta: f64, g: f64) -> Result<(f64, f64)> {
    if g == 0.0 {
        return Err(Error::DegenerateHybridization);
    }
    let bf = 0.5 * (1.0 - eta) * f;
    let r = bf.hypot(g);
    // x = ω_u − f and y = ω_u − ηf satisfy x·y = G²; take the larger one
    // directly and the other from the product to avoid cancellation.
    let (x, y) = if bf >= 0.0 {
        let y = r + bf;
        (g * g / y, y)
    } else {
        let x = r - bf;
        (x, g * g / x)
    };
    Ok((g / g.hypot(x), g / g.hypot(y)))
}

pub fn polariton_angles(k: KPoint, lat: &BilayerLattice) -> Result<(f64, f64)> {
    angles_from_f(dispersion_f(k, lat.j), lat.eta, lat.g)
}

/// Half-width `E` of the middle gap `(−E, E)`.
///
/// The gap is symmetric for every η < 0 because of the pairing
/// `ω_u(k) = −ω_l(k + Π)`. `ω_u` is convex in `f`, so its minimum over the
/// band `|f| ≤ 4|J|` sits at the stationary point or at the clamp.
pub fn inner_gap_edge(lat: &BilayerLattice) -> Result<f64> {
    let (eta, g) = (lat.eta, lat.g);
    if !(eta < 0.0) || g <= 0.0 {
        return Err(Error::NoGap { eta, g });
    }
    let a = 0.5 * (1.0 + eta);
    let b = 0.5 * (1.0 - eta);
    let fmax = 4.0 * lat.j.abs();
    let fstar = (-a * g / (b * (-eta).sqrt())).clamp(-fmax, fmax);
    let edge = bands_from_f(fstar, eta, g).0;
    if edge <= 0.0 {
        return Err(Error::NoGap { eta, g });
    }
    Ok(edge)
}

/// Bands and mixing amplitudes on an `n_k × n_k` grid, row-major in
/// `(m_y, m_x)`.
#[derive(Clone, Debug)]
pub struct BandStructure {
    pub n_k: usize,
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
    pub omega_u: Vec<f64>,
    pub omega_l: Vec<f64>,
    pub sin_theta: Vec<f64>,
    pub cos_theta: Vec<f64>,
}

pub fn band_structure(lat: &BilayerLattice, n_k: usize) -> Result<BandStructure> {
    if n_k < 2 {
        return Err(Error::config("n_k must be at least 2"));
    }
    if lat.g == 0.0 {
        return Err(Error::DegenerateHybridization);
    }
    let grid = KGrid::new(n_k);
    let rows = par::map_indexed(n_k, |my| {
        let mut row = Vec::with_capacity(n_k);
        for mx in 0..n_k {
            let f = grid.f(mx, my, lat.j);
            let (u, l) = bands_from_f(f, lat.eta, lat.g);
            let (s, c) = angles_from_f(f, lat.eta, lat.g).expect("G > 0 checked");
            row.push((u, l, s, c));
        }
        row
    });
    let total = n_k * n_k;
    let mut bs = BandStructure {
        n_k,
        kx: Vec::with_capacity(total),
        ky: Vec::with_capacity(total),
        omega_u: Vec::with_capacity(total),
        omega_l: Vec::with_capacity(total),
        sin_theta: Vec::with_capacity(total),
        cos_theta: Vec::with_capacity(total),
    };
    for (my, row) in rows.into_iter().enumerate() {
        for (mx, (u, l, s, c)) in row.into_iter().enumerate() {
            bs.kx.push(grid.k(mx));
            bs.ky.push(grid.k(my));
            bs.omega_u.push(u);
            bs.omega_l.push(l);
            bs.sin_theta.push(s);
            bs.cos_theta.push(c);
        }
    }
    Ok(bs)
}

impl BandStructure {
    /// Full middle gap `min ω_u − max ω_l` over the grid.
    pub fn middle_gap(&self) -> f64 {
        let lo = self.omega_u.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.omega_l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        lo - hi
    }
}

const STREAM_EPS1: u64 = 1;
const STREAM_EPS2: u64 = 2;
const STREAM_EPS3: u64 = 3;
const STREAM_ONSITE1: u64 = 4;
const STREAM_ONSITE2: u64 = 5;

/// Uniform draw in `[−w, w]` keyed by `(seed, stream, index)`.
fn keyed_uniform(rng: &mut ChaCha8Rng, stream: u64, index: usize, w: f64) -> f64 {
    rng.set_stream(stream);
    rng.set_word_pos(2 * index as u128);
    let u: f64 = rng.random();
    w * (2.0 * u - 1.0)
}

fn draw_map(seed: u64, stream: u64, len: usize, w: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|i| keyed_uniform(&mut rng, stream, i, w)).collect()
}

/// Random perturbations of the bath.
///
/// Bond `2·(n_y·L_x + n_x) + d` joins site `(n_x, n_y)` to its `+x` (`d = 0`)
/// or `+y` (`d = 1`) neighbor. Every draw is keyed by the seed, a per-map
/// stream and the bond or site id, so maps do not depend on evaluation order.
#[derive(Clone, Debug, PartialEq)]
pub struct DisorderRealization {
    pub lx: usize,
    pub ly: usize,
    pub seed: u64,
    pub w_intra: f64,
    pub w_inter: f64,
    pub w_onsite: f64,
    pub eps1: Vec<f64>,
    pub eps2: Vec<f64>,
    pub eps3: Vec<f64>,
    /// On-site energies, layer 1 then layer 2; empty for off-diagonal disorder.
    pub onsite: Vec<f64>,
}

impl DisorderRealization {
    /// Hopping disorder: intralayer bonds in `[−W_intra, W_intra]`, vertical
    /// bonds in `[−W_inter, W_inter]`. Preserves the chiral symmetry.
    pub fn off_diagonal(lat: &BilayerLattice, seed: u64, w_intra: f64, w_inter: f64) -> Result<Self> {
        if !(w_intra >= 0.0 && w_inter >= 0.0) {
            return Err(Error::config("disorder widths must be non-negative"));
        }
        let nb = 2 * lat.lx * lat.ly;
        let ns = lat.lx * lat.ly;
        Ok(DisorderRealization {
            lx: lat.lx,
            ly: lat.ly,
            seed,
            w_intra,
            w_inter,
            w_onsite: 0.0,
            eps1: draw_map(seed, STREAM_EPS1, nb, w_intra),
            eps2: draw_map(seed, STREAM_EPS2, nb, w_intra),
            eps3: draw_map(seed, STREAM_EPS3, ns, w_inter),
            onsite: Vec::new(),
        })
    }

    /// On-site disorder in `[−w, w]` on both layers, hoppings clean.
    /// Breaks the chiral symmetry.
    pub fn diagonal(lat: &BilayerLattice, seed: u64, w: f64) -> Result<Self> {
        if !(w >= 0.0) {
            return Err(Error::config("disorder width must be non-negative"));
        }
        let nb = 2 * lat.lx * lat.ly;
        let ns = lat.lx * lat.ly;
        let mut onsite = draw_map(seed, STREAM_ONSITE1, ns, w);
        onsite.extend(draw_map(seed, STREAM_ONSITE2, ns, w));
        Ok(DisorderRealization {
            lx: lat.lx,
            ly: lat.ly,
            seed,
            w_intra: 0.0,
            w_inter: 0.0,
            w_onsite: w,
            eps1: vec![0.0; nb],
            eps2: vec![0.0; nb],
            eps3: vec![0.0; ns],
            onsite,
        })
    }

    fn conforms(&self, lat: &BilayerLattice) -> Result<()> {
        let nb = 2 * lat.lx * lat.ly;
        let ns = lat.lx * lat.ly;
        let ok = self.lx == lat.lx
            && self.ly == lat.ly
            && self.eps1.len() == nb
            && self.eps2.len() == nb
            && self.eps3.len() == ns
            && (self.onsite.is_empty() || self.onsite.len() == 2 * ns);
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!(
                "disorder maps for {}x{} do not fit a {}x{} lattice",
                self.lx, self.ly, lat.lx, lat.ly
            )))
        }
    }
}

/// Real-space bath Hamiltonian, dimension `2·L_x·L_y`.
pub fn build_realspace_hamiltonian(
    lat: &BilayerLattice,
    dis: Option<&DisorderRealization>,
) -> Result<SparseSym> {
    if let Some(d) = dis {
        d.conforms(lat)?;
    }
    let (lx, ly) = (lat.lx, lat.ly);
    let per = lx * ly;
    let mut h = SparseSym::new(2 * per);
    let periodic = lat.boundary == Boundary::Periodic;
    for ny in 0..ly {
        for nx in 0..lx {
            let s = ny * lx + nx;
            let neighbors = [
                (0usize, if nx + 1 < lx { Some(s + 1) } else if periodic { Some(ny * lx) } else { None }),
                (1usize, if ny + 1 < ly { Some(s + lx) } else if periodic { Some(nx) } else { None }),
            ];
            for (dir, t) in neighbors {
                let Some(t) = t else { continue };
                let b = 2 * s + dir;
                let (e1, e2) = dis.map_or((0.0, 0.0), |d| (d.eps1[b], d.eps2[b]));
                h.push(s, t, lat.j + e1);
                h.push(per + s, per + t, lat.eta * lat.j + e2);
            }
            let e3 = dis.map_or(0.0, |d| d.eps3[s]);
            h.push(s, per + s, lat.g + e3);
            if let Some(d) = dis {
                if !d.onsite.is_empty() {
                    h.push(s, s, d.onsite[s]);
                    h.push(per + s, per + s, d.onsite[per + s]);
                }
            }
        }
    }
    Ok(h)
}

/// Normalized histogram of both bands.
#[derive(Clone, Debug)]
pub struct DensityOfStates {
    pub centers: Vec<f64>,
    pub density: Vec<f64>,
    pub width: f64,
}

pub fn density_of_states(lat: &BilayerLattice, n_k: usize, n_bins: usize) -> Result<DensityOfStates> {
    if n_k < 32 {
        return Err(Error::config(format!("n_k must be at least 32, got {n_k}")));
    }
    if n_bins < 16 {
        return Err(Error::config(format!("n_bins must be at least 16, got {n_bins}")));
    }
    let grid = KGrid::new(n_k);
    let rows = par::map_indexed(n_k, |my| {
        (0..n_k)
            .map(|mx| bands_from_f(grid.f(mx, my, lat.j), lat.eta, lat.g))
            .collect::<Vec<_>>()
    });
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(u, l) in rows.iter().flatten() {
        lo = lo.min(l);
        hi = hi.max(u);
    }
    let width = (hi - lo) / n_bins as f64;
    let bin = |e: f64| (((e - lo) / width).floor() as usize).min(n_bins - 1);
    let partial = par::map_slice(&rows, |row| {
        let mut counts = vec![0u64; n_bins];
        for &(u, l) in row {
            counts[bin(u)] += 1;
            counts[bin(l)] += 1;
        }
        counts
    });
    let mut counts = vec![0u64; n_bins];
    for p in &partial {
        for (c, x) in counts.iter_mut().zip(p) {
            *c += x;
        }
    }
    let total = (2 * n_k * n_k) as f64;
    Ok(DensityOfStates {
        centers: (0..n_bins).map(|i| lo + (i as f64 + 0.5) * width).collect(),
        density: counts.iter().map(|&c| c as f64 / (total * width)).collect(),
        width,
    })
}

/// Fermi–Dirac occupation; `kT = 0` gives the step function.
pub fn thermal_occupation(omega: f64, e_f: f64, kt: f64) -> Result<f64> {
    if kt < 0.0 || kt.is_nan() {
        return Err(Error::config(format!("kT must be non-negative, got {kt}")));
    }
    let d = omega - e_f;
    if kt == 0.0 {
        return Ok(if d < 0.0 {
            1.0
        } else if d == 0.0 {
            0.5
        } else {
            0.0
        });
    }
    let x = d / kt;
    Ok(if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    })
}

fn default_j() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSpec {
    pub seed: u64,
    #[serde(rename = "W_intra")]
    pub w_intra: f64,
    #[serde(rename = "W_inter")]
    pub w_inter: f64,
}

/// JSON description of a lattice with optional hopping disorder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    #[serde(rename = "Lx")]
    pub lx: usize,
    #[serde(rename = "Ly")]
    pub ly: usize,
    #[serde(rename = "J", default = "default_j")]
    pub j: f64,
    pub eta: f64,
    #[serde(rename = "G")]
    pub g: f64,
    pub boundary: Boundary,
    #[serde(default)]
    pub disorder: Option<DisorderSpec>,
}

impl LatticeSpec {
    pub fn lattice(&self) -> Result<BilayerLattice> {
        BilayerLattice::new(self.lx, self.ly, self.j, self.eta, self.g, self.boundary)
    }

    pub fn realize(&self) -> Result<(BilayerLattice, Option<DisorderRealization>)> {
        let lat = self.lattice()?;
        let dis = match &self.disorder {
            Some(d) => Some(DisorderRealization::off_diagonal(&lat, d.seed, d.w_intra, d.w_inter)?),
            None => None,
        };
        Ok((lat, dis))
    }
}
