//! Giant atoms: emitters coupled to several lattice sites.
//!
//! The bound state of a giant atom is the weighted superposition of the
//! single-site resolvent fields of each coupling point. A direct k-space
//! evaluation with the interference factors is kept as an independent
//! route.

use crate::bound_state::{normalized, resolvent_column, resolvent_fields, BoundStateSolution, EmitterConfig, Method, SiteField};
use crate::error::{Error, Result};
use crate::grid::{to_real_space_parity, KGrid, TorusField};
use crate::lattice::{chiral_sign, inner_gap_edge, BilayerLattice, KPoint, Layer};
use crate::par;
use num_complex::Complex64;

/// `I(k) = Σ_p g_p exp(i k·n_p)` over the given points.
pub fn interference_factor(points: &[crate::bound_state::CouplingPoint], k: KPoint) -> Complex64 {
    points
        .iter()
        .map(|p| Complex64::from_polar(p.g, k.kx * p.nx as f64 + k.ky * p.ny as f64))
        .sum()
}

/// Interference factors of an emitter, split by layer.
#[derive(Clone, Debug)]
pub struct InterferenceFactor {
    points: Vec<crate::bound_state::CouplingPoint>,
}

impl InterferenceFactor {
    pub fn new(emitter: &EmitterConfig, layer: Layer) -> Self {
        InterferenceFactor { points: emitter.points.iter().copied().filter(|p| p.layer == layer).collect() }
    }

    pub fn at(&self, k: KPoint) -> Complex64 {
        interference_factor(&self.points, k)
    }
}

/// The four diagonal points with couplings `(+, −, −, +)·g`, giving
/// `I(k) = −4g sin k_x sin k_y`.
pub fn four_diagonal(g: f64) -> EmitterConfig {
    use crate::bound_state::CouplingPoint as P;
    EmitterConfig {
        delta: 0.0,
        points: vec![
            P::new(Layer::One, 1, 1, g),
            P::new(Layer::One, 1, -1, -g),
            P::new(Layer::One, -1, 1, -g),
            P::new(Layer::One, -1, -1, g),
        ],
    }
}

/// Four nearest neighbors of the origin in layer 1, equal couplings.
pub fn cross(g: f64) -> EmitterConfig {
    use crate::bound_state::CouplingPoint as P;
    EmitterConfig {
        delta: 0.0,
        points: [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().map(|&(x, y)| P::new(Layer::One, x, y, g)).collect(),
    }
}

/// Whether all coupling points sit on one Λ-sublattice, which keeps the
/// resonant bound state on the other one.
pub fn parity_consistent(emitter: &EmitterConfig) -> bool {
    let mut signs = emitter.points.iter().map(|p| chiral_sign(p.layer, p.nx, p.ny));
    match signs.next() {
        Some(s) => signs.all(|t| t == s),
        None => true,
    }
}

fn check_points(emitter: &EmitterConfig, allow_odd: bool) -> Result<()> {
    if emitter.points.is_empty() {
        return Err(Error::config("emitter has no coupling points"));
    }
    if !allow_odd && !parity_consistent(emitter) {
        let list: Vec<String> =
            emitter.points.iter().map(|p| format!("(layer {}, {}, {})", u8::from(p.layer), p.nx, p.ny)).collect();
        return Err(Error::ParityViolation(list.join(", ")));
    }
    Ok(())
}

/// `Σ(z) = N⁻² Σ_k v(k)† R(z, k) v(k)` with `v_l(k) = Σ_{p∈l} g_p e^{−ik·n_p}`.
pub fn giant_self_energy(z: f64, emitter: &EmitterConfig, lat: &BilayerLattice, n_k: usize) -> Result<f64> {
    let edge = inner_gap_edge(lat)?;
    if !(z.abs() < edge) {
        return Err(Error::PrincipalValue { z, edge });
    }
    let grid = KGrid::new(n_k);
    let rows = par::map_indexed(n_k, |my| {
        let mut acc = 0.0;
        for mx in 0..n_k {
            let v = source_vector(&grid, mx, my, emitter);
            let f = grid.f(mx, my, lat.j);
            let (r11, r21) = resolvent_column(z, f, lat.eta, lat.g, Layer::One);
            let (r12, r22) = resolvent_column(z, f, lat.eta, lat.g, Layer::Two);
            let w1 = v[0] * r11 + v[1] * r12;
            let w2 = v[0] * r21 + v[1] * r22;
            acc += (v[0].conj() * w1 + v[1].conj() * w2).re;
        }
        acc
    });
    Ok(par::ordered_sum(&rows) / (n_k * n_k) as f64)
}

fn source_vector(grid: &KGrid, mx: usize, my: usize, emitter: &EmitterConfig) -> [Complex64; 2] {
    let mut v = [Complex64::new(0.0, 0.0); 2];
    for p in &emitter.points {
        v[p.layer.index()] += grid.plane_wave(mx, -p.nx) * grid.plane_wave(my, -p.ny) * p.g;
    }
    v
}

/// Bound-state energy of a giant atom.
///
/// A resonant emitter whose points share one Λ-sublattice sits exactly at
/// zero, since the bath resolvent between same-sublattice sites is odd in
/// energy and vanishes at the gap center.
pub fn giant_pole(emitter: &EmitterConfig, lat: &BilayerLattice, n_k: usize) -> Result<f64> {
    let edge = inner_gap_edge(lat)?;
    let delta = emitter.delta;
    if !(delta.abs() < edge) {
        return Err(Error::config(format!("detuning {delta} lies outside the middle gap (±{edge})")));
    }
    if delta == 0.0 && parity_consistent(emitter) {
        return Ok(0.0);
    }
    let pole = |z: f64| -> Result<f64> { Ok(z - delta - giant_self_energy(z, emitter, lat, n_k)?) };
    let mut lo = -edge * (1.0 - 1e-9);
    let mut hi = edge * (1.0 - 1e-9);
    if !(pole(lo)? < 0.0 && pole(hi)? > 0.0) {
        return Err(Error::NoBoundState { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pole(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn torus_shifted(t: &TorusField, dx: i64, dy: i64, weight: f64, out: &mut SiteField) {
    let (w, x0, y0) = (out.width, out.x0, out.y0);
    for (i, v) in out.values.iter_mut().enumerate() {
        let x = x0 + (i % w) as i64;
        let y = y0 + (i / w) as i64;
        *v += t.get(x - dx, y - dy) * weight;
    }
}

/// Unnormalized contribution of each coupling point, `(layer 1, layer 2)`
/// fields on the `n_k × n_k` torus centered on the frame origin.
pub fn point_contributions(
    emitter: &EmitterConfig,
    lat: &BilayerLattice,
    energy: f64,
    n_k: usize,
) -> Vec<[SiteField; 2]> {
    let mut refs: [Option<(TorusField, TorusField)>; 2] = [None, None];
    for p in &emitter.points {
        if refs[p.layer.index()].is_none() {
            refs[p.layer.index()] = Some(resolvent_fields(energy, lat, p.layer, n_k));
        }
    }
    let lo = -((n_k / 2) as i64);
    emitter
        .points
        .iter()
        .map(|p| {
            let (t1, t2) = refs[p.layer.index()].as_ref().expect("reference computed");
            let mut a1 = SiteField::zeros(n_k, n_k, lo, lo);
            let mut a2 = SiteField::zeros(n_k, n_k, lo, lo);
            torus_shifted(t1, p.nx, p.ny, p.g, &mut a1);
            torus_shifted(t2, p.nx, p.ny, p.g, &mut a2);
            [a1, a2]
        })
        .collect()
}

/// Bound state of a giant atom by superposing single-point fields.
///
/// Point sets that mix Λ-sublattices are refused unless `allow_odd` is set.
pub fn giant_bs_profile(
    emitter: &EmitterConfig,
    lat: &BilayerLattice,
    n_k: usize,
    allow_odd: bool,
) -> Result<BoundStateSolution> {
    check_points(emitter, allow_odd)?;
    if n_k < 8 || !n_k.is_multiple_of(4) {
        return Err(Error::config(format!("n_k must be a multiple of 4 and at least 8, got {n_k}")));
    }
    let e = giant_pole(emitter, lat, n_k)?;
    let parts = point_contributions(emitter, lat, e, n_k);
    let lo = -((n_k / 2) as i64);
    let mut a1 = SiteField::zeros(n_k, n_k, lo, lo);
    let mut a2 = SiteField::zeros(n_k, n_k, lo, lo);
    for [p1, p2] in &parts {
        for (dst, src) in a1.values.iter_mut().zip(&p1.values) {
            *dst += src;
        }
        for (dst, src) in a2.values.iter_mut().zip(&p2.values) {
            *dst += src;
        }
    }
    let p = emitter.points[0];
    Ok(normalized(e, 1.0, a1, a2, Method::Quadrature, (p.layer, p.nx, p.ny)))
}

/// Same state evaluated directly from `R(E, k) v(k)` in one transform.
pub fn giant_bs_profile_kspace(
    emitter: &EmitterConfig,
    lat: &BilayerLattice,
    n_k: usize,
    allow_odd: bool,
) -> Result<BoundStateSolution> {
    check_points(emitter, allow_odd)?;
    let e = giant_pole(emitter, lat, n_k)?;
    let grid = KGrid::new(n_k);
    let rows = par::map_indexed(n_k, |my| {
        (0..n_k)
            .map(|mx| {
                let v = source_vector(&grid, mx, my, emitter);
                let f = grid.f(mx, my, lat.j);
                let (r11, r21) = resolvent_column(e, f, lat.eta, lat.g, Layer::One);
                let (r12, r22) = resolvent_column(e, f, lat.eta, lat.g, Layer::Two);
                (v[0] * r11 + v[1] * r12, v[0] * r21 + v[1] * r22)
            })
            .collect::<Vec<_>>()
    });
    let (w1, w2): (Vec<Complex64>, Vec<Complex64>) = rows.into_iter().flatten().unzip();
    let to_field = |t: TorusField| {
        let lo = t.min_coord();
        let mut f = SiteField::zeros(n_k, n_k, lo, lo);
        for y in lo..lo + n_k as i64 {
            for x in lo..lo + n_k as i64 {
                f.set(x, y, t.get(x, y));
            }
        }
        f
    };
    let a1 = to_field(to_real_space_parity(&grid, &w1));
    let a2 = to_field(to_real_space_parity(&grid, &w2));
    let p = emitter.points[0];
    Ok(normalized(e, 1.0, a1, a2, Method::Quadrature, (p.layer, p.nx, p.ny)))
}

/// Squared field norm, both layers, on the shells `r_min ≤ |n|_∞ ≤ r_max`
/// within perpendicular distance 1 of the diagonal ray along `(sx, sy)`.
pub fn branch_norm(sol: &BoundStateSolution, sx: i64, sy: i64, r_min: i64, r_max: i64) -> f64 {
    assert!(sx.abs() == 1 && sy.abs() == 1, "rays run along lattice diagonals");
    let mut acc = 0.0;
    for layer in [Layer::One, Layer::Two] {
        for (x, y, v) in sol.field(layer).iter() {
            let r = x.abs().max(y.abs());
            if r < r_min || r > r_max {
                continue;
            }
            if (sy * x - sx * y).abs() <= 1 && sx * x + sy * y > 0 {
                acc += v.norm_sqr();
            }
        }
    }
    acc
}

/// Fraction of the photon norm inside the window `|n|_∞ ≤ half`.
pub fn window_fraction(sol: &BoundStateSolution, half: i64) -> f64 {
    let mut inside = 0.0;
    let mut total = 0.0;
    for layer in [Layer::One, Layer::Two] {
        for (x, y, v) in sol.field(layer).iter() {
            let w = v.norm_sqr();
            total += w;
            if x.abs() <= half && y.abs() <= half {
                inside += w;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        inside / total
    }
}

/// One site of a [`phase_profile`] along a line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSample {
    pub nx: i64,
    pub ny: i64,
    /// Total amplitude `A e^{iθ₁} + B e^{iθ₂}` (real).
    pub amplitude: f64,
    /// Signed real contributions of the first and second point.
    pub first: f64,
    pub second: f64,
    /// `θ₁ − θ₂`, either 0 or π.
    pub delta_theta: f64,
}

/// Splits the layer-`layer` field of a two-point giant atom (one point per
/// layer) into the two point contributions along `n_x = n_y + c`, for
/// `n_y` in `ny_range`.
///
/// Sites where either contribution vanishes carry no relative phase and are
/// skipped.
pub fn phase_profile(
    emitter: &EmitterConfig,
    lat: &BilayerLattice,
    n_k: usize,
    layer: Layer,
    c: i64,
    ny_range: std::ops::RangeInclusive<i64>,
) -> Result<Vec<PhaseSample>> {
    let [p, q] = emitter.points.as_slice() else {
        return Err(Error::Decomposition(format!(
            "needs exactly two coupling points, got {}",
            emitter.points.len()
        )));
    };
    if p.layer == q.layer {
        return Err(Error::Decomposition("the two points must sit in different layers".into()));
    }
    check_points(emitter, false)?;
    let e = giant_pole(emitter, lat, n_k)?;
    let parts = point_contributions(emitter, lat, e, n_k);
    let li = layer.index();
    let peak = parts
        .iter()
        .flat_map(|pc| pc[li].values.iter())
        .fold(0.0f64, |m, v| m.max(v.norm()));
    let floor = 1e-12 * peak;
    let mut out = Vec::new();
    for ny in ny_range {
        let nx = ny + c;
        let a = parts[0][li].get(nx, ny);
        let b = parts[1][li].get(nx, ny);
        if a.norm() <= floor || b.norm() <= floor {
            continue;
        }
        for (z, name) in [(a, "first"), (b, "second")] {
            if z.im.abs() > 1e-6 * z.norm() {
                return Err(Error::Decomposition(format!(
                    "{name} contribution at ({nx}, {ny}) is not real: {z}"
                )));
            }
        }
        let theta = |x: f64| if x < 0.0 { std::f64::consts::PI } else { 0.0 };
        let dt = (theta(a.re) - theta(b.re)).abs();
        out.push(PhaseSample { nx, ny, amplitude: a.re + b.re, first: a.re, second: b.re, delta_theta: dt });
    }
    Ok(out)
}

/// Positions along a phase profile where `δθ` changes value.
pub fn phase_jumps(samples: &[PhaseSample]) -> Vec<usize> {
    samples
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].delta_theta != w[1].delta_theta)
        .map(|(i, _)| i + 1)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound_state::CouplingPoint as P;
    use std::f64::consts::PI;

    #[test]
    fn two_point_factor_vanishes_on_edge_line() {
        let pts = [P::new(Layer::One, 0, 0, 1.0), P::new(Layer::One, 1, 1, 1.0)];
        for kx in [-2.0, -0.3, 0.7, 2.9] {
            assert!(interference_factor(&pts, KPoint::new(kx, PI - kx)).norm() < 1e-14);
        }
    }

    #[test]
    fn cross_factor_is_dispersion() {
        let em = cross(1.0);
        let i = InterferenceFactor::new(&em, Layer::One);
        for (kx, ky) in [(0.3, -1.1), (2.0, 0.5)] {
            let v = i.at(KPoint::new(kx, ky));
            assert!((v.re - 2.0 * (f64::cos(kx) + f64::cos(ky))).abs() < 1e-14 && v.im.abs() < 1e-14);
        }
        assert!(i.at(KPoint::new(PI / 2.0, PI / 2.0)).norm() < 1e-14);
    }

    #[test]
    fn four_diagonal_factor_sign() {
        let em = four_diagonal(1.0);
        for (kx, ky) in [(0.3, -1.1), (2.0, 0.5)] {
            let v = interference_factor(&em.points, KPoint::new(kx, ky));
            assert!((v.re + 4.0 * f64::sin(kx) * f64::sin(ky)).abs() < 1e-13 && v.im.abs() < 1e-13);
        }
        assert!(interference_factor(&em.points, KPoint::new(0.0, PI)).norm() < 1e-13);
    }

    #[test]
    fn parity_rule() {
        let ok = EmitterConfig { delta: 0.0, points: vec![P::new(Layer::One, 0, 0, 1.0), P::new(Layer::Two, 1, 0, 1.0)] };
        assert!(parity_consistent(&ok));
        let bad = EmitterConfig { delta: 0.0, points: vec![P::new(Layer::One, 0, 0, 1.0), P::new(Layer::One, 1, 0, 1.0)] };
        assert!(!parity_consistent(&bad));
        let lat = BilayerLattice::square(8, -1.0, 0.25, crate::lattice::Boundary::Periodic).unwrap();
        assert!(matches!(giant_bs_profile(&bad, &lat, 32, false), Err(Error::ParityViolation(_))));
        assert!(giant_bs_profile(&bad, &lat, 32, true).is_ok());
    }

    #[test]
    fn phase_profile_needs_two_points() {
        let lat = BilayerLattice::square(8, -1.0, 0.25, crate::lattice::Boundary::Periodic).unwrap();
        let small = EmitterConfig::small(0.0, Layer::One, 0.1);
        assert!(matches!(phase_profile(&small, &lat, 32, Layer::One, 1, -3..=3), Err(Error::Decomposition(_))));
    }
}
