//! Star-coupled entanglement protocol: an auxiliary emitter exchanges one
//! excitation with `n` spokes under Lindblad decay, targeting the W state.

use crate::error::{Error, Result};
use crate::lattice::{BilayerLattice, Layer};
use crate::ode::{self, Tolerance};
use crate::spin_model::CouplingKernel;
use faer::{c64, Mat};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Largest spoke count for the full `2^(n+1)` space.
pub const FULL_SPACE_MAX_SPOKES: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntangleSetup {
    pub n_spokes: usize,
    pub j_eff: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub t_grid: Vec<f64>,
}

impl EntangleSetup {
    pub fn new(n_spokes: usize, j_eff: f64, gamma: f64, t_grid: Vec<f64>) -> Result<Self> {
        let s = EntangleSetup { n_spokes, j_eff, gamma, t_grid };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_spokes == 0 {
            return Err(Error::config("n_spokes must be at least 1"));
        }
        if !(self.j_eff.is_finite() && self.j_eff != 0.0) {
            return Err(Error::config(format!("j_eff must be finite and nonzero, got {}", self.j_eff)));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::config(format!("gamma must be finite and non-negative, got {}", self.gamma)));
        }
        if let Some(&first) = self.t_grid.first() {
            if first != 0.0 {
                return Err(Error::config("t_grid must start at 0"));
            }
        }
        if self.t_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("t_grid must be strictly increasing"));
        }
        Ok(())
    }

    /// Uniform grid `0..=t_end` with `steps` intervals.
    pub fn with_uniform_grid(mut self, t_end: f64, steps: usize) -> Self {
        self.t_grid = (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect();
        self
    }

    /// `π / (2√n · J_eff)`, where the two-level reduction reaches the W state.
    pub fn analytic_time(&self) -> f64 {
        PI / (2.0 * (self.n_spokes as f64).sqrt() * self.j_eff.abs())
    }

    /// `π / (4 J_eff)`, the time quoted for the eight-spoke protocol, which
    /// equals [`Self::analytic_time`] only for four spokes.
    pub fn quoted_time(&self) -> f64 {
        PI / (4.0 * self.j_eff.abs())
    }
}

/// Spoke positions `(±n, ±(n+1))` and `(±(n+1), ±n)` around an auxiliary
/// emitter at the origin, all on layer 1.
pub fn star_geometry(n: i64) -> Vec<(i64, i64)> {
    let mut p = Vec::with_capacity(8);
    for (a, b) in [(n, n + 1), (n + 1, n)] {
        for (sx, sy) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            p.push((sx * a, sy * b));
        }
    }
    p
}

/// `J_eff` for spokes at `(n, n+1)` from the layer-1 bound-state field.
pub fn star_coupling(lat: &BilayerLattice, g: f64, n: i64, n_k: usize) -> Result<f64> {
    if n < 0 {
        return Err(Error::config("spoke offset n must be non-negative"));
    }
    let kernel = CouplingKernel::new(lat, g, n_k)?;
    let j = kernel.coupling(Layer::One, Layer::One, n, n + 1);
    if j == 0.0 {
        return Err(Error::Resolution(format!("spoke offset {n} lies beyond the coupling range")));
    }
    Ok(j)
}

/// Lindbladian on a small Hilbert space plus the protocol's target state.
#[derive(Clone, Debug)]
pub struct Protocol {
    pub hamiltonian: Mat<c64>,
    pub jumps: Vec<Mat<c64>>,
    /// Excitation number, diagonal in the basis.
    pub number: Vec<f64>,
    pub initial: Vec<c64>,
    pub goal: Vec<c64>,
}

fn ket(dim: usize, i: usize) -> Vec<c64> {
    let mut v = vec![c64::new(0.0, 0.0); dim];
    v[i] = c64::new(1.0, 0.0);
    v
}

impl Protocol {
    /// Vacuum plus single-excitation sector: basis `|0⟩`, `|a⟩`, `|1⟩..|n⟩`.
    pub fn reduced(setup: &EntangleSetup) -> Result<Self> {
        setup.validate()?;
        let n = setup.n_spokes;
        let dim = n + 2;
        let mut h = Mat::<c64>::zeros(dim, dim);
        for i in 0..n {
            h[(1, 2 + i)] = c64::new(setup.j_eff, 0.0);
            h[(2 + i, 1)] = c64::new(setup.j_eff, 0.0);
        }
        let rate = setup.gamma.sqrt();
        let jumps = if setup.gamma > 0.0 {
            (1..dim)
                .map(|q| {
                    let mut l = Mat::<c64>::zeros(dim, dim);
                    l[(0, q)] = c64::new(rate, 0.0);
                    l
                })
                .collect()
        } else {
            Vec::new()
        };
        let mut number = vec![1.0; dim];
        number[0] = 0.0;
        let amp = 1.0 / (n as f64).sqrt();
        let mut goal = vec![c64::new(0.0, 0.0); dim];
        for g in goal.iter_mut().skip(2) {
            *g = c64::new(amp, 0.0);
        }
        Ok(Protocol { hamiltonian: h, jumps, number, initial: ket(dim, 1), goal })
    }

    /// Full `2^(n+1)` space. Bit 0 is the auxiliary emitter and spoke `i`
    /// sits on bit `order[i]`.
    pub fn full(setup: &EntangleSetup, order: Option<&[usize]>) -> Result<Self> {
        setup.validate()?;
        let n = setup.n_spokes;
        if n > FULL_SPACE_MAX_SPOKES {
            return Err(Error::config(format!(
                "full space is limited to {FULL_SPACE_MAX_SPOKES} spokes, got {n}"
            )));
        }
        let default: Vec<usize> = (1..=n).collect();
        let order = order.unwrap_or(&default);
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != default {
            return Err(Error::config("spoke order must be a permutation of 1..=n"));
        }
        let dim = 1usize << (n + 1);
        let h = build_star_hamiltonian_ordered(setup, order);
        let lower = |q: usize| {
            let mut l = Mat::<c64>::zeros(dim, dim);
            for s in 0..dim {
                if s & (1 << q) != 0 {
                    l[(s ^ (1 << q), s)] = c64::new(setup.gamma.sqrt(), 0.0);
                }
            }
            l
        };
        let jumps = if setup.gamma > 0.0 { (0..=n).map(lower).collect() } else { Vec::new() };
        let number = (0..dim).map(|s: usize| s.count_ones() as f64).collect();
        let amp = 1.0 / (n as f64).sqrt();
        let mut goal = vec![c64::new(0.0, 0.0); dim];
        for &q in order {
            goal[1 << q] = c64::new(amp, 0.0);
        }
        Ok(Protocol { hamiltonian: h, jumps, number, initial: ket(dim, 1), goal })
    }

    pub fn dim(&self) -> usize {
        self.initial.len()
    }

    fn dissipator_sum(&self) -> Mat<c64> {
        let d = self.dim();
        let mut acc = Mat::<c64>::zeros(d, d);
        for l in &self.jumps {
            acc += l.adjoint() * l;
        }
        acc
    }

    /// `L(ρ)` for the master equation.
    pub fn apply(&self, rho: &Mat<c64>) -> Mat<c64> {
        let minus_i = c64::new(0.0, -1.0);
        let h = &self.hamiltonian;
        let mut out = (h * rho - rho * h) * faer::Scale(minus_i);
        if !self.jumps.is_empty() {
            let k = self.dissipator_sum();
            for l in &self.jumps {
                out += l * rho * l.adjoint();
            }
            out -= (&k * rho + rho * &k) * faer::Scale(c64::new(0.5, 0.0));
        }
        out
    }

    pub fn initial_density(&self) -> Mat<c64> {
        let v = &self.initial;
        Mat::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn fidelity(&self, rho: &Mat<c64>) -> f64 {
        expectation(&self.goal, rho).re
    }

    /// `dF/dt = ⟨goal|L(ρ)|goal⟩`.
    pub fn fidelity_rate(&self, rho: &Mat<c64>) -> f64 {
        expectation(&self.goal, &self.apply(rho)).re
    }

    pub fn excitation(&self, rho: &Mat<c64>) -> f64 {
        (0..self.dim()).map(|i| self.number[i] * rho[(i, i)].re).sum()
    }

    /// States at each requested time, starting from `rho0` at `t0`.
    pub fn evolve(&self, rho0: &Mat<c64>, t0: f64, times: &[f64]) -> Result<Vec<Mat<c64>>> {
        let d = self.dim();
        let flat = pack(rho0);
        let (ys, _) = ode::integrate(
            |_, y, dy| {
                let r = unpack(y, d);
                let lr = self.apply(&r);
                dy.copy_from_slice(&pack(&lr));
            },
            t0,
            &flat,
            times,
            Tolerance::default(),
        )?;
        let states: Vec<Mat<c64>> = ys.iter().map(|y| unpack(y, d)).collect();
        for (t, r) in times.iter().zip(&states) {
            let dev = trace_deviation(r);
            if dev > 1e-6 {
                return Err(Error::Integration(format!("trace drifted by {dev:e} at t = {t}")));
            }
        }
        Ok(states)
    }
}

fn expectation(v: &[c64], m: &Mat<c64>) -> c64 {
    let mut acc = c64::new(0.0, 0.0);
    for i in 0..v.len() {
        if v[i] == c64::new(0.0, 0.0) {
            continue;
        }
        for j in 0..v.len() {
            acc += v[i].conj() * m[(i, j)] * v[j];
        }
    }
    acc
}

fn pack(m: &Mat<c64>) -> Vec<f64> {
    let d = m.nrows();
    let mut out = Vec::with_capacity(2 * d * d);
    for j in 0..d {
        for i in 0..d {
            out.push(m[(i, j)].re);
            out.push(m[(i, j)].im);
        }
    }
    out
}

fn unpack(y: &[f64], d: usize) -> Mat<c64> {
    Mat::from_fn(d, d, |i, j| {
        let p = 2 * (j * d + i);
        c64::new(y[p], y[p + 1])
    })
}

pub fn trace_deviation(rho: &Mat<c64>) -> f64 {
    let tr: c64 = (0..rho.nrows()).map(|i| rho[(i, i)]).sum();
    (tr - c64::new(1.0, 0.0)).norm()
}

pub fn purity(rho: &Mat<c64>) -> f64 {
    let d = rho.nrows();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += (rho[(i, j)] * rho[(j, i)]).re;
        }
    }
    acc
}

/// `J_eff (σ_a† Σ_i σ_i + h.c.)` on `n_spokes + 1` two-level systems, bit 0
/// being the auxiliary emitter.
pub fn build_star_hamiltonian(setup: &EntangleSetup) -> Mat<c64> {
    let order: Vec<usize> = (1..=setup.n_spokes).collect();
    build_star_hamiltonian_ordered(setup, &order)
}

fn build_star_hamiltonian_ordered(setup: &EntangleSetup, order: &[usize]) -> Mat<c64> {
    let dim = 1usize << (setup.n_spokes + 1);
    let mut h = Mat::<c64>::zeros(dim, dim);
    for s in 0..dim {
        // σ_a† σ_q moves an excitation from spoke q onto the auxiliary emitter
        if s & 1 != 0 {
            continue;
        }
        for &q in order {
            if s & (1 << q) != 0 {
                let t = (s ^ (1 << q)) | 1;
                h[(t, s)] += c64::new(setup.j_eff, 0.0);
                h[(s, t)] += c64::new(setup.j_eff, 0.0);
            }
        }
    }
    h
}

#[derive(Clone, Debug, Serialize)]
pub struct LindbladResult {
    pub times: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub excitation: Vec<f64>,
    pub trace_deviation: Vec<f64>,
}

/// Evolves `|e⟩_a|g…g⟩` over the setup's time grid.
pub fn lindblad_evolve(setup: &EntangleSetup, full_space: bool) -> Result<LindbladResult> {
    if setup.t_grid.is_empty() {
        return Err(Error::config("t_grid is empty"));
    }
    let p = if full_space { Protocol::full(setup, None)? } else { Protocol::reduced(setup)? };
    let states = p.evolve(&p.initial_density(), 0.0, &setup.t_grid)?;
    Ok(LindbladResult {
        times: setup.t_grid.clone(),
        fidelity: states.iter().map(|r| p.fidelity(r)).collect(),
        excitation: states.iter().map(|r| p.excitation(r)).collect(),
        trace_deviation: states.iter().map(trace_deviation).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimalTime {
    pub t_star: f64,
    pub f_max: f64,
    /// Two-level estimate `π/(2√n J_eff)`.
    pub t_analytic: f64,
    pub f_analytic: f64,
    /// `π/(4 J_eff)`.
    pub t_quoted: f64,
    pub f_quoted: f64,
}

/// First local maximum of `F(t)`.
///
/// A coarse scan brackets the maximum, golden-section search narrows it and
/// a sign search on `dF/dt` pins it down.
pub fn fidelity_at_optimal_time(setup: &EntangleSetup) -> Result<OptimalTime> {
    let p = Protocol::reduced(setup)?;
    let t_est = setup.analytic_time();
    let t_limit = 10.0 / setup.j_eff.abs();
    let dt = t_est / 40.0;
    let steps = (t_limit / dt).ceil() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| (i as f64 * dt).min(t_limit)).collect();
    let states = p.evolve(&p.initial_density(), 0.0, &grid)?;
    let f: Vec<f64> = states.iter().map(|r| p.fidelity(r)).collect();
    let peak = (1..f.len() - 1)
        .find(|&i| f[i] >= f[i - 1] && f[i] > f[i + 1])
        .ok_or(Error::ProtocolFailure { t_limit })?;

    let (t0, rho0) = (grid[peak - 1], &states[peak - 1]);
    let at = |t: f64| -> Result<Mat<c64>> { Ok(p.evolve(rho0, t0, &[t])?.remove(0)) };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (t0, grid[peak + 1]);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = p.fidelity(&at(c)?);
    let mut fd = p.fidelity(&at(d)?);
    for _ in 0..20 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = p.fidelity(&at(c)?);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = p.fidelity(&at(d)?);
        }
    }
    // dF/dt is positive at a and negative at b unless the bracket is flat
    let (mut lo, mut hi) = (a, b);
    if p.fidelity_rate(&at(lo)?) > 0.0 && p.fidelity_rate(&at(hi)?) < 0.0 {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 1e-15 * mid {
                break;
            }
            if p.fidelity_rate(&at(mid)?) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let t_star = 0.5 * (lo + hi);
    let f_max = p.fidelity(&at(t_star)?);
    let fid_at = |t: f64| -> Result<f64> {
        Ok(p.fidelity(&p.evolve(&p.initial_density(), 0.0, &[t])?[0]))
    };
    Ok(OptimalTime {
        t_star,
        f_max,
        t_analytic: t_est,
        f_analytic: fid_at(t_est)?,
        t_quoted: setup.quoted_time(),
        f_quoted: fid_at(setup.quoted_time())?,
    })
}

/// Closed form for uniform decay: `F(t) = e^{−Γt} sin²(√n J_eff t)`.
pub fn two_level_fidelity(setup: &EntangleSetup, t: f64) -> f64 {
    let w = (setup.n_spokes as f64).sqrt() * setup.j_eff;
    (-setup.gamma * t).exp() * (w * t).sin().powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_spoke_rabi() {
        let s = EntangleSetup::new(1, 0.5, 0.0, vec![]).unwrap();
        let h = build_star_hamiltonian(&s);
        // |e_a g⟩ = 1, |g e_1⟩ = 2
        assert_eq!(h[(1, 2)].re, 0.5);
        assert_eq!(h[(0, 3)].re, 0.0);
        let vals = crate::linalg::hermitian_eigh(&h).unwrap().0;
        assert!((vals[3] - vals[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn setup_validation() {
        assert!(EntangleSetup::new(0, 1.0, 0.0, vec![]).is_err());
        assert!(EntangleSetup::new(2, 1.0, -0.1, vec![]).is_err());
        assert!(EntangleSetup::new(2, 1.0, 0.0, vec![0.0, 0.5, 0.5]).is_err());
        assert!(EntangleSetup::new(2, 1.0, 0.0, vec![0.1, 0.5]).is_err());
    }

    #[test]
    fn star_geometry_is_odd_parity() {
        let p = star_geometry(2);
        assert_eq!(p.len(), 8);
        assert!(p.iter().all(|(x, y)| (x + y).rem_euclid(2) == 1));
    }
}
