//! Derived values checked against independent computations: real-space
//! linear solves, closed forms and brute-force sums.

use bilattice::bound_state::{bs_momentum_amplitudes, bs_realspace_profile, self_energy, EmitterConfig};
use bilattice::dynamics::{
    build_star_hamiltonian, fidelity_at_optimal_time, lindblad_evolve, purity, trace_deviation, two_level_fidelity,
    EntangleSetup, Protocol,
};
use bilattice::giant_atom::{four_diagonal, giant_bs_profile, giant_bs_profile_kspace};
use bilattice::lattice::{
    build_realspace_hamiltonian, density_of_states, inner_gap_edge, BilayerLattice, Boundary, Layer,
};
use bilattice::linalg::{dense_eigvals, hermitian_eigh};
use bilattice::spin_model::{
    effective_couplings, fit_ssh_params, ssh_bands, ssh_realspace, uniform_geometry, wilson_polarization,
    CouplingKernel, SSHParams, SpinArray, SpinSite,
};
use faer::prelude::Solve;
use faer::{c64, Mat};
use std::f64::consts::PI;

fn lat(l: usize, eta: f64, g: f64, bc: Boundary) -> BilayerLattice {
    BilayerLattice::square(l, eta, g, bc).unwrap()
}

/// `[(z − H)⁻¹]_{·, s}` on a periodic lattice by dense LU.
fn real_space_green(l: &BilayerLattice, z: f64, source: usize) -> Vec<f64> {
    let h = build_realspace_hamiltonian(l, None).unwrap().to_dense();
    let n = h.nrows();
    let a = Mat::<f64>::from_fn(n, n, |i, j| if i == j { z - h[(i, j)] } else { -h[(i, j)] });
    let mut rhs = Mat::<f64>::zeros(n, 1);
    rhs[(source, 0)] = 1.0;
    let x = a.partial_piv_lu().solve(&rhs);
    (0..n).map(|i| x[(i, 0)]).collect()
}

#[test]
fn periodic_spectrum_is_the_band_set() {
    let l = lat(8, -0.5, 0.7, Boundary::Periodic);
    let mut ed = dense_eigvals(&build_realspace_hamiltonian(&l, None).unwrap().to_dense()).unwrap();
    let mut bands = Vec::new();
    for my in 0..8 {
        for mx in 0..8 {
            let f = 2.0 * ((2.0 * PI * mx as f64 / 8.0).cos() + (2.0 * PI * my as f64 / 8.0).cos());
            let (a, b) = ((1.0 + l.eta) * f / 2.0, (1.0 - l.eta) * f / 2.0);
            let r = (b * b + l.g * l.g).sqrt();
            bands.push(a + r);
            bands.push(a - r);
        }
    }
    ed.sort_by(f64::total_cmp);
    bands.sort_by(f64::total_cmp);
    for (x, y) in ed.iter().zip(&bands) {
        assert!((x - y).abs() < 1e-10, "{x} vs {y}");
    }
}

#[test]
fn self_energy_matches_real_space_resolvent() {
    // a 32x32 torus carries exactly the 32-point k-grid
    let g = 0.1;
    for (eta, gi, z) in [(-1.0, 0.25, 0.1), (-4.0, 1.0, 0.3), (-0.5, 0.5, -0.2)] {
        let l = lat(32, eta, gi, Boundary::Periodic);
        let green = real_space_green(&l, z, l.site_index(Layer::One, 0, 0));
        let sigma = self_energy(z, &l, Layer::One, g, 32).unwrap();
        assert!((sigma - g * g * green[0]).abs() < 1e-12 * (g * g * green[0]).abs().max(1e-300), "{sigma}");
        let s2 = self_energy(z, &l, Layer::Two, g, 32).unwrap();
        let g2 = real_space_green(&l, z, l.site_index(Layer::Two, 0, 0));
        assert!((s2 - g * g * g2[l.site_index(Layer::Two, 0, 0)]).abs() < 1e-12);
    }
}

#[test]
fn self_energy_matches_brute_force_sum() {
    let (eta, gi, z, g, n) = (-4.0, 1.0, 0.3, 0.2, 64);
    let l = lat(3, eta, gi, Boundary::Periodic);
    let mut acc = 0.0;
    for my in 0..n {
        for mx in 0..n {
            let f = 2.0 * ((2.0 * PI * mx as f64 / n as f64).cos() + (2.0 * PI * my as f64 / n as f64).cos());
            acc += (z - eta * f) / ((z - f) * (z - eta * f) - gi * gi);
        }
    }
    let brute = g * g * acc / (n * n) as f64;
    assert!((self_energy(z, &l, Layer::One, g, n).unwrap() - brute).abs() < 1e-13);
}

#[test]
fn resonant_profile_matches_real_space_resolvent() {
    let (g, n) = (0.1, 32);
    let l = lat(n, -1.0, 0.25, Boundary::Periodic);
    let sol = bs_realspace_profile(&EmitterConfig::small(0.0, Layer::One, g), &l, n).unwrap();
    let green = real_space_green(&l, 0.0, l.site_index(Layer::One, 0, 0));
    let norm = (1.0 + g * g * green.iter().map(|v| v * v).sum::<f64>()).sqrt();
    assert!((sol.c_e - 1.0 / norm).abs() < 1e-12);
    for layer in [Layer::One, Layer::Two] {
        for (x, y) in [(1i64, 0i64), (0, 1), (2, 1), (-3, 0), (5, -4), (0, 0)] {
            let idx = l.site_index(layer, x.rem_euclid(n as i64) as usize, y.rem_euclid(n as i64) as usize);
            let want = g * green[idx] / norm;
            let got = sol.field(layer).get(x, y);
            assert!((got.re - want).abs() < 1e-12 && got.im.abs() < 1e-14, "{layer:?} ({x},{y}): {got} vs {want}");
        }
    }
}

#[test]
fn momentum_amplitudes_at_resonance() {
    // E = 0, η = −1: C_{k,a1} = −g f/ω², C_{k,a2} = (G/f) C_{k,a1} with ω² = f² + G²
    let l = lat(3, -1.0, 0.25, Boundary::Periodic);
    for (kx, ky) in [(0.3, 1.1), (-2.0, 0.4), (PI / 3.0, PI / 5.0)] {
        let f: f64 = 2.0 * (f64::cos(kx) + f64::cos(ky));
        let w2 = f * f + l.g * l.g;
        let (a1, a2) = bs_momentum_amplitudes(kx, ky, 0.0, &l).unwrap();
        assert!((a1 - (-f / w2)).abs() < 1e-13);
        assert!((a2 - (l.g / f) * (-f / w2)).abs() < 1e-13);
    }
}

#[test]
fn inner_edge_for_strong_asymmetry() {
    let e = inner_gap_edge(&lat(3, -4.0, 1.0, Boundary::Periodic)).unwrap();
    assert!((e - 0.8).abs() < 1e-12);
    assert!((inner_gap_edge(&lat(3, -1.0, 0.25, Boundary::Periodic)).unwrap() - 0.25).abs() < 1e-15);
}

#[test]
fn cross_layer_onsite_coupling_is_negative() {
    let (g, gi, n) = (0.1, 0.25, 128);
    let kernel = CouplingKernel::new(&lat(3, -1.0, gi, Boundary::Periodic), g, n).unwrap();
    let mut acc = 0.0;
    for my in 0..n {
        for mx in 0..n {
            let f = 2.0 * ((2.0 * PI * mx as f64 / n as f64).cos() + (2.0 * PI * my as f64 / n as f64).cos());
            acc += -gi / (f * f + gi * gi);
        }
    }
    let want = g * g * acc / (n * n) as f64;
    let got = kernel.coupling(Layer::One, Layer::Two, 0, 0);
    assert!(got < 0.0);
    assert!((got - want).abs() < 1e-14, "{got} vs {want}");
    // same layer, layer 2 mirrors layer 1 with a sign flip
    let a = kernel.coupling(Layer::One, Layer::One, 1, 2);
    let b = kernel.coupling(Layer::Two, Layer::Two, 1, 2);
    assert!(a != 0.0 && (a + b).abs() < 1e-15);
}

#[test]
fn giant_routes_agree() {
    let l = lat(3, -1.0, 0.25, Boundary::Periodic);
    let em = four_diagonal(0.1);
    let a = giant_bs_profile(&em, &l, 128, false).unwrap();
    let b = giant_bs_profile_kspace(&em, &l, 128, false).unwrap();
    assert!((a.energy - b.energy).abs() < 1e-14);
    for layer in [Layer::One, Layer::Two] {
        for (x, y, v) in a.field(layer).iter() {
            assert!((v - b.field(layer).get(x, y)).norm() < 1e-12);
        }
    }
}

#[test]
fn dos_peaks_flank_the_gap() {
    let d = density_of_states(&lat(3, -1.0, 0.25, Boundary::Periodic), 512, 200).unwrap();
    let mut order: Vec<usize> = (0..d.density.len()).collect();
    order.sort_by(|&a, &b| d.density[b].total_cmp(&d.density[a]));
    let mut top: Vec<f64> = order[..2].iter().map(|&i| d.centers[i]).collect();
    top.sort_by(f64::total_cmp);
    for (c, edge) in top.iter().zip([-0.25, 0.25]) {
        assert!((c - edge).abs() <= d.width, "peak at {c}, edge {edge}");
    }
}

#[test]
fn ssh_bands_closed_form() {
    let p = SSHParams::new(-0.3, 1.0, 0.02, -0.07);
    let f0 = |k: f64| {
        let e = |m: f64| c64::new((m * k).cos(), (m * k).sin());
        e(0.0) * p.t1 + e(1.0) * p.t2 + e(-1.0) * p.t3 + e(2.0) * p.t4
    };
    for (kx, ky) in [(0.0, 0.0), (0.4, -1.9), (2.5, 2.5), (-PI, 1.0)] {
        let (a, b) = (f0(kx).norm(), f0(ky).norm());
        let mut want = vec![-(a + b), -(a - b).abs(), (a - b).abs(), a + b];
        want.sort_by(f64::total_cmp);
        for (x, y) in ssh_bands(&p, kx, ky).unwrap().iter().zip(&want) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn ssh_example_eigenvalues() {
    let e = ssh_bands(&SSHParams::new(0.0, 1.0, 0.0, 0.0), 0.0, 0.0).unwrap();
    for (x, y) in e.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn wilson_loop_converges() {
    for p in [SSHParams::new(-0.018, 1.0, -2e-6, 5.5e-5), SSHParams::new(1.0, -0.018, 5.5e-5, -2e-6)] {
        let a = wilson_polarization(&p, 64, 1).unwrap();
        let b = wilson_polarization(&p, 128, 1).unwrap();
        assert!((a.px - b.px).abs() < 1e-4 && (a.py - b.py).abs() < 1e-4);
    }
}

/// Two-sided Kolmogorov–Smirnov distance between a periodic array of
/// `2·cells` spins per side and the Bloch band density.
fn ks_against_bands(p: &SSHParams, cells: usize) -> f64 {
    let m = ssh_realspace(p, cells, true);
    let mut finite = dense_eigvals(&Mat::from_fn(m.n, m.n, |i, j| m.get(i, j))).unwrap();
    finite.sort_by(f64::total_cmp);
    let nk = 256;
    let mut bloch = Vec::with_capacity(4 * nk * nk);
    for my in 0..nk {
        for mx in 0..nk {
            let k = |m: usize| 2.0 * PI * m as f64 / nk as f64;
            bloch.extend(ssh_bands(p, k(mx), k(my)).unwrap());
        }
    }
    bloch.sort_by(f64::total_cmp);
    let upper = |xs: &[f64], e: f64| xs.partition_point(|&x| x <= e) as f64 / xs.len() as f64;
    let lower = |xs: &[f64], e: f64| xs.partition_point(|&x| x < e) as f64 / xs.len() as f64;
    finite
        .iter()
        .map(|&e| (upper(&finite, e) - upper(&bloch, e)).abs().max((lower(&finite, e) - lower(&bloch, e)).abs()))
        .fold(0.0f64, f64::max)
}

#[test]
fn periodic_ssh_array_matches_bloch_eigenvalues() {
    // 8 cells per side sample exactly the 8-point grid
    let p = SSHParams::new(-0.018, 1.0, -2e-6, 5.5e-5);
    let m = ssh_realspace(&p, 8, true);
    let mut finite = dense_eigvals(&Mat::from_fn(m.n, m.n, |i, j| m.get(i, j))).unwrap();
    let mut bloch = Vec::new();
    for my in 0..8 {
        for mx in 0..8 {
            bloch.extend(ssh_bands(&p, 2.0 * PI * mx as f64 / 8.0, 2.0 * PI * my as f64 / 8.0).unwrap());
        }
    }
    finite.sort_by(f64::total_cmp);
    bloch.sort_by(f64::total_cmp);
    for (a, b) in finite.iter().zip(&bloch) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn periodic_ssh_array_matches_band_density() {
    let ks = ks_against_bands(&SSHParams::new(-0.018, 1.0, -2e-6, 5.5e-5), 8);
    assert!(ks < 0.05, "KS distance {ks} for a 16x16 array");
}

#[test]
fn band_density_distance_shrinks_with_size() {
    let p = SSHParams::new(-0.018, 1.0, -2e-6, 5.5e-5);
    let (a, b) = (ks_against_bands(&p, 8), ks_against_bands(&p, 16));
    assert!(b < 0.6 * a && b < 0.03, "{a} -> {b}");
}

#[test]
fn uniform_array_is_undimerized() {
    let l = lat(31, -1.0, 4.0, Boundary::Open);
    let arr = uniform_geometry(8);
    let p = fit_ssh_params(&effective_couplings(&arr, &l, 0.1, 64).unwrap(), &arr).unwrap();
    assert!((p.t1 - p.t2).abs() < 1e-6 * p.t1.abs());
}

#[test]
fn fit_rejects_irregular_arrays() {
    let l = lat(31, -1.0, 4.0, Boundary::Open);
    let mut sites = uniform_geometry(6).sites;
    sites[7].nx += 2;
    let arr = SpinArray::new("bent", sites).unwrap();
    let c = effective_couplings(&arr, &l, 0.1, 64).unwrap();
    assert!(fit_ssh_params(&c, &arr).is_err());
    let few = SpinArray::new("few", vec![SpinSite::new(Layer::One, 0, 0)]).unwrap();
    let c = effective_couplings(&few, &l, 0.1, 64).unwrap();
    assert!(fit_ssh_params(&c, &few).is_err());
}

#[test]
fn star_hamiltonian_reduces_to_two_levels() {
    let j = 0.37;
    let s = EntangleSetup::new(8, j, 0.0, vec![]).unwrap();
    let h = build_star_hamiltonian(&s);
    let w: Vec<usize> = (1..=8).map(|q| 1usize << q).collect();
    let mut coupling = 0.0;
    for &b in &w {
        coupling += h[(1, b)].re / 8f64.sqrt();
    }
    assert!((coupling - 8f64.sqrt() * j).abs() < 1e-14);
    // excitation number is conserved
    for r in 0..h.nrows() {
        for c in 0..h.ncols() {
            if h[(r, c)].norm() != 0.0 {
                assert_eq!((r as u32).count_ones(), (c as u32).count_ones());
            }
        }
    }
    // the single-excitation spectrum is {±√8 J, 0 × 7}
    let one: Vec<usize> = (0..9).map(|q| 1usize << q).collect();
    let sub = Mat::<c64>::from_fn(9, 9, |a, b| h[(one[a], one[b])]);
    let vals = hermitian_eigh(&sub).unwrap().0;
    assert!((vals[0] + 8f64.sqrt() * j).abs() < 1e-13 && (vals[8] - 8f64.sqrt() * j).abs() < 1e-13);
}

#[test]
fn evolution_follows_closed_form() {
    for gamma in [0.0, 0.03] {
        let s = EntangleSetup::new(8, 0.8, gamma, vec![]).unwrap().with_uniform_grid(3.0, 60);
        let r = lindblad_evolve(&s, false).unwrap();
        for (t, f) in r.times.iter().zip(&r.fidelity) {
            assert!((f - two_level_fidelity(&s, *t)).abs() < 1e-8, "t = {t}");
        }
        assert_eq!(r.fidelity[0], 0.0);
    }
}

#[test]
fn optimal_time_with_decay() {
    // F = e^{−Γt} sin²(wt) peaks where tan(wt) = 2w/Γ
    let s = EntangleSetup::new(8, 1.0, 0.05, vec![]).unwrap();
    let w = 8f64.sqrt();
    let want = (2.0 * w / s.gamma).atan() / w;
    let o = fidelity_at_optimal_time(&s).unwrap();
    assert!((o.t_star - want).abs() < 1e-6 * want);
    assert!((o.f_max - two_level_fidelity(&s, want)).abs() < 1e-8);
}

#[test]
fn four_spokes_match_quoted_time() {
    let o = fidelity_at_optimal_time(&EntangleSetup::new(4, 0.5, 0.0, vec![]).unwrap()).unwrap();
    assert!((o.t_star - PI / (4.0 * 0.5)).abs() < 1e-6);
    assert!((o.t_quoted - o.t_analytic).abs() < 1e-15);
}

#[test]
fn reduced_and_full_spaces_agree() {
    let s = EntangleSetup::new(3, 1.1, 0.07, vec![]).unwrap().with_uniform_grid(2.0, 20);
    let a = lindblad_evolve(&s, false).unwrap();
    let b = lindblad_evolve(&s, true).unwrap();
    for i in 0..a.times.len() {
        assert!((a.fidelity[i] - b.fidelity[i]).abs() < 1e-9);
        assert!((a.excitation[i] - b.excitation[i]).abs() < 1e-9);
    }
    assert!(a.excitation.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn full_space_keeps_higher_sectors_empty() {
    let s = EntangleSetup::new(3, 1.0, 0.1, vec![]).unwrap();
    let p = Protocol::full(&s, None).unwrap();
    let times: Vec<f64> = (1..=5).map(|i| i as f64 * 0.4).collect();
    for rho in p.evolve(&p.initial_density(), 0.0, &times).unwrap() {
        for i in 0..p.dim() {
            if (i as u32).count_ones() > 1 {
                assert_eq!(rho[(i, i)].re, 0.0);
            }
        }
    }
}

#[test]
fn fidelity_is_permutation_invariant() {
    let s = EntangleSetup::new(4, 0.9, 0.02, vec![]).unwrap();
    let times: Vec<f64> = (1..=6).map(|i| i as f64 * 0.2).collect();
    let base = Protocol::full(&s, None).unwrap();
    let f0: Vec<f64> =
        base.evolve(&base.initial_density(), 0.0, &times).unwrap().iter().map(|r| base.fidelity(r)).collect();
    for order in [[2usize, 1, 4, 3], [4, 3, 2, 1], [3, 4, 1, 2]] {
        let p = Protocol::full(&s, Some(&order)).unwrap();
        let f: Vec<f64> = p.evolve(&p.initial_density(), 0.0, &times).unwrap().iter().map(|r| p.fidelity(r)).collect();
        for (a, b) in f0.iter().zip(&f) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn density_matrix_stays_physical() {
    let s = EntangleSetup::new(8, 1.0, 0.0, vec![]).unwrap();
    let p = Protocol::reduced(&s).unwrap();
    let times: Vec<f64> = (1..=10).map(|i| i as f64 * 0.3).collect();
    for rho in p.evolve(&p.initial_density(), 0.0, &times).unwrap() {
        assert!(trace_deviation(&rho) < 1e-8);
        assert!((purity(&rho) - 1.0).abs() < 1e-8);
        for i in 0..p.dim() {
            for j in 0..p.dim() {
                assert!((rho[(i, j)] - rho[(j, i)].conj()).norm() < 1e-10);
            }
        }
        assert!(hermitian_eigh(&rho).unwrap().0[0] > -1e-8);
    }
    let damped = Protocol::reduced(&EntangleSetup::new(8, 1.0, 0.2, vec![]).unwrap()).unwrap();
    for rho in damped.evolve(&damped.initial_density(), 0.0, &times).unwrap() {
        assert!(trace_deviation(&rho) < 1e-8);
        assert!(hermitian_eigh(&rho).unwrap().0[0] > -1e-8);
    }
}
