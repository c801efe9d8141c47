//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

use bilattice::bound_state::{
    bs_exact_diagonalization, bs_realspace_profile, parity_norms, solve_pole, zero_mode_trial, BoundStateSolution,
    CouplingPoint, EmitterConfig,
};
use bilattice::dynamics::{fidelity_at_optimal_time, star_coupling, EntangleSetup};
use bilattice::giant_atom::{branch_norm, cross, giant_bs_profile, phase_jumps, phase_profile, window_fraction};
use bilattice::lattice::{band_structure, BilayerLattice, Boundary, DisorderRealization, Layer};
use bilattice::spin_model::{
    couplings_from_kernel, effective_couplings, finite_spectrum, fit_ssh_params, pair_forbidden, ssh_geometry,
    wilson_polarization, CouplingKernel, ModeLabel, SpinArray, SpinSite,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn lattice(l: usize, eta: f64, g: f64, bc: Boundary) -> BilayerLattice {
    BilayerLattice::square(l, eta, g, bc).expect("valid lattice")
}

fn c1_gap_law() -> Outcome {
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    for g in [0.1, 0.25, 0.5] {
        let t = Instant::now();
        let bs = band_structure(&lattice(3, -1.0, g, Boundary::Periodic), 512).unwrap();
        worst = worst.max((bs.middle_gap() - 2.0 * g).abs());
        slowest = slowest.max(t.elapsed());
    }
    outcome(
        worst < 1e-10 && slowest < Duration::from_secs(5),
        format!("max |gap - 2G| = {worst:.2e}, slowest G {slowest:.2?}"),
    )
}

fn c2_pair_symmetry() -> Outcome {
    let t = Instant::now();
    let n = 512;
    let mut worst = 0.0f64;
    for eta in [-0.5, -2.0, -4.0] {
        let bs = band_structure(&lattice(3, eta, 1.0, Boundary::Periodic), n).unwrap();
        for my in 0..n {
            for mx in 0..n {
                let p = ((my + n / 2) % n) * n + (mx + n / 2) % n;
                worst = worst.max((bs.omega_u[my * n + mx] + bs.omega_l[p]).abs());
            }
        }
    }
    let el = t.elapsed();
    outcome(worst < 1e-10 && el < Duration::from_secs(5), format!("max |w_u(k) + w_l(k+Pi)| = {worst:.2e} in {el:.2?}"))
}

fn resonant() -> (BilayerLattice, EmitterConfig) {
    (lattice(41, -1.0, 0.25, Boundary::Open), EmitterConfig::small(0.0, Layer::One, 0.1))
}

fn c3_resonant_bound_state() -> Outcome {
    let t = Instant::now();
    let (lat, em) = resonant();
    let e = solve_pole(&em, &lat, 256).unwrap();
    let ed = bs_exact_diagonalization(&em, &lat, None).unwrap();
    let w = ed.c_e * ed.c_e;
    let el = t.elapsed();
    outcome(
        e.abs() < 1e-12 && ed.energy.abs() < 1e-8 && w > 0.9 && el < Duration::from_secs(30),
        format!("pole |E| = {:.1e}, ED |E| = {:.1e}, emitter weight {w:.4} in {el:.2?}", e.abs(), ed.energy.abs()),
    )
}

fn opposite_ratio(sol: &BoundStateSolution) -> f64 {
    let (odd, even) = parity_norms(sol);
    even / odd
}

fn c4_odd_neighbor() -> Outcome {
    let t = Instant::now();
    let (lat, em) = resonant();
    let q = opposite_ratio(&bs_realspace_profile(&em, &lat, 256).unwrap());
    let e = opposite_ratio(&bs_exact_diagonalization(&em, &lat, None).unwrap());
    let el = t.elapsed();
    outcome(
        q < 1e-16 && e < 1e-12 && el < Duration::from_secs(60),
        format!("opposite-sublattice ratio: quadrature {q:.1e}, exact diag {e:.1e} in {el:.2?}"),
    )
}

fn c5_disorder() -> Outcome {
    let t = Instant::now();
    let (lat, em) = resonant();
    let seeds: Vec<u64> = (0..50).collect();
    let mut kept = 0;
    let mut broken = 0;
    let (mut worst_e, mut worst_n) = (0.0f64, 0.0f64);
    for &s in &seeds {
        let off = DisorderRealization::off_diagonal(&lat, s, lat.j / 4.0, lat.g / 4.0).unwrap();
        let r = zero_mode_trial(&em, &lat, &off).unwrap();
        worst_e = worst_e.max(r.min_abs_energy);
        worst_n = worst_n.max(r.forbidden_norm);
        if r.min_abs_energy < 1e-10 && r.forbidden_norm < 1e-8 {
            kept += 1;
        }
        let diag = DisorderRealization::diagonal(&lat, s, lat.j / 4.0).unwrap();
        if zero_mode_trial(&em, &lat, &diag).unwrap().min_abs_energy > 1e-4 {
            broken += 1;
        }
    }
    let el = t.elapsed();
    outcome(
        kept == 50 && broken >= 45 && el < Duration::from_secs(600),
        format!(
            "off-diagonal kept {kept}/50 (max |E| {worst_e:.1e}, max forbidden norm {worst_n:.1e}); \
             diagonal broke {broken}/50 (need >= 45) in {el:.2?}"
        ),
    )
}

fn c6_giant_interference() -> Outcome {
    let t = Instant::now();
    let lat = lattice(3, -1.0, 0.25, Boundary::Periodic);
    let g = 0.1;
    let two = EmitterConfig {
        delta: 0.0,
        points: vec![CouplingPoint::new(Layer::One, 0, 0, g), CouplingPoint::new(Layer::One, 1, 1, g)],
    };
    let sol = giant_bs_profile(&two, &lat, 256, false).unwrap();
    let b = |sx, sy| branch_norm(&sol, sx, sy, 5, 15);
    let suppressed = b(1, 1).max(b(-1, -1));
    let enhanced = b(1, -1).min(b(-1, 1));
    let ratio = suppressed / enhanced;
    let trapped = window_fraction(&giant_bs_profile(&cross(g), &lat, 256, false).unwrap(), 3);
    let el = t.elapsed();
    outcome(
        ratio < 0.05 && trapped >= 0.95 && el < Duration::from_secs(60),
        format!("two-point branch ratio {ratio:.4} (< 0.05); cross 7x7 fraction {trapped:.4} (>= 0.95) in {el:.2?}"),
    )
}

fn c7_phase_jump() -> Outcome {
    let t = Instant::now();
    let lat = lattice(3, -1.0, 0.25, Boundary::Periodic);
    let em = EmitterConfig {
        delta: 0.0,
        points: vec![CouplingPoint::new(Layer::One, 0, 0, 0.1), CouplingPoint::new(Layer::Two, 1, 0, 0.1)],
    };
    let samples = phase_profile(&em, &lat, 256, Layer::One, 1, -15..=15).unwrap();
    let jumps = phase_jumps(&samples);
    let el = t.elapsed();
    outcome(
        jumps.len() == 1 && samples.len() > 10 && el < Duration::from_secs(60),
        format!("{} jump(s) over {} samples along n_x = n_y + 1 in {el:.2?}", jumps.len(), samples.len()),
    )
}

fn c8_parity_selection() -> Outcome {
    let t = Instant::now();
    let lat = lattice(3, -1.0, 0.25, Boundary::Periodic);
    let kernel = CouplingKernel::new(&lat, 0.1, 128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let site = |rng: &mut ChaCha8Rng| {
        let layer = if rng.random_bool(0.5) { Layer::One } else { Layer::Two };
        SpinSite::new(layer, rng.random_range(-6..=6), rng.random_range(-6..=6))
    };
    let mut pairs = Vec::new();
    while pairs.len() < 200 {
        let (a, b) = (site(&mut rng), site(&mut rng));
        if a != b {
            pairs.push((a, b));
        }
    }
    let values: Vec<(bool, f64)> = pairs
        .iter()
        .map(|&(a, b)| {
            let arr = SpinArray::new("pair", vec![a, b]).unwrap();
            (pair_forbidden(a, b), couplings_from_kernel(&arr, &kernel).get(0, 1))
        })
        .collect();
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.1.abs()));
    let worst = values.iter().filter(|v| v.0).fold(0.0f64, |m, v| m.max(v.1.abs()));
    let n_forbidden = values.iter().filter(|v| v.0).count();
    let el = t.elapsed();
    outcome(
        worst < 1e-10 * max && n_forbidden > 0 && el < Duration::from_secs(60),
        format!("{n_forbidden} mandated zeros, worst {:.1e} of max |g_ij| in {el:.2?}", worst / max),
    )
}

fn c9_ssh_topology() -> Outcome {
    let t = Instant::now();
    let lat = lattice(35, -1.0, 4.0, Boundary::Open);
    let mut ok = true;
    let mut parts = Vec::new();
    for topo in [true, false] {
        let arr = ssh_geometry(12, topo);
        let c = effective_couplings(&arr, &lat, 0.1, 128).unwrap();
        let p = fit_ssh_params(&c, &arr).unwrap();
        let pol = wilson_polarization(&p, 64, 1).unwrap();
        let spec = finite_spectrum(&arr, &c).unwrap();
        let corners = spec.count(ModeLabel::Corner);
        let asym = spec.chiral_asymmetry();
        let want_pol = if topo { 0.5 } else { 0.0 };
        let order = if topo { p.topological_ordering() } else { p.t1.abs() > p.t2.abs() };
        ok &= order && pol.quantized && pol.px == want_pol && pol.py == want_pol;
        ok &= corners == if topo { 4 } else { 0 } && asym < 1e-10;
        parts.push(format!(
            "{}: ordering {order}, P = ({}, {}), {corners} corner modes, asymmetry {asym:.1e}",
            if topo { "topological" } else { "trivial" },
            pol.px,
            pol.py
        ));
    }
    let el = t.elapsed();
    outcome(ok && el < Duration::from_secs(300), format!("{} in {el:.2?}", parts.join("; ")))
}

fn c10_entanglement() -> Outcome {
    let t = Instant::now();
    let lat = lattice(3, -1.0, 0.25, Boundary::Periodic);
    let j = star_coupling(&lat, 0.1, 2, 128).unwrap().abs();
    let run = |gamma: f64| fidelity_at_optimal_time(&EntangleSetup::new(8, j, gamma * j, vec![]).unwrap()).unwrap();
    let clean = run(0.0);
    let rel = (clean.t_star - clean.t_analytic).abs() / clean.t_analytic;
    let sweep: Vec<f64> = [0.0, 0.005, 0.01, 0.02].iter().map(|&g| run(g).f_max).collect();
    let monotone = sweep.windows(2).all(|w| w[1] < w[0]);
    let noisy = sweep[2];
    let el = t.elapsed();
    outcome(
        clean.f_max >= 0.9999 && rel < 1e-6 && noisy > 0.9 && noisy < 1.0 && monotone && el < Duration::from_secs(30),
        format!(
            "J_eff {j:.4e}; F_max {:.10} at t* J_eff = {:.6} (rel. to pi/(2 sqrt 8) {rel:.1e}); \
             quoted tau J_eff = {:.6} gives F = {:.4}; F_max(Gamma) {sweep:.6?} in {el:.2?}",
            clean.f_max,
            clean.t_star * j,
            clean.t_quoted * j,
            clean.f_quoted
        ),
    )
}

fn window_deviation(a: &BoundStateSolution, b: &BoundStateSolution, half: i64) -> f64 {
    let mut diff = 0.0f64;
    let mut peak = 0.0f64;
    for layer in [Layer::One, Layer::Two] {
        for y in -half..=half {
            for x in -half..=half {
                let (u, v) = (a.field(layer).get(x, y), b.field(layer).get(x, y));
                diff = diff.max((u - v).norm());
                peak = peak.max(u.norm());
            }
        }
    }
    diff / peak
}

fn c11_oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for (g_inter, l) in [(0.25, 61), (1.0, 41)] {
        let lat = lattice(l, -1.0, g_inter, Boundary::Open);
        let em = EmitterConfig::small(0.0, Layer::One, 0.1);
        let q = bs_realspace_profile(&em, &lat, 256).unwrap();
        let e = bs_exact_diagonalization(&em, &lat, None).unwrap();
        let d = window_deviation(&q, &e, 5);
        ok &= d < 1e-3;
        parts.push(format!("G = {g_inter}: {d:.1e} ({l}x{l})"));
    }
    let el = t.elapsed();
    outcome(ok && el < Duration::from_secs(120), format!("11x11 relative deviation {} in {el:.2?}", parts.join(", ")))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("gap law", c1_gap_law),
        ("pair symmetry", c2_pair_symmetry),
        ("resonant bound state", c3_resonant_bound_state),
        ("odd-neighbor property", c4_odd_neighbor),
        ("disorder robustness", c5_disorder),
        ("giant-atom interference", c6_giant_interference),
        ("phase jump", c7_phase_jump),
        ("parity selection", c8_parity_selection),
        ("SSH topology", c9_ssh_topology),
        ("entanglement protocol", c10_entanglement),
        ("oracle equivalence", c11_oracle_equivalence),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let r = run();
        println!("{} criterion {n:2} {name}: {}", if r.pass { "PASS" } else { "FAIL" }, r.detail);
        if !r.pass {
            failed.push(n);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
