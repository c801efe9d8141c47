//! Named figure targets. Each has a preset document that flag overrides
//! (or a `--config` file) replace.

use crate::commands::{self, write_field};
use crate::config::{BuilderKind, Phase, RunConfig};
use crate::failure::{Failure, Outcome};
use crate::output::{field_csv, field_sidecar, real, Artifacts, Csv};
use bilattice::bound_state::{bs_exact_diagonalization, bs_realspace_profile, parity_norms, CouplingPoint, EmitterConfig};
use bilattice::dynamics::fidelity_at_optimal_time;
use bilattice::dynamics::lindblad_evolve;
use bilattice::giant_atom::{cross, four_diagonal, giant_bs_profile, phase_jumps, phase_profile};
use bilattice::lattice::Layer;
use bilattice::spin_model::{ModeLabel, SpinArray, SpinSpectrum};
use clap::ValueEnum;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig1b,
    Fig2,
    Fig3,
    #[value(alias = "fig4e", alias = "fig4f")]
    Fig4d,
    Fig5,
    Fig6,
    Fig7b,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1b => "fig1b",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4d => "fig4d",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7b => "fig7b",
        }
    }

    pub fn preset(self) -> Value {
        let periodic = |eta: f64, g: f64| {
            json!({"Lx": 41, "Ly": 41, "J": 1.0, "eta": eta, "G": g, "boundary": "periodic", "disorder": null})
        };
        let small = json!({"delta": 0.0, "points": [{"layer": 1, "nx": 0, "ny": 0, "g": 0.1}]});
        match self {
            Figure::Fig1b => json!({"lattice": periodic(-1.0, 0.25)}),
            Figure::Fig2 => json!({
                "lattice": {
                    "Lx": 61, "Ly": 61, "J": 1.0, "eta": -1.0, "G": 0.25, "boundary": "open",
                    "disorder": {"seed": 7, "W_intra": 0.25, "W_inter": 0.0625}
                },
                "emitter": small,
                "numerics": {"method": "exact_diag"},
            }),
            Figure::Fig3 | Figure::Fig6 => json!({"lattice": periodic(-1.0, 0.25), "emitter": small}),
            Figure::Fig4d => json!({
                "lattice": {"Lx": 35, "Ly": 35, "J": 1.0, "eta": -1.0, "G": 4.0, "boundary": "open", "disorder": null},
                "spins": {"builder": {"kind": "ssh", "n": 12, "phase": "topological"}, "g": 0.1},
                "numerics": {"n_k": 128},
            }),
            Figure::Fig5 => json!({"lattice": periodic(-4.0, 1.0), "emitter": small}),
            Figure::Fig7b => json!({
                "lattice": periodic(-1.0, 0.25),
                "numerics": {"n_k": 128},
                "entangle": {},
            }),
        }
    }

    pub fn run(self, cfg: &RunConfig, art: &mut Artifacts) -> Outcome<()> {
        match self {
            Figure::Fig1b => commands::bands(cfg, art, "fig1b_bands.csv"),
            Figure::Fig2 => fig2(cfg, art),
            Figure::Fig3 => fig3(cfg, art),
            Figure::Fig4d => fig4(cfg, art),
            Figure::Fig5 => fig5(cfg, art),
            Figure::Fig6 => fig6(cfg, art),
            Figure::Fig7b => fig7b(cfg, art),
        }
    }
}

fn coupling_g(cfg: &RunConfig) -> f64 {
    cfg.emitter().points.first().map_or(0.1, |p| p.g)
}

/// Clean and disordered exact-diagonalization fields, one CSV per panel.
fn fig2(cfg: &RunConfig, art: &mut Artifacts) -> Outcome<()> {
    let em = cfg.emitter();
    let (lat, dis) = cfg.lattice.realize()?;
    let dis = dis.ok_or_else(|| Failure::Config("/lattice/disorder: fig2 needs a disorder block".into()))?;
    let clean = bs_exact_diagonalization(&em, &lat, None)?;
    let noisy = bs_exact_diagonalization(&em, &lat, Some(&dis))?;
    let w = cfg.numerics.window;
    let panels = [
        ("fig2a_clean_layer1", &clean, Layer::One),
        ("fig2b_clean_layer2", &clean, Layer::Two),
        ("fig2c_disordered_layer1", &noisy, Layer::One),
        ("fig2d_disordered_layer2", &noisy, Layer::Two),
    ];
    for (stem, sol, layer) in panels {
        art.csv(&format!("{stem}.csv"), field_csv(sol, &[layer], w))?;
    }
    for (stem, sol, disorder) in [("fig2_clean", &clean, Value::Null), ("fig2_disordered", &noisy, json!(cfg.lattice.disorder))] {
        let (odd, even) = parity_norms(sol);
        let params = json!({
            "lattice": cfg.lattice,
            "disorder": disorder,
            "emitter": em,
            "parity_norms": {"odd": odd, "even": even},
        });
        art.json(&format!("{stem}.json"), &field_sidecar(sol, params))?;
    }
    Ok(())
}

fn fig3(cfg: &RunConfig, art: &mut Artifacts) -> Outcome<()> {
    let lat = cfg.lattice.lattice()?;
    let g = coupling_g(cfg);
    let two = EmitterConfig {
        delta: 0.0,
        points: vec![CouplingPoint::new(Layer::One, 0, 0, g), CouplingPoint::new(Layer::One, 1, 1, g)],
    };
    for (stem, em) in [("fig3ab_two_point", two), ("fig3cd_four_diagonal", four_diagonal(g))] {
        let sol = giant_bs_profile(&em, &lat, cfg.numerics.n_k(), false)?;
        write_field(cfg, art, stem, &sol, json!({"points": em.points}))?;
    }
    Ok(())
}

/// Amplitudes of selected eigenvectors, one row per state and site.
fn modes_csv(array: &SpinArray, s: &SpinSpectrum, states: &[usize]) -> Csv {
    let mut csv = Csv::new(&["state", "energy", "site", "layer", "n_x", "n_y", "amplitude"]);
    for &k in states {
        for (i, site) in array.sites.iter().enumerate() {
            csv.row(&[
                k.to_string(),
                real(s.energies[k]),
                i.to_string(),
                u8::from(site.layer).to_string(),
                site.nx.to_string(),
                site.ny.to_string(),
                real(s.vectors[(i, k)]),
            ]);
        }
    }
    csv
}

fn with_phase(cfg: &RunConfig, phase: Phase) -> RunConfig {
    let mut c = cfg.clone();
    if let Some(b) = c.spins.as_mut().and_then(|s| s.builder.as_mut()) {
        if b.kind == BuilderKind::Ssh {
            b.phase = phase;
        }
    }
    c
}

/// Spectrum of the dimerized array, edge and corner eigenvectors, and the
/// trivial-phase spectrum for contrast.
fn fig4(cfg: &RunConfig, art: &mut Artifacts) -> Outcome<()> {
    let (array, _, s) = commands::spin_spectrum(cfg)?;
    art.csv("fig4d_spectrum.csv", commands::spectrum_csv(&s))?;
    let labelled = |l: ModeLabel| -> Vec<usize> {
        let mut v: Vec<usize> = (0..s.energies.len()).filter(|&i| s.classification.labels[i] == l).collect();
        v.sort_by(|&a, &b| s.energies[a].abs().total_cmp(&s.energies[b].abs()).then(a.cmp(&b)));
        v
    };
    let edge: Vec<usize> = labelled(ModeLabel::Edge).into_iter().take(1).collect();
    art.csv("fig4e_edge_mode.csv", modes_csv(&array, &s, &edge))?;
    art.csv("fig4f_corner_modes.csv", modes_csv(&array, &s, &labelled(ModeLabel::Corner)))?;
    let mut summary = json!({"topological": commands::spectrum_summary(&s)});
    summary["topological"]["polarization"] = commands::polarization_of(cfg)?.1;

    let trivial = with_phase(cfg, Phase::Trivial);
    if trivial != *cfg {
        let (_, _, t) = commands::spin_spectrum(&trivial)?;
        art.csv("fig4d_spectrum_trivial.csv", commands::spectrum_csv(&t))?;
        summary["trivial"] = commands::spectrum_summary(&t);
        summary["trivial"]["polarization"] = commands::polarization_of(&trivial)?.1;
    }
    art.json("fig4.json", &summary)?;
    Ok(())
}

/// Strong layer asymmetry: bands, DOS and bound states at two detunings.
fn fig5(cfg: &RunConfig, art: &mut Artifacts) -> Outcome<()> {
    commands::bands(cfg, art, "fig5a_bands.csv")?;
    commands::dos(cfg, art, "fig5b_dos.csv")?;
    let lat = cfg.lattice.lattice()?;
    let base = cfg.emitter();
    for (stem, delta) in [("fig5cd_delta0", 0.0), ("fig5ef_delta0.5", 0.5)] {
        let em = EmitterConfig { delta, ..base.clone() };
        let sol = bs_realspace_profile(&em, &lat, cfg.numerics.n_k())?;
        write_field(cfg, art, stem, &sol, json!({"emitter": em}))?;
    }
    Ok(())
}

/// Trapping cross, two-layer pair and its phase profile along `n_x = n_y + 1`.
fn fig6(cfg: &RunConfig, art: &mut Artifacts) -> Outcome<()> {
    let lat = cfg.lattice.lattice()?;
    let g = coupling_g(cfg);
    let n_k = cfg.numerics.n_k();
    let c = cross(g);
    write_field(cfg, art, "fig6ab_cross", &giant_bs_profile(&c, &lat, n_k, false)?, json!({"points": c.points}))?;
    let pair = EmitterConfig {
        delta: 0.0,
        points: vec![CouplingPoint::new(Layer::One, 0, 0, g), CouplingPoint::new(Layer::Two, 1, 0, g)],
    };
    let sol = giant_bs_profile(&pair, &lat, n_k, false)?;
    write_field(cfg, art, "fig6ce_two_layer", &sol, json!({"points": pair.points}))?;
    let w = cfg.numerics.window;
    let samples = phase_profile(&pair, &lat, n_k, Layer::One, 1, -w..=w)?;
    let mut csv = Csv::new(&["n_x", "n_y", "amplitude", "first", "second", "delta_theta"]);
    for s in &samples {
        csv.row(&[
            s.nx.to_string(),
            s.ny.to_string(),
            real(s.amplitude),
            real(s.first),
            real(s.second),
            real(s.delta_theta),
        ]);
    }
    art.csv("fig6f_phase.csv", csv)?;
    let jumps: Vec<Value> =
        phase_jumps(&samples).into_iter().map(|i| json!({"nx": samples[i].nx, "ny": samples[i].ny})).collect();
    art.json("fig6f_phase.json", &json!({"line": "n_x = n_y + 1", "layer": 1, "jumps": jumps}))?;
    Ok(())
}

/// Fidelity without decay and with `Γ = 0.01 J_eff`.
fn fig7b(cfg: &RunConfig, art: &mut Artifacts) -> Outcome<()> {
    let rates = [0.0, 0.01];
    let setups = rates.iter().map(|&r| commands::entangle_setup(cfg, r)).collect::<Outcome<Vec<_>>>()?;
    let runs = setups.iter().map(|s| lindblad_evolve(s, false)).collect::<Result<Vec<_>, _>>()?;
    let j = setups[0].j_eff.abs();
    let mut csv = Csv::new(&["t", "t_jeff", "fidelity_gamma0", "fidelity_gamma0.01"]);
    for i in 0..runs[0].times.len() {
        let t = runs[0].times[i];
        csv.reals(&[t, t * j, runs[0].fidelity[i], runs[1].fidelity[i]]);
    }
    art.csv("fig7b_fidelity.csv", csv)?;
    let summary: Vec<Value> = setups
        .iter()
        .map(|s| Ok(commands::optimal_json(&fidelity_at_optimal_time(s)?, s)))
        .collect::<Outcome<_>>()?;
    art.json("fig7b.json", &json!({"j_eff": setups[0].j_eff, "runs": summary}))?;
    Ok(())
}
