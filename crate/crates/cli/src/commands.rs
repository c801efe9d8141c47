//! One function per subcommand. Each writes its artifacts into `art`.

use crate::config::{RunConfig, SpinsBlock};
use crate::failure::{Failure, Outcome};
use crate::output::{field_csv, field_sidecar, real, Artifacts, Csv};
use bilattice::bound_state::{bs_exact_diagonalization, bs_realspace_profile, parity_norms, BoundStateSolution, Method};
use bilattice::dynamics::{
    fidelity_at_optimal_time, lindblad_evolve, star_coupling, EntangleSetup, OptimalTime, FULL_SPACE_MAX_SPOKES,
};
use bilattice::giant_atom::giant_bs_profile;
use bilattice::lattice::{band_structure, density_of_states, Layer};
use bilattice::spin_model::{
    effective_couplings, finite_spectrum, fit_ssh_params, pair_forbidden, wilson_polarization, ModeLabel, SSHParams,
    SpinArray, SpinCouplingMatrix, SpinSpectrum,
};
use serde_json::{json, Value};

pub const BOTH: [Layer; 2] = [Layer::One, Layer::Two];

pub fn bands(cfg: &RunConfig, art: &mut Artifacts, name: &str) -> Outcome<()> {
    let lat = cfg.lattice.lattice()?;
    let bs = band_structure(&lat, cfg.numerics.n_k())?;
    let mut csv = Csv::new(&["k_x", "k_y", "omega_u", "omega_l"]);
    for i in 0..bs.kx.len() {
        csv.reals(&[bs.kx[i], bs.ky[i], bs.omega_u[i], bs.omega_l[i]]);
    }
    log::info!("middle gap on the grid: {}", bs.middle_gap());
    art.csv(name, csv)?;
    Ok(())
}

pub fn dos(cfg: &RunConfig, art: &mut Artifacts, name: &str) -> Outcome<()> {
    let lat = cfg.lattice.lattice()?;
    let n_bins = usize::try_from(cfg.numerics.n_bins).expect("validated positive");
    let d = density_of_states(&lat, cfg.numerics.n_k(), n_bins)?;
    let mut csv = Csv::new(&["energy_bin_center", "dos"]);
    for (c, v) in d.centers.iter().zip(&d.density) {
        csv.reals(&[*c, *v]);
    }
    art.csv(name, csv)?;
    Ok(())
}

pub fn write_field(
    cfg: &RunConfig,
    art: &mut Artifacts,
    stem: &str,
    sol: &BoundStateSolution,
    extra: Value,
) -> Outcome<()> {
    let (odd, even) = parity_norms(sol);
    let mut params = json!({
        "lattice": cfg.lattice,
        "n_k": cfg.numerics.n_k,
        "parity_norms": {"odd": odd, "even": even},
    });
    if let (Value::Object(p), Value::Object(e)) = (&mut params, extra) {
        p.extend(e);
    }
    art.csv(&format!("{stem}.csv"), field_csv(sol, &BOTH, cfg.numerics.window))?;
    art.json(&format!("{stem}.json"), &field_sidecar(sol, params))?;
    Ok(())
}

pub fn solve_small(cfg: &RunConfig) -> Outcome<BoundStateSolution> {
    let em = cfg.emitter();
    Ok(match cfg.numerics.method {
        Method::Quadrature => bs_realspace_profile(&em, &cfg.lattice.lattice()?, cfg.numerics.n_k())?,
        Method::ExactDiag => {
            let (lat, dis) = cfg.lattice.realize()?;
            bs_exact_diagonalization(&em, &lat, dis.as_ref())?
        }
    })
}

pub fn boundstate(cfg: &RunConfig, art: &mut Artifacts) -> Outcome<()> {
    let sol = solve_small(cfg)?;
    write_field(cfg, art, "boundstate", &sol, json!({"emitter": cfg.emitter()}))
}

pub fn giant(cfg: &RunConfig, art: &mut Artifacts) -> Outcome<()> {
    let em = cfg.emitter();
    let sol = match cfg.numerics.method {
        Method::Quadrature => {
            giant_bs_profile(&em, &cfg.lattice.lattice()?, cfg.numerics.n_k(), cfg.numerics.allow_odd)?
        }
        Method::ExactDiag => {
            let (lat, dis) = cfg.lattice.realize()?;
            bs_exact_diagonalization(&em, &lat, dis.as_ref())?
        }
    };
    write_field(cfg, art, "giant", &sol, json!({"emitter": em, "points": em.points}))
}

fn spins(cfg: &RunConfig) -> Outcome<(SpinsBlock, SpinArray)> {
    let block = cfg.spins.clone().ok_or_else(|| Failure::Config("/spins: block is required".into()))?;
    let array = block.array()?;
    Ok((block, array))
}

fn couplings(cfg: &RunConfig) -> Outcome<(SpinArray, SpinCouplingMatrix)> {
    let (block, array) = spins(cfg)?;
    let m = effective_couplings(&array, &cfg.lattice.lattice()?, block.g, cfg.numerics.n_k())?;
    Ok((array, m))
}

fn sites_csv(array: &SpinArray) -> Csv {
    let mut csv = Csv::new(&["index", "layer", "n_x", "n_y"]);
    for (i, s) in array.sites.iter().enumerate() {
        csv.row(&[i.to_string(), u8::from(s.layer).to_string(), s.nx.to_string(), s.ny.to_string()]);
    }
    csv
}

fn params_json(p: &SSHParams) -> Value {
    json!({"t1": p.t1, "t2": p.t2, "t3": p.t3, "t4": p.t4, "topological_ordering": p.topological_ordering()})
}

/// Fitted hoppings, or `null` with the reason logged when the array is
/// not a regular grid.
fn try_fit(m: &SpinCouplingMatrix, array: &SpinArray) -> Value {
    match fit_ssh_params(m, array) {
        Ok(p) => params_json(&p),
        Err(e) => {
            log::info!("no SSH fit: {e}");
            Value::Null
        }
    }
}

pub fn spinmodel(cfg: &RunConfig, art: &mut Artifacts) -> Outcome<()> {
    let (array, m) = couplings(cfg)?;
    let mut csv = Csv::new(&["i", "j", "g_ij"]);
    let mut forbidden = 0usize;
    for i in 0..m.n {
        for j in i + 1..m.n {
            if pair_forbidden(array.sites[i], array.sites[j]) {
                forbidden += 1;
            }
            let v = m.get(i, j);
            if v != 0.0 {
                csv.row(&[i.to_string(), j.to_string(), real(v)]);
            }
        }
    }
    art.csv("sites.csv", sites_csv(&array))?;
    art.csv("couplings.csv", csv)?;
    art.json(
        "spinmodel.json",
        &json!({
            "n_spins": m.n,
            "max_abs_coupling": m.max_abs(),
            "forbidden_pairs": forbidden,
            "ssh_fit": try_fit(&m, &array),
        }),
    )?;
    Ok(())
}

pub fn spectrum_csv(s: &SpinSpectrum) -> Csv {
    let c = &s.classification;
    let mut csv = Csv::new(&["index", "energy", "label", "ipr", "boundary_fraction", "corner_fraction"]);
    for i in 0..s.energies.len() {
        csv.row(&[
            i.to_string(),
            real(s.energies[i]),
            c.labels[i].as_str().to_string(),
            real(c.ipr[i]),
            real(c.boundary_fraction[i]),
            real(c.corner_fraction[i]),
        ]);
    }
    csv
}

pub fn spectrum_summary(s: &SpinSpectrum) -> Value {
    json!({
        "n_states": s.energies.len(),
        "corner": s.count(ModeLabel::Corner),
        "edge": s.count(ModeLabel::Edge),
        "bulk": s.count(ModeLabel::Bulk),
        "chiral_asymmetry": s.chiral_asymmetry(),
    })
}

pub fn spin_spectrum(cfg: &RunConfig) -> Outcome<(SpinArray, SpinCouplingMatrix, SpinSpectrum)> {
    let (array, m) = couplings(cfg)?;
    let s = finite_spectrum(&array, &m)?;
    Ok((array, m, s))
}

pub fn ssh_spectrum(cfg: &RunConfig, art: &mut Artifacts) -> Outcome<()> {
    let (array, m, s) = spin_spectrum(cfg)?;
    art.csv("spectrum.csv", spectrum_csv(&s))?;
    let mut summary = spectrum_summary(&s);
    summary["ssh_fit"] = try_fit(&m, &array);
    art.json("spectrum.json", &summary)?;
    Ok(())
}

pub fn polarization_of(cfg: &RunConfig) -> Outcome<(SSHParams, Value)> {
    let (array, m) = couplings(cfg)?;
    let p = fit_ssh_params(&m, &array)?;
    let w = wilson_polarization(&p, cfg.numerics.wilson_n_k, cfg.numerics.n_occ)?;
    let v = json!({
        "px": w.px,
        "py": w.py,
        "quantized": w.quantized,
        "n_occ": cfg.numerics.n_occ,
        "wilson_n_k": cfg.numerics.wilson_n_k,
        "ssh_fit": params_json(&p),
    });
    Ok((p, v))
}

pub fn polarization(cfg: &RunConfig, art: &mut Artifacts) -> Outcome<()> {
    let (_, v) = polarization_of(cfg)?;
    art.json("polarization.json", &v)?;
    Ok(())
}

pub fn geometry(cfg: &RunConfig, art: &mut Artifacts) -> Outcome<()> {
    let (_, array) = spins(cfg)?;
    art.csv("sites.csv", sites_csv(&array))?;
    art.json("geometry.json", &array.sites)?;
    Ok(())
}

/// `J_eff` from the config, or from the bound-state field at the spoke offset.
pub fn j_eff(cfg: &RunConfig) -> Outcome<f64> {
    let e = cfg.entangle.clone().unwrap_or_default();
    match e.j_eff {
        Some(j) => Ok(j),
        None => Ok(star_coupling(&cfg.lattice.lattice()?, e.g, e.spoke_offset, cfg.numerics.n_k())?),
    }
}

/// Setup in physical units: `gamma` and the time grid are scaled by `|J_eff|`.
pub fn entangle_setup(cfg: &RunConfig, gamma_rel: f64) -> Outcome<EntangleSetup> {
    let e = cfg.entangle.clone().unwrap_or_default();
    let j = j_eff(cfg)?;
    let s = EntangleSetup::new(e.n_spokes, j, gamma_rel * j.abs(), vec![])?;
    Ok(s.with_uniform_grid(e.t_end / j.abs(), e.steps))
}

pub fn optimal_json(o: &OptimalTime, s: &EntangleSetup) -> Value {
    json!({
        "t_star": o.t_star,
        "F_max": o.f_max,
        "t_analytic": o.t_analytic,
        "F_analytic": o.f_analytic,
        "t_quoted": o.t_quoted,
        "F_quoted": o.f_quoted,
        "params": {"n_spokes": s.n_spokes, "j_eff": s.j_eff, "gamma": s.gamma},
    })
}

pub fn entangle(cfg: &RunConfig, art: &mut Artifacts) -> Outcome<()> {
    let e = cfg.entangle.clone().unwrap_or_default();
    let s = entangle_setup(cfg, e.gamma)?;
    if e.full_space && s.n_spokes > FULL_SPACE_MAX_SPOKES {
        return Err(Failure::Config(format!("/entangle/full_space: at most {FULL_SPACE_MAX_SPOKES} spokes")));
    }
    let r = lindblad_evolve(&s, e.full_space)?;
    let mut csv = Csv::new(&["t", "fidelity", "excitation", "trace_dev"]);
    for i in 0..r.times.len() {
        csv.reals(&[r.times[i], r.fidelity[i], r.excitation[i], r.trace_deviation[i]]);
    }
    art.csv("entangle.csv", csv)?;
    let o = fidelity_at_optimal_time(&s)?;
    art.json("entangle.json", &optimal_json(&o, &s))?;
    Ok(())
}
