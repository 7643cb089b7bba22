use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use super::output::format_float;
use super::params::{
    CascadeParams, FamilyParams, NormalFormParams, ResonancesParams, SimulateParams, SystemKind, TorusParams,
    VerifyTheoremParams,
};
use super::{parse_parameters, CommandKind, ExperimentManifest};
use crate::dynamics::{
    activation_time, integrate_condensed, integrate_full, integrate_resonant, resolve_window,
    support_confinement_report, theorem_pipeline, three_step_cascade_demo, ACTIVATION_THRESHOLD, CONFINEMENT_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::family::{
    check_ratio_bound, generation_sums, max_generation_ratio, validate_family, FamilyStructure, Relation,
};
use crate::lattice::{random_field, LatticeBox, Mode, ModeField};
use crate::normal_form::{build_chi, scaling_sweep, verify_poisson_cancellation, ChiPart, FlowOptions};
use crate::resonance::{
    classify, collapse_unordered, enumerate_resonances, min_nonzero_defect, weak_resonance_set, ResonanceClass,
    ResonantTuple,
};
use crate::Complex64;

/// Everything a command produces before it is written to disk.
pub(super) struct Artifacts {
    pub resolved: Value,
    pub report: Value,
    pub files: Vec<(&'static str, String)>,
    pub pass: bool,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize to JSON")
}

pub(super) fn execute(m: &ExperimentManifest) -> Result<Artifacts> {
    // Report torus problems before anything else, whatever else is missing.
    if !matches!(m.command, CommandKind::CascadeDemo | CommandKind::Family) {
        let torus: TorusParams = m
            .parameters
            .clone()
            .try_into()
            .map_err(|e: toml::de::Error| Error::Parse(format!("parameters: {}", e.message())))?;
        torus.to_spec()?;
    }
    match m.command {
        CommandKind::Resonances => resonances(parse_parameters(&m.parameters)?),
        CommandKind::NormalForm => normal_form(parse_parameters(&m.parameters)?),
        CommandKind::Simulate => simulate(parse_parameters(&m.parameters)?),
        CommandKind::VerifyTheorem => verify_theorem(parse_parameters(&m.parameters)?),
        CommandKind::CascadeDemo => cascade_demo(parse_parameters(&m.parameters)?),
        CommandKind::Family => family(parse_parameters(&m.parameters)?),
    }
}

const TUPLE_HEADER: &str = "k1x,k1y,k2x,k2y,k3x,k3y,k4x,k4y";

fn tuple_cells(t: &[Mode; 4]) -> String {
    t.iter()
        .map(|k| format!("{},{}", k.x, k.y))
        .collect::<Vec<_>>()
        .join(",")
}

fn tuple_csv(tuples: &[ResonantTuple]) -> String {
    let mut out = format!("{TUPLE_HEADER},class,defect\n");
    for t in tuples {
        out.push_str(&format!(
            "{},{},{}\n",
            tuple_cells(&t.modes),
            t.class,
            format_float(t.weak_defect)
        ));
    }
    out
}

fn class_counts<'a>(classes: impl Iterator<Item = ResonanceClass>) -> BTreeMap<&'a str, usize> {
    let mut counts: BTreeMap<&str, usize> = [
        ResonanceClass::Degenerate,
        ResonanceClass::Parallel,
        ResonanceClass::Nonparallel,
    ]
    .into_iter()
    .map(|c| (c.as_str(), 0))
    .collect();
    for c in classes {
        *counts.get_mut(c.as_str()).expect("all classes present") += 1;
    }
    counts
}

fn resonances(p: ResonancesParams) -> Result<Artifacts> {
    let spec = p.torus.to_spec()?;
    let n_box = LatticeBox::new(p.n);
    let weak_box = match p.l {
        Some(l) if l <= p.n => {
            return Err(Error::Parse(format!("l: must exceed n = {}, got {l}", p.n)));
        }
        other => other.map(LatticeBox::new),
    };
    let tuples = enumerate_resonances(&spec, n_box)?;
    let counts = class_counts(tuples.iter().map(|t| t.class));
    let unordered = collapse_unordered(&tuples);
    let unordered_counts = class_counts(
        unordered
            .iter()
            .map(|t| classify(t).expect("enumerated tuples conserve momentum")),
    );
    let kept: Vec<ResonantTuple> = tuples
        .iter()
        .filter(|t| p.class.is_none_or(|c| t.class == c))
        .copied()
        .collect();
    let mut files = vec![("resonances.csv", tuple_csv(&kept))];
    let weak_count = match weak_box {
        Some(l_box) => {
            let weak = weak_resonance_set(&spec, n_box, l_box, p.weak_threshold)?;
            files.push(("weak_resonances.csv", tuple_csv(&weak)));
            Some(weak.len())
        }
        None => None,
    };
    let nonparallel = counts["nonparallel"];
    let pass = spec.is_rational() || nonparallel == 0;
    let min_defect = min_nonzero_defect(&spec, n_box);
    let report = json!({
        "tuple_count": tuples.len(),
        "counts_by_class": counts,
        "unordered_counts_by_class": unordered_counts,
        "written": kept.len(),
        "min_nonzero_defect": min_defect,
        "C_N_omega": crate::resonance::small_divisor_constant(&spec, n_box),
        "weak_count": weak_count,
        "pass": pass,
    });
    Ok(Artifacts {
        resolved: to_value(&p),
        report,
        files,
        pass,
    })
}

fn normal_form(p: NormalFormParams) -> Result<Artifacts> {
    let spec = p.torus.to_spec()?;
    if p.l <= p.n {
        return Err(Error::Parse(format!("l: must exceed n = {}, got {}", p.n, p.l)));
    }
    let (n_box, l_box) = (LatticeBox::new(p.n), LatticeBox::new(p.l));
    let (chi, dec) = build_chi(&spec, n_box, l_box, p.weak_threshold)?;
    let mut csv = format!("{TUPLE_HEADER},re_g,im_g,part\n");
    chi.for_each_term(|t, g, part| {
        if part == ChiPart::Chi1 || p.include_chi2 {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                tuple_cells(&t),
                format_float(g.re),
                format_float(g.im),
                part.as_str()
            ));
        }
    });
    let samples: Vec<ModeField> = (0..p.poisson_samples as u64)
        .map(|i| random_field(l_box, l_box, p.s, 1.0, p.seed.wrapping_add(i)))
        .collect();
    let poisson = verify_poisson_cancellation(&chi, &dec, &spec, &samples)?;
    let poisson_ok = poisson.max_residual <= 1e-10 * poisson.max_term_magnitude.max(1.0);
    let direction = random_field(l_box, LatticeBox::new(p.direction_box.min(p.l)), p.s, 1.0, p.seed);
    let flow = FlowOptions {
        ode_tol: p.flow_tolerance,
        sobolev_index: p.s,
        ..FlowOptions::default()
    };
    let scaling = scaling_sweep(&chi, &direction, &p.epsilons, &flow)?;
    let slope_ok = (scaling.slope - 3.0).abs() <= 0.2;
    let round_trip_ok = scaling.max_round_trip < 1e-9;
    let pass = poisson_ok && slope_ok && round_trip_ok;
    let report = json!({
        "C_N_omega": chi.small_divisor_constant(),
        "max_chi1_modulus": chi.max_chi1_modulus(),
        "chi1_terms": chi.chi1_len(),
        "chi2_terms": chi.chi2_len(),
        "resonant_terms": dec.resonant_terms.len(),
        "weak_terms": dec.weak_terms.len(),
        "poisson": poisson,
        "poisson_ok": poisson_ok,
        "scaling": scaling,
        "slope_ok": slope_ok,
        "round_trip_ok": round_trip_ok,
        "pass": pass,
    });
    Ok(Artifacts {
        resolved: to_value(&p),
        report,
        files: vec![("chi.csv", csv)],
        pass,
    })
}

fn mode_label(k: Mode) -> String {
    format!("u_{}_{}", k.x, k.y)
}

fn simulate(p: SimulateParams) -> Result<Artifacts> {
    let cfg = p.config.to_config()?;
    let u0 = match &p.initial {
        Some(entries) => {
            let mut parsed = Vec::with_capacity(entries.len());
            for [x, y, re, im] in entries {
                if x.fract() != 0.0 || y.fract() != 0.0 {
                    return Err(Error::Parse(format!(
                        "initial: mode ({x}, {y}) is not an integer point"
                    )));
                }
                parsed.push((Mode::new(*x as i32, *y as i32), Complex64::new(*re, *im)));
            }
            ModeField::from_entries(cfg.l_box, parsed)?
        }
        None => cfg.initial_data(),
    };
    let watch = p.watchlist();
    if let Some(k) = watch.iter().find(|k| !cfg.l_box.contains(**k)) {
        return Err(Error::SupportViolation {
            mode: *k,
            half_width: cfg.l_box.half_width,
        });
    }
    let window = resolve_window(&cfg, &u0);
    let traj = match p.system {
        SystemKind::Resonant => integrate_resonant(&cfg, &u0)?,
        SystemKind::Condensed => integrate_condensed(&cfg, &u0)?,
        SystemKind::Full => integrate_full(&cfg, &u0)?,
    };
    let series: Vec<Vec<f64>> = watch.iter().map(|k| traj.modulus_series(*k)).collect();
    let mut trajectory_csv = String::from("t");
    for k in &watch {
        trajectory_csv.push(',');
        trajectory_csv.push_str(&mode_label(*k));
    }
    trajectory_csv.push('\n');
    for (i, t) in traj.times.iter().enumerate() {
        trajectory_csv.push_str(&format_float(*t));
        for s in &series {
            trajectory_csv.push(',');
            trajectory_csv.push_str(&format_float(s[i]));
        }
        trajectory_csv.push('\n');
    }
    let mut conserved_csv = String::from("t,mass,hamiltonian,momentum_x,momentum_y\n");
    for (t, c) in traj.times.iter().zip(&traj.conserved) {
        conserved_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            format_float(*t),
            format_float(c.mass),
            format_float(c.hamiltonian),
            format_float(c.momentum[0]),
            format_float(c.momentum[1])
        ));
    }
    let confinement = support_confinement_report(&traj, cfg.m_box, cfg.n_box);
    let activation: BTreeMap<String, Option<f64>> = watch
        .iter()
        .zip(&series)
        .filter(|(k, _)| !cfg.m_box.contains(**k))
        .map(|(k, s)| (mode_label(*k), activation_time(&traj.times, s, ACTIVATION_THRESHOLD)))
        .collect();
    let mut checks = BTreeMap::new();
    match p.system {
        SystemKind::Full => {
            checks.insert("mass_conserved", traj.mass_drift() < 1e-8);
            checks.insert("hamiltonian_conserved", traj.hamiltonian_drift() < 1e-6);
        }
        _ if !cfg.spec.is_rational() && u0.supported_in(&cfg.m_box) => {
            checks.insert("confined", confinement.confined(CONFINEMENT_TOLERANCE));
        }
        _ => {}
    }
    let pass = checks.values().all(|c| *c);
    let report = json!({
        "system": p.system,
        "t_final": window.t_final,
        "active_bound": window.active_bound,
        "analyticity_window": window.analyticity_window,
        "beyond_window": traj.beyond_window,
        "max_annulus": confinement.max_annulus,
        "max_exterior": confinement.max_exterior,
        "max_outside": confinement.max_outside(),
        "activation_threshold": ACTIVATION_THRESHOLD,
        "activation_times": activation,
        "mass_drift": traj.mass_drift(),
        "hamiltonian_drift": traj.hamiltonian_drift(),
        "momentum_drift": traj.momentum_drift(),
        "checks": checks,
        "pass": pass,
    });
    Ok(Artifacts {
        resolved: to_value(&p),
        report,
        files: vec![("trajectory.csv", trajectory_csv), ("conserved.csv", conserved_csv)],
        pass,
    })
}

fn series_csv(header: &str, times: &[f64], values: &[f64]) -> String {
    let mut out = format!("t,{header}\n");
    for (t, v) in times.iter().zip(values) {
        out.push_str(&format!("{},{}\n", format_float(*t), format_float(*v)));
    }
    out
}

fn verify_theorem(p: VerifyTheoremParams) -> Result<Artifacts> {
    let cfg = p.config.to_config()?;
    let r = theorem_pipeline(&cfg, &p.options())?;
    let files = vec![
        ("gap.csv", series_csv("duhamel_gap", &r.gap_times, &r.gap_series)),
        (
            "outside.csv",
            series_csv("sup_outside", &r.times, &r.sup_outside_series),
        ),
    ];
    Ok(Artifacts {
        resolved: to_value(&p),
        pass: r.pass,
        report: to_value(&r),
        files,
    })
}

fn cascade_demo(p: CascadeParams) -> Result<Artifacts> {
    let r = three_step_cascade_demo(LatticeBox::new(p.l), &p.options())?;
    let mut csv = String::from("run,target,x,y,activation_time,max_modulus,first_nonzero_order\n");
    for run in [&r.rational, &r.irrational, &r.p_only] {
        for (i, (name, k)) in ["Q2", "Q3", "Q4"].iter().zip(r.geometry.targets()).enumerate() {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                run.label,
                name,
                k.x,
                k.y,
                run.activation_times[i].map_or(String::new(), format_float),
                format_float(run.max_modulus[i]),
                run.first_nonzero_order[i].map_or(String::new(), |o| o.to_string())
            ));
        }
    }
    Ok(Artifacts {
        resolved: to_value(&p),
        pass: r.pass,
        report: to_value(&r),
        files: vec![("activation.csv", csv)],
    })
}

fn family(p: FamilyParams) -> Result<Artifacts> {
    let generations = p
        .generations
        .iter()
        .map(|g| g.iter().map(|[x, y]| Mode::new(*x, *y)).collect())
        .collect();
    let f = FamilyStructure::new(generations, p.relation, p.s)?;
    let conditions = validate_family(&f);
    let sums = generation_sums(&f);
    let ratio = (p.relation == Relation::IrrationalR && conditions.passes_i_to_v())
        .then(|| check_ratio_bound(&f))
        .transpose()?;
    let pass = conditions.passes_all() && ratio.as_ref().is_none_or(|r| r.pass && r.permutation_structure);
    let report = json!({
        "relation": p.relation,
        "conditions": conditions,
        "sums": sums,
        "max_ratio": max_generation_ratio(&sums),
        "bound": 2f64.powf(p.s),
        "ratio_bound_checked": ratio.is_some(),
        "permutations": ratio.as_ref().map(|r| &r.permutations),
        "pass": pass,
    });
    Ok(Artifacts {
        resolved: to_value(&p),
        report,
        files: vec![],
        pass,
    })
}
