//! One function per scenario; each fills an [`Outputs`] without touching disk.

use rayon::prelude::*;
use serde::Serialize;

use superchain::closed_solver::{
    classify_pairs, closed_spectrum, decoupled_limit_spectrum, localization_weights, pair_label,
    solve_symmetric_point_energies, Parity, PairClassification,
};
use superchain::dynamics::{decay_time, evolve_state, pair_resonances};
use superchain::linalg::CVector;
use superchain::liouville::{
    coherence_scan, evolve_density, monte_carlo_dephasing, scan_initial_state, DensityMatrix, InitialState,
    NoiseModel, ScanOptions,
};
use superchain::open_solver::{
    band_structure_vs_lambda, detect_superradiance, open_spectrum, superradiant_profiles, sweep_gamma, width_metrics,
};
use superchain::{ChainSpec, Error, Result, SiteIndex};

use crate::config::{Member, RunConfig, Scenario};
use crate::output::{num, opt, Outputs, Table};

pub fn run_scenario(cfg: &RunConfig) -> Result<Outputs> {
    match cfg.scenario {
        Scenario::BandStructure => band_structure(cfg),
        Scenario::DecoupledLimit => decoupled_limit(cfg),
        Scenario::PairAnalysis => pair_analysis(cfg),
        Scenario::ComplexSpectrum => complex_spectrum(cfg),
        Scenario::GammaSweep => gamma_sweep(cfg),
        Scenario::Superradiance => superradiance(cfg),
        Scenario::BandStructureOpen => band_structure_open(cfg),
        Scenario::Profiles => profiles(cfg),
        Scenario::Survival => survival(cfg),
        Scenario::CoherenceScan => coherence(cfg),
        Scenario::McValidate => mc_validate(cfg),
    }
}

fn membership(pairs: &PairClassification, level: usize) -> (String, &'static str) {
    for p in &pairs.pairs {
        if p.upper == level {
            return (p.pair_index.to_string(), "upper");
        }
        if p.lower == level {
            return (p.pair_index.to_string(), "lower");
        }
    }
    if pairs.unpaired == Some(level) {
        return (String::new(), "unpaired");
    }
    if pairs.qubit_localized.contains(&level) {
        return (String::new(), "qubit");
    }
    (String::new(), "")
}

fn band_structure(cfg: &RunConfig) -> Result<Outputs> {
    let lambdas = cfg.grid("lambda_grid");
    let rows: Vec<Vec<Vec<String>>> = lambdas
        .par_iter()
        .map(|&l| {
            let spec = cfg.spec.with_lambda(l);
            let spectrum = closed_spectrum(&spec)?;
            let pairs = classify_pairs(&spectrum, &spec)?;
            Ok(spectrum
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let w = localization_weights(s);
                    let (pair, member) = membership(&pairs, i);
                    vec![num(l), i.to_string(), num(s.energy), num(w.left), num(w.right), num(w.qubits), pair, member.into()]
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(
        "band_structure.csv",
        &["lambda", "level", "energy", "w_left", "w_right", "w_qubits", "pair_index", "member"],
    );
    rows.into_iter().flatten().for_each(|r| t.row(r));
    let mut out = Outputs::default();
    out.table(t);
    Ok(out)
}

fn decoupled_limit(cfg: &RunConfig) -> Result<Outputs> {
    let spec = cfg.spec;
    let analytic = decoupled_limit_spectrum(&spec)?;
    let mut levels: Vec<(f64, String, String)> = Vec::new();
    for l in &analytic.left_band {
        levels.push((l.energy, "left_arm".into(), l.k.to_string()));
    }
    for l in &analytic.right_band {
        levels.push((l.energy, "right_arm".into(), l.k.to_string()));
    }
    levels.push((analytic.left_qubit_level, "left_qubit".into(), String::new()));
    let [up, down] = analytic.central_pair(spec.lambda);
    levels.push((up, "central_pair_upper".into(), String::new()));
    levels.push((down, "central_pair_lower".into(), String::new()));
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));

    let numeric: Option<Vec<f64>> = if spec.lambda > 0.0 {
        Some(closed_spectrum(&spec)?.iter().map(|s| s.energy).collect())
    } else {
        None
    };
    let mut t = Table::new("decoupled.csv", &["index", "kind", "k", "analytic", "numeric", "abs_diff"]);
    for (i, (e, kind, k)) in levels.iter().enumerate() {
        let n = numeric.as_ref().map(|v| v[i]);
        t.row([i.to_string(), kind.clone(), k.clone(), num(*e), opt(n), opt(n.map(|n| (n - e).abs()))]);
    }
    let mut out = Outputs::default();
    out.table(t);
    Ok(out)
}

fn parity_name(p: Parity) -> &'static str {
    match p {
        Parity::Symmetric => "symmetric",
        Parity::Antisymmetric => "antisymmetric",
    }
}

fn pair_analysis(cfg: &RunConfig) -> Result<Outputs> {
    let mut pairs_t = Table::new(
        "pairs.csv",
        &[
            "lambda", "pair_index", "label", "e_upper", "e_lower", "rabi", "w_left_upper", "w_right_upper",
            "w_qubits_upper", "w_left_lower", "w_right_lower", "w_qubits_lower",
        ],
    );
    let mut roots_t = Table::new("roots.csv", &["lambda", "energy", "parity", "eigen_energy", "abs_diff"]);
    let mut any_roots = false;
    for l in cfg.grid("lambda_grid") {
        let spec = cfg.spec.with_lambda(l);
        let spectrum = closed_spectrum(&spec)?;
        let pairs = classify_pairs(&spectrum, &spec)?;
        for p in &pairs.pairs {
            let (u, d) = (p.weights_upper, p.weights_lower);
            pairs_t.row([
                num(l),
                p.pair_index.to_string(),
                pair_label(p.pair_index),
                num(p.e_upper),
                num(p.e_lower),
                num(p.rabi),
                num(u.left),
                num(u.right),
                num(u.qubits),
                num(d.left),
                num(d.right),
                num(d.qubits),
            ]);
        }
        let balanced = spec.delta_l == spec.delta_r && (l * l - spec.kappa).abs() <= 1e-12 * spec.kappa;
        if balanced {
            any_roots = true;
            let roots = solve_symmetric_point_energies(&spec)?;
            let mut band: Vec<f64> = spectrum.iter().map(|s| s.energy).filter(|&e| spec.in_band(e)).collect();
            band.sort_by(|a, b| b.total_cmp(a));
            for ((e, parity), b) in roots.roots.iter().zip(&band) {
                roots_t.row([num(l), num(*e), parity_name(*parity).into(), num(*b), num((e - b).abs())]);
            }
        }
    }
    let mut out = Outputs::default();
    out.table(pairs_t);
    if any_roots {
        out.table(roots_t);
    }
    Ok(out)
}

#[derive(Serialize)]
struct SweepSummary {
    branches: usize,
    matching_cost: f64,
    ambiguous_gammas: Vec<f64>,
    refined_points: usize,
    max_width_sum_error: f64,
}

fn complex_spectrum(cfg: &RunConfig) -> Result<Outputs> {
    let gammas = cfg.grid("gamma_grid");
    let traj = sweep_gamma(&cfg.spec, &gammas)?;
    let mut t = Table::new("trajectories.csv", &["gamma", "branch_id", "e_real", "gamma_q"]);
    for (i, g) in gammas.iter().enumerate() {
        for (b, branch) in traj.branches.iter().enumerate() {
            t.row([num(*g), b.to_string(), num(branch[i].re), num(-2.0 * branch[i].im)]);
        }
    }
    let mut out = Outputs::default();
    out.table(t);
    out.json(
        "sweep.json",
        &SweepSummary {
            branches: traj.n_branches(),
            matching_cost: traj.matching_cost,
            ambiguous_gammas: traj.ambiguous.iter().map(|&i| gammas[i]).collect(),
            refined_points: traj.refined_points,
            max_width_sum_error: traj.max_width_sum_error,
        },
    );
    Ok(out)
}

fn gamma_sweep(cfg: &RunConfig) -> Result<Outputs> {
    let gammas = cfg.grid("gamma_grid");
    let rows: Vec<Vec<String>> = gammas
        .par_iter()
        .map(|&g| {
            let s = open_spectrum(&cfg.spec.with_gamma(g))?;
            let widths: Vec<f64> = s.resonances.iter().map(|r| r.gamma_q).collect();
            let m = width_metrics(g, &widths);
            let sum = s.width_sum();
            let widest = widths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(vec![
                num(g),
                num(sum),
                num((sum - 2.0 * g).abs()),
                num(m.participation_ratio),
                num(m.top2_share),
                num(widest),
                num(s.min_overlap),
            ])
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(
        "widths.csv",
        &["gamma", "width_sum", "width_sum_error", "participation_ratio", "top2_share", "max_width", "min_overlap"],
    );
    rows.into_iter().for_each(|r| t.row(r));
    let mut out = Outputs::default();
    out.table(t);
    Ok(out)
}

#[derive(Serialize)]
struct SuperradianceSummary {
    gamma_crit: f64,
    sr_branches: [usize; 2],
    mean_level_spacing: f64,
    gamma_crit_over_spacing: f64,
}

fn superradiance(cfg: &RunConfig) -> Result<Outputs> {
    let gammas = cfg.grid("gamma_grid");
    let traj = sweep_gamma(&cfg.spec, &gammas)?;
    let report = detect_superradiance(&traj)?;
    let mut t = Table::new("metrics.csv", &["gamma", "participation_ratio", "top2_share"]);
    for m in &report.metrics {
        t.row([num(m.gamma), num(m.participation_ratio), num(m.top2_share)]);
    }
    let mut out = Outputs::default();
    out.table(t);
    out.json(
        "superradiance.json",
        &SuperradianceSummary {
            gamma_crit: report.gamma_crit,
            sr_branches: report.sr_branches,
            mean_level_spacing: report.mean_level_spacing,
            gamma_crit_over_spacing: report.gamma_crit / report.mean_level_spacing,
        },
    );
    Ok(out)
}

fn band_structure_open(cfg: &RunConfig) -> Result<Outputs> {
    let lambdas = cfg.grid("lambda_grid");
    let bs = band_structure_vs_lambda(&cfg.spec, &lambdas, cfg.spec.gamma)?;
    let mut t =
        Table::new("open_band_structure.csv", &["lambda", "branch_id", "e_real", "gamma_q", "pair_index", "member"]);
    for (i, l) in lambdas.iter().enumerate() {
        for (b, branch) in bs.trajectory.branches.iter().enumerate() {
            let (pair, member) = match bs.labels[i][b] {
                Some(m) => (m.pair_index.to_string(), if m.upper { "upper" } else { "lower" }),
                None => (String::new(), ""),
            };
            t.row([num(*l), b.to_string(), num(branch[i].re), num(-2.0 * branch[i].im), pair, member.into()]);
        }
    }
    let mut v = Table::new("pair_variation.csv", &["pair_index", "label", "variation"]);
    let mut k = 1;
    while let Some(var) = bs.pair_variation(k) {
        v.row([k.to_string(), pair_label(k), num(var)]);
        k += 1;
    }
    let mut out = Outputs::default();
    out.table(t);
    out.table(v);
    Ok(out)
}

fn profiles(cfg: &RunConfig) -> Result<Outputs> {
    let gammas = cfg.grid("gamma_grid");
    let points = superradiant_profiles(&cfg.spec, &gammas)?;
    let n = cfg.spec.n;
    let mut t = Table::new("profiles.csv", &["gamma", "rank", "site", "probability"]);
    let mut s = Table::new(
        "profile_summary.csv",
        &["gamma", "rank", "e_real", "gamma_q", "qubit_weight", "edge_fraction", "participation"],
    );
    for p in &points {
        for (rank, prof) in p.profiles.iter().enumerate() {
            for (f, prob) in prof.chain.iter().enumerate() {
                let site = match SiteIndex::from_flat(n, f)?.label {
                    superchain::Site::Chain(s) => s,
                    _ => unreachable!("chain profile covers wire sites only"),
                };
                t.row([num(p.gamma), (rank + 1).to_string(), site.to_string(), num(*prob)]);
            }
            s.row([
                num(p.gamma),
                (rank + 1).to_string(),
                num(prof.e),
                num(prof.gamma_q),
                num(prof.qubit_weight),
                num(prof.edge_fraction()),
                num(prof.participation()),
            ]);
        }
    }
    let mut out = Outputs::default();
    out.table(t);
    out.table(s);
    Ok(out)
}

fn normalized(v: &CVector) -> CVector {
    let n = v.norm();
    v.map(|z| z / n)
}

fn closed_pair_state(spec: &ChainSpec, pair_index: usize, upper: bool) -> Result<CVector> {
    let closed_spec = spec.with_gamma(0.0);
    let spectrum = closed_spectrum(&closed_spec)?;
    let pairs = classify_pairs(&spectrum, &closed_spec)?;
    let p = pairs
        .pairs
        .iter()
        .find(|p| p.pair_index == pair_index)
        .ok_or_else(|| Error::Classification(format!("no pair with index {pair_index}")))?;
    Ok(spectrum[if upper { p.upper } else { p.lower }].amplitudes.clone())
}

fn survival(cfg: &RunConfig) -> Result<Outputs> {
    let gammas = cfg.grid("gamma_grid");
    let times = cfg.grid("t_grid");
    let pair = cfg.options.pair_index.unwrap_or(1);
    let upper = cfg.options.member != Some(Member::Lower);
    let initial: Vec<(CVector, Option<(f64, f64)>)> = match cfg.options.initial_state.unwrap_or_default() {
        InitialState::OpenEigenstate => pair_resonances(&cfg.spec, pair, upper, &gammas)?
            .into_iter()
            .map(|r| (normalized(&r.right_vec), Some((r.e, r.gamma_q))))
            .collect(),
        InitialState::ClosedEigenstate => {
            let psi = closed_pair_state(&cfg.spec, pair, upper)?;
            vec![(psi, None); gammas.len()]
        }
    };
    let runs = gammas
        .par_iter()
        .zip(&initial)
        .map(|(&g, (psi, _))| evolve_state(&cfg.spec.with_gamma(g), psi, &times))
        .collect::<Result<Vec<_>>>()?;

    let mut p = Table::new("survival.csv", &["gamma", "t", "p"]);
    let mut l = Table::new("lifetimes.csv", &["gamma", "tau", "method", "cross_check", "e_real", "gamma_q"]);
    let mut out = Outputs::default();
    for ((g, run), (_, eig)) in gammas.iter().zip(&runs).zip(&initial) {
        for (t, pv) in times.iter().zip(&run.p) {
            p.row([num(*g), num(*t), num(*pv)]);
        }
        let tau = decay_time(&times, &run.p);
        if tau.is_none() {
            out.warnings.push(format!("gamma={g}: P(t) stays above 1/e on the time grid"));
        }
        let method = match run.method {
            superchain::dynamics::Method::Spectral => "spectral",
            superchain::dynamics::Method::Direct => "direct",
        };
        l.row([num(*g), opt(tau), method.into(), opt(run.cross_check), opt(eig.map(|e| e.0)), opt(eig.map(|e| e.1))]);
    }
    out.table(p);
    out.table(l);
    Ok(out)
}

fn coherence(cfg: &RunConfig) -> Result<Outputs> {
    let gammas = cfg.grid("gamma_grid");
    let ns = cfg.grids.n_list.clone().unwrap_or_else(|| vec![cfg.spec.n]);
    let alphas = cfg.grids.alpha_list.clone().unwrap_or_else(|| vec![cfg.spec.alpha_phi]);
    let opts = ScanOptions {
        mode: cfg.options.coherence_mode.unwrap_or_default(),
        initial: cfg.options.initial_state.unwrap_or_default(),
        cap: cfg.options.cap.unwrap_or(1e4),
    };
    let points = coherence_scan(&cfg.spec, &gammas, &ns, &alphas, opts);
    let mut t = Table::new(
        "coherence.csv",
        &["n", "alpha_phi", "gamma", "tau", "censored", "max_asymmetry", "min_eigenvalue", "error"],
    );
    let mut out = Outputs::default();
    for p in &points {
        if let Some(e) = &p.error {
            out.warnings.push(format!("n={} alpha_phi={} gamma={}: {e}", p.n, p.alpha_phi, p.gamma));
        } else if p.censored {
            out.warnings.push(format!("n={} alpha_phi={} gamma={}: reached the cap", p.n, p.alpha_phi, p.gamma));
        }
        t.row([
            p.n.to_string(),
            num(p.alpha_phi),
            num(p.gamma),
            opt(p.tau),
            p.censored.to_string(),
            opt(p.hygiene.map(|h| h.max_asymmetry)),
            opt(p.hygiene.map(|h| h.min_eigenvalue)),
            p.error.clone().unwrap_or_default(),
        ]);
    }
    if points.iter().all(|p| p.error.is_some()) {
        return Err(Error::Consistency(format!("every scan point failed; first: {}", points[0].error.as_deref().unwrap_or(""))));
    }
    out.table(t);
    Ok(out)
}

#[derive(Serialize)]
struct McSummary {
    n_traj: usize,
    dt: f64,
    seed: u64,
    max_ratio: f64,
    all_within_3se: bool,
}

fn mc_validate(cfg: &RunConfig) -> Result<Outputs> {
    let times = cfg.grid("t_grid");
    let spec = cfg.spec;
    let psi0 = scan_initial_state(&spec, cfg.options.initial_state.unwrap_or_default())?;
    let noise = NoiseModel {
        alpha_phi: spec.alpha_phi,
        seed: cfg.seed,
        dt: cfg.options.dt.unwrap_or(0.01),
        n_traj: cfg.options.n_traj.unwrap_or(2000),
    };
    let mc = monte_carlo_dephasing(&spec, &psi0, &noise, &times)?;
    let me = evolve_density(&spec, &DensityMatrix::from_pure(&psi0), &times)?;
    let mut t = Table::new(
        "mc_validation.csv",
        &["t", "max_abs_diff", "max_std_err", "max_ratio", "fraction_within_3se", "trace_master", "trace_mc"],
    );
    let mut worst: f64 = 0.0;
    let mut all_within = true;
    for (k, time) in times.iter().enumerate() {
        let diff = (&mc.mean[k] - &me.rho[k].rho).map(|z| z.norm());
        let se = &mc.std_err[k];
        let mut ratio: f64 = 0.0;
        let mut within = 0usize;
        for (d, s) in diff.iter().zip(se.iter()) {
            if *d <= 3.0 * s {
                within += 1;
            }
            if *s > 0.0 {
                ratio = ratio.max(d / s);
            } else if *d > 0.0 {
                ratio = f64::INFINITY;
            }
        }
        worst = worst.max(ratio);
        all_within &= within == diff.len();
        t.row([
            num(*time),
            num(diff.max()),
            num(se.max()),
            num(ratio),
            num(within as f64 / diff.len() as f64),
            num(me.rho[k].trace()),
            num(mc.mean[k].trace().re),
        ]);
    }
    let mut out = Outputs::default();
    out.table(t);
    out.json(
        "mc_summary.json",
        &McSummary { n_traj: noise.n_traj, dt: noise.dt, seed: noise.seed, max_ratio: worst, all_within_3se: all_within },
    );
    Ok(out)
}
