//! End-to-end commands: config → lattice → operator → spectrum → store,
//! and the observables tables computed from a store.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{GoalSelector, RunConfig, SolverChoice};
use crate::eigen::{
    dense_spectrum_with_limit, lanczos_spectrum, verify, LanczosMode, LanczosOptions, Spectrum,
    VerifyReport, VerifyTolerances,
};
use crate::error::{Error, Result};
use crate::grid::{build_grid, Grid};
use crate::observables::{
    classify_collision_states, collision_probabilities, state_slice, transition_table,
    two_step_ranking, CollisionReport, Eta, TwoStepRanking, COLLISION_EXCITATION_FLOOR,
};
use crate::operator::{assemble_with_coeff, HamiltonianOperator};
use crate::potential::{averaged_potential, AngularQuadrature, PotentialParams};
use crate::store::{
    create_run_dir, fmt_f64 as num, load_store, write_store, LoadedStore, StoreContents,
    STATES_FILE,
};
use crate::units::{compute_scales, ScaleSet};

/// Node count of the standalone angular quadrature used for θ-averages.
pub const AVERAGE_QUADRATURE_NODES: usize = 512;

pub struct Solved {
    pub grid: Grid,
    pub operator: HamiltonianOperator,
    pub spectrum: Spectrum,
    pub report: VerifyReport,
    pub scales: ScaleSet,
    pub assemble_seconds: f64,
    pub solve_seconds: f64,
}

impl Solved {
    /// Converged and within the residual and Gram gates.
    pub fn healthy(&self) -> bool {
        self.spectrum.meta.converged && self.report.passed()
    }
}

pub fn build_operator(config: &RunConfig) -> Result<(Grid, HamiltonianOperator)> {
    config.validate()?;
    let grid = build_grid(config.grid)?;
    let mu = compute_scales(&config.particles).mu;
    let op = assemble_with_coeff(
        &grid,
        &config.potential_params(),
        mu,
        config.effective_heavy_coeff(),
    )?;
    Ok((grid, op))
}

pub fn solve_operator(config: &RunConfig, op: &HamiltonianOperator) -> Result<Spectrum> {
    let s = &config.solver;
    let n = op.dim();
    let use_dense = match s.method {
        SolverChoice::Dense => true,
        SolverChoice::Auto => n <= s.dense_limit && s.shift.is_none(),
        SolverChoice::Lanczos | SolverChoice::ShiftInvert => false,
    };
    if use_dense || s.k >= n {
        let mut full = dense_spectrum_with_limit(op, s.dense_limit)?;
        truncate(&mut full, s.k);
        return Ok(full);
    }
    let mode = match (s.method, s.shift) {
        (SolverChoice::Lanczos, _) => LanczosMode::Standard,
        (_, Some(sigma)) => LanczosMode::ShiftInvert { sigma },
        (_, None) => LanczosMode::ShiftInvertLowest,
    };
    let opts = LanczosOptions {
        max_iter: s.max_iter,
        tol: s.tol,
        seed: s.seed,
        mode,
        ..LanczosOptions::default()
    };
    lanczos_spectrum(op, s.k, &opts)
}

fn truncate(s: &mut Spectrum, k: usize) {
    if k < s.len() {
        let dim = s.dim();
        let vectors = s.eigenvectors_column_major()[..dim * k].to_vec();
        let mut t = Spectrum::from_stored(
            s.eigenvalues[..k].to_vec(),
            vectors,
            dim,
            s.residual_norms[..k].to_vec(),
            s.meta.clone(),
            s.measure,
        )
        .expect("truncation preserves dimensions");
        std::mem::swap(s, &mut t);
    }
}

pub fn solve(config: &RunConfig) -> Result<Solved> {
    let t0 = Instant::now();
    let (grid, operator) = build_operator(config)?;
    let assemble_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let spectrum = solve_operator(config, &operator)?;
    let solve_seconds = t1.elapsed().as_secs_f64();
    let report = verify(
        &spectrum,
        &operator,
        VerifyTolerances {
            residual: config.solver.residual_gate,
            gram: config.solver.gram_gate,
        },
    );
    Ok(Solved {
        grid,
        operator,
        spectrum,
        report,
        scales: compute_scales(&config.particles),
        assemble_seconds,
        solve_seconds,
    })
}

pub struct SpectrumRun {
    pub dir: PathBuf,
    pub solved: Solved,
}

/// Solves, verifies and persists; a non-converged or gate-failing spectrum is
/// still written and flagged in the metadata.
pub fn cmd_spectrum(config: &RunConfig, out: Option<&Path>) -> Result<SpectrumRun> {
    let solved = solve(config)?;
    let base = out.unwrap_or(&config.output_dir);
    let g = &config.grid;
    let name = format!("spectrum-{}x{}x{}-seed{}", g.n_r, g.n_rho, g.n_theta, config.solver.seed);
    let dir = create_run_dir(base, &name)?;
    let extra = vec![
        ("timing.assemble_seconds".into(), format!("{:.6}", solved.assemble_seconds)),
        ("timing.solve_seconds".into(), format!("{:.6}", solved.solve_seconds)),
        ("verify.max_residual".into(), num(solved.report.max_residual)),
        ("verify.max_gram_deviation".into(), num(solved.report.max_gram_deviation)),
        ("verify.passed".into(), solved.report.passed().to_string()),
        ("observables.p_qc_r".into(), num(solved.grid.r_nodes[0])),
        ("observables.p_qc_rho".into(), num(solved.grid.rho_nodes[0])),
        (
            "observables.polarization_axial_projection".into(),
            num(config.polarization().axial_projection()),
        ),
    ];
    write_store(
        &dir,
        &StoreContents {
            config,
            spectrum: &solved.spectrum,
            extra,
        },
    )?;
    fs::write(dir.join(STATES_FILE), states_csv(config, &solved.grid, &solved.spectrum)?)?;
    Ok(SpectrumRun { dir, solved })
}

/// `index,energy,excitation,p_qc,coupling_from_ground`.
pub fn states_csv(config: &RunConfig, grid: &Grid, spectrum: &Spectrum) -> Result<String> {
    let mut s = String::from("index,energy,excitation,p_qc,coupling_from_ground\n");
    if spectrum.is_empty() {
        return Ok(s);
    }
    let p = collision_probabilities(spectrum, grid)?;
    let t = transition_table(spectrum, grid, 0, config.polarization())?;
    for i in 0..spectrum.len() {
        let _ = writeln!(
            s,
            "{i},{},{},{},{}",
            num(spectrum.eigenvalues[i]),
            num(spectrum.excitation(i)),
            num(p[i]),
            num(t.couplings[i])
        );
    }
    Ok(s)
}

fn grid_of(store: &LoadedStore) -> Result<Grid> {
    let grid = build_grid(store.config.grid)?;
    if grid.len() != store.spectrum.dim() {
        return Err(Error::Format {
            path: store.dir.clone(),
            msg: "eigenvector length does not match the configured grid".into(),
        });
    }
    Ok(grid)
}

pub fn open_store(dir: &Path) -> Result<(LoadedStore, Grid)> {
    let store = load_store(dir)?;
    let grid = grid_of(&store)?;
    Ok((store, grid))
}

pub fn collision_csv(spectrum: &Spectrum, report: &CollisionReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# eta={}", num(report.eta));
    let _ = writeln!(
        s,
        "# evaluated_at_r={},rho={}",
        num(report.r_eval),
        num(report.rho_eval)
    );
    let idx: Vec<String> = report.collision_state_indices.iter().map(|i| i.to_string()).collect();
    let _ = writeln!(s, "# collision_states={}", idx.join(" "));
    let _ = writeln!(
        s,
        "# any_below_excitation_{}={}",
        COLLISION_EXCITATION_FLOOR, report.any_below_floor
    );
    s.push_str("index,energy,excitation,p_qc,collision\n");
    for i in 0..spectrum.len() {
        let flagged = report.collision_state_indices.binary_search(&i).is_ok();
        let _ = writeln!(
            s,
            "{i},{},{},{},{}",
            num(spectrum.eigenvalues[i]),
            num(spectrum.excitation(i)),
            num(report.p_qc[i]),
            u8::from(flagged)
        );
    }
    s
}

pub fn cmd_collision(dir: &Path, eta: Option<Eta>) -> Result<(PathBuf, CollisionReport)> {
    let (store, grid) = open_store(dir)?;
    let eta = eta.unwrap_or(store.config.eta);
    let report = classify_collision_states(&store.spectrum, &grid, eta)?;
    let path = dir.join("collision.csv");
    fs::write(&path, collision_csv(&store.spectrum, &report))?;
    Ok((path, report))
}

/// The excited state with the largest collision probability.
pub fn top_collision_state(spectrum: &Spectrum, grid: &Grid) -> Result<usize> {
    let p = collision_probabilities(spectrum, grid)?;
    (1..p.len())
        .max_by(|&a, &b| p[a].total_cmp(&p[b]).then(b.cmp(&a)))
        .ok_or_else(|| Error::InvalidInput("spectrum has no excited states".into()))
}

pub fn resolve_goal(spectrum: &Spectrum, grid: &Grid, goal: GoalSelector) -> Result<usize> {
    match goal {
        GoalSelector::Auto => top_collision_state(spectrum, grid),
        GoalSelector::Index(0) => Err(Error::InvalidInput(
            "goal state must differ from the ground state".into(),
        )),
        GoalSelector::Index(i) if i >= spectrum.len() => Err(Error::InvalidInput(format!(
            "goal index {i} is outside the {} computed states",
            spectrum.len()
        ))),
        GoalSelector::Index(i) => Ok(i),
    }
}

fn fmt_wavelength(w: Option<f64>) -> String {
    w.map_or_else(|| "inf".to_string(), num)
}

pub fn twostep_csv(spectrum: &Spectrum, ranking: &TwoStepRanking) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# goal={},energy={},excitation={}",
        ranking.goal,
        num(spectrum.eigenvalues[ranking.goal]),
        num(ranking.goal_excitation)
    );
    s.push_str("intermediate,energy,score,de_first,de_second,wavelength_first_m,wavelength_second_m\n");
    for r in &ranking.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.intermediate,
            num(spectrum.eigenvalues[r.intermediate]),
            num(r.score),
            num(r.de_first),
            num(r.de_second),
            fmt_wavelength(r.wavelength_first),
            fmt_wavelength(r.wavelength_second)
        );
    }
    s
}

pub fn cmd_twostep(dir: &Path, goal: Option<GoalSelector>) -> Result<(PathBuf, TwoStepRanking)> {
    let (store, grid) = open_store(dir)?;
    let goal = resolve_goal(&store.spectrum, &grid, goal.unwrap_or(store.config.goal))?;
    let scales = compute_scales(&store.config.particles);
    let ranking = two_step_ranking(
        &store.spectrum,
        &grid,
        goal,
        store.config.polarization(),
        &scales,
    )?;
    let path = dir.join("twostep.csv");
    fs::write(&path, twostep_csv(&store.spectrum, &ranking))?;
    Ok((path, ranking))
}

/// `R,rho,v_avg,v_avg_field`: the θ-averaged potential without and with the
/// configured diamagnetic term, sampled on a uniform rectangle.
pub fn potential_csv(config: &RunConfig) -> Result<String> {
    config.validate()?;
    let quad = AngularQuadrature::tanh_sinh(AVERAGE_QUADRATURE_NODES);
    let bare = PotentialParams {
        beta: 0.0,
        ..config.potential_params()
    };
    let field = config.potential_params();
    let h = config.potential_step;
    let n_r = (config.grid.r_max / h).floor() as usize;
    let n_rho = (config.grid.rho_max / h).floor() as usize;
    let mut s = String::from("R,rho,v_avg,v_avg_field\n");
    for i in 1..=n_r {
        let r = i as f64 * h;
        for j in 1..=n_rho {
            let rho = j as f64 * h;
            let a = averaged_potential(r, rho, &bare, &quad)?;
            let b = averaged_potential(r, rho, &field, &quad)?;
            let _ = writeln!(s, "{},{},{},{}", num(r), num(rho), num(a), num(b));
        }
    }
    Ok(s)
}

pub fn cmd_potential(config: &RunConfig, out: Option<&Path>) -> Result<PathBuf> {
    let base = out.unwrap_or(&config.output_dir);
    fs::create_dir_all(base)?;
    let path = base.join("potential.csv");
    fs::write(&path, potential_csv(config)?)?;
    Ok(path)
}

pub fn slice_csv(spectrum: &Spectrum, grid: &Grid, index: usize, theta: f64) -> Result<String> {
    let slice = state_slice(spectrum, grid, index, theta)?;
    let mut s = String::new();
    let _ = writeln!(s, "# state={index},theta={}", num(slice.theta_node));
    s.push_str("R,rho,abs_psi\n");
    for i_r in 0..grid.n_r() {
        for i_rho in 0..grid.n_rho() {
            let _ = writeln!(
                s,
                "{},{},{}",
                num(grid.r_nodes[i_r]),
                num(grid.rho_nodes[i_rho]),
                num(slice.at(i_r, i_rho))
            );
        }
    }
    Ok(s)
}

pub fn cmd_slice(dir: &Path, index: GoalSelector, theta: f64) -> Result<PathBuf> {
    let (store, grid) = open_store(dir)?;
    let index = match index {
        GoalSelector::Auto => top_collision_state(&store.spectrum, &grid)?,
        GoalSelector::Index(i) => i,
    };
    let csv = slice_csv(&store.spectrum, &grid, index, theta)?;
    let path = dir.join(format!("slice-{index}.csv"));
    fs::write(&path, csv)?;
    Ok(path)
}

/// `key=value` lines describing the unit conversions of `config`.
pub fn units_report(config: &RunConfig, tesla: Option<f64>) -> String {
    let s = compute_scales(&config.particles);
    let mut out = String::new();
    let _ = writeln!(out, "g2_over_z_per_m={}", num(s.g2_over_z));
    let _ = writeln!(out, "length_unit_m={}", num(s.length_unit));
    let _ = writeln!(out, "energy_unit_ev={}", num(s.energy_unit));
    let _ = writeln!(out, "time_unit_s={}", num(s.time_unit));
    let _ = writeln!(out, "mu={}", num(s.mu));
    let _ = writeln!(out, "wavelength_numerator_m={}", num(s.wavelength_numerator));
    let _ = writeln!(out, "heavy_kinetic_coeff={}", num(config.effective_heavy_coeff()));
    if let Some(b) = tesla {
        let _ = writeln!(out, "beta_for_{}_tesla={}", num(b), num(s.beta_from_tesla(b, config.particles.z)));
    }
    out
}
