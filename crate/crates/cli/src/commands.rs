use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use kfield::bridge::{self, NegativeControlReport, PropositionReport};
use kfield::config::{System, SystemFile};
use kfield::fieldsolve::{self, ConvergenceRow, StringConfig};
use kfield::geometry::{lie_bracket, DarbouxChart, KVectorField};
use kfield::io::write_atomic;
use kfield::kcontact::{self, contact_axiom_check, darboux_contact_forms, KContactSystem};
use kfield::ksymplectic::{self, darboux_two_forms, nondegeneracy_check, KSymplecticSystem};
use kfield::probe::probe_points;
use kfield::{Error, GaugeSpec, Result};
use serde::Serialize;

use crate::{Cli, Command};

const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;
const REEB_TOL: f64 = 1e-12;
const DEFAULT_LINF_TOL: f64 = 1e-3;

/// Runs a command; `Ok(false)` means a check ran and failed.
pub fn run(cli: &Cli) -> Result<bool> {
    if let Some(tol) = cli.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("--tol must be positive, got {tol}")));
        }
    }
    match &cli.command {
        Command::Kvf { system, gauge } => kvf(&load(system, gauge.as_deref())?),
        Command::Check {
            system,
            contactify,
            gauge,
        } => check(cli, load(system, gauge.as_deref())?, *contactify),
        Command::Bridge { system, negative, gauge } => bridge_cmd(cli, &load(system, gauge.as_deref())?, *negative),
        Command::Simulate {
            config,
            reference,
            convergence,
        } => simulate(cli, config, *reference, *convergence),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load(system: &Path, gauge: Option<&Path>) -> Result<SystemFile> {
    let source = read(system)?;
    let gauge = gauge.map(read).transpose()?;
    SystemFile::parse_with_gauge(&source, gauge.as_deref())
}

fn field_of(file: &SystemFile) -> Result<KVectorField> {
    match &file.system {
        System::Symplectic(s) => ksymplectic::hamiltonian_kvf(s, &file.gauge),
        System::Contact(s) => kcontact::hamiltonian_kvf_contact(s, &file.gauge),
    }
}

fn kvf(file: &SystemFile) -> Result<bool> {
    let x = field_of(file)?;
    let mut out = String::new();
    for a in 0..x.k() {
        for (c, name) in x.chart().names().iter().enumerate() {
            writeln!(out, "X{}[{name}] = {}", a + 1, x.component(a, c)).expect("write to string");
        }
    }
    print!("{out}");
    Ok(true)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn describe(chart: &DarbouxChart) -> String {
    format!("n = {}, k = {}, chart {chart}", chart.n(), chart.k())
}

fn save_report<T: Serialize>(cli: &Cli, name: &str, report: &T) -> Result<()> {
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)?;
        let text = toml::to_string(report).map_err(|e| Error::Io(e.to_string()))?;
        let path = dir.join(name);
        write_atomic(&path, text.as_bytes())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct SymplecticCheck {
    kind: &'static str,
    hamiltonian: String,
    gauge: String,
    seed: u64,
    probes: usize,
    rank: usize,
    dim: usize,
    nondegenerate: bool,
    tolerance: f64,
    max_hdw_residual: f64,
    pass: bool,
}

#[derive(Serialize)]
struct ContactCheck {
    kind: &'static str,
    hamiltonian: String,
    gauge: String,
    seed: u64,
    probes: usize,
    ker_eta_corank: usize,
    ker_d_eta_rank: usize,
    intersection_dim: usize,
    axioms: bool,
    reeb_eta_defect: f64,
    reeb_d_eta_defect: f64,
    reeb_brackets_vanish: bool,
    reeb: bool,
    tolerance: f64,
    max_covector_residual: f64,
    max_scalar_residual: f64,
    pass: bool,
}

fn check(cli: &Cli, file: SystemFile, contactify: bool) -> Result<bool> {
    let tol = cli.tol.unwrap_or(DEFAULT_RESIDUAL_TOL);
    match file.system {
        System::Symplectic(s) if contactify => {
            let pair = bridge::contactify(&s)?;
            check_contact(cli, pair.target(), &file.gauge, file.probe_range, tol)
        }
        System::Symplectic(s) => check_symplectic(cli, &s, &file.gauge, file.probe_range, tol),
        System::Contact(_) if contactify => Err(Error::InvalidConfig(
            "--contactify needs a k-symplectic system".into(),
        )),
        System::Contact(s) => check_contact(cli, &s, &file.gauge, file.probe_range, tol),
    }
}

fn check_symplectic(cli: &Cli, sys: &KSymplecticSystem, gauge: &GaugeSpec, range: (f64, f64), tol: f64) -> Result<bool> {
    let chart = sys.chart();
    let nd = nondegeneracy_check(&darboux_two_forms(chart)?);
    let x = ksymplectic::hamiltonian_kvf(sys, gauge)?;
    let mut worst = 0.0_f64;
    for p in probe_points(chart.dim(), cli.probes, cli.seed, range) {
        worst = worst.max(ksymplectic::hdw_residual(sys, &x, &p)?.max_norm);
    }
    let hdw = worst <= tol;
    let pass = nd.nondegenerate && hdw;
    println!("k-symplectic system: {}", describe(chart));
    println!("h = {}", sys.hamiltonian());
    println!("nondegeneracy: rank {} of {}  {}", nd.rank, nd.dim, verdict(nd.nondegenerate));
    println!(
        "hdw residual: max {worst:.3e} over {} probes (tol {tol:e})  {}",
        cli.probes,
        verdict(hdw)
    );
    println!("result: {}", verdict(pass));
    save_report(
        cli,
        "check.toml",
        &SymplecticCheck {
            kind: "k-symplectic",
            hamiltonian: sys.hamiltonian().to_string(),
            gauge: gauge.to_string(),
            seed: cli.seed,
            probes: cli.probes,
            rank: nd.rank,
            dim: nd.dim,
            nondegenerate: nd.nondegenerate,
            tolerance: tol,
            max_hdw_residual: worst,
            pass,
        },
    )?;
    Ok(pass)
}

fn check_contact(cli: &Cli, sys: &KContactSystem, gauge: &GaugeSpec, range: (f64, f64), tol: f64) -> Result<bool> {
    let chart = sys.chart();
    let x = kcontact::hamiltonian_kvf_contact(sys, gauge)?;
    let reeb = kcontact::reeb_fields(sys)?;
    let mut axioms = true;
    let mut triple = (0, 0, 0);
    let (mut eta_defect, mut d_eta_defect) = (0.0_f64, 0.0_f64);
    let (mut covector, mut scalar) = (0.0_f64, 0.0_f64);
    for (i, p) in probe_points(chart.dim(), cli.probes, cli.seed, range).iter().enumerate() {
        let forms = darboux_contact_forms(chart, p)?;
        let report = contact_axiom_check(&forms);
        if i == 0 || !report.pass {
            triple = report.triple();
        }
        axioms &= report.pass;
        let d = kcontact::reeb_defect(&forms, &reeb, p)?;
        eta_defect = eta_defect.max(d.eta);
        d_eta_defect = d_eta_defect.max(d.d_eta);
        let r = kcontact::contact_hdw_residual(sys, &x, p)?;
        covector = covector.max(r.covector.max_norm);
        scalar = scalar.max(r.scalar.abs());
    }
    let mut brackets = true;
    for a in 0..reeb.k() {
        for b in a + 1..reeb.k() {
            brackets &= lie_bracket(&reeb.field(a), &reeb.field(b))?
                .components()
                .iter()
                .all(|c| c.is_zero());
        }
    }
    let reeb_ok = eta_defect <= REEB_TOL && d_eta_defect <= REEB_TOL && brackets;
    let hdw = covector <= tol && scalar <= tol;
    let pass = axioms && reeb_ok && hdw;
    println!("k-contact system: {}", describe(chart));
    println!("h = {}", sys.hamiltonian());
    println!(
        "contact axioms: (corank, rank, intersection) = ({}, {}, {}) over {} probes  {}",
        triple.0,
        triple.1,
        triple.2,
        cli.probes,
        verdict(axioms)
    );
    println!(
        "reeb fields: eta defect {eta_defect:.3e}, d eta defect {d_eta_defect:.3e}, brackets {}  {}",
        if brackets { "vanish" } else { "nonzero" },
        verdict(reeb_ok)
    );
    println!(
        "hdw residual: covector {covector:.3e}, scalar {scalar:.3e} (tol {tol:e})  {}",
        verdict(hdw)
    );
    println!("result: {}", verdict(pass));
    save_report(
        cli,
        "check.toml",
        &ContactCheck {
            kind: "k-contact",
            hamiltonian: sys.hamiltonian().to_string(),
            gauge: gauge.to_string(),
            seed: cli.seed,
            probes: cli.probes,
            ker_eta_corank: triple.0,
            ker_d_eta_rank: triple.1,
            intersection_dim: triple.2,
            axioms,
            reeb_eta_defect: eta_defect,
            reeb_d_eta_defect: d_eta_defect,
            reeb_brackets_vanish: brackets,
            reeb: reeb_ok,
            tolerance: tol,
            max_covector_residual: covector,
            max_scalar_residual: scalar,
            pass,
        },
    )?;
    Ok(pass)
}

#[derive(Serialize)]
struct BridgeReport {
    seed: u64,
    proposition: PropositionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    negative_control: Option<NegativeControlReport>,
}

fn bridge_cmd(cli: &Cli, file: &SystemFile, negative: Option<f64>) -> Result<bool> {
    let sys = match &file.system {
        System::Symplectic(s) => s,
        System::Contact(_) => {
            return Err(Error::InvalidConfig("bridge needs a k-symplectic system".into()));
        }
    };
    let tol = cli.tol.unwrap_or(bridge::PROPOSITION_TOLERANCE);
    let probes = probe_points(sys.chart().dim(), cli.probes, cli.seed, file.probe_range);
    let report = bridge::verify_proposition(sys, &file.gauge, &probes, tol)?;
    println!("k-symplectic system: {}", describe(sys.chart()));
    println!("h = {}", report.hamiltonian);
    println!("gauge: {}", report.gauge);
    println!(
        "projected field residual: max {:.3e} over {} probes (tol {tol:e})  {}",
        report.max_residual,
        probes.len(),
        verdict(report.pass)
    );
    let negative_control = match negative {
        Some(gamma) => {
            let n = bridge::negative_control(sys, gamma, &probes)?;
            println!("damped lift: h_M = {}", n.hamiltonian);
            println!("  contact residual of canonical field: {:.3e}", n.contact_residual);
            match &n.projectability.witness {
                None => println!("  projectable: yes"),
                Some(w) => println!(
                    "  projectable: no (NotProjectable: X{}[{}] depends on {}, derivative {:.3e})",
                    w.alpha + 1,
                    w.component,
                    w.z,
                    w.derivative
                ),
            }
            if let Some(r) = n.projected_symplectic_residual {
                println!("  projected field against the undamped equations: residual {r:.3e}");
            }
            Some(n)
        }
        None => None,
    };
    println!("result: {}", verdict(report.pass));
    let pass = report.pass;
    save_report(
        cli,
        "bridge.toml",
        &BridgeReport {
            seed: cli.seed,
            proposition: report,
            negative_control,
        },
    )?;
    Ok(pass)
}

fn simulate(cli: &Cli, config: &Path, reference: Option<u32>, convergence: Option<usize>) -> Result<bool> {
    let cfg = StringConfig::from_toml(&read(config)?)?;
    let sim = fieldsolve::simulate_string(&cfg)?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out)?;
    println!(
        "string: rho = {}, tau = {}, L = {}, N = {}, T = {}",
        cfg.rho, cfg.tau, cfg.length, cfg.intervals, cfg.final_time
    );
    println!("steps: {} with dt = {:e} (CFL {:.4})", sim.steps(), sim.dt, sim.cfl);
    let [r_t, r_x, r_div] = sim.hdw_residuals;
    println!("hdw residuals: u_t - pt/rho {r_t:.3e}, u_x + px/tau {r_x:.3e}, pt_t + px_x {r_div:.3e}");
    println!("energy drift: {:.3e}", sim.energy_drift());
    println!(
        "wave equation residual: {:.3e}",
        fieldsolve::wave_equation_residual(&sim, &cfg)
    );
    let section = out.join("section.csv");
    let diagnostics = out.join("diagnostics.csv");
    sim.grid.save_csv(&section)?;
    sim.save_diagnostics_csv(&diagnostics)?;
    println!("wrote {} and {}", section.display(), diagnostics.display());

    let mut pass = true;
    if let Some(mode) = reference {
        let wave = fieldsolve::analytic_standing_wave(cfg.rho, cfg.tau, mode, cfg.length)?;
        let err = fieldsolve::linf_error(&sim.grid, &wave)?;
        let tol = cli.tol.unwrap_or(DEFAULT_LINF_TOL);
        pass = err <= tol;
        println!(
            "final Linf error vs mode {mode}: {err:.3e}, Linf {} {tol:e}",
            if pass { "<=" } else { ">" }
        );
    }
    if let Some(levels) = convergence {
        let wave = fieldsolve::analytic_standing_wave(cfg.rho, cfg.tau, reference.unwrap_or(1), cfg.length)?;
        let rows = fieldsolve::convergence_study(&cfg, levels, &wave)?;
        print_convergence(&rows);
        let mut buf = Vec::new();
        fieldsolve::write_convergence_csv(&rows, &mut buf)?;
        let path = out.join("convergence.csv");
        write_atomic(&path, &buf)?;
        println!("wrote {}", path.display());
    }
    Ok(pass)
}

fn print_convergence(rows: &[ConvergenceRow]) {
    println!("{:>6}  {:>10}  {:>10}  {:>10}  {:>6}", "N", "dx", "linf", "final", "order");
    for r in rows {
        let order = r.order.map_or_else(|| "-".to_string(), |o| format!("{o:.3}"));
        println!(
            "{:>6}  {:>10.3e}  {:>10.3e}  {:>10.3e}  {:>6}",
            r.intervals, r.dx, r.linf, r.final_linf, order
        );
    }
}
