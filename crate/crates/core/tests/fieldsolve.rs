use kfield::fieldsolve::{
    analytic_standing_wave, l2_error, simulate_string, space_time_linf_error, StringConfig, ZeroSolution,
};
use kfield::geometry::integral_section_residual;
use kfield::ksymplectic::hamiltonian_kvf;
use kfield::{Expr, GaugeSpec};
use std::f64::consts::PI;

fn unit_wave(n: usize, cfl: f64) -> StringConfig {
    StringConfig::standing_wave(1.0, 1.0, 1.0, 1, n, 1.0, cfl)
}

fn final_energy(cfg: &StringConfig) -> f64 {
    simulate_string(cfg).unwrap().diagnostics.last().unwrap().energy
}

#[test]
fn energy_error_is_fourth_order_in_dt() {
    // Successive differences cancel the unknown limit at fixed N.
    let energies: Vec<f64> = [0.9, 0.45, 0.225, 0.1125]
        .iter()
        .map(|&cfl| final_energy(&unit_wave(50, cfl)))
        .collect();
    let d: Vec<f64> = energies.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
    for pair in d.windows(2) {
        let order = (pair[0] / pair[1]).log2();
        assert!(order >= 4.0, "observed order {order}, differences {d:?}");
    }
}

#[test]
fn simulated_section_is_an_integral_section() {
    let residual = |n: usize| {
        let cfg = unit_wave(n, 0.5);
        let sim = simulate_string(&cfg).unwrap();
        let x = hamiltonian_kvf(&cfg.system(), &GaugeSpec::canonical()).unwrap();
        integral_section_residual(&x, &sim.grid).unwrap().max_over(&[0])
    };
    let coarse = residual(50);
    let fine = residual(100);
    let order = (coarse / fine).log2();
    assert!((1.7..=2.3).contains(&order), "order {order} ({coarse:e} -> {fine:e})");
}

#[test]
fn space_time_error_halves_twice_per_refinement() {
    let reference = analytic_standing_wave(1.0, 1.0, 1, 1.0).unwrap();
    let errors: Vec<f64> = [40, 80, 160]
        .iter()
        .map(|&n| space_time_linf_error(&simulate_string(&unit_wave(n, 0.5)).unwrap().grid, &reference).unwrap())
        .collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.2..=4.9).contains(&ratio), "{errors:?}");
    }
}

#[test]
fn superposition_of_modes() {
    let cfg = StringConfig {
        u0: Expr::parse(&format!("sin({PI}*x/L) + 0.5*sin({}*x/L)", 3.0 * PI)).unwrap(),
        ..unit_wave(200, 0.5)
    };
    let sim = simulate_string(&cfg).unwrap();
    let one = analytic_standing_wave(1.0, 1.0, 1, 1.0).unwrap();
    let three = analytic_standing_wave(1.0, 1.0, 3, 1.0).unwrap();
    let u = sim.final_state().u;
    for (i, &ui) in u.iter().enumerate() {
        let x = i as f64 * cfg.dx();
        let exact = one.at(1.0, x)[0] + 0.5 * three.at(1.0, x)[0];
        assert!((ui - exact).abs() < 1e-3, "x = {x}: {ui} vs {exact}");
    }
}

#[test]
fn zero_reference_measures_amplitude() {
    let sim = simulate_string(&unit_wave(100, 0.5)).unwrap();
    let norm = l2_error(&sim.grid, &ZeroSolution).unwrap();
    // ‖sin(πx)‖₂ on [0, 1] is 1/√2.
    assert!((norm - 0.5_f64.sqrt()).abs() < 1e-3, "{norm}");
}
