//! File contracts consumed by the plotting pipeline.

use std::fs;
use std::path::Path;

use mfg_habitat::scenario::{
    preset, preset_for, run_convergence, run_preset, run_sensitivity, run_solve, write_error, ScenarioConfig,
    SweepParameter, Table,
};
use mfg_habitat::{Error, Regime};
use serde_json::Value;

fn table(path: &Path) -> Table {
    Table::parse(&fs::read_to_string(path).unwrap()).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn small(mut cfg: ScenarioConfig) -> ScenarioConfig {
    cfg.grid.n_steps = 100;
    cfg
}

#[test]
fn power_equilibrium_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(preset("fig4-hetero").unwrap());
    let s = run_solve(&cfg, dir.path()).unwrap();
    let t = table(&dir.path().join("equilibrium.csv"));
    let expected = [
        "t",
        "zbar",
        "pi_star_1",
        "pi_star_2",
        "c_star_fraction_1",
        "c_star_fraction_2",
        "spending_rate_1",
        "spending_rate_2",
        "mean_wealth_1",
        "mean_wealth_2",
    ];
    assert_eq!(t.header, expected);
    assert_eq!(t.rows.len(), 101);
    let times = t.column("t").unwrap();
    assert_eq!((times[0], times[100]), (0.0, 1.0));
    assert!(times.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(t.column("zbar").unwrap()[0], cfg.market.z0);
    assert_eq!(t.column("mean_wealth_2").unwrap()[0], cfg.market.x0);
    // spending = fraction × mean wealth
    let (c, f, sp) = (
        t.column("c_star_fraction_1").unwrap(),
        t.column("mean_wealth_1").unwrap(),
        t.column("spending_rate_1").unwrap(),
    );
    for j in 0..c.len() {
        assert!((c[j] * f[j] - sp[j]).abs() <= 1e-12 * sp[j].abs().max(1.0));
    }

    let j = json(&dir.path().join("summary.json"));
    assert_eq!(j["regime"], "power");
    assert_eq!(j["xbar_T"].as_f64().unwrap(), s.xbar_t);
    assert!(j["residual"].as_f64().unwrap() < 1e-8);
    assert!(j["iterations"].as_u64().unwrap() >= 1);
    for key in ["c0", "c1", "c2", "e_const", "M_T"] {
        assert!(j["bounds"][key].as_f64().unwrap().is_finite(), "{key}");
    }
    assert_eq!(j["metadata"]["terminal_theta_override"], false);
}

#[test]
fn exponential_equilibrium_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(preset_for("fig4-hetero", Regime::Exponential).unwrap());
    run_solve(&cfg, dir.path()).unwrap();
    let t = table(&dir.path().join("equilibrium.csv"));
    assert_eq!(
        t.header,
        [
            "t",
            "zbar",
            "mean_consumption",
            "pi_star_1",
            "pi_star_2",
            "c_star_at_mean_wealth_1",
            "c_star_at_mean_wealth_2"
        ]
    );
    // the population mean consumption is the weighted class consumption at mean wealth
    let m = t.column("mean_consumption").unwrap();
    let (a, b) = (t.column("c_star_at_mean_wealth_1").unwrap(), t.column("c_star_at_mean_wealth_2").unwrap());
    for j in 0..m.len() {
        assert!((0.7 * a[j] + 0.3 * b[j] - m[j]).abs() < 1e-10);
    }
    let j = json(&dir.path().join("summary.json"));
    assert_eq!(j["regime"], "exponential");
    assert!(j.get("bounds").is_none());
}

#[test]
fn preset_sweep_stacks_series() {
    let dir = tempfile::tempdir().unwrap();
    run_preset(&small(preset("fig2-high").unwrap()), dir.path()).unwrap();
    let t = table(&dir.path().join("sweep.csv"));
    assert_eq!(t.header[0], "sweep_value");
    assert_eq!(t.header[1], "t");
    assert_eq!(t.header.last().unwrap(), "xbar_T");
    for col in ["zbar", "spending_rate_1", "c_star_fraction_1"] {
        assert!(t.column(col).is_some(), "{col}");
    }
    let v = t.column("sweep_value").unwrap();
    let mut distinct = v.clone();
    distinct.dedup();
    assert_eq!(distinct, vec![0.1, 0.3, 0.5]);
    assert_eq!(t.rows.len(), 3 * 101);
    for d in ["delta_0.1", "delta_0.3", "delta_0.5"] {
        assert!(dir.path().join(d).join("equilibrium.csv").is_file(), "{d}");
    }
    let j = json(&dir.path().join("summary.json"));
    assert_eq!(j["parameter"], "delta");
    assert_eq!(j["complete"], true);
    assert_eq!(j["legs"].as_array().unwrap().len(), 3);
}

#[test]
fn theta_sweeps_order_terminal_habit() {
    for (name, increasing) in [("fig3-low", true), ("fig3-high", false)] {
        let dir = tempfile::tempdir().unwrap();
        run_sensitivity(&preset(name).unwrap(), dir.path()).unwrap();
        let t = table(&dir.path().join("sweep.csv"));
        let (v, z, time) = (t.column("sweep_value").unwrap(), t.column("zbar").unwrap(), t.column("t").unwrap());
        let at_t: Vec<(f64, f64)> = (0..v.len()).filter(|&j| time[j] == 1.0).map(|j| (v[j], z[j])).collect();
        assert_eq!(at_t.iter().map(|p| p.0).collect::<Vec<_>>(), vec![0.5, 0.8, 1.0]);
        let ordered = at_t.windows(2).all(|w| if increasing { w[0].1 < w[1].1 } else { w[0].1 > w[1].1 });
        assert!(ordered, "{name}: {at_t:?}");
    }
}

#[test]
fn terminal_override_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    run_sensitivity(&small(preset("fig5-lowwealth").unwrap()), dir.path()).unwrap();
    let leg = json(&dir.path().join("terminal_theta_0").join("summary.json"));
    assert_eq!(leg["metadata"]["terminal_theta_override"], true);
    assert!(leg["metadata"]["note"].as_str().unwrap().contains("terminal"));
    let base = json(&dir.path().join("terminal_theta_1").join("summary.json"));
    assert_eq!(base["metadata"]["terminal_theta_override"], false);
}

#[test]
fn partial_sweep_keeps_successful_legs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(preset("fig1-high").unwrap());
    // only the p = 0.8 leg converges this fast
    cfg.solver.max_iter = 2;
    let err = run_sensitivity(&cfg, dir.path()).unwrap_err();
    assert!(matches!(err, Error::NonConvergence { .. } | Error::AuditFailed { .. }), "{err:?}");
    let j = json(&dir.path().join("summary.json"));
    assert_eq!(j["complete"], false);
    let status: Vec<&str> = j["legs"].as_array().unwrap().iter().map(|l| l["status"].as_str().unwrap()).collect();
    assert_eq!(status, ["failed", "failed", "failed", "ok"]);
    assert!(j["legs"][0]["error"].as_str().is_some());
    let t = table(&dir.path().join("sweep.csv"));
    assert!(t.column("sweep_value").unwrap().iter().all(|&v| v == 0.8));
}

#[test]
fn convergence_schema_and_determinism() {
    let mut cfg = small(preset_for("fig1-low", Regime::Exponential).unwrap()).with_value(SweepParameter::Risk, 0.3);
    cfg.simulation.n_values = vec![8, 32, 128];
    cfg.simulation.replications = 30;
    cfg.simulation.probe_replications = 8;
    cfg.simulation.seed = 17;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let s = run_convergence(&cfg, a.path()).unwrap();
    run_convergence(&cfg, b.path()).unwrap();
    let text = fs::read(a.path().join("convergence.csv")).unwrap();
    assert_eq!(text, fs::read(b.path().join("convergence.csv")).unwrap());
    assert_eq!(fs::read(a.path().join("summary.json")).unwrap(), fs::read(b.path().join("summary.json")).unwrap());
    let t = table(&a.path().join("convergence.csv"));
    assert_eq!(t.header, ["n", "sup_z_mse", "x_mse", "gap", "gap_benchmark_error", "epsilon_n"]);
    assert_eq!(t.column("n").unwrap(), vec![8.0, 32.0, 128.0]);
    assert!(t.column("sup_z_mse").unwrap().iter().all(|&v| v > 0.0));
    assert!(s.sup_z_mse.as_ref().unwrap().slope.is_finite());
    let j = json(&a.path().join("summary.json"));
    assert!(j["sup_z_mse"]["slope"].as_f64().unwrap().is_finite());
    assert!(j["sup_z_mse"]["slope_stderr"].as_f64().unwrap().is_finite());
    assert_eq!(j["gaps"].as_array().unwrap().len(), 3);
}

#[test]
fn power_convergence_has_gamma_column() {
    let mut cfg = small(preset("fig1-low").unwrap()).with_value(SweepParameter::Risk, 0.3);
    cfg.simulation.n_values = vec![8, 32, 128];
    cfg.simulation.replications = 30;
    cfg.simulation.probe_replications = 0;
    let dir = tempfile::tempdir().unwrap();
    run_convergence(&cfg, dir.path()).unwrap();
    let t = table(&dir.path().join("convergence.csv"));
    assert_eq!(t.header, ["n", "sup_z_mse", "x_mse", "x_gamma_mse", "epsilon_n"]);
}

#[test]
fn error_file_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = preset("fig1-low").unwrap();
    cfg.sweep = None;
    cfg.distribution.classes[0].risk = 1.2;
    let err = run_solve(&cfg, dir.path()).unwrap_err();
    write_error(dir.path(), &err).unwrap();
    let j = json(&dir.path().join("error.json"));
    assert_eq!(j["error"], "invalid_parameter");
    assert_eq!(j["field"], "distribution.classes[0].risk");
    assert!(!dir.path().join("equilibrium.csv").exists());
}
