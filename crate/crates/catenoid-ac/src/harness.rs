//! Experiment orchestration: resolved run configurations, full PDE runs with
//! interface tracking against the Toda prediction, and deterministic CSV
//! emission.
//!
//! Output files carry 17 significant digits, '.' decimals, LF line endings,
//! and no timestamps, so identical configurations produce bit-identical
//! files. A run that fails mid-flight still flushes the rows gathered so
//! far, terminated by a `# failure: ...` marker line.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{r_of_y, y_of_r, CatenoidParams};
use crate::pde_solver::{evolve, initialize_from_ansatz, FarFieldBc, Field, Grid1D, SolverConfig};
use crate::profiles::{ansatz_z, LayerState, SQRT_2};
use crate::projection::error_bound_ratio;
use crate::reduced_dynamics::{
    b_constants, beta_cached, eta_envelope_check, gamma_constants, solve_eta, solve_toda, Rho0,
    SolveOptions, TodaTrajectory,
};

/// Far-field boundary flavor named in run configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FarFieldKind {
    /// Dirichlet at the parity-determined constant.
    FixedConstant,
    /// Dirichlet tracking the ansatz value at the boundary radius.
    AnsatzTracking,
}

impl FarFieldKind {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "fixed-constant" => Ok(Self::FixedConstant),
            "ansatz-tracking" => Ok(Self::AnsatzTracking),
            other => Err(Error::Config(format!(
                "far_field_bc must be 'fixed-constant' or 'ansatz-tracking', got '{other}'"
            ))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::FixedConstant => "fixed-constant",
            Self::AnsatzTracking => "ansatz-tracking",
        }
    }
}

/// Full description of one experiment. `y_max <= 0` and `dt <= 0` mean
/// "resolve automatically": the boundary radius is placed 15 units past the
/// outermost initial layer and the step is `min(0.2, h)`.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Ambient dimension N.
    pub n_dim: u32,
    pub k: usize,
    pub t0: f64,
    pub t_end: f64,
    pub y_max: f64,
    pub n: usize,
    pub dt: f64,
    pub theta: f64,
    pub sigma: f64,
    pub snapshot_every: usize,
    pub far_field_bc: FarFieldKind,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_dim: 2,
            k: 2,
            t0: -1e4,
            t_end: -9e3,
            y_max: 0.0,
            n: 4001,
            dt: 0.0,
            theta: 0.5,
            sigma: 1.0,
            snapshot_every: 500,
            far_field_bc: FarFieldKind::FixedConstant,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Parse the flat `key=value` format. Keys are exactly the field names
    /// (with the dimension spelled `N`); unknown keys are errors. Blank
    /// lines and `#` comments are allowed.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected key=value, got '{line}'",
                    lineno + 1
                ))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| {
                Error::Config(format!(
                    "line {}: {key} must be {what}, got '{value}'",
                    lineno + 1
                ))
            };
            match key {
                "N" => cfg.n_dim = value.parse().map_err(|_| bad("an integer"))?,
                "k" => cfg.k = value.parse().map_err(|_| bad("an integer"))?,
                "t0" => cfg.t0 = value.parse().map_err(|_| bad("a number"))?,
                "t_end" => cfg.t_end = value.parse().map_err(|_| bad("a number"))?,
                "y_max" => cfg.y_max = value.parse().map_err(|_| bad("a number"))?,
                "n" => cfg.n = value.parse().map_err(|_| bad("an integer"))?,
                "dt" => cfg.dt = value.parse().map_err(|_| bad("a number"))?,
                "theta" => cfg.theta = value.parse().map_err(|_| bad("a number"))?,
                "sigma" => cfg.sigma = value.parse().map_err(|_| bad("a number"))?,
                "snapshot_every" => {
                    cfg.snapshot_every = value.parse().map_err(|_| bad("an integer"))?
                }
                "far_field_bc" => cfg.far_field_bc = FarFieldKind::parse(value)?,
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key '{other}'",
                        lineno + 1
                    )))
                }
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("need k >= 1 layers".into()));
        }
        if !(self.t0 < self.t_end && self.t_end <= -2.0) {
            return Err(Error::Config(format!(
                "need t0 < t_end <= -2, got t0 = {}, t_end = {}",
                self.t0, self.t_end
            )));
        }
        if self.snapshot_every == 0 {
            return Err(Error::Config("snapshot_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Interface radii extracted at each snapshot, against the Toda prediction.
#[derive(Debug, Clone)]
pub struct InterfaceTrack {
    pub times: Vec<f64>,
    /// One row of k extracted radii per snapshot.
    pub positions: Vec<Vec<f64>>,
    pub toda_prediction: Vec<Vec<f64>>,
    pub deviation: Vec<Vec<f64>>,
}

impl InterfaceTrack {
    pub fn max_deviation(&self) -> f64 {
        self.deviation
            .iter()
            .flatten()
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

/// Locate the zero crossings of the field, reported as radii.
///
/// Each sign change between consecutive nodes is resolved by linear
/// interpolation in r(y); exact zeros count as crossings at the node. Any
/// count other than `expected_k` is a topology error (layer collision or
/// boundary contamination).
pub fn extract_interfaces(
    field: &Field,
    grid: &Grid1D,
    p: &CatenoidParams,
    expected_k: usize,
) -> Result<Vec<f64>> {
    let v = &field.values;
    if v.len() != grid.n() {
        return Err(Error::Argument(format!(
            "field has {} values on a grid of {} nodes",
            v.len(),
            grid.n()
        )));
    }
    let mut crossings = Vec::new();
    let mut i = 0;
    while i < v.len() {
        if v[i] == 0.0 {
            crossings.push(r_of_y(grid.ys()[i], p)?);
            i += 1;
            continue;
        }
        if i + 1 < v.len() && v[i] * v[i + 1] < 0.0 {
            let r_lo = r_of_y(grid.ys()[i], p)?;
            let r_hi = r_of_y(grid.ys()[i + 1], p)?;
            crossings.push(r_lo + (r_hi - r_lo) * v[i] / (v[i] - v[i + 1]));
        }
        i += 1;
    }
    if crossings.len() != expected_k {
        return Err(Error::Topology {
            expected: expected_k,
            found: crossings.len(),
        });
    }
    Ok(crossings)
}

/// A header plus rows of numbers, the unit of CSV emission.
#[derive(Debug, Clone)]
pub struct CsvSeries {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn render_csv(series: &CsvSeries, failure: Option<&str>) -> String {
    let mut out = String::new();
    out.push_str(&series.header.join(","));
    out.push('\n');
    for row in &series.rows {
        let line: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    if let Some(msg) = failure {
        let _ = writeln!(out, "# failure: {}", msg.replace('\n', " "));
    }
    out
}

/// Write a series as CSV; overwrites any existing file.
pub fn emit_csv(series: &CsvSeries, path: &Path) -> Result<()> {
    fs::write(path, render_csv(series, None))?;
    Ok(())
}

fn emit_csv_with_failure(series: &CsvSeries, path: &Path, failure: &str) -> Result<()> {
    fs::write(path, render_csv(series, Some(failure)))?;
    Ok(())
}

/// Everything `run_experiment` resolved and produced, besides the files.
#[derive(Debug)]
pub struct ExperimentReport {
    pub track: InterfaceTrack,
    pub resolved_y_max: f64,
    pub resolved_dt: f64,
    pub boundary_tail_budget: f64,
}

struct ManifestData {
    lines: Vec<(String, String)>,
}

impl ManifestData {
    fn new() -> Self {
        Self { lines: Vec::new() }
    }

    fn push_num(&mut self, key: &str, v: f64) {
        self.lines.push((key.to_string(), format_value(v)));
    }

    fn push_str(&mut self, key: &str, v: &str) {
        self.lines.push((key.to_string(), v.to_string()));
    }

    fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

/// Run the full pipeline: gap profile -> leading-order layers -> Toda flow
/// -> ansatz initial data -> PDE evolution with interface extraction at
/// every snapshot -> CSV emission.
///
/// Writes `track.csv`, `snapshots.csv`, and `manifest.txt` into the output
/// directory. Configuration problems surface before any file is touched.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let p = CatenoidParams::new(cfg.n_dim)?;
    let beta = beta_cached()?;
    let opts = SolveOptions::default();

    let rho0 = Rho0::for_layers(cfg.k, p, (cfg.t0 * 1.05).min(-2.0), &opts)?;
    let init = rho0.eval(cfg.t0)?;
    let layers0 = LayerState::new(init.clone())?;
    let rho_outer = *init.last().unwrap();

    let y_max = if cfg.y_max > 0.0 {
        cfg.y_max
    } else {
        y_of_r(rho_outer + 15.0, &p)?
    };
    let grid = Grid1D::new(y_max, cfg.n)?;
    let dt = if cfg.dt > 0.0 {
        cfg.dt
    } else {
        grid.h().min(0.2)
    };
    let field = initialize_from_ansatz(&grid, cfg.t0, &layers0, &p)?;
    let toda = Arc::new(solve_toda(cfg.t0, cfg.t_end, &init, beta, &rho0, &opts)?);

    let far_field = match cfg.far_field_bc {
        FarFieldKind::FixedConstant => FarFieldBc::FixedConstant(layers0.far_field_value()),
        FarFieldKind::AnsatzTracking => {
            let toda = Arc::clone(&toda);
            let r_boundary = r_of_y(grid.y_max(), &p)?;
            FarFieldBc::Tracking(Box::new(move |t| {
                let layers = LayerState::new(toda.rho_at(t)?)?;
                Ok(ansatz_z(r_boundary, &layers))
            }))
        }
    };
    let solver_cfg = SolverConfig {
        theta: cfg.theta,
        dt,
        far_field,
        reaction_on: true,
    };

    // Everything below may produce partial output; the directory is created
    // only once the configuration is known to be runnable.
    fs::create_dir_all(&cfg.output_dir)?;

    let mut track = InterfaceTrack {
        times: Vec::new(),
        positions: Vec::new(),
        toda_prediction: Vec::new(),
        deviation: Vec::new(),
    };
    let mut snapshot_rows: Vec<Vec<f64>> = Vec::new();
    let result = evolve(
        field,
        cfg.t_end,
        &solver_cfg,
        &grid,
        &p,
        cfg.snapshot_every,
        |f| {
            let pos = extract_interfaces(f, &grid, &p, cfg.k)?;
            let pred = toda.rho_at(f.t)?;
            let dev: Vec<f64> = pos.iter().zip(&pred).map(|(a, b)| a - b).collect();
            track.times.push(f.t);
            track.positions.push(pos);
            track.toda_prediction.push(pred);
            track.deviation.push(dev);
            for (i, &y) in grid.ys().iter().enumerate() {
                snapshot_rows.push(vec![f.t, y, f.values[i]]);
            }
            Ok(())
        },
    );

    let track_series = track_to_series(&track, cfg.k);
    let snapshot_series = CsvSeries {
        header: vec!["t".into(), "y".into(), "v".into()],
        rows: snapshot_rows,
    };

    let mut manifest = ManifestData::new();
    manifest.push_str("N", &cfg.n_dim.to_string());
    manifest.push_str("k", &cfg.k.to_string());
    manifest.push_num("t0", cfg.t0);
    manifest.push_num("t_end", cfg.t_end);
    manifest.push_num("y_max", y_max);
    manifest.push_str("n", &cfg.n.to_string());
    manifest.push_num("h", grid.h());
    manifest.push_num("dt", dt);
    manifest.push_num("theta", cfg.theta);
    manifest.push_num("sigma", cfg.sigma);
    manifest.push_str("snapshot_every", &cfg.snapshot_every.to_string());
    manifest.push_str("far_field_bc", cfg.far_field_bc.name());
    manifest.push_num("beta", beta);
    if cfg.k >= 2 {
        for (l, b) in b_constants(cfg.k, beta)?.iter().enumerate() {
            manifest.push_num(&format!("b_{}", l + 1), *b);
        }
    }
    for (j, g) in rho0.gamma().iter().enumerate() {
        manifest.push_num(&format!("gamma_{}", j + 1), *g);
    }
    let envelope = eta_envelope_check(rho0.eta())?;
    manifest.push_num("eta_c_low", envelope.c_low);
    manifest.push_num("eta_c_high", envelope.c_high);
    let clearance = r_of_y(grid.y_max(), &p)? - rho_outer;
    let boundary_tail_budget = 2.0 * (-SQRT_2 * clearance).exp();
    manifest.push_num("boundary_clearance", clearance);
    manifest.push_num("boundary_tail_budget", boundary_tail_budget);

    match result {
        Ok(_) => {
            emit_csv(&track_series, &cfg.output_dir.join("track.csv"))?;
            emit_csv(&snapshot_series, &cfg.output_dir.join("snapshots.csv"))?;
            manifest.push_str("status", "complete");
            fs::write(cfg.output_dir.join("manifest.txt"), manifest.render())?;
            Ok(ExperimentReport {
                track,
                resolved_y_max: y_max,
                resolved_dt: dt,
                boundary_tail_budget,
            })
        }
        Err(e) => {
            let msg = e.to_string();
            emit_csv_with_failure(&track_series, &cfg.output_dir.join("track.csv"), &msg)?;
            emit_csv_with_failure(
                &snapshot_series,
                &cfg.output_dir.join("snapshots.csv"),
                &msg,
            )?;
            manifest.push_str("status", &format!("failed: {msg}"));
            fs::write(cfg.output_dir.join("manifest.txt"), manifest.render())?;
            Err(e)
        }
    }
}

fn track_to_series(track: &InterfaceTrack, k: usize) -> CsvSeries {
    let mut header = vec!["t".to_string()];
    for j in 1..=k {
        header.push(format!("pos_{j}"));
    }
    for j in 1..=k {
        header.push(format!("toda_{j}"));
    }
    let rows = track
        .times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut row = Vec::with_capacity(1 + 2 * k);
            row.push(t);
            row.extend(&track.positions[i]);
            row.extend(&track.toda_prediction[i]);
            row
        })
        .collect();
    CsvSeries { header, rows }
}

/// Labeled `name,value` lines for the constants of a k-layer construction.
pub fn constants_lines(k: usize, n_dim: u32) -> Result<Vec<String>> {
    if k == 0 {
        return Err(Error::Argument("need k >= 1".into()));
    }
    CatenoidParams::new(n_dim)?;
    let beta = beta_cached()?;
    let mut lines = vec![format!("beta,{}", format_value(beta))];
    let gamma = if k >= 2 {
        let b = b_constants(k, beta)?;
        for (l, v) in b.iter().enumerate() {
            lines.push(format!("b_{},{}", l + 1, format_value(*v)));
        }
        gamma_constants(k, &b)?
    } else {
        vec![0.0]
    };
    for (j, v) in gamma.iter().enumerate() {
        lines.push(format!("gamma_{},{}", j + 1, format_value(*v)));
    }
    Ok(lines)
}

/// Integrate the gap profile and write `t,eta,eta_prime`, one row per
/// accepted step.
pub fn run_eta_csv(t_end: f64, path: &Path) -> Result<()> {
    let sol = solve_eta(t_end, &SolveOptions::default())?;
    let rows = sol
        .times()
        .iter()
        .zip(sol.eta().iter().zip(sol.eta_prime()))
        .map(|(&t, (&e, &ep))| vec![t, e, ep])
        .collect();
    emit_csv(
        &CsvSeries {
            header: vec!["t".into(), "eta".into(), "eta_prime".into()],
            rows,
        },
        path,
    )
}

/// Run the Toda flow from the construction's layer positions and write
/// `t,rho_1..rho_k,h_1..h_k`, one row per accepted step.
pub fn run_toda_csv(
    k: usize,
    n_dim: u32,
    t0: f64,
    t_end: f64,
    path: &Path,
) -> Result<TodaTrajectory> {
    let p = CatenoidParams::new(n_dim)?;
    let beta = beta_cached()?;
    let opts = SolveOptions::default();
    let rho0 = Rho0::for_layers(k, p, (t0 * 1.05).min(-2.0), &opts)?;
    let init = rho0.eval(t0)?;
    let traj = solve_toda(t0, t_end, &init, beta, &rho0, &opts)?;

    let mut header = vec!["t".to_string()];
    for j in 1..=k {
        header.push(format!("rho_{j}"));
    }
    for j in 1..=k {
        header.push(format!("h_{j}"));
    }
    let rows = traj
        .times()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut row = Vec::with_capacity(1 + 2 * k);
            row.push(t);
            row.extend(&traj.rho_samples()[i]);
            row.extend(&traj.h_samples()[i]);
            row
        })
        .collect();
    emit_csv(&CsvSeries { header, rows }, path)?;
    Ok(traj)
}

/// Evaluate the weighted-error diagnostic at the given times and write
/// `t,sup_E_over_phi,ratio`.
pub fn run_error_check(k: usize, n_dim: u32, sigma: f64, ts: &[f64], path: &Path) -> Result<()> {
    let p = CatenoidParams::new(n_dim)?;
    let samples = error_bound_ratio(ts, sigma, k, &p)?;
    let rows = samples
        .iter()
        .map(|s| vec![s.t, s.sup_e_over_phi, s.ratio])
        .collect();
    emit_csv(
        &CsvSeries {
            header: vec!["t".into(), "sup_E_over_phi".into(), "ratio".into()],
            rows,
        },
        path,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p2() -> CatenoidParams {
        CatenoidParams::new(2).unwrap()
    }

    fn ansatz_field(layers: &LayerState, grid: &Grid1D, p: &CatenoidParams) -> Field {
        Field {
            t: -100.0,
            values: grid
                .ys()
                .iter()
                .map(|&y| ansatz_z(r_of_y(y, p).unwrap(), layers))
                .collect(),
        }
    }

    #[test]
    fn interface_extraction_on_ansatz() {
        let p = p2();
        let grid = Grid1D::new(70.0, 3001).unwrap();

        let one = LayerState::new(vec![50.0]).unwrap();
        let pos = extract_interfaces(&ansatz_field(&one, &grid, &p), &grid, &p, 1).unwrap();
        assert!((pos[0] - 50.0).abs() <= grid.h());

        let two = LayerState::new(vec![10.0, 15.0]).unwrap();
        let pos2 = extract_interfaces(&ansatz_field(&two, &grid, &p), &grid, &p, 2).unwrap();
        assert_abs_diff_eq!(pos2[0], 10.0, epsilon = 1e-2);
        assert_abs_diff_eq!(pos2[1], 15.0, epsilon = 1e-2);
        assert!(pos2[0] < pos2[1]);
    }

    #[test]
    fn interface_extraction_topology_errors() {
        let p = p2();
        let grid = Grid1D::new(10.0, 101).unwrap();
        let constant = Field {
            t: -5.0,
            values: vec![0.7; grid.n()],
        };
        match extract_interfaces(&constant, &grid, &p, 1) {
            Err(Error::Topology { expected, found }) => {
                assert_eq!((expected, found), (1, 0));
            }
            other => panic!("expected topology error, got {other:?}"),
        }
    }

    #[test]
    fn config_parsing() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.n_dim, 2);
        assert_eq!(cfg.k, 2);
        assert_eq!(cfg.theta, 0.5);

        let cfg = RunConfig::parse(
            "# experiment\nN = 3\nk=1\nt0=-500\nt_end=-400\nn=2001\nfar_field_bc=ansatz-tracking\noutput_dir=/tmp/somewhere\n",
        )
        .unwrap();
        assert_eq!(cfg.n_dim, 3);
        assert_eq!(cfg.k, 1);
        assert_eq!(cfg.far_field_bc, FarFieldKind::AnsatzTracking);
        assert_eq!(cfg.output_dir, PathBuf::from("/tmp/somewhere"));

        assert!(matches!(
            RunConfig::parse("unknown_key=3"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            RunConfig::parse("theta=half"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            RunConfig::parse("just a line"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            RunConfig::parse("far_field_bc=periodic"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn csv_rendering() {
        let empty = CsvSeries {
            header: vec!["t".into(), "v".into()],
            rows: vec![],
        };
        assert_eq!(render_csv(&empty, None), "t,v\n");

        let series = CsvSeries {
            header: vec!["t".into(), "v".into()],
            rows: vec![vec![-1.5, 0.1], vec![-1.0, 2.0 / 3.0]],
        };
        let text = render_csv(&series, None);
        for (line, row) in text.lines().skip(1).zip(&series.rows) {
            for (field, &expected) in line.split(',').zip(row) {
                let parsed: f64 = field.parse().unwrap();
                assert_eq!(parsed, expected, "17 digits must round-trip exactly");
            }
        }
        let marked = render_csv(&series, Some("boom"));
        assert!(marked.ends_with("# failure: boom\n"));
    }

    #[test]
    fn ansatz_tracking_boundary_runs_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            n_dim: 2,
            k: 1,
            t0: -450.0,
            t_end: -430.0,
            n: 1501,
            snapshot_every: 300,
            far_field_bc: FarFieldKind::AnsatzTracking,
            output_dir: dir.path().join("tracking"),
            ..RunConfig::default()
        };
        let report = run_experiment(&cfg).unwrap();
        assert!(report.track.max_deviation() < 0.1);
        let manifest = fs::read_to_string(dir.path().join("tracking/manifest.txt")).unwrap();
        assert!(manifest.contains("far_field_bc=ansatz-tracking"));
    }

    #[test]
    fn degenerate_domain_is_rejected_before_output() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        let cfg = RunConfig {
            n_dim: 2,
            k: 1,
            t0: -500.0,
            t_end: -480.0,
            y_max: 12.0, // r(y_max) ~ 12, but the layer sits at ~31.6
            n: 501,
            output_dir: out.clone(),
            ..RunConfig::default()
        };
        let err = run_experiment(&cfg).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "got {err:?}");
        assert!(!out.exists(), "no output may be created on config errors");
    }

    #[test]
    fn small_experiment_end_to_end_and_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            n_dim: 2,
            k: 1,
            t0: -450.0,
            t_end: -430.0,
            n: 1501,
            snapshot_every: 200,
            output_dir: dir.path().join("a"),
            ..RunConfig::default()
        };
        let report = run_experiment(&cfg).unwrap();
        assert!(report.track.max_deviation() < 0.1);
        assert_eq!(report.track.positions[0].len(), 1);
        assert!(report.boundary_tail_budget < 1e-8);

        let track_a = fs::read(dir.path().join("a/track.csv")).unwrap();
        let manifest_a = fs::read_to_string(dir.path().join("a/manifest.txt")).unwrap();
        assert!(manifest_a.contains("status=complete"));
        assert!(manifest_a.contains("beta="));
        assert!(manifest_a.contains("boundary_tail_budget="));

        // Track columns: t + k positions + k predictions.
        let header = String::from_utf8(track_a.clone())
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string();
        assert_eq!(header.split(',').count(), 1 + 2 * cfg.k);

        let cfg_b = RunConfig {
            output_dir: dir.path().join("b"),
            ..cfg
        };
        run_experiment(&cfg_b).unwrap();
        let track_b = fs::read(dir.path().join("b/track.csv")).unwrap();
        assert_eq!(
            track_a, track_b,
            "identical configs must emit identical bytes"
        );
        assert_eq!(
            fs::read(dir.path().join("a/snapshots.csv")).unwrap(),
            fs::read(dir.path().join("b/snapshots.csv")).unwrap()
        );
    }

    #[test]
    fn failed_run_flushes_partial_output_with_marker() {
        // Eight nodes over y in [0, 400] cannot resolve two layers ten units
        // apart: extraction fails at the very first snapshot and the files
        // must still appear, terminated by the failure marker.
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("coarse");
        let cfg = RunConfig {
            n_dim: 2,
            k: 2,
            t0: -1e4,
            t_end: -9.99e3,
            y_max: 400.0,
            n: 8,
            snapshot_every: 100,
            output_dir: out.clone(),
            ..RunConfig::default()
        };
        let err = run_experiment(&cfg).unwrap_err();
        assert!(
            matches!(err, Error::Topology { expected: 2, .. }),
            "got {err:?}"
        );
        let track = fs::read_to_string(out.join("track.csv")).unwrap();
        assert!(track.starts_with("t,pos_1,pos_2,toda_1,toda_2\n"));
        assert!(track.trim_end().ends_with("interface crossings, found 0"));
        assert!(track.contains("# failure: "));
        let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
        assert!(manifest.contains("status=failed: "));
    }

    #[test]
    fn shared_types_are_send_and_sync() {
        // The concurrency contract: completed solver products and the weight
        // machinery can be shared across workers.
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<crate::reduced_dynamics::EtaSolution>();
        assert_send_sync::<crate::reduced_dynamics::Rho0>();
        assert_send_sync::<TodaTrajectory>();
        assert_send_sync::<crate::profiles::WeightSpec>();
        assert_send_sync::<crate::projection::GramMatrix>();
        assert_send_sync::<Field>();
        assert_send_sync::<Grid1D>();
        assert_send_sync::<InterfaceTrack>();
    }

    #[test]
    fn constants_lines_format() {
        let lines = constants_lines(2, 2).unwrap();
        assert!(lines[0].starts_with("beta,"));
        assert!(lines[1].starts_with("b_1,"));
        assert!(lines[2].starts_with("gamma_1,"));
        assert!(lines[3].starts_with("gamma_2,"));
        let beta: f64 = lines[0].split(',').nth(1).unwrap().parse().unwrap();
        assert_abs_diff_eq!(beta, 16.970562748477143, epsilon = 1e-10);

        let single = constants_lines(1, 3).unwrap();
        assert_eq!(single.len(), 2);
        assert!(single[1].starts_with("gamma_1,"));
    }
}
