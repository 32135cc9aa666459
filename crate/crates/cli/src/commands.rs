use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use semilinear::doubling::{doubling_point, parabolic_distance, FiniteMetricSpace, SpaceTimePoint, WeightFunction};
use semilinear::emden_fowler::{heteroclinic_subcritical, periodic_orbit, DelaunayProfile};
use semilinear::exponents::{
    classify_regime_with_tol, singular_amplitude, ExponentTable, ExtendedReal, ProblemParams, Regime,
    SingularSteadyState,
};
use semilinear::intersections::{radial_intersections, regime_intersection_census, tau_lambda};
use semilinear::parabolic::{
    evolve, sweep, BoundaryValue, EvolveOptions, HeatModel, ParabolicState, RadialMesh, SweepReport, SweepSchedule,
    DEFAULT_CEILING,
};
use semilinear::radial_ode::{
    integrate_regular, integrate_regular_default, rescale_profile, RadialFunction, ScaledProfile,
};
use semilinear::supersolution::{build_barrier, discrete_supersolution_residual, snapped_nodes, BarrierFamily};

use crate::config::{interpolate, read_profile_csv, Boundary, Initial, RunConfig};
use crate::output::{read_input, to_json, Failure, OutDir, Outcome, Table};

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Globals {
    pub tol: f64,
    pub critical_tol: f64,
    pub seed: u64,
    pub out: OutDir,
}

impl Globals {
    fn tol(&self) -> Outcome<f64> {
        if self.tol > 0.0 && self.tol < 1.0 {
            Ok(self.tol)
        } else {
            Err(Failure::Validation(format!(
                "--tol must lie in (0, 1), got {}",
                self.tol
            )))
        }
    }

    /// `(N, p)`, snapped to `p_S` when within the critical tolerance.
    fn params(&self, dim: u32, p: f64) -> Outcome<ProblemParams> {
        if !(self.critical_tol >= 0.0) {
            return Err(Failure::Validation(format!(
                "--critical-tol must be nonnegative, got {}",
                self.critical_tol
            )));
        }
        let pr = ProblemParams::new(dim, p)?;
        if classify_regime_with_tol(pr, self.critical_tol) == Regime::Critical {
            Ok(ProblemParams::sobolev_critical(dim)?)
        } else {
            Ok(pr)
        }
    }

    /// Write `name.csv` and `name.json`; returns the JSON text.
    fn emit<T: Serialize>(&self, name: &str, table: &Table, report: &T) -> Outcome<String> {
        let json = to_json(report)?;
        self.out.write(&format!("{name}.csv"), table.as_str())?;
        self.out.write(&format!("{name}.json"), &json)?;
        Ok(json)
    }
}

fn positive(name: &str, x: f64) -> Outcome<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Failure::Validation(format!("{name} must be positive, got {x}")))
    }
}

#[derive(Serialize)]
struct ExponentReport {
    dim: u32,
    p_sg: ExtendedReal,
    #[serde(rename = "p_S")]
    p_s: ExtendedReal,
    #[serde(rename = "p_JL")]
    p_jl: ExtendedReal,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    regime: Option<Regime>,
}

pub fn exponents(g: &Globals, dim: u32, p: Option<f64>) -> Outcome<String> {
    let table = ExponentTable::for_dim(dim)?;
    let mut report = ExponentReport {
        dim,
        p_sg: table.p_sg,
        p_s: table.p_s,
        p_jl: table.p_jl,
        p: None,
        amplitude: None,
        regime: None,
    };
    if let Some(p) = p {
        let pr = g.params(dim, p)?;
        report.p = Some(pr.p());
        let regime = classify_regime_with_tol(pr, g.critical_tol);
        report.regime = Some(regime);
        if regime != Regime::BelowSerrin {
            report.amplitude = Some(singular_amplitude(pr)?);
        }
    }
    to_json(&report)
}

#[derive(Serialize)]
struct ShootReport {
    dim: u32,
    p: f64,
    lambda: f64,
    first_root: Option<f64>,
    r_max: f64,
    error_estimate: f64,
    samples: usize,
}

pub fn shoot(g: &Globals, dim: u32, p: f64, lambda: f64, r_max: f64) -> Outcome<String> {
    let pr = g.params(dim, p)?;
    let tol = g.tol()?;
    positive("--lambda", lambda)?;
    positive("--rmax", r_max)?;
    let stretch = lambda.powf(pr.scaling_exponent());
    let base = integrate_regular(pr, r_max * stretch, tol, 1e-2 * tol)?;
    let profile = if lambda == 1.0 {
        base
    } else {
        rescale_profile(&base, lambda)?
    };
    let mut table = Table::new(&["r", "value", "derivative"]);
    for ((&r, &u), &du) in profile.grid().iter().zip(profile.values()).zip(profile.derivatives()) {
        table.row(&[r, u, du]);
    }
    let report = ShootReport {
        dim,
        p: pr.p(),
        lambda,
        first_root: profile.first_root(),
        r_max: profile.r_max(),
        error_estimate: profile.error_estimate(),
        samples: profile.grid().len(),
    };
    g.emit("shoot", &table, &report)
}

#[derive(Serialize)]
struct IntersectionReport {
    dim: u32,
    p: f64,
    r_max: f64,
    radii: Vec<f64>,
    transversal: Vec<bool>,
    count: usize,
    regime: Regime,
    consistent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    first_root: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    count_at_double: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delaunay_min: Option<f64>,
}

pub fn intersections(g: &Globals, dim: u32, p: f64, r_max: f64, delaunay: Option<(f64, f64)>) -> Outcome<String> {
    let pr = g.params(dim, p)?;
    positive("--rmax", r_max)?;
    let report = match delaunay {
        None => {
            let census = regime_intersection_census(pr, r_max)?;
            let profile = integrate_regular_default(pr, r_max)?;
            let inf = SingularSteadyState::new(pr)?;
            let transversal = census
                .radii
                .iter()
                .map(|&r| {
                    let (a, b) = (profile.derivative(r), inf.derivative(r));
                    (a - b).abs() > 1e-6 * (a.abs() + b.abs())
                })
                .collect();
            IntersectionReport {
                dim,
                p: pr.p(),
                r_max,
                count: census.count,
                transversal,
                radii: census.radii,
                regime: census.regime,
                consistent: census.consistent,
                first_root: census.first_root,
                count_at_double: census.count_at_double,
                tau: None,
                lambda: None,
                delaunay_min: None,
            }
        }
        Some((m, lambda)) => {
            positive("--lambda", lambda)?;
            let tol = g.tol()?;
            let regime = classify_regime_with_tol(pr, g.critical_tol);
            if regime != Regime::Critical {
                return Err(Failure::Validation(format!(
                    "Delaunay intersections need p = p_S({dim}); got p = {p}"
                )));
            }
            let psi = DelaunayProfile::new(&periodic_orbit(dim, m)?);
            let stretch = lambda.powf(pr.scaling_exponent());
            let base = Arc::new(integrate_regular_default(pr, (1.01 * r_max * stretch).max(50.0))?);
            let tau = tau_lambda(pr, &base, &psi, lambda)?;
            let phi = ScaledProfile::new(Arc::clone(&base), lambda)?;
            let lo = (1e-3 * tau.tau).min(1e-6 * r_max);
            let set = radial_intersections(&phi, &psi, (lo, r_max), tol)?;
            let consistent = match set.radii.first() {
                Some(&r) => tau.tau < r_max && (r - tau.tau).abs() <= 1e-6 * tau.tau,
                None => tau.tau >= r_max,
            };
            IntersectionReport {
                dim,
                p: pr.p(),
                r_max,
                count: set.radii.len(),
                radii: set.radii,
                transversal: set.transversal,
                regime,
                consistent,
                first_root: None,
                count_at_double: None,
                tau: Some(tau.tau),
                lambda: Some(lambda),
                delaunay_min: Some(m),
            }
        }
    };
    to_json(&report)
}

/// Samples per period in the `delaunay` table.
const PERIOD_SAMPLES: usize = 400;

#[derive(Serialize)]
struct DelaunayReport {
    dim: u32,
    min_value: f64,
    max_value: f64,
    period: f64,
    energy: f64,
    v_star: f64,
    periods: usize,
    symmetry_error: f64,
}

pub fn delaunay(g: &Globals, dim: u32, m: f64, periods: usize) -> Outcome<String> {
    if periods == 0 {
        return Err(Failure::Validation("--periods must be at least 1".into()));
    }
    let orbit = periodic_orbit(dim, m)?;
    let d = orbit.params;
    let psi = DelaunayProfile::new(&orbit);
    let mut table = Table::new(&["t", "v", "v_prime"]);
    let total = periods * PERIOD_SAMPLES;
    for i in 0..=total {
        let t = d.period * i as f64 / PERIOD_SAMPLES as f64;
        let (v, dv) = psi.h(t);
        table.row(&[t, v, dv]);
    }
    let report = DelaunayReport {
        dim,
        min_value: d.min_value,
        max_value: d.max_value,
        period: d.period,
        energy: d.energy,
        v_star: d.v_star,
        periods,
        symmetry_error: orbit.symmetry_error,
    };
    g.emit("delaunay", &table, &report)
}

#[derive(Serialize)]
struct HeteroclinicReport {
    dim: u32,
    p: f64,
    #[serde(rename = "L")]
    amplitude: f64,
    backward_limit: f64,
    forward_slope: f64,
    expected_slope: f64,
    seed_sensitivity: f64,
    t_start: f64,
    t_end: f64,
}

pub fn heteroclinic(g: &Globals, dim: u32, p: f64, samples: usize) -> Outcome<String> {
    if samples < 2 {
        return Err(Failure::Validation("--samples must be at least 2".into()));
    }
    let pr = g.params(dim, p)?;
    let h = heteroclinic_subcritical(pr)?;
    let orbit = &h.orbit;
    let grid = orbit.t_grid();
    let (t0, t1) = (grid[0], grid[grid.len() - 1]);
    let mut table = Table::new(&["t", "v", "v_prime"]);
    for i in 0..samples {
        let t = if i + 1 == samples {
            t1
        } else {
            t0 + (t1 - t0) * i as f64 / (samples - 1) as f64
        };
        let (v, dv) = orbit.eval(t);
        table.row(&[t, v, dv]);
    }
    let report = HeteroclinicReport {
        dim,
        p: pr.p(),
        amplitude: h.amplitude,
        backward_limit: h.backward_limit,
        forward_slope: h.forward_slope,
        expected_slope: h.expected_slope,
        seed_sensitivity: h.seed_sensitivity,
        t_start: t0,
        t_end: t1,
    };
    g.emit("heteroclinic", &table, &report)
}

#[derive(Serialize)]
struct SupersolutionReport {
    dim: u32,
    p: f64,
    lambda: f64,
    junction: f64,
    kink_jump: f64,
    min_weak_residual: f64,
    max_smooth_residual: f64,
    junction_residual: f64,
    mesh_h: f64,
    r_max: f64,
    nodes: usize,
}

pub fn supersolution(
    g: &Globals,
    dim: u32,
    p: f64,
    lambda: f64,
    delaunay_min: Option<f64>,
    mesh_h: f64,
    r_max: Option<f64>,
) -> Outcome<String> {
    let pr = g.params(dim, p)?;
    positive("--lambda", lambda)?;
    positive("--mesh-h", mesh_h)?;
    let psi = delaunay_min
        .map(|m| periodic_orbit(dim, m).map(|o| DelaunayProfile::new(&o)))
        .transpose()?;
    let z = build_barrier(pr, lambda, psi.as_ref())?;
    let r_max = match r_max {
        Some(r) => positive("--rmax", r)?,
        None => 4.0 * z.junction(),
    };
    let nodes = snapped_nodes(z.junction(), 0.0, r_max, mesh_h)?;
    let res = discrete_supersolution_residual(&z, &nodes)?;
    let mut table = Table::new(&["r", "value", "derivative"]);
    for &r in &nodes {
        table.row(&[r, z.value(r), z.derivative(r)]);
    }
    let report = SupersolutionReport {
        dim,
        p: pr.p(),
        lambda,
        junction: z.junction(),
        kink_jump: z.kink_jump(),
        min_weak_residual: res.min_weak_residual,
        max_smooth_residual: res.max_smooth_residual,
        junction_residual: res.junction_residual,
        mesh_h,
        r_max,
        nodes: nodes.len(),
    };
    g.emit("supersolution", &table, &report)
}

/// Mesh, model, barrier family and initial state described by a run config.
struct Setup {
    params: ProblemParams,
    family: Option<BarrierFamily>,
    schedule: Option<SweepSchedule>,
    state: ParabolicState,
    model: HeatModel,
}

fn setup(g: &Globals, cfg: &RunConfig) -> Outcome<Setup> {
    let params = g.params(cfg.dim, cfg.p)?;
    let mesh = Arc::new(RadialMesh::uniform_ball(cfg.dim, cfg.radius, cfg.mesh_nodes)?);
    let needs_family =
        matches!(cfg.initial, Initial::BarrierFraction { .. }) || !matches!(cfg.boundary, Boundary::Zero {});
    let family = needs_family.then(|| BarrierFamily::new(params)).transpose()?;
    let radius = cfg.radius;
    let (outer, schedule) = match (&cfg.boundary, &family) {
        (Boundary::Zero {}, _) => (BoundaryValue::Constant(0.0), None),
        (Boundary::Barrier { lambda }, Some(f)) => (BoundaryValue::Constant(f.value(*lambda, radius)), None),
        (
            Boundary::Schedule {
                lambda_start,
                lambda_end,
                count,
            },
            Some(f),
        ) => {
            let sched = SweepSchedule::geometric(*lambda_start, *lambda_end, *count, cfg.horizon)?;
            let (s, f) = (sched.clone(), f.clone());
            (
                BoundaryValue::function(move |t| f.value(s.lambda_at(t), radius)),
                Some(sched),
            )
        }
        _ => unreachable!("a barrier boundary builds the family"),
    };
    let values: Vec<f64> = match (&cfg.initial, &family) {
        (Initial::Zero {}, _) => vec![0.0; mesh.len()],
        (Initial::BarrierFraction { fraction, lambda }, Some(f)) => {
            mesh.nodes().iter().map(|&r| fraction * f.value(*lambda, r)).collect()
        }
        (Initial::Csv { path }, _) => load_initial(path, mesh.nodes())?,
        _ => unreachable!("a barrier initial state builds the family"),
    };
    let state = ParabolicState::new(Arc::clone(&mesh), 0.0, values, outer, None)?;
    Ok(Setup {
        params,
        family,
        schedule,
        state,
        model: HeatModel::new(params.p())?,
    })
}

fn load_initial(path: &Path, nodes: &[f64]) -> Outcome<Vec<f64>> {
    let (rs, us) = read_profile_csv(path)?;
    nodes
        .iter()
        .map(|&r| {
            interpolate(&rs, &us, r)
                .ok_or_else(|| Failure::Validation(format!("{} does not cover r = {r}", path.display())))
        })
        .collect()
}

#[derive(Serialize)]
struct EvolveReport {
    dim: u32,
    p: f64,
    #[serde(rename = "R")]
    radius: f64,
    mesh_nodes: usize,
    steps: usize,
    final_time: f64,
    sup_norm_trace: Vec<(f64, f64)>,
    blowup_time: Option<f64>,
}

pub fn evolve_run(g: &Globals, config: &Path) -> Outcome<String> {
    let cfg = RunConfig::load(config)?;
    let s = setup(g, &cfg)?;
    let opts = EvolveOptions::evenly(cfg.horizon, cfg.checkpoints).with_ceiling(cfg.ceiling.unwrap_or(DEFAULT_CEILING));
    let traj = evolve(&s.state, &s.model, &opts)?;
    let mut table = Table::new(&["t", "r", "u"]);
    for snap in &traj.snapshots {
        for (&r, &u) in traj.mesh.nodes().iter().zip(&snap.values) {
            table.row(&[snap.time, r, u]);
        }
    }
    let report = EvolveReport {
        dim: cfg.dim,
        p: s.params.p(),
        radius: cfg.radius,
        mesh_nodes: cfg.mesh_nodes,
        steps: traj.steps,
        final_time: traj.last().time,
        sup_norm_trace: traj.sup_norm_trace,
        blowup_time: traj.blowup_time,
    };
    g.emit("evolve", &table, &report)
}

#[derive(Serialize)]
struct SweepRunReport {
    dim: u32,
    p: f64,
    #[serde(rename = "R")]
    radius: f64,
    mesh_nodes: usize,
    sup_norm_trace: Vec<(f64, f64)>,
    blowup_time: Option<f64>,
    sweep_record: SweepReport,
}

/// Runs the sweep, writes its outputs and fails with exit code 3 unless
/// the solution stayed under the barrier at every checkpoint.
pub fn sweep_run(g: &Globals, config: &Path) -> Outcome<String> {
    let cfg = RunConfig::load(config)?;
    if !matches!(cfg.boundary, Boundary::Schedule { .. }) {
        return Err(Failure::Validation(
            "a sweep needs a boundary of kind \"schedule\"".into(),
        ));
    }
    let s = setup(g, &cfg)?;
    let (family, schedule) = match (s.family, s.schedule) {
        (Some(f), Some(sc)) => (f, sc),
        _ => unreachable!("a schedule boundary builds both"),
    };
    let rec = sweep(&s.state, &family, &schedule, &s.model)?;
    let mut table = Table::new(&["t", "lambda", "sup_norm", "max_excess", "dominated"]);
    for c in &rec.checkpoints {
        table.row(&[
            c.time,
            c.lambda,
            c.sup_norm,
            c.max_excess,
            f64::from(u8::from(c.dominated)),
        ]);
    }
    let report = SweepRunReport {
        dim: cfg.dim,
        p: s.params.p(),
        radius: cfg.radius,
        mesh_nodes: cfg.mesh_nodes,
        sup_norm_trace: rec.checkpoints.iter().map(|c| (c.time, c.sup_norm)).collect(),
        blowup_time: rec.blowup_time,
        sweep_record: rec,
    };
    let json = g.emit("sweep", &table, &report)?;
    let rec = &report.sweep_record;
    if rec.completed {
        return Ok(json);
    }
    let why = match (&rec.first_failure, rec.blowup_time) {
        (Some(f), _) => format!(
            "domination lost at t = {}, λ = {}, r = {} (excess {})",
            f.time, f.lambda, f.radius, f.excess
        ),
        (None, Some(t)) => format!("blow-up at t = {t}"),
        (None, None) => "sweep stopped early".into(),
    };
    Err(Failure::Numerical(why))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceFile {
    points: Vec<String>,
    dist: Vec<Vec<f64>>,
    #[serde(rename = "M")]
    m: Vec<f64>,
}

#[derive(Serialize)]
struct DoublingReport {
    y: String,
    k: f64,
    x: String,
    #[serde(rename = "M_x")]
    m_x: f64,
    ball_radius: f64,
    iterations: usize,
    path: Vec<String>,
}

/// Random space-time points with heavy-tailed weights, from `--seed`.
fn random_space(seed: u64, n: usize) -> Outcome<(SpaceFile, String)> {
    if n == 0 {
        return Err(Failure::Validation("--random needs at least one point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<SpaceTimePoint> = (0..n)
        .map(|_| {
            SpaceTimePoint::new(
                vec![rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)],
                rng.gen_range(-10.0..10.0),
            )
        })
        .collect();
    let dist = pts
        .iter()
        .map(|a| pts.iter().map(|b| parabolic_distance(a, b)).collect())
        .collect();
    let m: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0f64..12.0).exp2()).collect();
    let points: Vec<String> = (0..n).map(|i| format!("z{i}")).collect();
    let y = points[rng.gen_range(0..n)].clone();
    Ok((SpaceFile { points, dist, m }, y))
}

pub fn doubling(
    g: &Globals,
    input: Option<&PathBuf>,
    random: Option<usize>,
    k: f64,
    y: Option<&str>,
) -> Outcome<String> {
    let (file, drawn) = match (input, random) {
        (Some(path), _) => {
            let text = read_input(path)?;
            let file: SpaceFile =
                serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
            (file, None)
        }
        (None, Some(n)) => {
            let (file, y) = random_space(g.seed, n)?;
            g.out.write("doubling_space.json", &to_json(&file)?)?;
            (file, Some(y))
        }
        (None, None) => return Err(Failure::Validation("give --input or --random".into())),
    };
    let y = match (y, drawn) {
        (Some(y), _) => y.to_string(),
        (None, Some(y)) => y,
        (None, None) => return Err(Failure::Validation("--y is required with --input".into())),
    };
    let space = FiniteMetricSpace::new(file.points, file.dist)?;
    let weight = WeightFunction::new(file.m)?;
    let yi = space
        .index_of(&y)
        .ok_or_else(|| Failure::Validation(format!("no point labelled {y:?}")))?;
    let d = doubling_point(&space, &weight, yi, k)?;
    let label = |i: usize| space.points()[i].clone();
    to_json(&DoublingReport {
        y,
        k,
        x: label(d.x),
        m_x: d.m_x,
        ball_radius: d.ball_radius,
        iterations: d.iterations,
        path: d.path.iter().map(|&i| label(i)).collect(),
    })
}
