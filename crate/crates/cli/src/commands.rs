use std::path::PathBuf;

use bvlab_core::annular::{MonomialTerm, PiecewiseField};
use bvlab_core::bounds;
use bvlab_core::constructions::{
    default_n0, lacunary_variance, lacunary_vector_field, shell_beurling, shell_variance, truncate_to_polynomial, Rho0,
    ShellMethod, ShellParams, TruncationOptions,
};
use bvlab_core::dynamics::{
    birkhoff_history, birkhoff_variance_mc, coboundary_check, mean_relation_check, BlaschkeMap, CirclePotential,
};
use bvlab_core::laurent::ExteriorLaurent;
use bvlab_core::order2::{order2_bound, parameter_search, GridPoint, Order2Report};
use bvlab_core::radius::LogRadius;
use bvlab_core::variance::{growth_slope, means_curve, DEFAULT_TOLERANCE};
use clap::{Args, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Common, ConfigFile, MaxFreq};
use crate::output::{Cell, Report, Table};
use crate::CliError;

pub const DEFAULT_MAX_FREQ: u64 = 1_000_000_000_000;

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.clone(),
        source: e,
    })
}

fn to_value(x: impl Serialize) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

#[derive(Debug, Clone, Default, Args)]
pub struct ShellArgs {
    #[arg(long)]
    pub d: Option<u64>,
    /// `optimal` or a number in (0, 1).
    #[arg(long)]
    pub rho0: Option<Rho0>,
    /// First-shell frequency; defaults to d-1 (2 when d = 2).
    #[arg(long)]
    pub n0: Option<u64>,
    #[arg(long)]
    pub shells: Option<usize>,
    /// Frequency cap, integer or scientific notation.
    #[arg(long)]
    pub max_freq: Option<MaxFreq>,
}

impl ShellArgs {
    fn resolve(&self, file: &ConfigFile, default_d: u64, default_shells: usize) -> Result<ShellParams, CliError> {
        let d = self.d.or(file.d).unwrap_or(default_d);
        Ok(ShellParams::new(
            d,
            self.rho0.or(file.rho0).unwrap_or(Rho0::Optimal),
            self.n0.or(file.n0),
            self.shells.or(file.shells).unwrap_or(default_shells),
            self.max_freq.or(file.max_freq).map_or(DEFAULT_MAX_FREQ, |m| m.0),
        )?)
    }
}

pub fn table2() -> Result<Report, CliError> {
    let mut t = Table::new(&["d", "lambda_lemma", "improved", "c_d", "optimal_rho0"]);
    for row in bounds::table2() {
        t.push(vec![
            (row.d as u64).into(),
            row.lambda_lemma.into(),
            row.improved.into(),
            row.c_d.into(),
            row.optimal_rho0.into(),
        ]);
    }
    let json = to_value(bounds::table2());
    let mut r = Report::new("table2", t.clone(), json, json!({}))?;
    let mut shown = String::from("   d  lambda-lemma  improved\n");
    for row in bounds::table2() {
        shown.push_str(&format!(
            "{:>4}  {:>12}  {:>8}\n",
            row.d,
            bounds::truncate_decimals(row.lambda_lemma, 4),
            bounds::truncate_decimals(row.improved, 4)
        ));
    }
    r.summary = Some(shown);
    Ok(r)
}

#[derive(Debug, Clone, Args)]
pub struct VarianceArgs {
    /// `shell` (S mu of the shell coefficient) or `lacunary` (v' of the
    /// lacunary field).
    pub target: Option<String>,
    #[command(flatten)]
    pub shell: ShellArgs,
    /// exact, lacunary, block, block-mass, cesaro or all.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Terms of the lacunary field.
    #[arg(long)]
    pub terms: Option<u32>,
}

#[derive(Serialize)]
struct VarianceParams {
    target: String,
    methods: Vec<ShellMethod>,
    tolerance: f64,
    shell: Option<ShellParams>,
    d: u64,
    terms: Option<u32>,
}

pub fn variance(a: &VarianceArgs, file: &ConfigFile) -> Result<Report, CliError> {
    let target = a.target.clone().or(file.target.clone()).unwrap_or_else(|| "shell".into());
    let method = a.method.clone().or(file.method.clone()).unwrap_or_else(|| "all".into());
    let methods: Vec<ShellMethod> = if method == "all" {
        ShellMethod::ALL.to_vec()
    } else {
        vec![method.parse::<ShellMethod>()?]
    };
    let tolerance = a.tolerance.or(file.tolerance).unwrap_or(DEFAULT_TOLERANCE);
    let (params, estimates) = match target.as_str() {
        "shell" => {
            let p = a.shell.resolve(file, 20, 64)?;
            let est = methods
                .iter()
                .map(|&m| shell_variance(&p, m, tolerance))
                .collect::<Result<Vec<_>, _>>()?;
            (
                VarianceParams {
                    target,
                    methods: methods.clone(),
                    tolerance,
                    shell: Some(p),
                    d: p.d,
                    terms: None,
                },
                est,
            )
        }
        "lacunary" => {
            let d = a.shell.d.or(file.d).unwrap_or(20);
            let max_terms = (1..=64u32)
                .take_while(|&n| lacunary_vector_field(d, n).is_ok())
                .last()
                .unwrap_or(1);
            let terms = a.terms.or(file.terms).unwrap_or(max_terms);
            let est = methods
                .iter()
                .map(|&m| lacunary_variance(d, terms, m, tolerance))
                .collect::<Result<Vec<_>, _>>()?;
            (
                VarianceParams {
                    target,
                    methods: methods.clone(),
                    tolerance,
                    shell: None,
                    d,
                    terms: Some(terms),
                },
                est,
            )
        }
        other => return Err(CliError::Usage(format!("unknown variance target {other:?}"))),
    };
    let mut t = Table::new(&["target", "method", "value", "converged", "blocks", "block_max", "block_min"]);
    // per-block values live in the JSON; the scales of the running
    // estimate do not line up with blocks for every method
    let mut diag = Table::new(&["method", "scale", "running_estimate"]);
    for (m, e) in methods.iter().zip(&estimates) {
        let (hi, lo) = e.block_range().unwrap_or((e.value, e.value));
        t.push(vec![
            params.target.clone().into(),
            m.to_string().into(),
            e.value.into(),
            e.converged.into(),
            e.blocks.len().into(),
            hi.into(),
            lo.into(),
        ]);
        for (scale, running) in &e.diagnostics {
            diag.push(vec![m.to_string().into(), (*scale).into(), (*running).into()]);
        }
    }
    let json = json!({
        "params": to_value(&params),
        "estimates": methods.iter().zip(&estimates).map(|(m, e)| json!({"method": m, "estimate": e})).collect::<Vec<_>>(),
    });
    let mut r = Report::new("variance", t, json, &params)?;
    r.extra_csv.push(("variance_diagnostics".into(), diag));
    Ok(r)
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub d_min: Option<u64>,
    #[arg(long)]
    pub d_max: Option<u64>,
}

pub fn optimize(a: &OptimizeArgs, file: &ConfigFile) -> Result<Report, CliError> {
    let lo = a.d_min.or(file.d_min).unwrap_or(2);
    let hi = a.d_max.or(file.d_max).unwrap_or(64);
    let (best_d, best_v) = bounds::best_integer_degree(lo..=hi)?;
    let (real_d, real_v) = bounds::best_real_degree();
    let mut t = Table::new(&["d", "improved", "optimal_rho0"]);
    for d in lo..=hi {
        t.push(vec![
            d.into(),
            bounds::sigma2_optimal(d as f64)?.into(),
            bounds::optimal_rho0(d as f64).into(),
        ]);
    }
    let json = json!({
        "best_integer": {"d": best_d, "value": best_v},
        "best_real": {"d": real_d, "value": real_v},
        "rows": t.to_json(),
    });
    let mut r = Report::new("optimize", t, json, json!({"d_min": lo, "d_max": hi}))?;
    r.summary = Some(format!(
        "best integer degree {best_d}: {best_v:.10}\nbest real degree {real_d:.8}: {real_v:.10}\n"
    ));
    Ok(r)
}

#[derive(Debug, Clone, Args)]
pub struct Order2Args {
    #[command(flatten)]
    pub shell: ShellArgs,
    /// Repeat with doubled shells and max_freq and report the change.
    #[arg(long)]
    pub refine: bool,
    /// Degrees of a parameter search (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub grid_d: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    pub grid_rho0: Option<Vec<Rho0>>,
    #[arg(long, value_delimiter = ',')]
    pub grid_n0: Option<Vec<u64>>,
}

fn order2_row(r: &Order2Report) -> Vec<Cell> {
    vec![
        r.params.d.into(),
        r.params.rho0.into(),
        r.params.n0.into(),
        r.truncation.shells.into(),
        r.truncation.max_freq.into(),
        r.first_order.into(),
        r.second_order.into(),
        r.total.into(),
        r.stability.unwrap_or(f64::NAN).into(),
        r.first_order_closed_form.into(),
    ]
}

const ORDER2_HEADER: [&str; 10] = [
    "d",
    "rho0",
    "n0",
    "shells",
    "max_freq",
    "first_order",
    "second_order",
    "total",
    "stability",
    "first_order_closed_form",
];

pub fn order2(a: &Order2Args, file: &ConfigFile) -> Result<Report, CliError> {
    let refine = a.refine || file.refine.unwrap_or(false);
    let grid_d = a.grid_d.clone().or(file.grid_d.clone());
    let grid_rho0 = a.grid_rho0.clone().or(file.grid_rho0.clone());
    let grid_n0 = a.grid_n0.clone().or(file.grid_n0.clone());
    let base = a.shell.resolve(file, 16, 24)?;
    if grid_d.is_none() && grid_rho0.is_none() && grid_n0.is_none() {
        let report = order2_bound(&base, refine)?;
        let mut t = Table::new(&ORDER2_HEADER);
        t.push(order2_row(&report));
        return Report::new("order2", t, to_value(&report), json!({"shell": base, "refine": refine}));
    }
    let ds = grid_d.unwrap_or(vec![base.d]);
    let rhos = grid_rho0.unwrap_or(vec![Rho0::Optimal]);
    let mut grid = Vec::new();
    for &d in &ds {
        for &rho0 in &rhos {
            match &grid_n0 {
                Some(ns) => grid.extend(ns.iter().map(|&n| GridPoint { d, rho0, n0: Some(n) })),
                None => grid.push(GridPoint { d, rho0, n0: Some(default_n0(d)) }),
            }
        }
    }
    let board = parameter_search(&grid, base.shells, base.max_freq)?;
    let mut t = Table::new(&ORDER2_HEADER);
    for r in &board {
        t.push(order2_row(r));
    }
    let json = json!({"best": to_value(&board[0]), "leaderboard": to_value(&board)});
    let params = json!({"grid": grid, "shells": base.shells, "max_freq": base.max_freq});
    let mut r = Report::new("order2", t.clone(), json, params)?;
    r.extra_csv.push(("order2_leaderboard".into(), t));
    Ok(r)
}

#[derive(Debug, Clone, Args)]
pub struct DimensionArgs {
    #[arg(long)]
    pub d: Option<u64>,
    /// Dilatations k (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<f64>>,
    /// Parameters t of z^d + t z (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
}

pub fn dimension(a: &DimensionArgs, file: &ConfigFile) -> Result<Report, CliError> {
    let d = a.d.or(file.d).unwrap_or(20);
    let ks = a.k.clone().or(file.k.clone()).unwrap_or(vec![0.01, 0.05, 0.1]);
    let ts = a.t.clone().or(file.t.clone()).unwrap_or_default();
    let c_d = bounds::distortion_constant(d)?;
    let mut t = Table::new(&["d", "input", "value", "k", "lower_second_order", "upper"]);
    for &k in &ks {
        t.push(vec![
            d.into(),
            "k".into(),
            k.into(),
            k.into(),
            bounds::julia_dim_k(d, k)?.into(),
            bounds::smirnov_bound_k(k)?.into(),
        ]);
    }
    for &tv in &ts {
        t.push(vec![
            d.into(),
            "t".into(),
            tv.into(),
            (c_d * tv.abs() / 2.0).into(),
            bounds::julia_dim_t(d, Complex64::new(tv, 0.0))?.into(),
            bounds::smirnov_bound_t(tv)?.into(),
        ]);
    }
    let json = json!({"d": d, "c_d": c_d, "remainder": "third order omitted", "rows": t.to_json()});
    Report::new("dimension", t, json, json!({"d": d, "k": ks, "t": ts}))
}

#[derive(Debug, Clone, Args)]
pub struct MeansCurveArgs {
    /// `shell`, `lacunary` or `series` (a Laurent series JSON file).
    pub target: Option<String>,
    #[command(flatten)]
    pub shell: ShellArgs,
    #[arg(long)]
    pub terms: Option<u32>,
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Smallest R-1 on the grid.
    #[arg(long)]
    pub excess_min: Option<f64>,
    /// Largest R-1 on the grid.
    #[arg(long)]
    pub excess_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

pub fn means_curve_cmd(a: &MeansCurveArgs, file: &ConfigFile) -> Result<Report, CliError> {
    let target = a.target.clone().or(file.target.clone()).unwrap_or_else(|| "shell".into());
    let (g, source): (ExteriorLaurent, Value) = match target.as_str() {
        "shell" => {
            let p = a.shell.resolve(file, 2, 64)?.resolved();
            (shell_beurling(&p)?, to_value(p))
        }
        "lacunary" => {
            let d = a.shell.d.or(file.d).unwrap_or(2);
            let terms = a.terms.or(file.terms).unwrap_or(30);
            (lacunary_vector_field(d, terms)?.dv, json!({"d": d, "terms": terms}))
        }
        "series" => {
            let path = a
                .series
                .clone()
                .or(file.series.clone())
                .ok_or_else(|| CliError::Usage("target `series` needs --series".into()))?;
            (ExteriorLaurent::from_json(&read(&path)?)?, json!({"series": path}))
        }
        other => return Err(CliError::Usage(format!("unknown means-curve target {other:?}"))),
    };
    let lo = a.excess_min.or(file.excess_min).unwrap_or(1e-8);
    let hi = a.excess_max.or(file.excess_max).unwrap_or(1e-1);
    let n = a.points.or(file.points).unwrap_or(50);
    if !(lo > 0.0 && lo <= hi && hi < 1.0) {
        return Err(CliError::Usage("need 0 < excess_min <= excess_max < 1".into()));
    }
    let (r_lo, r_hi) = (LogRadius::from_excess(lo), LogRadius::from_excess(hi));
    let pts = means_curve(&g, r_lo, r_hi, n)?;
    let slope = if n >= 2 && lo < hi { Some(growth_slope(&g, r_lo, r_hi, n)?) } else { None };
    let mut t = Table::new(&["R", "excess", "means", "log_scale", "ratio", "resolved"]);
    for p in &pts {
        t.push(vec![
            p.r.into(),
            p.excess.into(),
            p.means.into(),
            p.log_scale.into(),
            p.ratio.into(),
            p.resolved.into(),
        ]);
    }
    let params = json!({"target": target, "source": source, "excess_min": lo, "excess_max": hi, "points": n});
    let json = json!({"slope": slope, "points": to_value(&pts)});
    let mut r = Report::new("means_curve", t, json, params)?;
    if let Some(s) = slope {
        r.footer = Some(format!("slope of I(R) against log 1/(R-1): {s:.10}\n"));
    }
    Ok(r)
}

#[derive(Debug, Clone, Args)]
pub struct TruncateArgs {
    /// Coefficient as JSON; without it a sum of building blocks on
    /// A(rho_in, rho_out) is used.
    #[arg(long)]
    pub mu: Option<PathBuf>,
    #[arg(long)]
    pub rho_in: Option<f64>,
    #[arg(long)]
    pub rho_out: Option<f64>,
    /// Building blocks n = 2..blocks of the default coefficient.
    #[arg(long)]
    pub blocks: Option<u64>,
    /// Outer radius of the correction annulus.
    #[arg(long)]
    pub r1: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Divide by 1 + eps afterwards.
    #[arg(long)]
    pub rescale: bool,
}

/// `sum_{n=2}^{blocks-1} e^{i n} / blocks * (conj(z)/|z|)^{n-2}` on
/// `A(rho_in, rho_out)`, sup norm below one.
pub fn demo_coefficient(rho_in: f64, rho_out: f64, blocks: u64) -> Result<PiecewiseField, CliError> {
    let (a, b) = (LogRadius::from_radius(rho_in), LogRadius::from_radius(rho_out));
    let terms = (2..blocks)
        .map(|n| {
            MonomialTerm::unit_block(n, a, b).map(|t| t.with_coeff(Complex64::from_polar(1.0 / blocks as f64, n as f64)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PiecewiseField::from_terms(terms))
}

pub fn truncate(a: &TruncateArgs, file: &ConfigFile) -> Result<Report, CliError> {
    let r1 = a.r1.or(file.r1).unwrap_or(0.7);
    let eps = a.eps.or(file.eps).unwrap_or(0.01);
    let rescale = a.rescale || file.rescale.unwrap_or(false);
    let (mu, source) = match a.mu.clone().or(file.mu.clone()) {
        Some(path) => (PiecewiseField::from_json(&read(&path)?)?, json!({"mu": path})),
        None => {
            let rho_in = a.rho_in.or(file.rho_in).unwrap_or(0.3);
            let rho_out = a.rho_out.or(file.rho_out).unwrap_or(0.5);
            let blocks = a.blocks.or(file.blocks).unwrap_or(60);
            (
                demo_coefficient(rho_in, rho_out, blocks)?,
                json!({"rho_in": rho_in, "rho_out": rho_out, "blocks": blocks}),
            )
        }
    };
    let tr = truncate_to_polynomial(
        &mu,
        r1,
        eps,
        TruncationOptions {
            rescale,
            ..TruncationOptions::default()
        },
    )?;
    let c = tr.field.cauchy_exterior()?;
    let mut t = Table::new(&["k", "re", "im", "abs", "beyond_cut"]);
    let mut tail_max = 0.0f64;
    for (k, b) in c.iter() {
        if k >= tr.cut {
            tail_max = tail_max.max(b.norm());
        }
        t.push(vec![k.into(), b.re.into(), b.im.into(), b.norm().into(), (k >= tr.cut).into()]);
    }
    let field: Value = serde_json::from_str(&tr.field.to_json()?).map_err(|e| CliError::Config(e.to_string()))?;
    let json = json!({
        "cut": tr.cut,
        "correction_bound": tr.correction_bound,
        "rescaled": tr.rescaled,
        "cauchy_tail_max": tail_max,
        "field": field,
    });
    let params = json!({"source": source, "r1": r1, "eps": eps, "rescale": rescale});
    Report::new("truncate", t, json, params)
}

#[derive(Debug, Clone, Subcommand)]
pub enum DynamicsCommand {
    /// var(h)/log d against sigma^2 of the lacunary series for h = z^{-(d-1)}.
    Coboundary(CoboundaryArgs),
    /// Birkhoff variance of a trigonometric potential, exact and Monte Carlo.
    Var(VarArgs),
    /// Mean of h = log d against the normalised mean of log 1/(|z|-1).
    MeanRelation(MeanRelationArgs),
}

impl DynamicsCommand {
    pub fn name(&self) -> &'static str {
        match self {
            DynamicsCommand::Coboundary(_) => "dynamics coboundary",
            DynamicsCommand::Var(_) => "dynamics var",
            DynamicsCommand::MeanRelation(_) => "dynamics mean-relation",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CoboundaryArgs {
    #[arg(long)]
    pub d: Option<u64>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct VarArgs {
    /// Zeros of the Blaschke product, e.g. `0.3,0.1+0.2i`; none gives z^d.
    #[arg(long, value_delimiter = ',')]
    pub blaschke: Option<Vec<Complex64>>,
    /// Degree; defaults to one more than the number of zeros, or 2.
    #[arg(long)]
    pub degree: Option<u64>,
    /// Potential as `{"coeffs": [[m, re, im], ...]}`; defaults to z^{-1}.
    #[arg(long)]
    pub phi: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct MeanRelationArgs {
    #[arg(long)]
    pub d: Option<u64>,
}

pub fn dynamics(cmd: &DynamicsCommand, file: &ConfigFile, common: &Common) -> Result<Report, CliError> {
    match cmd {
        DynamicsCommand::Coboundary(a) => {
            let d = a.d.or(file.d).unwrap_or(2);
            let n = a.n.or(file.n).unwrap_or(20);
            let c = coboundary_check(d, n)?;
            let mut t = Table::new(&["d", "n", "lhs", "rhs", "residual"]);
            t.push(vec![d.into(), n.into(), c.lhs.into(), c.rhs.into(), c.residual.into()]);
            let json = json!({"lhs": c.lhs, "rhs": c.rhs, "residual": c.residual, "seed": common.seed, "d": d, "n": n});
            Report::new("dynamics_coboundary", t, json, json!({"d": d, "n": n}))
        }
        DynamicsCommand::Var(a) => {
            let zeros: Vec<Complex64> = a
                .blaschke
                .clone()
                .or_else(|| file.blaschke.as_ref().map(|v| v.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()))
                .unwrap_or_default();
            let degree = a
                .degree
                .or(file.degree)
                .unwrap_or(if zeros.is_empty() { 2 } else { zeros.len() as u64 + 1 });
            let map = BlaschkeMap::new(zeros.clone(), degree)?;
            let phi_path = a.phi.clone().or(file.phi.clone());
            let phi = match &phi_path {
                Some(p) => serde_json::from_str::<CirclePotential>(&read(p)?)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
                None => CirclePotential::monomial(-1),
            };
            let n = a.n.or(file.n).unwrap_or(50);
            let samples = a.samples.or(file.samples).unwrap_or(100_000);
            let mc = birkhoff_variance_mc(&phi, &map, n, samples, common.seed)?;
            let exact = if map.is_power() {
                Some(*birkhoff_history(&phi.without_mean(), degree, n)?.last().unwrap_or(&0.0))
            } else {
                None
            };
            let mut t = Table::new(&["degree", "zeros", "n", "samples", "seed", "estimate", "stderr", "exact"]);
            t.push(vec![
                degree.into(),
                zeros.len().into(),
                n.into(),
                samples.into(),
                common.seed.into(),
                mc.estimate.into(),
                mc.stderr.into(),
                exact.unwrap_or(f64::NAN).into(),
            ]);
            let json = json!({
                "estimate": mc.estimate,
                "stderr": mc.stderr,
                "exact": exact,
                "samples": samples,
                "seed": common.seed,
                "n": n,
            });
            let params = json!({
                "zeros": zeros.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "degree": degree,
                "phi": to_value(&phi),
                "n": n,
                "samples": samples,
            });
            Report::new("dynamics_var", t, json, params)
        }
        DynamicsCommand::MeanRelation(a) => {
            let d = a.d.or(file.d).unwrap_or(2);
            let m = mean_relation_check(d)?;
            let mut t = Table::new(&["R", "rhs"]);
            for &(r, v) in &m.rhs_points {
                t.push(vec![r.into(), v.into()]);
            }
            Report::new("dynamics_mean_relation", t, to_value(&m), json!({"d": d}))
        }
    }
}
