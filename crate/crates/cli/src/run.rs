//! Mode dispatch: turns a validated configuration into a result table.

use std::fmt;

use rayon::prelude::*;
use ringdefect::homogeneous::{self, estimate_tstar, fit_linear, moment_series};
use ringdefect::multi::{contour_inversion, TwoDefect};
use ringdefect::oracle::{barrier_walk_steady, uniform_msd, BarrierWalkSpec, RingOracle};
use ringdefect::single::SingleDefect;
use ringdefect::strong::{
    occupation_infinite_q, steady_moments_infinite_q, steady_profile_infinite_q,
};
use ringdefect::{Defect, DefectSet, LatticeSpec, MomentOrder, SiteIndex};

use crate::config::{Mode, RunConfig, Strengths, TimeGrid};
use crate::table::{Coords, ResultTable};

/// Probability slices must sum to one within this.
pub const SLICE_TOL: f64 = 1e-8;

/// A solver failure with the place it happened.
#[derive(Debug, Clone, PartialEq)]
pub struct RunError {
    pub context: String,
    pub source: ringdefect::Error,
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.context, self.source)
    }
}

impl std::error::Error for RunError {}

pub(crate) trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, RunError>;
}

impl<T> Context<T> for ringdefect::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, RunError> {
        self.map_err(|source| RunError {
            context: what(),
            source,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: ResultTable,
    /// An oracle comparison exceeded the tolerance.
    pub breach: bool,
}

pub fn run(config: &RunConfig) -> Result<Outcome, RunError> {
    let table = match config.mode {
        Mode::Free => run_free(config)?,
        Mode::Single => run_single(config)?,
        Mode::Infq => run_infq(config)?,
        Mode::Two => run_two(config)?,
        Mode::OracleCheck => run_oracle_check(config)?,
        Mode::Classical => run_classical(config)?,
    };
    let breach = config.mode == Mode::OracleCheck && table.max_abs_diff() > config.tolerance;
    Ok(Outcome { table, breach })
}

fn lattice(n: usize, gamma: f64, n0: usize) -> Result<LatticeSpec, RunError> {
    LatticeSpec::new(n, gamma, n0).context(|| "lattice".into())
}

fn collect_tables(parts: Vec<ResultTable>) -> ResultTable {
    let mut out = ResultTable::default();
    parts.into_iter().for_each(|p| out.append(p));
    out
}

fn check_slice(values: &[f64], what: impl FnOnce() -> String) -> Result<(), RunError> {
    ringdefect::profile::SiteProfile::new(values.to_vec())
        .check_normalized(SLICE_TOL)
        .context(what)
}

/// Δ₁(t), Δ₂(t), their long-time values, and t* for one ring size.
pub(crate) fn free_series(
    n: usize,
    gamma: f64,
    n0: usize,
    grid: &[f64],
    threshold: f64,
) -> Result<(ResultTable, f64), RunError> {
    let spec = lattice(n, gamma, n0)?;
    let c = Coords::new(n, gamma, Some(n0));
    let mut t = ResultTable::default();
    for (order, name) in [
        (MomentOrder::First, "mean_disp"),
        (MomentOrder::Second, "msd"),
    ] {
        let s = moment_series(order, &spec, grid);
        t.extend(
            s.times
                .iter()
                .zip(&s.values)
                .map(|(&tt, &v)| c.record(name, Some(tt), None, v)),
        );
        t.push(c.record(&format!("{name}_steady"), None, None, s.steady));
    }
    let tstar = estimate_tstar(&spec, threshold).context(|| format!("t* for N = {n}"))?;
    Ok((t, tstar))
}

/// t* for each size with a linear fit over N.
pub(crate) fn tstar_table(
    sizes: &[usize],
    gamma: f64,
    threshold: f64,
) -> Result<ResultTable, RunError> {
    let stars: Vec<f64> = sizes
        .par_iter()
        .map(|&n| {
            let spec = lattice(n, gamma, n / 2)?;
            estimate_tstar(&spec, threshold).context(|| format!("t* for N = {n}"))
        })
        .collect::<Result<_, _>>()?;
    let mut t = ResultTable::default();
    for (&n, &s) in sizes.iter().zip(&stars) {
        t.push(Coords::new(n, gamma, Some(n / 2)).record("tstar", None, None, s));
    }
    if sizes.len() >= 2 {
        let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
        let fit = fit_linear(&xs, &stars);
        let c = Coords::new(0, gamma, None);
        t.push(c.record("tstar_fit_slope", None, None, fit.slope));
        t.push(c.record("tstar_fit_intercept", None, None, fit.intercept));
        t.push(c.record("tstar_fit_r2", None, None, fit.r_squared));
    }
    Ok(t)
}

fn run_free(cfg: &RunConfig) -> Result<ResultTable, RunError> {
    let parts: Vec<ResultTable> = cfg
        .sizes
        .par_iter()
        .map(|&n| {
            let n0 = cfg.starts.first().copied().unwrap_or(n / 2);
            let grid = match cfg.time {
                Some(g) => g.points(),
                None => homogeneous::default_time_grid(&lattice(n, cfg.gamma, n0)?),
            };
            Ok(free_series(n, cfg.gamma, n0, &grid, cfg.tstar_threshold)?.0)
        })
        .collect::<Result<_, RunError>>()?;
    let mut out = collect_tables(parts);
    out.append(tstar_table(&cfg.sizes, cfg.gamma, cfg.tstar_threshold)?);
    Ok(out)
}

/// Steady profile and moments for one defect, plus P(t) and Δ₂(t) on a grid.
pub(crate) fn single_records(
    spec: &LatticeSpec,
    nd: usize,
    q: f64,
    time: Option<TimeGrid>,
) -> Result<ResultTable, RunError> {
    let n = spec.sites();
    let ctx = || format!("single defect q = {q} at site {nd}");
    let s = SingleDefect::new(spec, Defect::new(SiteIndex::new(nd as i64, n), q)).context(ctx)?;
    let c = Coords::new(n, spec.gamma(), Some(spec.n0().get())).with_defects(&[(nd, q)]);
    let mut t = ResultTable::default();
    let p = s.steady_profile().context(ctx)?;
    t.extend(
        p.values()
            .iter()
            .enumerate()
            .map(|(i, &v)| c.record("P_steady", None, Some(i), v)),
    );
    for (order, name) in [
        (MomentOrder::First, "mean_disp_steady"),
        (MomentOrder::Second, "msd_steady"),
    ] {
        t.push(c.record(name, None, None, s.steady_moment(order).context(ctx)?));
    }
    if let Some(g) = time {
        let times = g.points();
        let profiles = s.occupation_series(&times).context(ctx)?;
        for (&tt, p) in times.iter().zip(&profiles) {
            t.extend(
                p.values()
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| c.record("P", Some(tt), Some(i), v)),
            );
            t.push(c.record(
                "msd",
                Some(tt),
                None,
                p.moment(MomentOrder::Second, spec.n0()),
            ));
        }
    }
    Ok(t)
}

fn run_single(cfg: &RunConfig) -> Result<ResultTable, RunError> {
    let spec = lattice(cfg.sizes[0], cfg.gamma, cfg.starts[0])?;
    let nd = cfg.defect_sites[0];
    let parts = cfg
        .strengths
        .values()
        .par_iter()
        .map(|&q| single_records(&spec, nd, q, cfg.time))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(collect_tables(parts))
}

/// Steady profile, collision flag and moments at infinite strength.
pub(crate) fn infq_records(spec: &LatticeSpec, nd: usize, time: Option<TimeGrid>) -> ResultTable {
    let n = spec.sites();
    let ndi = SiteIndex::new(nd as i64, n);
    let c =
        Coords::new(n, spec.gamma(), Some(spec.n0().get())).with_defects(&[(nd, f64::INFINITY)]);
    let st = steady_profile_infinite_q(spec, ndi);
    let mut t = ResultTable::default();
    t.extend(
        st.profile
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| c.record("P_steady", None, Some(i), v)),
    );
    t.push(c.record(
        "mirror_collision",
        None,
        None,
        if st.mirror_collision { 1.0 } else { 0.0 },
    ));
    for (order, name) in [
        (MomentOrder::First, "mean_disp_steady"),
        (MomentOrder::Second, "msd_steady"),
    ] {
        t.push(c.record(
            name,
            None,
            None,
            steady_moments_infinite_q(order, spec, ndi),
        ));
    }
    if let Some(g) = time {
        let times = g.points();
        let profiles: Vec<_> = times
            .par_iter()
            .map(|&tt| occupation_infinite_q(spec, ndi, tt))
            .collect();
        for (&tt, p) in times.iter().zip(&profiles) {
            t.extend(
                p.values()
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| c.record("P", Some(tt), Some(i), v)),
            );
            t.push(c.record(
                "msd",
                Some(tt),
                None,
                p.moment(MomentOrder::Second, spec.n0()),
            ));
        }
    }
    t
}

fn run_infq(cfg: &RunConfig) -> Result<ResultTable, RunError> {
    let spec = lattice(cfg.sizes[0], cfg.gamma, cfg.starts[0])?;
    let t = infq_records(&spec, cfg.defect_sites[0], cfg.time);
    for chunk in profile_slices(&t, "P") {
        check_slice(&chunk, || "infinite-strength occupation".into())?;
    }
    Ok(t)
}

/// Values of `observable` grouped by (t, defects) in table order.
fn profile_slices(t: &ResultTable, observable: &str) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut key: Option<(Option<u64>, String)> = None;
    for r in t.records.iter().filter(|r| r.observable == observable) {
        let k = (r.t.map(f64::to_bits), r.defects.clone());
        if key.as_ref() != Some(&k) {
            out.push(Vec::new());
            key = Some(k);
        }
        out.last_mut().unwrap().push(r.value);
    }
    out
}

fn default_grid(cfg: &RunConfig) -> TimeGrid {
    cfg.time.unwrap_or(TimeGrid {
        tmax: cfg.sizes[0] as f64 / cfg.gamma,
        steps: 101,
    })
}

fn run_two(cfg: &RunConfig) -> Result<ResultTable, RunError> {
    let spec = lattice(cfg.sizes[0], cfg.gamma, cfg.starts[0])?;
    let n = spec.sites();
    let (d1, d2) = (cfg.defect_sites[0], cfg.defect_sites[1]);
    let pairs: Vec<(f64, f64)> = match &cfg.strengths {
        Strengths::List(v) => vec![(v[0], v[1])],
        Strengths::Log(r) => r.values().into_iter().map(|q| (q, q)).collect(),
        Strengths::None => Vec::new(),
    };
    let times = default_grid(cfg).points();
    let parts = pairs
        .iter()
        .map(|&(q1, q2)| {
            let ctx = || format!("two defects q = ({q1}, {q2}) at sites ({d1}, {d2})");
            let set = DefectSet::new(vec![
                Defect::new(SiteIndex::new(d1 as i64, n), q1),
                Defect::new(SiteIndex::new(d2 as i64, n), q2),
            ])
            .context(ctx)?;
            let solver = TwoDefect::new(&spec, &set).context(ctx)?;
            let profiles = solver.occupation_series(&times).context(ctx)?;
            let c = Coords::new(n, cfg.gamma, Some(spec.n0().get()))
                .with_defects(&[(d1, q1), (d2, q2)]);
            let mut t = ResultTable::default();
            for (&tt, p) in times.iter().zip(&profiles) {
                t.extend(
                    p.values()
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| c.record("P", Some(tt), Some(i), v)),
                );
                t.push(c.record(
                    "msd",
                    Some(tt),
                    None,
                    p.moment(MomentOrder::Second, spec.n0()),
                ));
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    Ok(collect_tables(parts))
}

fn run_oracle_check(cfg: &RunConfig) -> Result<ResultTable, RunError> {
    let spec = lattice(cfg.sizes[0], cfg.gamma, cfg.starts[0])?;
    let n = spec.sites();
    let strengths = cfg.strengths.values();
    let pairs: Vec<(usize, f64)> = cfg.defect_sites.iter().copied().zip(strengths).collect();
    let set = DefectSet::new(
        pairs
            .iter()
            .map(|&(s, q)| Defect::new(SiteIndex::new(s as i64, n), q))
            .collect(),
    )
    .context(|| "defects".into())?;
    let oracle = RingOracle::new(&spec, &set).context(|| "oracle".into())?;
    let c = Coords::new(n, cfg.gamma, Some(spec.n0().get())).with_defects(&pairs);
    let times = default_grid(cfg).points();

    let analytic: Vec<Vec<f64>> = match pairs.len() {
        0 => times
            .iter()
            .map(|&t| homogeneous::occupation_time(&spec, t).into_values())
            .collect(),
        1 => {
            let s =
                SingleDefect::new(&spec, set.as_slice()[0]).context(|| "single defect".into())?;
            s.occupation_series(&times)
                .context(|| "single defect".into())?
                .into_iter()
                .map(|p| p.into_values())
                .collect()
        }
        2 => {
            let s = TwoDefect::new(&spec, &set).context(|| "two defects".into())?;
            s.occupation_series(&times)
                .context(|| "two defects".into())?
                .into_iter()
                .map(|p| p.into_values())
                .collect()
        }
        _ => times
            .par_iter()
            .map(|&t| {
                contour_inversion(&set, &spec, t, None)
                    .map(|psi| psi.iter().map(|v| v.norm_sqr()).collect())
                    .context(|| format!("contour inversion at t = {t}"))
            })
            .collect::<Result<_, _>>()?,
    };

    let mut table = ResultTable::default();
    for (&t, a) in times.iter().zip(&analytic) {
        check_slice(a, || format!("analytic occupation at t = {t}"))?;
        let o = oracle.occupation(t);
        for (site, (&av, &ov)) in a.iter().zip(o.values()).enumerate() {
            table.extend(c.pair("P", Some(t), Some(site), av, ov));
        }
    }
    if pairs.len() == 1 {
        let s = SingleDefect::new(&spec, set.as_slice()[0]).context(|| "single defect".into())?;
        let a = s
            .steady_profile()
            .context(|| "single defect steady state".into())?;
        let o = oracle.time_average();
        for site in 0..n {
            table.extend(c.pair(
                "P_steady",
                None,
                Some(site),
                a.values()[site],
                o.values()[site],
            ));
        }
    }
    Ok(table)
}

fn run_classical(cfg: &RunConfig) -> Result<ResultTable, RunError> {
    let n = cfg.sizes[0];
    let cl = &cfg.classical;
    let mut jobs = Vec::new();
    for &n0 in &cfg.starts {
        for &f in &cl.barrier_rates {
            jobs.push((n0, f));
        }
    }
    let results = jobs
        .par_iter()
        .map(|&(n0, f)| {
            let ctx = || format!("barrier walk f = {f}, n0 = {n0}");
            let spec = BarrierWalkSpec::new(n, cl.bulk_rate, f, cl.barrier, n0).context(ctx)?;
            let st = barrier_walk_steady(&spec).context(ctx)?;
            check_slice(st.profile.values(), ctx)?;
            Ok((n0, f, st))
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let mut t = ResultTable::default();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (n0, f, st) in &results {
        let mut c = Coords::new(n, cl.bulk_rate, Some(*n0));
        c.defects = format!("{}:{f}", cl.barrier);
        c.q = Some(*f);
        t.extend(
            st.profile
                .values()
                .iter()
                .enumerate()
                .map(|(i, &v)| c.record("classical_P_steady", None, Some(i), v)),
        );
        t.push(c.record("classical_msd", None, None, st.msd));
        t.push(c.record("classical_msd_laplace", None, None, st.laplace_msd));
        lo = lo.min(st.msd);
        hi = hi.max(st.msd);
    }
    let c = Coords::new(n, cl.bulk_rate, None);
    t.push(c.record("uniform_msd", None, None, uniform_msd(n)));
    t.push(c.record("classical_msd_spread", None, None, hi - lo));
    Ok(t)
}
