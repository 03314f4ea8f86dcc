//! Data bundles for the standard figure panels, one table per panel.

use ringdefect::homogeneous::default_time_grid;
use ringdefect::oracle::{strong_defect_time_average, RingOracle};
use ringdefect::single::SingleDefect;
use ringdefect::strong::{steady_moments_infinite_q, steady_profile_infinite_q};
use ringdefect::{Defect, DefectSet, LatticeSpec, MomentOrder, SiteIndex};

use rayon::prelude::*;

use crate::config::LogRange;
use crate::run::{free_series, infq_records, tstar_table, Context, RunError};
use crate::table::{Coords, ResultTable};

/// Rings larger than this get no oracle columns.
pub const ORACLE_MAX_SITES: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2a,
    Fig2b,
    Fig3a,
    Fig3b,
    Fig4a,
    Fig4b,
    All,
}

impl Figure {
    pub const PANELS: [Figure; 7] = [
        Figure::Fig1,
        Figure::Fig2a,
        Figure::Fig2b,
        Figure::Fig3a,
        Figure::Fig3b,
        Figure::Fig4a,
        Figure::Fig4b,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2a => "fig2a",
            Figure::Fig2b => "fig2b",
            Figure::Fig3a => "fig3a",
            Figure::Fig3b => "fig3b",
            Figure::Fig4a => "fig4a",
            Figure::Fig4b => "fig4b",
            Figure::All => "all",
        }
    }
}

/// Options shared by every bundle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureOptions {
    pub gamma: f64,
    pub sweep: LogRange,
    pub tstar_threshold: f64,
}

impl Default for FigureOptions {
    fn default() -> Self {
        FigureOptions {
            gamma: 1.0,
            sweep: LogRange {
                min: 0.01,
                max: 100.0,
                count: 41,
            },
            tstar_threshold: crate::config::DEFAULT_TSTAR_THRESHOLD,
        }
    }
}

pub type Panel = (String, ResultTable);

pub fn bundle(fig: Figure, opts: &FigureOptions) -> Result<Vec<Panel>, RunError> {
    match fig {
        Figure::Fig1 => fig1(opts),
        Figure::Fig2a => fig2(opts, "fig2a", 2, 2, false),
        Figure::Fig2b => fig2(opts, "fig2b", 4, 2, true),
        Figure::Fig3a => fig3(opts, "fig3a", MomentOrder::First),
        Figure::Fig3b => fig3(opts, "fig3b", MomentOrder::Second),
        Figure::Fig4a => fig4(opts, "fig4a", 50, 25, 22, 15),
        Figure::Fig4b => fig4(opts, "fig4b", 55, 25, 30, 40),
        Figure::All => {
            let mut out = Vec::new();
            for f in Figure::PANELS {
                out.extend(bundle(f, opts)?);
            }
            Ok(out)
        }
    }
}

fn lattice(n: usize, gamma: f64, n0: usize) -> Result<LatticeSpec, RunError> {
    LatticeSpec::new(n, gamma, n0).context(|| "lattice".into())
}

fn oracle_allowed(n: usize, panel: &str) -> bool {
    if n > ORACLE_MAX_SITES {
        eprintln!("notice: {panel}: oracle columns skipped for N = {n} (> {ORACLE_MAX_SITES})");
        false
    } else {
        true
    }
}

fn fig1(opts: &FigureOptions) -> Result<Vec<Panel>, RunError> {
    let mut main = ResultTable::default();
    for n in [150, 200] {
        oracle_allowed(n, "fig1");
        let spec = lattice(n, opts.gamma, n / 2)?;
        let grid = default_time_grid(&spec);
        let (t, tstar) = free_series(n, opts.gamma, n / 2, &grid, opts.tstar_threshold)?;
        main.append(t);
        main.push(Coords::new(n, opts.gamma, Some(n / 2)).record("tstar", None, None, tstar));
    }
    let inset = tstar_table(
        &[50, 100, 150, 200, 300, 400],
        opts.gamma,
        opts.tstar_threshold,
    )?;
    Ok(vec![("fig1".into(), main), ("fig1_inset".into(), inset)])
}

fn single(spec: &LatticeSpec, nd: usize, q: f64) -> Result<SingleDefect, RunError> {
    SingleDefect::new(spec, Defect::new(spec.site(nd as i64), q))
        .context(|| format!("single defect q = {q} at site {nd}"))
}

fn oracle_average(spec: &LatticeSpec, nd: usize, q: f64) -> Result<Vec<f64>, RunError> {
    let set = DefectSet::single(spec.site(nd as i64), q).context(|| "defect".into())?;
    Ok(RingOracle::new(spec, &set)
        .context(|| "oracle".into())?
        .time_average()
        .into_values())
}

/// Steady profiles for a few strengths, and steady occupations at chosen sites over a sweep.
fn fig2(
    opts: &FigureOptions,
    name: &str,
    nd: usize,
    n0: usize,
    asymptotes: bool,
) -> Result<Vec<Panel>, RunError> {
    let n = 50;
    let spec = lattice(n, opts.gamma, n0)?;
    let oracle = oracle_allowed(n, name);
    let parts = [0.3, 0.5, 1.5, 10.0, 20.0]
        .par_iter()
        .map(|&q| {
            let a = single(&spec, nd, q)?
                .steady_profile()
                .context(|| "steady profile".into())?;
            let c = Coords::new(n, opts.gamma, Some(n0)).with_defects(&[(nd, q)]);
            let mut t = ResultTable::default();
            if oracle {
                let o = oracle_average(&spec, nd, q)?;
                for (i, (&av, &ov)) in a.values().iter().zip(&o).enumerate() {
                    t.extend(c.pair("P_steady", None, Some(i), av, ov));
                }
            } else {
                t.extend(
                    a.values()
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| c.record("P_steady", None, Some(i), v)),
                );
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let mut main = ResultTable::default();
    parts.into_iter().for_each(|p| main.append(p));

    let watch: Vec<usize> = if nd == n0 { vec![nd] } else { vec![n0, nd] };
    let parts = opts
        .sweep
        .values()
        .par_iter()
        .map(|&q| {
            let a = single(&spec, nd, q)?
                .steady_profile()
                .context(|| "steady profile".into())?;
            let o = if oracle {
                Some(oracle_average(&spec, nd, q)?)
            } else {
                None
            };
            let c = Coords::new(n, opts.gamma, Some(n0)).with_defects(&[(nd, q)]);
            let mut t = ResultTable::default();
            for &s in &watch {
                match &o {
                    Some(o) => t.extend(c.pair("P_steady", None, Some(s), a.values()[s], o[s])),
                    None => t.push(c.record("P_steady", None, Some(s), a.values()[s])),
                }
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let mut inset = ResultTable::default();
    parts.into_iter().for_each(|p| inset.append(p));
    if asymptotes {
        let ndi = spec.site(nd as i64);
        let st = steady_profile_infinite_q(&spec, ndi);
        let c = Coords::new(n, opts.gamma, Some(n0)).with_defects(&[(nd, f64::INFINITY)]);
        for &s in &watch {
            inset.push(c.record("P_steady_infq", None, Some(s), st.profile.values()[s]));
        }
    }
    Ok(vec![
        (name.to_string(), main),
        (format!("{name}_inset"), inset),
    ])
}

/// Steady moment against strength for defects near the start.
fn fig3(opts: &FigureOptions, name: &str, order: MomentOrder) -> Result<Vec<Panel>, RunError> {
    let (n, n0) = (200, 2);
    let spec = lattice(n, opts.gamma, n0)?;
    oracle_allowed(n, name);
    let observable = match order {
        MomentOrder::First => "mean_disp_steady",
        MomentOrder::Second => "msd_steady",
    };
    let sweep = opts.sweep.values();
    let sweep_for = |nd: usize| -> Result<ResultTable, RunError> {
        let values = sweep
            .par_iter()
            .map(|&q| {
                single(&spec, nd, q)?
                    .steady_moment(order)
                    .context(|| "steady moment".into())
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut t = ResultTable::default();
        for (&q, v) in sweep.iter().zip(values) {
            t.push(
                Coords::new(n, opts.gamma, Some(n0))
                    .with_defects(&[(nd, q)])
                    .record(observable, None, None, v),
            );
        }
        Ok(t)
    };
    let mut main = ResultTable::default();
    for nd in 2..=6 {
        main.append(sweep_for(nd)?);
    }
    let mut inset = sweep_for(4)?;
    let c = Coords::new(n, opts.gamma, Some(n0)).with_defects(&[(4, f64::INFINITY)]);
    inset.push(c.record(
        &format!("{observable}_infq"),
        None,
        None,
        steady_moments_infinite_q(order, &spec, spec.site(4)),
    ));
    Ok(vec![
        (name.to_string(), main),
        (format!("{name}_inset"), inset),
    ])
}

/// Infinite-strength steady profiles for two starts.
fn fig4(
    opts: &FigureOptions,
    name: &str,
    n: usize,
    nd: usize,
    n0: usize,
    inset_n0: usize,
) -> Result<Vec<Panel>, RunError> {
    let oracle = oracle_allowed(n, name);
    let panel = |start: usize| -> Result<ResultTable, RunError> {
        let spec = lattice(n, opts.gamma, start)?;
        let mut t = infq_records(&spec, nd, None);
        if oracle {
            let o = strong_defect_time_average(&spec, SiteIndex::new(nd as i64, n))
                .context(|| "open-chain oracle".into())?;
            let mut paired = ResultTable::default();
            for r in t.records {
                match (r.observable.as_str(), r.site) {
                    ("P_steady", Some(s)) => {
                        let c = Coords {
                            sites: r.sites,
                            gamma: r.gamma,
                            n0: r.n0,
                            defects: r.defects.clone(),
                            q: r.q,
                        };
                        paired.extend(c.pair("P_steady", None, Some(s), r.value, o.values()[s]));
                    }
                    _ => paired.push(r),
                }
            }
            t = paired;
        }
        Ok(t)
    };
    Ok(vec![
        (name.to_string(), panel(n0)?),
        (format!("{name}_inset"), panel(inset_n0)?),
    ])
}
