use banditlab::design::{min_pilot_size, VarianceProfile};
use banditlab::harness::{horizon_sweep, pilot_sweep, MetricsReport};
use banditlab::oracle::{solve_oracle, DEFAULT_TOL};
use banditlab::policies::PolicyRegistry;

use crate::config::{Config, ConfigError};
use crate::table::{Cell, Table};

/// Tables to print, plus whether any row reported an error.
#[derive(Debug, Default)]
pub struct Output {
    pub tables: Vec<Table>,
    pub row_errors: usize,
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(";")
}

pub fn thresholds(cfg: &Config) -> anyhow::Result<Output> {
    let plan = cfg.thresholds_plan()?;
    let mut table = Table::new(vec!["K", "sigma", "N1_min", "oracle_gain_pct", "error"]);
    let mut row_errors = 0;
    for sigmas in &plan.profiles {
        let result = VarianceProfile::new(sigmas.clone())
            .and_then(|p| {
                if p.k() < 2 {
                    return Err(banditlab::Error::Validation("K must be >= 2".into()));
                }
                min_pilot_size(&p, plan.n1_cap)
            });
        let row = match result {
            Ok(r) => vec![
                sigmas.len().into(),
                join(sigmas).into(),
                r.n1_min.map_or_else(|| Cell::from("none"), Cell::from),
                Cell::Text(format!("{:.2}", r.oracle_gain_pct)),
                Cell::Empty,
            ],
            Err(e) => {
                row_errors += 1;
                vec![
                    sigmas.len().into(),
                    join(sigmas).into(),
                    Cell::Empty,
                    Cell::Empty,
                    e.to_string().into(),
                ]
            }
        };
        table.push(row);
    }
    Ok(Output {
        tables: vec![table],
        row_errors,
    })
}

pub fn inference_sweep(cfg: &Config, registry: &PolicyRegistry) -> anyhow::Result<Output> {
    let plan = cfg.inference_plan()?;
    let sweep = pilot_sweep(&plan.base, &plan.pilots, registry)?;
    let mut table = Table::new(vec![
        "row",
        "N1",
        "total_mse",
        "total_mse_se",
        "delta_u",
        "delta_u_se",
        "delta_u_unpaired_se",
        "gain_pct",
        "sd_floor_events",
    ]);
    for r in &sweep.rows {
        table.push(vec![
            "two_stage_pcipw".into(),
            r.n1.into(),
            r.adaptive.value.into(),
            r.adaptive.se.into(),
            r.delta_u.value.into(),
            r.delta_u.se.into(),
            r.delta_u_unpaired_se.into(),
            r.gain_pct.into(),
            r.sd_floor_events.into(),
        ]);
    }
    let footer = |name: &str, value: f64, se: Option<f64>| {
        let mut row = vec![name.into(), Cell::Empty, value.into(), se.into()];
        row.extend(std::iter::repeat_n(Cell::Empty, 5));
        row
    };
    table.push(footer(
        "uniform_sample_mean",
        sweep.uniform.total_mse.value,
        Some(sweep.uniform.total_mse.se),
    ));
    table.push(footer("uniform_closed_form", sweep.uniform_closed_form, None));
    table.push(footer("neyman_closed_form", sweep.neyman_closed_form, None));
    Ok(Output {
        tables: vec![table],
        row_errors: 0,
    })
}

fn expect_joint(r: &MetricsReport) -> (f64, f64, f64, f64) {
    let reg = r.avg_regret.expect("lambda is set for joint runs");
    let j = r.joint_loss.expect("lambda is set for joint runs");
    (reg.value, reg.se, j.value, j.se)
}

pub fn joint_compare(cfg: &Config, registry: &PolicyRegistry) -> anyhow::Result<Output> {
    let experiments = cfg.joint_plan(registry)?;
    let mut rows = Vec::with_capacity(experiments.len());
    for e in &experiments {
        let report = e.run()?.report;
        rows.push((e.config().policy.label().to_owned(), report));
    }
    rows.sort_by(|a, b| {
        let ja = a.1.joint_loss.map(|j| j.value).unwrap_or(f64::NAN);
        let jb = b.1.joint_loss.map(|j| j.value).unwrap_or(f64::NAN);
        ja.total_cmp(&jb)
    });
    let mut table = Table::new(vec![
        "policy",
        "sum_rmse",
        "sum_rmse_se",
        "avg_regret",
        "avg_regret_se",
        "joint_loss",
        "joint_loss_se",
        "total_mse",
        "mean_counts",
    ]);
    for (label, r) in rows {
        let (reg, reg_se, j, j_se) = expect_joint(&r);
        table.push(vec![
            label.into(),
            r.sum_rmse.value.into(),
            r.sum_rmse.se.into(),
            reg.into(),
            reg_se.into(),
            j.into(),
            j_se.into(),
            r.total_mse.value.into(),
            Cell::Floats(r.mean_counts.clone()),
        ]);
    }
    Ok(Output {
        tables: vec![table],
        row_errors: 0,
    })
}

pub fn rate_sweep(cfg: &Config, registry: &PolicyRegistry) -> anyhow::Result<Output> {
    let plan = cfg.rate_plan(registry)?;
    let sweep = horizon_sweep(
        &plan.instance,
        &plan.policies,
        &plan.horizons,
        plan.reps,
        plan.seed,
        plan.lambda,
        registry,
    )?;
    let mut long = Table::new(vec![
        "policy",
        "N",
        "joint_loss",
        "sum_rmse",
        "avg_regret",
        "se_joint",
        "se_sum_rmse",
        "se_avg_regret",
    ]);
    for row in &sweep.rows {
        let (reg, reg_se, j, j_se) = expect_joint(&row.report);
        long.push(vec![
            row.policy.clone().into(),
            row.horizon.into(),
            j.into(),
            row.report.sum_rmse.value.into(),
            reg.into(),
            j_se.into(),
            row.report.sum_rmse.se.into(),
            reg_se.into(),
        ]);
    }
    let mut slopes = Table::new(vec![
        "policy",
        "slope_joint_loss",
        "slope_sum_rmse",
        "slope_avg_regret",
    ]);
    for s in &sweep.slopes {
        slopes.push(vec![
            s.policy.clone().into(),
            s.joint_loss.into(),
            s.sum_rmse.into(),
            s.avg_regret.into(),
        ]);
    }
    let mut tables = vec![long];
    if !slopes.rows.is_empty() {
        tables.push(slopes);
    }
    Ok(Output {
        tables,
        row_errors: 0,
    })
}

pub fn oracle(cfg: &Config) -> anyhow::Result<Output> {
    let plan = cfg.oracle_plan()?;
    let mut table = Table::new(vec![
        "N",
        "objective",
        "alpha_star",
        "kkt_residual",
        "iterations",
        "p_star",
    ]);
    for &n in &plan.horizons {
        let problem = plan
            .problem
            .with_horizon(n)
            .map_err(|e| ConfigError(e.to_string()))?;
        let sol = solve_oracle(&problem, DEFAULT_TOL)?;
        table.push(vec![
            n.into(),
            sol.objective_value.into(),
            sol.alpha_star.into(),
            sol.kkt_residual.into(),
            sol.iterations.into(),
            Cell::Floats(sol.p_star.clone()),
        ]);
    }
    Ok(Output {
        tables: vec![table],
        row_errors: 0,
    })
}
