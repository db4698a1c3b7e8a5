//! Oracle fixed-allocation benchmark for the joint objective
//!
//! `J(p) = lambda * sum_i sigma_i / sqrt(N p_i) + (1 - lambda) * sum_i p_i Delta_i`
//!
//! over the simplex. Stationarity gives
//! `p_i(alpha) = [lambda sigma_i / (2 sqrt(N) ((1 - lambda) Delta_i - alpha))]^(2/3)`
//! for a multiplier `alpha < 0`; the total mass is increasing in `alpha` and
//! diverges as `alpha -> 0-` through the best arm, so `alpha` is found by
//! bisection on `sum_i p_i(alpha) = 1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::BanditInstance;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct JointProblem {
    sigmas: Vec<f64>,
    deltas: Vec<f64>,
    lambda: f64,
    horizon: usize,
}

impl JointProblem {
    pub fn new(sigmas: Vec<f64>, deltas: Vec<f64>, lambda: f64, horizon: usize) -> Result<Self> {
        if sigmas.is_empty() || sigmas.len() != deltas.len() {
            return Err(Error::invalid("sigmas and deltas must be non-empty and equal length"));
        }
        if sigmas.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::invalid("sigmas must be positive and finite"));
        }
        if deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::invalid("gaps must be nonnegative and finite"));
        }
        if deltas.iter().filter(|&&d| d == 0.0).count() != 1 {
            return Err(Error::OptimalArmNotUnique);
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::invalid(format!("lambda must lie in (0, 1), got {lambda}")));
        }
        if horizon == 0 {
            return Err(Error::invalid("horizon must be positive"));
        }
        Ok(Self {
            sigmas,
            deltas,
            lambda,
            horizon,
        })
    }

    pub fn from_instance(instance: &BanditInstance, lambda: f64, horizon: usize) -> Result<Self> {
        Self::new(instance.std_devs().to_vec(), instance.gaps()?, lambda, horizon)
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        Self::new(self.sigmas.clone(), self.deltas.clone(), self.lambda, horizon)
    }

    pub fn num_arms(&self) -> usize {
        self.sigmas.len()
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn best_arm(&self) -> usize {
        self.deltas.iter().position(|&d| d == 0.0).expect("validated")
    }

    /// `lambda sigma_i / (2 sqrt N)`.
    fn scale(&self, i: usize) -> f64 {
        self.lambda * self.sigmas[i] / (2.0 * (self.horizon as f64).sqrt())
    }

    /// Allocation implied by multiplier `alpha < 0`.
    pub fn allocation_at(&self, alpha: f64) -> Vec<f64> {
        (0..self.num_arms())
            .map(|i| (self.scale(i) / ((1.0 - self.lambda) * self.deltas[i] - alpha)).powf(2.0 / 3.0))
            .collect()
    }

    pub fn mass_at(&self, alpha: f64) -> f64 {
        self.allocation_at(alpha).iter().sum()
    }
}

/// Joint objective at allocation `p`; every entry must be positive.
pub fn joint_objective(problem: &JointProblem, p: &[f64]) -> Result<f64> {
    if p.len() != problem.num_arms() {
        return Err(Error::invalid("allocation length does not match the problem"));
    }
    if let Some(i) = p.iter().position(|&x| x.is_nan() || x <= 0.0) {
        return Err(Error::Domain(format!(
            "allocation entry {i} is {} (objective diverges)",
            p[i]
        )));
    }
    let n = problem.horizon as f64;
    let rmse: f64 = problem
        .sigmas
        .iter()
        .zip(p)
        .map(|(s, pi)| s / (n * pi).sqrt())
        .sum();
    let regret: f64 = problem.deltas.iter().zip(p).map(|(d, pi)| d * pi).sum();
    Ok(problem.lambda * rmse + (1.0 - problem.lambda) * regret)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSolution {
    pub p_star: Vec<f64>,
    pub alpha_star: f64,
    pub objective_value: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Max over arms of `|lambda sigma_i / (2 sqrt N) p_i^(-3/2) - ((1 - lambda) Delta_i - alpha)|`.
pub fn kkt_residual(problem: &JointProblem, p: &[f64], alpha: f64) -> f64 {
    (0..problem.num_arms())
        .map(|i| {
            (problem.scale(i) * p[i].powf(-1.5)
                - ((1.0 - problem.lambda) * problem.deltas[i] - alpha))
                .abs()
        })
        .fold(0.0, f64::max)
}

pub fn solve_oracle(problem: &JointProblem, tol: f64) -> Result<OracleSolution> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid("tolerance must be positive"));
    }
    if problem.num_arms() == 1 {
        let p = vec![1.0];
        return Ok(OracleSolution {
            objective_value: joint_objective(problem, &p)?,
            p_star: p,
            alpha_star: f64::NAN,
            kkt_residual: 0.0,
            iterations: 0,
        });
    }

    let scale = (0..problem.num_arms())
        .map(|i| problem.scale(i))
        .fold(0.0, f64::max);
    let delta_max = problem.deltas.iter().copied().fold(0.0, f64::max);
    let mut hi = -1e-30 * scale;
    let mut lo = -(1.0 - problem.lambda) * delta_max * 1e3 - 1.0;
    let mut expansions = 0;
    while problem.mass_at(lo) >= 1.0 {
        lo *= 2.0;
        expansions += 1;
        if expansions > 2000 || !lo.is_finite() {
            return Err(Error::SolverNonConvergence {
                iterations: 0,
                lo,
                hi,
                mass: problem.mass_at(lo),
            });
        }
    }
    if problem.mass_at(hi) <= 1.0 {
        return Err(Error::SolverNonConvergence {
            iterations: 0,
            lo,
            hi,
            mass: problem.mass_at(hi),
        });
    }

    let mut iterations = 0;
    let mut alpha = 0.5 * (lo + hi);
    let mut mass = problem.mass_at(alpha);
    while (mass - 1.0).abs() > tol {
        if iterations >= MAX_BISECTIONS {
            return Err(Error::SolverNonConvergence {
                iterations,
                lo,
                hi,
                mass,
            });
        }
        if mass > 1.0 {
            hi = alpha;
        } else {
            lo = alpha;
        }
        alpha = 0.5 * (lo + hi);
        mass = problem.mass_at(alpha);
        iterations += 1;
    }

    // bisection leaves |mass - 1| <= tol; remove the remainder
    let p_star: Vec<f64> = problem
        .allocation_at(alpha)
        .into_iter()
        .map(|p| p / mass)
        .collect();
    Ok(OracleSolution {
        objective_value: joint_objective(problem, &p_star)?,
        kkt_residual: kkt_residual(problem, &p_star, alpha),
        p_star,
        alpha_star: alpha,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint {
    pub horizon: usize,
    pub objective: f64,
    pub p_best: f64,
    pub alpha: f64,
}

/// Solves the template at every horizon in `grid` (ascending).
pub fn oracle_rate_curve(template: &JointProblem, grid: &[usize]) -> Result<Vec<RatePoint>> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("horizon grid must be strictly ascending"));
    }
    let best = template.best_arm();
    grid.iter()
        .map(|&n| {
            let sol = solve_oracle(&template.with_horizon(n)?, DEFAULT_TOL)?;
            Ok(RatePoint {
                horizon: n,
                objective: sol.objective_value,
                p_best: sol.p_star[best],
                alpha: sol.alpha_star,
            })
        })
        .collect()
}
