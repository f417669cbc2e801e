//! Gradient-free local minimization (Nelder–Mead from `argmin`).

use argmin::core::{CostFunction, Error, Executor, State};
use argmin::solver::neldermead::NelderMead;

use crate::error::{QinfoError, Result};

struct Objective<'a> {
    f: &'a dyn Fn(&[f64]) -> f64,
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, Error> {
        Ok((self.f)(p))
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: u64,
}

/// Nelder–Mead from `x0` with an axis-aligned initial simplex of size `step`.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_iters: u64, tol: f64) -> Result<Minimum> {
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(tol)
        .map_err(|e| QinfoError::Optimizer(e.to_string()))?;
    let res = Executor::new(Objective { f }, solver)
        .configure(|s| s.max_iters(max_iters))
        .run()
        .map_err(|e| QinfoError::Optimizer(e.to_string()))?;
    let st = res.state();
    let x = st
        .get_best_param()
        .cloned()
        .ok_or_else(|| QinfoError::Optimizer("no parameter recorded".into()))?;
    Ok(Minimum { value: st.get_best_cost(), x, iterations: st.get_iter() })
}

/// Repeated Nelder–Mead passes, restarting from the best point until no further gain.
pub fn polish(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_iters: u64, tol: f64, rounds: usize) -> Result<Minimum> {
    let mut best = nelder_mead(f, x0, step, max_iters, tol)?;
    let mut s = step;
    for _ in 1..rounds {
        s *= 0.3;
        let next = nelder_mead(f, &best.x, s, max_iters, tol)?;
        let gained = best.value - next.value;
        if next.value < best.value {
            best = Minimum { iterations: best.iterations + next.iterations, ..next };
        }
        if gained <= tol {
            break;
        }
    }
    Ok(best)
}
