//! Limited-memory BFGS with a backtracking (Armijo) line search.
//!
//! Deterministic: no randomness and a fixed evaluation order.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct LbfgsConfig {
    pub max_iter: usize,
    /// Stop when `max_i |g_i|` falls below this.
    pub grad_tol: f64,
    /// Number of stored correction pairs.
    pub memory: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self { max_iter: 1000, grad_tol: 1e-5, memory: 10, c1: 1e-4, max_backtracks: 60 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Termination {
    /// Gradient max-norm below tolerance.
    Converged,
    MaxIterations,
    /// No step along the search direction gave sufficient decrease.
    Stalled,
}

#[derive(Clone, Debug)]
pub struct LbfgsReport {
    pub iterations: usize,
    pub termination: Termination,
    pub value: f64,
    pub grad_max: f64,
    /// Objective after each accepted iterate, starting with the initial point.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn minimize<F>(mut objective: F, x0: Vec<f64>, cfg: &LbfgsConfig) -> Result<(Vec<f64>, LbfgsReport)>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    if cfg.max_iter == 0 {
        return Err(Error::Config("max_iter must be at least 1".into()));
    }
    let mut x = x0;
    let (mut f, mut g) = objective(&x);
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Optimization("objective is not finite at the starting point".into()));
    }
    let mut history = vec![f];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let termination = loop {
        if max_abs(&g) < cfg.grad_tol {
            break Termination::Converged;
        }
        if iterations >= cfg.max_iter {
            break Termination::MaxIterations;
        }

        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * dot(s, &d);
            d.iter_mut().zip(y).for_each(|(di, yi)| *di -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|di| *di *= gamma);
        }
        for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            d.iter_mut().zip(s).for_each(|(di, si)| *di += (a - b) * si);
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            pairs.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }

        let mut step = if pairs.is_empty() { 1.0 / max_abs(&d).max(1.0) } else { 1.0 };
        let mut accepted = None;
        let mut saw_finite = false;
        for _ in 0..cfg.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (ft, gt) = objective(&trial);
            let finite = ft.is_finite() && gt.iter().all(|v| v.is_finite());
            saw_finite |= finite;
            if finite && ft <= f + cfg.c1 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            if !saw_finite {
                return Err(Error::Optimization(format!(
                    "no finite step along the search direction at iteration {}",
                    iterations + 1
                )));
            }
            break Termination::Stalled;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if pairs.len() == cfg.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        x = x_new;
        f = f_new;
        g = g_new;
        history.push(f);
        iterations += 1;
    };
    let grad_max = max_abs(&g);
    Ok((x, LbfgsReport { iterations, termination, value: f, grad_max, history }))
}
