//! Limited-memory BFGS ascent with backtracking Armijo line search.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{dot, norm2, norm_inf};

/// A smooth objective to maximize. `eval` returns the value and overwrites
/// `grad` with its gradient.
pub trait Problem {
    fn dim(&self) -> usize;
    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    Unbounded,
    Stalled,
    NonFiniteStart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub memory: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
    pub max_iters: usize,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    pub divergence_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub x: Vec<f64>,
    /// Unscaled objective at `x`.
    pub value: f64,
    /// Euclidean norm of the scaled gradient at `x`.
    pub grad_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Unscaled objective after every accepted step, starting point first.
    pub trace: Vec<f64>,
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Maximizes `problem` from `x0`. Tests and step rules use
/// `scale × objective`, so tolerances are per-datum when `scale = 1/n`.
pub fn maximize<P: Problem>(problem: &mut P, x0: &[f64], scale: f64, cfg: &Settings) -> Outcome {
    let n = problem.dim();
    let mut x = x0.to_vec();
    // Internally minimize phi = -scale * f.
    let eval = |p: &mut P, x: &[f64], g: &mut [f64]| {
        let f = p.eval(x, g);
        for gi in g.iter_mut() {
            *gi *= -scale;
        }
        f
    };
    let mut g = vec![0.0; n];
    let mut f = eval(problem, &x, &mut g);
    let mut trace = vec![f];
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Outcome {
            grad_norm: f64::NAN,
            x,
            value: f,
            iterations: 0,
            termination: Termination::NonFiniteStart,
            trace,
        };
    }

    let mut pairs: VecDeque<Pair> = VecDeque::with_capacity(cfg.memory);
    let mut d = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut iterations = 0;
    let termination = loop {
        two_loop(&pairs, &g, &mut d);
        let gnorm = norm2(&g);
        if gnorm <= cfg.grad_tol && norm_inf(&d) <= cfg.step_tol {
            break Termination::Converged;
        }
        if norm_inf(&x) > cfg.divergence_bound {
            break Termination::Unbounded;
        }
        if iterations >= cfg.max_iters {
            break Termination::MaxIterations;
        }
        if pairs.is_empty() {
            // Unit-length first step keeps the path invariant to objective scaling.
            let m = norm_inf(&g);
            if m > 0.0 {
                d.iter_mut().for_each(|v| *v /= m);
            }
        }
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            pairs.clear();
            let m = norm_inf(&g).max(f64::MIN_POSITIVE);
            for (di, gi) in d.iter_mut().zip(&g) {
                *di = -gi / m;
            }
            slope = dot(&g, &d);
        }
        let phi0 = -scale * f;
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            let f_try = eval(problem, &x_new, &mut g_new);
            let phi = -scale * f_try;
            if phi.is_finite() && phi <= phi0 + cfg.armijo * step * slope && f_try >= f {
                accepted = Some(f_try);
                break;
            }
            step *= cfg.backtrack;
        }
        let Some(f_new) = accepted else {
            if pairs.is_empty() {
                break Termination::Stalled;
            }
            // Retry from steepest ascent before giving up.
            pairs.clear();
            continue;
        };
        iterations += 1;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm2(&s) * norm2(&y) && sy > 0.0 {
            if pairs.len() == cfg.memory {
                pairs.pop_front();
            }
            pairs.push_back(Pair { rho: 1.0 / sy, s, y });
        }
        core::mem::swap(&mut x, &mut x_new);
        core::mem::swap(&mut g, &mut g_new);
        f = f_new;
        trace.push(f);
    };
    Outcome {
        grad_norm: norm2(&g),
        x,
        value: f,
        iterations,
        termination,
        trace,
    }
}

/// `d = -H g` with the standard two-loop recursion and `H0 = γ I`.
fn two_loop(pairs: &VecDeque<Pair>, g: &[f64], d: &mut [f64]) {
    d.iter_mut().zip(g).for_each(|(di, gi)| *di = -gi);
    let mut alpha = vec![0.0; pairs.len()];
    for (i, p) in pairs.iter().enumerate().rev() {
        alpha[i] = p.rho * dot(&p.s, d);
        d.iter_mut().zip(&p.y).for_each(|(di, yi)| *di -= alpha[i] * yi);
    }
    if let Some(last) = pairs.back() {
        let gamma = 1.0 / (last.rho * dot(&last.y, &last.y));
        d.iter_mut().for_each(|di| *di *= gamma);
    }
    for (i, p) in pairs.iter().enumerate() {
        let beta = p.rho * dot(&p.y, d);
        d.iter_mut()
            .zip(&p.s)
            .for_each(|(di, si)| *di += (alpha[i] - beta) * si);
    }
}
