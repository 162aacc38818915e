//! Limited-memory BFGS with backtracking (Armijo) line search.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    /// Convergence threshold on the max-norm of the gradient.
    pub gtol: f64,
    pub max_iter: usize,
    pub memory: usize,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self { gtol: 1e-8, max_iter: 2000, memory: 12, c1: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub trace: Vec<IterationRecord>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Minimizes `f` given `fg(x) -> (f, ∇f)`.
///
/// The Armijo test carries a slack of ~1e−14·max(1, |f|) so that steps near the
/// minimum, where the decrease is below floating-point resolution of `f`, are
/// still taken on the strength of the gradient.
pub fn minimize<F>(mut fg: F, x0: &[f64], opts: &LbfgsOptions) -> Result<LbfgsResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut f, mut g) = fg(&x)?;
    let mut trace = vec![IterationRecord { iteration: 0, value: f, grad_norm: max_norm(&g), step: 0.0 }];
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();

    for iter in 1..=opts.max_iter {
        let gnorm = max_norm(&g);
        if gnorm < opts.gtol || n == 0 {
            return Ok(LbfgsResult { x, value: f, gradient: g, trace });
        }

        let mut d = two_loop(&g, &s_hist, &y_hist);
        let mut slope = dot(&g, &d);
        if slope >= 0.0 || !slope.is_finite() {
            s_hist.clear();
            y_hist.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        // First steepest-descent step is capped to a modest angle change.
        let mut alpha = if s_hist.is_empty() { (0.1 / max_norm(&d)).min(1.0) } else { 1.0 };

        let slack = 1e-14 * f.abs().max(1.0);
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            let (fn_, gn) = fg(&xn)?;
            if fn_.is_finite() && fn_ <= f + opts.c1 * alpha * slope + slack {
                accepted = Some((xn, fn_, gn));
                break;
            }
            alpha *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            if !s_hist.is_empty() {
                // Retry from steepest descent with a fresh memory.
                s_hist.clear();
                y_hist.clear();
                continue;
            }
            return Err(Error::OptimizerNotConverged { iterations: iter, grad_norm: gnorm });
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-14 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if s_hist.len() == opts.memory {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
        }
        x = xn;
        f = fn_;
        g = gn;
        trace.push(IterationRecord { iteration: iter, value: f, grad_norm: max_norm(&g), step: alpha });
    }
    let gnorm = max_norm(&g);
    if gnorm < opts.gtol {
        return Ok(LbfgsResult { x, value: f, gradient: g, trace });
    }
    Err(Error::OptimizerNotConverged { iterations: opts.max_iter, grad_norm: gnorm })
}

fn two_loop(g: &[f64], s_hist: &[Vec<f64>], y_hist: &[Vec<f64>]) -> Vec<f64> {
    let mut q = g.to_vec();
    let m = s_hist.len();
    let mut alphas = vec![0.0; m];
    for i in (0..m).rev() {
        let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
        alphas[i] = rho * dot(&s_hist[i], &q);
        for (qk, yk) in q.iter_mut().zip(&y_hist[i]) {
            *qk -= alphas[i] * yk;
        }
    }
    if m > 0 {
        let gamma = dot(&s_hist[m - 1], &y_hist[m - 1]) / dot(&y_hist[m - 1], &y_hist[m - 1]);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for i in 0..m {
        let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
        let beta = rho * dot(&y_hist[i], &q);
        for (qk, sk) in q.iter_mut().zip(&s_hist[i]) {
            *qk += (alphas[i] - beta) * sk;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}
