//! Limited-memory BFGS with a strong-Wolfe line search.
//!
//! Used by the reformulation solvers to minimize the center-only objective.
//! Search directions come from the standard two-loop recursion over the last
//! `history` curvature pairs with the initial inverse Hessian scaled by
//! `sᵀy / yᵀy`. Step lengths satisfy the strong Wolfe conditions, found by
//! bracketing then zooming with safeguarded cubic interpolation.
//!
//! When the first trial step already satisfies the Wolfe conditions, one extra
//! evaluation is spent at the cubic-interpolated minimizer of the step and is
//! kept if it is lower and still Wolfe. On quadratics that interpolant is
//! exact, so the line searches become exact and the method terminates like
//! conjugate gradients.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIter,
    LineSearchFailure,
}

#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    /// Stop once `‖∇f‖_∞ ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    pub history: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Function evaluations allowed per line search.
    pub max_line_search: usize,
    /// Compare `g` against central differences at `x0` and panic on mismatch.
    pub check_gradient: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 500,
            history: 10,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 40,
            check_gradient: cfg!(debug_assertions),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub f: f64,
    /// `‖∇f(x)‖_∞` at the returned `x`.
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: Status,
}

/// Relative error threshold of the debug gradient check.
pub const GRADIENT_CHECK_TOLERANCE: f64 = 1e-3;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Central-difference gradient with step `1e-6 · max(1, |x_i|)`.
pub fn finite_difference_gradient<F>(f: &F, x: &[f64]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-6 * x[i].abs().max(1.0);
            probe[i] = x[i] + h;
            let fp = f(&probe);
            probe[i] = x[i] - h;
            let fm = f(&probe);
            probe[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

struct Point {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

struct Evaluator<'a, F, G> {
    f: &'a F,
    g: &'a G,
    count: usize,
}

impl<F, G> Evaluator<'_, F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn at(&mut self, x: Vec<f64>) -> Point {
        self.count += 1;
        let f = (self.f)(&x);
        let g = (self.g)(&x);
        Point { x, f, g }
    }
}

/// Minimizer of the cubic matching values and slopes at `a0` and `a1`.
fn cubic_minimizer(a0: f64, f0: f64, d0: f64, a1: f64, f1: f64, d1: f64) -> Option<f64> {
    let t1 = d0 + d1 - 3.0 * (f0 - f1) / (a0 - a1);
    let disc = t1 * t1 - d0 * d1;
    if disc.is_nan() || disc < 0.0 {
        return None;
    }
    let t2 = (a1 - a0).signum() * disc.sqrt();
    let denom = d1 - d0 + 2.0 * t2;
    if denom == 0.0 {
        return None;
    }
    let a = a1 - (a1 - a0) * (d1 + t2 - t1) / denom;
    a.is_finite().then_some(a)
}

struct LineSearch<'a> {
    x: &'a [f64],
    p: &'a [f64],
    f0: f64,
    d0: f64,
    c1: f64,
    c2: f64,
    budget: usize,
}

struct Trial {
    a: f64,
    point: Point,
    slope: f64,
}

enum LineSearchOutcome {
    Accepted(Point),
    Failed(Option<Point>),
}

impl LineSearch<'_> {
    fn eval<F, G>(&self, ev: &mut Evaluator<'_, F, G>, a: f64) -> Trial
    where
        F: Fn(&[f64]) -> f64,
        G: Fn(&[f64]) -> Vec<f64>,
    {
        let x: Vec<f64> = self
            .x
            .iter()
            .zip(self.p)
            .map(|(xi, pi)| xi + a * pi)
            .collect();
        let point = ev.at(x);
        let slope = dot(&point.g, self.p);
        Trial { a, point, slope }
    }

    fn armijo(&self, t: &Trial) -> bool {
        t.point.f.is_finite() && t.point.f <= self.f0 + self.c1 * t.a * self.d0
    }

    fn curvature(&self, t: &Trial) -> bool {
        t.slope.abs() <= -self.c2 * self.d0
    }

    fn run<F, G>(&self, ev: &mut Evaluator<'_, F, G>, a_init: f64) -> LineSearchOutcome
    where
        F: Fn(&[f64]) -> f64,
        G: Fn(&[f64]) -> Vec<f64>,
    {
        let mut best: Option<Point> = None;
        let keep_best = |p: &Point, best: &mut Option<Point>| {
            if p.f.is_finite() && p.f < self.f0 && best.as_ref().is_none_or(|b| p.f < b.f) {
                *best = Some(Point {
                    x: p.x.clone(),
                    f: p.f,
                    g: p.g.clone(),
                });
            }
        };

        let mut prev = Trial {
            a: 0.0,
            point: Point {
                x: self.x.to_vec(),
                f: self.f0,
                g: Vec::new(),
            },
            slope: self.d0,
        };
        let mut a = a_init;
        let mut used = 0;
        let (lo, hi) = loop {
            if used >= self.budget {
                return LineSearchOutcome::Failed(best);
            }
            let t = self.eval(ev, a);
            used += 1;
            keep_best(&t.point, &mut best);
            if !self.armijo(&t) || (used > 1 && t.point.f >= prev.point.f) {
                break (prev, t);
            }
            if self.curvature(&t) {
                if used == 1 {
                    return LineSearchOutcome::Accepted(self.refine(ev, t));
                }
                return LineSearchOutcome::Accepted(t.point);
            }
            if t.slope >= 0.0 {
                break (t, prev);
            }
            let next = cubic_minimizer(prev.a, prev.point.f, prev.slope, t.a, t.point.f, t.slope)
                .filter(|&c| c > 1.1 * t.a && c < 10.0 * t.a)
                .unwrap_or(2.0 * t.a);
            prev = t;
            a = next;
        };

        let (mut lo, mut hi) = (lo, hi);
        loop {
            if used >= self.budget {
                return LineSearchOutcome::Failed(best);
            }
            let width = hi.a - lo.a;
            if width.abs() <= f64::EPSILON * lo.a.abs().max(1e-300) {
                return LineSearchOutcome::Failed(best);
            }
            let (left, right) = (lo.a.min(hi.a), lo.a.max(hi.a));
            let margin = 0.1 * (right - left);
            let trial_a = if hi.point.f.is_finite() {
                cubic_minimizer(lo.a, lo.point.f, lo.slope, hi.a, hi.point.f, hi.slope)
            } else {
                None
            }
            .filter(|&c| c >= left + margin && c <= right - margin)
            .unwrap_or(0.5 * (lo.a + hi.a));

            let t = self.eval(ev, trial_a);
            used += 1;
            keep_best(&t.point, &mut best);
            if !self.armijo(&t) || t.point.f >= lo.point.f {
                hi = t;
            } else {
                if self.curvature(&t) {
                    return LineSearchOutcome::Accepted(t.point);
                }
                if t.slope * (hi.a - lo.a) >= 0.0 {
                    hi = lo;
                }
                lo = t;
            }
        }
    }

    /// One interpolation step past an immediately-accepted trial.
    fn refine<F, G>(&self, ev: &mut Evaluator<'_, F, G>, t: Trial) -> Point
    where
        F: Fn(&[f64]) -> f64,
        G: Fn(&[f64]) -> Vec<f64>,
    {
        let Some(a) = cubic_minimizer(0.0, self.f0, self.d0, t.a, t.point.f, t.slope) else {
            return t.point;
        };
        if !(a > 0.0 && a < 100.0 * t.a) || (a - t.a).abs() <= 1e-9 * t.a {
            return t.point;
        }
        let r = self.eval(ev, a);
        if r.point.f <= t.point.f && self.armijo(&r) && self.curvature(&r) {
            r.point
        } else {
            t.point
        }
    }
}

/// Minimizes a smooth function from `x0`.
///
/// `f` and `g` must be pure. Accepted steps never increase `f`. On line-search
/// failure the lowest point seen is returned with
/// [`Status::LineSearchFailure`].
pub fn minimize<F, G>(f: F, g: G, x0: &[f64], opts: &MinimizeOptions) -> Result<MinimizeResult>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    if x0.is_empty() {
        return Err(Error::InvalidParameter("empty starting point".into()));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let mut ev = Evaluator {
        f: &f,
        g: &g,
        count: 0,
    };
    let mut cur = ev.at(x0.to_vec());
    if cur.g.len() != x0.len() {
        return Err(Error::DimensionMismatch {
            expected: x0.len(),
            got: cur.g.len(),
        });
    }
    if !cur.f.is_finite() || !all_finite(&cur.g) {
        return Err(Error::InvalidParameter(
            "objective or gradient not finite at starting point".into(),
        ));
    }

    if opts.check_gradient {
        let fd = finite_difference_gradient(&f, x0);
        let err = fd
            .iter()
            .zip(&cur.g)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let rel = err / (1.0 + norm_inf(&cur.g));
        assert!(
            rel <= GRADIENT_CHECK_TOLERANCE,
            "gradient check failed at x0: relative error {rel:.3e} \
             (analytic {:?}, finite-difference {:?})",
            cur.g,
            fd
        );
    }

    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.history);
    let mut iterations = 0;
    let mut status = Status::MaxIter;

    if norm_inf(&cur.g) <= opts.tol {
        status = Status::Converged;
    }

    while status != Status::Converged && iterations < opts.max_iter {
        let mut fresh = memory.is_empty();
        let outcome = loop {
            let mut p = two_loop(&cur.g, &memory);
            let mut d0 = dot(&cur.g, &p);
            if d0.is_nan() || d0 >= 0.0 {
                memory.clear();
                fresh = true;
                p = cur.g.iter().map(|v| -v).collect();
                d0 = dot(&cur.g, &p);
            }
            let a_init = if fresh {
                (1.0 / norm_inf(&cur.g)).min(1.0)
            } else {
                1.0
            };
            let ls = LineSearch {
                x: &cur.x,
                p: &p,
                f0: cur.f,
                d0,
                c1: opts.c1,
                c2: opts.c2,
                budget: opts.max_line_search,
            };
            match ls.run(&mut ev, a_init) {
                LineSearchOutcome::Failed(best) if !fresh => {
                    if let Some(b) = best {
                        cur = b;
                    }
                    memory.clear();
                    fresh = true;
                }
                other => break other,
            }
        };

        match outcome {
            LineSearchOutcome::Accepted(next) => {
                let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = next.g.iter().zip(&cur.g).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
                    if memory.len() == opts.history {
                        memory.pop_front();
                    }
                    memory.push_back((s, y, 1.0 / sy));
                }
                cur = next;
                iterations += 1;
                if norm_inf(&cur.g) <= opts.tol {
                    status = Status::Converged;
                }
            }
            LineSearchOutcome::Failed(best) => {
                if let Some(b) = best {
                    if b.f < cur.f {
                        cur = b;
                    }
                }
                status = if norm_inf(&cur.g) <= opts.tol {
                    Status::Converged
                } else {
                    Status::LineSearchFailure
                };
                break;
            }
        }
    }

    Ok(MinimizeResult {
        grad_norm: norm_inf(&cur.g),
        f: cur.f,
        x: cur.x,
        iterations,
        evaluations: ev.count,
        status,
    })
}

fn two_loop(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}
