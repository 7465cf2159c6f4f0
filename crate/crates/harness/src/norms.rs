//! Error norms against a reference solution and experimental orders.

use crate::{HarnessError, Result, Sim, Trace};

/// Means of consecutive groups of `factor` fine cells.
pub fn agglomerate(fine: &[f64], factor: usize) -> Vec<f64> {
    fine.chunks(factor)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect()
}

/// `(dx * sum |a - b|, max |a - b|)`.
pub fn l1_linf(a: &[f64], b: &[f64], dx: f64) -> (f64, f64) {
    a.iter().zip(b).fold((0.0, 0.0), |(s, m), (x, y)| {
        let d = (x - y).abs();
        (s + dx * d, f64::max(m, d))
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeError {
    pub edge: String,
    pub l1: f64,
    pub linf: f64,
    pub l1_q: f64,
    pub linf_q: f64,
}

/// Errors of every live edge at the current time against a finer reference
/// of the same network, compared on the coarse cells.
pub fn pde_errors(num: &Sim, reference: &Sim) -> Result<Vec<EdgeError>> {
    let mut out = Vec::new();
    for (i, (e, r)) in num
        .network
        .edges
        .iter()
        .zip(&reference.network.edges)
        .enumerate()
    {
        if num.network.is_lumped(i) {
            continue;
        }
        if r.cells % e.cells != 0 {
            return Err(HarnessError::Config(format!(
                "edge {}: reference grid of {} cells does not refine {} cells",
                e.id, r.cells, e.cells
            )));
        }
        let f = r.cells / e.cells;
        let dx = e.dx();
        let (l1, linf) = l1_linf(&e.u[0], &agglomerate(&r.u[0], f), dx);
        let (l1_q, linf_q) = l1_linf(&e.u[1], &agglomerate(&r.u[1], f), dx);
        out.push(EdgeError {
            edge: e.id.clone(),
            l1,
            linf,
            l1_q,
            linf_q,
        });
    }
    Ok(out)
}

/// Value of component `c` of a finely sampled trace at `t`, by Lagrange
/// interpolation on the nearest samples.
pub fn interpolate(trace: &Trace, c: usize, t: f64) -> f64 {
    const POINTS: usize = 8;
    let ts = &trace.times;
    let n = ts.len();
    if n == 1 {
        return trace.values[0][c];
    }
    let j = ts.partition_point(|x| *x < t);
    let m = POINTS.min(n);
    let lo = j.saturating_sub(m / 2).min(n - m);
    let mut v = 0.0;
    for a in lo..lo + m {
        let mut w = 1.0;
        for b in lo..lo + m {
            if a != b {
                w *= (t - ts[b]) / (ts[a] - ts[b]);
            }
        }
        v += w * trace.values[a][c];
    }
    v
}

/// Per-component `sqrt(sum_n dt_n |w(t_n) - w_ref(t_n)|^2)` over the steps of
/// `coarse`, with the reference interpolated to the coarse times.
pub fn ode_l2_components(coarse: &Trace, reference: &Trace) -> Vec<f64> {
    let dim = coarse.labels.len();
    let mut acc = vec![0.0; dim];
    for n in 1..coarse.times.len() {
        let dt = coarse.times[n] - coarse.times[n - 1];
        for (c, a) in acc.iter_mut().enumerate() {
            let d = coarse.values[n][c] - interpolate(reference, c, coarse.times[n]);
            *a += dt * d * d;
        }
    }
    acc.into_iter().map(f64::sqrt).collect()
}

/// Euclidean combination of [`ode_l2_components`].
pub fn ode_l2(coarse: &Trace, reference: &Trace) -> f64 {
    ode_l2_components(coarse, reference)
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// `log(e_coarse / e_fine) / log(dx_coarse / dx_fine)`.
pub fn eoc(e_coarse: f64, e_fine: f64, dx_coarse: f64, dx_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (dx_coarse / dx_fine).ln()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Norms {
    pub l1: f64,
    pub linf: f64,
    pub l1_q: f64,
    pub linf_q: f64,
    pub ode_l2: f64,
}

pub fn norms(num: &Sim, reference: &Sim, trace: &Trace, reference_trace: &Trace) -> Result<Norms> {
    let per_edge = pde_errors(num, reference)?;
    Ok(Norms {
        l1: per_edge.iter().map(|e| e.l1).sum(),
        linf: per_edge.iter().map(|e| e.linf).fold(0.0, f64::max),
        l1_q: per_edge.iter().map(|e| e.l1_q).sum(),
        linf_q: per_edge.iter().map(|e| e.linf_q).fold(0.0, f64::max),
        ode_l2: ode_l2(trace, reference_trace),
    })
}
