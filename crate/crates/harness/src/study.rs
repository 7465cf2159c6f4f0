//! Grid refinement studies against a fine reference run.

use std::path::Path;

use adernet::config::{NetworkConfig, SolverKind};
use adernet::reconstruction::ReconstructionMode;
use rayon::prelude::*;

use crate::cases::{builtin_case, with_resolution};
use crate::norms::{eoc, norms, Norms};
use crate::output::fmt_num;
use crate::{run_recorded, simulation, HarnessError, Result, Sim, Trace};

/// Final state and ODE trace of one run.
pub struct Solution {
    pub sim: Sim,
    pub trace: Trace,
}

pub fn solve(config: &NetworkConfig) -> Result<Solution> {
    let mut sim = simulation(config)?;
    let trace = run_recorded(&mut sim, config.run.t_end, &[], |_| Ok(()))?;
    Ok(Solution { sim, trace })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub order: usize,
    pub cells: usize,
    pub steps: usize,
    pub norms: Norms,
    pub l1_rate: Option<f64>,
    pub linf_rate: Option<f64>,
    pub ode_rate: Option<f64>,
}

pub struct Study {
    pub case: String,
    pub solver: SolverKind,
    pub reference_order: usize,
    pub reference_cells: usize,
    pub rows: Vec<StudyRow>,
}

/// Reference order used when none is given.
pub const REFERENCE_ORDER: usize = 6;

/// Smallest multiple of every grid that is at least twice the finest one.
pub fn reference_cells(grids: &[usize]) -> usize {
    let lcm = grids.iter().fold(1usize, |a, b| a / gcd(a, *b) * b);
    let finest = grids.iter().copied().max().unwrap_or(1);
    lcm * (2 * finest).div_ceil(lcm)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Runs `case` on every `(order, grid)` pair in parallel and compares with a
/// reference of order `reference_order` on `reference_cells` cells.
pub fn convergence(
    case: &str,
    solver: SolverKind,
    orders: &[usize],
    grids: &[usize],
    reference_order: usize,
    reference_cells: usize,
    reconstruction: ReconstructionMode,
) -> Result<Study> {
    if grids.is_empty() || orders.is_empty() {
        return Err(HarnessError::Config(
            "need at least one order and one grid".into(),
        ));
    }
    if let Some(g) = grids
        .iter()
        .find(|g| **g == 0 || !reference_cells.is_multiple_of(**g))
    {
        return Err(HarnessError::Config(format!(
            "grid {g} does not divide the reference grid {reference_cells}"
        )));
    }
    let mut base = builtin_case(case)?;
    base.run.reconstruction = reconstruction;
    let reference = solve(&with_resolution(
        base.clone(),
        reference_cells,
        reference_order,
        solver,
    ))?;
    let mut grids = grids.to_vec();
    grids.sort_unstable();
    grids.dedup();
    let jobs: Vec<(usize, usize)> = orders
        .iter()
        .flat_map(|k| grids.iter().map(move |n| (*k, *n)))
        .collect();
    let results: Vec<Result<StudyRow>> = jobs
        .par_iter()
        .map(|&(order, cells)| {
            let s = solve(&with_resolution(base.clone(), cells, order, solver))?;
            Ok(StudyRow {
                order,
                cells,
                steps: s.sim.steps,
                norms: norms(&s.sim, &reference.sim, &s.trace, &reference.trace)?,
                l1_rate: None,
                linf_rate: None,
                ode_rate: None,
            })
        })
        .collect();
    let mut rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    for i in 1..rows.len() {
        let (a, b) = (&rows[i - 1], &rows[i]);
        if a.order != b.order {
            continue;
        }
        let (dc, df) = (1.0 / a.cells as f64, 1.0 / b.cells as f64);
        let l1 = eoc(a.norms.l1, b.norms.l1, dc, df);
        let linf = eoc(a.norms.linf, b.norms.linf, dc, df);
        let ode = eoc(a.norms.ode_l2, b.norms.ode_l2, dc, df);
        let r = &mut rows[i];
        r.l1_rate = Some(l1);
        r.linf_rate = Some(linf);
        r.ode_rate = Some(ode);
    }
    Ok(Study {
        case: case.into(),
        solver,
        reference_order,
        reference_cells,
        rows,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

impl Study {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "order", "N", "steps", "L1", "O_L1", "Linf", "O_Linf", "L1_q", "Linf_q", "ODE_L2",
            "O_ODE_L2",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.order.to_string(),
                r.cells.to_string(),
                r.steps.to_string(),
                fmt_num(r.norms.l1),
                opt(r.l1_rate),
                fmt_num(r.norms.linf),
                opt(r.linf_rate),
                fmt_num(r.norms.l1_q),
                fmt_num(r.norms.linf_q),
                fmt_num(r.norms.ode_l2),
                opt(r.ode_rate),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Row for the given order and grid.
    pub fn row(&self, order: usize, cells: usize) -> Option<&StudyRow> {
        self.rows
            .iter()
            .find(|r| r.order == order && r.cells == cells)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_grid_refines_all() {
        assert_eq!(reference_cells(&[50, 100, 200, 400]), 800);
        assert_eq!(reference_cells(&[30, 40]), 120);
    }
}
