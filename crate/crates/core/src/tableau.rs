//! Explicit Runge-Kutta tableaus and a rooted-tree order condition checker.

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct ButcherTableau<S> {
    pub name: &'static str,
    /// Strictly lower triangular coefficients, `a[i][j]` for `j < i`.
    pub a: Vec<Vec<S>>,
    pub b: Vec<S>,
    pub c: Vec<S>,
    pub order: usize,
}

fn frac<S: Scalar>(rows: &[&[f64]]) -> Vec<Vec<S>> {
    rows.iter()
        .map(|r| r.iter().map(|v| lit::<S>(*v)).collect())
        .collect()
}

impl<S: Scalar> ButcherTableau<S> {
    pub fn stages(&self) -> usize {
        self.b.len()
    }

    fn build(name: &'static str, order: usize, a: &[&[f64]], b: &[f64], c: &[f64]) -> Self {
        let s = b.len();
        let mut full = vec![vec![S::zero(); s]; s];
        for (i, row) in frac::<S>(a).into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                full[i][j] = v;
            }
        }
        Self {
            name,
            a: full,
            b: b.iter().map(|v| lit(*v)).collect(),
            c: c.iter().map(|v| lit(*v)).collect(),
            order,
        }
    }

    pub fn euler() -> Self {
        Self::build("euler", 1, &[&[]], &[1.0], &[0.0])
    }

    pub fn heun() -> Self {
        Self::build("heun", 2, &[&[], &[1.0]], &[0.5, 0.5], &[0.0, 1.0])
    }

    pub fn kutta3() -> Self {
        Self::build(
            "kutta3",
            3,
            &[&[], &[0.5], &[-1.0, 2.0]],
            &[1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
            &[0.0, 0.5, 1.0],
        )
    }

    pub fn rk4() -> Self {
        Self::build(
            "rk4",
            4,
            &[&[], &[0.5], &[0.0, 0.5], &[0.0, 0.0, 1.0]],
            &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            &[0.0, 0.5, 0.5, 1.0],
        )
    }

    /// Butcher's six stage method of order five.
    pub fn butcher5() -> Self {
        Self::build(
            "butcher5",
            5,
            &[
                &[],
                &[0.25],
                &[0.125, 0.125],
                &[0.0, -0.5, 1.0],
                &[3.0 / 16.0, 0.0, 0.0, 9.0 / 16.0],
                &[-3.0 / 7.0, 2.0 / 7.0, 12.0 / 7.0, -12.0 / 7.0, 8.0 / 7.0],
            ],
            &[
                7.0 / 90.0,
                0.0,
                32.0 / 90.0,
                12.0 / 90.0,
                32.0 / 90.0,
                7.0 / 90.0,
            ],
            &[0.0, 0.25, 0.25, 0.5, 0.75, 1.0],
        )
    }

    /// Butcher's seven stage method of order six.
    pub fn butcher6() -> Self {
        Self::build(
            "butcher6",
            6,
            &[
                &[],
                &[1.0 / 3.0],
                &[0.0, 2.0 / 3.0],
                &[1.0 / 12.0, 1.0 / 3.0, -1.0 / 12.0],
                &[-1.0 / 16.0, 9.0 / 8.0, -3.0 / 16.0, -3.0 / 8.0],
                &[0.0, 9.0 / 8.0, -3.0 / 8.0, -3.0 / 4.0, 0.5],
                &[
                    9.0 / 44.0,
                    -9.0 / 11.0,
                    63.0 / 44.0,
                    18.0 / 11.0,
                    0.0,
                    -16.0 / 11.0,
                ],
            ],
            &[
                11.0 / 120.0,
                0.0,
                27.0 / 40.0,
                27.0 / 40.0,
                -4.0 / 15.0,
                -4.0 / 15.0,
                11.0 / 120.0,
            ],
            &[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 0.5, 0.5, 1.0],
        )
    }

    /// Cheapest shipped tableau reaching the requested order.
    pub fn for_order(order: usize) -> Result<Self> {
        match order {
            1 => Ok(Self::euler()),
            2 => Ok(Self::heun()),
            3 => Ok(Self::kutta3()),
            4 => Ok(Self::rk4()),
            5 => Ok(Self::butcher5()),
            6 => Ok(Self::butcher6()),
            _ => Err(Error::InvalidParameter(format!(
                "no Runge-Kutta tableau of order {order}"
            ))),
        }
    }

    /// Largest defect `|b . Phi(t) - 1/gamma(t)|` over all rooted trees up to `order`,
    /// together with the row-sum defect `max |c_i - sum_j a_ij|`.
    pub fn order_defect(&self, order: usize) -> S {
        let s = self.stages();
        let mut defect = S::zero();
        for i in 0..s {
            let row: S = self.a[i].iter().copied().sum();
            defect = defect.max((row - self.c[i]).abs());
        }
        let trees = rooted_trees(order);
        // Internal weights per tree: phi[t][i].
        let mut phi: Vec<Vec<S>> = Vec::with_capacity(trees.len());
        for t in &trees {
            let mut v = vec![S::one(); s];
            for &child in &t.children {
                for (i, vi) in v.iter_mut().enumerate() {
                    let inner: S = (0..s).map(|j| self.a[i][j] * phi[child][j]).sum();
                    *vi *= inner;
                }
            }
            let weight: S = self.b.iter().zip(&v).map(|(b, p)| *b * *p).sum();
            let expected = S::one() / from_usize::<S>(t.gamma);
            defect = defect.max((weight - expected).abs());
            phi.push(v);
        }
        defect
    }

    pub fn check(&self) -> Result<()> {
        if self.order_defect(self.order) > lit(1e-12) {
            return Err(Error::InvalidParameter(format!(
                "tableau {} violates its order conditions",
                self.name
            )));
        }
        Ok(())
    }
}

/// A rooted tree, children referencing earlier trees in the enumeration.
#[derive(Clone, Debug)]
pub struct RootedTree {
    pub order: usize,
    pub children: Vec<usize>,
    pub gamma: usize,
}

/// All rooted trees with at most `max_order` nodes, children before parents.
pub fn rooted_trees(max_order: usize) -> Vec<RootedTree> {
    let mut trees: Vec<RootedTree> = Vec::new();
    for n in 1..=max_order {
        let mut forests = Vec::new();
        forests_of(&trees, n - 1, trees.len(), &mut Vec::new(), &mut forests);
        for children in forests {
            let gamma = children.iter().fold(n, |g, &c| g * trees[c].gamma);
            trees.push(RootedTree {
                order: n,
                children,
                gamma,
            });
        }
    }
    trees
}

/// Multisets of trees (non-increasing index sequences) with total order `rem`.
fn forests_of(
    trees: &[RootedTree],
    rem: usize,
    max_idx: usize,
    cur: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if rem == 0 {
        out.push(cur.clone());
        return;
    }
    for idx in (0..max_idx).rev() {
        if trees[idx].order <= rem {
            cur.push(idx);
            forests_of(trees, rem - trees[idx].order, idx + 1, cur, out);
            cur.pop();
        }
    }
}
