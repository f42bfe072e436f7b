//! Kirkwood-Dirac quasiprobability distributions over stochastic trajectories.
//!
//! A trajectory fixes one product-basis outcome per charge before the unitary
//! (`start`) and after it (`end`). Both lists are stored in charge order; the
//! reversed measurement order of the final round is handled by the evaluator.
//!
//! Distributions are dense arrays indexed by a mixed-radix code over
//! `(i_1, ..., i_c, f_1, ..., f_c)` with `i_1` most significant, each digit a
//! flat product index in `0..d^2`.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::charges::{ChargeSet, ProductIndex};
use crate::error::{dim_err, Error, Result};
use crate::numerics;
use crate::par;
use crate::tensor::{ComplexMatrix, ONE, ZERO};
use crate::thermal::DensityOperator;

/// Largest number of charges for which the symmetrized distribution is built.
pub const MAX_SYMMETRIZED_CHARGES: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Trajectory {
    pub start: Vec<ProductIndex>,
    pub end: Vec<ProductIndex>,
}

impl Trajectory {
    pub fn charges(&self) -> usize {
        self.start.len()
    }

    /// Decode a mixed-radix trajectory code.
    pub fn from_code(code: usize, d: usize, c: usize) -> Self {
        let mut t = Self {
            start: vec![ProductIndex::new(0, 0); c],
            end: vec![ProductIndex::new(0, 0); c],
        };
        t.decode_into(code, d);
        t
    }

    fn decode_into(&mut self, mut code: usize, d: usize) {
        let n = d * d;
        for slot in self.end.iter_mut().rev() {
            *slot = ProductIndex::from_flat(code % n, d);
            code /= n;
        }
        for slot in self.start.iter_mut().rev() {
            *slot = ProductIndex::from_flat(code % n, d);
            code /= n;
        }
    }

    pub fn code(&self, d: usize) -> usize {
        let n = d * d;
        self.start
            .iter()
            .chain(&self.end)
            .fold(0, |acc, k| acc * n + k.flat(d))
    }

    /// True iff every charge's eigenvalue sum is unchanged, to `tol`.
    pub fn is_conserving(&self, cs: &ChargeSet, tol: f64) -> bool {
        (0..cs.len()).all(|alpha| {
            (cs.eigenvalue_sum(alpha, self.start[alpha]) - cs.eigenvalue_sum(alpha, self.end[alpha]))
                .abs()
                <= tol
        })
    }
}

/// Free-function form of [`Trajectory::is_conserving`] with the configured tolerance.
pub fn is_conserving(traj: &Trajectory, cs: &ChargeSet) -> bool {
    traj.is_conserving(cs, numerics::get().conserving_tol)
}

/// `(d^2)^(2c)`, or `None` on overflow.
pub fn trajectory_count(d: usize, c: usize) -> Option<u128> {
    (d as u128 * d as u128).checked_pow(2 * c as u32)
}

fn checked_count(cs: &ChargeSet) -> Result<usize> {
    let cap = numerics::get().trajectory_cap as u128;
    match trajectory_count(cs.dim(), cs.len()) {
        Some(n) if n <= cap => Ok(n as usize),
        Some(n) => Err(Error::CapExceeded {
            what: "trajectory",
            count: n,
            cap,
        }),
        None => Err(Error::CapExceeded {
            what: "trajectory",
            count: u128::MAX,
            cap,
        }),
    }
}

/// All trajectories in code order.
pub fn enumerate_trajectories(cs: &ChargeSet) -> Result<impl Iterator<Item = Trajectory>> {
    let n = checked_count(cs)?;
    let (d, c) = (cs.dim(), cs.len());
    Ok((0..n).map(move |code| Trajectory::from_code(code, d, c)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Forward,
    Reverse,
    Symmetrized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Restrict {
    All,
    Conserving,
    Nonconserving,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Initial,
    Final,
}

/// Average split into conserving and nonconserving parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitAverage {
    pub conserving: C64,
    pub nonconserving: C64,
}

impl SplitAverage {
    pub fn all(&self) -> C64 {
        self.conserving + self.nonconserving
    }

    pub fn get(&self, restrict: Restrict) -> C64 {
        match restrict {
            Restrict::All => self.all(),
            Restrict::Conserving => self.conserving,
            Restrict::Nonconserving => self.nonconserving,
        }
    }
}

/// Marginal over one trajectory index.
#[derive(Clone, Debug)]
pub struct Marginal {
    /// Indexed by flat product index.
    pub values: Vec<C64>,
    /// Whether the marginal is real by projector completeness alone.
    pub guaranteed_real: bool,
}

impl Marginal {
    pub fn real(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }
}

#[derive(Clone, Debug)]
pub struct QuasiDistribution {
    kind: Kind,
    charges: ChargeSet,
    weights: Vec<C64>,
    conserving: Vec<bool>,
}

impl QuasiDistribution {
    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn charges(&self) -> &ChargeSet {
        &self.charges
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[C64] {
        &self.weights
    }

    pub fn weight(&self, traj: &Trajectory) -> C64 {
        self.weights[traj.code(self.charges.dim())]
    }

    pub fn is_conserving_code(&self, code: usize) -> bool {
        self.conserving[code]
    }

    pub fn trajectory(&self, code: usize) -> Trajectory {
        Trajectory::from_code(code, self.charges.dim(), self.charges.len())
    }

    pub fn total(&self) -> C64 {
        self.weights.iter().sum()
    }

    /// `|sum of weights - 1|`.
    pub fn normalization_error(&self) -> f64 {
        (self.total() - ONE).norm()
    }

    /// Largest `|weight|` over nonconserving trajectories.
    pub fn max_nonconserving_weight(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.conserving)
            .filter(|(_, &c)| !c)
            .fold(0.0, |m, (w, _)| m.max(w.norm()))
    }

    /// Largest `|Im weight|` and most negative real part.
    pub fn nonclassicality(&self) -> (f64, f64) {
        self.weights.iter().fold((0.0f64, 0.0f64), |(im, neg), w| {
            (im.max(w.im.abs()), neg.min(w.re))
        })
    }

    /// Iterate `(code, trajectory, weight, conserving)` in code order.
    pub fn rows(&self) -> impl Iterator<Item = (usize, Trajectory, C64, bool)> + '_ {
        (0..self.len()).map(move |code| {
            (
                code,
                self.trajectory(code),
                self.weights[code],
                self.conserving[code],
            )
        })
    }

    /// `sum weight * f` over trajectories with `|weight| > weight_floor`, split by conservation.
    ///
    /// The two partial sums are accumulated in one pass in code order, so
    /// `all() == conserving + nonconserving` holds exactly.
    pub fn split_average<F>(&self, mut f: F) -> Result<SplitAverage>
    where
        F: FnMut(&Trajectory) -> C64,
    {
        self.split_average_coded(|_, t| f(t))
    }

    /// As [`Self::split_average`], also passing the trajectory code.
    pub fn split_average_coded<F>(&self, mut f: F) -> Result<SplitAverage>
    where
        F: FnMut(usize, &Trajectory) -> C64,
    {
        let floor = numerics::get().weight_floor;
        let (d, c) = (self.charges.dim(), self.charges.len());
        let mut traj = Trajectory::from_code(0, d, c);
        let mut out = SplitAverage {
            conserving: ZERO,
            nonconserving: ZERO,
        };
        for (code, &w) in self.weights.iter().enumerate() {
            if w.norm() <= floor {
                continue;
            }
            traj.decode_into(code, d);
            let v = f(code, &traj);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonfiniteValue(w.norm()));
            }
            if self.conserving[code] {
                out.conserving += w * v;
            } else {
                out.nonconserving += w * v;
            }
        }
        Ok(out)
    }

    pub fn quasi_average<F>(&self, f: F, restrict: Restrict) -> Result<C64>
    where
        F: FnMut(&Trajectory) -> C64,
    {
        Ok(self.split_average(f)?.get(restrict))
    }

    /// Marginal over `start[alpha]` or `end[alpha]`.
    ///
    /// Only `alpha = 0` is flagged as guaranteed real; the evaluator still sums
    /// every other index honestly.
    pub fn single_index_marginal(&self, stage: Stage, alpha: usize) -> Result<Marginal> {
        let c = self.charges.len();
        if alpha >= c {
            return Err(Error::IndexOutOfRange {
                what: "charge",
                index: alpha,
                bound: c,
            });
        }
        let n = self.charges.joint_dim();
        let digit = match stage {
            Stage::Initial => alpha,
            Stage::Final => c + alpha,
        };
        let stride = n.pow((2 * c - 1 - digit) as u32);
        let mut values = vec![ZERO; n];
        for (code, &w) in self.weights.iter().enumerate() {
            values[(code / stride) % n] += w;
        }
        Ok(Marginal {
            values,
            guaranteed_real: alpha == 0,
        })
    }
}

/// Per-ordering overlap tables for the rank-one contraction.
struct Tables {
    n: usize,
    c: usize,
    /// `a[I]`: product of initial-round overlaps for every start tuple.
    a: Vec<C64>,
    /// `b[F]`: product of final-round overlaps for every end tuple.
    b: Vec<C64>,
    /// `<last_f| U |last_i>` in the last measured charge's product basis.
    core: ComplexMatrix,
    /// `<first_i| X |first_f>` with `X = rho U^dagger` or `U^dagger rho`.
    edge: ComplexMatrix,
    first: usize,
    last: usize,
}

impl Tables {
    fn build(cs: &ChargeSet, order: &[usize], u: &ComplexMatrix, edge_op: &ComplexMatrix) -> Self {
        let n = cs.joint_dim();
        let c = cs.len();
        let first = order[0];
        let last = order[c - 1];
        // links[t][(k', k)] = <order[t+1]_{k'} | order[t]_k>
        let links: Vec<ComplexMatrix> = order
            .windows(2)
            .map(|w| cs.product_basis(w[1]).adjoint() * cs.product_basis(w[0]))
            .collect();
        let tuples = n.pow(c as u32);
        let digit = |code: usize, alpha: usize| (code / n.pow((c - 1 - alpha) as u32)) % n;
        let mut a = vec![ONE; tuples];
        let mut b = vec![ONE; tuples];
        for code in 0..tuples {
            for (t, link) in links.iter().enumerate() {
                let (from, to) = (digit(code, order[t]), digit(code, order[t + 1]));
                a[code] *= link[(to, from)];
                b[code] *= link[(to, from)].conj();
            }
        }
        let wl = cs.product_basis(last);
        let wf = cs.product_basis(first);
        Self {
            n,
            c,
            a,
            b,
            core: wl.adjoint() * u * wl,
            edge: wf.adjoint() * edge_op * wf,
            first,
            last,
        }
    }

    fn weight(&self, start: usize, end: usize) -> C64 {
        let n = self.n;
        let digit = |code: usize, alpha: usize| (code / n.pow((self.c - 1 - alpha) as u32)) % n;
        self.a[start]
            * self.b[end]
            * self.core[(digit(end, self.last), digit(start, self.last))]
            * self.edge[(digit(start, self.first), digit(end, self.first))]
    }
}

fn check_inputs(rho: &DensityOperator, u: &ComplexMatrix, cs: &ChargeSet) -> Result<()> {
    let n = cs.joint_dim();
    if rho.dim() != n {
        return Err(dim_err(format!("{n}x{n} state"), rho.dim()));
    }
    if u.nrows() != n || u.ncols() != n {
        return Err(dim_err(
            format!("{n}x{n} unitary"),
            format!("{}x{}", u.nrows(), u.ncols()),
        ));
    }
    Ok(())
}

fn ensure_conserving(u: &ComplexMatrix, cs: &ChargeSet) -> Result<()> {
    let report = cs.check_conservation(u, numerics::get().conservation_tol)?;
    if let Some(alpha) = (0..cs.len()).find(|&a| report.residuals[a] > report.thresholds[a]) {
        return Err(Error::NotConserving {
            label: cs.charges()[alpha].label.clone(),
            residual: report.residuals[alpha],
        });
    }
    Ok(())
}

fn assemble(
    kind: Kind,
    cs: &ChargeSet,
    orders: &[Vec<usize>],
    u: &ComplexMatrix,
    edge_op: &ComplexMatrix,
) -> Result<QuasiDistribution> {
    let total = checked_count(cs)?;
    let tuples = cs.joint_dim().pow(cs.len() as u32);
    let tables: Vec<Tables> = orders
        .iter()
        .map(|o| Tables::build(cs, o, u, edge_op))
        .collect();
    let scale = C64::new(1.0 / orders.len() as f64, 0.0);
    let blocks = par::map_collect(tuples, |start| {
        (0..tuples)
            .map(|end| {
                let sum: C64 = tables.iter().map(|t| t.weight(start, end)).sum();
                sum * scale
            })
            .collect::<Vec<_>>()
    });
    let weights: Vec<C64> = blocks.into_iter().flatten().collect();
    debug_assert_eq!(weights.len(), total);
    let tol = numerics::get().conserving_tol;
    let (d, c) = (cs.dim(), cs.len());
    let conserving = (0..total)
        .map(|code| Trajectory::from_code(code, d, c).is_conserving(cs, tol))
        .collect();
    Ok(QuasiDistribution {
        kind,
        charges: cs.clone(),
        weights,
        conserving,
    })
}

fn identity_order(c: usize) -> Vec<usize> {
    (0..c).collect()
}

/// `Tr(U^dagger [Pi_{1,f_1} ... Pi_{c,f_c}] U [Pi_{c,i_c} ... Pi_{1,i_1}] rho)`.
pub fn forward_kdq(rho: &DensityOperator, u: &ComplexMatrix, cs: &ChargeSet) -> Result<QuasiDistribution> {
    check_inputs(rho, u, cs)?;
    ensure_conserving(u, cs)?;
    forward_kdq_unchecked(rho, u, cs)
}

/// [`forward_kdq`] without the conservation precondition.
pub fn forward_kdq_unchecked(
    rho: &DensityOperator,
    u: &ComplexMatrix,
    cs: &ChargeSet,
) -> Result<QuasiDistribution> {
    check_inputs(rho, u, cs)?;
    let edge = rho.matrix() * u.adjoint();
    assemble(Kind::Forward, cs, &[identity_order(cs.len())], u, &edge)
}

/// `Tr([Pi_{1,f_1} ... Pi_{c,f_c}] U [Pi_{c,i_c} ... Pi_{1,i_1}] U^dagger rho)`, keyed like the forward distribution.
pub fn reverse_kdq(rho: &DensityOperator, u: &ComplexMatrix, cs: &ChargeSet) -> Result<QuasiDistribution> {
    check_inputs(rho, u, cs)?;
    ensure_conserving(u, cs)?;
    reverse_kdq_unchecked(rho, u, cs)
}

pub fn reverse_kdq_unchecked(
    rho: &DensityOperator,
    u: &ComplexMatrix,
    cs: &ChargeSet,
) -> Result<QuasiDistribution> {
    check_inputs(rho, u, cs)?;
    let edge = u.adjoint() * rho.matrix();
    assemble(Kind::Reverse, cs, &[identity_order(cs.len())], u, &edge)
}

/// All permutations of `0..c` in lexicographic order.
pub fn permutations(c: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(c), &mut vec![false; c], &mut out);
    out
}

fn check_symmetrizable(cs: &ChargeSet) -> Result<()> {
    if cs.len() > MAX_SYMMETRIZED_CHARGES {
        return Err(Error::CapExceeded {
            what: "charge permutation",
            count: (1..=cs.len() as u128).product(),
            cap: 720,
        });
    }
    Ok(())
}

/// Forward distribution averaged over all `c!` measurement orderings, keyed in charge order.
pub fn symmetrized_kdq(
    rho: &DensityOperator,
    u: &ComplexMatrix,
    cs: &ChargeSet,
) -> Result<QuasiDistribution> {
    check_inputs(rho, u, cs)?;
    check_symmetrizable(cs)?;
    ensure_conserving(u, cs)?;
    let edge = rho.matrix() * u.adjoint();
    assemble(Kind::Symmetrized, cs, &permutations(cs.len()), u, &edge)
}

/// Reverse distribution averaged over all measurement orderings.
pub fn symmetrized_reverse_kdq(
    rho: &DensityOperator,
    u: &ComplexMatrix,
    cs: &ChargeSet,
) -> Result<QuasiDistribution> {
    check_inputs(rho, u, cs)?;
    check_symmetrizable(cs)?;
    ensure_conserving(u, cs)?;
    let edge = u.adjoint() * rho.matrix();
    assemble(Kind::Symmetrized, cs, &permutations(cs.len()), u, &edge)
}

/// Weight of one trajectory for one measurement ordering, without building the full distribution.
pub(crate) fn ordered_weight(
    cs: &ChargeSet,
    order: &[usize],
    u: &ComplexMatrix,
    edge_op: &ComplexMatrix,
    traj: &Trajectory,
) -> C64 {
    let mut w = ONE;
    let vec_at = |alpha: usize, k: ProductIndex| cs.product_vector(alpha, k);
    for pair in order.windows(2) {
        let (x, y) = (pair[0], pair[1]);
        let ia = vec_at(x, traj.start[x]);
        let ib = vec_at(y, traj.start[y]);
        let fa = vec_at(x, traj.end[x]);
        let fb = vec_at(y, traj.end[y]);
        w *= ib.dotc(&ia) * fa.dotc(&fb);
    }
    let first = order[0];
    let last = *order.last().expect("nonempty order");
    let lf = vec_at(last, traj.end[last]);
    let li = vec_at(last, traj.start[last]);
    let ff = vec_at(first, traj.end[first]);
    let fi = vec_at(first, traj.start[first]);
    w * crate::tensor::sandwich(&lf, u, &li) * crate::tensor::sandwich(&fi, edge_op, &ff)
}
