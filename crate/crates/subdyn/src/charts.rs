//! Coordinate-chart machinery for the target manifold and the trivial bundle
//! over the base: split charts, transition maps with exact Jacobians, and the
//! transformation laws for jets of submanifolds and jets of sections,
//! together with the lift/projection between the two pictures.
//!
//! A split chart partitions the m fiber coordinates `z^A` into n base-like
//! coordinates `x^a` and m−n fiber-like coordinates `y^i`; a jet of
//! submanifolds lives in such a chart as `(x, y, y^i_a)`. A jet of sections
//! carries `(q, z, z^A_μ)` with no partition. One section jet can be
//! projected through any split chart whose base block of `z^A_μ` is
//! invertible, so jets store plain index lists instead of separate x/y data.

use crate::hyperdual::{seed_block, HyperDual};
use crate::{Error, Result, SINGULAR_TOL};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

fn all_finite(mut it: impl Iterator<Item = f64>) -> bool {
    it.all(f64::is_finite)
}

/// Invert with a relative singular-value guard. Returns the inverse and the
/// determinant, or `None` when `σ_min ≤ SINGULAR_TOL · σ_max`.
fn invert_checked(m: &DMatrix<f64>) -> Option<(DMatrix<f64>, f64)> {
    let sv = m.clone().svd(false, false).singular_values;
    let (smin, smax) = (sv.min(), sv.max());
    if smax == 0.0 || smin <= SINGULAR_TOL * smax {
        return None;
    }
    let det = m.determinant();
    m.clone().try_inverse().map(|inv| (inv, det))
}

/// Numerical rank against the relative threshold `tol`.
fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// A partition of the m coordinates of Z into n base (`x^a`) and m−n fiber
/// (`y^i`) coordinates, i.e. one chart of the jet-of-submanifolds atlas.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitChart {
    m: usize,
    base: Vec<usize>,
    fiber: Vec<usize>,
}

impl SplitChart {
    pub fn new(m: usize, base_indices: Vec<usize>) -> Result<Self> {
        let n = base_indices.len();
        if n == 0 || n >= m {
            return Err(Error::Config(format!(
                "split chart needs 0 < n < m, got n = {n}, m = {m}"
            )));
        }
        let mut seen = vec![false; m];
        for &b in &base_indices {
            if b >= m {
                return Err(Error::Config(format!("base index {b} out of range for m = {m}")));
            }
            if seen[b] {
                return Err(Error::Config(format!("duplicate base index {b}")));
            }
            seen[b] = true;
        }
        let fiber = (0..m).filter(|i| !seen[*i]).collect();
        Ok(Self {
            m,
            base: base_indices,
            fiber,
        })
    }

    /// The canonical chart with base indices `0..n`.
    pub fn leading(m: usize, n: usize) -> Result<Self> {
        Self::new(m, (0..n).collect())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.base.len()
    }

    pub fn base_indices(&self) -> &[usize] {
        &self.base
    }

    pub fn fiber_indices(&self) -> &[usize] {
        &self.fiber
    }

    /// Assemble the full m-vector from its (x, y) parts.
    pub fn assemble(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let mut z = DVector::zeros(self.m);
        for (a, &idx) in self.base.iter().enumerate() {
            z[idx] = x[a];
        }
        for (i, &idx) in self.fiber.iter().enumerate() {
            z[idx] = y[i];
        }
        z
    }

    /// Split the full m-vector into its (x, y) parts.
    pub fn split(&self, z: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let x = DVector::from_fn(self.n(), |a, _| z[self.base[a]]);
        let y = DVector::from_fn(self.m - self.n(), |i, _| z[self.fiber[i]]);
        (x, y)
    }
}

type SmoothMap = Arc<dyn Fn(&[HyperDual]) -> Vec<HyperDual> + Send + Sync>;

/// A coordinate transition `(q, z) ↦ (q'(q), z'(z))`, evaluable with exact
/// first derivatives through the forward-mode engine.
#[derive(Clone)]
pub struct TransitionMap {
    m: usize,
    n: usize,
    z_map: SmoothMap,
    q_map: SmoothMap,
}

impl std::fmt::Debug for TransitionMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransitionMap")
            .field("m", &self.m)
            .field("n", &self.n)
            .finish_non_exhaustive()
    }
}

impl TransitionMap {
    pub fn new(m: usize, n: usize, z_map: SmoothMap, q_map: SmoothMap) -> Self {
        Self { m, n, z_map, q_map }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn identity(m: usize, n: usize) -> Self {
        Self::new(
            m,
            n,
            Arc::new(|z: &[HyperDual]| z.to_vec()),
            Arc::new(|q: &[HyperDual]| q.to_vec()),
        )
    }

    /// Hyperbolic rotation of coordinates 0 and 1 with rapidity `alpha`
    /// (the velocity boost of relativistic kinematics); other coordinates
    /// and the base are untouched.
    pub fn boost(m: usize, n: usize, alpha: f64) -> Self {
        assert!(m >= 2, "boost requires m >= 2");
        let (ch, sh) = (alpha.cosh(), alpha.sinh());
        Self::new(
            m,
            n,
            Arc::new(move |z: &[HyperDual]| {
                let mut out = z.to_vec();
                out[0] = &z[0] * ch - &z[1] * sh;
                out[1] = &z[1] * ch - &z[0] * sh;
                out
            }),
            Arc::new(|q: &[HyperDual]| q.to_vec()),
        )
    }

    /// Coordinate exchange/permutation on the target: `z'^A = z^{perm[A]}`.
    pub fn permutation(m: usize, n: usize, perm: Vec<usize>) -> Result<Self> {
        if perm.len() != m {
            return Err(Error::Config(format!(
                "permutation length {} does not match m = {m}",
                perm.len()
            )));
        }
        let mut seen = vec![false; m];
        for &p in &perm {
            if p >= m || seen[p] {
                return Err(Error::Config("invalid permutation".into()));
            }
            seen[p] = true;
        }
        Ok(Self::new(
            m,
            n,
            Arc::new(move |z: &[HyperDual]| perm.iter().map(|&p| z[p].clone()).collect()),
            Arc::new(|q: &[HyperDual]| q.to_vec()),
        ))
    }

    /// Affine target map `z' = a·z + b` with an affine base map
    /// `q' = aq·q + bq`.
    pub fn affine(
        a: DMatrix<f64>,
        b: DVector<f64>,
        aq: DMatrix<f64>,
        bq: DVector<f64>,
    ) -> Result<Self> {
        let (m, n) = (a.nrows(), aq.nrows());
        if !a.is_square() || b.len() != m || !aq.is_square() || bq.len() != n {
            return Err(Error::Config("affine transition has inconsistent shapes".into()));
        }
        Ok(Self::new(
            m,
            n,
            Arc::new(move |z| apply_affine(&a, &b, z)),
            Arc::new(move |q| apply_affine(&aq, &bq, q)),
        ))
    }

    /// A random near-identity polynomial transition (degree ≤ 2 perturbation
    /// of strength `amplitude` on both target and base), guaranteed smooth
    /// and invertible on the unit box for small amplitudes. Used by the
    /// randomized cocycle and relation-preservation campaigns.
    pub fn random_polynomial<R: Rng>(m: usize, n: usize, amplitude: f64, rng: &mut R) -> Self {
        let z_coeffs = random_quadratic(m, amplitude, rng);
        let q_coeffs = random_quadratic(n, amplitude, rng);
        Self::new(
            m,
            n,
            Arc::new(move |z| perturbed_identity(&z_coeffs, z)),
            Arc::new(move |q| perturbed_identity(&q_coeffs, q)),
        )
    }

    /// The composite `self` followed by `then`.
    pub fn and_then(&self, then: &TransitionMap) -> TransitionMap {
        let (f1, f2) = (Arc::clone(&self.z_map), Arc::clone(&then.z_map));
        let (g1, g2) = (Arc::clone(&self.q_map), Arc::clone(&then.q_map));
        TransitionMap::new(
            self.m,
            self.n,
            Arc::new(move |z| f2(&f1(z))),
            Arc::new(move |q| g2(&g1(q))),
        )
    }

    /// Evaluate the target map and its Jacobian `∂z'/∂z` at `z`.
    pub fn z_eval(&self, z: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        eval_with_jacobian(&self.z_map, z)
    }

    /// Evaluate the base map and its Jacobian `∂q'/∂q` at `q`.
    pub fn q_eval(&self, q: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        eval_with_jacobian(&self.q_map, q)
    }
}

fn apply_affine(mat: &DMatrix<f64>, off: &DVector<f64>, v: &[HyperDual]) -> Vec<HyperDual> {
    let seeds = v.first().map_or(0, HyperDual::seeds);
    (0..mat.nrows())
        .map(|r| {
            let mut acc = HyperDual::constant(off[r], seeds);
            for (c, vc) in v.iter().enumerate() {
                if mat[(r, c)] != 0.0 {
                    acc += vc * mat[(r, c)];
                }
            }
            acc
        })
        .collect()
}

/// Coefficients for `v'R = vR + Σ c·monomial(v)` perturbations: per output
/// row, a list of (coeff, exponents).
type QuadCoeffs = Vec<Vec<(f64, Vec<u32>)>>;

fn random_quadratic<R: Rng>(dim: usize, amplitude: f64, rng: &mut R) -> QuadCoeffs {
    (0..dim)
        .map(|_| {
            let mut terms = Vec::new();
            for _ in 0..3 {
                let coeff = rng.random_range(-amplitude..amplitude);
                let mut exps = vec![0u32; dim];
                for _ in 0..rng.random_range(1..=2u32) {
                    exps[rng.random_range(0..dim)] += 1;
                }
                terms.push((coeff, exps));
            }
            terms
        })
        .collect()
}

fn perturbed_identity(coeffs: &QuadCoeffs, v: &[HyperDual]) -> Vec<HyperDual> {
    let seeds = v.first().map_or(0, HyperDual::seeds);
    coeffs
        .iter()
        .enumerate()
        .map(|(r, terms)| {
            let mut acc = v[r].clone();
            for (coeff, exps) in terms {
                let mut term = HyperDual::constant(*coeff, seeds);
                for (var, &e) in v.iter().zip(exps) {
                    for _ in 0..e {
                        term = term * var;
                    }
                }
                acc += term;
            }
            acc
        })
        .collect()
}

fn eval_with_jacobian(map: &SmoothMap, at: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let k = at.len();
    let seeded = seed_block(at.as_slice(), 0, k);
    let out = map(&seeded);
    let value = DVector::from_fn(out.len(), |r, _| out[r].value);
    let jac = DMatrix::from_fn(out.len(), k, |r, c| out[r].grad[c]);
    (value, jac)
}

/// A first-order jet of n-dimensional submanifolds in a split chart:
/// `(x^a, y^i, y^i_a)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SubmanifoldJetWire", into = "SubmanifoldJetWire")]
pub struct SubmanifoldJet {
    pub chart: SplitChart,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    /// Jet coordinates `y^i_a`, shape (m−n)×n.
    pub yx: DMatrix<f64>,
}

impl SubmanifoldJet {
    pub fn new(chart: SplitChart, x: DVector<f64>, y: DVector<f64>, yx: DMatrix<f64>) -> Result<Self> {
        let (m, n) = (chart.m(), chart.n());
        if x.len() != n || y.len() != m - n || yx.nrows() != m - n || yx.ncols() != n {
            return Err(Error::Config("submanifold jet shape mismatch".into()));
        }
        if !all_finite(x.iter().chain(y.iter()).chain(yx.iter()).copied()) {
            return Err(Error::Config("submanifold jet has non-finite entries".into()));
        }
        Ok(Self { chart, x, y, yx })
    }

    /// The point of Z this jet sits over, as a full m-vector.
    pub fn point(&self) -> DVector<f64> {
        self.chart.assemble(&self.x, &self.y)
    }
}

/// A first-order jet of sections of the trivial bundle: `(q, z, z^A_μ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SectionJetWire", into = "SectionJetWire")]
pub struct SectionJet {
    pub q: DVector<f64>,
    pub z: DVector<f64>,
    /// Velocity matrix `z^A_μ`, shape m×n.
    pub zq: DMatrix<f64>,
}

impl SectionJet {
    pub fn new(q: DVector<f64>, z: DVector<f64>, zq: DMatrix<f64>) -> Result<Self> {
        if zq.nrows() != z.len() || zq.ncols() != q.len() {
            return Err(Error::Config("section jet shape mismatch".into()));
        }
        if !all_finite(q.iter().chain(z.iter()).chain(zq.iter()).copied()) {
            return Err(Error::Config("section jet has non-finite entries".into()));
        }
        Ok(Self { q, z, zq })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn m(&self) -> usize {
        self.z.len()
    }
}

/// A section jet extended with the symmetric second-order coordinates
/// `z^A_{μν}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondJet {
    pub first: SectionJet,
    /// Per fiber index A, the symmetric n×n matrix `z^A_{μν}`.
    pub zqq: Vec<DMatrix<f64>>,
}

impl SecondJet {
    pub fn new(first: SectionJet, zqq: Vec<DMatrix<f64>>) -> Result<Self> {
        let (m, n) = (first.m(), first.n());
        if zqq.len() != m {
            return Err(Error::Config("second jet needs one n×n block per fiber index".into()));
        }
        for block in &zqq {
            if block.nrows() != n || block.ncols() != n {
                return Err(Error::Config("second jet block shape mismatch".into()));
            }
            if !all_finite(block.iter().copied()) {
                return Err(Error::Config("second jet has non-finite entries".into()));
            }
            for mu in 0..n {
                for nu in 0..mu {
                    if block[(mu, nu)].to_bits() != block[(nu, mu)].to_bits() {
                        return Err(Error::Config(
                            "second jet block is not exactly symmetric".into(),
                        ));
                    }
                }
            }
        }
        Ok(Self { first, zqq })
    }

    /// Extend a section jet with vanishing second-order coordinates.
    pub fn flat(first: SectionJet) -> Self {
        let (m, n) = (first.m(), first.n());
        Self {
            first,
            zqq: vec![DMatrix::zeros(n, n); m],
        }
    }

    pub fn n(&self) -> usize {
        self.first.n()
    }

    pub fn m(&self) -> usize {
        self.first.m()
    }
}

/// Transformation law of submanifold-jet coordinates under a chart
/// transition: with `M^c_b = (∂x'^c/∂y^k) y^k_b + ∂x'^c/∂x^b`,
///
/// ```text
/// y'^j_a = ((∂y'^j/∂y^k) y^k_b + ∂y'^j/∂x^b) (M⁻¹)^b_a .
/// ```
///
/// Fails with [`Error::SingularM`] when the target split chart does not
/// cover this jet.
pub fn transform_submanifold_jet(
    j: &SubmanifoldJet,
    t: &TransitionMap,
    target: &SplitChart,
) -> Result<SubmanifoldJet> {
    let m = j.chart.m();
    if target.m() != m || target.n() != j.chart.n() || t.m() != m {
        return Err(Error::Config("transition/chart dimensions do not match jet".into()));
    }
    let z = j.point();
    let (z_new, jac) = t.z_eval(&z);
    if invert_checked(&jac).is_none() {
        return Err(Error::SingularJacobian {
            which: "target map",
            det: jac.determinant(),
        });
    }

    let n = j.chart.n();
    let pick = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| jac[(rows[r], cols[c])])
    };
    let dxp_dx = pick(target.base_indices(), j.chart.base_indices());
    let dxp_dy = pick(target.base_indices(), j.chart.fiber_indices());
    let dyp_dx = pick(target.fiber_indices(), j.chart.base_indices());
    let dyp_dy = pick(target.fiber_indices(), j.chart.fiber_indices());

    let big_m = &dxp_dy * &j.yx + dxp_dx;
    let Some((m_inv, _)) = invert_checked(&big_m) else {
        return Err(Error::SingularM {
            det: big_m.determinant(),
        });
    };
    let yx_new = (&dyp_dy * &j.yx + dyp_dx) * m_inv;
    debug_assert_eq!(yx_new.ncols(), n);

    let (x_new, y_new) = target.split(&z_new);
    SubmanifoldJet::new(target.clone(), x_new, y_new, yx_new)
}

/// Transformation law of section-jet coordinates:
/// `z'^A_μ = (∂z'^A/∂z^B) z^B_ν (∂q^ν/∂q'^μ)`.
pub fn transform_section_jet(j: &SectionJet, t: &TransitionMap) -> Result<SectionJet> {
    if t.m() != j.m() || t.n() != j.n() {
        return Err(Error::Config("transition dimensions do not match jet".into()));
    }
    let (z_new, z_jac) = t.z_eval(&j.z);
    if invert_checked(&z_jac).is_none() {
        return Err(Error::SingularJacobian {
            which: "target map",
            det: z_jac.determinant(),
        });
    }
    let (q_new, q_jac) = t.q_eval(&j.q);
    let Some((q_inv, _)) = invert_checked(&q_jac) else {
        return Err(Error::SingularJacobian {
            which: "base map",
            det: q_jac.determinant(),
        });
    };
    let zq_new = &z_jac * &j.zq * q_inv;
    SectionJet::new(q_new, z_new, zq_new)
}

/// Lift a submanifold jet to a section jet choosing the base block
/// `x^a_μ = xq`; the fiber block follows the defining relation
/// `y^i_μ = y^i_a x^a_μ`. The base point is placed at `q = 0` (any base
/// point carries the same jet; the origin is a convention, not content).
pub fn lift(j: &SubmanifoldJet, xq: &DMatrix<f64>) -> Result<SectionJet> {
    let (m, n) = (j.chart.m(), j.chart.n());
    if xq.nrows() != n || xq.ncols() != n {
        return Err(Error::Config("lift block must be n×n".into()));
    }
    let mut zq = DMatrix::zeros(m, n);
    for (a, &row) in j.chart.base_indices().iter().enumerate() {
        for mu in 0..n {
            zq[(row, mu)] = xq[(a, mu)];
        }
    }
    let y_block = &j.yx * xq;
    for (i, &row) in j.chart.fiber_indices().iter().enumerate() {
        for mu in 0..n {
            zq[(row, mu)] = y_block[(i, mu)];
        }
    }
    SectionJet::new(DVector::zeros(n), j.point(), zq)
}

/// Project a regular section jet to the unique submanifold jet it defines
/// in the given split chart: `y^i_a = y^i_μ (x⁻¹)^μ_a`.
pub fn project(j: &SectionJet, chart: &SplitChart) -> Result<SubmanifoldJet> {
    if chart.m() != j.m() || chart.n() != j.n() {
        return Err(Error::Config("chart dimensions do not match jet".into()));
    }
    let n = chart.n();
    let x_block = DMatrix::from_fn(n, n, |a, mu| j.zq[(chart.base_indices()[a], mu)]);
    let Some((x_inv, _)) = invert_checked(&x_block) else {
        return Err(Error::NotRegularInChart {
            chart: chart.base_indices().to_vec(),
        });
    };
    let y_block = DMatrix::from_fn(chart.m() - n, n, |i, mu| j.zq[(chart.fiber_indices()[i], mu)]);
    let yx = y_block * x_inv;
    let (x, y) = chart.split(&j.z);
    SubmanifoldJet::new(chart.clone(), x, y, yx)
}

/// Whether the m×n velocity matrix has full numerical rank n, i.e. the jet
/// defines a genuine n-dimensional submanifold element.
pub fn is_regular(j: &SectionJet, tol: f64) -> bool {
    numerical_rank(&j.zq, tol) == j.n()
}

/// Consistency defect of a submanifold-jet transform: the matrix
/// `(∂x/∂y' y' + ∂x/∂x')` built from the inverse Jacobian at the output must
/// invert `M = (∂x'/∂y) y + ∂x'/∂x` built at the input. Returns
/// `‖M·N − 1‖_max`; round-off for any valid transform.
pub fn submanifold_transform_residual(
    input: &SubmanifoldJet,
    t: &TransitionMap,
    output: &SubmanifoldJet,
) -> Result<f64> {
    let n = input.chart.n();
    let (_, jac) = t.z_eval(&input.point());
    let Some((jac_inv, _)) = invert_checked(&jac) else {
        return Err(Error::SingularJacobian {
            which: "target map",
            det: jac.determinant(),
        });
    };
    let pick = |m: &DMatrix<f64>, rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])])
    };
    let dxp_dx = pick(&jac, output.chart.base_indices(), input.chart.base_indices());
    let dxp_dy = pick(&jac, output.chart.base_indices(), input.chart.fiber_indices());
    let big_m = &dxp_dy * &input.yx + dxp_dx;
    let dx_dxp = pick(&jac_inv, input.chart.base_indices(), output.chart.base_indices());
    let dx_dyp = pick(&jac_inv, input.chart.base_indices(), output.chart.fiber_indices());
    let big_n = &dx_dyp * &output.yx + dx_dxp;
    Ok((big_m * big_n - DMatrix::identity(n, n)).abs().max())
}

/// Residual of the lift relation `y^i_a x^a_μ − y^i_μ` between a submanifold
/// jet and a section jet expressed in the same chart (max-abs over entries).
pub fn lift_relation_residual(sub: &SubmanifoldJet, sec: &SectionJet) -> f64 {
    let chart = &sub.chart;
    let n = chart.n();
    let x_block = DMatrix::from_fn(n, n, |a, mu| sec.zq[(chart.base_indices()[a], mu)]);
    let y_block = DMatrix::from_fn(chart.m() - n, n, |i, mu| {
        sec.zq[(chart.fiber_indices()[i], mu)]
    });
    (&sub.yx * x_block - y_block).abs().max()
}

// ---------------------------------------------------------------------------
// Wire formats (exact field names are part of the CLI schema)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SectionJetWire {
    n: usize,
    m: usize,
    q: Vec<f64>,
    z: Vec<f64>,
    zq: Vec<Vec<f64>>,
}

impl From<SectionJet> for SectionJetWire {
    fn from(j: SectionJet) -> Self {
        Self {
            n: j.n(),
            m: j.m(),
            q: j.q.iter().copied().collect(),
            z: j.z.iter().copied().collect(),
            zq: matrix_rows(&j.zq),
        }
    }
}

impl TryFrom<SectionJetWire> for SectionJet {
    type Error = Error;
    fn try_from(w: SectionJetWire) -> Result<Self> {
        if w.q.len() != w.n || w.z.len() != w.m {
            return Err(Error::Config("jet payload dims disagree with n/m".into()));
        }
        let zq = rows_to_matrix(&w.zq, w.m, w.n)?;
        SectionJet::new(DVector::from_vec(w.q), DVector::from_vec(w.z), zq)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmanifoldJetWire {
    n: usize,
    m: usize,
    base_indices: Vec<usize>,
    x: Vec<f64>,
    y: Vec<f64>,
    yx: Vec<Vec<f64>>,
}

impl From<SubmanifoldJet> for SubmanifoldJetWire {
    fn from(j: SubmanifoldJet) -> Self {
        Self {
            n: j.chart.n(),
            m: j.chart.m(),
            base_indices: j.chart.base_indices().to_vec(),
            x: j.x.iter().copied().collect(),
            y: j.y.iter().copied().collect(),
            yx: matrix_rows(&j.yx),
        }
    }
}

impl TryFrom<SubmanifoldJetWire> for SubmanifoldJet {
    type Error = Error;
    fn try_from(w: SubmanifoldJetWire) -> Result<Self> {
        if w.base_indices.len() != w.n {
            return Err(Error::Config("jet payload dims disagree with n/m".into()));
        }
        let chart = SplitChart::new(w.m, w.base_indices)?;
        let yx = rows_to_matrix(&w.yx, w.m - w.n, w.n)?;
        SubmanifoldJet::new(chart, DVector::from_vec(w.x), DVector::from_vec(w.y), yx)
    }
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

pub(crate) fn rows_to_matrix(rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config(format!(
            "matrix payload is not {nrows}×{ncols} row-major"
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c]))
}
