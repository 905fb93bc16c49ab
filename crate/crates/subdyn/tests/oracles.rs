//! Independent brute-force oracles for the variational operators.
//!
//! The Euler–Lagrange values produced by the forward-mode engine are checked
//! against numerical functional derivatives of a discretized action: build a
//! quadratic test section through the jet, discretize the action on a small
//! uniform grid with central-difference velocities, and differentiate the
//! discrete action by bumping the center node. Nothing in this path shares
//! code with the implementation it audits — velocities come from node
//! differences and all derivatives are finite differences of plain values.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use subdyn::charts::{SecondJet, SectionJet};
use subdyn::models::{self, ConstantMetric, ModelConfig};
use subdyn::phase::{self, PhasePoint, PhaseSecondJet};
use subdyn::varcalc::{self, LagrangianModel, OneFormField, VectorFieldOnZQ};

const GRID_STEP: f64 = 1e-4;
/// Node-bump size for the discrete-action gradients. A bump ε shifts the
/// central-difference velocities by ε/(2h), so the cubic action term pollutes
/// the quotient by ~ε²·ℒ'''/(48h³); ε = 2e-9 keeps that near 1e-7 while the
/// h-weighted action keeps f64 roundoff far below the difference.
const BUMP: f64 = 2e-9;

fn minkowski_cfg() -> ModelConfig {
    ModelConfig::new(ConstantMetric::minkowski(4), 1.0)
}

fn euclidean_cfg() -> ModelConfig {
    ModelConfig::new(ConstantMetric::euclidean(3), 1.0)
}

/// Quadratic test curve through a curve jet: z(τ) = z + v τ + ½ a τ².
fn curve_node(j: &SecondJet, tau: f64) -> DVector<f64> {
    let m = j.m();
    DVector::from_fn(m, |b, _| {
        j.first.z[b] + j.first.zq[(b, 0)] * tau + 0.5 * j.zqq[b][(0, 0)] * tau * tau
    })
}

/// Functional derivative of the discretized curve action at the jet's base
/// point, by center-node bumping.
fn curve_action_gradient(l: &LagrangianModel, j: &SecondJet) -> DVector<f64> {
    let m = j.m();
    let h = GRID_STEP;
    // five nodes centered on τ = 0; only the middle three action terms see
    // the center node
    let base: Vec<DVector<f64>> = (0..5).map(|k| curve_node(j, (k as f64 - 2.0) * h)).collect();
    let action = |center: &DVector<f64>| -> f64 {
        let mut nodes = base.clone();
        nodes[2] = center.clone();
        let mut s = 0.0;
        for k in 1..4 {
            let v = (&nodes[k + 1] - &nodes[k - 1]) / (2.0 * h);
            let zq = DMatrix::from_fn(m, 1, |b, _| v[b]);
            s += l.value(&nodes[k], &zq) * h;
        }
        s
    };
    DVector::from_fn(m, |a, _| {
        let mut plus = base[2].clone();
        plus[a] += BUMP;
        let mut minus = base[2].clone();
        minus[a] -= BUMP;
        (action(&plus) - action(&minus)) / (2.0 * BUMP * h)
    })
}

/// Quadratic test sheet through a sheet jet:
/// z(q) = z + z_μ q^μ + ½ z_{μν} q^μ q^ν.
fn sheet_node(j: &SecondJet, q1: f64, q2: f64) -> DVector<f64> {
    DVector::from_fn(j.m(), |b, _| {
        j.first.z[b]
            + j.first.zq[(b, 0)] * q1
            + j.first.zq[(b, 1)] * q2
            + 0.5 * (j.zqq[b][(0, 0)] * q1 * q1 + j.zqq[b][(1, 1)] * q2 * q2)
            + j.zqq[b][(0, 1)] * q1 * q2
    })
}

fn sheet_action_gradient(l: &LagrangianModel, j: &SecondJet) -> DVector<f64> {
    let m = j.m();
    let h = GRID_STEP;
    let node = |i: usize, k: usize| sheet_node(j, (i as f64 - 2.0) * h, (k as f64 - 2.0) * h);
    let base: Vec<Vec<DVector<f64>>> = (0..5).map(|i| (0..5).map(|k| node(i, k)).collect()).collect();
    let action = |center: &DVector<f64>| -> f64 {
        let mut nodes = base.clone();
        nodes[2][2] = center.clone();
        let mut s = 0.0;
        for i in 1..4 {
            for k in 1..4 {
                let v1 = (&nodes[i + 1][k] - &nodes[i - 1][k]) / (2.0 * h);
                let v2 = (&nodes[i][k + 1] - &nodes[i][k - 1]) / (2.0 * h);
                let zq = DMatrix::from_fn(m, 2, |b, mu| if mu == 0 { v1[b] } else { v2[b] });
                s += l.value(&nodes[i][k], &zq) * h * h;
            }
        }
        s
    };
    DVector::from_fn(m, |a, _| {
        let mut plus = base[2][2].clone();
        plus[a] += BUMP;
        let mut minus = base[2][2].clone();
        minus[a] -= BUMP;
        (action(&plus) - action(&minus)) / (2.0 * BUMP * h * h)
    })
}

fn well_conditioned_curve_jet<R: Rng>(rng: &mut R, m: usize) -> SecondJet {
    let z = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
    let mut zq = DMatrix::zeros(m, 1);
    zq[(0, 0)] = rng.random_range(1.0..1.5);
    for b in 1..m {
        zq[(b, 0)] = rng.random_range(-0.4..0.4);
    }
    let first = SectionJet::new(DVector::zeros(1), z, zq).unwrap();
    let zqq = (0..m)
        .map(|_| DMatrix::from_element(1, 1, rng.random_range(-0.5..0.5)))
        .collect();
    SecondJet::new(first, zqq).unwrap()
}

fn well_conditioned_sheet_jet<R: Rng>(rng: &mut R, l: &LagrangianModel) -> SecondJet {
    loop {
        let z = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let zq = DMatrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
        // stay away from the degenerate-sheet boundary so the oracle's
        // stencils remain inside the domain
        let gram = zq.transpose() * &zq;
        if gram.determinant() < 0.3 {
            continue;
        }
        if !l.domain_ok(&z, &zq) {
            continue;
        }
        let mut zqq = Vec::new();
        for _ in 0..3 {
            let mut blk = DMatrix::zeros(2, 2);
            for mu in 0..2 {
                for nu in mu..2 {
                    let v = rng.random_range(-0.5..0.5);
                    blk[(mu, nu)] = v;
                    blk[(nu, mu)] = v;
                }
            }
            zqq.push(blk);
        }
        let first = SectionJet::new(DVector::zeros(2), z, zq).unwrap();
        return SecondJet::new(first, zqq).unwrap();
    }
}

#[test]
fn straight_worldline_is_exactly_extremal() {
    let l = models::free_particle_lagrangian(&minkowski_cfg());
    let first = SectionJet::new(
        DVector::zeros(1),
        DVector::zeros(4),
        DMatrix::from_column_slice(4, 1, &[1.25, 0.75, 0.0, 0.0]),
    )
    .unwrap();
    let e = varcalc::euler_lagrange(&l, &SecondJet::flat(first)).unwrap();
    assert_eq!(e.abs().max(), 0.0);
}

#[test]
fn linear_sheet_is_exactly_extremal() {
    let l = models::nambu_goto_lagrangian(&euclidean_cfg());
    let first = SectionJet::new(
        DVector::zeros(2),
        DVector::zeros(3),
        DMatrix::from_columns(&[
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0, 0.0]),
        ]),
    )
    .unwrap();
    let e = varcalc::euler_lagrange(&l, &SecondJet::flat(first)).unwrap();
    assert_eq!(e.abs().max(), 0.0);
}

#[test]
fn free_particle_euler_lagrange_matches_action_gradient() {
    let l = models::free_particle_lagrangian(&minkowski_cfg());
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..25 {
        let j = well_conditioned_curve_jet(&mut rng, 4);
        if !l.domain_ok(&j.first.z, &j.first.zq) {
            continue;
        }
        let e = varcalc::euler_lagrange(&l, &j).unwrap();
        let oracle = curve_action_gradient(&l, &j);
        let scale = e.abs().max().max(1.0);
        assert!(
            (&e - &oracle).abs().max() <= 1e-6 * scale,
            "engine {e:?} vs oracle {oracle:?}"
        );
    }
}

#[test]
fn charged_particle_euler_lagrange_matches_action_gradient() {
    // linear gauge potential so the position dependence of the interaction
    // term is exercised
    let mut coeffs = DMatrix::zeros(4, 4);
    coeffs[(2, 1)] = 1.3;
    coeffs[(3, 0)] = -0.7;
    let cfg = ModelConfig::new(ConstantMetric::minkowski(4), 1.0)
        .with_potential(OneFormField::linear(coeffs));
    let l = models::charged_particle_lagrangian(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..25 {
        let j = well_conditioned_curve_jet(&mut rng, 4);
        if !l.domain_ok(&j.first.z, &j.first.zq) {
            continue;
        }
        let e = varcalc::euler_lagrange(&l, &j).unwrap();
        let oracle = curve_action_gradient(&l, &j);
        let scale = e.abs().max().max(1.0);
        assert!(
            (&e - &oracle).abs().max() <= 1e-6 * scale,
            "engine {e:?} vs oracle {oracle:?}"
        );
    }
}

#[test]
fn sheet_euler_lagrange_matches_action_gradient() {
    let l = models::nambu_goto_lagrangian(&euclidean_cfg());
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    for _ in 0..15 {
        let j = well_conditioned_sheet_jet(&mut rng, &l);
        let e = varcalc::euler_lagrange(&l, &j).unwrap();
        let oracle = sheet_action_gradient(&l, &j);
        let scale = e.abs().max().max(1.0);
        assert!(
            (&e - &oracle).abs().max() <= 1e-5 * scale,
            "engine {e:?} vs oracle {oracle:?}"
        );
    }
}

#[test]
fn constant_potential_is_pure_gauge() {
    // a constant one-form shifts the density but not the dynamics
    let free = models::free_particle_lagrangian(&minkowski_cfg());
    let cfg = ModelConfig::new(ConstantMetric::minkowski(4), 1.0).with_potential(
        OneFormField::constant(DVector::from_vec(vec![0.8, -0.1, 0.4, 0.0])),
    );
    let charged = models::charged_particle_lagrangian(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    for _ in 0..50 {
        let j = well_conditioned_curve_jet(&mut rng, 4);
        if !free.domain_ok(&j.first.z, &j.first.zq) {
            continue;
        }
        let e_free = varcalc::euler_lagrange(&free, &j).unwrap();
        let e_charged = varcalc::euler_lagrange(&charged, &j).unwrap();
        assert!((&e_free - &e_charged).abs().max() < 1e-14);
    }
}

#[test]
fn noether_current_examples() {
    let l = models::free_particle_lagrangian(&minkowski_cfg());
    let j = SectionJet::new(
        DVector::zeros(1),
        DVector::zeros(4),
        DMatrix::from_column_slice(4, 1, &[1.25, 0.75, 0.0, 0.0]),
    )
    .unwrap();

    // zero field carries no current
    let zero = VectorFieldOnZQ::zero(1, 4);
    let current = varcalc::noether_current(&l, &zero, &j).unwrap();
    assert_eq!(current.abs().max(), 0.0);

    // spatial translation: the conserved momentum component η_{1B} z^B_τ
    let u = VectorFieldOnZQ::fiber_translation(1, 4, 1);
    let current = varcalc::noether_current(&l, &u, &j).unwrap();
    assert!((current[0] - (-0.75)).abs() < 1e-14);

    // constant reparametrization: 𝔍 = u⁰(ℒ − ∂⁰_A ℒ z^A_τ) term by term
    let u = VectorFieldOnZQ::base_translation(1, 4, 0);
    let current = varcalc::noether_current(&l, &u, &j).unwrap();
    let d = l.eval_seeded(&j.z, &j.zq);
    let mut expected = d.value;
    for a in 0..4 {
        expected -= d.dzq(a, 0) * j.zq[(a, 0)];
    }
    assert!((current[0] - expected).abs() < 1e-14);
}

#[test]
fn first_variation_residual_examples() {
    let l = models::free_particle_lagrangian(&minkowski_cfg());
    let mut rng = ChaCha8Rng::seed_from_u64(113);
    let j = well_conditioned_curve_jet(&mut rng, 4);

    let zero = VectorFieldOnZQ::zero(1, 4);
    let r = varcalc::first_variation_residual(&l, &zero, &j).unwrap();
    assert_eq!(r.value, 0.0);

    for _ in 0..100 {
        let u = VectorFieldOnZQ::random_polynomial(1, 4, &mut rng);
        let j = well_conditioned_curve_jet(&mut rng, 4);
        if !l.domain_ok(&j.first.z, &j.first.zq) {
            continue;
        }
        let r = varcalc::first_variation_residual(&l, &u, &j).unwrap();
        assert!(r.value < 1e-8 * r.scale, "residual {} scale {}", r.value, r.scale);
    }
}

#[test]
fn hamilton_residuals_match_phase_action_gradient() {
    // The Hamilton equations are the variational equations of the phase
    // density p·ż − ℋ; differentiate its discretization directly.
    let cfg = euclidean_cfg();
    let h = models::string_hamiltonian(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(127);
    let hs = GRID_STEP;

    for _ in 0..10 {
        let z0 = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let p0 = loop {
            let cand = DMatrix::<f64>::from_fn(2, 3, |_, _| rng.random_range(-1.0..1.0));
            let gram = &cand * cand.transpose();
            if gram.determinant() > 0.3 {
                break cand;
            }
        };
        let zq = DMatrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
        // linear momentum section p(q) = p0 + c1 q¹ + c2 q²
        let c: [DMatrix<f64>; 2] = [
            DMatrix::from_fn(2, 3, |_, _| rng.random_range(-0.5..0.5)),
            DMatrix::from_fn(2, 3, |_, _| rng.random_range(-0.5..0.5)),
        ];
        let p_div = DVector::from_fn(3, |a, _| c[0][(0, a)] + c[1][(1, a)]);
        let point = PhasePoint::new(DVector::zeros(2), z0.clone(), p0.clone()).unwrap();
        let pj = PhaseSecondJet::new(point, zq.clone(), p_div).unwrap();
        let res = phase::hamilton_residual(&h, &pj).unwrap();

        let z_node = |i: f64, k: f64| -> DVector<f64> {
            DVector::from_fn(3, |b, _| z0[b] + zq[(b, 0)] * i * hs + zq[(b, 1)] * k * hs)
        };
        let p_node = |i: f64, k: f64| -> DMatrix<f64> {
            DMatrix::from_fn(2, 3, |mu, a| {
                p0[(mu, a)] + c[0][(mu, a)] * i * hs + c[1][(mu, a)] * k * hs
            })
        };
        // discretized phase action over the 3×3 interior of a 5×5 grid
        let action = |dz: &DVector<f64>, dp: &DMatrix<f64>| -> f64 {
            let mut s = 0.0;
            for i in -1..=1i32 {
                for k in -1..=1i32 {
                    let (fi, fk) = (f64::from(i), f64::from(k));
                    let mut z = z_node(fi, fk);
                    let mut p = p_node(fi, fk);
                    if i == 0 && k == 0 {
                        z += dz;
                        p += dp;
                    }
                    let mut zc1 = z_node(fi + 1.0, fk);
                    let mut zc0 = z_node(fi - 1.0, fk);
                    if i + 1 == 0 && k == 0 {
                        zc1 += dz;
                    }
                    if i - 1 == 0 && k == 0 {
                        zc0 += dz;
                    }
                    let mut zd1 = z_node(fi, fk + 1.0);
                    let mut zd0 = z_node(fi, fk - 1.0);
                    if i == 0 && k + 1 == 0 {
                        zd1 += dz;
                    }
                    if i == 0 && k - 1 == 0 {
                        zd0 += dz;
                    }
                    let v1 = (zc1 - zc0) / (2.0 * hs);
                    let v2 = (zd1 - zd0) / (2.0 * hs);
                    let mut lh = -h.value(&z, &p);
                    for a in 0..3 {
                        lh += p[(0, a)] * v1[a] + p[(1, a)] * v2[a];
                    }
                    s += lh * hs * hs;
                }
            }
            s
        };

        // δS/δz^A ≈ force residual −p^μ_{μA} − ∂_A ℋ (ℋ is z-independent
        // here, but the current term still sees the neighbors)
        for a in 0..3 {
            let mut dz = DVector::zeros(3);
            dz[a] = BUMP;
            let plus = action(&dz, &DMatrix::zeros(2, 3));
            dz[a] = -BUMP;
            let minus = action(&dz, &DMatrix::zeros(2, 3));
            let grad = (plus - minus) / (2.0 * BUMP * hs * hs);
            assert!(
                (grad - res.force[a]).abs() < 1e-6 * res.scale,
                "force component {a}: fd {grad} vs {res:?}"
            );
        }
        // δS/δp^μ_A ≈ velocity residual z^A_μ − ∂^A_μ ℋ
        for mu in 0..2 {
            for a in 0..3 {
                let mut dp = DMatrix::zeros(2, 3);
                dp[(mu, a)] = BUMP;
                let plus = action(&DVector::zeros(3), &dp);
                dp[(mu, a)] = -BUMP;
                let minus = action(&DVector::zeros(3), &dp);
                let grad = (plus - minus) / (2.0 * BUMP * hs * hs);
                assert!(
                    (grad - res.velocity[(a, mu)]).abs() < 1e-6 * res.scale,
                    "velocity component ({a},{mu}): fd {grad} vs {res:?}"
                );
            }
        }
    }
}

#[test]
fn noether_identity_oracle_controls() {
    // positive: area density passes; negative: the quadratic control fails
    // on the very same jets
    let mcfg = minkowski_cfg();
    let free = models::free_particle_lagrangian(&mcfg);
    let quad = models::quadratic_control_lagrangian(&mcfg);
    let mut rng = ChaCha8Rng::seed_from_u64(131);
    let mut control_nonzero = 0usize;
    let mut total = 0usize;
    for _ in 0..200 {
        let j = well_conditioned_curve_jet(&mut rng, 4);
        if !free.domain_ok(&j.first.z, &j.first.zq) {
            continue;
        }
        total += 1;
        let (r, scale) = varcalc::noether_identity_residual(&free, &j).unwrap();
        assert!(r.abs().max() < 1e-10 * scale);
        let (rq, sq) = varcalc::noether_identity_residual(&quad, &j).unwrap();
        if rq.abs().max() > 1e-3 * sq {
            control_nonzero += 1;
        }
    }
    assert!(total > 100);
    assert!(
        control_nonzero as f64 > 0.9 * total as f64,
        "control fired on {control_nonzero}/{total}"
    );
}
