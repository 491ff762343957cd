//! Merge matrix and state redistribution against dense reference
//! evaluations built directly from the neighborhood lists.

mod common;

use approx::assert_relative_eq;
use common::{dense_a, dense_apply};
use ebamr::euler::Cons;
use ebamr::geometry::{ImplicitFn, LevelGeometry};
use ebamr::index::{BoxArray, Cell, IndexBox};
use ebamr::rerd::build_r_matrix;
use ebamr::validate::{self, random_mesh, random_state};
use ebamr::wsrd::{self, MergeStrategy, WsrdOptions};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const NO_GRAD: WsrdOptions = WsrdOptions {
    gradients: false,
    limit: false,
};

#[test]
fn sparse_matrix_matches_dense_construction() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..12 {
        let strategy = if k % 2 == 0 {
            MergeStrategy::Normal
        } else {
            MergeStrategy::Central
        };
        let (g, m) = random_mesh(&mut rng, 10, strategy);
        let a = dense_a(&g, g.bx, strategy);
        for r in 0..m.len() {
            for p in 0..m.len() {
                assert!((m.entry(r, p) - a[r][p]).abs() <= 1e-15, "entry ({r},{p})");
            }
        }
    }
}

#[test]
fn matrix_free_apply_matches_dense_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for k in 0..12 {
        let strategy = if k % 2 == 0 {
            MergeStrategy::Normal
        } else {
            MergeStrategy::Central
        };
        let (g, m) = random_mesh(&mut rng, 10, strategy);
        let a = dense_a(&g, g.bx, strategy);
        let u = random_state(&mut rng, g.bx);
        for opts in [NO_GRAD, WsrdOptions::default()] {
            let (out, rec) = wsrd::redistribute(&m, &u, opts);
            let dense = dense_apply(&g, g.bx, &a, &u, &rec.grads);
            for (p, c) in g.bx.cells().enumerate() {
                if g.is_fluid(c) {
                    let d = (out[c] - dense[p]).max_abs() / dense[p].max_abs();
                    assert!(d <= 1e-13, "cell {c:?}: {d:e}");
                }
            }
        }
    }
}

/// Horizontal channel on the unit square, 4 × 4 cells, bottom wall at
/// y = 0.225 so that the bottom row has volume fraction 0.1 and merges with
/// the regular row above.
fn stripe() -> LevelGeometry {
    let f = ImplicitFn::RotatedChannel {
        angle: 0.0,
        half_width: 0.3875,
        center: (0.5, 0.6125),
    };
    LevelGeometry::build(&f, IndexBox::from_size(4, 4), 0.25, 0.25, (0.0, 0.0)).unwrap()
}

#[test]
fn two_member_neighborhood_by_hand() {
    let g = stripe();
    let c = Cell::new(1, 0);
    let above = Cell::new(1, 1);
    assert_relative_eq!(g.vfrac[c], 0.1, epsilon = 1e-12);
    assert_eq!(g.vfrac[above], 1.0);
    let m = wsrd::merge_matrix(&g, g.bx, MergeStrategy::Normal).unwrap();
    let (r, q) = (m.index(c), m.index(above));
    let v = 0.0625;
    // β = (V/2 − 0.1V) / V, the regular cell belongs to two neighborhoods
    let beta = 0.4;
    assert_relative_eq!(m.beta[r], beta, epsilon = 1e-14);
    assert_relative_eq!(m.alpha[q], 1.0 - beta / 2.0, epsilon = 1e-14);
    assert_relative_eq!(m.entry(r, q), beta / 2.0, epsilon = 1e-14);
    assert_relative_eq!(m.vhat[r], 1.0 * 0.1 * v + beta * v / 2.0, epsilon = 1e-15);
    assert_relative_eq!(m.vhat[q], 0.8 * v, epsilon = 1e-15);

    // Q̂ of the small cell is the weighted mean of its two members
    let u = BoxArray::from_fn(g.bx, |x| {
        if x == c {
            Cons::new(2.0, 0.0, 0.0, 5.0)
        } else {
            Cons::new(1.0, 0.0, 0.0, 2.5)
        }
    });
    let qh = wsrd::neighborhood_averages(&m, &u);
    let expect = (2.0 * 0.1 * v + 1.0 * 0.2 * v) / (0.3 * v);
    assert_relative_eq!(qh[r].rho, expect, epsilon = 1e-14);
}

#[test]
fn constant_field_is_fixed() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (_, m) = random_mesh(&mut rng, 12, MergeStrategy::Normal);
    let k = Cons::new(1.3, 0.2, -0.4, 3.1);
    let u = BoxArray::new(m.region, k);
    for q in wsrd::neighborhood_averages(&m, &u) {
        assert!((q - k).max_abs() < 1e-14);
    }
    let (out, _) = wsrd::redistribute(&m, &u, WsrdOptions::default());
    for p in 0..m.len() {
        if m.vol[p] > 0.0 {
            assert!((out[m.cell(p)] - k).max_abs() < 1e-14);
        }
    }
}

#[test]
fn all_regular_is_bit_exact_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    assert!(validate::regular_identity(&mut rng));
}

#[test]
fn r_matrix_matches_dense_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let (g, m) = random_mesh(&mut rng, 8, MergeStrategy::Central);
    let a = dense_a(&g, g.bx, MergeStrategy::Central);
    let u = random_state(&mut rng, g.bx);
    let r = build_r_matrix(&m, &u);
    let n = m.len();
    let vol: Vec<f64> = (0..n).map(|k| m.vol[k]).collect();
    let vh: Vec<f64> = (0..n)
        .map(|s| (0..n).map(|p| a[s][p] * vol[p]).sum())
        .collect();
    for p in 0..n {
        for q in 0..n {
            let mut e = Cons::ZERO;
            for s in 0..n {
                if vh[s] > 0.0 && a[s][p] != 0.0 && a[s][q] != 0.0 {
                    e += u[m.cell(q)] * (vol[p] * a[s][p] * a[s][q] * vol[q] / vh[s]);
                }
            }
            let d = (r.entry(p, q) - e).max_abs();
            assert!(d <= 1e-15 * (1.0 + e.max_abs()), "({p},{q}) {d:e}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn columns_sum_to_one(seed in any::<u64>(), central in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = if central { MergeStrategy::Central } else { MergeStrategy::Normal };
        let (_, m) = random_mesh(&mut rng, 12, s);
        prop_assert!(m.column_sum_error() <= 1e-14);
    }

    #[test]
    fn redistribution_conserves(seed in any::<u64>(), grads in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, m) = random_mesh(&mut rng, 12, MergeStrategy::Normal);
        let u = random_state(&mut rng, m.region);
        let opts = if grads { WsrdOptions::default() } else { NO_GRAD };
        prop_assert!(validate::wsrd_conservation_error(&m, &u, opts) <= 1e-13);
    }

    #[test]
    fn gradient_free_redistribution_is_bounded(seed in any::<u64>(), central in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = if central { MergeStrategy::Central } else { MergeStrategy::Normal };
        let (g, m) = random_mesh(&mut rng, 12, s);
        let u = random_state(&mut rng, m.region);
        let (out, _) = wsrd::redistribute(&m, &u, NO_GRAD);
        let fluid: Vec<Cell> = m.region.cells().filter(|c| g.is_fluid(*c)).collect();
        for k in 0..4 {
            let lo = fluid.iter().map(|c| u[*c].comp(k)).fold(f64::INFINITY, f64::min);
            let hi = fluid.iter().map(|c| u[*c].comp(k)).fold(f64::NEG_INFINITY, f64::max);
            let tol = 1e-14 * (hi.abs() + lo.abs());
            for c in &fluid {
                let v = out[*c].comp(k);
                prop_assert!(v >= lo - tol && v <= hi + tol, "{v} not in [{lo}, {hi}]");
            }
        }
    }

    #[test]
    fn linear_fields_are_preserved(seed in any::<u64>(), central in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = if central { MergeStrategy::Central } else { MergeStrategy::Normal };
        let (_, m) = random_mesh(&mut rng, 12, s);
        let (err, _) = validate::wsrd_linearity_error(&m, 1);
        prop_assert!(err <= 1e-12, "{err:e}");
    }

    #[test]
    fn r_rows_sum_to_extensive_result(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, m) = random_mesh(&mut rng, 12, MergeStrategy::Normal);
        let u = random_state(&mut rng, m.region);
        prop_assert!(validate::r_row_sum_error(&m, &u) <= 1e-12);
    }

    #[test]
    fn volume_fractions_are_fractions(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, _) = random_mesh(&mut rng, 12, MergeStrategy::Normal);
        for c in g.bx.cells() {
            let v = g.vfrac[c];
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
