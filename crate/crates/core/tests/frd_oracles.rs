//! Flux redistribution against hand evaluations and direct sums.

use approx::assert_relative_eq;
use ebamr::euler::Cons;
use ebamr::frd::{build_frd_neighborhoods, frd_apply, monotone_neighborhood, nonconservative_update, FrdNeighborhoods};
use ebamr::geometry::{CellClass, ImplicitFn, LevelGeometry};
use ebamr::index::{BoxArray, Cell, IndexBox};
use ebamr::validate::{random_mesh, random_state};
use ebamr::wsrd::MergeStrategy;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 4 × 4 cells on the unit square, bottom wall at y = 0.2: the bottom row
/// has Λ = 0.2, everything above is regular.
fn stripe() -> LevelGeometry {
    let f = ImplicitFn::RotatedChannel {
        angle: 0.0,
        half_width: 0.45,
        center: (0.5, 0.65),
    };
    LevelGeometry::build(&f, IndexBox::from_size(4, 4), 0.25, 0.25, (0.0, 0.0)).unwrap()
}

/// Neighborhoods with a single source `s` whose members are `m`.
fn single(g: &LevelGeometry, s: Cell, m: Vec<Cell>) -> FrdNeighborhoods {
    let mut members = BoxArray::new(g.bx, Vec::new());
    members[s] = m;
    FrdNeighborhoods {
        region: g.bx,
        members,
    }
}

fn scalar(g: &LevelGeometry, f: impl Fn(Cell) -> f64) -> BoxArray<Cons> {
    BoxArray::from_fn(g.bx, |c| Cons::new(f(c), 0.0, 0.0, 0.0))
}

#[test]
fn two_cell_nonconservative_update() {
    let g = stripe();
    let (s, q) = (Cell::new(1, 0), Cell::new(1, 1));
    assert_relative_eq!(g.vfrac[s], 0.2, epsilon = 1e-12);
    let nb = single(&g, s, vec![s, q]);
    let duc = scalar(&g, |c| if c == s { 10.0 } else { 1.0 });
    let nc = nonconservative_update(&g, &nb, &duc);
    assert_relative_eq!(nc[s].rho, (0.2 * 10.0 + 1.0) / 1.2, epsilon = 1e-12);
    assert_relative_eq!(nc[s].rho, 2.5, epsilon = 1e-12);
}

#[test]
fn two_cell_stabilized_update_by_hand() {
    let g = stripe();
    let (s, q) = (Cell::new(1, 0), Cell::new(1, 1));
    let nb = single(&g, s, vec![s, q]);
    let duc = scalar(&g, |c| if c == s { 10.0 } else { 1.0 });
    let r = frd_apply(&g, &nb, &duc, None);
    let v = 0.0625;
    // hybrid 0.2·10 + 0.8·2.5 = 4; δM = 0.2v·0.8·7.5 = 1.2v over V_nbh = 1.2v
    assert_relative_eq!(r.du[s].rho, 5.0, epsilon = 1e-12);
    assert_relative_eq!(r.du[q].rho, 2.0, epsilon = 1e-12);
    assert_eq!(r.transfers.len(), 2);
    let to_q = r.transfers.iter().find(|t| t.dst == q).unwrap();
    assert_relative_eq!(to_q.amount.rho, v, epsilon = 1e-15);
    assert_relative_eq!(0.2 * v * r.du[s].rho + v * r.du[q].rho, 0.2 * v * 10.0 + v, epsilon = 1e-15);
}

#[test]
fn constant_update_and_singletons_are_unchanged() {
    let g = stripe();
    let nb = build_frd_neighborhoods(&g, g.bx);
    let duc = scalar(&g, |_| 3.0);
    let nc = nonconservative_update(&g, &nb, &duc);
    for c in g.bx.cells() {
        if !nb.members[c].is_empty() {
            assert_relative_eq!(nc[c].rho, 3.0, epsilon = 1e-14);
        }
    }
    let s = Cell::new(2, 0);
    let lone = single(&g, s, vec![s]);
    let duc = scalar(&g, |c| (c.i + 4 * c.j) as f64);
    let r = frd_apply(&g, &lone, &duc, None);
    assert!(g.bx.cells().all(|c| r.du[c] == duc[c]));
}

#[test]
fn isolated_cut_cell_is_its_own_neighborhood() {
    // a quarter disk of fluid in the corner cell of a solid block
    let f = ImplicitFn::Circle {
        center: (0.0, 0.0),
        radius: 0.6,
        fluid_outside: false,
    };
    let g = LevelGeometry::build(&f, IndexBox::from_size(3, 3), 1.0, 1.0, (0.0, 0.0)).unwrap();
    let p = Cell::new(0, 0);
    assert_eq!(g.class[p], CellClass::Cut);
    assert_eq!(monotone_neighborhood(&g, &g.bx, p), vec![p]);
}

#[test]
fn all_regular_mesh_passes_through() {
    let g = LevelGeometry::build(&ImplicitFn::AllFluid, IndexBox::from_size(6, 6), 0.1, 0.1, (0.0, 0.0)).unwrap();
    let nb = build_frd_neighborhoods(&g, g.bx);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let duc = random_state(&mut rng, g.bx);
    let r = frd_apply(&g, &nb, &duc, None);
    assert!(r.transfers.is_empty());
    assert!(g.bx.cells().all(|c| r.du[c] == duc[c]));
}

fn mesh(seed: u64) -> (LevelGeometry, FrdNeighborhoods, BoxArray<Cons>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (g, _) = random_mesh(&mut rng, 12, MergeStrategy::Normal);
    let nb = build_frd_neighborhoods(&g, g.bx);
    let duc = random_state(&mut rng, g.bx);
    (g, nb, duc)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn redistribution_conserves(seed in any::<u64>(), density in any::<bool>()) {
        let (g, nb, duc) = mesh(seed);
        let rho = BoxArray::from_fn(g.bx, |c| Cons::new(1.0 + 0.1 * (c.i % 3) as f64, 0.0, 0.0, 1.0));
        let r = frd_apply(&g, &nb, &duc, density.then_some(&rho));
        let mut before = Cons::ZERO;
        let mut after = Cons::ZERO;
        let mut scale = Cons::ZERO;
        for c in g.bx.cells().filter(|c| g.is_fluid(*c)) {
            let v = g.volume(c);
            before += duc[c] * v;
            after += r.du[c] * v;
            scale += duc[c].abs() * v;
        }
        for k in 0..4 {
            prop_assert!((after.comp(k) - before.comp(k)).abs() <= 1e-13 * scale.comp(k));
        }
    }

    #[test]
    fn no_inverse_volume_amplification(seed in any::<u64>()) {
        let (g, nb, duc) = mesh(seed);
        let r = frd_apply(&g, &nb, &duc, None);
        // a cell takes its hybrid update plus at most nine shares of
        // |δU^c − δU^nc| ≤ 2 max|δU^c| from the sources around it
        for p in g.bx.cells().filter(|c| g.is_fluid(*c)) {
            let near = IndexBox::new(p.shift(-2, -2), p.shift(2, 2)).intersect(&g.bx);
            let m = near
                .cells()
                .filter(|c| g.is_fluid(*c))
                .map(|c| duc[c].abs())
                .fold(Cons::ZERO, |a, b| a.zip(b, f64::max));
            for k in 0..4 {
                prop_assert!(r.du[p].comp(k).abs() <= 19.0 * m.comp(k) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn neighborhoods_are_fluid_and_adjacent(seed in any::<u64>()) {
        let (g, nb, _) = mesh(seed);
        for p in g.bx.cells() {
            let m = &nb.members[p];
            if g.class[p] != CellClass::Cut {
                prop_assert!(m.is_empty());
                continue;
            }
            prop_assert_eq!(m[0], p);
            for q in m {
                prop_assert!(g.is_fluid(*q));
                prop_assert!((q.i - p.i).abs() <= 1 && (q.j - p.j).abs() <= 1);
            }
        }
    }
}
