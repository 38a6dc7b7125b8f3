use num_complex::Complex;
use nz_core::bloch::{apply_move, pair_regulator, pair_to_text, pair_wedge_check, parse_pair, torsion_difference, HalfSymplecticPair, Move};
use nz_core::dilogarithm::dist_mod_4pi2;
use nz_core::geometry::{complex_volume_of, solve_complete, volume};
use nz_core::triangulation::{derive_edge_matrices, parse_triangulation};
use nz_core::zlinalg::IntMatrix;
use nz_core::{fixtures, Dd, NzError, Pair, Real};
use num_traits::Float;
use proptest::prelude::*;

fn pair(src: &str) -> Pair {
    let g = derive_edge_matrices(&parse_triangulation(src).unwrap()).unwrap();
    let s = solve_complete::<f64>(&g, None).unwrap();
    HalfSymplecticPair::from_gluing(&g, &s).unwrap()
}

const ALL: [&str; 3] = [fixtures::FIG8, fixtures::SISTER, fixtures::WHITEHEAD];

#[test]
fn text_to_complex_volume() {
    let pi2 = std::f64::consts::PI.powi(2);
    for (src, re) in ALL.into_iter().zip([3.5, 23.0 / 6.0, 0.25]) {
        let g = derive_edge_matrices(&parse_triangulation(src).unwrap()).unwrap();
        let s = solve_complete::<Dd>(&g, None).unwrap();
        let c = complex_volume_of(&g, &s).unwrap();
        assert!((c.im - volume(&s)).abs().as_f64() < 1e-25);
        assert!((c.re.as_f64() / pi2 - re).abs() < 1e-12, "{}", c.re.as_f64() / pi2);
    }
}

#[test]
fn exported_pairs_reimport() {
    for src in ALL {
        let p = pair(src);
        let q: Pair = parse_pair(&pair_to_text(&p)).unwrap();
        assert_eq!(q.h(), p.h());
        assert_eq!(q.m(), p.m());
        let (a, b) = (pair_regulator(&p).unwrap(), pair_regulator(&q).unwrap());
        assert!(dist_mod_4pi2(a, b) < 1e-12);
        assert!(pair_wedge_check(&q).unwrap().vanishes);
    }
}

#[test]
fn broken_pair_is_rejected() {
    let text = pair_to_text(&pair(fixtures::FIG8)).replacen("PAIR\n2 4\n", "PAIR\n2 4\n3 ", 1);
    assert!(parse_pair::<f64>(&text).is_err());
    let full = pair_to_text(&pair(fixtures::FIG8));
    let mut lines: Vec<&str> = full.lines().collect();
    lines.pop();
    assert!(parse_pair::<f64>(&lines.join("\n")).is_err());
}

fn elementary(n: usize, i: usize, j: usize, k: i64) -> IntMatrix {
    IntMatrix::from_fn(n, n, |r, c| (i64::from(r == c) + if (r, c) == (i, j) { k } else { 0 }).into())
}

#[derive(Debug, Clone)]
enum Step {
    Rotate(usize, u8),
    Left(usize, usize, i64),
    Swap(usize, usize),
}

fn step() -> impl Strategy<Value = Step> {
    prop_oneof![
        (0usize..4, 0u8..3).prop_map(|(j, k)| Step::Rotate(j, k)),
        (0usize..4, 0usize..4, -2i64..=2).prop_map(|(i, j, k)| Step::Left(i, j, k)),
        (0usize..4, 0usize..4).prop_map(|(a, b)| Step::Swap(a, b)),
    ]
}

fn to_move(s: &Step, n: usize) -> Move {
    match *s {
        Step::Rotate(j, k) => Move::RotateShape(j % n, k),
        Step::Left(i, j, k) if i % n != j % n => Move::LeftUnimodular(elementary(n, i % n, j % n, k)),
        Step::Left(..) => Move::LeftUnimodular(IntMatrix::identity(n)),
        Step::Swap(a, b) => {
            let mut sigma: Vec<usize> = (0..n).collect();
            sigma.swap(a % n, b % n);
            Move::Renumber(sigma)
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // volume is invariant and the regulator moves by torsion along any chain of moves
    #[test]
    fn move_chains_preserve_class(which in 0usize..3, steps in prop::collection::vec(step(), 1..6)) {
        let p0 = pair(ALL[which]);
        let r0 = pair_regulator(&p0).unwrap();
        let mut p = p0.clone();
        for s in &steps {
            p = apply_move(&p, &to_move(s, p.len())).unwrap();
            prop_assert!(p.gluing_check().unwrap().pass);
            prop_assert!((p.volume() - p0.volume()).abs() < 1e-10);
        }
        match pair_regulator(&p) {
            Ok(r) => {
                prop_assert!((r.im - r0.im).abs() < 1e-9);
                prop_assert!(torsion_difference(r, r0, 1e-8).is_some(), "{r} vs {r0}");
                prop_assert!(pair_wedge_check(&p).unwrap().vanishes);
            }
            Err(NzError::Degenerate(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}

#[test]
fn stabilising_round_trip() {
    let p = pair(fixtures::WHITEHEAD);
    let s = apply_move(&p, &Move::Stabilize).unwrap();
    assert_eq!(s.len(), p.len() + 1);
    let back = apply_move(&s, &Move::Unstabilize).unwrap();
    assert_eq!(back.h(), p.h());
    let d = pair_regulator(&back).unwrap() - pair_regulator(&p).unwrap();
    assert!(d.norm() < 1e-12 || torsion_difference(d, Complex::new(0.0, 0.0), 1e-8).is_some());
}
