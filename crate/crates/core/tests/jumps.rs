use crnash::crcore::{find_jumps, jump_indicator, signed_index, transversality, JumpSearch};
use crnash::manifold::ManifoldSpec;
use crnash::par::Execution;
use crnash::{Error, C64};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn graph(n: usize, f: &str) -> ManifoldSpec {
    let mut names: Vec<String> = (1..=n + 1).map(|k| format!("z{k}")).collect();
    names.push("w".into());
    ManifoldSpec::new(n, &names, &format!("re(w - ({f}))"), &format!("im(w - ({f}))")).unwrap()
}

/// `graph` with `ρ_m` multiplied by positive constants.
fn scaled_graph(n: usize, f: &str, c1: f64, c2: f64) -> ManifoldSpec {
    let mut names: Vec<String> = (1..=n + 1).map(|k| format!("z{k}")).collect();
    names.push("w".into());
    ManifoldSpec::new(
        n,
        &names,
        &format!("{c1}*re(w - ({f}))"),
        &format!("{c2}*im(w - ({f}))"),
    )
    .unwrap()
}

#[test]
fn square_graph_has_one_transverse_jump() {
    let s = graph(0, "conj(z1)^2");
    let jumps = find_jumps(&s, &JumpSearch::default()).unwrap();
    assert_eq!(jumps.len(), 1);
    let j = &jumps[0];
    assert!(j.point.coords.norm() < 1e-8);
    assert!(j.transverse);
    assert!((j.det - 1.0).abs() < 1e-8, "det {}", j.det);
    assert_eq!(signed_index(j).unwrap(), 1);
}

#[test]
fn indicator_along_real_axis_is_i_t() {
    // ∂ρ₁∧∂ρ₂ on w = z̄² has dz∧dw coefficient i·z
    let s = graph(0, "conj(z1)^2");
    for t in [1e-3, 0.1, 0.37, 0.9] {
        let p = s.surface_point(&[c(t, 0.0), c(t * t, 0.0)]).unwrap();
        let (form, _) = jump_indicator(&s, &p).unwrap();
        let want = c(0.0, t);
        assert!(
            (form.get(0, 1) - want).norm() <= 1e-8 * want.norm(),
            "t = {t}: {}",
            form.get(0, 1)
        );
    }
}

#[test]
fn conjugate_graph_has_no_jumps() {
    assert!(find_jumps(&graph(0, "conj(z1)"), &JumpSearch::default())
        .unwrap()
        .is_empty());
}

#[test]
fn cubic_graph_jump_is_degenerate() {
    let s = graph(0, "conj(z1)^3");
    let jumps = find_jumps(&s, &JumpSearch::default()).unwrap();
    assert_eq!(jumps.len(), 1);
    let j = &jumps[0];
    assert!(!j.transverse);
    assert!(j.jacobian.frobenius() < 1e-8);
    assert_eq!(j.index, 0);
    assert!(matches!(signed_index(j), Err(Error::NotTransverse)));
}

#[test]
fn two_variable_sum_of_squares_is_transverse() {
    let s = graph(1, "conj(z1)^2 + conj(z2)^2");
    let jumps = find_jumps(&s, &JumpSearch::default()).unwrap();
    assert_eq!(jumps.len(), 1);
    assert!(jumps[0].transverse);
    assert!(jumps[0].point.coords.norm() < 1e-8);
    assert_eq!(jumps[0].index, 1);
}

#[test]
fn antiholomorphic_indicator_gives_negative_index() {
    // on w = |z|² the indicator is proportional to z̄, which reverses orientation
    let j = find_jumps(&graph(0, "z1*conj(z1)"), &JumpSearch::default()).unwrap();
    assert_eq!(j.len(), 1);
    assert!(j[0].transverse);
    assert_eq!(signed_index(&j[0]).unwrap(), -1);
}

#[test]
fn shifted_square_locates_the_shifted_jump() {
    let j = find_jumps(&graph(0, "(conj(z1) - 0.25)^2"), &JumpSearch::default()).unwrap();
    assert_eq!(j.len(), 1);
    assert!((j[0].point.coords.0[0] - c(0.25, 0.0)).norm() < 1e-8);
    assert_eq!(j[0].index, 1);
}

#[test]
fn execution_policies_agree() {
    let s = graph(1, "conj(z1)^2 + conj(z2)^2 + z1*conj(z1)");
    let par = find_jumps(
        &s,
        &JumpSearch {
            execution: Execution::Parallel,
            ..Default::default()
        },
    )
    .unwrap();
    let seq = find_jumps(
        &s,
        &JumpSearch {
            execution: Execution::Sequential,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(par.len(), seq.len());
    for (a, b) in par.iter().zip(&seq) {
        assert_eq!(a.point.coords, b.point.coords);
        assert_eq!(a.det, b.det);
    }
}

#[test]
fn jumps_are_invariant_under_rescaling_the_defining_functions() {
    let base = find_jumps(&graph(0, "conj(z1)^2"), &JumpSearch::default()).unwrap();
    for (c1, c2) in [(2.0, 1.0), (0.5, 3.0), (7.0, 7.0)] {
        let s = scaled_graph(0, "conj(z1)^2", c1, c2);
        let j = find_jumps(&s, &JumpSearch::default()).unwrap();
        assert_eq!(j.len(), 1);
        assert!((j[0].point.coords.0[0] - base[0].point.coords.0[0]).norm() < 1e-8);
        assert!((j[0].det - base[0].det).abs() < 1e-8, "{c1} {c2}: {}", j[0].det);
        let again = transversality(&s, &j[0]).unwrap();
        assert_eq!(again.index, 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// On w = z̄² the jump indicator norm is |z| away from the origin, so
    /// no point other than the origin is flagged.
    #[test]
    fn indicator_norm_on_square_graph(re in -1.0f64..1.0, im in -1.0f64..1.0) {
        let s = graph(0, "conj(z1)^2");
        let z = c(re, im);
        let p = s.surface_point(&[z, z.conj() * z.conj()]).unwrap();
        let (form, norm) = jump_indicator(&s, &p).unwrap();
        prop_assert!((form.get(0, 1) - c(0.0, 1.0) * z).norm() < 1e-12);
        prop_assert!((norm - z.norm()).abs() < 1e-12);
    }
}
