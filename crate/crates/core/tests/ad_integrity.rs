use crnash::expr::{eval_jet, parse, wirtinger, Expr, VarRef};
use crnash::C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random polynomial in `z_k, conj(z_k)` with small integer coefficients.
fn random_poly(rng: &mut ChaCha8Rng, nvars: usize) -> String {
    let terms = rng.random_range(1..=5);
    let mut out = Vec::new();
    for _ in 0..terms {
        let c = rng.random_range(-4i32..=4);
        let c = if c == 0 { 1 } else { c };
        let mut factors = vec![format!("({c})")];
        for k in 0..nvars {
            let (a, b) = (rng.random_range(0..=2), rng.random_range(0..=2));
            if a > 0 {
                factors.push(format!("z{}^{a}", k + 1));
            }
            if b > 0 {
                factors.push(format!("conj(z{})^{b}", k + 1));
            }
        }
        if rng.random_bool(0.3) {
            factors.push("i".into());
        }
        out.push(factors.join("*"));
    }
    out.join(" + ")
}

fn random_point(rng: &mut ChaCha8Rng, nvars: usize) -> Vec<C64> {
    (0..nvars)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// `∂/∂z = (∂_x − i∂_y)/2` and `∂/∂z̄ = (∂_x + i∂_y)/2` by central differences.
fn fd_wirtinger(e: &Expr, p: &[C64], v: VarRef, h: f64) -> C64 {
    let shifted = |dz: C64| -> C64 {
        let mut q = p.to_vec();
        q[v.index] += dz;
        e.eval(&q).unwrap()
    };
    let dx = (shifted(C64::new(h, 0.0)) - shifted(C64::new(-h, 0.0))) / (2.0 * h);
    let dy = (shifted(C64::new(0.0, h)) - shifted(C64::new(0.0, -h))) / (2.0 * h);
    let i = C64::new(0.0, 1.0);
    if v.conj {
        (dx + i * dy) / 2.0
    } else {
        (dx - i * dy) / 2.0
    }
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

#[test]
fn jets_agree_with_symbolic_and_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..50 {
        let nvars = rng.random_range(1..=3);
        let src = random_poly(&mut rng, nvars);
        let e = parse(&src, nvars).unwrap();
        let p = random_point(&mut rng, nvars);
        let jet = eval_jet(&e, &p, 2).unwrap();
        for slot in 0..2 * nvars {
            let v = VarRef::from_slot(slot, nvars);
            let sym = wirtinger(&e, v).unwrap().eval(&p).unwrap();
            let ad = jet.partial_of(&[v]);
            assert!(rel(ad, sym) < 1e-12, "case {case} {src}: {v:?} jet {ad} symbolic {sym}");
            let fd = fd_wirtinger(&e, &p, v, 1e-5);
            assert!(rel(ad, fd) < 1e-6, "case {case} {src}: {v:?} jet {ad} fd {fd}");

            // second order against the symbolic derivative of the derivative
            let dv = wirtinger(&e, v).unwrap();
            for slot2 in 0..2 * nvars {
                let w = VarRef::from_slot(slot2, nvars);
                let sym2 = wirtinger(&dv, w).unwrap().eval(&p).unwrap();
                let ad2 = jet.partial_of(&[v, w]);
                assert!(
                    rel(ad2, sym2) < 1e-12,
                    "case {case} {src}: {v:?}{w:?} jet {ad2} symbolic {sym2}"
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The zeroth jet coefficient is plain evaluation.
    #[test]
    fn jet_value_is_evaluation(seed in any::<u64>(), order in 0usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nvars = rng.random_range(1..=3);
        let e = parse(&random_poly(&mut rng, nvars), nvars).unwrap();
        let p = random_point(&mut rng, nvars);
        let jet = eval_jet(&e, &p, order).unwrap();
        prop_assert!(rel(jet.value(), e.eval(&p).unwrap()) < 1e-13);
    }

    /// Mixed partials commute.
    #[test]
    fn partials_commute(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nvars = rng.random_range(1..=3);
        let e = parse(&random_poly(&mut rng, nvars), nvars).unwrap();
        let p = random_point(&mut rng, nvars);
        let a = VarRef::from_slot(rng.random_range(0..2 * nvars), nvars);
        let b = VarRef::from_slot(rng.random_range(0..2 * nvars), nvars);
        let ab = wirtinger(&wirtinger(&e, a).unwrap(), b).unwrap().eval(&p).unwrap();
        let ba = wirtinger(&wirtinger(&e, b).unwrap(), a).unwrap().eval(&p).unwrap();
        prop_assert!(rel(ab, ba) < 1e-12);
    }

    /// `∂ conj(f)/∂z̄ = conj(∂f/∂z)`.
    #[test]
    fn conjugation_swaps_wirtinger_derivatives(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nvars = rng.random_range(1..=3);
        let e = parse(&random_poly(&mut rng, nvars), nvars).unwrap();
        let p = random_point(&mut rng, nvars);
        let k = rng.random_range(0..nvars);
        let lhs = wirtinger(&e.conj(), VarRef::zbar(k)).unwrap().eval(&p).unwrap();
        let rhs = wirtinger(&e, VarRef::z(k)).unwrap().eval(&p).unwrap().conj();
        prop_assert!(rel(lhs, rhs) < 1e-12);
    }
}
