use latbp_core::{
    bp_defect, componentwise_min, operator_norm, refine, vector_norm, BpOptions, NormSpec,
    Operator, Partition, Vector,
};
use proptest::prelude::*;

fn vec_n(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, n)
}

fn spec() -> impl Strategy<Value = NormSpec> {
    prop_oneof![
        Just(NormSpec::L1),
        Just(NormSpec::L2),
        Just(NormSpec::Linf),
        (1.1..6.0f64).prop_map(|p| NormSpec::lp(p).unwrap()),
    ]
}

fn exact_spec() -> impl Strategy<Value = NormSpec> {
    prop_oneof![Just(NormSpec::L1), Just(NormSpec::L2), Just(NormSpec::Linf)]
}

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..8).prop_flat_map(|n| (vec_n(n), vec_n(n)))
}

fn op_pair() -> impl Strategy<Value = (Operator, Operator)> {
    (2usize..6).prop_flat_map(|n| (vec_n(n * n), vec_n(n * n))).prop_map(|(a, b)| {
        let n = (a.len() as f64).sqrt() as usize;
        (Operator::from_row_major(n, a).unwrap(), Operator::from_row_major(n, b).unwrap())
    })
}

fn labels() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (1usize..9).prop_flat_map(|n| {
        (prop::collection::vec(0..n, n), prop::collection::vec(0..n, n))
    })
}

fn from_labels(l: &[usize]) -> Partition {
    let n = l.len();
    let blocks: Vec<Vec<usize>> = (0..n)
        .map(|b| (0..n).filter(|&i| l[i] == b).collect::<Vec<_>>())
        .filter(|b| !b.is_empty())
        .collect();
    Partition::new(n, blocks).unwrap()
}

proptest! {
    #[test]
    fn lattice_identities((a, b) in pair()) {
        let x = Vector::new(a).unwrap();
        let y = Vector::new(b).unwrap();
        let sum = x.meet(&y).unwrap().add(&x.join(&y).unwrap()).unwrap();
        prop_assert_eq!(sum.entries().to_vec(), x.add(&y).unwrap().entries().to_vec());
        prop_assert_eq!(x.pos().sub(&x.neg()).unwrap().entries().to_vec(), x.entries().to_vec());
        prop_assert_eq!(x.pos().add(&x.neg()).unwrap().entries().to_vec(), x.abs().entries().to_vec());
        prop_assert!(x.pos().is_disjoint(&x.neg()));
    }

    #[test]
    fn norm_is_monotone((a, b) in pair(), spec in spec()) {
        let x = Vector::new(a).unwrap();
        let y = Vector::new(b).unwrap();
        let small = x.abs().meet(&y.abs()).unwrap();
        let big = x.abs();
        prop_assert!(small.le(&big));
        let ns = vector_norm(&small, &spec).unwrap();
        let nb = vector_norm(&big, &spec).unwrap();
        prop_assert!(ns <= nb * (1.0 + 1e-12) + 1e-12);
        prop_assert!((vector_norm(&x, &spec).unwrap() - nb).abs() <= 1e-12 * (1.0 + nb));
    }

    #[test]
    fn meet_distributes_over_addition((a, b) in pair(), shift in -5.0..5.0f64) {
        let x = Vector::new(a).unwrap();
        let y = Vector::new(b).unwrap();
        let z = Vector::new(vec![shift; x.dim()]).unwrap();
        let lhs = x.add(&z).unwrap().meet(&y.add(&z).unwrap()).unwrap();
        let rhs = x.meet(&y).unwrap().add(&z).unwrap();
        for (l, r) in lhs.entries().iter().zip(rhs.entries()) {
            prop_assert!((l - r).abs() <= 1e-12);
        }
        let m = componentwise_min(&[x.clone(), y.clone()]).unwrap();
        prop_assert_eq!(m.entries().to_vec(), x.meet(&y).unwrap().entries().to_vec());
    }

    #[test]
    fn refine_is_the_coarsest_common_refinement((l1, l2) in labels()) {
        let p = from_labels(&l1);
        let q = from_labels(&l2);
        let r = refine(&p, &q).unwrap();
        prop_assert!(p.precedes(&r) && q.precedes(&r));
        let lab = r.labels();
        for i in 0..l1.len() {
            for j in 0..l1.len() {
                prop_assert_eq!(lab[i] == lab[j], l1[i] == l1[j] && l2[i] == l2[j]);
            }
        }
        prop_assert_eq!(refine(&q, &p).unwrap().labels().len(), lab.len());
    }

    #[test]
    fn bp_is_lipschitz((a, b) in op_pair(), spec in exact_spec()) {
        let ba = bp_defect(&a, &spec, &BpOptions::default()).unwrap().value;
        let bb = bp_defect(&b, &spec, &BpOptions::default()).unwrap().value;
        let dist = operator_norm(&a.sub(&b).unwrap(), &spec).unwrap().upper;
        prop_assert!((ba - bb).abs() <= dist + 1e-9);
        prop_assert!(ba <= operator_norm(&a, &spec).unwrap().upper + 1e-9);
    }

    #[test]
    fn bp_vanishes_on_diagonals(d in prop::collection::vec(-5.0..5.0f64, 2..8), spec in exact_spec()) {
        let m = Operator::diagonal(&d);
        let b = bp_defect(&m, &spec, &BpOptions::default()).unwrap().value;
        prop_assert!(b.abs() <= 1e-12);
    }
}
