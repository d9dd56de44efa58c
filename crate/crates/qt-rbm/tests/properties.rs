//! Property tests for the core invariants.

use ndarray::{Array1, Array2};
use proptest::prelude::*;
use qt_rbm::model::{RbmParamsQt, RbmParamsStd};
use qt_rbm::qtnn::{
    encode_evidence, forward, masked_ce, transfer, transfer_mp, Beliefs, QueryMask,
};

const LN2: f64 = std::f64::consts::LN_2;

fn small_std(v: usize, h: usize) -> impl Strategy<Value = RbmParamsStd> {
    let w = proptest::collection::vec(-2.0..2.0f64, v * h);
    let bv = proptest::collection::vec(-2.0..2.0f64, v);
    let bh = proptest::collection::vec(-2.0..2.0f64, h);
    (w, bv, bh).prop_map(move |(w, bv, bh)| RbmParamsStd {
        w_std: Array2::from_shape_vec((h, v), w).unwrap(),
        b_v: Array1::from_vec(bv),
        b_h: Array1::from_vec(bh),
    })
}

proptest! {
    #[test]
    fn transfer_is_bounded(x in -50.0..50.0f64, w in -5.0..5.0f64, t in 0.0..3.0f64) {
        let f = transfer(x, w, t);
        prop_assert!(f.is_finite());
        prop_assert!(f.abs() <= w.abs() + t * LN2 + 1e-12);
    }

    #[test]
    fn transfer_annihilates_zeros(x in -50.0..50.0f64, w in -5.0..5.0f64, t in 0.0..3.0f64) {
        prop_assert_eq!(transfer(0.0, w, t), 0.0);
        prop_assert_eq!(transfer(x, 0.0, t), 0.0);
    }

    #[test]
    fn transfer_approaches_max_product(x in -8.0..8.0f64, w in -3.0..3.0f64) {
        let t = 1e-3;
        prop_assert!((transfer(x, w, t) - transfer_mp(x, w)).abs() <= 2.0 * t * LN2 + 1e-15);
    }

    #[test]
    fn transfer_t1_is_sum_product(x in -6.0..6.0f64, w in -3.0..3.0f64) {
        let oracle = ((x.exp() + (-w).exp()) / ((x - w).exp() + 1.0)).ln();
        prop_assert!((transfer(x, w, 1.0) - oracle).abs() < 1e-9);
    }

    #[test]
    fn conversions_round_trip(std in small_std(4, 3)) {
        let back = RbmParamsQt::from_standard(&std).to_standard();
        for (a, b) in back.w_std.iter().zip(std.w_std.iter()) {
            prop_assert!((a - b).abs() < 1e-14);
        }
        for (a, b) in back.b_v.iter().zip(std.b_v.iter()) {
            prop_assert!((a - b).abs() < 1e-14);
        }
        for (a, b) in back.b_h.iter().zip(std.b_h.iter()) {
            prop_assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn energies_agree_across_parameterizations(
        std in small_std(3, 2),
        v_bits in 0u8..8,
        h_bits in 0u8..4,
    ) {
        let qt = RbmParamsQt::from_standard(&std);
        let v: Vec<u8> = (0..3).map(|j| (v_bits >> j) & 1).collect();
        let h: Vec<u8> = (0..2).map(|i| (h_bits >> i) & 1).collect();
        let a = qt.energy(&v, &h).unwrap();
        let b = std.energy(&v, &h).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn messages_stay_bounded_through_forward(
        std in small_std(5, 3),
        log_t in -1.0..1.0f64,
        v_bits in 0u8..32,
        q_bits in 0u8..31, // never all-ones
    ) {
        let mut params = RbmParamsQt::from_standard(&std);
        params.log_t = log_t;
        let t = params.temperature();
        let v: Vec<f64> = (0..5).map(|j| ((v_bits >> j) & 1) as f64).collect();
        let q = QueryMask::new((0..5).map(|j| (q_bits >> j) & 1).collect()).unwrap();
        let u = encode_evidence(&v, &q, 20.0).unwrap().with_h_dim(3);
        let (beliefs, trace) = forward(&params, &u, 6).unwrap();
        for state in &trace.states {
            for ((i, j), m) in state.m_hv.indexed_iter() {
                prop_assert!(m.abs() <= params.w[(i, j)].abs() + t * LN2 + 1e-12);
            }
            for ((j, i), m) in state.m_vh.indexed_iter() {
                prop_assert!(m.abs() <= params.w[(i, j)].abs() + t * LN2 + 1e-12);
            }
        }
        for p in beliefs.v_hat.iter().chain(beliefs.h_hat.iter()) {
            prop_assert!(*p > 0.0 && *p < 1.0);
        }
    }

    #[test]
    fn uniform_beliefs_cost_ln2_per_output(v_bits in 0u8..16, q_bits in 0u8..16) {
        let v: Vec<u8> = (0..4).map(|j| (v_bits >> j) & 1).collect();
        let q = QueryMask::new((0..4).map(|j| (q_bits >> j) & 1).collect()).unwrap();
        let beliefs = Beliefs {
            v_hat: Array1::from_elem(4, 0.5),
            h_hat: Array1::zeros(0),
        };
        let ce = masked_ce(&v, &beliefs, &q).unwrap();
        prop_assert!((ce - q.n_outputs() as f64 * LN2).abs() < 1e-12);
    }
}
