use proptest::prelude::*;

use mdswpir::field::{Fe, PrimeField};
use mdswpir::leakage::{build_query_table, LeakageModel};
use mdswpir::lp::SimplexOptions;
use mdswpir::mds::make_rs_code;
use mdswpir::optimizer::TradeoffModel;
use mdswpir::protocol::{AnswerFrame, QueryFrame, Server};
use mdswpir::scheme::{answer_length, QueryMatrix, SchemeInstance, SchemeKind};
use mdswpir::sim::{run_retrieval, Deployment};

const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 251, 65_521];

fn field_and_elems() -> impl Strategy<Value = (PrimeField, u64, u64, u64)> {
    prop::sample::select(PRIMES.to_vec()).prop_flat_map(|q| {
        let f = PrimeField::new(q).unwrap();
        (Just(f), 0..q as u64, 0..q as u64, 0..q as u64)
    })
}

fn kind() -> impl Strategy<Value = SchemeKind> {
    prop::sample::select(SchemeKind::ALL.to_vec())
}

/// Scheme instances small enough to tabulate in milliseconds. OLR needs M >= 2.
fn small_instance() -> impl Strategy<Value = (SchemeKind, (usize, usize, usize))> {
    let params = prop::sample::select(vec![(1, 3, 2), (2, 3, 2), (3, 3, 2), (2, 4, 2), (2, 2, 1), (2, 4, 3), (2, 5, 3)]);
    (kind(), params).prop_filter("OLR needs two files", |(k, (m, _, _))| *k != SchemeKind::Olr || *m >= 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_axioms((f, a, b, c) in field_and_elems()) {
        let (a, b, c) = (f.elem(a), f.elem(b), f.elem(c));
        prop_assert_eq!((a + b) + c, a + (b + c));
        prop_assert_eq!((a * b) * c, a * (b * c));
        prop_assert_eq!(a * (b + c), a * b + a * c);
        prop_assert_eq!(a + b, b + a);
        prop_assert_eq!(a + (-a), f.zero());
        prop_assert_eq!(a - b + b, a);
        if !a.is_zero() {
            prop_assert_eq!(a * a.inv().unwrap(), f.one());
            prop_assert_eq!(a.pow(f.modulus() as u64 - 1), f.one());
        } else {
            prop_assert!(a.inv().is_err());
        }
    }

    #[test]
    fn encoding_is_linear(
        (n, k) in prop::sample::select(vec![(3, 2), (4, 2), (5, 3), (7, 4), (4, 1)]),
        seed in any::<u64>(),
        scale in 0u64..7,
    ) {
        let f = PrimeField::smallest_at_least(n);
        let code = make_rs_code(n, k, f).unwrap();
        let mut x = seed;
        let mut next = || { x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); f.elem(x >> 33) };
        let u: Vec<Fe> = (0..k).map(|_| next()).collect();
        let v: Vec<Fe> = (0..k).map(|_| next()).collect();
        let a = f.elem(scale);
        let combo: Vec<Fe> = u.iter().zip(&v).map(|(&p, &q)| a * p + q).collect();
        let cu = code.encode_row(&u).unwrap();
        let cv = code.encode_row(&v).unwrap();
        let expect: Vec<Fe> = cu.iter().zip(&cv).map(|(&p, &q)| a * p + q).collect();
        prop_assert_eq!(code.encode_row(&combo).unwrap(), expect);
        // Systematic: the first K symbols are the message.
        prop_assert_eq!(&cu[..k], &u[..]);
    }

    #[test]
    fn query_frames_round_trip(
        rows in 1usize..5,
        cols in 1usize..6,
        server in 1usize..=255,
        k in kind(),
        seed in any::<u64>(),
    ) {
        let entries: Vec<u8> = (0..rows * cols).map(|i| ((seed >> (i % 60)) & 0xff) as u8).collect();
        let q = QueryMatrix::new(rows, cols, entries).unwrap();
        let frame = QueryFrame::new(k, server, q);
        let bytes = frame.encode().unwrap();
        prop_assert_eq!(bytes.len(), 4 + 3 + rows * cols);
        prop_assert_eq!(QueryFrame::decode(&bytes, rows, cols).unwrap(), frame);
        for cut in 0..bytes.len() {
            prop_assert!(QueryFrame::decode(&bytes[..cut], rows, cols).is_err());
        }
    }

    #[test]
    fn answer_frames_round_trip(
        q in prop::sample::select(PRIMES.to_vec()),
        values in prop::collection::vec(any::<u32>(), 0..8),
        server in 1usize..=255,
    ) {
        let f = PrimeField::new(q).unwrap();
        let frame = AnswerFrame { server, symbols: values.iter().map(|&v| f.elem(v as u64)).collect() };
        let bytes = frame.encode().unwrap();
        prop_assert_eq!(bytes.len(), 4 + 2 + 2 * values.len());
        prop_assert_eq!(AnswerFrame::decode(&bytes, f).unwrap(), frame);
        for cut in 0..bytes.len() {
            prop_assert!(AnswerFrame::decode(&bytes[..cut], f).is_err());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tables_are_normalized_and_server_independent((k, (m, n, dim)) in small_instance()) {
        let s = SchemeInstance::new(k, m, n, dim).unwrap();
        let lm = LeakageModel::build(&s).unwrap();
        prop_assert!(lm.tables().iter().all(|t| t.is_normalized()));
        prop_assert_eq!(lm.first_unequal_server(), None);
        let t1 = build_query_table(&s, 1).unwrap();
        for qi in 0..t1.len() {
            prop_assert_eq!(t1.length(qi), answer_length(&t1.queries()[qi], &s.params()));
        }
    }

    #[test]
    fn per_server_leakage_is_equal((k, (m, n, dim)) in small_instance(), seed in any::<u64>()) {
        let s = SchemeInstance::new(k, m, n, dim).unwrap();
        let lm = LeakageModel::build(&s).unwrap();
        let count = lm.strategies();
        let raw: Vec<f64> = (0..count).map(|i| ((seed.rotate_left(i as u32 * 7) % 1000) + 1) as f64).collect();
        let total: f64 = raw.iter().sum();
        let z: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let per = lm.per_server_maxl(&z).unwrap();
        for l in &per {
            prop_assert!((l.bits - per[0].bits).abs() < 1e-12);
            prop_assert!(l.bits >= -1e-12 && l.bits <= (m as f64).log2() + 1e-12);
        }
    }

    #[test]
    fn optimizer_contract((k, (m, n, dim)) in small_instance(), frac in 0.0f64..=1.0, frac2 in 0.0f64..=1.0) {
        let s = SchemeInstance::new(k, m, n, dim).unwrap();
        let lm = LeakageModel::build(&s).unwrap();
        let model = TradeoffModel::new(&s, &lm, true).unwrap();
        let (lo, hi) = model.cost_range();
        let opts = SimplexOptions::default();
        let (d1, d2) = (lo + frac * (hi - lo), lo + frac2 * (hi - lo));
        let p = model.solve_target(d1, &opts).unwrap();
        prop_assert!(p.d_achieved <= d1 + 1e-9);
        prop_assert!(p.leakage_bits >= -1e-12 && p.leakage_bits <= (m as f64).log2() + 1e-9);
        prop_assert!((p.z.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.z.iter().all(|&v| v >= 0.0));
        // The reported leakage is the LP optimum, evaluated at the returned PMF.
        prop_assert!((p.lp_value.log2() - p.leakage_bits).abs() < 1e-9);
        let q = model.solve_target(d2, &opts).unwrap();
        if d1 <= d2 {
            prop_assert!(q.leakage_bits <= p.leakage_bits + 1e-9);
        } else {
            prop_assert!(p.leakage_bits <= q.leakage_bits + 1e-9);
        }
    }

    #[test]
    fn retrieval_succeeds_and_downloads_answer_lengths(
        (k, (m, n, dim)) in small_instance(),
        seed in any::<u64>(),
        pick in any::<prop::sample::Index>(),
        file in any::<prop::sample::Index>(),
        shift in any::<prop::sample::Index>(),
    ) {
        let s = SchemeInstance::new(k, m, n, dim).unwrap();
        let size = s.alphabet().len();
        let params = s.params();
        let dep = Deployment::random(s, None, seed).unwrap();
        let tr = run_retrieval(&dep, file.index(m) + 1, pick.index(size), shift.index(n) + 1).unwrap();
        prop_assert!(tr.success, "{:?}", tr);
        let expect: usize = tr.queries.iter().map(|q| answer_length(q, &params)).sum();
        prop_assert_eq!(tr.downloaded, expect);
    }

    #[test]
    fn servers_are_stateless((k, (m, n, dim)) in small_instance(), seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let s = SchemeInstance::new(k, m, n, dim).unwrap();
        let strat = s.alphabet().members()[pick.index(s.alphabet().len())].clone();
        let dep = Deployment::random(s.clone(), None, seed).unwrap();
        let servers: Vec<Server> = dep.servers();
        for (j, server) in servers.iter().enumerate() {
            let q = s.query(1, &strat, j + 1).unwrap();
            let req = QueryFrame::new(k, j + 1, q).encode().unwrap();
            let first = server.handle(&req).unwrap();
            // An unrelated request in between must not change the replay.
            let other = s.query(m, &strat, j + 1).unwrap();
            server.handle(&QueryFrame::new(k, j + 1, other).encode().unwrap()).unwrap();
            prop_assert_eq!(server.handle(&req).unwrap(), first);
        }
    }
}
