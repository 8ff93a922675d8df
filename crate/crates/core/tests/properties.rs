use finsler::derivatives::{jet_eval, MultiIndex};
use finsler::expr::{Expr, Func, Var};
use finsler::metric::{MetricSpec, MetricVariant};
use finsler::parser::parse_metric;
use finsler::sampling::ChartPoint;
use proptest::prelude::*;

fn leaf(n: usize) -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0u32..200).prop_map(|k| Expr::num(k as f64 / 8.0)),
        (0..n).prop_map(Expr::x),
        (0..n).prop_map(Expr::y),
    ]
}

fn expr(n: usize) -> impl Strategy<Value = Expr> {
    leaf(n).prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (inner.clone(), prop_oneof![Just(2.0), Just(3.0), Just(0.5)])
                .prop_map(|(a, p)| Expr::pow(a, p)),
            (
                inner,
                prop_oneof![Just(Func::Sin), Just(Func::Cos), Just(Func::Exp)]
            )
                .prop_map(|(a, f)| Expr::call(f, a)),
        ]
    })
}

fn point(n: usize) -> impl Strategy<Value = ChartPoint> {
    (
        prop::collection::vec(-1.0f64..1.0, n),
        prop::collection::vec(0.3f64..1.5, n),
    )
        .prop_map(|(x, y)| ChartPoint::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn printed_metric_parses_back(e in expr(3)) {
        let spec = MetricSpec::new(3, "generated", MetricVariant::Custom(e));
        let text = spec.to_string();
        let back = parse_metric(&text).unwrap();
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn jets_are_linear(
        f in expr(2),
        g in expr(2),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        p in point(2),
    ) {
        let combo = Expr::add(Expr::mul(Expr::num(a), f.clone()), Expr::mul(Expr::num(b), g.clone()));
        let (Ok(tf), Ok(tg), Ok(tc)) = (jet_eval(&f, &p, (2, 3)), jet_eval(&g, &p, (2, 3)), jet_eval(&combo, &p, (2, 3))) else {
            return Ok(());
        };
        for (idx, v) in tc.iter() {
            let expect = a * tf.get(idx).unwrap() + b * tg.get(idx).unwrap();
            let mag = (a * tf.get(idx).unwrap()).abs() + (b * tg.get(idx).unwrap()).abs();
            prop_assert!((v - expect).abs() <= 1e-10 * mag.max(1.0), "{:?}: {} vs {}", idx, v, expect);
        }
    }

    #[test]
    fn energy_satisfies_euler_relation(
        b in prop::collection::vec(-0.5f64..0.5, 3),
        w in prop::collection::vec(0.5f64..2.0, 3),
        p in point(3),
    ) {
        let text = format!(
            "dim 3\nranders\na11 = {} + 0.1 * x2^2\na22 = {}\na33 = {} * exp(0.2 * x1)\nb1 = {}\nb2 = {} * cos(x3)\nb3 = {}\n",
            w[0], w[1], w[2], b[0] / 2.0, b[1] / 2.0, b[2] / 2.0
        );
        let spec = parse_metric(&text).unwrap();
        let e = spec.energy();
        let t = jet_eval(&e, &p, (0, 1)).unwrap();
        let e0 = t.get(&MultiIndex::zero(3)).unwrap();
        let euler: f64 = (0..3).map(|k| p.y[k] * t.get(&MultiIndex::of(3, &[Var::Y(k)])).unwrap()).sum();
        prop_assert!((euler - 2.0 * e0).abs() <= 1e-10 * e0.abs());
    }
}
