#![allow(dead_code)]

use fpsym::expr::{rat, DerivIndex, Expr};
use proptest::prelude::*;

/// Random expressions in `x`, `t`, `a1`, `a2`, `u`, `u_x` built from sums,
/// products, small integer powers and exponentials of linear forms.
pub fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-4i64..=4, 1i64..=3).prop_map(|(n, d)| Expr::constant(rat(n, d))),
        Just(Expr::var("x")),
        Just(Expr::var("t")),
        Just(Expr::param("a1")),
        Just(Expr::param("a2")),
        Just(Expr::jet("u", DerivIndex::empty())),
        Just(Expr::jet("u", DerivIndex::new(["x"]))),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| &a + &b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| &a * &b),
            (inner.clone(), 0i32..=3).prop_map(|(a, k)| a.pow(k)),
            (-2i64..=2, -2i64..=2).prop_map(|(p, q)| {
                Expr::exp(&(&Expr::param("a2") * &Expr::var("t")).scale(&rat(p, 1)) + &Expr::var("x").scale(&rat(q, 1)))
            }),
        ]
    })
}
