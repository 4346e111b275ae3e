mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use superhedge::dpp::PositionGrid;
use superhedge::market::{CostModel, MarketState, Position};
use superhedge::payoff::Payoff;
use superhedge::sphere::sphere_sample;

const TOL: f64 = 1e-9;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * (1.0 + a.abs().max(b.abs()))
}

/// `(model, state)` for one asset of the given kind.
fn market(kind: u8) -> impl Strategy<Value = (CostModel, MarketState)> {
    (50.0..150.0f64, 0.0..2.0f64, 0.01..2.0f64, 0.1..3.0f64, 0.1..3.0f64).prop_map(move |(mid, h, gap, qb, qa)| {
        match kind {
            0 => (CostModel::proportional(1).unwrap(), MarketState::new(vec![mid - h, mid + h])),
            1 => (
                CostModel::order_book(1, 2).unwrap(),
                MarketState::new(vec![mid - h - 0.01, mid - h - 0.01 - gap, mid + h + 0.01, mid + h + 0.01 + gap, qb, qa]),
            ),
            _ => (CostModel::fixed_cost(1).unwrap(), MarketState::new(vec![mid - h, mid + h, gap])),
        }
    })
}

fn any_market() -> impl Strategy<Value = (CostModel, MarketState)> {
    prop_oneof![market(0), market(1), market(2)]
}

fn conic_market() -> impl Strategy<Value = (CostModel, MarketState)> {
    prop_oneof![market(0), market(1)]
}

fn sub_additive_market() -> impl Strategy<Value = (CostModel, MarketState)> {
    prop_oneof![market(0), market(2)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cash_invariance((m, s) in any_market(), y in -5.0..5.0f64, cash in -100.0..100.0f64, shift in -50.0..50.0f64) {
        let z = Position::new(cash, vec![y]);
        let a = m.cost(0, &s, &z.shift_cash(shift)).unwrap();
        let b = m.cost(0, &s, &z).unwrap() + shift;
        prop_assert!(close(a, b), "{a} vs {b}");
        prop_assert_eq!(m.cost(0, &s, &Position::zero(1)).unwrap(), 0.0);
    }

    #[test]
    fn liquidation_is_dual_to_cost((m, s) in any_market(), y in -5.0..5.0f64, cash in -10.0..10.0f64) {
        let z = Position::new(cash, vec![y]);
        prop_assert_eq!(m.liquidation(0, &s, &z).unwrap(), -m.cost(0, &s, &z.neg()).unwrap());
        prop_assert!(m.liquidation(0, &s, &z).unwrap() <= m.cost(0, &s, &z).unwrap() + TOL);
    }

    #[test]
    fn conic_costs_are_delta_homogeneous((m, s) in conic_market(), y in -5.0..5.0f64, lambda in 1.0..20.0f64) {
        let z = Position::risky_only(vec![y]);
        let big = m.cost(0, &s, &z.scale(lambda)).unwrap();
        let small = lambda * m.cost(0, &s, &z).unwrap();
        prop_assert!(big >= small - TOL * (1.0 + big.abs()), "{big} < {small}");
    }

    #[test]
    fn sub_additive_costs((m, s) in sub_additive_market(), x in -5.0..5.0f64, y in -5.0..5.0f64) {
        let (zx, zy) = (Position::risky_only(vec![x]), Position::risky_only(vec![y]));
        let joint = m.cost(0, &s, &zx.add(&zy)).unwrap();
        let split = m.cost(0, &s, &zx).unwrap() + m.cost(0, &s, &zy).unwrap();
        prop_assert!(joint <= split + TOL * (1.0 + split.abs()), "{joint} > {split}");
    }

    #[test]
    fn horizon_cost_is_below_sub_additive_cost((m, s) in sub_additive_market(), y in -5.0..5.0f64) {
        let z = Position::risky_only(vec![y]);
        let h = m.horizon_cost(0, &s, &z).unwrap();
        let c = m.cost(0, &s, &z).unwrap();
        prop_assert!(h <= c + TOL * (1.0 + c.abs()), "{h} > {c}");
    }

    // convex costs grow at least linearly, so the recession slope bounds them from above
    #[test]
    fn horizon_cost_is_above_convex_cost((m, s) in conic_market(), y in -5.0..5.0f64) {
        let z = Position::risky_only(vec![y]);
        let h = m.horizon_cost(0, &s, &z).unwrap();
        let c = m.cost(0, &s, &z).unwrap();
        prop_assert!(h >= c - TOL * (1.0 + c.abs()), "{h} < {c}");
    }

    #[test]
    fn sphere_samples_are_nested_unit_vectors(n in 1usize..5, k in 1usize..40) {
        let small = sphere_sample(n, k);
        let big = sphere_sample(n, 2 * k);
        prop_assert_eq!(&big[..small.len()], &small[..]);
        for v in &big {
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn nonnegative_claims_cost_at_least_the_zero_claim(seed in any::<u64>(), k in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_instance(&mut rng, common::KINDS[k], 20_000);
        let zero = inst.problem.solve(&Payoff::Zero).unwrap().price;
        let claim = inst.problem.solve(&inst.payoff).unwrap().price;
        prop_assert!(claim >= zero - TOL, "{claim} < {zero}");
    }

    #[test]
    fn convex_markets_give_convex_layers(seed in any::<u64>(), k in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_instance(&mut rng, common::KINDS[k], 20_000);
        let out = inst.problem.solve(&inst.payoff).unwrap();
        for layer in &out.layers {
            prop_assert!(layer.convex);
            let v = layer.midpoint_violation(inst.problem.grid());
            prop_assert!(v <= 1e-8, "t={} violation {v}", layer.t);
        }
    }

    #[test]
    fn solving_is_deterministic(seed in any::<u64>(), k in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_instance(&mut rng, common::KINDS[k], 20_000);
        let a = inst.problem.solve(&inst.payoff).unwrap();
        let b = inst.problem.solve(&inst.payoff).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn halving_the_step_never_raises_the_price(eps in 0.0..3.0f64, levels in 1u32..4) {
        let mut last = f64::INFINITY;
        for l in 0..levels {
            let step = 0.5 / 2f64.powi(l as i32);
            let (p, call) = common::proportional_call(eps, step);
            let price = p.solve(&call).unwrap().price;
            prop_assert!(price <= last + TOL, "step {step}: {price} > {last}");
            last = price;
        }
    }
}

#[test]
fn grid_refinement_on_order_book() {
    let state = vec![99.5, 99.0, 100.5, 101.0, 0.25, 0.25];
    let mut last = f64::INFINITY;
    for step in [0.5, 0.25, 0.125, 0.0625] {
        let p = common::binomial(
            CostModel::order_book(1, 2).unwrap(),
            state.clone(),
            2,
            PositionGrid::uniform(1, -2.0, 2.0, step).unwrap(),
        );
        let price = p.solve(&Payoff::CashSettledCall { asset: 0, strike: 100.0 }).unwrap().price;
        assert!(price <= last + TOL, "step {step}: {price} > {last}");
        last = price;
    }
}
