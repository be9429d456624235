use hems_core::domain::{
    comfort_log_preference, energy_accounting, soc_transition, thermo_transition, BatteryAction,
    BatteryParams, ComfortTargets, ThermoParams, ThermostatAction,
};
use hems_core::inference::{
    expected_observations, update_transition_counts, Categorical, ConditionalTable, DirichletTable,
};
use proptest::prelude::*;

fn dist(n: usize) -> impl Strategy<Value = Categorical> {
    prop::collection::vec(0.0f64..10.0, n)
        .prop_filter_map("all-zero weights", |w| Categorical::new(w).ok())
}

fn table(child: usize, parents: Vec<usize>) -> impl Strategy<Value = ConditionalTable> {
    let columns: usize = parents.iter().product();
    prop::collection::vec(dist(child), columns).prop_map(move |cols| {
        let entries = cols.into_iter().flat_map(Categorical::into_vec).collect();
        ConditionalTable::from_entries(child, parents.clone(), entries).unwrap()
    })
}

fn sums_to_one(p: &[f64]) -> bool {
    (p.iter().sum::<f64>() - 1.0).abs() < 1e-12
}

proptest! {
    #[test]
    fn random_tables_are_column_stochastic(t in table(4, vec![3, 2])) {
        for c in 0..t.num_columns() {
            prop_assert!(sums_to_one(t.column(c)));
        }
        prop_assert!(t.max_slice_error() < 1e-12);
    }

    #[test]
    fn marginal_is_normalized_and_linear(
        t in table(3, vec![4]),
        a in dist(4),
        b in dist(4),
        w in 0.0f64..=1.0,
    ) {
        let qa = expected_observations(&a, &t).unwrap();
        let qb = expected_observations(&b, &t).unwrap();
        let mix = Categorical::new(
            a.probs().iter().zip(b.probs()).map(|(x, y)| w * x + (1.0 - w) * y).collect(),
        ).unwrap();
        let qm = expected_observations(&mix, &t).unwrap();
        prop_assert!(sums_to_one(qm.probs()));
        for o in 0..3 {
            let want = w * qa.get(o) + (1.0 - w) * qb.get(o);
            prop_assert!((qm.get(o) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_ignores_shifts(
        logits in prop::collection::vec(-50.0f64..50.0, 1..40),
        shift in -500.0f64..500.0,
    ) {
        let a = Categorical::softmax(&logits).unwrap();
        let shifted: Vec<f64> = logits.iter().map(|x| x + shift).collect();
        let b = Categorical::softmax(&shifted).unwrap();
        prop_assert!(sums_to_one(a.probs()));
        for (x, y) in a.probs().iter().zip(b.probs()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_updates_stay_normalized(
        updates in prop::collection::vec((dist(3), dist(3), 0usize..2, 0.01f64..50.0), 1..30),
    ) {
        let mut counts = DirichletTable::uniform(3, vec![3, 2], 1.0).unwrap();
        for (prev, post, action, lr) in updates {
            counts = update_transition_counts(counts, &prev, &post, action, &[], lr).unwrap();
        }
        prop_assert!(counts.concentrations().iter().all(|&c| c > 0.0));
        let t = counts.normalized();
        for c in 0..t.num_columns() {
            prop_assert!(sums_to_one(t.column(c)));
        }
    }

    #[test]
    fn flattening_keeps_the_preferred_temperature(
        precision in 0.1f64..5.0,
        flattening in 0.05f64..=1.0,
        occupied in any::<bool>(),
    ) {
        let targets = ComfortTargets {
            preference_precision: precision,
            tou_high_flattening: flattening,
            ..Default::default()
        };
        let temps: Vec<f64> = (8..=32).map(f64::from).collect();
        let argmax = |tou_high: bool| {
            temps
                .iter()
                .copied()
                .max_by(|a, b| {
                    comfort_log_preference(&targets, *a, occupied, tou_high)
                        .total_cmp(&comfort_log_preference(&targets, *b, occupied, tou_high))
                })
                .unwrap()
        };
        prop_assert_eq!(argmax(false), argmax(true));
        prop_assert_eq!(argmax(false), targets.target(occupied));
    }

    #[test]
    fn charge_then_discharge_round_trips(level in 1usize..3) {
        // levels 0.4 and 0.6 leave room in both directions
        let params = BatteryParams::default();
        let soc = params.soc_levels[level + 1];
        let up = params.next_soc(soc, BatteryAction::Charge);
        let back = params.next_soc(up, BatteryAction::Discharge);
        prop_assert!((back - soc).abs() < 1e-12);
        let e = params.battery_energy(soc, BatteryAction::Charge)
            + params.battery_energy(up, BatteryAction::Discharge);
        prop_assert!(e.abs() < 1e-12);
    }

    #[test]
    fn accounting_is_additive(
        baseline in 0.0f64..5.0,
        hvac in 0.0f64..3.0,
        battery in -2.0f64..2.0,
        solar in 0.0f64..5.0,
    ) {
        let total = energy_accounting(baseline, hvac, battery, solar);
        prop_assert!((total - (baseline + hvac + battery - solar)).abs() < 1e-12);
        prop_assert!(
            (energy_accounting(baseline, hvac, 0.0, solar) + battery - total).abs() < 1e-12
        );
    }
}

#[test]
fn vanishing_coupling_keeps_temperature_when_off() {
    let params = ThermoParams {
        alpha: 1e-6,
        ..Default::default()
    };
    let t = thermo_transition(&params).unwrap();
    let n = params.grid().unwrap().len();
    let off = ThermostatAction::Off.index();
    for temp in 0..n {
        for outdoor in 0..n {
            assert_eq!(t.get(temp, &[temp, outdoor, off]), 1.0);
        }
    }
}

#[test]
fn thermo_and_soc_tables_are_stochastic() {
    let noisy = ThermoParams {
        process_noise: 0.2,
        ..Default::default()
    };
    for params in [ThermoParams::default(), noisy] {
        assert!(thermo_transition(&params).unwrap().max_slice_error() < 1e-12);
    }
    assert!(
        soc_transition(&BatteryParams::default())
            .unwrap()
            .max_slice_error()
            < 1e-12
    );
}

#[test]
fn repeated_transitions_follow_closed_form() {
    // (1 + n) / (K + n) with K = 2 after n unit updates
    let mut counts = DirichletTable::uniform(2, vec![2, 2], 1.0).unwrap();
    let prev = Categorical::delta(2, 0);
    let post = Categorical::delta(2, 1);
    for n in 1..=500 {
        counts = update_transition_counts(counts, &prev, &post, 0, &[], 1.0).unwrap();
        let p = counts.normalized().get(1, &[0, 0]);
        assert!((p - (1.0 + n as f64) / (2.0 + n as f64)).abs() < 1e-12);
    }
    assert!(counts.normalized().get(1, &[0, 0]) > 0.99);
    assert_eq!(counts.get(0, &[0, 1]), 1.0);
}
