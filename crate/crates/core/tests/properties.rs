use std::f64::consts::PI;

use proptest::prelude::*;
use sobolev_core::chiti::{constant_K, khat, torsion_form};
use sobolev_core::elliptic::build_grid;
use sobolev_core::io;
use sobolev_core::radial::{normalize_to_ball, shoot, unit_ball_profile, volume_profile, ShootOptions};
use sobolev_core::rearrange::{
    decreasing_rearrangement, equimeasurability_residual, hlp_conclusion_check, hlp_dominates,
    SymmetricRearrangement,
};
use sobolev_core::{alpha, DomainSpec, Error, Exponents, VolumeProfile};

fn step_profile() -> impl Strategy<Value = VolumeProfile> {
    prop::collection::vec((0.01f64..1.0, 0.0f64..3.0), 1..10).prop_map(|cells| {
        let mut edges = vec![0.0];
        let mut values = Vec::new();
        for (w, v) in cells {
            edges.push(edges.last().unwrap() + w);
            values.push(v);
        }
        values.sort_by(|a, b| b.partial_cmp(a).unwrap());
        VolumeProfile::step(edges, values).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ball_constant_obeys_scaling(n in 2usize..4, p in 1.0f64..2.0, r in 0.3f64..4.0) {
        let shot = shoot(n, p, &ShootOptions::default()).unwrap();
        let unit = normalize_to_ball(&shot, 1.0).unwrap();
        let ball = normalize_to_ball(&shot, r).unwrap();
        let expected = unit.cp_ball * r.powf(alpha(n, p).unwrap());
        prop_assert!(((ball.cp_ball - expected) / expected).abs() < 1e-10);
        prop_assert!((ball.lq_norm(p) - 1.0).abs() < 1e-8);
        prop_assert!(ball.is_strictly_decreasing());
    }

    #[test]
    fn constant_scales_with_cp(p in 1.0f64..2.0, dq in 0.0f64..3.0, t in 0.2f64..5.0) {
        let q = p + dq;
        let cp = unit_ball_profile(2, p, &ShootOptions::default()).unwrap().cp_ball;
        let e = Exponents::new(2, p, q).unwrap().constant_exponent();
        let k1 = constant_K(2, p, q, cp).unwrap();
        let k2 = constant_K(2, p, q, t * cp).unwrap();
        prop_assert!((k2 / k1 - t.powf(e)).abs() < 1e-9 * t.powf(e));
        prop_assert!((k1 - khat(2, p, q).unwrap() * cp.powf(e)).abs() < 1e-10 * k1);
    }

    #[test]
    fn rearrangement_is_decreasing_and_equimeasurable(
        w in 0.3f64..1.5,
        hgt in 0.3f64..1.5,
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        q in 0.5f64..4.0,
    ) {
        let grid = build_grid(&DomainSpec::rectangle(w, hgt), 1.0 / 24.0).unwrap();
        let field = grid.map_inside(|x, y| 1.0 + (a * x).sin().abs() + (b * y * x).cos().powi(2));
        let u = decreasing_rearrangement(&field).unwrap();
        prop_assert!(u.values().windows(2).all(|v| v[1] <= v[0]));
        prop_assert!((u.total_volume() - field.measure()).abs() < 1e-12);
        prop_assert!(equimeasurability_residual(&field, q).unwrap() < 1e-12);
        let sym = SymmetricRearrangement::new(u, 2).unwrap();
        let (lhs, rhs) = (sym.lq_norm(q), field.lq_norm(q));
        prop_assert!(((lhs - rhs) / rhs).abs() < 1e-12);
    }

    #[test]
    fn hlp_dominance_implies_conclusion(f in step_profile(), g in step_profile(), q1 in 0.5f64..3.0, k in 1.0f64..5.0) {
        if hlp_dominates(&f, &g, q1).unwrap() {
            prop_assert!(hlp_conclusion_check(&f, &g, q1, k * q1).unwrap());
        } else {
            let failed_precondition = matches!(
                hlp_conclusion_check(&f, &g, q1, k * q1),
                Err(Error::HlpPrecondition { .. })
            );
            prop_assert!(failed_precondition);
        }
    }

    #[test]
    fn step_profiles_round_trip_through_files(f in step_profile()) {
        let mut buf = Vec::new();
        io::write_volume_profile(&mut buf, &f, 2, 1.5, None, &serde_json::Value::Null).unwrap();
        let (_, back) = io::read_volume_profile(buf.as_slice()).unwrap();
        prop_assert_eq!(back, f);
    }
}

#[test]
fn torsion_profile_of_the_disk_is_linear_in_volume() {
    let unit = unit_ball_profile(2, 1.0, &ShootOptions::default()).unwrap();
    let vp = volume_profile(&unit, 1.0, 257).unwrap();
    for (s, v) in vp.breakpoints().iter().zip(vp.values()) {
        assert!((v - 2.0 / PI * (1.0 - s / PI)).abs() < 1e-10, "s = {s}");
    }
}

#[test]
fn torsion_parameterization_matches_constant() {
    for q in [1.0, 1.5, 3.0] {
        for cp1 in [8.0 / PI, 12.0] {
            let t = torsion_form(2, q, cp1).unwrap();
            let k = constant_K(2, 1.0, q, cp1).unwrap();
            assert!(((t.constant - k) / k).abs() < 1e-12);
        }
    }
}

#[test]
fn hand_computed_hlp_pair() {
    let f = VolumeProfile::step(vec![0.0, 2.0], vec![1.0]).unwrap();
    let g = VolumeProfile::step(vec![0.0, 1.0, 2.0], vec![2.0, 0.0]).unwrap();
    assert!(hlp_dominates(&f, &g, 1.0).unwrap());
    assert!(!hlp_dominates(&g, &f, 1.0).unwrap());
    assert!(hlp_conclusion_check(&f, &g, 1.0, 2.0).unwrap());
    assert!(matches!(
        hlp_conclusion_check(&g, &f, 1.0, 2.0),
        Err(Error::HlpPrecondition { .. })
    ));
    assert!(hlp_conclusion_check(&f, &f, 1.0, 3.0).unwrap());
}
