use irsdm::gai::{initial_precoders, optimize_beamformers};
use irsdm::linalg::{cis, fro, unit_modulus, CVec};
use irsdm::nsp::ns_projectors;
use irsdm::rates::{zero_phase, Precoders, SignalModel};
use irsdm::{build_system, ChannelSet, SystemConfig};
use proptest::prelude::*;
use std::f64::consts::PI;

fn config() -> impl Strategy<Value = SystemConfig> {
    (
        (3usize..8, 1usize..10, 1usize..3),
        (5.0f64..60.0, 20.0f64..300.0, 20.0f64..300.0),
        (0.1f64..3.0, 0.1f64..3.0, 0.1f64..3.0),
        (0.05f64..0.5, 0.05f64..0.45),
    )
        .prop_map(|((n, m, k), (d_ai, d_ab, d_ae), (tai, tab, tae), (b1, b2))| SystemConfig {
            n,
            m,
            k,
            d_ai,
            d_ab,
            d_ae,
            theta_ai: tai,
            theta_ab: tab,
            theta_ae: tae,
            beta1: b1,
            beta2: b2,
            ..SystemConfig::default()
        })
}

fn unit(parts: &[(f64, f64)]) -> CVec {
    let v = CVec::from_iterator(parts.len(), parts.iter().map(|&(a, b)| irsdm::linalg::c(a, b)));
    if v.norm() < 1e-6 {
        let mut e = CVec::zeros(parts.len());
        e[0] = irsdm::linalg::ONE;
        return e;
    }
    v.normalize()
}

fn system(cfg: &SystemConfig) -> Option<(ChannelSet, SignalModel)> {
    let (_, ch) = build_system(cfg).ok()?;
    let model = SignalModel::new(cfg, &ch).ok()?;
    Some((ch, model))
}

fn precoders(cfg: &SystemConfig, seed: &[(f64, f64)], phases: &[f64]) -> Precoders {
    let n = cfg.n;
    Precoders::new(
        unit(&seed[..n]),
        unit(&seed[n..2 * n]),
        CVec::from_iterator(cfg.m, phases[..cfg.m].iter().map(|&p| cis(p))),
    )
}

fn entries() -> impl Strategy<Value = (Vec<(f64, f64)>, Vec<f64>)> {
    (
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
        prop::collection::vec(0.0f64..2.0 * PI, 10),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn secrecy_rate_is_nonnegative_and_phase_invariant(cfg in config(), (seed, ph) in entries(), phi in 0.0f64..2.0 * PI) {
        let sys = system(&cfg);
        prop_assume!(sys.is_some());
        let (_, model) = sys.unwrap();
        let p = precoders(&cfg, &seed, &ph);
        let sr = model.secrecy_rate(&p);
        prop_assert!(sr >= 0.0);
        let rotated = Precoders::new(p.v1.clone() * cis(phi), p.v2.clone() * cis(-phi), p.theta.clone());
        prop_assert!((model.rate_bob(&rotated) - model.rate_bob(&p)).abs() < 1e-9);
        prop_assert!((model.rate_eve(&rotated) - model.rate_eve(&p)).abs() < 1e-9);
    }

    #[test]
    fn receive_vectors_are_affine_in_theta(cfg in config(), (seed, ph) in entries()) {
        let sys = system(&cfg);
        prop_assume!(sys.is_some());
        let (_, model) = sys.unwrap();
        let p = precoders(&cfg, &seed, &ph);
        let direct = model.stream_outputs(&p);
        let affine = model.phase_blocks(&p.v1, &p.v2).outputs(&p.theta);
        let scale = direct.t_b1.norm() + direct.t_e1.norm() + 1.0;
        for (a, b) in [
            (&direct.t_b1, &affine.t_b1),
            (&direct.t_b2, &affine.t_b2),
            (&direct.t_e1, &affine.t_e1),
            (&direct.t_e2, &affine.t_e2),
        ] {
            prop_assert!((a - b).norm() < 1e-10 * scale);
        }
    }

    #[test]
    fn updates_preserve_feasibility(cfg in config(), (seed, ph) in entries()) {
        let sys = system(&cfg);
        prop_assume!(sys.is_some());
        let (_, model) = sys.unwrap();
        let p = precoders(&cfg, &seed, &ph);
        let before = model.secrecy_rate(&p);
        let q = optimize_beamformers(&model, &p).unwrap();
        prop_assert!(q.is_feasible(1e-9));
        prop_assert!(model.secrecy_rate(&q) >= before - 1e-9);
        let raw = p.theta.scale(2.5) + zero_phase(cfg.m).scale(0.1);
        let th = unit_modulus(&raw, &p.theta, 0.0);
        prop_assert!(th.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn projectors_null_their_channels(cfg in config()) {
        let sys = system(&cfg);
        prop_assume!(sys.is_some());
        let (ch, model) = sys.unwrap();
        prop_assert!(fro(&(&ch.h_ai * &model.p_an)) < 1e-8);
        prop_assert!(fro(&(ch.h_ab.adjoint() * &model.p_an)) < 1e-8);
        if let Ok((p1, p2)) = ns_projectors(&ch) {
            prop_assert!(fro(&(ch.h_ab.adjoint() * &p1)) < 1e-8);
            prop_assert!(fro(&(ch.h_ae.adjoint() * &p1)) < 1e-8);
            prop_assert!(fro(&(&ch.h_ai * &p2)) < 1e-8);
            prop_assert!(fro(&(ch.h_ae.adjoint() * &p2)) < 1e-8);
        }
    }

    #[test]
    fn config_survives_json(cfg in config(), seed in any::<u64>(), eps in 1e-8f64..1e-2) {
        let cfg = SystemConfig { seed, epsilon: eps, ..cfg };
        let json = serde_json::to_string(&cfg).unwrap();
        let back: SystemConfig = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn initial_point_is_feasible() {
    let cfg = SystemConfig::default();
    let (_, model) = system(&cfg).unwrap();
    assert!(initial_precoders(&model).is_feasible(1e-12));
}
