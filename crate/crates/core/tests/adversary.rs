use std::f64::consts::FRAC_PI_4;

use rand::Rng;

use pufkit::adversary::{
    build_clone, cloner_channel, observe, AttackModel, Basis, Capture, CloneModel, Legs,
};
use pufkit::classical_puf::{sample_classical_puf, ClassicalDevice, ClassicalKind, ClassicalPuf};
use pufkit::error::Error;
use pufkit::metrics::{estimate_clonability, estimate_disturbance, AttackSetup};
use pufkit::protocol::{enroll, Crt, DeviceRef, EnrollConfig, FeConfig, NoiseModel, PufKind, Session};
use pufkit::qrpuf::{sample_qrpuf, shifter_for, ChallengeEncoding, StateIndex};
use pufkit::qsim::{conjugate_channel, measure_computational, QubitRegister};
use pufkit::rng::derive_rng;
use pufkit::BitString;

fn classical_cfg(n_target: usize, m: usize) -> EnrollConfig {
    EnrollConfig {
        n_target,
        phi: 0.0,
        noise: NoiseModel::noiseless(PufKind::Classical),
        fe: FeConfig {
            m,
            t: Some(0),
            ..FeConfig::default()
        },
    }
}

fn classical_table(kind: ClassicalKind, n: usize, out_len: usize, cfg: &EnrollConfig) -> (ClassicalPuf, Crt) {
    let puf = sample_classical_puf(kind, n, out_len, &mut derive_rng(3, "device", 0)).unwrap();
    let crt = enroll(DeviceRef::Classical(&puf), cfg, &mut derive_rng(3, "enroll", 0)).unwrap();
    (puf, crt)
}

#[test]
fn observing_nothing_gives_an_empty_transcript() {
    let cfg = classical_cfg(8, 8);
    let (puf, mut crt) = classical_table(ClassicalKind::KeyedRandom, 8, 16, &cfg);
    let noise = *crt.noise();
    let mut session = Session::new(&mut crt, noise, false);
    let t = observe(
        &mut session,
        DeviceRef::Classical(&puf),
        &AttackModel::ClassicalRead,
        0,
        &mut derive_rng(3, "observe", 0),
    )
    .unwrap();
    assert_eq!(t.q(), 0);
    assert_eq!(t.disturbance(), 0.0);
    assert_eq!(crt.live_count(), crt.len());
}

#[test]
fn classical_read_captures_exact_pairs() {
    let cfg = classical_cfg(16, 8);
    let (puf, mut crt) = classical_table(ClassicalKind::KeyedRandom, 8, 16, &cfg);
    let noise = *crt.noise();
    let mut session = Session::new(&mut crt, noise, false);
    let t = observe(
        &mut session,
        DeviceRef::Classical(&puf),
        &AttackModel::ClassicalRead,
        5,
        &mut derive_rng(3, "observe", 0),
    )
    .unwrap();
    assert_eq!(t.q(), 5);
    for round in &t.rounds {
        assert!(round.accepted);
        match round.capture.as_ref().unwrap() {
            Capture::Classical { challenge, outcome } => {
                assert_eq!(outcome, &puf.evaluate(challenge).unwrap());
            }
            other => panic!("unexpected capture {other:?}"),
        }
    }
    assert_eq!(crt.live_count(), crt.len() - 5);
}

#[test]
fn observing_more_than_the_table_holds_fails() {
    let cfg = classical_cfg(4, 8);
    let (puf, mut crt) = classical_table(ClassicalKind::KeyedRandom, 8, 16, &cfg);
    let noise = *crt.noise();
    let mut session = Session::new(&mut crt, noise, false);
    let err = observe(
        &mut session,
        DeviceRef::Classical(&puf),
        &AttackModel::ClassicalRead,
        5,
        &mut derive_rng(3, "observe", 0),
    )
    .unwrap_err();
    assert!(matches!(err, Error::NotEnoughEntries { requested: 5, available: 4 }));
}

#[test]
fn quantum_attacks_do_not_fit_classical_devices() {
    let cfg = classical_cfg(4, 8);
    let (puf, mut crt) = classical_table(ClassicalKind::KeyedRandom, 8, 16, &cfg);
    let noise = *crt.noise();
    let mut session = Session::new(&mut crt, noise, false);
    let attack = AttackModel::InterceptResend {
        basis: Basis::Computational,
        legs: Legs::Both,
    };
    let err = observe(&mut session, DeviceRef::Classical(&puf), &attack, 1, &mut derive_rng(3, "o", 0))
        .unwrap_err();
    assert!(matches!(err, Error::ModelMismatch { .. }));
}

#[test]
fn lookup_without_observations_matches_random_guess() {
    let cfg = classical_cfg(64, 6);
    let puf = sample_classical_puf(ClassicalKind::KeyedRandom, 32, 16, &mut derive_rng(4, "device", 0)).unwrap();
    let device = DeviceRef::Classical(&puf);
    let noise = NoiseModel::noiseless(PufKind::Classical);
    let setup = |model| AttackSetup {
        attack: AttackModel::ClassicalRead,
        model,
        q: 0,
        allow_reuse: false,
    };
    let lookup = estimate_clonability(device, &cfg, &noise, &setup(CloneModel::Lookup), 2000, 9).unwrap();
    let guess = estimate_clonability(device, &cfg, &noise, &setup(CloneModel::RandomGuess), 2000, 9).unwrap();
    assert!(lookup.gamma.value < 0.04);
    assert!(guess.gamma.value < 0.04);
}

#[test]
fn keyed_random_lookup_succeeds_about_two_to_the_minus_m() {
    // Fresh challenges are never in the lookup table, so only the hash can collide.
    let cfg = classical_cfg(64, 6);
    let puf = sample_classical_puf(ClassicalKind::KeyedRandom, 32, 16, &mut derive_rng(5, "device", 0)).unwrap();
    let noise = NoiseModel::noiseless(PufKind::Classical);
    let setup = AttackSetup {
        attack: AttackModel::ClassicalRead,
        model: CloneModel::Lookup,
        q: 20,
        allow_reuse: false,
    };
    let est = estimate_clonability(DeviceRef::Classical(&puf), &cfg, &noise, &setup, 4000, 11).unwrap();
    assert!(est.gamma.value > 0.006 && est.gamma.value < 0.03, "{:?}", est.gamma);
    assert_eq!(est.disturbance.successes, 0);
}

#[test]
fn linear_learner_predicts_a_linear_threshold_puf() {
    let n = 32;
    let cfg = classical_cfg(400, 8);
    let (puf, mut crt) = classical_table(ClassicalKind::LinearThreshold, n, 8, &cfg);
    assert!(crt.len() > 10 * n);
    let noise = *crt.noise();
    let mut session = Session::new(&mut crt, noise, false);
    let t = observe(
        &mut session,
        DeviceRef::Classical(&puf),
        &AttackModel::ClassicalRead,
        10 * n,
        &mut derive_rng(3, "observe", 0),
    )
    .unwrap();
    let clone = build_clone(&t, CloneModel::LinearLearner).unwrap();
    assert!(clone.linear_weights().is_some());
    let mut rng = derive_rng(3, "holdout", 0);
    let (mut agree, mut total) = (0, 0);
    for _ in 0..500 {
        let x = BitString::random(n, &mut rng);
        let truth = puf.evaluate(&x).unwrap();
        let guess = ClassicalDevice::respond(&clone, &x, &mut rng).unwrap();
        agree += (0..truth.len()).filter(|&i| truth.get(i) == guess.get(i)).count();
        total += truth.len();
    }
    let accuracy = agree as f64 / total as f64;
    assert!(accuracy > 0.9, "held-out accuracy {accuracy}");
}

#[test]
fn intercept_resend_disturbs_genuine_rounds() {
    let puf = sample_qrpuf(16, &mut derive_rng(6, "device", 0)).unwrap();
    let cfg = EnrollConfig::qr_desk();
    let noise = cfg.noise;
    let device = DeviceRef::Qr(&puf);
    let baseline = estimate_disturbance(device, &cfg, &noise, &AttackModel::Passive, 400, 1).unwrap();
    let attack = AttackModel::InterceptResend {
        basis: Basis::Computational,
        legs: Legs::Both,
    };
    let attacked = estimate_disturbance(device, &cfg, &noise, &attack, 400, 1).unwrap();
    assert!(
        attacked.value > baseline.value + 0.2,
        "baseline {} attacked {}",
        baseline.value,
        attacked.value
    );
}

#[test]
fn classical_read_leaves_acceptance_unchanged() {
    let cfg = classical_cfg(32, 8);
    let puf = sample_classical_puf(ClassicalKind::KeyedRandom, 16, 16, &mut derive_rng(7, "device", 0)).unwrap();
    let noise = NoiseModel::noiseless(PufKind::Classical);
    let d = estimate_disturbance(DeviceRef::Classical(&puf), &cfg, &noise, &AttackModel::ClassicalRead, 200, 2)
        .unwrap();
    assert_eq!(d.successes, 0);
}

#[test]
fn cloner_error_after_the_shifter_matches_the_fidelity_deficit() {
    let enc = ChallengeEncoding::new(FRAC_PI_4, 1).unwrap();
    let mut rng = derive_rng(8, "cloner", 0);
    let shots = 100_000;
    let mut errors = 0usize;
    for _ in 0..shots {
        let s = enc.state(StateIndex::new(rng.gen_range(1..=4)).unwrap());
        let shifter = shifter_for(&QubitRegister::new(vec![s]).unwrap());
        let rho = conjugate_channel(&shifter.gates[0], &cloner_channel(&s, FRAC_PI_4));
        errors += measure_computational(&rho, &mut rng) as usize;
    }
    let rate = errors as f64 / shots as f64;
    let expected = 1.0 - (1.0 + 0.5f64.sqrt()) / 2.0;
    let sigma = (expected * (1.0 - expected) / shots as f64).sqrt();
    assert!((rate - expected).abs() < 3.0 * sigma, "rate {rate} expected {expected}");
}

#[test]
fn clone_models_parse_and_pick_fitting_attacks() {
    for model in CloneModel::ALL {
        assert_eq!(model.to_string().parse::<CloneModel>().unwrap(), model);
    }
    assert!("oracle".parse::<CloneModel>().is_err());
    assert_eq!(
        CloneModel::RandomGuess.default_attack(PufKind::Qr, FRAC_PI_4),
        AttackModel::Passive
    );
    assert_eq!(
        CloneModel::Lookup.default_attack(PufKind::Classical, FRAC_PI_4),
        AttackModel::ClassicalRead
    );
    assert!(matches!(
        CloneModel::OptimalClonerArtifact.default_attack(PufKind::Qr, FRAC_PI_4),
        AttackModel::OptimalCloner { .. }
    ));
}
