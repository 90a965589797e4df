use std::path::Path;

use exprl_core::harness::Checkpoint;
use exprl_core::{Algorithm, EnvConfig, EnvKind};

fn fixture() -> Checkpoint {
    Checkpoint::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/checkpoint_v1.json")).unwrap()
}

#[test]
fn foreign_document_loads() {
    let c = fixture();
    assert_eq!(c.seed, 42);
    assert_eq!(c.env, EnvConfig::default_for(EnvKind::CartPole));
    assert_eq!(c.algo.algorithm, Algorithm::Oac);
    // keys the writer left out take their defaults
    assert_eq!(c.algo.gamma, 0.99);
    c.check_architecture(&c.env, 2).unwrap();
    assert!(c.check_architecture(&c.env, 16).is_err());
}

#[test]
fn fixture_computes_hand_values() {
    let c = fixture();
    let pol = &c.agent.policy;
    let v = c.agent.critic.as_ref().unwrap();

    // hidden (0.5, 0.6), logits (0.15, 0.95): pi(0) = 1 / (1 + e^0.8)
    let x = [0.5, -1.0, 0.2, 0.1];
    let p = pol.probabilities(&x).unwrap();
    assert!((p[0] - 0.310_025_518_872_387_55).abs() < 1e-15, "{p:?}");
    assert!((p[0] + p[1] - 1.0).abs() < 1e-15);
    // hidden (0.25, 0): V = 0.1 + 2 * 0.25
    assert!((v.value(&x).unwrap() - 0.6).abs() < 1e-15);

    // both hidden units cut off: logits are the output biases (0.25, -0.25)
    let x = [-1.0, 0.0, 0.0, 1.0];
    let p = pol.probabilities(&x).unwrap();
    assert!((p[0] - 0.622_459_331_201_854_6).abs() < 1e-15, "{p:?}");
    assert!((v.value(&x).unwrap() - 0.1).abs() < 1e-15);
}

#[test]
fn fixture_rewrites_to_an_equivalent_document() {
    let c = fixture();
    let again = Checkpoint::from_json_str(&c.to_json_string().unwrap()).unwrap();
    assert_eq!(again.agent.policy.params(), c.agent.policy.params());
    assert_eq!(again.agent.critic.unwrap().params(), c.agent.critic.unwrap().params());
    assert_eq!(again.algo, c.algo);
}

#[test]
fn truncated_parameter_list_is_rejected() {
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/checkpoint_v1.json"))
        .unwrap()
        .replace("0.25, -0.25]", "0.25]");
    assert!(Checkpoint::from_json_str(&text).is_err());
}
