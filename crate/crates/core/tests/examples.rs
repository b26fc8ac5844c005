//! Every example under `examples/` runs to completion.

#[allow(dead_code)]
#[path = "../examples/adam_max_norm.rs"]
mod adam_max_norm;

#[allow(dead_code)]
#[path = "../examples/checkpoint_roundtrip.rs"]
mod checkpoint_roundtrip;

#[allow(dead_code)]
#[path = "../examples/contrastive_loss.rs"]
mod contrastive_loss;

#[allow(dead_code)]
#[path = "../examples/gradient_check.rs"]
mod gradient_check;

#[allow(dead_code)]
#[path = "../examples/one_shot.rs"]
mod one_shot;

#[allow(dead_code)]
#[path = "../examples/pair_protocol.rs"]
mod pair_protocol;

#[allow(dead_code)]
#[path = "../examples/roc_report.rs"]
mod roc_report;

#[allow(dead_code)]
#[path = "../examples/svc_features.rs"]
mod svc_features;

#[allow(dead_code)]
#[path = "../examples/synthetic_training.rs"]
mod synthetic_training;

#[test]
fn adam_max_norm_runs() {
    adam_max_norm::run().unwrap();
}

#[test]
fn checkpoint_roundtrip_runs() {
    checkpoint_roundtrip::run().unwrap();
}

#[test]
fn contrastive_loss_runs() {
    contrastive_loss::run().unwrap();
}

#[test]
fn gradient_check_runs() {
    gradient_check::run().unwrap();
}

#[test]
fn one_shot_runs() {
    one_shot::run().unwrap();
}

#[test]
fn pair_protocol_runs() {
    pair_protocol::run().unwrap();
}

#[test]
fn roc_report_runs() {
    roc_report::run().unwrap();
}

#[test]
fn svc_features_runs() {
    svc_features::run().unwrap();
}

#[test]
fn synthetic_training_runs() {
    synthetic_training::run().unwrap();
}
