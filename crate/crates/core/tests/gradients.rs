mod common;

use common::{check_many, tiny_arch};
use osvnet::siamese::{ArchSpec, LossConfig, LossMode, LrnPlacement};

fn assert_clean(arch: &ArchSpec, mode: LossMode, seeds: usize) {
    let cfg = LossConfig { mode, ..LossConfig::default() };
    for (seed, r) in check_many(arch, &cfg, seeds) {
        assert!(r.max_rel_err < 1e-4, "{mode:?} seed {seed}: {} ({})", r.max_rel_err, r.worst);
    }
}

#[test]
fn contrastive_default_placement() {
    assert_clean(&tiny_arch(), LossMode::Contrastive, 5);
}

#[test]
fn bce_default_placement() {
    assert_clean(&tiny_arch(), LossMode::Bce, 5);
}

#[test]
fn lrn_after_each_conv() {
    let arch = ArchSpec { lrn_placement: LrnPlacement::AfterEachConv, ..tiny_arch() };
    assert_clean(&arch, LossMode::Contrastive, 3);
    assert_clean(&arch, LossMode::Bce, 3);
}

#[test]
fn without_lrn() {
    let arch = ArchSpec { lrn_placement: LrnPlacement::Off, ..tiny_arch() };
    assert_clean(&arch, LossMode::Contrastive, 3);
}

#[test]
fn odd_length_and_wider_kernel() {
    let arch = ArchSpec { input_length: 11, kernel_width: 5, pool_size: 3, ..tiny_arch() };
    assert_clean(&arch, LossMode::Contrastive, 3);
    assert_clean(&arch, LossMode::Bce, 3);
}

#[test]
fn without_dropout_or_regularization() {
    let arch = ArchSpec { dropout_rate: 0.0, ..tiny_arch() };
    let cfg = LossConfig { l2: 0.0, ..LossConfig::default() };
    for (seed, r) in check_many(&arch, &cfg, 3) {
        assert!(r.max_rel_err < 1e-4, "seed {seed}: {}", r.worst);
    }
}

#[test]
fn two_channel_variant() {
    let arch = ArchSpec { conv_channels: 2, ..tiny_arch() };
    assert_clean(&arch, LossMode::Contrastive, 5);
    assert_clean(&arch, LossMode::Bce, 5);
}
