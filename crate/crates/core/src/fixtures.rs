//! Shared unit-test systems: a mildly asymmetric 3-symbol shift with a
//! range-2 potential and a range-3 observable, exercising the per-edge code
//! paths that the golden-mean examples (range 1, symmetric matrix) miss.

use crate::observable::LocallyConstantFn;
use crate::sft::Sft;

pub(crate) fn three_state_sft() -> Sft {
    Sft::new(3, vec![1, 1, 1, 1, 1, 0, 1, 0, 1]).unwrap()
}

pub(crate) fn three_state_phi(sft: &Sft) -> LocallyConstantFn {
    let table = [
        ("11", 0.15),
        ("12", -0.075),
        ("13", 0.225),
        ("21", 0.075),
        ("22", -0.15),
        ("31", 0.3),
        ("33", 0.0),
    ];
    LocallyConstantFn::from_word_table(sft, 2, table.iter().map(|&(k, v)| (k.to_string(), v)))
        .unwrap()
}

pub(crate) fn three_state_g(sft: &Sft) -> LocallyConstantFn {
    let table = [
        ("111", 1.0),
        ("112", 0.25),
        ("113", 0.5),
        ("121", 1.0),
        ("122", 0.25),
        ("131", 0.5),
        ("133", 0.75),
        ("211", -0.5),
        ("212", -1.0),
        ("213", -0.5),
        ("221", -0.5),
        ("222", 0.75),
        ("311", 1.0),
        ("312", -1.0),
        ("313", 0.0),
        ("331", 0.75),
        ("333", -0.75),
    ];
    LocallyConstantFn::from_word_table(sft, 3, table.iter().map(|&(k, v)| (k.to_string(), v)))
        .unwrap()
}
