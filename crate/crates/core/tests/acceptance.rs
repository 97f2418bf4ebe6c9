//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Tolerances live in `Targets`.

use std::io::Write;

use jcq_core::validation::{run_criterion, Targets};

fn check(id: u8) {
    let report = run_criterion(id, &Targets::default());
    // written to the process stdout directly so the line survives output capture
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", report.line()).unwrap();
    out.flush().unwrap();
    drop(out);
    assert!(report.passed, "{}", report.line());
}

#[test]
fn criterion_01_waiting_time_agreement() {
    check(1);
}

#[test]
fn criterion_02_g2_zero() {
    check(2);
}

#[test]
fn criterion_03_photon_numbers() {
    check(3);
}

#[test]
fn criterion_04_antibunching_onset() {
    check(4);
}

#[test]
fn criterion_05_squeezing_spectrum() {
    check(5);
}

#[test]
fn criterion_06_rates_and_transitions() {
    check(6);
}

#[test]
fn criterion_07_quantum_beats() {
    check(7);
}

#[test]
fn criterion_08_trajectories_vs_master_equation() {
    check(8);
}

#[test]
fn criterion_09_sde_order_and_photocurrent() {
    check(9);
}

#[test]
fn criterion_10_wave_particle_asymmetry() {
    check(10);
}

#[test]
fn criterion_11_conservation() {
    check(11);
}
