use sweetspot::dynamics::{gate_report, RotatingFrameModel};
use sweetspot::hamiltonian::DriveConfig;
use sweetspot::presets::OperatingPoint;
use sweetspot::pulses::{clifford_catalog, GateFamily};

const DT: f64 = 0.004;

fn models() -> (RotatingFrameModel, RotatingFrameModel) {
    let op = OperatingPoint::strong_field();
    let drive = DriveConfig::resonant(&op.eigen, op.eps_ac).unwrap();
    (
        RotatingFrameModel::new(op.eigen.clone(), drive, true),
        RotatingFrameModel::new(op.eigen, drive, false),
    )
}

#[test]
fn rwa_holds_for_short_sequences() {
    let (rwa, full) = models();
    for entry in clifford_catalog() {
        if entry.sequence.family == GateFamily::Corpse {
            continue;
        }
        let seq = entry.sequence.with_omega0(rwa.rabi_frequency());
        let a = gate_report(&rwa, &seq, DT).average_gate_fidelity;
        let b = gate_report(&full, &seq, DT).average_gate_fidelity;
        assert!((a - b).abs() <= 1e-3, "{} {:?}: {a} vs {b}", entry.gate, seq.family);
    }
}

/// CORPSE sequences run up to 4.5 times longer and leak more; the RWA error
/// stays within what the leaked population accounts for.
#[test]
fn corpse_rwa_error_is_leakage() {
    let (rwa, full) = models();
    for entry in clifford_catalog() {
        if entry.sequence.family != GateFamily::Corpse {
            continue;
        }
        let seq = entry.sequence.with_omega0(rwa.rabi_frequency());
        let a = gate_report(&rwa, &seq, DT).average_gate_fidelity;
        let r = gate_report(&full, &seq, DT);
        let diff = (a - r.average_gate_fidelity).abs();
        assert!(
            diff <= 2.0 * r.leakage + 1e-3,
            "{}: diff {diff:e}, leakage {:e}",
            entry.gate,
            r.leakage
        );
    }
}
