use sunburst::experiments::{cmd_validate, cmd_validate_with};
use sunburst::model::{battery_positions, ModelSpec, PauliSum, PauliTerm};
use sunburst::Result;

// V_cb with σᶻ instead of σˣ on the charger side.
fn z_on_charger(spec: &ModelSpec) -> Result<PauliSum> {
    let mut sum = PauliSum::new(spec.qubits());
    for (i, site) in battery_positions(spec)?.into_iter().enumerate() {
        sum.push(PauliTerm {
            coeff: -spec.kappa,
            flip: 1 << spec.battery_bit(i + 1),
            phase: 1 << spec.charger_bit(site),
        })?;
    }
    Ok(sum)
}

#[test]
fn clean_suite_passes() {
    let report = cmd_validate();
    print!("{report}");
    assert!(report.all_passed());
    for line in report.to_string().lines() {
        let fields: Vec<&str> = line.splitn(4, ' ').collect();
        assert_eq!(fields[0], "CHECK");
        assert!(fields[2] == "PASS" || fields[2] == "FAIL");
    }
}

#[test]
fn broken_coupling_is_caught() {
    let report = cmd_validate_with(z_on_charger);
    let check = report.get("charger_commutator").unwrap();
    println!("{check}");
    assert!(!check.passed);
    assert!(!report.all_passed());
    assert!(report.get("two_battery_analytic").unwrap().passed);
}
