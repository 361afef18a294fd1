use std::fs;

use proptest::prelude::*;
use tailq_cli::ingest::{read_estimates, read_panel, standardize, write_estimates, Estimates};
use tailq_cli::CliError;
use tempfile::TempDir;

fn write(dir: &TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn three_estimates() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "e.csv", "theta_hat\n1.5\n-2\n0.25\n");
    let e = read_estimates(&p).unwrap();
    assert_eq!(e.values, vec![1.5, -2.0, 0.25]);
    assert!(e.sigma2.is_none());
}

#[test]
fn estimates_schema_errors() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("value\n1\n2\n", "theta_hat"),
        ("theta_hat\n1\nabc\n", "abc"),
        ("theta_hat\n1\n", "2"),
    ];
    for (text, needle) in cases {
        let p = write(&dir, "bad.csv", text);
        match read_estimates(&p) {
            Err(CliError::Validation(msg)) => assert!(msg.contains(needle), "{msg}"),
            other => panic!("expected a validation error, got {other:?}"),
        }
    }
    assert!(matches!(
        read_estimates(&dir.path().join("absent.csv")),
        Err(CliError::Io(_))
    ));
}

#[test]
fn panel_missing_z_names_the_column() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.csv", "unit,time,y,x1\na,1,1,1\n");
    match read_panel(&p) {
        Err(CliError::Validation(msg)) => assert!(msg.contains("`z`"), "{msg}"),
        other => panic!("expected a schema error, got {other:?}"),
    }
}

#[test]
fn unit_with_missing_periods_is_dropped() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("unit,time,y,z,x1\n");
    for u in ["a", "b", "c"] {
        for t in 1..=5 {
            if u == "b" && t == 3 {
                continue;
            }
            text.push_str(&format!("{u},{t},{},{},{}\n", t * t, t, (t * 7) % 5));
        }
    }
    let p = write(&dir, "p.csv", &text);
    let input = read_panel(&p).unwrap();
    assert_eq!(input.incomplete, vec!["b".to_string()]);
    assert_eq!(input.panel.n(), 2);
    assert_eq!(input.rows, 14);
}

#[test]
fn standardized_sample_has_unit_moments() {
    let v = [3.0, -1.0, 7.5, 0.25, 12.0];
    let (s, params) = standardize(&v).unwrap();
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
    for (x, z) in v.iter().zip(&s) {
        assert!((params.invert(*z) - x).abs() < 1e-12);
    }
    assert!(standardize(&[2.0, 2.0]).is_err());
}

proptest! {
    #[test]
    fn estimates_round_trip(values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 2..40), with_s2 in any::<bool>()) {
        let dir = TempDir::new().unwrap();
        let est = Estimates {
            ids: (0..values.len()).map(|i| format!("u{i}")).collect(),
            sigma2: with_s2.then(|| values.iter().map(|v| v.abs()).collect()),
            values,
        };
        let p = dir.path().join("rt.csv");
        write_estimates(&p, &est).unwrap();
        let back = read_estimates(&p).unwrap();
        prop_assert_eq!(&back, &est);
        write_estimates(&p, &back).unwrap();
        prop_assert_eq!(read_estimates(&p).unwrap(), est);
    }
}
