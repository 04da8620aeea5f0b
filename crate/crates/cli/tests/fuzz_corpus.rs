//! Replays the checked-in fuzz corpus through the same entry points as the fuzz targets.

use std::fs;
use std::path::PathBuf;

use conicond::regularizers::{parse_operator, AnalysisInstance};
use conicond::ConeRep;
use conicond_cli::ExperimentConfig;

fn corpus(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "empty corpus for {target}");
    out
}

#[test]
fn cone_json_corpus() {
    let mut ok = 0;
    for (path, data) in corpus("cone_json") {
        if let Ok(cone) = ConeRep::from_json_bytes(&data) {
            let back = ConeRep::from_json(&cone.to_json()).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(back.ambient_dim(), cone.ambient_dim());
            ok += 1;
        }
    }
    assert!(ok >= 5);
}

#[test]
fn analysis_instance_corpus() {
    let mut ok = 0;
    for (_, data) in corpus("analysis_instance_json") {
        if let Ok(s) = std::str::from_utf8(&data) {
            if let Ok(inst) = AnalysisInstance::from_json(s) {
                assert_eq!(inst.support.len(), inst.signs.len());
                ok += 1;
            }
        }
    }
    assert_eq!(ok, 2);
}

#[test]
fn experiment_config_corpus() {
    let mut ok = 0;
    for (_, data) in corpus("experiment_config_json") {
        if let Ok(s) = std::str::from_utf8(&data) {
            ok += ExperimentConfig::from_json(s).is_ok() as usize;
        }
    }
    assert_eq!(ok, 3);
}

#[test]
fn operator_spec_corpus() {
    let mut ok = 0;
    for (_, data) in corpus("operator_spec") {
        if let Ok(s) = std::str::from_utf8(&data) {
            if let Ok(d) = parse_operator(s) {
                assert!(d.nrows() >= d.ncols() || d.nrows() + 1 == d.ncols());
                ok += 1;
            }
        }
    }
    assert_eq!(ok, 3);
}
