mod common;

use std::fs;

use common::{random_symplectic, rng};
use sympsteer::geodesic::CurvatureProfile;
use sympsteer::io::*;
use sympsteer::persistence::PeriodicSymplecticSequence;
use sympsteer::symplectic::Mat;
use sympsteer::Error;

#[test]
fn matrix_json_round_trip() {
    let m = random_symplectic(2, 0.5, &mut rng(1)).into_mat();
    let text = matrix_json(&m).unwrap();
    assert_eq!(parse_matrix(&text).unwrap(), m);
    let j = MatrixJson::from(&Mat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    assert_eq!(j.data, vec![1.0, 2.0, 3.0, 4.0]);
    assert!(matches!(parse_matrix(r#"{"dim": 2, "data": [1, 2, 3]}"#), Err(Error::Parse(_))));
    assert!(parse_matrix(r#"{"dim": 1, "data": [1], "extra": 0}"#).is_err());
}

#[test]
fn matrix_path_round_trip() {
    let mut r = rng(2);
    let mats: Vec<Mat> = (0..4).map(|_| random_symplectic(1, 0.5, &mut r).into_mat()).collect();
    let times = [0.0, 0.25, 0.5, 1.0];
    let mut buf = Vec::new();
    write_matrix_path(&mut buf, &times, &mats).unwrap();
    let (t2, m2) = read_matrix_path(buf.as_slice()).unwrap();
    assert_eq!(t2, times);
    assert_eq!(m2, mats);
    let bad = "t,a,b,c,d\n# comment\n0,1,0,0,1\n0.5,1,0,x,1\n";
    match read_matrix_path(bad.as_bytes()) {
        Err(Error::Parse(msg)) => assert!(msg.contains("line 4"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn curvature_csv_round_trip() {
    let r = CurvatureProfile::oscillatory(2, 1.0, 3.0);
    let times: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
    let mut buf = Vec::new();
    write_curvature_csv(&mut buf, &r, &times).unwrap();
    let back = read_curvature_csv(buf.as_slice()).unwrap();
    assert_eq!(back.m(), 2);
    for t in [0.0, 0.3, 0.77, 1.0] {
        assert!((back.at(t) - r.at(t)).norm() <= 1e-6);
    }
    assert!(read_curvature_csv("t,a,b\n0,1,2\n".as_bytes()).is_err());
}

#[test]
fn presets() {
    assert_eq!(parse_preset("flat", 2).unwrap().at(0.3), Mat::zeros(2, 2));
    assert_eq!(parse_preset("constant:2", 1).unwrap().at(0.0)[(0, 0)], 2.0);
    assert!(parse_preset("oscillatory", 2).is_ok());
    assert!(parse_preset("oscillatory:1", 2).is_err());
    assert!(parse_preset("spherical", 2).is_err());
}

#[test]
fn system_config_toml_and_json() {
    let cfg = SystemConfig::parse("m = 2\nT = 1.0\n[drift]\npreset = \"constant_curvature\"\nc = 1.0\n", true).unwrap();
    let sys = cfg.build().unwrap();
    assert_eq!((sys.m(), sys.k()), (2, 3));
    let json = r#"{"m": 1, "T": 2.0, "drift": {"preset": "matrix", "matrix": {"dim": 2, "data": [0, 1, 0, 0]}},
                   "generators": [{"dim": 2, "data": [0, 0, 1, 0]}]}"#;
    let sys = SystemConfig::parse(json, false).unwrap().build().unwrap();
    assert_eq!(sys.k(), 1);
    assert!(SystemConfig::parse("m = 2\nT = 1.0\nfoo = 3\n[drift]\npreset = \"flat\"\n", true).is_err());
    assert!(SystemConfig::parse("m = 2\nT = 1.0\n[drift]\npreset = \"flat\"\nc = 1\n", true).is_err());
    assert!(SystemConfig::parse("m = 2\nT = -1.0\n[drift]\npreset = \"flat\"\n", true).is_err());
    let wrong_k = SystemConfig::parse("m = 2\nk = 2\nT = 1.0\n[drift]\npreset = \"flat\"\n", true).unwrap();
    assert!(wrong_k.build().is_err());
}

#[test]
fn system_file_resolves_relative_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut buf = Vec::new();
    write_curvature_csv(&mut buf, &CurvatureProfile::constant(1, 0.5), &[0.0, 0.5, 1.0, 1.5, 2.0]).unwrap();
    fs::write(dir.path().join("r.csv"), buf).unwrap();
    let sys_path = dir.path().join("sys.toml");
    fs::write(&sys_path, "m = 1\nT = 1.0\n[drift]\npreset = \"csv\"\npath = \"r.csv\"\n").unwrap();
    let cfg = SystemConfig::read(&sys_path).unwrap();
    let r = cfg.curvature().unwrap().unwrap();
    assert!((r.at(0.7)[(0, 0)] - 0.5).abs() < 1e-12);

    fs::write(&sys_path, "m = 1\nT = [1.0\n").unwrap();
    match SystemConfig::read(&sys_path) {
        Err(Error::Parse(msg)) => assert!(msg.contains("sys.toml"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn sequences_and_families() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(3);
    let seq = PeriodicSymplecticSequence::new((0..3).map(|_| random_symplectic(2, 0.4, &mut r).into_mat()).collect(), 1e-9).unwrap();
    let one = dir.path().join("seq.json");
    write_json(&one, &SequenceJson::from_sequence(&seq)).unwrap();
    let back = read_sequence(&one, 1e-9).unwrap();
    assert_eq!(back.period(), 3);
    for j in 0..3 {
        assert_eq!(back.map(j).mat(), seq.map(j).mat());
    }
    assert_eq!(read_family(&one, 1e-9).unwrap().len(), 1);
    let many = dir.path().join("family.json");
    write_json(&many, &vec![SequenceJson::from_sequence(&seq), SequenceJson::from_sequence(&seq)]).unwrap();
    assert_eq!(read_family(&many, 1e-9).unwrap().len(), 2);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"period": 2, "maps": [{"dim": 2, "data": [1, 0, 0, 1]}]}"#).unwrap();
    match read_sequence(&bad, 1e-9) {
        Err(Error::Parse(msg)) => assert!(msg.contains("bad.json") && msg.contains("period 2")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn sweep_footer_round_trip() {
    let rows = vec![
        SweepRow { delta: 1e-3, residual: 1e-12, norm_l2: 0.03, norm_c2: 0.5, iterations: 3 },
        SweepRow { delta: 1e-2, residual: 2e-12, norm_l2: 0.1, norm_c2: 1.6, iterations: 4 },
    ];
    let mut buf = Vec::new();
    write_sweep(&mut buf, &rows, 0.5).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("delta,residual,norm_L2,norm_C2,iterations\n"));
    assert!(text.ends_with("# fitted_exponent,0.5\n"));
    let (back, exp) = read_sweep(buf.as_slice()).unwrap();
    assert_eq!(back, rows);
    assert_eq!(exp, Some(0.5));
    assert!((loglog_slope(&[1.0, 10.0, 100.0], &[2.0, 20.0, 200.0]) - 1.0).abs() < 1e-12);
}

#[test]
fn missing_file_is_tagged() {
    let path = std::path::Path::new("/nonexistent/m.json");
    match read_matrix(path) {
        Err(Error::Parse(msg)) => assert!(msg.contains("/nonexistent/m.json")),
        other => panic!("{other:?}"),
    }
}
