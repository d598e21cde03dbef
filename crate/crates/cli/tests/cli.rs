use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ccmorph::geometry::{save_volume, DataType, Volume};
use ccmorph::phantom::{self, callosum_case, SyntheticStudy};
use ccmorph::stats::{dice, hausdorff95, Mask3D};
use ccmorph::Vec3;
use rand::{Rng, SeedableRng};
use serde_json::Value;

fn ccmorph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccmorph"))
        .args(args)
        .env_remove("CCMORPH_THREADS")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct CaseFiles {
    labels: PathBuf,
    landmarks: PathBuf,
    plane: PathBuf,
}

fn write_case(dir: &Path, name: &str, dims: [usize; 3]) -> CaseFiles {
    let case = callosum_case(dims, 251);
    let f = CaseFiles {
        labels: dir.join(format!("{name}_labels.nii.gz")),
        landmarks: dir.join(format!("{name}_landmarks.json")),
        plane: dir.join(format!("{name}_plane.json")),
    };
    save_volume(&case.labels, &f.labels).unwrap();
    fs::write(
        &f.landmarks,
        serde_json::to_string(&case.landmarks).unwrap(),
    )
    .unwrap();
    fs::write(&f.plane, serde_json::to_string(&case.plane).unwrap()).unwrap();
    f
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn pipeline_on_phantom_writes_finite_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let f = write_case(tmp.path(), "a", [5, 96, 96]);
    let out = tmp.path().join("out");
    let o = ccmorph(&[
        "pipeline",
        "--labels",
        s(&f.labels),
        "--landmarks",
        s(&f.landmarks),
        "--plane",
        s(&f.plane),
        "--out",
        s(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for name in [
        "config.toml",
        "plane.json",
        "contour.csv",
        "mesh.off",
        "midline.csv",
        "thickness.csv",
        "summary.json",
        "subsegments.csv",
        "thickness.svg",
        "cross_section.svg",
        "status.json",
    ] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    let summary = json(&out.join("summary.json"));
    for key in [
        "area_mm2",
        "length_mm",
        "mean_thickness_mm",
        "volume_mm3",
        "cc_index_raw",
    ] {
        let v = summary[key].as_f64().unwrap_or(f64::NAN);
        assert!(v.is_finite() && v > 0.0, "{key} = {v}");
    }
    assert_eq!(summary["valid_samples"], 100);
    let status = json(&out.join("status.json"));
    assert_eq!(status["status"], "ok");
    assert_eq!(status["stages"].as_array().unwrap().len(), 9);
}

#[test]
fn missing_landmarks_fail_the_landmark_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let f = write_case(tmp.path(), "a", [3, 64, 64]);
    let out = tmp.path().join("out");
    let o = ccmorph(&[
        "thickness",
        "--labels",
        s(&f.labels),
        "--landmarks",
        s(&tmp.path().join("nope.json")),
        "--plane",
        s(&f.plane),
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let status = json(&out.join("status.json"));
    assert_eq!(status["failed_stage"], "landmarks");
    assert_eq!(status["stages"][0]["status"], "failed");
    assert!(status["stages"].as_array().unwrap()[1..]
        .iter()
        .all(|st| st["status"] == "skipped"));
}

#[test]
fn bad_config_is_rejected_before_any_case() {
    let tmp = tempfile::tempdir().unwrap();
    let f = write_case(tmp.path(), "a", [3, 64, 64]);
    let out = tmp.path().join("out");
    let o = ccmorph(&[
        "metrics",
        "--labels",
        s(&f.labels),
        "--landmarks",
        s(&f.landmarks),
        "--plane",
        s(&f.plane),
        "--set",
        "iso=2",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn registration_recovers_the_template_plane() {
    let tmp = tempfile::tempdir().unwrap();
    let t = write_case(tmp.path(), "template", [9, 64, 64]);
    // the subject is the template moved by a whole-voxel shift
    let case = callosum_case([9, 64, 64], 251);
    let shift = Vec3::new(0.0, 3.0, -2.0);
    let mut affine = *case.labels.affine();
    affine.m[1][3] += shift.y;
    affine.m[2][3] += shift.z;
    let moved = Volume::new(
        [9, 64, 64],
        [1.0; 3],
        affine,
        DataType::U8,
        case.labels.data().to_vec(),
    )
    .unwrap();
    let labels = tmp.path().join("subject.nii");
    save_volume(&moved, &labels).unwrap();
    let out = tmp.path().join("out");
    let o = ccmorph(&[
        "midplane",
        "--labels",
        s(&labels),
        "--landmarks",
        s(&t.landmarks),
        "--template",
        s(&t.labels),
        "--template-plane",
        s(&t.plane),
        "--out",
        s(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let plane = json(&out.join("plane.json"));
    assert_eq!(plane["source"], "registered");
    let n: Vec<f64> = plane["normal"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!((n[0] - 1.0).abs() < 1e-9 && n[1].abs() < 1e-9 && n[2].abs() < 1e-9);
    assert!((plane["offset"].as_f64().unwrap() - 4.0).abs() < 1e-9);
}

#[test]
fn batch_output_does_not_depend_on_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let mut batch = String::new();
    for (i, dims) in [[3, 64, 64], [5, 72, 64], [3, 80, 72]].iter().enumerate() {
        let f = write_case(tmp.path(), &format!("c{i}"), *dims);
        batch += &format!(
            "[[case]]\nid = \"c{i}\"\nlabels = \"{}\"\nlandmarks = \"{}\"\nplane = \"{}\"\n\n",
            f.labels.file_name().unwrap().to_str().unwrap(),
            f.landmarks.file_name().unwrap().to_str().unwrap(),
            f.plane.file_name().unwrap().to_str().unwrap(),
        );
    }
    let batch_file = tmp.path().join("cases.toml");
    fs::write(&batch_file, batch).unwrap();
    let run = |threads: &str, out: &Path| {
        let o = ccmorph(&[
            "pipeline",
            "--cases",
            s(&batch_file),
            "--threads",
            threads,
            "--out",
            s(out),
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stdout)
        );
    };
    let (a, b) = (tmp.path().join("seq"), tmp.path().join("par"));
    run("1", &a);
    run("3", &b);
    for i in 0..3 {
        for name in [
            "summary.json",
            "thickness.csv",
            "subsegments.csv",
            "plane.json",
            "mesh.off",
        ] {
            let (x, y) = (
                a.join(format!("c{i}/{name}")),
                b.join(format!("c{i}/{name}")),
            );
            assert_eq!(fs::read(&x).unwrap(), fs::read(&y).unwrap(), "c{i}/{name}");
        }
    }
}

fn mask_volume(bits: &[bool]) -> Volume {
    Volume::from_grid(
        [16, 16, 16],
        [1.0; 3],
        Vec3::zero(),
        DataType::U8,
        bits.iter().map(|&b| f64::from(u8::from(b))).collect(),
    )
    .unwrap()
}

fn eval(pred: &Path, reference: &Path) -> Value {
    let o = ccmorph(&["eval", "--pred", s(pred), "--reference", s(reference)]);
    assert_eq!(o.status.code(), Some(0));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn eval_matches_library_values() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let a: Vec<bool> = (0..4096).map(|_| rng.gen_bool(0.3)).collect();
    let b: Vec<bool> = (0..4096).map(|_| rng.gen_bool(0.3)).collect();
    let (pa, pb) = (tmp.path().join("a.nii"), tmp.path().join("b.nii"));
    save_volume(&mask_volume(&a), &pa).unwrap();
    save_volume(&mask_volume(&b), &pb).unwrap();

    let same = eval(&pa, &pa);
    assert_eq!(same["dice"], 1.0);
    assert_eq!(same["hd95_mm"], 0.0);

    let m = |bits: &[bool]| Mask3D::new([16; 3], [1.0; 3], bits.to_vec()).unwrap();
    let r = eval(&pa, &pb);
    assert_eq!(r["dice"].as_f64().unwrap(), dice(&m(&a), &m(&b)).unwrap());
    assert_eq!(
        r["hd95_mm"].as_f64().unwrap(),
        hausdorff95(&m(&a), &m(&b)).unwrap()
    );

    let left: Vec<bool> = (0..4096).map(|i| i % 16 < 4).collect();
    let right: Vec<bool> = (0..4096).map(|i| i % 16 >= 12).collect();
    let (pl, pr) = (tmp.path().join("l.nii"), tmp.path().join("r.nii"));
    save_volume(&mask_volume(&left), &pl).unwrap();
    save_volume(&mask_volume(&right), &pr).unwrap();
    let d = eval(&pl, &pr);
    assert_eq!(d["dice"], 0.0);
    assert!(d["hd95_mm"].as_f64().unwrap().is_finite());
}

#[test]
fn stats_on_identical_groups_finds_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let study = SyntheticStudy {
        per_group: 6,
        positions: 20,
        deficit: 0.0,
        ..Default::default()
    };
    let mut table = phantom::synthetic_group_table(&study);
    // controls become copies of the patients
    let n = study.per_group;
    for i in 0..n {
        let mut copy = table.rows[i].clone();
        copy.case_id = format!("copy{i}");
        copy.group = ccmorph::stats::Group::Control;
        table.rows[n + i] = copy;
    }
    let path = tmp.path().join("table.csv");
    fs::write(&path, table.to_csv().unwrap()).unwrap();
    let out = tmp.path().join("stats");
    let o = ccmorph(&["stats", "--table", s(&path), "--out", s(&out)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let mut rdr = csv::Reader::from_path(out.join("group_map.csv")).unwrap();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let beta: f64 = rec[1].parse().unwrap();
        let p_adj: f64 = rec[3].parse().unwrap();
        assert!(beta.abs() < 1e-9, "{beta}");
        assert!(p_adj > 1.0 - 1e-6, "{p_adj}");
    }
    assert!(out.join("pmap.svg").is_file());
}

#[test]
fn stats_needs_two_cases_per_group() {
    let tmp = tempfile::tempdir().unwrap();
    let study = SyntheticStudy {
        per_group: 3,
        positions: 5,
        ..Default::default()
    };
    let mut table = phantom::synthetic_group_table(&study);
    table.rows.truncate(4);
    let path = tmp.path().join("table.csv");
    fs::write(&path, table.to_csv().unwrap()).unwrap();
    let o = ccmorph(&[
        "stats",
        "--table",
        s(&path),
        "--out",
        s(&tmp.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("insufficient data"));
}

#[test]
fn stats_from_pipeline_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut batch = String::new();
    let mut cov = String::from("case_id,group,age,sex,total_brain_volume\n");
    for i in 0..6 {
        let dims = [3, 64 + 2 * i, 64];
        let f = write_case(tmp.path(), &format!("s{i}"), dims);
        batch += &format!(
            "[[case]]\nid = \"s{i}\"\nlabels = \"{}\"\nlandmarks = \"{}\"\nplane = \"{}\"\n",
            s(&f.labels),
            s(&f.landmarks),
            s(&f.plane)
        );
        let group = if i % 2 == 0 { "patient" } else { "control" };
        let (age, tbv) = (
            [34, 51, 29, 62, 45, 38][i],
            [1.21e6, 1.35e6, 1.18e6, 1.42e6, 1.30e6, 1.26e6][i],
        );
        cov += &format!("s{i},{group},{age},{},{tbv}\n", ["F", "M"][i % 3 / 2]);
    }
    let batch_file = tmp.path().join("cases.toml");
    fs::write(&batch_file, batch).unwrap();
    fs::write(tmp.path().join("cov.csv"), cov).unwrap();
    let runs = tmp.path().join("runs");
    let o = ccmorph(&[
        "pipeline",
        "--cases",
        s(&batch_file),
        "--set",
        "samples=20",
        "--out",
        s(&runs),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let out = tmp.path().join("stats");
    let o = ccmorph(&[
        "stats",
        "--covariates",
        s(&tmp.path().join("cov.csv")),
        "--runs",
        s(&runs),
        "--out",
        s(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let map = fs::read_to_string(out.join("group_map.csv")).unwrap();
    assert_eq!(map.lines().count(), 21);
    let effects = fs::read_to_string(out.join("effects.csv")).unwrap();
    assert!(effects.contains("area_mm2") && effects.contains("mean_thickness_mm"));
    let svg = fs::read_to_string(out.join("pmap.svg")).unwrap();
    assert_eq!(svg.matches("<title>position").count(), 20);
}
