use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use asanakit::classifiers::{save_model_file, train, Family, ModelSpec};
use asanakit::correction::PoseProfile;
use asanakit::dataset::{mudra_templates, synth_mudra_dataset, HandKinematics};
use asanakit::skeleton::LandmarkFrame;
use asanakit::skeleton::Kind;
use asanakit_ffi::*;

fn cstr(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    let mut needed = 0;
    let s = unsafe { asana_last_error(buf.as_mut_ptr(), buf.len(), &mut needed) };
    assert_eq!(s, AsanaStatus::Ok);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_string()
}

fn mudra_frame(name: &str) -> LandmarkFrame {
    let t = mudra_templates().iter().find(|t| t.name == name).unwrap();
    let kin = HandKinematics::from_landmarks(&t.landmarks);
    kin.frame(&kin.angles)
}

fn trained_model(dir: &Path) -> std::path::PathBuf {
    let d = synth_mudra_dataset(30, 3.0, 5).unwrap();
    let m = train(&ModelSpec::new(Family::GaussianNb), &d).unwrap();
    let path = dir.join("model.bin");
    save_model_file(&m, &path).unwrap();
    path
}

#[test]
fn model_round_trip_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    let path = cstr(&trained_model(dir.path()));
    let mut model: *mut AsanaModel = ptr::null_mut();
    unsafe {
        assert_eq!(asana_model_load(path.as_ptr(), &mut model), AsanaStatus::Ok);
        let mut kind = AsanaKind::Body;
        assert_eq!(asana_model_kind(model, &mut kind), AsanaStatus::Ok);
        assert_eq!(kind, AsanaKind::Hand);
        let mut n = 0;
        assert_eq!(asana_model_class_count(model, &mut n), AsanaStatus::Ok);
        assert_eq!(n, mudra_templates().len());

        for t in mudra_templates() {
            let name = t.name.as_str();
            let flat = mudra_frame(name).to_flat();
            let (mut label, mut score) = (usize::MAX, f64::NAN);
            let s = asana_model_predict(model, flat.as_ptr(), flat.len(), 0.3, &mut label, &mut score);
            assert_eq!(s, AsanaStatus::Ok, "{}", last_error());
            let mut buf = [0 as c_char; 64];
            let mut needed = 0;
            assert_eq!(
                asana_model_class_name(model, label, buf.as_mut_ptr(), buf.len(), &mut needed),
                AsanaStatus::Ok
            );
            assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), name);
            assert!(score.is_finite());
        }
        asana_model_free(model);
    }
}

#[test]
fn errors_are_reported_not_thrown() {
    let dir = tempfile::tempdir().unwrap();
    let missing = cstr(&dir.path().join("nope.bin"));
    let mut model: *mut AsanaModel = ptr::null_mut();
    unsafe {
        assert_eq!(asana_model_load(missing.as_ptr(), &mut model), AsanaStatus::Io);
        assert!(model.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(asana_model_load(ptr::null(), &mut model), AsanaStatus::NullArgument);
        let mut n = 0;
        assert_eq!(asana_model_class_count(ptr::null(), &mut n), AsanaStatus::NullArgument);

        let garbage = dir.path().join("garbage.bin");
        std::fs::write(&garbage, b"not a model").unwrap();
        let g = cstr(&garbage);
        assert_eq!(asana_model_load(g.as_ptr(), &mut model), AsanaStatus::Parse);

        let path = cstr(&trained_model(dir.path()));
        assert_eq!(asana_model_load(path.as_ptr(), &mut model), AsanaStatus::Ok);
        assert_eq!(last_error(), "");
        let short = [0.0; 9];
        let mut label = 0;
        let s = asana_model_predict(model, short.as_ptr(), short.len(), 0.3, &mut label, ptr::null_mut());
        assert_eq!(s, AsanaStatus::BadFrame);
        let mut buf = [0 as c_char; 2];
        let mut needed = 0;
        assert_eq!(
            asana_model_class_name(model, 0, buf.as_mut_ptr(), buf.len(), &mut needed),
            AsanaStatus::BufferTooSmall
        );
        assert!(needed > 2);
        assert_eq!(
            asana_model_class_name(model, 99, buf.as_mut_ptr(), buf.len(), &mut needed),
            AsanaStatus::InvalidArgument
        );
        asana_model_free(model);
        asana_model_free(ptr::null_mut());
    }
}

#[test]
fn profile_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let frame = mudra_frame("Pataaka");
    let topo = Kind::Hand.topology();
    let features = asanakit::geometry::extract_features(&frame, topo, 0.3).unwrap();
    let observed = features.values[topo.joint_index("index_pip").unwrap()];
    let profile = PoseProfile::new("pataaka", Kind::Hand).angle("index_pip", observed - 30.0, 5.0);
    let path = dir.path().join("p.yaml");
    profile.save(&path).unwrap();
    let p = cstr(&path);
    let flat = frame.to_flat();
    unsafe {
        let mut prof: *mut AsanaProfile = ptr::null_mut();
        assert_eq!(asana_profile_load(p.as_ptr(), &mut prof), AsanaStatus::Ok, "{}", last_error());
        let mut corr: *mut AsanaCorrection = ptr::null_mut();
        assert_eq!(asana_evaluate(prof, flat.as_ptr(), flat.len(), 0.3, &mut corr), AsanaStatus::Ok);
        let mut ok = 1;
        assert_eq!(asana_correction_is_correct(corr, &mut ok), AsanaStatus::Ok);
        assert_eq!(ok, 0);
        let mut n = 0;
        assert_eq!(asana_correction_count(corr, &mut n), AsanaStatus::Ok);
        assert_eq!(n, 1);
        let mut excess = 0.0;
        let mut needed = 0;
        assert_eq!(
            asana_correction_get(corr, 0, &mut excess, ptr::null_mut(), 0, &mut needed),
            AsanaStatus::BufferTooSmall
        );
        let mut buf = vec![0 as c_char; needed];
        assert_eq!(
            asana_correction_get(corr, 0, &mut excess, buf.as_mut_ptr(), buf.len(), ptr::null_mut()),
            AsanaStatus::Ok
        );
        let msg = CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
        assert!((excess - 25.0).abs() < 1e-6, "{excess}");
        assert_eq!(msg, "Bend your index pip more (25° to go)");
        asana_correction_free(corr);
        asana_profile_free(prof);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/asanakit.h")).unwrap();
    let lib = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = lib
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .filter_map(|rest| rest.split('(').next())
        .collect();
    assert!(exports.len() >= 12);
    for f in exports {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct AsanaModel AsanaModel;"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(out) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include/asanakit.h"))
        .output()
    else {
        eprintln!("no C compiler; skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(asana_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
