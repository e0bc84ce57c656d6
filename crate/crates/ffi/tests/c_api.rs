use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use gyrocal_ffi::*;

fn last_error() -> String {
    let needed = unsafe { gyrocal_last_error(ptr::null_mut(), 0) };
    let mut buf = vec![0 as c_char; needed.max(1)];
    unsafe { gyrocal_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn c_path(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn quiet_config(seed: u64) -> *mut GyrocalSimConfig {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("quiet.toml");
    std::fs::write(
        &path,
        "rotor_noise_fraction = 0\ngyro_noise_sigma = 0\naccel_noise_sigma = 0\n",
    )
    .unwrap();
    let mut config = ptr::null_mut();
    assert_eq!(
        unsafe { gyrocal_sim_config_read(c_path(&path).as_ptr(), &mut config) },
        GyrocalStatus::Ok
    );
    assert_eq!(unsafe { gyrocal_sim_config_set_seed(config, seed) }, GyrocalStatus::Ok);
    config
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(gyrocal_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn simulate_and_calibrate_recover_truth() {
    let config = quiet_config(8);
    let mut session = ptr::null_mut();
    let mut truth = GyrocalParams::default();
    unsafe {
        assert_eq!(gyrocal_simulate(config, 0, &mut session, &mut truth), GyrocalStatus::Ok);
        assert_eq!(gyrocal_session_pose_count(session), 4);
        let mut est = GyrocalEstimate::default();
        assert_eq!(
            gyrocal_calibrate(session, GyrocalAccelMode::Identity, ptr::null(), &mut est),
            GyrocalStatus::Ok
        );
        for (e, t) in [
            (est.params.scale.x, truth.scale.x),
            (est.params.scale.y, truth.scale.y),
            (est.params.scale.z, truth.scale.z),
        ] {
            assert!((e - t).abs() < 1e-9, "{e} vs {t}");
        }
        assert!((est.params.bias.x - truth.bias.x).abs() < 1e-9);
        assert!(est.normal_equation_residual < 1e-9);

        let known = GyrocalParams {
            scale: GyrocalVec3 { x: 1.0, y: 1.0, z: 1.0 },
            bias: GyrocalVec3::default(),
        };
        let mut again = GyrocalEstimate::default();
        assert_eq!(
            gyrocal_calibrate(session, GyrocalAccelMode::Known, &known, &mut again),
            GyrocalStatus::Ok
        );
        assert_eq!(again.params, est.params);
        assert_eq!(
            gyrocal_calibrate(session, GyrocalAccelMode::Known, ptr::null(), &mut again),
            GyrocalStatus::NullPointer
        );

        gyrocal_session_free(session);
        gyrocal_sim_config_free(config);
    }
}

#[test]
fn sessions_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = c_path(&dir.path().join("s.session"));
    let mut config = ptr::null_mut();
    let mut a = ptr::null_mut();
    let mut b = ptr::null_mut();
    unsafe {
        assert_eq!(gyrocal_sim_config_default(&mut config), GyrocalStatus::Ok);
        assert_eq!(gyrocal_simulate(config, 3, &mut a, ptr::null_mut()), GyrocalStatus::Ok);
        assert_eq!(gyrocal_session_write(a, path.as_ptr()), GyrocalStatus::Ok);
        assert_eq!(gyrocal_session_read(path.as_ptr(), &mut b), GyrocalStatus::Ok);
        let mut ea = GyrocalEstimate::default();
        let mut eb = GyrocalEstimate::default();
        assert_eq!(
            gyrocal_calibrate(a, GyrocalAccelMode::Identity, ptr::null(), &mut ea),
            GyrocalStatus::Ok
        );
        assert_eq!(
            gyrocal_calibrate(b, GyrocalAccelMode::Identity, ptr::null(), &mut eb),
            GyrocalStatus::Ok
        );
        assert!((ea.params.scale.x - eb.params.scale.x).abs() < 1e-6);
        gyrocal_session_free(a);
        gyrocal_session_free(b);
        gyrocal_sim_config_free(config);
    }
}

#[test]
fn failures_set_status_and_message() {
    let mut session = ptr::null_mut();
    let missing = CString::new("/nonexistent/x.session").unwrap();
    unsafe {
        assert_eq!(gyrocal_session_read(missing.as_ptr(), &mut session), GyrocalStatus::Io);
        assert!(session.is_null());
        assert!(last_error().contains("/nonexistent/x.session"));

        assert_eq!(
            gyrocal_session_read(ptr::null(), &mut session),
            GyrocalStatus::NullPointer
        );
        assert_eq!(last_error(), "path is null");

        let mut small = [0 as c_char; 5];
        let needed = gyrocal_last_error(small.as_mut_ptr(), small.len());
        assert_eq!(needed, "path is null".len() + 1);
        assert_eq!(CStr::from_ptr(small.as_ptr()).to_str().unwrap(), "path");

        let mut config = ptr::null_mut();
        assert_eq!(gyrocal_sim_config_default(&mut config), GyrocalStatus::Ok);
        assert_eq!(gyrocal_sim_config_set_gyro_noise(config, -1.0), GyrocalStatus::Config);
        let mut report = ptr::null_mut();
        assert_eq!(
            gyrocal_montecarlo_run(config, 0, 1, GyrocalAccelMode::Identity, &mut report),
            GyrocalStatus::Config
        );
        assert_eq!(
            gyrocal_montecarlo_run(config, 5, 1, GyrocalAccelMode::Known, &mut report),
            GyrocalStatus::InvalidArgument
        );
        gyrocal_sim_config_free(config);

        let bad = GyrocalParams::default();
        let mut out = GyrocalVec3::default();
        assert_eq!(
            gyrocal_apply_gyro(&bad, GyrocalVec3::default(), &mut out),
            GyrocalStatus::InvalidArgument
        );
        gyrocal_session_free(ptr::null_mut());
        gyrocal_montecarlo_free(ptr::null_mut());
    }
}

#[test]
fn degenerate_geometry_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.session");
    let mut text =
        String::from("gyrocal-session 1\nunits gyro=deg/s accel=m/s^2 time=s\nrotor_speed 10\ngravity 9.80665\n");
    text.push_str("segment static_gyro 0 count=200\n0,0.1,0.1,0.1,0,0,9.80665\n");
    for pose in 1..=4 {
        text.push_str(&format!("segment static_accel {pose} count=200\n0,0,0,0,0,4.9,8.49\n"));
        text.push_str(&format!("segment rotating {pose} count=200\n1,3,4,5,0,4.9,8.49\n"));
    }
    std::fs::write(&path, text).unwrap();
    let mut session = ptr::null_mut();
    let mut est = GyrocalEstimate::default();
    unsafe {
        assert_eq!(
            gyrocal_session_read(c_path(&path).as_ptr(), &mut session),
            GyrocalStatus::Ok
        );
        assert_eq!(
            gyrocal_calibrate(session, GyrocalAccelMode::Identity, ptr::null(), &mut est),
            GyrocalStatus::DegenerateGeometry
        );
        assert!(last_error().contains("degenerate"));
        gyrocal_session_free(session);
    }
}

#[test]
fn apply_and_summarize() {
    let params = GyrocalParams {
        scale: GyrocalVec3 { x: 1.1, y: 0.9, z: 1.2 },
        bias: GyrocalVec3 {
            x: 0.5,
            y: -0.5,
            z: 0.0,
        },
    };
    let mut out = GyrocalVec3::default();
    let data = [1.0, 2.0, 3.0, 4.0, 10.0];
    let mut s = GyrocalSummary::default();
    unsafe {
        assert_eq!(
            gyrocal_apply_gyro(
                &params,
                GyrocalVec3 {
                    x: 10.0,
                    y: 10.0,
                    z: 10.0
                },
                &mut out
            ),
            GyrocalStatus::Ok
        );
        assert_eq!(gyrocal_summarize(data.as_ptr(), data.len(), &mut s), GyrocalStatus::Ok);
        assert_eq!(
            gyrocal_summarize(data.as_ptr(), 0, &mut s),
            GyrocalStatus::InvalidArgument
        );
    }
    assert!((out.x - 11.5).abs() < 1e-12 && (out.y - 8.5).abs() < 1e-12 && (out.z - 12.0).abs() < 1e-12);
    assert_eq!(s.n, 5);
    assert!((s.mean - 4.0).abs() < 1e-12);
    assert!((s.variance - 12.5).abs() < 1e-12);
    assert_eq!(s.range, 9.0);
    assert_eq!(s.degenerate, 0);
}

#[test]
fn montecarlo_handle_is_thread_count_independent() {
    let mut config = ptr::null_mut();
    let mut one = ptr::null_mut();
    let mut four = ptr::null_mut();
    unsafe {
        assert_eq!(gyrocal_sim_config_default(&mut config), GyrocalStatus::Ok);
        assert_eq!(gyrocal_sim_config_set_seed(config, 12), GyrocalStatus::Ok);
        assert_eq!(
            gyrocal_montecarlo_run(config, 50, 1, GyrocalAccelMode::Identity, &mut one),
            GyrocalStatus::Ok
        );
        assert_eq!(
            gyrocal_montecarlo_run(config, 50, 4, GyrocalAccelMode::Identity, &mut four),
            GyrocalStatus::Ok
        );
        assert_eq!(gyrocal_montecarlo_failures(one), 0);
        for axis in 0..3 {
            let mut a = GyrocalAxisSummary::default();
            let mut b = GyrocalAxisSummary::default();
            assert_eq!(gyrocal_montecarlo_axis(one, axis, &mut a), GyrocalStatus::Ok);
            assert_eq!(gyrocal_montecarlo_axis(four, axis, &mut b), GyrocalStatus::Ok);
            assert_eq!(a, b);
            assert_eq!(a.estimate.n, 50);
        }
        let mut a = GyrocalAxisSummary::default();
        assert_eq!(gyrocal_montecarlo_axis(one, 3, &mut a), GyrocalStatus::InvalidArgument);
        gyrocal_montecarlo_free(one);
        gyrocal_montecarlo_free(four);
        gyrocal_sim_config_free(config);
    }
}

fn target_dir() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    Some(exe.parent()?.parent()?.to_path_buf())
}

/// Builds and runs a C program against the generated header and static library.
#[test]
fn c_program_links_against_the_header() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(crate_dir.join("include/gyrocal.h")).unwrap();
    for name in [
        "gyrocal_calibrate",
        "gyrocal_last_error",
        "GYROCAL_STATUS_DEGENERATE_GEOMETRY",
        "typedef struct GyrocalSession GyrocalSession",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
    let lib = match target_dir().map(|d| d.join("libgyrocal_ffi.a")) {
        Some(p) if p.exists() => p,
        _ => {
            eprintln!("static library not found; skipping C link check");
            return;
        }
    };
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping C link check");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("c_program");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/c_program.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    let line = |prefix: &str| -> Vec<f64> {
        stdout.lines().find(|l| l.starts_with(prefix)).unwrap()[prefix.len()..]
            .split_whitespace()
            .map(|v| v.parse().unwrap())
            .collect()
    };
    let (scale, truth) = (line("scale "), line("truth "));
    for (s, t) in scale.iter().zip(&truth) {
        assert!((s - t).abs() < 0.05, "{s} vs {t}");
    }
}
