use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use apo_dcsp_ffi::*;

fn take_string(p: *mut std::ffi::c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { apo_string_free(p) };
    s
}

fn last_error() -> Option<String> {
    let p = apo_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned())
}

fn parse(text: &str) -> Result<*mut ApoInstance, ApoStatus> {
    let c = CString::new(text).unwrap();
    let mut inst = ptr::null_mut();
    match unsafe { apo_instance_parse(c.as_ptr(), &mut inst) } {
        ApoStatus::Ok => Ok(inst),
        s => Err(s),
    }
}

const TRIANGLE: &str = "coloring 3 3 3\n0 1\n1 2\n0 2\n";
const K4: &str = "coloring 4 6 3\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n";

#[test]
fn parse_and_serialize_round_trip() {
    let inst = parse(TRIANGLE).unwrap();
    unsafe {
        assert_eq!(apo_instance_num_variables(inst), 3);
        assert_eq!(apo_instance_num_constraints(inst), 3);
        let mut text = ptr::null_mut();
        assert_eq!(apo_instance_to_text(inst, &mut text), ApoStatus::Ok);
        assert_eq!(take_string(text), TRIANGLE);
        apo_instance_free(inst);
    }
}

#[test]
fn parse_errors_set_the_message() {
    assert_eq!(parse("coloring 3 2 3\n0 1\n"), Err(ApoStatus::Parse));
    let msg = last_error().expect("message after failure");
    assert!(!msg.is_empty());
    parse(TRIANGLE)
        .map(|i| unsafe { apo_instance_free(i) })
        .unwrap();
    assert_eq!(last_error(), None);
}

#[test]
fn null_arguments_are_rejected() {
    let mut inst = ptr::null_mut();
    unsafe {
        assert_eq!(
            apo_instance_parse(ptr::null(), &mut inst),
            ApoStatus::NullPointer
        );
        assert_eq!(apo_instance_num_variables(ptr::null()), 0);
        assert_eq!(apo_trial_cycles(ptr::null()), 0);
        assert_eq!(apo_trial_verdict(ptr::null()), ApoVerdict::Running);
        apo_instance_free(ptr::null_mut());
        apo_trial_free(ptr::null_mut());
        apo_string_free(ptr::null_mut());
    }
}

#[test]
fn k4_is_refuted_by_both_protocols_and_brute_force() {
    let inst = parse(K4).unwrap();
    unsafe {
        let mut sat = true;
        assert_eq!(
            apo_instance_brute_force(inst, 1000, &mut sat),
            ApoStatus::Ok
        );
        assert!(!sat);
        for p in [ApoProtocol::Apo, ApoProtocol::Awc] {
            let mut r = ptr::null_mut();
            assert_eq!(
                apo_run_trial(inst, p, 3, 1000, false, &mut r),
                ApoStatus::Ok
            );
            assert_eq!(apo_trial_verdict(r), ApoVerdict::Unsatisfiable, "{p:?}");
            assert_eq!(apo_trial_violations(r), 0);
            apo_trial_free(r);
        }
        apo_instance_free(inst);
    }
}

#[test]
fn generated_instance_solves_with_a_trace() {
    let mut inst = ptr::null_mut();
    unsafe {
        assert_eq!(
            apo_instance_generate_coloring(ApoFamily::Minton, 15, 2.0, 3, 4, &mut inst),
            ApoStatus::Ok
        );
        assert_eq!(apo_instance_num_constraints(inst), 30);
        let mut r = ptr::null_mut();
        assert_eq!(
            apo_run_trial(inst, ApoProtocol::Apo, 11, 1000, true, &mut r),
            ApoStatus::Ok
        );
        assert_eq!(apo_trial_verdict(r), ApoVerdict::Solved);
        assert!(apo_trial_messages(r) > 0);
        assert!(apo_trial_bytes(r) >= apo_trial_messages(r));
        assert!(apo_trial_work(r) > 0);
        let mut text = ptr::null_mut();
        assert_eq!(apo_trial_assignment_text(r, &mut text), ApoStatus::Ok);
        assert_eq!(take_string(text).lines().count(), 15);
        assert_eq!(apo_trial_trace_text(r, &mut text), ApoStatus::Ok);
        let trace = take_string(text);
        assert_eq!(trace.lines().count() as u64, apo_trial_messages(r));
        assert_eq!(trace.lines().next().unwrap().split(' ').count(), 5);
        apo_trial_free(r);
        apo_instance_free(inst);
    }
}

#[test]
fn trace_is_unavailable_without_tracing() {
    let inst = parse(TRIANGLE).unwrap();
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(
            apo_run_trial(inst, ApoProtocol::Awc, 1, 1000, false, &mut r),
            ApoStatus::Ok
        );
        let mut text = ptr::null_mut();
        assert_eq!(
            apo_trial_trace_text(r, &mut text),
            ApoStatus::InvalidArgument
        );
        assert!(text.is_null());
        apo_trial_free(r);
        assert_eq!(
            apo_run_trial(inst, ApoProtocol::Apo, 1, 0, false, &mut r),
            ApoStatus::InvalidArgument
        );
        apo_instance_free(inst);
    }
}

#[test]
fn generator_errors_map_to_generate() {
    let mut inst = ptr::null_mut();
    unsafe {
        assert_eq!(
            apo_instance_generate_coloring(ApoFamily::Minton, 10, 2.0, 3, 0, &mut inst),
            ApoStatus::Generate
        );
        assert!(inst.is_null());
        assert_eq!(
            apo_instance_generate_sensor(12, 25.0, 5, &mut inst),
            ApoStatus::Ok
        );
        assert_eq!(apo_instance_num_variables(inst), 12);
        apo_instance_free(inst);
    }
}

#[test]
fn brute_force_cap_is_reported() {
    let mut inst = ptr::null_mut();
    unsafe {
        apo_instance_generate_coloring(ApoFamily::Random, 30, 2.0, 3, 1, &mut inst);
        let mut sat = false;
        assert_eq!(
            apo_instance_brute_force(inst, 10, &mut sat),
            ApoStatus::CapExceeded
        );
        apo_instance_free(inst);
    }
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(apo_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export_and_compiles_as_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/apo_dcsp.h")).unwrap();
    let source = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| {
            l.trim()
                .strip_prefix("pub unsafe extern \"C\" fn ")
                .or_else(|| l.trim().strip_prefix("pub extern \"C\" fn "))
        })
        .map(|l| l.split('(').next().unwrap())
        .collect();
    assert_eq!(exports.len(), 22);
    for f in exports {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    let probe = std::env::temp_dir().join(format!("apo_dcsp_header_{}.c", std::process::id()));
    std::fs::write(
        &probe,
        "#include \"apo_dcsp.h\"\nint main(void) { return APO_STATUS_OK; }\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&probe)
        .status();
    let _ = std::fs::remove_file(&probe);
    match status {
        Ok(s) => assert!(s.success(), "header does not compile"),
        Err(e) => eprintln!("no C compiler available ({e}); syntax check skipped"),
    }
}
