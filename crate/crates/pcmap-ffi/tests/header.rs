//! Compiles tests/smoke.c against include/pcmap.h and the freshly built
//! static library, then runs it. Skips quietly when no C compiler is
//! available on PATH.

use std::path::PathBuf;
use std::process::Command;

#[test]
fn committed_header_compiles_links_and_runs() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler on PATH");
        return;
    }

    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let deps_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let profile_dir = deps_dir.parent().unwrap().to_path_buf();
    // link the archive by path (not -L/-l, which would pick the cdylib and
    // need a loader path at runtime); the uplifted copy in the profile dir
    // can lag behind deps/, so take whichever archive is newest
    let archive = [&deps_dir, &profile_dir]
        .into_iter()
        .map(|dir| dir.join("libpcmap_ffi.a"))
        .filter(|path| path.exists())
        .max_by_key(|path| {
            std::fs::metadata(path)
                .and_then(|m| m.modified())
                .unwrap_or(std::time::SystemTime::UNIX_EPOCH)
        })
        .expect("static library was built");

    let dir = tempfile::tempdir().unwrap();
    let binary = dir.path().join("smoke");
    let compile = Command::new("cc")
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-lrt", "-lutil"])
        .arg("-o")
        .arg(&binary)
        .output()
        .unwrap();
    assert!(
        compile.status.success(),
        "compile failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&binary).output().unwrap();
    assert!(
        run.status.success(),
        "smoke binary exited with {:?}, stdout: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stdout)
    );
    assert!(String::from_utf8_lossy(&run.stdout).contains("header smoke ok"));
}
