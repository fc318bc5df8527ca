//! Acceptance criteria 1 to 10. Prints one line per criterion and exits
//! nonzero if any fails. Runs without the libtest harness so that the
//! timings are not disturbed by other tests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use conelab_cli::config::RunConfig;
use conelab_cli::suite::{run_all, status_line, write_suite, DETERMINISM};

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).expect("readable output directory") {
            let path = entry.expect("directory entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).expect("inside root").to_path_buf();
                out.insert(rel, fs::read(&path).expect("readable report"));
            }
        }
    }
    out
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let mut all_ok = true;

    let cfg_a = RunConfig { out: tmp.path().join("a"), ..RunConfig::default() };
    let first = run_all(&cfg_a).expect("default configuration is valid");
    write_suite(&first, &cfg_a, &first.dir).expect("reports written");
    for r in &first.runs {
        let ok = r.outcome.passed() && r.within_limit();
        all_ok &= ok;
        println!("{}", status_line(r.criterion.id, r.criterion.title, ok, Some(r.elapsed), Some(r.criterion.limit)));
        for a in r.outcome.assertions.iter().filter(|a| !a.passed) {
            println!("      failed: {} ({})", a.name, a.detail);
        }
    }

    let start = Instant::now();
    let cfg_b = RunConfig { out: tmp.path().join("b"), ..RunConfig::default() };
    let second = run_all(&cfg_b).expect("default configuration is valid");
    write_suite(&second, &cfg_b, &second.dir).expect("reports written");
    let (fa, fb) = (files_under(&first.dir), files_under(&second.dir));
    let differing: Vec<_> = fa.keys().chain(fb.keys()).filter(|k| fa.get(*k) != fb.get(*k)).collect();
    let identical = !fa.is_empty() && differing.is_empty();
    all_ok &= identical;
    println!("{}", status_line(DETERMINISM.id, DETERMINISM.title, identical, Some(start.elapsed()), None));
    if !identical {
        println!("      differing files: {differing:?}");
    } else {
        println!("      {} files byte-identical across two runs", fa.len());
    }

    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
