#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_vesselid"));
    c.env("RUST_LOG", "warn");
    c
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn vesselid")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

pub struct Fixture {
    pub root: PathBuf,
    pub dataset: PathBuf,
    pub bundle: PathBuf,
}

/// A small generated dataset plus its template bundle, shared by the tests
/// of one binary.
pub fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let root = tempfile::tempdir().expect("tempdir").keep();
        let dataset = root.join("ds");
        let bundle = root.join("bundle");
        let o = run(&["gen-dataset", "--out", p(&dataset), "--frames", "60", "--seed", "3"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let o = run(&[
            "prepare-template",
            p(&dataset.join("templates/template1.png")),
            p(&dataset.join("templates/template2.png")),
            "--out",
            p(&bundle),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        Fixture { root, dataset, bundle }
    })
}
