mod common;

use mmla_core::fixture::{demo_files, DemoOptions};

/// The committed bundle is exactly what the generator produces.
#[test]
fn bundled_demo_matches_generator() {
    let root = common::demo_manifest().parent().unwrap().to_path_buf();
    let files = demo_files(&DemoOptions::default());
    for (rel, bytes) in &files {
        let on_disk = std::fs::read(root.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"));
        assert!(on_disk == *bytes, "{rel} differs from the generator; rerun `mmla demo crates/service/fixtures/demo`");
    }
    let mut count = 0;
    let mut stack = vec![root];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                count += 1;
            }
        }
    }
    assert_eq!(count, files.len(), "stray files in the fixture directory");
}
