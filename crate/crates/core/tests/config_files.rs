use std::path::PathBuf;

use aslsim::ExperimentConfig;

fn repo_file(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

#[test]
fn shipped_config_is_the_default() {
    let cfg = ExperimentConfig::load(&repo_file("configs/default.toml"), &[]).unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
}

#[test]
fn bundled_profile_file_matches_embedded_copy() {
    let on_disk = std::fs::read_to_string(repo_file("crates/core/profiles/lenet12.toml")).unwrap();
    assert_eq!(on_disk, aslsim::ModelProfile::bundled_lenet_source());
}

#[test]
fn relative_profile_path_follows_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("p.toml"),
        aslsim::ModelProfile::bundled_lenet_source(),
    )
    .unwrap();
    let cfg_path = dir.path().join("c.toml");
    std::fs::write(&cfg_path, "[profile]\npath = \"p.toml\"\n").unwrap();
    let cfg = ExperimentConfig::load(&cfg_path, &[]).unwrap();
    assert_eq!(cfg.profile.path, Some(dir.path().join("p.toml")));
    assert_eq!(cfg.load_profile().unwrap().num_splits(), 12);
}
