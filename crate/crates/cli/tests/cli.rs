use std::fs;
use std::path::Path;
use std::process::Command;

fn mtsph(args: &[&str], cwd: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mtsph"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

const SHORT_NECKING: &str = "scenario = \"necking_2d\"\npreset = \"desk\"\nouter_steps = 4\nend_time = 0.4\nmin_inner = 5\n";

#[test]
fn run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("short.toml"), SHORT_NECKING).unwrap();
    let out = mtsph(
        &["run", "short.toml", "--snapshots", "2", "--quiet"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run_dir = dir.path().join("out").join("short");
    let csv = fs::read_to_string(run_dir.join("timeseries.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5);
    let manifest: serde_like::Manifest =
        serde_like::parse(&fs::read_to_string(run_dir.join("manifest.json")).unwrap());
    assert_eq!(manifest.status, "ok");
    assert_eq!(manifest.outer_steps, 4);
    for step in [0, 2, 4] {
        assert!(run_dir
            .join("snapshots")
            .join(format!("step_{step:06}.vtk"))
            .exists());
    }
}

#[test]
fn unknown_key_fails_with_its_name() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("typo.toml"),
        "scenario = \"necking_2d\"\netta = 1e3\n",
    )
    .unwrap();
    let out = mtsph(&["run", "typo.toml"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("etta"));
    let out = mtsph(&["check", "typo.toml"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn defaults_are_a_loadable_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = mtsph(&["defaults", "fsi_3d", "--preset", "coarse"], dir.path());
    assert!(out.status.success());
    fs::write(dir.path().join("d.toml"), &out.stdout).unwrap();
    let out = mtsph(&["check", "d.toml"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("3D"));
}

#[test]
fn failed_run_still_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    // a 40 mm grip jump in one outer step inverts elements near the grips
    fs::write(
        dir.path().join("bad.toml"),
        "scenario = \"necking_2d\"\npreset = \"desk\"\ntotal_stretch = 0.2\nouter_steps = 2\nmin_inner = 5\nmax_inner = 10\n",
    )
    .unwrap();
    let out = mtsph(&["run", "bad.toml", "--quiet"], dir.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("element inversion"), "{stderr}");
    let manifest =
        fs::read_to_string(dir.path().join("out").join("bad").join("manifest.json")).unwrap();
    assert_eq!(serde_like::parse(&manifest).status, "failed");
    assert!(
        manifest.contains("\"error\": \"element inversion"),
        "{manifest}"
    );
}

mod serde_like {
    pub struct Manifest {
        pub status: String,
        pub outer_steps: u64,
    }

    fn field<'a>(text: &'a str, key: &str) -> &'a str {
        let start = text.find(&format!("\"{key}\": ")).expect(key) + key.len() + 4;
        let rest = &text[start..];
        rest[..rest.find([',', '\n']).unwrap()].trim()
    }

    pub fn parse(text: &str) -> Manifest {
        Manifest {
            status: field(text, "status").trim_matches('"').to_owned(),
            outer_steps: field(text, "outer_steps").parse().unwrap(),
        }
    }
}
