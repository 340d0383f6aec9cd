//! The fixed CLI corpus under `tests/data` and its golden outputs under
//! `tests/golden`. Set `NERON_BLESS=1` to rewrite the golden files.

use std::path::PathBuf;
use std::process::Command;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl RunOutput {
    pub fn render(&self) -> String {
        format!("exit={}\n--- stdout\n{}--- stderr\n{}", self.code, self.stdout, self.stderr)
    }
}

/// Runs the built binary inside the data directory.
pub fn run<S: AsRef<str>>(args: &[S]) -> RunOutput {
    let out = Command::new(env!("CARGO_BIN_EXE_neron"))
        .args(args.iter().map(AsRef::as_ref))
        .current_dir(data_dir())
        .env("NO_COLOR", "1")
        .output()
        .expect("binary runs");
    RunOutput {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

/// Graph files of the corpus, sorted.
pub fn graph_files() -> Vec<String> {
    let mut files: Vec<String> = std::fs::read_dir(data_dir())
        .expect("data directory")
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".g"))
        .collect();
    files.sort();
    files
}

pub struct Case {
    pub name: String,
    pub args: Vec<String>,
}

fn case(name: &str, args: &[&str]) -> Case {
    Case { name: name.to_string(), args: args.iter().map(|s| s.to_string()).collect() }
}

/// One invocation per (command, input) pair of interest; every command is
/// covered, and every graph file goes through `check-align`.
pub fn invocations() -> Vec<Case> {
    let mut cases: Vec<Case> = graph_files()
        .iter()
        .map(|f| case(&format!("check_align_{}", f.trim_end_matches(".g")), &["check-align", f]))
        .collect();
    cases.extend([
        case("check_align_pretty", &["check-align", "--pretty", "triangle_ppq.g"]),
        case("neron_triangle_ppq", &["neron", "triangle_ppq.g"]),
        case("neron_banana_p_p3", &["neron", "banana_p_p3.g"]),
        case("neron_single_vertex", &["neron", "single_vertex.g"]),
        case("specialize_keep_q", &["specialize", "--keep", "q", "triangle_ppq.g"]),
        case("specialize_keep_p", &["specialize", "--keep", "p", "pq_zero.g"]),
        case("specialize_keep_none", &["specialize", "--keep", "", "triangle_ppq.g"]),
        case("specialize_keep_none_zero", &["specialize", "--keep", "", "pq_zero.g"]),
        case("specialize_three_primes", &["specialize", "--keep", "p,r", "three_primes.g"]),
        case("specialize_unknown_prime", &["specialize", "--keep", "z", "bridge.g"]),
        case("strata_3_1", &["strata", "--l", "3", "--r", "1"]),
        case("strata_4_0", &["strata", "--l", "4", "--r", "0"]),
        case("strata_2_5", &["strata", "--l", "2", "--r", "5"]),
        case("tcartier_yes", &["tcartier", "--trait", "p=1", "--labelling", "triangle_pp2.m", "triangle_pp2.g"]),
        case("tcartier_no", &["tcartier", "--trait", "p=1", "--labelling", "bridge.m", "bridge.g"]),
        case("tcartier_no_odd", &["tcartier", "--trait", "p=1", "--labelling", "triangle_pp2_bad.m", "triangle_pp2.g"]),
        case(
            "realize_triangle",
            &["realize", "--trait", "p=1", "--labelling", "triangle_pp2.m", "--base", "v3", "triangle_pp2.g"],
        ),
        case(
            "realize_obstructed",
            &["realize", "--trait", "p=1,q=1", "--labelling", "triangle_ppq.m", "--base", "v3", "triangle_ppq.g"],
        ),
        case(
            "realize_two_blocks",
            &["realize", "--trait", "p=1,q=1", "--labelling", "two_blocks.m", "--base", "w", "two_blocks.g"],
        ),
        case(
            "realize_base_nonzero",
            &["realize", "--trait", "p=1", "--labelling", "bridge.m", "--base", "v1", "bridge.g"],
        ),
        case(
            "decompose_triangle",
            &["decompose", "--trait", "p=1", "--labelling", "triangle_pp2.m", "--base", "v3", "triangle_pp2.g"],
        ),
        case(
            "decompose_banana",
            &["decompose", "--trait", "p=1", "--labelling", "banana_p_p3.m", "--base", "v2", "banana_p_p3.g"],
        ),
        case(
            "decompose_two_blocks",
            &["decompose", "--trait", "p=2,q=1", "--labelling", "two_blocks.m", "--base", "w", "two_blocks.g"],
        ),
        case(
            "decompose_not_aligned",
            &["decompose", "--trait", "p=1,q=1", "--labelling", "triangle_ppq.m", "--base", "v3", "triangle_ppq.g"],
        ),
        case("witness_triangle", &["witness", "--trait", "p=1,q=2", "triangle_ppq.g"]),
        case("witness_banana", &["witness", "--trait", "p=2,q=3", "banana_p_q.g"]),
        case("witness_k4", &["witness", "--trait", "p=2,q=1", "k4_mixed.g"]),
        case("witness_aligned", &["witness", "--trait", "p=1", "triangle_pp2.g"]),
        case("witness_zero", &["witness", "--trait", "p=1", "zero_cycle.g"]),
        case("witness_bad_trait", &["witness", "--trait", "p=1,q=0", "triangle_ppq.g"]),
        case("export_dot_bridge", &["export-dot", "bridge.g"]),
        case("export_dot_loop", &["export-dot", "loop.g"]),
        case("export_dot_annotated", &["export-dot", "--labelling", "triangle_pp2.m", "triangle_pp2.g"]),
        case("labelling_parse_error", &["tcartier", "--trait", "p=1", "--labelling", "bridge.m", "triangle_pp2.g"]),
    ]);
    cases
}

/// Commands run over the whole corpus with `--jobs 1` and `--jobs 4`.
pub fn batch_commands() -> Vec<Vec<String>> {
    [
        vec!["check-align"],
        vec!["neron"],
        vec!["export-dot"],
        vec!["specialize", "--keep", "p"],
        vec!["witness", "--trait", "p=1,q=2"],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect()
}

pub fn matches_golden(name: &str, out: &RunOutput) -> Result<(), String> {
    let path = golden_dir().join(format!("{name}.out"));
    let rendered = out.render();
    if std::env::var_os("NERON_BLESS").is_some() {
        std::fs::create_dir_all(golden_dir()).map_err(|e| e.to_string())?;
        std::fs::write(&path, &rendered).map_err(|e| e.to_string())?;
        return Ok(());
    }
    match std::fs::read_to_string(&path) {
        Ok(expected) if expected == rendered => Ok(()),
        Ok(_) => Err(format!("{name}: output differs from {}", path.display())),
        Err(_) => Err(format!("{name}: missing golden file {}", path.display())),
    }
}
