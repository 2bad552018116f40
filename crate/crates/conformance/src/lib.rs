//! Runner for the acceptance criteria of the `tsou` workspace.
//!
//! Each criterion fills a [`Report`] with individual checks. [`run_criteria`]
//! prints one PASS/FAIL line per criterion followed by its checks, and turns
//! the outcome into the process exit code. The criteria themselves live in
//! `tests/acceptance.rs`.

use std::process::ExitCode;
use std::time::Instant;

/// Checks and notes collected while evaluating one criterion.
#[derive(Debug, Default)]
pub struct Report {
    failed: bool,
    lines: Vec<String>,
}

impl Report {
    /// Records a check; a single failing check fails the criterion.
    pub fn check(&mut self, ok: bool, line: String) {
        self.failed |= !ok;
        self.lines.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    /// Records context that is not itself a check.
    pub fn note(&mut self, line: String) {
        self.lines.push(format!("     {line}"));
    }

    pub fn failed(&self) -> bool {
        self.failed
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }
}

/// Identifier, title and body of a criterion.
pub type Criterion = (&'static str, &'static str, fn(&mut Report));

/// Runs the criteria selected by `args` and reports the outcome.
///
/// Arguments starting with `AC` select criteria by id; with none, all run.
/// `--list` prints the ids in the format test runners expect and runs nothing.
pub fn run_criteria(criteria: &[Criterion], args: impl IntoIterator<Item = String>) -> ExitCode {
    let args: Vec<String> = args.into_iter().collect();
    if args.iter().any(|a| a == "--list") {
        for (id, _, _) in criteria {
            println!("{id}: test");
        }
        return ExitCode::SUCCESS;
    }
    let wanted: Vec<&String> = args.iter().filter(|a| a.starts_with("AC")).collect();
    let mut failures = Vec::new();
    for &(id, title, body) in criteria {
        if !wanted.is_empty() && !wanted.iter().any(|w| *w == id) {
            continue;
        }
        let start = Instant::now();
        let mut report = Report::default();
        body(&mut report);
        let verdict = if report.failed { "FAIL" } else { "PASS" };
        println!("{id} {verdict} {title} ({:.1}s)", start.elapsed().as_secs_f64());
        for line in &report.lines {
            println!("    {line}");
        }
        if report.failed {
            failures.push(id);
        }
    }
    if failures.is_empty() {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("failed: {}", failures.join(", "));
        ExitCode::FAILURE
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_failing_check_fails_the_report() {
        let mut r = Report::default();
        r.check(true, "a".into());
        r.note("context".into());
        assert!(!r.failed());
        r.check(false, "b".into());
        r.check(true, "c".into());
        assert!(r.failed());
        assert_eq!(r.lines().len(), 4);
        assert!(r.lines()[2].starts_with("FAIL b"));
    }

    #[test]
    fn selection_runs_only_named_criteria() {
        fn pass(r: &mut Report) {
            r.check(true, "fine".into());
        }
        fn fail(r: &mut Report) {
            r.check(false, "broken".into());
        }
        let criteria: [Criterion; 2] = [("AC1", "passes", pass), ("AC2", "fails", fail)];
        assert_eq!(run_criteria(&criteria, ["AC1".to_string()]), ExitCode::SUCCESS);
        assert_eq!(run_criteria(&criteria, Vec::new()), ExitCode::FAILURE);
        assert_eq!(run_criteria(&criteria, ["--list".to_string()]), ExitCode::SUCCESS);
    }
}
