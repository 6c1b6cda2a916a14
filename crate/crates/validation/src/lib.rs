//! Pass/fail bookkeeping for the acceptance run: one printed line per
//! criterion, a closing tally, and a process exit code.

use std::process::ExitCode;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug)]
pub struct Gate {
    verdicts: Vec<Verdict>,
    started: Instant,
    quiet: bool,
}

impl Default for Gate {
    fn default() -> Self {
        Self::new()
    }
}

impl Gate {
    pub fn new() -> Self {
        Self {
            verdicts: Vec::new(),
            started: Instant::now(),
            quiet: false,
        }
    }

    /// A gate that records without printing.
    pub fn silent() -> Self {
        Self {
            quiet: true,
            ..Self::new()
        }
    }

    pub fn section(&self, title: &str) {
        if !self.quiet {
            println!("\n== {title}");
        }
    }

    /// Records one criterion and prints its line. Returns `pass`.
    pub fn record(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) -> bool {
        let v = Verdict {
            name: name.into(),
            pass,
            detail: detail.into(),
        };
        if !self.quiet {
            println!("{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
        }
        self.verdicts.push(v);
        pass
    }

    /// Prints one component of a criterion. Returns `pass`.
    pub fn part(&self, label: impl AsRef<str>, pass: bool, detail: impl AsRef<str>) -> bool {
        if !self.quiet {
            println!("     [{}] {}: {}", if pass { " ok " } else { "FAIL" }, label.as_ref(), detail.as_ref());
        }
        pass
    }

    /// Diagnostic output that is not a criterion.
    pub fn note(&self, text: impl AsRef<str>) {
        if !self.quiet {
            println!("     note: {}", text.as_ref());
        }
    }

    pub fn verdicts(&self) -> &[Verdict] {
        &self.verdicts
    }

    pub fn failures(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.pass)
    }

    pub fn elapsed(&self) -> Duration {
        self.started.elapsed()
    }

    /// Prints the tally; failure if any criterion failed.
    pub fn finish(self) -> ExitCode {
        let failed: Vec<&Verdict> = self.failures().collect();
        if !self.quiet {
            println!(
                "\n{} of {} criteria passed in {:.0} s",
                self.verdicts.len() - failed.len(),
                self.verdicts.len(),
                self.elapsed().as_secs_f64()
            );
            for v in &failed {
                println!("  failed: {}", v.name);
            }
        }
        if failed.is_empty() {
            ExitCode::SUCCESS
        } else {
            ExitCode::FAILURE
        }
    }
}

/// Runs `f` and returns its value with the wall time it took.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

/// `true` when at least `need` of `flags` hold.
pub fn at_least(flags: &[bool], need: usize) -> bool {
    flags.iter().filter(|&&f| f).count() >= need
}
