//! PASS/FAIL bookkeeping for the acceptance suite.

use std::time::Instant;

/// One acceptance criterion, made of named checks.
pub struct Criterion {
    id: String,
    title: String,
    checks: Vec<bool>,
    started: Instant,
}

impl Criterion {
    pub fn new(id: impl Into<String>, title: impl Into<String>) -> Self {
        let c = Criterion {
            id: id.into(),
            title: title.into(),
            checks: Vec::new(),
            started: Instant::now(),
        };
        println!("criterion {}: {}", c.id, c.title);
        c
    }

    /// Records a check and prints it with its measured detail.
    pub fn check(&mut self, name: &str, pass: bool, detail: impl AsRef<str>) -> bool {
        let tag = if pass { "ok  " } else { "FAIL" };
        println!("    [{tag}] {name}: {}", detail.as_ref());
        self.checks.push(pass);
        pass
    }

    /// Records a computation that could not be carried out as a failed check.
    pub fn error(&mut self, name: &str, err: impl std::fmt::Display) {
        self.check(name, false, format!("error: {err}"));
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|p| *p)
    }
}

/// Collects criteria and prints the per-criterion verdicts.
#[derive(Default)]
pub struct Report {
    verdicts: Vec<(String, String, bool, usize, usize, f64)>,
}

impl Report {
    pub fn finish(&mut self, c: Criterion) {
        let failed = c.checks.iter().filter(|p| !**p).count();
        let secs = c.started.elapsed().as_secs_f64();
        let pass = c.passed();
        println!(
            "{} criterion {}: {} ({} of {} checks passed, {secs:.1} s)\n",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            c.checks.len() - failed,
            c.checks.len()
        );
        self.verdicts.push((c.id, c.title, pass, failed, c.checks.len(), secs));
    }

    /// Prints the summary table and returns whether every criterion passed.
    pub fn summary(&self) -> bool {
        println!("acceptance summary");
        for (id, title, pass, _, _, _) in &self.verdicts {
            println!("{} criterion {id}: {title}", if *pass { "PASS" } else { "FAIL" });
        }
        let failed = self.verdicts.iter().filter(|v| !v.2).count();
        println!("{} of {} criteria passed", self.verdicts.len() - failed, self.verdicts.len());
        failed == 0
    }
}
