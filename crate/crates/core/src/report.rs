//! Plain-text reports: `key: value` lines with numbers rounded to 12
//! significant digits, followed by a `---` separator and wall-clock timings.
//! Everything above the separator is a pure function of the configuration.

use std::fmt;

use nalgebra::DMatrix;

use crate::config::Config;

pub const SEPARATOR: &str = "---";

/// A real in scientific notation with 12 significant digits.
pub fn num(x: f64) -> String {
    // fold −0 into 0 so equal values print equally
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

pub fn list(xs: &[f64]) -> String {
    xs.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    lines: Vec<String>,
    timings: Vec<String>,
}

impl Report {
    pub fn new(task: &str) -> Self {
        let mut r = Self::default();
        r.text("task", task);
        r
    }

    pub fn text(&mut self, key: &str, value: impl fmt::Display) {
        self.lines.push(format!("{key}: {value}"));
    }

    pub fn real(&mut self, key: &str, x: f64) {
        self.text(key, num(x));
    }

    pub fn reals(&mut self, key: &str, xs: &[f64]) {
        self.text(key, list(xs));
    }

    /// One `key[i]: …` line per row.
    pub fn matrix(&mut self, key: &str, m: &DMatrix<f64>) {
        for i in 0..m.nrows() {
            let row: Vec<f64> = m.row(i).iter().copied().collect();
            self.reals(&format!("{key}[{i}]"), &row);
        }
    }

    /// Embeds the effective configuration as `config.<key>` lines.
    pub fn config(&mut self, cfg: &Config) {
        for (k, v) in cfg.iter() {
            self.text(&format!("config.{k}"), v);
        }
    }

    pub fn timing(&mut self, key: &str, secs: f64) {
        self.timings.push(format!("{key}: {secs:.3}"));
    }

    /// The deterministic part, without timings.
    pub fn body(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.body())?;
        if !self.timings.is_empty() {
            writeln!(f, "{SEPARATOR}")?;
            for t in &self.timings {
                writeln!(f, "{t}")?;
            }
        }
        Ok(())
    }
}

/// The part of a rendered report above the timing separator.
pub fn body_of(text: &str) -> &str {
    match text.find(&format!("\n{SEPARATOR}\n")) {
        Some(i) => &text[..=i],
        None => text,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(1.0 / 6.0), "1.66666666667e-1");
        assert_eq!(num(-0.0), num(0.0));
        assert_eq!(num(-2.5e-7), "-2.50000000000e-7");
    }

    #[test]
    fn body_excludes_timings() {
        let mut r = Report::new("demo");
        r.real("x", 0.5);
        r.timing("elapsed_secs", 1.25);
        let text = r.to_string();
        assert!(text.contains("---\nelapsed_secs: 1.250"));
        assert_eq!(body_of(&text), r.body());
        assert_eq!(r.body(), "task: demo\nx: 5.00000000000e-1\n");
    }
}
