//! The text grammar for distributions.
//!
//! ```text
//! spec  := "file:" PATH | expr
//! expr  := "atom(" x ")" | "uniform(" a "," b ")" | "lognormal(" m "," s ")"
//!        | "gamma(" k "," theta ")" | "exp(" rate ")"
//!        | "mix(" w "*" expr { "," w "*" expr } ")"
//! ```
//!
//! Whitespace is allowed between tokens. Mixture weights must sum to 1
//! within 1e-9; nested mixtures are flattened. `file:` reads a sample file
//! and yields its empirical measure.

use std::path::Path;

use crate::error::{Error, Result};
use crate::estimators::{empirical, SampleSet};
use crate::measure::{Component, Distribution};

const MIX_WEIGHT_TOL: f64 = 1e-9;

/// Parses a distribution spec, reading the sample file for `file:` specs.
pub fn parse_distribution(text: &str) -> Result<Distribution> {
    let trimmed = text.trim();
    if let Some(path) = trimmed.strip_prefix("file:") {
        return empirical(&SampleSet::read_file(Path::new(path.trim()))?);
    }
    parse_expression(text)
}

/// Parses a parametric expression (no `file:` sources).
pub fn parse_expression(text: &str) -> Result<Distribution> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let parts = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Distribution::with_weight_tolerance(parts, MIX_WEIGHT_TOL).map_err(|e| match e {
        Error::Validation(msg) => Error::Parse { position: 0, message: msg },
        other => other,
    })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse { position: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected `{}`", c as char)))
        }
    }

    fn ident(&mut self) -> Result<&str> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a distribution name"));
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos]).expect("ascii"))
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let sign_after_exp =
                (c == b'+' || c == b'-') && (self.pos == start || matches!(self.src[self.pos - 1], b'e' | b'E'));
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || sign_after_exp {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map_err(|_| Error::Parse { position: start, message: "expected a number".into() })
    }

    fn args(&mut self, n: usize) -> Result<Vec<f64>> {
        self.expect(b'(')?;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            if i > 0 {
                self.expect(b',')?;
            }
            out.push(self.number()?);
        }
        self.expect(b')')?;
        Ok(out)
    }

    fn expr(&mut self) -> Result<Vec<(f64, Component)>> {
        self.skip_ws();
        let start = self.pos;
        let name = self.ident()?.to_ascii_lowercase();
        let component = match name.as_str() {
            "atom" => {
                let a = self.args(1)?;
                Component::Atom(a[0])
            }
            "uniform" => {
                let a = self.args(2)?;
                Component::Uniform { a: a[0], b: a[1] }
            }
            "lognormal" => {
                let a = self.args(2)?;
                Component::Lognormal { log_mean: a[0], log_sd: a[1] }
            }
            "gamma" => {
                let a = self.args(2)?;
                Component::Gamma { shape: a[0], scale: a[1] }
            }
            "exp" => {
                let a = self.args(1)?;
                Component::Exponential { rate: a[0] }
            }
            "mix" => return self.mix(),
            other => {
                return Err(Error::Parse { position: start, message: format!("unknown distribution `{other}`") });
            }
        };
        component.validate().map_err(|e| Error::Parse { position: start, message: e.to_string() })?;
        Ok(vec![(1.0, component)])
    }

    fn mix(&mut self) -> Result<Vec<(f64, Component)>> {
        self.expect(b'(')?;
        let mut parts = Vec::new();
        loop {
            self.skip_ws();
            let at = self.pos;
            let w = self.number()?;
            if !(w > 0.0 && w <= 1.0 + MIX_WEIGHT_TOL) {
                return Err(Error::Parse { position: at, message: format!("mixture weight {w} is outside (0,1]") });
            }
            self.expect(b'*')?;
            for (v, c) in self.expr()? {
                parts.push((w * v, c));
            }
            self.skip_ws();
            match self.src.get(self.pos) {
                Some(b',') => self.pos += 1,
                Some(b')') => {
                    self.pos += 1;
                    break;
                }
                _ => return Err(self.error("expected `,` or `)`")),
            }
        }
        let sum: f64 = parts.iter().map(|(w, _)| w).sum();
        if (sum - 1.0).abs() > MIX_WEIGHT_TOL {
            return Err(self.error(format!("mixture weights sum to {sum}, not 1")));
        }
        Ok(parts)
    }
}
