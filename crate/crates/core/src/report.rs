//! Pass/fail records with measured values, as JSON and as an aligned text table.

use std::fmt;

use serde::{Deserialize, Serialize};

/// How a measured value is compared with its bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "==")]
    Eq,
}

impl Relation {
    pub fn holds(self, value: f64, bound: f64) -> bool {
        match self {
            Relation::Lt => value < bound,
            Relation::Le => value <= bound,
            Relation::Gt => value > bound,
            Relation::Eq => value == bound,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Gt => ">",
            Relation::Eq => "==",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(with = "lossy_f64")]
    pub value: f64,
    pub relation: Relation,
    #[serde(with = "lossy_f64")]
    pub bound: f64,
    pub pass: bool,
    /// False when the bound is only verified empirically, not guaranteed.
    #[serde(default = "yes")]
    pub certified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn yes() -> bool {
    true
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation,
            bound,
            pass: relation.holds(value, bound),
            certified: true,
            note: None,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Relation::Eq, 1.0)
    }

    pub fn failed(name: impl Into<String>, note: impl Into<String>) -> Self {
        let mut c = Self::new(name, f64::NAN, Relation::Lt, f64::NAN);
        c.pass = false;
        c.note = Some(note.into());
        c
    }

    /// Adds a note, after any existing one.
    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        let note = note.into();
        self.note = Some(match self.note.take() {
            Some(old) => format!("{old}; {note}"),
            None => note,
        });
        self
    }

    pub fn uncertified(mut self) -> Self {
        self.certified = false;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub title: String,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn new(title: impl Into<String>) -> Self {
        Self { title: title.into(), checks: Vec::new() }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, prefix: &str, other: VerificationReport) {
        for mut c in other.checks {
            c.name = format!("{prefix}{}", c.name);
            self.checks.push(c);
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Every check that is certified passes; uncertified ones are informational.
    pub fn certified_pass(&self) -> bool {
        self.checks.iter().filter(|c| c.certified).all(|c| c.pass)
    }

    pub fn failing(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_table(&self) -> String {
        self.to_string()
    }
}

fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "-".into()
    } else if x == 0.0 || (1e-3..1e6).contains(&x.abs()) {
        format!("{x:.6}")
    } else {
        format!("{x:.6e}")
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.title)?;
        let rows: Vec<[String; 5]> = self
            .checks
            .iter()
            .map(|c| {
                let status = match (c.pass, c.certified) {
                    (true, true) => "PASS",
                    (true, false) => "pass*",
                    (false, true) => "FAIL",
                    (false, false) => "fail*",
                };
                [
                    c.name.clone(),
                    fmt_num(c.value),
                    c.relation.symbol().to_string(),
                    fmt_num(c.bound),
                    match &c.note {
                        Some(n) => format!("{status}  {n}"),
                        None => status.to_string(),
                    },
                ]
            })
            .collect();
        let mut w = [0usize; 4];
        for r in &rows {
            for i in 0..4 {
                w[i] = w[i].max(r[i].len());
            }
        }
        for r in rows {
            writeln!(
                f,
                "  {:<w0$}  {:>w1$} {:<w2$} {:<w3$}  {}",
                r[0],
                r[1],
                r[2],
                r[3],
                r[4],
                w0 = w[0],
                w1 = w[1],
                w2 = w[2],
                w3 = w[3]
            )?;
        }
        Ok(())
    }
}

/// Non-finite floats are written as `null` and read back as NaN.
mod lossy_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_none()
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
        Null(()),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(match Option::<Repr>::deserialize(d)? {
            Some(Repr::Num(x)) => x,
            Some(Repr::Text(t)) if t == "inf" => f64::INFINITY,
            Some(Repr::Text(t)) if t == "-inf" => f64::NEG_INFINITY,
            _ => f64::NAN,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations_and_round_trip() {
        let mut r = VerificationReport::new("demo");
        r.push(Check::new("small", 1e-13, Relation::Lt, 1e-12));
        r.push(Check::new("sep", 0.0005, Relation::Gt, 0.001));
        r.push(Check::new("inf", f64::INFINITY, Relation::Lt, 1.0).uncertified());
        r.push(Check::failed("overflow", "strip evaluation overflowed"));
        assert!(!r.all_pass());
        assert_eq!(r.failing(), vec!["sep", "inf", "overflow"]);
        let s = serde_json::to_string(&r).unwrap();
        let back: VerificationReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back.checks[2].value, f64::INFINITY);
        assert!(back.checks[3].value.is_nan());
        assert_eq!(back.checks[..2], r.checks[..2]);
        let t = r.to_table();
        assert!(t.contains("FAIL") && t.contains("fail*"));
    }
}
