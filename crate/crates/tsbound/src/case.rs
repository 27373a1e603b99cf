//! Plain-text case files.
//!
//! ```text
//! # comment
//! [system]
//! base_mva = 100
//! freq_hz = 60
//! load_model = impedance     # optional, the only supported model
//!
//! [bus]
//! # id  type   v_set  p_load  q_load
//! 1     slack  1.04   0       0
//!
//! [branch]
//! # from  to  r  x  b
//!
//! [gen]
//! # bus  p_mech  m  d  xd_prime
//! ```
//!
//! Quantities are per unit on the system base. `m = 2H` and `d` share the
//! same time base. `type` is one of `slack`, `pv`, `pq`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use thiserror::Error;
use tsbound_core::netmodel::{Branch, Bus, BusKind, Generator, PowerNetwork, SystemBase};

/// Name accepted by [`load_case`] for the bundled WSCC 9-bus system.
pub const IEEE9_NAME: &str = "ieee9";
pub const IEEE9: &str = include_str!("../cases/ieee9.case");

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("line {line}: field `{field}`: {message}")]
    Field { line: usize, field: &'static str, message: String },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("line {line}: duplicate bus id {id}")]
    DuplicateBus { line: usize, id: usize },
    #[error("line {line}: field `{field}`: unknown bus {bus}")]
    UnknownBus { line: usize, field: &'static str, bus: usize },
    #[error("no slack bus in [bus]")]
    MissingSlack,
    #[error("missing `{0}` in [system]")]
    MissingSystemKey(&'static str),
    #[error(transparent)]
    Network(#[from] tsbound_core::Error),
    #[error("cannot read case file {}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    System,
    Bus,
    Branch,
    Gen,
}

struct Row<'a> {
    line: usize,
    fields: Vec<&'a str>,
}

impl<'a> Row<'a> {
    fn expect_len(&self, names: &[&'static str]) -> Result<(), CaseError> {
        if self.fields.len() != names.len() {
            return Err(CaseError::Line {
                line: self.line,
                message: format!("expected {} fields ({}), found {}", names.len(), names.join(" "), self.fields.len()),
            });
        }
        Ok(())
    }

    fn id(&self, k: usize, field: &'static str) -> Result<usize, CaseError> {
        self.fields[k].parse().map_err(|_| CaseError::Field {
            line: self.line,
            field,
            message: format!("expected a non-negative integer, found `{}`", self.fields[k]),
        })
    }

    fn num(&self, k: usize, field: &'static str) -> Result<f64, CaseError> {
        parse_num(self.fields[k], self.line, field)
    }
}

fn parse_num(s: &str, line: usize, field: &'static str) -> Result<f64, CaseError> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CaseError::Field { line, field, message: format!("expected a finite number, found `{s}`") }),
    }
}

/// Parses and validates a case file.
pub fn parse_case(text: &str) -> Result<PowerNetwork, CaseError> {
    let mut section = Section::None;
    let mut base_mva = None;
    let mut freq_hz = None;
    let mut buses = Vec::new();
    let mut bus_ids = HashSet::new();
    let mut branches = Vec::new();
    let mut gens = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = match name.trim().to_ascii_lowercase().as_str() {
                "system" => Section::System,
                "bus" => Section::Bus,
                "branch" => Section::Branch,
                "gen" => Section::Gen,
                other => return Err(CaseError::Line { line, message: format!("unknown section [{other}]") }),
            };
            continue;
        }
        if section == Section::System {
            let Some((key, value)) = content.split_once('=') else {
                return Err(CaseError::Line { line, message: "expected `key = value`".into() });
            };
            let value = value.trim();
            match key.trim() {
                "base_mva" => base_mva = Some(parse_num(value, line, "base_mva")?),
                "freq_hz" => freq_hz = Some(parse_num(value, line, "freq_hz")?),
                "load_model" if value.eq_ignore_ascii_case("impedance") => {}
                "load_model" => {
                    return Err(CaseError::Field {
                        line,
                        field: "load_model",
                        message: format!("only `impedance` loads are supported, found `{value}`"),
                    })
                }
                other => return Err(CaseError::Line { line, message: format!("unknown [system] key `{other}`") }),
            }
            continue;
        }
        let row = Row { line, fields: content.split_whitespace().collect() };
        match section {
            Section::None => {
                return Err(CaseError::Line { line, message: "data before the first section header".into() })
            }
            Section::System => unreachable!(),
            Section::Bus => {
                row.expect_len(&["id", "type", "v_set", "p_load", "q_load"])?;
                let id = row.id(0, "id")?;
                let kind = match row.fields[1].to_ascii_lowercase().as_str() {
                    "slack" => BusKind::Slack,
                    "pv" => BusKind::Pv,
                    "pq" => BusKind::Pq,
                    other => {
                        return Err(CaseError::Field {
                            line,
                            field: "type",
                            message: format!("expected slack, pv or pq, found `{other}`"),
                        })
                    }
                };
                if !bus_ids.insert(id) {
                    return Err(CaseError::DuplicateBus { line, id });
                }
                buses.push(Bus {
                    id,
                    kind,
                    v_set: row.num(2, "v_set")?,
                    p_load: row.num(3, "p_load")?,
                    q_load: row.num(4, "q_load")?,
                });
            }
            Section::Branch => {
                row.expect_len(&["from", "to", "r", "x", "b"])?;
                let br = Branch {
                    from: row.id(0, "from")?,
                    to: row.id(1, "to")?,
                    r: row.num(2, "r")?,
                    x: row.num(3, "x")?,
                    b: row.num(4, "b")?,
                };
                branches.push((line, br));
            }
            Section::Gen => {
                row.expect_len(&["bus", "p_mech", "m", "d", "xd_prime"])?;
                let g = Generator {
                    bus: row.id(0, "bus")?,
                    p_mech: row.num(1, "p_mech")?,
                    m: row.num(2, "m")?,
                    d: row.num(3, "d")?,
                    xd_prime: row.num(4, "xd_prime")?,
                };
                if !(g.m > 0.0) {
                    return Err(CaseError::Field { line, field: "m", message: format!("must be positive, found {}", g.m) });
                }
                if !(g.xd_prime > 0.0) {
                    return Err(CaseError::Field {
                        line,
                        field: "xd_prime",
                        message: format!("must be positive, found {}", g.xd_prime),
                    });
                }
                gens.push((line, g));
            }
        }
    }

    // references are checked once every bus is known, so sections may come in any order
    for (line, br) in &branches {
        for (field, bus) in [("from", br.from), ("to", br.to)] {
            if !bus_ids.contains(&bus) {
                return Err(CaseError::UnknownBus { line: *line, field, bus });
            }
        }
    }
    for (line, g) in &gens {
        if !bus_ids.contains(&g.bus) {
            return Err(CaseError::UnknownBus { line: *line, field: "bus", bus: g.bus });
        }
    }
    if !buses.iter().any(|b| b.kind == BusKind::Slack) {
        return Err(CaseError::MissingSlack);
    }
    let system = SystemBase {
        base_mva: base_mva.ok_or(CaseError::MissingSystemKey("base_mva"))?,
        freq_hz: freq_hz.ok_or(CaseError::MissingSystemKey("freq_hz"))?,
    };
    let net = PowerNetwork::new(
        system,
        buses,
        branches.into_iter().map(|(_, b)| b).collect(),
        gens.into_iter().map(|(_, g)| g).collect(),
    )?;
    Ok(net)
}

/// Loads a case by path, or the bundled 9-bus system by its name.
pub fn load_case(spec: &str) -> Result<PowerNetwork, CaseError> {
    if spec == IEEE9_NAME {
        return parse_case(IEEE9);
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(|source| CaseError::Io { path: path.to_path_buf(), source })?;
    parse_case(&text)
}
