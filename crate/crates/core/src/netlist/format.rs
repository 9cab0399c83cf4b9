//! Line-oriented netlist text format.
//!
//! ```text
//! # comment
//! <kind> <label> <node+> <node-> [<node2+> <node2->] <param>[suffix]... [key=value...]
//! PROBE <label> V(<node>) | I(<element>) | VD(<node+>,<node->)
//! ```
//!
//! Kinds and their parameters, in positional order (each may also be given as
//! `key=value`):
//!
//! | kind | parameters                                   |
//! |------|----------------------------------------------|
//! | `R`  | `r`                                          |
//! | `L`  | `l`                                          |
//! | `C`  | `c`, `ic` (default 0)                        |
//! | `VS` | `amp`, `freq`, `phase` (radians, default 0)  |
//! | `SW` | `tclose`, `topen` (optional)                 |
//! | `D`  | `ron` (1m), `goff` (1n), `vf` (0)            |
//! | `XF` | `ratio`                                      |
//!
//! Numbers accept the suffixes `p n u m k M G`. Dimensionless fields (`phase`,
//! `ratio`) reject suffixes.

use crate::error::{Error, Result};
use crate::Scalar;

use super::{
    Element, ElementKind, Netlist, NodeRef, Probe, ProbeKind, DEFAULT_DIODE_GOFF, DEFAULT_DIODE_RON,
};

const SUFFIXES: [(char, i32); 8] = [
    ('p', -12),
    ('n', -9),
    ('u', -6),
    ('µ', -6),
    ('m', -3),
    ('k', 3),
    ('M', 6),
    ('G', 9),
];

#[derive(Clone, Copy)]
struct Field {
    key: &'static str,
    dimensioned: bool,
    default: Option<f64>,
}

const fn req(key: &'static str) -> Field {
    Field {
        key,
        dimensioned: true,
        default: None,
    }
}

const fn opt(key: &'static str, default: f64) -> Field {
    Field {
        key,
        dimensioned: true,
        default: Some(default),
    }
}

fn fields(tag: &str) -> Option<(usize, &'static [Field])> {
    const R: &[Field] = &[req("r")];
    const L: &[Field] = &[req("l")];
    const C: &[Field] = &[req("c"), opt("ic", 0.0)];
    const VS: &[Field] = &[
        req("amp"),
        req("freq"),
        Field {
            key: "phase",
            dimensioned: false,
            default: Some(0.0),
        },
    ];
    // `topen` is optional with no default; NaN marks "absent".
    const SW: &[Field] = &[req("tclose"), opt("topen", f64::NAN)];
    const D: &[Field] = &[
        opt("ron", DEFAULT_DIODE_RON),
        opt("goff", DEFAULT_DIODE_GOFF),
        opt("vf", 0.0),
    ];
    const XF: &[Field] = &[Field {
        key: "ratio",
        dimensioned: false,
        default: None,
    }];
    Some(match tag {
        "R" => (2, R),
        "L" => (2, L),
        "C" => (2, C),
        "VS" => (2, VS),
        "SW" => (2, SW),
        "D" => (2, D),
        "XF" => (4, XF),
        _ => return None,
    })
}

/// Parse a number with an optional engineering suffix.
///
/// Returns the value and whether a suffix was present.
pub fn parse_si<S: Scalar>(literal: &str) -> Option<(S, bool)> {
    let last = literal.chars().last()?;
    if let Some(&(_, exp)) = SUFFIXES.iter().find(|(c, _)| *c == last) {
        let mantissa = &literal[..literal.len() - last.len_utf8()];
        if mantissa.is_empty() || mantissa.contains(['e', 'E']) {
            return None;
        }
        // Re-parse as a decimal exponent so the result is correctly rounded.
        let v = format!("{mantissa}e{exp}").parse::<S>().ok()?;
        return Some((v, true));
    }
    literal.parse::<S>().ok().map(|v| (v, false))
}

/// Shortest engineering-notation literal that parses back to exactly `value`.
pub fn format_si<S: Scalar>(value: S) -> String {
    if value == S::zero() {
        return "0".to_string();
    }
    let sci = format!("{value:e}");
    let (mantissa, exp) = sci.split_once('e').expect("LowerExp output has exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let eng = exp.div_euclid(3) * 3;
    let suffix = match eng {
        -12 => "p",
        -9 => "n",
        -6 => "u",
        -3 => "m",
        0 => "",
        3 => "k",
        6 => "M",
        9 => "G",
        _ => return sci,
    };
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let mut all: String = format!("{int}{frac}");
    let point = int.len() + (exp - eng) as usize;
    while all.len() < point {
        all.push('0');
    }
    let (whole, rest) = all.split_at(point);
    let rest = rest.trim_end_matches('0');
    if rest.is_empty() {
        format!("{sign}{whole}{suffix}")
    } else {
        format!("{sign}{whole}.{rest}{suffix}")
    }
}

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_node(line: usize, token: &str) -> Result<NodeRef> {
    token
        .parse::<usize>()
        .map(NodeRef)
        .map_err(|_| syntax(line, format!("expected node index, found `{token}`")))
}

fn parse_probe(line: usize, tokens: &[&str]) -> Result<Probe> {
    let [label, target] = tokens else {
        return Err(syntax(line, "PROBE expects `<label> <target>`"));
    };
    let inner = |prefix: &str| {
        target
            .strip_prefix(prefix)
            .and_then(|t| t.strip_suffix(')'))
    };
    let kind = if let Some(n) = inner("V(") {
        ProbeKind::NodeVoltage(parse_node(line, n)?)
    } else if let Some(e) = inner("I(") {
        if e.is_empty() {
            return Err(syntax(line, "empty element label in I()"));
        }
        ProbeKind::BranchCurrent(e.to_string())
    } else if let Some(pair) = inner("VD(") {
        let (a, b) = pair
            .split_once(',')
            .ok_or_else(|| syntax(line, "VD() expects two nodes"))?;
        ProbeKind::Differential(parse_node(line, a.trim())?, parse_node(line, b.trim())?)
    } else {
        return Err(syntax(
            line,
            format!("unrecognised probe target `{target}`"),
        ));
    };
    Ok(Probe {
        label: label.to_string(),
        kind,
    })
}

fn parse_element<S: Scalar>(line: usize, tag: &str, tokens: &[&str]) -> Result<Element<S>> {
    let (n_nodes, spec) = fields(tag).ok_or_else(|| Error::UnknownKind {
        line,
        kind: tag.to_string(),
    })?;
    if tokens.len() < 1 + n_nodes {
        return Err(syntax(
            line,
            format!("`{tag}` needs a label and {n_nodes} nodes"),
        ));
    }
    let label = tokens[0].to_string();
    let nodes = tokens[1..=n_nodes]
        .iter()
        .map(|t| parse_node(line, t))
        .collect::<Result<Vec<_>>>()?;

    let mut values: Vec<Option<S>> = vec![None; spec.len()];
    let mut positional = 0;
    for token in &tokens[1 + n_nodes..] {
        let (index, literal) = match token.split_once('=') {
            Some((key, literal)) => {
                let index = spec
                    .iter()
                    .position(|f| f.key.eq_ignore_ascii_case(key))
                    .ok_or_else(|| syntax(line, format!("`{tag}` has no parameter `{key}`")))?;
                (index, literal)
            }
            None => {
                if positional >= spec.len() {
                    return Err(syntax(line, format!("too many parameters for `{tag}`")));
                }
                positional += 1;
                (positional - 1, *token)
            }
        };
        if values[index].is_some() {
            return Err(syntax(
                line,
                format!("parameter `{}` given twice", spec[index].key),
            ));
        }
        let (value, suffixed) = parse_si::<S>(literal)
            .ok_or_else(|| syntax(line, format!("bad number `{literal}`")))?;
        if suffixed && !spec[index].dimensioned {
            return Err(Error::SuffixOnDimensionless {
                line,
                field: spec[index].key.to_string(),
                literal: literal.to_string(),
            });
        }
        values[index] = Some(value);
    }

    let mut resolved = Vec::with_capacity(spec.len());
    for (field, value) in spec.iter().zip(values) {
        match (value, field.default) {
            (Some(v), _) => resolved.push(v),
            (None, Some(d)) => resolved.push(S::lit(d)),
            (None, None) => {
                return Err(syntax(
                    line,
                    format!("missing parameter `{}` for `{tag}`", field.key),
                ))
            }
        }
    }

    let v = |i: usize| resolved[i];
    let kind = match tag {
        "R" => ElementKind::Resistor { ohms: v(0) },
        "L" => ElementKind::Inductor { henries: v(0) },
        "C" => ElementKind::Capacitor {
            farads: v(0),
            initial_voltage: v(1),
        },
        "VS" => ElementKind::SineSource {
            amplitude: v(0),
            frequency: v(1),
            phase: v(2),
        },
        "SW" => ElementKind::TimedSwitch {
            close_time: v(0),
            open_time: (!v(1).is_nan()).then(|| v(1)),
        },
        "D" => ElementKind::Diode {
            on_resistance: v(0),
            off_conductance: v(1),
            forward_drop: v(2),
        },
        "XF" => ElementKind::Transformer {
            ratio: v(0),
            secondary: (nodes[2], nodes[3]),
        },
        _ => unreachable!("tag checked by fields()"),
    };
    Ok(Element {
        label,
        pos: nodes[0],
        neg: nodes[1],
        kind,
    })
}

/// Parse the netlist text format. Errors carry 1-based line numbers.
pub fn parse_netlist<S: Scalar>(text: &str) -> Result<Netlist<S>> {
    let mut netlist = Netlist::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let tag = tokens[0].to_ascii_uppercase();
        if tag == "PROBE" {
            netlist.add_probe(parse_probe(line, &tokens[1..])?);
        } else {
            netlist.push(parse_element(line, &tag, &tokens[1..])?);
        }
    }
    Ok(netlist)
}

/// Canonical text form: one element per line in list order, then probes.
pub fn serialize_netlist<S: Scalar>(netlist: &Netlist<S>) -> String {
    let mut out = String::new();
    for e in &netlist.elements {
        let mut parts = vec![
            e.kind.tag().to_string(),
            e.label.clone(),
            e.pos.to_string(),
            e.neg.to_string(),
        ];
        match &e.kind {
            ElementKind::Resistor { ohms } => parts.push(format_si(*ohms)),
            ElementKind::Inductor { henries } => parts.push(format_si(*henries)),
            ElementKind::Capacitor {
                farads,
                initial_voltage,
            } => {
                parts.push(format_si(*farads));
                parts.push(format!("ic={}", format_si(*initial_voltage)));
            }
            ElementKind::SineSource {
                amplitude,
                frequency,
                phase,
            } => {
                parts.push(format_si(*amplitude));
                parts.push(format_si(*frequency));
                parts.push(format!("{phase}"));
            }
            ElementKind::TimedSwitch {
                close_time,
                open_time,
            } => {
                parts.push(format_si(*close_time));
                if let Some(t) = open_time {
                    parts.push(format_si(*t));
                }
            }
            ElementKind::Diode {
                on_resistance,
                off_conductance,
                forward_drop,
            } => {
                parts.push(format!("ron={}", format_si(*on_resistance)));
                parts.push(format!("goff={}", format_si(*off_conductance)));
                parts.push(format!("vf={}", format_si(*forward_drop)));
            }
            ElementKind::Transformer { ratio, secondary } => {
                parts.push(secondary.0.to_string());
                parts.push(secondary.1.to_string());
                parts.push(format!("{ratio}"));
            }
        }
        out.push_str(&parts.join(" "));
        out.push('\n');
    }
    for p in &netlist.probes {
        let target = match &p.kind {
            ProbeKind::NodeVoltage(n) => format!("V({n})"),
            ProbeKind::BranchCurrent(e) => format!("I({e})"),
            ProbeKind::Differential(a, b) => format!("VD({a},{b})"),
        };
        out.push_str(&format!("PROBE {} {}\n", p.label, target));
    }
    out
}
