use super::{BooleanNetwork, FaultMap, GateOp, GateSpec, Stimulus};
use crate::error::{Error, Result};

fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then(|| (i + 1, line.split_whitespace().collect()))
    })
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_bit(line: usize, tok: &str) -> Result<bool> {
    match tok {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(parse_err(line, format!("expected 0 or 1, got `{tok}`"))),
    }
}

fn parse_gate(line: usize, rest: &str) -> Result<GateSpec> {
    let (name, expr) = rest
        .split_once('=')
        .ok_or_else(|| parse_err(line, "expected `gate <name> = OP(<fanins>)`"))?;
    let name = name.trim();
    if name.is_empty() || name.contains(char::is_whitespace) {
        return Err(parse_err(line, format!("bad gate name `{name}`")));
    }
    let expr = expr.trim();
    let (op, args) = expr
        .strip_suffix(')')
        .and_then(|e| e.split_once('('))
        .ok_or_else(|| parse_err(line, format!("bad gate expression `{expr}`")))?;
    let op = match op.trim().to_ascii_uppercase().as_str() {
        "AND" => GateOp::And,
        "OR" => GateOp::Or,
        "NOT" => GateOp::Not,
        "BUF" => GateOp::Buf,
        other => return Err(parse_err(line, format!("unknown gate `{other}`"))),
    };
    let fanin = args
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect();
    Ok(GateSpec {
        name: name.to_string(),
        op,
        fanin,
    })
}

pub fn parse_netlist(text: &str) -> Result<BooleanNetwork> {
    let mut inputs = Vec::new();
    let mut gates = Vec::new();
    let mut outputs = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let no = no + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (kw, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match kw {
            "input" | "output" => {
                let mut toks = rest.split_whitespace();
                let name = toks
                    .next()
                    .ok_or_else(|| parse_err(no, format!("`{kw}` needs a node name")))?;
                if toks.next().is_some() {
                    return Err(parse_err(no, format!("trailing text after `{kw} {name}`")));
                }
                if kw == "input" { &mut inputs } else { &mut outputs }.push(name.to_string());
            }
            "gate" => gates.push(parse_gate(no, rest)?),
            other => return Err(parse_err(no, format!("unknown keyword `{other}`"))),
        }
    }
    if outputs.is_empty() {
        return Err(Error::Graph("netlist declares no outputs".into()));
    }
    BooleanNetwork::new(&inputs, &gates, &outputs)
}

/// Read `stuck <node> <0|1>` lines. Node names are checked against `net`.
pub fn parse_faults(text: &str, net: &BooleanNetwork) -> Result<FaultMap> {
    let mut fault = FaultMap::default();
    for (no, toks) in lines(text) {
        match toks.as_slice() {
            ["stuck", name, bit] => {
                net.node_id(name)?;
                fault.overrides.insert(name.to_string(), parse_bit(no, bit)?);
            }
            _ => return Err(parse_err(no, "expected `stuck <node> <0|1>`")),
        }
    }
    Ok(fault)
}

/// Read `set <input> <0|1>` and `drug <node>` lines.
pub fn parse_stimulus(text: &str, net: &BooleanNetwork) -> Result<Stimulus> {
    let mut stim = Stimulus::default();
    for (no, toks) in lines(text) {
        match toks.as_slice() {
            ["set", name, bit] => {
                net.node_id(name)?;
                stim.assignment.insert(name.to_string(), parse_bit(no, bit)?);
            }
            ["drug", name] => {
                net.node_id(name)?;
                stim.drugs.insert(name.to_string());
            }
            _ => return Err(parse_err(no, "expected `set <input> <0|1>` or `drug <node>`")),
        }
    }
    for input in net.inputs() {
        if !stim.assignment.contains_key(input) {
            return Err(Error::Reference(format!("stimulus does not set input `{input}`")));
        }
    }
    Ok(stim)
}
