//! Line-oriented `key = value` configuration files with `[section]` headers.
//!
//! ```text
//! [graph]
//! alpha = -1.5            # real, or "infinity"
//! edges = 3
//! defaults = free_infinite
//! [edge.1]
//! length = "inf"
//! potential = "well(-1.0, 0.0, 1.0) + poly(1.0, 2.0; 0.5, -0.25)"
//! [squeeze.1]
//! potential = "well(-1.0, 0.0, 1.0)"
//! [experiment]
//! lambdas = [0.02, 0.01]
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{Coupling, Edge, EdgeEnd, StarGraph};
use crate::potential::{EdgePotential, Segment};

/// Parsed configuration: the graph plus optional experiment inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub graph: StarGraph,
    /// Per-edge profiles `W_j` for squeeze experiments.
    pub squeeze: Option<Vec<EdgePotential>>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Experiment {
    pub lambdas: Option<Vec<f64>>,
    pub epsilons: Option<Vec<f64>>,
    pub kappa: Option<f64>,
    pub kappa0: Option<f64>,
    pub kappa_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Number(f64),
    Str(String),
    Word(String),
    List(Vec<f64>),
}

impl Value {
    fn describe(&self) -> &'static str {
        match self {
            Value::Number(_) => "number",
            Value::Str(_) => "string",
            Value::Word(_) => "word",
            Value::List(_) => "list",
        }
    }

    fn text(&self) -> Option<&str> {
        match self {
            Value::Str(s) | Value::Word(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug)]
struct Entry {
    line: usize,
    value: Value,
}

#[derive(Debug)]
struct Section {
    line: usize,
    entries: BTreeMap<String, Entry>,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn semantic(line: usize, message: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {message}"))
}

fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_str = !in_str,
            '#' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

fn is_key_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn parse_value(raw: &str, line: usize, column: usize) -> Result<Value> {
    let trimmed = raw.trim();
    let col = column + (raw.len() - raw.trim_start().len());
    if trimmed.is_empty() {
        return Err(syntax(line, col, "missing value"));
    }
    if let Some(rest) = trimmed.strip_prefix('"') {
        return match rest.find('"') {
            Some(end) if end + 1 == rest.len() => Ok(Value::Str(rest[..end].to_string())),
            Some(end) => Err(syntax(line, col + end + 2, "unexpected text after string")),
            None => Err(syntax(line, col, "unterminated string")),
        };
    }
    if let Some(rest) = trimmed.strip_prefix('[') {
        let Some(body) = rest.strip_suffix(']') else {
            return Err(syntax(line, col, "unterminated list"));
        };
        let mut items = Vec::new();
        let mut offset = col + 1;
        for item in body.split(',') {
            let t = item.trim();
            if t.is_empty() && body.trim().is_empty() {
                break;
            }
            let x: f64 = t.parse().map_err(|_| {
                syntax(
                    line,
                    offset + (item.len() - item.trim_start().len()),
                    format!("invalid number `{t}` in list"),
                )
            })?;
            items.push(x);
            offset += item.len() + 1;
        }
        return Ok(Value::List(items));
    }
    if let Ok(x) = trimmed.parse::<f64>() {
        if x.is_finite() {
            return Ok(Value::Number(x));
        }
    }
    if trimmed.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) && trimmed.chars().all(is_key_char) {
        return Ok(Value::Word(trimmed.to_string()));
    }
    Err(syntax(line, col, format!("invalid value `{trimmed}`")))
}

fn lex(text: &str) -> Result<Vec<(String, Section)>> {
    let mut sections: Vec<(String, Section)> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw_line);
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(syntax(line, indent + 1, "unterminated section header"));
            };
            let name = name.trim();
            if name.is_empty() || !name.chars().all(|c| is_key_char(c) || c == '.') {
                return Err(syntax(line, indent + 2, format!("invalid section name `{name}`")));
            }
            if sections.iter().any(|(n, _)| n == name) {
                return Err(semantic(line, format!("duplicate section [{name}]")));
            }
            sections.push((
                name.to_string(),
                Section {
                    line,
                    entries: BTreeMap::new(),
                },
            ));
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(syntax(line, indent + 1, "expected `key = value` or `[section]`"));
        };
        let key = content[..eq].trim();
        if key.is_empty() || !key.chars().all(is_key_char) {
            return Err(syntax(line, indent + 1, format!("invalid key `{key}`")));
        }
        let value = parse_value(&content[eq + 1..], line, eq + 2)?;
        let Some((_, section)) = sections.last_mut() else {
            return Err(syntax(line, indent + 1, "key outside of any section"));
        };
        if section.entries.contains_key(key) {
            return Err(semantic(line, format!("duplicate key `{key}`")));
        }
        section.entries.insert(key.to_string(), Entry { line, value });
    }
    Ok(sections)
}

fn check_keys(section: &Section, name: &str, allowed: &[&str]) -> Result<()> {
    for (key, entry) in &section.entries {
        if !allowed.contains(&key.as_str()) {
            return Err(semantic(entry.line, format!("unknown key `{key}` in [{name}]")));
        }
    }
    Ok(())
}

fn number(entry: &Entry, key: &str) -> Result<f64> {
    match entry.value {
        Value::Number(x) => Ok(x),
        ref other => Err(semantic(
            entry.line,
            format!("`{key}` must be a number, got a {}", other.describe()),
        )),
    }
}

fn number_list(entry: &Entry, key: &str) -> Result<Vec<f64>> {
    match &entry.value {
        Value::List(xs) => Ok(xs.clone()),
        Value::Number(x) => Ok(vec![*x]),
        other => Err(semantic(
            entry.line,
            format!("`{key}` must be a list of numbers, got a {}", other.describe()),
        )),
    }
}

fn potential_entry(entry: &Entry) -> Result<EdgePotential> {
    let text = entry
        .value
        .text()
        .ok_or_else(|| semantic(entry.line, "`potential` must be a string"))?;
    parse_potential(text).map_err(|e| match e {
        Error::Potential(m) | Error::Config(m) => semantic(entry.line, m),
        other => other,
    })
}

/// Index `j` of a `[prefix.j]` section (1-based in the file).
fn section_index(name: &str, prefix: &str, line: usize, edges: usize) -> Result<Option<usize>> {
    let Some(rest) = name.strip_prefix(prefix) else {
        return Ok(None);
    };
    let j: usize = rest
        .parse()
        .map_err(|_| semantic(line, format!("invalid edge index in [{name}]")))?;
    if j == 0 || j > edges {
        return Err(semantic(
            line,
            format!("[{name}] refers to edge {j}, graph has {edges} edges"),
        ));
    }
    Ok(Some(j - 1))
}

/// Parse a configuration file.
pub fn parse_config(text: &str) -> Result<Config> {
    let sections = lex(text)?;
    let Some((_, graph_sec)) = sections.iter().find(|(n, _)| n == "graph") else {
        return Err(Error::Config("missing [graph] section".into()));
    };
    check_keys(graph_sec, "graph", &["alpha", "edges", "defaults"])?;
    let alpha_entry = graph_sec
        .entries
        .get("alpha")
        .ok_or_else(|| semantic(graph_sec.line, "[graph] requires `alpha`"))?;
    let coupling = match &alpha_entry.value {
        Value::Number(a) => Coupling::Delta(*a),
        v if matches!(v.text(), Some("infinity" | "inf")) => Coupling::Dirichlet,
        other => {
            return Err(semantic(
                alpha_entry.line,
                format!("`alpha` must be a number or \"infinity\", got a {}", other.describe()),
            ))
        }
    };
    let edges_entry = graph_sec
        .entries
        .get("edges")
        .ok_or_else(|| semantic(graph_sec.line, "[graph] requires `edges`"))?;
    let n = number(edges_entry, "edges")?;
    if n.fract() != 0.0 || n < 0.0 {
        return Err(semantic(edges_entry.line, "`edges` must be a nonnegative integer"));
    }
    let n = n as usize;
    if n < 2 {
        return Err(semantic(edges_entry.line, format!("need at least 2 edges, got {n}")));
    }
    let free_defaults = match graph_sec.entries.get("defaults") {
        None => false,
        Some(e) if e.value.text() == Some("free_infinite") => true,
        Some(e) => return Err(semantic(e.line, "`defaults` only accepts free_infinite")),
    };

    let mut edges: Vec<Option<Edge>> = vec![None; n];
    let mut squeeze: Vec<Option<EdgePotential>> = vec![None; n];
    let mut experiment = Experiment::default();
    for (name, sec) in &sections {
        if name == "graph" {
            continue;
        }
        if let Some(j) = section_index(name, "edge.", sec.line, n)? {
            check_keys(sec, name, &["length", "omega", "potential"])?;
            edges[j] = Some(parse_edge(name, sec)?);
        } else if let Some(j) = section_index(name, "squeeze.", sec.line, n)? {
            check_keys(sec, name, &["potential"])?;
            let entry = sec
                .entries
                .get("potential")
                .ok_or_else(|| semantic(sec.line, format!("[{name}] requires `potential`")))?;
            squeeze[j] = Some(potential_entry(entry)?);
        } else if name == "experiment" {
            check_keys(sec, name, &["lambdas", "epsilons", "kappa", "kappa0", "kappa_max"])?;
            for (key, entry) in &sec.entries {
                match key.as_str() {
                    "lambdas" => experiment.lambdas = Some(number_list(entry, key)?),
                    "epsilons" => experiment.epsilons = Some(number_list(entry, key)?),
                    "kappa" => experiment.kappa = Some(number(entry, key)?),
                    "kappa0" => experiment.kappa0 = Some(number(entry, key)?),
                    "kappa_max" => experiment.kappa_max = Some(number(entry, key)?),
                    _ => unreachable!(),
                }
            }
        } else {
            return Err(semantic(sec.line, format!("unknown section [{name}]")));
        }
    }

    let edges = edges
        .into_iter()
        .enumerate()
        .map(|(j, e)| match e {
            Some(e) => Ok(e),
            None if free_defaults => Ok(Edge::free()),
            None => Err(Error::Config(format!(
                "missing section [edge.{}] (set `defaults = free_infinite` to default omitted edges)",
                j + 1
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    let graph = StarGraph::new(edges, coupling)?;
    let squeeze = if squeeze.iter().any(Option::is_some) {
        Some(squeeze.into_iter().map(Option::unwrap_or_default).collect())
    } else {
        None
    };
    Ok(Config {
        graph,
        squeeze,
        experiment,
    })
}

fn parse_edge(name: &str, sec: &Section) -> Result<Edge> {
    let potential = match sec.entries.get("potential") {
        Some(entry) => potential_entry(entry)?,
        None => EdgePotential::zero(),
    };
    let length = match sec.entries.get("length") {
        None => None,
        Some(entry) => match &entry.value {
            Value::Number(l) => Some((*l, entry.line)),
            v if matches!(v.text(), Some("inf" | "infinity")) => None,
            other => {
                return Err(semantic(
                    entry.line,
                    format!("`length` must be a number or \"inf\", got a {}", other.describe()),
                ))
            }
        },
    };
    let omega = sec.entries.get("omega");
    match (length, omega) {
        (None, None) => Ok(Edge::infinite(potential)),
        (None, Some(o)) => Err(semantic(o.line, format!("[{name}]: `omega` given for an infinite edge"))),
        (Some((_, line)), None) => Err(semantic(
            line,
            format!("[{name}]: finite edge requires `omega`"),
        )),
        (Some((l, line)), Some(o)) => {
            Edge::finite(l, number(o, "omega")?, potential).map_err(|e| match e {
                Error::Config(m) => semantic(line, m),
                other => other,
            })
        }
    }
}

/// Parse a potential expression: `zero`, `well(value, start, end)`,
/// `poly(start, end; c0, c1, ...)`, joined by `+` into a piecewise potential.
pub fn parse_potential(expr: &str) -> Result<EdgePotential> {
    let mut segments = Vec::new();
    let mut depth = 0i32;
    let mut term_start = 0;
    let bytes: Vec<char> = expr.chars().collect();
    let mut terms = Vec::new();
    for (i, &c) in bytes.iter().enumerate() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            '+' if depth == 0 => {
                terms.push(bytes[term_start..i].iter().collect::<String>());
                term_start = i + 1;
            }
            _ => {}
        }
        if depth < 0 {
            return Err(Error::Potential(format!("unbalanced `)` in `{expr}`")));
        }
    }
    if depth != 0 {
        return Err(Error::Potential(format!("unbalanced `(` in `{expr}`")));
    }
    terms.push(bytes[term_start..].iter().collect::<String>());
    for term in terms {
        if let Some(seg) = parse_term(term.trim())? {
            segments.push(seg);
        }
    }
    EdgePotential::from_segments(segments)
}

fn parse_numbers(list: &str, term: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Potential(format!("invalid number `{t}` in `{term}`")))
        })
        .collect()
}

fn parse_term(term: &str) -> Result<Option<Segment>> {
    if term == "zero" {
        return Ok(None);
    }
    let open = term
        .find('(')
        .ok_or_else(|| Error::Potential(format!("unknown potential term `{term}`")))?;
    let name = term[..open].trim();
    let body = term[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| Error::Potential(format!("expected `)` at the end of `{term}`")))?;
    match name {
        "well" => {
            let args = parse_numbers(body, term)?;
            if args.len() != 3 {
                return Err(Error::Potential(format!(
                    "well takes (value, start, end), got {} arguments",
                    args.len()
                )));
            }
            Segment::constant(args[0], args[1], args[2]).map(Some)
        }
        "poly" => {
            let (range, coeffs) = body
                .split_once(';')
                .ok_or_else(|| Error::Potential(format!("poly takes (start, end; c0, ...), got `{term}`")))?;
            let range = parse_numbers(range, term)?;
            if range.len() != 2 {
                return Err(Error::Potential(format!("poly range needs 2 numbers in `{term}`")));
            }
            Segment::new(range[0], range[1], parse_numbers(coeffs, term)?).map(Some)
        }
        other => Err(Error::Potential(format!("unknown potential term `{other}`"))),
    }
}

/// Inverse of [`parse_potential`]; numbers are written losslessly.
pub fn format_potential(v: &EdgePotential) -> String {
    if v.segments().is_empty() {
        return "zero".into();
    }
    let pieces: Vec<String> = v
        .segments()
        .iter()
        .map(|s| {
            if s.coeffs().len() == 1 {
                format!("well({:?}, {:?}, {:?})", s.coeffs()[0], s.start(), s.end())
            } else {
                let cs: Vec<String> = s.coeffs().iter().map(|c| format!("{c:?}")).collect();
                format!("poly({:?}, {:?}; {})", s.start(), s.end(), cs.join(", "))
            }
        })
        .collect();
    pieces.join(" + ")
}

fn write_list(out: &mut String, key: &str, xs: &[f64]) {
    let items: Vec<String> = xs.iter().map(|x| format!("{x:?}")).collect();
    let _ = writeln!(out, "{key} = [{}]", items.join(", "));
}

/// Serialize a configuration; `parse_config(&serialize_config(c)) == c`.
pub fn serialize_config(config: &Config) -> String {
    let mut out = String::new();
    let graph = &config.graph;
    out.push_str("[graph]\n");
    match graph.coupling() {
        Coupling::Delta(a) => {
            let _ = writeln!(out, "alpha = {a:?}");
        }
        Coupling::Dirichlet => out.push_str("alpha = \"infinity\"\n"),
    }
    let _ = writeln!(out, "edges = {}", graph.edge_count());
    for (j, edge) in graph.edges().iter().enumerate() {
        let _ = writeln!(out, "[edge.{}]", j + 1);
        match edge.end() {
            EdgeEnd::Infinite => out.push_str("length = \"inf\"\n"),
            EdgeEnd::Finite { length, omega } => {
                let _ = writeln!(out, "length = {length:?}");
                let _ = writeln!(out, "omega = {omega:?}");
            }
        }
        let _ = writeln!(out, "potential = \"{}\"", format_potential(edge.potential()));
    }
    if let Some(ws) = &config.squeeze {
        for (j, w) in ws.iter().enumerate() {
            let _ = writeln!(out, "[squeeze.{}]", j + 1);
            let _ = writeln!(out, "potential = \"{}\"", format_potential(w));
        }
    }
    let ex = &config.experiment;
    if *ex != Experiment::default() {
        out.push_str("[experiment]\n");
        if let Some(xs) = &ex.lambdas {
            write_list(&mut out, "lambdas", xs);
        }
        if let Some(xs) = &ex.epsilons {
            write_list(&mut out, "epsilons", xs);
        }
        for (key, v) in [("kappa", ex.kappa), ("kappa0", ex.kappa0), ("kappa_max", ex.kappa_max)] {
            if let Some(v) = v {
                let _ = writeln!(out, "{key} = {v:?}");
            }
        }
    }
    out
}

/// Serialize a bare graph (no experiment sections).
pub fn serialize_graph(graph: &StarGraph) -> String {
    serialize_config(&Config {
        graph: graph.clone(),
        squeeze: None,
        experiment: Experiment::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FREE3: &str = "\
[graph]
alpha = -1.5
edges = 3
[edge.1]
length = \"inf\"
potential = \"zero\"
[edge.2]
length = \"inf\"
potential = \"zero\"
[edge.3]
length = \"inf\"
potential = \"zero\"
";

    #[test]
    fn free_star() {
        let c = parse_config(FREE3).unwrap();
        assert_eq!(c.graph.edge_count(), 3);
        assert_eq!(c.graph.coupling(), Coupling::Delta(-1.5));
        assert!(c.graph.edges().iter().all(|e| e.is_infinite() && e.potential().is_zero()));
        assert_eq!(c.squeeze, None);
    }

    #[test]
    fn dirichlet_coupling() {
        let text = FREE3.replace("alpha = -1.5", "alpha = \"infinity\"");
        assert_eq!(parse_config(&text).unwrap().graph.coupling(), Coupling::Dirichlet);
        let text = FREE3.replace("alpha = -1.5", "alpha = infinity");
        assert_eq!(parse_config(&text).unwrap().graph.coupling(), Coupling::Dirichlet);
    }

    #[test]
    fn finite_edge_requires_omega() {
        let text = FREE3.replace("[edge.2]\nlength = \"inf\"", "[edge.2]\nlength = 2.0");
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("omega")), "{err}");
    }

    #[test]
    fn omega_on_infinite_edge_rejected() {
        let text = FREE3.replace("[edge.2]\nlength = \"inf\"", "[edge.2]\nlength = \"inf\"\nomega = 0.0");
        assert!(matches!(parse_config(&text), Err(Error::Config(_))));
    }

    #[test]
    fn defaults_fill_missing_edges() {
        let text = "[graph]\nalpha = 0\nedges = 4\ndefaults = free_infinite\n[edge.2]\npotential = \"well(-1.0, 0.0, 1.0)\"\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.graph.edge_count(), 4);
        assert_eq!(c.graph.edges()[1].potential().moment(0), -1.0);
        let strict = text.replace("defaults = free_infinite\n", "");
        assert!(parse_config(&strict).is_err());
    }

    #[test]
    fn semantic_errors() {
        let two = FREE3.replace("edges = 3", "edges = 1");
        assert!(matches!(parse_config(&two), Err(Error::Config(_))));
        let unknown = FREE3.replace("edges = 3", "edges = 3\ncolour = 2");
        assert!(matches!(parse_config(&unknown), Err(Error::Config(m)) if m.contains("colour")));
        let overlap = FREE3.replacen(
            "potential = \"zero\"",
            "potential = \"well(-1, 0, 2) + well(1, 1, 3)\"",
            1,
        );
        assert!(matches!(parse_config(&overlap), Err(Error::Config(m)) if m.contains("overlapping")));
    }

    #[test]
    fn syntax_error_position() {
        let text = "[graph]\nalpha = -1.5\nedges 3\n";
        match parse_config(text) {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (3, 1)),
            other => panic!("expected syntax error, got {other:?}"),
        }
        let text = "[graph]\nalpha = \"oops\n";
        assert!(matches!(parse_config(text), Err(Error::Syntax { line: 2, column: 9, .. })));
    }

    #[test]
    fn potential_expressions() {
        let v = parse_potential("well(-1.0, 0.0, 1.0) + poly(1.0, 2.0; 1, -0.5)").unwrap();
        assert_eq!(v.segments().len(), 2);
        assert_eq!(v.value(1.5), 1.0 - 0.75);
        assert!(parse_potential("zero").unwrap().is_zero());
        assert!(parse_potential("well(1, 2)").is_err());
        assert!(parse_potential("bump(1, 2, 3)").is_err());
    }

    #[test]
    fn experiment_section() {
        let text = format!("{FREE3}[experiment]\nlambdas = [0.02, 0.01]\nkappa = 0.5\n[squeeze.2]\npotential = \"well(-1.0, 0.0, 1.0)\"\n");
        let c = parse_config(&text).unwrap();
        assert_eq!(c.experiment.lambdas, Some(vec![0.02, 0.01]));
        assert_eq!(c.experiment.kappa, Some(0.5));
        let ws = c.squeeze.unwrap();
        assert!(ws[0].is_zero() && !ws[1].is_zero());
    }
}
