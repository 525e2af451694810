//! Sectioned plain-text scenario files.
//!
//! ```text
//! [scenario]
//! name = cubic-graph
//! projection = x y
//!
//! [chart]
//! coord = x -2.0 2.0
//!
//! [poisson]
//! entry = x y "1"
//!
//! [submanifold C]
//! define = "z - x^3"
//!
//! [check scan]
//! kind = clean-scan
//! submanifold = C
//! ```
//!
//! Expressions are double-quoted; multi-valued keys repeat. The chart must
//! come before any section holding expressions, and `params` before the
//! expressions that use them.

use std::fmt::Write as _;
use std::path::Path;

use super::model::*;
use crate::error::{Error, Result};
use crate::exprcore::ScalarField;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
}

fn tokenize(text: &str, line: usize) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    Some('\\') => match chars.next() {
                        Some(e) => s.push(e),
                        None => return Err(parse_err(line, "dangling escape")),
                    },
                    Some('"') => break,
                    Some(ch) => s.push(ch),
                    None => return Err(parse_err(line, "unterminated string")),
                }
            }
            out.push(Tok::Str(s));
        } else {
            let mut s = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() {
                    break;
                }
                s.push(ch);
                chars.next();
            }
            out.push(Tok::Word(s));
        }
    }
    Ok(out)
}

fn parse_err(line: usize, message: &str) -> Error {
    Error::ScenarioParse {
        line,
        message: message.to_string(),
    }
}

fn quote(s: &str) -> String {
    let mut q = String::from("\"");
    for c in s.chars() {
        if c == '"' || c == '\\' {
            q.push('\\');
        }
        q.push(c);
    }
    q.push('"');
    q
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Serializes a scenario; `load_str(save_str(s)) == s`.
pub fn save_str(s: &Scenario) -> String {
    let mut o = String::new();
    let w = &mut o;
    let _ = writeln!(w, "[scenario]");
    let _ = writeln!(w, "name = {}", s.name);
    let _ = writeln!(w, "description = {}", quote(&s.description));
    let _ = writeln!(w, "seed = {}", s.seed);
    let _ = writeln!(w, "grid = {}", s.grid);
    let _ = writeln!(w, "tol_rank = {}", num(s.tol_rank));
    let _ = writeln!(w, "projection = {} {}", s.projection.0, s.projection.1);
    let _ = writeln!(w, "\n[chart]");
    for a in &s.chart {
        let _ = writeln!(w, "coord = {} {} {}", a.name, num(a.lo), num(a.hi));
    }
    let _ = writeln!(w, "\n[poisson]");
    for e in &s.poisson {
        let _ = writeln!(w, "entry = {} {} {}", e.a, e.b, quote(&e.expr));
    }
    for m in &s.submanifolds {
        let _ = writeln!(w, "\n[submanifold {}]", m.name);
        for d in &m.define {
            let _ = writeln!(w, "define = {}", quote(d));
        }
    }
    for r in &s.regions {
        let _ = writeln!(w, "\n[region {}]", r.name);
        match &r.field {
            Some(f) => {
                let _ = writeln!(w, "member = {} {}", r.member, quote(f));
            }
            None => {
                let _ = writeln!(w, "member = {}", r.member);
            }
        }
        if let Some(k) = r.rank {
            let _ = writeln!(w, "rank = {k}");
        }
        for i in &r.invariants {
            let _ = writeln!(w, "invariant = {}", quote(i));
        }
    }
    for h in &s.hamiltonians {
        let _ = writeln!(w, "\n[hamiltonian {}]", h.name);
        if !h.params.is_empty() {
            let _ = writeln!(w, "params = {}", h.params.join(" "));
        }
        let _ = writeln!(w, "expr = {}", quote(&h.expr));
    }
    for m in &s.maps {
        let _ = writeln!(w, "\n[map {}]", m.name);
        if !m.params.is_empty() {
            let _ = writeln!(w, "params = {}", m.params.join(" "));
        }
        for c in &m.components {
            let _ = writeln!(w, "component = {}", quote(c));
        }
    }
    for f in &s.families {
        let _ = writeln!(w, "\n[family {}]", f.name);
        for c in &f.members {
            let _ = writeln!(w, "member = {}", quote(c));
        }
        for c in &f.limit {
            let _ = writeln!(w, "limit = {}", quote(c));
        }
        for i in &f.indices {
            let _ = writeln!(w, "index = {}", num(*i));
        }
        for (lo, hi) in &f.probe {
            let _ = writeln!(w, "probe = {} {}", num(*lo), num(*hi));
        }
        let _ = writeln!(w, "probe_nodes = {}", f.probe_nodes);
    }
    for h in &s.hameotopies {
        let _ = writeln!(w, "\n[hameotopy {}]", h.name);
        let _ = writeln!(w, "hamiltonian = {}", h.hamiltonian);
        if let Some(l) = &h.limit {
            let _ = writeln!(w, "limit = {l}");
        }
        for c in &h.closed_form {
            match c {
                Some(e) => {
                    let _ = writeln!(w, "closed_form = {}", quote(e));
                }
                None => {
                    let _ = writeln!(w, "closed_form = _");
                }
            }
        }
        for i in &h.indices {
            let _ = writeln!(w, "index = {}", num(*i));
        }
        let _ = writeln!(w, "time = {}", num(h.time));
        let _ = writeln!(w, "step = {}", num(h.step));
        for (lo, hi) in &h.seeds {
            let _ = writeln!(w, "seeds = {} {}", num(*lo), num(*hi));
        }
        let _ = writeln!(w, "seed_nodes = {}", h.seed_nodes);
    }
    for c in &s.checks {
        let _ = writeln!(w, "\n[check {}]", c.name);
        let _ = writeln!(w, "kind = {}", c.kind);
        for (k, v) in &c.args {
            let _ = writeln!(w, "{k} = {v}");
        }
    }
    o
}

pub fn save(s: &Scenario, path: &Path) -> Result<()> {
    std::fs::write(path, save_str(s))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Scenario> {
    load_str(&std::fs::read_to_string(path)?)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Scenario,
    Chart,
    Poisson,
    Submanifold,
    Region,
    Hamiltonian,
    Map,
    Family,
    Hameotopy,
    Check,
}

/// Check argument keys that name other scenario items.
const REFERENCE_KEYS: [(&str, &str); 9] = [
    ("submanifold", "submanifold"),
    ("source", "submanifold"),
    ("target", "submanifold"),
    ("family", "family"),
    ("hameotopy", "hameotopy"),
    ("map", "map"),
    ("inverse", "map"),
    ("hamiltonian", "hamiltonian"),
    ("generator", "hamiltonian map"),
];

struct Loader {
    s: Scenario,
    section: Section,
    refs: Vec<(usize, &'static str, String)>,
}

impl Loader {
    fn coords(&self, line: usize) -> Result<Vec<String>> {
        if self.s.chart.is_empty() {
            return Err(parse_err(line, "the [chart] section must come before expressions"));
        }
        Ok(self.s.chart.iter().map(|a| a.name.clone()).collect())
    }

    fn expr(&self, line: usize, text: &str, params: &[String]) -> Result<String> {
        let coords = self.coords(line)?;
        let c: Vec<&str> = coords.iter().map(String::as_str).collect();
        let p: Vec<&str> = params.iter().map(String::as_str).collect();
        ScalarField::parse(text, &c, &p).map_err(|e| Error::Unresolved {
            line,
            message: e.to_string(),
        })?;
        Ok(text.to_string())
    }
}

fn one_str(toks: &[Tok], line: usize) -> Result<String> {
    match toks {
        [Tok::Str(s)] => Ok(s.clone()),
        _ => Err(parse_err(line, "expected one quoted expression")),
    }
}

fn words(toks: &[Tok], line: usize) -> Result<Vec<String>> {
    toks.iter()
        .map(|t| match t {
            Tok::Word(w) => Ok(w.clone()),
            Tok::Str(_) => Err(parse_err(line, "unexpected quoted value")),
        })
        .collect()
}

fn one_word(toks: &[Tok], line: usize) -> Result<String> {
    let w = words(toks, line)?;
    match w.as_slice() {
        [x] => Ok(x.clone()),
        _ => Err(parse_err(line, "expected one value")),
    }
}

fn parse_num<T: std::str::FromStr>(w: &str, line: usize) -> Result<T> {
    w.parse().map_err(|_| parse_err(line, &format!("bad number `{w}`")))
}

fn nums(toks: &[Tok], line: usize, count: usize) -> Result<Vec<f64>> {
    let w = words(toks, line)?;
    if w.len() != count {
        return Err(parse_err(line, &format!("expected {count} numbers")));
    }
    w.iter().map(|x| parse_num(x, line)).collect()
}

pub fn load_str(text: &str) -> Result<Scenario> {
    let mut ld = Loader {
        s: Scenario::new("", ""),
        section: Section::None,
        refs: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if let Some(head) = t.strip_prefix('[') {
            let head = head.strip_suffix(']').ok_or_else(|| parse_err(line, "unterminated section header"))?;
            let mut parts = head.split_whitespace();
            let kind = parts.next().unwrap_or("");
            let name = parts.next().map(str::to_string);
            if parts.next().is_some() {
                return Err(parse_err(line, "section header has too many words"));
            }
            let need = |n: Option<String>| n.ok_or_else(|| parse_err(line, &format!("[{kind}] needs a name")));
            ld.section = match kind {
                "scenario" => Section::Scenario,
                "chart" => Section::Chart,
                "poisson" => Section::Poisson,
                "submanifold" => {
                    ld.s.submanifolds.push(SubmanifoldSpec {
                        name: need(name)?,
                        define: Vec::new(),
                    });
                    Section::Submanifold
                }
                "region" => {
                    ld.s.regions.push(RegionSpec {
                        name: need(name)?,
                        member: "always".into(),
                        field: None,
                        rank: None,
                        invariants: Vec::new(),
                    });
                    Section::Region
                }
                "hamiltonian" => {
                    ld.s.hamiltonians.push(HamiltonianSpec {
                        name: need(name)?,
                        params: Vec::new(),
                        expr: String::new(),
                    });
                    Section::Hamiltonian
                }
                "map" => {
                    ld.s.maps.push(MapSpec {
                        name: need(name)?,
                        params: Vec::new(),
                        components: Vec::new(),
                    });
                    Section::Map
                }
                "family" => {
                    ld.s.families.push(FamilySpec {
                        name: need(name)?,
                        members: Vec::new(),
                        limit: Vec::new(),
                        indices: Vec::new(),
                        probe: Vec::new(),
                        probe_nodes: 11,
                    });
                    Section::Family
                }
                "hameotopy" => {
                    ld.s.hameotopies.push(HameotopySpec {
                        name: need(name)?,
                        hamiltonian: String::new(),
                        limit: None,
                        closed_form: Vec::new(),
                        indices: Vec::new(),
                        time: 1.0,
                        step: 1e-3,
                        seeds: Vec::new(),
                        seed_nodes: 3,
                    });
                    Section::Hameotopy
                }
                "check" => {
                    ld.s.checks.push(CheckSpec {
                        name: need(name)?,
                        kind: String::new(),
                        args: Vec::new(),
                    });
                    Section::Check
                }
                other => return Err(parse_err(line, &format!("unknown section `{other}`"))),
            };
            continue;
        }
        let (key, value) = t.split_once('=').ok_or_else(|| parse_err(line, "expected `key = value`"))?;
        let key = key.trim();
        let value = value.trim();
        let toks = tokenize(value, line)?;
        entry(&mut ld, line, key, value, &toks)?;
    }
    for (line, kind, name) in &ld.refs {
        resolve(&ld.s, *line, kind, name)?;
    }
    if ld.s.name.is_empty() {
        return Err(parse_err(1, "missing scenario name"));
    }
    Ok(ld.s)
}

fn resolve(s: &Scenario, line: usize, kind: &str, name: &str) -> Result<()> {
    let found = match kind {
        "submanifold" => s.submanifolds.iter().any(|m| m.name == name),
        "family" => s.families.iter().any(|m| m.name == name),
        "hameotopy" => s.hameotopies.iter().any(|m| m.name == name),
        "map" => s.maps.iter().any(|m| m.name == name),
        "hamiltonian" => s.hamiltonians.iter().any(|m| m.name == name),
        _ => false,
    };
    if found {
        Ok(())
    } else {
        Err(Error::Unresolved {
            line,
            message: format!("unknown {kind} `{name}`"),
        })
    }
}

fn entry(ld: &mut Loader, line: usize, key: &str, value: &str, toks: &[Tok]) -> Result<()> {
    let bad_key = || parse_err(line, &format!("unknown key `{key}`"));
    match ld.section {
        Section::None => Err(parse_err(line, "key outside of any section")),
        Section::Scenario => {
            match key {
                "name" => ld.s.name = one_word(toks, line)?,
                "description" => ld.s.description = one_str(toks, line)?,
                "seed" => ld.s.seed = parse_num(&one_word(toks, line)?, line)?,
                "grid" => ld.s.grid = parse_num(&one_word(toks, line)?, line)?,
                "tol_rank" => ld.s.tol_rank = parse_num(&one_word(toks, line)?, line)?,
                "projection" => {
                    let w = words(toks, line)?;
                    let [a, b] = w.as_slice() else {
                        return Err(parse_err(line, "projection needs two axes"));
                    };
                    ld.s.projection = (a.clone(), b.clone());
                }
                _ => return Err(bad_key()),
            }
            Ok(())
        }
        Section::Chart => {
            if key != "coord" {
                return Err(bad_key());
            }
            let w = words(toks, line)?;
            let [name, lo, hi] = w.as_slice() else {
                return Err(parse_err(line, "coord needs a name and two bounds"));
            };
            ld.s.chart.push(Axis {
                name: name.clone(),
                lo: parse_num(lo, line)?,
                hi: parse_num(hi, line)?,
            });
            Ok(())
        }
        Section::Poisson => {
            if key != "entry" {
                return Err(bad_key());
            }
            let [Tok::Word(a), Tok::Word(b), Tok::Str(e)] = toks else {
                return Err(parse_err(line, "entry needs two coordinates and a quoted expression"));
            };
            let coords = ld.coords(line)?;
            for c in [a, b] {
                if !coords.contains(c) {
                    return Err(Error::Unresolved {
                        line,
                        message: format!("unknown coordinate `{c}`"),
                    });
                }
            }
            let expr = ld.expr(line, e, &[])?;
            ld.s.poisson.push(Entry {
                a: a.clone(),
                b: b.clone(),
                expr,
            });
            Ok(())
        }
        Section::Submanifold => {
            if key != "define" {
                return Err(bad_key());
            }
            let e = ld.expr(line, &one_str(toks, line)?, &[])?;
            ld.s.submanifolds.last_mut().expect("section").define.push(e);
            Ok(())
        }
        Section::Region => {
            match key {
                "member" => {
                    let (kind, field) = match toks {
                        [Tok::Word(k)] => (k.clone(), None),
                        [Tok::Word(k), Tok::Str(e)] => (k.clone(), Some(ld.expr(line, e, &[])?)),
                        _ => return Err(parse_err(line, "member needs a keyword and an optional expression")),
                    };
                    let ok = matches!((kind.as_str(), &field), ("always", None) | ("positive" | "negative" | "zero" | "nonzero", Some(_)));
                    if !ok {
                        return Err(parse_err(line, &format!("bad membership `{kind}`")));
                    }
                    let r = ld.s.regions.last_mut().expect("section");
                    r.member = kind;
                    r.field = field;
                }
                "rank" => {
                    let k = parse_num(&one_word(toks, line)?, line)?;
                    ld.s.regions.last_mut().expect("section").rank = Some(k);
                }
                "invariant" => {
                    let e = ld.expr(line, &one_str(toks, line)?, &[])?;
                    ld.s.regions.last_mut().expect("section").invariants.push(e);
                }
                _ => return Err(bad_key()),
            }
            Ok(())
        }
        Section::Hamiltonian => {
            match key {
                "params" => ld.s.hamiltonians.last_mut().expect("section").params = words(toks, line)?,
                "expr" => {
                    let params = ld.s.hamiltonians.last().expect("section").params.clone();
                    let e = ld.expr(line, &one_str(toks, line)?, &params)?;
                    ld.s.hamiltonians.last_mut().expect("section").expr = e;
                }
                _ => return Err(bad_key()),
            }
            Ok(())
        }
        Section::Map => {
            match key {
                "params" => ld.s.maps.last_mut().expect("section").params = words(toks, line)?,
                "component" => {
                    let params = ld.s.maps.last().expect("section").params.clone();
                    let e = ld.expr(line, &one_str(toks, line)?, &params)?;
                    ld.s.maps.last_mut().expect("section").components.push(e);
                }
                _ => return Err(bad_key()),
            }
            Ok(())
        }
        Section::Family => {
            match key {
                "member" => {
                    let e = ld.expr(line, &one_str(toks, line)?, &["n".into()])?;
                    ld.s.families.last_mut().expect("section").members.push(e);
                }
                "limit" => {
                    let e = ld.expr(line, &one_str(toks, line)?, &[])?;
                    ld.s.families.last_mut().expect("section").limit.push(e);
                }
                "index" => {
                    let v = parse_num(&one_word(toks, line)?, line)?;
                    ld.s.families.last_mut().expect("section").indices.push(v);
                }
                "probe" => {
                    let v = nums(toks, line, 2)?;
                    ld.s.families.last_mut().expect("section").probe.push((v[0], v[1]));
                }
                "probe_nodes" => {
                    let v = parse_num(&one_word(toks, line)?, line)?;
                    ld.s.families.last_mut().expect("section").probe_nodes = v;
                }
                _ => return Err(bad_key()),
            }
            Ok(())
        }
        Section::Hameotopy => {
            match key {
                "hamiltonian" | "limit" => {
                    let name = one_word(toks, line)?;
                    ld.refs.push((line, "hamiltonian", name.clone()));
                    let h = ld.s.hameotopies.last_mut().expect("section");
                    if key == "limit" {
                        h.limit = Some(name);
                    } else {
                        h.hamiltonian = name;
                    }
                }
                "closed_form" => {
                    let c = match toks {
                        [Tok::Word(w)] if w == "_" => None,
                        [Tok::Str(e)] => Some(ld.expr(line, e, &["n".into(), "t".into()])?),
                        _ => return Err(parse_err(line, "closed_form is a quoted expression or `_`")),
                    };
                    ld.s.hameotopies.last_mut().expect("section").closed_form.push(c);
                }
                "index" => {
                    let v = parse_num(&one_word(toks, line)?, line)?;
                    ld.s.hameotopies.last_mut().expect("section").indices.push(v);
                }
                "time" => ld.s.hameotopies.last_mut().expect("section").time = parse_num(&one_word(toks, line)?, line)?,
                "step" => ld.s.hameotopies.last_mut().expect("section").step = parse_num(&one_word(toks, line)?, line)?,
                "seeds" => {
                    let v = nums(toks, line, 2)?;
                    ld.s.hameotopies.last_mut().expect("section").seeds.push((v[0], v[1]));
                }
                "seed_nodes" => ld.s.hameotopies.last_mut().expect("section").seed_nodes = parse_num(&one_word(toks, line)?, line)?,
                _ => return Err(bad_key()),
            }
            Ok(())
        }
        Section::Check => {
            if key == "kind" {
                ld.s.checks.last_mut().expect("section").kind = one_word(toks, line)?;
                return Ok(());
            }
            for (k, kinds) in REFERENCE_KEYS {
                if k == key {
                    let names = words(toks, line)?;
                    let kinds: Vec<&'static str> = kinds.split(' ').collect();
                    if names.len() != kinds.len() {
                        return Err(parse_err(line, &format!("`{key}` takes {} name(s)", kinds.len())));
                    }
                    for (kind, name) in kinds.into_iter().zip(names) {
                        ld.refs.push((line, kind, name));
                    }
                }
            }
            for t in toks {
                if let Tok::Str(e) = t {
                    ld.expr(line, e, &[])?;
                }
            }
            ld.s.checks.last_mut().expect("section").args.push((key.to_string(), value.to_string()));
            Ok(())
        }
    }
}

/// Words and quoted strings of a raw argument value.
pub fn split_value(value: &str) -> Result<Vec<String>> {
    Ok(tokenize(value, 0)?
        .into_iter()
        .map(|t| match t {
            Tok::Word(w) | Tok::Str(w) => w,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
# a comment
[scenario]
name = tiny
description = "a \"quoted\" line"
projection = x y

[chart]
coord = x -1.0 1.0
coord = y -1.0 1.0

[poisson]
entry = x y "1"

[submanifold L]
define = "y - x"

[check c]
kind = coisotropy
submanifold = L
expect = true
"#;

    #[test]
    fn parses_and_round_trips() {
        let s = load_str(SMALL).unwrap();
        assert_eq!(s.description, "a \"quoted\" line");
        assert_eq!(s.checks[0].args[1], ("expect".to_string(), "true".to_string()));
        assert_eq!(load_str(&save_str(&s)).unwrap(), s);
    }

    #[test]
    fn unknown_coordinate_reports_its_line() {
        let text = SMALL.replace("\"y - x\"", "\"y - q\"");
        match load_str(&text) {
            Err(Error::Unresolved { line, .. }) => assert_eq!(line, 16),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_reference_reports_its_line() {
        let text = SMALL.replace("submanifold = L", "submanifold = M");
        match load_str(&text) {
            Err(Error::Unresolved { line, message }) => {
                assert_eq!(line, 20);
                assert!(message.contains("`M`"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let text = SMALL.replace("coord = y -1.0 1.0", "coord = y -1.0");
        assert!(matches!(load_str(&text), Err(Error::ScenarioParse { line: 10, .. })), "{:?}", load_str(&text));
        assert!(matches!(load_str("[bogus]\n"), Err(Error::ScenarioParse { line: 1, .. })));
    }
}
