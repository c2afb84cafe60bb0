//! Problem-file syntax: `[section]` or `[section label]` headers followed by
//! `key = literal` lines. Literals are numbers, names, tuples `(a, b)` and
//! calls `name(args)`. `#` starts a comment; a literal continues onto the
//! next lines while its parentheses are unbalanced.

use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Num(f64),
    Ident(String),
    Tuple(Vec<Value>),
    Call(String, Vec<Value>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, vs: &[Value]| -> fmt::Result {
            for (i, v) in vs.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{v}")?;
            }
            Ok(())
        };
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Ident(s) => f.write_str(s),
            Value::Tuple(vs) => {
                f.write_str("(")?;
                list(f, vs)?;
                f.write_str(")")
            }
            Value::Call(n, vs) => {
                write!(f, "{n}(")?;
                list(f, vs)?;
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: Value,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub name: String,
    pub label: Option<String>,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ProblemFile {
    pub sections: Vec<Section>,
}

impl ProblemFile {
    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn sections_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Section> + 'a {
        self.sections.iter().filter(move |s| s.name == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub line: usize,
    pub key: String,
    pub reason: String,
}

impl Diagnostic {
    pub fn new(line: usize, key: impl Into<String>, reason: impl Into<String>) -> Self {
        Diagnostic {
            line,
            key: key.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "line {}: {}", self.line, self.reason)
        } else {
            write!(f, "line {}: {}: {}", self.line, self.key, self.reason)
        }
    }
}

/// Sections and whether they take a label.
const SECTIONS: &[(&str, Label)] = &[
    ("meta", Label::None),
    ("regions", Label::None),
    ("functions", Label::None),
    ("operators", Label::None),
    ("maps", Label::None),
    ("problem", Label::None),
    ("family", Label::None),
    ("trace", Label::Optional),
    ("game", Label::None),
    ("follower", Label::Required),
];

#[derive(Clone, Copy, PartialEq)]
enum Label {
    None,
    Optional,
    Required,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Open,
    Close,
    Comma,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn tokenize(s: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push(Tok::Open);
                i += 1;
            }
            ')' => {
                out.push(Tok::Close);
                i += 1;
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1;
            }
            c if is_ident_start(c) => {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                out.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            c if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' => {
                let start = i;
                i += 1;
                while i < chars.len() {
                    let d = chars[i];
                    let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let v: f64 = text
                    .parse()
                    .map_err(|_| format!("malformed number `{text}`"))?;
                if !v.is_finite() {
                    return Err(format!("non-finite number `{text}`"));
                }
                out.push(Tok::Num(v));
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn list(&mut self) -> Result<Vec<Value>, String> {
        let mut out = Vec::new();
        if self.peek() == Some(&Tok::Close) {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.push(self.value()?);
            match self.next() {
                Some(Tok::Comma) => {}
                Some(Tok::Close) => return Ok(out),
                _ => return Err("expected `,` or `)`".into()),
            }
        }
    }

    fn value(&mut self) -> Result<Value, String> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Value::Num(v)),
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::Open) {
                    self.pos += 1;
                    Ok(Value::Call(name, self.list()?))
                } else {
                    Ok(Value::Ident(name))
                }
            }
            Some(Tok::Open) => Ok(Value::Tuple(self.list()?)),
            Some(Tok::Close) => Err("unexpected `)`".into()),
            Some(Tok::Comma) => Err("unexpected `,`".into()),
            None => Err("missing literal".into()),
        }
    }
}

/// Parses one literal.
pub fn parse_value(s: &str) -> Result<Value, String> {
    let mut p = Parser {
        toks: tokenize(s)?,
        pos: 0,
    };
    let v = p.value()?;
    if p.pos != p.toks.len() {
        return Err("trailing input after literal".into());
    }
    Ok(v)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn depth(s: &str) -> i64 {
    s.chars()
        .map(|c| match c {
            '(' => 1,
            ')' => -1,
            _ => 0,
        })
        .sum()
}

/// Syntax and schema pass: known sections, labels, `key = literal` lines,
/// no duplicate keys. Reference resolution happens when the model is built.
pub fn parse_str(text: &str) -> Result<ProblemFile, Vec<Diagnostic>> {
    let lines: Vec<&str> = text.lines().collect();
    let mut diags = Vec::new();
    let mut file = ProblemFile::default();
    let mut i = 0;
    while i < lines.len() {
        let lineno = i + 1;
        let line = strip_comment(lines[i]).trim();
        i += 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let Some(inner) = rest.strip_suffix(']') else {
                diags.push(Diagnostic::new(lineno, "", "unterminated section header"));
                continue;
            };
            let mut parts = inner.split_whitespace();
            let name = parts.next().unwrap_or("").to_string();
            let label = parts.next().map(str::to_string);
            if parts.next().is_some() {
                diags.push(Diagnostic::new(
                    lineno,
                    &name,
                    "section header takes at most one label",
                ));
            }
            match SECTIONS.iter().find(|s| s.0 == name) {
                None => diags.push(Diagnostic::new(lineno, &name, "unknown section")),
                Some((_, Label::None)) if label.is_some() => {
                    diags.push(Diagnostic::new(lineno, &name, "section takes no label"))
                }
                Some((_, Label::Required)) if label.is_none() => {
                    diags.push(Diagnostic::new(lineno, &name, "section needs a label"))
                }
                _ => {}
            }
            if file
                .sections
                .iter()
                .any(|s| s.name == name && s.label == label)
            {
                diags.push(Diagnostic::new(lineno, &name, "duplicate section"));
            }
            file.sections.push(Section {
                name,
                label,
                line: lineno,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((key, rhs)) = line.split_once('=') else {
            diags.push(Diagnostic::new(lineno, "", "expected `key = literal`"));
            continue;
        };
        let key = key.trim().to_string();
        let mut literal = rhs.trim().to_string();
        while depth(&literal) > 0 && i < lines.len() {
            literal.push(' ');
            literal.push_str(strip_comment(lines[i]).trim());
            i += 1;
        }
        if key.is_empty()
            || !key.chars().next().is_some_and(is_ident_start)
            || !key.chars().all(is_ident_char)
        {
            diags.push(Diagnostic::new(lineno, &key, "malformed key"));
            continue;
        }
        let Some(section) = file.sections.last_mut() else {
            diags.push(Diagnostic::new(lineno, &key, "key outside any section"));
            continue;
        };
        if section.get(&key).is_some() {
            diags.push(Diagnostic::new(lineno, &key, "duplicate key"));
            continue;
        }
        match parse_value(&literal) {
            Ok(value) => section.entries.push(Entry {
                key,
                value,
                line: lineno,
            }),
            Err(reason) => diags.push(Diagnostic::new(lineno, &key, reason)),
        }
    }
    if diags.is_empty() {
        Ok(file)
    } else {
        Err(diags)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals() {
        assert_eq!(parse_value("1e-7").unwrap(), Value::Num(1e-7));
        assert_eq!(parse_value("-0.5").unwrap(), Value::Num(-0.5));
        assert_eq!(
            parse_value("box((0, 0), (1, 1))").unwrap(),
            Value::Call(
                "box".into(),
                vec![
                    Value::Tuple(vec![Value::Num(0.0), Value::Num(0.0)]),
                    Value::Tuple(vec![Value::Num(1.0), Value::Num(1.0)])
                ]
            )
        );
        assert_eq!(
            parse_value("union()").unwrap(),
            Value::Call("union".into(), vec![])
        );
        assert_eq!(parse_value("f2").unwrap(), Value::Ident("f2".into()));
        assert!(parse_value("box((0,0)").is_err());
        assert!(parse_value("1 2").is_err());
    }

    #[test]
    fn sections_and_continuations() {
        let text = "# demo\n[meta]\ndim = 1\nbox = interval(-1, 1)\n[operators]\nT = affine_map(\n  ((2)),\n  (0))\n";
        let f = parse_str(text).unwrap();
        assert_eq!(f.sections.len(), 2);
        assert_eq!(f.section("operators").unwrap().get("T").unwrap().line, 6);
    }

    #[test]
    fn strict_schema() {
        let errs =
            parse_str("[nonsense]\nx = 1\n[meta]\nh = 0.1\nh = 0.2\n[follower]\n").unwrap_err();
        let reasons: Vec<&str> = errs.iter().map(|d| d.reason.as_str()).collect();
        assert_eq!(
            reasons,
            vec!["unknown section", "duplicate key", "section needs a label"]
        );
        assert_eq!(errs[1].line, 5);
    }
}
