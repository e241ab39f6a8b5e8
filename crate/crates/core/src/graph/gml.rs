//! A small subset of GML: one `graph` block holding `node [ id .. label .. ]`
//! and `edge [ source .. target .. value .. ]` blocks. Other keys are ignored.

use std::collections::HashMap;

use super::{Graph, GraphBuilder, IngestReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Number(f64),
    Str(String),
    List(Vec<(String, Value)>),
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Key(String),
    Number(f64),
    Str(String),
    Open,
    Close,
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    let mut line = 1;
    while let Some(&(start, ch)) = chars.peek() {
        match ch {
            '\n' => {
                line += 1;
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '#' => {
                while let Some(&(_, c)) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '[' => {
                tokens.push((Token::Open, line));
                chars.next();
            }
            ']' => {
                tokens.push((Token::Close, line));
                chars.next();
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                let mut closed = false;
                for (_, c) in chars.by_ref() {
                    if c == '"' {
                        closed = true;
                        break;
                    }
                    if c == '\n' {
                        line += 1;
                    }
                    s.push(c);
                }
                if !closed {
                    return Err(Error::Gml(format!("unterminated string starting on line {line}")));
                }
                tokens.push((Token::Str(s), line));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut end = start;
                while let Some(&(i, c)) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        end = i + c.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                tokens.push((Token::Key(text[start..end].to_string()), line));
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let mut end = start;
                while let Some(&(i, c)) = chars.peek() {
                    if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '+') {
                        end = i + c.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                let lexeme = &text[start..end];
                let number = lexeme
                    .parse::<f64>()
                    .map_err(|_| Error::Gml(format!("line {line}: invalid number {lexeme:?}")))?;
                tokens.push((Token::Number(number), line));
            }
            other => {
                return Err(Error::Gml(format!("line {line}: unexpected character {other:?}")));
            }
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
}

impl Parser {
    fn parse_list(&mut self, nested: bool) -> Result<Vec<(String, Value)>> {
        let mut items = Vec::new();
        loop {
            let Some((token, line)) = self.tokens.get(self.pos).cloned() else {
                if nested {
                    return Err(Error::Gml("unbalanced brackets: missing ']'".into()));
                }
                return Ok(items);
            };
            self.pos += 1;
            let key = match token {
                Token::Close if nested => return Ok(items),
                Token::Close => {
                    return Err(Error::Gml(format!("line {line}: unbalanced brackets: unexpected ']'")))
                }
                Token::Key(k) => k,
                other => return Err(Error::Gml(format!("line {line}: expected a key, found {other:?}"))),
            };
            let value = match self.tokens.get(self.pos).cloned() {
                Some((Token::Number(x), _)) => {
                    self.pos += 1;
                    Value::Number(x)
                }
                Some((Token::Str(s), _)) => {
                    self.pos += 1;
                    Value::Str(s)
                }
                Some((Token::Open, _)) => {
                    self.pos += 1;
                    Value::List(self.parse_list(true)?)
                }
                _ => return Err(Error::Gml(format!("line {line}: key {key:?} has no value"))),
            };
            items.push((key, value));
        }
    }
}

fn number(items: &[(String, Value)], key: &str) -> Option<f64> {
    items.iter().find_map(|(k, v)| match v {
        Value::Number(x) if k == key => Some(*x),
        _ => None,
    })
}

fn id_key(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

/// Parses the GML subset into a graph. Undeclared edge endpoints and
/// unbalanced brackets are errors; declared nodes without edges are dropped
/// with a warning.
pub fn parse_gml(text: &str) -> Result<(Graph, IngestReport)> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        pos: 0,
    };
    let top = parser.parse_list(false)?;
    let graph = top
        .into_iter()
        .find_map(|(k, v)| match v {
            Value::List(items) if k == "graph" => Some(items),
            _ => None,
        })
        .ok_or_else(|| Error::Gml("no graph block".into()))?;

    let mut builder = GraphBuilder::new();
    if number(&graph, "directed") == Some(1.0) {
        builder.warn("directed graph read as undirected");
    }
    let mut ids: HashMap<String, usize> = HashMap::new();
    for (key, value) in &graph {
        let Value::List(items) = value else { continue };
        if key != "node" {
            continue;
        }
        let id = number(items, "id").ok_or_else(|| Error::Gml("node without id".into()))?;
        let id = id_key(id);
        if ids.contains_key(&id) {
            return Err(Error::Gml(format!("duplicate node id {id}")));
        }
        let label = items
            .iter()
            .find_map(|(k, v)| match v {
                Value::Str(s) if k == "label" => Some(s.clone()),
                _ => None,
            })
            .unwrap_or_else(|| id.clone());
        let before = builder.node_count();
        let node = builder.add_node(&label);
        if node < before {
            // Repeated label: keep nodes distinct by falling back to the id.
            let node = builder.add_node(&format!("{label}#{id}"));
            ids.insert(id, node);
        } else {
            ids.insert(id, node);
        }
    }
    for (key, value) in &graph {
        let Value::List(items) = value else { continue };
        if key != "edge" {
            continue;
        }
        let endpoint = |name: &str| -> Result<usize> {
            let raw = number(items, name).ok_or_else(|| Error::Gml(format!("edge without {name}")))?;
            let key = id_key(raw);
            ids.get(&key)
                .copied()
                .ok_or_else(|| Error::Gml(format!("edge references undeclared node id {key}")))
        };
        let (u, v) = (endpoint("source")?, endpoint("target")?);
        let weight = number(items, "value")
            .or_else(|| number(items, "weight"))
            .unwrap_or(1.0);
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::Gml(format!("edge weight must be positive, got {weight}")));
        }
        builder.add_edge(u, v, weight)?;
    }
    Ok(builder.build())
}
