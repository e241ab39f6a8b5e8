use super::{Graph, GraphBuilder, IngestReport};
use crate::error::{Error, Result};

/// Parses whitespace-separated `u v [w]` lines. Lines starting with `#` are
/// comments. Node tokens get dense ids in order of first appearance and a
/// missing weight means 1.
pub fn parse_edge_list(text: &str) -> Result<(Graph, IngestReport)> {
    let mut builder = GraphBuilder::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: lineno + 1,
            message,
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let weight = match tokens.len() {
            2 => 1.0,
            3 => tokens[2]
                .parse::<f64>()
                .map_err(|_| parse_err(format!("invalid weight {:?}", tokens[2])))?,
            k => return Err(parse_err(format!("expected 2 or 3 tokens, found {k}"))),
        };
        if !(weight.is_finite() && weight > 0.0) {
            return Err(parse_err(format!("weight must be positive, got {weight}")));
        }
        let u = builder.add_node(tokens[0]);
        let v = builder.add_node(tokens[1]);
        builder.add_edge(u, v, weight)?;
    }
    Ok(builder.build())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle() {
        let (g, report) = parse_edge_list("1 2\n2 3\n3 1\n").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert!(g.degrees().iter().all(|&d| d == 2.0));
        assert_eq!(report.duplicates_merged, 0);
    }

    #[test]
    fn duplicates_merge_by_summing() {
        let (g, report) = parse_edge_list("a b 2\na b 1\n").unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge(0).weight, 3.0);
        assert_eq!(report.duplicates_merged, 1);
    }

    #[test]
    fn reversed_duplicate_merges() {
        let (g, report) = parse_edge_list("a b\nb a\n").unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge(0).weight, 2.0);
        assert_eq!(report.duplicates_merged, 1);
    }

    #[test]
    fn self_loop_and_comments() {
        let (g, report) = parse_edge_list("# header\n\nu u\nu v 0.5\n").unwrap();
        assert_eq!(report.self_loops, 1);
        assert_eq!(g.weighted_degree(0).unwrap(), 2.5);
        assert_eq!(g.label(1), "v");
    }

    #[test]
    fn malformed_lines_report_line_number() {
        match parse_edge_list("a b\na b c d\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_edge_list("a b -1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_edge_list("x\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_edge_list("a b zz\n"), Err(Error::Parse { .. })));
    }
}
