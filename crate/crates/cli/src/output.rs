//! Aligned tables and CSV rows.

use std::fmt::Write as _;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub title: Option<String>,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self { title: None, headers: headers.iter().map(|h| h.to_string()).collect(), rows: vec![] }
    }

    pub fn titled(mut self, title: &str) -> Self {
        self.title = Some(title.to_string());
        self
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.headers.len());
        self.rows.push(cells);
    }

    /// Two-column quantity/value table.
    pub fn pairs(items: &[(&str, String)]) -> Self {
        let mut t = Self::new(&["quantity", "value"]);
        for (k, v) in items {
            t.row(vec![k.to_string(), v.clone()]);
        }
        t
    }
}

/// Shortest text that parses back to the same f64.
pub fn num(x: f64) -> String {
    // −0.0 from empty sums prints as 0
    format!("{}", if x == 0.0 { 0.0 } else { x })
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Render tables; CSV output starts with the seed as a comment line.
pub fn render(tables: &[Table], csv: bool, seed: u64) -> String {
    let mut out = String::new();
    if csv {
        let _ = writeln!(out, "# seed={seed}");
    }
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if let Some(title) = &t.title {
            let _ = writeln!(out, "{}{title}", if csv { "# " } else { "" });
        }
        if csv {
            let _ = writeln!(out, "{}", t.headers.iter().map(|h| csv_cell(h)).collect::<Vec<_>>().join(","));
            for r in &t.rows {
                let _ = writeln!(out, "{}", r.iter().map(|c| csv_cell(c)).collect::<Vec<_>>().join(","));
            }
        } else {
            let widths: Vec<usize> = (0..t.headers.len())
                .map(|j| t.rows.iter().map(|r| r[j].chars().count()).chain([t.headers[j].chars().count()]).max().unwrap_or(0))
                .collect();
            let line = |cells: &[String]| {
                cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string()
            };
            let _ = writeln!(out, "{}", line(&t.headers));
            for r in &t.rows {
                let _ = writeln!(out, "{}", line(r));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_seed_and_header() {
        let mut t = Table::new(&["a", "b"]);
        t.row(vec![num(0.1), "x,y".into()]);
        assert_eq!(render(&[t], true, 7), "# seed=7\na,b\n0.1,\"x,y\"\n");
    }

    #[test]
    fn aligned_columns() {
        let mut t = Table::new(&["name", "v"]);
        t.row(vec!["long_name".into(), "1".into()]);
        assert_eq!(render(&[t], false, 0), "name       v\nlong_name  1\n");
    }

    #[test]
    fn shortest_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 2.5e10] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(-0.0), "0");
    }
}
