//! Plain-text tables and tab-separated machine output.

/// Header line opening every machine-readable output.
pub const MACHINE_HEADER: &str = "#medlat-machine\tv1";

/// Renders rows as an aligned text table. The first column is
/// left-aligned, the rest right-aligned.
pub fn render(headers: &[&str], rows: &[Vec<String>]) -> String {
    let ncols = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate().take(ncols) {
            widths[i] = widths[i].max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: &mut dyn Iterator<Item = &str>, out: &mut String| {
        let mut parts = Vec::with_capacity(ncols);
        for (i, c) in cells.enumerate().take(ncols) {
            let pad = widths[i].saturating_sub(c.chars().count());
            if i == 0 {
                parts.push(format!("{c}{}", " ".repeat(pad)));
            } else {
                parts.push(format!("{}{c}", " ".repeat(pad)));
            }
        }
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(&mut headers.iter().copied(), &mut out);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&rule.join("  "));
    out.push('\n');
    for row in rows {
        line(&mut row.iter().map(String::as_str), &mut out);
    }
    out
}

/// Machine-readable rows: a versioned header line naming the report kind,
/// a column header, then one tab-separated line per row.
pub fn render_machine(kind: &str, headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = format!("{MACHINE_HEADER}\t{kind}\n");
    out.push_str(&headers.join("\t"));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}
