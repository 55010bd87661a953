use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::EvalError;

pub const COMPARISON_HEADER: &str = "Model | Precision% | F1-score";
const COMPARISON_RULE: &str = "--- | ---: | ---:";

/// One model's headline scores, in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub model_name: String,
    pub precision_pct: f64,
    pub f1_pct: f64,
}

impl ComparisonRow {
    pub fn new(model_name: impl Into<String>, precision_pct: f64, f1_pct: f64) -> Self {
        ComparisonRow {
            model_name: model_name.into(),
            precision_pct,
            f1_pct,
        }
    }
}

/// One decimal place, halves rounded up. The small offset absorbs rounding
/// error from upstream arithmetic (`23.0 / 80.0 * 100.0` is 28.749999999999996).
pub fn format_pct(x: f64) -> String {
    let tenths = libm::floor(x * 10.0 + 0.5 + 1e-9);
    format!("{:.1}", tenths / 10.0)
}

/// Markdown table with a header row, an alignment rule and one line per
/// model, in the given order.
pub fn render_comparison(rows: &[ComparisonRow]) -> Result<String, EvalError> {
    if rows.is_empty() {
        return Err(EvalError::EmptyTable);
    }
    let mut out = String::new();
    out.push_str(COMPARISON_HEADER);
    out.push('\n');
    out.push_str(COMPARISON_RULE);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{} | {} | {}\n",
            r.model_name,
            format_pct(r.precision_pct),
            format_pct(r.f1_pct)
        ));
    }
    Ok(out)
}

/// Stable sort by F1, highest first.
pub fn sort_by_f1(rows: &mut [ComparisonRow]) {
    rows.sort_by(|a, b| b.f1_pct.total_cmp(&a.f1_pct));
}

/// Parses `name,precision,f1` lines. Blank lines and lines starting with
/// `#` are skipped; values must lie in [0, 100].
pub fn parse_results(text: &str) -> Result<Vec<ComparisonRow>, EvalError> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: &str| EvalError::MalformedRow {
            line: i + 1,
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [name, p, f1] = fields[..] else {
            return Err(bad("expected `name,precision,f1`"));
        };
        if name.is_empty() {
            return Err(bad("empty model name"));
        }
        let pct = |s: &str, what: &str| -> Result<f64, EvalError> {
            let v: f64 = s
                .parse()
                .map_err(|_| bad(&format!("{what} {s:?} is not a number")))?;
            if !(0.0..=100.0).contains(&v) {
                return Err(bad(&format!("{what} {v} outside [0, 100]")));
            }
            Ok(v)
        };
        rows.push(ComparisonRow::new(
            name,
            pct(p, "precision")?,
            pct(f1, "f1")?,
        ));
    }
    if rows.is_empty() {
        return Err(EvalError::EmptyTable);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rounding() {
        assert_eq!(format_pct(89.75), "89.8");
        assert_eq!(format_pct(82.45), "82.5");
        assert_eq!(format_pct(23.0 / 80.0 * 100.0), "28.8");
        assert_eq!(format_pct(81.0), "81.0");
        assert_eq!(format_pct(100.0), "100.0");
        assert_eq!(format_pct(0.04), "0.0");
    }

    #[test]
    fn table_lines() {
        let rows = vec![
            ComparisonRow::new("Bert", 82.5, 81.0),
            ComparisonRow::new("BioBert", 89.8, 87.6),
        ];
        let t = render_comparison(&rows).unwrap();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(
            lines,
            [
                COMPARISON_HEADER,
                COMPARISON_RULE,
                "Bert | 82.5 | 81.0",
                "BioBert | 89.8 | 87.6"
            ]
        );
        let single = render_comparison(&rows[..1]).unwrap();
        assert_eq!(single.lines().count(), 3);
        assert_eq!(render_comparison(&[]).unwrap_err(), EvalError::EmptyTable);
    }

    #[test]
    fn parsing_and_sorting() {
        let mut rows = parse_results("# comment\nA, 10, 20\n\nB,30,40\nC,1,20\n").unwrap();
        sort_by_f1(&mut rows);
        let names: Vec<&str> = rows.iter().map(|r| r.model_name.as_str()).collect();
        assert_eq!(names, ["B", "A", "C"]);
        assert!(matches!(
            parse_results("A,1\n"),
            Err(EvalError::MalformedRow { line: 1, .. })
        ));
        assert!(matches!(
            parse_results("\nA,1,x\n"),
            Err(EvalError::MalformedRow { line: 2, .. })
        ));
        assert!(matches!(
            parse_results("A,1,101\n"),
            Err(EvalError::MalformedRow { .. })
        ));
        assert_eq!(
            parse_results("# only\n").unwrap_err(),
            EvalError::EmptyTable
        );
    }
}
