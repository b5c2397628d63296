//! Text formats: eigenvalue lists as CSV with `#` metadata lines, and TSV
//! tables for plotting.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectrum::{EigenRecord, EigenvalueList, ListMetadata};

/// `v` with 15 significant digits, in positional notation when that is short.
pub fn format_sig15(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.14e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..15).contains(&exp) {
        return sci;
    }
    let (sign, mant) = mant.strip_prefix('-').map_or(("", mant), |m| ("-", m));
    let digits: String = mant.chars().filter(|c| *c != '.').collect();
    let body = if exp >= 0 {
        let split = exp as usize + 1;
        format!("{}.{}", &digits[..split], &digits[split..])
    } else {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    };
    format!("{sign}{body}")
}

pub fn list_to_csv(list: &EigenvalueList) -> String {
    let m = &list.meta;
    let mut out = String::new();
    let _ = writeln!(out, "# group={}", list.group);
    let _ = writeln!(out, "# eps={}", m.eps);
    let _ = writeln!(out, "# r_lo={}", m.r_lo);
    let _ = writeln!(out, "# r_hi={}", m.r_hi);
    let _ = writeln!(out, "# count={}", list.len());
    let _ = writeln!(out, "# timestamp={}", m.timestamp);
    let _ = writeln!(out, "# code_version={}", m.code_version);
    let _ = writeln!(out, "# config_hash={}", m.config_hash);
    out.push_str("n,r,lambda\n");
    for e in &list.records {
        let _ = writeln!(out, "{},{},{}", e.n, format_sig15(e.r), format_sig15(e.lambda));
    }
    out
}

fn parse_num<T: std::str::FromStr>(v: &str, what: &str, line: usize) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Parse(format!("line {line}: bad {what} '{v}'")))
}

pub fn list_from_csv(text: &str) -> Result<EigenvalueList> {
    let mut group = None;
    let mut count = None;
    let mut meta = ListMetadata::default();
    let mut records = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let line = line.trim_end();
        if let Some(kv) = line.strip_prefix('#') {
            let Some((k, v)) = kv.trim().split_once('=') else { continue };
            match k.trim() {
                "group" => group = Some(parse_num::<u64>(v, "group", ln)?),
                "eps" => meta.eps = parse_num(v, "eps", ln)?,
                "r_lo" => meta.r_lo = parse_num(v, "r_lo", ln)?,
                "r_hi" => meta.r_hi = parse_num(v, "r_hi", ln)?,
                "count" => count = Some(parse_num::<usize>(v, "count", ln)?),
                "timestamp" => meta.timestamp = v.to_string(),
                "code_version" => meta.code_version = v.to_string(),
                "config_hash" => meta.config_hash = v.to_string(),
                _ => {}
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        if !seen_header {
            if line.replace(' ', "") != "n,r,lambda" {
                return Err(Error::Parse(format!("line {ln}: expected header 'n,r,lambda'")));
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!("line {ln}: expected 3 fields, found {}", fields.len())));
        }
        records.push(EigenRecord {
            n: parse_num(fields[0], "index", ln)?,
            r: parse_num(fields[1], "r", ln)?,
            lambda: parse_num(fields[2], "lambda", ln)?,
        });
    }
    let group = group.ok_or_else(|| Error::Parse("missing '# group=' line".into()))?;
    if let Some(c) = count {
        if c != records.len() {
            return Err(Error::Parse(format!("header says {c} records, found {}", records.len())));
        }
    }
    let list = EigenvalueList { group, records, meta };
    list.validate()?;
    Ok(list)
}

pub fn save_list(list: &EigenvalueList, path: &Path) -> Result<()> {
    std::fs::write(path, list_to_csv(list))?;
    Ok(())
}

pub fn load_list(path: &Path) -> Result<EigenvalueList> {
    list_from_csv(&std::fs::read_to_string(path)?)
}

/// Tab-separated table; `meta` lines are written first as `# key=value`.
pub fn tsv(meta: &[(&str, String)], header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str(&header.join("\t"));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format_sig15(*v)).collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig15_forms() {
        assert_eq!(format_sig15(4.1324042151), "4.13240421510000");
        assert_eq!(format_sig15(-0.00123), "-0.00123000000000000");
        assert_eq!(format_sig15(17.326764596672046), "17.3267645966720");
        assert_eq!(format_sig15(1e20), "1.00000000000000e20");
    }

    #[test]
    fn csv_round_trip() {
        let meta = ListMetadata { eps: 1e-8, r_lo: 0.0, r_hi: 7.3, config_hash: "abc".into(), ..Default::default() };
        let list = EigenvalueList::new(6, vec![4.548454921400123, 5.098741908712345], meta).unwrap();
        let back = list_from_csv(&list_to_csv(&list)).unwrap();
        assert_eq!(back, list);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(list_from_csv("n,r,lambda\n1,4.0,16.25\n").is_err());
        assert!(list_from_csv("# group=5\nn,r,lambda\n1,4.0,17.0\n").is_err());
        assert!(list_from_csv("# group=5\nn,r,lambda\n1,4.0\n").is_err());
        assert!(list_from_csv("# group=5\n# count=2\nn,r,lambda\n1,4.0,16.25\n").is_err());
    }
}
