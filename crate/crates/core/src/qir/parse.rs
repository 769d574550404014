use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{gate_signature, IntrinsicCall, QirError, QirProgram, QIS_PREFIX};

const RT_PREFIX: &str = "__quantum__rt__";

struct Function<'a> {
    name: &'a str,
    header: &'a str,
    line: usize,
    /// `(1-based line number, text)` of every body line.
    body: Vec<(usize, &'a str)>,
}

/// Parses the entry function of a textual QIR module.
///
/// Lines that are not calls to `__quantum__` symbols are skipped, so
/// metadata, declarations and classical noise do not need to be understood.
pub fn parse_qir(text: &str) -> Result<QirProgram, QirError> {
    let lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, strip_comment(l))).collect();

    let mut attr_groups: BTreeMap<&str, &str> = BTreeMap::new();
    let mut functions = Vec::new();
    let mut iter = lines.iter().copied();
    while let Some((lineno, line)) = iter.next() {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix("attributes ") {
            if let Some((id, body)) = rest.split_once('=') {
                attr_groups.insert(id.trim(), body.trim());
            }
        } else if t.starts_with("define ") {
            let name = function_name(t).ok_or_else(|| parse_err(lineno, "cannot read function name"))?;
            let mut body = Vec::new();
            let mut closed = false;
            for (n, l) in iter.by_ref() {
                if l.trim() == "}" {
                    closed = true;
                    break;
                }
                body.push((n, l));
            }
            if !closed {
                return Err(parse_err(lineno, "unterminated function body"));
            }
            functions.push(Function { name, header: t, line: lineno, body });
        }
    }

    let attrs_of = |f: &Function<'_>| -> String {
        let mut s = String::from(f.header);
        for tok in f.header.split_whitespace() {
            if tok.starts_with('#') {
                if let Some(group) = attr_groups.get(tok) {
                    s.push(' ');
                    s.push_str(group);
                }
            }
        }
        s
    };

    let marked: Vec<&Function<'_>> = functions.iter().filter(|f| attrs_of(f).contains("\"entry_point\"")).collect();
    let entry = match (marked.as_slice(), functions.as_slice()) {
        ([one], _) => *one,
        ([], [only]) => only,
        ([], _) => return Err(QirError::NoEntryPoint),
        ([_, second, ..], _) => return Err(parse_err(second.line, "more than one entry point")),
    };
    let declared_qubits = attribute_value(&attrs_of(entry), "required_num_qubits");

    let mut calls = Vec::new();
    let mut output_order = Vec::new();
    let mut labels_seen = 0usize;
    let mut left_entry_block = false;
    for &(lineno, line) in &entry.body {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if is_label(t) {
            labels_seen += 1;
            if labels_seen > 1 {
                left_entry_block = true;
            }
            continue;
        }
        let Some(callee) = quantum_callee(t) else {
            if t.starts_with("br ") || t.starts_with("switch ") || t.starts_with("indirectbr ") {
                left_entry_block = true;
            }
            continue;
        };
        if left_entry_block {
            return Err(QirError::UnsupportedControlFlow { line: lineno });
        }
        let args = call_args(t, callee).ok_or_else(|| parse_err(lineno, "unbalanced call operands"))?;

        if let Some(short) = callee.strip_prefix(QIS_PREFIX) {
            let short = short.strip_suffix("__body").unwrap_or(short);
            let sig = gate_signature(short)
                .ok_or_else(|| QirError::UnsupportedIntrinsic { line: lineno, name: callee.to_string() })?;
            if args.len() != sig.doubles + sig.qubits + sig.results {
                return Err(parse_err(
                    lineno,
                    &format!(
                        "{callee} takes {} operands, found {}",
                        sig.doubles + sig.qubits + sig.results,
                        args.len()
                    ),
                ));
            }
            let (d, rest) = args.split_at(sig.doubles);
            let (q, r) = rest.split_at(sig.qubits);
            calls.push(IntrinsicCall {
                name: callee.to_string(),
                double_args: d
                    .iter()
                    .map(|a| parse_double(a))
                    .collect::<Option<_>>()
                    .ok_or_else(|| parse_err(lineno, "malformed double operand"))?,
                qubit_args: q
                    .iter()
                    .map(|a| parse_pointer(a, "%Qubit*"))
                    .collect::<Result<_, _>>()
                    .map_err(|m| parse_err(lineno, &m))?,
                result_args: r
                    .iter()
                    .map(|a| parse_pointer(a, "%Result*"))
                    .collect::<Result<_, _>>()
                    .map_err(|m| parse_err(lineno, &m))?,
            });
        } else {
            match callee.strip_prefix(RT_PREFIX) {
                Some("initialize" | "tuple_record_output" | "array_record_output") => {}
                Some("result_record_output") => {
                    let first = args.first().ok_or_else(|| parse_err(lineno, "missing result operand"))?;
                    output_order.push(parse_pointer(first, "%Result*").map_err(|m| parse_err(lineno, &m))?);
                }
                _ => {
                    return Err(QirError::UnsupportedIntrinsic { line: lineno, name: callee.to_string() });
                }
            }
        }
    }

    let required_qubits = match declared_qubits {
        Some(n) => n,
        None => calls.iter().flat_map(|c| c.qubit_args.iter()).max().map_or(0, |m| m + 1),
    };
    Ok(QirProgram { entry_name: entry.name.to_string(), required_qubits, calls, output_order })
}

fn parse_err(line: usize, message: &str) -> QirError {
    QirError::Parse { line, message: message.to_string() }
}

/// Drops a trailing `; comment`, ignoring semicolons inside quotes.
fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            ';' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn function_name(header: &str) -> Option<&str> {
    let at = header.find('@')?;
    let rest = &header[at + 1..];
    let end = rest.find('(')?;
    Some(rest[..end].trim_matches('"'))
}

fn is_label(t: &str) -> bool {
    t.strip_suffix(':')
        .is_some_and(|name| !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || "_.$-\"".contains(c)))
}

/// Callee symbol of a `call` instruction targeting a `__quantum__` function.
fn quantum_callee(t: &str) -> Option<&str> {
    if !t.contains("call ") {
        return None;
    }
    let at = t.find("@__quantum__")?;
    let rest = &t[at + 1..];
    let end = rest.find('(')?;
    Some(rest[..end].trim())
}

/// Splits the parenthesized operand list following `callee` on top-level
/// commas.
fn call_args<'a>(t: &'a str, callee: &str) -> Option<Vec<&'a str>> {
    let start = t.find(callee)? + callee.len();
    let open = start + t[start..].find('(')?;
    let mut depth = 0i32;
    let mut args = Vec::new();
    let mut arg_start = open + 1;
    for (i, c) in t[open..].char_indices() {
        let i = i + open;
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => {
                depth -= 1;
                if depth == 0 {
                    let last = t[arg_start..i].trim();
                    if !last.is_empty() || !args.is_empty() {
                        args.push(last);
                    }
                    return Some(args);
                }
            }
            ',' if depth == 1 => {
                args.push(t[arg_start..i].trim());
                arg_start = i + 1;
            }
            _ => {}
        }
    }
    None
}

/// Decodes `<ty> null` or `<ty> inttoptr (i64 N to <ty>)`, where `<ty>` is
/// `expected` or an opaque `ptr`.
fn parse_pointer(arg: &str, expected: &str) -> Result<usize, String> {
    let spaced = arg.replace('(', " ( ").replace(')', " ) ");
    let toks: Vec<&str> = spaced.split_whitespace().collect();
    let bad = || format!("malformed operand `{arg}`, expected {expected} null or inttoptr");
    let (&ty, rest) = toks.split_first().ok_or_else(bad)?;
    if ty != expected && ty != "ptr" {
        return Err(format!("operand `{arg}` has type {ty}, expected {expected}"));
    }
    match rest {
        ["null"] => Ok(0),
        ["inttoptr", "(", "i64", n, "to", to_ty, ")"] if *to_ty == ty => {
            n.parse::<usize>().map_err(|_| format!("invalid index `{n}` in operand `{arg}`"))
        }
        _ => Err(bad()),
    }
}

/// Decodes `double <literal>`; accepts decimal and LLVM hex (`0x...`) forms.
fn parse_double(arg: &str) -> Option<f64> {
    let lit = arg.trim().strip_prefix("double")?.trim();
    if let Some(hex) = lit.strip_prefix("0x").or_else(|| lit.strip_prefix("0X")) {
        if hex.len() != 16 {
            return None;
        }
        return u64::from_str_radix(hex, 16).ok().map(f64::from_bits);
    }
    lit.parse::<f64>().ok()
}

fn attribute_value(attrs: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"=\"");
    let start = attrs.find(&needle)? + needle.len();
    let end = start + attrs[start..].find('"')?;
    attrs[start..end].parse().ok()
}
