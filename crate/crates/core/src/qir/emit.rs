use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use core::fmt::Write;

use super::{gate_signature, IntrinsicCall, QirProgram, QIS_PREFIX};

/// Writes `prog` as a base-profile style QIR module that [`super::parse_qir`]
/// reads back to an equal program.
pub fn emit_qir(prog: &QirProgram) -> String {
    let mut out = String::new();
    let name = &prog.entry_name;
    let _ = writeln!(out, "; ModuleID = '{name}'");
    let _ = writeln!(out, "source_filename = \"{name}\"\n");
    out.push_str("%Qubit = type opaque\n%Result = type opaque\n\n");
    let _ = writeln!(out, "define void @{name}() #0 {{");
    out.push_str("entry:\n");
    out.push_str("  call void @__quantum__rt__initialize(i8* null)\n");

    let mut decls: BTreeMap<&str, String> = BTreeMap::new();
    for call in &prog.calls {
        let operands = operands(call);
        let _ = writeln!(out, "  call void @{}({})", call.name, operands.join(", "));
        let types: alloc::vec::Vec<&str> = operands.iter().map(|o| o.split(' ').next().unwrap_or("")).collect();
        let attr = if call.result_args.is_empty() { "" } else { " #1" };
        decls.insert(&call.name, format!("declare void @{}({}){attr}", call.name, types.join(", ")));
    }
    for r in &prog.output_order {
        let _ =
            writeln!(out, "  call void @__quantum__rt__result_record_output({}, i8* null)", pointer("%Result*", *r));
    }
    out.push_str("  ret void\n}\n\n");

    out.push_str("declare void @__quantum__rt__initialize(i8*)\n\n");
    for d in decls.values() {
        out.push_str(d);
        out.push('\n');
    }
    if !prog.output_order.is_empty() {
        out.push_str("\ndeclare void @__quantum__rt__result_record_output(%Result*, i8*)\n");
    }

    let results =
        prog.calls.iter().flat_map(|c| c.result_args.iter()).chain(prog.output_order.iter()).max().map_or(0, |m| m + 1);
    let _ = writeln!(
        out,
        "\nattributes #0 = {{ \"entry_point\" \"output_labeling_schema\" \"qir_profiles\"=\"base_profile\" \"required_num_qubits\"=\"{}\" \"required_num_results\"=\"{results}\" }}",
        prog.required_qubits
    );
    out.push_str("attributes #1 = { \"irreversible\" }\n\n");
    out.push_str(concat!(
        "!llvm.module.flags = !{!0, !1, !2, !3}\n\n",
        "!0 = !{i32 1, !\"qir_major_version\", i32 1}\n",
        "!1 = !{i32 7, !\"qir_minor_version\", i32 0}\n",
        "!2 = !{i32 1, !\"dynamic_qubit_management\", i1 false}\n",
        "!3 = !{i32 1, !\"dynamic_result_management\", i1 false}\n",
    ));
    out
}

fn operands(call: &IntrinsicCall) -> alloc::vec::Vec<String> {
    // gate intrinsics take doubles, then qubits, then results
    let known = call.name.strip_prefix(QIS_PREFIX).map(|s| s.strip_suffix("__body").unwrap_or(s));
    debug_assert!(known.and_then(gate_signature).is_some(), "emitting unknown intrinsic {}", call.name);
    call.double_args
        .iter()
        .map(|d| format!("double {}", double_literal(*d)))
        .chain(call.qubit_args.iter().map(|q| pointer("%Qubit*", *q)))
        .chain(call.result_args.iter().map(|r| pointer("%Result*", *r)))
        .collect()
}

fn pointer(ty: &str, index: usize) -> String {
    if index == 0 {
        format!("{ty} null")
    } else {
        format!("{ty} inttoptr (i64 {index} to {ty})")
    }
}

/// Shortest exact decimal when LLVM's lexer accepts it, else the exact hex
/// bit pattern.
fn double_literal(x: f64) -> String {
    let dec = format!("{x:?}");
    if x.is_finite() && dec.contains('.') && !dec.contains('e') {
        dec
    } else {
        format!("0x{:016X}", x.to_bits())
    }
}
