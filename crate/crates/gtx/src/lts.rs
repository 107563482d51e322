//! Plain-text export of explored state spaces.

use std::fmt::Write;

use gtx_core::explore::Lts;

/// One `state S<i> <certificate>` line per state in discovery order, then one
/// `trans S<i> -RULE-> S<j>` line per transition.
pub fn export(lts: &Lts) -> String {
    let mut out = String::new();
    for (i, s) in lts.states.iter().enumerate() {
        let _ = writeln!(out, "state S{i} {:016x}", s.certificate);
    }
    for t in &lts.transitions {
        let _ = writeln!(out, "trans S{} -{}-> S{}", t.from, t.rule, t.to);
    }
    out
}
