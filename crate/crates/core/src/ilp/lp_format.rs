use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use super::{IlpError, IlpModel, Sense, VarKind};

const KEYWORDS: &[&str] = &[
    "st", "s.t.", "subject", "to", "such", "that", "min", "max", "minimize", "maximize",
    "minimum", "maximum", "bounds", "bound", "binary", "binaries", "bin", "general", "generals",
    "gen", "end", "free", "inf", "infinity", "semi", "semis", "sos",
];

fn sanitize(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    let starts_badly = s
        .chars()
        .next()
        .is_none_or(|c| c.is_ascii_digit() || c == 'e' || c == 'E');
    if starts_badly || KEYWORDS.contains(&s.to_ascii_lowercase().as_str()) {
        s.insert_str(0, "v_");
    }
    s
}

/// LP-file variable names in variable order: sanitized to `[A-Za-z0-9_]` and
/// made unique with numeric suffixes.
pub fn lp_names(model: &IlpModel) -> Vec<String> {
    let mut used = BTreeSet::new();
    let mut out = Vec::with_capacity(model.num_vars());
    for v in model.vars() {
        let base = sanitize(&v.name);
        let mut name = base.clone();
        let mut k = 2;
        while used.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        used.insert(name.clone());
        out.push(name);
    }
    out
}

fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:?}")
    }
}

fn write_terms(out: &mut String, terms: impl Iterator<Item = (String, f64)>) {
    let mut first = true;
    for (i, (name, c)) in terms.enumerate() {
        if i > 0 && i % 8 == 0 {
            out.push_str("\n   ");
        }
        let sign = if c < 0.0 { "-" } else { "+" };
        let mag = c.abs();
        if first {
            if c < 0.0 {
                out.push_str(" -");
            }
        } else {
            let _ = write!(out, " {sign}");
        }
        if mag == 1.0 {
            let _ = write!(out, " {name}");
        } else {
            let _ = write!(out, " {} {name}", fmt_num(mag));
        }
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
}

/// Renders the model in CPLEX LP format.
pub fn write_lp(model: &IlpModel) -> String {
    let names = lp_names(model);
    let mut out = String::new();
    out.push_str("Minimize\n obj:");
    match model.objective() {
        Some(obj) if !obj.is_constant() => {
            write_terms(&mut out, obj.terms().map(|(v, c)| (names[v.index()].clone(), c)))
        }
        _ => match names.first() {
            Some(n) => {
                let _ = write!(out, " 0 {n}");
            }
            None => out.push_str(" 0"),
        },
    }
    out.push_str("\nSubject To\n");
    for (i, c) in model.constraints().iter().enumerate() {
        let tag = sanitize(model.tag_name(c.tag));
        let _ = write!(out, " {tag}_{i}:");
        write_terms(
            &mut out,
            c.terms.iter().map(|&(v, k)| (names[v.index()].clone(), k)),
        );
        let sense = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        // an empty row still needs a variable reference for most readers
        if c.terms.is_empty() {
            if let Some(n) = names.first() {
                let _ = write!(out, " + 0 {n}");
            }
        }
        let _ = writeln!(out, " {sense} {}", fmt_num(c.rhs));
    }
    out.push_str("Bounds\n");
    for (v, name) in model.vars().iter().zip(&names) {
        let (lo, hi) = v.kind.bounds();
        let _ = writeln!(out, " {} <= {name} <= {}", fmt_num(lo), fmt_num(hi));
    }
    let bins: Vec<_> = model
        .vars()
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .map(|(_, n)| n.as_str())
        .collect();
    let gens: Vec<_> = model
        .vars()
        .iter()
        .zip(&names)
        .filter(|(v, _)| matches!(v.kind, VarKind::Integer { .. }))
        .map(|(_, n)| n.as_str())
        .collect();
    for (header, list) in [("Binaries", bins), ("Generals", gens)] {
        if list.is_empty() {
            continue;
        }
        out.push_str(header);
        out.push('\n');
        for chunk in list.chunks(10) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

pub fn export_lp(model: &IlpModel, path: impl AsRef<Path>) -> Result<(), IlpError> {
    std::fs::write(path, write_lp(model))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ilp::{LinExpr, VarKind};

    #[test]
    fn empty_model() {
        let lp = write_lp(&IlpModel::new());
        assert!(lp.starts_with("Minimize\n obj: 0\nSubject To\n"));
        assert!(lp.ends_with("End\n"));
    }

    #[test]
    fn small_model_golden() {
        let mut m = IlpModel::new();
        let x = m.binary("w[0,1]");
        let y = m.add_var(VarKind::Integer { lo: 0, hi: 3 }, "u 2").unwrap();
        let z = m
            .add_var(VarKind::Continuous { lo: -1.5, hi: 2.0 }, "e1")
            .unwrap();
        m.add_constraint(
            LinExpr::var(x).with_term(y, -2.0).with_term(z, 0.5),
            Sense::Le,
            1.0,
            "dynamics",
        )
        .unwrap();
        m.add_constraint(LinExpr::var(y).with_constant(1.0), Sense::Ge, 2.0, "loop")
            .unwrap();
        let expected = "Minimize
 obj: 0 w_0_1_
Subject To
 dynamics_0: w_0_1_ - 2 u_2 + 0.5 v_e1 <= 1
 loop_1: u_2 >= 1
Bounds
 0 <= w_0_1_ <= 1
 0 <= u_2 <= 3
 -1.5 <= v_e1 <= 2
Binaries
 w_0_1_
Generals
 u_2
End
";
        assert_eq!(write_lp(&m), expected);
        assert_eq!(write_lp(&m), write_lp(&m.clone()));
    }

    #[test]
    fn name_collisions_get_suffixes() {
        let mut m = IlpModel::new();
        m.binary("a.b");
        m.binary("a_b");
        m.binary("a b");
        assert_eq!(lp_names(&m), vec!["a_b", "a_b_2", "a_b_3"]);
    }
}
