//! CPLEX-LP subset writer and read-back parser, plus the solution-file
//! format. The writer is byte-deterministic for a given model; the parser
//! accepts exactly the subset the writer emits (Maximize/Minimize, Subject
//! To, Bounds, Binaries, End).

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::rational::{Rat, ONE, ZERO};
use super::{MilpModel, MilpSolution, ObjectiveSense, RowSense, SolveStatus, VarKind};

#[derive(Debug, Error)]
pub enum LpError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {0}: {1}")]
    Parse(usize, String),
    #[error("solution names unknown variable '{0}'")]
    UnknownVariable(String),
    #[error("external solver disagreement: {0}")]
    Disagreement(String),
    #[error("model error: {0}")]
    Model(String),
}

/// LP-legal identifier: letters, digits, underscore, not starting with a
/// digit or a period.
pub fn legal_name(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Decimal rendering of an exact rational for LP output: integers verbatim,
/// non-integers through the shortest f64 round-trip form. Model builders keep
/// coefficients integral so this is normally exact.
pub fn lp_number(r: Rat) -> String {
    if r.is_integer() {
        format!("{}", r.numer())
    } else {
        format!("{}", r.to_f64())
    }
}

fn push_terms(out: &mut String, terms: &[(usize, Rat)], model: &MilpModel) {
    if terms.is_empty() {
        out.push('0');
        return;
    }
    for (pos, &(idx, coeff)) in terms.iter().enumerate() {
        let name = &model.variables()[idx].name;
        let mag = coeff.abs();
        if pos == 0 {
            if coeff.is_negative() {
                out.push_str("- ");
            }
        } else if coeff.is_negative() {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        if mag == ONE {
            out.push_str(name);
        } else {
            out.push_str(&lp_number(mag));
            out.push(' ');
            out.push_str(name);
        }
    }
}

pub fn write_lp_string(model: &MilpModel) -> Result<String, LpError> {
    for v in model.variables() {
        if !legal_name(&v.name) {
            return Err(LpError::Model(format!("illegal variable name '{}'", v.name)));
        }
    }
    let mut out = String::new();
    out.push_str(match model.sense {
        ObjectiveSense::Maximize => "Maximize\n",
        ObjectiveSense::Minimize => "Minimize\n",
    });
    let obj_terms: Vec<(usize, Rat)> = model
        .variables()
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.objective.is_zero())
        .map(|(i, v)| (i, v.objective))
        .collect();
    out.push_str(" obj: ");
    push_terms(&mut out, &obj_terms, model);
    out.push('\n');

    out.push_str("Subject To\n");
    for c in model.constraints() {
        out.push(' ');
        out.push_str(&c.name);
        out.push_str(": ");
        push_terms(&mut out, &c.terms, model);
        out.push_str(match c.sense {
            RowSense::Le => " <= ",
            RowSense::Ge => " >= ",
            RowSense::Eq => " = ",
        });
        out.push_str(&lp_number(c.rhs));
        out.push('\n');
    }

    let continuous: Vec<&str> = model
        .variables()
        .iter()
        .filter(|v| v.kind == VarKind::ContinuousNonNegative)
        .map(|v| v.name.as_str())
        .collect();
    if !continuous.is_empty() {
        out.push_str("Bounds\n");
        for name in continuous {
            out.push(' ');
            out.push_str(name);
            out.push_str(" >= 0\n");
        }
    }

    let binaries: Vec<&str> = model
        .variables()
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for name in binaries {
            out.push(' ');
            out.push_str(name);
            out.push('\n');
        }
    }
    out.push_str("End\n");
    Ok(out)
}

pub fn write_lp(model: &MilpModel, path: &Path) -> Result<(), LpError> {
    let s = write_lp_string(model)?;
    fs::write(path, s).map_err(|e| LpError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Parses the LP subset emitted by [`write_lp_string`] back into a model.
/// Variable kinds come from the Bounds/Binaries sections.
pub fn parse_lp(text: &str) -> Result<MilpModel, LpError> {
    #[derive(PartialEq)]
    enum Section {
        Objective,
        Constraints,
        Bounds,
        Binaries,
        Done,
    }
    let mut sense = None;
    let mut section = None;
    // (name, terms by var name, sense, rhs)
    let mut obj_terms: Vec<(String, Rat)> = Vec::new();
    let mut rows: Vec<(String, Vec<(String, Rat)>, RowSense, Rat)> = Vec::new();
    let mut binaries: Vec<String> = Vec::new();
    let mut bounded: Vec<String> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('\\') {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        match lower.as_str() {
            "maximize" | "maximise" => {
                sense = Some(ObjectiveSense::Maximize);
                section = Some(Section::Objective);
                continue;
            }
            "minimize" | "minimise" => {
                sense = Some(ObjectiveSense::Minimize);
                section = Some(Section::Objective);
                continue;
            }
            "subject to" | "st" | "s.t." => {
                section = Some(Section::Constraints);
                continue;
            }
            "bounds" => {
                section = Some(Section::Bounds);
                continue;
            }
            "binaries" | "binary" => {
                section = Some(Section::Binaries);
                continue;
            }
            "end" => {
                section = Some(Section::Done);
                continue;
            }
            _ => {}
        }
        match section {
            Some(Section::Objective) => {
                let body = match line.split_once(':') {
                    Some((_, b)) => b,
                    None => line,
                };
                obj_terms.extend(parse_terms(body, lineno)?);
            }
            Some(Section::Constraints) => {
                let (name, body) = line.split_once(':').ok_or_else(|| {
                    LpError::Parse(lineno, "constraint without a name".into())
                })?;
                let (terms_str, sense_row, rhs_str) = split_relation(body, lineno)?;
                let terms = parse_terms(terms_str, lineno)?;
                let rhs = Rat::parse_decimal(rhs_str)
                    .map_err(|e| LpError::Parse(lineno, e.to_string()))?;
                rows.push((name.trim().to_string(), terms, sense_row, rhs));
            }
            Some(Section::Bounds) => {
                // Only the form emitted by the writer: `name >= 0`.
                let parts: Vec<&str> = line.split_whitespace().collect();
                if parts.len() == 3 && parts[1] == ">=" && parts[2] == "0" {
                    bounded.push(parts[0].to_string());
                } else {
                    return Err(LpError::Parse(
                        lineno,
                        format!("unsupported bounds line '{line}'"),
                    ));
                }
            }
            Some(Section::Binaries) => {
                for name in line.split_whitespace() {
                    binaries.push(name.to_string());
                }
            }
            Some(Section::Done) => {
                return Err(LpError::Parse(lineno, "content after End".into()));
            }
            None => {
                return Err(LpError::Parse(lineno, "content before objective".into()));
            }
        }
    }
    let sense = sense.ok_or_else(|| LpError::Parse(0, "missing objective sense".into()))?;

    // Variable order: objective, then rows, then bounds, then binaries.
    let mut model = MilpModel::new(sense);
    let ensure_var = |model: &mut MilpModel, name: &str| -> Result<usize, LpError> {
        match model.var_by_name(name) {
            Some(i) => Ok(i),
            None => model
                .add_continuous(name.to_string(), ZERO)
                .map_err(|e| LpError::Model(e.to_string())),
        }
    };
    let mut objective: Vec<(String, Rat)> = Vec::new();
    for (name, coeff) in obj_terms {
        ensure_var(&mut model, &name)?;
        objective.push((name, coeff));
    }
    for (_, terms, _, _) in &rows {
        for (name, _) in terms {
            ensure_var(&mut model, name)?;
        }
    }
    for name in &bounded {
        ensure_var(&mut model, name)?;
    }
    for name in &binaries {
        ensure_var(&mut model, name)?;
    }

    // Apply kinds and objective coefficients, then rows.
    let mut kinds: Vec<VarKind> = vec![VarKind::ContinuousNonNegative; model.variables().len()];
    for name in &binaries {
        kinds[model.var_by_name(name).unwrap()] = VarKind::Binary;
    }
    let mut rebuilt = MilpModel::new(sense);
    for (i, v) in model.variables().iter().enumerate() {
        let obj = Rat::sum(
            objective
                .iter()
                .filter(|(n, _)| n == &v.name)
                .map(|&(_, c)| c),
        )
        .map_err(|e| LpError::Model(e.to_string()))?;
        rebuilt
            .add_variable(v.name.clone(), kinds[i], obj)
            .map_err(|e| LpError::Model(e.to_string()))?;
    }
    for (name, terms, sense_row, rhs) in rows {
        let terms: Vec<(usize, Rat)> = terms
            .into_iter()
            .map(|(n, c)| (rebuilt.var_by_name(&n).unwrap(), c))
            .collect();
        rebuilt
            .add_constraint(name, terms, sense_row, rhs)
            .map_err(|e| LpError::Model(e.to_string()))?;
    }
    Ok(rebuilt)
}

fn split_relation(body: &str, lineno: usize) -> Result<(&str, RowSense, &str), LpError> {
    for (token, sense) in [
        ("<=", RowSense::Le),
        (">=", RowSense::Ge),
        ("=", RowSense::Eq),
    ] {
        if let Some(pos) = body.find(token) {
            return Ok((&body[..pos], sense, &body[pos + token.len()..]));
        }
    }
    Err(LpError::Parse(lineno, format!("no relation in '{body}'")))
}

/// Parses `3 x + y - 0.5 z` into name/coefficient pairs. `0` alone parses to
/// no terms.
fn parse_terms(s: &str, lineno: usize) -> Result<Vec<(String, Rat)>, LpError> {
    let mut terms = Vec::new();
    let tokens: Vec<&str> = s.split_whitespace().collect();
    if tokens.is_empty() || (tokens.len() == 1 && tokens[0] == "0") {
        return Ok(terms);
    }
    let mut i = 0;
    let mut sign = ONE;
    while i < tokens.len() {
        match tokens[i] {
            "+" => {
                sign = ONE;
                i += 1;
            }
            "-" => {
                sign = ONE.neg();
                i += 1;
            }
            tok => {
                // Either `coeff name` or bare `name` (also `coeff` glued like "2x" is not emitted).
                let (coeff, name) = if tok.chars().next().map(|c| c.is_ascii_digit() || c == '.')
                    == Some(true)
                {
                    let c = Rat::parse_decimal(tok)
                        .map_err(|e| LpError::Parse(lineno, e.to_string()))?;
                    let name = tokens.get(i + 1).ok_or_else(|| {
                        LpError::Parse(lineno, format!("dangling coefficient '{tok}'"))
                    })?;
                    i += 2;
                    (c, name.to_string())
                } else {
                    i += 1;
                    (ONE, tok.to_string())
                };
                if !legal_name(&name) {
                    return Err(LpError::Parse(lineno, format!("bad name '{name}'")));
                }
                terms.push((name, coeff.mul(sign).map_err(|e| LpError::Parse(lineno, e.to_string()))?));
                sign = ONE;
            }
        }
    }
    Ok(terms)
}

/// Writes a solution in the documented format: `status`, `objective`, then
/// one `name value` line per variable in model order.
pub fn write_solution_string(model: &MilpModel, solution: &MilpSolution) -> String {
    let mut out = String::new();
    out.push_str("status ");
    out.push_str(match solution.status {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::TimedOut => "timeout",
    });
    out.push('\n');
    out.push_str(&format!("objective {}\n", lp_number(solution.objective)));
    if let Some(assignment) = &solution.assignment {
        for (v, &x) in model.variables().iter().zip(assignment) {
            out.push_str(&format!("{} {}\n", v.name, lp_number(x)));
        }
    }
    out
}

pub fn write_solution(
    model: &MilpModel,
    solution: &MilpSolution,
    path: &Path,
) -> Result<(), LpError> {
    fs::write(path, write_solution_string(model, solution)).map_err(|e| LpError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Reads a solution file and validates it against the model: within 1e-6 on
/// every row first, then binaries are rounded to 0/1 and the assignment is
/// re-validated exactly. A violation after rounding is reported as external
/// solver disagreement.
pub fn read_solution(model: &MilpModel, text: &str) -> Result<MilpSolution, LpError> {
    let mut lines = text.lines().enumerate();
    let (_, status_line) = lines
        .next()
        .ok_or_else(|| LpError::Parse(1, "empty solution file".into()))?;
    let status = match status_line.trim().strip_prefix("status ") {
        Some("optimal") => SolveStatus::Optimal,
        Some("infeasible") => SolveStatus::Infeasible,
        Some("timeout") => SolveStatus::TimedOut,
        _ => {
            return Err(LpError::Parse(
                1,
                format!("bad status line '{status_line}'"),
            ))
        }
    };
    let (_, obj_line) = lines
        .next()
        .ok_or_else(|| LpError::Parse(2, "missing objective line".into()))?;
    let objective = obj_line
        .trim()
        .strip_prefix("objective ")
        .and_then(|s| Rat::parse_decimal(s).ok())
        .ok_or_else(|| LpError::Parse(2, format!("bad objective line '{obj_line}'")))?;

    let mut values: Vec<Option<Rat>> = vec![None; model.variables().len()];
    let mut any = false;
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (name, value) = line.split_once(' ').ok_or_else(|| {
            LpError::Parse(lineno + 1, format!("bad assignment line '{line}'"))
        })?;
        let idx = model
            .var_by_name(name.trim())
            .ok_or_else(|| LpError::UnknownVariable(name.trim().to_string()))?;
        let v = Rat::parse_decimal(value.trim())
            .map_err(|e| LpError::Parse(lineno + 1, e.to_string()))?;
        values[idx] = Some(v);
        any = true;
    }

    if status == SolveStatus::Infeasible || !any {
        return Ok(MilpSolution {
            status,
            objective,
            assignment: None,
        });
    }

    // Unlisted variables default to zero.
    let mut assignment: Vec<Rat> = values.into_iter().map(|v| v.unwrap_or(ZERO)).collect();
    let tol = Rat::new(1, 1_000_000).unwrap();
    for c in model.constraints() {
        let lhs = model
            .row_activity(c, &assignment)
            .map_err(|e| LpError::Model(e.to_string()))?;
        let violation = match c.sense {
            RowSense::Le => lhs.sub(c.rhs),
            RowSense::Ge => c.rhs.sub(lhs),
            RowSense::Eq => {
                let d = lhs.sub(c.rhs).map(|d| d.abs());
                d
            }
        }
        .map_err(|e| LpError::Model(e.to_string()))?;
        if violation > tol {
            return Err(LpError::Disagreement(format!(
                "row {} violated by {} (> 1e-6)",
                c.name, violation
            )));
        }
    }
    for (i, v) in model.variables().iter().enumerate() {
        if v.kind == VarKind::Binary {
            let rounded = assignment[i].round_to_int();
            if !(0..=1).contains(&rounded)
                || assignment[i].sub(Rat::int(rounded)).unwrap().abs() > tol
            {
                return Err(LpError::Disagreement(format!(
                    "binary {} has value {}",
                    v.name, assignment[i]
                )));
            }
            assignment[i] = Rat::int(rounded);
        }
    }
    model
        .check_assignment(&assignment)
        .map_err(LpError::Disagreement)?;

    let objective = model
        .objective_value(&assignment)
        .map_err(|e| LpError::Model(e.to_string()))?;
    Ok(MilpSolution {
        status,
        objective,
        assignment: Some(assignment),
    })
}

pub fn read_solution_file(model: &MilpModel, path: &Path) -> Result<MilpSolution, LpError> {
    let text = fs::read_to_string(path).map_err(|e| LpError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    read_solution(model, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_model() -> MilpModel {
        let mut m = MilpModel::new(ObjectiveSense::Maximize);
        let x = m.add_binary("x", ONE).unwrap();
        m.add_constraint("cap", vec![(x, ONE)], RowSense::Le, ONE)
            .unwrap();
        m
    }

    #[test]
    fn empty_model_writes_zero_objective() {
        let m = MilpModel::new(ObjectiveSense::Maximize);
        let s = write_lp_string(&m).unwrap();
        assert_eq!(s, "Maximize\n obj: 0\nSubject To\nEnd\n");
    }

    #[test]
    fn single_binary_golden() {
        let s = write_lp_string(&tiny_model()).unwrap();
        assert_eq!(
            s,
            "Maximize\n obj: x\nSubject To\n cap: x <= 1\nBinaries\n x\nEnd\n"
        );
    }

    #[test]
    fn writer_is_deterministic() {
        let m = tiny_model();
        assert_eq!(write_lp_string(&m).unwrap(), write_lp_string(&m).unwrap());
    }

    #[test]
    fn writer_parser_duality() {
        let mut m = MilpModel::new(ObjectiveSense::Minimize);
        let x = m.add_binary("x_c0", Rat::int(2)).unwrap();
        let y = m.add_binary("x_c1", Rat::int(3)).unwrap();
        let z = m.add_continuous("y_0_1", ZERO).unwrap();
        m.add_constraint(
            "pack_v0",
            vec![(x, ONE), (y, ONE)],
            RowSense::Le,
            ONE,
        )
        .unwrap();
        m.add_constraint(
            "link_0_1",
            vec![(x, ONE), (z, ONE.neg())],
            RowSense::Eq,
            ZERO,
        )
        .unwrap();
        m.add_constraint(
            "stab_c0",
            vec![(x, Rat::int(2)), (y, Rat::new(-1, 4).unwrap())],
            RowSense::Ge,
            ONE,
        )
        .unwrap();
        let text = write_lp_string(&m).unwrap();
        let back = parse_lp(&text).unwrap();
        assert_eq!(m, back);
        assert_eq!(write_lp_string(&back).unwrap(), text);
    }

    #[test]
    fn solution_round_trip() {
        let m = tiny_model();
        let sol = MilpSolution {
            status: SolveStatus::Optimal,
            objective: ONE,
            assignment: Some(vec![ONE]),
        };
        let text = write_solution_string(&m, &sol);
        let back = read_solution(&m, &text).unwrap();
        assert_eq!(back, sol);
    }

    #[test]
    fn solution_rejects_unknown_names_and_violations() {
        let m = tiny_model();
        let err = read_solution(&m, "status optimal\nobjective 1\nnope 1\n").unwrap_err();
        assert!(matches!(err, LpError::UnknownVariable(_)));
        let err = read_solution(&m, "status optimal\nobjective 2\nx 2\n").unwrap_err();
        assert!(matches!(err, LpError::Disagreement(_)));
    }

    #[test]
    fn solution_tolerates_float_noise_then_rounds() {
        let m = tiny_model();
        let sol = read_solution(&m, "status optimal\nobjective 1\nx 0.9999999\n").unwrap();
        assert_eq!(sol.assignment.unwrap(), vec![ONE]);
    }

    #[test]
    fn infeasible_solution_carries_no_assignment() {
        let m = tiny_model();
        let sol = read_solution(&m, "status infeasible\nobjective 0\n").unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert!(sol.assignment.is_none());
    }
}
