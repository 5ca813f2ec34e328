//! Line-oriented problem-file format.
//!
//! ```text
//! # comment
//! [interval]
//! a = 0
//! b = 1
//!
//! [orders]
//! alpha = 0.5          # scalar or comma-list, one entry per component
//! beta  = 0.5
//! gamma = 1
//!
//! [objective.1]
//! lagrangian = 0.5*(v1 - exp(x))^2
//!
//! [objective.2]
//! lagrangian = 0.5*v1^2
//!
//! [boundary]
//! left  = fixed:0      # comma-list per component: fixed:<v> | free | ub:<v>
//! right = fixed:1.7182818284590452
//!
//! [constraint.1]
//! kind = iso_eq        # iso_eq | iso_ineq | pw_eq | pw_ineq
//! integrand = v1^2
//! target = 1.0         # isoperimetric kinds only
//!
//! [run]
//! n = 512
//! weights = 11
//! grad_tol = 1e-6
//! out = out
//! ```
//!
//! Unknown keys and sections are errors; every diagnostic carries the
//! 1-based line number.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::expr::parse_lagrangian;
use crate::fracops::FracOrders;
use crate::problem::{
    BoundarySpec, ConstraintKind, ConstraintSpec, EndpointCondition, ProblemSpec,
};

/// Run parameters from the `[run]` section.
#[derive(Debug, Clone)]
pub struct RunParams {
    /// Grid panel count.
    pub n: usize,
    /// Weight count for Pareto sweeps.
    pub weights: usize,
    pub grad_tol: f64,
    pub constraint_tol: f64,
    /// Residual threshold for `verify`.
    pub residual_tol: f64,
    /// Fraction of the interval trimmed from each end when measuring
    /// interior residual maxima (endpoint rows of the dual operator are
    /// singular and pollute their neighborhoods for singular trajectories).
    pub residual_window: f64,
    pub max_iters: usize,
    /// Output directory for CSV artifacts.
    pub out: PathBuf,
}

/// Parsed problem file: the problem itself plus run parameters.
#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub problem: ProblemSpec,
    pub run: RunParams,
}

struct Line {
    number: usize,
    content: String,
}

fn fail(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::ProblemFile {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Parse and validate a problem file.
pub fn parse_problem_file(path: &Path) -> Result<ProblemFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(path, 0, format!("cannot read file: {e}")))?;
    parse_problem_text(path, &text)
}

pub(crate) fn parse_problem_text(path: &Path, text: &str) -> Result<ProblemFile> {
    // section name -> (header line, key -> (line, value)); keeps first
    // occurrence line numbers for diagnostics
    let mut sections: BTreeMap<String, (usize, BTreeMap<String, Line>)> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let number = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| fail(path, number, "unterminated section header"))?
                .trim()
                .to_string();
            if name.is_empty() {
                return Err(fail(path, number, "empty section name"));
            }
            if sections.contains_key(&name) {
                return Err(fail(path, number, format!("duplicate section [{name}]")));
            }
            sections.insert(name.clone(), (number, BTreeMap::new()));
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(fail(
                path,
                number,
                format!("expected `key = value`, got `{line}`"),
            ));
        };
        let section = current
            .as_ref()
            .ok_or_else(|| fail(path, number, "key outside of any [section]"))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let (_, keys) = sections.get_mut(section).unwrap();
        if keys.contains_key(&key) {
            return Err(fail(path, number, format!("duplicate key `{key}`")));
        }
        keys.insert(
            key,
            Line {
                number,
                content: value,
            },
        );
    }

    let known_plain = ["interval", "orders", "boundary", "run"];
    for (name, (line, _)) in &sections {
        let ok = known_plain.contains(&name.as_str())
            || name.starts_with("objective.")
            || name.starts_with("constraint.");
        if !ok {
            return Err(fail(path, *line, format!("unknown section [{name}]")));
        }
    }

    fn take_section(
        path: &Path,
        sections: &mut BTreeMap<String, (usize, BTreeMap<String, Line>)>,
        name: &str,
    ) -> Result<(usize, BTreeMap<String, Line>)> {
        sections
            .remove(name)
            .ok_or_else(|| fail(path, 0, format!("missing required section [{name}]")))
    }

    // ---- [interval] ----
    let (_, mut interval) = take_section(path, &mut sections, "interval")?;
    let a = take_f64(path, &mut interval, "a")?;
    let b = take_f64(path, &mut interval, "b")?;
    reject_leftovers(path, "interval", interval)?;

    // ---- [orders] ----
    let (orders_line, mut orders_keys) = take_section(path, &mut sections, "orders")?;
    let alpha = take_f64_list(path, &mut orders_keys, "alpha")?;
    let beta = take_f64_list(path, &mut orders_keys, "beta")?;
    let gamma = take_f64_list(path, &mut orders_keys, "gamma")?;
    reject_leftovers(path, "orders", orders_keys)?;
    let n_components = alpha.1.len().max(beta.1.len()).max(gamma.1.len());
    let broadcast = |(line, list): (usize, Vec<f64>), what: &str| -> Result<Vec<f64>> {
        if list.len() == n_components {
            Ok(list)
        } else if list.len() == 1 {
            Ok(vec![list[0]; n_components])
        } else {
            Err(fail(
                path,
                line,
                format!(
                    "{what} has {} entries, expected 1 or {n_components}",
                    list.len()
                ),
            ))
        }
    };
    let alpha = broadcast(alpha, "alpha")?;
    let beta = broadcast(beta, "beta")?;
    let gamma_list = broadcast(gamma, "gamma")?;
    if let Some(g) = gamma_list.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(fail(
            path,
            orders_line,
            format!("gamma = {g} outside [0, 1]"),
        ));
    }
    let orders = FracOrders::new(alpha, beta, gamma_list)
        .map_err(|e| fail(path, orders_line, e.to_string()))?;

    // ---- [objective.k] ----
    let mut objective_sections: Vec<(usize, String)> = sections
        .keys()
        .filter_map(|name| {
            name.strip_prefix("objective.")
                .map(|idx| (idx.to_string(), name.clone()))
        })
        .map(|(idx, name)| {
            idx.parse::<usize>()
                .map(|i| (i, name.clone()))
                .map_err(|_| {
                    fail(
                        path,
                        sections[&name].0,
                        format!("bad objective index in [{name}]"),
                    )
                })
        })
        .collect::<Result<_>>()?;
    objective_sections.sort();
    if objective_sections.is_empty() {
        return Err(fail(path, 0, "missing required section [objective.1]"));
    }
    for (pos, (k, _)) in objective_sections.iter().enumerate() {
        if *k != pos + 1 {
            return Err(fail(
                path,
                0,
                format!("objectives must be numbered 1..d without gaps; found objective.{k}"),
            ));
        }
    }
    let mut objectives = Vec::new();
    for (_, name) in &objective_sections {
        let (_, mut keys) = sections.remove(name).unwrap();
        let src = take_raw(path, &mut keys, "lagrangian")?;
        let expr = parse_lagrangian(&src.content, n_components, 0)
            .map_err(|e| fail(path, src.number, format!("bad expression: {e}")))?;
        reject_leftovers(path, name, keys)?;
        objectives.push(expr);
    }

    // ---- [boundary] ----
    let (boundary_line, mut boundary_keys) = take_section(path, &mut sections, "boundary")?;
    let left = take_raw(path, &mut boundary_keys, "left")?;
    let right = take_raw(path, &mut boundary_keys, "right")?;
    reject_leftovers(path, "boundary", boundary_keys)?;
    let parse_side =
        |line: &Line| -> Result<Vec<EndpointCondition>> {
            line.content
                .split(',')
                .map(|item| {
                    let item = item.trim();
                    if item == "free" {
                        return Ok(EndpointCondition::Free);
                    }
                    if let Some(v) = item.strip_prefix("fixed:") {
                        let v: f64 = v.trim().parse().map_err(|_| {
                            fail(path, line.number, format!("bad fixed value `{v}`"))
                        })?;
                        return Ok(EndpointCondition::Fixed(v));
                    }
                    if let Some(v) = item.strip_prefix("ub:") {
                        let v: f64 = v.trim().parse().map_err(|_| {
                            fail(path, line.number, format!("bad upper bound `{v}`"))
                        })?;
                        return Ok(EndpointCondition::UpperBounded(v));
                    }
                    Err(fail(
                        path,
                        line.number,
                        format!(
                            "bad endpoint condition `{item}` (expected fixed:<v>, free, or ub:<v>)"
                        ),
                    ))
                })
                .collect()
        };
    let left = parse_side(&left)?;
    let right = parse_side(&right)?;
    if left.len() != n_components || right.len() != n_components {
        return Err(fail(
            path,
            boundary_line,
            format!("boundary lists must have {n_components} entries"),
        ));
    }
    let boundary =
        BoundarySpec::new(left, right).map_err(|e| fail(path, boundary_line, e.to_string()))?;

    // ---- [constraint.j] ----
    let mut constraint_sections: Vec<(usize, String)> = sections
        .keys()
        .filter_map(|name| {
            name.strip_prefix("constraint.")
                .map(|idx| (idx.to_string(), name.clone()))
        })
        .map(|(idx, name)| {
            idx.parse::<usize>()
                .map(|i| (i, name.clone()))
                .map_err(|_| {
                    fail(
                        path,
                        sections[&name].0,
                        format!("bad constraint index in [{name}]"),
                    )
                })
        })
        .collect::<Result<_>>()?;
    constraint_sections.sort();
    for (pos, (j, _)) in constraint_sections.iter().enumerate() {
        if *j != pos + 1 {
            return Err(fail(
                path,
                0,
                format!("constraints must be numbered 1..r without gaps; found constraint.{j}"),
            ));
        }
    }
    let mut constraints = Vec::new();
    for (_, name) in &constraint_sections {
        let (section_line, mut keys) = sections.remove(name).unwrap();
        let kind_line = take_raw(path, &mut keys, "kind")?;
        let kind = match kind_line.content.as_str() {
            "iso_eq" => ConstraintKind::IsoperimetricEq,
            "iso_ineq" => ConstraintKind::IsoperimetricIneq,
            "pw_eq" => ConstraintKind::PointwiseEq,
            "pw_ineq" => ConstraintKind::PointwiseIneq,
            other => {
                return Err(fail(
                    path,
                    kind_line.number,
                    format!("unknown constraint kind `{other}`"),
                ))
            }
        };
        let integrand_line = take_raw(path, &mut keys, "integrand")?;
        let integrand = parse_lagrangian(&integrand_line.content, n_components, 0)
            .map_err(|e| fail(path, integrand_line.number, format!("bad expression: {e}")))?;
        let target =
            match keys.remove("target") {
                Some(line) => Some(line.content.parse::<f64>().map_err(|_| {
                    fail(path, line.number, format!("bad target `{}`", line.content))
                })?),
                None => None,
            };
        if kind.is_isoperimetric() && target.is_none() {
            return Err(fail(
                path,
                section_line,
                "isoperimetric constraints need a target",
            ));
        }
        if !kind.is_isoperimetric() && target.is_some() {
            return Err(fail(
                path,
                section_line,
                "pointwise constraints take no target",
            ));
        }
        reject_leftovers(path, name, keys)?;
        constraints.push(ConstraintSpec {
            kind,
            integrand,
            target,
        });
    }

    // ---- [run] ----
    let (run_line, mut run_keys) = take_section(path, &mut sections, "run")?;
    let n = take_f64(path, &mut run_keys, "n")? as usize;
    let weights = match run_keys.remove("weights") {
        Some(line) => parse_num::<usize>(path, &line)?,
        None => 11,
    };
    let grad_tol = opt_f64(path, &mut run_keys, "grad_tol")?.unwrap_or(1e-6);
    let constraint_tol = opt_f64(path, &mut run_keys, "constraint_tol")?.unwrap_or(1e-8);
    let residual_tol = opt_f64(path, &mut run_keys, "residual_tol")?.unwrap_or(1e-2);
    let residual_window = opt_f64(path, &mut run_keys, "residual_window")?.unwrap_or(0.05);
    let max_iters = match run_keys.remove("max_iters") {
        Some(line) => parse_num::<usize>(path, &line)?,
        None => 5000,
    };
    let out = match run_keys.remove("out") {
        Some(line) => PathBuf::from(line.content),
        None => PathBuf::from("out"),
    };
    reject_leftovers(path, "run", run_keys)?;
    if n < 8 {
        return Err(fail(
            path,
            run_line,
            format!("n must be at least 8, got {n}"),
        ));
    }
    if !(0.0..0.5).contains(&residual_window) {
        return Err(fail(path, run_line, "residual_window must lie in [0, 0.5)"));
    }

    if !sections.is_empty() {
        let (name, (line, _)) = sections.iter().next().unwrap();
        return Err(fail(path, *line, format!("unknown section [{name}]")));
    }

    let problem = ProblemSpec::new(a, b, orders, objectives, boundary, constraints)
        .map_err(|e| fail(path, 0, e.to_string()))?;
    Ok(ProblemFile {
        problem,
        run: RunParams {
            n,
            weights,
            grad_tol,
            constraint_tol,
            residual_tol,
            residual_window,
            max_iters,
            out,
        },
    })
}

fn take_raw(path: &Path, keys: &mut BTreeMap<String, Line>, key: &str) -> Result<Line> {
    keys.remove(key)
        .ok_or_else(|| fail(path, 0, format!("missing key `{key}`")))
}

fn parse_num<T: std::str::FromStr>(path: &Path, line: &Line) -> Result<T> {
    line.content
        .parse::<T>()
        .map_err(|_| fail(path, line.number, format!("bad number `{}`", line.content)))
}

fn take_f64(path: &Path, keys: &mut BTreeMap<String, Line>, key: &str) -> Result<f64> {
    let line = take_raw(path, keys, key)?;
    parse_num(path, &line)
}

fn opt_f64(path: &Path, keys: &mut BTreeMap<String, Line>, key: &str) -> Result<Option<f64>> {
    match keys.remove(key) {
        Some(line) => Ok(Some(parse_num(path, &line)?)),
        None => Ok(None),
    }
}

fn take_f64_list(
    path: &Path,
    keys: &mut BTreeMap<String, Line>,
    key: &str,
) -> Result<(usize, Vec<f64>)> {
    let line = take_raw(path, keys, key)?;
    let list: Vec<f64> = line
        .content
        .split(',')
        .map(|item| {
            item.trim()
                .parse::<f64>()
                .map_err(|_| fail(path, line.number, format!("bad number `{}`", item.trim())))
        })
        .collect::<Result<_>>()?;
    Ok((line.number, list))
}

fn reject_leftovers(path: &Path, section: &str, keys: BTreeMap<String, Line>) -> Result<()> {
    if let Some((key, line)) = keys.into_iter().next() {
        return Err(fail(
            path,
            line.number,
            format!("unknown key `{key}` in [{section}]"),
        ));
    }
    Ok(())
}
