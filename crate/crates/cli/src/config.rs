//! Experiment grids in a flat `key = value` format.
//!
//! ```text
//! # Clayton null cell, serially independent data
//! [defaults]
//! reps = 1000
//! replicates = 250
//!
//! [cell]
//! family = clayton
//! n = 200
//! tau1 = 0.3
//! stats = rho1
//! methods = boot-iid, asymptotic
//! ```
//!
//! Every `[cell]` section is one grid cell. Keys in a `[defaults]` section
//! apply to all cells that follow it. Lines starting with `#` or `;` are
//! comments.

use std::collections::BTreeMap;

use cpdetect_core::dgp::{default_garch_params, CopulaFamily, Filter, GarchParams};
use cpdetect_core::experiment::DependenceMeasure;
use cpdetect_core::{
    BuiltinStatistic, DivisorMode, EllChoice, ExperimentCell, ExperimentGrid, SmoothingParams,
    TestVariant,
};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

/// Canonical key for an accepted spelling.
fn canonical(key: &str) -> Option<&'static str> {
    Some(match key {
        "family" | "copula" => "family",
        "d" | "dim" => "d",
        "n" => "n",
        "measure" => "measure",
        "tau1" | "before" | "tau" | "level" => "tau1",
        "tau2" | "after" => "tau2",
        "t" => "t",
        "gamma" => "gamma",
        "filter" => "filter",
        "garch" => "garch",
        "stats" | "stat" => "stats",
        "methods" | "method" => "methods",
        "alpha" => "alpha",
        "reps" => "reps",
        "replicates" | "m" => "replicates",
        "ell" => "ell",
        "bn_exponent" | "bn-exponent" => "bn_exponent",
        "divisor" => "divisor",
        _ => return None,
    })
}

type Entries = BTreeMap<&'static str, (usize, String)>;

#[derive(PartialEq)]
enum Section {
    None,
    Defaults,
    Cell(usize),
}

pub fn parse_experiment(text: &str) -> Result<ExperimentGrid, ConfigError> {
    let mut defaults = Entries::new();
    let mut current = Entries::new();
    let mut section = Section::None;
    let mut cells = Vec::new();

    let mut close = |section: &Section, current: &mut Entries, defaults: &Entries| {
        if let Section::Cell(line) = *section {
            let mut merged = defaults.clone();
            merged.append(current);
            cells.push(build_cell(line, &merged)?);
        }
        Ok::<_, ConfigError>(())
    };

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            close(&section, &mut current, &defaults)?;
            section = match name.trim().to_ascii_lowercase().as_str() {
                "cell" => Section::Cell(line),
                "defaults" => Section::Defaults,
                other => return Err(err(line, format!("unknown section [{other}]"))),
            };
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, got {trimmed:?}")))?;
        let key = key.trim().to_ascii_lowercase();
        let key = canonical(&key).ok_or_else(|| err(line, format!("unknown key `{key}`")))?;
        let value = (line, value.trim().to_string());
        match section {
            Section::None => return Err(err(line, "key outside of a [cell] or [defaults] section")),
            Section::Defaults => {
                defaults.insert(key, value);
            }
            Section::Cell(_) => {
                if current.insert(key, value).is_some() {
                    return Err(err(line, format!("duplicate key `{key}`")));
                }
            }
        }
    }
    close(&section, &mut current, &defaults)?;
    if cells.is_empty() {
        return Err(err(0, "no [cell] sections"));
    }
    Ok(ExperimentGrid { cells })
}

fn parse_value<T: std::str::FromStr>(entries: &Entries, key: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    match entries.get(key) {
        None => Ok(None),
        Some((line, v)) => v
            .parse()
            .map(Some)
            .map_err(|e| err(*line, format!("`{key}`: {e}"))),
    }
}

fn parse_list<T: std::str::FromStr>(line: usize, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e| err(line, format!("{s:?}: {e}"))))
        .collect()
}

/// `omega, beta, alpha` triples separated by `;`, one per component.
fn parse_garch(line: usize, value: &str) -> Result<Vec<GarchParams>, ConfigError> {
    value
        .split(';')
        .map(|part| {
            let v: Vec<f64> = parse_list(line, part)?;
            match v[..] {
                [omega, beta, alpha] => Ok(GarchParams { omega, beta, alpha }),
                _ => Err(err(line, format!("garch component {part:?}: need omega, beta, alpha"))),
            }
        })
        .collect()
}

fn build_cell(section_line: usize, e: &Entries) -> Result<ExperimentCell, ConfigError> {
    let missing = |key: &str| err(section_line, format!("cell is missing `{key}`"));
    let family: CopulaFamily = parse_value(e, "family")?.ok_or_else(|| missing("family"))?;
    let n: usize = parse_value(e, "n")?.ok_or_else(|| missing("n"))?;
    let before: f64 = parse_value(e, "tau1")?.ok_or_else(|| missing("tau1"))?;
    let d: usize = parse_value(e, "d")?.unwrap_or(2);

    let mut cell = ExperimentCell::new(family, d, n, before);
    cell.after = parse_value(e, "tau2")?.unwrap_or(before);
    cell.t = match e.get("t") {
        None => None,
        Some((_, v)) if v.eq_ignore_ascii_case("none") || v == "-" => None,
        Some(_) => parse_value(e, "t")?,
    };
    if let Some((line, v)) = e.get("measure") {
        cell.measure = match v.to_ascii_lowercase().as_str() {
            "kendall" | "tau" => DependenceMeasure::Kendall,
            "spearman" | "rho" => DependenceMeasure::Spearman,
            other => return Err(err(*line, format!("unknown measure {other:?}"))),
        };
    }

    let filter_name = e.get("filter").map(|(l, v)| (*l, v.to_ascii_lowercase()));
    cell.filter = match filter_name.as_ref().map(|(l, v)| (*l, v.as_str())) {
        None | Some((_, "ar1")) => {
            if e.contains_key("garch") {
                return Err(err(e["garch"].0, "`garch` needs `filter = garch`"));
            }
            Filter::Ar1 {
                gamma: parse_value(e, "gamma")?.unwrap_or(0.0),
            }
        }
        Some((line, "garch")) => {
            if let Some((l, _)) = e.get("gamma") {
                return Err(err(*l, "`gamma` does not apply to the GARCH filter"));
            }
            let params = match e.get("garch") {
                Some((l, v)) => parse_garch(*l, v)?,
                None => default_garch_params(d).map_err(|x| err(line, x.to_string()))?,
            };
            Filter::Garch { params }
        }
        Some((line, other)) => return Err(err(line, format!("unknown filter {other:?}"))),
    };

    if let Some((line, v)) = e.get("stats") {
        cell.stats = parse_list::<BuiltinStatistic>(*line, v)?;
    }
    if let Some((line, v)) = e.get("methods") {
        cell.variants = parse_list::<TestVariant>(*line, v)?;
    }
    if let Some(alpha) = parse_value(e, "alpha")? {
        cell.alpha = alpha;
    }
    if let Some(reps) = parse_value(e, "reps")? {
        cell.reps = reps;
    }
    if let Some(m) = parse_value(e, "replicates")? {
        cell.replicates = m;
    }
    if let Some(ell) = parse_value::<EllChoice>(e, "ell")? {
        cell.ell = ell;
    }
    if let Some(x) = parse_value::<f64>(e, "bn_exponent")? {
        cell.smoothing = SmoothingParams::new(x).map_err(|x| err(e["bn_exponent"].0, x.to_string()))?;
    }
    if let Some(div) = parse_value::<DivisorMode>(e, "divisor")? {
        cell.divisor = div;
    }
    cell.validate().map_err(|x| err(section_line, x.to_string()))?;
    Ok(cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cpdetect_core::{Method, SerialModel};

    #[test]
    fn defaults_and_overrides() {
        let text = "\
# grid
[defaults]
reps = 40
replicates = 99

[cell]
family = clayton
n = 200
tau1 = 0.3
methods = boot-iid, asymptotic-hac

[cell]
family = normal
n = 100
before = 0.2
after = 0.6
t = 0.5
reps = 7
stats = rho1, rho3
";
        let grid = parse_experiment(text).unwrap();
        assert_eq!(grid.cells.len(), 2);
        let a = &grid.cells[0];
        assert_eq!((a.reps, a.replicates, a.n, a.d), (40, 99, 200, 2));
        assert_eq!(a.after, 0.3);
        assert_eq!(a.t, None);
        assert_eq!(a.variants[1].method, Method::Asymptotic);
        assert_eq!(a.variants[1].serial, SerialModel::Dependent);
        let b = &grid.cells[1];
        assert_eq!(b.reps, 7);
        assert_eq!(b.t, Some(0.5));
        assert_eq!(b.stats, vec![BuiltinStatistic::Rho1, BuiltinStatistic::Rho3]);
    }

    #[test]
    fn filters() {
        let grid = parse_experiment(
            "[cell]\nfamily=gumbel\nn=50\ntau=0.5\nfilter=garch\n[cell]\nfamily=t3\nmeasure=spearman\nn=50\ntau=0.4\ngamma=0.5\n",
        )
        .unwrap();
        assert!(matches!(&grid.cells[0].filter, Filter::Garch { params } if params.len() == 2));
        assert_eq!(grid.cells[1].filter, Filter::Ar1 { gamma: 0.5 });
        assert_eq!(grid.cells[1].family, CopulaFamily::Student { df: 3.0 });
        let custom = parse_experiment(
            "[cell]\nfamily=frank\nn=50\ntau=0.5\nfilter=garch\ngarch=0.1,0.5,0.2; 0.2,0.3,0.1\n",
        )
        .unwrap();
        match &custom.cells[0].filter {
            Filter::Garch { params } => assert_eq!(params[1].beta, 0.3),
            _ => panic!("expected garch"),
        }
    }

    #[test]
    fn errors_carry_lines() {
        let e = parse_experiment("[cell]\nfamily = clayton\nbogus = 1\n").unwrap_err();
        assert_eq!(e.line, 3);
        let e = parse_experiment("n = 3\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse_experiment("[cell]\nfamily = clayton\nn = x\ntau1 = 0.3\n").unwrap_err();
        assert_eq!(e.line, 3);
        // Missing key is reported at the section header.
        let e = parse_experiment("\n[cell]\nfamily = clayton\n").unwrap_err();
        assert_eq!(e.line, 2);
        // No change location with differing levels.
        let e = parse_experiment("[cell]\nfamily=clayton\nn=9\ntau1=0.2\ntau2=0.4\n").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(parse_experiment("[cell]\nfamily=clayton\nn=9\ntau1=0.2\ngamma=0.1\nfilter=garch\n").is_err());
        assert!(parse_experiment("# nothing\n").is_err());
    }
}
