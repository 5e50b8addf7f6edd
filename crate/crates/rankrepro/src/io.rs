//! CSV loaders for the four input schemas.
//!
//! Every loader rejects malformed rows rather than coercing them, and row-level
//! errors carry the 1-based line number of the offending record.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rankrepro_core::models::gaussian::GaussianInstance;
use rankrepro_core::models::pl::{PlInstance, TopChoiceTrial};
use rankrepro_core::models::regression::RegressionInstance;

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot open {path}: {source}")]
    Open { path: String, source: std::io::Error },

    #[error("line {line}: {message}")]
    Row { line: u64, message: String },

    #[error("unrecognized header {found:?}; expected {expected}")]
    Header { found: Vec<String>, expected: String },

    #[error("{0}")]
    Content(String),
}

impl LoadError {
    fn row(line: u64, message: impl Into<String>) -> Self {
        Self::Row { line, message: message.into() }
    }
}

pub type LoadResult<T> = Result<T, LoadError>;

fn open(path: &Path) -> LoadResult<File> {
    File::open(path).map_err(|source| LoadError::Open { path: path.display().to_string(), source })
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input)
}

fn header<R: Read>(rdr: &mut csv::Reader<R>) -> LoadResult<Vec<String>> {
    let h = rdr.headers().map_err(|e| LoadError::row(1, e.to_string()))?;
    Ok(h.iter().map(str::to_owned).collect())
}

fn records<R: Read>(rdr: &mut csv::Reader<R>) -> impl Iterator<Item = LoadResult<(u64, csv::StringRecord)>> + '_ {
    rdr.records().map(|r| match r {
        Ok(rec) => {
            let line = rec.position().map_or(0, |p| p.line());
            Ok((line, rec))
        }
        Err(e) => {
            let line = e.position().map_or(0, |p| p.line());
            Err(LoadError::row(line, e.to_string()))
        }
    })
}

fn number(rec: &csv::StringRecord, col: usize, name: &str, line: u64) -> LoadResult<f64> {
    let cell = &rec[col];
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(LoadError::row(line, format!("{name} {cell:?} is not a finite number"))),
    }
}

fn id(rec: &csv::StringRecord, col: usize, name: &str, line: u64) -> LoadResult<String> {
    let cell = &rec[col];
    if cell.is_empty() {
        return Err(LoadError::row(line, format!("empty {name}")));
    }
    Ok(cell.to_owned())
}

fn index_of(ids: &[String]) -> BTreeMap<&str, usize> {
    ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect()
}

/// Samples grouped by population, ids in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct Populations {
    pub ids: Vec<String>,
    pub samples: Vec<Vec<f64>>,
}

impl Populations {
    pub fn k(&self) -> usize {
        self.ids.len()
    }

    /// Sample means, standard deviations (n - 1 denominator) and sizes.
    pub fn gaussian_summary(&self) -> LoadResult<GaussianInstance> {
        let mut mean = Vec::with_capacity(self.k());
        let mut sd = Vec::with_capacity(self.k());
        let mut n = Vec::with_capacity(self.k());
        for (id, s) in self.ids.iter().zip(&self.samples) {
            if s.len() < 2 {
                return Err(LoadError::Content(format!("population {id} needs at least two observations")));
            }
            let m = s.iter().sum::<f64>() / s.len() as f64;
            let var = s.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (s.len() - 1) as f64;
            mean.push(m);
            sd.push(var.sqrt());
            n.push(s.len());
        }
        GaussianInstance::new(mean, sd, n).map_err(|e| LoadError::Content(e.to_string()))
    }
}

const POPULATIONS_HEADER: [&str; 2] = ["population_id", "value"];

/// Reads `population_id,value` rows. Values keep file order within each population.
pub fn read_populations<R: Read>(input: R) -> LoadResult<Populations> {
    let mut rdr = reader(input);
    let h = header(&mut rdr)?;
    if h != POPULATIONS_HEADER {
        return Err(LoadError::Header { found: h, expected: POPULATIONS_HEADER.join(",") });
    }
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records(&mut rdr) {
        let (line, rec) = r?;
        let pop = id(&rec, 0, "population_id", line)?;
        let value = number(&rec, 1, "value", line)?;
        groups.entry(pop).or_default().push(value);
    }
    if groups.is_empty() {
        return Err(LoadError::Content("no data rows".into()));
    }
    let (ids, samples) = groups.into_iter().unzip();
    Ok(Populations { ids, samples })
}

pub fn load_populations_csv(path: impl AsRef<Path>) -> LoadResult<Populations> {
    read_populations(open(path.as_ref())?)
}

/// Writes `population_id,value` rows with shortest round-trip float formatting.
pub fn write_populations<W: Write>(out: W, pops: &Populations) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(POPULATIONS_HEADER)?;
    for (pop, s) in pops.ids.iter().zip(&pops.samples) {
        for v in s {
            w.write_record([pop.as_str(), &v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

const SUMMARY_HEADER: [&str; 4] = ["population_id", "mean", "sd", "n"];

/// Gaussian input: either raw samples (`population_id,value`) or one summary row per
/// population (`population_id,mean,sd,n`).
pub fn read_gaussian<R: Read>(mut input: R) -> LoadResult<(Vec<String>, GaussianInstance)> {
    let mut raw = Vec::new();
    input.read_to_end(&mut raw).map_err(|e| LoadError::Content(e.to_string()))?;
    let mut rdr = reader(raw.as_slice());
    let h = header(&mut rdr)?;
    if h == POPULATIONS_HEADER {
        let pops = read_populations(raw.as_slice())?;
        let inst = pops.gaussian_summary()?;
        return Ok((pops.ids, inst));
    }
    if h != SUMMARY_HEADER {
        return Err(LoadError::Header {
            found: h,
            expected: format!("{} or {}", POPULATIONS_HEADER.join(","), SUMMARY_HEADER.join(",")),
        });
    }
    let mut rows: BTreeMap<String, (f64, f64, usize)> = BTreeMap::new();
    for r in records(&mut rdr) {
        let (line, rec) = r?;
        let pop = id(&rec, 0, "population_id", line)?;
        let mean = number(&rec, 1, "mean", line)?;
        let sd = number(&rec, 2, "sd", line)?;
        if !(sd > 0.0) {
            return Err(LoadError::row(line, format!("sd {sd} must be positive")));
        }
        let n = rec[3]
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| LoadError::row(line, format!("n {:?} is not a positive integer", &rec[3])))?;
        if rows.insert(pop.clone(), (mean, sd, n)).is_some() {
            return Err(LoadError::row(line, format!("population {pop} appears twice")));
        }
    }
    let ids: Vec<String> = rows.keys().cloned().collect();
    let (mean, rest): (Vec<f64>, Vec<(f64, usize)>) = rows.into_values().map(|(m, s, n)| (m, (s, n))).unzip();
    let (sd, n) = rest.into_iter().unzip();
    let inst = GaussianInstance::new(mean, sd, n).map_err(|e| LoadError::Content(e.to_string()))?;
    Ok((ids, inst))
}

pub fn load_gaussian_csv(path: impl AsRef<Path>) -> LoadResult<(Vec<String>, GaussianInstance)> {
    read_gaussian(open(path.as_ref())?)
}

/// Match results with team ids in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct Matches {
    pub teams: Vec<String>,
    pub instance: RegressionInstance,
}

const GOALS_HEADER: [&str; 4] = ["home_id", "away_id", "home_goals", "away_goals"];
const DIFF_HEADER: [&str; 3] = ["home_id", "away_id", "score_diff"];

/// Reads either goals or score-difference rows; repeated fixtures are kept.
pub fn read_matches<R: Read>(input: R) -> LoadResult<Matches> {
    let mut rdr = reader(input);
    let h = header(&mut rdr)?;
    let goals = if h == GOALS_HEADER {
        true
    } else if h == DIFF_HEADER {
        false
    } else {
        return Err(LoadError::Header {
            found: h,
            expected: format!("{} or {}", GOALS_HEADER.join(","), DIFF_HEADER.join(",")),
        });
    };
    let mut rows = Vec::new();
    for r in records(&mut rdr) {
        let (line, rec) = r?;
        let home = id(&rec, 0, "home_id", line)?;
        let away = id(&rec, 1, "away_id", line)?;
        if home == away {
            return Err(LoadError::row(line, format!("{home} cannot play itself")));
        }
        let diff = if goals {
            number(&rec, 2, "home_goals", line)? - number(&rec, 3, "away_goals", line)?
        } else {
            number(&rec, 2, "score_diff", line)?
        };
        rows.push((home, away, diff));
    }
    let mut teams: Vec<String> = rows.iter().flat_map(|(h, a, _)| [h.clone(), a.clone()]).collect();
    teams.sort();
    teams.dedup();
    let index = index_of(&teams);
    let home = rows.iter().map(|(h, _, _)| index[h.as_str()]).collect();
    let away = rows.iter().map(|(_, a, _)| index[a.as_str()]).collect();
    let y = rows.iter().map(|r| r.2).collect();
    let instance =
        RegressionInstance::new(teams.len(), home, away, y).map_err(|e| LoadError::Content(e.to_string()))?;
    Ok(Matches { teams, instance })
}

pub fn load_matches_csv(path: impl AsRef<Path>) -> LoadResult<Matches> {
    read_matches(open(path.as_ref())?)
}

/// Top-choice trials over integer item ids, items indexed in increasing id order.
#[derive(Debug, Clone, PartialEq)]
pub struct Trials {
    pub items: Vec<u64>,
    pub instance: PlInstance,
    /// Subsets are repeated unequally often.
    pub ragged: bool,
}

const TRIALS_HEADER: [&str; 4] = ["item1", "item2", "item3", "chosen"];

/// Reads `item1,item2,item3,chosen` rows; items must be strictly ascending and the
/// chosen item one of the three.
pub fn read_trials<R: Read>(input: R) -> LoadResult<Trials> {
    let mut rdr = reader(input);
    let h = header(&mut rdr)?;
    if h != TRIALS_HEADER {
        return Err(LoadError::Header { found: h, expected: TRIALS_HEADER.join(",") });
    }
    let item = |rec: &csv::StringRecord, col: usize, line: u64| -> LoadResult<u64> {
        rec[col]
            .parse::<u64>()
            .map_err(|_| LoadError::row(line, format!("{} {:?} is not an item id", TRIALS_HEADER[col], &rec[col])))
    };
    let mut rows = Vec::new();
    for r in records(&mut rdr) {
        let (line, rec) = r?;
        let triple = [item(&rec, 0, line)?, item(&rec, 1, line)?, item(&rec, 2, line)?];
        if !(triple[0] < triple[1] && triple[1] < triple[2]) {
            return Err(LoadError::row(line, format!("items {triple:?} are not strictly ascending")));
        }
        let chosen = item(&rec, 3, line)?;
        if !triple.contains(&chosen) {
            return Err(LoadError::row(line, format!("chosen item {chosen} is not in {triple:?}")));
        }
        rows.push((triple, chosen));
    }
    if rows.is_empty() {
        return Err(LoadError::Content("no data rows".into()));
    }
    let mut items: Vec<u64> = rows.iter().flat_map(|(t, _)| *t).collect();
    items.sort_unstable();
    items.dedup();
    let index: BTreeMap<u64, usize> = items.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let trials = rows
        .iter()
        .map(|(t, c)| TopChoiceTrial::new([index[&t[0]], index[&t[1]], index[&t[2]]], index[c]))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| LoadError::Content(e.to_string()))?;
    let instance = PlInstance::new(items.len(), trials).map_err(|e| LoadError::Content(e.to_string()))?;
    let ragged = instance.is_ragged();
    Ok(Trials { items, instance, ragged })
}

pub fn load_trials_csv(path: impl AsRef<Path>) -> LoadResult<Trials> {
    read_trials(open(path.as_ref())?)
}
