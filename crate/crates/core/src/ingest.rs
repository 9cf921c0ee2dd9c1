//! Loading of per-symbol price calendars and alignment onto a common
//! trading-day grid.
//!
//! A date is dropped when too many markets were closed on it; the remaining
//! gaps are filled by repeating the previous trading day's price. Every filled
//! cell is recorded so downstream consumers can tell observed prices from
//! repeated ones.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default fraction of closed markets above which a date is deleted.
pub const DEFAULT_MISSING_FRAC: f64 = 0.30;

const DATE_FORMAT: &str = "%Y-%m-%d";

/// Raw observations for a single symbol, before alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub symbol: String,
    observations: Vec<(NaiveDate, f64)>,
}

impl RawSeries {
    /// Builds a series, enforcing strictly increasing dates and positive prices.
    pub fn new(symbol: impl Into<String>, observations: Vec<(NaiveDate, f64)>) -> Result<Self> {
        let symbol = symbol.into();
        for w in observations.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::invalid(format!(
                    "{symbol}: dates not strictly increasing at {}",
                    w[1].0
                )));
            }
        }
        if let Some((d, p)) = observations
            .iter()
            .find(|(_, p)| !(p.is_finite() && *p > 0.0))
        {
            return Err(Error::invalid(format!(
                "{symbol}: non-positive price {p} on {d}"
            )));
        }
        Ok(Self {
            symbol,
            observations,
        })
    }

    pub fn observations(&self) -> &[(NaiveDate, f64)] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// Prices on an aligned date grid.
///
/// `prices` and `filled` are `dates.len() x symbols.len()`; `filled[(t, j)]`
/// is true when the price was carried forward rather than observed.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketPanel {
    dates: Vec<NaiveDate>,
    symbols: Vec<String>,
    prices: DMatrix<f64>,
    filled: DMatrix<bool>,
}

impl MarketPanel {
    pub fn new(
        dates: Vec<NaiveDate>,
        symbols: Vec<String>,
        prices: DMatrix<f64>,
        filled: DMatrix<bool>,
    ) -> Result<Self> {
        let shape = (dates.len(), symbols.len());
        if prices.shape() != shape || filled.shape() != shape {
            return Err(Error::invalid(format!(
                "panel shape mismatch: {} dates x {} symbols, prices {:?}, filled {:?}",
                shape.0,
                shape.1,
                prices.shape(),
                filled.shape()
            )));
        }
        if dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("panel dates not strictly increasing"));
        }
        if let Some(p) = prices.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::invalid(format!("panel contains non-positive price {p}")));
        }
        if shape.0 > 0 {
            if let Some(j) = (0..shape.1).find(|&j| filled[(0, j)]) {
                return Err(Error::invalid(format!(
                    "column {} does not start with an observed value",
                    symbols[j]
                )));
            }
        }
        Ok(Self {
            dates,
            symbols,
            prices,
            filled,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn prices(&self) -> &DMatrix<f64> {
        &self.prices
    }

    pub fn filled(&self) -> &DMatrix<bool> {
        &self.filled
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_symbols(&self) -> usize {
        self.symbols.len()
    }

    pub fn n_filled(&self) -> usize {
        self.filled.iter().filter(|f| **f).count()
    }

    /// Writes the panel to `path` and the fill flags to the sibling
    /// `<stem>.fills.csv`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut fw = csv::Writer::from_path(fills_path(path))?;
        let header: Vec<&str> = std::iter::once("date")
            .chain(self.symbols.iter().map(String::as_str))
            .collect();
        w.write_record(&header)?;
        fw.write_record(&header)?;
        for (t, date) in self.dates.iter().enumerate() {
            let d = date.format(DATE_FORMAT).to_string();
            let mut row = vec![d.clone()];
            let mut frow = vec![d];
            for j in 0..self.symbols.len() {
                row.push(format!("{}", self.prices[(t, j)]));
                frow.push(if self.filled[(t, j)] { "1" } else { "0" }.to_string());
            }
            w.write_record(&row)?;
            fw.write_record(&frow)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        fw.flush().map_err(|e| Error::io(fills_path(path), e))?;
        Ok(())
    }
}

/// `out/panel.csv` -> `out/panel.fills.csv`.
pub fn fills_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.fills.csv"))
}

/// Reads one or more price CSV files (`date,SYM1,SYM2,...`). Empty cells are
/// days on which that market did not trade. A symbol appearing in several
/// files has its observations merged.
pub fn load_panel<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<RawSeries>> {
    if paths.is_empty() {
        return Err(Error::invalid("no input files"));
    }
    let mut order: Vec<String> = Vec::new();
    let mut merged: BTreeMap<String, BTreeMap<NaiveDate, f64>> = BTreeMap::new();
    for path in paths {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        for (symbol, obs) in parse_csv(file, path)? {
            let slot = merged.entry(symbol.clone()).or_insert_with(|| {
                order.push(symbol.clone());
                BTreeMap::new()
            });
            for (row, date, price) in obs {
                if slot.insert(date, price).is_some() {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        row,
                        column: symbol.clone(),
                        message: format!("duplicate date {date}"),
                    });
                }
            }
        }
    }
    order
        .into_iter()
        .map(|sym| {
            let obs = merged.remove(&sym).unwrap_or_default().into_iter().collect();
            RawSeries::new(sym, obs)
        })
        .collect()
}

type ColumnObs = Vec<(usize, NaiveDate, f64)>;

/// Parses a single price CSV. `source` is only used for error messages.
/// Rows are numbered from 1 with the header as row 1.
pub fn parse_csv<R: Read>(reader: R, source: &Path) -> Result<Vec<(String, ColumnObs)>> {
    let err = |row: usize, column: &str, message: String| Error::Parse {
        path: source.to_path_buf(),
        row,
        column: column.to_string(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || headers.get(0) != Some("date") {
        return Err(err(1, "date", "header must be `date,SYM1,...`".into()));
    }
    let symbols: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut seen = BTreeSet::new();
    for s in &symbols {
        if s.is_empty() || !seen.insert(s.as_str()) {
            return Err(err(1, s, "empty or duplicate symbol in header".into()));
        }
    }
    let mut columns: Vec<ColumnObs> = vec![Vec::new(); symbols.len()];
    let mut dates_seen = BTreeSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        if rec.len() != headers.len() {
            return Err(err(
                row,
                "date",
                format!("expected {} fields, found {}", headers.len(), rec.len()),
            ));
        }
        let raw_date = rec.get(0).unwrap_or_default();
        let date = NaiveDate::parse_from_str(raw_date, DATE_FORMAT)
            .map_err(|e| err(row, "date", format!("malformed date {raw_date:?}: {e}")))?;
        if !dates_seen.insert(date) {
            return Err(err(row, "date", format!("duplicate date {date}")));
        }
        for (j, cell) in rec.iter().skip(1).enumerate() {
            if cell.is_empty() {
                continue;
            }
            let price: f64 = cell
                .parse()
                .map_err(|_| err(row, &symbols[j], format!("malformed price {cell:?}")))?;
            if !(price.is_finite() && price > 0.0) {
                return Err(err(row, &symbols[j], format!("non-positive price {cell}")));
            }
            columns[j].push((row, date, price));
        }
    }
    for col in &mut columns {
        col.sort_by_key(|(_, d, _)| *d);
    }
    Ok(symbols.into_iter().zip(columns).collect())
}

/// Aligns ragged series onto their union calendar.
///
/// A date is deleted when the fraction of symbols without a raw observation
/// on it is strictly greater than `missing_frac`. The panel then starts at
/// the first kept date on which every symbol traded, and later gaps are
/// forward-filled from the previous kept date.
pub fn align_calendars(series: &[RawSeries], missing_frac: f64) -> Result<MarketPanel> {
    if series.len() < 2 {
        return Err(Error::invalid("alignment needs at least 2 series"));
    }
    if !(missing_frac > 0.0 && missing_frac < 1.0) {
        return Err(Error::invalid(format!(
            "missing_frac must lie in (0, 1), got {missing_frac}"
        )));
    }
    let mut syms = BTreeSet::new();
    for s in series {
        if !syms.insert(s.symbol.as_str()) {
            return Err(Error::invalid(format!("duplicate symbol {}", s.symbol)));
        }
    }
    let n = series.len();
    let union: Vec<NaiveDate> = series
        .iter()
        .flat_map(|s| s.observations.iter().map(|(d, _)| *d))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    // raw[t][j]: observation of symbol j on union date t
    let mut raw: Vec<Vec<Option<f64>>> = vec![vec![None; n]; union.len()];
    for (j, s) in series.iter().enumerate() {
        for (d, p) in &s.observations {
            let t = union.binary_search(d).expect("date from union");
            raw[t][j] = Some(*p);
        }
    }

    let kept: Vec<usize> = (0..union.len())
        .filter(|&t| {
            let missing = raw[t].iter().filter(|c| c.is_none()).count();
            (missing as f64 / n as f64) <= missing_frac
        })
        .collect();

    let start = kept
        .iter()
        .position(|&t| raw[t].iter().all(Option::is_some))
        .ok_or_else(|| Error::Alignment {
            symbols: offending_symbols(series, &kept, &raw),
        })?;
    let rows = &kept[start..];

    let mut prices = DMatrix::<f64>::zeros(rows.len(), n);
    let mut filled = DMatrix::<bool>::from_element(rows.len(), n, false);
    for (r, &t) in rows.iter().enumerate() {
        for j in 0..n {
            match raw[t][j] {
                Some(p) => prices[(r, j)] = p,
                None => {
                    prices[(r, j)] = prices[(r - 1, j)];
                    filled[(r, j)] = true;
                }
            }
        }
    }
    MarketPanel::new(
        rows.iter().map(|&t| union[t]).collect(),
        series.iter().map(|s| s.symbol.clone()).collect(),
        prices,
        filled,
    )
}

fn offending_symbols(
    series: &[RawSeries],
    kept: &[usize],
    raw: &[Vec<Option<f64>>],
) -> Vec<String> {
    let span = |j: usize| {
        let mut it = kept.iter().filter(|&&t| raw[t][j].is_some());
        let first = it.next().copied();
        let last = kept.iter().rev().find(|&&t| raw[t][j].is_some()).copied();
        first.zip(last)
    };
    let spans: Vec<Option<(usize, usize)>> = (0..series.len()).map(span).collect();
    let never: Vec<String> = spans
        .iter()
        .zip(series)
        .filter(|(s, _)| s.is_none())
        .map(|(_, s)| s.symbol.clone())
        .collect();
    if !never.is_empty() {
        return never;
    }
    let latest_first = spans.iter().flatten().map(|s| s.0).max().unwrap_or(0);
    let early: Vec<String> = spans
        .iter()
        .zip(series)
        .filter(|(s, _)| s.is_some_and(|(_, last)| last < latest_first))
        .map(|(_, s)| s.symbol.clone())
        .collect();
    if !early.is_empty() {
        return early;
    }
    // Ranges overlap but no single kept date has every symbol: report the
    // symbols absent on the best-covered kept date.
    let best = kept
        .iter()
        .copied()
        .max_by_key(|&t| (raw[t].iter().filter(|c| c.is_some()).count(), usize::MAX - t));
    match best {
        Some(t) => series
            .iter()
            .enumerate()
            .filter(|(j, _)| raw[t][*j].is_none())
            .map(|(_, s)| s.symbol.clone())
            .collect(),
        None => series.iter().map(|s| s.symbol.clone()).collect(),
    }
}
