//! Aligns three ragged price series onto one calendar and prints which cells
//! were forward-filled.
//!
//! ```text
//! cargo run --example align_panel
//! ```

use chrono::NaiveDate;
use corrnet::{align_calendars, RawSeries};

fn day(d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 3, d).unwrap()
}

fn main() -> corrnet::Result<()> {
    let series = vec![
        RawSeries::new("NYSE", vec![(day(4), 100.0), (day(5), 101.0), (day(6), 100.5), (day(7), 102.0)])?,
        RawSeries::new("LSE", vec![(day(4), 50.0), (day(6), 50.4), (day(7), 50.9)])?,
        RawSeries::new("FSE", vec![(day(4), 80.0), (day(5), 80.3), (day(6), 80.1), (day(7), 81.0)])?,
        // one market of four missing is kept and filled; the 8th has only Tokyo and is dropped
        RawSeries::new("TSE", vec![(day(4), 2000.0), (day(5), 2004.0), (day(6), 2010.0), (day(7), 2030.0), (day(8), 2041.0)])?,
    ];
    let panel = align_calendars(&series, 0.30)?;

    println!("{:<12}{}", "date", panel.symbols().join("\t"));
    for (t, date) in panel.dates().iter().enumerate() {
        let cells: Vec<String> = (0..panel.n_symbols())
            .map(|j| {
                let mark = if panel.filled()[(t, j)] { "*" } else { "" };
                format!("{}{mark}", panel.prices()[(t, j)])
            })
            .collect();
        println!("{:<12}{}", date.to_string(), cells.join("\t"));
    }
    println!("{} cells forward-filled (marked *)", panel.n_filled());

    let out = std::env::temp_dir().join("corrnet_align_panel.csv");
    panel.write_csv(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}
