use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;

use super::{AssetSeries, MarketError, OhlcRow};

const COLUMNS: [&str; 5] = ["date", "open", "high", "low", "close"];

/// Reads a `date,open,high,low,close` CSV file into a validated series.
///
/// Header names are matched case-insensitively and extra columns are
/// ignored. Rows may appear in any order.
pub fn load_ohlc_csv(path: impl AsRef<Path>, ticker: &str) -> Result<AssetSeries, MarketError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    parse_ohlc_csv(file, &path.display().to_string(), ticker)
}

/// Same as [`load_ohlc_csv`] over any reader; `source` is used in error messages.
pub fn parse_ohlc_csv<R: Read>(reader: R, source: &str, ticker: &str) -> Result<AssetSeries, MarketError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| MarketError::UnparsableRow { path: source.to_string(), line: 1, reason: e.to_string() })?
        .clone();

    let mut index = [0usize; 5];
    for (slot, column) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(column))
            .ok_or(MarketError::MissingColumn { path: source.to_string(), column })?;
    }

    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| MarketError::UnparsableRow {
            path: source.to_string(),
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |reason: String| MarketError::UnparsableRow { path: source.to_string(), line, reason };
        let field = |i: usize| record.get(index[i]).ok_or_else(|| bad(format!("missing {}", COLUMNS[i])));

        let date = NaiveDate::parse_from_str(field(0)?, "%Y-%m-%d").map_err(|e| bad(format!("date: {e}")))?;
        let mut prices = [0.0f64; 4];
        for (k, price) in prices.iter_mut().enumerate() {
            let raw = field(k + 1)?;
            *price = raw.parse().map_err(|_| bad(format!("{}: `{raw}` is not a number", COLUMNS[k + 1])))?;
        }
        rows.push(OhlcRow { date, open: prices[0], high: prices[1], low: prices[2], close: prices[3] });
    }
    AssetSeries::new(ticker, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<AssetSeries, MarketError> {
        parse_ohlc_csv(text.as_bytes(), "test.csv", "T")
    }

    #[test]
    fn parses_two_rows() {
        let s = parse("date,open,high,low,close\n2020-01-02,10,12,9,11\n2020-01-03,11,13,10,12\n").unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.rows()[0].date < s.rows()[1].date);
        assert_eq!(s.rows()[1].close, 12.0);
    }

    #[test]
    fn header_is_case_insensitive_and_extra_columns_ignored() {
        let s = parse("Volume,Date,Open,HIGH,Low,Close,Adj Close\n5,2020-01-02,10,12,9,11,11\n").unwrap();
        assert_eq!(s.rows()[0].high, 12.0);
    }

    #[test]
    fn close_above_high_is_rejected() {
        let err = parse("date,open,high,low,close\n2020-01-02,10,12,9,14\n").unwrap_err();
        match err {
            MarketError::OhlcOrderingViolation { date, .. } => {
                assert_eq!(date, NaiveDate::from_ymd_opt(2020, 1, 2).unwrap())
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn shuffled_rows_are_sorted() {
        let sorted = parse("date,open,high,low,close\n2020-01-02,10,12,9,11\n2020-01-03,11,13,10,12\n2020-01-06,12,13,11,12\n").unwrap();
        let shuffled = parse("date,open,high,low,close\n2020-01-06,12,13,11,12\n2020-01-02,10,12,9,11\n2020-01-03,11,13,10,12\n").unwrap();
        assert_eq!(sorted, shuffled);
    }

    #[test]
    fn missing_column_is_reported() {
        let err = parse("date,open,high,close\n2020-01-02,10,12,11\n").unwrap_err();
        assert!(matches!(err, MarketError::MissingColumn { column: "low", .. }));
    }

    #[test]
    fn bad_number_reports_line() {
        let err = parse("date,open,high,low,close\n2020-01-02,10,12,9,11\n2020-01-03,11,abc,10,12\n").unwrap_err();
        assert!(matches!(err, MarketError::UnparsableRow { line: 3, .. }), "{err}");
    }

    #[test]
    fn header_only_is_empty_series() {
        assert!(matches!(parse("date,open,high,low,close\n"), Err(MarketError::EmptySeries(_))));
    }
}
