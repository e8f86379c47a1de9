//! Hourly energy prices, monthly averages and the dispatching price threshold.
//!
//! Price files are CSV with the header `hour,price`, where `hour` is the
//! 0-based hour since the series start and `price` is in CU/MWh. An
//! optional leading comment `# start_date=YYYY-MM-DD` anchors hour 0 to a
//! calendar date (default 2023-01-01); month boundaries follow that calendar.

use std::io::Write;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime};

use crate::stochastics::{RngStream, StreamKey, StreamRole};
use crate::{Error, Result, MINUTES_PER_HOUR};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonthlyAverage {
    /// Ordinal of the month within the series, starting at 0.
    pub month_index: usize,
    pub year: i32,
    /// Calendar month, 1..=12.
    pub month: u32,
    pub first_hour: usize,
    /// Exclusive.
    pub end_hour: usize,
    pub avg_price: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    start_date: NaiveDate,
    hourly: Vec<f64>,
    months: Vec<MonthlyAverage>,
    /// Month ordinal for every hour.
    hour_month: Vec<u16>,
}

pub fn default_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2023, 1, 1).expect("valid date")
}

impl PriceSeries {
    pub fn new(start_date: NaiveDate, hourly: Vec<f64>) -> Result<PriceSeries> {
        if hourly.is_empty() {
            return Err(Error::Prices("series has no hours".into()));
        }
        if let Some(h) = hourly.iter().position(|p| !p.is_finite()) {
            return Err(Error::Prices(format!("hour {h} has a non-finite price")));
        }
        let mut months: Vec<MonthlyAverage> = Vec::new();
        let mut hour_month = Vec::with_capacity(hourly.len());
        let mut hour = 0usize;
        let mut date = start_date;
        while hour < hourly.len() {
            let (y, m) = (date.year(), date.month());
            let next_month = if m == 12 {
                NaiveDate::from_ymd_opt(y + 1, 1, 1)
            } else {
                NaiveDate::from_ymd_opt(y, m + 1, 1)
            }
            .expect("valid date");
            let days = (next_month - date).num_days() as usize;
            let end = (hour + days * 24).min(hourly.len());
            let slice = &hourly[hour..end];
            let idx = months.len();
            months.push(MonthlyAverage {
                month_index: idx,
                year: y,
                month: m,
                first_hour: hour,
                end_hour: end,
                avg_price: slice.iter().sum::<f64>() / slice.len() as f64,
            });
            hour_month.extend(std::iter::repeat_n(idx as u16, end - hour));
            hour = end;
            date = next_month;
        }
        Ok(PriceSeries {
            start_date,
            hourly,
            months,
            hour_month,
        })
    }

    /// Series starting 2023-01-01.
    pub fn from_hourly(hourly: Vec<f64>) -> Result<PriceSeries> {
        PriceSeries::new(default_start_date(), hourly)
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn hourly(&self) -> &[f64] {
        &self.hourly
    }

    pub fn hours(&self) -> usize {
        self.hourly.len()
    }

    pub fn covers_minutes(&self) -> f64 {
        self.hourly.len() as f64 * MINUTES_PER_HOUR
    }

    pub fn monthly_averages(&self) -> &[MonthlyAverage] {
        &self.months
    }

    fn hour_index(&self, minutes: f64) -> Result<usize> {
        let h = (minutes / MINUTES_PER_HOUR).floor();
        if !(h >= 0.0) || h as usize >= self.hourly.len() {
            return Err(Error::OutOfRange {
                minutes,
                hours: self.hourly.len(),
            });
        }
        Ok(h as usize)
    }

    /// Price of the hour containing `minutes`.
    pub fn price_at(&self, minutes: f64) -> Result<f64> {
        Ok(self.hourly[self.hour_index(minutes)?])
    }

    pub fn month_at(&self, minutes: f64) -> Result<&MonthlyAverage> {
        let h = self.hour_index(minutes)?;
        Ok(&self.months[self.hour_month[h] as usize])
    }

    /// Monthly average price of the month containing `minutes`, times the
    /// energy factor.
    pub fn energy_threshold(&self, minutes: f64, energy_factor: f64) -> Result<f64> {
        Ok(self.month_at(minutes)?.avg_price * energy_factor)
    }

    /// Multiplies every price by `k`.
    pub fn scaled(&self, k: f64) -> Result<PriceSeries> {
        PriceSeries::new(self.start_date, self.hourly.iter().map(|p| p * k).collect())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# start_date={}", self.start_date.format("%Y-%m-%d"))?;
        writeln!(out, "hour,price")?;
        for (h, p) in self.hourly.iter().enumerate() {
            writeln!(out, "{h},{p}")?;
        }
        Ok(())
    }
}

pub fn price_at(series: &PriceSeries, minutes: f64) -> Result<f64> {
    series.price_at(minutes)
}

pub fn energy_threshold(series: &PriceSeries, minutes: f64, energy_factor: f64) -> Result<f64> {
    series.energy_threshold(minutes, energy_factor)
}

pub fn load_prices(path: impl AsRef<Path>) -> Result<PriceSeries> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_prices(&text)
}

pub fn parse_prices(text: &str) -> Result<PriceSeries> {
    let mut start = default_start_date();
    let mut header_seen = false;
    let mut rows: Vec<(usize, f64, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(date) = comment.trim().strip_prefix("start_date=") {
                start = NaiveDate::parse_from_str(date.trim(), "%Y-%m-%d")
                    .map_err(|e| Error::parse(line_no, format!("bad start_date: {e}")))?;
            }
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols != ["hour", "price"] {
                return Err(Error::parse(line_no, "expected header `hour,price`"));
            }
            header_seen = true;
            continue;
        }
        let (h, p) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(line_no, "expected `hour,price`"))?;
        let hour: usize = h
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad hour `{}`", h.trim())))?;
        let price: f64 = p
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad price `{}`", p.trim())))?;
        rows.push((hour, price, line_no));
    }
    if rows.is_empty() {
        return Err(Error::Prices("no price rows".into()));
    }
    rows.sort_by_key(|r| r.0);
    let mut hourly = Vec::with_capacity(rows.len());
    for (expected, &(hour, price, line_no)) in rows.iter().enumerate() {
        if hour < expected {
            return Err(Error::Prices(format!("duplicate hour {hour} (line {line_no})")));
        }
        if hour > expected {
            return Err(Error::Prices(format!("gap: hour {expected} is missing")));
        }
        hourly.push(price);
    }
    PriceSeries::new(start, hourly)
}

/// Converts an hourly market export into a series.
///
/// Each data row is `timestamp<sep>price` with `timestamp` formatted as
/// `YYYY-MM-DD HH:MM` (or with a `T` separator). Rows separated by `;` may
/// use a decimal comma, as in common European exports. Lines that do not
/// start with a digit (headers, notes) are skipped. Timestamps must be
/// strictly hourly and contiguous.
pub fn convert_market_export(text: &str) -> Result<PriceSeries> {
    let mut points: Vec<(NaiveDateTime, f64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if !line.starts_with(|c: char| c.is_ascii_digit()) {
            continue;
        }
        let (ts, price) = if let Some((a, b)) = line.split_once(';') {
            (a.trim(), b.trim().replace(',', "."))
        } else if let Some((a, b)) = line.split_once(',') {
            (a.trim(), b.trim().to_string())
        } else {
            return Err(Error::parse(line_no, "expected `timestamp,price`"));
        };
        let ts = NaiveDateTime::parse_from_str(ts, "%Y-%m-%d %H:%M")
            .or_else(|_| NaiveDateTime::parse_from_str(ts, "%Y-%m-%dT%H:%M"))
            .map_err(|e| Error::parse(line_no, format!("bad timestamp `{ts}`: {e}")))?;
        let price: f64 = price
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad price `{price}`")))?;
        points.push((ts, price));
    }
    let first = points
        .first()
        .ok_or_else(|| Error::Prices("export contains no rows".into()))?
        .0;
    if first.time() != chrono::NaiveTime::MIN {
        return Err(Error::Prices("export must start at midnight".into()));
    }
    for (i, (ts, _)) in points.iter().enumerate() {
        let expected = first + Duration::hours(i as i64);
        if *ts != expected {
            return Err(Error::Prices(format!("expected hour {expected}, found {ts}")));
        }
    }
    PriceSeries::new(first.date(), points.into_iter().map(|(_, p)| p).collect())
}

/// Shape of the synthetic price generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticPriceParams {
    pub days: usize,
    /// Mean level in CU/MWh.
    pub base: f64,
    /// Relative winter premium; prices peak in January.
    pub seasonal_amplitude: f64,
    /// Relative height of the morning and evening peaks.
    pub peak_amplitude: f64,
    /// Relative depth of the midday solar dip in midsummer.
    pub solar_depth: f64,
    /// Standard deviation of the multiplicative noise.
    pub noise: f64,
}

impl Default for SyntheticPriceParams {
    fn default() -> Self {
        SyntheticPriceParams {
            days: 400,
            base: 100.0,
            seasonal_amplitude: 0.35,
            peak_amplitude: 0.2,
            solar_depth: 0.55,
            noise: 0.08,
        }
    }
}

fn bump(hour: f64, center: f64, width: f64) -> f64 {
    (-0.5 * ((hour - center) / width).powi(2)).exp()
}

/// Daily sinusoid with morning and evening peaks, a midday solar dip that
/// deepens in summer, a winter premium, and AR(1) multiplicative noise.
pub fn synthetic_series(params: &SyntheticPriceParams, seed: u64) -> Result<PriceSeries> {
    if params.days == 0 {
        return Err(Error::InvalidParam("synthetic series needs at least one day".into()));
    }
    let start = default_start_date();
    let mut stream = RngStream::new(seed, StreamKey::new(0, StreamRole::Prices, 0));
    let mut hourly = Vec::with_capacity(params.days * 24);
    let mut noise = 0.0;
    let tau = std::f64::consts::TAU;
    for day in 0..params.days {
        let doy = (start + Duration::days(day as i64)).ordinal0() as f64;
        let season = 1.0 + params.seasonal_amplitude * (tau * doy / 365.0).cos();
        let solar = params.solar_depth * 0.5 * (1.0 - (tau * doy / 365.0).cos()) + 0.1;
        for hour in 0..24 {
            let h = hour as f64 + 0.5;
            let shape = 1.0 + params.peak_amplitude * (bump(h, 8.0, 1.5) + 1.3 * bump(h, 19.0, 2.0))
                - solar * bump(h, 14.0, 2.2)
                - 0.1 * bump(h, 3.0, 2.0);
            noise = 0.7 * noise + params.noise * stream.standard_normal();
            let price = params.base * season * shape * (1.0 + noise);
            hourly.push(price.max(0.0));
        }
    }
    PriceSeries::new(start, hourly)
}
