use chrono::{Datelike, Days, Months};

use super::Date;
use crate::{Error, Result};

/// Shift a date by whole calendar months, clamping the day to the target month.
pub fn add_months(d: Date, months: i32) -> Date {
    let shifted = if months >= 0 {
        d.checked_add_months(Months::new(months as u32))
    } else {
        d.checked_sub_months(Months::new(months.unsigned_abs()))
    };
    shifted.expect("date out of range")
}

/// A twelve-month reporting period followed immediately by a twelve-month
/// prediction period. All bounds are inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeriodPair {
    pub report_start: Date,
    pub report_end: Date,
    pub predict_start: Date,
    pub predict_end: Date,
}

impl PeriodPair {
    pub fn from_report_start(report_start: Date) -> Self {
        let report_end = add_months(report_start, 12) - Days::new(1);
        let predict_start = report_end + Days::new(1);
        let predict_end = add_months(predict_start, 12) - Days::new(1);
        PeriodPair {
            report_start,
            report_end,
            predict_start,
            predict_end,
        }
    }

    /// Validates that `report_end` closes exactly twelve calendar months.
    pub fn new(report_start: Date, report_end: Date) -> Result<Self> {
        let p = Self::from_report_start(report_start);
        if p.report_end != report_end {
            return Err(Error::Invalid(format!(
                "report period {report_start}..{report_end} is not exactly 12 months (expected end {})",
                p.report_end
            )));
        }
        Ok(p)
    }

    /// 4/1/2017 – 3/31/2018 reporting, 4/1/2018 – 3/31/2019 prediction.
    pub fn study_default() -> Self {
        Self::from_report_start(Date::from_ymd_opt(2017, 4, 1).unwrap())
    }

    pub fn report_days(&self) -> i64 {
        (self.report_end - self.report_start).num_days() + 1
    }

    /// First day of the last month of the reporting period.
    pub fn report_anchor(&self) -> Date {
        self.report_end.with_day(1).unwrap()
    }

    /// Last day of the first month of the prediction period.
    pub fn predict_anchor(&self) -> Date {
        add_months(self.predict_start.with_day(1).unwrap(), 1) - Days::new(1)
    }

    /// The `k`-th full 12-month window before the reporting period (`k >= 1`).
    pub fn prior_window(&self, k: u32) -> (Date, Date) {
        let start = add_months(self.report_start, -12 * k as i32);
        let end = add_months(self.report_start, -12 * (k as i32 - 1)) - Days::new(1);
        (start, end)
    }

    /// Quarter `q` in `1..=4` of the reporting period.
    pub fn report_quarter(&self, q: u32) -> (Date, Date) {
        assert!((1..=4).contains(&q));
        let start = add_months(self.report_start, 3 * (q as i32 - 1));
        let end = add_months(self.report_start, 3 * q as i32) - Days::new(1);
        (start, end)
    }

    /// Second half of the reporting period.
    pub fn report_second_half(&self) -> (Date, Date) {
        (add_months(self.report_start, 6), self.report_end)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> Date {
        Date::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn study_periods() {
        let p = PeriodPair::study_default();
        assert_eq!(p.report_end, d(2018, 3, 31));
        assert_eq!(p.predict_start, d(2018, 4, 1));
        assert_eq!(p.predict_end, d(2019, 3, 31));
        assert_eq!(p.report_anchor(), d(2018, 3, 1));
        assert_eq!(p.predict_anchor(), d(2018, 4, 30));
        assert_eq!(p.report_days(), 365);
    }

    #[test]
    fn rejects_non_twelve_month_period() {
        assert!(PeriodPair::new(d(2017, 4, 1), d(2018, 3, 30)).is_err());
        assert!(PeriodPair::new(d(2017, 4, 1), d(2018, 3, 31)).is_ok());
    }

    #[test]
    fn windows() {
        let p = PeriodPair::study_default();
        assert_eq!(p.prior_window(1), (d(2016, 4, 1), d(2017, 3, 31)));
        assert_eq!(p.prior_window(2), (d(2015, 4, 1), d(2016, 3, 31)));
        assert_eq!(p.report_quarter(4), (d(2018, 1, 1), d(2018, 3, 31)));
        assert_eq!(p.report_second_half(), (d(2017, 10, 1), d(2018, 3, 31)));
    }
}
