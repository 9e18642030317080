use std::collections::HashMap;
use std::io::Read;

use crate::claims::Gender;
use crate::{Error, Result};

const BUNDLED_LIFE_TABLE: &str = include_str!("../../data/life_table.csv");
const BUNDLED_CONDITION_WEIGHTS: &str = include_str!("../../data/condition_weights.csv");

/// Remaining life expectancy by age and gender, plus years-of-life-lost
/// weights per condition code.
#[derive(Clone, Debug, PartialEq)]
pub struct LifeTable {
    /// Sorted by age; index 0 = F, 1 = M.
    rows: [Vec<(u32, f64)>; 2],
    years_lost: HashMap<String, f64>,
}

fn gender_slot(g: Gender) -> usize {
    match g {
        Gender::F => 0,
        Gender::M => 1,
    }
}

impl LifeTable {
    pub fn bundled() -> Self {
        Self::from_csv(BUNDLED_LIFE_TABLE.as_bytes(), BUNDLED_CONDITION_WEIGHTS.as_bytes())
            .expect("bundled life table is valid")
    }

    /// `life_table.csv` (`age,gender,remaining_expectancy`) and
    /// `condition_weights.csv` (`condition_code,years_lost`).
    pub fn from_csv(life: impl Read, weights: impl Read) -> Result<Self> {
        let mut rows: [Vec<(u32, f64)>; 2] = [Vec::new(), Vec::new()];
        let mut rdr = csv::Reader::from_reader(life);
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let bad = |m: &str| Error::parse("life_table.csv", line, m);
            let age: u32 = rec[0].parse().map_err(|_| bad("bad age"))?;
            let g: Gender = rec[1].parse().map_err(|e: String| bad(&e))?;
            let e: f64 = rec[2].parse().map_err(|_| bad("bad expectancy"))?;
            if !(e > 0.0) {
                return Err(bad("expectancy must be positive"));
            }
            rows[gender_slot(g)].push((age, e));
        }
        for r in &mut rows {
            r.sort_by_key(|&(a, _)| a);
            if r.is_empty() {
                return Err(Error::Invalid("life table needs rows for both genders".into()));
            }
            if r.windows(2).any(|w| w[0].0 == w[1].0 || w[1].1 > w[0].1) {
                return Err(Error::Invalid(
                    "life expectancy must be unique per age and nonincreasing".into(),
                ));
            }
        }

        let mut years_lost = HashMap::new();
        let mut rdr = csv::Reader::from_reader(weights);
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let w: f64 = rec[1]
                .parse()
                .map_err(|_| Error::parse("condition_weights.csv", line, "bad years_lost"))?;
            if w < 0.0 {
                return Err(Error::parse("condition_weights.csv", line, "negative years_lost"));
            }
            years_lost.insert(rec[0].to_string(), w);
        }
        Ok(LifeTable { rows, years_lost })
    }

    /// Expectancy at `age`, clamped to the table's age range. Unknown gender
    /// averages the two tables.
    pub fn expectancy(&self, age: u32, gender: Option<Gender>) -> f64 {
        match gender {
            Some(g) => lookup(&self.rows[gender_slot(g)], age),
            None => 0.5 * (lookup(&self.rows[0], age) + lookup(&self.rows[1], age)),
        }
    }

    pub fn years_lost(&self, condition_code: &str) -> Option<f64> {
        self.years_lost.get(condition_code).copied()
    }
}

fn lookup(rows: &[(u32, f64)], age: u32) -> f64 {
    let i = rows.partition_point(|&(a, _)| a <= age);
    rows[i.saturating_sub(1)].1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_row_lookup() {
        let t = LifeTable::bundled();
        let row = BUNDLED_LIFE_TABLE.lines().find(|l| l.starts_with("40,F,")).unwrap();
        let expected: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(t.expectancy(40, Some(Gender::F)), expected);
    }

    #[test]
    fn clamps_outside_range() {
        let t = LifeTable::bundled();
        assert_eq!(t.expectancy(200, Some(Gender::M)), t.expectancy(110, Some(Gender::M)));
        assert!(t.expectancy(0, Some(Gender::F)) > t.expectancy(1, Some(Gender::F)));
    }

    #[test]
    fn rejects_increasing_expectancy() {
        let life = "age,gender,remaining_expectancy\n0,F,80\n1,F,81\n0,M,75\n";
        assert!(LifeTable::from_csv(life.as_bytes(), "condition_code,years_lost\n".as_bytes()).is_err());
    }
}
