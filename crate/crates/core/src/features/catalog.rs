//! Feature catalog: the ordered list of features a model consumes plus the
//! code lists the clinical families match against.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::claims::SdohSchema;
use crate::{Error, Result};

macro_rules! builtins {
    ($($variant:ident => $name:literal,)*) => {
        /// Features computed directly by the built-in families.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
        pub enum Builtin {
            $($variant,)*
        }

        impl Builtin {
            pub const ALL: &'static [Builtin] = &[$(Builtin::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Builtin::$variant => $name,)*
                }
            }

            pub fn from_name(name: &str) -> Option<Builtin> {
                match name {
                    $($name => Some(Builtin::$variant),)*
                    _ => None,
                }
            }
        }
    };
}

builtins! {
    Age => "AGE",
    GenderMale => "GENDER_MALE",
    MedicalCoverageDays => "MEDICAL_COVERAGE_DAYS",
    PharmacyCoverageDays => "PHARMACY_COVERAGE_DAYS",
    OptimalLifeExpectancy => "OPTIMAL_LIFE_EXPECTANCY",
    YllCurrentYear => "YLL_CURRENT_YR",
    MortalityRisk => "MORTALITY_RISK",
    AnnualAllowedCurrentYear => "ANNUAL_ALLWD_AMT_CURRENT_YEAR",
    AllowedCurrentYear => "ALLWD_AMT_CURRENT_YEAR",
    AllowedPriorYear => "ALLWD_AMT_PRIOR_YEAR",
    AnnualAllowedPriorYear => "ANNUAL_ALLWD_AMT_PRIOR_YEAR",
    AllowedTwoYearsPrior => "ALLWD_AMT_2_YEARS_PRIOR",
    AnnualAllowedTwoYearsPrior => "ANNUAL_ALLWD_AMT_2_YEARS_PRIOR",
    Total3YearAllowed => "TOTAL_3_YEAR_ALLWD_AMT",
    InpatientDays12Mo => "INPATIENT_DAYS_12MO",
    DaysSinceLastClaim => "DAYS_SINCE_LAST_CLAIM",
    AllowedFirst3Mo => "ALLWD_AMT_FIRST_3MO",
    AllowedSecond3Mo => "ALLWD_AMT_SECOND_3MO",
    AllowedThird3Mo => "ALLWD_AMT_THIRD_3MO",
    PharmacyAllowed12Mo => "PHARMACY_ALLWD_AMT_12MO",
    Predicted12MoAllowed => "PREDICTED_12MO_ALLWD_AMT",
    AllowedRisingWv => "ALLWD_AMT_RISING_WV",
    AllowedFallingWv => "ALLWD_AMT_FALLING_WV",
    AllowedSecond6MoRisingWv => "ALLWD_AMT_SECOND_6MO_RISING_WV",
    AllowedFourth3MoRisingWv => "ALLWD_AMT_FOURTH_3MO_RISING_WV",
    AllowedFourth3MoWv => "ALLWD_AMT_FOURTH_3MO_WV",
    EmergencyEvents12Mo => "EMERGENCY_EVENTS_12MO",
    AmbulatoryEvents12Mo => "AMBULATORY_EVENTS_12MO",
    InpatientEvents12Mo => "INPATIENT_EVENTS_12MO",
    TriggerTotalAllowed => "TRG_TOTAL_ALLWD_AMT",
    TriggerDaysMalignancy => "TRG_DAYS_MALIGNANCY",
}

/// The twenty highest-importance variables of the reference model; the
/// default catalog must contain all of them.
pub const TOP20: [&str; 20] = [
    "AGE",
    "ALLWD_AMT_FOURTH_3MO_RISING_WV",
    "OPTIMAL_LIFE_EXPECTANCY",
    "PREDICTED_12MO_ALLWD_AMT",
    "YLL_CURRENT_YR",
    "ALLWD_AMT_SECOND_6MO_RISING_WV",
    "INPATIENT_DAYS_12MO",
    "ANNUAL_ALLWD_AMT_CURRENT_YEAR",
    "TRG_DAYS_MALIGNANCY",
    "ALLWD_AMT_PRIOR_YEAR",
    "TRG_TOTAL_ALLWD_AMT",
    "ALLWD_AMT_FALLING_WV",
    "ALLWD_AMT_FOURTH_3MO_WV",
    "TOTAL_3_YEAR_ALLWD_AMT",
    "ANNUAL_ALLWD_AMT_PRIOR_YEAR",
    "MORTALITY_RISK",
    "ALLWD_AMT_RISING_WV",
    "GPI06_372000",
    "ANNUAL_ALLWD_AMT_2_YEARS_PRIOR",
    "DAYS_SINCE_LAST_CLAIM",
];

/// Which claims a per-code cost feature sums over.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CategoryTarget {
    /// Prefix match on `drug_class`.
    DrugPrefix(String),
    /// Exact match on `condition_code`.
    Condition(String),
    /// Exact match on `procedure_code`.
    Procedure(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum FeatureKind {
    Builtin(Builtin),
    Category(CategoryTarget),
    /// Index into the SDOH schema.
    Sdoh(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureDef {
    pub name: String,
    pub kind: FeatureKind,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CodeLists {
    pub trigger_conditions: BTreeSet<String>,
    /// Subset of `trigger_conditions`.
    pub cancer_trigger: BTreeSet<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureCatalog {
    pub schema_label: String,
    defs: Vec<FeatureDef>,
    pub code_lists: CodeLists,
    schema_version: String,
}

pub const SDOH_PREFIX: &str = "SDOH_";

const BUNDLED_CATALOG: &str = include_str!("../../data/catalog.toml");

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    schema_label: String,
    features: Vec<String>,
    #[serde(default)]
    code_lists: CodeListsFile,
    #[serde(default)]
    category: Vec<CategoryFile>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodeListsFile {
    #[serde(default)]
    trigger_conditions: Vec<String>,
    #[serde(default)]
    cancer_trigger: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CategoryFile {
    name: String,
    drug_prefix: Option<String>,
    condition: Option<String>,
    procedure: Option<String>,
}

/// `<label>:<first 12 hex digits of sha256 over the ordered names>`.
pub fn schema_version(label: &str, names: &[String]) -> String {
    let mut h = Sha256::new();
    for n in names {
        h.update(n.as_bytes());
        h.update(b"\n");
    }
    let digest = h.finalize();
    let mut s = format!("{label}:");
    for b in &digest[..6] {
        write!(s, "{b:02x}").unwrap();
    }
    s
}

impl FeatureCatalog {
    pub fn new(schema_label: impl Into<String>, defs: Vec<FeatureDef>, code_lists: CodeLists) -> Result<Self> {
        let schema_label = schema_label.into();
        let mut seen = HashSet::new();
        for d in &defs {
            if !seen.insert(d.name.as_str()) {
                return Err(Error::Invalid(format!("duplicate feature name {}", d.name)));
            }
        }
        if let Some(c) = code_lists
            .cancer_trigger
            .difference(&code_lists.trigger_conditions)
            .next()
        {
            return Err(Error::Invalid(format!("cancer trigger {c} is not a trigger condition")));
        }
        let names: Vec<String> = defs.iter().map(|d| d.name.clone()).collect();
        let schema_version = schema_version(&schema_label, &names);
        Ok(FeatureCatalog {
            schema_label,
            defs,
            code_lists,
            schema_version,
        })
    }

    /// The bundled default catalog resolved against the bundled SDOH schema.
    pub fn bundled() -> Self {
        Self::from_toml(BUNDLED_CATALOG, &SdohSchema::bundled()).expect("bundled catalog is valid")
    }

    pub fn from_toml(text: &str, sdoh: &SdohSchema) -> Result<Self> {
        let file: CatalogFile = toml::from_str(text)?;
        let mut defs = Vec::new();
        for name in &file.features {
            if name == "SDOH_*" {
                for (i, ind) in sdoh.indicators.iter().enumerate() {
                    defs.push(FeatureDef {
                        name: format!("{SDOH_PREFIX}{ind}"),
                        kind: FeatureKind::Sdoh(i),
                    });
                }
                continue;
            }
            let kind = if let Some(b) = Builtin::from_name(name) {
                FeatureKind::Builtin(b)
            } else if let Some(cat) = file.category.iter().find(|c| &c.name == name) {
                FeatureKind::Category(category_target(cat)?)
            } else if let Some(i) = name.strip_prefix(SDOH_PREFIX).and_then(|ind| sdoh.index_of(ind)) {
                FeatureKind::Sdoh(i)
            } else {
                return Err(Error::Invalid(format!("unknown feature {name}")));
            };
            defs.push(FeatureDef {
                name: name.clone(),
                kind,
            });
        }
        let code_lists = CodeLists {
            trigger_conditions: file.code_lists.trigger_conditions.into_iter().collect(),
            cancer_trigger: file.code_lists.cancer_trigger.into_iter().collect(),
        };
        Self::new(file.schema_label, defs, code_lists)
    }

    /// Serializes back to the TOML catalog format.
    pub fn to_toml(&self) -> String {
        let quote = |s: &str| format!("{s:?}");
        let mut out = format!("schema_label = {}\n\nfeatures = [\n", quote(&self.schema_label));
        for d in &self.defs {
            writeln!(out, "    {},", quote(&d.name)).unwrap();
        }
        out.push_str("]\n\n[code_lists]\n");
        let list = |set: &BTreeSet<String>| set.iter().map(|s| quote(s)).collect::<Vec<_>>().join(", ");
        writeln!(
            out,
            "trigger_conditions = [{}]",
            list(&self.code_lists.trigger_conditions)
        )
        .unwrap();
        writeln!(out, "cancer_trigger = [{}]", list(&self.code_lists.cancer_trigger)).unwrap();
        for d in &self.defs {
            if let FeatureKind::Category(t) = &d.kind {
                let (key, code) = match t {
                    CategoryTarget::DrugPrefix(c) => ("drug_prefix", c),
                    CategoryTarget::Condition(c) => ("condition", c),
                    CategoryTarget::Procedure(c) => ("procedure", c),
                };
                write!(
                    out,
                    "\n[[category]]\nname = {}\n{key} = {}\n",
                    quote(&d.name),
                    quote(code)
                )
                .unwrap();
            }
        }
        out
    }

    pub fn defs(&self) -> &[FeatureDef] {
        &self.defs
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.defs.iter().map(|d| d.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.defs.iter().position(|d| d.name == name)
    }

    pub fn schema_version(&self) -> &str {
        &self.schema_version
    }

    /// Top-20 reference features absent from this catalog.
    pub fn missing_top20(&self) -> Vec<&'static str> {
        TOP20.iter().copied().filter(|n| self.index_of(n).is_none()).collect()
    }

    /// Sub-catalog keeping only the named features, in catalog order.
    pub fn retain(&self, keep: &HashSet<&str>) -> Result<Self> {
        let defs = self
            .defs
            .iter()
            .filter(|d| keep.contains(d.name.as_str()))
            .cloned()
            .collect();
        Self::new(self.schema_label.clone(), defs, self.code_lists.clone())
    }
}

fn category_target(c: &CategoryFile) -> Result<CategoryTarget> {
    match (&c.drug_prefix, &c.condition, &c.procedure) {
        (Some(p), None, None) => Ok(CategoryTarget::DrugPrefix(p.clone())),
        (None, Some(p), None) => Ok(CategoryTarget::Condition(p.clone())),
        (None, None, Some(p)) => Ok(CategoryTarget::Procedure(p.clone())),
        _ => Err(Error::Invalid(format!(
            "category {} needs exactly one of drug_prefix, condition, procedure",
            c.name
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_catalog_covers_top20() {
        let c = FeatureCatalog::bundled();
        assert!(c.missing_top20().is_empty(), "{:?}", c.missing_top20());
        assert_eq!(c.len(), 81);
        assert!(c.code_lists.cancer_trigger.is_subset(&c.code_lists.trigger_conditions));
    }

    #[test]
    fn duplicate_names_rejected() {
        let text = "schema_label = \"x\"\nfeatures = [\"AGE\", \"AGE\"]\n";
        assert!(FeatureCatalog::from_toml(text, &SdohSchema::bundled()).is_err());
    }

    #[test]
    fn unknown_feature_rejected() {
        let text = "schema_label = \"x\"\nfeatures = [\"NOPE\"]\n";
        assert!(FeatureCatalog::from_toml(text, &SdohSchema::bundled()).is_err());
    }

    #[test]
    fn toml_round_trip_preserves_catalog() {
        let c = FeatureCatalog::bundled();
        let back = FeatureCatalog::from_toml(&c.to_toml(), &SdohSchema::bundled()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn retain_changes_schema_version() {
        let c = FeatureCatalog::bundled();
        let keep: HashSet<&str> = ["AGE", "GPI06_372000"].into_iter().collect();
        let r = c.retain(&keep).unwrap();
        assert_eq!(r.names(), vec!["AGE", "GPI06_372000"]);
        assert_ne!(r.schema_version(), c.schema_version());
        let all: HashSet<&str> = c.defs().iter().map(|d| d.name.as_str()).collect();
        assert_eq!(c.retain(&all).unwrap(), c);
    }
}
