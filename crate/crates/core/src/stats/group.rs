use std::collections::BTreeSet;
use std::io::Read;

use serde::Serialize;

use super::{bh_correct, ols_fit, wilcoxon_ranksum};
use crate::{Error, Result};

/// Fixed leading columns of a group table; every further column is a
/// measurement (one per thickness position, or a single scalar measure).
pub const GROUP_TABLE_COLUMNS: [&str; 5] = ["case_id", "group", "age", "sex", "total_brain_volume"];

/// Names of the fitted coefficients, in design-column order. `group` is
/// 1 for patients, `sex` is 1 for male.
pub const PREDICTORS: [&str; 5] = ["intercept", "group", "age", "sex", "total_brain_volume"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Patient,
    Control,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupRow {
    pub case_id: String,
    pub group: Group,
    pub age: f64,
    /// 1 = male, 0 = female.
    pub sex: f64,
    pub total_brain_volume: f64,
    /// Measurements; `None` for missing values.
    pub values: Vec<Option<f64>>,
}

impl GroupRow {
    fn design_row(&self) -> Vec<f64> {
        let g = match self.group {
            Group::Patient => 1.0,
            Group::Control => 0.0,
        };
        vec![1.0, g, self.age, self.sex, self.total_brain_volume]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupTable {
    /// Measurement column names.
    pub measures: Vec<String>,
    pub rows: Vec<GroupRow>,
}

impl GroupTable {
    pub fn new(measures: Vec<String>, rows: Vec<GroupRow>) -> Result<Self> {
        let t = Self { measures, rows };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for r in &self.rows {
            if !ids.insert(&r.case_id) {
                return Err(Error::invalid(format!("duplicate case id `{}`", r.case_id)));
            }
            if r.values.len() != self.measures.len() {
                return Err(Error::invalid(format!(
                    "case `{}` has {} values, expected {}",
                    r.case_id,
                    r.values.len(),
                    self.measures.len()
                )));
            }
            if ![r.age, r.sex, r.total_brain_volume]
                .iter()
                .all(|v| v.is_finite())
            {
                return Err(Error::invalid(format!(
                    "case `{}` has missing covariates",
                    r.case_id
                )));
            }
        }
        Ok(())
    }

    /// Reads a CSV with the columns of [`GROUP_TABLE_COLUMNS`] followed by
    /// measurement columns. Empty measurement cells are missing values.
    pub fn from_csv(reader: impl Read) -> Result<Self> {
        let (measures, rows) = parse_rows(reader)?;
        if measures.is_empty() {
            return Err(Error::invalid("group table has no measurement columns"));
        }
        Self::new(measures, rows)
    }

    /// Reads only the leading covariate columns; measurement columns, if
    /// any, are ignored and every row comes back without values.
    pub fn covariates_from_csv(reader: impl Read) -> Result<Vec<GroupRow>> {
        let (_, mut rows) = parse_rows(reader)?;
        for r in &mut rows {
            r.values.clear();
        }
        Ok(rows)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = GROUP_TABLE_COLUMNS.iter().map(|s| s.to_string()).collect();
        header.extend(self.measures.iter().cloned());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.case_id.clone(),
                match r.group {
                    Group::Patient => "patient".into(),
                    Group::Control => "control".into(),
                },
                r.age.to_string(),
                if r.sex == 1.0 { "M".into() } else { "F".into() },
                r.total_brain_volume.to_string(),
            ];
            rec.extend(
                r.values
                    .iter()
                    .map(|v| v.map(|x| x.to_string()).unwrap_or_default()),
            );
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn parse_rows(reader: impl Read) -> Result<(Vec<String>, Vec<GroupRow>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    for (i, name) in GROUP_TABLE_COLUMNS.iter().enumerate() {
        if header.get(i) != Some(*name) {
            return Err(Error::invalid(format!(
                "group table column {} must be `{name}`",
                i + 1
            )));
        }
    }
    let measures: Vec<String> = header.iter().skip(5).map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let id = rec[0].to_string();
        let num = |i: usize| -> Result<f64> {
            rec[i].parse::<f64>().map_err(|_| {
                Error::invalid(format!(
                    "case `{id}`: bad {} `{}`",
                    GROUP_TABLE_COLUMNS[i], &rec[i]
                ))
            })
        };
        let group = match rec[1].to_ascii_lowercase().as_str() {
            "patient" | "1" => Group::Patient,
            "control" | "0" => Group::Control,
            other => {
                return Err(Error::invalid(format!(
                    "case `{id}`: unknown group `{other}`"
                )))
            }
        };
        let sex = match rec[3].to_ascii_lowercase().as_str() {
            "m" | "male" | "1" => 1.0,
            "f" | "female" | "0" => 0.0,
            other => {
                return Err(Error::invalid(format!(
                    "case `{id}`: unknown sex `{other}`"
                )))
            }
        };
        let values = (5..rec.len())
            .map(|i| {
                if rec[i].is_empty() || rec[i].eq_ignore_ascii_case("na") {
                    Ok(None)
                } else {
                    rec[i].parse::<f64>().map(Some).map_err(|_| {
                        Error::invalid(format!("case `{id}`: bad value `{}`", &rec[i]))
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(GroupRow {
            group,
            age: num(2)?,
            sex,
            total_brain_volume: num(4)?,
            values,
            case_id: id,
        });
    }
    Ok((measures, rows))
}

/// Group effect at one measurement position.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PositionStat {
    pub position: usize,
    /// Group coefficient (patient − control), adjusted for the covariates.
    pub beta: f64,
    pub p: f64,
    /// Benjamini-Hochberg adjusted across positions.
    pub p_adj: f64,
    /// Rows used after dropping missing values.
    pub n: usize,
}

/// Fits `value ~ 1 + group + age + sex + tbv` at every measurement column,
/// dropping rows with a missing value at that column, and BH-corrects the
/// group p-values across columns.
pub fn thickness_group_map(table: &GroupTable) -> Result<Vec<PositionStat>> {
    table.validate()?;
    let mut out = Vec::with_capacity(table.measures.len());
    for pos in 0..table.measures.len() {
        let (beta, p, n) = group_effect(table, pos)?;
        out.push(PositionStat {
            position: pos,
            beta,
            p,
            p_adj: 0.0,
            n,
        });
    }
    let adj = bh_correct(&out.iter().map(|s| s.p).collect::<Vec<_>>());
    for (s, a) in out.iter_mut().zip(adj) {
        s.p_adj = a;
    }
    Ok(out)
}

fn group_effect(table: &GroupTable, pos: usize) -> Result<(f64, f64, usize)> {
    let used: Vec<&GroupRow> = table
        .rows
        .iter()
        .filter(|r| r.values[pos].is_some())
        .collect();
    let patients = used.iter().filter(|r| r.group == Group::Patient).count();
    if patients == 0 || patients == used.len() {
        return Err(Error::InsufficientData(format!(
            "`{}` needs values from both groups",
            table.measures[pos]
        )));
    }
    let y: Vec<f64> = used
        .iter()
        .map(|r| r.values[pos].expect("filtered"))
        .collect();
    let x: Vec<Vec<f64>> = used.iter().map(|r| r.design_row()).collect();
    let fit = ols_fit(&y, &x).map_err(|e| match e {
        Error::InsufficientData(m) => {
            Error::InsufficientData(format!("`{}`: {m}", table.measures[pos]))
        }
        other => other,
    })?;
    Ok((fit.beta[1], fit.p_value[1], used.len()))
}

/// `position,beta,p,p_adj` rows.
pub fn group_map_to_csv(stats: &[PositionStat]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["position", "beta", "p", "p_adj"])?;
    for s in stats {
        w.write_record([
            s.position.to_string(),
            s.beta.to_string(),
            s.p.to_string(),
            s.p_adj.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Group comparison of one scalar measure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalarSummary {
    pub measure: String,
    pub n_patient: usize,
    pub n_control: usize,
    pub mean_patient: f64,
    pub mean_control: f64,
    /// Covariate-adjusted group coefficient and its p-value.
    pub beta: f64,
    pub p: f64,
    pub ranksum_statistic: f64,
    pub ranksum_p: f64,
    pub encoding: String,
}

/// Rank-sum test and adjusted linear model for measurement column `pos`.
pub fn scalar_group_summary(table: &GroupTable, pos: usize) -> Result<ScalarSummary> {
    table.validate()?;
    if pos >= table.measures.len() {
        return Err(Error::invalid("measure index out of range"));
    }
    let pick = |g: Group| -> Vec<f64> {
        table
            .rows
            .iter()
            .filter(|r| r.group == g)
            .filter_map(|r| r.values[pos])
            .collect()
    };
    let (a, b) = (pick(Group::Patient), pick(Group::Control));
    let rs = wilcoxon_ranksum(&a, &b)?;
    let (beta, p, _) = group_effect(table, pos)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(ScalarSummary {
        measure: table.measures[pos].clone(),
        n_patient: a.len(),
        n_control: b.len(),
        mean_patient: mean(&a),
        mean_control: mean(&b),
        beta,
        p,
        ranksum_statistic: rs.statistic,
        ranksum_p: rs.p_value,
        encoding: "group: patient=1 control=0; sex: male=1 female=0".into(),
    })
}
