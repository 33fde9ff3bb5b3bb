//! Balanced-panel loading, validation and summary statistics.
//!
//! A [`PanelDataset`] is an immutable DMU × period table of named numeric
//! variables with declared roles. Loading enforces balance (every pair has
//! exactly one row), strict positivity of outputs and inputs (their logs
//! enter the translog design), and consecutive integer period labels.
//! Covariates carry no sign restriction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::num::{c, Real};
use crate::{Error, Result};

/// Role a variable plays in the analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarRole {
    Output,
    Input,
    Covariate,
}

#[derive(Clone, Debug)]
pub struct VariableInfo {
    pub role: VarRole,
    pub deflated: bool,
}

/// Average-vehicle-size column derived from a volume and a movements column
/// at load time. A pre-existing column named `name` takes precedence over
/// the computed ratio.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct DeriveSize {
    pub name: String,
    pub volume: String,
    pub movements: String,
}

/// Column roles and loader options for one CSV panel.
#[derive(Clone, Debug)]
pub struct PanelSchema {
    pub dmu_col: String,
    pub year_col: String,
    /// Variable column name → role, in the order columns should be kept.
    pub roles: Vec<(String, VarRole)>,
    /// Accept `1234,56` style decimals in numeric fields.
    pub decimal_comma: bool,
    pub derive_size: Option<DeriveSize>,
    /// Variables to deflate when a price index is supplied.
    pub deflate: Vec<String>,
}

impl PanelSchema {
    pub fn new(dmu_col: &str, year_col: &str, roles: Vec<(String, VarRole)>) -> Self {
        Self {
            dmu_col: dmu_col.into(),
            year_col: year_col.into(),
            roles,
            decimal_comma: false,
            derive_size: None,
            deflate: Vec::new(),
        }
    }
}

/// Immutable balanced panel. Observation rows are stored DMU-major:
/// row index = `dmu_index * n_periods + period_index`.
#[derive(Clone, Debug)]
pub struct PanelDataset<T> {
    dmus: Vec<String>,
    periods: Vec<i32>,
    variables: Vec<String>,
    registry: BTreeMap<String, VariableInfo>,
    values: Vec<T>,
}

impl<T: Real> PanelDataset<T> {
    /// Assemble a panel from cells already in memory, running the same
    /// validation as the CSV loader. `cells` maps `(dmu, period)` to the
    /// values of `variables` in order.
    pub fn from_cells(
        variables: Vec<(String, VarRole)>,
        cells: BTreeMap<(String, i32), Vec<T>>,
    ) -> Result<Self> {
        let mut dmus: Vec<String> = cells.keys().map(|(d, _)| d.clone()).collect();
        dmus.dedup();
        let periods: BTreeSet<i32> = cells.keys().map(|&(_, p)| p).collect();
        let periods: Vec<i32> = periods.into_iter().collect();
        check_consecutive(&periods)?;

        let var_names: Vec<String> = variables.iter().map(|(n, _)| n.clone()).collect();
        let registry: BTreeMap<String, VariableInfo> = variables
            .into_iter()
            .map(|(n, role)| {
                (
                    n,
                    VariableInfo {
                        role,
                        deflated: false,
                    },
                )
            })
            .collect();

        let mut values = Vec::with_capacity(dmus.len() * periods.len() * var_names.len());
        for dmu in &dmus {
            for &period in &periods {
                let row =
                    cells
                        .get(&(dmu.clone(), period))
                        .ok_or_else(|| Error::UnbalancedPanel {
                            dmu: dmu.clone(),
                            period,
                        })?;
                assert_eq!(row.len(), var_names.len(), "cell width mismatch");
                for (name, &v) in var_names.iter().zip(row) {
                    let role = registry[name].role;
                    if matches!(role, VarRole::Output | VarRole::Input)
                        && !(v > T::zero() && v.is_finite())
                    {
                        return Err(Error::NonPositiveQuantity {
                            var: name.clone(),
                            dmu: dmu.clone(),
                            period,
                            value: v.to_f64().unwrap_or(f64::NAN),
                        });
                    }
                    values.push(v);
                }
            }
        }
        Ok(Self {
            dmus,
            periods,
            variables: var_names,
            registry,
            values,
        })
    }

    pub fn dmus(&self) -> &[String] {
        &self.dmus
    }

    pub fn periods(&self) -> &[i32] {
        &self.periods
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn role(&self, var: &str) -> Option<VarRole> {
        self.registry.get(var).map(|i| i.role)
    }

    pub fn n_cells(&self) -> usize {
        self.dmus.len() * self.periods.len()
    }

    fn var_index(&self, var: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == var)
            .ok_or_else(|| Error::UnknownVariable(var.into()))
    }

    /// Value at (dmu index, period index).
    pub fn value(&self, dmu_idx: usize, period_idx: usize, var: &str) -> Result<T> {
        let v = self.var_index(var)?;
        let row = dmu_idx * self.periods.len() + period_idx;
        Ok(self.values[row * self.variables.len() + v])
    }

    /// Pooled column in row order (DMU-major).
    pub fn column(&self, var: &str) -> Result<Vec<T>> {
        let v = self.var_index(var)?;
        let width = self.variables.len();
        Ok((0..self.n_cells())
            .map(|r| self.values[r * width + v])
            .collect())
    }

    /// Cross-section of one period: per-DMU values of `vars`, DMU order.
    pub fn cross_section(&self, period_idx: usize, vars: &[String]) -> Result<Vec<Vec<T>>> {
        let idx: Vec<usize> = vars
            .iter()
            .map(|v| self.var_index(v))
            .collect::<Result<_>>()?;
        let width = self.variables.len();
        Ok((0..self.dmus.len())
            .map(|d| {
                let row = d * self.periods.len() + period_idx;
                idx.iter().map(|&v| self.values[row * width + v]).collect()
            })
            .collect())
    }

    /// Deflate the named variables in place with `index`, expressing them in
    /// `base`-year terms. Marks them as deflated in the registry.
    pub fn deflate_variables(
        &mut self,
        vars: &[String],
        index: &PriceIndex<T>,
        base: i32,
    ) -> Result<()> {
        let width = self.variables.len();
        let periods = self.periods.clone();
        for var in vars {
            let v = self.var_index(var)?;
            for d in 0..self.dmus.len() {
                for (p, &year) in periods.iter().enumerate() {
                    let row = d * periods.len() + p;
                    let val = self.values[row * width + v];
                    self.values[row * width + v] = deflate(val, year, base, index)?;
                }
            }
            self.registry.get_mut(var).expect("registered").deflated = true;
        }
        Ok(())
    }

    /// Per-variable descriptive statistics over the pooled observations.
    pub fn describe(&self, vars: &[String]) -> Result<Vec<DescriptiveStats<T>>> {
        vars.iter()
            .map(|var| {
                let col = self.column(var)?;
                Ok(DescriptiveStats::from_values(var, &col))
            })
            .collect()
    }

    /// Pearson product-moment correlation matrix of the named variables.
    pub fn pearson(&self, vars: &[String]) -> Result<CorrelationMatrix<T>> {
        let cols: Vec<Vec<T>> = vars.iter().map(|v| self.column(v)).collect::<Result<_>>()?;
        CorrelationMatrix::from_columns(vars, &cols)
    }

    /// Copy of the panel with one variable multiplied by a positive factor.
    pub fn scaled_variable(&self, var: &str, factor: T) -> Result<PanelDataset<T>> {
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // also catches NaN
        if !(factor > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "scale factor for `{var}` must be > 0"
            )));
        }
        let v = self.var_index(var)?;
        let mut out = self.clone();
        let width = out.variables.len();
        for row in 0..out.n_cells() {
            out.values[row * width + v] *= factor;
        }
        Ok(out)
    }
}

fn check_consecutive(periods: &[i32]) -> Result<()> {
    if periods.is_empty() {
        return Err(Error::SchemaMismatch("panel has no rows".into()));
    }
    for w in periods.windows(2) {
        if w[1] != w[0] + 1 {
            return Err(Error::NonConsecutivePeriods {
                prev: w[0],
                found: w[1],
            });
        }
    }
    Ok(())
}

/// Average size ratio `volume / movements`.
pub fn derive_size<T: Real>(volume: T, movements: T) -> Result<T> {
    if movements == T::zero() {
        return Err(Error::DivisionByZero("movements count is zero".into()));
    }
    Ok(volume / movements)
}

/// Year → price level, used to express nominal series in base-year terms.
#[derive(Clone, Debug)]
pub struct PriceIndex<T> {
    levels: BTreeMap<i32, T>,
}

impl<T: Real> PriceIndex<T> {
    pub fn new(levels: BTreeMap<i32, T>) -> Self {
        Self { levels }
    }

    pub fn from_csv(path: &Path, decimal_comma: bool) -> Result<Self> {
        let mut reader = open_csv(path)?;
        let mut levels = BTreeMap::new();
        for record in reader.records() {
            let record = record?;
            if record.len() < 2 {
                return Err(Error::SchemaMismatch(
                    "price index rows need year,index".into(),
                ));
            }
            let year = record[0]
                .parse::<i32>()
                .map_err(|_| Error::SchemaMismatch(format!("bad year `{}`", &record[0])))?;
            let level = parse_number::<T>(&record[1], decimal_comma)
                .ok_or_else(|| Error::SchemaMismatch(format!("bad index `{}`", &record[1])))?;
            levels.insert(year, level);
        }
        Ok(Self { levels })
    }

    pub fn level(&self, year: i32) -> Result<T> {
        self.levels
            .get(&year)
            .copied()
            .ok_or(Error::MissingIndexYear(year))
    }
}

/// `value * index(base) / index(period)`.
pub fn deflate<T: Real>(value: T, period: i32, base: i32, index: &PriceIndex<T>) -> Result<T> {
    if period == base {
        return Ok(value);
    }
    Ok(value * index.level(base)? / index.level(period)?)
}

/// Pooled summary of one variable.
#[derive(Clone, Debug)]
pub struct DescriptiveStats<T> {
    pub name: String,
    pub mean: T,
    /// Sample standard deviation (n − 1 denominator).
    pub std_dev: T,
    pub min: T,
    pub max: T,
    pub n: usize,
}

impl<T: Real> DescriptiveStats<T> {
    pub fn from_values(name: &str, values: &[T]) -> Self {
        let n = values.len();
        let nf = c::<T>(n as f64);
        let mean = values.iter().copied().sum::<T>() / nf;
        let ss = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>();
        let std_dev = if n > 1 {
            (ss / (nf - T::one())).sqrt()
        } else {
            T::zero()
        };
        let min = values.iter().copied().fold(T::infinity(), T::min);
        let max = values.iter().copied().fold(T::neg_infinity(), T::max);
        Self {
            name: name.into(),
            mean,
            std_dev,
            min,
            max,
            n,
        }
    }
}

/// Symmetric Pearson correlation matrix over a named variable list.
#[derive(Clone, Debug)]
pub struct CorrelationMatrix<T> {
    pub names: Vec<String>,
    pub values: Vec<Vec<T>>,
}

impl<T: Real> CorrelationMatrix<T> {
    pub fn from_columns(names: &[String], cols: &[Vec<T>]) -> Result<Self> {
        let k = cols.len();
        let n = cols.first().map_or(0, Vec::len);
        if n < 2 {
            return Err(Error::SchemaMismatch(
                "correlation needs at least 2 rows".into(),
            ));
        }
        let mut values = vec![vec![T::zero(); k]; k];
        for i in 0..k {
            values[i][i] = T::one();
            for j in i + 1..k {
                let r = pearson(&cols[i], &cols[j]).ok_or_else(|| {
                    let name = if is_constant(&cols[i]) {
                        &names[i]
                    } else {
                        &names[j]
                    };
                    Error::ZeroVariance(name.clone())
                })?;
                values[i][j] = r;
                values[j][i] = r;
            }
        }
        Ok(Self {
            names: names.to_vec(),
            values,
        })
    }
}

fn is_constant<T: Real>(col: &[T]) -> bool {
    col.windows(2).all(|w| w[0] == w[1])
}

/// Pearson coefficient of two equal-length series; `None` if either is
/// constant.
pub fn pearson<T: Real>(x: &[T], y: &[T]) -> Option<T> {
    let nf = c::<T>(x.len() as f64);
    let mx = x.iter().copied().sum::<T>() / nf;
    let my = y.iter().copied().sum::<T>() / nf;
    let mut sxx = T::zero();
    let mut syy = T::zero();
    let mut sxy = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx == T::zero() || syy == T::zero() {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

fn parse_number<T: Real>(field: &str, decimal_comma: bool) -> Option<T> {
    let cleaned;
    let s = if decimal_comma {
        cleaned = field.replace(',', ".");
        cleaned.as_str()
    } else {
        field
    };
    s.parse::<f64>().ok().and_then(T::from)
}

/// Open a CSV with the path attached to any failure.
pub(crate) fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::SchemaMismatch(format!("{}: {e}", path.display())))
}

/// Load and validate a balanced panel from a delimited file.
pub fn load_panel<T: Real>(path: &Path, schema: &PanelSchema) -> Result<PanelDataset<T>> {
    let mut reader = open_csv(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let col = |name: &str| headers.iter().position(|h| h == name);

    let dmu_idx = col(&schema.dmu_col)
        .ok_or_else(|| Error::SchemaMismatch(format!("missing column `{}`", schema.dmu_col)))?;
    let year_idx = col(&schema.year_col)
        .ok_or_else(|| Error::SchemaMismatch(format!("missing column `{}`", schema.year_col)))?;

    let n_outputs = schema
        .roles
        .iter()
        .filter(|(_, r)| *r == VarRole::Output)
        .count();
    let n_inputs = schema
        .roles
        .iter()
        .filter(|(_, r)| *r == VarRole::Input)
        .count();
    if n_outputs == 0 || n_inputs == 0 {
        return Err(Error::SchemaMismatch(
            "schema must declare at least one output and one input".into(),
        ));
    }

    // Each variable is read from its own column, except a derived size
    // variable whose column is absent: that one is computed volume/movements.
    enum Source {
        Column(usize),
        SizeRatio { volume: usize, movements: usize },
    }
    let mut sources = Vec::with_capacity(schema.roles.len());
    for (name, _) in &schema.roles {
        match col(name) {
            Some(i) => sources.push(Source::Column(i)),
            None => {
                let derive = schema
                    .derive_size
                    .as_ref()
                    .filter(|d| &d.name == name)
                    .ok_or_else(|| Error::SchemaMismatch(format!("missing column `{name}`")))?;
                let volume = col(&derive.volume).ok_or_else(|| {
                    Error::SchemaMismatch(format!("missing column `{}`", derive.volume))
                })?;
                let movements = col(&derive.movements).ok_or_else(|| {
                    Error::SchemaMismatch(format!("missing column `{}`", derive.movements))
                })?;
                sources.push(Source::SizeRatio { volume, movements });
            }
        }
    }

    let mut cells: BTreeMap<(String, i32), Vec<T>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let dmu = record
            .get(dmu_idx)
            .ok_or_else(|| Error::SchemaMismatch("short row".into()))?
            .to_owned();
        let year_raw = record.get(year_idx).unwrap_or_default();
        let year = year_raw
            .parse::<i32>()
            .map_err(|_| Error::SchemaMismatch(format!("bad year `{year_raw}`")))?;

        let mut row = Vec::with_capacity(schema.roles.len());
        for ((name, _), source) in schema.roles.iter().zip(&sources) {
            let value = match source {
                Source::Column(i) => {
                    let field = record.get(*i).unwrap_or_default();
                    parse_number::<T>(field, schema.decimal_comma).ok_or_else(|| {
                        Error::SchemaMismatch(format!("bad numeric field `{field}` in `{name}`"))
                    })?
                }
                Source::SizeRatio { volume, movements } => {
                    let parse = |i: usize| -> Result<T> {
                        let field = record.get(i).unwrap_or_default();
                        parse_number::<T>(field, schema.decimal_comma).ok_or_else(|| {
                            Error::SchemaMismatch(format!("bad numeric field `{field}`"))
                        })
                    };
                    derive_size(parse(*volume)?, parse(*movements)?)?
                }
            };
            row.push(value);
        }
        if cells.insert((dmu.clone(), year), row).is_some() {
            return Err(Error::DuplicateRow { dmu, period: year });
        }
    }

    let panel = PanelDataset::from_cells(schema.roles.clone(), cells)?;
    Ok(panel)
}

/// Render descriptive statistics as a small aligned text table.
pub fn format_describe<T: Real>(stats: &[DescriptiveStats<T>]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>14} {:>14} {:>14} {:>14} {:>6}",
        "Variable", "Mean", "Std.Dev", "Min", "Max", "N"
    );
    for s in stats {
        let _ = writeln!(
            out,
            "{:<12} {:>14.3} {:>14.3} {:>14.3} {:>14.3} {:>6}",
            s.name,
            s.mean.to_f64().unwrap_or(f64::NAN),
            s.std_dev.to_f64().unwrap_or(f64::NAN),
            s.min.to_f64().unwrap_or(f64::NAN),
            s.max.to_f64().unwrap_or(f64::NAN),
            s.n
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn toy_schema() -> PanelSchema {
        PanelSchema::new(
            "dmu",
            "year",
            vec![
                ("y".into(), VarRole::Output),
                ("x".into(), VarRole::Input),
                ("z".into(), VarRole::Covariate),
            ],
        )
    }

    #[test]
    fn loads_balanced_panel() {
        let f = write_csv(
            "dmu,year,y,x,z\nA,2011,1.0,2.0,0\nA,2012,1.1,2.0,1\nB,2011,3.0,4.0,0\nB,2012,3.3,4.0,-1\n",
        );
        let panel: PanelDataset<f64> = load_panel(f.path(), &toy_schema()).unwrap();
        assert_eq!(panel.dmus(), &["A", "B"]);
        assert_eq!(panel.periods(), &[2011, 2012]);
        assert_eq!(panel.value(1, 1, "y").unwrap(), 3.3);
        assert_eq!(panel.value(1, 1, "z").unwrap(), -1.0);
    }

    #[test]
    fn singleton_panel_is_valid() {
        let f = write_csv("dmu,year,y,x,z\nA,2011,1.0,2.0,5\n");
        let panel: PanelDataset<f64> = load_panel(f.path(), &toy_schema()).unwrap();
        assert_eq!(panel.n_cells(), 1);
    }

    #[test]
    fn missing_cell_is_unbalanced() {
        let f = write_csv("dmu,year,y,x,z\nA,2011,1,2,0\nA,2012,1,2,0\nB,2011,3,4,0\n");
        let err = load_panel::<f64>(f.path(), &toy_schema()).unwrap_err();
        assert!(matches!(err, Error::UnbalancedPanel { .. }), "{err}");
    }

    #[test]
    fn duplicate_row_rejected() {
        let f = write_csv("dmu,year,y,x,z\nA,2011,1,2,0\nA,2011,1,2,0\n");
        let err = load_panel::<f64>(f.path(), &toy_schema()).unwrap_err();
        assert!(matches!(err, Error::DuplicateRow { .. }), "{err}");
    }

    #[test]
    fn zero_output_rejected() {
        let f = write_csv("dmu,year,y,x,z\nA,2011,0.0,2.0,0\n");
        let err = load_panel::<f64>(f.path(), &toy_schema()).unwrap_err();
        assert!(matches!(err, Error::NonPositiveQuantity { .. }), "{err}");
    }

    #[test]
    fn covariates_may_be_negative() {
        let f = write_csv("dmu,year,y,x,z\nA,2011,1.0,2.0,-7.5\n");
        assert!(load_panel::<f64>(f.path(), &toy_schema()).is_ok());
    }

    #[test]
    fn gap_year_rejected() {
        let f = write_csv("dmu,year,y,x,z\nA,2011,1,2,0\nA,2013,1,2,0\n");
        let err = load_panel::<f64>(f.path(), &toy_schema()).unwrap_err();
        assert!(matches!(err, Error::NonConsecutivePeriods { .. }), "{err}");
    }

    #[test]
    fn decimal_comma_fields_parse() {
        let f = write_csv("dmu;year;y;x;z\nA;2011;1,5;2,0;0");
        // csv crate needs the delimiter too; rewrite with commas as separators
        // and quoted decimal-comma fields instead.
        drop(f);
        let f = write_csv("dmu,year,y,x,z\nA,2011,\"1,5\",\"2,0\",0\n");
        let mut schema = toy_schema();
        schema.decimal_comma = true;
        let panel: PanelDataset<f64> = load_panel(f.path(), &schema).unwrap();
        assert_eq!(panel.value(0, 0, "y").unwrap(), 1.5);
    }

    #[test]
    fn size_is_derived_when_column_absent() {
        let f = write_csv("dmu,year,pax,atm,x\nA,2011,100.0,100.0,2.0\nB,2011,6000000,47670,2.0\n");
        let mut schema = PanelSchema::new(
            "dmu",
            "year",
            vec![
                ("atm".into(), VarRole::Output),
                ("size".into(), VarRole::Output),
                ("x".into(), VarRole::Input),
            ],
        );
        schema.derive_size = Some(DeriveSize {
            name: "size".into(),
            volume: "pax".into(),
            movements: "atm".into(),
        });
        let panel: PanelDataset<f64> = load_panel(f.path(), &schema).unwrap();
        assert_eq!(panel.value(0, 0, "size").unwrap(), 1.0);
        assert!((panel.value(1, 0, "size").unwrap() - 125.87).abs() < 0.005);
    }

    #[test]
    fn size_column_overrides_derivation() {
        let f = write_csv("dmu,year,pax,atm,size,x\nA,2011,100.0,100.0,9.0,2.0\n");
        let mut schema = PanelSchema::new(
            "dmu",
            "year",
            vec![
                ("atm".into(), VarRole::Output),
                ("size".into(), VarRole::Output),
                ("x".into(), VarRole::Input),
            ],
        );
        schema.derive_size = Some(DeriveSize {
            name: "size".into(),
            volume: "pax".into(),
            movements: "atm".into(),
        });
        let panel: PanelDataset<f64> = load_panel(f.path(), &schema).unwrap();
        assert_eq!(panel.value(0, 0, "size").unwrap(), 9.0);
    }

    #[test]
    fn derive_size_cases() {
        assert_eq!(derive_size(100.0, 100.0).unwrap(), 1.0);
        assert_eq!(derive_size(0.0, 50.0).unwrap(), 0.0);
        assert!(matches!(
            derive_size(1.0, 0.0),
            Err(Error::DivisionByZero(_))
        ));
    }

    fn index_2011_2012() -> PriceIndex<f64> {
        PriceIndex::new(BTreeMap::from([(2011, 1.0), (2012, 1.25)]))
    }

    #[test]
    fn deflate_cases() {
        let idx = index_2011_2012();
        assert_eq!(deflate(100.0, 2011, 2011, &idx).unwrap(), 100.0);
        assert_eq!(deflate(100.0, 2012, 2011, &idx).unwrap(), 80.0);
        assert_eq!(deflate(0.0, 2012, 2011, &idx).unwrap(), 0.0);
        assert!(matches!(
            deflate(1.0, 2013, 2011, &idx),
            Err(Error::MissingIndexYear(2013))
        ));
    }

    #[test]
    fn deflate_round_trips() {
        let idx = index_2011_2012();
        let v = 123.456;
        let once = deflate(v, 2012, 2011, &idx).unwrap();
        let back = deflate(once, 2011, 2012, &idx).unwrap();
        assert!((back - v).abs() / v < 1e-12);
    }

    #[test]
    fn describe_cases() {
        let s = DescriptiveStats::from_values("c", &[4.0_f64, 4.0, 4.0]);
        assert_eq!((s.mean, s.std_dev, s.min, s.max), (4.0, 0.0, 4.0, 4.0));
        let s = DescriptiveStats::from_values("v", &[1.0_f64, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.std_dev - 1.0).abs() < 1e-15);
        assert_eq!((s.min, s.max, s.n), (1.0, 3.0, 3));
    }

    #[test]
    fn describe_unknown_variable() {
        let f = write_csv("dmu,year,y,x,z\nA,2011,1.0,2.0,0\n");
        let panel: PanelDataset<f64> = load_panel(f.path(), &toy_schema()).unwrap();
        assert!(matches!(
            panel.describe(&["nope".into()]),
            Err(Error::UnknownVariable(_))
        ));
    }

    #[test]
    fn pearson_cases() {
        let x = [1.0_f64, 2.0, 3.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        let y = [2.0, 4.0, 6.0];
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        assert!(pearson(&x, &[5.0, 5.0, 5.0]).is_none());
    }

    #[test]
    fn correlation_matrix_shape() {
        let f =
            write_csv("dmu,year,y,x,z\nA,2011,1,2,0\nA,2012,2,3,1\nB,2011,3,5,0\nB,2012,4,8,1\n");
        let panel: PanelDataset<f64> = load_panel(f.path(), &toy_schema()).unwrap();
        let m = panel.pearson(&["y".into(), "x".into()]).unwrap();
        assert_eq!(m.values[0][0], 1.0);
        assert_eq!(m.values[0][1], m.values[1][0]);
        assert!(m.values[0][1] <= 1.0 && m.values[0][1] >= -1.0);
    }
}
