//! Count tables, proportions, metadata and two-group designs.
//!
//! Count TSV layout: a header row whose first cell is `component_id`, followed
//! by one column per sample; every other row holds one component's integer
//! counts. Metadata TSV layout: a header row whose first cell is `sample_id`,
//! followed by named columns; empty cells and `NA` are missing values. Lines
//! starting with `#` are ignored in both formats.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{RdbError, Result};

/// Raw counts, one row per component and one column per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountMatrix {
    component_ids: Vec<String>,
    sample_ids: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl CountMatrix {
    pub fn new(
        component_ids: Vec<String>,
        sample_ids: Vec<String>,
        counts: Vec<Vec<u64>>,
    ) -> Result<Self> {
        if component_ids.is_empty() {
            return Err(RdbError::contract("count matrix needs at least one component"));
        }
        if sample_ids.len() < 2 {
            return Err(RdbError::contract("count matrix needs at least two samples"));
        }
        if counts.len() != component_ids.len() {
            return Err(RdbError::contract(format!(
                "{} count rows for {} component ids",
                counts.len(),
                component_ids.len()
            )));
        }
        if let Some((row, _)) = counts
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != sample_ids.len())
        {
            return Err(RdbError::contract(format!(
                "row {} ({}) has {} counts, expected {}",
                row + 1,
                component_ids[row],
                counts[row].len(),
                sample_ids.len()
            )));
        }
        check_unique(&component_ids, "component")?;
        check_unique(&sample_ids, "sample")?;
        Ok(CountMatrix {
            component_ids,
            sample_ids,
            counts,
        })
    }

    pub fn n_components(&self) -> usize {
        self.component_ids.len()
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn component_ids(&self) -> &[String] {
        &self.component_ids
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, component: usize, sample: usize) -> u64 {
        self.counts[component][sample]
    }

    /// Column totals N*.
    pub fn depths(&self) -> Vec<u64> {
        let mut depth = vec![0u64; self.n_samples()];
        for row in &self.counts {
            for (acc, &c) in depth.iter_mut().zip(row) {
                *acc += c;
            }
        }
        depth
    }

    /// Keeps the given sample columns, in the given order.
    pub fn select_samples(&self, columns: &[usize]) -> Result<CountMatrix> {
        let sample_ids = columns.iter().map(|&j| self.sample_ids[j].clone()).collect();
        let counts = self
            .counts
            .iter()
            .map(|row| columns.iter().map(|&j| row[j]).collect())
            .collect();
        CountMatrix::new(self.component_ids.clone(), sample_ids, counts)
    }
}

fn check_unique(ids: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for (pos, id) in ids.iter().enumerate() {
        if !seen.insert(id.as_str()) {
            return Err(RdbError::contract(format!(
                "duplicate {what} id \"{id}\" (position {})",
                pos + 1
            )));
        }
    }
    Ok(())
}

fn tsv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(reader)
}

fn read_table<R: Read>(reader: R, first_column: &str) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut rdr = tsv_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(|e| RdbError::parse(format!("malformed header: {e}")))?,
        None => return Err(RdbError::parse("malformed header: empty file")),
    };
    let header: Vec<String> = header.iter().map(|s| s.trim().to_string()).collect();
    if header.first().map(String::as_str) != Some(first_column) {
        return Err(RdbError::parse(format!(
            "malformed header: first column must be `{first_column}`, found `{}`",
            header.first().map(String::as_str).unwrap_or("")
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in records.enumerate() {
        let rec = rec.map_err(|e| RdbError::parse(format!("row {}: {e}", line + 2)))?;
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if rec.len() != header.len() {
            return Err(RdbError::parse(format!(
                "row {} has {} fields, expected {}",
                line + 2,
                rec.len(),
                header.len()
            )));
        }
        rows.push(rec);
    }
    Ok((header, rows))
}

/// Parses a count TSV from any reader.
pub fn parse_counts<R: Read>(reader: R) -> Result<CountMatrix> {
    let (header, rows) = read_table(reader, "component_id")?;
    let sample_ids: Vec<String> = header[1..].to_vec();
    if sample_ids.iter().any(|s| s.is_empty()) {
        return Err(RdbError::parse("malformed header: empty sample id"));
    }
    check_unique(&sample_ids, "sample")?;

    let mut component_ids = Vec::with_capacity(rows.len());
    let mut counts = Vec::with_capacity(rows.len());
    for rec in &rows {
        let id = rec[0].trim().to_string();
        let mut row = Vec::with_capacity(sample_ids.len());
        for (j, cell) in rec.iter().skip(1).enumerate() {
            let cell = cell.trim();
            let value: i128 = cell.parse().map_err(|_| {
                RdbError::parse(format!(
                    "non-integer count \"{cell}\" at ({id}, {})",
                    sample_ids[j]
                ))
            })?;
            if value < 0 {
                return Err(RdbError::parse(format!(
                    "negative count at ({id}, {})",
                    sample_ids[j]
                )));
            }
            let value = u64::try_from(value).map_err(|_| {
                RdbError::parse(format!("count out of range at ({id}, {})", sample_ids[j]))
            })?;
            row.push(value);
        }
        component_ids.push(id);
        counts.push(row);
    }
    CountMatrix::new(component_ids, sample_ids, counts)
}

pub fn load_counts(path: impl AsRef<Path>) -> Result<CountMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| RdbError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_counts(std::io::BufReader::new(file))
}

/// Writes a count matrix in the count TSV layout.
pub fn write_counts<W: std::io::Write>(counts: &CountMatrix, mut out: W) -> std::io::Result<()> {
    write!(out, "component_id")?;
    for s in counts.sample_ids() {
        write!(out, "\t{s}")?;
    }
    writeln!(out)?;
    for (id, row) in counts.component_ids().iter().zip(counts.counts()) {
        write!(out, "{id}")?;
        for c in row {
            write!(out, "\t{c}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Per-sample proportions (total-sum scaling), same layout as [`CountMatrix`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionMatrix {
    component_ids: Vec<String>,
    sample_ids: Vec<String>,
    props: Vec<Vec<f64>>,
}

impl CompositionMatrix {
    pub fn component_ids(&self) -> &[String] {
        &self.component_ids
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    /// Row-major `props[component][sample]`.
    pub fn props(&self) -> &[Vec<f64>] {
        &self.props
    }

    pub fn n_components(&self) -> usize {
        self.component_ids.len()
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    /// Proportion vector of one sample.
    pub fn sample(&self, j: usize) -> Vec<f64> {
        self.props.iter().map(|row| row[j]).collect()
    }
}

pub fn to_proportions(counts: &CountMatrix) -> Result<CompositionMatrix> {
    let depth = counts.depths();
    if let Some(j) = depth.iter().position(|&n| n == 0) {
        return Err(RdbError::contract(format!(
            "zero sequencing depth in sample {}",
            counts.sample_ids[j]
        )));
    }
    let props = counts
        .counts
        .iter()
        .map(|row| {
            row.iter()
                .zip(&depth)
                .map(|(&c, &n)| c as f64 / n as f64)
                .collect()
        })
        .collect();
    Ok(CompositionMatrix {
        component_ids: counts.component_ids.clone(),
        sample_ids: counts.sample_ids.clone(),
        props,
    })
}

/// Sample metadata as raw string columns keyed by sample id.
#[derive(Debug, Clone, Default)]
pub struct SampleMetadata {
    sample_ids: Vec<String>,
    column_names: Vec<String>,
    columns: Vec<Vec<Option<String>>>,
    index: HashMap<String, usize>,
}

impl SampleMetadata {
    pub fn new(sample_ids: Vec<String>) -> Result<Self> {
        check_unique(&sample_ids, "sample")?;
        let index = sample_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(SampleMetadata {
            sample_ids,
            column_names: Vec::new(),
            columns: Vec::new(),
            index,
        })
    }

    /// Adds (or replaces) a column; values align with `sample_ids`.
    pub fn with_column(mut self, name: &str, values: Vec<Option<String>>) -> Result<Self> {
        if values.len() != self.sample_ids.len() {
            return Err(RdbError::contract(format!(
                "column {name} has {} values for {} samples",
                values.len(),
                self.sample_ids.len()
            )));
        }
        if let Some(pos) = self.column_names.iter().position(|c| c == name) {
            self.columns[pos] = values;
        } else {
            self.column_names.push(name.to_string());
            self.columns.push(values);
        }
        Ok(self)
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    fn column(&self, name: &str) -> Result<&[Option<String>]> {
        self.column_names
            .iter()
            .position(|c| c == name)
            .map(|pos| self.columns[pos].as_slice())
            .ok_or_else(|| RdbError::contract(format!("metadata has no column `{name}`")))
    }

    fn lookup<'a>(&'a self, column: &'a [Option<String>], sample: &str) -> Result<Option<&'a str>> {
        let row = self
            .index
            .get(sample)
            .ok_or_else(|| RdbError::contract(format!("sample {sample} not found in metadata")))?;
        Ok(column[*row].as_deref())
    }

    /// Categorical values for the given samples, in their order.
    pub fn categorical(&self, name: &str, samples: &[String]) -> Result<Vec<String>> {
        let column = self.column(name)?;
        samples
            .iter()
            .map(|s| {
                self.lookup(column, s)?
                    .map(str::to_string)
                    .ok_or_else(|| RdbError::contract(format!("missing {name} for sample {s}")))
            })
            .collect()
    }

    /// Numeric values for the given samples; `kind` names the role in errors
    /// (e.g. "covariate", "outcome").
    pub fn numeric(&self, name: &str, samples: &[String], kind: &str) -> Result<Vec<f64>> {
        let column = self.column(name)?;
        samples
            .iter()
            .map(|s| {
                let cell = self.lookup(column, s)?.ok_or_else(|| {
                    RdbError::contract(format!("missing {kind} {name} for sample {s}"))
                })?;
                let v: f64 = cell.parse().map_err(|_| {
                    RdbError::contract(format!(
                        "non-numeric {kind} {name} \"{cell}\" for sample {s}"
                    ))
                })?;
                if !v.is_finite() {
                    return Err(RdbError::contract(format!(
                        "non-finite {kind} {name} for sample {s}"
                    )));
                }
                Ok(v)
            })
            .collect()
    }
}

pub fn parse_metadata<R: Read>(reader: R) -> Result<SampleMetadata> {
    let (header, rows) = read_table(reader, "sample_id")?;
    let sample_ids: Vec<String> = rows.iter().map(|r| r[0].trim().to_string()).collect();
    let mut meta = SampleMetadata::new(sample_ids)?;
    for (col, name) in header.iter().enumerate().skip(1) {
        let values = rows
            .iter()
            .map(|r| {
                let cell = r[col].trim();
                if cell.is_empty() || cell == "NA" {
                    None
                } else {
                    Some(cell.to_string())
                }
            })
            .collect();
        meta = meta.with_column(name, values)?;
    }
    Ok(meta)
}

pub fn load_metadata(path: impl AsRef<Path>) -> Result<SampleMetadata> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| RdbError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_metadata(std::io::BufReader::new(file))
}

/// A component dropped before testing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub component_id: String,
    pub reason: String,
}

/// Two groups of proportion vectors over the retained components.
///
/// Proportions are stored sample-major: `group(k)[j][i]` is component `i` in
/// sample `j` of group `k` (0 or 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleDesign {
    component_ids: Vec<String>,
    retained: Vec<usize>,
    groups: [Vec<Vec<f64>>; 2],
    levels: [String; 2],
    samples: [Vec<String>; 2],
    excluded: Vec<Exclusion>,
}

impl TwoSampleDesign {
    /// Builds a design straight from per-sample proportion vectors. Level names
    /// default to "1"/"2" and sample ids to `g{k}_{j}`.
    pub fn from_groups(
        component_ids: Vec<String>,
        group1: Vec<Vec<f64>>,
        group2: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let samples = [
            (1..=group1.len()).map(|j| format!("g1_{j}")).collect(),
            (1..=group2.len()).map(|j| format!("g2_{j}")).collect(),
        ];
        Self::build(
            component_ids,
            [group1, group2],
            ["1".to_string(), "2".to_string()],
            samples,
        )
    }

    fn build(
        component_ids: Vec<String>,
        groups: [Vec<Vec<f64>>; 2],
        levels: [String; 2],
        samples: [Vec<String>; 2],
    ) -> Result<Self> {
        check_unique(&component_ids, "component")?;
        let d = component_ids.len();
        for (k, g) in groups.iter().enumerate() {
            if g.len() < 2 {
                return Err(RdbError::contract(format!(
                    "group {} has fewer than 2 samples",
                    levels[k]
                )));
            }
            for (j, p) in g.iter().enumerate() {
                if p.len() != d {
                    return Err(RdbError::contract(format!(
                        "sample {} has {} proportions, expected {d}",
                        samples[k][j],
                        p.len()
                    )));
                }
                if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                    return Err(RdbError::contract(format!(
                        "sample {} has proportions outside [0, 1]",
                        samples[k][j]
                    )));
                }
            }
        }

        let keep: Vec<bool> = (0..d)
            .map(|i| groups.iter().flatten().any(|p| p[i] > 0.0))
            .collect();
        let excluded = component_ids
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| !k)
            .map(|(id, _)| Exclusion {
                component_id: id.clone(),
                reason: "all-zero".to_string(),
            })
            .collect();
        let retained: Vec<usize> = (0..d).filter(|&i| keep[i]).collect();
        let groups = groups.map(|g| {
            g.into_iter()
                .map(|p| retained.iter().map(|&i| p[i]).collect())
                .collect()
        });
        Ok(TwoSampleDesign {
            component_ids: retained.iter().map(|&i| component_ids[i].clone()).collect(),
            retained,
            groups,
            levels,
            samples,
            excluded,
        })
    }

    /// Retained component ids, in input order.
    pub fn component_ids(&self) -> &[String] {
        &self.component_ids
    }

    /// Original row index of each retained component.
    pub fn retained_indices(&self) -> &[usize] {
        &self.retained
    }

    pub fn n_components(&self) -> usize {
        self.component_ids.len()
    }

    pub fn group(&self, k: usize) -> &[Vec<f64>] {
        &self.groups[k]
    }

    pub fn group_size(&self, k: usize) -> usize {
        self.groups[k].len()
    }

    pub fn level(&self, k: usize) -> &str {
        &self.levels[k]
    }

    pub fn samples(&self, k: usize) -> &[String] {
        &self.samples[k]
    }

    pub fn excluded(&self) -> &[Exclusion] {
        &self.excluded
    }

    /// The same design with the two groups exchanged.
    pub fn swapped(&self) -> TwoSampleDesign {
        let mut out = self.clone();
        out.groups.swap(0, 1);
        out.levels.swap(0, 1);
        out.samples.swap(0, 1);
        out
    }
}

/// Splits a composition matrix into two groups by label.
///
/// Group 1 is the lexicographically first level unless `group1` names the
/// other one. Components that are zero in every sample are excluded.
pub fn split_groups(
    props: &CompositionMatrix,
    labels: &[String],
    group1: Option<&str>,
) -> Result<TwoSampleDesign> {
    if labels.len() != props.n_samples() {
        return Err(RdbError::contract(format!(
            "{} group labels for {} samples",
            labels.len(),
            props.n_samples()
        )));
    }
    let levels: BTreeSet<&str> = labels.iter().map(String::as_str).collect();
    if levels.len() != 2 {
        return Err(RdbError::contract(format!(
            "group column must have exactly 2 levels, found {}",
            levels.len()
        )));
    }
    let mut levels: Vec<&str> = levels.into_iter().collect();
    if let Some(first) = group1 {
        match levels.iter().position(|l| *l == first) {
            Some(0) => {}
            Some(_) => levels.swap(0, 1),
            None => {
                return Err(RdbError::contract(format!(
                    "group level \"{first}\" not present in group column"
                )))
            }
        }
    }
    let mut groups: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
    let mut samples: [Vec<String>; 2] = [Vec::new(), Vec::new()];
    for (j, label) in labels.iter().enumerate() {
        let k = usize::from(label != levels[0]);
        groups[k].push(props.sample(j));
        samples[k].push(props.sample_ids[j].clone());
    }
    TwoSampleDesign::build(
        props.component_ids.clone(),
        groups,
        [levels[0].to_string(), levels[1].to_string()],
        samples,
    )
}

/// [`split_groups`] with labels read from a metadata column.
pub fn split_by_metadata(
    props: &CompositionMatrix,
    meta: &SampleMetadata,
    group_column: &str,
    group1: Option<&str>,
) -> Result<TwoSampleDesign> {
    let labels = meta.categorical(group_column, props.sample_ids())?;
    split_groups(props, &labels, group1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn parses_small_table() {
        let tsv = "component_id\ts1\ts2\ts3\ts4\ntaxonA\t1\t2\t3\t4\ntaxonB\t0\t0\t5\t1\ntaxonC\t9\t8\t7\t6\n";
        let m = parse_counts(tsv.as_bytes()).unwrap();
        assert_eq!(m.n_components(), 3);
        assert_eq!(m.n_samples(), 4);
        assert_eq!(m.component_ids()[2], "taxonC");
        assert_eq!(m.get(1, 2), 5);
    }

    #[test]
    fn negative_cell_reports_location() {
        let tsv = "component_id\ts1\ts2\ntaxonA\t1\t-2\n";
        let err = parse_counts(tsv.as_bytes()).unwrap_err().to_string();
        assert_eq!(err, "negative count at (taxonA, s2)");
    }

    #[test]
    fn non_integer_cell_rejected() {
        let tsv = "component_id\ts1\ts2\ntaxonA\t1\t2.5\n";
        let err = parse_counts(tsv.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("non-integer count \"2.5\" at (taxonA, s2)"), "{err}");
    }

    #[test]
    fn duplicate_sample_rejected() {
        let tsv = "component_id\ts1\ts1\ntaxonA\t1\t2\n";
        let err = parse_counts(tsv.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("duplicate sample id"), "{err}");
    }

    #[test]
    fn bad_header_rejected() {
        let tsv = "taxon\ts1\ts2\ntaxonA\t1\t2\n";
        let err = parse_counts(tsv.as_bytes()).unwrap_err().to_string();
        assert!(err.starts_with("malformed header"), "{err}");
    }

    #[test]
    fn ragged_row_rejected() {
        let tsv = "component_id\ts1\ts2\ntaxonA\t1\n";
        let err = parse_counts(tsv.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("row 2 has 2 fields"), "{err}");
    }

    #[test]
    fn proportions_match_hand_values() {
        let m = CountMatrix::new(
            ids("c", 3),
            ids("s", 2),
            vec![vec![2, 5], vec![6, 0], vec![0, 0]],
        )
        .unwrap();
        let p = to_proportions(&m).unwrap();
        assert_eq!(p.sample(0), vec![0.25, 0.75, 0.0]);
        assert_eq!(p.sample(1), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_depth_names_sample() {
        let m = CountMatrix::new(
            ids("c", 3),
            ids("s", 3),
            vec![vec![1, 2, 0], vec![1, 2, 0], vec![1, 2, 0]],
        )
        .unwrap();
        let err = to_proportions(&m).unwrap_err().to_string();
        assert_eq!(err, "zero sequencing depth in sample s3");
    }

    #[test]
    fn split_is_lexicographic_and_filters_zeros() {
        let m = CountMatrix::new(
            ids("c", 3),
            ids("s", 4),
            vec![vec![1, 2, 3, 4], vec![0, 0, 0, 0], vec![3, 3, 3, 3]],
        )
        .unwrap();
        let p = to_proportions(&m).unwrap();
        let labels: Vec<String> = ["B", "A", "B", "A"].iter().map(|s| s.to_string()).collect();
        let design = split_groups(&p, &labels, None).unwrap();
        assert_eq!(design.level(0), "A");
        assert_eq!(design.samples(0), &["s2".to_string(), "s4".to_string()]);
        assert_eq!(design.group_size(0), 2);
        assert_eq!(design.group_size(1), 2);
        assert_eq!(design.n_components(), 2);
        assert_eq!(design.retained_indices(), &[0, 2]);
        assert_eq!(design.excluded()[0].component_id, "c2");
        assert_eq!(design.excluded()[0].reason, "all-zero");

        let flipped = split_groups(&p, &labels, Some("B")).unwrap();
        assert_eq!(flipped.level(0), "B");
    }

    #[test]
    fn small_group_rejected() {
        let m = CountMatrix::new(ids("c", 2), ids("s", 4), vec![vec![1; 4], vec![2; 4]]).unwrap();
        let p = to_proportions(&m).unwrap();
        let labels: Vec<String> = ["A", "A", "A", "B"].iter().map(|s| s.to_string()).collect();
        let err = split_groups(&p, &labels, None).unwrap_err().to_string();
        assert_eq!(err, "group B has fewer than 2 samples");

        let labels: Vec<String> = ["A", "B", "C", "A"].iter().map(|s| s.to_string()).collect();
        assert!(split_groups(&p, &labels, None).is_err());
        let labels: Vec<String> = vec!["A".to_string(); 4];
        assert!(split_groups(&p, &labels, None).is_err());
    }

    #[test]
    fn metadata_lookup_and_missing_values() {
        let tsv = "sample_id\tgroup\tage\ns1\tA\t30\ns2\tA\t\ns3\tB\t41\n";
        let meta = parse_metadata(tsv.as_bytes()).unwrap();
        let samples = ids("s", 3);
        assert_eq!(meta.categorical("group", &samples).unwrap(), vec!["A", "A", "B"]);
        let err = meta.numeric("age", &samples, "covariate").unwrap_err().to_string();
        assert_eq!(err, "missing covariate age for sample s2");
        let err = meta
            .numeric("bmi", &samples, "covariate")
            .unwrap_err()
            .to_string();
        assert!(err.contains("no column `bmi`"));
    }
}
