use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::path::Path;

use crate::autodiff::{DenseMat, SparseMat};

use super::{AttributedGraph, GraphError};

/// Column roles for [`load_graph`].
#[derive(Clone, Debug)]
pub struct LoadOptions {
    pub label_column: String,
    pub sensitive_column: String,
    /// Column holding node identifiers. When the column is absent from the
    /// file, nodes are identified by their 0-based row number.
    pub id_column: String,
    /// Append the binarized sensitive attribute as a last attribute column.
    pub keep_sensitive: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            label_column: "label".into(),
            sensitive_column: "sensitive".into(),
            id_column: "id".into(),
            keep_sensitive: false,
        }
    }
}

fn open(path: &Path) -> Result<csv::Reader<File>, GraphError> {
    let file = File::open(path).map_err(|source| GraphError::Io { path: path.display().to_string(), source })?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

/// Reads an edge list (`src,dst`) and a per-node attribute table.
///
/// Node order follows the attribute file. Edges are symmetrized and
/// deduplicated; self-loops are dropped. The sensitive column must hold
/// exactly two distinct values; the smaller one (numerically when both parse
/// as numbers) becomes group 0.
pub fn load_graph(edge_path: &Path, attr_path: &Path, opts: &LoadOptions) -> Result<AttributedGraph, GraphError> {
    let attr_name = attr_path.display().to_string();
    let csv_err = |path: &str| {
        let path = path.to_string();
        move |source| GraphError::Csv { path: path.clone(), source }
    };

    let mut reader = open(attr_path)?;
    let headers = reader.headers().map_err(csv_err(&attr_name))?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let missing = |column: &str| GraphError::MissingColumn { path: attr_name.clone(), column: column.to_string() };
    let label_col = find(&opts.label_column).ok_or_else(|| missing(&opts.label_column))?;
    let sens_col = find(&opts.sensitive_column).ok_or_else(|| missing(&opts.sensitive_column))?;
    let id_col = find(&opts.id_column);
    let attr_cols: Vec<usize> =
        (0..headers.len()).filter(|&c| c != label_col && c != sens_col && Some(c) != id_col).collect();

    let mut names = Vec::new();
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut raw_sensitive = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err(&attr_name))?;
        let non_numeric = |column: usize| GraphError::NonNumeric {
            path: attr_name.clone(),
            row: row + 1,
            column: headers[column].to_string(),
            value: record[column].to_string(),
        };
        names.push(match id_col {
            Some(c) => record[c].to_string(),
            None => row.to_string(),
        });
        for &c in &attr_cols {
            let v: f64 = record[c].trim().parse().map_err(|_| non_numeric(c))?;
            if !v.is_finite() {
                return Err(non_numeric(c));
            }
            data.push(v);
        }
        labels.push(record[label_col].trim().parse::<usize>().map_err(|_| non_numeric(label_col))?);
        raw_sensitive.push(record[sens_col].trim().to_string());
    }
    let n = names.len();

    let distinct: BTreeSet<&str> = raw_sensitive.iter().map(String::as_str).collect();
    let mut values: Vec<&str> = distinct.into_iter().collect();
    if values.len() != 2 {
        return Err(GraphError::SensitiveValues {
            path: attr_name.clone(),
            count: values.len(),
            values: values.join(", "),
        });
    }
    if let (Ok(a), Ok(b)) = (values[0].parse::<f64>(), values[1].parse::<f64>()) {
        if b < a {
            values.swap(0, 1);
        }
    }
    let sensitive: Vec<u8> = raw_sensitive.iter().map(|v| u8::from(v == values[1])).collect();

    let mut attr_names: Vec<String> = attr_cols.iter().map(|&c| headers[c].to_string()).collect();
    let mut d = attr_cols.len();
    if opts.keep_sensitive {
        let mut widened = Vec::with_capacity(n * (d + 1));
        for (r, &s) in sensitive.iter().enumerate() {
            widened.extend_from_slice(&data[r * d..(r + 1) * d]);
            widened.push(f64::from(s));
        }
        data = widened;
        d += 1;
        attr_names.push(opts.sensitive_column.clone());
    }
    let attributes = DenseMat::from_vec(n, d, data).map_err(|e| GraphError::Invalid(e.to_string()))?;

    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let edge_name = edge_path.display().to_string();
    let mut edges = open(edge_path)?;
    let mut pairs = BTreeSet::new();
    for record in edges.records() {
        let record = record.map_err(csv_err(&edge_name))?;
        if record.len() < 2 {
            return Err(GraphError::Invalid(format!("{edge_name}: edge rows need two columns")));
        }
        let lookup = |id: &str| {
            index
                .get(id.trim())
                .copied()
                .ok_or_else(|| GraphError::UnknownNode { path: edge_name.clone(), id: id.trim().to_string() })
        };
        let (u, v) = (lookup(&record[0])?, lookup(&record[1])?);
        if u != v {
            pairs.insert((u.min(v), u.max(v)));
        }
    }
    let mut triplets = Vec::with_capacity(pairs.len() * 2);
    for (u, v) in pairs {
        triplets.push((u, v, 1.0));
        triplets.push((v, u, 1.0));
    }
    let adjacency = SparseMat::from_triplets(n, n, triplets).map_err(|e| GraphError::Invalid(e.to_string()))?;
    let class_count = labels.iter().max().map_or(0, |m| m + 1);

    AttributedGraph::new(adjacency, attributes, labels, sensitive, class_count)?
        .with_names(names)?
        .with_attribute_names(attr_names)
}

/// Writes the graph in the layout [`load_graph`] reads with default options:
/// `id`, attribute columns, `label`, `sensitive`.
pub fn write_graph(g: &AttributedGraph, edge_path: &Path, attr_path: &Path) -> Result<(), GraphError> {
    let io_err = |path: &Path| {
        let path = path.display().to_string();
        move |source| GraphError::Io { path: path.clone(), source }
    };
    let csv_err = |path: &Path| {
        let path = path.display().to_string();
        move |source| GraphError::Csv { path: path.clone(), source }
    };
    let name_of = |i: usize| g.names().map_or_else(|| i.to_string(), |n| n[i].clone());

    let mut w = csv::WriterBuilder::new().from_writer(File::create(attr_path).map_err(io_err(attr_path))?);
    let mut header = vec!["id".to_string()];
    header.extend(g.attribute_names().iter().cloned());
    header.push("label".into());
    header.push("sensitive".into());
    w.write_record(&header).map_err(csv_err(attr_path))?;
    for i in 0..g.node_count() {
        let mut rec = vec![name_of(i)];
        rec.extend(g.attributes().row(i).iter().map(|v| v.to_string()));
        rec.push(g.labels()[i].to_string());
        rec.push(g.sensitive()[i].to_string());
        w.write_record(&rec).map_err(csv_err(attr_path))?;
    }
    w.flush().map_err(io_err(attr_path))?;

    let mut w = csv::WriterBuilder::new().from_writer(File::create(edge_path).map_err(io_err(edge_path))?);
    w.write_record(["src", "dst"]).map_err(csv_err(edge_path))?;
    for (u, v) in g.edges() {
        w.write_record([name_of(u), name_of(v)]).map_err(csv_err(edge_path))?;
    }
    w.flush().map_err(io_err(edge_path))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn fixture(dir: &Path, attrs: &str, edges: &str) -> (std::path::PathBuf, std::path::PathBuf) {
        let (a, e) = (dir.join("attrs.csv"), dir.join("edges.csv"));
        fs::write(&a, attrs).unwrap();
        fs::write(&e, edges).unwrap();
        (e, a)
    }

    #[test]
    fn symmetric_duplicates_collapse() {
        let dir = tempfile::tempdir().unwrap();
        let (e, a) = fixture(
            dir.path(),
            "id,f,label,sensitive\na,1.0,0,25\nb,2.0,1,40\nc,3.0,0,25\n",
            "src,dst\na,b\nb,a\n",
        );
        let g = load_graph(&e, &a, &LoadOptions::default()).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.sensitive(), &[0, 1, 0]);
        assert_eq!(g.attributes().cols(), 1);
    }

    #[test]
    fn numeric_sensitive_sorted_numerically() {
        let dir = tempfile::tempdir().unwrap();
        let (e, a) = fixture(dir.path(), "f,label,age\n1,0,9\n2,1,10\n", "src,dst\n0,1\n");
        let opts = LoadOptions { sensitive_column: "age".into(), ..Default::default() };
        let g = load_graph(&e, &a, &opts).unwrap();
        // lexicographic order would put "10" first
        assert_eq!(g.sensitive(), &[0, 1]);
    }

    #[test]
    fn unknown_edge_endpoint_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let (e, a) = fixture(dir.path(), "id,f,label,sensitive\na,1,0,0\nb,2,1,1\n", "src,dst\na,z\n");
        let err = load_graph(&e, &a, &LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("`z`"), "{err}");
    }

    #[test]
    fn column_and_value_errors() {
        let dir = tempfile::tempdir().unwrap();
        let (e, a) = fixture(dir.path(), "id,f,label\na,1,0\n", "src,dst\n");
        assert!(matches!(load_graph(&e, &a, &LoadOptions::default()), Err(GraphError::MissingColumn { .. })));

        let (e, a) = fixture(dir.path(), "id,f,label,sensitive\na,1,0,x\nb,2,1,y\nc,3,1,z\n", "src,dst\n");
        assert!(matches!(load_graph(&e, &a, &LoadOptions::default()), Err(GraphError::SensitiveValues { count: 3, .. })));

        let (e, a) = fixture(dir.path(), "id,f,label,sensitive\na,oops,0,0\nb,2,1,1\n", "src,dst\n");
        assert!(matches!(load_graph(&e, &a, &LoadOptions::default()), Err(GraphError::NonNumeric { .. })));
    }

    #[test]
    fn keep_sensitive_appends_column() {
        let dir = tempfile::tempdir().unwrap();
        let (e, a) = fixture(dir.path(), "id,f,label,sensitive\na,1,0,m\nb,2,1,f\n", "src,dst\na,b\n");
        let opts = LoadOptions { keep_sensitive: true, ..Default::default() };
        let g = load_graph(&e, &a, &opts).unwrap();
        assert_eq!(g.attributes().row(0), &[1.0, 1.0]);
        assert_eq!(g.attributes().row(1), &[2.0, 0.0]);
    }
}
