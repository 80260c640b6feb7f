//! Generated reference page for the configuration file.

use std::fmt::Write as _;

use crate::config::{ExperimentConfig, SweepAxis, SweepConfig};

/// `(key, description)` for every configuration key, in page order.
pub const KEYS: &[(&str, &str)] = &[
    ("data.source", "`\"synth\"` to generate a graph from `data.synth`, or `\"files\"` to read CSVs."),
    ("data.edges", "Edge list CSV with a header and two columns of node ids. Relative to the config file."),
    ("data.attributes", "Node table CSV: an id column, a label column, a sensitive column, numeric attributes."),
    ("data.id_column", "Node id column of the node table; row order is used when the column is absent."),
    ("data.label_column", "Class label column of the node table."),
    ("data.sensitive_column", "Binary sensitive attribute column; it is never fed to a model."),
    ("data.keep_sensitive", "Append the binarized sensitive column to the attributes, for diagnostics. Off by default so no model sees it."),
    ("data.split", "Train, validation and test fractions. The split is reshuffled per seed."),
    ("data.standardize", "Shift and scale every attribute column to zero mean and unit variance over the seed's training nodes."),
    ("data.synth.n", "Number of nodes."),
    ("data.synth.d", "Attribute dimension; must exceed the class count."),
    ("data.synth.classes", "Number of classes."),
    ("data.synth.group_fraction", "Fraction of nodes in sensitive group 1."),
    ("data.synth.homophily", "Probability that an edge joins two nodes of the same class."),
    ("data.synth.bias_strength", "Dependence of labels, attributes and edges on the group, in [0, 1]. 0 makes the group independent of everything."),
    ("data.synth.avg_degree", "Average node degree."),
    ("data.synth.seed", "Graph seed. Kept apart from `run.seeds` so every run sees the same graph."),
    ("teacher.architecture", "`\"gcn\"`, `\"sage-mean\"`, `\"mlp\"` or `\"sgc\"`."),
    ("teacher.layers", "Number of weight layers."),
    ("teacher.hidden", "Hidden width."),
    ("teacher.dropout", "Dropout rate in front of every layer."),
    ("teacher.max_epochs", "Epoch limit."),
    ("teacher.patience", "Stop after this many epochs without a better validation accuracy."),
    ("teacher.learning_rate", "Adam learning rate."),
    ("teacher.weight_decay", "L2 penalty added to the gradients."),
    ("teacher.checkpoint_dir", "Directory for `teacher_seed<S>.json`; defaults to `--out`."),
    ("student.architecture", "Student model; `\"sgc\"` by default."),
    ("student.sgc_power", "Propagation steps of an SGC student."),
    ("student.layers", "Weight layers, for non-SGC students."),
    ("student.hidden", "Hidden width, for non-SGC students."),
    ("student.dropout", "Student dropout rate."),
    ("student.epochs", "Distillation epochs. Every epoch runs and the last student is kept."),
    ("student.learning_rate", "Student Adam learning rate."),
    ("student.weight_decay", "Student L2 penalty."),
    ("distill.method", "`\"vanilla\"`, `\"onehot\"`, `\"reliant\"` or `\"proxy-only\"` (learned proxy, no attribution term)."),
    ("distill.distance", "Distance between student and teacher logits: `\"squared-euclidean\"`, `\"cosine\"` or `\"kl\"`."),
    ("distill.lambda", "Weight of the attribution term; 100 when unset. Only `reliant` uses it."),
    ("distill.proxy_dim", "Columns of the learned proxy."),
    ("distill.proxy_learning_rate", "Adam learning rate of the proxy."),
    ("distill.proxy_weight_decay", "L2 penalty of the proxy."),
    ("distill.proxy_init_std", "Standard deviation of the Gaussian proxy initialization."),
    ("distill.notion", "Group gap minimized by the attribution term: `\"sp\"` or `\"eo\"`."),
    ("distill.utility_on_pseudo", "Also fit the teacher with the pseudo proxy in place of the learned one."),
    ("sweep.axis", "`\"lambda\"` or `\"proxy_dim\"`. The section is only read by `sweep`."),
    ("sweep.values", "Values to run; each must be positive."),
    ("run.seeds", "Seeds for splits, initialization, dropout and proxies. One run per seed."),
    ("run.threads", "Worker threads for independent runs; defaults to the core count and is capped by `FAIRDISTILL_THREADS`."),
];

fn flatten(prefix: &str, value: &toml::Value, out: &mut Vec<(String, String)>) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Default values of every key present in a serialized default config.
pub fn defaults() -> Vec<(String, String)> {
    let mut cfg = ExperimentConfig::default();
    cfg.sweep = Some(SweepConfig { axis: SweepAxis::Lambda, values: vec![1.0, 10.0, 100.0, 1000.0, 10000.0] });
    let value = toml::Value::try_from(&cfg).expect("config serializes");
    let mut out = Vec::new();
    flatten("", &value, &mut out);
    out
}

pub fn markdown() -> String {
    let defaults = defaults();
    let mut out = String::from(
        "# Configuration reference\n\n\
         Generated by `fairdistill config-reference`. Every key is optional. Relative paths are resolved \
         against the config file's directory. A `*_manifest.json` written by any command can be passed to \
         `--config` to rerun with the same settings.\n",
    );
    let mut section = "";
    for (key, doc) in KEYS {
        let head = key.rsplit_once('.').map(|(s, _)| s).unwrap_or("");
        if head != section {
            let _ = write!(out, "\n## [{head}]\n\n| key | default | meaning |\n|---|---|---|\n");
            section = head;
        }
        let default = defaults.iter().find(|(k, _)| k == key).map(|(_, v)| format!("`{v}`")).unwrap_or("unset".into());
        let short = key.rsplit_once('.').map(|(_, k)| k).unwrap_or(key);
        let _ = writeln!(out, "| `{short}` | {default} | {doc} |");
    }
    out.push_str(
        "\n## Environment\n\n| variable | meaning |\n|---|---|\n\
         | `FAIRDISTILL_THREADS` | Upper bound on worker threads. |\n",
    );
    out
}
