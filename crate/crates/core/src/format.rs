//! Versioned line-oriented model file.
//!
//! Every real number is written as the 16 hex digits of its IEEE-754 bit
//! pattern, so a save/load round trip is bit-exact. Layout:
//!
//! ```text
//! deepgb-model 1
//! scaler <mean> <std>
//! time_scale <origin> <span>
//! stop <reason>
//! features <n>
//! feature <name> <cardinality>          (n lines, training order)
//! composite ...                          (final network)
//! gbdt <base> <learning_rate> <n_features> <n_trees>
//! tree <n_nodes>                         (then preorder nodes)
//! split <feature> <threshold> <left> <right> | leaf <value>
//! stages <n>
//! stage <index> <feature> <delta>
//! loss <values...>
//! prediction <values...>
//! residual <values...>
//! composite ...                          (stage network)
//! end
//! ```
//!
//! A composite network is written as
//!
//! ```text
//! composite <n_tables> <n_layers> <dropout> <time2vec_width or 0>
//! table <feature> <cardinality> <dim> <frozen 0|1>
//! weights <rows*dim values, row-major>
//! layer <inputs> <outputs> <relu|identity>
//! weights <values>
//! bias <values>
//! omega <values>                         (only with time2vec)
//! phi <values>
//! ```

use std::path::Path;

use crate::boosting::{DeepGbModel, FeatureSpec, StageRecord, StopReason};
use crate::error::{Error, Result};
use crate::gbdt::{GbdtModel, Node, RegressionTree};
use crate::nn::{
    Activation, CompositeEmbeddingModel, DenseLayer, EmbeddingTable, Matrix, Time2VecLayer,
};
use crate::series::{Scaler, TimeScale};

pub const MAGIC: &str = "deepgb-model";
pub const VERSION: u32 = 1;

fn hex(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

struct Writer {
    out: String,
}

impl Writer {
    fn line(&mut self, parts: &[&str]) {
        self.out.push_str(&parts.join(" "));
        self.out.push('\n');
    }

    fn values(&mut self, key: &str, values: &[f64]) {
        self.out.push_str(key);
        for v in values {
            self.out.push(' ');
            self.out.push_str(&hex(*v));
        }
        self.out.push('\n');
    }

    fn composite(&mut self, m: &CompositeEmbeddingModel) {
        let t2v = m.time2vec().map_or(0, Time2VecLayer::width);
        self.line(&[
            "composite",
            &m.embeddings().len().to_string(),
            &m.head().len().to_string(),
            &hex(m.dropout_rate()),
            &t2v.to_string(),
        ]);
        for t in m.embeddings() {
            self.line(&[
                "table",
                t.feature(),
                &t.cardinality().to_string(),
                &t.dim().to_string(),
                if t.is_frozen() { "1" } else { "0" },
            ]);
            self.values("weights", t.weights().as_slice());
        }
        for l in m.head() {
            self.line(&[
                "layer",
                &l.inputs().to_string(),
                &l.outputs().to_string(),
                l.activation.as_str(),
            ]);
            self.values("weights", l.weights.as_slice());
            self.values("bias", &l.bias);
        }
        if let Some(t) = m.time2vec() {
            self.values("omega", &t.omega);
            self.values("phi", &t.phi);
        }
    }

    fn gbdt(&mut self, g: &GbdtModel) {
        self.line(&[
            "gbdt",
            &hex(g.base()),
            &hex(g.learning_rate()),
            &g.n_features().to_string(),
            &g.trees().len().to_string(),
        ]);
        for tree in g.trees() {
            self.line(&["tree", &tree.nodes().len().to_string()]);
            for node in tree.nodes() {
                match *node {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => self.line(&[
                        "split",
                        &feature.to_string(),
                        &hex(threshold),
                        &left.to_string(),
                        &right.to_string(),
                    ]),
                    Node::Leaf { value } => self.line(&["leaf", &hex(value)]),
                }
            }
        }
    }
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.chars().any(char::is_whitespace) {
        return Err(Error::Format {
            line: 0,
            message: format!(
                "feature name '{name}' cannot be stored (empty or contains whitespace)"
            ),
        });
    }
    Ok(())
}

/// Serializes a fitted model.
pub fn write_model(model: &DeepGbModel) -> Result<String> {
    for f in &model.features {
        check_name(&f.name)?;
    }
    let mut w = Writer { out: String::new() };
    w.line(&[MAGIC, &VERSION.to_string()]);
    w.line(&["scaler", &hex(model.scaler.mean), &hex(model.scaler.std)]);
    w.line(&[
        "time_scale",
        &model.time_scale.origin.to_string(),
        &model.time_scale.span.to_string(),
    ]);
    w.line(&["stop", model.stop.as_str()]);
    w.line(&["features", &model.features.len().to_string()]);
    for f in &model.features {
        w.line(&["feature", &f.name, &f.cardinality.to_string()]);
    }
    w.composite(&model.composite);
    w.gbdt(&model.residual_model);
    w.line(&["stages", &model.stages.len().to_string()]);
    for s in &model.stages {
        check_name(&s.feature)?;
        w.line(&["stage", &s.stage.to_string(), &s.feature, &hex(s.delta)]);
        w.values("loss", &s.loss_history);
        w.values("prediction", &s.prediction);
        w.values("residual", &s.residual);
        w.composite(&s.model);
    }
    w.line(&["end"]);
    Ok(w.out)
}

struct Reader<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    line: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate().peekable(),
            line: 0,
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Format {
            line: self.line,
            message: message.into(),
        }
    }

    /// Next non-empty line, which must start with `key`; returns the rest.
    fn expect(&mut self, key: &str) -> Result<Vec<&'a str>> {
        loop {
            let Some((i, line)) = self.lines.next() else {
                self.line += 1;
                return Err(self.err(format!("unexpected end of file, expected '{key}'")));
            };
            self.line = i + 1;
            let mut tokens = line.split_whitespace();
            let Some(first) = tokens.next() else { continue };
            if first != key {
                return Err(self.err(format!("expected '{key}', found '{first}'")));
            }
            return Ok(tokens.collect());
        }
    }

    fn fields<const N: usize>(&mut self, key: &str) -> Result<[&'a str; N]> {
        let t = self.expect(key)?;
        t.try_into().map_err(|t: Vec<&str>| {
            self.err(format!("'{key}' needs {N} fields, found {}", t.len()))
        })
    }

    fn usize(&self, tok: &str) -> Result<usize> {
        tok.parse()
            .map_err(|_| self.err(format!("'{tok}' is not a count")))
    }

    fn i64(&self, tok: &str) -> Result<i64> {
        tok.parse()
            .map_err(|_| self.err(format!("'{tok}' is not an integer")))
    }

    fn f64(&self, tok: &str) -> Result<f64> {
        if tok.len() != 16 {
            return Err(self.err(format!("'{tok}' is not a 16-digit hex float")));
        }
        u64::from_str_radix(tok, 16)
            .map(f64::from_bits)
            .map_err(|_| self.err(format!("'{tok}' is not a hex float")))
    }

    fn values(&mut self, key: &str, expected: Option<usize>) -> Result<Vec<f64>> {
        let toks = self.expect(key)?;
        if let Some(n) = expected {
            if toks.len() != n {
                return Err(self.err(format!("'{key}' needs {n} values, found {}", toks.len())));
            }
        }
        toks.iter().map(|t| self.f64(t)).collect()
    }

    fn shape<T>(&self, r: Result<T>) -> Result<T> {
        r.map_err(|e| self.err(e.to_string()))
    }

    fn composite(&mut self) -> Result<CompositeEmbeddingModel> {
        let [tables, layers, dropout, t2v] = self.fields::<4>("composite")?;
        let (tables, layers, t2v) = (self.usize(tables)?, self.usize(layers)?, self.usize(t2v)?);
        let dropout = self.f64(dropout)?;
        let mut embeddings = Vec::with_capacity(tables);
        for _ in 0..tables {
            let [name, card, dim, frozen] = self.fields::<4>("table")?;
            let (card, dim) = (self.usize(card)?, self.usize(dim)?);
            let frozen = match frozen {
                "0" => false,
                "1" => true,
                other => return Err(self.err(format!("frozen flag '{other}' is not 0 or 1"))),
            };
            let weights = self.values("weights", Some((card + 1) * dim))?;
            let weights = Matrix::from_vec(card + 1, dim, weights).expect("length checked");
            let table = EmbeddingTable::from_weights(name, card, weights, frozen);
            embeddings.push(self.shape(table)?);
        }
        let mut head = Vec::with_capacity(layers);
        for _ in 0..layers {
            let [inputs, outputs, act] = self.fields::<3>("layer")?;
            let (inputs, outputs) = (self.usize(inputs)?, self.usize(outputs)?);
            let activation = match act {
                "relu" => Activation::Relu,
                "identity" => Activation::Identity,
                other => return Err(self.err(format!("unknown activation '{other}'"))),
            };
            let weights = self.values("weights", Some(inputs * outputs))?;
            let bias = self.values("bias", Some(outputs))?;
            head.push(DenseLayer {
                weights: Matrix::from_vec(outputs, inputs, weights).expect("length checked"),
                bias,
                activation,
            });
        }
        let time2vec = if t2v > 0 {
            let omega = self.values("omega", Some(t2v))?;
            let phi = self.values("phi", Some(t2v))?;
            Some(self.shape(Time2VecLayer::from_parts(omega, phi))?)
        } else {
            None
        };
        let model = CompositeEmbeddingModel::from_parts(embeddings, head, dropout, time2vec);
        self.shape(model)
    }

    fn gbdt(&mut self) -> Result<GbdtModel> {
        let [base, lr, n_features, n_trees] = self.fields::<4>("gbdt")?;
        let (base, lr) = (self.f64(base)?, self.f64(lr)?);
        let (n_features, n_trees) = (self.usize(n_features)?, self.usize(n_trees)?);
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let [n] = self.fields::<1>("tree")?;
            let n = self.usize(n)?;
            let mut nodes = Vec::with_capacity(n);
            for _ in 0..n {
                let (i, line) = self
                    .lines
                    .next()
                    .ok_or_else(|| self.err("unexpected end of file inside a tree"))?;
                self.line = i + 1;
                let toks: Vec<&str> = line.split_whitespace().collect();
                let node = match toks.as_slice() {
                    ["split", f, t, l, r] => Node::Split {
                        feature: self.usize(f)?,
                        threshold: self.f64(t)?,
                        left: self.usize(l)?,
                        right: self.usize(r)?,
                    },
                    ["leaf", v] => Node::Leaf {
                        value: self.f64(v)?,
                    },
                    _ => return Err(self.err(format!("malformed tree node '{line}'"))),
                };
                nodes.push(node);
            }
            trees.push(self.shape(RegressionTree::from_nodes(nodes))?);
        }
        self.shape(GbdtModel::from_parts(base, trees, lr, n_features))
    }
}

/// Parses a model written by [`write_model`].
pub fn read_model(text: &str) -> Result<DeepGbModel> {
    let mut r = Reader::new(text);
    let [version] = r.fields::<1>(MAGIC)?;
    if version != VERSION.to_string() {
        return Err(r.err(format!("unsupported model version {version}")));
    }
    let [mean, std] = r.fields::<2>("scaler")?;
    let scaler = Scaler {
        mean: r.f64(mean)?,
        std: r.f64(std)?,
    };
    let [origin, span] = r.fields::<2>("time_scale")?;
    let time_scale = TimeScale {
        origin: r.i64(origin)?,
        span: r.i64(span)?,
    };
    let [stop] = r.fields::<1>("stop")?;
    let stop =
        StopReason::parse(stop).ok_or_else(|| r.err(format!("unknown stop reason '{stop}'")))?;
    let [n] = r.fields::<1>("features")?;
    let n = r.usize(n)?;
    let mut features = Vec::with_capacity(n);
    for _ in 0..n {
        let [name, card] = r.fields::<2>("feature")?;
        features.push(FeatureSpec {
            name: name.to_string(),
            cardinality: r.usize(card)?,
        });
    }
    let composite = r.composite()?;
    let residual_model = r.gbdt()?;
    if residual_model.n_features() != features.len() {
        return Err(r.err("tree ensemble feature count does not match the feature list"));
    }
    let [n] = r.fields::<1>("stages")?;
    let n = r.usize(n)?;
    let mut stages = Vec::with_capacity(n);
    for _ in 0..n {
        let [stage, feature, delta] = r.fields::<3>("stage")?;
        let stage_no = r.usize(stage)?;
        let delta = r.f64(delta)?;
        let loss_history = r.values("loss", None)?;
        let prediction = r.values("prediction", None)?;
        let residual = r.values("residual", Some(prediction.len()))?;
        let model = r.composite()?;
        stages.push(StageRecord {
            stage: stage_no,
            feature: feature.to_string(),
            prediction,
            residual,
            delta,
            loss_history,
            model,
        });
    }
    r.expect("end")?;
    Ok(DeepGbModel {
        composite,
        residual_model,
        scaler,
        stages,
        features,
        time_scale,
        stop,
    })
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn save_model(path: &Path, model: &DeepGbModel) -> Result<()> {
    write_atomic(path, write_model(model)?.as_bytes())
}

pub fn load_model(path: &Path) -> Result<DeepGbModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_model(&text)
}
