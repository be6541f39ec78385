//! TSV and JSON rendering of reports, and TSV parsers for the tabular ones.
//!
//! Every TSV report starts with `# config<TAB><json>`, the effective
//! configuration. Numbers use the shortest representation that parses back
//! to the same `f64`; missing values are `NA`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::args::Format;
use crate::commands::{CalibrateReport, EstimateReport, QqReport, SimulateReport, WeightsReport};
use crate::error::{CliError, CliResult};

const NA: &str = "NA";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("reports serialize")
}

fn config_line<T: Serialize>(out: &mut String, config: &T) {
    writeln!(out, "# config\t{}", json(config)).unwrap();
}

fn row(out: &mut String, cells: impl IntoIterator<Item = String>) {
    let cells: Vec<String> = cells.into_iter().collect();
    writeln!(out, "{}", cells.join("\t")).unwrap();
}

pub trait Report: Serialize {
    fn tsv(&self) -> String;

    fn render(&self, format: Format) -> String {
        match format {
            Format::Tsv => self.tsv(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
                s.push('\n');
                s
            }
        }
    }
}

impl Report for EstimateReport {
    fn tsv(&self) -> String {
        let mut out = String::new();
        config_line(&mut out, &self.config);
        row(&mut out, ["estimator".into(), self.estimator.clone()]);
        row(&mut out, ["n".into(), self.n.to_string()]);
        row(&mut out, ["p".into(), self.p.to_string()]);
        row(&mut out, ["tuning".into(), opt(self.tuning)]);
        row(&mut out, ["scale".into(), opt(self.scale)]);
        row(&mut out, ["iterations".into(), self.iterations.to_string()]);
        row(&mut out, ["converged".into(), self.converged.to_string()]);
        row(&mut out, ["returned_start".into(), self.returned_start.to_string()]);
        row(&mut out, ["size".into(), self.size.to_string()]);
        row(&mut out, ["cutoff".into(), self.cutoff.to_string()]);
        row(&mut out, ["outliers".into(), self.outliers.len().to_string()]);
        row(&mut out, ["rocke".into(), self.rocke.as_ref().map_or_else(|| NA.into(), json)]);
        row(&mut out, ["warnings".into(), json(&self.warnings)]);
        out.push_str("[location]\n");
        row(&mut out, self.location.iter().map(f64::to_string));
        out.push_str("[scatter]\n");
        for r in &self.scatter {
            row(&mut out, r.iter().map(f64::to_string));
        }
        out.push_str("[distances]\n");
        row(&mut out, ["row".into(), "distance".into(), "outlier".into()]);
        for (i, d) in self.distances.iter().enumerate() {
            let flag = if *d > self.cutoff { "1" } else { "0" };
            row(&mut out, [(i + 1).to_string(), d.to_string(), flag.into()]);
        }
        out
    }
}

impl Report for QqReport {
    fn tsv(&self) -> String {
        let mut out = String::new();
        config_line(&mut out, &self.config);
        writeln!(out, "# p\t{}", self.p).unwrap();
        row(&mut out, ["distance".into(), "chi2_quantile".into()]);
        for (d, q) in &self.rows {
            row(&mut out, [d.to_string(), q.to_string()]);
        }
        out
    }
}

impl Report for WeightsReport {
    fn tsv(&self) -> String {
        let mut out = String::new();
        config_line(&mut out, &self.config);
        row(&mut out, std::iter::once("t".to_string()).chain(self.config.families.iter().map(|f| f.to_string())));
        for (i, t) in self.t.iter().enumerate() {
            row(&mut out, std::iter::once(t.to_string()).chain(self.weights.iter().map(|w| w[i].to_string())));
        }
        out
    }
}

impl Report for SimulateReport {
    fn tsv(&self) -> String {
        let mut out = String::new();
        config_line(&mut out, &self.config);
        for rep in &self.reports {
            let sc = &rep.scenario;
            writeln!(
                out,
                "# scenario\tp={}\tn={}\tepsilon={}\tgamma={}\treplicates={}",
                sc.p, sc.n, sc.epsilon, sc.gamma_c, sc.replicates
            )
            .unwrap();
            let mut header = vec!["estimator".to_string()];
            for prefix in ["S", "L"] {
                header.extend(rep.rows.iter().map(|r| format!("{prefix}:K={}", r.k)));
                header.push(format!("{prefix}:max"));
                header.push(format!("{prefix}:argmax"));
            }
            if sc.clean {
                header.extend(["clean:S".into(), "clean:L".into(), "efficiency".into()]);
            }
            header.extend(["failures".into(), "nonconverged".into()]);
            row(&mut out, header);
            for (j, s) in rep.summaries.iter().enumerate() {
                let mut cells = vec![s.label.clone()];
                cells.extend(rep.rows.iter().map(|r| opt(r.scatter[j])));
                cells.push(opt(s.max_scatter));
                cells.push(opt(s.max_scatter_k));
                cells.extend(rep.rows.iter().map(|r| opt(r.location[j])));
                cells.push(opt(s.max_location));
                cells.push(opt(s.max_location_k));
                if sc.clean {
                    cells.extend([opt(s.clean_scatter), opt(s.clean_location), opt(s.efficiency)]);
                }
                cells.extend([s.failures.to_string(), s.nonconverged.to_string()]);
                row(&mut out, cells);
            }
        }
        out
    }
}

impl Report for CalibrateReport {
    fn tsv(&self) -> String {
        let c = &self.calibration;
        let mut out = String::new();
        config_line(&mut out, &self.config);
        row(&mut out, ["estimator".into(), self.estimator.clone()]);
        row(&mut out, ["constant".into(), c.constant.to_string()]);
        row(&mut out, ["efficiency".into(), c.efficiency.to_string()]);
        row(&mut out, ["target".into(), c.target.to_string()]);
        row(&mut out, ["attainable".into(), c.attainable.to_string()]);
        row(&mut out, ["failures".into(), c.failures.to_string()]);
        out.push_str("[path]\n");
        row(&mut out, ["constant".into(), "efficiency".into()]);
        for (k, e) in &c.path {
            row(&mut out, [k.to_string(), e.to_string()]);
        }
        out
    }
}

// ------------------------------------------------------------------ parsing

fn bad(msg: impl Into<String>) -> CliError {
    CliError::data("report", msg.into())
}

fn num(cell: &str) -> CliResult<f64> {
    cell.parse().map_err(|_| bad(format!("'{cell}' is not a number")))
}

fn opt_num(cell: &str) -> CliResult<Option<f64>> {
    if cell == NA {
        Ok(None)
    } else {
        num(cell).map(Some)
    }
}

fn parse_config<T: serde::de::DeserializeOwned>(line: Option<&str>) -> CliResult<T> {
    let body = line
        .and_then(|l| l.strip_prefix("# config\t"))
        .ok_or_else(|| bad("missing '# config' line"))?;
    serde_json::from_str(body).map_err(|e| bad(format!("config: {e}")))
}

fn parse<T: std::str::FromStr>(cell: &str) -> CliResult<T> {
    cell.parse().map_err(|_| bad(format!("unexpected value '{cell}'")))
}

pub fn parse_estimate_tsv(text: &str) -> CliResult<EstimateReport> {
    let mut lines = text.lines();
    let config = parse_config(lines.next())?;
    let mut fields = std::collections::HashMap::new();
    let mut section = String::new();
    let mut location = Vec::new();
    let mut scatter = Vec::new();
    let mut distances = Vec::new();
    for line in lines {
        if line.starts_with('[') {
            section = line.to_string();
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        match section.as_str() {
            "" => {
                if cells.len() != 2 {
                    return Err(bad(format!("bad field line '{line}'")));
                }
                fields.insert(cells[0].to_string(), cells[1].to_string());
            }
            "[location]" => location = cells.iter().map(|c| num(c)).collect::<CliResult<_>>()?,
            "[scatter]" => scatter.push(cells.iter().map(|c| num(c)).collect::<CliResult<Vec<f64>>>()?),
            "[distances]" if cells[0] == "row" => {}
            "[distances]" => {
                if cells.len() != 3 {
                    return Err(bad(format!("bad distance line '{line}'")));
                }
                distances.push(num(cells[1])?);
            }
            other => return Err(bad(format!("unknown section {other}"))),
        }
    }
    let get = |k: &str| fields.get(k).map(String::as_str).ok_or_else(|| bad(format!("missing field {k}")));
    let cutoff = num(get("cutoff")?)?;
    let rocke = match get("rocke")? {
        NA => None,
        s => Some(serde_json::from_str(s).map_err(|e| bad(format!("rocke: {e}")))?),
    };
    Ok(EstimateReport {
        config,
        estimator: get("estimator")?.to_string(),
        n: parse(get("n")?)?,
        p: parse(get("p")?)?,
        tuning: opt_num(get("tuning")?)?,
        scale: opt_num(get("scale")?)?,
        iterations: parse(get("iterations")?)?,
        converged: parse(get("converged")?)?,
        returned_start: parse(get("returned_start")?)?,
        rocke,
        warnings: serde_json::from_str(get("warnings")?).map_err(|e| bad(format!("warnings: {e}")))?,
        location,
        scatter,
        size: num(get("size")?)?,
        outliers: distances.iter().enumerate().filter(|(_, d)| **d > cutoff).map(|(i, _)| i + 1).collect(),
        distances,
        cutoff,
    })
}

pub fn parse_qq_tsv(text: &str) -> CliResult<QqReport> {
    let mut lines = text.lines();
    let config = parse_config(lines.next())?;
    let p = lines
        .next()
        .and_then(|l| l.strip_prefix("# p\t"))
        .ok_or_else(|| bad("missing '# p' line"))?;
    let p = parse(p)?;
    lines.next();
    let rows = lines
        .map(|l| match l.split_once('\t') {
            Some((d, q)) => Ok((num(d)?, num(q)?)),
            None => Err(bad(format!("bad line '{l}'"))),
        })
        .collect::<CliResult<_>>()?;
    Ok(QqReport { config, p, rows })
}

pub fn parse_weights_tsv(text: &str) -> CliResult<WeightsReport> {
    let mut lines = text.lines();
    let config: crate::commands::WeightsConfig = parse_config(lines.next())?;
    lines.next();
    let mut t = Vec::new();
    let mut weights = vec![Vec::new(); config.families.len()];
    for l in lines {
        let cells: Vec<&str> = l.split('\t').collect();
        if cells.len() != weights.len() + 1 {
            return Err(bad(format!("bad line '{l}'")));
        }
        t.push(num(cells[0])?);
        for (w, c) in weights.iter_mut().zip(&cells[1..]) {
            w.push(num(c)?);
        }
    }
    Ok(WeightsReport { config, t, weights })
}
