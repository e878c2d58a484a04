//! Plot-ready aggregates of run and ablation CSVs.
//!
//! A training run becomes a learning curve (one row per iteration); an
//! ablation directory becomes one row per axis value, averaged over seeds.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{HarnessError, Result};
use crate::output::{num, CsvSink, EPISODES_CSV, SUMMARY_CSV};

pub const LEARNING_CURVE_CSV: &str = "learning_curve.csv";
pub const ABLATION_PLOT_CSV: &str = "ablation_plot.csv";

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt())
}

fn read_rows(path: &Path) -> Result<(csv::StringRecord, Vec<csv::StringRecord>)> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header = rdr.headers()?.clone();
    let rows = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((header, rows))
}

fn column(header: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| HarnessError::Config(format!("{}: no `{name}` column", path.display())))
}

fn parse<T: std::str::FromStr>(s: &str, what: &str, path: &Path) -> Result<T> {
    s.parse().map_err(|_| HarnessError::Config(format!("{}: bad {what} `{s}`", path.display())))
}

/// Writes the plot file for `dir` (a run or an ablation) and returns its path.
pub fn export_plot_data(dir: &Path, out: Option<&Path>) -> Result<PathBuf> {
    if dir.join(SUMMARY_CSV).exists() {
        let out = out.map(Path::to_path_buf).unwrap_or_else(|| dir.join(ABLATION_PLOT_CSV));
        ablation_plot(&dir.join(SUMMARY_CSV), &out)?;
        Ok(out)
    } else if dir.join(EPISODES_CSV).exists() {
        let out = out.map(Path::to_path_buf).unwrap_or_else(|| dir.join(LEARNING_CURVE_CSV));
        learning_curve(&dir.join(EPISODES_CSV), &out)?;
        Ok(out)
    } else {
        Err(HarnessError::Config(format!(
            "{} has neither {SUMMARY_CSV} nor {EPISODES_CSV}",
            dir.display()
        )))
    }
}

fn learning_curve(src: &Path, out: &Path) -> Result<()> {
    let (h, rows) = read_rows(src)?;
    let (ci, cr, cs, ce) = (
        column(&h, "iteration", src)?,
        column(&h, "return", src)?,
        column(&h, "success", src)?,
        column(&h, "env_steps", src)?,
    );
    // iteration -> (returns, successes, env_steps at the end)
    let mut by_iter: BTreeMap<usize, (Vec<f64>, usize, usize)> = BTreeMap::new();
    for r in &rows {
        let it: usize = parse(&r[ci], "iteration", src)?;
        let entry = by_iter.entry(it).or_default();
        entry.0.push(parse(&r[cr], "return", src)?);
        entry.1 += parse::<usize>(&r[cs], "success", src)?;
        entry.2 = entry.2.max(parse(&r[ce], "env_steps", src)?);
    }
    let mut sink = CsvSink::create(
        out,
        &["iteration", "env_steps", "episodes", "mean_return", "std_return", "success_rate"],
    )?;
    for (it, (returns, successes, steps)) in &by_iter {
        let (m, s) = mean_std(returns);
        sink.row([
            it.to_string(),
            steps.to_string(),
            returns.len().to_string(),
            num(m),
            num(s),
            num(*successes as f64 / returns.len() as f64),
        ])?;
    }
    sink.flush()
}

fn ablation_plot(src: &Path, out: &Path) -> Result<()> {
    let (h, rows) = read_rows(src)?;
    let idx = |n| column(&h, n, src);
    let (ca, cv, cst, cer, cts, ces) = (
        idx("axis")?,
        idx("value")?,
        idx("status")?,
        idx("eval_mean_return")?,
        idx("final_train_return")?,
        idx("eval_success_rate")?,
    );
    struct Group {
        axis: String,
        seeds: usize,
        failed: usize,
        eval_returns: Vec<f64>,
        train_returns: Vec<f64>,
        successes: Vec<f64>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Group> = BTreeMap::new();
    for r in &rows {
        let value = r[cv].to_string();
        let g = groups.entry(value.clone()).or_insert_with(|| {
            order.push(value.clone());
            Group {
                axis: r[ca].to_string(),
                seeds: 0,
                failed: 0,
                eval_returns: vec![],
                train_returns: vec![],
                successes: vec![],
            }
        });
        g.seeds += 1;
        if &r[cst] != "ok" {
            g.failed += 1;
            continue;
        }
        if !r[cer].is_empty() {
            g.eval_returns.push(parse(&r[cer], "eval_mean_return", src)?);
        }
        if !r[ces].is_empty() {
            g.successes.push(parse(&r[ces], "eval_success_rate", src)?);
        }
        g.train_returns.push(parse(&r[cts], "final_train_return", src)?);
    }
    let mut sink = CsvSink::create(
        out,
        &[
            "axis",
            "value",
            "seeds",
            "failed",
            "mean_eval_return",
            "std_eval_return",
            "mean_eval_success",
            "mean_final_train_return",
            "std_final_train_return",
        ],
    )?;
    for value in &order {
        let g = &groups[value];
        let (em, es) = mean_std(&g.eval_returns);
        let (sm, _) = mean_std(&g.successes);
        let (tm, ts) = mean_std(&g.train_returns);
        sink.row([
            g.axis.clone(),
            value.clone(),
            g.seeds.to_string(),
            g.failed.to_string(),
            num(em),
            num(es),
            num(sm),
            num(tm),
            num(ts),
        ])?;
    }
    sink.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn learning_curve_groups_by_iteration() {
        let tmp = tempfile::tempdir().unwrap();
        fs::write(
            tmp.path().join(EPISODES_CSV),
            "iteration,episode,length,return,success,failed,env_steps\n0,0,5,1.0,0,0,5\n0,1,5,3.0,1,0,10\n1,2,4,5.0,1,0,14\n",
        )
        .unwrap();
        let out = export_plot_data(tmp.path(), None).unwrap();
        let text = fs::read_to_string(out).unwrap();
        assert_eq!(
            text,
            "iteration,env_steps,episodes,mean_return,std_return,success_rate\n0,10,2,2.0,1.0,0.5\n1,14,1,5.0,0.0,1.0\n"
        );
    }

    #[test]
    fn ablation_plot_keeps_value_order_and_counts_failures() {
        let tmp = tempfile::tempdir().unwrap();
        let header = "axis,value,seed,status,error,env_steps,final_train_return,final_train_success,eval_success_rate,eval_mean_return,run_dir\n";
        let body = "gamma,10.0,0,ok,,5,1.0,0.0,0.5,2.0,a\ngamma,10.0,1,failed,boom,,,,,,b\ngamma,0.1,0,ok,,5,3.0,1.0,1.0,4.0,c\n";
        fs::write(tmp.path().join(SUMMARY_CSV), format!("{header}{body}")).unwrap();
        let text = fs::read_to_string(export_plot_data(tmp.path(), None).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "gamma,10.0,2,1,2.0,0.0,0.5,1.0,0.0");
        assert_eq!(lines[2], "gamma,0.1,1,0,4.0,0.0,1.0,3.0,0.0");
    }
}
