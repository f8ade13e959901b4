use std::io::{self, Write};

use super::eval::{run_eval, AgentSpec, EvalReport};
use crate::env::CellConfig;
use crate::stats::Band;
use crate::Result;

pub const BENCHMARK_HEADER: &str =
    "agent,row,seed,mean_reward,median,q1,q3,min,max,whisker_lo,whisker_hi,outlier_seeds";
pub const BANDS_HEADER: &str = "episode,runs,median,inner_lo,inner_hi,outer_lo,outer_hi";

/// Every agent on every seed.
pub fn run_benchmark(
    agents: &[AgentSpec],
    cell: &CellConfig,
    seeds: &[u64],
    steps: u64,
    jobs: usize,
) -> Result<Vec<EvalReport>> {
    agents
        .iter()
        .map(|a| run_eval(a, cell, seeds, steps, jobs))
        .collect()
}

/// One `env` row per (agent, seed) followed by one `summary` row per agent.
///
/// Summary rows carry the mean, median, quartiles and extremes of the
/// per-seed means, the whisker ends (most extreme points within 1.5 IQR of
/// the quartiles) and the seeds beyond them, separated by `;`.
pub fn write_benchmark_csv<W: Write>(mut out: W, reports: &[EvalReport]) -> io::Result<()> {
    writeln!(out, "{BENCHMARK_HEADER}")?;
    for r in reports {
        for (seed, m) in r.seeds.iter().zip(&r.env_means) {
            writeln!(out, "{},env,{seed},{m},,,,,,,,", r.agent)?;
        }
    }
    for r in reports {
        let s = &r.summary;
        let (lo, hi) = s.fences();
        let inside = r.env_means.iter().copied().filter(|&x| x >= lo && x <= hi);
        let whisker_lo = inside.clone().fold(f64::INFINITY, f64::min);
        let whisker_hi = inside.fold(f64::NEG_INFINITY, f64::max);
        let outliers: Vec<String> = s
            .outliers(&r.env_means)
            .into_iter()
            .map(|i| r.seeds[i].to_string())
            .collect();
        writeln!(
            out,
            "{},summary,,{},{},{},{},{},{},{whisker_lo},{whisker_hi},{}",
            r.agent,
            s.mean,
            s.median,
            s.q1,
            s.q3,
            s.min,
            s.max,
            outliers.join(";")
        )?;
    }
    Ok(())
}

/// Reads `(episode, mean)` pairs from an eval_log.csv.
pub fn parse_eval_log(text: &str) -> Result<Vec<(u64, f64)>> {
    let bad = |line: &str| crate::Error::Config(format!("malformed eval log line: {line}"));
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let mut cols = line.split(',');
            let ep = cols.next().and_then(|c| c.parse().ok()).ok_or_else(|| bad(line))?;
            let _step = cols.next();
            let mean = cols.next().and_then(|c| c.parse().ok()).ok_or_else(|| bad(line))?;
            Ok((ep, mean))
        })
        .collect()
}

/// Learning-curve bands over several runs, per evaluation episode. Episodes
/// missing from some runs use the runs that have them.
pub fn aggregate_bands(runs: &[Vec<(u64, f64)>]) -> Vec<(u64, usize, Band)> {
    let mut episodes: Vec<u64> = runs.iter().flatten().map(|&(e, _)| e).collect();
    episodes.sort_unstable();
    episodes.dedup();
    episodes
        .into_iter()
        .map(|e| {
            let vals: Vec<f64> = runs
                .iter()
                .filter_map(|r| r.iter().find(|&&(ep, _)| ep == e).map(|&(_, v)| v))
                .collect();
            (e, vals.len(), Band::of(&vals))
        })
        .collect()
}

pub fn write_bands_csv<W: Write>(mut out: W, bands: &[(u64, usize, Band)]) -> io::Result<()> {
    writeln!(out, "{BANDS_HEADER}")?;
    for (e, n, b) in bands {
        writeln!(
            out,
            "{e},{n},{},{},{},{},{}",
            b.median, b.inner_lo, b.inner_hi, b.outer_lo, b.outer_hi
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::BaselineKind;

    #[test]
    fn benchmark_cardinality() {
        let cell = CellConfig::smoke();
        let agents: Vec<AgentSpec> = BaselineKind::ALL.into_iter().map(AgentSpec::Baseline).collect();
        let seeds: Vec<u64> = (100..112).collect();
        let reports = run_benchmark(&agents, &cell, &seeds, 60, 2).unwrap();
        let mut buf = Vec::new();
        write_benchmark_csv(&mut buf, &reports).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 4 * 12 + 4);
        assert_eq!(lines.iter().filter(|l| l.contains(",summary,")).count(), 4);
        for l in &lines {
            assert_eq!(l.split(',').count(), 12, "{l}");
        }
    }

    #[test]
    fn outlier_seeds_are_listed() {
        let r = EvalReport::new(
            "x".into(),
            vec![10, 11, 12, 13, 14],
            vec![-1.0, -2.0, -3.0, -4.0, -100.0],
        );
        let mut buf = Vec::new();
        write_benchmark_csv(&mut buf, &[r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let summary = text.lines().last().unwrap();
        assert!(summary.ends_with(",-4,-1,14"), "{summary}");
    }

    #[test]
    fn bands_from_logs() {
        let log = "episode,step,mean,median,q1,q3,min,max,checkpoint\n10,100,-2.5,0,0,0,0,0,a\n20,200,-1,0,0,0,0,0,b\n";
        let run = parse_eval_log(log).unwrap();
        assert_eq!(run, vec![(10, -2.5), (20, -1.0)]);
        let bands = aggregate_bands(&[run.clone(), vec![(10, -0.5)]]);
        assert_eq!(bands.len(), 2);
        assert_eq!(bands[0].1, 2);
        assert_eq!(bands[0].2.median, -1.5);
        assert_eq!(bands[1].1, 1);
        assert!(parse_eval_log("h\nnot,a,number\n").is_err());
    }
}
