use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::hlip::DiscreteState;
use crate::learn::S2SModel;
use crate::plant::{PlantEpisode, TraceSample};
use crate::sets::BoxSet;
use crate::textfmt::{fmt_f64, write_atomic};

pub const CSV_HEADER: [&str; 15] = [
    "k", "p", "v", "u_cmd", "u_real", "u_e", "e_p", "e_v", "w_hat_p", "w_hat_v", "F_push", "margin_u", "margin_xp",
    "margin_xv", "controller",
];

#[derive(Clone, Debug, PartialEq)]
pub struct StepLog {
    pub k: usize,
    pub x_pre: DiscreteState,
    pub u_cmd: f64,
    pub u_real: f64,
    pub u_e: f64,
    pub e: Vector2<f64>,
    /// disturbance that produced `e_k`: `e_k - Ā e_{k-1} - B̄ u^e_{k-1}`
    pub w_hat: Vector2<f64>,
    pub push_force: f64,
    pub margin_u: f64,
    pub margin_xp: f64,
    pub margin_xv: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeLog {
    pub controller: String,
    pub steps: Vec<StepLog>,
    pub trace: Vec<TraceSample>,
    pub fell: bool,
}

/// Error coordinates and margins around the orbit `(x*, u*)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogFrame<'a> {
    pub model: &'a S2SModel,
    pub x_star: DiscreteState,
    pub u_star: f64,
    pub xe: &'a BoxSet,
    pub ue: &'a BoxSet,
}

impl EpisodeLog {
    pub fn from_episode(ep: &PlantEpisode, controller: &str, frame: &LogFrame<'_>) -> Self {
        let mut steps = Vec::with_capacity(ep.steps.len());
        let mut prev: Option<(Vector2<f64>, f64)> = None;
        for r in &ep.steps {
            let e = (r.x_pre - frame.x_star).to_vector();
            let u_e = r.u_real - frame.u_star;
            let w_hat = match prev {
                Some((pe, pu)) => e - frame.model.abar * pe - frame.model.bbar * pu,
                None => e,
            };
            let xm = frame.xe.margins(e.as_slice());
            steps.push(StepLog {
                k: r.k,
                x_pre: r.x_pre,
                u_cmd: r.u_cmd,
                u_real: r.u_real,
                u_e,
                e,
                w_hat,
                push_force: r.push_force,
                margin_u: frame.ue.margins(&[u_e])[0],
                margin_xp: xm[0],
                margin_xv: xm[1],
            });
            prev = Some((e, u_e));
        }
        Self { controller: controller.to_string(), steps, trace: ep.trace.clone(), fell: ep.fell }
    }

    pub fn max_abs_u(&self) -> f64 {
        self.steps.iter().map(|s| s.u_cmd.abs()).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = CSV_HEADER.join(",");
        s.push('\n');
        for r in &self.steps {
            let nums = [
                r.x_pre.p, r.x_pre.v, r.u_cmd, r.u_real, r.u_e, r.e[0], r.e[1], r.w_hat[0], r.w_hat[1], r.push_force,
                r.margin_u, r.margin_xp, r.margin_xv,
            ];
            let _ = write!(s, "{}", r.k);
            for v in nums {
                let _ = write!(s, ",{}", fmt_f64(v));
            }
            let _ = writeln!(s, ",{}", self.controller);
        }
        s
    }

    /// Inverse of [`EpisodeLog::to_csv`]; traces are not stored in CSV.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse { line: 1, msg: "missing header".into() })?;
        if header != CSV_HEADER.join(",") {
            return Err(Error::Parse { line: 1, msg: "unexpected CSV header".into() });
        }
        let mut log = EpisodeLog::default();
        for (i, line) in lines.enumerate() {
            let bad = |msg: &str| Error::Parse { line: i + 2, msg: msg.to_string() };
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != CSV_HEADER.len() {
                return Err(bad("expected 15 columns"));
            }
            let k = cols[0].parse().map_err(|_| bad("bad step index"))?;
            let n: Vec<f64> = cols[1..14]
                .iter()
                .map(|c| c.parse::<f64>().map_err(|_| bad("bad number")))
                .collect::<Result<_>>()?;
            log.controller = cols[14].to_string();
            log.steps.push(StepLog {
                k,
                x_pre: DiscreteState::new(n[0], n[1]),
                u_cmd: n[2],
                u_real: n[3],
                u_e: n[4],
                e: Vector2::new(n[5], n[6]),
                w_hat: Vector2::new(n[7], n[8]),
                push_force: n[9],
                margin_u: n[10],
                margin_xp: n[11],
                margin_xv: n[12],
            });
        }
        Ok(log)
    }
}

pub fn emit_csv(log: &EpisodeLog, path: &Path) -> Result<()> {
    write_atomic(path, log.to_csv().as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::StepRecord;
    use nalgebra::Matrix2;

    fn frame_parts() -> (S2SModel, BoxSet, BoxSet) {
        let model = S2SModel::new(Matrix2::new(1.0, 0.4, 0.0, 1.0), Vector2::new(-1.0, 0.0), Vector2::zeros());
        (model, BoxSet::symmetric(&[0.5, 2.0]).unwrap(), BoxSet::interval(-1.1, 0.3).unwrap())
    }

    #[test]
    fn empty_log_is_header_only() {
        let log = EpisodeLog { controller: "sls".into(), ..Default::default() };
        let csv = log.to_csv();
        assert_eq!(csv, format!("{}\n", CSV_HEADER.join(",")));
        assert_eq!(CSV_HEADER.len(), 15);
    }

    #[test]
    fn csv_round_trip_and_margins() {
        let (model, xe, ue) = frame_parts();
        let frame = LogFrame { model: &model, x_star: DiscreteState::new(0.1, 1.0), u_star: 0.4, xe: &xe, ue: &ue };
        let steps: Vec<StepRecord> = (0..5)
            .map(|k| StepRecord {
                k,
                x_pre: DiscreteState::new(0.1 + 0.01 * k as f64, 1.0 / 3.0 + k as f64),
                u_cmd: 0.4 + 0.1 * k as f64,
                u_real: 0.4 + 0.1 * k as f64,
                push_force: if k == 2 { 50.0 } else { 0.0 },
                duration: 0.4,
            })
            .collect();
        let ep = PlantEpisode { steps, fell: false, trace: vec![] };
        let log = EpisodeLog::from_episode(&ep, "sls", &frame);
        assert_eq!(log.steps[0].w_hat, log.steps[0].e);
        let s1 = &log.steps[1];
        let w = s1.e - model.abar * log.steps[0].e - model.bbar * log.steps[0].u_e;
        assert_eq!(s1.w_hat, w);
        assert!((log.steps[3].margin_u - (0.3 - 0.3)).abs() < 1e-12);
        assert!((log.steps[1].margin_xv - (2.0 - 1.0 / 3.0)).abs() < 1e-12);

        let csv = log.to_csv();
        assert!(csv.lines().all(|l| l.split(',').count() == 15));
        assert!(!csv.contains('\r'));
        let back = EpisodeLog::from_csv(&csv).unwrap();
        assert_eq!(back.steps, log.steps);

        let mut rdr = csv::Reader::from_reader(csv.as_bytes());
        assert_eq!(rdr.headers().unwrap().len(), 15);
        assert_eq!(rdr.records().count(), 5);
    }
}
