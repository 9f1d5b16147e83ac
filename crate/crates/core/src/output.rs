//! CSV report files.

use std::io::Write;

use crate::error::Result;
use crate::eval::{EvalReport, SummaryRow};
use crate::ingest::CityId;
use crate::similarity::{Criterion, NeighborRanking};
use crate::eval::ForecastPoint;

pub const REPORTS_HEADER: &str =
    "city_id,disease,algorithm,criterion,k,anomalous,train_mae,train_mase,test_mae,test_mase,scale,params";
pub const SUMMARY_HEADER: &str =
    "disease,algorithm,criterion,k,stratum,mean_test_mase,std_test_mase,mean_train_mase,std_train_mase,n_cities";
pub const PLOTDATA_HEADER: &str = "disease,criterion,k,stratum,mean_mase,std_mase";
pub const NEIGHBORS_HEADER: &str = "target_id,rank,neighbor_id,distance,criterion";
pub const FORECASTS_HEADER: &str = "city_id,week,actual,predicted";

fn header<W: Write>(out: W, header: &str) -> Result<csv::Writer<W>> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header.split(','))?;
    Ok(w)
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), num)
}

pub fn write_reports<W: Write>(out: W, reports: &[EvalReport]) -> Result<()> {
    let mut w = header(out, REPORTS_HEADER)?;
    for r in reports {
        w.write_record([
            r.city.to_string(),
            r.disease.clone(),
            r.algorithm.clone(),
            r.criterion.to_string(),
            r.k_neighbors.to_string(),
            r.anomalous.to_string(),
            num(r.train_mae),
            opt(r.train_mase),
            num(r.test_mae),
            opt(r.test_mase),
            num(r.scale),
            r.params.as_ref().map(|p| p.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = header(out, SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.disease.clone(),
            r.algorithm.clone(),
            r.criterion.to_string(),
            r.k_neighbors.to_string(),
            r.stratum_label(),
            num(r.mean_mase),
            num(r.std_mase),
            num(r.mean_train_mase),
            num(r.std_train_mase),
            r.n_cities.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Summary rows of one algorithm per disease, without the algorithm column.
pub fn write_plotdata<W: Write>(out: W, rows: &[&SummaryRow]) -> Result<()> {
    let mut w = header(out, PLOTDATA_HEADER)?;
    for r in rows {
        w.write_record([
            r.disease.clone(),
            r.criterion.to_string(),
            r.k_neighbors.to_string(),
            r.stratum_label(),
            num(r.mean_mase),
            num(r.std_mase),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// The first `depth` neighbors of every ranking, rank starting at 1.
pub fn write_neighbors<W: Write>(out: W, rankings: &[(Criterion, Vec<&NeighborRanking>)], depth: usize) -> Result<()> {
    let mut w = header(out, NEIGHBORS_HEADER)?;
    for (criterion, list) in rankings {
        for ranking in list {
            for (rank, (city, distance)) in ranking.ordered.iter().take(depth).enumerate() {
                w.write_record([
                    ranking.target.to_string(),
                    (rank + 1).to_string(),
                    city.to_string(),
                    num(*distance),
                    criterion.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_forecasts<W: Write>(out: W, traces: &[(CityId, Vec<ForecastPoint>)]) -> Result<()> {
    let mut w = header(out, FORECASTS_HEADER)?;
    for (city, points) in traces {
        for p in points {
            w.write_record([city.to_string(), p.week.to_string(), num(p.actual), num(p.predicted)])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
