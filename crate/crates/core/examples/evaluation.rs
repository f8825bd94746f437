//! Graded nDCG for single predictions and the latency model behind the
//! progress bar.
//!
//! cargo run --example evaluation

use signdict::eval::{dcg, dcg_oracle, grades, latency_fit, ndcg, parse_latency_csv, NdcgParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for list in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.5, 1.0, 0.0]] {
        let g = grades(&list)?;
        let fast = ndcg(&g, NdcgParams::new(3)?)?;
        let brute = dcg_oracle(&g, 3)?;
        println!("{list:?}: dcg {:.6}  ndcg {:.6}  (brute force {:.6})", dcg(&g), fast, brute.ndcg);
    }

    let points = parse_latency_csv(include_str!("../fixtures/latency_points.csv"))?;
    let m = latency_fit(&points)?;
    println!(
        "{} measurements: time = {:.4} x length + {:.4} s (r² {:.4})",
        points.len(),
        m.slope,
        m.intercept,
        m.r_squared
    );
    for secs in [2.0, 5.0, 7.5] {
        println!("  a {secs:.1} s video is expected to take {:.2} s", m.predict(secs));
    }
    Ok(())
}
