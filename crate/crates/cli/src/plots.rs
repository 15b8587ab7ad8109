//! gnuplot scripts for the two scaling plots of a run.
//!
//! The scripts read `records.csv` from the run directory by column position,
//! so they stay valid as long as the column order of the records file does.

use anderson_core::scaling::{FitQuantity, FitResult};

use crate::store::{COLUMNS, RECORDS_FILE};

fn column(name: &str) -> usize {
    COLUMNS.iter().position(|c| *c == name).expect("known column") + 1
}

fn header(title: &str, output: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 900,600\n\
         set output '{output}'\n\
         set title '{title}'\n\
         set xlabel 'ln L'\n\
         set key left top\n"
    )
}

/// Points of one quantity at energy `energy`, skipping the header row.
fn points(energy: f64, name: &str, label: &str) -> String {
    format!(
        "'{RECORDS_FILE}' skip 1 using (log(column({l}))):(column({e}) == {energy:?} ? column({q}) : NaN) \
         with points pt 7 title '{label}'",
        l = column("L"),
        e = column("E"),
        q = column(name),
    )
}

/// `F` against `ln L` with the fitted line and a line of slope `γ` through
/// the fitted intercept.
pub fn f_script(energy: f64, gamma: f64, fit: Option<&FitResult>, stem: &str) -> String {
    let mut s = header(&format!("F vs ln L at E = {energy}"), &format!("{stem}.png"));
    let intercept = fit.map_or(0.0, |f| f.intercept);
    s += &format!("gamma = {gamma:e}\nc = {intercept:e}\n");
    let mut series = vec![points(energy, "F", "F")];
    if let Some(f) = fit.filter(|f| f.quantity == FitQuantity::FVsLnL) {
        s += &format!("a = {:e}\nb = {:e}\n", f.intercept, f.slope);
        series.push("a + b*x with lines title sprintf('fit, slope %.4g', b)".into());
    }
    series.push("c + gamma*x with lines dt 2 title sprintf('gamma ln L, gamma = %.4g', gamma)".into());
    s += &format!("plot {}\n", series.join(", \\\n     "));
    s
}

/// `ln|S|` against `ln L` with a line of slope `-γ/2`.
pub fn log_s_script(energy: f64, gamma: f64, fit: Option<&FitResult>, stem: &str) -> String {
    let mut s = header(&format!("ln|S| vs ln L at E = {energy}"), &format!("{stem}.png"));
    let intercept = fit.map_or(0.0, |f| f.intercept);
    s += &format!("gamma = {gamma:e}\nc = {intercept:e}\n");
    let series = [
        points(energy, "log_abs_overlap", "ln|S|"),
        "c - 0.5*gamma*x with lines dt 2 title sprintf('-gamma/2 ln L, gamma = %.4g', gamma)".into(),
    ];
    s += &format!("plot {}\n", series.join(", \\\n     "));
    s
}
