//! Gnuplot scripts. Scripts sit next to the tables they draw and name them by
//! relative path only, so a result directory can be moved as a whole.

use std::fmt::Write as _;

/// Script preamble shared by every figure: comma-separated input whose first
/// non-comment line holds the column names.
pub fn preamble(title: &str, output: &str) -> String {
    format!(
        "# {title}\n\
         set datafile separator ','\n\
         set datafile commentschars '#'\n\
         set key autotitle columnhead\n\
         set terminal pngcairo size 1200,800\n\
         set output '{output}'\n"
    )
}

pub fn spectrum(states: usize) -> String {
    let mut s = preamble("potential, levels and eigenfunctions", "spectrum.png");
    s.push_str(
        "set multiplot layout 2,2\n\
         stats 'states.csv' using 1 nooutput\n\
         x_lo = STATS_min\n\
         x_hi = STATS_max\n\
         set title 'potential and levels'\n\
         set xlabel 'x'\n\
         set ylabel 'E'\n\
         plot 'states.csv' using 1:2 with lines lw 2 title 'V(x)', \\\n\
         \x20    'spectrum.csv' using (x_lo):2:(x_hi - x_lo):(0) with vectors nohead lc rgb 'gray' notitle\n",
    );
    let _ = write!(
        s,
        "set title 'eigenfunctions'\n\
         set ylabel 'psi'\n\
         plot for [i=3:{}] 'states.csv' using 1:i with lines\n",
        states + 2
    );
    s.push_str(
        "set title 'level differences'\n\
         set xlabel 'n'\n\
         set ylabel 'E_{n+1} - E_n'\n\
         plot 'levels.csv' using 1:3 with points pt 7 ps 0.5, \\\n\
         \x20    'levels.csv' using 1:4 with lines lw 2\n\
         set title 'density of states'\n\
         set xlabel 'E'\n\
         set ylabel 'rho'\n\
         plot 'dos.csv' using 1:2 with lines lw 2\n\
         unset multiplot\n",
    );
    s
}

pub fn otoc(thermal: bool) -> String {
    let mut s = preamble("microcanonical and thermal correlators", "otoc.png");
    s.push_str(
        "set multiplot layout 1,3\n\
         set logscale y\n\
         set xlabel 't'\n\
         set title 'c_m(t)'\n\
         stats 'otoc_micro.csv' using 1 nooutput\n\
         plot for [i=2:STATS_columns] 'otoc_micro.csv' using 1:i with lines notitle\n",
    );
    if thermal {
        s.push_str(
            "set title 'C_beta(t)'\n\
             stats 'otoc_thermal.csv' using 1 nooutput\n\
             plot for [i=2:STATS_columns] 'otoc_thermal.csv' using 1:i with lines\n",
        );
    }
    s.push_str(
        "unset logscale y\n\
         set title 'fitted growth rate'\n\
         set xlabel 'm'\n\
         plot 'growth.csv' using 1:3 with linespoints pt 7\n\
         unset multiplot\n",
    );
    s
}

/// One curve per echo table, all on one chart.
pub fn echo(files: &[String]) -> String {
    let mut s = preamble("Loschmidt echo", "echo.png");
    s.push_str("set xlabel 't'\nset ylabel 'M(t)'\nset yrange [0:1.05]\nplot ");
    let curves: Vec<String> =
        files.iter().map(|f| format!("'{f}' using 1:2 with lines title '{}'", f.trim_end_matches(".csv"))).collect();
    s.push_str(&curves.join(", \\\n     "));
    s.push('\n');
    s
}

pub fn phase_portrait(trajectories: usize) -> String {
    let mut s = preamble("phase portrait", "phase.png");
    let _ = write!(
        s,
        "set xlabel 'x'\n\
         set ylabel 'p'\n\
         plot for [i=0:{}] sprintf('phase_%d.csv', i) using 2:3 with lines notitle, \\\n\
         \x20    'fixed_points.csv' using 1:(0) with points pt 7 ps 1.5 title 'fixed points'\n",
        trajectories.saturating_sub(1)
    );
    s
}

pub fn regions(with_locus: bool) -> String {
    let mut s = preamble("fixed-point count over (Lambda, a1)", "regions.png");
    s.push_str(
        "set xlabel 'Lambda'\n\
         set ylabel 'a1'\n\
         set view map\n\
         set palette maxcolors 5\n\
         plot 'regions.csv' using 2:1:3 with image",
    );
    if with_locus {
        s.push_str(", \\\n     'locus.csv' using 1:2 with lines lw 2 lc rgb 'black'");
    }
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripts_reference_tables_relatively_and_embed_no_data() {
        let scripts = [spectrum(10), otoc(true), echo(&["a.csv".into(), "b.csv".into()]), phase_portrait(3), regions(true)];
        for s in scripts {
            let quoted: Vec<&str> = s.split('\'').skip(1).step_by(2).collect();
            assert!(quoted.iter().all(|q| !q.starts_with('/') && !q.contains("..")), "{s}");
            assert!(!s.contains("'-'") && !s.contains("<<"), "inline data in {s}");
        }
        assert!(echo(&["harmonic.csv".into()]).contains("'harmonic.csv' using 1:2"));
    }
}
