//! gnuplot scripts that regenerate the figures from the written CSV files.
//! Run them from the output directory: `gnuplot fig1.gp`.

pub fn trajectory(stem: &str) -> String {
    format!(
        r#"set datafile separator ","
set terminal pngcairo size 900,900
set output "{stem}.png"
set multiplot layout 3,1
set xlabel "t"
set ylabel "f, y1"
plot "{stem}.csv" using 1:2 with lines title "f", "" using 1:4 with lines title "y1"
set ylabel "f_dot, y2"
plot "{stem}.csv" using 1:3 with lines title "f_dot", "" using 1:5 with lines title "y2"
set ylabel "|x|"
set logscale y
plot "{stem}.csv" using 1:(abs($6)) with lines title "|x1|", "" using 1:(abs($7)) with lines title "|x2|"
unset multiplot
"#
    )
}

pub fn fig2() -> String {
    r#"set datafile separator ","
set terminal pngcairo size 800,600
set output "fig2.png"
set logscale xy
set xlabel "noise amplitude"
set ylabel "sup |x2| over the steady-state window"
set key top left
plot "fig2.csv" using 1:2 every ::1 with linespoints title "fixed-time", "" using 1:3 every ::1 with linespoints title "super-twisting"
"#
    .to_string()
}

pub fn fig3() -> String {
    r#"set datafile separator ","
set terminal pngcairo size 800,600
set output "fig3.png"
set xlabel "initial slope c"
set ylabel "convergence time tau"
set yrange [0:*]
plot for [d in "ured exp"] "fig3.csv" using 2:(strcol(1) eq d ? $3 : NaN) with linespoints title d, 1 with lines dashtype 2 title "T"
"#
    .to_string()
}
