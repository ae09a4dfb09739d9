#pragma once

#include <string>

namespace dml {

/// sign(v) * log(1 + |v|/theta). Linear near zero, logarithmic in the tails;
/// maps 0 to exactly 0.
double symlog_value(double v, double theta = 1e-3);

/// Renders one self-contained SVG line chart per trajectory series of a
/// training-log CSV (loss, active_ratio, grad_norm) into out_dir, named
/// loss.svg / active_ratio.svg / grad_norm.svg. With symlog = true the y
/// values pass through symlog_value before plotting.
void render_charts(const std::string& log_csv_path, const std::string& out_dir,
                   bool symlog = false);

}  // namespace dml
