#pragma once

#include <span>
#include <string>
#include <vector>

namespace coralinv {

/// Piecewise-linear curve through tabulated control points.
///
/// Abscissae are strictly increasing. Evaluation outside the tabulated range
/// clamps to the nearest end value.
class PiecewiseLinearCurve {
 public:
  PiecewiseLinearCurve() = default;
  PiecewiseLinearCurve(std::vector<double> x, std::vector<double> y);

  double operator()(double x) const;

  std::span<const double> abscissae() const { return x_; }
  std::span<const double> values() const { return y_; }
  bool empty() const { return x_.empty(); }
  double min_x() const { return x_.front(); }
  double max_x() const { return x_.back(); }
  double min_value() const;
  double max_value() const;

  bool is_non_increasing() const;
  bool is_non_decreasing() const;

 private:
  std::vector<double> x_;
  std::vector<double> y_;
};

/// Reads a two-column CSV (abscissa, value) with a mandatory header row.
PiecewiseLinearCurve read_curve_csv(const std::string& path);
void write_curve_csv(const std::string& path, const PiecewiseLinearCurve& curve,
                     const std::string& x_name, const std::string& y_name);

}  // namespace coralinv
