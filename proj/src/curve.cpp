#include "coralinv/curve.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "coralinv/csv.hpp"

namespace coralinv {

PiecewiseLinearCurve::PiecewiseLinearCurve(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  if (x_.size() != y_.size()) throw std::invalid_argument("curve: abscissa/value length mismatch");
  if (x_.empty()) throw std::invalid_argument("curve: no control points");
  for (std::size_t i = 1; i < x_.size(); ++i) {
    if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("curve: abscissae must be strictly increasing");
  }
}

double PiecewiseLinearCurve::operator()(double x) const {
  if (x <= x_.front()) return y_.front();
  if (x >= x_.back()) return y_.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin());
  const std::size_t lo = hi - 1;
  const double w = (x - x_[lo]) / (x_[hi] - x_[lo]);
  return y_[lo] + w * (y_[hi] - y_[lo]);
}

double PiecewiseLinearCurve::min_value() const { return *std::min_element(y_.begin(), y_.end()); }
double PiecewiseLinearCurve::max_value() const { return *std::max_element(y_.begin(), y_.end()); }

bool PiecewiseLinearCurve::is_non_increasing() const {
  return std::adjacent_find(y_.begin(), y_.end(), std::less<>()) == y_.end();
}

bool PiecewiseLinearCurve::is_non_decreasing() const {
  return std::adjacent_find(y_.begin(), y_.end(), std::greater<>()) == y_.end();
}

PiecewiseLinearCurve read_curve_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.header.size() != 2) throw ParseError(path + ": curve files need exactly two columns");
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string where = path + " row " + std::to_string(r + 2);
    x.push_back(parse_double(table.rows[r][0], where));
    y.push_back(parse_double(table.rows[r][1], where));
  }
  try {
    return PiecewiseLinearCurve(std::move(x), std::move(y));
  } catch (const std::invalid_argument& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_curve_csv(const std::string& path, const PiecewiseLinearCurve& curve,
                     const std::string& x_name, const std::string& y_name) {
  std::ostringstream out;
  out << x_name << ',' << y_name << '\n';
  for (std::size_t i = 0; i < curve.abscissae().size(); ++i) {
    out << format_double(curve.abscissae()[i]) << ',' << format_double(curve.values()[i]) << '\n';
  }
  write_text_file(path, out.str());
}

}  // namespace coralinv
