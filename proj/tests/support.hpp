#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testing {

// Closed-form logistic P(t) for dP/dt = e P + a P^2 with a < 0.
inline double logistic(double e, double a, double p0, double t) {
  const double k = e / -a;
  return k / (1.0 + (k / p0 - 1.0) * std::exp(-e * t));
}

// Log of the plain product of floored probabilities, computed without the
// library's helpers.
inline double brute_force_loglik(const std::vector<std::vector<double>>& pi, const std::vector<int>& labels,
                                 double kappa) {
  double product = 1.0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const double k = static_cast<double>(pi[t].size());
    product *= (pi[t][static_cast<std::size_t>(labels[t])] + kappa) / (1.0 + k * kappa);
  }
  return std::log(product);
}

// Trapezoid written out case by case.
inline double trapezoid(double f1, double f2, double f3, double f4, double x) {
  if (x >= f2 && x <= f3) return 1.0;
  if (x <= f1 || x >= f4) return 0.0;
  if (x < f2) return (x - f1) / (f2 - f1);
  return (f4 - x) / (f4 - f3);
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("coralinv_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace testing
