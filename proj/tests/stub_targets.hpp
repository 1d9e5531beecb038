#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "coralinv/samplers.hpp"

namespace testing {

// Uniform prior on a box, likelihood supplied by a callback.
class BoxTarget : public coralinv::Target {
 public:
  using LogL = std::function<double(std::span<const double>)>;
  BoxTarget(std::vector<double> lo, std::vector<double> hi, std::vector<double> sigma, LogL f)
      : lo_(std::move(lo)), hi_(std::move(hi)), sigma_(std::move(sigma)), f_(std::move(f)) {}

  std::size_t dimension() const override { return lo_.size(); }
  std::vector<std::string> coordinate_names() const override {
    std::vector<std::string> n;
    for (std::size_t i = 0; i < lo_.size(); ++i) n.push_back("x" + std::to_string(i + 1));
    return n;
  }
  std::vector<double> sample_prior(coralinv::Rng& rng) const override {
    std::vector<double> x(lo_.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = lo_[i] + (hi_[i] - lo_[i]) * coralinv::uniform01(rng);
    return x;
  }
  double log_prior(std::span<const double> x) const override {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] < lo_[i] || x[i] > hi_[i]) return -INFINITY;
    }
    return 0.0;
  }
  coralinv::LogLikelihoodValue log_likelihood(std::span<const double> x) const override {
    const double v = f_(x);
    return {v, std::isfinite(v)};
  }
  std::unique_ptr<coralinv::Proposal> make_proposal() const override {
    return std::make_unique<coralinv::BoxRandomWalk>(sigma_, lo_, hi_);
  }

 private:
  std::vector<double> lo_, hi_, sigma_;
  LogL f_;
};

}  // namespace testing
