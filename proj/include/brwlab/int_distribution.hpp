#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "brwlab/types.hpp"

namespace brw {

// Finitely supported law on {0, 1, 2, ...}. Stored sparsely, so laws such
// as "n children with probability 2/n" stay cheap for very large n.
class IntDistribution {
 public:
  static constexpr double kSumTolerance = 1e-12;
  // Supports up to this value also keep a dense copy for fast evaluation.
  static constexpr Count kDenseLimit = 1 << 16;

  struct Point {
    Count n = 0;
    double p = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
  };

  IntDistribution() : IntDistribution(std::vector<double>{1.0}) {}

  // probs[n] = P(n). Throws ValidationError on negative entries or a total
  // that misses 1 by more than kSumTolerance.
  explicit IntDistribution(std::vector<double> probs);

  // Sparse form; duplicates are summed and zeros dropped.
  static IntDistribution from_points(std::vector<Point> points);

  static IntDistribution point_mass(Count n);

  // Accepts "0:0.4,2:0.6".
  static IntDistribution parse(std::string_view text);

  // Geometric law P(i) = a^i / (1+a)^(i+1) with mean a, cut where both the
  // remaining tail mass and its first moment drop below tail_tolerance,
  // then renormalized. A nonzero cap forces the cut point and must itself
  // meet the mass tolerance.
  static IntDistribution geometric(double mean, std::size_t cap = 0,
                                   double tail_tolerance = 1e-12);

  double probability(Count n) const;
  // P(X >= n).
  double tail(Count n) const;
  Count support_max() const { return points_.back().n; }
  // Support points in increasing order, all with p > 0.
  const std::vector<Point>& points() const { return points_; }
  // Dense P(0..support_max). Throws ValidationError above kDenseLimit.
  const std::vector<double>& probabilities() const;
  double mean() const { return mean_; }
  double variance() const { return variance_; }
  // Probability generating function sum_n P(n) s^n.
  double pgf(double s) const;

  std::string to_string() const;

  friend bool operator==(const IntDistribution& a, const IntDistribution& b) {
    return a.points_ == b.points_;
  }

 private:
  struct Tag {};
  explicit IntDistribution(Tag) {}
  void finish();

  std::vector<Point> points_;
  // tails_[i] = P(X >= points_[i].n).
  std::vector<double> tails_;
  std::vector<double> dense_;
  double mean_ = 0.0;
  double variance_ = 0.0;
};

double total_variation(const IntDistribution& a, const IntDistribution& b);

}  // namespace brw
