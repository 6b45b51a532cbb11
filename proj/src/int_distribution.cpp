#include "brwlab/int_distribution.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>

namespace brw {

IntDistribution::IntDistribution(std::vector<double> probs) {
  if (probs.empty()) throw ValidationError("empty integer distribution");
  for (std::size_t n = 0; n < probs.size(); ++n) {
    if (!(probs[n] >= 0.0) || !std::isfinite(probs[n]))
      throw ValidationError("negative or non-finite probability");
    if (probs[n] > 0.0) points_.push_back(Point{n, probs[n]});
  }
  finish();
}

IntDistribution IntDistribution::from_points(std::vector<Point> points) {
  for (const auto& pt : points)
    if (!(pt.p >= 0.0) || !std::isfinite(pt.p))
      throw ValidationError("negative or non-finite probability");
  std::sort(points.begin(), points.end(),
            [](const Point& a, const Point& b) { return a.n < b.n; });
  IntDistribution d(Tag{});
  for (const auto& pt : points) {
    if (pt.p == 0.0) continue;
    if (!d.points_.empty() && d.points_.back().n == pt.n)
      d.points_.back().p += pt.p;
    else
      d.points_.push_back(pt);
  }
  d.finish();
  return d;
}

void IntDistribution::finish() {
  if (points_.empty()) throw ValidationError("integer distribution has no mass");
  double total = 0.0;
  for (const auto& pt : points_) total += pt.p;
  if (std::abs(total - 1.0) > kSumTolerance)
    throw ValidationError("integer distribution sums to " + std::to_string(total));
  tails_.assign(points_.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = points_.size(); i-- > 0;) {
    acc += points_[i].p;
    tails_[i] = acc;
  }
  long double m = 0, m2 = 0;
  for (const auto& pt : points_) {
    const long double n = static_cast<long double>(pt.n);
    m += n * pt.p;
    m2 += n * n * pt.p;
  }
  mean_ = static_cast<double>(m);
  variance_ = std::max(0.0, static_cast<double>(m2 - m * m));
  dense_.clear();
  if (support_max() <= kDenseLimit) {
    dense_.assign(static_cast<std::size_t>(support_max()) + 1, 0.0);
    for (const auto& pt : points_) dense_[static_cast<std::size_t>(pt.n)] = pt.p;
  }
}

IntDistribution IntDistribution::point_mass(Count n) {
  return from_points({Point{n, 1.0}});
}

IntDistribution IntDistribution::parse(std::string_view text) {
  std::map<Count, double> entries;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view item = text.substr(pos, end - pos);
    pos = end + 1;
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) continue;
    std::size_t colon = item.find(':');
    if (colon == std::string_view::npos)
      throw ValidationError("expected n:p in distribution, got '" +
                            std::string(item) + "'");
    Count n = 0;
    auto [ptr, ec] =
        std::from_chars(item.data(), item.data() + colon, n);
    if (ec != std::errc() || ptr != item.data() + colon)
      throw ValidationError("bad count in '" + std::string(item) + "'");
    std::string prob(item.substr(colon + 1));
    char* stop = nullptr;
    double p = std::strtod(prob.c_str(), &stop);
    if (stop == prob.c_str() || *stop != '\0')
      throw ValidationError("bad probability in '" + std::string(item) + "'");
    entries[n] += p;
  }
  if (entries.empty()) throw ValidationError("empty distribution text");
  std::vector<Point> points;
  for (auto [n, p] : entries) points.push_back(Point{n, p});
  return from_points(std::move(points));
}

IntDistribution IntDistribution::geometric(double mean, std::size_t cap,
                                           double tail_tolerance) {
  if (!(mean > 0.0) || !std::isfinite(mean))
    throw ValidationError("geometric mean must be positive");
  const double r = mean / (1.0 + mean);
  // P(X > n) = r^(n+1).
  std::size_t needed = 0;
  if (r > 0.0) {
    double n = std::ceil(std::log(tail_tolerance) / std::log(r)) - 1.0;
    needed = static_cast<std::size_t>(std::max(0.0, n));
    // Also bound the first moment of the cut tail, E[X; X > n] =
    // r^(n+1) (n + 1 + mean), so the mean survives the cut as well.
    auto tail_moment = [&](std::size_t k) {
      const double kk = static_cast<double>(k) + 1.0;
      return std::pow(r, kk) * std::max(1.0, kk + mean);
    };
    while (tail_moment(needed) >= tail_tolerance) ++needed;
  }
  if (cap != 0) {
    if (std::pow(r, static_cast<double>(cap) + 1.0) >= tail_tolerance)
      throw ValidationError("geometric cap " + std::to_string(cap) +
                            " leaves tail mass above tolerance");
    needed = cap;
  }
  std::vector<double> probs(needed + 1);
  double term = 1.0 / (1.0 + mean);
  double total = 0.0;
  for (std::size_t i = 0; i <= needed; ++i) {
    probs[i] = term;
    total += term;
    term *= r;
  }
  for (double& p : probs) p /= total;
  return IntDistribution(std::move(probs));
}

double IntDistribution::probability(Count n) const {
  if (n < dense_.size()) return dense_[static_cast<std::size_t>(n)];
  auto it = std::lower_bound(points_.begin(), points_.end(), n,
                             [](const Point& pt, Count v) { return pt.n < v; });
  return it != points_.end() && it->n == n ? it->p : 0.0;
}

double IntDistribution::tail(Count n) const {
  auto it = std::lower_bound(points_.begin(), points_.end(), n,
                             [](const Point& pt, Count v) { return pt.n < v; });
  return it == points_.end() ? 0.0 : tails_[static_cast<std::size_t>(it - points_.begin())];
}

const std::vector<double>& IntDistribution::probabilities() const {
  if (dense_.empty())
    throw ValidationError("support too large for a dense probability vector");
  return dense_;
}

double IntDistribution::pgf(double s) const {
  if (!dense_.empty()) {
    double acc = 0.0;
    for (std::size_t n = dense_.size(); n-- > 0;) acc = acc * s + dense_[n];
    return acc;
  }
  double acc = 0.0;
  for (const auto& pt : points_) acc += pt.p * std::pow(s, static_cast<double>(pt.n));
  return acc;
}

std::string IntDistribution::to_string() const {
  std::string out;
  char buf[64];
  for (const auto& pt : points_) {
    std::snprintf(buf, sizeof buf, "%s%llu:%.17g", out.empty() ? "" : ",",
                  static_cast<unsigned long long>(pt.n), pt.p);
    out += buf;
  }
  return out;
}

double total_variation(const IntDistribution& a, const IntDistribution& b) {
  const auto& pa = a.points();
  const auto& pb = b.points();
  std::size_t i = 0, j = 0;
  double acc = 0.0;
  while (i < pa.size() || j < pb.size()) {
    if (j == pb.size() || (i < pa.size() && pa[i].n < pb[j].n)) {
      acc += pa[i++].p;
    } else if (i == pa.size() || pb[j].n < pa[i].n) {
      acc += pb[j++].p;
    } else {
      acc += std::abs(pa[i++].p - pb[j++].p);
    }
  }
  return acc / 2.0;
}

}  // namespace brw
