// Copyright 2026 The Looking Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "looking/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

#include "looking/matching.hpp"

namespace looking
{

namespace
{

constexpr std::uint64_t kMantissaLimit = std::uint64_t{1} << 53;

class ExactSum
{
public:
  void add(std::uint64_t p, std::uint64_t q)
  {
    if (exact_) {
      using u128 = unsigned __int128;
      const std::uint64_t g = std::gcd(den_, q);
      const u128 den = static_cast<u128>(den_ / g) * q;
      const u128 num = static_cast<u128>(num_) * (q / g) + static_cast<u128>(p) * (den_ / g);
      const u128 r = gcd128(num, den);
      if (num / r < kMantissaLimit && den / r < kMantissaLimit) {
        num_ = static_cast<std::uint64_t>(num / r);
        den_ = static_cast<std::uint64_t>(den / r);
        return;
      }
      exact_ = false;
      approx_ = static_cast<double>(num_) / static_cast<double>(den_);
    }
    approx_ += static_cast<double>(p) / static_cast<double>(q);
  }

  double divided_by(std::uint64_t n) const
  {
    if (exact_) {
      const std::uint64_t g = std::gcd(num_, n);
      const auto den = static_cast<unsigned __int128>(den_) * (n / g);
      if (den < kMantissaLimit) {
        return static_cast<double>(num_ / g) / static_cast<double>(den);
      }
      return static_cast<double>(num_) / static_cast<double>(den_) / static_cast<double>(n);
    }
    return approx_ / static_cast<double>(n);
  }

private:
  static unsigned __int128 gcd128(unsigned __int128 a, unsigned __int128 b)
  {
    while (b != 0) {
      const auto t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  bool exact_{true};
  std::uint64_t num_{0};
  std::uint64_t den_{1};
  double approx_{0.0};
};

}  // namespace

double average_precision(std::span<const double> scores, std::span<const int> labels)
{
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("average_precision: scores and labels differ in length");
  }
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0 || positives == labels.size()) {
    throw std::invalid_argument("average_precision needs both positive and negative instances");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // Sum of precisions at the positive ranks, kept as an exact fraction while
  // it fits a double mantissa so the result is correctly rounded.
  ExactSum sum;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] == 1) {
      ++hits;
      sum.add(hits, rank + 1);
    }
  }
  return sum.divided_by(positives);
}

double average_precision(std::span<const ScoredInstance> items)
{
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(items.size());
  labels.reserve(items.size());
  for (const auto & it : items) {
    scores.push_back(it.score);
    labels.push_back(it.label);
  }
  return average_precision(scores, labels);
}

BalancedAp balanced_average_precision(std::span<const ScoredInstance> items, std::size_t n_seeds)
{
  std::vector<int> labels;
  labels.reserve(items.size());
  for (const auto & it : items) {
    labels.push_back(it.label);
  }
  BalancedAp out;
  for (const auto & indices : balanced_samples(labels, n_seeds)) {
    std::vector<ScoredInstance> subset;
    subset.reserve(indices.size());
    for (const auto i : indices) {
      subset.push_back(items[i]);
    }
    out.seeds.push_back(average_precision(subset));
  }
  const double n = static_cast<double>(out.seeds.size());
  out.mean = std::accumulate(out.seeds.begin(), out.seeds.end(), 0.0) / n;
  double var = 0.0;
  for (const double ap : out.seeds) {
    var += (ap - out.mean) * (ap - out.mean);
  }
  out.std = std::sqrt(var / n);
  return out;
}

std::size_t count_recalled(std::span<const Box> gt, std::span<const Box> detections)
{
  return match_boxes(gt, detections, kRecallIouThreshold).size();
}

double detection_recall(std::span<const Box> gt, std::span<const Box> detections)
{
  if (gt.empty()) {
    throw std::invalid_argument("detection_recall needs at least one ground-truth box");
  }
  return static_cast<double>(count_recalled(gt, detections)) / static_cast<double>(gt.size());
}

double nearest_rank_percentile(std::span<const double> values, double percent)
{
  if (values.empty()) {
    throw std::invalid_argument("percentile of an empty set");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(percent / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

QuartileReport quartile_breakdown(std::span<const ScoredInstance> items, std::size_t n_seeds)
{
  if (items.size() < 4) {
    throw std::invalid_argument("quartile breakdown needs at least 4 instances");
  }
  std::vector<double> heights;
  heights.reserve(items.size());
  for (const auto & it : items) {
    heights.push_back(it.gt_height);
  }
  QuartileReport report;
  report.boundaries = {
    nearest_rank_percentile(heights, 25.0), nearest_rank_percentile(heights, 50.0),
    nearest_rank_percentile(heights, 75.0)};
  report.degenerate =
    report.boundaries[0] == report.boundaries[1] || report.boundaries[1] == report.boundaries[2];

  std::array<std::vector<ScoredInstance>, 4> groups;
  for (const auto & it : items) {
    std::size_t q = 3;
    for (std::size_t b = 0; b < 3; ++b) {
      if (it.gt_height <= report.boundaries[b]) {
        q = b;
        break;
      }
    }
    groups[q].push_back(it);
  }

  for (std::size_t q = 0; q < 4; ++q) {
    QuartileBucket bucket;
    bucket.lo_px = q == 0 ? 0.0 : report.boundaries[q - 1];
    if (q < 3) {
      bucket.hi_px = report.boundaries[q];
    }
    bucket.n = groups[q].size();
    const auto pos = std::count_if(groups[q].begin(), groups[q].end(), [](const auto & s) { return s.label == 1; });
    if (groups[q].empty()) {
      bucket.note = "empty";
    } else if (pos == 0 || static_cast<std::size_t>(pos) == groups[q].size()) {
      bucket.note = "single class";
    } else {
      try {
        bucket.ap = balanced_average_precision(groups[q], n_seeds);
      } catch (const std::invalid_argument & e) {
        bucket.note = e.what();
      }
    }
    report.buckets.push_back(std::move(bucket));
  }
  return report;
}

}  // namespace looking
