//
// Copyright 2026 The FedFair Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#include "fedfair/quantile_sketch.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "absl/status/status.h"
#include "fmt/printf.h"
#include "fedfair/wire.h"

namespace fedfair {
namespace {

// k1 scale: K(q) = d / (2 pi) * asin(2q - 1), and its inverse.
double ScaleK(double q, double compression) {
  return compression / (2.0 * std::numbers::pi) * std::asin(2.0 * q - 1.0);
}

double ScaleQ(double k, double compression) {
  double bound = compression / 4.0;
  k = std::clamp(k, -bound, bound);
  return (std::sin(2.0 * std::numbers::pi * k / compression) + 1.0) / 2.0;
}

}  // namespace

absl::StatusOr<QuantileSketch> QuantileSketch::Build(
    std::span<const double> values, uint32_t compression) {
  if (compression < kMinCompression) {
    return absl::InvalidArgumentError(
        fmt::sprintf("compression %d below %d", compression,
                        kMinCompression));
  }
  std::vector<Centroid> points;
  points.reserve(values.size());
  for (double v : values) {
    if (!std::isfinite(v)) {
      return absl::InvalidArgumentError("non-finite value in sketch input");
    }
    points.push_back({v, 1.0});
  }
  QuantileSketch sketch(compression);
  sketch.Compress(std::move(points));
  return sketch;
}

absl::StatusOr<QuantileSketch> QuantileSketch::Merge(const QuantileSketch& a,
                                                     const QuantileSketch& b) {
  if (a.compression_ != b.compression_) {
    return absl::InvalidArgumentError(
        fmt::sprintf("compression mismatch: %d vs %d", a.compression_,
                        b.compression_));
  }
  if (b.empty()) return a;
  if (a.empty()) return b;
  std::vector<Centroid> all = a.centroids_;
  all.insert(all.end(), b.centroids_.begin(), b.centroids_.end());
  QuantileSketch merged(a.compression_);
  merged.Compress(std::move(all));
  // The exact extrema survive even when compression folds the end points.
  merged.min_ = std::min(a.min_, b.min_);
  merged.max_ = std::max(a.max_, b.max_);
  return merged;
}

void QuantileSketch::Compress(std::vector<Centroid> centroids) {
  centroids_.clear();
  total_weight_ = 0.0;
  if (centroids.empty()) return;
  // Sorting on (mean, weight) makes the result a function of the multiset,
  // so merge order cannot change a single bit.
  std::sort(centroids.begin(), centroids.end(),
            [](const Centroid& x, const Centroid& y) {
              if (x.mean != y.mean) return x.mean < y.mean;
              return x.weight < y.weight;
            });
  double total = 0.0;
  for (const Centroid& c : centroids) total += c.weight;
  min_ = centroids.front().mean;
  max_ = centroids.back().mean;

  const double d = compression_;
  double weight_before = 0.0;
  double q_limit = ScaleQ(ScaleK(0.0, d) + 1.0, d);
  Centroid cur = centroids.front();
  for (size_t i = 1; i < centroids.size(); ++i) {
    const Centroid& next = centroids[i];
    double q = (weight_before + cur.weight + next.weight) / total;
    if (q <= q_limit) {
      double w = cur.weight + next.weight;
      cur.mean += (next.mean - cur.mean) * (next.weight / w);
      cur.weight = w;
    } else {
      centroids_.push_back(cur);
      weight_before += cur.weight;
      q_limit = ScaleQ(ScaleK(weight_before / total, d) + 1.0, d);
      cur = next;
    }
  }
  centroids_.push_back(cur);
  total_weight_ = total;
}

absl::StatusOr<double> QuantileSketch::Quantile(double q) const {
  if (empty()) return absl::FailedPreconditionError("empty sketch");
  if (!(q >= 0.0 && q <= 1.0)) {
    return absl::InvalidArgumentError(
        fmt::sprintf("quantile level %g outside [0, 1]", q));
  }
  if (q == 0.0) return min_;
  if (q == 1.0) return max_;

  const double target = q * total_weight_;
  // Centroid i is placed at the middle of its weight span; the exact min and
  // max anchor positions 0 and total_weight.
  double prev_pos = 0.0;
  double prev_val = min_;
  double before = 0.0;
  for (const Centroid& c : centroids_) {
    double pos = before + c.weight / 2.0;
    if (target <= pos) {
      if (pos == prev_pos) return c.mean;
      double t = (target - prev_pos) / (pos - prev_pos);
      return prev_val + t * (c.mean - prev_val);
    }
    prev_pos = pos;
    prev_val = c.mean;
    before += c.weight;
  }
  if (total_weight_ == prev_pos) return max_;
  double t = (target - prev_pos) / (total_weight_ - prev_pos);
  return prev_val + t * (max_ - prev_val);
}

std::vector<uint8_t> QuantileSketch::Serialize() const {
  ByteWriter w;
  w.PutU32(compression_);
  w.PutF64(total_weight_);
  w.PutF64(min_);
  w.PutF64(max_);
  w.PutU32(static_cast<uint32_t>(centroids_.size()));
  for (const Centroid& c : centroids_) {
    w.PutF64(c.mean);
    w.PutF64(c.weight);
  }
  return w.Release();
}

absl::StatusOr<QuantileSketch> QuantileSketch::Deserialize(
    std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  absl::StatusOr<uint32_t> compression = r.GetU32();
  absl::StatusOr<double> total = r.GetF64();
  absl::StatusOr<double> lo = r.GetF64();
  absl::StatusOr<double> hi = r.GetF64();
  absl::StatusOr<uint32_t> n = r.GetU32();
  for (const absl::Status& s : {compression.status(), total.status(),
                                lo.status(), hi.status(), n.status()}) {
    if (!s.ok()) return s;
  }
  if (*compression < kMinCompression) {
    return absl::InvalidArgumentError("sketch compression below minimum");
  }
  absl::StatusOr<std::vector<double>> flat = r.GetF64s(2 * size_t{*n});
  if (!flat.ok()) return flat.status();
  if (absl::Status s = r.ExpectEnd(); !s.ok()) return s;

  QuantileSketch sketch(*compression);
  double sum = 0.0;
  for (uint32_t i = 0; i < *n; ++i) {
    Centroid c{(*flat)[2 * i], (*flat)[2 * i + 1]};
    if (!(c.weight > 0.0) || !std::isfinite(c.mean)) {
      return absl::InvalidArgumentError("malformed centroid");
    }
    if (i > 0 && c.mean < sketch.centroids_.back().mean) {
      return absl::InvalidArgumentError("centroid means out of order");
    }
    sum += c.weight;
    sketch.centroids_.push_back(c);
  }
  if (sum != *total) {
    return absl::InvalidArgumentError("centroid weights do not sum to total");
  }
  sketch.total_weight_ = *total;
  sketch.min_ = *lo;
  sketch.max_ = *hi;
  return sketch;
}

}  // namespace fedfair
