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
#ifndef FEDFAIR_QUANTILE_SKETCH_H_
#define FEDFAIR_QUANTILE_SKETCH_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/statusor.h"

namespace fedfair {

struct Centroid {
  double mean = 0.0;
  double weight = 0.0;

  bool operator==(const Centroid&) const = default;
};

// Mergeable t-digest style quantile summary using the arcsine (k1) scale
// function, so centroids near the tails stay small. Clients build one over
// their calibration scores and the server merges them instead of pooling raw
// scores.
//
// Serialized form (little-endian):
//   u32 compression | f64 total_weight | f64 min | f64 max |
//   u32 n | n x (f64 mean, f64 weight)
class QuantileSketch {
 public:
  static constexpr uint32_t kMinCompression = 10;
  static constexpr uint32_t kDefaultCompression = 100;

  // Empty sketch.
  explicit QuantileSketch(uint32_t compression = kDefaultCompression)
      : compression_(compression) {}

  static absl::StatusOr<QuantileSketch> Build(
      std::span<const double> values,
      uint32_t compression = kDefaultCompression);

  // Fails on a compression mismatch. Exactly commutative.
  static absl::StatusOr<QuantileSketch> Merge(const QuantileSketch& a,
                                              const QuantileSketch& b);

  // Linear interpolation between centroid centres; q = 0 gives the exact
  // minimum and q = 1 the exact maximum.
  absl::StatusOr<double> Quantile(double q) const;

  std::vector<uint8_t> Serialize() const;
  static absl::StatusOr<QuantileSketch> Deserialize(
      std::span<const uint8_t> bytes);

  bool empty() const { return centroids_.empty(); }
  uint32_t compression() const { return compression_; }
  double total_weight() const { return total_weight_; }
  double min() const { return min_; }
  double max() const { return max_; }
  const std::vector<Centroid>& centroids() const { return centroids_; }

  bool operator==(const QuantileSketch&) const = default;

 private:
  // Sorts and compresses `centroids` into this sketch's budget.
  void Compress(std::vector<Centroid> centroids);

  uint32_t compression_;
  double total_weight_ = 0.0;
  double min_ = 0.0;
  double max_ = 0.0;
  std::vector<Centroid> centroids_;
};

}  // namespace fedfair

#endif  // FEDFAIR_QUANTILE_SKETCH_H_
