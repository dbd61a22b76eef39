#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rhogap/types.hpp"

namespace rhogap {

// One measurement: z = [x; u] and a noisy observation y of g(z).
struct LabeledSample {
  Vector z;
  Vector y;
};

class Dataset {
 public:
  Dataset(std::size_t state_dim, std::size_t input_dim, std::string provenance = {});

  void add(LabeledSample sample);
  void add(VectorRef x, VectorRef u, VectorRef y);

  std::size_t state_dim() const { return dx_; }
  std::size_t input_dim() const { return du_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  const LabeledSample& operator[](std::size_t n) const { return samples_[n]; }
  const std::vector<LabeledSample>& samples() const { return samples_; }
  const std::string& provenance() const { return provenance_; }

  Eigen::VectorBlock<const Vector> state(std::size_t n) const {
    return samples_[n].z.head(static_cast<Eigen::Index>(dx_));
  }

  // Inputs z^(n) stored row-wise.
  PointMatrix inputs() const;

  // Samples at `indices`, in that order. Indices must be in range.
  Dataset subset(std::span<const std::size_t> indices) const;

 private:
  std::size_t dx_;
  std::size_t du_;
  std::string provenance_;
  std::vector<LabeledSample> samples_;
};

// CSV with header x1..x{dx},u1..u{du},y1..y{dx}. Rejects NaN/Inf and
// malformed rows with InvalidArgument.
Dataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace rhogap
