#ifndef CARNOT_GRADATION_HPP
#define CARNOT_GRADATION_HPP

#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

namespace carnot {

/// Layer layout of a graded algebra: dimensions (n_1, ..., n_step).
/// Basis indices are 0-based and globally flat, layer-major.
class Gradation {
 public:
  Gradation() = default;
  explicit Gradation(std::vector<int> layer_dims) : dims_(std::move(layer_dims)) {
    if (dims_.empty()) throw std::invalid_argument("Gradation: no layers");
    offsets_.resize(dims_.size() + 1, 0);
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (dims_[i] < 1) throw std::invalid_argument("Gradation: layer dimension < 1");
      offsets_[i + 1] = offsets_[i] + dims_[i];
    }
  }

  int step() const { return static_cast<int>(dims_.size()); }
  int total_dim() const { return offsets_.back(); }

  /// Q = sum_i i * n_i, the Hausdorff dimension under any homogeneous distance.
  int homogeneous_dim() const {
    int q = 0;
    for (std::size_t i = 0; i < dims_.size(); ++i) q += static_cast<int>(i + 1) * dims_[i];
    return q;
  }

  const std::vector<int>& layer_dims() const { return dims_; }
  int layer_dim(int layer) const { return dims_.at(check_layer(layer) - 1); }
  int layer_offset(int layer) const { return offsets_.at(check_layer(layer) - 1); }

  /// Maps a flat basis index to (layer, index-within-layer), both 1-based layer / 0-based u.
  std::pair<int, int> locate(int flat) const {
    if (flat < 0 || flat >= total_dim()) throw std::out_of_range("Gradation: basis index out of range");
    int layer = 1;
    while (flat >= offsets_[layer]) ++layer;
    return {layer, flat - offsets_[layer - 1]};
  }

  int flat_index(int layer, int u) const {
    check_layer(layer);
    if (u < 0 || u >= dims_[layer - 1]) throw std::out_of_range("Gradation: basis index out of range");
    return offsets_[layer - 1] + u;
  }

  int layer_of(int flat) const { return locate(flat).first; }

  bool operator==(const Gradation& o) const { return dims_ == o.dims_; }

 private:
  int check_layer(int layer) const {
    if (layer < 1 || layer > step()) throw std::out_of_range("Gradation: layer out of range");
    return layer;
  }

  std::vector<int> dims_;
  std::vector<int> offsets_;
};

}  // namespace carnot

#endif
