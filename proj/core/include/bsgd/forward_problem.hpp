#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsgd/grid_vector.hpp"

namespace bsgd {

/// A nonlinear forward map split into measurement units (projection angles,
/// scalar components, ...). Blocks F_i are formed by batching units.
///
/// Implementations must be pure: every method is const and may be called
/// concurrently.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual std::string kind() const = 0;
  virtual const Shape& domain_shape() const = 0;
  virtual std::size_t num_units() const = 0;
  /// Number of measurements produced by one unit.
  virtual std::size_t unit_size() const = 0;

  /// out = F_u(x).
  virtual void apply_unit(std::size_t unit, std::span<const double> x,
                          std::span<double> out) const = 0;
  /// out = F_u'(x) h.
  virtual void derivative_unit(std::size_t unit, std::span<const double> x,
                               std::span<const double> h, std::span<double> out) const = 0;
  /// out += F_u'(x)^* g, the transpose of the derivative.
  virtual void adjoint_unit_add(std::size_t unit, std::span<const double> x,
                                std::span<const double> g, std::span<double> out) const = 0;

  std::size_t domain_size() const { return shape_size(domain_shape()); }
};

/// Assignment of units to blocks. With N units and batch size b, block i
/// (0-based) holds units {i, i + N/b, i + 2N/b, ...}: N/b blocks of b units.
class Batching {
 public:
  static Batching strided(std::size_t num_units, std::size_t batch_size);

  std::size_t num_units() const { return num_units_; }
  std::size_t batch_size() const { return batch_size_; }
  std::size_t num_blocks() const { return blocks_.size(); }
  const std::vector<std::size_t>& units(std::size_t block) const { return blocks_.at(block); }

 private:
  std::size_t num_units_ = 0;
  std::size_t batch_size_ = 0;
  std::vector<std::vector<std::size_t>> blocks_;
};

/// Constants of the forward operator on the working ball.
struct OperatorBounds {
  /// Bound on max_i ||F_i'(x)||.
  double L_max = 0.0;
  /// Tangential cone constant.
  double gamma = 0.0;
  /// True when gamma is a sampled lower estimate rather than a proven bound.
  bool gamma_estimated = true;
};

/// A batched forward operator together with its exact data and, optionally,
/// the ground truth that produced them.
class ForwardProblem {
 public:
  ForwardProblem(std::shared_ptr<const ForwardModel> model, std::size_t batch_size);

  const ForwardModel& model() const { return *model_; }
  std::shared_ptr<const ForwardModel> model_ptr() const { return model_; }
  std::string kind() const { return model_->kind(); }
  const Batching& batching() const { return batching_; }
  std::size_t num_blocks() const { return batching_.num_blocks(); }
  std::size_t batch_size() const { return batching_.batch_size(); }
  const Shape& domain_shape() const { return model_->domain_shape(); }
  Shape block_shape() const { return {batching_.batch_size(), model_->unit_size()}; }

  /// Copy with a different batch size (same data, truth and bounds).
  ForwardProblem rebatched(std::size_t batch_size) const;
  /// Copy with ground truth x† and exact data F(x†).
  ForwardProblem with_truth(GridVector truth) const;
  /// Copy with exact unit data and no known truth.
  ForwardProblem with_exact_data(BlockList unit_data) const;
  ForwardProblem with_bounds(OperatorBounds bounds) const;

  const std::optional<GridVector>& truth() const { return truth_; }
  /// Exact data y†, one entry per unit.
  const BlockList& exact_data() const { return exact_data_; }
  const OperatorBounds& bounds() const { return bounds_; }

  /// F_i(x) for block i, shape (batch_size, unit_size).
  GridVector apply(std::size_t block, const GridVector& x) const;
  GridVector derivative(std::size_t block, const GridVector& x, const GridVector& h) const;
  /// F_i'(x)^* g for g in the block's dual space.
  DualVector adjoint(std::size_t block, const GridVector& x, const DualVector& g) const;

  /// F evaluated unit by unit.
  BlockList apply_units(const GridVector& x) const;
  /// Gathers the data of block i from a per-unit list.
  GridVector gather_block(std::size_t block, const BlockList& unit_data) const;
  std::vector<GridVector> gather_blocks(const BlockList& unit_data) const;

 private:
  void check_domain(const GridVector& x, const char* what) const;
  void check_block(std::size_t block) const;

  std::shared_ptr<const ForwardModel> model_;
  Batching batching_;
  std::optional<GridVector> truth_;
  BlockList exact_data_;
  OperatorBounds bounds_;
};

}  // namespace bsgd
