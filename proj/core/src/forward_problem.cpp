#include "bsgd/forward_problem.hpp"

#include <algorithm>
#include <string>

namespace bsgd {

Batching Batching::strided(std::size_t num_units, std::size_t batch_size) {
  if (num_units == 0) throw InputError("batching: no measurement units");
  if (batch_size == 0 || num_units % batch_size != 0)
    throw InputError("batch size " + std::to_string(batch_size) + " must divide the unit count " +
                     std::to_string(num_units));
  Batching b;
  b.num_units_ = num_units;
  b.batch_size_ = batch_size;
  const std::size_t stride = num_units / batch_size;
  b.blocks_.resize(stride);
  for (std::size_t i = 0; i < stride; ++i) {
    b.blocks_[i].reserve(batch_size);
    for (std::size_t u = i; u < num_units; u += stride) b.blocks_[i].push_back(u);
  }
  return b;
}

ForwardProblem::ForwardProblem(std::shared_ptr<const ForwardModel> model, std::size_t batch_size)
    : model_(std::move(model)) {
  if (!model_) throw InputError("ForwardProblem: null model");
  batching_ = Batching::strided(model_->num_units(), batch_size);
}

ForwardProblem ForwardProblem::rebatched(std::size_t batch_size) const {
  ForwardProblem out = *this;
  out.batching_ = Batching::strided(model_->num_units(), batch_size);
  return out;
}

ForwardProblem ForwardProblem::with_truth(GridVector truth) const {
  check_domain(truth, "with_truth");
  ForwardProblem out = *this;
  out.exact_data_ = apply_units(truth);
  out.truth_ = std::move(truth);
  return out;
}

ForwardProblem ForwardProblem::with_exact_data(BlockList unit_data) const {
  if (unit_data.size() != model_->num_units())
    throw InputError("with_exact_data: expected one entry per unit");
  for (const auto& u : unit_data)
    if (u.size() != model_->unit_size()) throw InputError("with_exact_data: unit size mismatch");
  ForwardProblem out = *this;
  out.exact_data_ = std::move(unit_data);
  out.truth_.reset();
  return out;
}

ForwardProblem ForwardProblem::with_bounds(OperatorBounds bounds) const {
  ForwardProblem out = *this;
  out.bounds_ = bounds;
  return out;
}

void ForwardProblem::check_domain(const GridVector& x, const char* what) const {
  if (x.shape() != model_->domain_shape())
    throw InputError(std::string(what) + ": expected shape " + shape_string(model_->domain_shape()) +
                     ", got " + shape_string(x.shape()));
}

void ForwardProblem::check_block(std::size_t block) const {
  if (block >= num_blocks())
    throw InputError("block index " + std::to_string(block) + " out of range [0, " +
                     std::to_string(num_blocks()) + ")");
}

GridVector ForwardProblem::apply(std::size_t block, const GridVector& x) const {
  check_block(block);
  check_domain(x, "apply");
  const std::size_t m = model_->unit_size();
  const auto& units = batching_.units(block);
  std::vector<double> out(units.size() * m);
  for (std::size_t k = 0; k < units.size(); ++k)
    model_->apply_unit(units[k], x.values(), std::span<double>(out).subspan(k * m, m));
  return GridVector(std::move(out), block_shape());
}

GridVector ForwardProblem::derivative(std::size_t block, const GridVector& x,
                                      const GridVector& h) const {
  check_block(block);
  check_domain(x, "derivative");
  check_domain(h, "derivative");
  const std::size_t m = model_->unit_size();
  const auto& units = batching_.units(block);
  std::vector<double> out(units.size() * m);
  for (std::size_t k = 0; k < units.size(); ++k)
    model_->derivative_unit(units[k], x.values(), h.values(),
                            std::span<double>(out).subspan(k * m, m));
  return GridVector(std::move(out), block_shape());
}

DualVector ForwardProblem::adjoint(std::size_t block, const GridVector& x,
                                   const DualVector& g) const {
  check_block(block);
  check_domain(x, "adjoint");
  if (g.shape() != block_shape())
    throw InputError("adjoint: expected shape " + shape_string(block_shape()) + ", got " +
                     shape_string(g.shape()));
  const std::size_t m = model_->unit_size();
  const auto& units = batching_.units(block);
  std::vector<double> out(model_->domain_size(), 0.0);
  for (std::size_t k = 0; k < units.size(); ++k)
    model_->adjoint_unit_add(units[k], x.values(), g.values().subspan(k * m, m), out);
  return DualVector(std::move(out), model_->domain_shape());
}

BlockList ForwardProblem::apply_units(const GridVector& x) const {
  check_domain(x, "apply_units");
  const std::size_t m = model_->unit_size();
  BlockList out;
  out.reserve(model_->num_units());
  std::vector<double> buf(m);
  for (std::size_t u = 0; u < model_->num_units(); ++u) {
    model_->apply_unit(u, x.values(), buf);
    out.emplace_back(buf, Shape{m});
  }
  return out;
}

GridVector ForwardProblem::gather_block(std::size_t block, const BlockList& unit_data) const {
  check_block(block);
  if (unit_data.size() != model_->num_units())
    throw InputError("gather_block: expected one data entry per unit");
  const std::size_t m = model_->unit_size();
  const auto& units = batching_.units(block);
  std::vector<double> out;
  out.reserve(units.size() * m);
  for (std::size_t u : units) {
    const auto& d = unit_data[u];
    if (d.size() != m) throw InputError("gather_block: unit data size mismatch");
    out.insert(out.end(), d.values().begin(), d.values().end());
  }
  return GridVector(std::move(out), block_shape());
}

std::vector<GridVector> ForwardProblem::gather_blocks(const BlockList& unit_data) const {
  std::vector<GridVector> out;
  out.reserve(num_blocks());
  for (std::size_t i = 0; i < num_blocks(); ++i) out.push_back(gather_block(i, unit_data));
  return out;
}

}  // namespace bsgd
