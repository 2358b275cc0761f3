#pragma once

#include <functional>
#include <vector>

#include "dcam/tensor.hpp"

namespace dcam {

/// Reverse-mode tape. Every differentiable operation appends one record in
/// execution order; backprop seeds the loss gradient with 1 and replays the
/// records in reverse, so inputs always receive their gradients after every
/// consumer has contributed. Gradient accumulation across fan-out is
/// additive; nothing is zeroed implicitly.
///
/// A graph and the tensors recorded on it belong to one execution context
/// at a time. Forward-only evaluation uses a non-recording graph.
class ComputeGraph {
 public:
  ComputeGraph() = default;
  explicit ComputeGraph(bool recording) : recording_(recording) {}

  bool recording() const { return recording_; }
  void set_recording(bool recording) { recording_ = recording; }

  std::size_t node_count() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  /// Appends an operation record. Called by operations, not by users.
  void record(const char* op, std::vector<Tensor> inputs, Tensor output,
              std::function<void()> backward);

  /// Runs reverse-mode accumulation from a scalar loss node.
  /// Throws UsageError when the loss is not a size-1 tensor.
  void backward(const Tensor& loss);

 private:
  struct Node {
    const char* op;
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;
  };
  std::vector<Node> nodes_;
  bool recording_ = true;
};

/// Free-function form of ComputeGraph::backward.
void backprop(ComputeGraph& graph, const Tensor& loss);

}  // namespace dcam
