#include "dcam/graph.hpp"

#include "dcam/error.hpp"

namespace dcam {

void ComputeGraph::record(const char* op, std::vector<Tensor> inputs, Tensor output,
                          std::function<void()> backward) {
  nodes_.push_back(Node{op, std::move(inputs), std::move(output), std::move(backward)});
}

void ComputeGraph::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw UsageError("backprop requires a scalar loss node");
  }
  if (loss.requires_grad()) {
    Tensor handle = loss;  // shared storage; grants mutable gradient access
    handle.grad()[0] += 1.0;
  }
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->backward) it->backward();
  }
}

void backprop(ComputeGraph& graph, const Tensor& loss) { graph.backward(loss); }

}  // namespace dcam
