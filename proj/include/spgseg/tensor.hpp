#pragma once

#include <functional>
#include <memory>
#include <vector>

namespace spgseg::nn {

struct TensorNode;

// Dense 64-bit tensor with a reverse-mode tape. Values are immutable after
// construction except for leaves (parameter updates, finite differencing);
// gradients accumulate during a single backward pass.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor from_values(std::vector<std::size_t> shape,
                            std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  const std::vector<double>& values() const;
  double item() const;  // scalar tensors only

  bool requires_grad() const;
  const std::vector<double>& grad() const;  // valid after backward
  void zero_grad();

  // leaf mutation (parameter updates, finite differences)
  std::vector<double>& leaf_values();

  // reverse-mode pass from a scalar root
  void backward() const;

  std::shared_ptr<TensorNode> node() const { return node_; }
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<TensorNode> node_;
};

struct TensorNode {
  std::vector<std::size_t> shape;
  std::vector<double> values;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;

  std::size_t size() const { return values.size(); }
  void ensure_grad();
};

// true while gradients are being recorded (thread-local)
bool grad_enabled();

struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

namespace detail {
std::shared_ptr<TensorNode> make_node(std::vector<std::size_t> shape,
                                      std::vector<double> values,
                                      bool requires_grad);
}  // namespace detail

}  // namespace spgseg::nn
