#include "spgseg/tensor.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace spgseg::nn {

namespace {
thread_local bool t_grad_enabled = true;

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t p = 1;
  for (std::size_t d : shape) p *= d;
  return p;
}
}  // namespace

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = prev_; }

void TensorNode::ensure_grad() {
  if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

namespace detail {
std::shared_ptr<TensorNode> make_node(std::vector<std::size_t> shape,
                                      std::vector<double> values,
                                      bool requires_grad) {
  if (shape_product(shape) != values.size())
    throw std::invalid_argument("tensor shape does not match value count");
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->requires_grad = requires_grad && t_grad_enabled;
  return node;
}
}  // namespace detail

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  std::vector<double> v(shape_product(shape), 0.0);
  return Tensor(detail::make_node(std::move(shape), std::move(v), requires_grad));
}

Tensor Tensor::from_values(std::vector<std::size_t> shape,
                           std::vector<double> values, bool requires_grad) {
  return Tensor(
      detail::make_node(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return Tensor(detail::make_node({1}, {v}, requires_grad));
}

const std::vector<std::size_t>& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::size() const { return node_->values.size(); }
const std::vector<double>& Tensor::values() const { return node_->values; }

double Tensor::item() const {
  if (size() != 1) throw std::logic_error("item() on non-scalar tensor");
  return node_->values[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

const std::vector<double>& Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_->requires_grad) node_->grad.assign(node_->values.size(), 0.0);
}

std::vector<double>& Tensor::leaf_values() {
  if (node_->backward_fn)
    throw std::logic_error("leaf_values() on a non-leaf tensor");
  return node_->values;
}

void Tensor::backward() const {
  if (!node_) throw std::logic_error("backward() on undefined tensor");
  if (size() != 1) throw std::logic_error("backward() requires a scalar root");
  if (!node_->requires_grad) return;

  // iterative post-order DFS; reversed gives consumers before producers
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [cur, next] = stack.back();
    if (next < cur->parents.size()) {
      TensorNode* parent = cur->parents[next].get();
      ++next;
      if (parent->requires_grad && !seen.count(parent)) {
        seen.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(cur);
      stack.pop_back();
    }
  }

  for (TensorNode* n : order) n->ensure_grad();
  node_->grad.assign(1, 1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

}  // namespace spgseg::nn
