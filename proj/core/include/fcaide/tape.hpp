#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fcaide/tensor.hpp"

namespace fcaide {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool valid() const { return tape_ != nullptr; }
  bool requires_grad() const;
  std::size_t id() const { return id_; }
  const Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(const Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Result of a backward pass. Holds gradients of the loss with respect to
/// every leaf created with Tape::variable.
class Gradients {
 public:
  const Tensor& of(Var leaf) const;
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return names_.count(name) != 0; }
  std::map<std::string, Tensor> named() const;

 private:
  friend class Tape;
  std::vector<Tensor> grads_;
  std::vector<bool> available_;
  std::map<std::string, std::size_t> names_;
};

/// Define-by-run record of tensor operations with reverse-mode
/// differentiation. Operations append nodes in execution order, so the node
/// list is already topologically sorted.
///
/// Binary elementwise ops broadcast when one operand's shape is a trailing
/// suffix of the other's (a rank-0 scalar is a suffix of everything).
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf that receives a gradient. Named leaves are addressable in Gradients.
  Var variable(Tensor value, std::string name = {});

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var square(Var a);
  Var scalar_mul(Var a, double s);
  Var add_scalar(Var a, double s);
  Var reduce_sum(Var a);
  Var reduce_mean(Var a);
  Var reshape(Var a, Shape shape);
  /// Scalar view of one flat element.
  Var element(Var a, std::size_t index);

  /// max(0,x) + alpha*min(0,x) with one alpha per leading-axis channel.
  Var prelu(Var x, Var alpha);

  /// Same-size zero-padded dilated cross-correlation restricted to the taps
  /// where `mask` is nonzero.
  ///   input [Cin,H,W], kernel [Cout,Cin,kh,kw], mask [kh,kw], bias [Cout]
  ///   out[o,y,x] = bias[o] + sum_{c,ky,kx: mask} K[o,c,ky,kx] *
  ///                in[c, y + dil*(ky-kh/2), x + dil*(kx-kw/2)]
  /// Masked kernel entries neither contribute nor receive gradient.
  Var conv2d_masked(Var input, Var kernel, const Tensor& mask, int dilation, Var bias);

  /// Reverse sweep from a scalar loss. May be called several times on the
  /// same tape, e.g. once per probed output element.
  Gradients backward(Var loss) const;

  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

 private:
  using BackwardFn = std::function<void(const Tensor& upstream, std::vector<Tensor>& grads,
                                        std::vector<bool>& touched)>;
  struct Node {
    Tensor value;
    bool requires_grad = false;
    bool leaf = false;
    std::string name;
    BackwardFn backward;
  };

  void check_owned(Var v, const char* op) const;
  Var push(Tensor value, bool requires_grad, BackwardFn backward);
  Var binary(Var a, Var b, int kind);

  std::vector<Node> nodes_;
};

}  // namespace fcaide
