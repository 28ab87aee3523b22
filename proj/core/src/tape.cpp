#include "fcaide/tape.hpp"

#include <algorithm>
#include <stdexcept>

namespace fcaide {

namespace {

enum BinaryKind { kAdd = 0, kSub = 1, kMul = 2 };

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

struct Tap {
  std::size_t ky, kx;
  long dy, dx;
};

std::vector<Tap> mask_taps(const Tensor& mask, int dilation) {
  std::vector<Tap> taps;
  const std::size_t kh = mask.extent(0);
  const std::size_t kw = mask.extent(1);
  const long cy = static_cast<long>(kh / 2);
  const long cx = static_cast<long>(kw / 2);
  for (std::size_t ky = 0; ky < kh; ++ky) {
    for (std::size_t kx = 0; kx < kw; ++kx) {
      if (mask.at(ky, kx) != 0.0) {
        taps.push_back({ky, kx, dilation * (static_cast<long>(ky) - cy),
                        dilation * (static_cast<long>(kx) - cx)});
      }
    }
  }
  return taps;
}

// Valid output range [lo, hi) along an axis of length n for a read offset d.
inline void valid_range(long n, long d, long& lo, long& hi) {
  lo = std::max(0L, -d);
  hi = std::min(n, n - d);
  if (hi < lo) hi = lo;
}

}  // namespace

const Tensor& Var::value() const {
  if (!tape_) throw std::logic_error("Var: use of an unbound variable");
  return tape_->value(id_);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(id_); }

const Tensor& Gradients::of(Var leaf) const {
  if (leaf.id() >= grads_.size() || !available_[leaf.id()]) {
    throw std::invalid_argument("Gradients: no gradient recorded for node " +
                                std::to_string(leaf.id()) + " (not a variable leaf)");
  }
  return grads_[leaf.id()];
}

const Tensor& Gradients::at(const std::string& name) const {
  auto it = names_.find(name);
  if (it == names_.end()) throw std::out_of_range("Gradients: unknown variable '" + name + "'");
  return grads_[it->second];
}

std::map<std::string, Tensor> Gradients::named() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, id] : names_) out.emplace(name, grads_[id]);
  return out;
}

void Tape::check_owned(Var v, const char* op) const {
  if (v.tape() != this) {
    throw std::invalid_argument(std::string(op) + ": operand does not belong to this tape");
  }
}

Var Tape::push(Tensor value, bool requires_grad, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  if (requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  node.leaf = true;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value, std::string name) {
  Node node;
  node.value = std::move(value);
  node.leaf = true;
  node.requires_grad = true;
  node.name = std::move(name);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::binary(Var a, Var b, int kind) {
  static const char* names[] = {"add", "sub", "mul"};
  check_owned(a, names[kind]);
  check_owned(b, names[kind]);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Shape out_shape;
  if (av.shape() == bv.shape() || is_suffix(bv.shape(), av.shape())) {
    out_shape = av.shape();
  } else if (is_suffix(av.shape(), bv.shape())) {
    out_shape = bv.shape();
  } else {
    throw std::invalid_argument(std::string(names[kind]) + ": incompatible shapes " +
                                shape_string(av.shape()) + " and " + shape_string(bv.shape()));
  }
  Tensor out(out_shape);
  const std::size_t n = out.size();
  const std::size_t na = av.size();
  const std::size_t nb = bv.size();
  auto o = out.data();
  auto ad = av.data();
  auto bd = bv.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = ad[i % na];
    const double y = bd[i % nb];
    o[i] = kind == kAdd ? x + y : kind == kSub ? x - y : x * y;
  }
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return push(std::move(out), a.requires_grad() || b.requires_grad(),
              [this, ia, ib, kind](const Tensor& g, std::vector<Tensor>& grads,
                                   std::vector<bool>& touched) {
                auto gd = g.data();
                const std::size_t n = g.size();
                if (nodes_[ia].requires_grad) {
                  auto ga = grads[ia].data();
                  const std::size_t na = ga.size();
                  if (kind == kMul) {
                    auto bd = nodes_[ib].value.data();
                    const std::size_t nb = bd.size();
                    for (std::size_t i = 0; i < n; ++i) ga[i % na] += gd[i] * bd[i % nb];
                  } else {
                    for (std::size_t i = 0; i < n; ++i) ga[i % na] += gd[i];
                  }
                  touched[ia] = true;
                }
                if (nodes_[ib].requires_grad) {
                  auto gb = grads[ib].data();
                  const std::size_t nb = gb.size();
                  if (kind == kMul) {
                    auto ad = nodes_[ia].value.data();
                    const std::size_t na = ad.size();
                    for (std::size_t i = 0; i < n; ++i) gb[i % nb] += gd[i] * ad[i % na];
                  } else if (kind == kSub) {
                    for (std::size_t i = 0; i < n; ++i) gb[i % nb] -= gd[i];
                  } else {
                    for (std::size_t i = 0; i < n; ++i) gb[i % nb] += gd[i];
                  }
                  touched[ib] = true;
                }
              });
}

Var Tape::add(Var a, Var b) { return binary(a, b, kAdd); }
Var Tape::sub(Var a, Var b) { return binary(a, b, kSub); }
Var Tape::mul(Var a, Var b) { return binary(a, b, kMul); }

Var Tape::square(Var a) {
  check_owned(a, "square");
  Tensor out(a.shape());
  auto ad = a.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = ad[i] * ad[i];
  const std::size_t ia = a.id();
  return push(std::move(out), a.requires_grad(),
              [this, ia](const Tensor& g, std::vector<Tensor>& grads, std::vector<bool>& touched) {
                auto ad = nodes_[ia].value.data();
                auto ga = grads[ia].data();
                auto gd = g.data();
                for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += 2.0 * ad[i] * gd[i];
                touched[ia] = true;
              });
}

Var Tape::scalar_mul(Var a, double s) {
  check_owned(a, "scalar_mul");
  Tensor out(a.shape());
  auto ad = a.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = s * ad[i];
  const std::size_t ia = a.id();
  return push(std::move(out), a.requires_grad(),
              [ia, s](const Tensor& g, std::vector<Tensor>& grads, std::vector<bool>& touched) {
                auto ga = grads[ia].data();
                auto gd = g.data();
                for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += s * gd[i];
                touched[ia] = true;
              });
}

Var Tape::add_scalar(Var a, double s) {
  check_owned(a, "add_scalar");
  Tensor out(a.shape());
  auto ad = a.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = ad[i] + s;
  const std::size_t ia = a.id();
  return push(std::move(out), a.requires_grad(),
              [ia](const Tensor& g, std::vector<Tensor>& grads, std::vector<bool>& touched) {
                auto ga = grads[ia].data();
                auto gd = g.data();
                for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gd[i];
                touched[ia] = true;
              });
}

Var Tape::reduce_sum(Var a) {
  check_owned(a, "reduce_sum");
  double acc = 0.0;
  for (double v : a.value().data()) acc += v;
  const std::size_t ia = a.id();
  return push(Tensor::scalar(acc), a.requires_grad(),
              [ia](const Tensor& g, std::vector<Tensor>& grads, std::vector<bool>& touched) {
                const double gv = g.item();
                for (double& v : grads[ia].data()) v += gv;
                touched[ia] = true;
              });
}

Var Tape::reduce_mean(Var a) {
  check_owned(a, "reduce_mean");
  double acc = 0.0;
  for (double v : a.value().data()) acc += v;
  const double n = static_cast<double>(a.value().size());
  const std::size_t ia = a.id();
  return push(Tensor::scalar(acc / n), a.requires_grad(),
              [ia, n](const Tensor& g, std::vector<Tensor>& grads, std::vector<bool>& touched) {
                const double gv = g.item() / n;
                for (double& v : grads[ia].data()) v += gv;
                touched[ia] = true;
              });
}

Var Tape::reshape(Var a, Shape shape) {
  check_owned(a, "reshape");
  Tensor out = a.value().reshaped(std::move(shape));
  const std::size_t ia = a.id();
  return push(std::move(out), a.requires_grad(),
              [ia](const Tensor& g, std::vector<Tensor>& grads, std::vector<bool>& touched) {
                auto ga = grads[ia].data();
                auto gd = g.data();
                for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gd[i];
                touched[ia] = true;
              });
}

Var Tape::element(Var a, std::size_t index) {
  check_owned(a, "element");
  if (index >= a.value().size()) throw std::out_of_range("element: index out of range");
  const std::size_t ia = a.id();
  return push(Tensor::scalar(a.value()[index]), a.requires_grad(),
              [ia, index](const Tensor& g, std::vector<Tensor>& grads, std::vector<bool>& touched) {
                grads[ia][index] += g.item();
                touched[ia] = true;
              });
}

Var Tape::prelu(Var x, Var alpha) {
  check_owned(x, "prelu");
  check_owned(alpha, "prelu");
  const Tensor& xv = x.value();
  const Tensor& av = alpha.value();
  const std::size_t channels = xv.rank() == 0 ? 1 : xv.extent(0);
  if (av.size() != channels || av.rank() > 1) {
    throw std::invalid_argument("prelu: alpha " + shape_string(av.shape()) +
                                " does not match channel count " + std::to_string(channels));
  }
  const std::size_t plane = xv.size() / channels;
  Tensor out(xv.shape());
  auto xd = xv.data();
  auto o = out.data();
  for (std::size_t c = 0; c < channels; ++c) {
    const double a = av[c];
    for (std::size_t i = c * plane; i < (c + 1) * plane; ++i) {
      const double v = xd[i];
      o[i] = v > 0.0 ? v : a * v;
    }
  }
  const std::size_t ix = x.id();
  const std::size_t ia = alpha.id();
  return push(std::move(out), x.requires_grad() || alpha.requires_grad(),
              [this, ix, ia, channels, plane](const Tensor& g, std::vector<Tensor>& grads,
                                              std::vector<bool>& touched) {
                auto xd = nodes_[ix].value.data();
                const Tensor& av = nodes_[ia].value;
                auto gd = g.data();
                const bool gx = nodes_[ix].requires_grad;
                const bool ga = nodes_[ia].requires_grad;
                for (std::size_t c = 0; c < channels; ++c) {
                  const double a = av[c];
                  double acc = 0.0;
                  for (std::size_t i = c * plane; i < (c + 1) * plane; ++i) {
                    const double v = xd[i];
                    if (gx) grads[ix][i] += v > 0.0 ? gd[i] : a * gd[i];
                    if (v <= 0.0) acc += gd[i] * v;
                  }
                  if (ga) grads[ia][c] += acc;
                }
                if (gx) touched[ix] = true;
                if (ga) touched[ia] = true;
              });
}

Var Tape::conv2d_masked(Var input, Var kernel, const Tensor& mask, int dilation, Var bias) {
  check_owned(input, "conv2d_masked");
  check_owned(kernel, "conv2d_masked");
  check_owned(bias, "conv2d_masked");
  if (dilation < 1) throw std::invalid_argument("conv2d_masked: dilation must be >= 1");
  const Tensor& in = input.value();
  const Tensor& k = kernel.value();
  const Tensor& b = bias.value();
  if (in.rank() != 3) throw std::invalid_argument("conv2d_masked: input must be [C,H,W], got " + shape_string(in.shape()));
  if (k.rank() != 4) throw std::invalid_argument("conv2d_masked: kernel must be [Cout,Cin,kh,kw], got " + shape_string(k.shape()));
  if (k.extent(1) != in.extent(0)) {
    throw std::invalid_argument("conv2d_masked: kernel expects " + std::to_string(k.extent(1)) +
                                " input channels, input has " + std::to_string(in.extent(0)));
  }
  if (mask.rank() != 2 || mask.extent(0) != k.extent(2) || mask.extent(1) != k.extent(3)) {
    throw std::invalid_argument("conv2d_masked: mask shape " + shape_string(mask.shape()) +
                                " does not match kernel window");
  }
  if (k.extent(2) % 2 == 0 || k.extent(3) % 2 == 0) {
    throw std::invalid_argument("conv2d_masked: kernel window must have odd extents");
  }
  if (b.rank() != 1 || b.extent(0) != k.extent(0)) {
    throw std::invalid_argument("conv2d_masked: bias must be [Cout]");
  }
  const std::vector<Tap> taps = mask_taps(mask, dilation);
  if (taps.empty()) throw std::invalid_argument("conv2d_masked: mask has no nonzero entry");

  const std::size_t cin = in.extent(0);
  const std::size_t cout = k.extent(0);
  const long h = static_cast<long>(in.extent(1));
  const long w = static_cast<long>(in.extent(2));
  const std::size_t plane = static_cast<std::size_t>(h * w);
  const std::size_t kh = k.extent(2);
  const std::size_t kw = k.extent(3);

  Tensor out(Shape{cout, in.extent(1), in.extent(2)});
  auto od = out.data();
  auto id = in.data();
  auto kd = k.data();
  for (std::size_t o = 0; o < cout; ++o) {
    double* op = od.data() + o * plane;
    std::fill(op, op + plane, b[o]);
    for (std::size_t c = 0; c < cin; ++c) {
      const double* ip = id.data() + c * plane;
      for (const Tap& t : taps) {
        const double wt = kd[((o * cin + c) * kh + t.ky) * kw + t.kx];
        long y0, y1, x0, x1;
        valid_range(h, t.dy, y0, y1);
        valid_range(w, t.dx, x0, x1);
        for (long y = y0; y < y1; ++y) {
          double* orow = op + y * w;
          const double* irow = ip + (y + t.dy) * w + t.dx;
          for (long x = x0; x < x1; ++x) orow[x] += wt * irow[x];
        }
      }
    }
  }

  const std::size_t i_in = input.id();
  const std::size_t i_k = kernel.id();
  const std::size_t i_b = bias.id();
  return push(
      std::move(out), input.requires_grad() || kernel.requires_grad() || bias.requires_grad(),
      [this, i_in, i_k, i_b, taps, cin, cout, h, w, plane, kh, kw](
          const Tensor& g, std::vector<Tensor>& grads, std::vector<bool>& touched) {
        auto gd = g.data();
        if (nodes_[i_b].requires_grad) {
          for (std::size_t o = 0; o < cout; ++o) {
            double acc = 0.0;
            const double* gp = gd.data() + o * plane;
            for (std::size_t i = 0; i < plane; ++i) acc += gp[i];
            grads[i_b][o] += acc;
          }
          touched[i_b] = true;
        }
        auto id = nodes_[i_in].value.data();
        auto kd = nodes_[i_k].value.data();
        const bool want_k = nodes_[i_k].requires_grad;
        const bool want_in = nodes_[i_in].requires_grad;
        for (std::size_t o = 0; o < cout; ++o) {
          const double* gp = gd.data() + o * plane;
          for (std::size_t c = 0; c < cin; ++c) {
            const double* ip = id.data() + c * plane;
            for (const Tap& t : taps) {
              const std::size_t kidx = ((o * cin + c) * kh + t.ky) * kw + t.kx;
              long y0, y1, x0, x1;
              valid_range(h, t.dy, y0, y1);
              valid_range(w, t.dx, x0, x1);
              if (want_k) {
                double acc = 0.0;
                for (long y = y0; y < y1; ++y) {
                  const double* grow = gp + y * w;
                  const double* irow = ip + (y + t.dy) * w + t.dx;
                  for (long x = x0; x < x1; ++x) acc += grow[x] * irow[x];
                }
                grads[i_k][kidx] += acc;
              }
              if (want_in) {
                const double wt = kd[kidx];
                double* gin = grads[i_in].data().data() + c * plane;
                for (long y = y0; y < y1; ++y) {
                  const double* grow = gp + y * w;
                  double* girow = gin + (y + t.dy) * w + t.dx;
                  for (long x = x0; x < x1; ++x) girow[x] += wt * grow[x];
                }
              }
            }
          }
        }
        if (want_k) touched[i_k] = true;
        if (want_in) touched[i_in] = true;
      });
}

Gradients Tape::backward(Var loss) const {
  if (loss.tape() != this) throw std::invalid_argument("backward: loss is not recorded on this tape");
  if (loss.value().size() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar, got shape " +
                                shape_string(loss.shape()));
  }
  const std::size_t n = nodes_.size();
  Gradients result;
  std::vector<Tensor>& grads = result.grads_;
  grads.resize(n);
  result.available_.assign(n, false);
  std::vector<bool> touched(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (nodes_[i].requires_grad && i <= loss.id()) grads[i] = Tensor(nodes_[i].value.shape(), 0.0);
    if (nodes_[i].leaf && nodes_[i].requires_grad) {
      result.available_[i] = true;
      if (i > loss.id()) grads[i] = Tensor(nodes_[i].value.shape(), 0.0);
      if (!nodes_[i].name.empty()) result.names_[nodes_[i].name] = i;
    }
  }
  if (nodes_[loss.id()].requires_grad) {
    grads[loss.id()][0] = 1.0;
    touched[loss.id()] = true;
  }
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (!node.requires_grad || node.leaf || !touched[i]) continue;
    node.backward(grads[i], grads, touched);
    grads[i] = Tensor();  // intermediate gradients are not exposed
  }
  return result;
}

}  // namespace fcaide
