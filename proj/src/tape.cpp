#include "pcam/tape.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "pcam/errors.hpp"

namespace pcam::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap map2(const Tensor& t) { return ConstMap(t.data(), t.dim(0), t.dim(1)); }
MutMap map2_mut(Tensor& t) { return MutMap(t.data(), t.dim(0), t.dim(1)); }

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

NodeId Tape::push(Tensor value, std::function<void(Tape&)> back, const char* op) {
  if (!value.all_finite()) throw NumericError(std::string("non-finite value produced by ") + op);
  Node n;
  n.grad = Tensor::zeros_like(value);
  n.value = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

void Tape::require(NodeId id) const {
  if (id < 0 || id >= node_count()) throw ContractError("node id not on tape");
}

NodeId Tape::leaf(Tensor value) {
  return push(std::move(value), nullptr, "leaf");
}

const Tensor& Tape::value(NodeId id) const {
  require(id);
  return nodes_[static_cast<std::size_t>(id)].value;
}

const Tensor& Tape::grad(NodeId id) const {
  require(id);
  return nodes_[static_cast<std::size_t>(id)].grad;
}

NodeId Tape::affine(NodeId x, NodeId w, NodeId b) {
  require(x);
  require(w);
  require(b);
  const Tensor& xv = val(x);
  const Tensor& wv = val(w);
  const Tensor& bv = val(b);
  if (xv.rank() != 2 || wv.rank() != 2 || bv.rank() != 1) throw ContractError("affine: x,w must be rank 2 and b rank 1");
  if (xv.dim(1) != wv.dim(0)) throw ContractError("affine: inner dimensions disagree");
  if (wv.dim(1) != bv.dim(0)) throw ContractError("affine: bias length disagrees with output width");

  Tensor out({xv.dim(0), wv.dim(1)});
  {
    auto o = map2_mut(out);
    o.noalias() = map2(xv) * map2(wv);
    o.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bv.data(), bv.size());
  }
  NodeId out_id = push(std::move(out), nullptr, "affine");
  nodes_[static_cast<std::size_t>(out_id)].back = [x, w, b, out_id](Tape& t) {
    const Tensor& go = t.grad_mut(out_id);
    const Tensor& xv = t.val(x);
    const Tensor& wv = t.val(w);
    auto g = map2(go);
    map2_mut(t.grad_mut(x)).noalias() += g * map2(wv).transpose();
    map2_mut(t.grad_mut(w)).noalias() += map2(xv).transpose() * g;
    Eigen::Map<Eigen::RowVectorXd>(t.grad_mut(b).data(), t.grad_mut(b).size()) += g.colwise().sum();
  };
  return out_id;
}

NodeId Tape::relu(NodeId x) {
  require(x);
  const Tensor& xv = val(x);
  Tensor out = xv;
  for (auto& v : out.vec())
    if (v < 0.0) v = 0.0;
  NodeId out_id = push(std::move(out), nullptr, "relu");
  nodes_[static_cast<std::size_t>(out_id)].back = [x, out_id](Tape& t) {
    const Tensor& go = t.grad_mut(out_id);
    const Tensor& xv = t.val(x);
    Tensor& gx = t.grad_mut(x);
    for (int i = 0; i < xv.size(); ++i)
      if (xv[i] > 0.0) gx[i] += go[i];
  };
  return out_id;
}

NodeId Tape::sigmoid(NodeId x) {
  require(x);
  const Tensor& xv = val(x);
  Tensor out = xv;
  for (auto& v : out.vec()) v = stable_sigmoid(v);
  NodeId out_id = push(std::move(out), nullptr, "sigmoid");
  nodes_[static_cast<std::size_t>(out_id)].back = [x, out_id](Tape& t) {
    const Tensor& go = t.grad_mut(out_id);
    const Tensor& s = t.val(out_id);
    Tensor& gx = t.grad_mut(x);
    for (int i = 0; i < s.size(); ++i) gx[i] += go[i] * s[i] * (1.0 - s[i]);
  };
  return out_id;
}

Tape::Pooled Tape::pool_impl(NodeId x, int segments, bool squeeze) {
  require(x);
  const Tensor& xv = val(x);
  if (xv.rank() != 2) throw ContractError("max pooling requires a rank-2 tensor");
  if (segments < 1) throw ContractError("max pooling requires at least one segment");
  const int rows = xv.dim(0);
  const int f = xv.dim(1);
  if (rows == 0 || rows % segments != 0) throw ContractError("max pooling: rows must split into equal nonempty segments");
  const int n = rows / segments;
  if (n < 1) throw ContractError("max pooling over an empty point set");

  Tensor out(squeeze ? std::vector<int>{f} : std::vector<int>{segments, f});
  std::vector<int> argmax(static_cast<std::size_t>(segments) * static_cast<std::size_t>(f), 0);
  for (int s = 0; s < segments; ++s) {
    for (int j = 0; j < f; ++j) {
      int best_row = s * n;
      double best = xv.at(best_row, j);
      for (int i = 1; i < n; ++i) {
        const double v = xv.at(s * n + i, j);
        if (v > best) {  // strict: ties keep the lowest index
          best = v;
          best_row = s * n + i;
        }
      }
      out[s * f + j] = best;
      argmax[static_cast<std::size_t>(s) * static_cast<std::size_t>(f) + static_cast<std::size_t>(j)] = best_row;
    }
  }
  NodeId out_id = push(std::move(out), nullptr, "max_pool");
  auto idx = argmax;
  nodes_[static_cast<std::size_t>(out_id)].back = [x, out_id, idx, f](Tape& t) {
    const Tensor& go = t.grad_mut(out_id);
    Tensor& gx = t.grad_mut(x);
    for (int e = 0; e < go.size(); ++e) {
      const int row = idx[static_cast<std::size_t>(e)];
      const int j = e % f;
      gx[row * f + j] += go[e];
    }
  };
  return Pooled{out_id, std::move(argmax)};
}

Tape::Pooled Tape::max_reduce_points(NodeId x) { return pool_impl(x, 1, true); }

Tape::Pooled Tape::max_pool_segments(NodeId x, int segments) { return pool_impl(x, segments, false); }

NodeId Tape::softmax_cross_entropy(NodeId logits, std::vector<int> labels) {
  require(logits);
  const Tensor& lv = val(logits);
  if (lv.rank() != 2) throw ContractError("softmax_cross_entropy: logits must be rank 2");
  const int b = lv.dim(0);
  const int k = lv.dim(1);
  if (static_cast<int>(labels.size()) != b) throw ContractError("softmax_cross_entropy: one label per row required");
  for (int lab : labels)
    if (lab < 0 || lab >= k) throw ContractError("softmax_cross_entropy: label out of range");

  Tensor probs({b, k});
  double loss = 0.0;
  for (int i = 0; i < b; ++i) {
    double m = lv.at(i, 0);
    for (int j = 1; j < k; ++j) m = std::max(m, lv.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < k; ++j) sum += std::exp(lv.at(i, j) - m);
    const double lse = m + std::log(sum);
    for (int j = 0; j < k; ++j) probs.at(i, j) = std::exp(lv.at(i, j) - m) / sum;
    loss += lse - lv.at(i, static_cast<int>(labels[static_cast<std::size_t>(i)]));
  }
  loss /= b;

  NodeId out_id = push(Tensor::scalar(loss), nullptr, "softmax_cross_entropy");
  nodes_[static_cast<std::size_t>(out_id)].back = [logits, out_id, probs = std::move(probs),
                                                   labels = std::move(labels), b, k](Tape& t) {
    const double go = t.grad_mut(out_id)[0];
    Tensor& gl = t.grad_mut(logits);
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < k; ++j) {
        const double onehot = (j == labels[static_cast<std::size_t>(i)]) ? 1.0 : 0.0;
        gl[i * k + j] += go * (probs[i * k + j] - onehot) / b;
      }
  };
  return out_id;
}

NodeId Tape::add(NodeId a, NodeId b) {
  require(a);
  require(b);
  if (!val(a).same_shape(val(b))) throw ContractError("add: shape mismatch");
  Tensor out = val(a);
  for (int i = 0; i < out.size(); ++i) out[i] += val(b)[i];
  NodeId out_id = push(std::move(out), nullptr, "add");
  nodes_[static_cast<std::size_t>(out_id)].back = [a, b, out_id](Tape& t) {
    const Tensor& go = t.grad_mut(out_id);
    Tensor& ga = t.grad_mut(a);
    Tensor& gb = t.grad_mut(b);
    for (int i = 0; i < go.size(); ++i) {
      ga[i] += go[i];
      gb[i] += go[i];
    }
  };
  return out_id;
}

NodeId Tape::sub(NodeId a, NodeId b) {
  require(a);
  require(b);
  if (!val(a).same_shape(val(b))) throw ContractError("sub: shape mismatch");
  Tensor out = val(a);
  for (int i = 0; i < out.size(); ++i) out[i] -= val(b)[i];
  NodeId out_id = push(std::move(out), nullptr, "sub");
  nodes_[static_cast<std::size_t>(out_id)].back = [a, b, out_id](Tape& t) {
    const Tensor& go = t.grad_mut(out_id);
    Tensor& ga = t.grad_mut(a);
    Tensor& gb = t.grad_mut(b);
    for (int i = 0; i < go.size(); ++i) {
      ga[i] += go[i];
      gb[i] -= go[i];
    }
  };
  return out_id;
}

NodeId Tape::mul(NodeId a, NodeId b) {
  require(a);
  require(b);
  if (!val(a).same_shape(val(b))) throw ContractError("mul: shape mismatch");
  Tensor out = val(a);
  for (int i = 0; i < out.size(); ++i) out[i] *= val(b)[i];
  NodeId out_id = push(std::move(out), nullptr, "mul");
  nodes_[static_cast<std::size_t>(out_id)].back = [a, b, out_id](Tape& t) {
    const Tensor& go = t.grad_mut(out_id);
    const Tensor& av = t.val(a);
    const Tensor& bv = t.val(b);
    Tensor& ga = t.grad_mut(a);
    Tensor& gb = t.grad_mut(b);
    for (int i = 0; i < go.size(); ++i) {
      ga[i] += go[i] * bv[i];
      gb[i] += go[i] * av[i];
    }
  };
  return out_id;
}

NodeId Tape::scale(NodeId a, double c) {
  require(a);
  Tensor out = val(a);
  for (auto& v : out.vec()) v *= c;
  NodeId out_id = push(std::move(out), nullptr, "scale");
  nodes_[static_cast<std::size_t>(out_id)].back = [a, c, out_id](Tape& t) {
    const Tensor& go = t.grad_mut(out_id);
    Tensor& ga = t.grad_mut(a);
    for (int i = 0; i < go.size(); ++i) ga[i] += c * go[i];
  };
  return out_id;
}

NodeId Tape::add_const(NodeId a, double c) {
  require(a);
  Tensor out = val(a);
  for (auto& v : out.vec()) v += c;
  NodeId out_id = push(std::move(out), nullptr, "add_const");
  nodes_[static_cast<std::size_t>(out_id)].back = [a, out_id](Tape& t) {
    const Tensor& go = t.grad_mut(out_id);
    Tensor& ga = t.grad_mut(a);
    for (int i = 0; i < go.size(); ++i) ga[i] += go[i];
  };
  return out_id;
}

NodeId Tape::log(NodeId a) {
  require(a);
  Tensor out = val(a);
  for (auto& v : out.vec()) v = std::log(v);
  NodeId out_id = push(std::move(out), nullptr, "log");
  nodes_[static_cast<std::size_t>(out_id)].back = [a, out_id](Tape& t) {
    const Tensor& go = t.grad_mut(out_id);
    const Tensor& av = t.val(a);
    Tensor& ga = t.grad_mut(a);
    for (int i = 0; i < go.size(); ++i) ga[i] += go[i] / av[i];
  };
  return out_id;
}

NodeId Tape::clamp_min(NodeId a, double floor) {
  require(a);
  Tensor out = val(a);
  for (auto& v : out.vec())
    if (v < floor) v = floor;
  NodeId out_id = push(std::move(out), nullptr, "clamp_min");
  nodes_[static_cast<std::size_t>(out_id)].back = [a, floor, out_id](Tape& t) {
    const Tensor& go = t.grad_mut(out_id);
    const Tensor& av = t.val(a);
    Tensor& ga = t.grad_mut(a);
    for (int i = 0; i < go.size(); ++i)
      if (av[i] > floor) ga[i] += go[i];
  };
  return out_id;
}

NodeId Tape::mean_all(NodeId a) {
  require(a);
  const Tensor& av = val(a);
  double sum = 0.0;
  for (double v : av.vec()) sum += v;
  const int n = av.size();
  NodeId out_id = push(Tensor::scalar(sum / n), nullptr, "mean_all");
  nodes_[static_cast<std::size_t>(out_id)].back = [a, n, out_id](Tape& t) {
    const double go = t.grad_mut(out_id)[0];
    Tensor& ga = t.grad_mut(a);
    for (int i = 0; i < ga.size(); ++i) ga[i] += go / n;
  };
  return out_id;
}

NodeId Tape::mean_squared_error(NodeId a, NodeId b) {
  require(a);
  require(b);
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  if (!av.same_shape(bv)) throw ContractError("mean_squared_error: shape mismatch");
  const int n = av.size();
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = av[i] - bv[i];
    sum += d * d;
  }
  NodeId out_id = push(Tensor::scalar(sum / n), nullptr, "mean_squared_error");
  nodes_[static_cast<std::size_t>(out_id)].back = [a, b, n, out_id](Tape& t) {
    const double go = t.grad_mut(out_id)[0];
    const Tensor& av = t.val(a);
    const Tensor& bv = t.val(b);
    Tensor& ga = t.grad_mut(a);
    Tensor& gb = t.grad_mut(b);
    for (int i = 0; i < n; ++i) {
      const double d = 2.0 * (av[i] - bv[i]) / n;
      ga[i] += go * d;
      gb[i] -= go * d;
    }
  };
  return out_id;
}

NodeId Tape::reshape(NodeId a, std::vector<int> shape) {
  require(a);
  const Tensor& av = val(a);
  if (shape_size(shape) != av.size()) throw ContractError("reshape: element count must be preserved");
  Tensor out(std::move(shape), av.vec());
  NodeId out_id = push(std::move(out), nullptr, "reshape");
  nodes_[static_cast<std::size_t>(out_id)].back = [a, out_id](Tape& t) {
    const Tensor& go = t.grad_mut(out_id);
    Tensor& ga = t.grad_mut(a);
    for (int i = 0; i < go.size(); ++i) ga[i] += go[i];
  };
  return out_id;
}

NodeId Tape::pick(NodeId a, int flat_index) {
  require(a);
  const Tensor& av = val(a);
  if (flat_index < 0 || flat_index >= av.size()) throw ContractError("pick: index out of range");
  NodeId out_id = push(Tensor::scalar(av[flat_index]), nullptr, "pick");
  nodes_[static_cast<std::size_t>(out_id)].back = [a, flat_index, out_id](Tape& t) {
    t.grad_mut(a)[flat_index] += t.grad_mut(out_id)[0];
  };
  return out_id;
}

NodeId Tape::chamfer_loss(NodeId a, NodeId b, int segments) {
  require(a);
  require(b);
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != 3 || bv.dim(1) != 3)
    throw ContractError("chamfer_loss: point sets must be [n,3]");
  if (segments < 1) throw ContractError("chamfer_loss: segments must be positive");
  if (av.dim(0) % segments != 0 || bv.dim(0) % segments != 0)
    throw ContractError("chamfer_loss: rows must split into equal segments");
  const int n = av.dim(0) / segments;
  const int m = bv.dim(0) / segments;
  if (n == 0 || m == 0) throw ContractError("chamfer_loss: empty point set");

  // Nearest-neighbor index per point, both directions, per segment.
  std::vector<int> nn_ab(static_cast<std::size_t>(av.dim(0)));
  std::vector<int> nn_ba(static_cast<std::size_t>(bv.dim(0)));
  double total = 0.0;
  for (int s = 0; s < segments; ++s) {
    const double* ap = av.data() + static_cast<std::ptrdiff_t>(s) * n * 3;
    const double* bp = bv.data() + static_cast<std::ptrdiff_t>(s) * m * 3;
    double d_ab = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_j = 0;
      for (int j = 0; j < m; ++j) {
        const double dx = ap[i * 3] - bp[j * 3];
        const double dy = ap[i * 3 + 1] - bp[j * 3 + 1];
        const double dz = ap[i * 3 + 2] - bp[j * 3 + 2];
        const double d2 = dx * dx + dy * dy + dz * dz;
        if (d2 < best) {
          best = d2;
          best_j = j;
        }
      }
      nn_ab[static_cast<std::size_t>(s * n + i)] = s * m + best_j;
      d_ab += std::sqrt(best);
    }
    double d_ba = 0.0;
    for (int j = 0; j < m; ++j) {
      double best = std::numeric_limits<double>::infinity();
      int best_i = 0;
      for (int i = 0; i < n; ++i) {
        const double dx = bp[j * 3] - ap[i * 3];
        const double dy = bp[j * 3 + 1] - ap[i * 3 + 1];
        const double dz = bp[j * 3 + 2] - ap[i * 3 + 2];
        const double d2 = dx * dx + dy * dy + dz * dz;
        if (d2 < best) {
          best = d2;
          best_i = i;
        }
      }
      nn_ba[static_cast<std::size_t>(s * m + j)] = s * n + best_i;
      d_ba += std::sqrt(best);
    }
    total += 0.5 * (d_ab / n + d_ba / m);
  }
  total /= segments;

  NodeId out_id = push(Tensor::scalar(total), nullptr, "chamfer_loss");
  nodes_[static_cast<std::size_t>(out_id)].back = [a, b, out_id, nn_ab = std::move(nn_ab), nn_ba = std::move(nn_ba),
                                                   segments, n, m](Tape& t) {
    const double go = t.grad_mut(out_id)[0];
    const Tensor& av = t.val(a);
    const Tensor& bv = t.val(b);
    Tensor& ga = t.grad_mut(a);
    Tensor& gb = t.grad_mut(b);
    const double wa = go * 0.5 / (segments * static_cast<double>(n));
    const double wb = go * 0.5 / (segments * static_cast<double>(m));
    auto route = [](const Tensor& src, const Tensor& dst, Tensor& gsrc, Tensor& gdst, int si, int di, double w) {
      const double dx = src[si * 3] - dst[di * 3];
      const double dy = src[si * 3 + 1] - dst[di * 3 + 1];
      const double dz = src[si * 3 + 2] - dst[di * 3 + 2];
      const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
      if (d <= 0.0) return;  // subgradient 0 at coincident points
      const double gx = w * dx / d, gy = w * dy / d, gz = w * dz / d;
      gsrc[si * 3] += gx;
      gsrc[si * 3 + 1] += gy;
      gsrc[si * 3 + 2] += gz;
      gdst[di * 3] -= gx;
      gdst[di * 3 + 1] -= gy;
      gdst[di * 3 + 2] -= gz;
    };
    for (int i = 0; i < av.dim(0); ++i) route(av, bv, ga, gb, i, nn_ab[static_cast<std::size_t>(i)], wa);
    for (int j = 0; j < bv.dim(0); ++j) route(bv, av, gb, ga, j, nn_ba[static_cast<std::size_t>(j)], wb);
  };
  return out_id;
}

void Tape::backward(NodeId seed) {
  require(seed);
  if (!val(seed).is_scalar()) throw ContractError("backward: seed node must be scalar");
  for (auto& n : nodes_) n.grad.fill(0.0);
  grad_mut(seed)[0] = 1.0;
  for (NodeId id = static_cast<NodeId>(nodes_.size()) - 1; id >= 0; --id) {
    auto& node = nodes_[static_cast<std::size_t>(id)];
    if (node.back) node.back(*this);
  }
  for (const auto& n : nodes_)
    if (!n.grad.all_finite()) throw NumericError("non-finite gradient after backward pass");
}

}  // namespace pcam::ad
