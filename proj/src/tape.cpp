#include "lsap/tape.hpp"

#include <algorithm>
#include <cmath>

#include "lsap/kernels.hpp"

namespace lsap {

// ---------------------------------------------------------------------------
// Linear maps

DenseMap::DenseMap(std::size_t rows, std::size_t cols, std::vector<double> m,
                   std::vector<double> bias)
    : rows_(rows), cols_(cols), m_(std::move(m)), bias_(std::move(bias)) {
  if (m_.size() != rows_ * cols_)
    throw NumericError("DenseMap: matrix size mismatch");
  if (!bias_.empty() && bias_.size() != rows_)
    throw NumericError("DenseMap: bias size mismatch");
}

std::vector<std::size_t> DenseMap::out_shape(
    const std::vector<std::size_t>& in) const {
  if (in.size() != 1 || in[0] != cols_)
    throw NumericError("DenseMap: input shape " + shape_str(in) +
                       " incompatible with cols=" + std::to_string(cols_));
  return {rows_};
}

void DenseMap::apply(const Array& x, Array& y) const {
  kernels::matvec(m_.data(), x.data.data(), y.data.data(), rows_, cols_);
  if (!bias_.empty())
    for (std::size_t r = 0; r < rows_; ++r) y.data[r] += bias_[r];
}

void DenseMap::apply_transpose(const Array& gy, Array& gx) const {
  kernels::matvec_t(m_.data(), gy.data.data(), gx.data.data(), rows_, cols_);
}

FramedMap::FramedMap(std::size_t signal_len, std::size_t frame_len,
                     std::size_t hop, std::size_t rows,
                     std::vector<double> basis)
    : signal_len_(signal_len),
      frame_len_(frame_len),
      hop_(hop),
      rows_(rows),
      basis_(std::move(basis)) {
  if (hop_ == 0 || frame_len_ == 0 || frame_len_ > signal_len_)
    throw NumericError("FramedMap: invalid framing");
  if (basis_.size() != rows_ * frame_len_)
    throw NumericError("FramedMap: basis size mismatch");
  nframes_ = (signal_len_ - frame_len_) / hop_ + 1;
}

std::vector<std::size_t> FramedMap::out_shape(
    const std::vector<std::size_t>& in) const {
  if (in.size() != 1 || in[0] != signal_len_)
    throw NumericError("FramedMap: input shape " + shape_str(in) +
                       " incompatible with signal_len=" +
                       std::to_string(signal_len_));
  return {nframes_, rows_};
}

void FramedMap::apply(const Array& x, Array& y) const {
  kernels::framed_apply(basis_.data(), x.data.data(), y.data.data(), nframes_,
                        rows_, frame_len_, hop_);
}

void FramedMap::apply_transpose(const Array& gy, Array& gx) const {
  kernels::framed_apply_t(basis_.data(), gy.data.data(), gx.data.data(),
                          signal_len_, nframes_, rows_, frame_len_, hop_);
}

PadMap::PadMap(std::size_t in_len, std::vector<double> tail)
    : in_len_(in_len), tail_(std::move(tail)) {}

std::vector<std::size_t> PadMap::out_shape(
    const std::vector<std::size_t>& in) const {
  if (in.size() != 1 || in[0] != in_len_)
    throw NumericError("PadMap: input shape mismatch");
  return {in_len_ + tail_.size()};
}

void PadMap::apply(const Array& x, Array& y) const {
  std::copy(x.data.begin(), x.data.end(), y.data.begin());
  std::copy(tail_.begin(), tail_.end(), y.data.begin() + in_len_);
}

void PadMap::apply_transpose(const Array& gy, Array& gx) const {
  for (std::size_t i = 0; i < in_len_; ++i) gx.data[i] += gy.data[i];
}

// ---------------------------------------------------------------------------
// Tape

const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kDiv: return "div";
    case OpKind::kScalarMul: return "scalar_mul";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSilu: return "silu";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kSquare: return "square";
    case OpKind::kSqrt: return "sqrt";
    case OpKind::kLog: return "log";
    case OpKind::kAbs: return "abs";
    case OpKind::kAffine: return "affine";
  }
  return "?";
}

NodeId Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  NodeId id = static_cast<NodeId>(nodes_.size() - 1);
  if (nodes_[id].op != OpKind::kLeaf) compute_value(id);
  return id;
}

NodeId Tape::leaf(Array v) {
  Node n;
  n.op = OpKind::kLeaf;
  n.value = std::make_shared<Array>(std::move(v));
  if (!n.value->all_finite()) throw NumericError("leaf: non-finite value");
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::leaf(std::shared_ptr<const Array> v) {
  if (!v) throw NumericError("leaf: null array");
  Node n;
  n.op = OpKind::kLeaf;
  n.value = std::move(v);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

void Tape::check_same_shape(NodeId a, NodeId b, const char* what) const {
  if (!nodes_.at(a).value || !nodes_.at(b).value)
    throw NumericError(std::string(what) + ": missing operand value");
  if (!nodes_[a].value->same_shape(*nodes_[b].value))
    throw NumericError(std::string(what) + ": shape mismatch " +
                       shape_str(nodes_[a].value->shape) + " vs " +
                       shape_str(nodes_[b].value->shape));
}

NodeId Tape::add(NodeId a, NodeId b) {
  check_same_shape(a, b, "add");
  return push({OpKind::kAdd, a, b, 0.0, nullptr, nullptr});
}
NodeId Tape::sub(NodeId a, NodeId b) {
  check_same_shape(a, b, "sub");
  return push({OpKind::kSub, a, b, 0.0, nullptr, nullptr});
}
NodeId Tape::mul(NodeId a, NodeId b) {
  check_same_shape(a, b, "mul");
  return push({OpKind::kMul, a, b, 0.0, nullptr, nullptr});
}
NodeId Tape::div(NodeId a, NodeId b) {
  check_same_shape(a, b, "div");
  return push({OpKind::kDiv, a, b, 0.0, nullptr, nullptr});
}
NodeId Tape::scalar_mul(double s, NodeId a) {
  return push({OpKind::kScalarMul, a, kNoNode, s, nullptr, nullptr});
}
NodeId Tape::matmul(NodeId a, NodeId b) {
  const auto& sa = nodes_.at(a).value->shape;
  const auto& sb = nodes_.at(b).value->shape;
  bool ok = sa.size() == 2 && (sb.size() == 1 || sb.size() == 2) &&
            sa[1] == sb[0];
  if (!ok)
    throw NumericError("matmul: incompatible shapes " + shape_str(sa) +
                       " x " + shape_str(sb));
  return push({OpKind::kMatMul, a, b, 0.0, nullptr, nullptr});
}
NodeId Tape::tanh(NodeId a) {
  return push({OpKind::kTanh, a, kNoNode, 0.0, nullptr, nullptr});
}
NodeId Tape::silu(NodeId a) {
  return push({OpKind::kSilu, a, kNoNode, 0.0, nullptr, nullptr});
}
NodeId Tape::sum(NodeId a) {
  return push({OpKind::kSum, a, kNoNode, 0.0, nullptr, nullptr});
}
NodeId Tape::mean(NodeId a) {
  return push({OpKind::kMean, a, kNoNode, 0.0, nullptr, nullptr});
}
NodeId Tape::square(NodeId a) {
  return push({OpKind::kSquare, a, kNoNode, 0.0, nullptr, nullptr});
}
NodeId Tape::sqrt(NodeId a) {
  return push({OpKind::kSqrt, a, kNoNode, 0.0, nullptr, nullptr});
}
NodeId Tape::log(NodeId a) {
  return push({OpKind::kLog, a, kNoNode, 0.0, nullptr, nullptr});
}
NodeId Tape::abs(NodeId a) {
  return push({OpKind::kAbs, a, kNoNode, 0.0, nullptr, nullptr});
}
NodeId Tape::affine(const LinearMap* map, NodeId a) {
  if (!map) throw NumericError("affine: null map");
  return push({OpKind::kAffine, a, kNoNode, 0.0, map, nullptr});
}

const Array& Tape::val(NodeId id) const {
  const Node& n = nodes_.at(id);
  if (!n.value)
    throw NumericError("val: value of node " + std::to_string(id) +
                       " (" + op_name(n.op) + ") was dropped");
  return *n.value;
}

void Tape::rebind_leaf(NodeId id, Array v) {
  Node& n = nodes_.at(id);
  if (n.op != OpKind::kLeaf) throw NumericError("rebind_leaf: not a leaf");
  if (n.value && !n.value->same_shape(v))
    throw NumericError("rebind_leaf: shape mismatch");
  n.value = std::make_shared<Array>(std::move(v));
  dirty_ = true;
}

void Tape::compute_value(NodeId i) {
  Node& n = nodes_[i];
  auto pa = [&]() -> const Array& { return val(n.a); };
  auto pb = [&]() -> const Array& { return val(n.b); };
  Array out;
  switch (n.op) {
    case OpKind::kLeaf:
      return;
    case OpKind::kAdd: {
      out = pa();
      const Array& b = pb();
      for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] += b.data[k];
      break;
    }
    case OpKind::kSub: {
      out = pa();
      const Array& b = pb();
      for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] -= b.data[k];
      break;
    }
    case OpKind::kMul: {
      out = pa();
      const Array& b = pb();
      for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] *= b.data[k];
      break;
    }
    case OpKind::kDiv: {
      out = pa();
      const Array& b = pb();
      for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] /= b.data[k];
      break;
    }
    case OpKind::kScalarMul: {
      out = pa();
      for (double& v : out.data) v *= n.scalar;
      break;
    }
    case OpKind::kMatMul: {
      const Array& a = pa();
      const Array& b = pb();
      std::size_t r = a.shape[0], k = a.shape[1];
      if (b.shape.size() == 1) {
        out = Array::zeros({r});
        kernels::matvec(a.data.data(), b.data.data(), out.data.data(), r, k);
      } else {
        std::size_t c = b.shape[1];
        out = Array::zeros({r, c});
        kernels::matmul(a.data.data(), b.data.data(), out.data.data(), r, k, c);
      }
      break;
    }
    case OpKind::kTanh: {
      out = pa();
      for (double& v : out.data) v = std::tanh(v);
      break;
    }
    case OpKind::kSilu: {
      out = pa();
      for (double& v : out.data) v = v / (1.0 + std::exp(-v));
      break;
    }
    case OpKind::kSum: {
      const Array& a = pa();
      double s = 0.0;
      for (double v : a.data) s += v;
      out = Array::scalar(s);
      break;
    }
    case OpKind::kMean: {
      const Array& a = pa();
      double s = 0.0;
      for (double v : a.data) s += v;
      out = Array::scalar(s / static_cast<double>(a.data.size()));
      break;
    }
    case OpKind::kSquare: {
      out = pa();
      for (double& v : out.data) v *= v;
      break;
    }
    case OpKind::kSqrt: {
      out = pa();
      for (double& v : out.data) {
        if (v < 0.0) throw NumericError("sqrt: negative input");
        v = std::sqrt(v);
      }
      break;
    }
    case OpKind::kLog: {
      out = pa();
      for (double& v : out.data) {
        if (v <= 0.0) throw NumericError("log: non-positive input");
        v = std::log(v);
      }
      break;
    }
    case OpKind::kAbs: {
      out = pa();
      for (double& v : out.data) v = std::abs(v);
      break;
    }
    case OpKind::kAffine: {
      const Array& a = pa();
      out = Array::zeros(n.map->out_shape(a.shape));
      n.map->apply(a, out);
      break;
    }
  }
  if (!out.all_finite())
    throw NumericError(std::string("non-finite value from op ") +
                       op_name(n.op) + " at node " + std::to_string(i));
  n.value = std::make_shared<Array>(std::move(out));
}

bool Tape::value_kept(NodeId i) const {
  if (nodes_[i].op == OpKind::kLeaf) return true;
  return std::binary_search(boundaries_.begin(), boundaries_.end(), i);
}

void Tape::checkpoint() {
  if (!checkpointing_ || nodes_.empty()) return;
  NodeId b = static_cast<NodeId>(nodes_.size() - 1);
  if (!boundaries_.empty() && boundaries_.back() == b) return;
  NodeId lo = boundaries_.empty() ? 0 : boundaries_.back() + 1;
  boundaries_.push_back(b);
  if (b > lo) drop_segment_values(lo, b - 1);
}

void Tape::drop_segment_values(NodeId lo, NodeId hi) {
  for (NodeId i = lo; i <= hi && i < nodes_.size(); ++i) {
    if (!value_kept(i)) nodes_[i].value.reset();
    if (i == hi) break;
  }
}

void Tape::recompute_range(NodeId lo, NodeId hi) {
  for (NodeId i = lo; i <= hi; ++i) {
    if (nodes_[i].op != OpKind::kLeaf && !nodes_[i].value) compute_value(i);
    if (i == hi) break;
  }
}

const Array& Tape::evaluate(NodeId root) {
  if (root >= nodes_.size()) throw NumericError("evaluate: bad node id");
  if (dirty_) {
    for (NodeId i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].op != OpKind::kLeaf) compute_value(i);
    dirty_ = false;
  } else if (!nodes_[root].value) {
    recompute_range(0, root);
  }
  return val(root);
}

GradientMap Tape::backward(NodeId root, const std::vector<NodeId>& wrt,
                           bool allow_nonfinite) {
  if (root >= nodes_.size()) throw NumericError("backward: bad node id");
  if (!nodes_[root].value)
    throw NumericError("backward: evaluate the root first");
  if (nodes_[root].value->numel() != 1)
    throw NumericError("backward: root is not scalar-valued");

  const std::size_t n = nodes_.size();
  std::vector<std::uint8_t> needed(n, 0);
  for (NodeId w : wrt) {
    if (w >= n || nodes_[w].op != OpKind::kLeaf)
      throw NumericError("backward: wrt id is not a leaf of this graph");
    needed[w] = 1;
  }
  for (NodeId i = 0; i < n; ++i) {
    const Node& nd = nodes_[i];
    if (nd.op == OpKind::kLeaf) continue;
    if ((nd.a != kNoNode && needed[nd.a]) || (nd.b != kNoNode && needed[nd.b]))
      needed[i] = 1;
  }

  std::vector<Array> adj(n);
  auto has_adj = [&](NodeId i) { return !adj[i].data.empty(); };
  auto accum = [&](NodeId p, const Array& g) {
    if (!needed[p]) return;
    if (!has_adj(p)) {
      adj[p] = Array::zeros(nodes_[p].value ? nodes_[p].value->shape
                                            : g.shape);
    }
    for (std::size_t k = 0; k < g.data.size(); ++k) adj[p].data[k] += g.data[k];
  };

  if (needed[root]) adj[root] = Array::full(nodes_[root].value->shape, 1.0);

  // Segment boundaries partition [0, root]; without checkpointing there is a
  // single segment. Each segment is recomputed (if dropped), swept in reverse,
  // then dropped again.
  std::vector<std::pair<NodeId, NodeId>> segments;
  {
    NodeId hi = root;
    std::vector<NodeId> bs = boundaries_;
    while (!bs.empty() && bs.back() >= hi) bs.pop_back();
    NodeId prev = hi;
    for (auto it = bs.rbegin(); it != bs.rend(); ++it) {
      if (*it + 1 <= prev) segments.emplace_back(*it + 1, prev);
      prev = *it;
    }
    segments.emplace_back(0, prev);
  }

  auto propagate = [&](NodeId i) {
    const Node& nd = nodes_[i];
    const Array& g = adj[i];
    switch (nd.op) {
      case OpKind::kLeaf:
        return;
      case OpKind::kAdd:
        accum(nd.a, g);
        accum(nd.b, g);
        return;
      case OpKind::kSub: {
        accum(nd.a, g);
        if (needed[nd.b]) {
          Array gb = g;
          for (double& v : gb.data) v = -v;
          accum(nd.b, gb);
        }
        return;
      }
      case OpKind::kMul: {
        if (needed[nd.a]) {
          Array ga = g;
          const Array& b = val(nd.b);
          for (std::size_t k = 0; k < ga.data.size(); ++k)
            ga.data[k] *= b.data[k];
          accum(nd.a, ga);
        }
        if (needed[nd.b]) {
          Array gb = g;
          const Array& a = val(nd.a);
          for (std::size_t k = 0; k < gb.data.size(); ++k)
            gb.data[k] *= a.data[k];
          accum(nd.b, gb);
        }
        return;
      }
      case OpKind::kDiv: {
        const Array& b = val(nd.b);
        if (needed[nd.a]) {
          Array ga = g;
          for (std::size_t k = 0; k < ga.data.size(); ++k)
            ga.data[k] /= b.data[k];
          accum(nd.a, ga);
        }
        if (needed[nd.b]) {
          const Array& out = val(i);
          Array gb = g;
          for (std::size_t k = 0; k < gb.data.size(); ++k)
            gb.data[k] *= -out.data[k] / b.data[k];
          accum(nd.b, gb);
        }
        return;
      }
      case OpKind::kScalarMul: {
        if (needed[nd.a]) {
          Array ga = g;
          for (double& v : ga.data) v *= nd.scalar;
          accum(nd.a, ga);
        }
        return;
      }
      case OpKind::kMatMul: {
        const Array& a = val(nd.a);
        const Array& b = val(nd.b);
        std::size_t r = a.shape[0], k = a.shape[1];
        if (b.shape.size() == 1) {
          if (needed[nd.a]) {
            Array ga = Array::zeros({r, k});
            for (std::size_t i2 = 0; i2 < r; ++i2) {
              const double gi = g.data[i2];
              double* row = ga.data.data() + i2 * k;
              for (std::size_t j = 0; j < k; ++j) row[j] = gi * b.data[j];
            }
            accum(nd.a, ga);
          }
          if (needed[nd.b]) {
            Array gb = Array::zeros({k});
            kernels::matvec_t(a.data.data(), g.data.data(), gb.data.data(), r,
                              k);
            accum(nd.b, gb);
          }
        } else {
          std::size_t c = b.shape[1];
          if (needed[nd.a]) {
            // ga = g . b^T
            Array ga = Array::zeros({r, k});
            for (std::size_t i2 = 0; i2 < r; ++i2)
              for (std::size_t j = 0; j < k; ++j) {
                double s = 0.0;
                for (std::size_t l = 0; l < c; ++l)
                  s += g.data[i2 * c + l] * b.data[j * c + l];
                ga.data[i2 * k + j] = s;
              }
            accum(nd.a, ga);
          }
          if (needed[nd.b]) {
            // gb = a^T . g
            Array gb = Array::zeros({k, c});
            for (std::size_t j = 0; j < k; ++j)
              for (std::size_t l = 0; l < c; ++l) {
                double s = 0.0;
                for (std::size_t i2 = 0; i2 < r; ++i2)
                  s += a.data[i2 * k + j] * g.data[i2 * c + l];
                gb.data[j * c + l] = s;
              }
            accum(nd.b, gb);
          }
        }
        return;
      }
      case OpKind::kTanh: {
        if (needed[nd.a]) {
          const Array& y = val(i);
          Array ga = g;
          for (std::size_t k = 0; k < ga.data.size(); ++k)
            ga.data[k] *= 1.0 - y.data[k] * y.data[k];
          accum(nd.a, ga);
        }
        return;
      }
      case OpKind::kSilu: {
        if (needed[nd.a]) {
          const Array& x = val(nd.a);
          Array ga = g;
          for (std::size_t k = 0; k < ga.data.size(); ++k) {
            double s = 1.0 / (1.0 + std::exp(-x.data[k]));
            ga.data[k] *= s * (1.0 + x.data[k] * (1.0 - s));
          }
          accum(nd.a, ga);
        }
        return;
      }
      case OpKind::kSum: {
        if (needed[nd.a]) {
          const Array& a = val(nd.a);
          accum(nd.a, Array::full(a.shape, g.data[0]));
        }
        return;
      }
      case OpKind::kMean: {
        if (needed[nd.a]) {
          const Array& a = val(nd.a);
          accum(nd.a, Array::full(a.shape,
                                  g.data[0] / static_cast<double>(a.numel())));
        }
        return;
      }
      case OpKind::kSquare: {
        if (needed[nd.a]) {
          const Array& x = val(nd.a);
          Array ga = g;
          for (std::size_t k = 0; k < ga.data.size(); ++k)
            ga.data[k] *= 2.0 * x.data[k];
          accum(nd.a, ga);
        }
        return;
      }
      case OpKind::kSqrt: {
        if (needed[nd.a]) {
          const Array& y = val(i);
          Array ga = g;
          for (std::size_t k = 0; k < ga.data.size(); ++k)
            ga.data[k] *= 0.5 / y.data[k];
          accum(nd.a, ga);
        }
        return;
      }
      case OpKind::kLog: {
        if (needed[nd.a]) {
          const Array& x = val(nd.a);
          Array ga = g;
          for (std::size_t k = 0; k < ga.data.size(); ++k)
            ga.data[k] /= x.data[k];
          accum(nd.a, ga);
        }
        return;
      }
      case OpKind::kAbs: {
        if (needed[nd.a]) {
          const Array& x = val(nd.a);
          Array ga = g;
          for (std::size_t k = 0; k < ga.data.size(); ++k) {
            double s = x.data[k] > 0.0 ? 1.0 : (x.data[k] < 0.0 ? -1.0 : 0.0);
            ga.data[k] *= s;
          }
          accum(nd.a, ga);
        }
        return;
      }
      case OpKind::kAffine: {
        if (needed[nd.a]) {
          const Array& a = val(nd.a);
          Array ga = Array::zeros(a.shape);
          nd.map->apply_transpose(g, ga);
          accum(nd.a, ga);
        }
        return;
      }
    }
  };

  for (const auto& [lo, hi] : segments) {
    recompute_range(lo, hi);
    NodeId i = hi;
    while (true) {
      if (needed[i] && has_adj(i) && nodes_[i].op != OpKind::kLeaf) {
        propagate(i);
        adj[i].data.clear();  // adjoint no longer needed
      }
      if (i == lo) break;
      --i;
    }
    if (checkpointing_) {
      // Keep the root's value alive for the caller; boundaries and leaves
      // are spared inside drop_segment_values.
      if (hi == root) {
        if (hi > lo) drop_segment_values(lo, hi - 1);
      } else {
        drop_segment_values(lo, hi);
      }
    }
  }

  GradientMap out;
  for (NodeId w : wrt) {
    Array g = has_adj(w) ? std::move(adj[w])
                         : Array::zeros(nodes_[w].value->shape);
    if (!allow_nonfinite && !g.all_finite())
      throw NumericError("backward: non-finite gradient for leaf " +
                         std::to_string(w));
    out.emplace(w, std::move(g));
  }
  return out;
}

FdReport finite_difference_check(Tape& tape, NodeId root, NodeId leaf,
                                 double step) {
  if (step <= 0.0) throw NumericError("finite_difference_check: step <= 0");
  tape.evaluate(root);
  GradientMap gm = tape.backward(root, {leaf}, /*allow_nonfinite=*/true);
  const Array analytic = gm.at(leaf);
  const Array base = tape.val(leaf);

  FdReport rep;
  for (std::size_t i = 0; i < base.data.size(); ++i) {
    if (!std::isfinite(analytic.data[i])) {
      ++rep.excluded;
      continue;
    }
    Array lo = base, hi = base;
    hi.data[i] += step;
    lo.data[i] -= step;
    double fp, fm;
    try {
      tape.rebind_leaf(leaf, hi);
      fp = tape.evaluate(root).data[0];
      tape.rebind_leaf(leaf, lo);
      fm = tape.evaluate(root).data[0];
    } catch (const NumericError&) {
      ++rep.excluded;
      tape.rebind_leaf(leaf, base);
      tape.evaluate(root);
      continue;
    }
    double central = (fp - fm) / (2.0 * step);
    // Central differences on O(1) values cannot resolve derivatives below
    // roughly eps/step; when both sides sit under that floor the coordinate
    // is numerically zero and counts as a match.
    if (std::abs(analytic.data[i]) < 1e-8 && std::abs(central) < 1e-8) {
      ++rep.checked;
      continue;
    }
    double rel = std::abs(analytic.data[i] - central) /
                 (std::abs(analytic.data[i]) + std::abs(central) + 1e-12);
    rep.max_rel_err = std::max(rep.max_rel_err, rel);
    ++rep.checked;
  }
  tape.rebind_leaf(leaf, base);
  tape.evaluate(root);
  return rep;
}

}  // namespace lsap
