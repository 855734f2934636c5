#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <unordered_map>
#include <vector>

#include "lsap/array.hpp"

namespace lsap {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

/// Fixed (non-differentiated) linear map used by the affine-transform op.
/// Spectrogram framing/DFT, mel projection, codec encode/decode and input
/// padding are all instances; gradients route through apply_transpose.
class LinearMap {
 public:
  virtual ~LinearMap() = default;
  virtual std::vector<std::size_t> out_shape(
      const std::vector<std::size_t>& in) const = 0;
  virtual void apply(const Array& x, Array& y) const = 0;
  /// gx += M^T gy. gx arrives zero-initialized.
  virtual void apply_transpose(const Array& gy, Array& gx) const = 0;
};

/// Dense y = M x (+ bias). M is rows x cols row-major, x 1-D.
class DenseMap : public LinearMap {
 public:
  DenseMap(std::size_t rows, std::size_t cols, std::vector<double> m,
           std::vector<double> bias = {});
  std::vector<std::size_t> out_shape(
      const std::vector<std::size_t>& in) const override;
  void apply(const Array& x, Array& y) const override;
  void apply_transpose(const Array& gy, Array& gx) const override;

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

 private:
  std::size_t rows_, cols_;
  std::vector<double> m_;
  std::vector<double> bias_;
};

/// Applies a rows x frame_len basis to hop-strided frames of a 1-D signal,
/// producing a {nframes, rows} array. Stands in for windowed-DFT framing.
class FramedMap : public LinearMap {
 public:
  FramedMap(std::size_t signal_len, std::size_t frame_len, std::size_t hop,
            std::size_t rows, std::vector<double> basis);
  std::vector<std::size_t> out_shape(
      const std::vector<std::size_t>& in) const override;
  void apply(const Array& x, Array& y) const override;
  void apply_transpose(const Array& gy, Array& gx) const override;

  std::size_t nframes() const { return nframes_; }
  std::size_t rows() const { return rows_; }

 private:
  std::size_t signal_len_, frame_len_, hop_, rows_, nframes_;
  std::vector<double> basis_;
};

/// Embeds a 1-D input at offset 0 of a longer vector and adds a constant
/// tail (used to append timestep embeddings without a concat op).
class PadMap : public LinearMap {
 public:
  PadMap(std::size_t in_len, std::vector<double> tail);
  std::vector<std::size_t> out_shape(
      const std::vector<std::size_t>& in) const override;
  void apply(const Array& x, Array& y) const override;
  void apply_transpose(const Array& gy, Array& gx) const override;

 private:
  std::size_t in_len_;
  std::vector<double> tail_;
};

enum class OpKind : std::uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kScalarMul,
  kMatMul,
  kTanh,
  kSilu,
  kSum,
  kMean,
  kSquare,
  kSqrt,
  kLog,
  kAbs,
  kAffine,
};

const char* op_name(OpKind k);

struct Node {
  OpKind op = OpKind::kLeaf;
  NodeId a = kNoNode;
  NodeId b = kNoNode;
  double scalar = 0.0;
  const LinearMap* map = nullptr;
  std::shared_ptr<const Array> value;
};

using GradientMap = std::unordered_map<NodeId, Array>;

struct FdReport {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  std::size_t excluded = 0;  // coordinates skipped at a domain boundary
};

/// Reverse-mode tape. Nodes are appended in topological order and values are
/// computed eagerly, so construction order doubles as the evaluation order
/// and backward is a single reverse sweep. A tape belongs to one execution
/// context; distinct tapes may run concurrently.
class Tape {
 public:
  NodeId leaf(Array v);
  NodeId leaf(std::shared_ptr<const Array> v);
  /// Constant input; identical to leaf, just never listed in `wrt`.
  NodeId constant(Array v) { return leaf(std::move(v)); }
  NodeId constant(std::shared_ptr<const Array> v) { return leaf(std::move(v)); }

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId div(NodeId a, NodeId b);
  NodeId scalar_mul(double s, NodeId a);
  NodeId matmul(NodeId a, NodeId b);
  NodeId tanh(NodeId a);
  NodeId silu(NodeId a);
  NodeId sum(NodeId a);
  NodeId mean(NodeId a);
  NodeId square(NodeId a);
  NodeId sqrt(NodeId a);
  NodeId log(NodeId a);
  NodeId abs(NodeId a);
  NodeId affine(const LinearMap* map, NodeId a);

  const Array& val(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(id); }

  /// Replace a leaf's value (same shape) and mark the tape for re-evaluation.
  void rebind_leaf(NodeId id, Array v);

  /// Forward value of `root`; recomputes the whole prefix when a leaf was
  /// rebound. Errors on shape mismatches and non-finite intermediates.
  const Array& evaluate(NodeId root);

  /// Reverse-mode gradients of scalar `root` w.r.t. the given leaves.
  /// Deterministic: the same graph yields bitwise-identical gradients.
  /// With allow_nonfinite, non-finite adjoints are returned instead of
  /// raising (used by the finite-difference checker near domain boundaries).
  GradientMap backward(NodeId root, const std::vector<NodeId>& wrt,
                       bool allow_nonfinite = false);

  /// When enabled, checkpoint() marks the last node as a segment boundary
  /// and drops cached interior values of the finished segment; backward
  /// recomputes each segment on demand, keeping memory bounded by one
  /// segment. Off by default; results are identical either way.
  void set_checkpointing(bool on) { checkpointing_ = on; }
  bool checkpointing() const { return checkpointing_; }
  void checkpoint();

 private:
  NodeId push(Node n);
  void compute_value(NodeId i);
  void recompute_range(NodeId lo, NodeId hi);
  void drop_segment_values(NodeId lo, NodeId hi);
  bool value_kept(NodeId i) const;
  void check_same_shape(NodeId a, NodeId b, const char* what) const;

  std::vector<Node> nodes_;
  std::vector<NodeId> boundaries_;
  bool checkpointing_ = false;
  bool dirty_ = false;
};

/// Max over coordinates of the relative error between the analytic gradient
/// d root / d leaf and a central finite difference with the given step.
/// Coordinates where evaluation fails or the analytic gradient is non-finite
/// (domain boundaries such as sqrt at 0) are excluded and counted.
FdReport finite_difference_check(Tape& tape, NodeId root, NodeId leaf,
                                 double step);

}  // namespace lsap
