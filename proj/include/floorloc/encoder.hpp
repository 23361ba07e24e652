// Copyright 2026 The floorloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "floorloc/graph.hpp"

namespace floorloc {

struct EncoderDims {
  std::uint32_t h0 = 64;
  std::uint32_t h1 = 64;
  std::uint32_t h2 = 32;

  friend bool operator==(const EncoderDims&, const EncoderDims&) = default;
};

/// Trainable weights of the three-layer GCN and its attention gate.
///
/// Shapes are fixed at construction. Individual values can be modified
/// through `blocks()`, which never allows resizing.
class EncoderParams {
 public:
  /// Zero-initialized parameters.
  explicit EncoderParams(EncoderDims dims = {});
  /// Throws ShapeError if any matrix disagrees with `dims`, or if any entry
  /// is non-finite.
  EncoderParams(EncoderDims dims, Eigen::MatrixXd w0, Eigen::MatrixXd w1,
                Eigen::MatrixXd w2, Eigen::VectorXd gate, double bias);

  const EncoderDims& dims() const { return dims_; }
  const Eigen::MatrixXd& w0() const { return w0_; }
  const Eigen::MatrixXd& w1() const { return w1_; }
  const Eigen::MatrixXd& w2() const { return w2_; }
  const Eigen::VectorXd& gate() const { return gate_; }
  double bias() const { return bias_; }

  /// Flat views of w0, w1, w2, gate, bias in that order.
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;

  std::size_t parameter_count() const;
  bool all_finite() const;

  friend bool operator==(const EncoderParams&, const EncoderParams&) = default;

 private:
  EncoderDims dims_;
  Eigen::MatrixXd w0_;
  Eigen::MatrixXd w1_;
  Eigen::MatrixXd w2_;
  Eigen::VectorXd gate_;
  double bias_ = 0.0;
};

/// Gradients with shapes mirroring EncoderParams.
struct GradientSet {
  explicit GradientSet(EncoderDims dims = {});

  Eigen::MatrixXd w0;
  Eigen::MatrixXd w1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd gate;
  double bias = 0.0;

  GradientSet& operator+=(const GradientSet& other);
  GradientSet& operator*=(double factor);
  std::vector<std::span<const double>> blocks() const;
  bool all_finite() const;
};

/// params <- params - learning_rate * grads.
void sgd_step(EncoderParams& params, const GradientSet& grads,
              double learning_rate);

struct Embedding {
  Eigen::VectorXd values;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  friend bool operator==(const Embedding& a, const Embedding& b) {
    return a.values.size() == b.values.size() && a.values == b.values;
  }
};

/// Glorot-uniform weights and gate, deterministic per seed. Bias starts at 0.
EncoderParams init_params(std::uint64_t seed, EncoderDims dims = {});

/// Graph-level embedding:
///   H1 = relu(A X W0), H2 = relu(A H1 W1), H3 = A H2 W2,
///   F = rowwise softmax(H3), alpha_i = sigmoid(F_i . gate + bias),
///   e = sum_i alpha_i F_i.
Embedding encode(const EncoderParams& params, const Eigen::MatrixXd& features,
                 const NormalizedAdjacency& a_hat);

/// Convenience overload that builds features and adjacency from a graph.
Embedding encode(const EncoderParams& params, const FloorGraph& graph);

/// Forward pass that keeps its activations for a later backward(). Holds
/// references to its arguments, which must outlive it.
class ForwardPass {
 public:
  ForwardPass(const EncoderParams& params, const Eigen::MatrixXd& features,
              const NormalizedAdjacency& a_hat);

  const Embedding& embedding() const { return embedding_; }
  /// d(upstream . e)/d(theta).
  GradientSet backward(const Eigen::VectorXd& upstream) const;

 private:
  const EncoderParams& params_;
  const Eigen::MatrixXd& features_;
  const Eigen::MatrixXd& a_;
  Eigen::MatrixXd z0_, h1_, z1_, h2_, f_;
  Eigen::VectorXd alpha_;
  Embedding embedding_;
};

struct EncodeResult {
  Embedding embedding;
  GradientSet gradients;
};

/// Same embedding as encode() plus d(upstream . e)/d(theta) for every
/// parameter, by reverse-mode differentiation.
EncodeResult encode_with_gradients(const EncoderParams& params,
                                   const Eigen::MatrixXd& features,
                                   const NormalizedAdjacency& a_hat,
                                   const Eigen::VectorXd& upstream);

/// Euclidean distance. Throws ShapeError on length mismatch.
double embedding_distance(const Embedding& a, const Embedding& b);

// Persistence ("FGENC1" binary format).

std::vector<std::uint8_t> serialize_params(const EncoderParams& params);
EncoderParams deserialize_params(std::span<const std::uint8_t> bytes);
void save_params(const EncoderParams& params, const std::filesystem::path& path);
EncoderParams load_params(const std::filesystem::path& path);

/// 64-bit FNV-1a of the serialized parameter file.
std::uint64_t fingerprint(const EncoderParams& params);

}  // namespace floorloc
