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

#include "floorloc/encoder.hpp"

#include <cmath>
#include <random>

#include "byte_io.hpp"
#include "floorloc/errors.hpp"

namespace floorloc {
namespace {

constexpr std::string_view kEncoderMagic = "FGENC1";

template <typename Derived>
std::span<double> as_span(Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
template <typename Derived>
std::span<const double> as_span(const Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

void check_dims(const EncoderDims& dims) {
  if (dims.h0 == 0 || dims.h1 == 0 || dims.h2 == 0) {
    throw ShapeError("encoder dims must be positive");
  }
}

void check_inputs(const Eigen::MatrixXd& features,
                  const NormalizedAdjacency& a_hat) {
  if (features.cols() != static_cast<Eigen::Index>(kDescriptorSize)) {
    throw ShapeError("feature matrix must have 128 columns");
  }
  if (features.rows() == 0) throw ShapeError("feature matrix has no rows");
  if (a_hat.matrix.rows() != features.rows() ||
      a_hat.matrix.cols() != features.rows()) {
    throw ShapeError("adjacency dimension does not match feature rows");
  }
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

Eigen::MatrixXd rowwise_softmax(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double peak = z.row(i).maxCoeff();
    out.row(i) = (z.row(i).array() - peak).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

EncoderParams::EncoderParams(EncoderDims dims) : dims_(dims) {
  check_dims(dims_);
  w0_ = Eigen::MatrixXd::Zero(kDescriptorSize, dims_.h0);
  w1_ = Eigen::MatrixXd::Zero(dims_.h0, dims_.h1);
  w2_ = Eigen::MatrixXd::Zero(dims_.h1, dims_.h2);
  gate_ = Eigen::VectorXd::Zero(dims_.h2);
}

EncoderParams::EncoderParams(EncoderDims dims, Eigen::MatrixXd w0,
                             Eigen::MatrixXd w1, Eigen::MatrixXd w2,
                             Eigen::VectorXd gate, double bias)
    : dims_(dims), w0_(std::move(w0)), w1_(std::move(w1)), w2_(std::move(w2)),
      gate_(std::move(gate)), bias_(bias) {
  check_dims(dims_);
  auto shape_ok = [](const Eigen::MatrixXd& m, Eigen::Index r, Eigen::Index c) {
    return m.rows() == r && m.cols() == c;
  };
  if (!shape_ok(w0_, kDescriptorSize, dims_.h0) ||
      !shape_ok(w1_, dims_.h0, dims_.h1) ||
      !shape_ok(w2_, dims_.h1, dims_.h2) ||
      gate_.size() != static_cast<Eigen::Index>(dims_.h2)) {
    throw ShapeError("encoder parameter shapes disagree with dims");
  }
  if (!all_finite()) throw ShapeError("encoder parameters must be finite");
}

std::vector<std::span<double>> EncoderParams::blocks() {
  return {as_span(w0_), as_span(w1_), as_span(w2_), as_span(gate_),
          std::span<double>(&bias_, 1)};
}

std::vector<std::span<const double>> EncoderParams::blocks() const {
  return {as_span(w0_), as_span(w1_), as_span(w2_), as_span(gate_),
          std::span<const double>(&bias_, 1)};
}

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for (auto b : blocks()) n += b.size();
  return n;
}

bool EncoderParams::all_finite() const {
  return w0_.allFinite() && w1_.allFinite() && w2_.allFinite() &&
         gate_.allFinite() && std::isfinite(bias_);
}

GradientSet::GradientSet(EncoderDims dims)
    : w0(Eigen::MatrixXd::Zero(kDescriptorSize, dims.h0)),
      w1(Eigen::MatrixXd::Zero(dims.h0, dims.h1)),
      w2(Eigen::MatrixXd::Zero(dims.h1, dims.h2)),
      gate(Eigen::VectorXd::Zero(dims.h2)) {}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  w0 += other.w0;
  w1 += other.w1;
  w2 += other.w2;
  gate += other.gate;
  bias += other.bias;
  return *this;
}

GradientSet& GradientSet::operator*=(double factor) {
  w0 *= factor;
  w1 *= factor;
  w2 *= factor;
  gate *= factor;
  bias *= factor;
  return *this;
}

std::vector<std::span<const double>> GradientSet::blocks() const {
  return {as_span(w0), as_span(w1), as_span(w2), as_span(gate),
          std::span<const double>(&bias, 1)};
}

bool GradientSet::all_finite() const {
  return w0.allFinite() && w1.allFinite() && w2.allFinite() &&
         gate.allFinite() && std::isfinite(bias);
}

void sgd_step(EncoderParams& params, const GradientSet& grads,
              double learning_rate) {
  auto dst = params.blocks();
  const auto src = grads.blocks();
  for (std::size_t b = 0; b < dst.size(); ++b) {
    if (dst[b].size() != src[b].size()) {
      throw ShapeError("gradient shapes disagree with parameters");
    }
    for (std::size_t i = 0; i < dst[b].size(); ++i) {
      dst[b][i] -= learning_rate * src[b][i];
    }
  }
}

EncoderParams init_params(std::uint64_t seed, EncoderDims dims) {
  EncoderParams params(dims);
  std::mt19937_64 rng(seed);
  auto fill = [&](std::span<double> block, std::size_t fan_in,
                  std::size_t fan_out) {
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-s, s);
    for (double& v : block) v = dist(rng);
  };
  auto blocks = params.blocks();
  fill(blocks[0], kDescriptorSize, dims.h0);
  fill(blocks[1], dims.h0, dims.h1);
  fill(blocks[2], dims.h1, dims.h2);
  fill(blocks[3], dims.h2, 1);
  return params;
}

ForwardPass::ForwardPass(const EncoderParams& params,
                         const Eigen::MatrixXd& features,
                         const NormalizedAdjacency& a_hat)
    : params_(params), features_(features), a_(a_hat.matrix) {
  check_inputs(features, a_hat);
  z0_.noalias() = a_ * (features_ * params_.w0());
  h1_ = relu(z0_);
  z1_.noalias() = a_ * (h1_ * params_.w1());
  h2_ = relu(z1_);
  const Eigen::MatrixXd h3 = a_ * (h2_ * params_.w2());
  f_ = rowwise_softmax(h3);
  const Eigen::VectorXd scores = (f_ * params_.gate()).array() + params_.bias();
  alpha_ = scores.unaryExpr([](double s) { return sigmoid(s); });
  embedding_.values.noalias() = f_.transpose() * alpha_;
}

GradientSet ForwardPass::backward(const Eigen::VectorXd& upstream) const {
  if (upstream.size() != static_cast<Eigen::Index>(params_.dims().h2)) {
    throw ShapeError("upstream gradient length must equal embedding length");
  }
  GradientSet g(params_.dims());

  // Pooling: e = F^T alpha, alpha = sigmoid(F gate + b).
  const Eigen::VectorXd coupling = f_ * upstream;  // u . F_i
  const Eigen::VectorXd dscore =
      coupling.array() * alpha_.array() * (1.0 - alpha_.array());
  g.gate.noalias() = f_.transpose() * dscore;
  g.bias = dscore.sum();
  Eigen::MatrixXd df = alpha_ * upstream.transpose();
  df.noalias() += dscore * params_.gate().transpose();

  // Row-wise softmax.
  const Eigen::VectorXd row_dot = df.cwiseProduct(f_).rowwise().sum();
  const Eigen::MatrixXd dh3 =
      f_.cwiseProduct(df - row_dot.replicate(1, df.cols()));

  // Layer 3: H3 = A (H2 W2).
  const Eigen::MatrixXd dp2 = a_.transpose() * dh3;
  g.w2.noalias() = h2_.transpose() * dp2;
  Eigen::MatrixXd dz1 = dp2 * params_.w2().transpose();
  dz1 = (z1_.array() > 0.0).select(dz1, 0.0);

  // Layer 2: Z1 = A (H1 W1).
  const Eigen::MatrixXd dp1 = a_.transpose() * dz1;
  g.w1.noalias() = h1_.transpose() * dp1;
  Eigen::MatrixXd dz0 = dp1 * params_.w1().transpose();
  dz0 = (z0_.array() > 0.0).select(dz0, 0.0);

  // Layer 1: Z0 = A (X W0).
  const Eigen::MatrixXd dxw = a_.transpose() * dz0;
  g.w0.noalias() = features_.transpose() * dxw;
  return g;
}

Embedding encode(const EncoderParams& params, const Eigen::MatrixXd& features,
                 const NormalizedAdjacency& a_hat) {
  return ForwardPass(params, features, a_hat).embedding();
}

Embedding encode(const EncoderParams& params, const FloorGraph& graph) {
  const Eigen::MatrixXd x = feature_matrix(graph);
  const NormalizedAdjacency a = normalize_adjacency(graph);
  return encode(params, x, a);
}

EncodeResult encode_with_gradients(const EncoderParams& params,
                                   const Eigen::MatrixXd& features,
                                   const NormalizedAdjacency& a_hat,
                                   const Eigen::VectorXd& upstream) {
  ForwardPass pass(params, features, a_hat);
  return {pass.embedding(), pass.backward(upstream)};
}

double embedding_distance(const Embedding& a, const Embedding& b) {
  if (a.values.size() != b.values.size()) {
    throw ShapeError("embedding lengths differ");
  }
  return (a.values - b.values).norm();
}

std::vector<std::uint8_t> serialize_params(const EncoderParams& params) {
  detail::ByteWriter w;
  w.put_bytes(kEncoderMagic);
  w.put<std::uint32_t>(params.dims().h0);
  w.put<std::uint32_t>(params.dims().h1);
  w.put<std::uint32_t>(params.dims().h2);
  auto put_matrix = [&](const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        w.put<float>(static_cast<float>(m(r, c)));
      }
    }
  };
  put_matrix(params.w0());
  put_matrix(params.w1());
  put_matrix(params.w2());
  for (Eigen::Index i = 0; i < params.gate().size(); ++i) {
    w.put<float>(static_cast<float>(params.gate()[i]));
  }
  w.put<float>(static_cast<float>(params.bias()));
  return std::move(w.bytes());
}

EncoderParams deserialize_params(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (r.get_bytes(kEncoderMagic.size()) != kEncoderMagic) {
    throw FormatError("not an FGENC1 encoder file");
  }
  EncoderDims dims;
  dims.h0 = r.get<std::uint32_t>();
  dims.h1 = r.get<std::uint32_t>();
  dims.h2 = r.get<std::uint32_t>();
  if (dims.h0 == 0 || dims.h1 == 0 || dims.h2 == 0 || dims.h0 > 65536 ||
      dims.h1 > 65536 || dims.h2 > 65536) {
    throw FormatError("encoder file has invalid dims");
  }
  auto get_matrix = [&](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = r.get<float>();
    }
    return m;
  };
  Eigen::MatrixXd w0 = get_matrix(kDescriptorSize, dims.h0);
  Eigen::MatrixXd w1 = get_matrix(dims.h0, dims.h1);
  Eigen::MatrixXd w2 = get_matrix(dims.h1, dims.h2);
  Eigen::VectorXd gate(dims.h2);
  for (Eigen::Index i = 0; i < gate.size(); ++i) gate[i] = r.get<float>();
  const double bias = r.get<float>();
  if (!r.at_end()) throw FormatError("trailing bytes in encoder file");
  try {
    return EncoderParams(dims, std::move(w0), std::move(w1), std::move(w2),
                         std::move(gate), bias);
  } catch (const ShapeError& e) {
    throw FormatError(e.what());
  }
}

void save_params(const EncoderParams& params,
                 const std::filesystem::path& path) {
  detail::write_file_bytes(path.string(), serialize_params(params));
}

EncoderParams load_params(const std::filesystem::path& path) {
  return deserialize_params(detail::read_file_bytes(path.string()));
}

std::uint64_t fingerprint(const EncoderParams& params) {
  return detail::fnv1a64(serialize_params(params));
}

}  // namespace floorloc
