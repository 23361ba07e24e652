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

#include "floorloc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "floorloc/errors.hpp"

namespace floorloc {
namespace {

using FloatMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

FloatMatrix descriptor_matrix(const FloorGraph& g) {
  FloatMatrix d(static_cast<Eigen::Index>(g.size()),
                static_cast<Eigen::Index>(kDescriptorSize));
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::copy(g.nodes()[i].descriptor.begin(), g.nodes()[i].descriptor.end(),
              d.row(static_cast<Eigen::Index>(i)).data());
  }
  return d;
}

double exact_distance(const Descriptor& a, const Descriptor& b) {
  double sq = 0.0;
  for (std::size_t k = 0; k < kDescriptorSize; ++k) {
    const double d = static_cast<double>(a[k]) - b[k];
    sq += d * d;
  }
  return std::sqrt(sq);
}

struct NearestPair {
  Eigen::Index first = -1;
  Eigen::Index second = -1;
};

// Candidate ranking uses |q|^2 + |b|^2 - 2 q.b in single precision; callers
// recompute distances of the selected candidates exactly.
std::vector<NearestPair> nearest_two(const FloorGraph& query,
                                     const FloorGraph& base) {
  const FloatMatrix q = descriptor_matrix(query);
  const FloatMatrix b = descriptor_matrix(base);
  const Eigen::VectorXf qn = q.rowwise().squaredNorm();
  const Eigen::RowVectorXf bn = b.rowwise().squaredNorm().transpose();
  FloatMatrix sq = -2.0f * (q * b.transpose());
  sq.colwise() += qn;
  sq.rowwise() += bn;

  std::vector<NearestPair> out(static_cast<std::size_t>(q.rows()));
  for (Eigen::Index i = 0; i < sq.rows(); ++i) {
    float best = std::numeric_limits<float>::infinity();
    float runner = best;
    NearestPair& p = out[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < sq.cols(); ++j) {
      const float v = sq(i, j);
      if (v < best) {
        runner = best;
        p.second = p.first;
        best = v;
        p.first = j;
      } else if (v < runner) {
        runner = v;
        p.second = j;
      }
    }
  }
  return out;
}

struct Normalizer {
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
};

Normalizer hartley(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0)) {
    throw DegenerateConfiguration("all correspondence points coincide");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  Normalizer n;
  n.t << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
  return n;
}

Eigen::Vector2d project(const Eigen::Matrix3d& h, const Eigen::Vector2d& p) {
  const Eigen::Vector3d q = h * p.homogeneous();
  return q.hnormalized();
}

double reprojection_error(const Eigen::Matrix3d& h, const Correspondence& c) {
  const Eigen::Vector2d local(c.p_local.n, c.p_local.m);
  const Eigen::Vector2d base(c.p_base.n, c.p_base.m);
  return (project(h, local) - base).norm();
}

}  // namespace

std::vector<Correspondence> match_descriptors(const FloorGraph& query,
                                              const FloorGraph& base,
                                              double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw PreconditionError("ratio must lie in (0, 1)");
  }
  const auto candidates = nearest_two(query, base);
  constexpr std::size_t kUnmatched = std::numeric_limits<std::size_t>::max();
  // Best accepted query index per base node, for one-to-one resolution.
  std::vector<std::size_t> owner(base.size(), kUnmatched);
  std::vector<double> owner_dist(base.size(),
                                 std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const NearestPair& c = candidates[i];
    if (c.first < 0) continue;
    const Descriptor& qd = query.nodes()[i].descriptor;
    const double d1 =
        exact_distance(qd, base.nodes()[static_cast<std::size_t>(c.first)].descriptor);
    const double d2 =
        c.second < 0
            ? std::numeric_limits<double>::infinity()
            : exact_distance(qd, base.nodes()[static_cast<std::size_t>(c.second)].descriptor);
    if (!(d1 < ratio * d2)) continue;
    const auto j = static_cast<std::size_t>(c.first);
    if (d1 < owner_dist[j]) {
      owner[j] = i;
      owner_dist[j] = d1;
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t j = 0; j < owner.size(); ++j) {
    if (owner[j] != kUnmatched) pairs.emplace_back(owner[j], j);
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<Correspondence> out;
  out.reserve(pairs.size());
  for (auto [i, j] : pairs) {
    const Keypoint& q = query.nodes()[i];
    const Keypoint& b = base.nodes()[j];
    out.push_back({{q.m, q.n}, {b.m, b.n}});
  }
  return out;
}

std::vector<double> min_descriptor_distances(const FloorGraph& query,
                                             const FloorGraph& base) {
  const auto candidates = nearest_two(query, base);
  std::vector<double> out(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto j = static_cast<std::size_t>(candidates[i].first);
    out[i] = exact_distance(query.nodes()[i].descriptor, base.nodes()[j].descriptor);
    // The single-precision ranking can swap near-ties; the runner-up decides.
    if (candidates[i].second >= 0) {
      const auto k = static_cast<std::size_t>(candidates[i].second);
      out[i] = std::min(out[i], exact_distance(query.nodes()[i].descriptor,
                                               base.nodes()[k].descriptor));
    }
  }
  return out;
}

HomographyFit estimate_homography(std::span<const Correspondence> matches) {
  if (matches.size() < 4) {
    throw TooFewMatches("homography needs at least 4 correspondences, got " +
                        std::to_string(matches.size()));
  }
  const std::size_t k = matches.size();
  std::vector<Eigen::Vector2d> src(k), dst(k);
  for (std::size_t i = 0; i < k; ++i) {
    src[i] = {matches[i].p_local.n, matches[i].p_local.m};
    dst[i] = {matches[i].p_base.n, matches[i].p_base.m};
  }
  const Normalizer ns = hartley(src);
  const Normalizer nd = hartley(dst);

  // At least 9 rows so the full V always contains the null direction.
  Eigen::MatrixXd a =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(std::max<std::size_t>(2 * k, 9)), 9);
  for (std::size_t i = 0; i < k; ++i) {
    const Eigen::Vector3d p = ns.t * src[i].homogeneous();
    const Eigen::Vector3d q = nd.t * dst[i].homogeneous();
    const double x = p.x(), y = p.y();
    const double u = q.x(), v = q.y();
    const auto r = static_cast<Eigen::Index>(2 * i);
    a.row(r) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    a.row(r + 1) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  // A unique solution needs rank 8: the second smallest singular value must
  // be clearly nonzero.
  if (!(sv[7] > 1e-9 * sv[0])) {
    throw DegenerateConfiguration("correspondences do not determine a unique homography");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
  Eigen::Matrix3d hm = nd.t.inverse() * hn * ns.t;
  if (!(std::abs(hm(2, 2)) > 1e-12 * hm.norm())) {
    throw DegenerateConfiguration("homography maps the origin to infinity");
  }
  hm /= hm(2, 2);
  const double det2 = hm.topLeftCorner<2, 2>().determinant();
  if (!(std::abs(det2) > 1e-12 * hm.topLeftCorner<2, 2>().squaredNorm()) ||
      !hm.allFinite()) {
    throw DegenerateConfiguration("estimated homography is singular");
  }

  HomographyFit fit;
  fit.homography.matrix = hm;
  double sq = 0.0;
  for (const Correspondence& c : matches) {
    const double e = reprojection_error(hm, c);
    sq += e * e;
  }
  fit.rms_error = std::sqrt(sq / static_cast<double>(k));
  fit.inliers = k;
  return fit;
}

HomographyFit estimate_homography_ransac(std::span<const Correspondence> matches,
                                         const RansacOptions& options) {
  if (matches.size() < 4) {
    throw TooFewMatches("homography needs at least 4 correspondences, got " +
                        std::to_string(matches.size()));
  }
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> index(matches.size());
  std::iota(index.begin(), index.end(), std::size_t{0});
  std::vector<std::size_t> best_inliers;
  std::vector<Correspondence> sample(4);
  for (std::size_t it = 0; it < options.iterations; ++it) {
    // Partial Fisher-Yates for 4 distinct indices.
    for (std::size_t s = 0; s < 4; ++s) {
      std::uniform_int_distribution<std::size_t> pick(s, index.size() - 1);
      std::swap(index[s], index[pick(rng)]);
      sample[s] = matches[index[s]];
    }
    HomographyFit hypothesis;
    try {
      hypothesis = estimate_homography(sample);
    } catch (const DegenerateConfiguration&) {
      continue;
    }
    std::vector<std::size_t> inliers;
    for (std::size_t i = 0; i < matches.size(); ++i) {
      if (reprojection_error(hypothesis.homography.matrix, matches[i]) <
          options.inlier_threshold) {
        inliers.push_back(i);
      }
    }
    if (inliers.size() > best_inliers.size()) best_inliers = std::move(inliers);
  }
  if (best_inliers.size() < 4) {
    throw TooFewMatches("no homography hypothesis gathered 4 inliers");
  }
  std::vector<Correspondence> kept;
  kept.reserve(best_inliers.size());
  for (std::size_t i : best_inliers) kept.push_back(matches[i]);
  HomographyFit fit = estimate_homography(kept);
  fit.inliers = kept.size();
  return fit;
}

double rotation_from_homography(const Homography& h) {
  const Eigen::Matrix2d m = h.matrix.topLeftCorner<2, 2>();
  if (!m.allFinite() ||
      !(std::abs(m.determinant()) > 1e-12 * m.squaredNorm())) {
    throw DegenerateConfiguration("homography has a singular linear part");
  }
  // argmax_R trace(R^T M) over rotations: angle atan2(c - b, a + d).
  const double sin_part = m(1, 0) - m(0, 1);
  const double cos_part = m(0, 0) + m(1, 1);
  if (std::hypot(sin_part, cos_part) <= 1e-12 * m.norm()) {
    throw DegenerateConfiguration("rotation of the linear part is undefined");
  }
  return wrap_degrees(std::atan2(sin_part, cos_part) * 180.0 / M_PI);
}

double circular_median(std::span<const double> degrees) {
  if (degrees.empty()) throw PreconditionError("circular_median of no angles");
  double s = 0.0;
  double c = 0.0;
  for (double a : degrees) {
    const double rad = a * M_PI / 180.0;
    s += std::sin(rad);
    c += std::cos(rad);
  }
  // A zero resultant has no mean direction; atan2(0, 0) == 0 then.
  const double center = std::atan2(s, c) * 180.0 / M_PI;
  std::vector<std::pair<double, std::size_t>> offsets;
  offsets.reserve(degrees.size());
  for (std::size_t i = 0; i < degrees.size(); ++i) {
    offsets.emplace_back(wrap_degrees(degrees[i] - center), i);
  }
  std::sort(offsets.begin(), offsets.end());
  const std::size_t mid = offsets.size() / 2;
  // Odd counts return the middle input itself, so no rounding is added.
  if (offsets.size() % 2 == 1) return wrap_degrees(degrees[offsets[mid].second]);
  return wrap_degrees(center + 0.5 * (offsets[mid - 1].first + offsets[mid].first));
}

std::vector<int> dbscan(std::span<const Eigen::Vector2d> points, double eps,
                        std::size_t min_pts) {
  if (!(eps > 0.0)) throw PreconditionError("eps must be positive");
  if (min_pts < 1) throw PreconditionError("min_pts must be at least 1");
  constexpr int kUnvisited = -2;
  const std::size_t n = points.size();
  const double eps_sq = eps * eps;
  auto region = [&](std::size_t p) {
    std::vector<std::size_t> out;
    for (std::size_t q = 0; q < n; ++q) {
      if ((points[p] - points[q]).squaredNorm() <= eps_sq) out.push_back(q);
    }
    return out;
  };

  std::vector<int> labels(n, kUnvisited);
  int cluster = -1;
  for (std::size_t p = 0; p < n; ++p) {
    if (labels[p] != kUnvisited) continue;
    const auto seeds = region(p);
    if (seeds.size() < min_pts) {
      labels[p] = kNoise;
      continue;
    }
    ++cluster;
    labels[p] = cluster;
    std::vector<std::size_t> queue(seeds.begin(), seeds.end());
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t q = queue[head];
      if (labels[q] == kNoise) labels[q] = cluster;  // border point
      if (labels[q] != kUnvisited) continue;
      labels[q] = cluster;
      const auto grow = region(q);
      if (grow.size() >= min_pts) queue.insert(queue.end(), grow.begin(), grow.end());
    }
  }
  return labels;
}

Eigen::Vector2d largest_cluster_mean(std::span<const Eigen::Vector2d> points,
                                     std::span<const int> labels) {
  if (points.size() != labels.size()) {
    throw ShapeError("points and labels differ in length");
  }
  int max_label = kNoise;
  for (int l : labels) max_label = std::max(max_label, l);
  if (max_label < 0) throw NoCluster("every point is noise");
  std::vector<std::size_t> counts(static_cast<std::size_t>(max_label) + 1, 0);
  for (int l : labels) {
    if (l >= 0) ++counts[static_cast<std::size_t>(l)];
  }
  const auto best = static_cast<int>(
      std::max_element(counts.begin(), counts.end()) - counts.begin());
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (labels[i] == best) sum += points[i];
  }
  return sum / static_cast<double>(counts[static_cast<std::size_t>(best)]);
}

}  // namespace floorloc
