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

#include "floorloc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "floorloc/graph.hpp"
#include "text_format.hpp"

namespace floorloc {
namespace {

constexpr std::size_t kOpenEnd = std::numeric_limits<std::size_t>::max();

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = seed ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xc2b2ae3d27d4eb4fULL);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double planar_distance(const Pose& a, const Pose& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace

std::string to_string(StageName stage) {
  switch (stage) {
    case StageName::kEasy: return "easy";
    case StageName::kMedium: return "medium";
    case StageName::kHard: return "hard";
  }
  return "unknown";
}

CurriculumStage CurriculumStage::easy() {
  return {StageName::kEasy, {0, 1}, {100, kOpenEnd}};
}

CurriculumStage CurriculumStage::medium() {
  return {StageName::kMedium, {0, 5}, {9, 100}};
}

CurriculumStage CurriculumStage::hard() {
  return {StageName::kHard, {2, 5}, {99, 1000}};
}

Rankings rank_views_by_distance(std::span<const PosedView> views) {
  if (views.size() < 2) {
    throw InsufficientData("ranking needs at least 2 views, got " +
                           std::to_string(views.size()));
  }
  Rankings out;
  out.ids.reserve(views.size());
  for (const PosedView& v : views) out.ids.push_back(v.id);
  out.neighbors.resize(views.size());
  std::vector<double> dist(views.size());
  for (std::size_t i = 0; i < views.size(); ++i) {
    for (std::size_t j = 0; j < views.size(); ++j) {
      dist[j] = planar_distance(views[i].pose, views[j].pose);
    }
    auto& list = out.neighbors[i];
    list.reserve(views.size() - 1);
    for (std::size_t j = 0; j < views.size(); ++j) {
      if (j != i) list.push_back(static_cast<std::uint32_t>(j));
    }
    std::sort(list.begin(), list.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (dist[a] != dist[b]) return dist[a] < dist[b];
      return views[a].id < views[b].id;
    });
  }
  return out;
}

RankWindow truncate_window(RankWindow window, std::size_t size) {
  if (size == 0) throw InsufficientData("empty neighbor list");
  window.end = std::min(window.end, size);
  if (window.begin >= window.end) {
    window.begin = size - 1;
    window.end = size;
  }
  return window;
}

std::vector<TrainingPair> sample_pairs(const CurriculumStage& stage,
                                       const Rankings& rankings,
                                       std::size_t count, std::uint64_t seed) {
  if (rankings.ids.size() < 2) {
    throw InsufficientData("pair sampling needs at least 2 views");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> anchor_dist(0, rankings.ids.size() - 1);
  std::vector<TrainingPair> pairs;
  pairs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int label = i % 2 == 0 ? 1 : 0;
    const std::size_t anchor = anchor_dist(rng);
    const auto& list = rankings.neighbors[anchor];
    const RankWindow w =
        truncate_window(label == 1 ? stage.positive : stage.negative, list.size());
    std::uniform_int_distribution<std::size_t> pick(w.begin, w.end - 1);
    const std::uint32_t partner = list[pick(rng)];
    pairs.push_back({rankings.ids[anchor], rankings.ids[partner], label});
  }
  return pairs;
}

ContrastiveLoss contrastive_loss(double distance, int label, double margin) {
  // NaN passes through so callers can report divergence.
  if (distance < 0.0) throw PreconditionError("distance must be >= 0");
  if (!(margin > 0.0)) throw PreconditionError("margin must be positive");
  if (label != 0 && label != 1) throw PreconditionError("label must be 0 or 1");
  if (label == 1) return {distance * distance, 2.0 * distance};
  const double gap = margin - distance;
  if (gap <= 0.0) return {0.0, 0.0};
  return {gap * gap, -2.0 * gap};
}

GraphInput make_input(const FloorGraph& graph) {
  return {feature_matrix(graph), normalize_adjacency(graph)};
}

PairResult pair_loss_and_gradients(const EncoderParams& params,
                                   const GraphInput& a, const GraphInput& b,
                                   int label, double margin) {
  const ForwardPass pa(params, a.features, a.a_hat);
  const ForwardPass pb(params, b.features, b.a_hat);
  const Eigen::VectorXd diff = pa.embedding().values - pb.embedding().values;
  const double d = diff.norm();
  const ContrastiveLoss cl = contrastive_loss(d, label, margin);
  PairResult out{cl.loss, d, GradientSet(params.dims())};
  // At d == 0 the direction is undefined; the zero subgradient is used.
  if (d > 0.0 && cl.d_distance != 0.0) {
    const Eigen::VectorXd upstream = (cl.d_distance / d) * diff;
    out.gradients = pa.backward(upstream);
    out.gradients += pb.backward(-upstream);
  }
  return out;
}

double pair_loss(const EncoderParams& params, const GraphInput& a,
                 const GraphInput& b, int label, double margin) {
  const double d = embedding_distance(encode(params, a.features, a.a_hat),
                                      encode(params, b.features, b.a_hat));
  return contrastive_loss(d, label, margin).loss;
}

StageName stage_for_epoch(std::size_t epoch, std::size_t total, bool curriculum) {
  if (!curriculum) return StageName::kMedium;
  if (epoch == 0 || total == 0) throw PreconditionError("epochs are 1-based");
  const std::size_t third = (std::min(epoch, total) - 1) * 3 / total;
  return third == 0 ? StageName::kEasy
                    : third == 1 ? StageName::kMedium : StageName::kHard;
}

std::size_t epoch_budget(const TrainConfig& config) {
  if (!config.curriculum_enabled) return config.max_epochs;
  const auto reduced = static_cast<std::size_t>(
      std::llround(static_cast<double>(config.max_epochs) *
                   config.curriculum_epoch_factor));
  return std::max<std::size_t>(1, reduced);
}

TrainResult fit(const std::vector<ViewRecord>& views, const CameraModel& camera,
                const TrainConfig& config) {
  if (!(config.margin > 0.0) || !(config.learning_rate > 0.0) ||
      config.max_epochs == 0 || config.batch_size == 0 ||
      config.batches_per_epoch == 0 || config.validation_pairs == 0 ||
      !(config.validation_fraction > 0.0 && config.validation_fraction < 1.0) ||
      !(config.curriculum_epoch_factor > 0.0)) {
    throw PreconditionError("invalid training configuration");
  }
  if (views.size() < 3) {
    throw InsufficientData("training needs at least 3 views, got " +
                           std::to_string(views.size()));
  }
  validate(camera);

  std::unordered_map<ViewId, std::size_t> index_of;
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (!index_of.emplace(views[i].view_id, i).second) {
      throw PreconditionError("duplicate view id " + to_string(views[i].view_id));
    }
  }

  // Hold out validation anchors.
  std::vector<std::size_t> order(views.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 split_rng(mix_seed(config.seed, 1, 0));
  std::shuffle(order.begin(), order.end(), split_rng);
  const std::size_t n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(config.validation_fraction *
                                            static_cast<double>(views.size()))),
      1, views.size() - 2);
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + n_val);
  std::vector<std::size_t> train_idx(order.begin() + n_val, order.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  std::vector<PosedView> train_posed;
  for (std::size_t i : train_idx) train_posed.push_back({views[i].view_id, views[i].pose});
  const Rankings train_rank = rank_views_by_distance(train_posed);

  // Validation pairs: anchor from the held-out set, partner from all views,
  // label by footprint overlap.
  const double similar_radius =
      0.5 * std::min(camera.footprint_width, camera.footprint_height);
  std::vector<TrainingPair> val_pairs;
  {
    std::mt19937_64 rng(mix_seed(config.seed, 2, 0));
    for (std::size_t p = 0; p < config.validation_pairs; ++p) {
      const ViewRecord& anchor = views[val_idx[p % val_idx.size()]];
      std::vector<std::size_t> near, far;
      std::size_t nearest = 0;
      double nearest_d = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < views.size(); ++j) {
        if (views[j].view_id == anchor.view_id) continue;
        const double d = planar_distance(anchor.pose, views[j].pose);
        (d < similar_radius ? near : far).push_back(j);
        if (d < nearest_d) {
          nearest_d = d;
          nearest = j;
        }
      }
      std::size_t partner = nearest;
      const auto& pool = p % 2 == 0 ? near : far;
      if (!pool.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        partner = pool[pick(rng)];
      }
      const int label =
          planar_distance(anchor.pose, views[partner].pose) < similar_radius ? 1 : 0;
      val_pairs.push_back({anchor.view_id, views[partner].view_id, label});
    }
  }

  auto input_for = [&](ViewId id) {
    const ViewRecord& v = views[index_of.at(id)];
    return make_input(build_graph(v.keypoints, config.node_count, v.view_id,
                                  config.distance_scale));
  };
  std::map<ViewId, GraphInput> val_inputs;
  for (const TrainingPair& p : val_pairs) {
    for (ViewId id : {p.a, p.b}) {
      if (!val_inputs.count(id)) val_inputs.emplace(id, input_for(id));
    }
  }
  auto validation_loss = [&](const EncoderParams& params) {
    double sum = 0.0;
    for (const TrainingPair& p : val_pairs) {
      sum += pair_loss(params, val_inputs.at(p.a), val_inputs.at(p.b), p.label,
                       config.margin);
    }
    return sum / static_cast<double>(val_pairs.size());
  };

  EncoderParams params = init_params(config.seed, config.dims);
  TrainResult result{params, {}, 0};
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  const std::size_t budget = epoch_budget(config);

  for (std::size_t epoch = 1; epoch <= budget; ++epoch) {
    const StageName stage_name =
        stage_for_epoch(epoch, budget, config.curriculum_enabled);
    const CurriculumStage stage =
        stage_name == StageName::kEasy     ? CurriculumStage::easy()
        : stage_name == StageName::kMedium ? CurriculumStage::medium()
                                           : CurriculumStage::hard();
    double epoch_loss = 0.0;
    for (std::size_t batch = 0; batch < config.batches_per_epoch; ++batch) {
      const auto pairs = sample_pairs(stage, train_rank, config.batch_size,
                                      mix_seed(config.seed, 3 + epoch, batch));
      GradientSet grads(config.dims);
      double batch_loss = 0.0;
      for (const TrainingPair& p : pairs) {
        const GraphInput a = input_for(p.a);
        const GraphInput b = input_for(p.b);
        PairResult r = pair_loss_and_gradients(params, a, b, p.label, config.margin);
        batch_loss += r.loss;
        grads += r.gradients;
      }
      const double inv = 1.0 / static_cast<double>(pairs.size());
      batch_loss *= inv;
      grads *= inv;
      if (!std::isfinite(batch_loss) || !grads.all_finite()) {
        throw NonFiniteLoss("non-finite loss in epoch " + std::to_string(epoch),
                            result.log);
      }
      sgd_step(params, grads, config.learning_rate);
      epoch_loss += batch_loss;
    }
    epoch_loss /= static_cast<double>(config.batches_per_epoch);
    const double val = validation_loss(params);
    if (!std::isfinite(val) || !params.all_finite()) {
      throw NonFiniteLoss("non-finite validation loss in epoch " +
                              std::to_string(epoch),
                          result.log);
    }
    const bool improved = val < best_val;
    result.log.push_back({epoch, stage_name, epoch_loss, val, improved});
    if (improved) {
      best_val = val;
      result.params = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best > config.patience) {
      break;
    }
  }
  return result;
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,stage,train_loss,val_loss,best_flag\n";
  for (const EpochLog& e : log) {
    out += std::to_string(e.epoch);
    out += ',';
    out += to_string(e.stage);
    out += ',';
    detail::append_double(out, e.train_loss);
    out += ',';
    detail::append_double(out, e.val_loss);
    out += e.best ? ",1\n" : ",0\n";
  }
  return out;
}

}  // namespace floorloc
