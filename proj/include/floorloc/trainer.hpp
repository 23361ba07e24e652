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

#include "floorloc/dataset.hpp"
#include "floorloc/encoder.hpp"
#include "floorloc/errors.hpp"

namespace floorloc {

struct TrainingPair {
  ViewId a;
  ViewId b;
  int label = 0;  // 1 similar, 0 dissimilar

  friend bool operator==(const TrainingPair&, const TrainingPair&) = default;
};

/// Half-open window [begin, end) into a distance-sorted neighbor list.
struct RankWindow {
  std::size_t begin = 0;
  std::size_t end = 0;
};

enum class StageName { kEasy, kMedium, kHard };

std::string to_string(StageName stage);

struct CurriculumStage {
  StageName name = StageName::kMedium;
  RankWindow positive;
  RankWindow negative;

  /// positive = nearest view, negative = anything from rank 100 on.
  static CurriculumStage easy();
  /// positive among the 5 nearest, negative among ranks 10..100.
  static CurriculumStage medium();
  /// positive among the 5 nearest except the 2 closest, negative among
  /// ranks 100..1000.
  static CurriculumStage hard();
};

/// For every view, all other view indices ordered by ascending (x, y)
/// distance, ties by view id. `ids[i]` is the id of view i.
struct Rankings {
  std::vector<ViewId> ids;
  std::vector<std::vector<std::uint32_t>> neighbors;
};

struct PosedView {
  ViewId id;
  Pose pose;
};

/// Throws InsufficientData for fewer than two views.
Rankings rank_views_by_distance(std::span<const PosedView> views);

/// Clamps a window to a list of `size` entries. An empty result is
/// widened to the last entry so every stage stays samplable on small data.
RankWindow truncate_window(RankWindow window, std::size_t size);

/// `count` pairs alternating positive / negative, anchors uniform over all
/// views. Deterministic for a given seed.
std::vector<TrainingPair> sample_pairs(const CurriculumStage& stage,
                                       const Rankings& rankings,
                                       std::size_t count, std::uint64_t seed);

struct ContrastiveLoss {
  double loss = 0.0;
  double d_distance = 0.0;
};

/// label * d^2 + (1 - label) * max(0, margin - d)^2 and its derivative.
ContrastiveLoss contrastive_loss(double distance, int label, double margin);

/// Encoder inputs for one graph.
struct GraphInput {
  Eigen::MatrixXd features;
  NormalizedAdjacency a_hat;
};

GraphInput make_input(const FloorGraph& graph);

struct PairResult {
  double loss = 0.0;
  double distance = 0.0;
  GradientSet gradients;
};

/// Siamese forward/backward: both inputs go through the same encoder, the
/// contrastive loss is applied to their Euclidean distance, and gradients
/// from both branches are summed.
PairResult pair_loss_and_gradients(const EncoderParams& params,
                                   const GraphInput& a, const GraphInput& b,
                                   int label, double margin);

/// Forward-only loss for a pair.
double pair_loss(const EncoderParams& params, const GraphInput& a,
                 const GraphInput& b, int label, double margin);

struct TrainConfig {
  double margin = 1.0;
  double learning_rate = 1e-3;
  std::size_t max_epochs = 1000;
  std::size_t patience = 25;
  std::size_t batch_size = 32;
  std::size_t batches_per_epoch = 1;
  std::size_t validation_pairs = 64;
  /// Fraction of views held out as validation anchors.
  double validation_fraction = 0.1;
  std::uint64_t seed = 42;
  bool curriculum_enabled = false;
  /// Epoch budget multiplier applied when the curriculum is enabled.
  double curriculum_epoch_factor = 0.5;
  std::size_t node_count = 256;
  double distance_scale = 1.0;
  EncoderDims dims;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  StageName stage = StageName::kMedium;
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool best = false;
};

struct TrainResult {
  EncoderParams params;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
};

/// Raised when a batch loss or gradient turns non-finite; carries the log
/// up to the failing epoch.
class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss(const std::string& what, std::vector<EpochLog> log)
      : Error(ErrorCategory::kNumeric, what), log_(std::move(log)) {}
  const char* name() const noexcept override { return "NonFiniteLoss"; }
  const std::vector<EpochLog>& log() const { return log_; }

 private:
  std::vector<EpochLog> log_;
};

/// Which stage runs in a given epoch (1-based) of a `total`-epoch budget.
StageName stage_for_epoch(std::size_t epoch, std::size_t total, bool curriculum);

/// Effective epoch budget after the curriculum reduction.
std::size_t epoch_budget(const TrainConfig& config);

/// Siamese SGD training with early stopping on a held-out pair set.
/// Returns the parameters of the best validation epoch. `camera` sets the
/// similarity threshold for validation labels.
TrainResult fit(const std::vector<ViewRecord>& views, const CameraModel& camera,
                const TrainConfig& config);

/// CSV with columns epoch,stage,train_loss,val_loss,best_flag.
std::string training_log_csv(const std::vector<EpochLog>& log);

}  // namespace floorloc
