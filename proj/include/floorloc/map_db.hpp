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
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "floorloc/dataset.hpp"
#include "floorloc/encoder.hpp"
#include "floorloc/graph.hpp"

namespace floorloc {

struct MapRecord {
  ViewId view_id;
  Embedding embedding;
  Pose pose;

  friend bool operator==(const MapRecord&, const MapRecord&) = default;
};

/// Map-Database (embedding -> pose) joined with the Graph-Database
/// (view id -> graph). Immutable once constructed; graphs are shared
/// between copies, so leave-one-out variants are cheap.
class MapDatabase {
 public:
  using GraphStore = std::map<ViewId, std::shared_ptr<const FloorGraph>>;

  /// Records are sorted by view id. Throws EmptyDatabase when empty and
  /// PreconditionError when a record has no graph, ids repeat, or embedding
  /// lengths differ.
  MapDatabase(std::vector<MapRecord> records, GraphStore graphs,
              std::uint64_t encoder_fingerprint, std::size_t node_count);

  const std::vector<MapRecord>& records() const { return records_; }
  const GraphStore& graphs() const { return graphs_; }
  const FloorGraph& graph(ViewId id) const;
  std::size_t size() const { return records_.size(); }
  std::size_t embedding_size() const;
  std::uint64_t encoder_fingerprint() const { return fingerprint_; }
  std::size_t node_count() const { return node_count_; }

  /// Copy of this database with one view removed.
  MapDatabase without(ViewId id) const;
  bool contains(ViewId id) const { return graphs_.count(id) != 0; }

  friend bool operator==(const MapDatabase& a, const MapDatabase& b);

 private:
  std::vector<MapRecord> records_;
  GraphStore graphs_;
  std::uint64_t fingerprint_;
  std::size_t node_count_;
};

struct BuildLog {
  std::vector<std::string> skipped;
};

/// Encodes every view. Embeddings are rounded to binary32, the persisted
/// precision, so an in-memory database equals its saved-and-loaded copy.
/// Featureless views are skipped and noted in `log`; if all are skipped
/// EmptyDatabase is thrown.
MapDatabase build_map(const std::vector<ViewRecord>& views,
                      const EncoderParams& params, std::size_t node_count,
                      double distance_scale = 1.0, BuildLog* log = nullptr);

struct Neighbor {
  MapRecord record;
  double distance = 0.0;
};

/// Exact k nearest neighbors by Euclidean distance, ties broken by view id.
std::vector<Neighbor> knn_query(const MapDatabase& db, const Embedding& query,
                                std::size_t n);

std::vector<std::uint8_t> serialize_map(const MapDatabase& db);
MapDatabase deserialize_map(std::span<const std::uint8_t> bytes,
                            std::optional<std::uint64_t> expected_fingerprint);
void save_map(const MapDatabase& db, const std::filesystem::path& path);
/// Throws EncoderMismatch when `expected_fingerprint` is given and differs.
MapDatabase load_map(const std::filesystem::path& path,
                     std::optional<std::uint64_t> expected_fingerprint = {});

}  // namespace floorloc
