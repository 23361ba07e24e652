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

#include "floorloc/map_db.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "json.hpp"

#include "byte_io.hpp"
#include "floorloc/errors.hpp"

namespace floorloc {
namespace {

constexpr std::string_view kMapMagic = "FGMAP1";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

MapDatabase::MapDatabase(std::vector<MapRecord> records, GraphStore graphs,
                         std::uint64_t encoder_fingerprint,
                         std::size_t node_count)
    : records_(std::move(records)), graphs_(std::move(graphs)),
      fingerprint_(encoder_fingerprint), node_count_(node_count) {
  if (records_.empty()) throw EmptyDatabase("map database has no records");
  std::sort(records_.begin(), records_.end(),
            [](const MapRecord& a, const MapRecord& b) {
              return a.view_id < b.view_id;
            });
  const Eigen::Index dim = records_.front().embedding.values.size();
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (i > 0 && records_[i].view_id == records_[i - 1].view_id) {
      throw PreconditionError("duplicate view id " +
                              to_string(records_[i].view_id));
    }
    if (records_[i].embedding.values.size() != dim) {
      throw PreconditionError("embedding lengths differ across records");
    }
    const auto g = graphs_.find(records_[i].view_id);
    if (g == graphs_.end() || !g->second) {
      throw PreconditionError("record " + to_string(records_[i].view_id) +
                              " has no graph");
    }
  }
}

const FloorGraph& MapDatabase::graph(ViewId id) const {
  const auto it = graphs_.find(id);
  if (it == graphs_.end()) {
    throw PreconditionError("view " + to_string(id) + " is not in the map");
  }
  return *it->second;
}

std::size_t MapDatabase::embedding_size() const {
  return records_.front().embedding.size();
}

MapDatabase MapDatabase::without(ViewId id) const {
  std::vector<MapRecord> records;
  records.reserve(records_.size());
  for (const MapRecord& r : records_) {
    if (r.view_id != id) records.push_back(r);
  }
  GraphStore graphs = graphs_;
  graphs.erase(id);
  return MapDatabase(std::move(records), std::move(graphs), fingerprint_,
                     node_count_);
}

bool operator==(const MapDatabase& a, const MapDatabase& b) {
  if (a.fingerprint_ != b.fingerprint_ || a.node_count_ != b.node_count_ ||
      a.records_ != b.records_ || a.graphs_.size() != b.graphs_.size()) {
    return false;
  }
  for (const auto& [id, g] : a.graphs_) {
    const auto it = b.graphs_.find(id);
    if (it == b.graphs_.end() || !(*it->second == *g)) return false;
  }
  return true;
}

MapDatabase build_map(const std::vector<ViewRecord>& views,
                      const EncoderParams& params, std::size_t node_count,
                      double distance_scale, BuildLog* log) {
  if (views.empty()) throw EmptyDatabase("no views to map");
  std::vector<MapRecord> records;
  records.reserve(views.size());
  MapDatabase::GraphStore graphs;
  for (const ViewRecord& view : views) {
    try {
      auto graph = std::make_shared<const FloorGraph>(
          build_graph(view.keypoints, node_count, view.view_id, distance_scale));
      Embedding e = encode(params, *graph);
      // Persisted precision.
      for (Eigen::Index i = 0; i < e.values.size(); ++i) {
        e.values[i] = static_cast<float>(e.values[i]);
      }
      records.push_back({view.view_id, std::move(e), view.pose});
      if (!graphs.emplace(view.view_id, std::move(graph)).second) {
        throw PreconditionError("duplicate view id " + to_string(view.view_id));
      }
    } catch (const EmptyView& e) {
      if (log) log->skipped.push_back(to_string(view.view_id) + ": " + e.what());
    }
  }
  if (records.empty()) throw EmptyDatabase("every view was skipped");
  return MapDatabase(std::move(records), std::move(graphs), fingerprint(params),
                     node_count);
}

std::vector<Neighbor> knn_query(const MapDatabase& db, const Embedding& query,
                                std::size_t n) {
  if (n == 0) throw PreconditionError("n must be at least 1");
  if (query.size() != db.embedding_size()) {
    throw ShapeError("query embedding length differs from the database");
  }
  const auto& records = db.records();
  std::vector<double> distance(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    distance[i] = embedding_distance(query, records[i].embedding);
  }
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t k = std::min(n, records.size());
  // Records are sorted by id, so index order is the id tie-break.
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (distance[a] != distance[b]) {
                        return distance[a] < distance[b];
                      }
                      return a < b;
                    });
  std::vector<Neighbor> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back({records[order[i]], distance[order[i]]});
  }
  return out;
}

std::vector<std::uint8_t> serialize_map(const MapDatabase& db) {
  detail::ByteWriter w;
  w.put_bytes(kMapMagic);
  w.put_bytes("\n");
  const nlohmann::json header = {{"records", db.size()},
                                 {"dim", db.embedding_size()},
                                 {"fingerprint", hex64(db.encoder_fingerprint())},
                                 {"node_count", db.node_count()}};
  w.put_bytes(header.dump());
  w.put_bytes("\n");
  for (const MapRecord& r : db.records()) {
    w.put<std::uint32_t>(r.view_id.value);
    w.put<double>(r.pose.x);
    w.put<double>(r.pose.y);
    w.put<double>(r.pose.r);
    for (Eigen::Index i = 0; i < r.embedding.values.size(); ++i) {
      w.put<float>(static_cast<float>(r.embedding.values[i]));
    }
  }
  for (const MapRecord& r : db.records()) {
    const FloorGraph& g = db.graph(r.view_id);
    w.put<std::uint32_t>(g.view_id().value);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(g.size()));
    w.put<double>(g.distance_scale());
    for (const Keypoint& k : g.nodes()) {
      w.put<float>(k.m);
      w.put<float>(k.n);
      w.put<float>(k.response);
      for (float d : k.descriptor) w.put<float>(d);
    }
  }
  return std::move(w.bytes());
}

MapDatabase deserialize_map(std::span<const std::uint8_t> bytes,
                            std::optional<std::uint64_t> expected_fingerprint) {
  detail::ByteReader r(bytes);
  if (r.get_line() != kMapMagic) throw FormatError("not an FGMAP1 map file");
  std::size_t count = 0;
  std::size_t dim = 0;
  std::size_t node_count = 0;
  std::uint64_t fp = 0;
  try {
    const auto header = nlohmann::json::parse(r.get_line());
    count = header.at("records").get<std::size_t>();
    dim = header.at("dim").get<std::size_t>();
    node_count = header.at("node_count").get<std::size_t>();
    fp = std::stoull(header.at("fingerprint").get<std::string>(), nullptr, 16);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad map header: ") + e.what());
  } catch (const std::logic_error& e) {
    throw FormatError(std::string("bad map fingerprint: ") + e.what());
  }
  if (expected_fingerprint && *expected_fingerprint != fp) {
    throw EncoderMismatch("map was built with encoder " + hex64(fp) +
                          ", not " + hex64(*expected_fingerprint));
  }
  if (count == 0) throw EmptyDatabase("map file holds no records");
  if (dim == 0 || dim > 65536) throw FormatError("bad embedding dimension");

  std::vector<MapRecord> records(count);
  for (MapRecord& rec : records) {
    rec.view_id = ViewId{r.get<std::uint32_t>()};
    rec.pose.x = r.get<double>();
    rec.pose.y = r.get<double>();
    rec.pose.r = r.get<double>();
    rec.embedding.values.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
      rec.embedding.values[static_cast<Eigen::Index>(i)] = r.get<float>();
    }
  }
  MapDatabase::GraphStore graphs;
  for (std::size_t g = 0; g < count; ++g) {
    const ViewId id{r.get<std::uint32_t>()};
    const std::uint32_t nodes = r.get<std::uint32_t>();
    const double scale = r.get<double>();
    std::vector<Keypoint> kps(nodes);
    for (Keypoint& k : kps) {
      k.m = r.get<float>();
      k.n = r.get<float>();
      k.response = r.get<float>();
      for (float& d : k.descriptor) d = r.get<float>();
    }
    try {
      graphs.emplace(id, std::make_shared<const FloorGraph>(id, std::move(kps),
                                                            scale));
    } catch (const Error& e) {
      throw FormatError(std::string("bad graph block: ") + e.what());
    }
  }
  if (!r.at_end()) throw FormatError("trailing bytes in map file");
  try {
    return MapDatabase(std::move(records), std::move(graphs), fp, node_count);
  } catch (const PreconditionError& e) {
    throw FormatError(e.what());
  }
}

void save_map(const MapDatabase& db, const std::filesystem::path& path) {
  detail::write_file_bytes(path.string(), serialize_map(db));
}

MapDatabase load_map(const std::filesystem::path& path,
                     std::optional<std::uint64_t> expected_fingerprint) {
  return deserialize_map(detail::read_file_bytes(path.string()),
                         expected_fingerprint);
}

}  // namespace floorloc
