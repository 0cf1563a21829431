#pragma once

#include "quadrics/dataset/generator.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace quadrics::dataset {

/// Cloud plus optional per-point segment ids as stored in a PLY file.
struct PlyCloud {
  PointCloud cloud;
  std::optional<std::vector<int>> segment_ids;
};

/// Binary little-endian PLY with float32 x, y, z, nx, ny, nz and int32
/// segment_id (float64 on request). Normals are written only when present,
/// segment_id only when `segment_ids` is given.
void write_ply(const std::filesystem::path& path, const PointCloud& cloud,
               const std::vector<int>* segment_ids = nullptr,
               Precision precision = Precision::Float32);

/// Reads ascii or binary_little_endian PLY with x, y, z and optional nx, ny,
/// nz, segment_id. Scalar types char..double are accepted. Throws SchemaError
/// with the offending line or vertex.
PlyCloud read_ply(const std::filesystem::path& path);

/// A stored corpus item: points and labels from the PLY file, truth from the
/// JSON sidecar.
struct DatasetItem {
  PointCloud cloud;
  std::vector<int> labels;
  std::vector<SegmentTruth> segments;
};

/// Converts a generated object into its stored form: points rounded to the
/// storage precision, which is exactly what a write/read cycle yields.
DatasetItem to_item(const GeneratedObject& obj, Precision precision = Precision::Float32);

nlohmann::json truth_to_json(const std::vector<SegmentTruth>& segments);
std::vector<SegmentTruth> truth_from_json(const nlohmann::json& j, const std::string& where);

void write_item(const std::filesystem::path& ply, const std::filesystem::path& json,
                const DatasetItem& item, Precision precision = Precision::Float32);
DatasetItem read_item(const std::filesystem::path& ply, const std::filesystem::path& json);

/// Writes object_NNNNN.{ply,json} per item plus manifest.json.
void write_dataset(const std::filesystem::path& dir, const std::vector<DatasetItem>& items,
                   const GeneratorConfig& config);

/// Generates and writes items one at a time (memory bounded by one item).
/// `extra` is merged into the manifest.
void generate_dataset(const std::filesystem::path& dir, const GeneratorConfig& config,
                      std::size_t count, const nlohmann::json& extra = nlohmann::json::object(),
                      int threads = 1);

/// Streaming access to a written corpus; one item in memory at a time.
class DatasetReader {
 public:
  explicit DatasetReader(const std::filesystem::path& dir);

  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] const nlohmann::json& manifest() const { return manifest_; }
  [[nodiscard]] DatasetItem read(std::size_t i) const;
  /// Next item in order, or nullopt at the end.
  std::optional<DatasetItem> next();

 private:
  struct Entry {
    std::filesystem::path ply;
    std::filesystem::path json;
  };
  std::filesystem::path dir_;
  nlohmann::json manifest_;
  std::vector<Entry> entries_;
  std::size_t cursor_ = 0;
};

std::vector<DatasetItem> read_dataset(const std::filesystem::path& dir);

/// Shortest round-trip JSON text with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace quadrics::dataset
