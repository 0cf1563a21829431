#include "quadrics/core/serialize.hpp"
#include "quadrics/dataset/io.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

namespace quadrics::dataset {
namespace {

std::string item_stem(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "object_%05zu", i);
  return buf;
}

}  // namespace

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.filename().string() + ": " + e.what());
  }
}

DatasetItem to_item(const GeneratedObject& obj, Precision precision) {
  DatasetItem item;
  const bool narrow = precision == Precision::Float32;
  item.cloud.points = narrow ? Points(obj.cloud.points.cast<float>().cast<double>())
                             : obj.cloud.points;
  if (obj.cloud.normals) {
    item.cloud.normals = narrow ? Points(obj.cloud.normals->cast<float>().cast<double>())
                                : *obj.cloud.normals;
  }
  item.labels = obj.labels;
  item.segments = obj.segments;
  return item;
}

nlohmann::json truth_to_json(const std::vector<SegmentTruth>& segments) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : segments) {
    arr.push_back({{"quadric", to_json(s.quadric)},
                   {"type", std::string(s.type.name())},
                   {"point_count", s.point_count},
                   {"center", vec_to_json(s.center)}});
  }
  return {{"segments", arr}};
}

std::vector<SegmentTruth> truth_from_json(const nlohmann::json& j, const std::string& where) {
  const auto& arr = require(j, "segments", where);
  if (!arr.is_array()) throw SchemaError(where + ".segments: expected an array");
  std::vector<SegmentTruth> out;
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string w = where + ".segments[" + std::to_string(k) + "]";
    const auto& s = arr[k];
    if (!s.is_object()) throw SchemaError(w + ": expected an object");
    SegmentTruth t;
    t.quadric = quadric_from_json(require(s, "quadric", w), w + ".quadric");
    const auto& type = require(s, "type", w);
    if (!type.is_string()) throw SchemaError(w + ".type: expected a string");
    try {
      t.type = QuadricType::from_name(type.get<std::string>());
    } catch (const InvalidArgument& e) {
      throw SchemaError(w + ".type: " + e.what());
    }
    const auto& count = require(s, "point_count", w);
    if (!count.is_number_integer()) throw SchemaError(w + ".point_count: expected an integer");
    t.point_count = count.get<Eigen::Index>();
    if (s.contains("center")) t.center = vec_from_json(s["center"], w + ".center", 3);
    t.decomposition = decompose(t.quadric);
    out.push_back(std::move(t));
  }
  return out;
}

void write_item(const std::filesystem::path& ply, const std::filesystem::path& json,
                const DatasetItem& item, Precision precision) {
  write_ply(ply, item.cloud, &item.labels, precision);
  write_json(json, truth_to_json(item.segments));
}

DatasetItem read_item(const std::filesystem::path& ply, const std::filesystem::path& json) {
  PlyCloud p = read_ply(ply);
  DatasetItem item;
  item.cloud = std::move(p.cloud);
  if (!p.segment_ids) throw SchemaError(ply.filename().string() + ": missing segment_id");
  item.labels = std::move(*p.segment_ids);
  item.segments = truth_from_json(read_json(json), json.filename().string());
  std::vector<Eigen::Index> counts(item.segments.size(), 0);
  for (std::size_t i = 0; i < item.labels.size(); ++i) {
    const int l = item.labels[i];
    if (l < 0 || l >= static_cast<int>(item.segments.size())) {
      throw SchemaError(ply.filename().string() + ": vertex " + std::to_string(i) +
                        " has segment_id " + std::to_string(l) + " without a truth entry");
    }
    ++counts[static_cast<std::size_t>(l)];
  }
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] != item.segments[k].point_count) {
      throw SchemaError(json.filename().string() + ": segments[" + std::to_string(k) +
                        "].point_count disagrees with the point file");
    }
  }
  return item;
}

namespace {

nlohmann::json manifest_json(std::size_t count, const GeneratorConfig& config,
                             const nlohmann::json& extra) {
  nlohmann::json items = nlohmann::json::array();
  for (std::size_t i = 0; i < count; ++i) {
    const std::string stem = item_stem(i);
    items.push_back({{"points", stem + ".ply"}, {"truth", stem + ".json"}});
  }
  nlohmann::json m = {{"seed", config.seed}, {"generator", to_json(config)}, {"items", items}};
  for (const auto& [k, v] : extra.items()) m[k] = v;
  return m;
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const std::vector<DatasetItem>& items,
                   const GeneratorConfig& config) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string stem = item_stem(i);
    write_item(dir / (stem + ".ply"), dir / (stem + ".json"), items[i], config.precision);
  }
  write_json(dir / "manifest.json", manifest_json(items.size(), config, nlohmann::json::object()));
}

void generate_dataset(const std::filesystem::path& dir, const GeneratorConfig& config,
                      std::size_t count, const nlohmann::json& extra, int threads) {
  config.validate();
  std::filesystem::create_directories(dir);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  const auto work = [&]() {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        const DatasetItem item = to_item(generate_item(config, i), config.precision);
        const std::string stem = item_stem(i);
        write_item(dir / (stem + ".ply"), dir / (stem + ".json"), item, config.precision);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int n = std::max(1, threads);
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  write_json(dir / "manifest.json", manifest_json(count, config, extra));
}

DatasetReader::DatasetReader(const std::filesystem::path& dir) : dir_(dir) {
  manifest_ = read_json(dir / "manifest.json");
  const auto& items = require(manifest_, "items", "manifest");
  if (!items.is_array()) throw SchemaError("manifest.items: expected an array");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string w = "manifest.items[" + std::to_string(i) + "]";
    const auto& p = require(items[i], "points", w);
    const auto& t = require(items[i], "truth", w);
    if (!p.is_string() || !t.is_string()) throw SchemaError(w + ": expected file names");
    entries_.push_back({dir / p.get<std::string>(), dir / t.get<std::string>()});
  }
}

DatasetItem DatasetReader::read(std::size_t i) const {
  if (i >= entries_.size()) throw InvalidArgument("dataset index out of range");
  return read_item(entries_[i].ply, entries_[i].json);
}

std::optional<DatasetItem> DatasetReader::next() {
  if (cursor_ >= entries_.size()) return std::nullopt;
  return read(cursor_++);
}

std::vector<DatasetItem> read_dataset(const std::filesystem::path& dir) {
  DatasetReader reader(dir);
  std::vector<DatasetItem> out;
  while (auto item = reader.next()) out.push_back(std::move(*item));
  return out;
}

}  // namespace quadrics::dataset
