#include "animgan/dataset.hpp"

#include "animgan/bvh.hpp"
#include "animgan/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace animgan {

namespace fs = std::filesystem;
using json = nlohmann::json;

Dataset load_dataset(const fs::path& dir) {
  require(fs::is_directory(dir), ErrorKind::Data, dir.string() + " is not a directory");
  Dataset out;
  const fs::path manifest = dir / kManifestName;
  if (!fs::exists(manifest)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".bvh") {
        files.push_back(e.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) {
      out.push_back(DatasetEntry{f.stem().string(), bvh::read_file(f).motion, "original", {}, {}});
    }
    require(!out.empty(), ErrorKind::Data, "no .bvh files in " + dir.string());
    return out;
  }

  std::ifstream in(manifest);
  require(static_cast<bool>(in), ErrorKind::Data, "cannot read " + manifest.string());
  json doc;
  try {
    doc = json::parse(in);
    for (const json& e : doc.at("entries")) {
      const std::string file = e.at("file").get<std::string>();
      DatasetEntry entry;
      entry.id = fs::path(file).stem().string();
      entry.motion = bvh::read_file(dir / file).motion;
      if (e.contains("label") && !e.at("label").is_null()) {
        entry.motion.label = e.at("label").get<std::string>();
      }
      if (e.contains("source")) {
        entry.motion.source = source_from_string(e.at("source").get<std::string>());
      }
      entry.op = e.value("op", std::string("original"));
      if (e.contains("parents")) {
        entry.parents = e.at("parents").get<std::vector<std::string>>();
      }
      if (e.contains("seed") && !e.at("seed").is_null()) {
        entry.seed = e.at("seed").get<std::uint64_t>();
      }
      out.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, manifest.string() + ": " + e.what());
  }
  return out;
}

void write_dataset(const fs::path& dir, const Dataset& dataset) {
  fs::create_directories(dir);
  json entries = json::array();
  for (const DatasetEntry& e : dataset) {
    const std::string file = e.id + ".bvh";
    bvh::write_file(dir / file, *e.motion.skeleton, e.motion);
    json row;
    row["file"] = file;
    row["label"] = e.motion.label ? json(*e.motion.label) : json(nullptr);
    row["source"] = to_string(e.motion.source);
    row["op"] = e.op;
    row["parents"] = e.parents;
    row["seed"] = e.seed ? json(*e.seed) : json(nullptr);
    entries.push_back(std::move(row));
  }
  json doc;
  doc["entries"] = std::move(entries);
  std::ofstream out(dir / kManifestName);
  require(static_cast<bool>(out), ErrorKind::Data, "cannot write manifest in " + dir.string());
  out << doc.dump(2) << '\n';
}

std::vector<MotionSequence> motions_of(const Dataset& dataset) {
  std::vector<MotionSequence> out;
  out.reserve(dataset.size());
  for (const DatasetEntry& e : dataset) {
    out.push_back(e.motion);
  }
  return out;
}

Dataset dataset_from_motions(std::vector<MotionSequence> motions, const std::string& prefix) {
  Dataset out;
  out.reserve(motions.size());
  for (std::size_t i = 0; i < motions.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "-%05zu", i);
    out.push_back(DatasetEntry{prefix + buf, std::move(motions[i]), "original", {}, {}});
  }
  return out;
}

}  // namespace animgan
