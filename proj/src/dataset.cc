#include "dehaze/dataset.h"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "dehaze/image_io.h"
#include "dehaze/model.h"

namespace dehaze {
namespace fs = std::filesystem;

namespace {

bool is_image(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp" || ext == ".tif" ||
         ext == ".tiff";
}

void warn(std::vector<std::string>* warnings, std::string msg) {
  if (warnings) warnings->push_back(std::move(msg));
}

}  // namespace

MatchRule parse_match_rule(const std::string& name) {
  if (name == "stem") return MatchRule::kStem;
  if (name == "reside") return MatchRule::kReside;
  throw DataError("unknown match rule '" + name + "' (expected stem or reside)");
}

std::vector<std::string> list_images(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && is_image(e.path())) files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

PairManifest build_manifest(const std::string& haze_dir, const std::string& clear_dir,
                            MatchRule rule, std::uint64_t seed,
                            std::vector<std::string>* warnings) {
  std::map<std::string, std::string> clear_by_stem;
  for (const auto& f : list_images(clear_dir)) {
    const std::string stem = fs::path(f).stem().string();
    if (!clear_by_stem.emplace(stem, f).second) {
      throw DataError("duplicate clear image stem '" + stem + "' in " + clear_dir);
    }
  }
  std::map<std::string, std::vector<std::string>> haze_by_id;
  for (const auto& f : list_images(haze_dir)) {
    std::string stem = fs::path(f).stem().string();
    std::string id = stem;
    if (rule == MatchRule::kReside) {
      const auto cut = stem.find('_');
      id = cut == std::string::npos ? stem : stem.substr(0, cut);
    }
    if (!clear_by_stem.count(id)) {
      warn(warnings, "haze image without a clear match: " + f);
      continue;
    }
    haze_by_id[id].push_back(f);
  }

  PairManifest m;
  m.root = haze_dir;
  std::mt19937_64 rng(seed);
  for (const auto& [id, clear] : clear_by_stem) {
    auto it = haze_by_id.find(id);
    if (it == haze_by_id.end()) {
      warn(warnings, "clear image without a haze match: " + clear);
      continue;
    }
    const auto& candidates = it->second;
    if (rule == MatchRule::kStem && candidates.size() > 1) {
      throw DataError("several haze images share the stem '" + id + "'");
    }
    const std::size_t pick = candidates.size() == 1 ? 0 : rng() % candidates.size();
    m.entries.push_back({id, candidates[pick], clear});
  }
  if (m.entries.empty()) {
    throw DataError("no haze/clear pairs found between " + haze_dir + " and " + clear_dir);
  }
  return m;
}

void write_manifest(const std::string& path, const PairManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path);
  for (const auto& e : manifest.entries) {
    out << e.id << '\t' << e.haze_path << '\t' << e.clear_path << '\n';
  }
  if (!out) throw DataError("error writing manifest " + path);
}

PairManifest read_manifest(const std::string& path, const std::string& split_tag) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path);
  PairManifest m;
  m.split_tag = split_tag;
  const fs::path base = fs::path(path).parent_path();
  m.root = base.string();
  std::set<std::string> ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() != 3) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    }
    if (!ids.insert(fields[0]).second) {
      throw DataError(path + ":" + std::to_string(line_no) + ": duplicate id '" + fields[0] +
                      "'");
    }
    auto resolve = [&](const std::string& p) {
      const fs::path fp(p);
      return (fp.is_absolute() || base.empty() ? fp : base / fp).string();
    };
    m.entries.push_back({fields[0], resolve(fields[1]), resolve(fields[2])});
  }
  return m;
}

HazyPair load_pair(const PairEntry& entry) {
  HazyPair p;
  try {
    p.haze = read_image_unit(entry.haze_path);
    p.clear = read_image_unit(entry.clear_path);
  } catch (const ImageIoError& e) {
    throw DataError("pair '" + entry.id + "': " + e.what());
  }
  if (p.haze.shape() != p.clear.shape()) {
    throw DataError("pair '" + entry.id + "': haze image is " + p.haze.shape().str() +
                    " but clear image is " + p.clear.shape().str());
  }
  return p;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(mix_seed(seed, 1000 + epoch));
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's distribution implementation.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng() % i;
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::vector<PairEntry> epoch_iter(const PairManifest& manifest, std::uint64_t seed,
                                  std::uint64_t epoch) {
  std::vector<PairEntry> out;
  out.reserve(manifest.size());
  for (std::size_t i : epoch_order(manifest.size(), seed, epoch)) {
    out.push_back(manifest.entries[i]);
  }
  return out;
}

}  // namespace dehaze
