#ifndef DEHAZE_DATASET_H_
#define DEHAZE_DATASET_H_

// Paired haze/clear image sets described by tab-separated manifests.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dehaze/haze_model.h"

namespace dehaze {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PairEntry {
  std::string id;
  std::string haze_path;
  std::string clear_path;

  bool operator==(const PairEntry&) const = default;
};

struct PairManifest {
  std::vector<PairEntry> entries;
  std::string root;
  std::string split_tag = "train";  // train, val or test

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

enum class MatchRule {
  kStem,    // haze and clear files share a stem
  kReside,  // haze files named <clear stem>_<anything>; one picked per clear image
};

MatchRule parse_match_rule(const std::string& name);

// Pairs the image files of two directories. Unmatched files are reported in
// `warnings`. Under kReside the choice among candidate haze files is drawn
// from `seed`. Entries are sorted by id.
PairManifest build_manifest(const std::string& haze_dir, const std::string& clear_dir,
                            MatchRule rule, std::uint64_t seed,
                            std::vector<std::string>* warnings = nullptr);

// One "id<TAB>haze_path<TAB>clear_path" line per entry. Relative paths in a
// manifest are resolved against the manifest's directory when read.
void write_manifest(const std::string& path, const PairManifest& manifest);
PairManifest read_manifest(const std::string& path, const std::string& split_tag = "train");

// Both images on unit_signed scale. Decode failures and mismatched
// dimensions raise DataError naming the id.
HazyPair load_pair(const PairEntry& entry);

// Deterministic permutation of 0..n-1 keyed by (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch);
std::vector<PairEntry> epoch_iter(const PairManifest& manifest, std::uint64_t seed,
                                  std::uint64_t epoch);

// Image files (png, jpg, jpeg, bmp, tif, tiff) directly inside `dir`, sorted.
std::vector<std::string> list_images(const std::string& dir);

}  // namespace dehaze

#endif  // DEHAZE_DATASET_H_
