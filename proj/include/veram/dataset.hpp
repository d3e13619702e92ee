#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "veram/viewspace.hpp"

namespace veram {

/// One shape: a grid of per-view feature vectors, its label and optional
/// per-view confidences. Features are stored as float32 and promoted to
/// double in compute.
struct FeatureGrid {
  std::string id;
  int label = 0;
  std::vector<float> features;     // rows*cols*dim, row-major, row = (lat-1)*cols + (lon-1)
  std::vector<float> confidences;  // rows*cols, or empty
};

struct Dataset {
  int rows = 12;
  int cols = 12;
  int feature_dim = 0;
  std::vector<std::string> class_names;
  std::vector<FeatureGrid> shapes;

  GridShape grid() const { return {rows, cols}; }
  int classes() const { return static_cast<int>(class_names.size()); }
  bool has_confidences() const;

  const float* features_at(const FeatureGrid& s, GridIndex g) const {
    return s.features.data() + (static_cast<std::size_t>(g.row - 1) * cols + (g.col - 1)) * feature_dim;
  }
  double confidence_at(const FeatureGrid& s, GridIndex g) const {
    if (s.confidences.empty()) return 1.0;
    return s.confidences[static_cast<std::size_t>(g.row - 1) * cols + (g.col - 1)];
  }

  /// FNV-1a over the float32 feature payload of all shapes in order; this
  /// is the checksum stored in the file header.
  std::uint64_t feature_checksum() const;
};

std::uint64_t fnv1a64(const void* bytes, std::size_t len, std::uint64_t seed = 14695981039346656037ull);

/// Little-endian "VFG1" container (see README for the byte layout).
void write_dataset(const std::string& path, const Dataset& ds);
Dataset read_dataset(const std::string& path);

struct SyntheticConfig {
  int classes = 10;
  int per_class = 60;
  int feature_dim = 32;
  int informative_per_class = 1;  // m
  double noise = 0.1;             // sigma
  double ambiguity = 0.5;         // rho
  int rows = 12;
  int cols = 12;
  std::uint64_t seed = 1;
  double signature_scale = 1.0;
  double train_fraction = 0.8;
};

/// Desk-scale stand-in for CNN feature grids. Each class gets m informative
/// cells that emit its signature; every other cell emits one dataset-wide
/// ambiguous vector (a rho-scaled random blend of the class signatures), so
/// a lone uninformative view carries no class signal and view selection is
/// what the benchmark measures. Returns {train, test}, split per class.
std::pair<Dataset, Dataset> generate_synthetic(const SyntheticConfig& cfg);

/// Which cells are informative for each class (same construction the
/// generator uses); handy for oracles and diagnostics.
std::vector<std::vector<GridIndex>> synthetic_informative_cells(const SyntheticConfig& cfg);

/// Packs a manifest of per-shape CSV/whitespace matrices into a dataset.
/// Manifest: first data line declares class names (ids follow declaration
/// order), then one line per shape: id, label, matrix path.
Dataset ingest_external(const std::string& manifest_path, int rows = 12, int cols = 12);

}  // namespace veram
