#include "veram/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "veram/errors.hpp"
#include "veram/rng.hpp"

namespace veram {

namespace {

constexpr char kMagic[4] = {'V', 'F', 'G', '1'};
constexpr std::uint32_t kVersion = 1;

// ---- little-endian primitives ----

void put_bytes(std::string& out, const void* p, std::size_t n) {
  out.append(static_cast<const char*>(p), n);
}

template <typename T>
void put_le(std::string& out, T v) {
  unsigned char b[sizeof(T)];
  using U = std::make_unsigned_t<T>;
  U u = static_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xFF);
  put_bytes(out, b, sizeof(T));
}

void put_f32(std::string& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }

void put_str(std::string& out, const std::string& s) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  put_bytes(out, s.data(), s.size());
}

class Reader {
 public:
  Reader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  template <typename T>
  T get_le() {
    need(sizeof(T));
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      u |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }

  float get_f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }

  std::string get_str() {
    std::uint32_t n = get_le<std::uint32_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void get_f32_array(std::vector<float>& out, std::size_t count) {
    need(count * 4);
    out.resize(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = get_f32();
  }

  void expect_magic() {
    need(4);
    if (std::memcmp(bytes_.data(), kMagic, 4) != 0)
      throw CorruptHeaderError(path_ + ": bad magic, not a VFG1 dataset");
    pos_ = 4;
  }

  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size())
      throw TruncatedPayloadError(path_ + ": truncated at byte " + std::to_string(pos_) +
                                  " (need " + std::to_string(n) + " more)");
  }
  std::string bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

void append_feature_bytes(std::string& payload, const std::vector<float>& f) {
  for (float v : f) put_f32(payload, v);
}

}  // namespace

bool Dataset::has_confidences() const {
  if (shapes.empty()) return false;
  for (const FeatureGrid& s : shapes)
    if (s.confidences.empty()) return false;
  return true;
}

std::uint64_t fnv1a64(const void* bytes, std::size_t len, std::uint64_t seed) {
  const unsigned char* p = static_cast<const unsigned char*>(bytes);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t Dataset::feature_checksum() const {
  std::string payload;
  payload.reserve(shapes.size() * static_cast<std::size_t>(rows) * cols * feature_dim * 4);
  for (const FeatureGrid& s : shapes) append_feature_bytes(payload, s.features);
  return fnv1a64(payload.data(), payload.size());
}

void write_dataset(const std::string& path, const Dataset& ds) {
  const std::size_t cells = static_cast<std::size_t>(ds.rows) * ds.cols;
  const bool with_conf = ds.has_confidences();
  for (const FeatureGrid& s : ds.shapes) {
    if (s.features.size() != cells * static_cast<std::size_t>(ds.feature_dim))
      throw DataError("write_dataset: shape '" + s.id + "' has " + std::to_string(s.features.size()) +
                      " feature values, expected " + std::to_string(cells * ds.feature_dim));
    if (!s.confidences.empty() && s.confidences.size() != cells)
      throw DataError("write_dataset: shape '" + s.id + "' has a malformed confidence grid");
    if (s.label < 0 || s.label >= ds.classes())
      throw DataError("write_dataset: shape '" + s.id + "' has out-of-range label " + std::to_string(s.label));
  }

  std::string out;
  put_bytes(out, kMagic, 4);
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.shapes.size()));
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(ds.rows));
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(ds.cols));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.feature_dim));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.classes()));
  for (const std::string& name : ds.class_names) put_str(out, name);
  put_le<std::uint64_t>(out, ds.feature_checksum());
  put_le<std::uint8_t>(out, with_conf ? 1 : 0);
  for (const FeatureGrid& s : ds.shapes) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.label));
    put_str(out, s.id);
    for (float v : s.features) put_f32(out, v);
    if (with_conf)
      for (float v : s.confidences) put_f32(out, v);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("write_dataset: cannot open '" + path + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("write_dataset: short write to '" + path + "'");
}

Dataset read_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("read_dataset: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  Reader r(buf.str(), path);

  r.expect_magic();
  std::uint32_t version = r.get_le<std::uint32_t>();
  if (version != kVersion)
    throw CorruptHeaderError(path + ": unsupported version " + std::to_string(version));

  Dataset ds;
  std::uint32_t count = r.get_le<std::uint32_t>();
  ds.rows = r.get_le<std::uint16_t>();
  ds.cols = r.get_le<std::uint16_t>();
  ds.feature_dim = static_cast<int>(r.get_le<std::uint32_t>());
  std::uint32_t nclasses = r.get_le<std::uint32_t>();
  if (ds.rows == 0 || ds.cols == 0)
    throw CorruptHeaderError(path + ": zero grid dimension in header");
  for (std::uint32_t i = 0; i < nclasses; ++i) ds.class_names.push_back(r.get_str());
  std::uint64_t stored_checksum = r.get_le<std::uint64_t>();
  bool with_conf = r.get_le<std::uint8_t>() != 0;

  const std::size_t cells = static_cast<std::size_t>(ds.rows) * ds.cols;
  ds.shapes.resize(count);
  for (FeatureGrid& s : ds.shapes) {
    s.label = static_cast<int>(r.get_le<std::uint32_t>());
    if (s.label < 0 || s.label >= static_cast<int>(nclasses))
      throw DataError(path + ": shape label " + std::to_string(s.label) + " out of range");
    s.id = r.get_str();
    r.get_f32_array(s.features, cells * static_cast<std::size_t>(ds.feature_dim));
    if (with_conf) r.get_f32_array(s.confidences, cells);
  }
  if (!r.exhausted()) throw DataError(path + ": trailing bytes after payload");

  if (ds.feature_checksum() != stored_checksum)
    throw ChecksumMismatchError(path + ": feature checksum mismatch (file corrupt or features rewritten)");
  return ds;
}

std::vector<std::vector<GridIndex>> synthetic_informative_cells(const SyntheticConfig& cfg) {
  Rng rng(Rng::mix(cfg.seed, 0xCE115));
  std::vector<std::vector<GridIndex>> cells(static_cast<std::size_t>(cfg.classes));
  for (int k = 0; k < cfg.classes; ++k) {
    std::vector<int> flat;
    while (static_cast<int>(flat.size()) < cfg.informative_per_class) {
      int cand = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.rows * cfg.cols)));
      if (std::find(flat.begin(), flat.end(), cand) == flat.end()) flat.push_back(cand);
    }
    for (int f : flat) cells[static_cast<std::size_t>(k)].push_back({f / cfg.cols + 1, f % cfg.cols + 1});
  }
  return cells;
}

std::pair<Dataset, Dataset> generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.classes < 2) throw UsageError("generate_synthetic: need at least 2 classes");
  if (cfg.informative_per_class < 1) throw UsageError("generate_synthetic: need at least 1 informative cell per class");
  if (cfg.feature_dim < cfg.classes)
    throw UsageError("generate_synthetic: feature dim must be >= class count (orthogonal signatures)");
  if (cfg.informative_per_class > cfg.rows * cfg.cols)
    throw UsageError("generate_synthetic: more informative cells than grid cells");
  if (cfg.noise < 0 || cfg.ambiguity < 0 || cfg.ambiguity > 1)
    throw UsageError("generate_synthetic: noise must be >= 0 and ambiguity in [0,1]");
  if (cfg.per_class < 2) throw UsageError("generate_synthetic: need at least 2 shapes per class");

  // Signatures are scaled one-hots (hence D >= K); the shared ambiguous
  // vector is a rho-weighted random convex blend of them, so it resembles
  // the signatures without identifying any class.
  auto cells = synthetic_informative_cells(cfg);
  Rng blend_rng(Rng::mix(cfg.seed, 0xB1E7D));
  std::vector<double> ambiguous(static_cast<std::size_t>(cfg.feature_dim), 0.0);
  {
    std::vector<double> w(static_cast<std::size_t>(cfg.classes));
    double total = 0;
    for (double& x : w) {
      x = blend_rng.uniform();
      total += x;
    }
    for (int k = 0; k < cfg.classes; ++k)
      ambiguous[static_cast<std::size_t>(k)] = cfg.ambiguity * cfg.signature_scale * w[static_cast<std::size_t>(k)] / total;
  }

  Dataset all;
  all.rows = cfg.rows;
  all.cols = cfg.cols;
  all.feature_dim = cfg.feature_dim;
  for (int k = 0; k < cfg.classes; ++k) {
    std::ostringstream name;
    name << "class" << k;
    all.class_names.push_back(name.str());
  }

  const std::size_t cell_count = static_cast<std::size_t>(cfg.rows) * cfg.cols;
  for (int k = 0; k < cfg.classes; ++k) {
    for (int i = 0; i < cfg.per_class; ++i) {
      Rng rng(Rng::mix(cfg.seed, 0x5AAE, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i)));
      FeatureGrid s;
      std::ostringstream id;
      id << "c" << k << "-s" << i;
      s.id = id.str();
      s.label = k;
      s.features.resize(cell_count * static_cast<std::size_t>(cfg.feature_dim));
      for (std::size_t cell = 0; cell < cell_count; ++cell) {
        GridIndex g{static_cast<int>(cell) / cfg.cols + 1, static_cast<int>(cell) % cfg.cols + 1};
        bool informative = std::find(cells[static_cast<std::size_t>(k)].begin(),
                                     cells[static_cast<std::size_t>(k)].end(),
                                     g) != cells[static_cast<std::size_t>(k)].end();
        float* out = s.features.data() + cell * static_cast<std::size_t>(cfg.feature_dim);
        for (int d = 0; d < cfg.feature_dim; ++d) {
          double base = informative ? (d == k ? cfg.signature_scale : 0.0) : ambiguous[static_cast<std::size_t>(d)];
          out[d] = static_cast<float>(base + cfg.noise * rng.normal());
        }
      }
      all.shapes.push_back(std::move(s));
    }
  }

  // Per-class split keeps the test set balanced for class-level accuracy.
  Dataset train = all, test = all;
  train.shapes.clear();
  test.shapes.clear();
  int train_n = static_cast<int>(std::lround(cfg.train_fraction * cfg.per_class));
  train_n = std::clamp(train_n, 1, cfg.per_class - 1);
  for (int k = 0; k < cfg.classes; ++k)
    for (int i = 0; i < cfg.per_class; ++i) {
      const FeatureGrid& s = all.shapes[static_cast<std::size_t>(k) * cfg.per_class + i];
      (i < train_n ? train : test).shapes.push_back(s);
    }
  return {std::move(train), std::move(test)};
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',' || ch == ' ' || ch == '\t' || ch == '\r') {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool is_blank_or_comment(const std::string& line) {
  for (char ch : line) {
    if (ch == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(ch))) return false;
  }
  return true;
}

}  // namespace

Dataset ingest_external(const std::string& manifest_path, int rows, int cols) {
  std::ifstream mf(manifest_path);
  if (!mf) throw DataError("ingest: cannot open manifest '" + manifest_path + "'");
  std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();

  Dataset ds;
  ds.rows = rows;
  ds.cols = cols;

  std::string line;
  bool have_classes = false;
  const std::size_t cells = static_cast<std::size_t>(rows) * cols;

  while (std::getline(mf, line)) {
    if (is_blank_or_comment(line)) continue;
    std::vector<std::string> fields = split_fields(line);
    if (!have_classes) {
      ds.class_names = fields;
      if (ds.class_names.empty()) throw DataError("ingest: empty class declaration line");
      have_classes = true;
      continue;
    }
    if (fields.size() != 3)
      throw DataError("ingest: expected 'id label path', got '" + line + "'");
    const std::string& id = fields[0];
    auto it = std::find(ds.class_names.begin(), ds.class_names.end(), fields[1]);
    if (it == ds.class_names.end())
      throw DataError("ingest: shape '" + id + "' has unknown label '" + fields[1] + "'");

    std::filesystem::path mpath = base / fields[2];
    std::ifstream matrix(mpath);
    if (!matrix) throw DataError("ingest: shape '" + id + "': cannot open matrix '" + mpath.string() + "'");

    FeatureGrid s;
    s.id = id;
    s.label = static_cast<int>(it - ds.class_names.begin());
    std::string row_line;
    std::size_t row_count = 0;
    while (std::getline(matrix, row_line)) {
      if (is_blank_or_comment(row_line)) continue;
      std::vector<std::string> vals = split_fields(row_line);
      if (ds.feature_dim == 0) ds.feature_dim = static_cast<int>(vals.size());
      if (static_cast<int>(vals.size()) != ds.feature_dim)
        throw DataError("ingest: shape '" + id + "' row " + std::to_string(row_count + 1) + " has " +
                        std::to_string(vals.size()) + " columns, expected " + std::to_string(ds.feature_dim));
      for (const std::string& v : vals) {
        try {
          std::size_t consumed = 0;
          float parsed = std::stof(v, &consumed);
          if (consumed != v.size()) throw std::invalid_argument(v);
          s.features.push_back(parsed);
        } catch (const std::exception&) {
          throw DataError("ingest: shape '" + id + "': bad numeric value '" + v + "'");
        }
      }
      ++row_count;
    }
    if (row_count != cells)
      throw DataError("ingest: shape '" + id + "' has " + std::to_string(row_count) +
                      " rows, expected " + std::to_string(cells) + " (" + std::to_string(rows) + "x" +
                      std::to_string(cols) + " grid)");
    ds.shapes.push_back(std::move(s));
  }
  if (!have_classes) throw DataError("ingest: manifest '" + manifest_path + "' is empty");
  return ds;
}

}  // namespace veram
