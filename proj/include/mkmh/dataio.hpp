#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mkmh/core.hpp"
#include "mkmh/eval.hpp"

namespace mkmh {

// BIGANN vector files: each record is a little-endian i32 dimension followed
// by `dim` payload elements (f32 for .fvecs, u8 for .bvecs, i32 for .ivecs).

enum class ElementKind : std::uint8_t { Float32, UInt8, Int32 };

std::size_t element_size(ElementKind kind) noexcept;
std::string to_string(ElementKind kind);
/// From the .fvecs / .bvecs / .ivecs extension; throws std::invalid_argument
/// for anything else.
ElementKind kind_from_path(const std::string& path);

struct VectorFileInfo {
  std::string path;
  ElementKind kind = ElementKind::Float32;
  std::size_t dim = 0;
  std::size_t count = 0;
};

/// Reads the first header and checks the file size invariant.
VectorFileInfo probe_vectors(const std::string& path);
VectorFileInfo probe_vectors(const std::string& path, ElementKind kind);

struct RecordRange {
  std::size_t first = 0;
  std::size_t count = std::numeric_limits<std::size_t>::max();
};

/// fvecs or bvecs records in `range`, widened to float. The range is clipped
/// to the end of the file.
VectorSet read_vectors(const std::string& path, RecordRange range = {});
VectorSet read_vectors(const std::string& path, ElementKind kind, RecordRange range = {});

/// Writes the vectors in `kind`. Throws std::invalid_argument for values the
/// element kind cannot represent exactly (non-integers or out-of-range values
/// for uint8/int32).
VectorFileInfo write_vectors(const std::string& path, const VectorSet& vectors, ElementKind kind);

/// Rows of int32 records, as stored in .ivecs.
struct IntRows {
  std::size_t dim = 0;
  std::vector<std::int32_t> data;

  std::size_t size() const noexcept { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const std::int32_t> operator[](std::size_t i) const {
    return {data.data() + i * dim, dim};
  }
};

IntRows read_ivecs(const std::string& path, RecordRange range = {});
void write_ivecs(const std::string& path, const IntRows& rows);

/// Ground-truth id lists in ivecs form, one record per query.
GroundTruth read_ground_truth(const std::string& path);
void write_ground_truth(const std::string& path, const GroundTruth& gt);

/// One decimal integer per line.
std::vector<std::int32_t> read_labels(const std::string& path);
void write_labels(const std::string& path, const std::vector<std::int32_t>& labels);

/**
 * Memory-mapped fvecs/bvecs file serving vectors by record index.
 *
 * Only the pages touched by fetch() are read, so re-ranking against a large
 * base file does not load it. Concurrent fetches are safe.
 */
class MappedVectorFile final : public VectorStore {
 public:
  explicit MappedVectorFile(const std::string& path);
  MappedVectorFile(const MappedVectorFile&) = delete;
  MappedVectorFile& operator=(const MappedVectorFile&) = delete;
  ~MappedVectorFile() override;

  const VectorFileInfo& info() const noexcept { return info_; }
  std::size_t dim() const override { return info_.dim; }
  std::size_t size() const override { return info_.count; }
  void fetch(std::uint64_t id, std::span<float> out) const override;

 private:
  VectorFileInfo info_;
  const unsigned char* map_ = nullptr;
  std::size_t map_size_ = 0;
  std::size_t record_size_ = 0;
};

// ----------------------------------------------------------------------------
// Synthetic clustered data
// ----------------------------------------------------------------------------

struct SyntheticSpec {
  std::size_t n_clusters = 64;
  std::size_t points_per_cluster = 160;
  std::size_t dim = 128;
  double cluster_spread = 0.1;  // per-coordinate standard deviation
  double center_scale = 1.0;    // centres uniform in [-center_scale, center_scale]^dim
  std::uint64_t seed = 0;
  std::size_t n_queries = 100;
  std::size_t n_learning = 10000;
  std::size_t gt_k = 100;
};

struct SyntheticData {
  VectorSet centers;
  VectorSet base;
  VectorSet queries;
  VectorSet learning;
  std::vector<std::int32_t> base_labels;
  std::vector<std::int32_t> query_labels;
  std::vector<std::int32_t> learning_labels;
  GroundTruth gt;
};

/**
 * Gaussian clusters around uniformly drawn centres.
 *
 * The base holds exactly points_per_cluster points per cluster, in cluster
 * order. Queries and learning points pick their cluster uniformly. Centres,
 * base, queries and learning each draw from their own sub-stream of `seed`,
 * so changing one split's size leaves the others unchanged.
 */
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace mkmh
