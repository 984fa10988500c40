#include "mkmh/dataio.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mkmh/random.hpp"

namespace mkmh {

namespace {

template <typename T>
T byteswap(T v) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

template <typename T>
T load_le(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) v = byteswap(v);
  return v;
}

template <typename T>
void store_le(unsigned char* p, T v) {
  if constexpr (std::endian::native == std::endian::big) v = byteswap(v);
  std::memcpy(p, &v, sizeof(T));
}

float widen(const unsigned char* p, ElementKind kind) {
  switch (kind) {
    case ElementKind::Float32: return std::bit_cast<float>(load_le<std::uint32_t>(p));
    case ElementKind::UInt8: return static_cast<float>(*p);
    case ElementKind::Int32: return static_cast<float>(load_le<std::int32_t>(p));
  }
  return 0.0f;
}

std::size_t file_size(const std::string& path) {
  struct stat st {};
  if (::stat(path.c_str(), &st) != 0) throw DataError("cannot open: " + path);
  return static_cast<std::size_t>(st.st_size);
}

VectorFileInfo probe_impl(const std::string& path, ElementKind kind, std::ifstream& is) {
  const std::size_t size = file_size(path);
  if (size < 4) throw FormatError("vector file too short for a header: " + path, 0);
  unsigned char hdr[4];
  is.read(reinterpret_cast<char*>(hdr), 4);
  if (is.gcount() != 4) throw FormatError("cannot read header: " + path, 0);
  const auto dim = load_le<std::int32_t>(hdr);
  if (dim <= 0) {
    throw FormatError("invalid record dimension " + std::to_string(dim) + " in " + path, 0);
  }
  const std::size_t rec = 4 + static_cast<std::size_t>(dim) * element_size(kind);
  if (size % rec != 0) {
    throw FormatError("truncated " + to_string(kind) + " file " + path + ": size " +
                          std::to_string(size) + " is not a multiple of record size " +
                          std::to_string(rec),
                      static_cast<std::int64_t>((size / rec) * rec));
  }
  return VectorFileInfo{path, kind, static_cast<std::size_t>(dim), size / rec};
}

// Streams records [first, first+count) as raw payload bytes into `sink`.
template <typename Sink>
VectorFileInfo for_each_record(const std::string& path, ElementKind kind, RecordRange range,
                               Sink&& sink) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  const VectorFileInfo info = probe_impl(path, kind, is);
  const std::size_t rec = 4 + info.dim * element_size(kind);
  const std::size_t first = std::min(range.first, info.count);
  const std::size_t count = std::min(range.count, info.count - first);
  is.seekg(static_cast<std::streamoff>(first * rec));
  std::vector<unsigned char> buf(rec);
  for (std::size_t r = 0; r < count; ++r) {
    const auto offset = static_cast<std::int64_t>((first + r) * rec);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(rec));
    if (static_cast<std::size_t>(is.gcount()) != rec) {
      throw FormatError("truncated record in " + path, offset);
    }
    const auto d = load_le<std::int32_t>(buf.data());
    if (d != static_cast<std::int32_t>(info.dim)) {
      throw FormatError("record dimension " + std::to_string(d) + " differs from file dimension " +
                            std::to_string(info.dim) + " in " + path,
                        offset);
    }
    sink(buf.data() + 4, offset);
  }
  VectorFileInfo out = info;
  out.count = count;
  return out;
}

void write_all(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open for writing: " + path);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw DataError("write failed: " + path);
}

}  // namespace

std::size_t element_size(ElementKind kind) noexcept { return kind == ElementKind::UInt8 ? 1 : 4; }

std::string to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::Float32: return "fvecs";
    case ElementKind::UInt8: return "bvecs";
    case ElementKind::Int32: return "ivecs";
  }
  return "?";
}

ElementKind kind_from_path(const std::string& path) {
  const auto ends_with = [&](const char* ext) {
    const std::size_t n = std::strlen(ext);
    return path.size() >= n && path.compare(path.size() - n, n, ext) == 0;
  };
  if (ends_with(".fvecs")) return ElementKind::Float32;
  if (ends_with(".bvecs")) return ElementKind::UInt8;
  if (ends_with(".ivecs")) return ElementKind::Int32;
  throw std::invalid_argument("cannot infer vector format from file name: " + path +
                              " (expected .fvecs, .bvecs or .ivecs)");
}

VectorFileInfo probe_vectors(const std::string& path) {
  return probe_vectors(path, kind_from_path(path));
}

VectorFileInfo probe_vectors(const std::string& path, ElementKind kind) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  return probe_impl(path, kind, is);
}

VectorSet read_vectors(const std::string& path, RecordRange range) {
  return read_vectors(path, kind_from_path(path), range);
}

VectorSet read_vectors(const std::string& path, ElementKind kind, RecordRange range) {
  if (kind == ElementKind::Int32) {
    throw std::invalid_argument("read_vectors: ivecs holds id lists; use read_ivecs");
  }
  const std::size_t dim = probe_vectors(path, kind).dim;
  const std::size_t es = element_size(kind);
  std::vector<float> data;
  for_each_record(path, kind, range, [&](const unsigned char* payload, std::int64_t offset) {
    for (std::size_t d = 0; d < dim; ++d) {
      const float v = widen(payload + d * es, kind);
      if (!std::isfinite(v)) {
        throw FormatError("non-finite component in " + path,
                          offset + 4 + static_cast<std::int64_t>(d * es));
      }
      data.push_back(v);
    }
  });
  return VectorSet(dim, std::move(data));
}

VectorFileInfo write_vectors(const std::string& path, const VectorSet& vectors, ElementKind kind) {
  const std::size_t dim = vectors.dim();
  if (dim == 0) throw std::invalid_argument("write_vectors: vector set has no dimension");
  const std::size_t es = element_size(kind);
  const std::size_t rec = 4 + dim * es;
  std::vector<unsigned char> bytes(rec * vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    unsigned char* p = bytes.data() + i * rec;
    store_le<std::int32_t>(p, static_cast<std::int32_t>(dim));
    const VectorView v = vectors[i];
    for (std::size_t d = 0; d < dim; ++d) {
      unsigned char* q = p + 4 + d * es;
      const float x = v[d];
      switch (kind) {
        case ElementKind::Float32:
          store_le<std::uint32_t>(q, std::bit_cast<std::uint32_t>(x));
          break;
        case ElementKind::UInt8:
          if (x != std::floor(x) || x < 0.0f || x > 255.0f) {
            throw std::invalid_argument("write_vectors: value " + std::to_string(x) +
                                        " is not representable as uint8");
          }
          *q = static_cast<unsigned char>(x);
          break;
        case ElementKind::Int32:
          if (x != std::floor(x) || x < -2147483648.0f || x >= 2147483648.0f) {
            throw std::invalid_argument("write_vectors: value " + std::to_string(x) +
                                        " is not representable as int32");
          }
          store_le<std::int32_t>(q, static_cast<std::int32_t>(x));
          break;
      }
    }
  }
  write_all(path, bytes);
  return VectorFileInfo{path, kind, dim, vectors.size()};
}

IntRows read_ivecs(const std::string& path, RecordRange range) {
  IntRows rows;
  rows.dim = probe_vectors(path, ElementKind::Int32).dim;
  for_each_record(path, ElementKind::Int32, range, [&](const unsigned char* payload, std::int64_t) {
    for (std::size_t d = 0; d < rows.dim; ++d) {
      rows.data.push_back(load_le<std::int32_t>(payload + 4 * d));
    }
  });
  return rows;
}

void write_ivecs(const std::string& path, const IntRows& rows) {
  if (rows.dim == 0) throw std::invalid_argument("write_ivecs: rows have no dimension");
  const std::size_t rec = 4 + 4 * rows.dim;
  std::vector<unsigned char> bytes(rec * rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    unsigned char* p = bytes.data() + i * rec;
    store_le<std::int32_t>(p, static_cast<std::int32_t>(rows.dim));
    for (std::size_t d = 0; d < rows.dim; ++d) {
      store_le<std::int32_t>(p + 4 + 4 * d, rows.data[i * rows.dim + d]);
    }
  }
  write_all(path, bytes);
}

GroundTruth read_ground_truth(const std::string& path) {
  const IntRows rows = read_ivecs(path);
  GroundTruth gt;
  gt.k = rows.dim;
  gt.neighbors.resize(rows.size());
  for (std::size_t q = 0; q < rows.size(); ++q) {
    for (auto v : rows[q]) {
      if (v < 0) {
        throw FormatError("negative neighbour id in ground truth " + path,
                          static_cast<std::int64_t>(q * (4 + 4 * rows.dim)));
      }
      gt.neighbors[q].push_back(static_cast<std::uint64_t>(v));
    }
  }
  return gt;
}

void write_ground_truth(const std::string& path, const GroundTruth& gt) {
  IntRows rows;
  rows.dim = gt.k;
  for (const auto& nn : gt.neighbors) {
    if (nn.size() != gt.k) throw std::invalid_argument("write_ground_truth: ragged neighbour lists");
    for (auto id : nn) {
      if (id > static_cast<std::uint64_t>(std::numeric_limits<std::int32_t>::max())) {
        throw std::invalid_argument("write_ground_truth: id exceeds int32 range");
      }
      rows.data.push_back(static_cast<std::int32_t>(id));
    }
  }
  write_ivecs(path, rows);
}

std::vector<std::int32_t> read_labels(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open: " + path);
  std::vector<std::int32_t> labels;
  std::string line;
  std::int64_t offset = 0;
  while (std::getline(is, line)) {
    const std::int64_t line_offset = offset;
    offset += static_cast<std::int64_t>(line.size()) + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(line, &pos);
    } catch (const std::exception&) {
      throw FormatError("label is not an integer: '" + line + "' in " + path, line_offset);
    }
    if (pos != line.size() || v < std::numeric_limits<std::int32_t>::min() ||
        v > std::numeric_limits<std::int32_t>::max()) {
      throw FormatError("label is not an int32: '" + line + "' in " + path, line_offset);
    }
    labels.push_back(static_cast<std::int32_t>(v));
  }
  return labels;
}

void write_labels(const std::string& path, const std::vector<std::int32_t>& labels) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open for writing: " + path);
  for (auto l : labels) os << l << '\n';
  if (!os) throw DataError("write failed: " + path);
}

// ----------------------------------------------------------------------------

MappedVectorFile::MappedVectorFile(const std::string& path) {
  const ElementKind kind = kind_from_path(path);
  if (kind == ElementKind::Int32) {
    throw std::invalid_argument("MappedVectorFile: ivecs files hold id lists, not descriptors");
  }
  info_ = probe_vectors(path, kind);
  record_size_ = 4 + info_.dim * element_size(kind);
  map_size_ = info_.count * record_size_;
  const int fd = ::open(path.c_str(), O_RDONLY);
  if (fd < 0) throw DataError("cannot open: " + path);
  void* p = ::mmap(nullptr, map_size_, PROT_READ, MAP_SHARED, fd, 0);
  ::close(fd);
  if (p == MAP_FAILED) throw DataError("mmap failed: " + path);
  map_ = static_cast<const unsigned char*>(p);
}

MappedVectorFile::~MappedVectorFile() {
  if (map_ != nullptr) ::munmap(const_cast<unsigned char*>(map_), map_size_);
}

void MappedVectorFile::fetch(std::uint64_t id, std::span<float> out) const {
  if (id >= info_.count) {
    throw DataError("corrupt store: no base vector for id " + std::to_string(id) + " in " +
                    info_.path);
  }
  const unsigned char* rec = map_ + id * record_size_;
  const auto offset = static_cast<std::int64_t>(id * record_size_);
  if (load_le<std::int32_t>(rec) != static_cast<std::int32_t>(info_.dim)) {
    throw FormatError("record dimension mismatch in " + info_.path, offset);
  }
  const std::size_t es = element_size(info_.kind);
  for (std::size_t d = 0; d < info_.dim; ++d) {
    const float v = widen(rec + 4 + d * es, info_.kind);
    if (!std::isfinite(v)) {
      throw FormatError("non-finite component in " + info_.path,
                        offset + 4 + static_cast<std::int64_t>(d * es));
    }
    out[d] = v;
  }
}

// ----------------------------------------------------------------------------

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_clusters < 2) throw std::invalid_argument("synthetic: n_clusters must be >= 2");
  if (spec.dim < 2) throw std::invalid_argument("synthetic: dim must be >= 2");
  if (spec.points_per_cluster < 1) {
    throw std::invalid_argument("synthetic: points_per_cluster must be >= 1");
  }
  if (!(spec.cluster_spread > 0.0) || !(spec.center_scale > 0.0)) {
    throw std::invalid_argument("synthetic: cluster_spread and center_scale must be positive");
  }
  const std::size_t n_base = spec.n_clusters * spec.points_per_cluster;
  if (spec.gt_k < 1 || spec.gt_k > n_base) {
    throw std::invalid_argument("synthetic: gt_k must lie in [1, base size]");
  }

  SyntheticData out;
  const std::size_t dim = spec.dim;

  Rng center_rng(derive_seed(spec.seed, 101));
  out.centers = VectorSet(dim);
  std::vector<float> buf(dim);
  for (std::size_t c = 0; c < spec.n_clusters; ++c) {
    for (auto& v : buf) {
      v = static_cast<float>(spec.center_scale * (2.0 * center_rng.uniform() - 1.0));
    }
    out.centers.append(buf);
  }

  const auto draw_point = [&](Rng& rng, std::size_t c) {
    const VectorView mu = out.centers[c];
    for (std::size_t d = 0; d < dim; ++d) {
      buf[d] = static_cast<float>(mu[d] + spec.cluster_spread * rng.normal());
    }
  };

  Rng base_rng(derive_seed(spec.seed, 102));
  out.base = VectorSet(dim);
  out.base.reserve(n_base);
  for (std::size_t c = 0; c < spec.n_clusters; ++c) {
    for (std::size_t p = 0; p < spec.points_per_cluster; ++p) {
      draw_point(base_rng, c);
      out.base.append(buf);
      out.base_labels.push_back(static_cast<std::int32_t>(c));
    }
  }

  const auto draw_split = [&](std::uint64_t stream, std::size_t n, VectorSet& vs,
                              std::vector<std::int32_t>& labels) {
    Rng rng(derive_seed(spec.seed, stream));
    vs = VectorSet(dim);
    vs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(rng.index(spec.n_clusters));
      draw_point(rng, c);
      vs.append(buf);
      labels.push_back(static_cast<std::int32_t>(c));
    }
  };
  draw_split(103, spec.n_queries, out.queries, out.query_labels);
  draw_split(104, spec.n_learning, out.learning, out.learning_labels);

  if (!out.queries.empty()) out.gt = brute_force_gt(out.base, out.queries, spec.gt_k);
  return out;
}

}  // namespace mkmh
