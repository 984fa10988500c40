#include "mkmh/index.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "binio.hpp"
#include "mkmh/parallel.hpp"

namespace mkmh {

namespace {

constexpr std::uint32_t kIndexVersion = 1;

bool better(Metric m, const ScoredId& a, const ScoredId& b) {
  if (a.score != b.score) return m == Metric::Euclidean ? a.score < b.score : a.score > b.score;
  return a.id < b.id;
}

}  // namespace

std::string to_string(Metric m) { return m == Metric::Euclidean ? "l2" : "cosine"; }

Metric parse_metric(const std::string& s) {
  if (s == "l2") return Metric::Euclidean;
  if (s == "cosine") return Metric::Cosine;
  throw std::invalid_argument("unknown metric '" + s + "' (expected l2 or cosine)");
}

std::vector<std::uint64_t> SearchResult::ids() const {
  std::vector<std::uint64_t> out;
  out.reserve(ranked.size());
  for (const auto& r : ranked) out.push_back(r.id);
  return out;
}

SearchIndex::SearchIndex(Encoder encoder, std::size_t code_length, std::vector<std::uint64_t> codes,
                         std::vector<std::uint64_t> ids)
    : encoder_(std::move(encoder)),
      code_length_(code_length),
      words_per_code_(HashCode::words_for(code_length)),
      codes_(std::move(codes)),
      ids_(std::move(ids)) {}

HashCode SearchIndex::code(std::size_t pos) const {
  if (pos >= size()) throw std::out_of_range("SearchIndex::code: position out of range");
  const auto* w = codes_.data() + pos * words_per_code_;
  return HashCode(code_length_, std::vector<std::uint64_t>(w, w + words_per_code_));
}

SearchIndex build_index(const std::vector<HashCode>& codes, std::vector<std::uint64_t> ids,
                        Encoder encoder) {
  if (codes.empty()) throw std::invalid_argument("build_index: no codes");
  if (codes.size() != ids.size()) {
    throw std::invalid_argument("build_index: " + std::to_string(codes.size()) + " codes but " +
                                std::to_string(ids.size()) + " ids");
  }
  const std::size_t length = encoder.code_length();
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(ids.size());
  for (auto id : ids) {
    if (!seen.insert(id).second) {
      throw std::invalid_argument("build_index: duplicate id " + std::to_string(id));
    }
  }
  const std::size_t wpc = HashCode::words_for(length);
  std::vector<std::uint64_t> packed;
  packed.reserve(codes.size() * wpc);
  for (const auto& c : codes) {
    if (c.length() != length) {
      throw std::invalid_argument("build_index: code of length " + std::to_string(c.length()) +
                                  ", encoder produces " + std::to_string(length));
    }
    packed.insert(packed.end(), c.words().begin(), c.words().end());
  }
  return SearchIndex(std::move(encoder), length, std::move(packed), std::move(ids));
}

SearchIndex encode_and_build(Encoder encoder, const VectorStore& base) {
  if (base.dim() != encoder.dim()) {
    throw std::invalid_argument("encode_and_build: base dimension " + std::to_string(base.dim()) +
                                " does not match codebook dimension " +
                                std::to_string(encoder.dim()));
  }
  const std::size_t n = base.size();
  std::vector<HashCode> codes(n);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    std::vector<float> buf(base.dim());
    for (std::size_t i = begin; i < end; ++i) {
      base.fetch(i, buf);
      codes[i] = encoder.encode(buf);
    }
  });
  std::vector<std::uint64_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i;
  return build_index(codes, std::move(ids), std::move(encoder));
}

SearchIndex encode_and_build(Encoder encoder, const VectorSet& base) {
  return encode_and_build(std::move(encoder), InMemoryStore(base));
}

std::vector<std::uint64_t> shortlist(const SearchIndex& index, const HashCode& q, std::size_t L) {
  if (q.length() != index.code_length()) {
    throw std::invalid_argument("shortlist: query code length " + std::to_string(q.length()) +
                                " != index code length " + std::to_string(index.code_length()));
  }
  const std::size_t n = index.size();
  if (L < 1 || L > n) {
    throw std::invalid_argument("shortlist: L=" + std::to_string(L) + " outside [1, " +
                                std::to_string(n) + "]");
  }
  const std::size_t wpc = index.words_per_code();
  const std::uint64_t* codes = index.packed_codes().data();
  const std::uint64_t* qw = q.words().data();
  const auto ids = index.ids();

  // Distances are bounded by the code length, so a histogram finds the cut
  // distance in one pass.
  std::vector<std::uint32_t> dist(n);
  std::vector<std::size_t> hist(index.code_length() + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = static_cast<std::uint32_t>(hamming_words(codes + i * wpc, qw, wpc));
    dist[i] = d;
    ++hist[d];
  }
  std::uint32_t cut = 0;
  std::size_t below = 0;
  while (below + hist[cut] < L) below += hist[cut++];

  std::vector<std::pair<std::uint32_t, std::uint64_t>> picked;
  picked.reserve(L);
  std::vector<std::uint64_t> at_cut;
  at_cut.reserve(hist[cut]);
  for (std::size_t i = 0; i < n; ++i) {
    if (dist[i] < cut) {
      picked.emplace_back(dist[i], ids[i]);
    } else if (dist[i] == cut) {
      at_cut.push_back(ids[i]);
    }
  }
  const std::size_t need = L - below;
  std::partial_sort(at_cut.begin(), at_cut.begin() + static_cast<std::ptrdiff_t>(need),
                    at_cut.end());
  for (std::size_t i = 0; i < need; ++i) picked.emplace_back(cut, at_cut[i]);
  std::sort(picked.begin(), picked.end());

  std::vector<std::uint64_t> out;
  out.reserve(L);
  for (const auto& p : picked) out.push_back(p.second);
  return out;
}

SearchResult rerank(const VectorStore& base, VectorView q_vec,
                    std::span<const std::uint64_t> candidates, std::size_t R, Metric metric) {
  if (q_vec.size() != base.dim()) {
    throw std::invalid_argument("rerank: query dimension " + std::to_string(q_vec.size()) +
                                " != base dimension " + std::to_string(base.dim()));
  }
  if (R < 1 || R > candidates.size()) {
    throw std::invalid_argument("rerank: R=" + std::to_string(R) + " outside [1, " +
                                std::to_string(candidates.size()) + "]");
  }
  std::vector<float> buf(base.dim());
  std::vector<ScoredId> scored;
  scored.reserve(candidates.size());
  for (auto id : candidates) {
    if (id >= base.size()) {
      throw DataError("corrupt store: no base vector for shortlisted id " + std::to_string(id));
    }
    base.fetch(id, buf);
    const double s =
        metric == Metric::Euclidean ? euclidean_distance(q_vec, buf) : cosine_similarity(q_vec, buf);
    scored.push_back({id, s});
  }
  const auto cmp = [metric](const ScoredId& a, const ScoredId& b) { return better(metric, a, b); };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(R), scored.end(),
                    cmp);
  scored.resize(R);
  return SearchResult{std::move(scored), metric, candidates.size()};
}

SearchResult search(const SearchIndex& index, const VectorStore& base, VectorView q_vec,
                    std::size_t L, std::size_t R, Metric metric) {
  if (R > L) {
    throw std::invalid_argument("search: R=" + std::to_string(R) + " exceeds shortlist size L=" +
                                std::to_string(L));
  }
  const HashCode q = index.encoder().encode(q_vec);
  const auto cands = shortlist(index, q, L);
  return rerank(base, q_vec, cands, R, metric);
}

std::vector<SearchResult> search_batch(const SearchIndex& index, const VectorStore& base,
                                       const VectorSet& queries, std::size_t L, std::size_t R,
                                       Metric metric) {
  std::vector<SearchResult> out(queries.size());
  parallel_for(
      queries.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          out[i] = search(index, base, queries[i], L, R, metric);
        }
      },
      1);
  return out;
}

// ----------------------------------------------------------------------------

void SearchIndex::write(std::ostream& os) const {
  binio::put_magic(os, "MKMI");
  binio::put_le<std::uint32_t>(os, kIndexVersion);
  binio::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(code_length_));
  binio::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(size()));
  write_encoder_spec(os, encoder_.spec());
  if (const auto* d = encoder_.dual()) {
    write_dual_codebook(os, *d);
  } else {
    write_codebook(os, *encoder_.single());
  }
  for (auto w : codes_) binio::put_le<std::uint64_t>(os, w);
  for (auto id : ids_) binio::put_le<std::uint64_t>(os, id);
}

SearchIndex SearchIndex::read(std::istream& is) {
  binio::Reader head(is);
  head.expect_magic("MKMI");
  const auto at_version = head.offset();
  const auto version = head.get_le<std::uint32_t>("index version");
  if (version != kIndexVersion) {
    throw FormatError("unsupported index version " + std::to_string(version), at_version);
  }
  const auto at_length = head.offset();
  const auto code_length = head.get_le<std::uint32_t>("code length");
  const auto count = head.get_le<std::uint64_t>("code count");
  if (count == 0) throw FormatError("index holds no codes", at_length + 4);

  const auto at_spec = head.offset();
  const EncoderSpec spec = read_encoder_spec(is);
  std::optional<Encoder> encoder;
  try {
    if (is_dual(spec.variant)) {
      encoder.emplace(spec, read_dual_codebook(is));
    } else {
      encoder.emplace(spec, read_codebook(is));
    }
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("inconsistent encoder record: ") + e.what(), at_spec);
  }
  if (encoder->code_length() != code_length) {
    throw FormatError("header code length " + std::to_string(code_length) +
                          " does not match embedded codebook(s) (" +
                          std::to_string(encoder->code_length()) + ")",
                      at_length);
  }

  binio::Reader body(is);
  const std::size_t wpc = HashCode::words_for(code_length);
  const std::uint64_t tail =
      code_length % 64 == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << (code_length % 64)) - 1;
  std::vector<std::uint64_t> codes(static_cast<std::size_t>(count) * wpc);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const auto at = body.offset();
    codes[i] = body.get_le<std::uint64_t>("packed code");
    if (i % wpc == wpc - 1 && (codes[i] & ~tail) != 0) {
      throw FormatError("code padding bits are set", at);
    }
  }
  std::vector<std::uint64_t> ids(static_cast<std::size_t>(count));
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(ids.size());
  for (auto& id : ids) {
    const auto at = body.offset();
    id = body.get_le<std::uint64_t>("vector id");
    if (!seen.insert(id).second) throw FormatError("duplicate id " + std::to_string(id), at);
  }
  return SearchIndex(std::move(*encoder), code_length, std::move(codes), std::move(ids));
}

void SearchIndex::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path);
  write(os);
  if (!os) throw DataError("write failed: " + path);
}

SearchIndex SearchIndex::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  return read(is);
}

}  // namespace mkmh
