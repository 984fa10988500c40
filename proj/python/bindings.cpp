#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>
#include <memory>
#include <optional>
#include <variant>

#include "mkmh/dataio.hpp"
#include "mkmh/encoder.hpp"
#include "mkmh/eval.hpp"
#include "mkmh/index.hpp"
#include "mkmh/kmeans.hpp"
#include "mkmh/parallel.hpp"

namespace py = pybind11;
using namespace mkmh;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

VectorSet to_vectors(const FloatArray& a) {
  if (a.ndim() == 1) {
    return VectorSet(static_cast<std::size_t>(a.shape(0)),
                     std::vector<float>(a.data(), a.data() + a.shape(0)));
  }
  if (a.ndim() != 2) throw std::invalid_argument("expected a 1-d or 2-d float array");
  const auto n = static_cast<std::size_t>(a.shape(0));
  const auto d = static_cast<std::size_t>(a.shape(1));
  return VectorSet(d, std::vector<float>(a.data(), a.data() + n * d));
}

py::array_t<float> to_array(const VectorSet& s) {
  py::array_t<float> out({static_cast<py::ssize_t>(s.size()), static_cast<py::ssize_t>(s.dim())});
  std::copy(s.data().begin(), s.data().end(), out.mutable_data());
  return out;
}

std::vector<float> to_row(const FloatArray& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d query vector");
  return {a.data(), a.data() + a.shape(0)};
}

py::array_t<std::uint8_t> to_bits(const HashCode& c) {
  std::vector<std::uint8_t> bits(c.length());
  for (std::size_t j = 0; j < c.length(); ++j) bits[j] = c.test(j) ? 1 : 0;
  return py::array_t<std::uint8_t>(static_cast<py::ssize_t>(bits.size()), bits.data());
}

TrainParams params(std::uint64_t seed, std::size_t max_iters, double rel_tol) {
  TrainParams p;
  p.seed = seed;
  p.max_iters = max_iters;
  p.rel_tol = rel_tol;
  return p;
}

/// A search index together with the original vectors used for re-ranking.
struct PyIndex {
  std::shared_ptr<SearchIndex> index;
  std::shared_ptr<const VectorSet> owned;
  std::shared_ptr<const VectorStore> store;

  void attach_array(const FloatArray& base) {
    owned = std::make_shared<const VectorSet>(to_vectors(base));
    store = std::make_shared<InMemoryStore>(*owned);
  }
  void attach_file(const std::string& path) {
    owned.reset();
    store = std::make_shared<MappedVectorFile>(path);
  }
};

py::tuple result_arrays(const std::vector<SearchResult>& results, std::size_t R) {
  const auto Q = static_cast<py::ssize_t>(results.size());
  py::array_t<std::int64_t> ids({Q, static_cast<py::ssize_t>(R)});
  py::array_t<double> scores({Q, static_cast<py::ssize_t>(R)});
  auto* ip = ids.mutable_data();
  auto* sp = scores.mutable_data();
  for (std::size_t q = 0; q < results.size(); ++q) {
    for (std::size_t r = 0; r < R; ++r) {
      ip[q * R + r] = static_cast<std::int64_t>(results[q].ranked[r].id);
      sp[q * R + r] = results[q].ranked[r].score;
    }
  }
  return py::make_tuple(ids, scores);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-k-means hash codes for approximate nearest-neighbour search";

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);

  m.def("set_max_threads", &set_max_threads, py::arg("n"));

  py::class_<Codebook>(m, "Codebook")
      .def(py::init([](const FloatArray& c) { return Codebook(to_vectors(c)); }), py::arg("centroids"))
      .def_property_readonly("k", &Codebook::k)
      .def_property_readonly("dim", &Codebook::dim)
      .def_property_readonly("centroids", [](const Codebook& cb) { return to_array(cb.centroids()); })
      .def_property_readonly("objective", [](const Codebook& cb) { return cb.meta().objective; })
      .def_property_readonly("iterations", [](const Codebook& cb) { return cb.meta().iterations; })
      .def_property_readonly("objective_history",
                             [](const Codebook& cb) { return cb.meta().objective_history; })
      .def("save", [](const Codebook& cb, const std::string& path) { save_codebook(path, cb); })
      .def_static("load", &load_codebook)
      .def("__eq__", [](const Codebook& a, const Codebook& b) { return a == b; });

  py::class_<DualCodebook>(m, "DualCodebook")
      .def(py::init<Codebook, Codebook>(), py::arg("first"), py::arg("second"))
      .def_property_readonly("first", &DualCodebook::first)
      .def_property_readonly("second", &DualCodebook::second)
      .def("save", [](const DualCodebook& d, const std::string& path) { save_dual_codebook(path, d); })
      .def_static("load", &load_dual_codebook);

  m.def("train", [](const FloatArray& data, std::size_t k, std::uint64_t seed, std::size_t max_iters,
                    double rel_tol) { return train(to_vectors(data), k, params(seed, max_iters, rel_tol)); },
        py::arg("data"), py::arg("k"), py::arg("seed") = 0, py::arg("max_iters") = 100,
        py::arg("rel_tol") = 1e-4, "k-means++ seeding followed by Lloyd iterations.");
  m.def("train_dual",
        [](const FloatArray& data, std::size_t k_sub, std::uint64_t seed, std::size_t max_iters,
           double rel_tol) { return train_dual(to_vectors(data), k_sub, params(seed, max_iters, rel_tol)); },
        py::arg("data"), py::arg("k_sub"), py::arg("seed") = 0, py::arg("max_iters") = 100,
        py::arg("rel_tol") = 1e-4, "Two codebooks of k_sub centroids on a random split of data.");
  m.def("kmeanspp_seed",
        [](const FloatArray& data, std::size_t k, std::uint64_t seed) {
          return to_array(kmeanspp_seed(to_vectors(data), k, seed));
        },
        py::arg("data"), py::arg("k"), py::arg("seed") = 0);
  m.def("objective", [](const FloatArray& data, const FloatArray& c) {
    return objective(to_vectors(data), to_vectors(c));
  });
  m.def("threshold_delta",
        [](const std::vector<double>& d, const std::string& mean) {
          return threshold_delta(d, parse_mean_kind(mean));
        },
        py::arg("dists"), py::arg("mean") = "arith");

  py::class_<Encoder>(m, "Encoder")
      .def(py::init([](const std::string& variant, const Codebook& cb, const std::string& mean,
                       std::uint32_t n) {
             return Encoder({parse_variant(variant), parse_mean_kind(mean), n}, cb);
           }),
           py::arg("variant"), py::arg("codebook"), py::arg("mean") = "arith", py::arg("n") = 1)
      .def(py::init([](const std::string& variant, const DualCodebook& dcb, const std::string& mean,
                       std::uint32_t n) {
             return Encoder({parse_variant(variant), parse_mean_kind(mean), n}, dcb);
           }),
           py::arg("variant"), py::arg("codebook"), py::arg("mean") = "arith", py::arg("n") = 1,
           "For t2/n2; n is the per-codebook count.")
      .def_property_readonly("code_length", &Encoder::code_length)
      .def_property_readonly("variant", [](const Encoder& e) { return to_string(e.spec().variant); })
      .def("encode", [](const Encoder& e, const FloatArray& x) { return to_bits(e.encode(to_row(x))); },
           py::arg("x"), "Code bits as a 0/1 uint8 array of length code_length.");

  py::class_<PyIndex>(m, "Index")
      .def_static("build",
                  [](const Encoder& enc, const FloatArray& base) {
                    PyIndex p;
                    p.attach_array(base);
                    p.index = std::make_shared<SearchIndex>(encode_and_build(enc, *p.owned));
                    return p;
                  },
                  py::arg("encoder"), py::arg("base"), "Encode every row of base; ids are row numbers.")
      .def_static("build_from_file",
                  [](const Encoder& enc, const std::string& base_path) {
                    PyIndex p;
                    p.attach_file(base_path);
                    p.index = std::make_shared<SearchIndex>(encode_and_build(enc, *p.store));
                    return p;
                  },
                  py::arg("encoder"), py::arg("base_path"))
      .def_static("load",
                  [](const std::string& path, py::object base) {
                    PyIndex p;
                    p.index = std::make_shared<SearchIndex>(SearchIndex::load(path));
                    if (py::isinstance<py::str>(base)) {
                      p.attach_file(base.cast<std::string>());
                    } else {
                      p.attach_array(base.cast<FloatArray>());
                    }
                    return p;
                  },
                  py::arg("path"), py::arg("base"),
                  "Load an index file; base is an array or a vector-file path for re-ranking.")
      .def("save", [](const PyIndex& p, const std::string& path) { p.index->save(path); })
      .def("__len__", [](const PyIndex& p) { return p.index->size(); })
      .def_property_readonly("code_length", [](const PyIndex& p) { return p.index->code_length(); })
      .def("shortlist",
           [](const PyIndex& p, const FloatArray& q, std::size_t L) {
             const auto ids = shortlist(*p.index, p.index->encoder().encode(to_row(q)), L);
             return std::vector<std::int64_t>(ids.begin(), ids.end());
           },
           py::arg("query"), py::arg("L"))
      .def("search",
           [](const PyIndex& p, const FloatArray& queries, std::size_t L, std::size_t R,
              const std::string& metric) {
             const VectorSet qs = to_vectors(queries);
             std::vector<SearchResult> res;
             {
               py::gil_scoped_release release;
               res = search_batch(*p.index, *p.store, qs, L, R, parse_metric(metric));
             }
             return result_arrays(res, R);
           },
           py::arg("queries"), py::arg("L"), py::arg("R"), py::arg("metric") = "l2",
           "Shortlist L by Hamming distance, re-rank exactly, return (ids, scores) of shape (Q, R).");

  m.def("brute_force_gt",
        [](const FloatArray& base, const FloatArray& queries, std::size_t K, const std::string& metric) {
          const auto gt = brute_force_gt(to_vectors(base), to_vectors(queries), K, parse_metric(metric));
          py::array_t<std::int64_t> ids({static_cast<py::ssize_t>(gt.num_queries()), static_cast<py::ssize_t>(K)});
          auto* p = ids.mutable_data();
          for (std::size_t q = 0; q < gt.num_queries(); ++q) {
            for (std::size_t r = 0; r < K; ++r) p[q * K + r] = static_cast<std::int64_t>(gt.neighbors[q][r]);
          }
          return ids;
        },
        py::arg("base"), py::arg("queries"), py::arg("K"), py::arg("metric") = "l2");
  m.def("recall_at_r",
        [](const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& ids,
           const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& gt_ids,
           std::size_t R) {
          if (ids.ndim() != 2 || gt_ids.ndim() != 2) throw std::invalid_argument("expected 2-d id arrays");
          std::vector<std::vector<std::uint64_t>> ranked(static_cast<std::size_t>(ids.shape(0)));
          GroundTruth gt;
          gt.k = static_cast<std::size_t>(gt_ids.shape(1));
          gt.neighbors.resize(static_cast<std::size_t>(gt_ids.shape(0)));
          for (std::size_t q = 0; q < ranked.size(); ++q) {
            for (py::ssize_t r = 0; r < ids.shape(1); ++r) ranked[q].push_back(static_cast<std::uint64_t>(ids.at(q, r)));
          }
          for (std::size_t q = 0; q < gt.neighbors.size(); ++q) {
            for (py::ssize_t r = 0; r < gt_ids.shape(1); ++r) {
              gt.neighbors[q].push_back(static_cast<std::uint64_t>(gt_ids.at(q, r)));
            }
          }
          return recall_at_r(ranked, gt, R);
        },
        py::arg("ids"), py::arg("gt_ids"), py::arg("R"));
  m.def("average_precision",
        [](const std::vector<std::uint8_t>& rel, std::optional<std::size_t> total) {
          return total ? average_precision(rel, *total).value : average_precision(rel).value;
        },
        py::arg("rel"), py::arg("total_relevant") = py::none());
  m.def("mean_average_precision", [](const std::vector<double>& aps) { return mean_average_precision(aps); });

  m.def("read_vectors",
        [](const std::string& path, std::size_t first, std::size_t count) {
          return to_array(read_vectors(path, RecordRange{first, count}));
        },
        py::arg("path"), py::arg("first") = 0,
        py::arg("count") = std::numeric_limits<std::size_t>::max());
  m.def("write_vectors",
        [](const std::string& path, const FloatArray& a, const std::string& kind) {
          const ElementKind k = kind == "fvecs" ? ElementKind::Float32
                                : kind == "bvecs" ? ElementKind::UInt8
                                : kind == "ivecs" ? ElementKind::Int32
                                                  : throw std::invalid_argument("unknown kind " + kind);
          write_vectors(path, to_vectors(a), k);
        },
        py::arg("path"), py::arg("vectors"), py::arg("kind") = "fvecs");

  m.def("generate_synthetic",
        [](std::size_t n_clusters, std::size_t points_per_cluster, std::size_t dim, double spread,
           double center_scale, std::uint64_t seed, std::size_t n_queries, std::size_t n_learning,
           std::size_t gt_k) {
          SyntheticSpec s{n_clusters, points_per_cluster, dim, spread, center_scale, seed,
                          n_queries,  n_learning,         gt_k};
          const auto d = generate_synthetic(s);
          py::array_t<std::int64_t> gt({static_cast<py::ssize_t>(d.gt.num_queries()), static_cast<py::ssize_t>(gt_k)});
          for (std::size_t q = 0; q < d.gt.num_queries(); ++q) {
            for (std::size_t r = 0; r < gt_k; ++r) gt.mutable_at(q, r) = static_cast<std::int64_t>(d.gt.neighbors[q][r]);
          }
          py::dict out;
          out["base"] = to_array(d.base);
          out["queries"] = to_array(d.queries);
          out["learning"] = to_array(d.learning);
          out["centers"] = to_array(d.centers);
          out["base_labels"] = d.base_labels;
          out["query_labels"] = d.query_labels;
          out["gt"] = gt;
          return out;
        },
        py::arg("n_clusters") = 64, py::arg("points_per_cluster") = 160, py::arg("dim") = 128,
        py::arg("spread") = 0.1, py::arg("center_scale") = 1.0, py::arg("seed") = 0,
        py::arg("n_queries") = 100, py::arg("n_learning") = 10000, py::arg("gt_k") = 100);
}
