#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "curatree/diagnostics.hpp"
#include "curatree/embeddings.hpp"
#include "curatree/error.hpp"
#include "curatree/hierarchy.hpp"
#include "curatree/kmeans.hpp"
#include "curatree/sampler.hpp"
#include "curatree/stratifier.hpp"
#include "curatree/version.hpp"

namespace py = pybind11;
namespace ct = curatree;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

ct::EmbeddingMatrix matrix_from_numpy(const FloatArray& array, bool normalized) {
  if (array.ndim() != 2) ct::fail(ct::errc::invalid_input, "expected a 2-d array");
  ct::EmbeddingMatrix m;
  m.count = static_cast<uint64_t>(array.shape(0));
  m.dim = static_cast<uint32_t>(array.shape(1));
  m.normalized = normalized;
  m.data.assign(array.data(), array.data() + m.count * m.dim);
  return m;
}

py::array_t<float> matrix_to_numpy(const ct::EmbeddingMatrix& m) {
  py::array_t<float> out({static_cast<py::ssize_t>(m.count), static_cast<py::ssize_t>(m.dim)});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

template <typename T>
py::array_t<T> vector_to_numpy(const std::vector<T>& v) {
  const std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(v.size())};
  const std::vector<py::ssize_t> strides{static_cast<py::ssize_t>(sizeof(T))};
  return py::array_t<T>(shape, strides, v.data());
}

ct::KMeansConfig kmeans_config(uint32_t k, uint32_t max_iters, std::optional<double> tol,
                               uint64_t seed, const std::string& seeding) {
  ct::KMeansConfig config;
  config.k = k;
  config.max_iters = max_iters;
  config.tol = tol;
  config.seed = seed;
  if (seeding == "plus_plus") {
    config.seeding = ct::Seeding::plus_plus;
  } else if (seeding == "random_rows") {
    config.seeding = ct::Seeding::random_rows;
  } else {
    ct::fail(ct::errc::invalid_config, "unknown seeding '" + seeding + "'");
  }
  return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hierarchical k-means curation: trees, balanced subsets, stratified batch plans";
  m.attr("__version__") = ct::kVersion;

  py::register_exception<ct::Error>(m, "CuratreeError");

  py::class_<ct::EmbeddingMatrix>(m, "EmbeddingMatrix")
      .def_readonly("count", &ct::EmbeddingMatrix::count)
      .def_readonly("dim", &ct::EmbeddingMatrix::dim)
      .def_readonly("normalized", &ct::EmbeddingMatrix::normalized)
      .def("to_numpy", &matrix_to_numpy)
      .def_static(
          "from_numpy",
          [](const FloatArray& array, bool normalized) {
            return matrix_from_numpy(array, normalized);
          },
          py::arg("array"), py::arg("normalized") = false);

  m.def(
      "load_embeddings",
      [](const std::string& path, bool normalize) {
        py::gil_scoped_release release;
        return ct::load_embeddings(path, normalize);
      },
      py::arg("path"), py::arg("normalize") = true);
  m.def("save_embeddings", [](const std::string& path, const ct::EmbeddingMatrix& matrix) {
    py::gil_scoped_release release;
    ct::save_embeddings(path, matrix);
  });
  m.def("load_metadata", [](const std::string& path, uint64_t expected_count) {
    const auto records = ct::load_metadata(path, expected_count);
    py::list out;
    for (const auto& rec : records) {
      py::dict d;
      d["row_index"] = rec.row_index;
      d["tile_id"] = rec.tile_id;
      d["slide_id"] = rec.slide_id;
      d["source"] = rec.source;
      if (!rec.extra.empty()) d["extra"] = rec.extra;
      out.append(d);
    }
    return out;
  });

  py::class_<ct::KMeansResult>(m, "KMeansResult")
      .def_readonly("k", &ct::KMeansResult::k)
      .def_readonly("dim", &ct::KMeansResult::dim)
      .def_readonly("inertia", &ct::KMeansResult::inertia)
      .def_readonly("iterations_run", &ct::KMeansResult::iterations_run)
      .def_readonly("converged", &ct::KMeansResult::converged)
      .def_readonly("inertia_history", &ct::KMeansResult::inertia_history)
      .def_property_readonly("centroids",
                             [](const ct::KMeansResult& r) {
                               py::array_t<float> out({static_cast<py::ssize_t>(r.k),
                                                       static_cast<py::ssize_t>(r.dim)});
                               std::copy(r.centroids.begin(), r.centroids.end(),
                                         out.mutable_data());
                               return out;
                             })
      .def_property_readonly("assignment", [](const ct::KMeansResult& r) {
        return vector_to_numpy(r.assignment);
      });

  m.def(
      "kmeans_fit",
      [](const FloatArray& rows, uint32_t k, uint32_t max_iters, std::optional<double> tol,
         uint64_t seed, const std::string& seeding) {
        const auto matrix = matrix_from_numpy(rows, false);
        const auto config = kmeans_config(k, max_iters, tol, seed, seeding);
        py::gil_scoped_release release;
        return ct::kmeans_fit(matrix, config);
      },
      py::arg("rows"), py::arg("k"), py::arg("max_iters") = 50, py::arg("tol") = py::none(),
      py::arg("seed") = 0, py::arg("seeding") = "plus_plus");

  m.def("assign_to_centroids", [](const FloatArray& rows, const FloatArray& centroids) {
    const auto data = matrix_from_numpy(rows, false);
    const auto cents = matrix_from_numpy(centroids, false);
    if (data.dim != cents.dim) {
      ct::fail(ct::errc::dimension_mismatch, "rows and centroids disagree on dim");
    }
    std::vector<uint32_t> assignment;
    {
      py::gil_scoped_release release;
      assignment = ct::assign_to_centroids(data.rows(), data.count, cents.rows(),
                                           static_cast<uint32_t>(cents.count), data.dim);
    }
    return vector_to_numpy(assignment);
  });

  py::class_<ct::ClusterTree, std::shared_ptr<ct::ClusterTree>>(m, "ClusterTree")
      .def_property_readonly("depth", &ct::ClusterTree::depth)
      .def_property_readonly("count", &ct::ClusterTree::count)
      .def_property_readonly("has_centroids", &ct::ClusterTree::has_centroids)
      .def("level_sizes",
           [](const ct::ClusterTree& t, uint32_t level) {
             return vector_to_numpy(t.level(level).sizes);
           })
      .def("centroids",
           [](const ct::ClusterTree& t, uint32_t level) {
             const auto& lev = t.level(level);
             py::array_t<float> out({static_cast<py::ssize_t>(lev.cluster_count),
                                     static_cast<py::ssize_t>(lev.dim)});
             std::copy(lev.centroids.begin(), lev.centroids.end(), out.mutable_data());
             return out;
           })
      .def("parents",
           [](const ct::ClusterTree& t, uint32_t level) {
             return vector_to_numpy(t.level(level).parent);
           })
      .def_property_readonly("base_assignment",
                             [](const ct::ClusterTree& t) {
                               return vector_to_numpy(t.base_assignment());
                             })
      .def("members_of",
           [](const ct::ClusterTree& t, uint32_t level, uint64_t cluster) {
             return vector_to_numpy(t.members_of(level, cluster));
           })
      .def("ancestor_of_base", &ct::ClusterTree::ancestor_of_base)
      .def(
          "save",
          [](const ct::ClusterTree& t, const std::string& path, bool include_centroids) {
            py::gil_scoped_release release;
            ct::save_tree(t, path, include_centroids);
          },
          py::arg("path"), py::arg("include_centroids") = true);

  m.def(
      "build_tree",
      [](const FloatArray& rows, const std::vector<uint32_t>& levels, uint32_t max_iters,
         std::optional<double> tol, uint64_t seed, const std::string& seeding) {
        const auto matrix = matrix_from_numpy(rows, false);
        ct::TreeConfig config;
        config.level_counts = levels;
        config.kmeans = kmeans_config(1, max_iters, tol, seed, seeding);
        py::gil_scoped_release release;
        return std::make_shared<ct::ClusterTree>(ct::build_tree(matrix, config));
      },
      py::arg("rows"), py::arg("levels"), py::arg("max_iters") = 50, py::arg("tol") = py::none(),
      py::arg("seed") = 0, py::arg("seeding") = "plus_plus");

  m.def("load_tree", [](const std::string& path) {
    py::gil_scoped_release release;
    return std::make_shared<ct::ClusterTree>(ct::load_tree(path));
  });

  py::class_<ct::AllocationPlan>(m, "AllocationPlan")
      .def_readonly("target", &ct::AllocationPlan::target)
      .def_readonly("n", &ct::AllocationPlan::n)
      .def_readonly("achieved", &ct::AllocationPlan::achieved)
      .def_property_readonly("children_sizes",
                             [](const ct::AllocationPlan& p) {
                               return vector_to_numpy(p.children_sizes);
                             })
      .def_property_readonly("quotas", [](const ct::AllocationPlan& p) {
        return vector_to_numpy(p.quotas);
      });

  m.def("allocate", [](uint64_t target, const std::vector<uint64_t>& sizes) {
    return ct::allocate(target, sizes);
  });

  py::class_<ct::CuratedSubset>(m, "CuratedSubset")
      .def_readonly("sampling_level", &ct::CuratedSubset::sampling_level)
      .def_readonly("target", &ct::CuratedSubset::target)
      .def_readonly("achieved", &ct::CuratedSubset::achieved)
      .def_readonly("seed", &ct::CuratedSubset::seed)
      .def_property_readonly("row_indices",
                             [](const ct::CuratedSubset& s) {
                               return vector_to_numpy(s.row_indices);
                             })
      .def_property_readonly("bottom_cluster",
                             [](const ct::CuratedSubset& s) {
                               return vector_to_numpy(s.bottom_cluster);
                             })
      .def("save", [](const ct::CuratedSubset& s, const std::string& path) {
        ct::subset_save(s, path);
      });

  m.def(
      "sample_subset",
      [](std::shared_ptr<ct::ClusterTree> tree, uint32_t level, std::optional<double> fraction,
         std::optional<uint64_t> size, uint64_t seed, bool exact) {
        if (fraction.has_value() == size.has_value()) {
          ct::fail(ct::errc::invalid_input, "give exactly one of fraction or size");
        }
        const auto target = fraction ? ct::SubsetTarget::fraction(*fraction)
                                     : ct::SubsetTarget::size(*size);
        py::gil_scoped_release release;
        return ct::sample_subset(*tree, level, target, seed, exact);
      },
      py::arg("tree"), py::arg("level"), py::arg("fraction") = py::none(),
      py::arg("size") = py::none(), py::arg("seed") = 0, py::arg("exact") = false);

  m.def(
      "load_subset",
      [](const std::string& path, std::optional<uint64_t> expect_count) {
        return ct::subset_load(path, expect_count);
      },
      py::arg("path"), py::arg("expect_count") = py::none());

  py::class_<ct::ObservationLedger>(m, "ObservationLedger")
      .def_readonly("seed", &ct::ObservationLedger::seed)
      .def_readonly("batches_emitted", &ct::ObservationLedger::batches_emitted)
      .def_readonly("cluster_ids", &ct::ObservationLedger::cluster_ids)
      .def_property_readonly("counts",
                             [](const ct::ObservationLedger& l) {
                               return vector_to_numpy(l.counts);
                             })
      .def("total_emitted", &ct::ObservationLedger::total_emitted)
      .def("save", [](const ct::ObservationLedger& l, const std::string& path) {
        ct::ledger_save(l, path);
      });

  py::class_<ct::BatchPlan>(m, "BatchPlan")
      .def_readonly("batch_size", &ct::BatchPlan::batch_size)
      .def_property_readonly("mode",
                             [](const ct::BatchPlan& p) {
                               return p.mode == ct::BatchMode::stratified ? "stratified" : "random";
                             })
      .def_property_readonly("batches",
                             [](const ct::BatchPlan& p) {
                               py::list out;
                               for (const auto& b : p.batches) out.append(vector_to_numpy(b));
                               return out;
                             })
      .def_property_readonly("composition",
                             [](const ct::BatchPlan& p) {
                               py::list out;
                               for (const auto& c : p.composition) out.append(c);
                               return out;
                             })
      .def_property_readonly("deficits",
                             [](const ct::BatchPlan& p) {
                               py::list out;
                               for (const auto& d : p.deficits) {
                                 out.append(py::make_tuple(d.batch, d.cluster_id, d.requested,
                                                           d.taken));
                               }
                               return out;
                             })
      .def("save", [](const ct::BatchPlan& p, const std::string& path) {
        ct::save_batch_plan(p, path);
      });

  m.def(
      "plan_stratified",
      [](const ct::CuratedSubset& subset, std::shared_ptr<ct::ClusterTree> tree,
         uint32_t batch_size, uint64_t num_batches, uint64_t seed) {
        py::gil_scoped_release release;
        auto result = ct::plan_stratified(subset, *tree, batch_size, num_batches, seed);
        return std::make_pair(std::move(result.plan), std::move(result.ledger));
      },
      py::arg("subset"), py::arg("tree"), py::arg("batch_size"), py::arg("num_batches"),
      py::arg("seed") = 0);

  m.def(
      "plan_random",
      [](const ct::CuratedSubset& subset, std::shared_ptr<ct::ClusterTree> tree,
         uint32_t batch_size, uint64_t num_batches, uint64_t seed) {
        py::gil_scoped_release release;
        return ct::plan_random(subset, *tree, batch_size, num_batches, seed);
      },
      py::arg("subset"), py::arg("tree"), py::arg("batch_size"), py::arg("num_batches"),
      py::arg("seed") = 0);

  m.def("ledger_report", [](const ct::ObservationLedger& ledger) {
    const auto summary = ct::ledger_report(ledger);
    py::dict out;
    out["coverage"] = summary.coverage;
    out["multiplicity"] = summary.multiplicity;
    out["total_emitted"] = summary.total_emitted;
    py::list per_cluster;
    for (const auto& s : summary.per_cluster) {
      py::dict d;
      d["cluster_id"] = s.cluster_id;
      d["min"] = s.min;
      d["max"] = s.max;
      d["mean"] = s.mean;
      per_cluster.append(d);
    }
    out["per_cluster"] = per_cluster;
    return out;
  });

  m.def("tv_distance", [](const std::vector<double>& p) { return ct::tv_distance(p); });
  m.def(
      "realized_tv",
      [](std::shared_ptr<ct::ClusterTree> tree, const ct::CuratedSubset& subset, uint32_t level) {
        return ct::realized_tv(*tree, subset, level);
      },
      py::arg("tree"), py::arg("subset"), py::arg("level"));
  m.def(
      "tv_curve",
      [](std::shared_ptr<ct::ClusterTree> tree, uint32_t sampling_level, uint32_t measure_level,
         const std::vector<double>& fractions, uint64_t seed) {
        py::gil_scoped_release release;
        const auto curve = ct::tv_curve(*tree, sampling_level, measure_level, fractions, seed);
        std::vector<std::pair<double, double>> out;
        out.reserve(curve.points.size());
        for (const auto& pt : curve.points) out.emplace_back(pt.fraction, pt.tv);
        return out;
      },
      py::arg("tree"), py::arg("sampling_level"), py::arg("measure_level"), py::arg("fractions"),
      py::arg("seed") = 0);

  m.def("adjusted_rand_index",
        [](const std::vector<int64_t>& a, const std::vector<int64_t>& b) {
          return ct::adjusted_rand_index(a, b);
        });

  m.def("cluster_size_histogram",
        [](std::shared_ptr<ct::ClusterTree> tree, uint32_t level) {
          py::list out;
          for (const auto& row : ct::cluster_size_histogram(*tree, level)) {
            out.append(py::make_tuple(row.cluster_id, row.size, row.log10_size));
          }
          return out;
        });

  m.def(
      "generate_heavy_tailed",
      [](uint64_t num_points, uint32_t dim, uint32_t num_components, double tail_exponent,
         uint64_t seed) {
        py::gil_scoped_release release;
        auto data = ct::generate_heavy_tailed(num_points, dim, num_components, tail_exponent, seed);
        py::gil_scoped_acquire acquire;
        return py::make_tuple(matrix_to_numpy(data.matrix), vector_to_numpy(data.labels),
                              vector_to_numpy(data.component_sizes));
      },
      py::arg("num_points"), py::arg("dim"), py::arg("num_components"),
      py::arg("tail_exponent") = 1.2, py::arg("seed") = 0);
}
