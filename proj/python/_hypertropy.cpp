#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hypertropy/entropy.hpp"
#include "hypertropy/graph.hpp"
#include "hypertropy/metrics.hpp"
#include "hypertropy/partition_tree.hpp"
#include "hypertropy/pipeline.hpp"
#include "hypertropy/trainer.hpp"

namespace py = pybind11;
using namespace hypertropy;
using nlohmann::json;

namespace {

Graph graph_from_edges(std::size_t n, const std::vector<std::tuple<NodeId, NodeId, double>>& edges) {
  std::vector<Edge> es;
  es.reserve(edges.size());
  for (const auto& [u, v, w] : edges) es.push_back({u, v, w});
  return Graph::from_edges(n, es);
}

std::vector<std::tuple<NodeId, NodeId, double>> edge_tuples(const Graph& g) {
  std::vector<std::tuple<NodeId, NodeId, double>> out;
  for (const Edge& e : g.edges()) out.emplace_back(e.u, e.v, e.w);
  return out;
}

std::string run_cluster(const Graph& g, const std::string& model_json, const std::string& train_json,
                        const std::vector<std::uint64_t>& seeds, std::optional<std::size_t> k, unsigned threads) {
  const ModelConfig model = model_config_from_json(json::parse(model_json));
  const TrainConfig train = train_config_from_json(json::parse(train_json));
  std::vector<RunOutcome> runs;
  {
    py::gil_scoped_release release;
    runs = cluster(g, model, train, seeds, k, worker_threads(threads));
  }
  const Summary s = summarize(runs);
  json out = cluster_report(runs, s);
  json per_run = json::array();
  for (const RunOutcome& r : runs)
    per_run.push_back({{"seed", r.seed},
                       {"labels", r.labels},
                       {"natural", r.natural},
                       {"loss_history", r.training.loss_history},
                       {"tree", tree_to_json(r.tree)}});
  out["runs"] = per_run;
  return out.dump();
}

json brute_json(const Graph& g) {
  const BruteForceResult r = brute_force_entropy(g);
  return {{"value", r.value}, {"partition", r.partition}};
}

}  // namespace

PYBIND11_MODULE(_hypertropy, m) {
  m.doc() = "Hierarchical graph clustering by structural information in hyperbolic space";

  static py::exception<SizeCapError> size_cap(m, "SizeCapError", PyExc_ValueError);
  static py::exception<CheckpointError> checkpoint(m, "CheckpointError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const FileNotFoundError& e) {
      PyErr_SetString(PyExc_FileNotFoundError, e.what());
    } catch (const ParseError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const SizeCapError& e) {
      py::set_error(size_cap, e.what());
    } catch (const CheckpointError& e) {
      py::set_error(checkpoint, e.what());
    }
  });

  py::class_<Graph>(m, "Graph")
      .def(py::init(&graph_from_edges), py::arg("num_nodes"), py::arg("edges"),
           "Edges are (u, v, weight) tuples; duplicates are summed, self-loops dropped.")
      .def_property_readonly("num_nodes", &Graph::num_nodes)
      .def_property_readonly("num_edges", &Graph::num_edges)
      .def_property_readonly("volume", &Graph::volume)
      .def_property_readonly("degrees", &Graph::degrees)
      .def_property_readonly("labels", &Graph::labels)
      .def_property_readonly("node_names", &Graph::node_names)
      .def_property_readonly("edges", &edge_tuples)
      .def("is_connected", &Graph::is_connected)
      .def("fingerprint", &Graph::fingerprint)
      .def("set_labels", &Graph::set_labels)
      .def("set_features", &Graph::set_features);

  m.def("load_graph", &load_graph, py::arg("edges"), py::arg("features") = std::nullopt,
        py::arg("labels") = std::nullopt);
  m.def("parse_edge_list", &parse_edge_list);

  m.def("one_dim_entropy", &one_dim_entropy);
  m.def("graph_conductance", &graph_conductance, py::arg("graph"), py::arg("max_n") = 16);
  m.def("two_level_value",
        [](const Graph& g, const std::vector<int>& partition) { return two_level_value(g, partition); });
  m.def("brute_force_entropy", [](const Graph& g) { return brute_json(g).dump(); });
  m.def("normalized_entropy", [](const Graph& g, int height) {
    const NormalizedEntropy r = normalized_entropy(g, height);
    return json{{"entropy", r.entropy}, {"one_dim", r.one_dim}, {"tau", r.tau},
                {"conductance", r.conductance}, {"bound_holds", r.bound_holds}}.dump();
  }, py::arg("graph"), py::arg("height") = 2);
  m.def("cse_greedy", [](const Graph& g) {
    const GreedyResult r = cse_greedy(g);
    return json{{"value", r.value}, {"partition", r.partition}, {"trajectory", r.trajectory}}.dump();
  });

  m.def("nmi", [](const std::vector<int>& a, const std::vector<int>& b) { return nmi(a, b); });
  m.def("ari", [](const std::vector<int>& a, const std::vector<int>& b) { return ari(a, b); });
  m.def("auc_score",
        [](const std::vector<double>& pos, const std::vector<double>& neg) { return auc_score(pos, neg); });

  m.def("default_model_config", [] { return to_json(ModelConfig{}).dump(); });
  m.def("default_train_config", [] { return to_json(TrainConfig{}).dump(); });
  m.def("cluster", &run_cluster, py::arg("graph"), py::arg("model"), py::arg("train"), py::arg("seeds"),
        py::arg("k") = std::nullopt, py::arg("threads") = 0u);
}
