#include <hetsync/app/config.hpp>
#include <hetsync/errors.hpp>

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace hetsync::app {
namespace {

using nlohmann::json;

Vector to_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(what + " must contain only numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Matrix to_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a non-empty nested array");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw ConfigError(what + " rows must be non-empty arrays");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw ConfigError(what + " is ragged");
    m.row(static_cast<Eigen::Index>(i)) = to_vector(j[i], what).transpose();
  }
  return m;
}

template <class T>
T get_integer(const json& j, const std::string& key, long long lo) {
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(key + " must be an integer");
  const auto x = v.get<long long>();
  if (x < lo) throw ConfigError(key + " must be at least " + std::to_string(lo));
  return static_cast<T>(x);
}

}  // namespace

WeightedGraph RunConfig::graph() const {
  try {
    if (adjacency) return WeightedGraph::from_adjacency(*adjacency);
    return WeightedGraph::from_edges(n_nodes, edges);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("graph: ") + e.what());
  }
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  static const char* const known[] = {"name", "adjacency", "edges", "n_nodes", "S_init", "B",
                                      "horizon", "seed", "c", "eta", "P", "rates", "xi_init",
                                      "rate_window"};
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok) throw ConfigError("unknown config field '" + item.key() + "'");
  }

  RunConfig c;
  try {
    if (j.contains("name")) c.name = j.at("name").get<std::string>();
    if (j.contains("adjacency")) {
      if (j.contains("edges")) throw ConfigError("give either adjacency or edges, not both");
      c.adjacency = to_matrix(j.at("adjacency"), "adjacency");
      c.n_nodes = static_cast<std::size_t>(c.adjacency->rows());
    } else if (j.contains("edges")) {
      if (!j.contains("n_nodes")) throw ConfigError("edges requires n_nodes");
      c.n_nodes = get_integer<std::size_t>(j, "n_nodes", 1);
      for (const json& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 3) throw ConfigError("each edge is [i, j, weight]");
        if (!e[0].is_number_integer() || !e[1].is_number_integer() || e[0].get<long long>() < 0 ||
            e[1].get<long long>() < 0) {
          throw ConfigError("edge endpoints must be nonnegative integers");
        }
        c.edges.push_back(Edge{e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>()});
      }
    } else {
      throw ConfigError("config needs adjacency or edges");
    }

    if (!j.contains("S_init") || !j.at("S_init").is_array()) throw ConfigError("S_init is required");
    for (std::size_t i = 0; i < j.at("S_init").size(); ++i) {
      c.s_init.push_back(to_matrix(j.at("S_init")[i], "S_init[" + std::to_string(i) + "]"));
    }
    if (!j.contains("B")) throw ConfigError("B is required");
    c.input = to_vector(j.at("B"), "B");
    if (j.contains("horizon")) c.horizon = get_integer<std::size_t>(j, "horizon", 1);
    if (j.contains("seed")) c.seed = get_integer<std::uint64_t>(j, "seed", 0);
    if (j.contains("c")) c.coupling = j.at("c").get<double>();
    if (j.contains("eta")) c.eta = j.at("eta").get<double>();
    if (j.contains("P")) c.riccati_P = to_matrix(j.at("P"), "P");
    if (j.contains("rates")) {
      const Vector r = to_vector(j.at("rates"), "rates");
      c.rates.assign(r.data(), r.data() + r.size());
    }
    if (j.contains("xi_init")) {
      std::vector<Vector> xs;
      for (std::size_t i = 0; i < j.at("xi_init").size(); ++i) {
        xs.push_back(to_vector(j.at("xi_init")[i], "xi_init[" + std::to_string(i) + "]"));
      }
      c.xi_init = std::move(xs);
    }
    if (j.contains("rate_window")) {
      const json& w = j.at("rate_window");
      if (!w.is_array() || w.size() != 2 || !w[0].is_number_integer() || !w[1].is_number_integer() ||
          w[0].get<long long>() < 0) {
        throw ConfigError("rate_window must be [start, end] with integer entries");
      }
      c.rate_window = std::pair{w[0].get<std::size_t>(), w[1].get<std::size_t>()};
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") + e.what());
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void validate(const RunConfig& c) {
  const std::size_t n = c.s_init.size();
  if (n == 0) throw ConfigError("S_init must list at least one matrix");
  if (c.n_nodes != n) {
    throw ConfigError("graph has " + std::to_string(c.n_nodes) + " nodes but S_init has " +
                      std::to_string(n) + " matrices");
  }
  const Eigen::Index p = c.input.size();
  if (p == 0) throw ConfigError("B must be non-empty");
  for (std::size_t i = 0; i < n; ++i) {
    if (c.s_init[i].rows() != p || c.s_init[i].cols() != p) {
      throw ConfigError("S_init[" + std::to_string(i) + "] must be " + std::to_string(p) + "x" +
                        std::to_string(p));
    }
    if (!c.s_init[i].allFinite()) throw ConfigError("S_init entries must be finite");
  }
  if (!c.input.allFinite()) throw ConfigError("B entries must be finite");
  if (c.horizon < 1) throw ConfigError("horizon must be at least 1");
  if (c.riccati_P && (c.riccati_P->rows() != p || c.riccati_P->cols() != p)) {
    throw ConfigError("P must be p x p");
  }
  for (double r : c.rates) {
    if (!(r > 0.0 && r < 1.0)) throw ConfigError("rates must lie in (0, 1)");
  }
  if (c.xi_init) {
    if (c.xi_init->size() != n) throw ConfigError("xi_init needs one vector per agent");
    for (const Vector& x : *c.xi_init) {
      if (x.size() != p) throw ConfigError("xi_init vectors must have length p");
    }
  }
  if (c.rate_window && !(c.rate_window->first < c.rate_window->second)) {
    throw ConfigError("rate_window needs start < end");
  }
  (void)c.graph();
}

}  // namespace hetsync::app
