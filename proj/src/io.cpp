#include "vibesync/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "vibesync/errors.hpp"

namespace vibesync {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

const json& need(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) fail(path + "." + key, "missing");
  return obj.at(key);
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(path, "expected a finite number");
  return x;
}

long integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<long>();
}

bool boolean(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, "expected true or false");
  return v.get<bool>();
}

double opt_number(const json& obj, const std::string& key, double def, const std::string& path) {
  return obj.contains(key) ? number(obj.at(key), path + "." + key) : def;
}

Eigen::VectorXd vector_of(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array");
  Eigen::VectorXd out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<int>(i)) = number(v[i], path + "[" + std::to_string(i) + "]");
  return out;
}

Edge edge_of(const json& e, const std::string& path, int n) {
  const long s = integer(need(e, "from", path), path + ".from");
  const long t = integer(need(e, "to", path), path + ".to");
  if (s < 0 || s >= n) fail(path + ".from", "node index out of range");
  if (t < 0 || t >= n) fail(path + ".to", "node index out of range");
  if (s == t) fail(path, "self loop");
  return {static_cast<int>(s), static_cast<int>(t)};
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig cfg;
  cfg.raw = doc;
  if (!doc.is_object()) fail("$", "config must be a JSON object");
  const json& schema = need(doc, "schema", "$");
  if (!schema.is_string() || schema.get<std::string>() != kConfigSchema)
    fail("$.schema", std::string("expected \"") + kConfigSchema + "\"");

  const json& net = need(doc, "network", "$");
  const long n = integer(need(net, "n", "$.network"), "$.network.n");
  if (n < 2) fail("$.network.n", "need at least 2 nodes");
  cfg.net.omega = vector_of(need(net, "omega", "$.network"), "$.network.omega");
  if (cfg.net.omega.size() != n) fail("$.network.omega", "length must equal n");
  cfg.net.W = Eigen::MatrixXd::Zero(n, n);
  const json& edges = need(net, "edges", "$.network");
  if (!edges.is_array()) fail("$.network.edges", "expected an array");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const std::string p = "$.network.edges[" + std::to_string(k) + "]";
    const Edge e = edge_of(edges[k], p, static_cast<int>(n));
    const double w = number(need(edges[k], "weight", p), p + ".weight");
    if (w < 0.0) fail(p + ".weight", "weights must be nonnegative");
    if (cfg.net.W(e.sink, e.source) != 0.0) fail(p, "duplicate edge");
    cfg.net.W(e.sink, e.source) = w;
  }
  try {
    cfg.net.validate();
  } catch (const StructuralError& e) {
    fail("$.network", e.what());
  }

  const json& part = need(doc, "partition", "$");
  if (!part.is_array()) fail("$.partition", "expected an array of node lists");
  for (std::size_t k = 0; k < part.size(); ++k) {
    const std::string p = "$.partition[" + std::to_string(k) + "]";
    if (!part[k].is_array()) fail(p, "expected a node list");
    std::vector<int> blk;
    for (std::size_t q = 0; q < part[k].size(); ++q)
      blk.push_back(static_cast<int>(integer(part[k][q], p + "[" + std::to_string(q) + "]")));
    cfg.part.blocks.push_back(blk);
  }
  try {
    cfg.part.validate(cfg.net);
  } catch (const StructuralError& e) {
    fail("$.partition", e.what());
  }

  if (doc.contains("tree")) {
    const json& tr = doc.at("tree");
    if (tr.contains("roots")) {
      const json& roots = tr.at("roots");
      if (!roots.is_array()) fail("$.tree.roots", "expected an array");
      for (std::size_t k = 0; k < roots.size(); ++k)
        cfg.tree.roots.push_back(static_cast<int>(integer(roots[k], "$.tree.roots[" + std::to_string(k) + "]")));
    }
    if (tr.contains("intra")) {
      const json& intra = tr.at("intra");
      if (!intra.is_array()) fail("$.tree.intra", "expected an array");
      for (std::size_t k = 0; k < intra.size(); ++k) {
        std::vector<Edge> es;
        for (std::size_t q = 0; q < intra[k].size(); ++q)
          es.push_back(edge_of(intra[k][q], "$.tree.intra[" + std::to_string(k) + "][" + std::to_string(q) + "]",
                               static_cast<int>(n)));
        cfg.tree.intra.push_back(es);
      }
    }
    try {
      select_spanning_tree(cfg.net, cfg.part, cfg.tree);
    } catch (const StructuralError& e) {
      fail("$.tree", e.what());
    }
  }

  if (doc.contains("schedule") && !doc.at("schedule").is_null()) {
    const json& s = doc.at("schedule");
    VibrationSchedule sched;
    sched.epsilon = number(need(s, "epsilon", "$.schedule"), "$.schedule.epsilon");
    if (!(sched.epsilon > 0.0)) fail("$.schedule.epsilon", "must be positive");
    const json& entries = need(s, "entries", "$.schedule");
    if (!entries.is_array()) fail("$.schedule.entries", "expected an array");
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const std::string p = "$.schedule.entries[" + std::to_string(k) + "]";
      VibrationEntry e;
      e.edge = edge_of(entries[k], p, static_cast<int>(n));
      e.amplitude = number(need(entries[k], "amplitude", p), p + ".amplitude");
      e.frequency = number(need(entries[k], "frequency", p), p + ".frequency");
      e.phase = opt_number(entries[k], "phase", 0.0, p);
      if (e.amplitude < 0.0) fail(p + ".amplitude", "must be nonnegative");
      if (!(e.frequency > 0.0)) fail(p + ".frequency", "must be positive");
      if (!(e.phase >= 0.0 && e.phase < 2.0 * std::numbers::pi)) fail(p + ".phase", "must lie in [0, 2pi)");
      if (!(cfg.net.W(e.edge.sink, e.edge.source) > 0.0))
        fail(p, "vibrated edge " + std::to_string(e.edge.source) + "->" + std::to_string(e.edge.sink) +
                    " does not exist in the network");
      if (cfg.part.labels(static_cast<int>(n))[e.edge.source] != cfg.part.labels(static_cast<int>(n))[e.edge.sink])
        fail(p, "vibrations are only allowed on intra-cluster edges");
      sched.entries.push_back(e);
    }
    cfg.schedule = sched;
  }

  if (doc.contains("simulation")) {
    const json& s = doc.at("simulation");
    const std::string p = "$.simulation";
    cfg.sim.t_span = opt_number(s, "t_span", cfg.sim.t_span, p);
    if (!(cfg.sim.t_span > 0.0)) fail(p + ".t_span", "must be positive");
    cfg.sim.step = opt_number(s, "step", 0.0, p);
    if (cfg.sim.step < 0.0) fail(p + ".step", "must be nonnegative");
    if (s.contains("record_stride")) {
      const long st = integer(s.at("record_stride"), p + ".record_stride");
      if (st < 0) fail(p + ".record_stride", "must be nonnegative");
      cfg.sim.record_stride = static_cast<int>(st);
    }
    if (s.contains("theta0")) {
      cfg.sim.theta0 = vector_of(s.at("theta0"), p + ".theta0");
      if (cfg.sim.theta0->size() != n) fail(p + ".theta0", "length must equal n");
    }
    if (s.contains("seed")) {
      const long sd = integer(s.at("seed"), p + ".seed");
      if (sd < 0) fail(p + ".seed", "must be nonnegative");
      cfg.sim.seed = static_cast<unsigned long>(sd);
    }
    cfg.sim.spread = opt_number(s, "spread", cfg.sim.spread, p);
    if (!(cfg.sim.spread >= 0.0)) fail(p + ".spread", "must be nonnegative");
    cfg.sim.window = opt_number(s, "window", cfg.sim.window, p);
    if (!(cfg.sim.window > 0.0)) fail(p + ".window", "must be positive");
  }

  if (doc.contains("design")) {
    const json& d = doc.at("design");
    const std::string p = "$.design";
    cfg.design.epsilon = opt_number(d, "epsilon", cfg.design.epsilon, p);
    if (!(cfg.design.epsilon > 0.0)) fail(p + ".epsilon", "must be positive");
    if (d.contains("policy")) {
      const auto& pol = d.at("policy");
      if (pol == "chain_free") cfg.design.policy = PatternPolicy::chain_free;
      else if (pol == "dag") cfg.design.policy = PatternPolicy::dag;
      else fail(p + ".policy", "expected \"chain_free\" or \"dag\"");
    }
    cfg.design.certify.averaging.rtol = opt_number(d, "rtol", 1e-6, p);
    if (!(cfg.design.certify.averaging.rtol > 0.0)) fail(p + ".rtol", "must be positive");
    if (d.contains("horizon_cap")) {
      const long hc = integer(d.at("horizon_cap"), p + ".horizon_cap");
      if (hc < 1) fail(p + ".horizon_cap", "must be at least 1");
      cfg.design.certify.averaging.horizon_cap = static_cast<int>(hc);
    }
    cfg.design.certify.invariance_tol = opt_number(d, "invariance_tol", 1e-9, p);
  }
  cfg.design.certify.tree = cfg.tree;
  cfg.design.t_span = cfg.sim.t_span;
  cfg.design.spread = cfg.sim.spread;
  cfg.design.seed = cfg.sim.seed;
  cfg.design.window = cfg.sim.window;

  if (doc.contains("require")) {
    const json& r = doc.at("require");
    if (r.contains("certified")) cfg.require.certified = boolean(r.at("certified"), "$.require.certified");
    if (r.contains("decaying")) cfg.require.decaying = boolean(r.at("decaying"), "$.require.decaying");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(doc);
}

Eigen::VectorXd initial_phases(const ExperimentConfig& cfg) {
  if (cfg.sim.theta0) return *cfg.sim.theta0;
  return theta_near_manifold(cfg.part, cfg.net.size(), cfg.sim.spread, cfg.sim.seed);
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t";
  const int n = static_cast<int>(traj.theta.cols());
  for (int i = 1; i <= n; ++i) out += ",theta_" + std::to_string(i);
  out += ",dist\n";
  for (int k = 0; k < traj.samples(); ++k) {
    out += format_number(traj.t[k]);
    for (int i = 0; i < n; ++i) out += "," + format_number(traj.theta(k, i));
    out += "," + format_number(traj.dist[k]) + "\n";
  }
  return out;
}

void export_trajectory(const Trajectory& traj, const std::string& path) {
  if (traj.samples() == 0) throw IoError("refusing to export an empty trajectory");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << trajectory_csv(traj);
  if (!out) throw IoError(path + ": write failed");
}

ParsedTrajectory parse_trajectory_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty trajectory file");
  const long cols = std::count(line.begin(), line.end(), ',') + 1;
  const int n = static_cast<int>(cols - 2);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<long>(row.size()) != cols) throw IoError("ragged trajectory row");
    rows.push_back(row);
  }
  ParsedTrajectory p;
  p.theta.resize(static_cast<int>(rows.size()), n);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    p.t.push_back(rows[k][0]);
    for (int i = 0; i < n; ++i) p.theta(static_cast<int>(k), i) = rows[k][i + 1];
    p.dist.push_back(rows[k].back());
  }
  return p;
}

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

namespace {

json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

json to_json(const StabilityVerdict& v) {
  return {{"kind", to_string(v.kind)},
          {"rate", finite_or_string(v.rate)},
          {"slope", finite_or_string(v.slope)},
          {"r_squared", v.r_squared}};
}

json to_json(const VibrationSchedule& s) {
  json entries = json::array();
  for (const auto& e : s.entries)
    entries.push_back({{"from", e.edge.source},
                       {"to", e.edge.sink},
                       {"amplitude", e.amplitude},
                       {"frequency", e.frequency},
                       {"phase", e.phase}});
  return {{"epsilon", s.epsilon}, {"entries", entries}};
}

json to_json(const StabilityCertificate& c) {
  json clusters = json::array();
  for (std::size_t k = 0; k < c.J.size(); ++k) {
    const auto& av = c.averaging[k];
    clusters.push_back({{"J", to_json(c.J[k])},
                        {"J_bar", to_json(c.J_bar[k])},
                        {"hurwitz", static_cast<bool>(c.hurwitz[k])},
                        {"spectral_abscissa", finite_or_string(c.abscissa[k])},
                        {"X", to_json(c.X[k])},
                        {"robustness", c.robustness[k]},
                        {"averaging",
                         {{"converged", av.converged},
                          {"exact_period", av.exact_period},
                          {"horizon", av.horizon},
                          {"residual", finite_or_string(av.residual)},
                          {"max_phi", av.max_phi},
                          {"max_psi", av.max_psi},
                          {"max_product", av.max_product}}}});
  }
  return {{"status", to_string(c.status)},
          {"verdict", c.verdict},
          {"clusters", clusters},
          {"gamma", to_json(c.gamma)},
          {"S", to_json(c.S)},
          {"m_matrix", {{"is_m_matrix", c.m_matrix.is_m_matrix}, {"minors", c.m_matrix.minors}}},
          {"causes", c.causes}};
}

json to_json(const DesignResult& d) {
  json clusters = json::array();
  for (const auto& cd : d.clusters) {
    json patterns = json::array();
    for (const auto& p : cd.patterns) {
      json targets = json::array();
      for (const auto& t : p.targets) {
        json recipe = json::array();
        for (auto [e, c] : t.recipe) recipe.push_back({{"basis_index", e}, {"coefficient", c}});
        targets.push_back({{"row", t.row}, {"col", t.col}, {"sign", t.sign}, {"recipe", recipe}});
      }
      patterns.push_back({{"chain_free", p.chain_free}, {"targets", targets}});
    }
    json inc = json::array(), dec = json::array();
    for (const auto& e : cd.mod.increasable) inc.push_back({e.source, e.sink});
    for (const auto& e : cd.mod.decreasable) dec.push_back({e.source, e.sink});
    clusters.push_back({{"cluster", cd.cluster},
                        {"J", to_json(cd.J)},
                        {"modifiable", {{"increasable", inc}, {"decreasable", dec}}},
                        {"patterns", patterns},
                        {"chosen_pattern", cd.chosen},
                        {"delta", to_json(cd.delta.delta)},
                        {"robustness_before", cd.delta.robustness_before},
                        {"robustness_after", cd.delta.robustness_after},
                        {"improved", cd.delta.improved}});
  }
  json out = {{"schedule", to_json(d.schedule)},
              {"clusters", clusters},
              {"certificate", to_json(d.certificate)}};
  if (d.simulated)
    out["simulation"] = {{"verdict", to_json(d.verdict)},
                         {"initial_distance", d.initial_distance},
                         {"final_distance", d.final_distance}};
  return out;
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError(path + ": write failed");
}

}  // namespace vibesync
