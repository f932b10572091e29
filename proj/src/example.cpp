#include "vibesync/example.hpp"

#include <cmath>
#include <numbers>

#include "vibesync/errors.hpp"
#include "vibesync/example_config.hpp"

namespace vibesync {

using nlohmann::json;

ExperimentConfig packaged_example_config() {
  return parse_config(json::parse(generated::kExampleConfig));
}

namespace {

Eigen::MatrixXd matrix_of(const json& rows, const std::string& path) {
  if (!rows.is_array() || rows.empty()) throw ConfigError(path + ": expected a nonempty matrix");
  const int m = static_cast<int>(rows.size());
  const int n = static_cast<int>(rows[0].size());
  Eigen::MatrixXd M(m, n);
  for (int i = 0; i < m; ++i) {
    if (!rows[i].is_array() || static_cast<int>(rows[i].size()) != n)
      throw ConfigError(path + ": ragged matrix");
    for (int j = 0; j < n; ++j) M(i, j) = rows[i][j].get<double>();
  }
  return M;
}

const json& reference(const ExperimentConfig& cfg) {
  if (!cfg.raw.contains("reference")) throw ConfigError("$.reference: missing");
  return cfg.raw.at("reference");
}

}  // namespace

std::vector<ExampleGroup> example_groups(const ExperimentConfig& cfg) {
  std::vector<ExampleGroup> out;
  const json& groups = reference(cfg).at("groups");
  for (const auto& g : groups) {
    ExampleGroup eg;
    eg.target_row = g.at("target")[0].get<int>();
    eg.target_col = g.at("target")[1].get<int>();
    eg.frequency = g.at("frequency").get<double>();
    for (const auto& e : g.at("edges"))
      eg.edges.push_back({{e.at("from").get<int>(), e.at("to").get<int>()}, e.at("coefficient").get<double>()});
    out.push_back(eg);
  }
  return out;
}

VibrationSchedule published_schedule(const Eigen::MatrixXd& J1, const Eigen::MatrixXd& delta,
                                     const std::vector<ExampleGroup>& groups, double epsilon,
                                     double phase, std::vector<double>* gains) {
  VibrationSchedule s;
  s.epsilon = epsilon;
  for (const auto& g : groups) {
    const double d = delta(g.target_row, g.target_col);
    const double a = J1(g.target_col, g.target_row);
    const double k = std::sqrt(std::abs(d) / std::abs(a));
    if (gains) gains->push_back(k);
    for (const auto& [edge, c] : g.edges) s.entries.push_back(signed_entry(edge, k * c, g.frequency, phase));
  }
  return s;
}

ExampleReport reproduce_example(const ExperimentConfig& cfg, bool simulate_runs) {
  const json& ref = reference(cfg);
  ExampleReport rep;
  rep.alpha = ref.at("alpha").get<double>();
  rep.J1_reference = rep.alpha * matrix_of(ref.at("J1_units"), "$.reference.J1_units");
  rep.delta_reference = rep.alpha * matrix_of(ref.at("delta_units"), "$.reference.delta_units");
  const int cluster = ref.value("cluster", 0);
  const double epsilon = ref.value("epsilon", 0.01);

  const auto tree = select_spanning_tree(cfg.net, cfg.part, cfg.tree);
  const auto dec = build_incidence(cfg.net, cfg.part, tree);
  const auto js = cluster_jacobians(dec);
  rep.J = js.blocks;
  rep.robustness_J1 = robustness(rep.J1_reference);
  rep.robustness_J1_delta = robustness(rep.J1_reference + rep.delta_reference);

  // Published rule k = sqrt(|delta| / |reverse entry|), sine phase.
  const auto groups = example_groups(cfg);
  rep.schedule = published_schedule(js.blocks[cluster], rep.delta_reference, groups, epsilon,
                                    ref.value("phase", 0.0), &rep.group_gains);
  // Corrected rule u = beta sqrt(2|d|/|a|) with the zero-mean primitive.
  rep.cosine_schedule.epsilon = epsilon;
  for (std::size_t q = 0; q < groups.size(); ++q) {
    const auto& g = groups[q];
    const double d = rep.delta_reference(g.target_row, g.target_col);
    const double a = js.blocks[cluster](g.target_col, g.target_row);
    const double u = amplitude_for_shift(d, a, g.frequency);
    for (const auto& [edge, c] : g.edges)
      rep.cosine_schedule.entries.push_back(signed_entry(edge, u * c, g.frequency, std::numbers::pi / 2.0));
  }

  const auto terms = cluster_periodic_terms(dec, js.transfer, &rep.schedule);
  const auto terms_cos = cluster_periodic_terms(dec, js.transfer, &rep.cosine_schedule);
  rep.J1_bar = averaged_matrix(js.blocks[cluster], terms[cluster], cfg.design.certify.averaging).J_bar;
  rep.J1_bar_cosine =
      averaged_matrix(js.blocks[cluster], terms_cos[cluster], cfg.design.certify.averaging).J_bar;

  rep.certificate = certify(cfg.net, cfg.part, &rep.schedule, cfg.design.certify);

  if (simulate_runs) {
    const Eigen::VectorXd th0 = initial_phases(cfg);
    SimulationOptions so;
    so.t_span = cfg.sim.t_span;
    so.step = cfg.sim.step;
    const double h = so.step > 0.0 ? so.step : auto_step(so.t_span, &rep.schedule);
    so.record_stride = cfg.sim.record_stride > 0
                           ? cfg.sim.record_stride
                           : std::max(1, static_cast<int>(std::ceil(so.t_span / h / 5000.0)));
    rep.controlled = simulate(cfg.net, cfg.part, &rep.schedule, th0, so);
    SimulationOptions su = so;
    su.step = h;
    rep.uncontrolled = simulate(cfg.net, cfg.part, nullptr, th0, su);
    const double window = std::min(cfg.sim.window, so.t_span / 2.5);
    rep.verdict_uncontrolled = classify_stability(rep.uncontrolled, window);
    rep.verdict_controlled = classify_stability(rep.controlled, window);
    rep.distance_ratio = rep.controlled.dist.back() / rep.controlled.dist.front();
  }
  return rep;
}

json to_json(const ExampleReport& r) {
  json gains = r.group_gains;
  json J = json::array();
  for (const auto& b : r.J) J.push_back(to_json(b));
  json out = {{"alpha", r.alpha},
              {"cluster_jacobians", J},
              {"robustness_J1", r.robustness_J1},
              {"robustness_J1_plus_delta", r.robustness_J1_delta},
              {"robustness_ratio", r.robustness_J1_delta / r.robustness_J1},
              {"group_gains", gains},
              {"published_schedule", to_json(r.schedule)},
              {"cosine_schedule", to_json(r.cosine_schedule)},
              {"J1_bar_published", to_json(r.J1_bar)},
              {"J1_bar_cosine", to_json(r.J1_bar_cosine)},
              {"certificate_verdict", r.certificate.verdict},
              {"certificate_status", to_string(r.certificate.status)}};
  if (is_hurwitz(r.J1_bar)) out["robustness_J1_bar_published"] = robustness(r.J1_bar);
  if (is_hurwitz(r.J1_bar_cosine)) out["robustness_J1_bar_cosine"] = robustness(r.J1_bar_cosine);
  if (r.controlled.samples() > 0) {
    out["uncontrolled"] = {{"verdict", to_json(r.verdict_uncontrolled)},
                           {"initial_distance", r.uncontrolled.dist.front()},
                           {"final_distance", r.uncontrolled.dist.back()}};
    out["controlled"] = {{"verdict", to_json(r.verdict_controlled)},
                         {"initial_distance", r.controlled.dist.front()},
                         {"final_distance", r.controlled.dist.back()},
                         {"distance_ratio", r.distance_ratio}};
  }
  return out;
}

}  // namespace vibesync
